#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "gg/ricci.hpp"

namespace gg {

/// State of the generalized Ricci flow in a fixed splitting: the flow evolves
/// (g, b[, a]) rather than the abstract reflection G, so no splitting drift
/// can accumulate.
struct FlowState {
  Mat g;       // symmetric positive-definite
  Mat b;       // skew
  Mat a;       // dk x n fiber shift (empty in the exact case)
  double t = 0.0;

  GeneralizedMetric metric(const CourantAlgebroid& E) const {
    return GeneralizedMetric(E, g, b, a);
  }
};

/// Divergence schedule: eps as a function of time. Constant by default.
using EpsSchedule = std::function<Section(double)>;

inline EpsSchedule constant_eps(const Section& eps) {
  return [eps](double) { return eps; };
}

struct FlowRhs {
  Mat dg, db, da;
};

/// Right-hand side of the flow: d(g + b) = -2 Ric+ read off the base
/// presentation of the closed-form Ricci tensor, so
///   dg = -(T + T^t),  db = -(T - T^t)  with T = Ric+(Y^-, Z^+);
/// equivalently db is the 2-form -d*H' - 1/2 i_{g^{-1}phi}H' + 1/2 dphi.
/// The fiber shift evolves by da = -d*F + 1/2 *(F ^ *H') - 1/4 F(g^{-1}phi,.)
/// per fiber index.
inline FlowRhs flow_rhs(const CourantAlgebroid& E, const FlowState& s,
                        const Section& eps) {
  int n = E.n(), dk = E.fiber_dim();
  GeneralizedMetric V = s.metric(E);
  RicciTensors ric = ricci_closed_form(E, V, eps);
  FlowRhs rhs;
  rhs.dg = -(ric.base_plus + Mat(ric.base_plus.transpose()));
  rhs.db = -(ric.base_plus - Mat(ric.base_plus.transpose()));
  rhs.da = Mat::Zero(dk, n);
  if (dk > 0) {
    FrameMetric g(s.g);
    KForm Heff = E.H() + ce_d(E.base(), V.b_form(n));
    KForm starH = hodge_star(g, Heff);
    Vec gphi = g.inv() * split_epsilon(E, V, eps).phi;
    for (int a = 0; a < dk; ++a) {
      KForm row = -1.0 * hodge_codiff(E.base(), g, E.F()[a]);
      row += 0.5 * hodge_star(g, E.F()[a].wedge(starH));
      row -= 0.25 * E.F()[a].contract(gphi);
      rhs.da.row(a) = row.coeffs().transpose();
    }
  }
  return rhs;
}

/// sup-norm of Ric+ of the state (stationary points of the flow).
inline double stationarity_residual(const CourantAlgebroid& E,
                                    const FlowState& s, const Section& eps) {
  RicciTensors ric = ricci_closed_form(E, s.metric(E), eps);
  return std::max(ric.plus.lpNorm<Eigen::Infinity>(),
                  ric.base_plus.lpNorm<Eigen::Infinity>());
}

enum class Scheme { Euler, RK4 };

struct FlowOptions {
  Scheme scheme = Scheme::RK4;
  double blowup_cap = 1e8;   // abort when any entry exceeds this
  int sample_stride = 1;     // keep every k-th step in the trajectory
};

struct FlowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fixed-step integration of the flow; the trajectory includes the initial
/// state and every sampled step boundary (the final time always included).
inline std::vector<FlowState> integrate_flow(const CourantAlgebroid& E,
                                             FlowState s0, double t_end,
                                             double dt,
                                             const EpsSchedule& eps,
                                             FlowOptions opt = {}) {
  if (dt <= 0.0) throw DimensionError("integrate_flow: dt must be positive");
  auto check = [&](const FlowState& s) {
    if (s.g.lpNorm<Eigen::Infinity>() > opt.blowup_cap ||
        s.b.lpNorm<Eigen::Infinity>() > opt.blowup_cap)
      throw FlowError("integrate_flow: blow-up at t = " + std::to_string(s.t));
    Eigen::LLT<Mat> llt(s.g);
    if (llt.info() != Eigen::Success)
      throw FlowError("integrate_flow: metric lost positivity at t = " +
                      std::to_string(s.t));
  };
  auto advance = [&](const FlowState& s, double h) {
    auto add = [&](const FlowState& base, const FlowRhs& r, double w) {
      FlowState out = base;
      out.g += w * r.dg;
      out.b += w * r.db;
      if (out.a.size() > 0) out.a += w * r.da;
      return out;
    };
    if (opt.scheme == Scheme::Euler) {
      FlowState out = add(s, flow_rhs(E, s, eps(s.t)), h);
      out.t = s.t + h;
      return out;
    }
    FlowRhs k1 = flow_rhs(E, s, eps(s.t));
    FlowState s2 = add(s, k1, h / 2);
    FlowRhs k2 = flow_rhs(E, s2, eps(s.t + h / 2));
    FlowState s3 = add(s, k2, h / 2);
    FlowRhs k3 = flow_rhs(E, s3, eps(s.t + h / 2));
    FlowState s4 = add(s, k3, h);
    FlowRhs k4 = flow_rhs(E, s4, eps(s.t + h));
    FlowState out = s;
    out.g += (h / 6) * (k1.dg + 2 * k2.dg + 2 * k3.dg + k4.dg);
    out.b += (h / 6) * (k1.db + 2 * k2.db + 2 * k3.db + k4.db);
    if (out.a.size() > 0)
      out.a += (h / 6) * (k1.da + 2 * k2.da + 2 * k3.da + k4.da);
    out.t = s.t + h;
    return out;
  };

  if (s0.b.size() == 0) s0.b = Mat::Zero(E.n(), E.n());
  if (s0.a.size() == 0 && E.fiber_dim() > 0)
    s0.a = Mat::Zero(E.fiber_dim(), E.n());
  check(s0);
  std::vector<FlowState> traj{s0};
  FlowState s = s0;
  long nsteps = static_cast<long>(std::ceil(t_end / dt - 1e-12));
  for (long i = 0; i < nsteps; ++i) {
    double h = std::min(dt, t_end - s.t);
    s = advance(s, h);
    check(s);
    if ((i + 1) % opt.sample_stride == 0 || i + 1 == nsteps) traj.push_back(s);
  }
  return traj;
}

}  // namespace gg
