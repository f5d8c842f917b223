#pragma once

#include <array>
#include <cmath>
#include <future>
#include <utility>
#include <vector>

#include "gg/flow.hpp"
#include "gg/spinor.hpp"

namespace gg {

/// Invariant circle-bundle presentation of an exact algebroid: a central
/// fiber direction z in the algebra, invariant (g, b), closed H.  The fiber
/// coframe theta = e^z + A is the g-orthogonal complement of the base block,
/// so g = h theta (x) theta + gbar.
struct TorusBundleData {
  LieAlgebra algebra;
  int fiber = 0;
  KForm H;
  Mat g, b;

  double h() const { return g(fiber, fiber); }

  /// base components of the connection coframe: theta = e^z + sum A_i e^i.
  Vec connection() const {
    Vec A = g.col(fiber) / g(fiber, fiber);
    A[fiber] = 0.0;
    return A;
  }

  Mat gbar() const {
    Vec A = connection();
    A[fiber] = 1.0;
    Mat out = g - h() * (A * A.transpose());
    return out;
  }

  /// residual of the invariants: fiber centrality, Killing symmetry (built-in
  /// for invariant tensors) and exactness of the metric split.
  double residual() const {
    int n = algebra.dim();
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      worst = std::max(
          worst, algebra.bracket(Vec::Unit(n, i), Vec::Unit(n, fiber))
                     .lpNorm<Eigen::Infinity>());
    Vec A = connection();
    A[fiber] = 1.0;
    worst = std::max(worst, (g - h() * Mat(A * A.transpose()) - gbar())
                                .lpNorm<Eigen::Infinity>());
    return worst;
  }
};

/// Simple reduction by the fiber torus: on invariant data this is the frame
/// of invariant sections with its induced pairing and bracket coefficients.
struct ReducedAlgebroid {
  int rank = 0;
  Mat pairing;
  std::vector<Mat> bracket;  // bracket[a](b,c) = <[e_a, e_b], e_c>

  /// Dorfman axioms over the invariant frame: symmetric part and the
  /// Jacobi/Leibniz identity (anchored terms vanish on invariant sections).
  double axioms_residual() const {
    double worst = 0.0;
    Mat Pi = pairing.inverse();
    std::vector<Mat> st(rank);  // structure coefficients
    for (int a = 0; a < rank; ++a) st[a] = bracket[a] * Pi;
    // <[a,b],c> + <b,[a,c]> = 0 (invariant ad-compatibility)
    for (int a = 0; a < rank; ++a)
      worst = std::max(
          worst, (bracket[a] + bracket[a].transpose()).lpNorm<Eigen::Infinity>());
    for (int a = 0; a < rank; ++a)
      for (int b = 0; b < rank; ++b) {
        Vec ab = st[a].row(b).transpose();
        for (int c = 0; c < rank; ++c) {
          Vec bc = st[b].row(c).transpose();
          Vec ac = st[a].row(c).transpose();
          Vec lhs = st[a].transpose() * bc;
          Vec rhs = Vec::Zero(rank);
          for (int k = 0; k < rank; ++k) {
            if (ab[k] != 0.0) rhs += ab[k] * Vec(st[k].row(c).transpose());
            if (ac[k] != 0.0) rhs += ac[k] * Vec(st[b].row(k).transpose());
          }
          worst = std::max(worst, (lhs - rhs).lpNorm<Eigen::Infinity>());
        }
      }
    return worst;
  }
};

inline ReducedAlgebroid reduce_invariant(const CourantAlgebroid& E,
                                         const TorusBundleData& data) {
  if (data.residual() > 1e-12)
    throw DimensionError("reduce_invariant: fiber direction must be central");
  ReducedAlgebroid out;
  out.rank = E.rank();
  out.pairing = E.pairing_matrix();
  out.bracket = bracket_tensor(E);
  return out;
}

/// Rank-1 Buscher dualization: h -> 1/h on the metric block, the fiber rows
/// of g and b exchanged, curvature and fiber H-flux swapped on the topology
/// side.  The component rules are pinned by requiring the induced swap map
/// psi to be an isomorphism of pairings and Dorfman brackets.
inline TorusBundleData dualize_buscher(const TorusBundleData& data) {
  int n = data.algebra.dim(), z = data.fiber;
  double h = data.g(z, z);
  if (h <= 0.0) throw DimensionError("dualize_buscher: degenerate fiber metric");

  TorusBundleData out;
  out.fiber = z;

  // metric and b-field: Buscher rules on the combined tensor E = g + b
  Mat Em = data.g + data.b;
  Mat Eh = Em;
  double Ezz = Em(z, z);
  Eh(z, z) = 1.0 / Ezz;
  for (int i = 0; i < n; ++i) {
    if (i == z) continue;
    Eh(i, z) = Em(i, z) / Ezz;
    Eh(z, i) = -Em(z, i) / Ezz;
    for (int j = 0; j < n; ++j)
      if (j != z) Eh(i, j) = Em(i, j) - Em(i, z) * Em(z, j) / Ezz;
  }
  out.g = 0.5 * (Eh + Eh.transpose());
  out.b = 0.5 * (Eh - Eh.transpose());

  // topology: curvature F = -d e^z and fiber flux q = i_z H trade places
  LieAlgebra dual(n, data.algebra.name() + "^");
  KForm q(n, 2), Fcur(n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (i == z || j == z) continue;
      q.set({i, j}, data.H.get({z, i, j}));
      Vec br = data.algebra.bracket(Vec::Unit(n, i), Vec::Unit(n, j));
      Fcur.set({i, j}, br[z]);
      for (int k = 0; k < n; ++k)
        if (k != z && br[k] != 0.0) dual.add_bracket(i, j, k, br[k]);
      if (q.get({i, j}) != 0.0) dual.add_bracket(i, j, z, q.get({i, j}));
    }
  out.algebra = dual;

  // H^ = basic part of H plus e^z ^ F
  KForm ez(n, 1);
  ez.set({z}, 1.0);
  out.H = data.H - ez.wedge(q) + ez.wedge(Fcur);
  return out;
}

/// Section transport of the duality swap: e_z <-> e^z, identity elsewhere.
inline Mat duality_swap(int n, int z) {
  Mat psi = Mat::Identity(2 * n, 2 * n);
  psi(z, z) = 0.0;
  psi(n + z, n + z) = 0.0;
  psi(z, n + z) = 1.0;
  psi(n + z, z) = 1.0;
  return psi;
}

/// max over frame pairs of |psi [a,b] - [psi a, psi b]^| plus the pairing
/// defect: zero iff psi is an isomorphism of the simple reductions.
inline double duality_morphism_residual(const TorusBundleData& data) {
  CourantAlgebroid E(data.algebra, data.H);
  TorusBundleData hat = dualize_buscher(data);
  CourantAlgebroid Eh(hat.algebra, hat.H);
  int R = E.rank();
  Mat psi = duality_swap(E.n(), data.fiber);
  double worst =
      (psi.transpose() * Eh.pairing_matrix() * psi - E.pairing_matrix())
          .lpNorm<Eigen::Infinity>();
  for (int a = 0; a < R; ++a)
    for (int b = 0; b < R; ++b) {
      Vec lhs = psi * E.dorfman(Section(Vec::Unit(R, a)),
                                Section(Vec::Unit(R, b))).v;
      Vec rhs = Eh.dorfman(Section(Vec(psi.col(a))), Section(Vec(psi.col(b)))).v;
      worst = std::max(worst, (lhs - rhs).lpNorm<Eigen::Infinity>());
    }
  return worst;
}

/// Dual pair: Buscher data plus the transported divergence.  For invariant
/// (constant-h) data the density shift 2 d log(nu^/nu) vanishes, so the
/// transported eps is just psi(eps).
struct DualPair {
  TorusBundleData dual;
  Mat psi;
  Section eps_dual;
};

inline DualPair dual_pair(const TorusBundleData& data, const Section& eps) {
  DualPair out;
  out.dual = dualize_buscher(data);
  out.psi = duality_swap(data.algebra.dim(), data.fiber);
  out.eps_dual = Section(Vec(out.psi * eps.v));
  return out;
}

/// Ricci+ as a bilinear form on the full invariant frame, Q(u, w) =
/// Ric+(Pi_- u, Pi_+ w): the presentation that transports through psi.
inline Mat ricci_plus_form(const CourantAlgebroid& E, const GeneralizedMetric& V,
                           const Section& eps) {
  RicciTensors ric = ricci_closed_form(E, V, eps);
  const Mat& P = E.pairing_matrix();
  Mat coordM = V.gram_minus().inverse() * V.frame_minus().transpose() * P;
  Mat coordP = V.gram_plus().inverse() * V.frame_plus().transpose() * P;
  return coordM.transpose() * ric.plus * coordP;
}

struct DualityReport {
  double ricci_exchange_residual = 0.0;
  double flow_correspondence_residual = 0.0;
  double killing_residual_transport = 0.0;
};

/// (a) Ric+ pushed through psi; (b) stepwise flow correspondence, dualizing
/// every sample of the original trajectory; (c) transport of the Killing
/// operator gap.  The two flow integrations run concurrently.
inline DualityReport verify_duality(const TorusBundleData& data,
                                    const Section& eps, double t_end = 0.5,
                                    double dt = 1e-3) {
  CourantAlgebroid E(data.algebra, data.H);
  DualPair pair = dual_pair(data, eps);
  const TorusBundleData& hat = pair.dual;
  CourantAlgebroid Eh(hat.algebra, hat.H);

  DualityReport rep;
  GeneralizedMetric V(E, data.g, data.b);
  GeneralizedMetric Vh(Eh, hat.g, hat.b);
  Mat Q = ricci_plus_form(E, V, eps);
  Mat Qh = ricci_plus_form(Eh, Vh, pair.eps_dual);
  rep.ricci_exchange_residual =
      (Q - Mat(pair.psi.transpose() * Qh * pair.psi)).lpNorm<Eigen::Infinity>();

  auto run = [&](const CourantAlgebroid& Ei, const Mat& g0, const Mat& b0,
                 const Section& e) {
    return integrate_flow(Ei, {g0, b0, Mat(), 0.0}, t_end, dt, constant_eps(e));
  };
  auto fut = std::async(std::launch::async, run, std::cref(Eh), std::cref(hat.g),
                        std::cref(hat.b), std::cref(pair.eps_dual));
  auto traj = run(E, data.g, data.b, eps);
  auto traj_hat = fut.get();
  for (size_t s = 0; s < std::min(traj.size(), traj_hat.size()); ++s) {
    TorusBundleData step{data.algebra, data.fiber, data.H, traj[s].g, traj[s].b};
    TorusBundleData sd = dualize_buscher(step);
    rep.flow_correspondence_residual = std::max(
        rep.flow_correspondence_residual,
        std::max((sd.g - traj_hat[s].g).lpNorm<Eigen::Infinity>(),
                 (sd.b - traj_hat[s].b).lpNorm<Eigen::Infinity>()));
  }

  auto gap = [](const CourantAlgebroid& Ei, const TorusBundleData& d,
                const Section& e) {
    GeneralizedMetric Vi(Ei, d.g, d.b);
    KForm Heff = Ei.H() + ce_d(Ei.base(), Vi.b_form(Ei.n()));
    Vec phi = split_epsilon(Ei, Vi, e).phi;
    return killing_operator_gap(Ei.base(), d.g, Heff, phi);
  };
  rep.killing_residual_transport =
      std::abs(gap(E, data, eps) - gap(Eh, hat, pair.eps_dual));
  return rep;
}

// ---------------------------------------------------------------------------
// Cohomogeneity-one grid model: periodic x, fields of a circle bundle over
// the 2-torus of (y, fiber) translations.  Metric ansatz
//   g = gx dx^2 + gbar dy^2 + h (dz + A dy)^2,   b = B dy ^ dz,
//   H = (flux0 + B') dx ^ dy ^ dz.
// ---------------------------------------------------------------------------

struct FiberedGridModel {
  int N = 0;
  double length = 2.0 * M_PI;
  Vec gx, gbar, h, A, B, phi;
  double flux0 = 0.0;
  int order = 4;  // centered stencil order (4 supported)

  double dx() const { return length / N; }

  void validate() const {
    if (N < 16) throw DimensionError("FiberedGridModel: N must be >= 16");
    if (order != 4)
      throw DimensionError("FiberedGridModel: only the 4th-order stencil");
    for (const Vec* f : {&gx, &gbar, &h, &A, &B, &phi})
      if (f->size() != N)
        throw DimensionError("FiberedGridModel: field size mismatch");
    if (gx.minCoeff() <= 0 || gbar.minCoeff() <= 0 || h.minCoeff() <= 0)
      throw FlowError("FiberedGridModel: positivity loss");
  }

  static FiberedGridModel flat(int N) {
    FiberedGridModel m;
    m.N = N;
    m.gx = m.gbar = m.h = Vec::Ones(N);
    m.A = m.B = m.phi = Vec::Zero(N);
    return m;
  }
};

/// 4th-order centered periodic first derivative.
inline Vec grid_deriv(const Vec& f, double dx) {
  int N = static_cast<int>(f.size());
  Vec out(N);
  for (int i = 0; i < N; ++i) {
    double m2 = f[(i - 2 + N) % N], m1 = f[(i - 1 + N) % N];
    double p1 = f[(i + 1) % N], p2 = f[(i + 2) % N];
    out[i] = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * dx);
  }
  return out;
}

namespace detail {

inline double eps3(int a, int b, int c) {
  if (a == b || b == c || a == c) return 0.0;
  return ((b - a) * (c - a) * (c - b) > 0) ? 1.0 : -1.0;
}

/// Per-point 3x3 metric of the ansatz.
inline Mat grid_metric(const FiberedGridModel& m, int i) {
  Mat g = Mat::Zero(3, 3);
  g(0, 0) = m.gx[i];
  g(1, 1) = m.gbar[i] + m.h[i] * m.A[i] * m.A[i];
  g(1, 2) = g(2, 1) = m.h[i] * m.A[i];
  g(2, 2) = m.h[i];
  return g;
}

}  // namespace detail

/// Coordinate Ricci tensor of the grid metric: Christoffels from 1-D finite
/// differences, then their x-derivatives with the same stencil.
inline std::vector<Mat> grid_ricci_g(const FiberedGridModel& m) {
  m.validate();
  int N = m.N;
  double dx = m.dx();
  std::vector<Mat> g(N), dg(N);
  for (int i = 0; i < N; ++i) g[i] = detail::grid_metric(m, i);
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) {
      Vec comp(N);
      for (int i = 0; i < N; ++i) comp[i] = g[i](p, q);
      Vec d = grid_deriv(comp, dx);
      for (int i = 0; i < N; ++i) {
        if (p == 0 && q == 0) dg[i] = Mat::Zero(3, 3);
        dg[i](p, q) = d[i];
      }
    }
  // Gam[i][k](p,q) = Gamma^k_pq; only x-derivatives survive
  std::vector<std::array<Mat, 3>> Gam(N);
  for (int i = 0; i < N; ++i) {
    Mat ginv = g[i].inverse();
    for (int k = 0; k < 3; ++k) {
      Gam[i][k] = Mat::Zero(3, 3);
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) {
          double s = 0.0;
          for (int l = 0; l < 3; ++l) {
            double dpl = (p == 0) ? dg[i](q, l) : 0.0;
            double dql = (q == 0) ? dg[i](p, l) : 0.0;
            double dl = (l == 0) ? dg[i](p, q) : 0.0;
            s += ginv(k, l) * (dpl + dql - dl);
          }
          Gam[i][k](p, q) = 0.5 * s;
        }
    }
  }
  // x-derivatives of the Christoffels
  std::vector<std::array<Mat, 3>> dGam(N);
  for (int k = 0; k < 3; ++k)
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) {
        Vec comp(N);
        for (int i = 0; i < N; ++i) comp[i] = Gam[i][k](p, q);
        Vec d = grid_deriv(comp, dx);
        for (int i = 0; i < N; ++i) {
          if (p == 0 && q == 0) dGam[i][k] = Mat::Zero(3, 3);
          dGam[i][k](p, q) = d[i];
        }
      }
  std::vector<Mat> ric(N);
  for (int i = 0; i < N; ++i) {
    ric[i] = Mat::Zero(3, 3);
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) {
        double r = dGam[i][0](p, q);  // d_k Gamma^k_pq, only k = x
        if (p == 0)
          for (int k = 0; k < 3; ++k) r -= dGam[i][k](k, q);
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
            r += Gam[i][k](k, l) * Gam[i][l](p, q) -
                 Gam[i][k](p, l) * Gam[i][l](k, q);
        ric[i](p, q) = r;
      }
  }
  return ric;
}

struct GridRhs {
  Vec gx, gbar, h, A, B;
};

/// Method-of-lines right-hand side: dg = -2 Ric_g + 1/2 H o H in coordinates,
/// dB from -d*H; the dilaton field is carried along unevolved.
inline GridRhs grid_flow_rhs(const FiberedGridModel& m) {
  int N = m.N;
  double dx = m.dx();
  auto ric = grid_ricci_g(m);
  Vec f = grid_deriv(m.B, dx);
  f.array() += m.flux0;  // H_xyz per point
  GridRhs rhs{Vec(N), Vec(N), Vec(N), Vec(N), Vec(N)};
  Vec ustar(N);  // *H = H_xyz / sqrt(det g)
  std::vector<Mat> g(N);
  for (int i = 0; i < N; ++i) {
    g[i] = detail::grid_metric(m, i);
    ustar[i] = f[i] / std::sqrt(g[i].determinant());
  }
  Vec dustar = grid_deriv(ustar, dx);
  for (int i = 0; i < N; ++i) {
    Mat ginv = g[i].inverse();
    // (H o H)_pq = g^{ab} g^{cd} H_pac H_qbd; single component H_xyz
    Mat HoH = Mat::Zero(3, 3);
    double f2 = f[i] * f[i];
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) {
        double s = 0.0;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c)
              for (int d = 0; d < 3; ++d) {
                double h1 = detail::eps3(p, a, c), h2 = detail::eps3(q, b, d);
                if (h1 != 0.0 && h2 != 0.0)
                  s += ginv(a, b) * ginv(c, d) * h1 * h2 * f2;
              }
        HoH(p, q) = s;
      }
    Mat dgm = -2.0 * ric[i] + 0.5 * HoH;
    rhs.gx[i] = dgm(0, 0);
    rhs.h[i] = dgm(2, 2);
    rhs.A[i] = (dgm(1, 2) - m.A[i] * rhs.h[i]) / m.h[i];
    rhs.gbar[i] = dgm(1, 1) - rhs.h[i] * m.A[i] * m.A[i] -
                  2.0 * m.h[i] * m.A[i] * rhs.A[i];
    // db = -d*H: (d*H)_yz = -(u*)' sqrt(det g)/gx
    rhs.B[i] = dustar[i] * std::sqrt(g[i].determinant()) / m.gx[i];
  }
  return rhs;
}

/// Fixed-step flow on the grid; CFL-type cap dt <= 1/4 dx^2 min(gx).
inline std::vector<FiberedGridModel> grid_ricci_flow(const FiberedGridModel& m0,
                                                     double t_end, double dt,
                                                     Scheme scheme = Scheme::RK4,
                                                     int stride = 1) {
  m0.validate();
  double cap = 0.25 * m0.dx() * m0.dx() * m0.gx.minCoeff();
  if (dt <= 0.0 || dt > cap)
    throw FlowError("grid_ricci_flow: dt violates the CFL cap");
  auto add = [](const FiberedGridModel& m, const GridRhs& r, double w) {
    FiberedGridModel out = m;
    out.gx += w * r.gx;
    out.gbar += w * r.gbar;
    out.h += w * r.h;
    out.A += w * r.A;
    out.B += w * r.B;
    return out;
  };
  std::vector<FiberedGridModel> traj{m0};
  FiberedGridModel s = m0;
  double t = 0.0;
  long nsteps = static_cast<long>(std::ceil(t_end / dt - 1e-12));
  for (long i = 0; i < nsteps; ++i) {
    double hstep = std::min(dt, t_end - t);
    if (scheme == Scheme::Euler) {
      s = add(s, grid_flow_rhs(s), hstep);
    } else {
      GridRhs k1 = grid_flow_rhs(s);
      GridRhs k2 = grid_flow_rhs(add(s, k1, hstep / 2));
      GridRhs k3 = grid_flow_rhs(add(s, k2, hstep / 2));
      GridRhs k4 = grid_flow_rhs(add(s, k3, hstep));
      FiberedGridModel out = s;
      auto mix = [&](Vec FiberedGridModel::*f, Vec GridRhs::*r) {
        out.*f += (hstep / 6) * (k1.*r + 2 * k2.*r + 2 * k3.*r + k4.*r);
      };
      mix(&FiberedGridModel::gx, &GridRhs::gx);
      mix(&FiberedGridModel::gbar, &GridRhs::gbar);
      mix(&FiberedGridModel::h, &GridRhs::h);
      mix(&FiberedGridModel::A, &GridRhs::A);
      mix(&FiberedGridModel::B, &GridRhs::B);
      s = out;
    }
    t += hstep;
    s.validate();
    if ((i + 1) % stride == 0 || i + 1 == nsteps) traj.push_back(s);
  }
  return traj;
}

/// Pointwise Buscher dual of the grid model with the dilaton shift
/// phi^ = phi - 1/2 log|det h|; nu^ nu = 1 pointwise.
inline FiberedGridModel dualize_grid(const FiberedGridModel& m) {
  m.validate();
  FiberedGridModel out = m;
  for (int i = 0; i < m.N; ++i) {
    double h = m.h[i];
    // g_zy = h A, b_zy = -B: the rank-1 rules give A^ = -B, B^ = -A and
    // gbar^ = gbar exactly (the B^2/h corrections cancel in the split)
    out.h[i] = 1.0 / h;
    out.A[i] = -m.B[i];
    out.B[i] = -m.A[i];
    out.phi[i] = m.phi[i] - 0.5 * std::log(h);
  }
  return out;
}

/// The 1-form shift 2 d log(nu^/nu) of the transported divergence, computed
/// with the grid stencil (x-component per grid point).
inline Vec grid_divergence_shift(const FiberedGridModel& m) {
  FiberedGridModel hat = dualize_grid(m);
  Vec logratio(m.N);
  for (int i = 0; i < m.N; ++i) logratio[i] = std::log(hat.h[i] / m.h[i]);
  return 2.0 * grid_deriv(logratio, m.dx());
}

/// xx-component of Ric_g + 2 Hess(phi): the base push of Ric+ for diagonal
/// (A = B = 0, H = 0) grid data, the Buscher-invariant combination.
inline Vec grid_ricci_plus_xx(const FiberedGridModel& m) {
  auto ric = grid_ricci_g(m);
  double dx = m.dx();
  Vec dphi = grid_deriv(m.phi, dx);
  Vec ddphi = grid_deriv(dphi, dx);
  Vec dgx = grid_deriv(m.gx, dx);
  Vec out(m.N);
  for (int i = 0; i < m.N; ++i) {
    double gamma_xxx = 0.5 * dgx[i] / m.gx[i];
    out[i] = ric[i](0, 0) + 2.0 * (ddphi[i] - gamma_xxx * dphi[i]);
  }
  return out;
}

}  // namespace gg
