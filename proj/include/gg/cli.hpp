#pragma once

#include <iomanip>
#include <ostream>

#include "gg/instance.hpp"

namespace gg {

/// Machine-readable result plus CSV table, with the tolerance every residual
/// was compared against carried alongside the value.
struct Report {
  struct Entry {
    std::string key, value, tol;  // tol empty for plain facts
  };
  std::string command, instance;
  std::vector<Entry> machine;
  std::vector<std::string> table;  // CSV lines, first is the header
  int status = 0;                  // 0 ok, 2 = residual above tolerance
};

namespace detail {

inline std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // normalize the sign of zero
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void put(Report& rep, const std::string& key, double v) {
  rep.machine.push_back({key, fmt(v), ""});
}

inline void put_residual(Report& rep, const std::string& key, double v,
                         double tol) {
  rep.machine.push_back({key, fmt(v), fmt(tol)});
  if (!(v <= tol)) rep.status = 2;
}

/// Sign/orientation choices every reported number depends on.
inline const std::vector<std::string>& conventions() {
  static const std::vector<std::string> c = {
      "pairing <X+xi, Y+eta> = 1/2 (xi(Y) + eta(X))",
      "V+ graph: xi = (g + b) X; b-form rows b(j,i) = b(e_i, e_j)",
      "flow: d(g+b)/dt = -2 Ric+ in the base presentation",
      "orientation e^1 ^ ... ^ e^n positive for the Hodge star",
      "d^c alpha = -(d alpha)(J., J., J.)",
      "Buscher swap e_z <-> e^z pinned by psi(V+) = V+^"};
  return c;
}

inline std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

inline TorusBundleData bundle_of(const InstanceSpec& spec) {
  if (spec.run.fiber < 0 || spec.run.fiber >= spec.algebra.dim())
    throw SpecError("dualization needs a fiber index (run.fiber or --fiber)");
  return {spec.algebra, spec.run.fiber, spec.H, spec.g, spec.b};
}

}  // namespace detail

inline Report run_check(const InstanceSpec& spec) {
  Report rep{"check", spec.name, {}, {}, 0};
  double tol = spec.run.tol;
  detail::put_residual(rep, "jacobi_residual", spec.algebra.jacobi_residual(),
                       tol);
  CourantAlgebroid E = spec.courant();
  if (E.transitive()) {
    detail::put_residual(rep, "bianchi_residual", E.bianchi_residual(), tol);
    detail::put_residual(rep, "fiber_ad_invariance",
                         E.fiber().ad_invariance_residual(), tol);
  } else {
    detail::put_residual(
        rep, "H_closure",
        ce_d(spec.algebra, spec.H).coeffs().lpNorm<Eigen::Infinity>(), tol);
  }
  detail::put_residual(rep, "g_symmetry",
                       (spec.g - Mat(spec.g.transpose())).lpNorm<Eigen::Infinity>(),
                       tol);
  Eigen::LLT<Mat> llt(spec.g);
  detail::put(rep, "g_positive", llt.info() == Eigen::Success ? 1.0 : 0.0);
  if (llt.info() != Eigen::Success) rep.status = 2;
  detail::put_residual(rep, "b_skew",
                       (spec.b + Mat(spec.b.transpose())).lpNorm<Eigen::Infinity>(),
                       tol);
  return rep;
}

inline Report run_ricci(const InstanceSpec& spec) {
  Report rep{"ricci", spec.name, {}, {}, 0};
  CourantAlgebroid E = spec.courant();
  GeneralizedMetric V(E, spec.g, spec.b, spec.a);
  Section eps = spec.epsilon(E);
  RicciTensors closed = ricci_closed_form(E, V, eps);
  RicciTensors traced = ricci_trace(E, V, levi_civita(E, V, eps));
  double worst = std::max((closed.plus - traced.plus).lpNorm<Eigen::Infinity>(),
                          (closed.minus - traced.minus).lpNorm<Eigen::Infinity>());
  detail::put_residual(rep, "route_discrepancy", worst, spec.run.tol);
  detail::put(rep, "ric_plus_sup", closed.plus.lpNorm<Eigen::Infinity>());
  rep.table.push_back("instance_id,route,block,i,j,value");
  auto block = [&](const std::string& route, const std::string& name,
                   const Mat& m) {
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j)
        rep.table.push_back(detail::csv_row({spec.name, route, name,
                                             std::to_string(i + 1),
                                             std::to_string(j + 1),
                                             detail::fmt(m(i, j))}));
  };
  block("closed_form", "plus", closed.plus);
  block("closed_form", "minus", closed.minus);
  block("trace", "plus", traced.plus);
  block("trace", "minus", traced.minus);
  return rep;
}

inline Report run_flow(const InstanceSpec& spec) {
  Report rep{"flow", spec.name, {}, {}, 0};
  CourantAlgebroid E = spec.courant();
  Section eps = spec.epsilon(E);
  auto traj = integrate_flow(E, {spec.g, spec.b, spec.a, 0.0}, spec.run.t_end,
                             spec.run.dt, constant_eps(eps),
                             {spec.run.scheme});
  int n = E.n(), dk = E.fiber_dim();
  std::vector<std::string> head{"t"};
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      head.push_back("g_" + std::to_string(i + 1) + std::to_string(j + 1));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      head.push_back("b_" + std::to_string(i + 1) + std::to_string(j + 1));
  for (int a = 0; a < dk; ++a)
    for (int j = 0; j < n; ++j)
      head.push_back("theta_" + std::to_string(a + 1) + std::to_string(j + 1));
  head.push_back("ric_plus_norm");
  rep.table.push_back(detail::csv_row(head));
  for (const FlowState& s : traj) {
    std::vector<std::string> row{detail::fmt(s.t)};
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) row.push_back(detail::fmt(s.g(i, j)));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) row.push_back(detail::fmt(s.b(j, i)));
    for (int a = 0; a < dk; ++a)
      for (int j = 0; j < n; ++j) row.push_back(detail::fmt(s.a(a, j)));
    row.push_back(detail::fmt(
        ricci_closed_form(E, s.metric(E), eps).plus.lpNorm<Eigen::Infinity>()));
    rep.table.push_back(detail::csv_row(row));
  }
  detail::put(rep, "samples", static_cast<double>(traj.size()));
  detail::put(rep, "stationarity_residual",
              stationarity_residual(E, traj.back(), eps));
  return rep;
}

inline Report run_dualize(const InstanceSpec& spec) {
  Report rep{"dualize", spec.name, {}, {}, 0};
  TorusBundleData data = detail::bundle_of(spec);
  TorusBundleData hat = dualize_buscher(data);
  TorusBundleData back = dualize_buscher(hat);
  detail::put_residual(rep, "morphism_residual",
                       duality_morphism_residual(data), spec.run.tol);
  double invol = std::max((back.g - data.g).lpNorm<Eigen::Infinity>(),
                          (back.b - data.b).lpNorm<Eigen::Infinity>());
  detail::put_residual(rep, "involution_residual", invol, spec.run.tol);
  detail::put(rep, "h_dual", hat.h());
  detail::put(rep, "det_relation", hat.h() * data.h());
  int n = hat.algebra.dim();
  rep.table.push_back("block,i,j,k,value");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rep.table.push_back(detail::csv_row({"g_dual", std::to_string(i + 1),
                                           std::to_string(j + 1), "",
                                           detail::fmt(hat.g(i, j))}));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      rep.table.push_back(detail::csv_row({"b_dual", std::to_string(i + 1),
                                           std::to_string(j + 1), "",
                                           detail::fmt(hat.b(j, i))}));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Vec br = hat.algebra.bracket(Vec::Unit(n, i), Vec::Unit(n, j));
      for (int k = 0; k < n; ++k)
        if (br[k] != 0.0)
          rep.table.push_back(detail::csv_row(
              {"bracket_dual", std::to_string(i + 1), std::to_string(j + 1),
               std::to_string(k + 1), detail::fmt(br[k])}));
      for (int k = j + 1; k < n; ++k)
        if (double v = hat.H.get({i, j, k}); v != 0.0)
          rep.table.push_back(detail::csv_row(
              {"H_dual", std::to_string(i + 1), std::to_string(j + 1),
               std::to_string(k + 1), detail::fmt(v)}));
    }
  return rep;
}

inline Report run_verify_duality(const InstanceSpec& spec) {
  Report rep{"verify-duality", spec.name, {}, {}, 0};
  TorusBundleData data = detail::bundle_of(spec);
  CourantAlgebroid E(data.algebra, data.H);
  DualityReport dr = verify_duality(data, spec.epsilon(E), spec.run.t_end,
                                    spec.run.dt);
  detail::put_residual(rep, "ricci_exchange_residual",
                       dr.ricci_exchange_residual, spec.run.tol);
  detail::put_residual(rep, "flow_correspondence_residual",
                       dr.flow_correspondence_residual,
                       std::max(spec.run.tol, 1e-6));
  detail::put_residual(rep, "killing_residual_transport",
                       dr.killing_residual_transport, spec.run.tol);
  return rep;
}

inline Report run_killing(const InstanceSpec& spec) {
  Report rep{"killing", spec.name, {}, {}, 0};
  CourantAlgebroid E = spec.courant();
  GeneralizedMetric V(E, spec.g, spec.b, spec.a);
  KForm Heff = E.H() + ce_d(E.base(), V.b_form(E.n()));
  detail::put(rep, "operator_gap",
              killing_operator_gap(spec.algebra, spec.g, Heff, spec.dilaton));
  detail::put(rep, "parallel_spinor_dim",
              static_cast<double>(
                  parallel_spinor_space(spec.algebra, spec.g, Heff).dimension));
  if (spec.eta) {
    KillingResiduals kr =
        killing_residuals(spec.algebra, spec.g, Heff, spec.dilaton, *spec.eta);
    detail::put(rep, "grad_residual", kr.grad.lpNorm<Eigen::Infinity>());
    detail::put(rep, "dirac_residual", kr.dirac);
  }
  return rep;
}

inline Report run_strominger(const InstanceSpec& spec) {
  Report rep{"strominger", spec.name, {}, {}, 0};
  if (!spec.J || !spec.omega_re || !spec.omega_im)
    throw SpecError("strominger needs spinor.J, Omega_re and Omega_im");
  SU3Structure su3 =
      su3_structure(spec.g, *spec.J, *spec.omega_re, *spec.omega_im);
  Mat c = spec.fiber ? spec.fiber->c : Mat();
  StromingerResiduals sr =
      strominger_residuals(spec.algebra, spec.g, su3, spec.F, c);
  detail::put(rep, "norm_ratio", su3.norm_ratio);
  detail::put(rep, "holomorphic_residual", sr.holomorphic);
  detail::put(rep, "instanton_residual", sr.instanton);
  detail::put(rep, "torsion_class_residual", sr.torsion_class);
  detail::put(rep, "bianchi_residual", sr.bianchi);
  return rep;
}

inline Report run_grid_flow(const InstanceSpec& spec) {
  Report rep{"grid-flow", spec.name, {}, {}, 0};
  if (!spec.grid) throw SpecError("grid-flow needs a 'grid' section");
  auto traj = grid_ricci_flow(*spec.grid, spec.run.t_end, spec.run.dt,
                              spec.run.scheme);
  int N = spec.grid->N;
  std::vector<std::string> head{"t"};
  for (const char* f : {"gx", "gbar", "h", "A", "B"})
    for (int i = 0; i < N; ++i)
      head.push_back(std::string(f) + "_" + std::to_string(i));
  rep.table.push_back(detail::csv_row(head));
  double t = 0.0, dt = spec.run.dt;
  for (size_t s = 0; s < traj.size(); ++s) {
    const FiberedGridModel& m = traj[s];
    std::vector<std::string> row{detail::fmt(std::min(t, spec.run.t_end))};
    for (const Vec* f : {&m.gx, &m.gbar, &m.h, &m.A, &m.B})
      for (int i = 0; i < N; ++i) row.push_back(detail::fmt((*f)[i]));
    rep.table.push_back(detail::csv_row(row));
    t += dt;
  }
  detail::put(rep, "samples", static_cast<double>(traj.size()));
  return rep;
}

inline Report run_command(const InstanceSpec& spec, const std::string& cmd) {
  if (cmd == "check") return run_check(spec);
  if (cmd == "ricci") return run_ricci(spec);
  if (cmd == "flow") return run_flow(spec);
  if (cmd == "dualize") return run_dualize(spec);
  if (cmd == "verify-duality") return run_verify_duality(spec);
  if (cmd == "killing") return run_killing(spec);
  if (cmd == "strominger") return run_strominger(spec);
  if (cmd == "grid-flow") return run_grid_flow(spec);
  throw SpecError("unknown command: " + cmd);
}

inline void emit_report(const Report& rep, const std::string& format,
                        std::ostream& out) {
  out << "# ggflow " << rep.command << " :: " << rep.instance << "\n";
  for (const std::string& c : detail::conventions())
    out << "# convention: " << c << "\n";
  out << "# status: " << rep.status << "\n";
  if (format == "structured" || format.empty()) {
    for (const Report::Entry& e : rep.machine) {
      out << e.key << " = " << e.value;
      if (!e.tol.empty()) out << "  (tol " << e.tol << ")";
      out << "\n";
    }
    if (!rep.table.empty()) {
      out << "--- table ---\n";
      for (const std::string& line : rep.table) out << line << "\n";
    }
  } else if (format == "csv") {
    for (const Report::Entry& e : rep.machine)
      out << "# " << e.key << " = " << e.value
          << (e.tol.empty() ? "" : "  (tol " + e.tol + ")") << "\n";
    for (const std::string& line : rep.table) out << line << "\n";
  } else {
    throw SpecError("format must be 'structured' or 'csv'");
  }
}

}  // namespace gg
