// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure.  Tolerances are pinned here, next to the checks they gate.

#include <chrono>
#include <cstdio>
#include <vector>

#include "gg/cli.hpp"
#include "support/algebras.hpp"
#include "support/generators.hpp"

using namespace gg;
namespace gt = gg::testing;

namespace {

struct Sweep {
  struct Exact {
    CourantAlgebroid E;
    GeneralizedMetric V;
    Vec phi;
    GenConnection D;
  };
  struct Transitive {
    CourantAlgebroid E;
    GeneralizedMetric V;
    Vec phi;
    GenConnection D;
  };
  std::vector<Exact> exact;
  std::vector<Transitive> transitive;
  double seconds = 0.0;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

Sweep build_sweep() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(2026);
  Sweep sw;
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = gt::random_exact_instance(3 + trial % 4, rng);
    GenConnection D = levi_civita(inst.E, inst.V,
                                  dilaton_section(inst.E, inst.phi));
    sw.exact.push_back({inst.E, inst.V, inst.phi, std::move(D)});
  }
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = gt::random_transitive_instance(3 + trial % 3, 1 + trial % 2,
                                               rng);
    GenConnection D = levi_civita(inst.E, inst.V,
                                  dilaton_section(inst.E, inst.phi));
    sw.transitive.push_back({inst.E, inst.V, inst.phi, std::move(D)});
  }
  sw.seconds = seconds_since(t0);
  return sw;
}

double sup(const Mat& m) { return m.lpNorm<Eigen::Infinity>(); }

template <typename Inst>
double route_discrepancy(const Inst& inst) {
  Section eps = dilaton_section(inst.E, inst.phi);
  RicciTensors a = ricci_trace(inst.E, inst.V, inst.D);
  RicciTensors b = ricci_closed_form(inst.E, inst.V, eps);
  return std::max(sup(a.plus - b.plus), sup(a.minus - b.minus));
}

bool criterion_1(const Sweep& sw, std::string& detail) {
  auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& inst : sw.exact)
    worst = std::max(worst, route_discrepancy(inst));
  for (const auto& inst : sw.transitive)
    worst = std::max(worst, route_discrepancy(inst));
  double secs = sw.seconds + seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "trace vs closed form %.2e (tol 1e-9) over 100+50 instances, "
                "%.1f s (cap 30)",
                worst, secs);
  detail = buf;
  return worst < 1e-9 && secs < 30.0;
}

bool criterion_2(const Sweep& sw, std::string& detail) {
  double torsion = 0.0, axu = 0.0, div = 0.0;
  auto measure = [&](const CourantAlgebroid& E, const GeneralizedMetric& V,
                     const Vec& phi, const GenConnection& D) {
    auto T = torsion_tensor(E, D);
    torsion = std::max(torsion, sup3(T));
    auto Ta = torsion_axu(E, D);
    for (size_t a = 0; a < T.size(); ++a)
      axu = std::max(axu, sup(T[a] - Ta[a]));
    Section eps = dilaton_section(E, phi);
    div = std::max(div, (divergence_of(E, D).eps.v - eps.v)
                            .lpNorm<Eigen::Infinity>());
    (void)V;
  };
  for (const auto& i : sw.exact) measure(i.E, i.V, i.phi, i.D);
  for (const auto& i : sw.transitive) measure(i.E, i.V, i.phi, i.D);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "torsion %.2e (tol 1e-11), two torsion forms %.2e (tol 1e-11), "
                "divergence offset %.2e (tol 1e-12)",
                torsion, axu, div);
  detail = buf;
  return torsion < 1e-11 && axu < 1e-11 && div < 1e-12;
}

bool criterion_3(const Sweep& sw, std::string& detail) {
  double worst = 0.0;
  for (const auto& i : sw.exact)
    worst = std::max(worst, bianchi_first_residual(i.E, i.V, i.D));
  for (const auto& i : sw.transitive)
    worst = std::max(worst, bianchi_first_residual(i.E, i.V, i.D));
  // torsionful counterexample: in dim 3 a volume flux leaves no room for a
  // violation, so the demonstration lives on a dim-4 flux instance
  std::mt19937 rng(41);
  double torsionful = 0.0;
  for (int d = 4; d <= 6; ++d) {
    auto inst = gt::random_exact_instance(d, rng);
    torsionful = std::max(torsionful,
                          bianchi_first_residual(
                              inst.E, inst.V, gualtieri_bismut(inst.E, inst.V)));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "torsion-free %.2e (tol 1e-10); torsionful counterexample "
                "%.2e (> 1e-3, dims 4-6)",
                worst, torsionful);
  detail = buf;
  return worst < 1e-10 && torsionful > 1e-3;
}

bool criterion_4(const Sweep& sw, std::string& detail) {
  std::mt19937 rng(42);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto& i = sw.exact[k * 3 % sw.exact.size()];
    Section eps = dilaton_section(i.E, i.phi);
    RicciTensors base = ricci_trace(i.E, i.V, i.D);
    for (int p = 0; p < 20; ++p) {
      GenConnection Dp = gt::sigma0_perturbation(i.E, i.V, i.D, eps, rng);
      RicciTensors r = ricci_trace(i.E, i.V, Dp);
      worst = std::max(worst, std::max(sup(r.plus - base.plus),
                                       sup(r.minus - base.minus)));
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "Ricci drift %.2e (tol 1e-10) over 20 instances x 20 "
                "perturbations",
                worst);
  detail = buf;
  return worst < 1e-10;
}

bool criterion_5(const Sweep& sw, std::string& detail) {
  double worst = 0.0;
  for (const auto& i : sw.exact) {
    Section eps = dilaton_section(i.E, i.phi);  // phi closed by construction
    SkewSymmetryReport rep = skew_symmetry_check(i.E, i.V, eps);
    worst = std::max({worst, rep.residual, rep.h_residual, rep.b_residual});
  }
  // non-closed dilaton form: phi = e^3 on Heisenberg has dphi = -k e^12
  LieAlgebra heis = gt::heisenberg3(1.0);
  CourantAlgebroid E(heis, KForm(3, 3));
  GeneralizedMetric V(E, Mat::Identity(3, 3), Mat::Zero(3, 3));
  SkewSymmetryReport counter =
      skew_symmetry_check(E, V, dilaton_section(E, Vec(Vec::Unit(3, 2))));
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "closed-dilaton residual %.2e (tol 1e-10); dphi != 0 "
                "counterexample %.2e (> 1e-3)",
                worst, counter.residual);
  detail = buf;
  return worst < 1e-10 && counter.residual > 1e-3;
}

bool criterion_6(std::string& detail) {
  double worst = 0.0;
  for (auto [f0, k] : {std::pair{1.0, 1.0}, {2.0, 1.0}, {1.0, 2.0}}) {
    KForm H(3, 3);
    H.set({0, 1, 2}, k);
    CourantAlgebroid E(gt::abelian(3), H);
    auto traj = integrate_flow(E, {f0 * Mat::Identity(3, 3), Mat::Zero(3, 3),
                                   Mat(), 0.0},
                               1.0, 1e-3, constant_eps(Section(3, 0)));
    double fexact = std::cbrt(f0 * f0 * f0 + 3 * k * k);
    worst = std::max(worst,
                     sup(traj.back().g - fexact * Mat::Identity(3, 3)));
  }
  // Richardson orders at t = 0.4
  KForm H(3, 3);
  H.set({0, 1, 2}, 1.0);
  CourantAlgebroid E(gt::abelian(3), H);
  auto err = [&](double dt, Scheme s) {
    auto traj = integrate_flow(E, {Mat::Identity(3, 3), Mat::Zero(3, 3),
                                   Mat(), 0.0},
                               0.4, dt, constant_eps(Section(3, 0)), {s});
    return sup(traj.back().g - std::cbrt(1.0 + 1.2) * Mat::Identity(3, 3));
  };
  double euler = err(0.02, Scheme::Euler) / err(0.01, Scheme::Euler);
  double rk4 = err(0.02, Scheme::RK4) / err(0.01, Scheme::RK4);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "closed form %.2e (tol 1e-6); halving gains euler %.2f "
                "(band [1.7,2.3]), rk4 %.1f (band [12,20])",
                worst, euler, rk4);
  detail = buf;
  return worst < 1e-6 && euler > 1.7 && euler < 2.3 && rk4 > 12 && rk4 < 20;
}

bool criterion_7(std::string& detail) {
  KForm H(3, 3);
  H.set({0, 1, 2}, 1.4);
  TorusBundleData data{gt::abelian(3), 2, H, Mat::Identity(3, 3),
                       Mat::Zero(3, 3)};
  DualityReport rep = verify_duality(data, Section(3, 0), 0.5, 1e-3);

  std::mt19937 rng(43);
  double invol = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    int dim = 3 + trial % 3;
    std::uniform_int_distribution<int> pick(0, dim - 1);
    TorusBundleData d{gt::abelian(dim), pick(rng),
                      gt::random_form(dim, 3, rng), gt::random_metric(dim, rng),
                      gt::random_skew(dim, rng)};
    TorusBundleData back = dualize_buscher(dualize_buscher(d));
    invol = std::max({invol, sup(back.g - d.g), sup(back.b - d.b),
                      (back.H - d.H).coeffs().lpNorm<Eigen::Infinity>()});
  }

  // grid dilaton shift: phi^ = phi - 1/2 log h exactly; the transported
  // divergence 1-form converges at the stencil order
  auto shift_err = [](int N) {
    FiberedGridModel m = FiberedGridModel::flat(N);
    for (int i = 0; i < N; ++i)
      m.h[i] = std::exp(0.7 * std::sin(m.dx() * i));
    FiberedGridModel hat = dualize_grid(m);
    double exact = 0.0, fd = 0.0;
    for (int i = 0; i < N; ++i) {
      exact = std::max(exact, std::abs(hat.phi[i] - (m.phi[i] -
                                                     0.35 * std::sin(m.dx() * i))));
      fd = std::max(fd, std::abs(grid_divergence_shift(m)[i] +
                                 2.8 * std::cos(m.dx() * i)));
    }
    return std::pair{exact, fd};
  };
  auto [e32, fd32] = shift_err(32);
  auto [e64, fd64] = shift_err(64);
  double order = std::log2(fd32 / fd64);
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "exchange %.2e (tol 1e-9), flow %.2e (tol 1e-6), involution "
                "%.2e (tol 1e-12), dilaton shift %.1e exact / order %.2f "
                "(>= 3.5)",
                rep.ricci_exchange_residual, rep.flow_correspondence_residual,
                invol, std::max(e32, e64), order);
  detail = buf;
  return rep.ricci_exchange_residual < 1e-9 &&
         rep.flow_correspondence_residual < 1e-6 && invol < 1e-12 &&
         std::max(e32, e64) < 1e-14 && order >= 3.5;
}

bool criterion_8(const Sweep& sw, std::string& detail) {
  double genop = 0.0, rubio = 0.0, lc_torsion = 0.0, gb_torsion = 0.0;
  for (size_t k = 0; k < sw.exact.size(); k += 10) {
    const auto& i = sw.exact[k];
    GeneratingReport rep = generating_operator_exact(i.E);
    // (i) parity: the operator is odd for the exterior degree
    int dim = 1 << i.E.n();
    double parity = 0.0;
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c)
        if ((std::popcount(unsigned(r)) + std::popcount(unsigned(c))) % 2 == 0)
          parity = std::max(parity, std::abs(rep.dirac(r, c)));
    genop = std::max({genop, parity, rep.property_two, rep.square_scalar});

    GenConnection D0 = levi_civita(i.E, i.V, Section(Vec::Zero(i.E.rank())));
    GenConnection DB = gualtieri_bismut(i.E, i.V);
    rubio = std::max({rubio, rubio_residual(i.E, D0), rubio_residual(i.E, DB)});
    lc_torsion = std::max(lc_torsion, sup3(torsion_tensor(i.E, D0)));
    // torsion(D^B) = pi+*H' + pi-*H' entrywise, H' the effective flux of
    // the splitting shifted by b
    auto T = torsion_tensor(i.E, DB);
    int R = i.E.rank(), n = i.E.n();
    KForm Heff = i.E.H() + ce_d(i.E.base(), i.V.b_form(n));
    for (int a = 0; a < R; ++a)
      for (int b = 0; b < R; ++b)
        for (int c = 0; c < R; ++c) {
          double expect = 0.0;
          for (const Mat& P : {i.V.proj_plus(), i.V.proj_minus()}) {
            Vec xa = Vec(P.col(a)).head(n), xb = Vec(P.col(b)).head(n);
            expect += Heff.contract(xa).contract(xb).coeffs().dot(
                Vec(P.col(c)).head(n));
          }
          gb_torsion = std::max(gb_torsion, std::abs(T[a](b, c) - expect));
        }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "generating operator %.2e (tol 1e-12); Rubio %.2e, LC torsion "
                "%.2e, Bismut torsion vs projected flux %.2e (tol 1e-11)",
                genop, rubio, lc_torsion, gb_torsion);
  detail = buf;
  return genop < 1e-12 && rubio < 1e-11 && lc_torsion < 1e-11 &&
         gb_torsion < 1e-11;
}

bool criterion_9(const Sweep& sw, std::string& detail) {
  double worst = 0.0;
  for (const auto& i : sw.exact)
    worst = std::max(worst, clifford_ricci_identity_residual(i.E, i.V, i.D));

  bool dims_ok = true;
  for (int n : {2, 4, 6}) {
    CourantAlgebroid E(gt::abelian(n), KForm(n, 3));
    int d = parallel_spinor_space(gt::abelian(n), Mat::Identity(n, n),
                                  KForm(n, 3))
                .dimension;
    dims_ok = dims_ok && d == (1 << (n / 2));
    // parallel spinors force a stationary point of the flow
    dims_ok = dims_ok &&
              stationarity_residual(E, {Mat::Identity(n, n), Mat::Zero(n, n),
                                        Mat(), 0.0},
                                    Section(n, 0)) == 0.0;
  }
  KForm H(3, 3);
  H.set({0, 1, 2}, 1.1);
  int d_heis = parallel_spinor_space(gt::heisenberg3(1.1), Mat::Identity(3, 3),
                                     KForm(3, 3))
                   .dimension;
  int d_flux =
      parallel_spinor_space(gt::abelian(3), Mat::Identity(3, 3), H).dimension;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "identity residual %.2e (tol 1e-10); parallel dims flat "
                "2/4/8, Heisenberg %d, flux torus %d (want 0)",
                worst, d_heis, d_flux);
  detail = buf;
  return worst < 1e-10 && dims_ok && d_heis == 0 && d_flux == 0;
}

bool criterion_10(std::string& detail) {
  auto t0 = std::chrono::steady_clock::now();
  // flat T^6 with the standard structure: every residual vanishes
  Mat J = Mat::Zero(6, 6);
  for (int p = 0; p < 3; ++p) {
    J(2 * p + 1, 2 * p) = 1.0;
    J(2 * p, 2 * p + 1) = -1.0;
  }
  KForm re(6, 3), im(6, 3);
  re.set({0, 2, 4}, 1.0);
  re.set({0, 3, 5}, -1.0);
  re.set({1, 2, 5}, -1.0);
  re.set({1, 3, 4}, -1.0);
  im.set({0, 2, 5}, 1.0);
  im.set({0, 3, 4}, 1.0);
  im.set({1, 2, 4}, 1.0);
  im.set({1, 3, 5}, -1.0);
  LieAlgebra t6 = gt::abelian(6);
  SU3Structure su3 = su3_structure(Mat::Identity(6, 6), J, re, im);
  StromingerResiduals flat =
      strominger_residuals(t6, Mat::Identity(6, 6), su3, {}, Mat());

  // instanton violation isolated by a constant F not of type (1,1)
  KForm F(6, 2);
  F.set({0, 1}, 1.0);
  StromingerResiduals inst = strominger_residuals(
      t6, Mat::Identity(6, 6), su3, {F}, Mat(Mat::Identity(1, 1)));

  // Iwasawa: Omega closed, dd^c omega obstructed
  LieAlgebra iw = gt::iwasawa();
  SU3Structure su3iw = su3_structure(Mat::Identity(6, 6), J, re, im);
  StromingerResiduals iwres =
      strominger_residuals(iw, Mat::Identity(6, 6), su3iw, {}, Mat());
  double secs = seconds_since(t0);
  bool ok = flat.sup() == 0.0 && inst.instanton > 0.1 &&
            inst.holomorphic == 0.0 && inst.bianchi == 0.0 &&
            iwres.holomorphic < 1e-12 && iwres.bianchi > 0.1 && secs < 5.0;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "flat sup %.1e (want 0), instanton-only violation %.2f, "
                "Iwasawa dOmega %.1e / Bianchi %.2f, %.2f s (cap 5)",
                flat.sup(), inst.instanton, iwres.holomorphic, iwres.bianchi,
                secs);
  detail = buf;
  return ok;
}

}  // namespace

int main() {
  Sweep sw = build_sweep();
  struct Line {
    const char* name;
    bool ok;
    std::string detail;
  };
  std::vector<Line> lines;
  auto run = [&](const char* name, auto&& fn) {
    std::string detail;
    bool ok = fn(detail);
    lines.push_back({name, ok, detail});
  };
  run("ricci route equivalence", [&](std::string& d) { return criterion_1(sw, d); });
  run("levi-civita construction", [&](std::string& d) { return criterion_2(sw, d); });
  run("first bianchi identity", [&](std::string& d) { return criterion_3(sw, d); });
  run("sigma0 invariance", [&](std::string& d) { return criterion_4(sw, d); });
  run("ricci skew-symmetry", [&](std::string& d) { return criterion_5(sw, d); });
  run("flow closed form + orders", [&](std::string& d) { return criterion_6(d); });
  run("duality exchange", [&](std::string& d) { return criterion_7(d); });
  run("generating operator + rubio", [&](std::string& d) { return criterion_8(sw, d); });
  run("spinorial ricci + parallel spinors", [&](std::string& d) { return criterion_9(sw, d); });
  run("strominger residuals", [&](std::string& d) { return criterion_10(d); });

  int failures = 0;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (!lines[i].ok) ++failures;
    std::printf("criterion %2zu [%s] %s: %s\n", i + 1,
                lines[i].ok ? "PASS" : "FAIL", lines[i].name,
                lines[i].detail.c_str());
  }
  return failures == 0 ? 0 : 1;
}
