#pragma once

#include <bit>
#include <complex>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "gg/ricci.hpp"

namespace gg {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

/// Complex Clifford module for R^n: gamma_a gamma_b + gamma_b gamma_a =
/// 2 sig_a delta_ab, module rank 2^floor(n/2).  sig defaults to all +1.
struct CliffordModule {
  int n = 0;
  Vec signature;
  std::vector<CMat> gamma;

  int rank() const { return gamma.empty() ? 1 : static_cast<int>(gamma[0].rows()); }

  double relation_residual() const {
    double worst = 0.0;
    CMat id = CMat::Identity(rank(), rank());
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        CMat anti = gamma[a] * gamma[b] + gamma[b] * gamma[a];
        if (a == b) anti -= 2.0 * signature[a] * id;
        worst = std::max(worst, anti.cwiseAbs().maxCoeff());
      }
    return worst;
  }
};

namespace detail {

inline std::vector<CMat> pauli() {
  using namespace std::complex_literals;
  CMat s1(2, 2), s2(2, 2), s3(2, 2);
  s1 << 0, 1, 1, 0;
  s2 << 0, -1i, 1i, 0;
  s3 << 1, 0, 0, -1;
  return {s1, s2, s3};
}

inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace detail

/// Recursive gamma construction, memoized per (n, signature).
inline CliffordModule build_clifford(int n, Vec signature = Vec()) {
  if (n < 0 || n > 8)
    throw DimensionError("build_clifford: supported range is 0 <= n <= 8");
  if (signature.size() == 0) signature = Vec::Ones(n);
  if (signature.size() != n)
    throw DimensionError("build_clifford: signature size mismatch");

  static std::map<std::pair<int, std::vector<double>>, CliffordModule> cache;
  static std::mutex mtx;
  std::vector<double> key(signature.data(), signature.data() + n);
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find({n, key});
  if (it != cache.end()) return it->second;

  auto sig = detail::pauli();
  std::vector<CMat> g;  // Euclidean gammas, even count
  int m = n / 2;
  for (int k = 0; k < m; ++k) {
    std::vector<CMat> next;
    for (const CMat& old : g) next.push_back(detail::kron(sig[2], old));
    CMat id = CMat::Identity(g.empty() ? 1 : g[0].rows(), g.empty() ? 1 : g[0].rows());
    next.push_back(detail::kron(sig[0], id));
    next.push_back(detail::kron(sig[1], id));
    g = std::move(next);
  }
  if (n % 2 == 1) {
    // chirality element of the even part: squares to +1, anticommutes
    CMat vol = CMat::Identity(g.empty() ? 1 : g[0].rows(), g.empty() ? 1 : g[0].rows());
    for (const CMat& ga : g) vol = vol * ga;
    g.push_back(std::pow(std::complex<double>(0, -1), m) * vol);
  }
  using namespace std::complex_literals;
  for (int a = 0; a < n; ++a)
    if (signature[a] < 0) g[a] = 1i * g[a];

  CliffordModule C{n, signature, std::move(g)};
  cache[{n, key}] = C;
  return C;
}

/// Spin lift of A in so(n): rho(A) = 1/4 A_ab gamma_b gamma_a with
/// A_ab = <A f_a, f_b> the lowered coefficients in an orthonormal frame;
/// satisfies [rho(A), gamma(w)] = gamma(A w).
inline CMat spin_lift(const CliffordModule& C, const Mat& w) {
  CMat out = CMat::Zero(C.rank(), C.rank());
  for (int a = 0; a < C.n; ++a)
    for (int b = 0; b < C.n; ++b)
      if (w(a, b) != 0.0) out += 0.25 * w(a, b) * (C.gamma[b] * C.gamma[a]);
  return out;
}

/// Spin lifts of nabla^{+-} = nabla^g +- 1/2 g^{-1}H and the cubic pair
/// nabla^{+-1/3} = nabla^g +- 1/6 g^{-1}H, computed in a g-orthonormal frame.
struct SpinConnections {
  CliffordModule cl;
  Mat ortho;  // frame map: columns are the orthonormal frame in
              // original coordinates (coefficients pull back by ortho^T)
  std::vector<Mat> om_plus, om_minus, om_third;  // lowered coefficients
  std::vector<CMat> plus, minus, third;          // module endomorphisms
};

inline SpinConnections spin_connections(const LieAlgebra& L, const Mat& g,
                                        const KForm& H) {
  int n = L.dim();
  FrameMetric fm(g);
  const Mat& S = fm.ortho();
  LieAlgebra Lo = L.change_frame(S);
  KForm Ho = H.transform(S);
  FrameMetric id(Mat::Identity(n, n));
  SpinConnections out;
  out.cl = build_clifford(n);
  out.ortho = S;
  out.om_plus = torsion_connection(Lo, id, Ho, 0.5);
  out.om_minus = torsion_connection(Lo, id, Ho, -0.5);
  out.om_third = torsion_connection(Lo, id, Ho, 1.0 / 6.0);
  for (int i = 0; i < n; ++i) {
    out.plus.push_back(spin_lift(out.cl, out.om_plus[i]));
    out.minus.push_back(spin_lift(out.cl, out.om_minus[i]));
    out.third.push_back(spin_lift(out.cl, out.om_third[i]));
  }
  return out;
}

/// Residuals of the Killing spinor equations for an invariant spinor:
/// ||nabla^+_i eta|| per orthonormal direction, and the cubic Dirac part
/// ||slash-nabla^{1/3} eta + 1/4 phi . eta||.
struct KillingResiduals {
  Vec grad;      // per-direction ||nabla^+ eta||
  double dirac;  // cubic Dirac equation residual
  double sup() const {
    return std::max(grad.size() ? grad.lpNorm<Eigen::Infinity>() : 0.0, dirac);
  }
};

inline KillingResiduals killing_residuals(const LieAlgebra& L, const Mat& g,
                                          const KForm& H, const Vec& phi,
                                          const CVec& eta) {
  if (eta.norm() == 0.0)
    throw DimensionError("killing_residuals: spinor must be nonzero");
  int n = L.dim();
  SpinConnections sc = spin_connections(L, g, H);
  KillingResiduals out;
  out.grad = Vec(n);
  for (int i = 0; i < n; ++i) out.grad[i] = (sc.plus[i] * eta).norm();
  Vec phio = sc.ortho.transpose() * phi;  // 1-form components, orthonormal
  CVec d = CVec::Zero(eta.size());
  for (int i = 0; i < n; ++i) d += sc.cl.gamma[i] * (sc.third[i] * eta);
  for (int a = 0; a < n; ++a) d += 0.25 * phio[a] * (sc.cl.gamma[a] * eta);
  out.dirac = d.norm();
  return out;
}

/// Smallest singular value of the stacked Killing operator
/// [nabla^+_1; ...; nabla^+_n; slash-nabla^{1/3} + 1/4 phi.]: zero iff the
/// equations admit an invariant solution.  Duality-invariant scalar.
inline double killing_operator_gap(const LieAlgebra& L, const Mat& g,
                                   const KForm& H, const Vec& phi) {
  int n = L.dim();
  SpinConnections sc = spin_connections(L, g, H);
  int r = sc.cl.rank();
  CMat stack((n + 1) * r, r);
  for (int i = 0; i < n; ++i) stack.middleRows(i * r, r) = sc.plus[i];
  CMat d = CMat::Zero(r, r);
  Vec phio = sc.ortho.transpose() * phi;
  for (int i = 0; i < n; ++i) d += sc.cl.gamma[i] * sc.third[i];
  for (int a = 0; a < n; ++a) d += 0.25 * phio[a] * sc.cl.gamma[a];
  stack.middleRows(n * r, r) = d;
  Eigen::JacobiSVD<CMat> svd(stack);
  return svd.singularValues().minCoeff();
}

/// Common kernel of the nabla^+ lifts: invariant parallel spinors.
struct ParallelSpinorSpace {
  int dimension = 0;
  CMat basis;  // columns: orthonormal kernel basis
};

inline ParallelSpinorSpace parallel_spinor_space(const LieAlgebra& L,
                                                 const Mat& g, const KForm& H,
                                                 double tol = 1e-10) {
  int n = L.dim();
  SpinConnections sc = spin_connections(L, g, H);
  int r = sc.cl.rank();
  CMat stack(n * r, r);
  for (int i = 0; i < n; ++i) stack.middleRows(i * r, r) = sc.plus[i];
  Eigen::JacobiSVD<CMat> svd(stack, Eigen::ComputeFullV);
  Vec sv = svd.singularValues();
  double scale = std::max(1.0, sv.size() ? sv.maxCoeff() : 0.0);
  ParallelSpinorSpace out;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] < tol * scale) ++out.dimension;
  out.basis = svd.matrixV().rightCols(out.dimension);
  return out;
}

/// Algebraic spinorial Ricci identity on the Clifford module of V+:
///   1/2 sum_i gamma(e~_i^+) . rho(R^+(e_i^+, e_j^-)) = 1/4 gamma(i_{e_j^-}Ric^+)
/// as matrices, for every minus frame direction j (the triple-product terms
/// cancel by the first Bianchi identity when D is torsion-free).
inline double clifford_ricci_identity_residual(const CourantAlgebroid& E,
                                               const GeneralizedMetric& V,
                                               const GenConnection& D) {
  int rp = V.rank_plus(), rm = V.rank_minus();
  CurvatureData R = curvature(E, V, D);
  RicciTensors ric = ricci_trace(E, V, D);
  Eigen::LLT<Mat> llt(V.gram_plus());
  Mat Lc = llt.matrixL();
  Mat Li = Lc.inverse();           // orthonormal plus frame f = E+ L^{-T}
  CliffordModule C = build_clifford(rp);
  double worst = 0.0;
  for (int j = 0; j < rm; ++j) {
    CMat lhs = CMat::Zero(C.rank(), C.rank());
    for (int a = 0; a < rp; ++a) {
      Mat Ra = Mat::Zero(rp, rp);
      for (int i = 0; i < rp; ++i)
        if (Li(a, i) != 0.0)
          Ra += Li(a, i) * Mat(Li * R.Rp[i][j] * Li.transpose());
      lhs += 0.5 * (C.gamma[a] * spin_lift(C, Ra));
    }
    Vec u = Li * ric.plus.row(j).transpose();
    CMat rhs = CMat::Zero(C.rank(), C.rank());
    for (int a = 0; a < rp; ++a) rhs += 0.25 * u[a] * C.gamma[a];
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// Exterior module Lambda* g^* of an exact algebroid: basis indexed by
/// bitmask, Clifford action (X + xi).alpha = i_X alpha + xi ^ alpha.
struct ExteriorModule {
  int n = 0;
  std::vector<Mat> wedge;  // e^i ^ .
  std::vector<Mat> iota;   // i_{e_i}
  int rank() const { return 1 << n; }

  /// gamma of a standard-frame section (v; xi) of T + T*.
  Mat gamma(const Vec& u) const {
    Mat out = Mat::Zero(rank(), rank());
    for (int i = 0; i < n; ++i) {
      if (u[i] != 0.0) out += u[i] * iota[i];
      if (u[n + i] != 0.0) out += u[n + i] * wedge[i];
    }
    return out;
  }
};

inline ExteriorModule exterior_module(int n) {
  ExteriorModule M;
  M.n = n;
  int r = 1 << n;
  M.wedge.assign(n, Mat::Zero(r, r));
  M.iota.assign(n, Mat::Zero(r, r));
  for (int i = 0; i < n; ++i)
    for (int mask = 0; mask < r; ++mask) {
      double sgn =
          (std::popcount(static_cast<unsigned>(mask & ((1 << i) - 1))) % 2)
              ? -1.0
              : 1.0;
      if (!(mask & (1 << i))) M.wedge[i](mask | (1 << i), mask) = sgn;
      else M.iota[i](mask & ~(1 << i), mask) = sgn;
    }
  return M;
}

namespace detail {

inline std::vector<int> mask_indices(int mask, int n) {
  std::vector<int> idx;
  for (int i = 0; i < n; ++i)
    if (mask & (1 << i)) idx.push_back(i);
  return idx;
}

/// Matrix of the Chevalley-Eilenberg d on the full exterior module.
inline Mat ce_d_matrix(const LieAlgebra& L, const ExteriorModule& M) {
  int n = L.dim(), r = M.rank();
  Mat out = Mat::Zero(r, r);
  for (int mask = 0; mask < r; ++mask) {
    auto idx = detail::mask_indices(mask, n);
    int k = static_cast<int>(idx.size());
    if (k == n) continue;
    KForm basis(n, k);
    basis.set(idx, 1.0);
    KForm db = ce_d(L, basis);
    for (int tgt = 0; tgt < r; ++tgt) {
      auto tidx = detail::mask_indices(tgt, n);
      if (static_cast<int>(tidx.size()) != k + 1) continue;
      double v = db.get(tidx);
      if (v != 0.0) out(tgt, mask) = v;
    }
  }
  return out;
}

}  // namespace detail

/// The canonical generating operator d - H^ of an exact algebroid on the
/// invariant exterior module, with the defining-property residuals.
struct GeneratingReport {
  Mat dirac;              // 2^n x 2^n matrix of d - H^
  double property_two;    // max ||[[dirac, e_a.], e_b.] - [e_a,e_b].||
  double square_scalar;   // ||dirac^2 - (tr/2^n) Id||
};

inline GeneratingReport generating_operator_exact(const CourantAlgebroid& E) {
  if (E.transitive())
    throw DimensionError("generating_operator_exact: exact variant only");
  int n = E.n(), R = E.rank();
  ExteriorModule M = exterior_module(n);
  GeneratingReport rep;
  rep.dirac = detail::ce_d_matrix(E.base(), M);
  const KForm& H = E.H();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        double v = H.get({i, j, k});
        if (v != 0.0) rep.dirac -= v * (M.wedge[i] * M.wedge[j] * M.wedge[k]);
      }
  rep.property_two = 0.0;
  for (int a = 0; a < R; ++a) {
    Mat ga = M.gamma(Vec::Unit(R, a));
    Mat inner = rep.dirac * ga + ga * rep.dirac;  // odd operators: graded
    for (int b = 0; b < R; ++b) {
      Mat gb = M.gamma(Vec::Unit(R, b));
      Mat lhs = inner * gb - gb * inner;
      Vec br = E.dorfman(Section(Vec::Unit(R, a)), Section(Vec::Unit(R, b))).v;
      rep.property_two =
          std::max(rep.property_two, (lhs - M.gamma(br)).lpNorm<Eigen::Infinity>());
    }
  }
  Mat sq = rep.dirac * rep.dirac;
  double scalar = sq.trace() / M.rank();
  rep.square_scalar =
      (sq - scalar * Mat::Identity(M.rank(), M.rank())).lpNorm<Eigen::Infinity>();
  return rep;
}

/// Dirac operator of a generalized connection on the exterior module:
/// 1/2 sum_a gamma(e~_a) rho(D_{e_a}) with rho the split-signature spin lift.
inline Mat dirac_of(const CourantAlgebroid& E, const ExteriorModule& M,
                    const GenConnection& D) {
  int R = E.rank();
  const Mat& Pinv = E.pairing_inverse();
  Mat out = Mat::Zero(M.rank(), M.rank());
  for (int a = 0; a < R; ++a) {
    Mat A = Pinv * D.Gamma[a].transpose();  // endomorphism of D_{e_a}
    // rho(A) = 1/4 sum_p gamma(A e_p) gamma(e~_p)
    Mat rho = Mat::Zero(M.rank(), M.rank());
    for (int p = 0; p < R; ++p)
      rho += 0.25 * (M.gamma(A.col(p)) * M.gamma(Pinv.col(p)));
    out += 0.5 * (M.gamma(Pinv.col(a)) * rho);
  }
  return out;
}

/// Residual of Rubio's torsion formula
///   i_{e_b} i_{e_a} T_D . = [[dirac(D), e_a.], e_b.] - [e_a, e_b].
/// over all standard frame pairs (graded commutators as the operators are odd).
inline double rubio_residual(const CourantAlgebroid& E, const GenConnection& D) {
  if (E.transitive())
    throw DimensionError("rubio_residual: exact variant only");
  int R = E.rank();
  ExteriorModule M = exterior_module(E.n());
  Mat ds = dirac_of(E, M, D);
  auto T = torsion_tensor(E, D);
  const Mat& Pinv = E.pairing_inverse();
  double worst = 0.0;
  for (int a = 0; a < R; ++a) {
    Mat ga = M.gamma(Vec::Unit(R, a));
    Mat inner = ds * ga + ga * ds;
    for (int b = 0; b < R; ++b) {
      Mat gb = M.gamma(Vec::Unit(R, b));
      Mat rhs = inner * gb - gb * inner;
      Vec br = E.dorfman(Section(Vec::Unit(R, a)), Section(Vec::Unit(R, b))).v;
      rhs -= M.gamma(br);
      Vec tors = Pinv * T[a].row(b).transpose();
      worst = std::max(worst, (M.gamma(tors) - rhs).lpNorm<Eigen::Infinity>());
    }
  }
  return worst;
}

/// Plus-chirality Dirac operator 1/2 sum gamma(f~_i) rho(D restricted to V+),
/// on the Clifford module of (V+, gram): canonical for (V+, div).
inline CMat dirac_plus(const CourantAlgebroid& E, const GeneralizedMetric& V,
                       const GenConnection& D) {
  int rp = V.rank_plus();
  Eigen::LLT<Mat> llt(V.gram_plus());
  Mat Lc = llt.matrixL();
  Mat Lit = Mat(Lc.inverse()).transpose();
  const Mat& Ep = V.frame_plus();
  CliffordModule C = build_clifford(rp);
  CMat out = CMat::Zero(C.rank(), C.rank());
  for (int a = 0; a < rp; ++a) {
    // lowered coefficients of D along the orthonormal direction f_a
    Mat B = Mat::Zero(rp, rp);
    for (int i = 0; i < rp; ++i) {
      double w = Lit(i, a);
      if (w == 0.0) continue;
      Mat G = Mat::Zero(E.rank(), E.rank());
      for (int s = 0; s < E.rank(); ++s)
        if (Ep(s, i) != 0.0) G += Ep(s, i) * D.Gamma[s];
      B += w * Mat(Lit.transpose() * Ep.transpose() * G * Ep * Lit);
    }
    out += 0.5 * (C.gamma[a] * spin_lift(C, B));
  }
  return out;
}

/// SU(3)-type structure on a 6-dimensional algebra.
struct SU3Structure {
  Mat J;
  KForm omega;          // g(J., .)
  KForm omega_re, omega_im;  // the complex volume form Omega
  double norm_ratio = 0.0;   // lambda with (3/2) Re ^ Im = lambda omega^3 / 6
};

inline SU3Structure su3_structure(const Mat& g, const Mat& J,
                                  const KForm& om_re, const KForm& om_im,
                                  double tol = 1e-10) {
  int n = static_cast<int>(J.rows());
  if (n != 6) throw DimensionError("su3_structure: dimension must be 6");
  if ((J * J + Mat::Identity(n, n)).lpNorm<Eigen::Infinity>() > tol)
    throw DimensionError("su3_structure: J^2 must be -Id");
  if ((J.transpose() * g * J - g).lpNorm<Eigen::Infinity>() > tol)
    throw DimensionError("su3_structure: J must be g-compatible");
  SU3Structure s;
  s.J = J;
  Mat low = J.transpose() * g;  // omega(e_i, e_j) = g(J e_i, e_j)
  s.omega = KForm(n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) s.omega.set({i, j}, low(i, j));
  s.omega_re = om_re;
  s.omega_im = om_im;
  if (s.omega.wedge(om_re).coeffs().lpNorm<Eigen::Infinity>() > tol ||
      s.omega.wedge(om_im).coeffs().lpNorm<Eigen::Infinity>() > tol)
    throw DimensionError("su3_structure: omega ^ Omega must vanish");
  KForm vol6 = s.omega.wedge(s.omega).wedge(s.omega);
  KForm reim = om_re.wedge(om_im);
  if (vol6.coeffs().lpNorm<Eigen::Infinity>() > tol)
    s.norm_ratio = 1.5 * reim.coeffs()[0] / vol6.coeffs()[0];
  return s;
}

/// The four Strominger-system residuals of (omega, Omega, F):
///   d Omega = 0;  F ^ omega^2 = 0;  d*omega - d^c log||Omega|| = 0;
///   d d^c omega - c(F ^ F) = 0,   with d^c a = -da(J., J., J.).
/// Invariant data has constant ||Omega||, so the third residual is d*omega.
struct StromingerResiduals {
  double holomorphic, instanton, torsion_class, bianchi;
  KForm H;  // the induced representative d^c omega
  double sup() const {
    return std::max(std::max(holomorphic, instanton),
                    std::max(torsion_class, bianchi));
  }
};

inline StromingerResiduals strominger_residuals(const LieAlgebra& L, const Mat& g,
                                                const SU3Structure& su3,
                                                const std::vector<KForm>& F,
                                                const Mat& c) {
  StromingerResiduals out;
  out.holomorphic =
      std::max(ce_d(L, su3.omega_re).coeffs().lpNorm<Eigen::Infinity>(),
               ce_d(L, su3.omega_im).coeffs().lpNorm<Eigen::Infinity>());
  KForm om2 = su3.omega.wedge(su3.omega);
  out.instanton = 0.0;
  for (const KForm& f : F)
    out.instanton = std::max(
        out.instanton, f.wedge(om2).coeffs().lpNorm<Eigen::Infinity>());
  FrameMetric fm(g);
  out.torsion_class =
      hodge_codiff(L, fm, su3.omega).coeffs().lpNorm<Eigen::Infinity>();
  KForm dc = -1.0 * ce_d(L, su3.omega).transform(su3.J);
  out.H = dc;
  KForm bianchi = ce_d(L, dc);
  for (int a = 0; a < static_cast<int>(F.size()); ++a)
    for (int b = 0; b < static_cast<int>(F.size()); ++b)
      if (c(a, b) != 0.0) bianchi -= c(a, b) * F[a].wedge(F[b]);
  out.bianchi = bianchi.coeffs().lpNorm<Eigen::Infinity>();
  return out;
}

}  // namespace gg
