#pragma once

#include <utility>
#include <vector>

#include "gg/courant.hpp"

namespace gg {

/// Generalized metric V+ in a fixed splitting: graph data (g, b[, a]) with
/// cached frames, duals, reflection G and projectors.
///
/// Exact: V+ = {X + (b+g)X}, V- = {X + (b-g)X}.
/// Transitive admissible: the fiber sits in V-, everything shifted by
/// e^{(b,a)}.
class GeneralizedMetric {
 public:
  GeneralizedMetric(const CourantAlgebroid& E, Mat g, Mat b, Mat a = Mat())
      : g_(std::move(g)), b_(std::move(b)) {
    int N = E.n(), dk = E.fiber_dim(), R = E.rank();
    if (b_.size() == 0) b_ = Mat::Zero(N, N);
    if (a.size() == 0) a = Mat::Zero(dk, N);
    if (g_.n() != N || b_.rows() != N || b_.cols() != N)
      throw DimensionError("GeneralizedMetric: base block size mismatch");
    if ((b_ + b_.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * (1 + b_.norm()))
      throw DimensionError("GeneralizedMetric: b must be skew");
    if (a.rows() != dk || a.cols() != N)
      throw DimensionError("GeneralizedMetric: a must be dk x n");
    a_ = a;
    rp_ = N;
    rm_ = N + dk;

    // pairing-preserving shift e^{(b,a)}
    Mat Sh = Mat::Identity(R, R);
    Sh.block(N, 0, dk, N) = a;
    Sh.block(N + dk, 0, N, N) = b_;
    if (dk > 0) {
      const Mat& c = E.fiber().c;
      Sh.block(N + dk, 0, N, N) -= a.transpose() * c * a;
      Sh.block(N + dk, N, N, dk) = -2.0 * a.transpose() * c;
    }
    shift_ = Sh;

    Eplus_ = Mat::Zero(R, rp_);
    Eminus_ = Mat::Zero(R, rm_);
    Eplus_.block(0, 0, N, N) = Mat::Identity(N, N);
    Eplus_.block(N + dk, 0, N, N) = g_.m();
    Eminus_.block(0, 0, N, N) = Mat::Identity(N, N);
    Eminus_.block(N + dk, 0, N, N) = -g_.m();
    if (dk > 0) Eminus_.block(N, N, dk, dk) = Mat::Identity(dk, dk);
    Eplus_ = Sh * Eplus_;
    Eminus_ = Sh * Eminus_;

    const Mat& P = E.pairing_matrix();
    gramP_ = Eplus_.transpose() * P * Eplus_;
    gramM_ = Eminus_.transpose() * P * Eminus_;
    dualP_ = Eplus_ * gramP_.inverse();
    dualM_ = Eminus_ * gramM_.inverse();
    G_ = dualP_ * Eplus_.transpose() * P - dualM_ * Eminus_.transpose() * P;
    PiP_ = 0.5 * (Mat::Identity(R, R) + G_);
    PiM_ = 0.5 * (Mat::Identity(R, R) - G_);
  }

  const FrameMetric& g() const { return g_; }
  const Mat& b() const { return b_; }
  const Mat& a() const { return a_; }
  int rank_plus() const { return rp_; }
  int rank_minus() const { return rm_; }

  const Mat& frame_plus() const { return Eplus_; }    // columns E_i^+
  const Mat& frame_minus() const { return Eminus_; }  // columns E_i^-
  const Mat& dual_plus() const { return dualP_; }
  const Mat& dual_minus() const { return dualM_; }
  const Mat& gram_plus() const { return gramP_; }
  const Mat& gram_minus() const { return gramM_; }
  const Mat& endomorphism() const { return G_; }
  const Mat& proj_plus() const { return PiP_; }
  const Mat& proj_minus() const { return PiM_; }
  const Mat& shift() const { return shift_; }

  /// 2-form of the splitting offset: value b^form(e_i, e_j) consistent with
  /// the xi-shift X -> bX, i.e. iota_X b^form = b X.
  KForm b_form(int n) const {
    KForm B(n, 2);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) B.set({i, j}, b_(j, i));
    return B;
  }

 private:
  FrameMetric g_;
  Mat b_, a_, shift_;
  Mat Eplus_, Eminus_, dualP_, dualM_, gramP_, gramM_, G_, PiP_, PiM_;
  int rp_ = 0, rm_ = 0;
};

/// Generalized connection stored extrinsically on the standard frame:
/// Gamma[a](b,c) = <D_{e_a} e_b, e_c>, pairing-skew in (b,c).
struct GenConnection {
  std::vector<Mat> Gamma;

  int rank() const { return static_cast<int>(Gamma.size()); }

  double pairing_skew_residual() const {
    double worst = 0.0;
    for (const Mat& m : Gamma)
      worst = std::max(worst, (m + m.transpose()).lpNorm<Eigen::Infinity>());
    return worst;
  }

  /// max |<D e+, e->| over frames: zero iff D preserves V+ and V-.
  double compat_residual(const GeneralizedMetric& V) const {
    double worst = 0.0;
    int R = rank();
    for (int a = 0; a < R; ++a) {
      Mat mixed = V.frame_plus().transpose() * Gamma[a] * V.frame_minus();
      // Gamma[a](b,c) contracted with plus frame in b, minus frame in c
      worst = std::max(worst, mixed.lpNorm<Eigen::Infinity>());
    }
    return worst;
  }

  GenConnection& operator+=(const std::vector<Mat>& chi) {
    for (int a = 0; a < rank(); ++a) Gamma[a] += chi[a];
    return *this;
  }
};

/// <[e_a, e_b], e_c> over the standard frame.
inline std::vector<Mat> bracket_tensor(const CourantAlgebroid& E) {
  int R = E.rank();
  std::vector<Mat> B(R, Mat::Zero(R, R));
  const Mat& P = E.pairing_matrix();
  for (int a = 0; a < R; ++a)
    for (int b = 0; b < R; ++b) {
      Section br = E.dorfman(Section(Vec::Unit(R, a)), Section(Vec::Unit(R, b)));
      B[a].row(b) = (P * br.v).transpose();
    }
  return B;
}

inline double sup3(const std::vector<Mat>& T) {
  double worst = 0.0;
  for (const Mat& m : T) worst = std::max(worst, m.lpNorm<Eigen::Infinity>());
  return worst;
}

/// T_D(e1,e2,e3) = <D_1 e2 - D_2 e1 - [e1,e2], e3> + <D_3 e1, e2>.
inline std::vector<Mat> torsion_tensor(const CourantAlgebroid& E,
                                       const GenConnection& D) {
  auto B = bracket_tensor(E);
  int R = E.rank();
  std::vector<Mat> T(R, Mat::Zero(R, R));
  for (int a = 0; a < R; ++a)
    for (int b = 0; b < R; ++b)
      for (int c = 0; c < R; ++c)
        T[a](b, c) = D.Gamma[a](b, c) - D.Gamma[b](a, c) - B[a](b, c) +
                     D.Gamma[c](a, b);
  return T;
}

/// Alekseev–Xu form: cyclic sum of 1/2<D_1 e2 - D_2 e1, e3> - 1/3<[[e1,e2]],e3>
/// with [[.,.]] the antisymmetrized bracket.
inline std::vector<Mat> torsion_axu(const CourantAlgebroid& E,
                                    const GenConnection& D) {
  auto B = bracket_tensor(E);
  int R = E.rank();
  auto term = [&](int a, int b, int c) {
    return 0.5 * (D.Gamma[a](b, c) - D.Gamma[b](a, c)) -
           (1.0 / 6.0) * (B[a](b, c) - B[b](a, c));
  };
  std::vector<Mat> T(R, Mat::Zero(R, R));
  for (int a = 0; a < R; ++a)
    for (int b = 0; b < R; ++b)
      for (int c = 0; c < R; ++c)
        T[a](b, c) = term(a, b, c) + term(b, c, a) + term(c, a, b);
  return T;
}

/// Riemannian baseline divergence on invariant sections:
/// div0(e) = -tr(ad_{pi(e)}); values over the standard frame.
inline Vec baseline_divergence(const CourantAlgebroid& E) {
  int R = E.rank(), N = E.n();
  Vec d0 = Vec::Zero(R);
  for (int a = 0; a < R; ++a) {
    Vec X = Vec::Unit(R, a).head(N);
    d0[a] = -E.base().ad(X).trace();
  }
  return d0;
}

/// Divergence of D as baseline + offset: div(e) = div0(e) - <eps, e>.
struct DivergenceOperator {
  Vec values;   // div(e_a) over the standard frame
  Section eps;  // offset section
};

inline DivergenceOperator divergence_of(const CourantAlgebroid& E,
                                        const GenConnection& D) {
  int R = E.rank();
  const Mat& Pinv = E.pairing_inverse();
  Vec div(R);
  for (int c = 0; c < R; ++c) {
    double tr = 0.0;
    for (int a = 0; a < R; ++a) tr += (D.Gamma[a].row(c) * Pinv.col(a))(0, 0);
    div[c] = tr;
  }
  Vec d0 = baseline_divergence(E);
  return {div, Section(Vec(Pinv * (d0 - div)))};
}

/// chi^e for a section e: chi^e_{e1}e2 = <e1,e2> e - <e,e2> e1.
inline std::vector<Mat> weyl_tensor(const CourantAlgebroid& E, const Vec& e) {
  int R = E.rank();
  const Mat& P = E.pairing_matrix();
  Vec w = P * e;
  std::vector<Mat> chi(R, Mat::Zero(R, R));
  for (int a = 0; a < R; ++a)
    chi[a] = P.row(a).transpose() * w.transpose() - w * P.row(a);
  return chi;
}

/// Pure-type Weyl element: all three slots projected by Pi (plus or minus).
inline std::vector<Mat> weyl_tensor_pure(const CourantAlgebroid& E,
                                         const Mat& Pi, const Vec& e) {
  int R = E.rank();
  const Mat& P = E.pairing_matrix();
  Mat M = Pi.transpose() * P * Pi;           // <Pi a, Pi b>
  Vec u = Pi.transpose() * P * (Pi * e);     // <Pi e, Pi b>
  std::vector<Mat> chi(R, Mat::Zero(R, R));
  for (int a = 0; a < R; ++a)
    chi[a] = M.row(a).transpose() * u.transpose() - u * M.row(a);
  return chi;
}

/// chi = chi_0 + chi^e with e = (1/(r_E-1)) sum_i chi_{e_i} e~_i.
inline std::pair<std::vector<Mat>, Section> weyl_decompose(
    const CourantAlgebroid& E, const std::vector<Mat>& chi) {
  int R = E.rank();
  if (R <= 1) throw DimensionError("weyl_decompose: rank must exceed 1");
  const Mat& Pinv = E.pairing_inverse();
  Vec cov = Vec::Zero(R);
  for (int c = 0; c < R; ++c)
    for (int i = 0; i < R; ++i)
      for (int b = 0; b < R; ++b) cov[c] += Pinv(b, i) * chi[i](b, c);
  Vec e = Pinv * cov / (R - 1);
  auto chie = weyl_tensor(E, e);
  std::vector<Mat> chi0(R);
  for (int a = 0; a < R; ++a) chi0[a] = chi[a] - chie[a];
  return {chi0, Section(e)};
}

namespace detail {

/// Assembles Gamma on the standard frame from per-direction component
/// matrices A[p](q,r) on the combined basis C = [E+ | E-]:
/// D_{C_p} C_q = sum_r A[p](q,r) C_r.
inline GenConnection assemble_from_frame(const CourantAlgebroid& E, const Mat& C,
                                         const std::vector<Mat>& A) {
  int R = E.rank();
  Mat Cinv = C.inverse();
  Mat CtP = C.transpose() * E.pairing_matrix();
  GenConnection D;
  D.Gamma.assign(R, Mat::Zero(R, R));
  for (int a = 0; a < R; ++a) {
    Mat X = Mat::Zero(R, R);
    for (int p = 0; p < R; ++p)
      if (Cinv(p, a) != 0.0) X += Cinv(p, a) * (A[p] * CtP);
    D.Gamma[a] = Cinv.transpose() * X;
  }
  return D;
}

/// Mixed-type canonical operators plus a caller-supplied pure-type seed:
/// chrisP on the plus frame, chrisM on the base part of the minus frame,
/// zero on the fiber part.
inline GenConnection seed_connection(const CourantAlgebroid& E,
                                     const GeneralizedMetric& V,
                                     const std::vector<Mat>& chrisP,
                                     const std::vector<Mat>& chrisM) {
  int R = E.rank(), N = E.n(), dk = E.fiber_dim();
  Mat C(R, R);
  C.leftCols(N) = V.frame_plus();
  C.rightCols(N + dk) = V.frame_minus();
  Mat Cinv = C.inverse();
  std::vector<Mat> A(R, Mat::Zero(R, R));
  for (int p = 0; p < R; ++p) {
    bool p_plus = p < N;
    for (int q = 0; q < R; ++q) {
      bool q_plus = q < N;
      if (p_plus == q_plus) {
        // pure type: lifted base connection, zero on fiber directions
        if (p_plus)
          A[p].row(q).head(N) = chrisP[p].row(q);
        else if (p - N < N && q - N < N)
          A[p].row(q).segment(N, N) = chrisM[p - N].row(q - N);
      } else {
        // canonical mixed type: D_{a^-} b^+ = Pi_+ [a^-, b^+] and vice versa
        Section br = E.dorfman(Section(Vec(C.col(p))), Section(Vec(C.col(q))));
        const Mat& Pi = q_plus ? V.proj_plus() : V.proj_minus();
        A[p].row(q) = (Cinv * (Pi * br.v)).transpose();
      }
    }
  }
  return assemble_from_frame(E, C, A);
}

}  // namespace detail

/// Gualtieri–Bismut connection (exact case): lifts of nabla^{+-} with the
/// canonical mixed parts; torsion is pure-type, pi_+^*H' + pi_-^*H' for the
/// splitting flux H' = H + d b^form.
inline GenConnection gualtieri_bismut(const CourantAlgebroid& E,
                                      const GeneralizedMetric& V) {
  if (E.transitive())
    throw DimensionError("gualtieri_bismut: exact variant only");
  KForm Heff = E.H() + ce_d(E.base(), V.b_form(E.n()));
  auto chrisP = torsion_connection(E.base(), V.g(), Heff, 0.5);
  auto chrisM = torsion_connection(E.base(), V.g(), Heff, -0.5);
  return detail::seed_connection(E, V, chrisP, chrisM);
}

/// Torsion-free V+-compatible connection with prescribed divergence offset:
/// seed -> kill torsion -> pure-type Weyl correction matching eps.
inline GenConnection levi_civita(const CourantAlgebroid& E,
                                 const GeneralizedMetric& V,
                                 const Section& eps) {
  int R = E.rank();
  if (V.rank_plus() <= 1 || V.rank_minus() <= 1)
    throw DimensionError("levi_civita: ranks r_+- must exceed 1");
  auto chris = levi_civita_base(E.base(), V.g());
  GenConnection D = detail::seed_connection(E, V, chris, chris);

  auto T = torsion_tensor(E, D);
  for (int a = 0; a < R; ++a) D.Gamma[a] -= T[a] / 3.0;

  Section eps1 = divergence_of(E, D).eps;
  Vec delta = eps.v - eps1.v;
  Vec wp = (V.proj_plus() * delta) / (V.rank_plus() - 1);
  Vec wm = (V.proj_minus() * delta) / (V.rank_minus() - 1);
  D += weyl_tensor_pure(E, V.proj_plus(), wp);
  D += weyl_tensor_pure(E, V.proj_minus(), wm);
  return D;
}

/// Embeds a base 1-form phi as the section phi^+ + phi^-  (pi(eps) = 0,
/// i.e. eps = (0, 0, phi) in the standard frame), matching div^phi.
inline Section dilaton_section(const CourantAlgebroid& E, const Vec& phi) {
  Section s(E.n(), E.fiber_dim());
  s.v.tail(E.n()) = phi;
  return s;
}

}  // namespace gg
