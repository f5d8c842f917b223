#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gg/core.hpp"

namespace gg {

/// A finite-dimensional real Lie algebra given by structure constants on a
/// fixed frame e_1..e_n:  [e_i, e_j] = sum_k c^k_{ij} e_k.
class LieAlgebra {
 public:
  LieAlgebra() = default;

  explicit LieAlgebra(int dim, std::string name = {})
      : n_(dim), name_(std::move(name)), c_(dim, Mat::Zero(dim, dim)) {
    if (dim <= 0) throw DimensionError("LieAlgebra: dim must be positive");
  }

  int dim() const { return n_; }
  const std::string& name() const { return name_; }

  /// Sets [e_i, e_j] += v e_k together with the antisymmetric partner.
  void add_bracket(int i, int j, int k, double v) {
    check_index(i);
    check_index(j);
    check_index(k);
    c_[k](i, j) += v;
    c_[k](j, i) -= v;
  }

  double c(int k, int i, int j) const { return c_[k](i, j); }

  /// [x, y] in frame components.
  Vec bracket(const Vec& x, const Vec& y) const {
    Vec out = Vec::Zero(n_);
    for (int k = 0; k < n_; ++k) out[k] = x.dot(c_[k] * y);
    return out;
  }

  /// Matrix of ad_x: y -> [x,y].
  Mat ad(const Vec& x) const {
    Mat out(n_, n_);
    for (int k = 0; k < n_; ++k) out.row(k) = x.transpose() * c_[k];
    return out;
  }

  double trace_ad(const Vec& x) const { return ad(x).trace(); }

  bool unimodular(double tol = kDefaultTol) const {
    for (int i = 0; i < n_; ++i)
      if (std::abs(trace_ad(Vec::Unit(n_, i))) > tol) return false;
    return true;
  }

  /// Sup-norm of the Jacobi defect over all frame triples.
  double jacobi_residual() const {
    double worst = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j)
        for (int k = j + 1; k < n_; ++k) {
          Vec ei = Vec::Unit(n_, i), ej = Vec::Unit(n_, j), ek = Vec::Unit(n_, k);
          Vec defect = bracket(bracket(ei, ej), ek) +
                       bracket(bracket(ej, ek), ei) +
                       bracket(bracket(ek, ei), ej);
          worst = std::max(worst, defect.lpNorm<Eigen::Infinity>());
        }
    return worst;
  }

  /// Change of frame e'_a = sum_i S(i,a) e_i; returns the algebra expressed
  /// on the primed frame.
  LieAlgebra change_frame(const Mat& S) const {
    LieAlgebra out(n_, name_);
    Mat Sinv = S.inverse();
    for (int a = 0; a < n_; ++a)
      for (int b = a + 1; b < n_; ++b) {
        Vec br = bracket(S.col(a), S.col(b));
        Vec comp = Sinv * br;
        for (int k = 0; k < n_; ++k)
          if (comp[k] != 0.0) out.add_bracket(a, b, k, comp[k]);
      }
    return out;
  }

 private:
  void check_index(int i) const {
    if (i < 0 || i >= n_) throw DimensionError("LieAlgebra: index out of range");
  }

  int n_ = 0;
  std::string name_;
  std::vector<Mat> c_;  // c_[k](i,j) = c^k_{ij}
};

/// Invariant k-form stored on strictly increasing multi-indices.
class KForm {
 public:
  KForm() = default;

  // degrees above n are allowed and identically zero (empty coefficient set)
  KForm(int n, int k) : n_(n), k_(k), c_(Vec::Zero(binom(n, k))) {
    if (k < 0) throw RankError("KForm: negative degree");
  }

  int n() const { return n_; }
  int degree() const { return k_; }
  const Vec& coeffs() const { return c_; }
  Vec& coeffs() { return c_; }

  /// Lexicographic rank of a strictly increasing tuple.
  static int rank_of(int n, const std::vector<int>& inc) {
    int k = static_cast<int>(inc.size());
    int r = 0, prev = -1;
    for (int p = 0; p < k; ++p) {
      for (int v = prev + 1; v < inc[p]; ++v) r += binom(n - 1 - v, k - 1 - p);
      prev = inc[p];
    }
    return r;
  }

  double get(std::vector<int> idx) const {
    int s = sort_sign(idx);
    if (s == 0) return 0.0;
    return s * c_[rank_of(n_, idx)];
  }

  void add(std::vector<int> idx, double v) {
    int s = sort_sign(idx);
    if (s == 0) return;
    c_[rank_of(n_, idx)] += s * v;
  }

  void set(std::vector<int> idx, double v) {
    int s = sort_sign(idx);
    if (s == 0) throw RankError("KForm::set: repeated index");
    c_[rank_of(n_, idx)] = s * v;
  }

  double sup_norm() const {
    return c_.size() ? c_.lpNorm<Eigen::Infinity>() : 0.0;
  }

  KForm& operator+=(const KForm& o) {
    c_ += o.c_;
    return *this;
  }
  KForm& operator-=(const KForm& o) {
    c_ -= o.c_;
    return *this;
  }
  KForm& operator*=(double s) {
    c_ *= s;
    return *this;
  }
  friend KForm operator+(KForm a, const KForm& b) { return a += b; }
  friend KForm operator-(KForm a, const KForm& b) { return a -= b; }
  friend KForm operator*(double s, KForm a) { return a *= s; }

  /// Interior product with the frame vector of components x.
  KForm contract(const Vec& x) const {
    if (k_ == 0) throw RankError("KForm::contract: degree 0");
    KForm out(n_, k_ - 1);
    auto tuples = increasing_tuples(n_, k_ - 1);
    for (size_t t = 0; t < tuples.size(); ++t) {
      double v = 0.0;
      for (int i = 0; i < n_; ++i) {
        if (x[i] == 0.0) continue;
        std::vector<int> full = tuples[t];
        full.insert(full.begin(), i);
        v += x[i] * get(full);
      }
      out.c_[t] = v;
    }
    return out;
  }

  KForm wedge(const KForm& o) const {
    KForm out(n_, k_ + o.k_);
    auto a = increasing_tuples(n_, k_);
    auto b = increasing_tuples(n_, o.k_);
    for (size_t s = 0; s < a.size(); ++s) {
      if (c_[s] == 0.0) continue;
      for (size_t t = 0; t < b.size(); ++t) {
        if (o.c_[t] == 0.0) continue;
        std::vector<int> idx = a[s];
        idx.insert(idx.end(), b[t].begin(), b[t].end());
        out.add(idx, c_[s] * o.c_[t]);
      }
    }
    return out;
  }

  /// Pullback along the frame change e'_a = sum_i S(i,a) e_i (i.e. the form
  /// evaluated on primed frame vectors).
  KForm transform(const Mat& S) const {
    KForm out(n_, k_);
    auto tuples = increasing_tuples(n_, k_);
    for (size_t t = 0; t < tuples.size(); ++t) {
      const auto& A = tuples[t];
      double v = 0.0;
      for (size_t s = 0; s < tuples.size(); ++s) {
        if (c_[s] == 0.0) continue;
        const auto& I = tuples[s];
        // minor of S on rows I, columns A
        Mat m(k_, k_);
        for (int p = 0; p < k_; ++p)
          for (int q = 0; q < k_; ++q) m(p, q) = S(I[p], A[q]);
        v += c_[s] * m.determinant();
      }
      out.c_[t] = v;
    }
    return out;
  }

 private:
  int n_ = 0, k_ = 0;
  Vec c_;
};

/// Chevalley-Eilenberg differential of an invariant form. Convention:
/// d xi(X, Y) = -xi([X, Y]) on 1-forms, extended as an antiderivation.
inline KForm ce_d(const LieAlgebra& L, const KForm& a) {
  int n = L.dim(), k = a.degree();
  if (n != a.n()) throw DimensionError("ce_d: algebra/form mismatch");
  KForm out(n, k + 1);
  if (k + 1 > n) return out;
  auto tuples = increasing_tuples(n, k + 1);
  for (size_t t = 0; t < tuples.size(); ++t) {
    const auto& I = tuples[t];
    double v = 0.0;
    for (int p = 0; p <= k; ++p)
      for (int q = p + 1; q <= k; ++q) {
        Vec br = L.bracket(Vec::Unit(n, I[p]), Vec::Unit(n, I[q]));
        std::vector<int> rest;
        for (int r = 0; r <= k; ++r)
          if (r != p && r != q) rest.push_back(I[r]);
        double term = 0.0;
        for (int m = 0; m < n; ++m) {
          if (br[m] == 0.0) continue;
          std::vector<int> idx = rest;
          idx.insert(idx.begin(), m);
          term += br[m] * a.get(idx);
        }
        v += ((p + q) % 2 ? -1.0 : 1.0) * term;
      }
    out.coeffs()[t] = v;
  }
  return out;
}

/// Frame metric with cached inverse, volume factor and an orthonormalizing
/// frame change S (S^T g S = 1).
class FrameMetric {
 public:
  FrameMetric() = default;

  explicit FrameMetric(Mat g) : g_(std::move(g)) {
    if (g_.rows() != g_.cols()) throw DimensionError("FrameMetric: not square");
    if ((g_ - g_.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * (1 + g_.norm()))
      throw DimensionError("FrameMetric: not symmetric");
    g_ = Mat(0.5 * (g_ + Mat(g_.transpose())));
    Eigen::FullPivLU<Mat> lu(g_);
    if (!lu.isInvertible()) throw DimensionError("FrameMetric: degenerate");
    ginv_ = lu.inverse();
    Eigen::SelfAdjointEigenSolver<Mat> es(g_);
    riemannian_ = es.eigenvalues().minCoeff() > 0.0;
    if (riemannian_) {
      Eigen::LLT<Mat> llt(g_);
      Mat L = llt.matrixL();
      ortho_ = L.transpose().inverse();  // S = L^{-T}
      volume_ = std::sqrt(g_.determinant());
    }
  }

  int n() const { return static_cast<int>(g_.rows()); }
  const Mat& m() const { return g_; }
  const Mat& inv() const { return ginv_; }
  bool riemannian() const { return riemannian_; }
  double volume_factor() const { return volume_; }

  /// Orthonormalizing frame change: f_a = sum_i S(i,a) e_i, g(f_a,f_b)=delta.
  const Mat& ortho() const {
    if (!riemannian_) throw DimensionError("FrameMetric: not Riemannian");
    return ortho_;
  }

 private:
  Mat g_, ginv_, ortho_;
  double volume_ = 0.0;
  bool riemannian_ = false;
};

/// Hodge star on invariant forms; orientation e^1 ^ ... ^ e^n positive.
inline KForm hodge_star(const FrameMetric& g, const KForm& a) {
  int n = a.n(), k = a.degree();
  const Mat& S = g.ortho();
  KForm af = a.transform(S);  // components on the orthonormal coframe
  KForm sf(n, n - k);
  auto tuples = increasing_tuples(n, k);
  std::vector<bool> taken(n);
  for (size_t t = 0; t < tuples.size(); ++t) {
    if (af.coeffs()[t] == 0.0) continue;
    const auto& I = tuples[t];
    std::fill(taken.begin(), taken.end(), false);
    for (int i : I) taken[i] = true;
    std::vector<int> comp;
    for (int i = 0; i < n; ++i)
      if (!taken[i]) comp.push_back(i);
    // sign of the permutation (I, comp) of (0..n-1)
    std::vector<int> perm = I;
    perm.insert(perm.end(), comp.begin(), comp.end());
    int sgn = sort_sign(perm);
    sf.add(comp, sgn * af.coeffs()[t]);
  }
  if (S.determinant() < 0) sf *= -1.0;
  // back to the original coframe
  return sf.transform(S.inverse());
}

/// Codifferential d^* = (-1)^{n(k+1)+1} * d * on invariant k-forms.
inline KForm hodge_codiff(const LieAlgebra& L, const FrameMetric& g,
                          const KForm& a, int orientation = +1) {
  int n = a.n(), k = a.degree();
  if (k < 1) throw RankError("hodge_codiff: degree must be >= 1");
  KForm out = hodge_star(g, ce_d(L, hodge_star(g, a)));
  double sgn = ((n * (k + 1) + 1) % 2 ? -1.0 : 1.0) * orientation;
  out *= sgn;
  return out;
}

/// Frame inner product of k-forms, <e^I, e^J>_g with orthonormal weight 1.
inline double form_inner(const FrameMetric& g, const KForm& a, const KForm& b) {
  const Mat& S = g.ortho();
  return a.transform(S).coeffs().dot(b.transform(S).coeffs());
}

/// (H o H)_{ij} = g^{rs} g^{kl} H_{irk} H_{jsl} for a 3-form H.
inline Mat h_circ_h(const FrameMetric& g, const KForm& H) {
  int n = H.n();
  if (H.degree() != 3) throw RankError("h_circ_h: need a 3-form");
  const Mat& gi = g.inv();
  Mat out = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double v = 0.0;
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          if (gi(r, s) == 0.0) continue;
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              if (gi(k, l) == 0.0) continue;
              v += gi(r, s) * gi(k, l) * H.get({i, r, k}) * H.get({j, s, l});
            }
        }
      out(i, j) = v;
      out(j, i) = v;
    }
  return out;
}

/// |H|^2 = g^{ij} g^{kl} g^{st} H_{iks} H_{jlt} / 6.
inline double h_norm2(const FrameMetric& g, const KForm& H) {
  const Mat& gi = g.inv();
  Mat hh = h_circ_h(g, H);
  // g^{ij} (H o H)_{ij} = 6 |H|^2 by the contraction convention
  return (gi.cwiseProduct(hh)).sum() / 6.0;
}

/// Invariant Levi-Civita connection of g via the Koszul formula; returns
/// chris[i](j,k) with nabla_{e_i} e_j = sum_k chris[i](j,k) e_k.
inline std::vector<Mat> levi_civita_base(const LieAlgebra& L,
                                         const FrameMetric& g) {
  int n = L.dim();
  std::vector<Mat> chris(n, Mat::Zero(n, n));
  const Mat& G = g.m();
  for (int i = 0; i < n; ++i) {
    Vec ei = Vec::Unit(n, i);
    for (int j = 0; j < n; ++j) {
      Vec ej = Vec::Unit(n, j);
      Vec rhs(n);
      for (int l = 0; l < n; ++l) {
        Vec el = Vec::Unit(n, l);
        rhs[l] = 0.5 * ((G * L.bracket(ei, ej))(l) -
                        ei.dot(G * L.bracket(ej, el)) +
                        ej.dot(G * L.bracket(el, ei)));
      }
      chris[i].row(j) = (g.inv() * rhs).transpose();
    }
  }
  return chris;
}

/// Metric connection with skew torsion: nabla^g + s g^{-1} H  (s = 1/2 gives
/// the plus connection, s = 1/6 the one-third connection).
inline std::vector<Mat> torsion_connection(const LieAlgebra& L,
                                           const FrameMetric& g, const KForm& H,
                                           double s) {
  std::vector<Mat> chris = levi_civita_base(L, g);
  int n = L.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec h(n);
      for (int l = 0; l < n; ++l) h[l] = H.get({i, j, l});
      chris[i].row(j) += s * (g.inv() * h).transpose();
    }
  return chris;
}

/// Curvature R(e_i, e_j) e_k of a frame connection, as R[i][j](k, l) with
/// value components along e_l.
inline Mat curvature_op(const LieAlgebra& L, const std::vector<Mat>& chris,
                        int i, int j) {
  int n = L.dim();
  // nabla_i as matrix N_i: (N_i)_{lk}... we use row convention
  // (nabla_{e_i} x)^l = sum_j x^j chris[i](j,l)  => matrix A_i = chris[i]^T.
  Mat Ai = chris[i].transpose(), Aj = chris[j].transpose();
  Vec br = L.bracket(Vec::Unit(n, i), Vec::Unit(n, j));
  Mat Abr = Mat::Zero(n, n);
  for (int m = 0; m < n; ++m)
    if (br[m] != 0.0) Abr += br[m] * chris[m].transpose();
  return Ai * Aj - Aj * Ai - Abr;
}

/// Ricci tensor of a frame connection: Ric(j,k) = tr(X -> R(X, e_j) e_k).
inline Mat ricci_base(const LieAlgebra& L, const std::vector<Mat>& chris) {
  int n = L.dim();
  Mat ric = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Mat R = curvature_op(L, chris, i, j);
      for (int k = 0; k < n; ++k) ric(j, k) += R(i, k);
    }
  return ric;
}

/// Covariant derivative of a 1-form: (nabla_i phi)_j = -phi(nabla_{e_i} e_j).
inline Mat covariant_oneform(const std::vector<Mat>& chris, const Vec& phi) {
  int n = phi.size();
  Mat out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = -chris[i].row(j).dot(phi);
  return out;
}

}  // namespace gg
