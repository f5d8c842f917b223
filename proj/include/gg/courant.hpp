#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gg/lie.hpp"

namespace gg {

/// Quadratic Lie algebra (k, c): fiber algebra with an ad-invariant pairing.
struct QuadraticFiber {
  LieAlgebra k;
  Mat c;

  QuadraticFiber() = default;
  QuadraticFiber(LieAlgebra k_, Mat c_) : k(std::move(k_)), c(std::move(c_)) {
    if (c.rows() != k.dim() || c.cols() != k.dim())
      throw DimensionError("QuadraticFiber: pairing size mismatch");
    if ((c - Mat(c.transpose())).lpNorm<Eigen::Infinity>() >
        1e-12 * (1 + c.norm()))
      throw DimensionError("QuadraticFiber: pairing must be symmetric");
    if (!Eigen::FullPivLU<Mat>(c).isInvertible())
      throw DimensionError("QuadraticFiber: pairing must be nondegenerate");
  }

  int dim() const { return k.dim(); }

  /// Max of |c([r,s],t) + c(s,[r,t])| over frame triples.
  double ad_invariance_residual() const {
    int d = k.dim();
    double worst = 0.0;
    for (int r = 0; r < d; ++r)
      for (int s = 0; s < d; ++s)
        for (int t = 0; t < d; ++t) {
          Vec er = Vec::Unit(d, r), es = Vec::Unit(d, s), et = Vec::Unit(d, t);
          double v = k.bracket(er, es).dot(c * et) + es.dot(c * k.bracket(er, et));
          worst = std::max(worst, std::abs(v));
        }
    return worst;
  }
};

/// Invariant section X + r + xi, stored as one stacked vector
/// (X-block, fiber-block, xi-block).
struct Section {
  Vec v;

  Section() = default;
  explicit Section(Vec v_) : v(std::move(v_)) {}
  Section(int n, int dk) : v(Vec::Zero(2 * n + dk)) {}

  int size() const { return static_cast<int>(v.size()); }
};

/// Exact (T + T*, H) or transitive (T + adP + T*, H, F) Courant algebroid
/// on the invariant frame of a Lie algebra, in a fixed isotropic splitting.
class CourantAlgebroid {
 public:
  /// Exact: rank 2n, closed 3-form H.
  CourantAlgebroid(LieAlgebra base, KForm H)
      : base_(std::move(base)), H_(std::move(H)) {
    if (H_.n() != base_.dim() || H_.degree() != 3)
      throw DimensionError("CourantAlgebroid: H must be a 3-form on the base");
    init();
  }

  /// Transitive: rank 2n + d_k, fiber-valued curvature 2-forms F[a].
  CourantAlgebroid(LieAlgebra base, QuadraticFiber fiber, std::vector<KForm> F,
                   KForm H)
      : base_(std::move(base)),
        H_(std::move(H)),
        fiber_(std::move(fiber)),
        F_(std::move(F)) {
    if (static_cast<int>(F_.size()) != fiber_->dim())
      throw DimensionError("CourantAlgebroid: F needs one 2-form per fiber axis");
    for (const KForm& f : F_)
      if (f.n() != base_.dim() || f.degree() != 2)
        throw DimensionError("CourantAlgebroid: F components must be 2-forms");
    init();
  }

  bool transitive() const { return fiber_.has_value(); }
  const LieAlgebra& base() const { return base_; }
  const KForm& H() const { return H_; }
  const QuadraticFiber& fiber() const { return *fiber_; }
  const std::vector<KForm>& F() const { return F_; }

  int n() const { return base_.dim(); }
  int fiber_dim() const { return fiber_ ? fiber_->dim() : 0; }
  int rank() const { return 2 * n() + fiber_dim(); }

  const Mat& pairing_matrix() const { return P_; }
  const Mat& pairing_inverse() const { return Pinv_; }

  double pairing(const Section& a, const Section& b) const {
    check(a);
    check(b);
    return a.v.dot(P_ * b.v);
  }

  Vec anchor(const Section& a) const { return a.v.head(n()); }

  Section make_section(const Vec& X, const Vec& xi) const {
    Section s(n(), fiber_dim());
    s.v.head(n()) = X;
    s.v.tail(n()) = xi;
    return s;
  }

  Section make_section(const Vec& X, const Vec& r, const Vec& xi) const {
    Section s(n(), fiber_dim());
    s.v.head(n()) = X;
    s.v.segment(n(), fiber_dim()) = r;
    s.v.tail(n()) = xi;
    return s;
  }

  /// Dorfman bracket on invariant sections. On constants the Lie derivative
  /// collapses to iota_X d and the d^theta terms drop out.
  Section dorfman(const Section& a, const Section& b) const {
    check(a);
    check(b);
    int N = n(), dk = fiber_dim();
    Vec X = a.v.head(N), Y = b.v.head(N);
    Vec xi = a.v.tail(N), eta = b.v.tail(N);

    Section out(N, dk);
    out.v.head(N) = base_.bracket(X, Y);

    KForm xif(N, 1), etaf(N, 1);
    xif.coeffs() = xi;
    etaf.coeffs() = eta;
    KForm cov = ce_d(base_, etaf).contract(X) - ce_d(base_, xif).contract(Y) +
                H_.contract(X).contract(Y);

    if (dk > 0) {
      Vec r = a.v.segment(N, dk), t = b.v.segment(N, dk);
      out.v.segment(N, dk) = -fiber_->k.bracket(r, t);
      for (int c = 0; c < dk; ++c)
        out.v[N + c] -= F_[c].contract(X).contract(Y).coeffs()[0];
      // + 2c(iota_X F, t) - 2c(iota_Y F, r)
      for (int j = 0; j < N; ++j) {
        double v = 0.0;
        for (int aa = 0; aa < dk; ++aa)
          for (int bb = 0; bb < dk; ++bb) {
            double cab = fiber_->c(aa, bb);
            if (cab == 0.0) continue;
            v += 2.0 * cab *
                 (F_[aa].contract(X).coeffs()[j] * t[bb] -
                  F_[aa].contract(Y).coeffs()[j] * r[bb]);
          }
        cov.coeffs()[j] += v;
      }
    }
    out.v.tail(N) = cov.coeffs();
    return out;
  }

  /// sup-norm of dH - c(F ^ F).
  double bianchi_residual() const {
    if (!transitive())
      throw DimensionError("bianchi_residual: exact variant has no F");
    return (ce_d(base_, H_) - c_f_wedge_f()).sup_norm();
  }

  KForm c_f_wedge_f() const {
    KForm out(n(), 4);
    if (!transitive()) return out;
    int dk = fiber_dim();
    for (int aa = 0; aa < dk; ++aa)
      for (int bb = 0; bb < dk; ++bb) {
        double cab = fiber_->c(aa, bb);
        if (cab != 0.0) out += cab * F_[aa].wedge(F_[bb]);
      }
    return out;
  }

  /// Max residual per axiom over frame triples of invariant basis sections.
  std::map<std::string, double> axioms_residual() const {
    int R = rank();
    std::map<std::string, double> res{
        {"C1", 0.0}, {"C2", 0.0}, {"C3", 0.0}, {"C4", 0.0}, {"C5", 0.0}};
    std::vector<Section> E(R);
    for (int i = 0; i < R; ++i) E[i] = Section(Vec::Unit(R, i));

    for (int i = 0; i < R; ++i) {
      // (C5): [e,e] has pure xi-part (1/2) d<e,e>; constant pairing => 0
      res["C5"] = std::max(res["C5"],
                           dorfman(E[i], E[i]).v.lpNorm<Eigen::Infinity>());
      for (int j = 0; j < R; ++j) {
        Vec c2 = anchor(dorfman(E[i], E[j])) -
                 base_.bracket(anchor(E[i]), anchor(E[j]));
        res["C2"] = std::max(res["C2"], c2.lpNorm<Eigen::Infinity>());
        // (C3) on invariant sections: bilinearity of the assembled bracket
        Section s3 = dorfman(E[i], Section(Vec(2.0 * E[j].v)));
        res["C3"] = std::max(res["C3"], (s3.v - 2.0 * dorfman(E[i], E[j]).v)
                                            .lpNorm<Eigen::Infinity>());
        for (int k = 0; k < R; ++k) {
          Vec c1 = dorfman(E[i], dorfman(E[j], E[k])).v -
                   dorfman(dorfman(E[i], E[j]), E[k]).v -
                   dorfman(E[j], dorfman(E[i], E[k])).v;
          res["C1"] = std::max(res["C1"], c1.lpNorm<Eigen::Infinity>());
          // pi(e1)<e2,e3> = 0 on constants
          double c4 = pairing(dorfman(E[i], E[j]), E[k]) +
                      pairing(E[j], dorfman(E[i], E[k]));
          res["C4"] = std::max(res["C4"], std::abs(c4));
        }
      }
    }
    return res;
  }

 private:
  void init() {
    int N = n(), dk = fiber_dim();
    P_ = Mat::Zero(rank(), rank());
    P_.block(0, N + dk, N, N) = 0.5 * Mat::Identity(N, N);
    P_.block(N + dk, 0, N, N) = 0.5 * Mat::Identity(N, N);
    if (dk > 0) P_.block(N, N, dk, dk) = fiber_->c;
    Pinv_ = P_.inverse();
  }

  void check(const Section& s) const {
    if (s.size() != rank())
      throw DimensionError("CourantAlgebroid: section block mismatch");
  }

  LieAlgebra base_;
  KForm H_;
  std::optional<QuadraticFiber> fiber_;
  std::vector<KForm> F_;
  Mat P_, Pinv_;
};

}  // namespace gg
