#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gg/tduality.hpp"

namespace gg {

struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Numeric literal of the instance format: a JSON number, or a rational
/// string "p/q" parsed exactly before lowering to double.
inline double spec_number(const nlohmann::json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string())
    throw SpecError(where + ": expected a number or rational string");
  const std::string s = j.get<std::string>();
  size_t slash = s.find('/');
  try {
    if (slash == std::string::npos) return std::stod(s);
    double p = std::stod(s.substr(0, slash));
    double q = std::stod(s.substr(slash + 1));
    if (q == 0.0) throw SpecError(where + ": zero denominator in '" + s + "'");
    return p / q;
  } catch (const std::invalid_argument&) {
    throw SpecError(where + ": cannot parse '" + s + "'");
  }
}

/// Minimal expression grammar for grid field samples: numbers, x, pi,
/// + - * / and parentheses, sin/cos/exp/log/sqrt.
class ExprParser {
 public:
  explicit ExprParser(std::string src) : s_(std::move(src)) {}

  std::function<double(double)> parse() {
    auto f = sum();
    skip();
    if (pos_ != s_.size())
      throw SpecError("grid expression: trailing input at '" +
                      s_.substr(pos_) + "'");
    return f;
  }

 private:
  using Fn = std::function<double(double)>;

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Fn sum() {
    Fn left = product();
    for (;;) {
      if (eat('+')) {
        Fn r = product();
        left = [left, r](double x) { return left(x) + r(x); };
      } else if (eat('-')) {
        Fn r = product();
        left = [left, r](double x) { return left(x) - r(x); };
      } else {
        return left;
      }
    }
  }

  Fn product() {
    Fn left = atom();
    for (;;) {
      if (eat('*')) {
        Fn r = atom();
        left = [left, r](double x) { return left(x) * r(x); };
      } else if (eat('/')) {
        Fn r = atom();
        left = [left, r](double x) { return left(x) / r(x); };
      } else {
        return left;
      }
    }
  }

  Fn atom() {
    skip();
    if (eat('-')) {
      Fn a = atom();
      return [a](double x) { return -a(x); };
    }
    if (eat('(')) {
      Fn a = sum();
      if (!eat(')')) throw SpecError("grid expression: missing ')'");
      return a;
    }
    if (pos_ < s_.size() &&
        (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
      size_t used = 0;
      double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      return [v](double) { return v; };
    }
    size_t start = pos_;
    while (pos_ < s_.size() &&
           std::isalpha(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    std::string word = s_.substr(start, pos_ - start);
    if (word == "x") return [](double x) { return x; };
    if (word == "pi") return [](double) { return M_PI; };
    static const std::map<std::string, double (*)(double)> fns = {
        {"sin", std::sin}, {"cos", std::cos},  {"exp", std::exp},
        {"log", std::log}, {"sqrt", std::sqrt}};
    auto it = fns.find(word);
    if (it == fns.end())
      throw SpecError("grid expression: unknown token '" + word + "'");
    if (!eat('(')) throw SpecError("grid expression: '" + word + "' needs '('");
    Fn a = sum();
    if (!eat(')')) throw SpecError("grid expression: missing ')'");
    auto fn = it->second;
    return [fn, a](double x) { return fn(a(x)); };
  }

  std::string s_;
  size_t pos_ = 0;
};

/// Grid field: either an expression string sampled at the grid points or an
/// explicit array taken bit-exactly.
inline Vec grid_field(const nlohmann::json& j, int N, double length,
                      const std::string& where) {
  if (j.is_string()) {
    auto f = ExprParser(j.get<std::string>()).parse();
    Vec out(N);
    for (int i = 0; i < N; ++i) out[i] = f(length * i / N);
    return out;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != N)
    throw SpecError(where + ": expected an expression or " +
                    std::to_string(N) + " samples");
  Vec out(N);
  for (int i = 0; i < N; ++i) out[i] = spec_number(j[i], where);
  return out;
}

inline Mat spec_matrix(const nlohmann::json& j, int rows, int cols,
                       const std::string& where) {
  if (j.is_string() && j.get<std::string>() == "identity") {
    if (rows != cols) throw SpecError(where + ": identity needs square shape");
    return Mat::Identity(rows, cols);
  }
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw SpecError(where + ": expected " + std::to_string(rows) + " rows");
  Mat out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
      throw SpecError(where + ": row " + std::to_string(i + 1) + " needs " +
                      std::to_string(cols) + " entries");
    for (int k = 0; k < cols; ++k) out(i, k) = spec_number(j[i][k], where);
  }
  return out;
}

/// k-form from rows [i_1, ..., i_k, value] with 1-based indices.
inline KForm spec_form(const nlohmann::json& j, int n, int k,
                       const std::string& where) {
  KForm out(n, k);
  if (j.is_null()) return out;
  if (!j.is_array()) throw SpecError(where + ": expected an array of rows");
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != k + 1)
      throw SpecError(where + ": rows must be [indices..., value]");
    std::vector<int> idx(k);
    for (int p = 0; p < k; ++p) {
      idx[p] = row[p].get<int>() - 1;
      if (idx[p] < 0 || idx[p] >= n)
        throw SpecError(where + ": index out of range 1.." + std::to_string(n));
    }
    out.set(idx, out.get(idx) + spec_number(row[k], where));
  }
  return out;
}

}  // namespace detail

struct RunParams {
  double t_end = 1.0;
  double dt = 1e-3;
  Scheme scheme = Scheme::RK4;
  int fiber = -1;  // 0-based dualization direction, -1 = unset
  double tol = 1e-9;
};

/// One instance document: algebra + algebroid + metric data + optional
/// divergence/spinor/grid sections and run parameters.
struct InstanceSpec {
  std::string name = "instance";
  LieAlgebra algebra;
  KForm H;
  std::optional<QuadraticFiber> fiber;
  std::vector<KForm> F;
  Mat g, b, a;
  Vec dilaton;                     // 1-form coefficients of phi
  std::optional<Vec> eps_direct;   // full section components, if given
  std::optional<Mat> J;
  std::optional<KForm> omega_re, omega_im;
  std::optional<CVec> eta;
  std::optional<FiberedGridModel> grid;
  RunParams run;

  CourantAlgebroid courant() const {
    if (fiber) return CourantAlgebroid(algebra, *fiber, F, H);
    return CourantAlgebroid(algebra, H);
  }

  Section epsilon(const CourantAlgebroid& E) const {
    if (eps_direct) {
      if (eps_direct->size() != E.rank())
        throw SpecError("divergence: epsilon has wrong rank");
      return Section(*eps_direct);
    }
    return dilaton_section(E, dilaton);
  }
};

inline InstanceSpec load_spec_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("algebra"))
    throw SpecError("spec: missing 'algebra' section");
  const auto& alg = doc["algebra"];
  int n = alg.value("dim", 0);
  if (n <= 0) throw SpecError("algebra: 'dim' must be a positive integer");

  InstanceSpec out;
  out.name = doc.value("name", std::string("instance"));
  out.algebra = LieAlgebra(n, out.name);

  // brackets: rows [i, j, k, value], 1-based; both orientations may appear
  // but must be consistently antisymmetric
  std::map<std::array<int, 3>, double> coeff;
  for (const auto& row : alg.value("brackets", nlohmann::json::array())) {
    if (!row.is_array() || row.size() != 4)
      throw SpecError("algebra.brackets: rows must be [i, j, k, value]");
    int i = row[0].get<int>() - 1, j = row[1].get<int>() - 1,
        k = row[2].get<int>() - 1;
    for (int v : {i, j, k})
      if (v < 0 || v >= n)
        throw SpecError("algebra.brackets: index out of range 1.." +
                        std::to_string(n));
    double v = detail::spec_number(row[3], "algebra.brackets");
    if (i == j && v != 0.0)
      throw SpecError("algebra.brackets: c^" + std::to_string(k + 1) + "_{" +
                      std::to_string(i + 1) + std::to_string(j + 1) +
                      "} must vanish on the diagonal");
    double sign = (i < j) ? 1.0 : -1.0;
    std::array<int, 3> key{std::min(i, j), std::max(i, j), k};
    auto it = coeff.find(key);
    if (it == coeff.end()) {
      coeff[key] = sign * v;
    } else if (it->second != sign * v) {
      throw SpecError("algebra.brackets: c^" + std::to_string(k + 1) + "_{" +
                      std::to_string(i + 1) + std::to_string(j + 1) +
                      "} conflicts with the opposite orientation");
    }
  }
  for (const auto& [key, v] : coeff)
    if (v != 0.0) out.algebra.add_bracket(key[0], key[1], key[2], v);

  const auto null = nlohmann::json();
  const auto& cour = doc.contains("courant") ? doc["courant"] : null;
  out.H = detail::spec_form(cour.is_object() ? cour.value("H", null) : null, n,
                            3, "courant.H");
  std::string variant =
      cour.is_object() ? cour.value("variant", std::string("exact")) : "exact";
  if (variant == "transitive") {
    if (!cour.contains("fiber"))
      throw SpecError("courant: transitive variant needs a 'fiber' section");
    const auto& fib = cour["fiber"];
    int dk = fib.value("dim", 0);
    if (dk <= 0) throw SpecError("courant.fiber: 'dim' must be positive");
    LieAlgebra k(dk, out.name + "-fiber");
    for (const auto& row : fib.value("brackets", nlohmann::json::array())) {
      if (!row.is_array() || row.size() != 4)
        throw SpecError("courant.fiber.brackets: rows must be [i, j, k, value]");
      k.add_bracket(row[0].get<int>() - 1, row[1].get<int>() - 1,
                    row[2].get<int>() - 1,
                    detail::spec_number(row[3], "courant.fiber.brackets"));
    }
    Mat c = fib.contains("c") ? detail::spec_matrix(fib["c"], dk, dk,
                                                    "courant.fiber.c")
                              : Mat(Mat::Identity(dk, dk));
    out.fiber = QuadraticFiber(std::move(k), std::move(c));
    out.F.assign(dk, KForm(n, 2));
    if (cour.contains("F")) {
      const auto& Fj = cour["F"];
      if (!Fj.is_array() || static_cast<int>(Fj.size()) != dk)
        throw SpecError("courant.F: one 2-form per fiber axis required");
      for (int a = 0; a < dk; ++a)
        out.F[a] = detail::spec_form(Fj[a], n, 2, "courant.F");
    }
  } else if (variant != "exact") {
    throw SpecError("courant.variant: must be 'exact' or 'transitive'");
  }

  const auto& met = doc.contains("metric") ? doc["metric"] : null;
  out.g = met.is_object() && met.contains("g")
              ? detail::spec_matrix(met["g"], n, n, "metric.g")
              : Mat(Mat::Identity(n, n));
  out.b = Mat::Zero(n, n);
  if (met.is_object() && met.contains("b")) {
    KForm bf = detail::spec_form(met["b"], n, 2, "metric.b");
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        out.b(j, i) = bf.get({i, j});
        out.b(i, j) = -bf.get({i, j});
      }
  }
  if (out.fiber) {
    out.a = Mat::Zero(out.fiber->dim(), n);
    if (met.is_object() && met.contains("a"))
      out.a = detail::spec_matrix(met["a"], out.fiber->dim(), n, "metric.a");
  } else {
    out.a = Mat();
  }

  out.dilaton = Vec::Zero(n);
  if (doc.contains("divergence")) {
    const auto& dv = doc["divergence"];
    if (dv.contains("dilaton_form")) {
      KForm ph = detail::spec_form(dv["dilaton_form"], n, 1,
                                   "divergence.dilaton_form");
      out.dilaton = ph.coeffs();
    }
    if (dv.contains("epsilon")) {
      const auto& ev = dv["epsilon"];
      Vec e(ev.size());
      for (size_t i = 0; i < ev.size(); ++i)
        e[i] = detail::spec_number(ev[i], "divergence.epsilon");
      out.eps_direct = e;
    }
  }

  if (doc.contains("spinor")) {
    const auto& sp = doc["spinor"];
    if (sp.contains("J"))
      out.J = detail::spec_matrix(sp["J"], n, n, "spinor.J");
    if (sp.contains("Omega_re"))
      out.omega_re = detail::spec_form(sp["Omega_re"], n, 3, "spinor.Omega_re");
    if (sp.contains("Omega_im"))
      out.omega_im = detail::spec_form(sp["Omega_im"], n, 3, "spinor.Omega_im");
    if (sp.contains("eta")) {
      const auto& ev = sp["eta"];
      CVec eta(ev.size());
      for (size_t i = 0; i < ev.size(); ++i)
        eta[i] = detail::spec_number(ev[i], "spinor.eta");
      out.eta = eta;
    }
  }

  if (doc.contains("grid")) {
    const auto& gr = doc["grid"];
    FiberedGridModel m;
    m.N = gr.value("N", 0);
    if (m.N <= 0) throw SpecError("grid: 'N' must be a positive integer");
    m.length = gr.contains("length")
                   ? detail::spec_number(gr["length"], "grid.length")
                   : 2.0 * M_PI;
    m.flux0 = gr.contains("flux0")
                  ? detail::spec_number(gr["flux0"], "grid.flux0")
                  : 0.0;
    auto field = [&](const char* key, double fallback) {
      if (gr.contains(key))
        return detail::grid_field(gr[key], m.N, m.length,
                                  std::string("grid.") + key);
      return Vec(Vec::Constant(m.N, fallback));
    };
    m.gx = field("gx", 1.0);
    m.gbar = field("gbar", 1.0);
    m.h = field("h", 1.0);
    m.A = field("A", 0.0);
    m.B = field("B", 0.0);
    m.phi = field("phi", 0.0);
    m.validate();
    out.grid = m;
  }

  if (doc.contains("run")) {
    const auto& rn = doc["run"];
    if (rn.contains("t_end"))
      out.run.t_end = detail::spec_number(rn["t_end"], "run.t_end");
    if (rn.contains("dt")) out.run.dt = detail::spec_number(rn["dt"], "run.dt");
    if (rn.contains("tol"))
      out.run.tol = detail::spec_number(rn["tol"], "run.tol");
    if (rn.contains("fiber")) out.run.fiber = rn["fiber"].get<int>() - 1;
    if (rn.contains("scheme")) {
      std::string s = rn["scheme"].get<std::string>();
      if (s == "euler")
        out.run.scheme = Scheme::Euler;
      else if (s == "rk4")
        out.run.scheme = Scheme::RK4;
      else
        throw SpecError("run.scheme: must be 'rk4' or 'euler'");
    }
  }
  return out;
}

inline InstanceSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError(path + ": " + e.what());
  }
  return load_spec_json(doc);
}

}  // namespace gg
