#include "rdmsdp/rdm.hpp"

#include "rdmsdp/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace rdmsdp::rdm {

IntegralData IntegralData::zeros(int d, int n) {
  IntegralData out;
  out.d = d;
  out.n = n;
  out.t = Eigen::MatrixXd::Zero(d, d);
  out.v = Tensor4(d);
  return out;
}

void IntegralData::validate(double tol) const {
  if (d <= 0 || d % 2 != 0) throw Error("spin-orbital count d must be positive and even");
  if (n < 1 || n > d) throw Error("electron count must satisfy 1 <= N <= d");
  if (t.rows() != d || t.cols() != d || v.dim() != d) throw ShapeError("integral dimensions do not match d");
  if ((t - t.transpose()).cwiseAbs().maxCoeff() > tol) throw Error("one-electron matrix T is not symmetric");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
          if (std::abs(v(i, j, k, l) - v(k, l, i, j)) > tol)
            throw Error("two-electron tensor violates V_ij,kl = V_kl,ij");
}

int spin_of(int orbital, int d) { return orbital < d / 2 ? 0 : 1; }

bool IntegralData::spin_conserving() const {
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      if (t(a, b) != 0.0 && spin_of(a, d) != spin_of(b, d)) return false;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
          if (v(i, j, k, l) != 0.0 && spin_of(i, d) + spin_of(j, d) != spin_of(k, d) + spin_of(l, d)) return false;
  return true;
}

ConditionSet ConditionSet::parse(const std::string& name) {
  if (name == "pqg") return {false, false};
  if (name == "pqgt1") return {true, false};
  if (name == "pqgt1t2") return {true, true};
  throw Error("unknown condition set '" + name + "' (expected pqg, pqgt1 or pqgt1t2)");
}

std::string ConditionSet::name() const {
  return t2 ? "pqgt1t2" : (t1 ? "pqgt1" : "pqg");
}

int pair_index(int i, int j, int d) {
  if (!(1 <= i && i < j && j <= d)) throw Error("pair_index requires 1 <= i < j <= d");
  return j - i + (2 * d - i) * (i - 1) / 2;
}

namespace {

// 0-based pair number of i < j.
int pair0(int i, int j, int d) { return pair_index(i + 1, j + 1, d) - 1; }

std::vector<std::pair<int, int>> pair_list(int d) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) out.emplace_back(i, j);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

VariableLayout::VariableLayout(int d, bool spin) : d_(d), spin_(spin) {
  if (d <= 0 || d % 2 != 0) throw Error("spin-orbital count d must be positive and even");
  const int np = pairs();
  gamma_map_.assign(static_cast<std::size_t>(d) * d, -1);
  pair_map_.assign(static_cast<std::size_t>(np) * np, -1);
  const auto plist = pair_list(d);
  auto pair_sz = [&](int p) { return spin_of(plist[p].first, d) + spin_of(plist[p].second, d); };
  for (int b = 0; b < d; ++b)
    for (int a = 0; a <= b; ++a) {
      if (spin && spin_of(a, d) != spin_of(b, d)) continue;
      gamma_map_[static_cast<std::size_t>(a) * d + b] = size();
      coords_.push_back({false, a, b});
    }
  for (int q = 0; q < np; ++q)
    for (int p = 0; p <= q; ++p) {
      if (spin && pair_sz(p) != pair_sz(q)) continue;
      pair_map_[static_cast<std::size_t>(p) * np + q] = size();
      coords_.push_back({true, p, q});
    }
}

VariableLayout VariableLayout::full(int d) { return VariableLayout(d, false); }
VariableLayout VariableLayout::spin(int d) { return VariableLayout(d, true); }

int VariableLayout::gamma_var(int a, int b) const {
  if (a > b) std::swap(a, b);
  return gamma_map_[static_cast<std::size_t>(a) * d_ + b];
}

int VariableLayout::pair_var(int p, int q) const {
  if (p > q) std::swap(p, q);
  return pair_map_[static_cast<std::size_t>(p) * pairs() + q];
}

double LinearForm::eval(const Eigen::VectorXd& y) const {
  double acc = constant;
  for (const auto& [k, c] : terms) acc += c * y[k];
  return acc;
}

// ---------------------------------------------------------------------------
// Expectation values of operator strings in terms of gamma and Gamma.

namespace {

struct Op {
  int idx;
  bool dag;
};

class Expr {
 public:
  explicit Expr(const VariableLayout& layout) : layout_(layout) {}

  void add_constant(double c) { constant_ += c; }

  void add_gamma(int a, int b, double c) { one_[{std::min(a, b), std::max(a, b)}] += c; }

  // Gamma_ab,cd = <a_a^+ a_b^+ a_d a_c>
  void add_gamma2(int a, int b, int c, int d, double coef) {
    if (a == b || c == d) return;
    if (a > b) {
      std::swap(a, b);
      coef = -coef;
    }
    if (c > d) {
      std::swap(c, d);
      coef = -coef;
    }
    const int dd = layout_.d();
    int p = pair0(a, b, dd), q = pair0(c, d, dd);
    if (p > q) std::swap(p, q);
    two_[{p, q}] += coef;
  }

  // <product of ops>, reduced by normal ordering.
  void add_string(std::vector<Op> ops, double coef) { normal_order(std::move(ops), coef); }

  LinearForm form() const {
    for (const auto& [key, c] : three_)
      if (std::abs(c) > 1e-12) throw Error("internal: three-body terms did not cancel");
    std::map<int, double> acc;
    const double r2 = std::sqrt(2.0);
    for (const auto& [ab, c] : one_) {
      const int k = layout_.gamma_var(ab.first, ab.second);
      if (k < 0 || c == 0.0) continue;
      acc[k] += ab.first == ab.second ? c : c / r2;
    }
    for (const auto& [pq, c] : two_) {
      const int k = layout_.pair_var(pq.first, pq.second);
      if (k < 0 || c == 0.0) continue;
      acc[k] += pq.first == pq.second ? c : c / r2;
    }
    LinearForm f;
    f.constant = constant_;
    for (const auto& [k, c] : acc)
      if (c != 0.0) f.terms.emplace_back(k, c);
    return f;
  }

 private:
  void normal_order(std::vector<Op> ops, double coef) {
    for (std::size_t k = 0; k + 1 < ops.size(); ++k) {
      if (ops[k].dag || !ops[k + 1].dag) continue;
      // a_p a_q^+ = delta_pq - a_q^+ a_p
      if (ops[k].idx == ops[k + 1].idx) {
        std::vector<Op> contracted;
        contracted.reserve(ops.size() - 2);
        for (std::size_t s = 0; s < ops.size(); ++s)
          if (s != k && s != k + 1) contracted.push_back(ops[s]);
        normal_order(std::move(contracted), coef);
      }
      std::swap(ops[k], ops[k + 1]);
      normal_order(std::move(ops), -coef);
      return;
    }
    record(ops, coef);
  }

  static bool sort_with_sign(std::vector<int>& v, double& coef) {
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t b = 0; b + 1 < v.size() - a; ++b) {
        if (v[b] == v[b + 1]) return false;
        if (v[b] > v[b + 1]) {
          std::swap(v[b], v[b + 1]);
          coef = -coef;
        }
      }
    for (std::size_t b = 0; b + 1 < v.size(); ++b)
      if (v[b] == v[b + 1]) return false;
    return true;
  }

  void record(const std::vector<Op>& ops, double coef) {
    std::vector<int> cre, ann;
    for (const auto& o : ops) (o.dag ? cre : ann).push_back(o.idx);
    if (cre.size() != ann.size()) return;  // changes the particle number
    switch (cre.size()) {
      case 0:
        constant_ += coef;
        return;
      case 1:
        add_gamma(cre[0], ann[0], coef);
        return;
      case 2:
        // <a_c0^+ a_c1^+ a_d0 a_d1> = Gamma_{c0 c1, d1 d0}
        add_gamma2(cre[0], cre[1], ann[1], ann[0], coef);
        return;
      default: {
        if (!sort_with_sign(cre, coef) || !sort_with_sign(ann, coef)) return;
        std::vector<int> key = cre;
        key.insert(key.end(), ann.begin(), ann.end());
        three_[key] += coef;
      }
    }
  }

  const VariableLayout& layout_;
  double constant_ = 0.0;
  std::map<std::pair<int, int>, double> one_;
  std::map<std::pair<int, int>, double> two_;
  std::map<std::vector<int>, double> three_;
};

Op cre(int i) { return {i, true}; }
Op ann(int i) { return {i, false}; }

std::vector<Op> adjoint(const std::vector<Op>& ops) {
  std::vector<Op> out(ops.rbegin(), ops.rend());
  for (auto& o : out) o.dag = !o.dag;
  return out;
}

std::vector<Op> concat(const std::vector<Op>& a, const std::vector<Op>& b) {
  std::vector<Op> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Block with entries <B_u^+ B_v> (gram) or <B_u^+ B_v + B_v B_u^+> (anticommutator).
ConditionBlock block_from_ops(const std::string& label, const std::vector<std::vector<Op>>& basis,
                              bool anticommutator, const VariableLayout& layout) {
  ConditionBlock blk;
  blk.label = label;
  blk.size = static_cast<int>(basis.size());
  blk.constant = Eigen::MatrixXd::Zero(blk.size, blk.size);
  for (int v = 0; v < blk.size; ++v) {
    for (int u = 0; u <= v; ++u) {
      Expr e(layout);
      const auto bu_dag = adjoint(basis[static_cast<std::size_t>(u)]);
      e.add_string(concat(bu_dag, basis[static_cast<std::size_t>(v)]), 1.0);
      if (anticommutator) e.add_string(concat(basis[static_cast<std::size_t>(v)], bu_dag), 1.0);
      const LinearForm f = e.form();
      blk.constant(u, v) = blk.constant(v, u) = f.constant;
      for (const auto& [k, c] : f.terms) blk.entries.push_back({k, 0, u, v, c});
    }
  }
  return blk;
}

}  // namespace

std::vector<ConditionBlock> assemble_conditions(const VariableLayout& layout, const ConditionSet& conditions) {
  const int d = layout.d();
  const auto plist = pair_list(d);
  std::vector<ConditionBlock> out;

  // gamma_ab = <a_a^+ a_b>: basis B_a = a_a.
  std::vector<std::vector<Op>> one;
  for (int a = 0; a < d; ++a) one.push_back({ann(a)});
  out.push_back(block_from_ops("gamma", one, false, layout));
  // (I - gamma)_ab = <a_a a_b^+>: basis B_a = a_a^+.
  std::vector<std::vector<Op>> hole;
  for (int a = 0; a < d; ++a) hole.push_back({cre(a)});
  out.push_back(block_from_ops("I-gamma", hole, false, layout));

  // P_(ij),(kl) = <a_i^+ a_j^+ a_l a_k>: B_(kl) = a_l a_k.
  std::vector<std::vector<Op>> pp, qq;
  for (const auto& [i, j] : plist) {
    pp.push_back({ann(j), ann(i)});
    qq.push_back({cre(i), cre(j)});
  }
  out.push_back(block_from_ops("P", pp, false, layout));
  // Q_(ij),(kl) = <a_j a_i a_k^+ a_l^+>: B_(kl) = a_k^+ a_l^+.
  out.push_back(block_from_ops("Q", qq, false, layout));

  // G_(ij),(kl) = <a_j^+ a_i a_k^+ a_l>: B_(kl) = a_k^+ a_l.
  std::vector<std::vector<Op>> gg;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) gg.push_back({cre(i), ann(j)});
  out.push_back(block_from_ops("G", gg, false, layout));

  if (conditions.t1) {
    // T1 = <{D_u^+, D_v}> with D_(ijk) = a_i a_j a_k.
    std::vector<std::vector<Op>> t1;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        for (int k = j + 1; k < d; ++k) t1.push_back({ann(i), ann(j), ann(k)});
    out.push_back(block_from_ops("T1", t1, true, layout));
  }
  if (conditions.t2) {
    // T2 = <{E_u^+, E_v}> with E_(i,jk) = a_i^+ a_k a_j.
    std::vector<std::vector<Op>> t2;
    for (int i = 0; i < d; ++i)
      for (const auto& [j, k] : plist) t2.push_back({cre(i), ann(k), ann(j)});
    out.push_back(block_from_ops("T2", t2, true, layout));
  }
  return out;
}

Equalities assemble_equalities(const VariableLayout& layout, int n) {
  const int d = layout.d();
  Equalities eq;
  auto push = [&](const Expr& e, const std::string& label) {
    LinearForm f = e.form();
    if (f.terms.empty()) return;
    eq.rows.push_back(std::move(f));
    eq.labels.push_back(label);
  };
  {
    Expr e(layout);
    for (int a = 0; a < d; ++a) e.add_gamma(a, a, 1.0);
    e.add_constant(-static_cast<double>(n));
    push(e, "tr gamma");
  }
  {
    Expr e(layout);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) e.add_gamma2(i, j, i, j, 1.0);
    e.add_constant(-0.5 * n * (n - 1));
    push(e, "tr Gamma");
  }
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i) {
      Expr e(layout);
      for (int k = 0; k < d; ++k) e.add_gamma2(i, k, j, k, 1.0);
      e.add_gamma(i, j, -(n - 1.0));
      push(e, "contraction " + std::to_string(i + 1) + "," + std::to_string(j + 1));
    }
  return eq;
}

Eigen::VectorXd energy_vector(const IntegralData& integrals, const VariableLayout& layout) {
  const int d = layout.d();
  if (integrals.d != d) throw ShapeError("layout and integrals disagree on d");
  Expr e(layout);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      if (integrals.t(a, b) != 0.0) e.add_gamma(a, b, integrals.t(a, b));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
          if (const double v = integrals.v(i, j, k, l); v != 0.0) e.add_gamma2(i, j, k, l, v);
  const LinearForm f = e.form();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(layout.size());
  for (const auto& [k, c] : f.terms) b[k] = c;
  return b;
}

VariableLayout layout_for(const IntegralData& integrals, const BuildOptions& options) {
  return options.spin_layout && integrals.spin_conserving() ? VariableLayout::spin(integrals.d)
                                                            : VariableLayout::full(integrals.d);
}

SdpProblem build_sdp(const IntegralData& integrals, const ConditionSet& conditions, const BuildOptions& options) {
  integrals.validate();
  const VariableLayout layout = layout_for(integrals, options);
  const auto blocks = assemble_conditions(layout, conditions);
  const auto eq = assemble_equalities(layout, integrals.n);

  ConeSpec cone;
  for (const auto& b : blocks) cone.add(BlockKind::Psd, b.size);
  const int q = static_cast<int>(eq.rows.size());
  cone.add(BlockKind::Free, q);

  std::vector<MatrixEntry> entries;
  for (std::size_t j = 0; j < blocks.size(); ++j)
    for (auto e : blocks[j].entries) {
      e.block = static_cast<int>(j);
      entries.push_back(e);
    }
  const int free_block = static_cast<int>(blocks.size());
  for (int r = 0; r < q; ++r)
    for (const auto& [k, c] : eq.rows[static_cast<std::size_t>(r)].terms) entries.push_back({k, free_block, r, r, c});

  SdpProblem p;
  p.cone = cone;
  p.op = ConstraintOperator(cone, layout.size(), std::move(entries));
  p.b = energy_vector(integrals, layout);
  p.c = BlockVec(cone);
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    p.c[j] = -blocks[j].constant;
    p.labels.push_back(blocks[j].label);
  }
  for (int r = 0; r < q; ++r) p.c[static_cast<std::size_t>(free_block)](r, 0) = -eq.rows[static_cast<std::size_t>(r)].constant;
  p.labels.push_back("equalities");
  if (options.detect_structure)
    for (std::size_t j = 0; j < cone.size(); ++j) p.structure.push_back(block_structure(p, j));
  return p;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd point_to_y(const Rdm& rdm, const VariableLayout& layout) {
  const int d = layout.d();
  if (rdm.gamma.rows() != d || rdm.big_gamma.dim() != d) throw ShapeError("density matrix dimensions do not match layout");
  const auto plist = pair_list(d);
  const double r2 = std::sqrt(2.0);
  Eigen::VectorXd y(layout.size());
  for (int k = 0; k < layout.size(); ++k) {
    const auto& c = layout.coords()[static_cast<std::size_t>(k)];
    double val = 0.0;
    if (!c.two_body) {
      val = 0.5 * (rdm.gamma(c.r, c.c) + rdm.gamma(c.c, c.r));
    } else {
      const auto [i, j] = plist[static_cast<std::size_t>(c.r)];
      const auto [kk, l] = plist[static_cast<std::size_t>(c.c)];
      val = 0.5 * (rdm.big_gamma(i, j, kk, l) + rdm.big_gamma(kk, l, i, j));
    }
    y[k] = c.r == c.c ? val : r2 * val;
  }
  return y;
}

Rdm point_from_y(const Eigen::VectorXd& y, const VariableLayout& layout) {
  if (y.size() != layout.size()) throw ShapeError("y does not match the variable layout");
  const int d = layout.d();
  const auto plist = pair_list(d);
  const double r2 = std::sqrt(2.0);
  Rdm out;
  out.gamma = Eigen::MatrixXd::Zero(d, d);
  out.big_gamma = Tensor4(d);
  for (int k = 0; k < layout.size(); ++k) {
    const auto& c = layout.coords()[static_cast<std::size_t>(k)];
    const double val = c.r == c.c ? y[k] : y[k] / r2;
    if (!c.two_body) {
      out.gamma(c.r, c.c) = out.gamma(c.c, c.r) = val;
      continue;
    }
    const auto [i, j] = plist[static_cast<std::size_t>(c.r)];
    const auto [kk, l] = plist[static_cast<std::size_t>(c.c)];
    for (const auto& [a, b, cc, dd] : {std::array{i, j, kk, l}, std::array{kk, l, i, j}}) {
      out.big_gamma(a, b, cc, dd) = val;
      out.big_gamma(b, a, cc, dd) = -val;
      out.big_gamma(a, b, dd, cc) = -val;
      out.big_gamma(b, a, dd, cc) = val;
    }
  }
  return out;
}

double energy(const IntegralData& integrals, const Rdm& rdm) {
  double e = (integrals.t.array() * rdm.gamma.array()).sum();
  const auto& v = integrals.v.data();
  const auto& g = rdm.big_gamma.data();
  for (std::size_t k = 0; k < v.size(); ++k) e += v[k] * g[k];
  return e;
}

double RepresentabilityReport::min_eigenvalue() const {
  return lambda_min.empty() ? 0.0 : *std::min_element(lambda_min.begin(), lambda_min.end());
}

double RepresentabilityReport::max_equality_residual() const {
  return equality_residuals.empty() ? 0.0 : *std::max_element(equality_residuals.begin(), equality_residuals.end());
}

RepresentabilityReport verify_representable(const Rdm& rdm, int d, int n, const ConditionSet& conditions) {
  const VariableLayout layout = VariableLayout::full(d);
  const Eigen::VectorXd y = point_to_y(rdm, layout);
  RepresentabilityReport rep;
  for (const auto& blk : assemble_conditions(layout, conditions)) {
    Eigen::MatrixXd m = blk.constant;
    for (const auto& e : blk.entries) {
      m(e.i, e.j) += e.value * y[e.row];
      if (e.i != e.j) m(e.j, e.i) += e.value * y[e.row];
    }
    rep.labels.push_back(blk.label);
    rep.lambda_min.push_back(spectral_decompose(m).lambda.minCoeff());
  }
  const auto eq = assemble_equalities(layout, n);
  for (std::size_t r = 0; r < eq.rows.size(); ++r) {
    rep.equality_labels.push_back(eq.labels[r]);
    rep.equality_residuals.push_back(std::abs(eq.rows[r].eval(y)));
  }
  return rep;
}

}  // namespace rdmsdp::rdm
