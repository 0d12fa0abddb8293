#pragma once

// Continuous-time Markov chain view of the local reservoir.
//
// A state is a bitmask over 2N+1 levels: bits 0..N-1 are lower levels 1..N,
// bits N..2N are upper levels 1..N+1. Every empty lower level refills at
// gamma_in, every enabled arrow fires at gamma_up, every occupied upper level
// empties at gamma_out. The generator follows dp/dt = Q p, so each column of
// Q sums to zero.
//
// Decision-transition probabilities are computed as a first-passage problem:
// h_L(s) is the probability that the next excitation, starting from s, is an
// L arrow. Fills and decays are transient moves; excitations absorb.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "cbl/error.hpp"
#include "cbl/reservoir.hpp"

namespace cbl::ctmc {

using Index = Eigen::Index;
using StateMask = std::uint32_t;

/// Largest N whose 2^(2N+1) states we agree to enumerate.
inline constexpr int kMaxLevels = 10;

/// States up to this count are solved densely; larger chains use SparseLU.
inline constexpr Index kDenseLimit = 128;

template <class Scalar>
struct Rates {
  Scalar gamma_in{1};
  Scalar gamma_up{1};
  Scalar gamma_out{1};

  void validate() const {
    if (!(gamma_in > Scalar(0) && gamma_up > Scalar(0) && gamma_out > Scalar(0)))
      throw ValidationError("rates must be strictly positive");
  }
};

enum class TransitionKind : std::uint8_t { Fill, Decay, ExciteL, ExciteR };

struct Transition {
  StateMask from;
  StateMask to;
  TransitionKind kind;

  bool is_decision() const { return kind == TransitionKind::ExciteL || kind == TransitionKind::ExciteR; }
  ArrowKind arrow_kind() const { return kind == TransitionKind::ExciteL ? ArrowKind::L : ArrowKind::R; }
};

/// Bit layout helpers for an N-level reservoir.
struct Layout {
  int n;

  int bits() const { return 2 * n + 1; }
  StateMask num_states() const { return StateMask{1} << bits(); }
  StateMask lower_bit(int i) const { return StateMask{1} << (i - 1); }
  StateMask upper_bit(int j) const { return StateMask{1} << (n + j - 1); }
  bool lower(StateMask s, int i) const { return s & lower_bit(i); }
  bool upper(StateMask s, int j) const { return s & upper_bit(j); }

  bool enabled(StateMask s, ArrowKind kind, int i) const {
    const int target = kind == ArrowKind::L ? i + 1 : i;
    return lower(s, i) && !upper(s, target);
  }
  int enabled_count(StateMask s, ArrowKind kind) const {
    int c = 0;
    for (int i = 1; i <= n; ++i) c += enabled(s, kind, i);
    return c;
  }

  /// Reflection lower i -> N+1-i, upper j -> N+2-j (swaps L and R arrows).
  StateMask mirror(StateMask s) const {
    StateMask m = 0;
    for (int i = 1; i <= n; ++i)
      if (lower(s, i)) m |= lower_bit(n + 1 - i);
    for (int j = 1; j <= n + 1; ++j)
      if (upper(s, j)) m |= upper_bit(n + 2 - j);
    return m;
  }
};

template <class Scalar>
struct CtmcModel {
  int n_levels = 0;
  Rates<Scalar> rates;
  Eigen::SparseMatrix<Scalar> generator;
  std::vector<Transition> transitions;

  Layout layout() const { return Layout{n_levels}; }
  Index num_states() const { return generator.rows(); }

  Scalar rate(TransitionKind k) const {
    switch (k) {
      case TransitionKind::Fill: return rates.gamma_in;
      case TransitionKind::Decay: return rates.gamma_out;
      default: return rates.gamma_up;
    }
  }

  /// Total outgoing rate of state s, i.e. -Q(s, s).
  Scalar outflow(StateMask s) const { return -generator.coeff(s, s); }
};

template <class Scalar>
CtmcModel<Scalar> build_model(int n_levels, const Rates<Scalar>& rates) {
  if (n_levels < 1) throw ValidationError("n_levels must be >= 1");
  if (n_levels > kMaxLevels)
    throw CapacityError("N = " + std::to_string(n_levels) + " needs 2^(2N+1) = 2^" +
                        std::to_string(2 * n_levels + 1) + " states; the limit is N <= " +
                        std::to_string(kMaxLevels) + " (2^" + std::to_string(2 * kMaxLevels + 1) + " states)");
  rates.validate();

  CtmcModel<Scalar> model;
  model.n_levels = n_levels;
  model.rates = rates;
  const Layout lay{n_levels};
  const StateMask n_states = lay.num_states();

  for (StateMask s = 0; s < n_states; ++s) {
    for (int i = 1; i <= n_levels; ++i)
      if (!lay.lower(s, i)) model.transitions.push_back({s, s | lay.lower_bit(i), TransitionKind::Fill});
    for (int i = 1; i <= n_levels; ++i) {
      for (ArrowKind kind : {ArrowKind::L, ArrowKind::R}) {
        if (!lay.enabled(s, kind, i)) continue;
        const int target = kind == ArrowKind::L ? i + 1 : i;
        model.transitions.push_back({s, (s & ~lay.lower_bit(i)) | lay.upper_bit(target),
                                     kind == ArrowKind::L ? TransitionKind::ExciteL : TransitionKind::ExciteR});
      }
    }
    for (int j = 1; j <= n_levels + 1; ++j)
      if (lay.upper(s, j)) model.transitions.push_back({s, s & ~lay.upper_bit(j), TransitionKind::Decay});
  }

  std::vector<Scalar> diag(n_states, Scalar(0));
  std::vector<Eigen::Triplet<Scalar>> entries;
  entries.reserve(model.transitions.size() + n_states);
  for (const Transition& t : model.transitions) {
    const Scalar r = model.rate(t.kind);
    entries.emplace_back(t.to, t.from, r);
    diag[t.from] -= r;
  }
  for (StateMask s = 0; s < n_states; ++s) entries.emplace_back(s, s, diag[s]);

  model.generator.resize(n_states, n_states);
  model.generator.setFromTriplets(entries.begin(), entries.end());
  model.generator.makeCompressed();
  return model;
}

/// Every state reaches every other state along positive-rate transitions.
template <class Scalar>
bool is_strongly_connected(const CtmcModel<Scalar>& model) {
  const auto n = static_cast<std::size_t>(model.num_states());
  std::vector<std::vector<StateMask>> fwd(n), bwd(n);
  for (const Transition& t : model.transitions) {
    fwd[t.from].push_back(t.to);
    bwd[t.to].push_back(t.from);
  }
  auto reaches_all = [&](const std::vector<std::vector<StateMask>>& adj) {
    std::vector<char> seen(n, 0);
    std::vector<StateMask> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const StateMask s = stack.back();
      stack.pop_back();
      for (StateMask t : adj[s]) {
        if (!seen[t]) {
          seen[t] = 1;
          ++count;
          stack.push_back(t);
        }
      }
    }
    return count == n;
  };
  return reaches_all(fwd) && reaches_all(bwd);
}

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

template <class Scalar>
Vector<Scalar> solve(const Eigen::SparseMatrix<Scalar>& a, const Vector<Scalar>& b) {
  if (a.rows() <= kDenseLimit) {
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense(a);
    Eigen::FullPivLU<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> lu(dense);
    if (!lu.isInvertible()) throw NumericalError("linear system is singular");
    return lu.solve(b);
  }
  Eigen::SparseLU<Eigen::SparseMatrix<Scalar>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw NumericalError("sparse LU factorization failed: " + lu.lastErrorMessage());
  Vector<Scalar> x = lu.solve(b);
  if (lu.info() != Eigen::Success) throw NumericalError("sparse LU solve failed");
  return x;
}

template <class Scalar>
Scalar max_abs(const Vector<Scalar>& v) {
  return v.size() == 0 ? Scalar(0) : v.cwiseAbs().maxCoeff();
}

template <class Scalar>
Scalar rate_scale(const Rates<Scalar>& r) {
  using std::max;
  return max(Scalar(1), max(r.gamma_in, max(r.gamma_up, r.gamma_out)));
}

}  // namespace detail

template <class Scalar>
struct SteadyState {
  Vector<Scalar> pi;
  Scalar residual{0};       // ||Q pi||_inf
  Scalar min_unclamped{0};  // most negative entry before clamping
};

/// Solves Q pi = 0 with the last balance equation replaced by sum(pi) = 1.
///
/// Throws NumericalError when the residual exceeds `tolerance` scaled by the
/// largest rate (the bound is 1e-10 for rates of order one).
template <class Scalar>
SteadyState<Scalar> steady_state(const CtmcModel<Scalar>& model, Scalar tolerance = Scalar(1e-10)) {
  const Index n = model.num_states();
  std::vector<Eigen::Triplet<Scalar>> entries;
  entries.reserve(static_cast<std::size_t>(model.generator.nonZeros() + n));
  for (Index c = 0; c < model.generator.outerSize(); ++c)
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(model.generator, c); it; ++it)
      if (it.row() != n - 1) entries.emplace_back(it.row(), it.col(), it.value());
  for (Index c = 0; c < n; ++c) entries.emplace_back(n - 1, c, Scalar(1));
  Eigen::SparseMatrix<Scalar> a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();
  Vector<Scalar> b = Vector<Scalar>::Zero(n);
  b(n - 1) = Scalar(1);

  SteadyState<Scalar> out;
  out.pi = detail::solve(a, b);
  out.min_unclamped = out.pi.minCoeff();
  out.pi = out.pi.cwiseMax(Scalar(0));
  out.pi /= out.pi.sum();
  out.residual = detail::max_abs<Scalar>(model.generator * out.pi);
  const Scalar bound = tolerance * detail::rate_scale(model.rates);
  using std::isfinite;
  if (!isfinite(static_cast<double>(out.residual)) || out.residual > bound)
    throw NumericalError("steady state residual " + std::to_string(static_cast<double>(out.residual)) +
                         " exceeds " + std::to_string(static_cast<double>(bound)));
  return out;
}

/// Per state, the probability that the next excitation is of `kind`.
///
/// Solves out(s) h(s) - sum_{fill/decay s->s'} rate * h(s') = gamma_up * n_kind(s).
template <class Scalar>
Vector<Scalar> next_decision_probs(const CtmcModel<Scalar>& model, ArrowKind kind = ArrowKind::L) {
  const Index n = model.num_states();
  const Layout lay = model.layout();
  std::vector<Eigen::Triplet<Scalar>> entries;
  entries.reserve(model.transitions.size() + static_cast<std::size_t>(n));
  Vector<Scalar> b(n);
  for (Index s = 0; s < n; ++s) {
    const Scalar out = model.outflow(static_cast<StateMask>(s));
    expects(out > Scalar(0), "next_decision_probs: state without outflow");
    entries.emplace_back(s, s, out);
    b(s) = model.rates.gamma_up * Scalar(lay.enabled_count(static_cast<StateMask>(s), kind));
  }
  for (const Transition& t : model.transitions)
    if (!t.is_decision()) entries.emplace_back(t.from, t.to, -model.rate(t.kind));
  Eigen::SparseMatrix<Scalar> m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  return detail::solve(m, b);
}

template <class Scalar>
struct TransitionStats {
  Scalar p_ll{0}, p_lr{0}, p_rl{0}, p_rr{0};
  Scalar imbalance{0};  // p_ll - p_lr
};

/// P(next decision | previous decision) in the stationary regime, weighting
/// each excitation by its stationary flux pi(s) * gamma_up.
template <class Scalar>
TransitionStats<Scalar> decision_transition_stats(const CtmcModel<Scalar>& model, const Vector<Scalar>& pi,
                                                  const Vector<Scalar>& h_l, const Vector<Scalar>& h_r) {
  Scalar num_l(0), den_l(0), num_r(0), den_r(0);
  for (const Transition& t : model.transitions) {
    if (!t.is_decision()) continue;
    const Scalar flux = pi(t.from) * model.rates.gamma_up;
    if (t.kind == TransitionKind::ExciteL) {
      num_l += flux * h_l(t.to);
      den_l += flux;
    } else {
      num_r += flux * h_r(t.to);
      den_r += flux;
    }
  }
  if (!(den_l > Scalar(0) && den_r > Scalar(0))) throw NumericalError("no stationary decision flux");
  TransitionStats<Scalar> st;
  st.p_ll = num_l / den_l;
  st.p_lr = Scalar(1) - st.p_ll;
  st.p_rr = num_r / den_r;
  st.p_rl = Scalar(1) - st.p_rr;
  st.imbalance = st.p_ll - st.p_lr;
  return st;
}

template <class Scalar>
TransitionStats<Scalar> decision_transition_stats(const CtmcModel<Scalar>& model) {
  const SteadyState<Scalar> ss = steady_state(model);
  return decision_transition_stats(model, ss.pi, next_decision_probs(model, ArrowKind::L),
                                   next_decision_probs(model, ArrowKind::R));
}

/// Bitmasks of the N = 1 states in the conventional 1..8 numbering of the
/// printed rate equation: empty, lower only, upper 1, upper 2, lower+upper 1,
/// lower+upper 2, both uppers, all occupied. Upper 1 is the R1 target and
/// upper 2 the L1 target.
inline std::array<StateMask, 8> n1_state_order() {
  const Layout lay{1};
  const StateMask lo = lay.lower_bit(1), u1 = lay.upper_bit(1), u2 = lay.upper_bit(2);
  return {0, lo, u1, u2, lo | u1, lo | u2, u1 | u2, lo | u1 | u2};
}

/// Closed-form N = 1 imbalance expression, evaluated term by term as
/// printed. `pi` is indexed by state bitmask (size 8).
template <class Scalar>
Scalar eq2_evaluate(const Rates<Scalar>& r, const Vector<Scalar>& pi) {
  if (pi.size() != 8) throw ValidationError("eq2_evaluate needs the 8-state N = 1 distribution");
  const auto order = n1_state_order();
  auto p = [&](int k) { return pi(order[static_cast<std::size_t>(k - 1)]); };
  const Scalar gi = r.gamma_in, gu = r.gamma_up, go = r.gamma_out;

  const Scalar lead = gi * gu / ((gi + go) * (gu + go));
  const Scalar t12 = (p(1) + p(2)) / Scalar(2);
  const Scalar t34 = (gi * go + go * (gu + go)) / (Scalar(2) * (gi + go) * (gu + go)) * (p(3) + p(4));
  const Scalar t7 = (Scalar(2) * (Scalar(2) * gi + go) * (gu + go) * go * go + gi * go * (gi + go) * (gi + go)) /
                    (Scalar(2) * (gi + Scalar(2) * go) * (gi + go) * (gi + go) * (gu + go)) * p(7);
  const Scalar t568 = go / (Scalar(2) * (gu + go)) * (p(5) + p(6) + p(8));
  return lead * (t12 + t34 + t7 + t568);
}

}  // namespace cbl::ctmc
