#include "cbl/reservoir.hpp"

#include <bit>

#include "cbl/error.hpp"

namespace cbl {

void ReservoirConfig::validate() const {
  if (n_levels < 1) throw ValidationError("n_levels must be >= 1");
  if (lifetime < 1) throw ValidationError("lifetime must be >= 1");
  if (total_cycles < 1) throw ValidationError("total_cycles must be >= 1");
  if (t0 < 1 || t0 >= total_cycles) throw ValidationError("t0 must satisfy 1 <= t0 < total_cycles");
  if (trials < 1) throw ValidationError("trials must be >= 1");
}

std::string to_string(const Arrow& a) {
  return (a.kind == ArrowKind::L ? "L" : "R") + std::to_string(a.index);
}

char to_char(Outcome o) {
  switch (o) {
    case Outcome::L: return 'L';
    case Outcome::R: return 'R';
    case Outcome::Stall: return '-';
  }
  return '?';
}

namespace detail {

LevelBits::LevelBits(int size, bool value)
    : words_(static_cast<std::size_t>((size + 63) / 64), 0), size_(size) {
  if (value)
    for (int i = 0; i < size; ++i) set(i);
}

int LevelBits::count() const {
  int c = 0;
  for (auto w : words_) c += std::popcount(w);
  return c;
}

}  // namespace detail

namespace {

int checked_levels(int n_levels, int lifetime) {
  if (n_levels < 1) throw ValidationError("n_levels must be >= 1");
  if (lifetime < 1) throw ValidationError("lifetime must be >= 1");
  return n_levels;
}

int select_bit(std::uint64_t word, int k) {
  for (int i = 0; i < k; ++i) word &= word - 1;
  return std::countr_zero(word);
}

}  // namespace

ReservoirState::ReservoirState(int n_levels, int lifetime)
    : n_levels_(checked_levels(n_levels, lifetime)),
      lifetime_(lifetime),
      lower_(n_levels, true),
      upper_(n_levels + 1, false),
      lower_refill_at_(static_cast<std::size_t>(n_levels)),
      upper_clear_at_(static_cast<std::size_t>(n_levels) + 1),
      pending_(static_cast<std::size_t>(lifetime)) {}

bool operator==(const ReservoirState& a, const ReservoirState& b) {
  return a.n_levels_ == b.n_levels_ && a.lifetime_ == b.lifetime_ && a.cycle_ == b.cycle_ &&
         a.lower_ == b.lower_ && a.upper_ == b.upper_ && a.lower_refill_at_ == b.lower_refill_at_ &&
         a.upper_clear_at_ == b.upper_clear_at_;
}

// Lower i with upper i+1 empty.
std::uint64_t ReservoirState::l_word(std::size_t k) const {
  const std::uint64_t upper_shifted = (upper_.word(k) >> 1) | (upper_.word(k + 1) << 63);
  return lower_.word(k) & ~upper_shifted;
}

// Lower i with upper i empty.
std::uint64_t ReservoirState::r_word(std::size_t k) const {
  return lower_.word(k) & ~upper_.word(k);
}

ArrowCounts ReservoirState::enabled_counts() const {
  ArrowCounts c;
  for (std::size_t k = 0; k < lower_.word_count(); ++k) {
    c.l += std::popcount(l_word(k));
    c.r += std::popcount(r_word(k));
  }
  return c;
}

bool ReservoirState::is_enabled(const Arrow& a) const {
  if (a.index < 1 || a.index > n_levels_) return false;
  return lower_occupied(a.source()) && !upper_occupied(a.target());
}

Arrow ReservoirState::select_enabled(int k) const {
  for (ArrowKind kind : {ArrowKind::L, ArrowKind::R}) {
    for (std::size_t w = 0; w < lower_.word_count(); ++w) {
      const std::uint64_t bits = kind == ArrowKind::L ? l_word(w) : r_word(w);
      const int pc = std::popcount(bits);
      if (k < pc) return Arrow{kind, static_cast<int>(w * 64) + select_bit(bits, k) + 1};
      k -= pc;
    }
  }
  throw ContractViolation("select_enabled: index beyond enabled set");
}

void ReservoirState::recover_to(Cycle now) {
  expects(now == cycle_ + 1, "recover_to: now must be cycle + 1");
  cycle_ = now;
  while (pending_size_ > 0 && pending_[pending_head_].due <= now) {
    const PendingRecovery& p = pending_[pending_head_];
    lower_.set(p.lower);
    lower_refill_at_[static_cast<std::size_t>(p.lower)].reset();
    upper_.reset(p.upper);
    upper_clear_at_[static_cast<std::size_t>(p.upper)].reset();
    pending_head_ = (pending_head_ + 1) % pending_.size();
    --pending_size_;
  }
}

void ReservoirState::fire(const Arrow& a) {
  expects(is_enabled(a), "fire: arrow is not enabled");
  const int lo = a.source() - 1;
  const int up = a.target() - 1;
  const Cycle due = cycle_ + lifetime_;
  lower_.reset(lo);
  lower_refill_at_[static_cast<std::size_t>(lo)] = due;
  upper_.set(up);
  upper_clear_at_[static_cast<std::size_t>(up)] = due;
  if (pending_size_ == pending_.size()) {
    // Several manual fires within one cycle; grow and linearize.
    std::vector<PendingRecovery> grown;
    grown.reserve(pending_.size() * 2);
    for (std::size_t k = 0; k < pending_size_; ++k) grown.push_back(pending_[(pending_head_ + k) % pending_.size()]);
    grown.resize(pending_.size() * 2);
    pending_ = std::move(grown);
    pending_head_ = 0;
  }
  pending_[(pending_head_ + pending_size_) % pending_.size()] = {due, lo, up};
  ++pending_size_;
}

bool ReservoirState::invariants_hold() const {
  auto timer_ok = [&](const std::optional<Cycle>& t) {
    return !t || (*t > cycle_ && *t <= cycle_ + lifetime_);
  };
  for (int i = 0; i < n_levels_; ++i) {
    const auto& t = lower_refill_at_[static_cast<std::size_t>(i)];
    if (lower_.test(i) == t.has_value() || !timer_ok(t)) return false;
  }
  for (int j = 0; j <= n_levels_; ++j) {
    const auto& t = upper_clear_at_[static_cast<std::size_t>(j)];
    if (upper_.test(j) != t.has_value() || !timer_ok(t)) return false;
  }
  return true;
}

ReservoirState new_state(const ReservoirConfig& config) {
  return ReservoirState(config.n_levels, config.lifetime);
}

std::vector<Arrow> enabled_arrows(const ReservoirState& state) {
  const ArrowCounts c = state.enabled_counts();
  std::vector<Arrow> out;
  out.reserve(static_cast<std::size_t>(c.total()));
  for (int k = 0; k < c.total(); ++k) out.push_back(state.select_enabled(k));
  return out;
}

ReservoirState recover(ReservoirState state, Cycle now) {
  state.recover_to(now);
  return state;
}

ReservoirState fire(ReservoirState state, const Arrow& arrow) {
  state.fire(arrow);
  return state;
}

Arrow attempted_arrow(int n_levels, int draw) {
  return draw < n_levels ? Arrow{ArrowKind::L, draw + 1} : Arrow{ArrowKind::R, draw - n_levels + 1};
}

DecisionEvent step(ReservoirState& state, Rng& rng) {
  state.recover_to(state.cycle() + 1);
  const int n = state.n_levels();
  const Arrow a = attempted_arrow(n, static_cast<int>(uniform_below(rng, 2 * static_cast<std::uint64_t>(n))));
  if (!state.is_enabled(a)) return DecisionEvent{state.cycle(), Outcome::Stall, std::nullopt};
  state.fire(a);
  return DecisionEvent{state.cycle(), a.kind == ArrowKind::L ? Outcome::L : Outcome::R, a};
}

std::vector<DecisionEvent> run_trial(const ReservoirConfig& config, std::int64_t trial_index) {
  config.validate();
  if (trial_index < 0 || trial_index >= config.trials)
    throw ValidationError("trial_index out of range");
  std::vector<DecisionEvent> events;
  events.reserve(static_cast<std::size_t>(config.total_cycles));
  drive_trial(config, trial_index, config.total_cycles,
              [&](const DecisionEvent& e) { events.push_back(e); });
  return events;
}

}  // namespace cbl
