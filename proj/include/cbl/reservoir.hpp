#pragma once

// Discrete-cycle Monte Carlo engine for the one-dimensional local reservoir.
//
// The reservoir has N lower levels (1..N) and N+1 upper levels (1..N+1).
// Arrow L_i excites lower i into upper i+1, arrow R_i excites lower i into
// upper i. An arrow is enabled iff its source is occupied and its target is
// empty. Firing empties the source and fills the target; both are restored
// `lifetime` cycles later.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbl/rng.hpp"

namespace cbl {

using Cycle = std::int64_t;

struct ReservoirConfig {
  int n_levels = 4;
  int lifetime = 10;
  Cycle total_cycles = 1200;
  Cycle t0 = 1000;
  std::int64_t trials = 20000;
  std::uint64_t seed = 42;

  /// Throws ValidationError describing the first violated constraint.
  void validate() const;
};

enum class ArrowKind : std::uint8_t { L, R };

struct Arrow {
  ArrowKind kind;
  int index;  // source lower level, 1-based

  int source() const { return index; }
  int target() const { return kind == ArrowKind::L ? index + 1 : index; }

  friend auto operator<=>(const Arrow&, const Arrow&) = default;
};

std::string to_string(const Arrow& a);

enum class Outcome : std::uint8_t { L, R, Stall };

char to_char(Outcome o);

struct DecisionEvent {
  Cycle cycle = 0;
  Outcome outcome = Outcome::Stall;
  std::optional<Arrow> fired_arrow;

  friend bool operator==(const DecisionEvent&, const DecisionEvent&) = default;
};

struct ArrowCounts {
  int l = 0;
  int r = 0;
  int total() const { return l + r; }
};

namespace detail {

/// Fixed-size bit set with word access, sized at construction.
class LevelBits {
 public:
  LevelBits() = default;
  LevelBits(int size, bool value);

  bool test(int i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(int i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(int i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  int size() const { return size_; }
  int count() const;
  std::size_t word_count() const { return words_.size(); }
  std::uint64_t word(std::size_t k) const { return k < words_.size() ? words_[k] : 0; }

  friend bool operator==(const LevelBits&, const LevelBits&) = default;

 private:
  std::vector<std::uint64_t> words_;
  int size_ = 0;
};

}  // namespace detail

/// Occupancy plus recovery timers. Arrow availability is always derived from
/// occupancy and never stored.
class ReservoirState {
 public:
  ReservoirState(int n_levels, int lifetime);

  int n_levels() const { return n_levels_; }
  int lifetime() const { return lifetime_; }
  Cycle cycle() const { return cycle_; }

  // Level indices are 1-based: lower 1..N, upper 1..N+1.
  bool lower_occupied(int i) const { return lower_.test(i - 1); }
  bool upper_occupied(int j) const { return upper_.test(j - 1); }
  std::optional<Cycle> lower_refill_at(int i) const { return lower_refill_at_[i - 1]; }
  std::optional<Cycle> upper_clear_at(int j) const { return upper_clear_at_[j - 1]; }

  ArrowCounts enabled_counts() const;
  bool is_enabled(const Arrow& a) const;

  /// Restores every level whose timer is due at `now` and advances the cycle.
  /// Requires now == cycle() + 1.
  void recover_to(Cycle now);

  /// Requires is_enabled(a).
  void fire(const Arrow& a);

  /// k-th enabled arrow in the order L_1..L_N, R_1..R_N. Requires
  /// k < enabled_counts().total().
  Arrow select_enabled(int k) const;

  /// Occupancy/timer coupling and timer-window checks.
  bool invariants_hold() const;

  /// Equal cycle, occupancy and timers.
  friend bool operator==(const ReservoirState& a, const ReservoirState& b);

 private:
  struct PendingRecovery {
    Cycle due;
    int lower;  // 0-based
    int upper;  // 0-based
  };

  std::uint64_t l_word(std::size_t k) const;
  std::uint64_t r_word(std::size_t k) const;

  int n_levels_;
  int lifetime_;
  Cycle cycle_ = 0;
  detail::LevelBits lower_;
  detail::LevelBits upper_;
  std::vector<std::optional<Cycle>> lower_refill_at_;
  std::vector<std::optional<Cycle>> upper_clear_at_;
  // Ring of fired arrows awaiting recovery, oldest first. Timers are always
  // set to now + lifetime and at most one arrow fires per cycle, so at most
  // `lifetime` entries are pending and due cycles arrive in order.
  std::vector<PendingRecovery> pending_;
  std::size_t pending_head_ = 0;
  std::size_t pending_size_ = 0;
};

/// Initial state: every lower level occupied, every upper level empty.
ReservoirState new_state(const ReservoirConfig& config);

/// Enabled arrows in the order L_1..L_N, R_1..R_N.
std::vector<Arrow> enabled_arrows(const ReservoirState& state);

ReservoirState recover(ReservoirState state, Cycle now);
ReservoirState fire(ReservoirState state, const Arrow& arrow);

/// Arrow addressed by a uniform draw in [0, 2N): draws 0..N-1 map to
/// L_1..L_N, draws N..2N-1 map to R_1..R_N.
Arrow attempted_arrow(int n_levels, int draw);

/// One cycle: recover, then attempt one of the 2N arrows chosen uniformly.
/// An enabled attempt fires and yields its decision; a disabled attempt is a
/// Stall and leaves occupancy unchanged. Conditional on a decision, the fired
/// arrow is uniform over the enabled set, so P(L | decision) = n_L / (n_L + n_R).
DecisionEvent step(ReservoirState& state, Rng& rng);

/// Full trace of total_cycles events for one trial.
std::vector<DecisionEvent> run_trial(const ReservoirConfig& config, std::int64_t trial_index);

/// Steps a fresh trial through cycles 1..last_cycle, calling
/// `on_event(const DecisionEvent&)` after each one.
template <class OnEvent>
void drive_trial(const ReservoirConfig& config, std::int64_t trial_index, Cycle last_cycle,
                 OnEvent&& on_event) {
  ReservoirState state = new_state(config);
  Rng rng = trial_stream(config.seed, static_cast<std::uint64_t>(trial_index));
  for (Cycle c = 1; c <= last_cycle; ++c) on_event(step(state, rng));
}

}  // namespace cbl
