#include "cbl/isotonic.hpp"

#include "cbl/error.hpp"

namespace cbl {

std::vector<double> isotonic_non_decreasing(std::span<const double> y, std::span<const double> w) {
  if (!w.empty() && w.size() != y.size()) throw ValidationError("isotonic: weight/value size mismatch");
  struct Block {
    double mean;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  blocks.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    if (!(wi > 0.0)) throw ValidationError("isotonic: weights must be positive");
    blocks.push_back({y[i], wi, 1});
    // Pool while the newest block violates the ordering.
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      const double total = a.weight + b.weight;
      a.mean = (a.mean * a.weight + b.mean * b.weight) / total;
      a.weight = total;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const Block& b : blocks) out.insert(out.end(), b.count, b.mean);
  return out;
}

std::vector<double> isotonic_non_increasing(std::span<const double> y, std::span<const double> w) {
  std::vector<double> neg(y.begin(), y.end());
  for (double& v : neg) v = -v;
  std::vector<double> out = isotonic_non_decreasing(neg, w);
  for (double& v : out) v = -v;
  return out;
}

}  // namespace cbl
