#include "treereg/isotonic.hpp"

#include <vector>

namespace treereg {

namespace {

struct Block {
  double value;   // weighted mean of the pooled entries
  double weight;  // total weight
  int count;      // number of pooled entries
};

}  // namespace

std::vector<double> isotonic_fit(std::span<const double> y, std::span<const double> weights) {
  std::vector<Block> blocks;
  blocks.reserve(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    blocks.push_back({y[i], weights[i], 1});
    // merge backwards while the monotone constraint is violated
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value > blocks.back().value) {
      const Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      const double w = a.weight + b.weight;
      a.value = (a.value * a.weight + b.value * b.weight) / w;
      a.weight = w;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const Block& b : blocks) {
    for (int k = 0; k < b.count; ++k) out.push_back(b.value);
  }
  return out;
}

std::vector<double> isotonic_fit(std::span<const double> y) {
  const std::vector<double> w(y.size(), 1.0);
  return isotonic_fit(y, w);
}

}  // namespace treereg
