#ifndef NPSS_SYNTH_HPP_
#define NPSS_SYNTH_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "npss/ltss.hpp"
#include "npss/matrix.hpp"
#include "npss/rng.hpp"

namespace npss {

/// Gaussian activation pools with a mean shift planted on a fixed node subset
/// of the fake pool.
struct SynthSpec {
  std::size_t z_background = 500;
  std::size_t real_pool = 1000;
  std::size_t fake_pool = 1000;
  std::size_t nodes = 50;
  std::size_t anomalous_nodes = 10;
  double shift = 3.0;  // in standard deviations
  std::uint64_t seed = 7;

  void validate() const {
    if (z_background < 1 || real_pool < 1 || fake_pool < 1 || nodes < 1 || anomalous_nodes < 1) {
      throw std::invalid_argument("synth: all counts must be >= 1");
    }
    if (anomalous_nodes > nodes) throw std::invalid_argument("synth: anomalous_nodes exceeds nodes");
    if (!std::isfinite(shift)) throw std::invalid_argument("synth: shift must be finite");
  }
};

struct SynthData {
  ActivationMatrix background;
  ActivationMatrix real_pool;
  ActivationMatrix fake_pool;
  std::vector<std::size_t> anomalous_nodes;  // ascending
};

namespace detail {

inline ActivationMatrix standard_normal(std::size_t rows, std::size_t cols, Rng rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ActivationMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto& v : m.row(r)) v = normal(rng);
  }
  return m;
}

}  // namespace detail

inline SynthData generate(const SynthSpec& spec) {
  spec.validate();
  SynthData out;

  auto node_rng = make_rng(spec.seed, {0});
  auto nodes = all_indices(spec.nodes);
  std::shuffle(nodes.begin(), nodes.end(), node_rng);
  out.anomalous_nodes.assign(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(spec.anomalous_nodes));
  std::sort(out.anomalous_nodes.begin(), out.anomalous_nodes.end());

  out.background = detail::standard_normal(spec.z_background, spec.nodes, make_rng(spec.seed, {1}));
  out.real_pool = detail::standard_normal(spec.real_pool, spec.nodes, make_rng(spec.seed, {2}));
  out.fake_pool = detail::standard_normal(spec.fake_pool, spec.nodes, make_rng(spec.seed, {3}));
  for (std::size_t r = 0; r < spec.fake_pool; ++r) {
    for (auto c : out.anomalous_nodes) out.fake_pool(r, c) += spec.shift;
  }
  return out;
}

}  // namespace npss

#endif  // NPSS_SYNTH_HPP_
