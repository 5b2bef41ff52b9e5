#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace cbso {

// Counter-based stream derivation: every sample owns a stream id derived by
// hashing a component tag with loop indices, so batches can be drawn in any
// order (or concurrently) and still reduce to bit-identical results.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a over the tag bytes, then mixed with up to three indices.
std::uint64_t derive_stream_id(std::string_view component_tag,
                               std::uint64_t i0 = 0, std::uint64_t i1 = 0,
                               std::uint64_t i2 = 0);

inline RngStream make_stream(std::uint64_t master_seed, std::string_view tag,
                             std::uint64_t i0 = 0, std::uint64_t i1 = 0,
                             std::uint64_t i2 = 0) {
  return RngStream{master_seed, derive_stream_id(tag, i0, i1, i2)};
}

// Child stream for per-sample work inside an estimator call.
inline RngStream substream(RngStream parent, std::string_view tag,
                           std::uint64_t i0 = 0, std::uint64_t i1 = 0) {
  return RngStream{parent.master_seed,
                   splitmix64(parent.stream_id ^ derive_stream_id(tag, i0, i1))};
}

// Small counter-based generator (xorshift-style over splitmix64 output).
// Identical (master_seed, stream_id) gives identical draw sequences on any
// platform; distinct stream ids give statistically independent streams.
class Rng {
 public:
  explicit Rng(RngStream stream);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (one cached value).
  double normal();
  Eigen::VectorXd normal_vector(int dim, double sigma = 1.0);
  // Index in [0, probs.size()) by CDF scan; probs must sum to ~1.
  int categorical(const Eigen::Ref<const Eigen::VectorXd>& probs);
  // Geometric(1-gamma) number of steps, capped at max_value.
  int truncated_geometric(double gamma, int max_value);

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace cbso
