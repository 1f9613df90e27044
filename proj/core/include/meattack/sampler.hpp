#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "meattack/motion.hpp"
#include "meattack/tensor.hpp"

namespace meattack {

// How a motion map turns into source coordinates.
//   raw:       (row, col) = (round(ch0), round(ch1)); the map value is read
//              directly as a coordinate.
//   traceback: (row, col) = (round(r - v), round(c - u)); the map value is a
//              displacement and the lookup points to where the pixel came from.
// Both clamp to the frame; rounding is half-up.
enum class LookupMode { raw, traceback };

std::string to_string(LookupMode mode);
LookupMode default_lookup_mode(MotionKind kind);

class LookupMap {
 public:
  LookupMap(std::size_t height, std::size_t width);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::int32_t row(std::size_t r, std::size_t c) const { return coords_[2 * (r * width_ + c)]; }
  std::int32_t col(std::size_t r, std::size_t c) const { return coords_[2 * (r * width_ + c) + 1]; }
  void set(std::size_t r, std::size_t c, std::int32_t row, std::int32_t col) {
    coords_[2 * (r * width_ + c)] = row;
    coords_[2 * (r * width_ + c) + 1] = col;
  }

  friend bool operator==(const LookupMap&, const LookupMap&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<std::int32_t> coords_;
};

LookupMap to_lookup(const MotionMap& map, LookupMode mode);

struct SparkedPrior {
  NoiseTensor values;
  std::vector<std::size_t> stack_indices;
  std::optional<LookupMode> mode;
};

// out[f][p][c] = noise[f][lookup_f(p)][c]; one lookup per pixel shared by all
// channels. mode = nullopt picks default_lookup_mode per map.
SparkedPrior me_sample(const NoiseTensor& noise, const MotionStack& stack,
                       std::optional<LookupMode> mode = std::nullopt);

// One H x W x C standard-normal frame replicated across all frames.
NoiseTensor one_noise(const VideoShape& shape, Rng& rng);

// Independent standard-normal frames.
NoiseTensor multi_noise(const VideoShape& shape, Rng& rng);

// Ablation maps; both are zero wherever the reference map is zero in both channels.
MotionMap u_sample_map(const MotionMap& reference, Rng& rng);
MotionMap s_value_map(const MotionMap& reference);

enum class SamplerKind { me_mv, me_of, one_noise, multi_noise, u_sample, s_value };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

// Replaces every map of a block-motion set by its u_sample or s_value
// counterpart. Any other kind is rejected.
MotionSet handcrafted_set(const MotionSet& reference, SamplerKind kind, Rng& rng);

}  // namespace meattack
