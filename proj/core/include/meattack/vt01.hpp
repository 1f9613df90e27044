#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "meattack/motion.hpp"
#include "meattack/tensor.hpp"

namespace meattack::vt01 {

// On-disk layout, little-endian throughout:
//   bytes 0-3  "VT01"
//   byte  4    dtype code (0x01 = float32)
//   byte  5    rank
//   rank x u32 dims
//   row-major payload
inline constexpr std::uint8_t kDtypeF32 = 0x01;

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
  friend bool operator==(const RawTensor&, const RawTensor&) = default;
};

void write(std::ostream& os, const RawTensor& t);
RawTensor read(std::istream& is);

void write_file(const std::filesystem::path& path, const RawTensor& t);
RawTensor read_file(const std::filesystem::path& path);

// Rank-4 [V,H,W,C]. Values are narrowed to float32.
RawTensor from_video(const VideoTensor& video);
VideoTensor to_video(const RawTensor& t);

// Rank-3 [H,W,2].
RawTensor from_motion_map(const MotionMap& map);
MotionMap to_motion_map(const RawTensor& t, MotionKind kind);

// Rank-4 [N,H,W,2], one slice per interval.
RawTensor from_motion_set(const MotionSet& set);
MotionSet to_motion_set(const RawTensor& t, MotionKind kind, std::size_t interval_length);

}  // namespace meattack::vt01
