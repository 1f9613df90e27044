#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "meattack/tensor.hpp"

namespace meattack {

enum class MotionKind { block_mv, accumulated_mv, optical_flow, handcrafted };

std::string to_string(MotionKind kind);

// H x W field with two values per pixel: u (horizontal, columns) and
// v (vertical, rows), in pixels. For estimated motion, (u, v) is the
// position of a pixel in the current frame minus the position it came
// from in the reference frame.
class MotionMap {
 public:
  MotionMap() = default;
  MotionMap(std::size_t height, std::size_t width, MotionKind kind);
  MotionMap(std::size_t height, std::size_t width, MotionKind kind, std::vector<double> uv);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  MotionKind kind() const noexcept { return kind_; }
  void set_kind(MotionKind kind) noexcept { kind_ = kind; }

  double u(std::size_t r, std::size_t c) const { return uv_[2 * (r * width_ + c)]; }
  double v(std::size_t r, std::size_t c) const { return uv_[2 * (r * width_ + c) + 1]; }
  void set(std::size_t r, std::size_t c, double u, double v) {
    uv_[2 * (r * width_ + c)] = u;
    uv_[2 * (r * width_ + c) + 1] = v;
  }

  // Interleaved [row][col][u,v].
  std::span<const double> values() const noexcept { return uv_; }
  std::span<double> values() noexcept { return uv_; }

  friend bool operator==(const MotionMap&, const MotionMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  MotionKind kind_ = MotionKind::block_mv;
  std::vector<double> uv_;
};

// Single-channel frame used for matching and flow.
struct GrayFrame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
};

// Channel mean of frame f.
GrayFrame to_gray(const VideoTensor& video, std::size_t f);

struct BlockMatchParams {
  int block_size = 16;
  int search_radius = 7;
};

struct FlowParams {
  double alpha = 1.0;
  int iterations = 100;
};

enum class MotionRepresentation { mv, flow };

struct MotionParams {
  BlockMatchParams block{};
  FlowParams flow{};
};

// Exhaustive SAD block matching of every block of cur against ref.
// Candidates whose reference block would leave the frame are skipped.
// Ties go to the smallest |dy|+|dx|, then to the first offset in row-major
// scan order of (dy, dx).
MotionMap estimate_block_motion(const GrayFrame& ref, const GrayFrame& cur,
                                const BlockMatchParams& params);

// Accumulated motion of the last frame of an interval back to its first frame.
MotionMap accumulate_interval(std::span<const GrayFrame> frames, const BlockMatchParams& params);

// Horn-Schunck flow on 8-bit scaled intensities. The optional observer is
// called after every iteration with (iteration index starting at 1, field).
using FlowObserver = std::function<void(int, const MotionMap&)>;
MotionMap estimate_optical_flow(const GrayFrame& ref, const GrayFrame& cur,
                                const FlowParams& params, const FlowObserver& observer = {});

// Objective minimised by estimate_optical_flow for the given field.
double optical_flow_energy(const GrayFrame& ref, const GrayFrame& cur, const MotionMap& flow,
                           double alpha);

// One map per non-overlapping interval of T frames; tail frames are dropped.
struct MotionSet {
  std::vector<MotionMap> maps;
  std::size_t interval_length = 0;
  std::string source_id;

  std::size_t size() const noexcept { return maps.size(); }
  friend bool operator==(const MotionSet&, const MotionSet&) = default;
};

MotionSet build_motion_set(const VideoTensor& video, MotionRepresentation repr,
                           std::size_t interval_length, const MotionParams& params = {},
                           std::string source_id = {});

// One map per frame, drawn with replacement from a MotionSet.
struct MotionStack {
  std::shared_ptr<const MotionSet> set;
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return indices.size(); }
  const MotionMap& map(std::size_t frame) const { return set->maps.at(indices.at(frame)); }
};

MotionStack sample_motion_stack(std::shared_ptr<const MotionSet> set, std::size_t frames,
                                Rng& rng);

}  // namespace meattack
