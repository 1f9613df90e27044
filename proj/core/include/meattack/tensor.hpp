#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace meattack {

using Rng = std::mt19937_64;

// Class index, 0-based.
using Label = std::size_t;

struct VideoShape {
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t size() const noexcept { return frames * height * width * channels; }
  std::size_t frame_size() const noexcept { return height * width * channels; }
  bool valid() const noexcept { return frames > 0 && height > 0 && width > 0 && channels > 0; }
  std::string to_string() const;

  friend bool operator==(const VideoShape&, const VideoShape&) = default;
};

// Dense V x H x W x C clip stored row-major as [frame][row][col][channel].
// Clean videos hold intensities in [0,1]; the same container carries noise
// and gradient estimates, whose values are unbounded.
class VideoTensor {
 public:
  VideoTensor() = default;
  explicit VideoTensor(VideoShape shape, double fill = 0.0);
  VideoTensor(VideoShape shape, std::vector<double> values);

  const VideoShape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<double> frame(std::size_t f);
  std::span<const double> frame(std::size_t f) const;

  std::size_t index(std::size_t f, std::size_t r, std::size_t c, std::size_t ch) const noexcept {
    return ((f * shape_.height + r) * shape_.width + c) * shape_.channels + ch;
  }
  double& at(std::size_t f, std::size_t r, std::size_t c, std::size_t ch) {
    return values_[index(f, r, c, ch)];
  }
  double at(std::size_t f, std::size_t r, std::size_t c, std::size_t ch) const {
    return values_[index(f, r, c, ch)];
  }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const VideoTensor&, const VideoTensor&) = default;

 private:
  VideoShape shape_{};
  std::vector<double> values_;
};

// Same container; the alias marks values that are not pixel intensities.
using NoiseTensor = VideoTensor;

void require_same_shape(const VideoTensor& a, const VideoTensor& b, const char* what);

// Project x onto the l-inf ball of radius kappa around x0, then onto [0,1].
VideoTensor clip_to_ball(const VideoTensor& x, const VideoTensor& x0, double kappa);

// Elementwise clamp to [0,1].
VideoTensor clamp_unit(VideoTensor x);

NoiseTensor sign(const NoiseTensor& t);

double linf_dist(const VideoTensor& a, const VideoTensor& b);

double inner_product(const VideoTensor& a, const VideoTensor& b);

double l2_norm(const VideoTensor& a);

// y += alpha * x
void axpy(double alpha, const VideoTensor& x, VideoTensor& y);

bool in_unit_range(const VideoTensor& x);

// Fill with i.i.d. standard normal draws in storage order.
void fill_standard_normal(std::span<double> out, Rng& rng);

}  // namespace meattack
