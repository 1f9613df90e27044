#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "meattack/loss.hpp"
#include "meattack/tensor.hpp"

namespace meattack {

// Black-box classifier. query() validates the input shape, bumps the counter
// and then calls do_query(), so a call that reaches the model is counted
// even when it fails.
class Oracle {
 public:
  virtual ~Oracle() = default;

  Logits query(const VideoTensor& video);

  std::size_t query_count() const noexcept { return query_count_; }
  virtual std::size_t num_classes() const = 0;
  virtual VideoShape expected_shape() const = 0;

 protected:
  virtual Logits do_query(const VideoTensor& video) = 0;

 private:
  std::size_t query_count_ = 0;
};

// logits = W * flatten(x) + b
class ToyLinearSoftmax final : public Oracle {
 public:
  ToyLinearSoftmax(VideoShape shape, std::vector<double> weights, std::vector<double> bias);

  // Weights drawn i.i.d. N(0, weight_scale^2), zero bias.
  static ToyLinearSoftmax random(VideoShape shape, std::size_t num_classes, std::uint64_t seed,
                                 double weight_scale = 1.0);

  // Rewrites bias[label] so that logits(video)[label] - max_{k != label} = margin.
  void calibrate_margin(const VideoTensor& video, Label label, double margin);

  std::span<const double> weights_row(std::size_t k) const;
  std::span<const double> bias() const noexcept { return bias_; }

  std::size_t num_classes() const override { return bias_.size(); }
  VideoShape expected_shape() const override { return shape_; }

  // Evaluates without touching the counter.
  Logits evaluate(const VideoTensor& video) const;

 protected:
  Logits do_query(const VideoTensor& video) override { return evaluate(video); }

 private:
  VideoShape shape_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

// Two classes: [gain * mean(x over moving pixels), gain * mean(x over static pixels)].
// The mask is per pixel position (V*H*W entries) and applies to every channel.
class ToyMotionSensitive final : public Oracle {
 public:
  ToyMotionSensitive(VideoShape shape, std::vector<std::uint8_t> moving_mask, double gain = 1.0);

  std::size_t num_classes() const override { return 2; }
  VideoShape expected_shape() const override { return shape_; }
  std::span<const std::uint8_t> moving_mask() const noexcept { return mask_; }

  Logits evaluate(const VideoTensor& video) const;

 protected:
  Logits do_query(const VideoTensor& video) override { return evaluate(video); }

 private:
  VideoShape shape_;
  std::vector<std::uint8_t> mask_;
  double gain_;
  std::size_t moving_count_ = 0;
  std::size_t static_count_ = 0;
};

// Synthetic clip: a textured square patch translating to the right over a
// static textured background.
struct PatchSceneParams {
  std::size_t patch_size = 16;
  std::size_t speed = 1;  // pixels per frame
  double patch_mean = 0.52;
  double background_mean = 0.50;
  double texture_amplitude = 0.15;
};

struct PatchScene {
  VideoTensor video;
  std::vector<std::uint8_t> moving_mask;  // V*H*W, 1 where the patch is
  std::size_t patch_row = 0;
  std::size_t patch_col0 = 0;  // patch column in frame 0
};

PatchScene make_patch_scene(const VideoShape& shape, std::uint64_t seed,
                            const PatchSceneParams& params = {});

}  // namespace meattack
