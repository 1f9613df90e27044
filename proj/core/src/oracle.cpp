#include "meattack/oracle.hpp"

#include <algorithm>
#include <limits>

#include "meattack/error.hpp"

namespace meattack {

Logits Oracle::query(const VideoTensor& video) {
  const VideoShape expected = expected_shape();
  if (video.shape() != expected) {
    throw ShapeError("oracle expects shape " + expected.to_string() + ", got " +
                     video.shape().to_string());
  }
  ++query_count_;
  return do_query(video);
}

ToyLinearSoftmax::ToyLinearSoftmax(VideoShape shape, std::vector<double> weights,
                                   std::vector<double> bias)
    : shape_(shape), weights_(std::move(weights)), bias_(std::move(bias)) {
  if (!shape_.valid()) throw ShapeError("ToyLinearSoftmax: invalid shape " + shape_.to_string());
  if (bias_.size() < 2) throw InvalidArgument("ToyLinearSoftmax: needs at least 2 classes");
  if (weights_.size() != bias_.size() * shape_.size()) {
    throw ShapeError("ToyLinearSoftmax: weight table must be K x (V*H*W*C)");
  }
}

ToyLinearSoftmax ToyLinearSoftmax::random(VideoShape shape, std::size_t num_classes,
                                          std::uint64_t seed, double weight_scale) {
  Rng rng(seed);
  std::vector<double> w(num_classes * shape.size());
  fill_standard_normal(w, rng);
  for (double& v : w) v *= weight_scale;
  return ToyLinearSoftmax(shape, std::move(w), std::vector<double>(num_classes, 0.0));
}

void ToyLinearSoftmax::calibrate_margin(const VideoTensor& video, Label label, double margin) {
  if (label >= bias_.size()) throw InvalidArgument("calibrate_margin: label out of range");
  const Logits l = evaluate(video);
  double best_other = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < l.size(); ++k) {
    if (k != label) best_other = std::max(best_other, l[k]);
  }
  bias_[label] += margin - (l[label] - best_other);
}

std::span<const double> ToyLinearSoftmax::weights_row(std::size_t k) const {
  return std::span<const double>(weights_).subspan(k * shape_.size(), shape_.size());
}

Logits ToyLinearSoftmax::evaluate(const VideoTensor& video) const {
  if (video.shape() != shape_) {
    throw ShapeError("ToyLinearSoftmax expects " + shape_.to_string() + ", got " +
                     video.shape().to_string());
  }
  Logits out(bias_);
  auto x = video.values();
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto row = weights_row(k);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += row[i] * x[i];
    out[k] += s;
  }
  return out;
}

ToyMotionSensitive::ToyMotionSensitive(VideoShape shape, std::vector<std::uint8_t> moving_mask,
                                       double gain)
    : shape_(shape), mask_(std::move(moving_mask)), gain_(gain) {
  if (!shape_.valid()) throw ShapeError("ToyMotionSensitive: invalid shape " + shape_.to_string());
  if (mask_.size() != shape_.frames * shape_.height * shape_.width) {
    throw ShapeError("ToyMotionSensitive: mask must have V*H*W entries");
  }
  for (auto m : mask_) (m ? moving_count_ : static_count_) += shape_.channels;
  if (moving_count_ == 0 || static_count_ == 0) {
    throw InvalidArgument("ToyMotionSensitive: mask must contain both moving and static pixels");
  }
}

Logits ToyMotionSensitive::evaluate(const VideoTensor& video) const {
  if (video.shape() != shape_) {
    throw ShapeError("ToyMotionSensitive expects " + shape_.to_string() + ", got " +
                     video.shape().to_string());
  }
  double moving = 0.0, still = 0.0;
  auto x = video.values();
  for (std::size_t p = 0; p < mask_.size(); ++p) {
    double s = 0.0;
    for (std::size_t ch = 0; ch < shape_.channels; ++ch) s += x[p * shape_.channels + ch];
    (mask_[p] ? moving : still) += s;
  }
  return {gain_ * moving / static_cast<double>(moving_count_),
          gain_ * still / static_cast<double>(static_count_)};
}

PatchScene make_patch_scene(const VideoShape& shape, std::uint64_t seed,
                            const PatchSceneParams& params) {
  if (!shape.valid()) throw ShapeError("make_patch_scene: invalid shape " + shape.to_string());
  const std::size_t P = params.patch_size;
  if (P == 0 || P > shape.height || P > shape.width) {
    throw InvalidArgument("make_patch_scene: patch must fit in the frame");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> texture(-params.texture_amplitude,
                                                 params.texture_amplitude);

  // Background is drawn first, then the patch texture.
  std::vector<double> background(shape.frame_size());
  for (double& v : background) v = params.background_mean + texture(rng);
  std::vector<double> patch(P * P * shape.channels);
  for (double& v : patch) v = params.patch_mean + texture(rng);

  const std::size_t travel = params.speed * (shape.frames - 1);
  const std::size_t free_cols = shape.width - P;
  PatchScene scene{VideoTensor(shape), std::vector<std::uint8_t>(shape.frames * shape.height * shape.width, 0),
                   (shape.height - P) / 2, travel >= free_cols ? 0 : (free_cols - travel) / 2};

  for (std::size_t f = 0; f < shape.frames; ++f) {
    auto frame = scene.video.frame(f);
    std::copy(background.begin(), background.end(), frame.begin());
    const std::size_t col = std::min(scene.patch_col0 + params.speed * f, free_cols);
    for (std::size_t r = 0; r < P; ++r) {
      for (std::size_t c = 0; c < P; ++c) {
        const std::size_t fr = scene.patch_row + r, fc = col + c;
        scene.moving_mask[(f * shape.height + fr) * shape.width + fc] = 1;
        for (std::size_t ch = 0; ch < shape.channels; ++ch) {
          frame[(fr * shape.width + fc) * shape.channels + ch] =
              patch[(r * P + c) * shape.channels + ch];
        }
      }
    }
  }
  scene.video = clamp_unit(std::move(scene.video));
  return scene;
}

}  // namespace meattack
