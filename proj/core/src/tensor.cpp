#include "meattack/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/random/normal_distribution.hpp>

#include "meattack/error.hpp"

namespace meattack {

std::string VideoShape::to_string() const {
  std::ostringstream os;
  os << '[' << frames << ',' << height << ',' << width << ',' << channels << ']';
  return os.str();
}

VideoTensor::VideoTensor(VideoShape shape, double fill) : shape_(shape) {
  if (!shape.valid()) {
    throw ShapeError("video shape must have every dimension >= 1, got " + shape.to_string());
  }
  values_.assign(shape.size(), fill);
}

VideoTensor::VideoTensor(VideoShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (!shape.valid()) {
    throw ShapeError("video shape must have every dimension >= 1, got " + shape.to_string());
  }
  if (values_.size() != shape.size()) {
    throw ShapeError("payload has " + std::to_string(values_.size()) + " values, shape " +
                     shape.to_string() + " needs " + std::to_string(shape.size()));
  }
}

std::span<double> VideoTensor::frame(std::size_t f) {
  const std::size_t n = shape_.frame_size();
  return std::span<double>(values_).subspan(f * n, n);
}

std::span<const double> VideoTensor::frame(std::size_t f) const {
  const std::size_t n = shape_.frame_size();
  return std::span<const double>(values_).subspan(f * n, n);
}

void require_same_shape(const VideoTensor& a, const VideoTensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().to_string() + " vs " +
                     b.shape().to_string());
  }
}

VideoTensor clip_to_ball(const VideoTensor& x, const VideoTensor& x0, double kappa) {
  require_same_shape(x, x0, "clip_to_ball");
  if (!(kappa > 0.0)) throw InvalidArgument("clip_to_ball: kappa must be > 0");
  VideoTensor out = x;
  auto o = out.values();
  auto c = x0.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double v = std::min(std::max(o[i], c[i] - kappa), c[i] + kappa);
    o[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

VideoTensor clamp_unit(VideoTensor x) {
  for (double& v : x.values()) v = std::clamp(v, 0.0, 1.0);
  return x;
}

NoiseTensor sign(const NoiseTensor& t) {
  NoiseTensor out = t;
  for (double& v : out.values()) v = (v > 0.0) ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  return out;
}

double linf_dist(const VideoTensor& a, const VideoTensor& b) {
  require_same_shape(a, b, "linf_dist");
  double m = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) m = std::max(m, std::abs(av[i] - bv[i]));
  return m;
}

double inner_product(const VideoTensor& a, const VideoTensor& b) {
  require_same_shape(a, b, "inner_product");
  double s = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  return s;
}

double l2_norm(const VideoTensor& a) { return std::sqrt(inner_product(a, a)); }

void axpy(double alpha, const VideoTensor& x, VideoTensor& y) {
  require_same_shape(x, y, "axpy");
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < xv.size(); ++i) yv[i] += alpha * xv[i];
}

bool in_unit_range(const VideoTensor& x) {
  return std::all_of(x.values().begin(), x.values().end(),
                     [](double v) { return v >= 0.0 && v <= 1.0; });
}

void fill_standard_normal(std::span<double> out, Rng& rng) {
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out) v = normal(rng);
}

}  // namespace meattack
