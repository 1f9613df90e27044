#include "meattack/motion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "meattack/error.hpp"

namespace meattack {

std::string to_string(MotionKind kind) {
  switch (kind) {
    case MotionKind::block_mv: return "block_mv";
    case MotionKind::accumulated_mv: return "accumulated_mv";
    case MotionKind::optical_flow: return "optical_flow";
    case MotionKind::handcrafted: return "handcrafted";
  }
  return "unknown";
}

MotionMap::MotionMap(std::size_t height, std::size_t width, MotionKind kind)
    : height_(height), width_(width), kind_(kind), uv_(2 * height * width, 0.0) {
  if (height == 0 || width == 0) throw ShapeError("motion map needs H >= 1 and W >= 1");
}

MotionMap::MotionMap(std::size_t height, std::size_t width, MotionKind kind, std::vector<double> uv)
    : height_(height), width_(width), kind_(kind), uv_(std::move(uv)) {
  if (height == 0 || width == 0) throw ShapeError("motion map needs H >= 1 and W >= 1");
  if (uv_.size() != 2 * height * width) {
    throw ShapeError("motion map payload has " + std::to_string(uv_.size()) + " values, expected " +
                     std::to_string(2 * height * width));
  }
}

GrayFrame to_gray(const VideoTensor& video, std::size_t f) {
  const auto& s = video.shape();
  if (f >= s.frames) throw InvalidArgument("to_gray: frame index out of range");
  GrayFrame g{s.height, s.width, std::vector<double>(s.height * s.width)};
  auto src = video.frame(f);
  for (std::size_t p = 0; p < s.height * s.width; ++p) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < s.channels; ++ch) acc += src[p * s.channels + ch];
    g.pixels[p] = acc / static_cast<double>(s.channels);
  }
  return g;
}

namespace {

void require_same_dims(const GrayFrame& a, const GrayFrame& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError(std::string(what) + ": frame size mismatch " + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                     std::to_string(b.width));
  }
  if (a.pixels.size() != a.height * a.width || b.pixels.size() != b.height * b.width) {
    throw ShapeError(std::string(what) + ": frame payload does not match its dimensions");
  }
}

long round_half_up(double x) { return static_cast<long>(std::floor(x + 0.5)); }

}  // namespace

MotionMap estimate_block_motion(const GrayFrame& ref, const GrayFrame& cur,
                                const BlockMatchParams& params) {
  require_same_dims(ref, cur, "estimate_block_motion");
  if (params.block_size < 1) throw InvalidArgument("estimate_block_motion: block_size must be >= 1");
  if (params.search_radius < 0) {
    throw InvalidArgument("estimate_block_motion: search_radius must be >= 0");
  }
  const long H = static_cast<long>(cur.height);
  const long W = static_cast<long>(cur.width);
  const long B = params.block_size;
  const long R = params.search_radius;

  MotionMap out(cur.height, cur.width, MotionKind::block_mv);
  for (long by = 0; by < H; by += B) {
    const long bh = std::min(B, H - by);
    for (long bx = 0; bx < W; bx += B) {
      const long bw = std::min(B, W - bx);
      double best_sad = std::numeric_limits<double>::infinity();
      long best_norm = std::numeric_limits<long>::max();
      long best_dy = 0, best_dx = 0;
      for (long dy = -R; dy <= R; ++dy) {
        const long ry = by + dy;
        if (ry < 0 || ry + bh > H) continue;
        for (long dx = -R; dx <= R; ++dx) {
          const long rx = bx + dx;
          if (rx < 0 || rx + bw > W) continue;
          double sad = 0.0;
          for (long y = 0; y < bh; ++y) {
            const double* c = &cur.pixels[(by + y) * W + bx];
            const double* r = &ref.pixels[(ry + y) * W + rx];
            for (long x = 0; x < bw; ++x) sad += std::abs(c[x] - r[x]);
          }
          const long norm = std::labs(dy) + std::labs(dx);
          if (sad < best_sad || (sad == best_sad && norm < best_norm)) {
            best_sad = sad;
            best_norm = norm;
            best_dy = dy;
            best_dx = dx;
          }
        }
      }
      const double u = static_cast<double>(-best_dx);
      const double v = static_cast<double>(-best_dy);
      for (long y = by; y < by + bh; ++y) {
        for (long x = bx; x < bx + bw; ++x) out.set(y, x, u, v);
      }
    }
  }
  return out;
}

MotionMap accumulate_interval(std::span<const GrayFrame> frames, const BlockMatchParams& params) {
  if (frames.size() < 2) throw InvalidArgument("accumulate_interval: needs at least 2 frames");
  std::vector<MotionMap> steps;
  steps.reserve(frames.size() - 1);
  for (std::size_t t = 1; t < frames.size(); ++t) {
    steps.push_back(estimate_block_motion(frames[t - 1], frames[t], params));
  }

  const std::size_t H = frames.back().height;
  const std::size_t W = frames.back().width;
  const double max_r = static_cast<double>(H - 1);
  const double max_c = static_cast<double>(W - 1);
  MotionMap out(H, W, MotionKind::accumulated_mv);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      double pr = static_cast<double>(r);
      double pc = static_cast<double>(c);
      double total_u = 0.0;
      double total_v = 0.0;
      for (std::size_t t = steps.size(); t-- > 0;) {
        const auto qr = static_cast<std::size_t>(std::clamp(static_cast<double>(round_half_up(pr)), 0.0, max_r));
        const auto qc = static_cast<std::size_t>(std::clamp(static_cast<double>(round_half_up(pc)), 0.0, max_c));
        const double du = steps[t].u(qr, qc);
        const double dv = steps[t].v(qr, qc);
        total_u += du;
        total_v += dv;
        pr -= dv;
        pc -= du;
      }
      out.set(r, c, total_u, total_v);
    }
  }
  return out;
}

namespace {

struct FlowGradients {
  std::vector<double> ix, iy, it;
};

// Intensities are scaled to 8-bit units so alpha has its usual magnitude.
FlowGradients flow_gradients(const GrayFrame& ref, const GrayFrame& cur) {
  const std::size_t H = ref.height, W = ref.width;
  FlowGradients g{std::vector<double>(H * W), std::vector<double>(H * W),
                  std::vector<double>(H * W)};
  constexpr double kScale = 255.0;
  auto dx = [&](const GrayFrame& f, std::size_t r, std::size_t c) {
    const std::size_t l = c == 0 ? 0 : c - 1;
    const std::size_t h = c + 1 == W ? c : c + 1;
    return h == l ? 0.0 : (f.at(r, h) - f.at(r, l)) / static_cast<double>(h - l);
  };
  auto dy = [&](const GrayFrame& f, std::size_t r, std::size_t c) {
    const std::size_t l = r == 0 ? 0 : r - 1;
    const std::size_t h = r + 1 == H ? r : r + 1;
    return h == l ? 0.0 : (f.at(h, c) - f.at(l, c)) / static_cast<double>(h - l);
  };
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      const std::size_t p = r * W + c;
      g.ix[p] = kScale * 0.5 * (dx(ref, r, c) + dx(cur, r, c));
      g.iy[p] = kScale * 0.5 * (dy(ref, r, c) + dy(cur, r, c));
      g.it[p] = kScale * (cur.pixels[p] - ref.pixels[p]);
    }
  }
  return g;
}

double energy_from_gradients(const FlowGradients& g, const MotionMap& flow, double alpha) {
  const std::size_t H = flow.height(), W = flow.width();
  double data = 0.0;
  double smooth = 0.0;
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      const std::size_t p = r * W + c;
      const double u = flow.u(r, c), v = flow.v(r, c);
      const double rho = g.ix[p] * u + g.iy[p] * v + g.it[p];
      data += rho * rho;
      if (c + 1 < W) {
        const double a = u - flow.u(r, c + 1), b = v - flow.v(r, c + 1);
        smooth += a * a + b * b;
      }
      if (r + 1 < H) {
        const double a = u - flow.u(r + 1, c), b = v - flow.v(r + 1, c);
        smooth += a * a + b * b;
      }
    }
  }
  return data + alpha * smooth;
}

}  // namespace

double optical_flow_energy(const GrayFrame& ref, const GrayFrame& cur, const MotionMap& flow,
                           double alpha) {
  require_same_dims(ref, cur, "optical_flow_energy");
  if (flow.height() != ref.height || flow.width() != ref.width) {
    throw ShapeError("optical_flow_energy: flow field does not match frame size");
  }
  return energy_from_gradients(flow_gradients(ref, cur), flow, alpha);
}

MotionMap estimate_optical_flow(const GrayFrame& ref, const GrayFrame& cur,
                                const FlowParams& params, const FlowObserver& observer) {
  require_same_dims(ref, cur, "estimate_optical_flow");
  if (params.iterations <= 0) throw InvalidArgument("estimate_optical_flow: iterations must be > 0");
  if (params.alpha < 0.0) throw InvalidArgument("estimate_optical_flow: alpha must be >= 0");

  const std::size_t H = ref.height, W = ref.width;
  const FlowGradients g = flow_gradients(ref, cur);
  MotionMap flow(H, W, MotionKind::optical_flow);

  // Red-black sweeps: each half-sweep minimises the energy exactly over one
  // colour with the other held fixed, so the energy never increases.
  for (int iter = 1; iter <= params.iterations; ++iter) {
    for (std::size_t colour = 0; colour < 2; ++colour) {
      for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t c = (r + colour) % 2; c < W; c += 2) {
          double su = 0.0, sv = 0.0;
          int n = 0;
          auto add = [&](std::size_t rr, std::size_t cc) {
            su += flow.u(rr, cc);
            sv += flow.v(rr, cc);
            ++n;
          };
          if (r > 0) add(r - 1, c);
          if (r + 1 < H) add(r + 1, c);
          if (c > 0) add(r, c - 1);
          if (c + 1 < W) add(r, c + 1);
          const std::size_t p = r * W + c;
          const double ix = g.ix[p], iy = g.iy[p], it = g.it[p];
          if (n == 0) {
            // 1x1 frame: pure data term.
            const double d = ix * ix + iy * iy;
            if (d > 0.0) flow.set(r, c, -ix * it / d, -iy * it / d);
            continue;
          }
          const double ubar = su / n, vbar = sv / n;
          const double denom = params.alpha * n + ix * ix + iy * iy;
          if (denom == 0.0) {
            flow.set(r, c, ubar, vbar);
            continue;
          }
          const double k = (ix * ubar + iy * vbar + it) / denom;
          flow.set(r, c, ubar - ix * k, vbar - iy * k);
        }
      }
    }
    if (observer) observer(iter, flow);
  }
  return flow;
}

MotionSet build_motion_set(const VideoTensor& video, MotionRepresentation repr,
                           std::size_t interval_length, const MotionParams& params,
                           std::string source_id) {
  const std::size_t V = video.shape().frames;
  if (interval_length < 2) throw InvalidArgument("build_motion_set: interval length must be >= 2");
  if (V < interval_length) {
    throw InvalidArgument("build_motion_set: video has " + std::to_string(V) +
                          " frames, fewer than the interval length " +
                          std::to_string(interval_length));
  }
  MotionSet set;
  set.interval_length = interval_length;
  set.source_id = std::move(source_id);
  const std::size_t n_intervals = V / interval_length;
  set.maps.reserve(n_intervals);
  for (std::size_t n = 0; n < n_intervals; ++n) {
    const std::size_t first = n * interval_length;
    if (repr == MotionRepresentation::mv) {
      std::vector<GrayFrame> frames;
      frames.reserve(interval_length);
      for (std::size_t t = 0; t < interval_length; ++t) frames.push_back(to_gray(video, first + t));
      set.maps.push_back(accumulate_interval(frames, params.block));
    } else {
      set.maps.push_back(estimate_optical_flow(to_gray(video, first),
                                               to_gray(video, first + interval_length - 1),
                                               params.flow));
    }
  }
  return set;
}

MotionStack sample_motion_stack(std::shared_ptr<const MotionSet> set, std::size_t frames,
                                Rng& rng) {
  if (!set || set->maps.empty()) throw InvalidArgument("sample_motion_stack: empty motion set");
  if (frames == 0) throw InvalidArgument("sample_motion_stack: frame count must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, set->maps.size() - 1);
  MotionStack stack{std::move(set), {}};
  stack.indices.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f) stack.indices.push_back(pick(rng));
  return stack;
}

}  // namespace meattack
