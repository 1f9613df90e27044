#include "meattack/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "meattack/error.hpp"

namespace meattack {

std::string to_string(LookupMode mode) {
  return mode == LookupMode::raw ? "raw" : "traceback";
}

LookupMode default_lookup_mode(MotionKind kind) {
  return kind == MotionKind::handcrafted ? LookupMode::raw : LookupMode::traceback;
}

LookupMap::LookupMap(std::size_t height, std::size_t width)
    : height_(height), width_(width), coords_(2 * height * width, 0) {}

namespace {

std::int32_t round_clamp(double x, std::size_t extent) {
  const double r = std::floor(x + 0.5);
  const double hi = static_cast<double>(extent - 1);
  return static_cast<std::int32_t>(std::clamp(r, 0.0, hi));
}

bool is_moving(const MotionMap& m, std::size_t r, std::size_t c) {
  return m.u(r, c) != 0.0 || m.v(r, c) != 0.0;
}

}  // namespace

LookupMap to_lookup(const MotionMap& map, LookupMode mode) {
  const std::size_t H = map.height(), W = map.width();
  LookupMap out(H, W);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      const double u = map.u(r, c), v = map.v(r, c);
      if (std::isnan(u) || std::isnan(v)) {
        throw InvalidArgument("to_lookup: NaN in motion map at (" + std::to_string(r) + "," +
                              std::to_string(c) + ")");
      }
      if (mode == LookupMode::raw) {
        out.set(r, c, round_clamp(u, H), round_clamp(v, W));
      } else {
        out.set(r, c, round_clamp(static_cast<double>(r) - v, H),
                round_clamp(static_cast<double>(c) - u, W));
      }
    }
  }
  return out;
}

SparkedPrior me_sample(const NoiseTensor& noise, const MotionStack& stack,
                       std::optional<LookupMode> mode) {
  const auto& s = noise.shape();
  if (stack.size() != s.frames) {
    throw ShapeError("me_sample: noise has " + std::to_string(s.frames) +
                     " frames but the motion stack has " + std::to_string(stack.size()));
  }
  SparkedPrior out{NoiseTensor(s), stack.indices, mode};
  std::map<std::size_t, LookupMap> lookups;
  for (std::size_t f = 0; f < s.frames; ++f) {
    const std::size_t idx = stack.indices[f];
    auto it = lookups.find(idx);
    if (it == lookups.end()) {
      const MotionMap& m = stack.map(f);
      if (m.height() != s.height || m.width() != s.width) {
        throw ShapeError("me_sample: motion map is " + std::to_string(m.height()) + "x" +
                         std::to_string(m.width()) + ", noise frames are " +
                         std::to_string(s.height) + "x" + std::to_string(s.width));
      }
      it = lookups.emplace(idx, to_lookup(m, mode.value_or(default_lookup_mode(m.kind())))).first;
    }
    const LookupMap& lk = it->second;
    auto src = noise.frame(f);
    auto dst = out.values.frame(f);
    for (std::size_t r = 0; r < s.height; ++r) {
      for (std::size_t c = 0; c < s.width; ++c) {
        const std::size_t from =
            (static_cast<std::size_t>(lk.row(r, c)) * s.width + static_cast<std::size_t>(lk.col(r, c))) *
            s.channels;
        const std::size_t to = (r * s.width + c) * s.channels;
        for (std::size_t ch = 0; ch < s.channels; ++ch) dst[to + ch] = src[from + ch];
      }
    }
  }
  return out;
}

NoiseTensor one_noise(const VideoShape& shape, Rng& rng) {
  NoiseTensor out(shape);
  auto first = out.frame(0);
  fill_standard_normal(first, rng);
  for (std::size_t f = 1; f < shape.frames; ++f) {
    std::copy(first.begin(), first.end(), out.frame(f).begin());
  }
  return out;
}

NoiseTensor multi_noise(const VideoShape& shape, Rng& rng) {
  NoiseTensor out(shape);
  fill_standard_normal(out.values(), rng);
  return out;
}

MotionMap u_sample_map(const MotionMap& reference, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MotionMap out(reference.height(), reference.width(), MotionKind::handcrafted);
  for (std::size_t r = 0; r < reference.height(); ++r) {
    for (std::size_t c = 0; c < reference.width(); ++c) {
      const double u = unit(rng) * 100.0 - 50.0;
      const double v = unit(rng) * 100.0 - 50.0;
      if (is_moving(reference, r, c)) out.set(r, c, u, v);
    }
  }
  return out;
}

MotionMap s_value_map(const MotionMap& reference) {
  MotionMap out(reference.height(), reference.width(), MotionKind::handcrafted);
  for (std::size_t r = 0; r < reference.height(); ++r) {
    for (std::size_t c = 0; c < reference.width(); ++c) {
      if (!is_moving(reference, r, c)) continue;
      const auto idx = static_cast<double>(r * reference.width() + c);
      out.set(r, c, idx, idx);
    }
  }
  return out;
}

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::me_mv: return "me_mv";
    case SamplerKind::me_of: return "me_of";
    case SamplerKind::one_noise: return "one_noise";
    case SamplerKind::multi_noise: return "multi_noise";
    case SamplerKind::u_sample: return "u_sample";
    case SamplerKind::s_value: return "s_value";
  }
  return "unknown";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  for (auto k : {SamplerKind::me_mv, SamplerKind::me_of, SamplerKind::one_noise,
                 SamplerKind::multi_noise, SamplerKind::u_sample, SamplerKind::s_value}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown sampler '" + name + "'");
}

MotionSet handcrafted_set(const MotionSet& reference, SamplerKind kind, Rng& rng) {
  if (kind != SamplerKind::u_sample && kind != SamplerKind::s_value) {
    throw InvalidArgument("handcrafted_set: only u_sample and s_value build handcrafted maps");
  }
  MotionSet out;
  out.interval_length = reference.interval_length;
  out.source_id = reference.source_id;
  out.maps.reserve(reference.maps.size());
  for (const auto& m : reference.maps) {
    out.maps.push_back(kind == SamplerKind::u_sample ? u_sample_map(m, rng) : s_value_map(m));
  }
  return out;
}

}  // namespace meattack
