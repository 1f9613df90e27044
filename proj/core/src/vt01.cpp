#include "meattack/vt01.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

#include "meattack/error.hpp"

namespace meattack::vt01 {

namespace {

constexpr std::array<char, 4> kMagic = {'V', 'T', '0', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  os.write(b, 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError("VT01: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

std::size_t RawTensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void write(std::ostream& os, const RawTensor& t) {
  if (t.dims.size() > 255) throw FormatError("VT01: rank must fit in one byte");
  if (t.element_count() != t.data.size()) {
    throw ShapeError("VT01: payload size does not match dims");
  }
  os.write(kMagic.data(), kMagic.size());
  os.put(static_cast<char>(kDtypeF32));
  os.put(static_cast<char>(t.dims.size()));
  for (auto d : t.dims) put_u32(os, d);
  for (float f : t.data) put_u32(os, std::bit_cast<std::uint32_t>(f));
  if (!os) throw FormatError("VT01: write failed");
}

RawTensor read(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size())) throw FormatError("VT01: truncated header");
  if (magic != kMagic) throw BadMagicError("VT01: bad magic, not a VT01 file");
  const int dtype = is.get();
  const int rank = is.get();
  if (dtype == std::char_traits<char>::eof() || rank == std::char_traits<char>::eof()) {
    throw FormatError("VT01: truncated header");
  }
  if (dtype != kDtypeF32) {
    throw BadDtypeError("VT01: unsupported dtype code " + std::to_string(dtype));
  }
  RawTensor t;
  t.dims.resize(static_cast<std::size_t>(rank));
  for (auto& d : t.dims) d = get_u32(is);
  const std::size_t n = t.element_count();
  t.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError("VT01: truncated payload");
    const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                               (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) |
                               (static_cast<std::uint32_t>(b[3]) << 24);
    t.data[i] = std::bit_cast<float>(bits);
  }
  return t;
}

void write_file(const std::filesystem::path& path, const RawTensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("VT01: cannot open " + path.string() + " for writing");
  write(os, t);
}

RawTensor read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("VT01: cannot open " + path.string());
  return read(is);
}

RawTensor from_video(const VideoTensor& video) {
  const auto& s = video.shape();
  RawTensor t;
  t.dims = {static_cast<std::uint32_t>(s.frames), static_cast<std::uint32_t>(s.height),
            static_cast<std::uint32_t>(s.width), static_cast<std::uint32_t>(s.channels)};
  t.data.reserve(video.size());
  for (double v : video.values()) t.data.push_back(static_cast<float>(v));
  return t;
}

VideoTensor to_video(const RawTensor& t) {
  if (t.dims.size() != 4) {
    throw ShapeError("VT01: expected a rank-4 video tensor, got rank " +
                     std::to_string(t.dims.size()));
  }
  VideoShape s{t.dims[0], t.dims[1], t.dims[2], t.dims[3]};
  return VideoTensor(s, std::vector<double>(t.data.begin(), t.data.end()));
}

RawTensor from_motion_map(const MotionMap& map) {
  RawTensor t;
  t.dims = {static_cast<std::uint32_t>(map.height()), static_cast<std::uint32_t>(map.width()), 2};
  for (double v : map.values()) t.data.push_back(static_cast<float>(v));
  return t;
}

MotionMap to_motion_map(const RawTensor& t, MotionKind kind) {
  if (t.dims.size() != 3 || t.dims[2] != 2) {
    throw ShapeError("VT01: expected a rank-3 [H,W,2] motion map");
  }
  return MotionMap(t.dims[0], t.dims[1], kind, std::vector<double>(t.data.begin(), t.data.end()));
}

RawTensor from_motion_set(const MotionSet& set) {
  if (set.maps.empty()) throw InvalidArgument("VT01: cannot serialise an empty motion set");
  const auto H = set.maps.front().height();
  const auto W = set.maps.front().width();
  RawTensor t;
  t.dims = {static_cast<std::uint32_t>(set.maps.size()), static_cast<std::uint32_t>(H),
            static_cast<std::uint32_t>(W), 2};
  for (const auto& m : set.maps) {
    if (m.height() != H || m.width() != W) throw ShapeError("VT01: motion maps differ in size");
    for (double v : m.values()) t.data.push_back(static_cast<float>(v));
  }
  return t;
}

MotionSet to_motion_set(const RawTensor& t, MotionKind kind, std::size_t interval_length) {
  if (t.dims.size() != 4 || t.dims[3] != 2) {
    throw ShapeError("VT01: expected a rank-4 [N,H,W,2] motion set");
  }
  MotionSet set;
  set.interval_length = interval_length;
  const std::size_t per = static_cast<std::size_t>(t.dims[1]) * t.dims[2] * 2;
  for (std::size_t n = 0; n < t.dims[0]; ++n) {
    auto first = t.data.begin() + static_cast<std::ptrdiff_t>(n * per);
    set.maps.emplace_back(t.dims[1], t.dims[2], kind,
                          std::vector<double>(first, first + static_cast<std::ptrdiff_t>(per)));
  }
  return set;
}

}  // namespace meattack::vt01
