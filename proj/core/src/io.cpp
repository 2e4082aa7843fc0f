#include "gp3/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "gp3/tensor.hpp"

namespace gp3 {

namespace {

constexpr char kDepthMagic[8] = {'G', 'P', '3', 'D', 'P', 'T', '0', '1'};

void put_u32le(std::ostream& os, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

std::uint32_t get_u32le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

}  // namespace

void write_ppm(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_ppm: cannot open " + path);
  os << "P6\n" << img.w << " " << img.h << "\n255\n";
  for (double v : img.rgb) {
    const int q = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255));
    os.put(static_cast<char>(q));
  }
  if (!os) throw Error("write_ppm: write failed for " + path);
}

Image read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_ppm: cannot open " + path);
  std::string magic;
  is >> magic;
  if (magic != "P6") throw Error("read_ppm: not a P6 pixmap: " + path);
  int w, h, maxval;
  is >> w >> h >> maxval;
  if (maxval != 255) throw Error("read_ppm: only 8-bit pixmaps supported");
  is.get();  // single whitespace after header
  Image img;
  img.w = w;
  img.h = h;
  img.rgb.resize(static_cast<size_t>(w) * h * 3);
  std::vector<unsigned char> buf(img.rgb.size());
  is.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!is) throw Error("read_ppm: truncated file " + path);
  for (size_t i = 0; i < buf.size(); ++i) img.rgb[i] = buf[i] / 255.0;
  return img;
}

void write_depth(const std::string& path, const DepthGrid& g) {
  if (static_cast<size_t>(g.h) * g.w != g.d.size())
    throw Error("write_depth: grid size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_depth: cannot open " + path);
  os.write(kDepthMagic, 8);
  put_u32le(os, static_cast<std::uint32_t>(g.h));
  put_u32le(os, static_cast<std::uint32_t>(g.w));
  for (double v : g.d) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32le(os, bits);
  }
  if (!os) throw Error("write_depth: write failed for " + path);
}

DepthGrid read_depth(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_depth: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kDepthMagic, 8) != 0)
    throw Error("read_depth: bad magic in " + path);
  DepthGrid g;
  g.h = static_cast<int>(get_u32le(is));
  g.w = static_cast<int>(get_u32le(is));
  if (!is || g.h <= 0 || g.w <= 0 || g.h > 1 << 20 || g.w > 1 << 20)
    throw Error("read_depth: bad header in " + path);
  g.d.resize(static_cast<size_t>(g.h) * g.w);
  for (auto& v : g.d) {
    const std::uint32_t bits = get_u32le(is);
    if (!is) throw Error("read_depth: truncated file " + path);
    float f;
    std::memcpy(&f, &bits, 4);
    v = f;
  }
  return g;
}

}  // namespace gp3
