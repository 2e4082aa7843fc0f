#pragma once

#include <string>
#include <vector>

namespace gp3 {

/// h x w x 3 image with values in [0,1], row-major.
struct Image {
  int h = 0;
  int w = 0;
  std::vector<double> rgb;  // size h*w*3
};

/// h x w depth grid, row-major.
struct DepthGrid {
  int h = 0;
  int w = 0;
  std::vector<double> d;  // size h*w
};

/// Binary P6 pixmap, 8-bit channels.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

// Depth binary format: 16-byte header (8-byte magic "GP3DPT01", u32 h, u32 w,
// both little-endian), then h*w IEEE-754 float32 little-endian values.
void write_depth(const std::string& path, const DepthGrid& g);
DepthGrid read_depth(const std::string& path);

}  // namespace gp3
