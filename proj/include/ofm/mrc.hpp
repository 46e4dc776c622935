#pragma once

// Minimal MRC2014 I/O: 1024-byte header, mode 2 (little-endian float32),
// machine stamp 0x44 0x44 0x00 0x00. Volumes use ispg 1, image stacks
// ispg 0 with nz counting images. Pixel size rides in the cell dimensions.

#include <cstdint>
#include <string>
#include <vector>

namespace ofm {

struct MrcFile {
  int nx = 0, ny = 0, nz = 0;  // x fastest in data
  double pixel_size = 1.0;     // angstrom per pixel
  bool is_volume = false;
  std::vector<float> data;     // nx*ny*nz
};

void write_mrc(const std::string& path, const MrcFile& m);
MrcFile read_mrc(const std::string& path);

}  // namespace ofm
