#include "ofm/mrc.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ofm {

namespace {

void put_i32(unsigned char* p, int32_t v) {
  p[0] = static_cast<unsigned char>(v & 0xff);
  p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
  p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
  p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

void put_f32(unsigned char* p, float v) {
  static_assert(sizeof(float) == 4);
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_i32(p, static_cast<int32_t>(bits));
}

int32_t get_i32(const unsigned char* p) {
  return static_cast<int32_t>(static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                              (static_cast<uint32_t>(p[2]) << 16) |
                              (static_cast<uint32_t>(p[3]) << 24));
}

float get_f32(const unsigned char* p) {
  uint32_t bits = static_cast<uint32_t>(get_i32(p));
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void write_mrc(const std::string& path, const MrcFile& m) {
  if (m.nx <= 0 || m.ny <= 0 || m.nz <= 0 ||
      m.data.size() != static_cast<size_t>(m.nx) * m.ny * m.nz)
    throw std::invalid_argument("write_mrc: inconsistent dimensions");

  double dmin = m.data[0], dmax = m.data[0], sum = 0;
  for (float v : m.data) {
    dmin = std::min<double>(dmin, v);
    dmax = std::max<double>(dmax, v);
    sum += v;
  }
  double mean = sum / static_cast<double>(m.data.size());
  double var = 0;
  for (float v : m.data) var += (v - mean) * (v - mean);
  double rms = std::sqrt(var / static_cast<double>(m.data.size()));

  unsigned char h[1024] = {0};
  put_i32(h + 0, m.nx);
  put_i32(h + 4, m.ny);
  put_i32(h + 8, m.nz);
  put_i32(h + 12, 2);  // mode 2: float32
  // nxstart/nystart/nzstart stay 0
  put_i32(h + 28, m.nx);  // mx
  put_i32(h + 32, m.ny);
  put_i32(h + 36, m.is_volume ? m.nz : 1);  // mz: one section per image in a stack
  put_f32(h + 40, static_cast<float>(m.nx * m.pixel_size));  // cella
  put_f32(h + 44, static_cast<float>(m.ny * m.pixel_size));
  put_f32(h + 48, static_cast<float>((m.is_volume ? m.nz : 1) * m.pixel_size));
  put_f32(h + 52, 90.0f);  // cellb
  put_f32(h + 56, 90.0f);
  put_f32(h + 60, 90.0f);
  put_i32(h + 64, 1);  // mapc/mapr/maps
  put_i32(h + 68, 2);
  put_i32(h + 72, 3);
  put_f32(h + 76, static_cast<float>(dmin));
  put_f32(h + 80, static_cast<float>(dmax));
  put_f32(h + 84, static_cast<float>(mean));
  put_i32(h + 88, m.is_volume ? 1 : 0);  // ispg
  put_i32(h + 92, 0);                    // nsymbt
  std::memcpy(h + 208, "MAP ", 4);
  h[212] = 0x44;  // machine stamp, little endian
  h[213] = 0x44;
  put_f32(h + 216, static_cast<float>(rms));
  put_i32(h + 220, 0);  // nlabl

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_mrc: cannot open " + path);
  out.write(reinterpret_cast<const char*>(h), 1024);
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(float)));
  if (!out) throw std::runtime_error("write_mrc: write failed for " + path);
}

MrcFile read_mrc(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_mrc: cannot open " + path);
  unsigned char h[1024];
  in.read(reinterpret_cast<char*>(h), 1024);
  if (!in) throw std::runtime_error("read_mrc: truncated header in " + path);
  if (std::memcmp(h + 208, "MAP ", 4) != 0)
    throw std::runtime_error("read_mrc: missing MAP magic in " + path);
  if (h[212] != 0x44 || h[213] != 0x44)
    throw std::runtime_error("read_mrc: unsupported byte order in " + path);
  if (get_i32(h + 12) != 2)
    throw std::runtime_error("read_mrc: only mode 2 supported in " + path);

  MrcFile m;
  m.nx = get_i32(h + 0);
  m.ny = get_i32(h + 4);
  m.nz = get_i32(h + 8);
  if (m.nx <= 0 || m.ny <= 0 || m.nz <= 0)
    throw std::runtime_error("read_mrc: bad dimensions in " + path);
  int mx = get_i32(h + 28);
  m.pixel_size = mx > 0 ? static_cast<double>(get_f32(h + 40)) / mx : 1.0;
  m.is_volume = get_i32(h + 88) != 0;
  m.data.resize(static_cast<size_t>(m.nx) * m.ny * m.nz);
  in.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(float)));
  if (!in) throw std::runtime_error("read_mrc: truncated data in " + path);
  return m;
}

}  // namespace ofm
