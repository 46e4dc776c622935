#include "ofm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "ofm/fft.hpp"
#include "ofm/mrc.hpp"
#include "ofm/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ofm {

namespace {

struct Blob {
  double cx, cy, cz, sigma, amp;
};

}  // namespace

Volume make_phantom(int side, double pixel_size, PhantomKind kind, uint64_t seed) {
  require(side >= 8, "make_phantom: side too small");
  Rng rng(seed);
  std::vector<Blob> blobs;
  const double rmax = 0.33 * side;
  const int base = kind == PhantomKind::Asymmetric ? 14 : 5;
  for (int b = 0; b < base; ++b) {
    Blob blob;
    // rejection-sample the center inside the sphere
    do {
      blob.cx = rng.uniform(-rmax, rmax);
      blob.cy = rng.uniform(-rmax, rmax);
      blob.cz = rng.uniform(-rmax, rmax);
    } while (blob.cx * blob.cx + blob.cy * blob.cy + blob.cz * blob.cz > rmax * rmax);
    blob.sigma = rng.uniform(0.035, 0.09) * side;
    blob.amp = rng.uniform(0.6, 1.5);
    if (kind == PhantomKind::D2) {
      // orbit under {e, Rz(pi), Ry(pi), Rx(pi)}
      blobs.push_back({blob.cx, blob.cy, blob.cz, blob.sigma, blob.amp});
      blobs.push_back({-blob.cx, -blob.cy, blob.cz, blob.sigma, blob.amp});
      blobs.push_back({-blob.cx, blob.cy, -blob.cz, blob.sigma, blob.amp});
      blobs.push_back({blob.cx, -blob.cy, -blob.cz, blob.sigma, blob.amp});
    } else {
      blobs.push_back(blob);
    }
  }

  Volume v;
  v.side = side;
  v.pixel_size = pixel_size;
  v.data.assign(static_cast<size_t>(side) * side * side, 0.0);
  const double c = side / 2.0;
  for (const Blob& b : blobs) {
    const double inv2s2 = 1.0 / (2.0 * b.sigma * b.sigma);
    const int reach = static_cast<int>(std::ceil(4.0 * b.sigma));
    const int x0 = std::max(0, static_cast<int>(std::floor(b.cx + c)) - reach);
    const int x1 = std::min(side - 1, static_cast<int>(std::ceil(b.cx + c)) + reach);
    const int y0 = std::max(0, static_cast<int>(std::floor(b.cy + c)) - reach);
    const int y1 = std::min(side - 1, static_cast<int>(std::ceil(b.cy + c)) + reach);
    const int z0 = std::max(0, static_cast<int>(std::floor(b.cz + c)) - reach);
    const int z1 = std::min(side - 1, static_cast<int>(std::ceil(b.cz + c)) + reach);
    for (int z = z0; z <= z1; ++z)
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          double dx = x - c - b.cx, dy = y - c - b.cy, dz = z - c - b.cz;
          v.at(x, y, z) += b.amp * std::exp(-(dx * dx + dy * dy + dz * dz) * inv2s2);
        }
  }
  return v;
}

namespace {

inline double trilinear(const Volume& v, double x, double y, double z) {
  // zero outside [0, side-1]^3
  if (x < 0 || y < 0 || z < 0 || x > v.side - 1 || y > v.side - 1 || z > v.side - 1)
    return 0.0;
  int x0 = std::min(static_cast<int>(x), v.side - 2);
  int y0 = std::min(static_cast<int>(y), v.side - 2);
  int z0 = std::min(static_cast<int>(z), v.side - 2);
  double fx = x - x0, fy = y - y0, fz = z - z0;
  double c00 = v.at(x0, y0, z0) * (1 - fx) + v.at(x0 + 1, y0, z0) * fx;
  double c10 = v.at(x0, y0 + 1, z0) * (1 - fx) + v.at(x0 + 1, y0 + 1, z0) * fx;
  double c01 = v.at(x0, y0, z0 + 1) * (1 - fx) + v.at(x0 + 1, y0, z0 + 1) * fx;
  double c11 = v.at(x0, y0 + 1, z0 + 1) * (1 - fx) + v.at(x0 + 1, y0 + 1, z0 + 1) * fx;
  double c0 = c00 * (1 - fy) + c10 * fy;
  double c1 = c01 * (1 - fy) + c11 * fy;
  return c0 * (1 - fz) + c1 * fz;
}

}  // namespace

Image project(const Volume& v, const Quat& q, double shift_x, double shift_y) {
  require(v.side > 1 && !v.data.empty(), "project: empty volume");
  Mat3 rt = transpose(quat_to_rotmat(q));
  Image img;
  img.side = v.side;
  img.pixel_size = v.pixel_size;
  img.pixels.assign(static_cast<size_t>(v.side) * v.side, 0.0);
  const double c = v.side / 2.0;
  for (int j = 0; j < v.side; ++j) {
    for (int i = 0; i < v.side; ++i) {
      const double u = i - c - shift_x;
      const double w = j - c - shift_y;
      double acc = 0.0;
      for (int t = 0; t < v.side; ++t) {
        const double zz = t - c;
        const double sx = rt[0] * u + rt[1] * w + rt[2] * zz + c;
        const double sy = rt[3] * u + rt[4] * w + rt[5] * zz + c;
        const double sz = rt[6] * u + rt[7] * w + rt[8] * zz + c;
        acc += trilinear(v, sx, sy, sz);
      }
      img.at(i, j) = acc;
    }
  }
  return img;
}

double electron_wavelength(double voltage_kv) {
  double v = voltage_kv * 1000.0;
  return 12.2639 / std::sqrt(v + 0.97845e-6 * v * v);
}

double ctf_value(const CtfParams& p, double f) {
  const double lambda = electron_wavelength(p.voltage_kv);
  const double cs = p.cs_mm * 1e7;  // mm -> angstrom
  const double phi_amp = std::asin(p.amplitude_contrast);
  const double f2 = f * f;
  const double chi = kPi * lambda * p.defocus * f2 - 0.5 * kPi * lambda * lambda * lambda * cs * f2 * f2;
  return -std::sin(chi + phi_amp);
}

Image ctf_apply(const Image& img, const CtfParams& p) {
  require(img.side > 1, "ctf_apply: empty image");
  require(p.amplitude_contrast >= 0.0 && p.amplitude_contrast < 1.0,
          "ctf_apply: amplitude contrast out of range");
  const int n = img.side;
  Fft2D fft(n);
  std::vector<std::complex<double>> spec(static_cast<size_t>(n) * n);
  for (size_t i = 0; i < spec.size(); ++i) spec[i] = img.pixels[i];
  fft.forward(spec.data());
  const double df = 1.0 / (n * img.pixel_size);
  for (int ky = 0; ky < n; ++ky) {
    const double fy = freq_index(ky, n) * df;
    for (int kx = 0; kx < n; ++kx) {
      const double fx = freq_index(kx, n) * df;
      spec[static_cast<size_t>(ky) * n + kx] *= ctf_value(p, std::sqrt(fx * fx + fy * fy));
    }
  }
  fft.inverse(spec.data());
  Image out = img;
  for (size_t i = 0; i < spec.size(); ++i) out.pixels[i] = spec[i].real();
  return out;
}

namespace {

double mask_radius(int side) { return side / 2.0 - 1.0; }

// mean and variance over the circular mask
void mask_moments(const Image& img, double& mean, double& var) {
  const double r2 = mask_radius(img.side) * mask_radius(img.side);
  const double c = img.side / 2.0;
  double sum = 0, sum2 = 0;
  long count = 0;
  for (int y = 0; y < img.side; ++y)
    for (int x = 0; x < img.side; ++x) {
      double dx = x - c, dy = y - c;
      if (dx * dx + dy * dy > r2) continue;
      double v = img.at(x, y);
      sum += v;
      sum2 += v * v;
      ++count;
    }
  mean = sum / count;
  var = std::max(0.0, sum2 / count - mean * mean);
}

}  // namespace

Image add_noise_for_snr(const Image& img, double snr, uint64_t seed) {
  require(snr > 0.0, "add_noise_for_snr: snr must be positive");
  double mean, var;
  mask_moments(img, mean, var);
  if (var <= 1e-30) throw DegenerateInput("add_noise_for_snr: flat signal inside mask");
  const double sigma = std::sqrt(var / snr);
  Rng rng(seed);
  Image out = img;
  for (double& v : out.pixels) v += rng.gaussian(0.0, sigma);
  return out;
}

Image preprocess(const Image& img) {
  double mean, var;
  mask_moments(img, mean, var);
  if (var <= 1e-24) throw DegenerateInput("preprocess: flat image inside mask");
  const double inv_std = 1.0 / std::sqrt(var);
  const double r2 = mask_radius(img.side) * mask_radius(img.side);
  const double c = img.side / 2.0;
  Image out = img;
  for (int y = 0; y < img.side; ++y)
    for (int x = 0; x < img.side; ++x) {
      double dx = x - c, dy = y - c;
      out.at(x, y) = dx * dx + dy * dy > r2 ? 0.0 : (img.at(x, y) - mean) * inv_std;
    }
  return out;
}

BlurMode blur_mode_from_name(const std::string& name) {
  if (name == "none") return BlurMode::None;
  if (name == "gaussian") return BlurMode::Gaussian;
  if (name == "lowpass") return BlurMode::LowPass;
  throw DegenerateInput("blur_mode_from_name: unknown mode " + name);
}

std::string blur_mode_name(BlurMode m) {
  switch (m) {
    case BlurMode::None: return "none";
    case BlurMode::Gaussian: return "gaussian";
    default: return "lowpass";
  }
}

MultiChannel blur_bank(const Image& img, BlurMode mode, int n_filters) {
  require(n_filters >= 1, "blur_bank: need at least one channel");
  const int n = img.side;
  MultiChannel mc;
  mc.side = n;
  mc.channels = mode == BlurMode::None ? 1 : n_filters;
  mc.data.assign(static_cast<size_t>(mc.channels) * n * n, 0.0);
  std::copy(img.pixels.begin(), img.pixels.end(), mc.channel(0));
  if (mode == BlurMode::None || n_filters == 1) return mc;

  Fft2D fft(n);
  std::vector<std::complex<double>> base(static_cast<size_t>(n) * n);
  for (size_t i = 0; i < base.size(); ++i) base[i] = img.pixels[i];
  fft.forward(base.data());

  std::vector<std::complex<double>> work(base.size());
  const double nyq = 0.5;  // cycles per pixel
  for (int ch = 1; ch < n_filters; ++ch) {
    const double cutoff = nyq / std::pow(2.0, ch);
    for (int ky = 0; ky < n; ++ky) {
      const double fy = static_cast<double>(freq_index(ky, n)) / n;
      for (int kx = 0; kx < n; ++kx) {
        const double fx = static_cast<double>(freq_index(kx, n)) / n;
        const double f2 = fx * fx + fy * fy;
        double gain;
        if (mode == BlurMode::Gaussian)
          gain = std::exp(-f2 / (2.0 * cutoff * cutoff));
        else
          gain = f2 <= cutoff * cutoff ? 1.0 : 0.0;
        work[static_cast<size_t>(ky) * n + kx] =
            base[static_cast<size_t>(ky) * n + kx] * gain;
      }
    }
    fft.inverse(work.data());
    double* dst = mc.channel(ch);
    for (size_t i = 0; i < work.size(); ++i) dst[i] = work[i].real();
  }
  return mc;
}

std::vector<Quat> grid_orientations(int n_views, int n_inplane) {
  require(n_views >= 1 && n_inplane >= 1, "grid_orientations: counts must be positive");
  std::vector<Quat> out;
  out.reserve(static_cast<size_t>(n_views) * n_inplane);
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  for (int v = 0; v < n_views; ++v) {
    const double z = 1.0 - 2.0 * (v + 0.5) / n_views;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double az = golden_angle * v;
    const double dx = r * std::cos(az), dy = r * std::sin(az), dz = z;
    // rotation taking +z to (dx, dy, dz)
    Quat align;
    if (dz > 1.0 - 1e-12) {
      align = {1, 0, 0, 0};
    } else if (dz < -1.0 + 1e-12) {
      align = {0, 1, 0, 0};  // pi about x
    } else {
      double ang = std::acos(std::clamp(dz, -1.0, 1.0));
      double axn = std::sqrt(dx * dx + dy * dy);
      double s = std::sin(ang / 2);
      align = Quat{std::cos(ang / 2), -dy / axn * s, dx / axn * s, 0.0};
    }
    const double stagger = std::fmod(0.61803398874989484820 * v, 1.0);
    for (int t = 0; t < n_inplane; ++t) {
      double psi = 2.0 * kPi * (t + stagger) / n_inplane;
      Quat spin{std::cos(psi / 2), 0, 0, std::sin(psi / 2)};
      out.push_back((align * spin).canonical());
    }
  }
  return out;
}

SplitSizes split_sizes(int n_images) {
  require(n_images >= 3, "split_sizes: need at least three images");
  SplitSizes s;
  s.train = (n_images * 50) / 100;
  s.val = (n_images * 67) / 100 - s.train;
  s.test = n_images - s.train - s.val;
  return s;
}

Dataset generate_dataset(const Volume& vol, const SimParams& p, uint64_t seed) {
  require(p.n_images >= 3, "generate_dataset: need at least three images");
  require(p.defocus_min <= p.defocus_max, "generate_dataset: bad defocus range");
  SymmetryGroup::from_name(p.symmetry);  // validates the name

  Dataset ds;
  ds.symmetry = p.symmetry;
  ds.pixel_size = vol.pixel_size;
  ds.images.resize(static_cast<size_t>(p.n_images));
  ds.truth.records.resize(static_cast<size_t>(p.n_images));

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < p.n_images; ++i) {
    // one generator per image: results do not depend on thread count
    Rng rng(mix_seed(seed, static_cast<uint64_t>(i)));
    Quat q = sample_uniform_rotation(rng).canonical();
    double sx = p.shift_max > 0 ? rng.uniform(-p.shift_max, p.shift_max) : 0.0;
    double sy = p.shift_max > 0 ? rng.uniform(-p.shift_max, p.shift_max) : 0.0;
    double defocus = rng.uniform(p.defocus_min, p.defocus_max);

    Image img = project(vol, q, sx, sy);
    if (p.apply_ctf) {
      CtfParams ctf = p.ctf;
      ctf.defocus = defocus;
      img = ctf_apply(img, ctf);
    }
    if (p.snr > 0)
      img = add_noise_for_snr(img, p.snr, mix_seed(seed, 0x10000000ull + i));
    // images stay raw (project -> ctf -> noise); masking/standardization is
    // the encoder input stage, and reconstruction wants unscaled pixels
    ds.images[i] = std::move(img);

    OrientRecord rec;
    rec.index = i;
    rec.q = q;
    rec.shift_x = sx;
    rec.shift_y = sy;
    rec.defocus = p.apply_ctf ? defocus : 0.0;
    rec.snr_target = p.snr;
    ds.truth.records[i] = rec;
  }
  return ds;
}

void write_volume_mrc(const std::string& path, const Volume& v) {
  MrcFile m;
  m.nx = m.ny = m.nz = v.side;
  m.pixel_size = v.pixel_size;
  m.is_volume = true;
  m.data.assign(v.data.begin(), v.data.end());
  write_mrc(path, m);
}

Volume read_volume_mrc(const std::string& path) {
  MrcFile m = read_mrc(path);
  if (m.nx != m.ny || m.ny != m.nz)
    throw std::runtime_error("read_volume_mrc: expected a cube in " + path);
  Volume v;
  v.side = m.nx;
  v.pixel_size = m.pixel_size;
  v.data.assign(m.data.begin(), m.data.end());
  return v;
}

void write_stack_mrc(const std::string& path, const std::vector<Image>& images) {
  require(!images.empty(), "write_stack_mrc: empty stack");
  const int side = images.front().side;
  for (const auto& im : images)
    require(im.side == side, "write_stack_mrc: mixed image sizes");
  MrcFile m;
  m.nx = m.ny = side;
  m.nz = static_cast<int>(images.size());
  m.pixel_size = images.front().pixel_size;
  m.is_volume = false;
  m.data.resize(static_cast<size_t>(side) * side * images.size());
  for (size_t k = 0; k < images.size(); ++k)
    std::copy(images[k].pixels.begin(), images[k].pixels.end(),
              m.data.begin() + static_cast<std::ptrdiff_t>(k * side * side));
  write_mrc(path, m);
}

std::vector<Image> read_stack_mrc(const std::string& path) {
  MrcFile m = read_mrc(path);
  std::vector<Image> images(static_cast<size_t>(m.nz));
  for (int k = 0; k < m.nz; ++k) {
    Image& im = images[static_cast<size_t>(k)];
    im.side = m.nx;
    im.pixel_size = m.pixel_size;
    im.pixels.assign(m.data.begin() + static_cast<std::ptrdiff_t>(k) * m.nx * m.ny,
                     m.data.begin() + static_cast<std::ptrdiff_t>(k + 1) * m.nx * m.ny);
    if (m.nx != m.ny) throw std::runtime_error("read_stack_mrc: non-square images");
  }
  return images;
}

}  // namespace ofm
