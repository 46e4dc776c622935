#pragma once

// Synthetic cryo-EM image formation: phantom volumes, real-space projection
// along rotated rays, parametric CTF, SNR-targeted noise, mask/standardize
// preprocessing, the fixed blur-bank input layer, and dataset assembly with
// deterministic per-image randomness.

#include <cstdint>
#include <string>
#include <vector>

#include "ofm/orient_table.hpp"
#include "ofm/so3.hpp"

namespace ofm {

struct Volume {
  int side = 0;
  double pixel_size = 1.0;  // angstrom per voxel
  std::vector<double> data; // x fastest, then y, then z

  double& at(int x, int y, int z) {
    return data[(static_cast<size_t>(z) * side + y) * side + x];
  }
  double at(int x, int y, int z) const {
    return data[(static_cast<size_t>(z) * side + y) * side + x];
  }
};

enum class PhantomKind { Asymmetric, D2 };

// Sum of gaussian blobs inside a sphere of radius 0.33 * side. The D2 kind
// replicates every blob under the group so the volume is exactly invariant.
Volume make_phantom(int side, double pixel_size, PhantomKind kind, uint64_t seed);

struct Image {
  int side = 0;
  double pixel_size = 1.0;
  std::vector<double> pixels;  // x fastest

  double& at(int x, int y) { return pixels[static_cast<size_t>(y) * side + x]; }
  double at(int x, int y) const { return pixels[static_cast<size_t>(y) * side + x]; }
};

// Line integral along z after rotating the volume by q: output pixel (i, j)
// accumulates trilinear samples of the volume at R(q)^T * p for ray points
// p = (i - c - shift_x, j - c - shift_y, t), c = side/2. Because sampling
// uses R^T on the ray, orientations q and q*s (s a symmetry of the volume)
// give identical projections.
Image project(const Volume& v, const Quat& q, double shift_x, double shift_y);

struct CtfParams {
  double defocus = 15000.0;          // angstrom, positive underfocus
  double cs_mm = 2.7;                // spherical aberration
  double voltage_kv = 300.0;
  double amplitude_contrast = 0.1;   // fraction in [0, 1)
};

// h(f) = -sin(pi lambda dz f^2 - pi/2 lambda^3 cs f^4 + phi_amp) with
// phi_amp = asin(amplitude_contrast) and the relativistic electron
// wavelength lambda = 12.2639 / sqrt(V + 0.97845e-6 V^2) angstrom.
double ctf_value(const CtfParams& p, double freq_inv_angstrom);
double electron_wavelength(double voltage_kv);

// multiplies the image spectrum by ctf_value(|f|)
Image ctf_apply(const Image& img, const CtfParams& p);

// White gaussian noise scaled so var(signal)/var(noise) inside the standard
// circular mask equals snr. snr must be positive and the masked signal must
// not be flat.
Image add_noise_for_snr(const Image& img, double snr, uint64_t seed);

// zero outside the circular mask (radius side/2 - 1), zero-mean and
// unit-variance inside it
Image preprocess(const Image& img);

enum class BlurMode { None, Gaussian, LowPass };
BlurMode blur_mode_from_name(const std::string& name);
std::string blur_mode_name(BlurMode m);

struct MultiChannel {
  int channels = 0, side = 0;
  std::vector<double> data;  // channel, then y, then x

  double* channel(int c) { return data.data() + static_cast<size_t>(c) * side * side; }
  const double* channel(int c) const {
    return data.data() + static_cast<size_t>(c) * side * side;
  }
};

// Fixed input stage: channel 0 is the image itself; channel k >= 1 keeps a
// passband of f_nyquist / 2^k, either as a gaussian response or an ideal
// cutoff. Mode None copies the image into a single channel regardless of
// n_filters.
MultiChannel blur_bank(const Image& img, BlurMode mode, int n_filters);

// Quasi-even deterministic orientation grid: Fibonacci-sphere view
// directions crossed with n_inplane in-plane angles, staggered per view so
// rings do not align.
std::vector<Quat> grid_orientations(int n_views, int n_inplane);

struct SimParams {
  int side = 48;
  // Angstrom per pixel. At 48 px this box spans 240 A; keep it coarse enough
  // that the CTF stays resolvable per frequency bin over the defocus range.
  double pixel_size = 5.0;
  int n_images = 1000;
  double snr = 0.1;         // <= 0 disables noise
  double shift_max = 0.0;   // pixels, uniform in [-shift_max, shift_max]
  bool apply_ctf = true;
  double defocus_min = 5000.0, defocus_max = 25000.0;
  CtfParams ctf;            // defocus is drawn per image
  std::string symmetry = "C1";
};

struct Dataset {
  std::vector<Image> images;  // raw (project -> ctf -> noise)
  OrientTable truth;
  std::string symmetry = "C1";
  double pixel_size = 1.0;
};

// Split rule shared by every consumer: first 50% train, next 17% val,
// remaining 33% test, by index.
struct SplitSizes {
  int train = 0, val = 0, test = 0;
};
SplitSizes split_sizes(int n_images);

Dataset generate_dataset(const Volume& vol, const SimParams& p, uint64_t seed);

void write_volume_mrc(const std::string& path, const Volume& v);
Volume read_volume_mrc(const std::string& path);
void write_stack_mrc(const std::string& path, const std::vector<Image>& images);
std::vector<Image> read_stack_mrc(const std::string& path);

}  // namespace ofm
