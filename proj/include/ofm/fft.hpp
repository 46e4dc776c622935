#pragma once

// RAII wrappers over FFTW's double-precision complex transforms. Plans are
// built once per object with FFTW_ESTIMATE | FFTW_UNALIGNED, so results are
// deterministic (no planner-state dependence) and execution on arbitrary
// caller buffers is safe. Plan creation is serialized internally because
// FFTW's planner is not thread-safe; fftw_execute_dft on distinct buffers is.

#include <complex>
#include <vector>

namespace ofm {

class Fft2D {
 public:
  explicit Fft2D(int side);
  ~Fft2D();
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  int side() const { return side_; }
  void forward(std::complex<double>* data) const;  // in place, unnormalized
  void inverse(std::complex<double>* data) const;  // in place, scales by 1/N

 private:
  int side_;
  void* fwd_;
  void* bwd_;
};

class Fft3D {
 public:
  explicit Fft3D(int side);
  ~Fft3D();
  Fft3D(const Fft3D&) = delete;
  Fft3D& operator=(const Fft3D&) = delete;

  int side() const { return side_; }
  void forward(std::complex<double>* data) const;
  void inverse(std::complex<double>* data) const;

 private:
  int side_;
  void* fwd_;
  void* bwd_;
};

// signed frequency for bin k of an n-point transform, in cycles per n samples
inline int freq_index(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace ofm
