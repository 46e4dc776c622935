#include "ofm/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace ofm {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Fft2D::Fft2D(int side) : side_(side) {
  if (side < 2) throw std::invalid_argument("Fft2D: side must be at least 2");
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_complex* scratch = fftw_alloc_complex(static_cast<size_t>(side) * side);
  fwd_ = fftw_plan_dft_2d(side, side, scratch, scratch, FFTW_FORWARD,
                          FFTW_ESTIMATE | FFTW_UNALIGNED);
  bwd_ = fftw_plan_dft_2d(side, side, scratch, scratch, FFTW_BACKWARD,
                          FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(scratch);
  if (!fwd_ || !bwd_) throw std::runtime_error("Fft2D: planning failed");
}

Fft2D::~Fft2D() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void Fft2D::forward(std::complex<double>* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
}

void Fft2D::inverse(std::complex<double>* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(bwd_), reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
  const double inv = 1.0 / (static_cast<double>(side_) * side_);
  const size_t n = static_cast<size_t>(side_) * side_;
  for (size_t i = 0; i < n; ++i) data[i] *= inv;
}

Fft3D::Fft3D(int side) : side_(side) {
  if (side < 2) throw std::invalid_argument("Fft3D: side must be at least 2");
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_complex* scratch =
      fftw_alloc_complex(static_cast<size_t>(side) * side * side);
  fwd_ = fftw_plan_dft_3d(side, side, side, scratch, scratch, FFTW_FORWARD,
                          FFTW_ESTIMATE | FFTW_UNALIGNED);
  bwd_ = fftw_plan_dft_3d(side, side, side, scratch, scratch, FFTW_BACKWARD,
                          FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(scratch);
  if (!fwd_ || !bwd_) throw std::runtime_error("Fft3D: planning failed");
}

Fft3D::~Fft3D() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void Fft3D::forward(std::complex<double>* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
}

void Fft3D::inverse(std::complex<double>* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(bwd_), reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
  const double inv = 1.0 / (static_cast<double>(side_) * side_ * side_);
  const size_t n = static_cast<size_t>(side_) * side_ * side_;
  for (size_t i = 0; i < n; ++i) data[i] *= inv;
}

}  // namespace ofm
