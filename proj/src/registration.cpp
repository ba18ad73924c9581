#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <mutex>
#include <tuple>
#include <vector>

#include "ltgsr/errors.hpp"
#include "ltgsr/imaging.hpp"

namespace ltgsr {
namespace {

// FFTW's planner is not re-entrant.
std::mutex g_plan_mutex;

using Spectrum = std::vector<std::complex<double>>;

Spectrum dft2(Spectrum data, int h, int w, int sign) {
  Spectrum out(data.size());
  fftw_plan plan;
  {
    std::lock_guard lock(g_plan_mutex);
    plan = fftw_plan_dft_2d(h, w, reinterpret_cast<fftw_complex*>(data.data()),
                            reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(g_plan_mutex);
    fftw_destroy_plan(plan);
  }
  return out;
}

Spectrum forward(const Image& img) {
  Spectrum s(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) s[i] = img.pixels()[i];
  return dft2(std::move(s), img.height(), img.width(), FFTW_FORWARD);
}

bool is_constant(const Image& img) {
  const double first = img.pixels()[0];
  for (double v : img.pixels()) {
    if (std::abs(v - first) > 1e-12) return false;
  }
  return true;
}

int wrap(int k, int n) { return k >= (n + 1) / 2 ? k - n : k; }

}  // namespace

Shift phase_correlate(const Image& fixed, const Image& moving) {
  if (!fixed.same_dims(moving)) throw InvalidArgument("phase_correlate: dims differ");
  if (is_constant(fixed) || is_constant(moving)) {
    throw DegenerateInput("phase_correlate: constant input has no spectral energy off DC");
  }
  const int h = fixed.height(), w = fixed.width();
  const Spectrum f = forward(fixed);
  const Spectrum m = forward(moving);
  Spectrum cross(f.size());
  double peak_mag = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    cross[i] = m[i] * std::conj(f[i]);
    peak_mag = std::max(peak_mag, std::abs(cross[i]));
  }
  const double floor = 1e-15 * peak_mag;
  for (auto& c : cross) {
    const double mag = std::abs(c);
    c = mag > floor ? c / mag : std::complex<double>(0.0, 0.0);
  }
  const Spectrum surface = dft2(std::move(cross), h, w, FFTW_BACKWARD);

  double best_value = -1e300;
  for (const auto& c : surface) best_value = std::max(best_value, c.real());
  const double tie = 1e-9 * std::abs(best_value);
  Shift best;
  bool found = false;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (surface[static_cast<std::size_t>(y) * w + x].real() < best_value - tie) continue;
      const Shift s{wrap(y, h), wrap(x, w)};
      auto key = [](const Shift& v) { return std::tuple(std::abs(v.dy) + std::abs(v.dx), v.dy, v.dx); };
      if (!found || key(s) < key(best)) best = s;
      found = true;
    }
  }
  return best;
}

std::pair<Image, Image> crop_overlap(const Image& hr, const Image& lr, Shift shift) {
  if (!hr.same_dims(lr)) throw InvalidArgument("crop_overlap: dims differ");
  const int h = hr.height() - std::abs(shift.dy);
  const int w = hr.width() - std::abs(shift.dx);
  const int th = h / 4 * 4, tw = w / 4 * 4;
  if (th < 32 || tw < 32) {
    throw RegistrationFailed("overlap " + std::to_string(std::max(h, 0)) + "x" + std::to_string(std::max(w, 0)) +
                             " is smaller than 32x32");
  }
  const int hr_top = std::max(0, -shift.dy), hr_left = std::max(0, -shift.dx);
  return {crop(hr, hr_top, hr_left, th, tw), crop(lr, hr_top + shift.dy, hr_left + shift.dx, th, tw)};
}

std::pair<Image, Image> register_crop(const Image& hr, const Image& lr_full) {
  if (!hr.same_dims(lr_full)) throw InvalidArgument("register_crop: dims differ");
  return crop_overlap(hr, lr_full, phase_correlate(hr, lr_full));
}

}  // namespace ltgsr
