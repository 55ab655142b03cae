#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace omtherm {

/// Real samples on a uniform time grid t_i = t0 + i * dt.
struct SampledWaveform {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> values;

  SampledWaveform() = default;
  SampledWaveform(double start, double step, std::vector<double> samples)
      : t0(start), dt(step), values(std::move(samples)) {}

  std::size_t size() const noexcept { return values.size(); }
  double time(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * dt; }
  double t_end() const noexcept { return time(values.size()); }

  /// Same start, spacing and length, to a relative tolerance of 1e-9 of dt.
  bool same_grid(const SampledWaveform& other) const noexcept;

  /// Throws InvalidParameter unless dt > 0 and at least one sample exists.
  void validate_grid() const;
  /// validate_grid plus every sample finite and >= 0.
  void validate_nonnegative() const;

  double max() const;

  /// Samples f(t_i) on [t0, t0 + n dt).
  template <class F>
  static SampledWaveform sample(double start, double step, std::size_t n, F&& f) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = f(start + static_cast<double>(i) * step);
    return SampledWaveform(start, step, std::move(v));
  }
};

}  // namespace omtherm
