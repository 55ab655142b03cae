#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "omtherm/units.hpp"
#include "omtherm/waveform.hpp"

namespace omtherm {

enum class Sideband { stokes, anti_stokes };

/// Vacuum contribution (1 +- 1)/2: one quantum for Stokes, zero for anti-Stokes.
constexpr double vacuum_term(Sideband sb) noexcept { return sb == Sideband::stokes ? 1.0 : 0.0; }

/// A cascade of identical lossless Fabry-Perot filters.
struct FilterStack {
  double fwhm_hz = 0.0;      ///< single-filter intensity FWHM
  double fsr_hz = 0.0;       ///< free spectral range
  int count = 1;             ///< number of filters in series
  double detuning_hz = 0.0;  ///< stack center relative to the signal carrier

  /// Throws InvalidParameter on fwhm/fsr/count violations; warns when the
  /// finesse is below 100 (the Airy/finesse relation assumes F >> 1).
  void validate() const;

  double finesse() const noexcept { return fsr_hz / fwhm_hz; }
  double reflectivity() const;
  /// One-way passage time t_0 = 1 / (2 FSR).
  double pass_time() const noexcept { return 0.5 / fsr_hz; }
  /// Field 1/e response time of one filter, 1 / (pi FWHM).
  double response_time() const noexcept { return 1.0 / (kPi * fwhm_hz); }

  /// Two 13.2 MHz / 18.8 GHz filters in series, centered on the signal.
  static FilterStack narrowband_pair();
};

/// Mirror reflectivity r in (0, 1) with pi sqrt(r) / (1 - r) = finesse,
/// by bisection. Throws DomainError when finesse <= pi.
double reflectivity_from_finesse(double finesse);

/// Field transfer of the whole stack at angular offset omega (rad/s) from
/// the signal carrier: [(1 - r) e^{-i w t0} / (1 - r e^{-2 i w t0})]^count,
/// evaluated at omega - 2 pi detuning.
std::complex<double> amplitude_transfer(const FilterStack& stack, double omega);

/// |amplitude_transfer|^2 at an ordinary-frequency offset (Hz).
double intensity_transmission(const FilterStack& stack, double frequency_hz);

/// Lorentzian approximation (1 + (2 (f - detuning) / FWHM)^2)^(-count).
double lorentzian_transmission(const FilterStack& stack, double frequency_hz);

/// Suppression in dB (positive number) at an ordinary-frequency offset.
double suppression_db(const FilterStack& stack, double frequency_hz);

struct TransmitOptions {
  /// Trailing zeros appended before the FFT, in filter response times.
  /// Values below 10 are rejected as insufficient.
  double padding_response_times = 10.0;
  /// Largest FFT length the caller is willing to allocate.
  std::size_t max_fft_size = std::size_t{1} << 24;
};

/// Frequency-domain pulse propagation through a filter stack on a fixed
/// grid. Holds its own FFT plans and buffers: one instance per thread.
class PulseFilter {
public:
  PulseFilter(const FilterStack& stack, double dt, std::size_t samples,
              const TransmitOptions& options = {});
  ~PulseFilter();
  PulseFilter(PulseFilter&&) noexcept;
  PulseFilter& operator=(PulseFilter&&) noexcept;
  PulseFilter(const PulseFilter&) = delete;
  PulseFilter& operator=(const PulseFilter&) = delete;

  std::size_t samples() const noexcept;
  std::size_t fft_size() const noexcept;
  double dt() const noexcept;

  /// Output power |F^-1[F[sqrt(P)] t^k]|^2 on the input grid. `power` must
  /// hold samples() finite nonnegative values.
  std::vector<double> transmit(std::span<const double> power);
  void transmit(std::span<const double> power, std::span<double> out);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot wrapper around PulseFilter.
SampledWaveform transmit_pulse(const FilterStack& stack, const SampledWaveform& p_in,
                               const TransmitOptions& options = {});

/// Measured-occupancy waveform n_m*(t): the pulse-gated signal
/// (n_m + vacuum) * envelope pushed through the stack, minus the vacuum term.
/// Both inputs must share one grid; the envelope must peak at 1.
SampledWaveform filtered_occupancy_signal(const FilterStack& stack,
                                          const SampledWaveform& occupancy,
                                          const SampledWaveform& nc_envelope, Sideband sideband);

enum class FilterShape { airy, lorentzian };

/// Relative CW detection rate of a Lorentzian sideband (FWHM gamma_m_hz)
/// when the stack is centered delta_p_hz away from it. delta_p_hz replaces
/// the stack's own detuning. Adaptive Gauss-Kronrod quadrature over one FSR.
double cw_sweep_response(const FilterStack& stack, double gamma_m_hz, double delta_p_hz,
                         FilterShape shape = FilterShape::airy);

}  // namespace omtherm
