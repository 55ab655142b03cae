#include "omtherm/filter.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <mutex>
#include <sstream>

#include "omtherm/errors.hpp"
#include "omtherm/log.hpp"

namespace omtherm {

namespace {

// The FFTW planner is not re-entrant; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Airy intensity transmission of one filter at phase phi = 2 pi f / FSR.
double airy_intensity(double r, double phi) {
  const double loss = 1.0 - r;
  const double s = std::sin(0.5 * phi);
  return loss * loss / (loss * loss + 4.0 * r * s * s);
}

std::complex<double> single_transfer(double r, double omega, double t0) {
  using namespace std::complex_literals;
  const std::complex<double> delay = std::exp(-1i * omega * t0);
  return (1.0 - r) * delay / (1.0 - r * delay * delay);
}

}  // namespace

void FilterStack::validate() const {
  if (!(fwhm_hz > 0.0) || !std::isfinite(fwhm_hz)) throw InvalidParameter("fwhm_hz", "must be > 0");
  if (!(fsr_hz > fwhm_hz) || !std::isfinite(fsr_hz))
    throw InvalidParameter("fsr_hz", "must exceed fwhm_hz");
  if (count < 1) throw InvalidParameter("count", "must be >= 1");
  if (!std::isfinite(detuning_hz)) throw InvalidParameter("detuning_hz", "must be finite");
  if (finesse() <= kPi) throw InvalidParameter("fsr_hz", "finesse fsr/fwhm must exceed pi");
  if (finesse() < 100.0) {
    std::ostringstream msg;
    msg << "filter finesse " << finesse() << " is below 100; the finesse-reflectivity relation "
        << "is a high-finesse approximation";
    warn(msg.str());
  }
}

double FilterStack::reflectivity() const { return reflectivity_from_finesse(finesse()); }

FilterStack FilterStack::narrowband_pair() { return FilterStack{13.2e6, 18.8e9, 2, 0.0}; }

double reflectivity_from_finesse(double finesse) {
  if (!(finesse > kPi) || !std::isfinite(finesse))
    throw DomainError("reflectivity_from_finesse: finesse must exceed pi");
  // pi sqrt(r) / (1 - r) rises monotonically from 0 to infinity on (0, 1).
  auto excess = [finesse](double r) { return kPi * std::sqrt(r) / (1.0 - r) - finesse; };
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-15) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (excess(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::complex<double> amplitude_transfer(const FilterStack& stack, double omega) {
  const double r = stack.reflectivity();
  const double shifted = omega - angular(stack.detuning_hz);
  return std::pow(single_transfer(r, shifted, stack.pass_time()), stack.count);
}

double intensity_transmission(const FilterStack& stack, double frequency_hz) {
  const double r = stack.reflectivity();
  const double phi = kTwoPi * (frequency_hz - stack.detuning_hz) / stack.fsr_hz;
  return std::pow(airy_intensity(r, phi), stack.count);
}

double lorentzian_transmission(const FilterStack& stack, double frequency_hz) {
  const double x = 2.0 * (frequency_hz - stack.detuning_hz) / stack.fwhm_hz;
  return std::pow(1.0 / (1.0 + x * x), stack.count);
}

double suppression_db(const FilterStack& stack, double frequency_hz) {
  return -10.0 * std::log10(intensity_transmission(stack, frequency_hz));
}

struct PulseFilter::Impl {
  std::size_t samples = 0;
  std::size_t fft_size = 0;
  double dt = 0.0;
  std::vector<std::complex<double>> transfer;  // already divided by fft_size
  fftw_complex* buffer = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (buffer) fftw_free(buffer);
  }
};

PulseFilter::PulseFilter(const FilterStack& stack, double dt, std::size_t samples,
                         const TransmitOptions& options)
    : impl_(std::make_unique<Impl>()) {
  stack.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt", "must be > 0");
  if (samples == 0) throw InvalidParameter("samples", "must be > 0");
  if (!(options.padding_response_times >= 10.0))
    throw PaddingError("insufficient zero padding: at least 10 filter response times are "
                       "needed to keep the filter tail from wrapping around");

  // Cascaded filters ring longer, so the tail budget scales with the count.
  const double tail = options.padding_response_times * stack.count * stack.response_time();
  const auto padding = static_cast<std::size_t>(std::ceil(tail / dt));
  const std::size_t needed = samples + padding;
  if (needed > options.max_fft_size || needed < samples)
    throw PaddingError("zero padding for wraparound protection needs " + std::to_string(needed) +
                       " samples, above the FFT budget of " +
                       std::to_string(options.max_fft_size));
  const std::size_t n = std::bit_ceil(needed);

  impl_->samples = samples;
  impl_->fft_size = n;
  impl_->dt = dt;
  impl_->transfer.resize(n);
  const double r = stack.reflectivity();
  const double t0 = stack.pass_time();
  const double detuning = angular(stack.detuning_hz);
  const double dw = kTwoPi / (static_cast<double>(n) * dt);
  for (std::size_t k = 0; k < n; ++k) {
    const auto signed_k = k <= n / 2 ? static_cast<double>(k)
                                     : static_cast<double>(k) - static_cast<double>(n);
    const double omega = signed_k * dw - detuning;
    impl_->transfer[k] =
        std::pow(single_transfer(r, omega, t0), stack.count) / static_cast<double>(n);
  }

  std::lock_guard lock(planner_mutex());
  impl_->buffer = fftw_alloc_complex(n);
  const int size = static_cast<int>(n);
  impl_->forward = fftw_plan_dft_1d(size, impl_->buffer, impl_->buffer, FFTW_FORWARD, FFTW_ESTIMATE);
  impl_->backward =
      fftw_plan_dft_1d(size, impl_->buffer, impl_->buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!impl_->buffer || !impl_->forward || !impl_->backward)
    throw std::runtime_error("FFTW plan creation failed");
}

PulseFilter::~PulseFilter() = default;
PulseFilter::PulseFilter(PulseFilter&&) noexcept = default;
PulseFilter& PulseFilter::operator=(PulseFilter&&) noexcept = default;

std::size_t PulseFilter::samples() const noexcept { return impl_->samples; }
std::size_t PulseFilter::fft_size() const noexcept { return impl_->fft_size; }
double PulseFilter::dt() const noexcept { return impl_->dt; }

std::vector<double> PulseFilter::transmit(std::span<const double> power) {
  std::vector<double> out(impl_->samples);
  transmit(power, out);
  return out;
}

void PulseFilter::transmit(std::span<const double> power, std::span<double> out) {
  const std::size_t n = impl_->samples;
  if (power.size() != n || out.size() != n)
    throw GridMismatch("PulseFilter::transmit: sample count differs from the planned grid");
  fftw_complex* buf = impl_->buffer;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = power[i];
    if (!(p >= 0.0) || !std::isfinite(p))
      throw InvalidParameter("power", "samples must be finite and >= 0");
    buf[i][0] = std::sqrt(p);
    buf[i][1] = 0.0;
  }
  for (std::size_t i = n; i < impl_->fft_size; ++i) buf[i][0] = buf[i][1] = 0.0;

  fftw_execute(impl_->forward);
  for (std::size_t k = 0; k < impl_->fft_size; ++k) {
    const std::complex<double> v =
        std::complex<double>(buf[k][0], buf[k][1]) * impl_->transfer[k];
    buf[k][0] = v.real();
    buf[k][1] = v.imag();
  }
  fftw_execute(impl_->backward);

  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i][0] * buf[i][0] + buf[i][1] * buf[i][1];
}

SampledWaveform transmit_pulse(const FilterStack& stack, const SampledWaveform& p_in,
                               const TransmitOptions& options) {
  p_in.validate_nonnegative();
  PulseFilter filter(stack, p_in.dt, p_in.size(), options);
  return SampledWaveform(p_in.t0, p_in.dt, filter.transmit(p_in.values));
}

SampledWaveform filtered_occupancy_signal(const FilterStack& stack,
                                          const SampledWaveform& occupancy,
                                          const SampledWaveform& nc_envelope,
                                          Sideband sideband) {
  occupancy.validate_grid();
  nc_envelope.validate_nonnegative();
  if (!occupancy.same_grid(nc_envelope))
    throw GridMismatch("filtered_occupancy_signal: occupancy and envelope grids differ");
  if (std::abs(nc_envelope.max() - 1.0) > 1e-6)
    throw InvalidParameter("nc_envelope", "must be normalized to a peak of 1");

  const double vac = vacuum_term(sideband);
  SampledWaveform gated(occupancy.t0, occupancy.dt, std::vector<double>(occupancy.size()));
  for (std::size_t i = 0; i < occupancy.size(); ++i) {
    const double n = occupancy.values[i];
    if (!(n >= 0.0) || !std::isfinite(n))
      throw InvalidParameter("occupancy", "samples must be finite and >= 0");
    gated.values[i] = (n + vac) * nc_envelope.values[i];
  }
  SampledWaveform out = transmit_pulse(stack, gated);
  for (double& v : out.values) v -= vac;
  return out;
}

double cw_sweep_response(const FilterStack& stack, double gamma_m_hz, double delta_p_hz,
                         FilterShape shape) {
  stack.validate();
  if (!(gamma_m_hz > 0.0)) throw InvalidParameter("gamma_m_hz", "must be > 0");

  const double r = stack.reflectivity();
  const double half_width = 0.5 * gamma_m_hz;
  // Filter centered at 0, sideband Lorentzian centered at delta_p.
  auto transmission = [&](double f) {
    if (shape == FilterShape::airy)
      return std::pow(airy_intensity(r, kTwoPi * f / stack.fsr_hz), stack.count);
    const double x = 2.0 * f / stack.fwhm_hz;
    return std::pow(1.0 / (1.0 + x * x), stack.count);
  };
  auto integrand = [&](double f) {
    const double d = f - delta_p_hz;
    return transmission(f) * (gamma_m_hz / kTwoPi) / (d * d + half_width * half_width);
  };

  // One FSR centered on the sideband. Breakpoints resolve both the narrow
  // sideband and every filter order inside the window.
  const double lo = delta_p_hz - 0.5 * stack.fsr_hz;
  const double hi = delta_p_hz + 0.5 * stack.fsr_hz;
  std::vector<double> centers{delta_p_hz};
  for (double c = std::ceil(lo / stack.fsr_hz) * stack.fsr_hz; c <= hi; c += stack.fsr_hz)
    centers.push_back(c);
  std::vector<double> edges{lo, hi};
  for (double c : centers)
    for (double scale : {gamma_m_hz, stack.fwhm_hz})
      for (double m : {0.0, 0.5, 2.0, 8.0, 32.0, 128.0, 512.0, 2048.0})
        for (double sign : {-1.0, 1.0}) {
          const double e = c + sign * m * scale;
          if (e > lo && e < hi) edges.push_back(e);
        }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    total += gauss_kronrod<double, 61>::integrate(integrand, edges[i], edges[i + 1], 15, 1e-11);
  return total;
}

}  // namespace omtherm
