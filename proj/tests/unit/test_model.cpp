#include <cmath>

#include <doctest.h>

#include "oracles.hpp"
#include "omtherm/errors.hpp"
#include "omtherm/model.hpp"
#include "omtherm/units.hpp"

using namespace omtherm;
using doctest::Approx;

TEST_CASE("device validation names the field") {
  DeviceParams d = fixtures::release_free_device();
  CHECK_NOTHROW(d.validate());
  CHECK(d.resolved_sideband());
  d.kappa_i_hz *= 1.5;
  try {
    d.validate();
    FAIL("expected InvalidParameter");
  } catch (const InvalidParameter& e) {
    CHECK(std::string(e.what()).find("kappa") != std::string::npos);
  }
  d = fixtures::release_free_device();
  d.g_om_hz = 0.0;
  CHECK_THROWS_AS(d.validate(), InvalidParameter);
}

TEST_CASE("gamma_om") {
  const auto dev = fixtures::release_free_device();
  CHECK(gamma_om(dev, 1.0) == Approx(542.0).epsilon(1.0 / 542.0));
  CHECK(gamma_om(dev, 0.0) == 0.0);
  const double p = scattering_probability(dev, 128.0, 100e-9);
  CHECK(p > 0.04);
  CHECK(p < 0.06);
}

TEST_CASE("occupancy_at follows the relaxation law") {
  OccupancyDynamics dyn{0.0, 10.0, 530e3, 1e-6, 1e-6};
  CHECK(occupancy_at(dyn, dyn.t_start) == 0.0);
  CHECK(occupancy_at(dyn, dyn.t_start + std::log(2.0) / angular(dyn.gamma_m_hz)) == Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(occupancy_at(dyn, dyn.t_start - 1e-9), DomainError);
  CHECK_THROWS_AS(occupancy_at(dyn, dyn.t_end() + 1e-9), DomainError);

  OccupancyDynamics slow{1.0, 3.0, 1e9, 0.0, 1e-6};
  CHECK(occupancy_at(slow, slow.t_end()) == Approx(3.0).epsilon(1e-6));

  SUBCASE("monotone and bounded") {
    OccupancyDynamics d{2.5, 0.3, 400e3, 0.0, 1e-6};
    double prev = occupancy_at(d, 0.0);
    for (int i = 1; i <= 200; ++i) {
      const double v = occupancy_at(d, d.duration * i / 200.0);
      CHECK(v <= prev);
      CHECK(v >= 0.3);
      CHECK(v <= 2.5);
      prev = v;
    }
  }
}

TEST_CASE("average_occupancy") {
  CHECK(average_occupancy({0.7, 0.7, 1e5, 0.0, 1e-6}) == Approx(0.7));
  CHECK(average_occupancy({0.4, 2.0, 1e-3, 0.0, 1e-6}) == Approx(0.4).epsilon(1e-6));
  const double gamma = 1.0 / (kTwoPi * 100e-9);
  CHECK(average_occupancy({0.0, 1.0, gamma, 0.0, 100e-9}) == Approx(std::exp(-1.0)).epsilon(1e-12));

  for (const auto& d : {OccupancyDynamics{0.42, 1.25, 530e3, 0.0, 100e-9}, OccupancyDynamics{3.0, 0.1, 2e6, 5e-9, 1e-6}}) {
    const double avg = average_occupancy(d);
    const double quad = oracle::simpson([&](double t) { return occupancy_at(d, t); }, d.t_start, d.t_end(), 2000) / d.duration;
    CHECK(avg == Approx(quad).epsilon(1e-9));
    CHECK(avg >= std::min(d.n_i, d.n_f));
    CHECK(avg <= std::max(d.n_i, d.n_f));
  }
}

TEST_CASE("gamma_m_of_nc power law") {
  const BathModel bath = fixtures::release_free_bath();
  CHECK(gamma_m_of_nc(bath, 0.0) == bath.gamma_0_hz);
  CHECK(gamma_m_of_nc(bath, 1.0) == Approx(510.17e3));
  const double cross = hot_bath_rate(bath, 3500.0) / bath.gamma_0_hz;
  CHECK(std::abs(cross - 1.0) < 0.15);
  double prev = 0.0;
  for (double n = 0.0; n < 1e5; n = n * 1.5 + 1.0) {
    CHECK(gamma_m_of_nc(bath, n) >= prev);
    prev = gamma_m_of_nc(bath, n);
  }
}

TEST_CASE("steady state") {
  BathModel cold{500e3, 0.3, 0.0, 1.0, 50.0};
  CHECK(steady_state_occupancy(cold, 1000.0) == Approx(0.3));
  BathModel sym{100e3, 0.0, 100e3, 0.0, 10.0};
  CHECK(steady_state_occupancy(sym, 7.0) == Approx(5.0));
  BathModel hot{1e3, 0.0, 1e5, 0.0, 4.0};
  CHECK(std::abs(steady_state_occupancy(hot, 1.0) / 4.0 - 1.0) < 0.01);
  BathModel none{0.0, 0.0, 0.0, 1.0, 0.0};
  CHECK_THROWS_AS(steady_state_occupancy(none, 0.0), DomainError);
  const BathModel rf{510e3, 0.1, 170.0, 0.98, 20.0};
  for (double n_c : {1.0, 100.0, 3500.0, 3e4}) {
    const double ref = oracle::two_bath_fixed_point(rf.gamma_0_hz, rf.n_0, hot_bath_rate(rf, n_c), rf.n_p);
    CHECK(steady_state_occupancy(rf, n_c) == Approx(ref).epsilon(1e-6));
  }
}

TEST_CASE("cw noise power law") {
  CHECK(cw_noise_power_law(0.8, 0.0, 123.0) == Approx(0.8));
  CHECK(cw_noise_power_law(1.0, 0.29, 200.0) / cw_noise_power_law(1.0, 0.29, 100.0) == Approx(1.222).epsilon(1e-3));
  CHECK(cw_noise_power_law(1.0, 0.61, 1000.0) / cw_noise_power_law(1.0, 0.61, 100.0) == Approx(4.07).epsilon(1e-3));
}

TEST_CASE("repetition and pump-probe curves") {
  const RepetitionModel m = fixtures::release_free_repetition();
  const double t0 = 100e-9;
  CHECK(repetition_noise(m, 52e3, t0, 0.0, 510e3).n_f == Approx(1.0));
  CHECK(repetition_noise(m, 104e3, t0, 0.0, 510e3).n_f == Approx(std::pow(2.0, 0.114)));
  const auto slow = repetition_noise(m, 1e3, t0, 0.25, 510e3);
  CHECK(slow.n_i == Approx(0.25));
  CHECK(slow.delay == Approx(1e-3 - t0));
  CHECK_THROWS_AS(repetition_noise(m, 1e7, t0, 0.0, 510e3), DomainError);

  CHECK(pump_probe_decay(m, 0.0) == Approx(64.81));
  CHECK(pump_probe_decay(m, 1.0) == Approx(0.81));
  const double cross = std::log(64.0 / 0.81) / angular(607e3);
  CHECK(pump_probe_decay(m, cross) == Approx(1.62));
}

TEST_CASE("Bose-Einstein occupation") {
  const double f = 5.358e9;
  CHECK(occupancy_from_temperature(f, 1e-4) < 1e-100);
  CHECK(temperature_from_occupancy(f, 0.5) == Approx(0.234).epsilon(0.01));
  CHECK_THROWS_AS(occupancy_from_temperature(f, 0.0), DomainError);
  CHECK_THROWS_AS(temperature_from_occupancy(f, -1.0), DomainError);
  double prev = 0.0;
  for (double t = 0.01; t < 10.0; t *= 1.3) {
    const double n = occupancy_from_temperature(f, t);
    CHECK(n > prev);
    prev = n;
  }
  for (double n = 1e-3; n <= 1e3; n *= 3.7)
    CHECK(occupancy_from_temperature(f, temperature_from_occupancy(f, n)) == Approx(n).epsilon(1e-9));
}
