#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "omtherm/calibration.hpp"
#include "omtherm/detection.hpp"
#include "omtherm/filter.hpp"
#include "omtherm/mcmc.hpp"
#include "omtherm/model.hpp"

namespace omtherm::app {

/// Config file problems. The message names the offending key path.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct PulseConfig {
  double duration_s = 100e-9;
  std::optional<double> delay_s;
  std::vector<double> repetition_rates_hz;  ///< one histogram per entry
  Detuning detuning = Detuning::red;
  double n_c = 0.0;
  std::string envelope = "square";
  double bin_width_s = 2e-9;
  double window_start_s = -50e-9;
  double window_s = 350e-9;
  std::uint64_t repetitions = 100000;

  /// Repetition rates to run: the list, or (duration + delay)^-1.
  std::vector<double> rates() const;
};

struct OccupancyConfig {
  std::optional<double> n_i;
  std::optional<double> n_f;
  RepetitionModel repetition;
  double n_dilution = 0.0;
  std::optional<double> gamma_decay_hz;  ///< defaults to bath gamma_0
  bool has_repetition_model = false;
};

struct InferenceConfig {
  int walkers = 32;
  int steps = 3000;
  double burn_in_fraction = 0.25;
  std::uint64_t seed = 0;
  bool fit_gamma_m = false;
  std::map<std::string, std::pair<double, double>> priors;
};

struct CalibrationConfig {
  std::optional<double> gamma_cal;  ///< overrides the device-derived value
  DirectSigmas direct_sigmas;
  std::optional<fixtures::AsymmetryFixture> asymmetry;
  std::optional<fixtures::CoherentFixture> coherent;
};

struct NnepConfig {
  double n_c_min = 10.0;
  double n_c_max = 1e5;
  int points = 41;
};

struct ExperimentConfig {
  DeviceParams device;
  BathModel bath;
  DetectionConfig detection;
  FilterStack filters;
  PulseConfig pulse;
  OccupancyConfig occupancy;
  InferenceConfig inference;
  CalibrationConfig calibration;
  NnepConfig nnep;

  /// Gamma_cal used to turn rates into occupancies.
  double gamma_cal() const;
};

ExperimentConfig parse_config(const nlohmann::ordered_json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

/// The built-in release-free device setup used when no config is given.
ExperimentConfig default_config();

std::string to_string(Detuning d);
Detuning parse_detuning(const std::string& s);

}  // namespace omtherm::app
