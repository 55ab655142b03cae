#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "omtherm/calibration.hpp"
#include "omtherm/detection.hpp"
#include "omtherm/fit.hpp"
#include "omtherm/mcmc.hpp"
#include "omtherm/waveform.hpp"

namespace omtherm {

/// Shortest decimal string that reads back to the same double.
std::string format_number(double v);

/// A numeric CSV table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;  ///< 1-based source line of each row

  std::size_t column(const std::string& name) const;
};

/// Parses comma-separated numbers under a header. Blank lines and lines
/// starting with '#' are skipped. Throws ParseError carrying the 1-based line
/// number of the first malformed row, and on files without data rows.
CsvTable read_csv(std::istream& in, const std::string& source);
CsvTable read_csv_file(const std::string& path);

/// `bin_start_s,bin_width_s,counts,repetitions`, one row per bin.
void write_histogram_csv(std::ostream& out, const ClickHistogram& h);
ClickHistogram read_histogram_csv(std::istream& in, const std::string& source);

/// `t_s,value`, one row per sample.
void write_waveform_csv(std::ostream& out, const SampledWaveform& w);
SampledWaveform read_waveform_csv(std::istream& in, const std::string& source);

/// One column per parameter, one row per retained draw.
void write_posterior_csv(std::ostream& out, const PosteriorSamples& samples);

/// {params, ci_low, ci_high, level, logp, seed} plus sigma, chi2, dof, flags.
std::string fit_result_json(const FitResult& fit);
std::string calibration_json(const CalibrationResult& result);
std::string detection_config_json(const DetectionConfig& cfg);

}  // namespace omtherm
