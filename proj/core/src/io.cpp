#include "omtherm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "omtherm/errors.hpp"

namespace omtherm {

namespace {

using nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

ordered_json number_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError("csv", 1, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split(t);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw ParseError(source, lineno,
                       "expected " + std::to_string(table.header.size()) + " fields, found " +
                           std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || res.ec != std::errc() || res.ptr != c.data() + c.size())
        throw ParseError(source, lineno, "not a number: '" + c + "'");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
    table.lines.push_back(lineno);
  }
  if (!have_header) throw ParseError(source, lineno, "empty file");
  if (table.rows.empty()) throw ParseError(source, lineno, "no data rows");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return read_csv(in, path);
}

void write_histogram_csv(std::ostream& out, const ClickHistogram& h) {
  out << "bin_start_s,bin_width_s,counts,repetitions\n";
  for (std::size_t i = 0; i < h.size(); ++i)
    out << format_number(h.bin_start[i]) << ',' << format_number(h.bin_width) << ','
        << h.counts[i] << ',' << h.repetitions << '\n';
}

ClickHistogram read_histogram_csv(std::istream& in, const std::string& source) {
  const CsvTable t = read_csv(in, source);
  std::size_t cs, cw, cc, cr;
  try {
    cs = t.column("bin_start_s");
    cw = t.column("bin_width_s");
    cc = t.column("counts");
    cr = t.column("repetitions");
  } catch (const ParseError& e) {
    throw ParseError(source, 1, e.what());
  }
  ClickHistogram h;
  h.bin_width = t.rows.front()[cw];
  h.repetitions = static_cast<std::uint64_t>(t.rows.front()[cr]);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const double k = r[cc];
    if (k < 0.0 || k != std::floor(k))
      throw ParseError(source, t.lines[i], "counts must be a nonnegative integer");
    if (r[cw] != h.bin_width || static_cast<std::uint64_t>(r[cr]) != h.repetitions)
      throw ParseError(source, t.lines[i], "bin width and repetitions must be constant");
    h.bin_start.push_back(r[cs]);
    h.counts.push_back(static_cast<std::uint64_t>(k));
  }
  try {
    h.validate();
  } catch (const std::exception& e) {
    throw ParseError(source, 0, e.what());
  }
  return h;
}

void write_waveform_csv(std::ostream& out, const SampledWaveform& w) {
  out << "t_s,value\n";
  for (std::size_t i = 0; i < w.size(); ++i)
    out << format_number(w.time(i)) << ',' << format_number(w.values[i]) << '\n';
}

SampledWaveform read_waveform_csv(std::istream& in, const std::string& source) {
  const CsvTable t = read_csv(in, source);
  const std::size_t ct = t.column("t_s");
  const std::size_t cv = t.column("value");
  SampledWaveform w;
  w.t0 = t.rows.front()[ct];
  w.dt = t.rows.size() > 1 ? t.rows[1][ct] - t.rows[0][ct] : 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (i > 0 && std::abs(t.rows[i][ct] - w.time(i)) > 1e-6 * std::abs(w.dt))
      throw ParseError(source, t.lines[i], "samples must be uniformly spaced");
    w.values.push_back(t.rows[i][cv]);
  }
  return w;
}

void write_posterior_csv(std::ostream& out, const PosteriorSamples& s) {
  for (std::size_t d = 0; d < s.dim(); ++d) out << (d ? "," : "") << s.names[d];
  out << '\n';
  for (std::size_t step = s.burn_in; step < s.steps; ++step)
    for (std::size_t w = 0; w < s.walkers; ++w) {
      for (std::size_t d = 0; d < s.dim(); ++d)
        out << (d ? "," : "") << format_number(s.draw(step, w, d));
      out << '\n';
    }
}

std::string fit_result_json(const FitResult& fit) {
  ordered_json j;
  ordered_json params = ordered_json::object(), lo = ordered_json::object(),
               hi = ordered_json::object(), sd = ordered_json::object();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    params[fit.names[i]] = number_or_null(fit.params[i]);
    lo[fit.names[i]] = number_or_null(fit.ci_low[i]);
    hi[fit.names[i]] = number_or_null(fit.ci_high[i]);
    sd[fit.names[i]] = number_or_null(fit.sigma[i]);
  }
  j["params"] = params;
  j["ci_low"] = lo;
  j["ci_high"] = hi;
  j["level"] = fit.level;
  j["logp"] = number_or_null(fit.logp);
  j["seed"] = fit.seed ? ordered_json(*fit.seed) : ordered_json(nullptr);
  j["sigma"] = sd;
  j["chi2"] = number_or_null(fit.chi2);
  j["dof"] = fit.dof;
  j["flags"] = fit.flags;
  return j.dump(2) + "\n";
}

std::string calibration_json(const CalibrationResult& r) {
  ordered_json j;
  j["method"] = to_string(r.method);
  j["gamma_cal"] = r.gamma_cal;
  j["sigma"] = r.sigma;
  ordered_json inputs = ordered_json::object();
  for (const auto& [k, v] : r.inputs) inputs[k] = number_or_null(v);
  j["inputs"] = inputs;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

std::string detection_config_json(const DetectionConfig& cfg) {
  ordered_json j;
  j["eta_o"] = cfg.eta_o;
  j["eta_fc"] = cfg.eta_fc;
  j["eta_loss"] = cfg.eta_loss;
  j["eta_det"] = cfg.eta_det;
  j["eta_tot"] = cfg.eta_tot();
  j["dark_rate_hz"] = cfg.dark_rate_hz;
  j["pump_suppression"] = cfg.pump_suppression;
  j["laser_noise_rate_hz"] = cfg.laser_noise_rate_hz;
  return j.dump(2) + "\n";
}

}  // namespace omtherm
