#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "omtherm/calibration.hpp"
#include "omtherm/errors.hpp"
#include "omtherm/fitting.hpp"
#include "omtherm/io.hpp"
#include "omtherm/pulse_fit.hpp"

#ifndef OMTHERM_VERSION
#define OMTHERM_VERSION "0.0.0"
#endif

namespace omtherm::app {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// SOURCE_DATE_EPOCH when set, else the epoch.
std::string manifest_timestamp() {
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ordered_json parsed(const std::string& s) { return ordered_json::parse(s); }

bool has_column(const CsvTable& t, const std::string& name) {
  return std::find(t.header.begin(), t.header.end(), name) != t.header.end();
}

std::size_t require_column(const CsvTable& t, const std::string& name, const std::string& source) {
  if (!has_column(t, name)) throw ParseError(source, 1, "missing column '" + name + "'");
  return t.column(name);
}

std::vector<DataPoint> read_points(const std::string& path, const std::string& x_name) {
  const CsvTable t = read_csv_file(path);
  const std::size_t cx = require_column(t, x_name, path);
  const std::size_t cy = require_column(t, "y", path);
  const bool weighted = has_column(t, "sigma");
  const std::size_t cs = weighted ? t.column("sigma") : 0;
  std::vector<DataPoint> pts;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const double s = weighted ? r[cs] : 1.0;
    if (!(s > 0.0)) throw ParseError(path, t.lines[i], "sigma must be > 0");
    pts.push_back({r[cx], r[cy], s});
  }
  return pts;
}

double effective_gamma_cal(const ExperimentConfig& cfg) {
  const double g = cfg.gamma_cal();
  return cfg.pulse.detuning == Detuning::resonant ? g * resonant_suppression(cfg.device) : g;
}

std::size_t bin_count(const PulseConfig& p) {
  return static_cast<std::size_t>(std::llround(p.window_s / p.bin_width_s));
}

struct PulseSetup {
  PulseModelSpec spec;
  double gamma_m_hz = 0.0;
  double n_nep = 0.0;
};

// Pulsed forward model for the configured detuning. The noise floor is
// expressed as n_nep against the detected sideband rate.
PulseSetup pulse_setup(const ExperimentConfig& cfg) {
  const auto& p = cfg.pulse;
  if (!(p.n_c > 0.0)) throw ConfigError("pulse.n_c: must be > 0 for a pulsed model");
  PulseSetup s;
  s.spec.stack = cfg.filters;
  s.spec.sideband = detected_sideband(p.detuning);
  s.spec.gamma_cal = effective_gamma_cal(cfg);
  s.spec.nc_peak = p.n_c;
  s.spec.nc_envelope = SampledWaveform::sample(p.window_start_s, p.bin_width_s, bin_count(p),
                                               [](double t) { return t >= 0.0 ? 1.0 : 0.0; });
  s.spec.t_start = 0.0;
  s.gamma_m_hz = gamma_m_of_nc(cfg.bath, p.n_c);
  s.n_nep = nnep(cfg.device, cfg.detection, p.detuning, p.n_c, cfg.gamma_cal()) +
            cfg.detection.laser_noise_rate_hz / (s.spec.gamma_cal * p.n_c);
  return s;
}

std::pair<double, double> occupancy_truth(const ExperimentConfig& cfg, double rate_hz) {
  const auto& o = cfg.occupancy;
  if (o.n_i) return {*o.n_i, *o.n_f};
  const auto rn = repetition_noise(o.repetition, rate_hz, cfg.pulse.duration_s, o.n_dilution,
                                   o.gamma_decay_hz.value_or(cfg.bath.gamma_0_hz));
  return {rn.n_i, rn.n_f};
}

std::string indexed(const std::string& stem, std::size_t k, const std::string& ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%03zu", k);
  return stem + buf + ext;
}

}  // namespace

OutputSet::OutputSet(const RunContext& ctx) : ctx_(ctx) { fs::create_directories(ctx.out); }

void OutputSet::write(const std::string& name, const std::string& contents) {
  const fs::path path = ctx_.out / name;
  std::ofstream out(path, std::ios::binary);
  out << contents;
  out.close();
  if (!out) throw std::runtime_error(path.string() + ": write failed");
  outputs_.emplace_back(name, fnv1a64(contents));
}

void OutputSet::input(const std::string& path) { inputs_.emplace_back(path, fnv1a64(slurp(path))); }

fs::path OutputSet::finish() {
  const std::string config_dump = to_json(ctx_.config).dump(2) + "\n";
  write("config.json", config_dump);
  ordered_json m;
  m["tool"] = "omtherm";
  m["version"] = OMTHERM_VERSION;
  m["command"] = ctx_.command;
  m["config_hash"] = hex64(fnv1a64(to_json(ctx_.config).dump()));
  m["seed"] = ctx_.seed;
  m["created"] = manifest_timestamp();
  auto list = [](const auto& v) {
    ordered_json a = ordered_json::array();
    for (const auto& [p, h] : v) a.push_back({{"path", p}, {"fnv1a64", hex64(h)}});
    return a;
  };
  m["inputs"] = list(inputs_);
  m["outputs"] = list(outputs_);
  const fs::path path = ctx_.out / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  out << m.dump(2) << '\n';
  if (!out) throw std::runtime_error(path.string() + ": write failed");
  return path;
}

const char* Table::extension(TableFormat format) { return format == TableFormat::json ? ".json" : ".csv"; }

std::string Table::render(TableFormat format) const {
  std::ostringstream ss;
  if (format == TableFormat::csv) {
    for (std::size_t c = 0; c < columns.size(); ++c) ss << (c ? "," : "") << columns[c];
    ss << '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) ss << (c ? "," : "") << format_number(row[c]);
      ss << '\n';
    }
    return ss.str();
  }
  ordered_json j = ordered_json::object();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    ordered_json col = ordered_json::array();
    for (const auto& row : rows) col.push_back(std::isfinite(row[c]) ? ordered_json(row[c]) : ordered_json(nullptr));
    j[columns[c]] = col;
  }
  return j.dump(2) + "\n";
}

void cmd_simulate(const RunContext& ctx) {
  const auto& cfg = ctx.config;
  const auto& p = cfg.pulse;
  OutputSet outputs(ctx);
  const auto rates = p.rates();
  const std::size_t bins = bin_count(p);

  for (std::size_t k = 0; k < rates.size(); ++k) {
    const auto [n_i, n_f] = occupancy_truth(cfg, rates[k]);
    SimulationOptions so;
    so.seed = ctx.seed + k;

    std::vector<double> bin_rates;
    ordered_json truth;
    truth["repetition_rate_hz"] = rates[k];
    truth["delay_s"] = 1.0 / rates[k] - p.duration_s;
    truth["n_i"] = n_i;
    truth["n_f"] = n_f;
    double gamma_m = gamma_m_of_nc(cfg.bath, p.n_c);
    if (p.n_c > 0.0) {
      const PulseSetup s = pulse_setup(cfg);
      gamma_m = s.gamma_m_hz;
      const PulseForwardModel model(s.spec);
      bin_rates = model.rate({n_i, n_f, p.duration_s, s.n_nep, s.gamma_m_hz});
      truth["gamma_cal_detected"] = s.spec.gamma_cal;
      truth["n_nep"] = s.n_nep;
    } else {
      // No pump: only detector and laser noise reach the histogram.
      bin_rates.assign(bins, cfg.detection.noise_rate());
    }
    truth["gamma_m_hz"] = gamma_m;
    truth["seed"] = so.seed;
    const ClickHistogram h = simulate_clicks(bin_rates, p.window_start_s, p.bin_width_s, p.repetitions, so);

    std::ostringstream hist;
    write_histogram_csv(hist, h);
    outputs.write(indexed("histogram", k, ".csv"), hist.str());

    ordered_json side;
    side["detection"] = parsed(detection_config_json(cfg.detection));
    side["truth"] = truth;
    outputs.write(indexed("histogram", k, ".json"), side.dump(2) + "\n");

    Table occ{{"t_s", "n_m", "rate_hz"}, {}};
    const OccupancyDynamics dyn{n_i, n_f, gamma_m, 0.0, p.duration_s};
    for (std::size_t i = 0; i < bins; ++i) {
      const double t = h.bin_start[i];
      occ.rows.push_back({t, occupancy_at(dyn, std::clamp(t, 0.0, p.duration_s)), bin_rates[i]});
    }
    outputs.write(indexed("occupancy", k, Table::extension(ctx.format)), occ.render(ctx.format));
  }
  outputs.finish();
}

namespace {

void fit_pulse(const RunContext& ctx, const FitOptions& opt, OutputSet& outputs) {
  const auto& cfg = ctx.config;
  std::ifstream in(opt.data);
  if (!in) throw ParseError(opt.data, 0, "cannot open file");
  const ClickHistogram data = read_histogram_csv(in, opt.data);
  const PulseSetup s = pulse_setup(cfg);

  PulseFitConfig fc;
  fc.model = s.spec;
  if (!cfg.inference.fit_gamma_m) fc.gamma_m_hz = s.gamma_m_hz;
  fc.nominal_t_stop = cfg.pulse.duration_s;
  fc.mcmc.walkers = cfg.inference.walkers;
  fc.mcmc.steps = cfg.inference.steps;
  fc.mcmc.burn_in_fraction = cfg.inference.burn_in_fraction;
  fc.mcmc.seed = ctx.seed;
  fc.prior = default_pulse_prior(fc);
  for (const auto& [name, bounds] : cfg.inference.priors) {
    bool found = false;
    for (auto& b : fc.prior.params)
      if (b.name == name) {
        b.lower = bounds.first;
        b.upper = bounds.second;
        found = true;
      }
    if (!found) throw ConfigError("inference.priors." + name + ": not a parameter of the pulse model");
  }

  const PulseFitResult r = fit_pulse_occupancy(data, fc);
  ordered_json j = parsed(fit_result_json(r.fit));
  j["unidentifiable"] = r.unidentifiable;
  j["acceptance_fraction"] = r.posterior.acceptance_fraction;
  j["autocorrelation_steps"] = r.autocorrelation_steps;
  outputs.write("fit.json", j.dump(2) + "\n");

  std::ostringstream post;
  write_posterior_csv(post, r.posterior);
  outputs.write("posterior.csv", post.str());

  Table best{{"t_s", "rate_hz", "expected_counts", "counts"}, {}};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double rate = r.best_fit_rate.values[i];
    best.rows.push_back({data.bin_start[i], rate, rate * data.exposure(), static_cast<double>(data.counts[i])});
  }
  outputs.write(std::string("best_fit") + Table::extension(ctx.format), best.render(ctx.format));
}

void fit_eit_file(const RunContext&, const FitOptions& opt, OutputSet& outputs) {
  const CsvTable t = read_csv_file(opt.data);
  const std::size_t cd = require_column(t, "delta_hz", opt.data);
  const std::size_t cr = require_column(t, "re", opt.data);
  const std::size_t ci = require_column(t, "im", opt.data);
  const bool weighted = has_column(t, "sigma");
  std::vector<ComplexPoint> sweep;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const double s = weighted ? r[t.column("sigma")] : 1.0;
    if (!(s > 0.0)) throw ParseError(opt.data, t.lines[i], "sigma must be > 0");
    sweep.push_back({r[cd], {r[cr], r[ci]}, s});
  }
  outputs.write("fit.json", fit_result_json(fit_eit(sweep)));
}

void fit_powerlaw_file(const RunContext&, const FitOptions& opt, OutputSet& outputs) {
  const auto pts = read_points(opt.data, "x");
  if (opt.breakpoint) {
    const auto [low, high] = fit_power_law_split(pts, *opt.breakpoint, opt.with_offset);
    ordered_json j;
    j["breakpoint"] = *opt.breakpoint;
    j["low"] = parsed(fit_result_json(low));
    j["high"] = parsed(fit_result_json(high));
    outputs.write("fit.json", j.dump(2) + "\n");
    return;
  }
  outputs.write("fit.json", fit_result_json(fit_power_law(pts, opt.with_offset)));
}

void fit_ringdown_file(const RunContext&, const FitOptions& opt, OutputSet& outputs) {
  const auto pts = read_points(opt.data, "t_s");
  outputs.write("fit.json", fit_result_json(fit_exponential_decay(pts, opt.with_floor)));
}

}  // namespace

void cmd_fit(const RunContext& ctx, const FitOptions& options) {
  OutputSet outputs(ctx);
  outputs.input(options.data);
  if (options.kind == "pulse") fit_pulse(ctx, options, outputs);
  else if (options.kind == "eit") fit_eit_file(ctx, options, outputs);
  else if (options.kind == "powerlaw") fit_powerlaw_file(ctx, options, outputs);
  else if (options.kind == "ringdown") fit_ringdown_file(ctx, options, outputs);
  else throw std::invalid_argument("unknown fit kind '" + options.kind + "'");
  outputs.finish();
}

namespace {

CalibrationResult calibrate_asym(const ExperimentConfig& cfg) {
  if (!cfg.calibration.asymmetry) throw ConfigError("calibration.asymmetry: required for the asym method");
  const auto& a = *cfg.calibration.asymmetry;
  AsymmetryOptions opt;
  opt.backaction_ratio = gamma_om(cfg.device, a.n_c) / gamma_m_of_nc(cfg.bath, a.n_c);
  return asymmetry_calibration(a.gamma_plus, a.sigma_plus, a.gamma_minus, a.sigma_minus, a.n_c, opt);
}

CalibrationResult calibrate_coherent(const ExperimentConfig& cfg) {
  if (!cfg.calibration.coherent) throw ConfigError("calibration.coherent: required for the coherent method");
  const auto& c = *cfg.calibration.coherent;
  return coherent_calibration(c.spec, c.gamma_m_hz, c.gamma_om_hz, c.eta_o, c.gamma_minus_coh, c.n_c, c.sigmas);
}

}  // namespace

void cmd_calibrate(const RunContext& ctx, const std::string& method) {
  const auto& cfg = ctx.config;
  OutputSet outputs(ctx);
  if (method == "direct") {
    outputs.write("calibration.json",
                  calibration_json(direct_calibration(cfg.device, cfg.detection, cfg.calibration.direct_sigmas)));
  } else if (method == "asym") {
    outputs.write("calibration.json", calibration_json(calibrate_asym(cfg)));
  } else if (method == "coherent") {
    outputs.write("calibration.json", calibration_json(calibrate_coherent(cfg)));
  } else if (method == "all") {
    CalibrationStudyOptions opt;
    opt.direct_sigmas = cfg.calibration.direct_sigmas;
    if (cfg.calibration.coherent) opt.coherent_sigmas = cfg.calibration.coherent->sigmas;
    opt.seed = ctx.seed;
    const CalibrationStudy st = synthetic_calibration_study(cfg.device, cfg.detection, cfg.bath, opt);
    ordered_json j;
    j["truth"] = st.truth;
    j["direct"] = parsed(calibration_json(st.direct));
    j["sideband_asymmetry"] = parsed(calibration_json(st.asymmetry));
    j["coherent_excitation"] = parsed(calibration_json(st.coherent));
    const char* pairs[] = {"direct_vs_asymmetry", "direct_vs_coherent", "asymmetry_vs_coherent"};
    ordered_json z = ordered_json::object();
    for (std::size_t i = 0; i < st.pairwise_z.size() && i < 3; ++i) z[pairs[i]] = st.pairwise_z[i];
    j["pairwise_z"] = z;
    j["consistent_2sigma"] = st.consistent(2.0);
    outputs.write("study.json", j.dump(2) + "\n");
  } else {
    throw std::invalid_argument("unknown calibration method '" + method + "'");
  }
  outputs.finish();
}

void cmd_nnep(const RunContext& ctx) {
  const auto& cfg = ctx.config;
  const auto& r = cfg.nnep;
  if (!(r.n_c_min > 0.0) || !(r.n_c_max > r.n_c_min) || r.points < 2)
    throw ConfigError("nnep: range is empty (need 0 < n_c_min < n_c_max and points >= 2)");
  const double gamma_cal = cfg.gamma_cal();
  const Detuning dets[] = {Detuning::red, Detuning::blue, Detuning::resonant};
  Table t;
  t.columns = {"n_c"};
  for (Detuning d : dets) {
    t.columns.push_back(to_string(d) + "_dark");
    t.columns.push_back(to_string(d) + "_pump");
  }
  const double lmin = std::log(r.n_c_min), lmax = std::log(r.n_c_max);
  for (int i = 0; i < r.points; ++i) {
    const double n_c = i == 0 ? r.n_c_min
                       : i == r.points - 1 ? r.n_c_max
                                           : std::exp(lmin + (lmax - lmin) * i / (r.points - 1));
    std::vector<double> row{n_c};
    for (Detuning d : dets) {
      const NnepTerms terms = nnep_terms(cfg.device, cfg.detection, d, n_c, gamma_cal);
      row.push_back(terms.dark);
      row.push_back(terms.pump);
    }
    t.rows.push_back(std::move(row));
  }
  OutputSet outputs(ctx);
  outputs.write(std::string("nnep") + Table::extension(ctx.format), t.render(ctx.format));
  outputs.finish();
}

void cmd_filter_response(const RunContext& ctx) {
  const auto& cfg = ctx.config;
  const FilterStack& stack = cfg.filters;
  OutputSet outputs(ctx);

  Table cw{{"frequency_hz", "transmission", "lorentzian", "suppression_db"}, {}};
  constexpr int kPoints = 4001;
  for (int i = 0; i < kPoints; ++i) {
    const double f = stack.fsr_hz * (static_cast<double>(i) / (kPoints - 1) - 0.5);
    cw.rows.push_back({f, intensity_transmission(stack, f), lorentzian_transmission(stack, f), suppression_db(stack, f)});
  }
  outputs.write(std::string("cw_response") + Table::extension(ctx.format), cw.render(ctx.format));

  const auto& p = cfg.pulse;
  const auto in = SampledWaveform::sample(p.window_start_s, p.bin_width_s, bin_count(p),
                                          [&](double t) { return t >= 0.0 && t < p.duration_s ? 1.0 : 0.0; });
  const auto out = transmit_pulse(stack, in);
  Table pulse{{"t_s", "input", "output"}, {}};
  for (std::size_t i = 0; i < in.size(); ++i) pulse.rows.push_back({in.time(i), in.values[i], out.values[i]});
  outputs.write(std::string("pulse_response") + Table::extension(ctx.format), pulse.render(ctx.format));
  outputs.finish();
}

}  // namespace omtherm::app
