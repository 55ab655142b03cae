#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "omtherm/errors.hpp"

namespace omtherm::app {

using nlohmann::ordered_json;

namespace {

// Typed access to one object of the config tree. Every key read is recorded
// so leftovers can be reported as unknown.
class Section {
public:
  Section(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(path_ + "." + k + ": unknown key");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  double num(const std::string& key, double fallback = 0.0) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where(key) + ": must be finite");
    return x;
  }

  std::optional<double> opt(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return num(key);
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw ConfigError(where(key) + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    std::vector<double> out;
    if (!has(key)) return out;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array");
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(where(key) + ": expected numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  const ordered_json* child(const std::string& key) {
    if (!has(key)) return nullptr;
    return &j_.at(key);
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

private:
  const ordered_json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
void validated(const std::string& section, F&& f) {
  try {
    f();
  } catch (const InvalidParameter& e) {
    throw ConfigError(section + "." + e.what());
  }
}

}  // namespace

std::string to_string(Detuning d) {
  switch (d) {
    case Detuning::red: return "red";
    case Detuning::blue: return "blue";
    case Detuning::resonant: return "resonant";
  }
  return "red";
}

Detuning parse_detuning(const std::string& s) {
  if (s == "red") return Detuning::red;
  if (s == "blue") return Detuning::blue;
  if (s == "resonant") return Detuning::resonant;
  throw ConfigError("pulse.detuning: expected red, blue or resonant, got '" + s + "'");
}

std::vector<double> PulseConfig::rates() const {
  if (delay_s) return {1.0 / (duration_s + *delay_s)};
  return repetition_rates_hz;
}

double ExperimentConfig::gamma_cal() const {
  if (calibration.gamma_cal) return *calibration.gamma_cal;
  return calibration_rate(device, detection);
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.device = fixtures::release_free_device();
  cfg.bath = fixtures::release_free_bath();
  cfg.detection = fixtures::release_free_detection();
  cfg.filters = FilterStack::narrowband_pair();
  cfg.pulse.n_c = 128.0;
  cfg.pulse.repetition_rates_hz = {33e3};
  cfg.occupancy.n_i = 0.42;
  cfg.occupancy.n_f = 1.25;
  cfg.occupancy.repetition = fixtures::release_free_repetition();
  cfg.calibration.direct_sigmas = fixtures::release_free_direct_sigmas();
  cfg.calibration.asymmetry = fixtures::release_free_asymmetry();
  cfg.calibration.coherent = fixtures::release_free_coherent();
  return cfg;
}

ExperimentConfig parse_config(const ordered_json& j) {
  ExperimentConfig cfg = default_config();
  Section root(j, "config");

  if (const auto* d = root.child("device")) {
    Section s(*d, "device");
    const double kappa = s.num("kappa_hz");
    const double kappa_e = s.num("kappa_e_hz");
    cfg.device = DeviceParams{s.num("omega_o_hz"), s.num("omega_m_hz"), kappa, kappa_e,
                              s.num("kappa_i_hz", kappa - kappa_e), s.num("gamma_0_hz"), s.num("g_om_hz")};
  }
  validated("device", [&] { cfg.device.validate(); });

  if (const auto* d = root.child("bath")) {
    Section s(*d, "bath");
    cfg.bath.gamma_0_hz = s.num("gamma_0_hz");
    cfg.bath.n_0 = s.num("n_0");
    cfg.bath.hot_prefactor_hz = s.num("hot_prefactor_hz");
    cfg.bath.hot_exponent = s.num("hot_exponent");
    cfg.bath.n_p = s.num("n_p");
  }
  validated("bath", [&] { cfg.bath.validate(); });

  if (const auto* d = root.child("detection")) {
    Section s(*d, "detection");
    cfg.detection.eta_o = s.num("eta_o");
    cfg.detection.eta_fc = s.num("eta_fc");
    cfg.detection.eta_loss = s.num("eta_loss");
    cfg.detection.eta_det = s.num("eta_det");
    cfg.detection.dark_rate_hz = s.num("dark_rate_hz");
    cfg.detection.pump_suppression = s.num("pump_suppression");
    cfg.detection.laser_noise_rate_hz = s.num("laser_noise_rate_hz");
  }
  validated("detection", [&] { cfg.detection.validate(); });

  if (const auto* d = root.child("filters")) {
    Section s(*d, "filters");
    cfg.filters.fwhm_hz = s.num("fwhm_hz");
    cfg.filters.fsr_hz = s.num("fsr_hz");
    cfg.filters.count = static_cast<int>(s.count("count", 1));
    cfg.filters.detuning_hz = s.num("detuning_hz");
  }
  validated("filters", [&] { cfg.filters.validate(); });

  if (const auto* d = root.child("pulse")) {
    Section s(*d, "pulse");
    auto& p = cfg.pulse;
    p.duration_s = s.num("duration_s", p.duration_s);
    p.delay_s = s.opt("delay_s");
    p.repetition_rates_hz = s.numbers("repetition_rates_hz");
    if (const auto r = s.opt("repetition_rate_hz")) {
      if (!p.repetition_rates_hz.empty())
        throw ConfigError("pulse: give repetition_rate_hz or repetition_rates_hz, not both");
      p.repetition_rates_hz = {*r};
    }
    if (p.delay_s.has_value() == !p.repetition_rates_hz.empty())
      throw ConfigError("pulse: exactly one of delay_s and repetition_rate(s)_hz is required");
    p.detuning = parse_detuning(s.text("detuning", "red"));
    p.n_c = s.num("n_c");
    p.envelope = s.text("envelope", "square");
    p.bin_width_s = s.num("bin_width_s", p.bin_width_s);
    p.window_start_s = s.num("window_start_s", p.window_start_s);
    p.window_s = s.num("window_s", p.window_s);
    p.repetitions = s.count("repetitions", p.repetitions);
  }
  {
    const auto& p = cfg.pulse;
    if (!(p.duration_s > 0.0)) throw ConfigError("pulse.duration_s: must be > 0");
    if (p.delay_s && !(*p.delay_s > 0.0)) throw ConfigError("pulse.delay_s: must be > 0");
    for (double r : p.rates())
      if (!(r > 0.0) || r * p.duration_s >= 1.0)
        throw ConfigError("pulse.repetition_rates_hz: each rate must satisfy 0 < R < 1 / duration_s");
    if (!(p.n_c >= 0.0)) throw ConfigError("pulse.n_c: must be >= 0");
    if (p.envelope != "square") throw ConfigError("pulse.envelope: only 'square' is supported");
    if (!(p.bin_width_s > 0.0)) throw ConfigError("pulse.bin_width_s: must be > 0");
    if (!(p.window_s > 0.0)) throw ConfigError("pulse.window_s: must be > 0");
    const double bins = p.window_s / p.bin_width_s;
    if (std::abs(bins - std::round(bins)) > 1e-6 * bins)
      throw ConfigError("pulse.bin_width_s: must divide window_s");
    if (p.repetitions < 1) throw ConfigError("pulse.repetitions: must be >= 1");
  }

  if (const auto* d = root.child("occupancy")) {
    Section s(*d, "occupancy");
    auto& o = cfg.occupancy;
    o.n_i = s.opt("n_i");
    o.n_f = s.opt("n_f");
    o.has_repetition_model = false;
    if (const auto* r = s.child("repetition")) {
      Section rs(*r, "occupancy.repetition");
      o.has_repetition_model = true;
      o.repetition.r0_hz = rs.num("r0_hz");
      o.repetition.theta = rs.num("theta");
      o.repetition.n_res = rs.num("n_res");
      o.repetition.n_coh = rs.num("n_coh");
      o.repetition.gamma_coh_hz = rs.num("gamma_coh_hz");
      o.n_dilution = rs.num("n_dilution");
      o.gamma_decay_hz = rs.opt("gamma_decay_hz");
      validated("occupancy.repetition", [&] { o.repetition.validate(); });
    }
    if (o.n_i.has_value() != o.n_f.has_value())
      throw ConfigError("occupancy: n_i and n_f must be given together");
    if (!o.n_i && !o.has_repetition_model)
      throw ConfigError("occupancy: give n_i and n_f, or a repetition model");
    if (o.n_i && (*o.n_i < 0.0 || *o.n_f < 0.0)) throw ConfigError("occupancy.n_i: must be >= 0");
  }

  if (const auto* d = root.child("inference")) {
    Section s(*d, "inference");
    auto& inf = cfg.inference;
    inf.walkers = static_cast<int>(s.count("walkers", 32));
    inf.steps = static_cast<int>(s.count("steps", 3000));
    inf.burn_in_fraction = s.num("burn_in_fraction", 0.25);
    inf.seed = s.count("seed", 0);
    inf.fit_gamma_m = s.flag("fit_gamma_m", false);
    if (const auto* pr = s.child("priors")) {
      if (!pr->is_object()) throw ConfigError("inference.priors: expected an object");
      for (const auto& [k, v] : pr->items()) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
          throw ConfigError("inference.priors." + k + ": expected [lower, upper]");
        const double lo = v[0].get<double>(), hi = v[1].get<double>();
        if (!(lo < hi)) throw ConfigError("inference.priors." + k + ": lower must be < upper");
        inf.priors[k] = {lo, hi};
      }
    }
    if (inf.walkers < 2 || inf.walkers % 2) throw ConfigError("inference.walkers: must be even and >= 2");
    if (inf.steps < 1) throw ConfigError("inference.steps: must be >= 1");
  }

  if (const auto* d = root.child("calibration")) {
    Section s(*d, "calibration");
    auto& c = cfg.calibration;
    c.gamma_cal = s.opt("gamma_cal");
    if (c.gamma_cal && !(*c.gamma_cal > 0.0)) throw ConfigError("calibration.gamma_cal: must be > 0");
    c.direct_sigmas = {};
    c.asymmetry.reset();
    c.coherent.reset();
    if (const auto* ds = s.child("direct_sigmas")) {
      Section x(*ds, "calibration.direct_sigmas");
      c.direct_sigmas = {x.num("g_om_hz"), x.num("kappa_hz"), x.num("eta_o"),
                         x.num("eta_fc"),  x.num("eta_loss"), x.num("eta_det")};
    }
    if (const auto* as = s.child("asymmetry")) {
      Section x(*as, "calibration.asymmetry");
      c.asymmetry = fixtures::AsymmetryFixture{x.num("gamma_plus_hz"), x.num("sigma_plus_hz"),
                                               x.num("gamma_minus_hz"), x.num("sigma_minus_hz"),
                                               x.num("n_c")};
    }
    if (const auto* co = s.child("coherent")) {
      Section x(*co, "calibration.coherent");
      fixtures::CoherentFixture f{};
      f.spec.xi_sb = x.num("xi_sb");
      f.spec.phi_pump = x.num("phi_pump_per_s");
      f.spec.t_drive = x.num("t_drive_s");
      f.gamma_m_hz = x.num("gamma_m_hz");
      f.gamma_om_hz = x.num("gamma_om_hz");
      f.eta_o = x.num("eta_o");
      f.gamma_minus_coh = x.num("gamma_minus_coh_hz");
      f.n_c = x.num("n_c");
      f.sigmas.xi_sb = x.num("sigma_rel_xi_sb");
      f.sigmas.phi_pump = x.num("sigma_rel_phi_pump");
      f.sigmas.gamma_m = x.num("sigma_rel_gamma_m");
      f.sigmas.gamma_om = x.num("sigma_rel_gamma_om");
      f.sigmas.eta_o = x.num("sigma_rel_eta_o");
      f.sigmas.gamma_minus = x.num("sigma_gamma_minus_hz");
      c.coherent = f;
    }
  }

  if (const auto* d = root.child("nnep")) {
    Section s(*d, "nnep");
    cfg.nnep.n_c_min = s.num("n_c_min", cfg.nnep.n_c_min);
    cfg.nnep.n_c_max = s.num("n_c_max", cfg.nnep.n_c_max);
    cfg.nnep.points = static_cast<int>(s.count("points", static_cast<std::uint64_t>(cfg.nnep.points)));
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

ordered_json to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  const auto& d = cfg.device;
  j["device"] = {{"omega_o_hz", d.omega_o_hz}, {"omega_m_hz", d.omega_m_hz}, {"kappa_hz", d.kappa_hz},
                 {"kappa_e_hz", d.kappa_e_hz}, {"kappa_i_hz", d.kappa_i_hz}, {"gamma_0_hz", d.gamma_0_hz},
                 {"g_om_hz", d.g_om_hz}};
  const auto& b = cfg.bath;
  j["bath"] = {{"gamma_0_hz", b.gamma_0_hz}, {"n_0", b.n_0}, {"hot_prefactor_hz", b.hot_prefactor_hz},
               {"hot_exponent", b.hot_exponent}, {"n_p", b.n_p}};
  const auto& e = cfg.detection;
  j["detection"] = {{"eta_o", e.eta_o}, {"eta_fc", e.eta_fc}, {"eta_loss", e.eta_loss},
                    {"eta_det", e.eta_det}, {"dark_rate_hz", e.dark_rate_hz},
                    {"pump_suppression", e.pump_suppression}, {"laser_noise_rate_hz", e.laser_noise_rate_hz}};
  const auto& f = cfg.filters;
  j["filters"] = {{"fwhm_hz", f.fwhm_hz}, {"fsr_hz", f.fsr_hz}, {"count", f.count}, {"detuning_hz", f.detuning_hz}};
  const auto& p = cfg.pulse;
  ordered_json pj = {{"duration_s", p.duration_s}};
  if (p.delay_s) pj["delay_s"] = *p.delay_s;
  else pj["repetition_rates_hz"] = p.repetition_rates_hz;
  pj["detuning"] = to_string(p.detuning);
  pj["n_c"] = p.n_c;
  pj["envelope"] = p.envelope;
  pj["bin_width_s"] = p.bin_width_s;
  pj["window_start_s"] = p.window_start_s;
  pj["window_s"] = p.window_s;
  pj["repetitions"] = p.repetitions;
  j["pulse"] = pj;
  const auto& o = cfg.occupancy;
  ordered_json oj = ordered_json::object();
  if (o.n_i) {
    oj["n_i"] = *o.n_i;
    oj["n_f"] = *o.n_f;
  }
  if (o.has_repetition_model) {
    ordered_json r = {{"r0_hz", o.repetition.r0_hz}, {"theta", o.repetition.theta},
                      {"n_res", o.repetition.n_res}, {"n_coh", o.repetition.n_coh},
                      {"gamma_coh_hz", o.repetition.gamma_coh_hz}, {"n_dilution", o.n_dilution}};
    if (o.gamma_decay_hz) r["gamma_decay_hz"] = *o.gamma_decay_hz;
    oj["repetition"] = r;
  }
  j["occupancy"] = oj;
  const auto& inf = cfg.inference;
  ordered_json priors = ordered_json::object();
  for (const auto& [k, v] : inf.priors) priors[k] = {v.first, v.second};
  j["inference"] = {{"walkers", inf.walkers}, {"steps", inf.steps}, {"burn_in_fraction", inf.burn_in_fraction},
                    {"seed", inf.seed}, {"fit_gamma_m", inf.fit_gamma_m}, {"priors", priors}};
  const auto& c = cfg.calibration;
  ordered_json cj = ordered_json::object();
  if (c.gamma_cal) cj["gamma_cal"] = *c.gamma_cal;
  const auto& s = c.direct_sigmas;
  cj["direct_sigmas"] = {{"g_om_hz", s.g_om_hz}, {"kappa_hz", s.kappa_hz}, {"eta_o", s.eta_o},
                         {"eta_fc", s.eta_fc}, {"eta_loss", s.eta_loss}, {"eta_det", s.eta_det}};
  if (c.asymmetry) {
    const auto& a = *c.asymmetry;
    cj["asymmetry"] = {{"gamma_plus_hz", a.gamma_plus}, {"sigma_plus_hz", a.sigma_plus},
                       {"gamma_minus_hz", a.gamma_minus}, {"sigma_minus_hz", a.sigma_minus}, {"n_c", a.n_c}};
  }
  if (c.coherent) {
    const auto& k = *c.coherent;
    cj["coherent"] = {{"xi_sb", k.spec.xi_sb}, {"phi_pump_per_s", k.spec.phi_pump}, {"t_drive_s", k.spec.t_drive},
                      {"gamma_m_hz", k.gamma_m_hz}, {"gamma_om_hz", k.gamma_om_hz}, {"eta_o", k.eta_o},
                      {"gamma_minus_coh_hz", k.gamma_minus_coh}, {"n_c", k.n_c},
                      {"sigma_rel_xi_sb", k.sigmas.xi_sb}, {"sigma_rel_phi_pump", k.sigmas.phi_pump},
                      {"sigma_rel_gamma_m", k.sigmas.gamma_m}, {"sigma_rel_gamma_om", k.sigmas.gamma_om},
                      {"sigma_rel_eta_o", k.sigmas.eta_o}, {"sigma_gamma_minus_hz", k.sigmas.gamma_minus}};
  }
  j["calibration"] = cj;
  j["nnep"] = {{"n_c_min", cfg.nnep.n_c_min}, {"n_c_max", cfg.nnep.n_c_max}, {"points", cfg.nnep.points}};
  return j;
}

}  // namespace omtherm::app
