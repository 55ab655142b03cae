#include <iostream>

#include <CLI11.hpp>

#include "app/commands.hpp"
#include "app/config.hpp"

using namespace omtherm::app;

int main(int argc, char** argv) {
  CLI::App cli{"Phonon-counting thermometry: simulate, fit, calibrate"};
  cli.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string format = "csv";
  cli.add_option("--config", config_path, "Experiment config (JSON)");
  cli.add_option("--seed", seed, "Random seed; defaults to inference.seed");
  cli.add_option("--out", out, "Output directory");
  cli.add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "json"}));

  auto* simulate = cli.add_subcommand("simulate", "Simulate click histograms");

  auto* fit = cli.add_subcommand("fit", "Fit measured data");
  fit->require_subcommand(1);
  FitOptions fit_opt;
  for (const char* kind : {"pulse", "eit", "powerlaw", "ringdown"}) {
    auto* sub = fit->add_subcommand(kind);
    sub->add_option("data", fit_opt.data, "Input CSV")->required();
    if (std::string(kind) == "powerlaw") {
      sub->add_flag("--with-offset", fit_opt.with_offset, "Add a constant offset");
      sub->add_option("--breakpoint", fit_opt.breakpoint, "Fit below and above this x separately");
    }
    if (std::string(kind) == "ringdown") sub->add_flag("--with-floor", fit_opt.with_floor, "Add a constant floor");
    sub->callback([&fit_opt, kind] { fit_opt.kind = kind; });
  }

  auto* calibrate = cli.add_subcommand("calibrate", "Gamma_cal by one or all methods");
  calibrate->require_subcommand(1);
  std::string method;
  for (const char* m : {"direct", "asym", "coherent", "all"})
    calibrate->add_subcommand(m)->callback([&method, m] { method = m; });

  auto* nnep = cli.add_subcommand("nnep", "Noise-equivalent phonon occupation versus n_c");
  std::optional<double> nc_min, nc_max;
  std::optional<int> points;
  nnep->add_option("--nc-min", nc_min);
  nnep->add_option("--nc-max", nc_max);
  nnep->add_option("--points", points);

  auto* filter = cli.add_subcommand("filter-response", "CW and pulsed filter response");

  CLI11_PARSE(cli, argc, argv);

  try {
    RunContext ctx;
    ctx.config = config_path.empty() ? default_config() : load_config(config_path);
    if (nc_min) ctx.config.nnep.n_c_min = *nc_min;
    if (nc_max) ctx.config.nnep.n_c_max = *nc_max;
    if (points) ctx.config.nnep.points = *points;
    ctx.seed = seed.value_or(ctx.config.inference.seed);
    ctx.out = out;
    ctx.format = format == "json" ? TableFormat::json : TableFormat::csv;

    if (simulate->parsed()) {
      ctx.command = "simulate";
      cmd_simulate(ctx);
    } else if (fit->parsed()) {
      ctx.command = "fit " + fit_opt.kind;
      cmd_fit(ctx, fit_opt);
    } else if (calibrate->parsed()) {
      ctx.command = "calibrate " + method;
      cmd_calibrate(ctx, method);
    } else if (nnep->parsed()) {
      ctx.command = "nnep";
      cmd_nnep(ctx);
    } else if (filter->parsed()) {
      ctx.command = "filter-response";
      cmd_filter_response(ctx);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
