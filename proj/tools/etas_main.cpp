#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "etas/commands.hpp"
#include "etas/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian spatio-temporal ETAS: simulate, fit, evaluate, forecast"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string seed;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value settings file");
    sub->add_option("--seed", seed, "random seed (unsigned 64-bit)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--set", overrides, "override a setting, key=value")->take_all();
  };
  auto* simulate = app.add_subcommand("simulate", "simulate a synthetic catalog");
  auto* fit = app.add_subcommand("fit", "run the posterior sampler on a catalog");
  auto* evaluate = app.add_subcommand("evaluate", "DIC and out-of-sample comparison of chains");
  auto* forecast = app.add_subcommand("forecast", "posterior predictive forecast");
  for (auto* sub : {simulate, fit, evaluate, forecast}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "config: " << e.what() << "\n";
    return 2;
  }

  try {
    etas::RunConfig config;
    if (!config_path.empty()) config = etas::RunConfig::load(config_path);
    for (const auto& o : overrides) config.apply_override(o);
    if (!seed.empty()) config.set("seed", seed);
    if (!out_dir.empty()) config.set("out", out_dir);

    if (simulate->parsed()) etas::cmd_simulate(config, std::cout);
    if (fit->parsed()) etas::cmd_fit(config, std::cout);
    if (evaluate->parsed()) etas::cmd_evaluate(config, std::cout);
    if (forecast->parsed()) etas::cmd_forecast(config, std::cout);
  } catch (const etas::Error& e) {
    std::cerr << etas::to_string(e.kind()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
