#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fde/experiment.hpp"
#include "fde/verify.hpp"

namespace {

struct Overrides {
  std::string config;
  long long seed = -1;
  std::size_t threads = 0;
  std::string out;
};

fde::ExperimentConfig resolve(const Overrides& o) {
  fde::json j = o.config.empty() ? fde::json::object() : fde::json::parse(fde::read_text(o.config), nullptr, false);
  if (j.is_discarded()) throw fde::ValidationError("configuration " + o.config + " is not valid JSON");
  if (o.seed >= 0) j["seed"] = o.seed;
  if (o.threads > 0) j["threads"] = o.threads;
  if (!o.out.empty()) j["output_dir"] = o.out;
  return fde::config_from_json(j);
}

void print_run(const fde::RunResult& r) {
  std::cout << "wrote " << r.files.size() << " file(s) and manifest.json to " << r.dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Young delay equations driven by fractional Brownian motion"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON experiment configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the configured seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
  };
  auto* simulate = app.add_subcommand("simulate", "solve the delay equation for every Monte-Carlo path");
  auto* density = app.add_subcommand("density", "Malliavin matrices and density estimate of y at t_eval");
  auto* sensitivity = app.add_subcommand("sensitivity", "Phi_t(r) for the first path");
  auto* fbm = app.add_subcommand("fbm-sample", "write fractional Brownian paths (CSV and FDE1)");
  auto* verify = app.add_subcommand("verify", "run acceptance checks and print a JSON report");
  for (auto* s : {simulate, density, sensitivity, fbm}) add_common(s);
  std::string suite = "all";
  verify->add_option("suite", suite, "all or a criterion number 1..12");
  verify->add_option("--out", o.out, "also write the report to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*verify) {
      const fde::json rep = fde::run_verify(suite);
      for (const auto& c : rep["criteria"])
        std::cerr << (c["pass"].get<bool>() ? "[PASS] " : "[FAIL] ") << c["id"].get<int>() << " "
                  << c["name"].get<std::string>() << "\n";
      const std::string text = rep.dump(2) + "\n";
      if (!o.out.empty()) fde::write_text(o.out, text);
      std::cout << text;
      return rep["pass"].get<bool>() ? 0 : 3;
    }
    const fde::ExperimentConfig cfg = resolve(o);
    if (*simulate) print_run(fde::run_simulate(cfg));
    if (*density) print_run(fde::run_density(cfg));
    if (*sensitivity) print_run(fde::run_sensitivity(cfg));
    if (*fbm) print_run(fde::run_fbm_sample(cfg));
    std::cout << "regime: " << fde::regime_label(cfg) << "\n";
  } catch (const fde::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const fde::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
