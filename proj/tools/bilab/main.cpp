#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "bilab/harness/config.hpp"
#include "bilab/harness/runner.hpp"

namespace h = bilab::harness;

int main(int argc, char** argv) {
  CLI::App app{"bilab: experiments for the nonlinear biharmonic solver"};
  app.require_subcommand(0, 1);
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool list_keys = false;
  app.add_flag("--list-keys", list_keys, "print the config schema and exit");

  for (const auto& name : h::subcommands()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "flat key = value config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "overrides the seed key");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (list_keys) {
    for (const auto& k : h::config_schema()) {
      std::cout << k.key << " = " << k.fallback;
      if (!k.help.empty()) std::cout << "  # " << k.help;
      std::cout << "\n";
    }
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  try {
    h::Config cfg = h::Config::load(config_path);
    if (chosen->count("--seed")) cfg.set("seed", std::to_string(seed));
    h::Report rep = h::run(chosen->get_name(), cfg, out_dir);
    h::write_report(rep, out_dir);
    for (const auto& c : rep.checks) {
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << c.value << "\n";
    }
    if (!rep.error.empty()) std::cerr << "error: " << rep.error << "\n";
    std::cout << "report: " << (std::filesystem::path(out_dir) / "report.json").string() << "\n";
    return h::exit_code(rep);
  } catch (const h::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
