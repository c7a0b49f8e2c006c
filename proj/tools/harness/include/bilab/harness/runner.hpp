#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bilab/harness/config.hpp"

namespace bilab::harness {

enum class Relation { less, less_equal, greater, greater_equal, within };

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::less;
  double upper = 0.0;  // upper end for Relation::within
  bool pass = false;
};

Check make_check(std::string name, double value, Relation rel, double tolerance, double upper = 0.0);

struct Report {
  std::string subcommand;
  nlohmann::json config;
  std::vector<Check> checks;
  nlohmann::json data = nlohmann::json::object();
  std::vector<std::string> artifacts;  // relative to the output directory
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage
  std::string error;  // set when a numerical failure stopped the run

  void add(Check c);
  bool passed() const;
  // config, checks, data and artifacts; no wall-clock numbers
  nlohmann::json to_json() const;
  nlohmann::json timings_json() const;
};

const std::vector<std::string>& subcommands();
bool is_subcommand(const std::string& name);

// Runs one experiment, writing CSV artifacts into out_dir. Numerical failures
// are caught and stored in Report::error.
Report run(const std::string& subcommand, const Config& cfg, const std::string& out_dir);

// report.json and timings.json in out_dir
void write_report(const Report& r, const std::string& out_dir);

// 0 all checks pass, 1 otherwise
int exit_code(const Report& r);

}  // namespace bilab::harness
