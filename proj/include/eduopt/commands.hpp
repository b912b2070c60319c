#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "eduopt/config.hpp"

namespace eduopt {

struct CommandOptions {
  std::string panel_file;             // moments: summarize this panel instead of simulating
  bool shutoff = false;               // option-values: run the three shock scenarios
  bool zero_shock_evaluation = false; // returns etc.: evaluate members at z = 0
};

// Runs one subcommand, writing its files under cfg.output_dir and a short
// human-readable summary to console. Failures throw eduopt::Error.
void run_command(const std::string& name, const RunConfig& cfg, const CommandOptions& opts, std::ostream& console);

const std::vector<std::string>& command_names();

// "eduopt <version> command=... config_hash=... seed=... scenario=...", written
// after "# " as the first line of every output file.
std::string metadata_line(const std::string& command, const RunConfig& cfg);

struct PolicyReport {
  std::string base;
  std::string alt;
  std::vector<int> base_schooling;  // per individual
  std::vector<int> alt_schooling;
  double base_ge12 = 0.0, alt_ge12 = 0.0;
  double base_ge16 = 0.0, alt_ge16 = 0.0;
  int alt_min = 0;
  // baseline final schooling -> (individuals, affected)
  std::map<int, std::pair<int, int>> affected;

  double affected_share(int base_years) const;
};

PolicyReport policy_report(const RunConfig& cfg, const std::string& base, const std::string& alt);

struct ValidationCheck {
  std::string name;
  double value = 0.0;
  std::string expected;
  bool pass = false;
};

// Reform 9 against baseline, and Reform 10 against Reform 9, on common shocks.
std::vector<ValidationCheck> reform_validation(const RunConfig& cfg);

}  // namespace eduopt
