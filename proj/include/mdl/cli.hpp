#pragma once

// Batch experiment runner behind the `mdl` tool: a flat key=value config,
// one experiment per subcommand, and exact CSV/JSON records.

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mdl::cli {

/// One output row. value +- err, both exact rationals.
struct ExperimentRecord {
  std::string experiment;
  std::string params;
  std::uint64_t q_or_Q = 0;
  mpq_class value;
  mpq_class err;
  std::uint64_t undecided = 0;
};

inline constexpr const char* kCsvHeader = "experiment,params,q_or_Q,value_num,value_den,err_num,err_den,undecided_count";

void write_csv(std::ostream& os, const std::vector<ExperimentRecord>& records);
void write_json(std::ostream& os, const std::vector<ExperimentRecord>& records);

struct KeySpec {
  std::string name;
  std::optional<std::string> fallback;  ///< default value; none means required unless optional
  bool optional = false;
  std::string help;
};

struct ExperimentSpec {
  std::string name;
  std::string help;
  std::vector<KeySpec> keys;
};

const std::vector<ExperimentSpec>& experiments();
const ExperimentSpec* find_experiment(std::string_view name);

struct ExperimentConfig {
  std::string experiment;
  std::map<std::string, std::string> params;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  long precision_bits = 4096;
  std::string format = "csv";

  /// Flat `key = value` text; `#` starts a comment.
  std::string to_text() const;
  /// Throws ConfigError naming the line and key.
  static ExperimentConfig from_text(std::string_view text, std::string_view source = "config");
  /// Fills defaults and rejects unknown or missing keys.
  void validate() const;
  /// params with defaults applied, rendered `k=v;k=v` in key order.
  std::string canonical_params() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Keys that are global flags rather than experiment parameters.
bool is_global_key(std::string_view key);

struct RunResult {
  std::vector<ExperimentRecord> records;
  std::uint64_t tests = 0;      ///< decisions attempted
  std::uint64_t undecided = 0;  ///< decisions left open at the cap
  /// 0 on success, 2 when more than 1% of the decisions are undecided.
  int exit_code() const;
};

/// Runs the configured experiment. Throws ConfigError for invalid configs,
/// mdl::Error for domain failures.
RunResult run(const ExperimentConfig& config);

void write(std::ostream& os, const ExperimentConfig& config, const RunResult& result);

}  // namespace mdl::cli
