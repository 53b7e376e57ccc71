// mdl: batch experiment runner.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "mdl/cli.hpp"
#include "mdl/errors.hpp"

namespace {

struct Globals {
  std::string config_path;
  std::optional<long> precision_bits;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> format;
};

}  // namespace

int main(int argc, char** argv) {
  using namespace mdl::cli;
  CLI::App app{"Exact experiments on inhomogeneous and fibred Diophantine approximation"};
  app.require_subcommand(0, 1);
  Globals g;
  app.add_option("--config", g.config_path, "flat key=value config file; flags override it");
  app.add_option("--precision-bits", g.precision_bits, "precision cap in bits (default 4096)");
  app.add_option("--seed", g.seed, "random seed (default 1)");
  app.add_option("--threads", g.threads, "worker threads (0: hardware)");
  app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  std::map<std::string, std::map<std::string, std::string>> flag_values;
  std::map<std::string, CLI::App*> subs;
  for (const ExperimentSpec& spec : experiments()) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    sub->fallthrough();
    subs[spec.name] = sub;
    for (const KeySpec& k : spec.keys) {
      std::string help = k.help;
      if (k.fallback) help += " (default " + *k.fallback + ")";
      if (!k.fallback && !k.optional) help += " (required)";
      sub->add_option("--" + k.name, flag_values[spec.name][k.name], help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    ExperimentConfig config;
    if (!g.config_path.empty()) {
      std::ifstream in(g.config_path);
      if (!in) throw mdl::ConfigError("cannot read config file " + g.config_path);
      std::stringstream ss;
      ss << in.rdbuf();
      config = ExperimentConfig::from_text(ss.str(), g.config_path);
    }
    std::string chosen;
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) chosen = name;
    }
    if (!chosen.empty()) {
      if (!config.experiment.empty() && config.experiment != chosen)
        throw mdl::ConfigError("config file is for experiment " + config.experiment + ", not " + chosen);
      config.experiment = chosen;
      for (const auto& [key, value] : flag_values[chosen]) {
        if (subs[chosen]->count("--" + key) > 0) config.params[key] = value;
      }
    }
    if (config.experiment.empty()) throw mdl::ConfigError("no experiment given (subcommand or 'experiment' in the config)");
    if (g.precision_bits) config.precision_bits = *g.precision_bits;
    if (g.seed) config.seed = *g.seed;
    if (g.threads) config.threads = *g.threads;
    if (g.format) config.format = *g.format;
    config.validate();
    const RunResult result = run(config);
    write(std::cout, config, result);
    if (result.exit_code() != 0)
      std::cerr << "mdl: " << result.undecided << " of " << result.tests << " decisions undecided\n";
    return result.exit_code();
  } catch (const mdl::ConfigError& e) {
    std::cerr << "mdl: config error: " << e.what() << '\n';
    return 1;
  } catch (const mdl::Error& e) {
    std::cerr << "mdl: " << e.what() << '\n';
    return 1;
  }
}
