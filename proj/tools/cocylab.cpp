#include "cocylab/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitValidation = 2;
constexpr int kExitBudget = 3;
constexpr int kExitNumerical = 4;

cocylab::Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cocylab::ValidationError("cannot open config '" + path + "'");
  return cocylab::Json::parse(in, nullptr, true, true);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on Holder matrix cocycles over Markov shifts", "cocylab"};
  app.set_version_flag("--version", cocylab::kVersion);
  app.require_subcommand(1);

  std::string config_path, mode, out_path, csv_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  for (const auto& name : cocylab::experiment_names()) {
    auto* sub = app.add_subcommand(name);
    if (name == "schrodinger")
      sub->add_option("mode", mode, "scan, trace or periodic")->required()->check(CLI::IsMember({"scan", "trace", "periodic"}));
    auto* pos = sub->add_option("file", config_path, "JSON config file");
    sub->add_option("--config", config_path, "JSON config file (alternative to the positional form)")->excludes(pos);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", threads, "override the config thread count")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_path, "write the JSON report here instead of stdout");
    sub->add_option("--csv", csv_path, "write the command's table here");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  std::string command = app.get_subcommands().front()->get_name();
  if (command == "schrodinger") command += " " + mode;

  try {
    const cocylab::Json config = config_path.empty() ? cocylab::Json::object() : load_config(config_path);
    const auto out = cocylab::run_experiment(command, config, {seed, threads});
    if (config.contains("output")) {
      const auto& o = config["output"];
      if (out_path.empty() && o.contains("report")) out_path = o["report"].get<std::string>();
      if (csv_path.empty() && o.contains("csv")) csv_path = o["csv"].get<std::string>();
    }
    const std::string text = out.report.dump(2) + '\n';
    if (out_path.empty()) std::cout << text;
    else write_file(out_path, text);
    if (!csv_path.empty()) write_file(csv_path, out.csv);
    return kExitOk;
  } catch (const cocylab::Json::exception& e) {
    std::cerr << "error: malformed config: " << e.what() << '\n';
    return kExitValidation;
  } catch (const cocylab::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const cocylab::BudgetError& e) {
    std::cerr << "error: budget exceeded: " << e.what() << '\n';
    return kExitBudget;
  } catch (const cocylab::NumericalError& e) {
    std::cerr << "error: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
}
