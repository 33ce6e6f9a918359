// Command-line front end: penalty-stab simulate|convergence|epsilon-study

#include "penalty_stab/penalty_stab.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

namespace ps = penalty_stab;
namespace hs = penalty_stab::harness;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

struct Invocation {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
};

void add_common_options(CLI::App *cmd, Invocation &inv) {
  cmd->add_option("--config", inv.config_path, "experiment config (JSON, or a CSV written by a previous run)")
      ->required();
  cmd->add_option("--out", inv.out_dir, "output directory")->required();
  cmd->add_option("--override", inv.overrides, "dotted key=value applied to the config")
      ->take_all();
}

int run(hs::ExperimentKind kind, const Invocation &inv) {
  hs::ExperimentConfig cfg;
  try {
    hs::json doc = hs::load_config_document(inv.config_path);
    for (const auto &o : inv.overrides) hs::apply_override(doc, o);
    if (!doc.is_object()) throw hs::ConfigError("", "config must be a JSON object");
    auto &exp = doc["experiment"];
    if (exp.is_null()) exp = hs::json::object();
    if (exp.is_object() && !exp.contains("kind")) exp["kind"] = hs::to_string(kind);
    cfg = hs::parse_config(doc);
    if (cfg.kind != kind) {
      throw hs::ConfigError("experiment.kind", "\"" + hs::to_string(cfg.kind) +
                                                   "\" does not match the subcommand");
    }
  } catch (const std::exception &e) {
    std::cerr << "penalty-stab: invalid config: " << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    const auto outcome = hs::run_experiment(cfg, inv.out_dir);
    for (const auto &f : outcome.files) std::cout << "wrote " << f.string() << '\n';
    for (const auto &w : outcome.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto &f : outcome.failures) std::cerr << "run failed: " << f << '\n';
    return outcome.failed() ? kExitRuntime : kExitOk;
  } catch (const std::exception &e) {
    std::cerr << "penalty-stab: " << e.what() << '\n';
    return kExitRuntime;
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Penalized boundary-feedback stabilization of the Chafee-Infante equation"};
  app.set_version_flag("--version", hs::version_string());
  app.require_subcommand(1);

  Invocation inv;
  auto *simulate = app.add_subcommand("simulate", "decay runs, one CSV per variant and sweep value");
  auto *convergence = app.add_subcommand("convergence", "spatial convergence with eps = c h^l");
  auto *epsilon = app.add_subcommand("epsilon-study", "successive differences over an eps list");
  for (auto *cmd : {simulate, convergence, epsilon}) add_common_options(cmd, inv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  if (simulate->parsed()) return run(hs::ExperimentKind::decay, inv);
  if (convergence->parsed()) return run(hs::ExperimentKind::convergence, inv);
  return run(hs::ExperimentKind::epsilon_study, inv);
}
