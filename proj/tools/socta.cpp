#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "socta/error.hpp"
#include "socta/serialization.hpp"

namespace {

enum ExitCode : int { kOk = 0, kValidation = 1, kMissing = 2, kNumerical = 3 };

}  // namespace

int main(int argc, char** argv) {
  using namespace socta;
  CLI::App app{"Temperature-adaptive battery state-of-charge estimation"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  cli::CommandOptions opt;
  std::string model, reference, input, target;
  std::optional<double> eta;

  app.add_option("--config", config_path, "run configuration (JSON)");
  app.add_option("--seed", seed, "overrides the configured seed");
  app.add_option("--out", out_dir, "output directory (overrides the configured one)");

  auto* simulate = app.add_subcommand("simulate", "simulate reference and target cycles");
  auto* train_ref = app.add_subcommand("train-reference", "fit CVA, monitoring limits and the reference model");
  train_ref->add_option("--input", input, "reference cycles CSV");
  auto* evaluate = app.add_subcommand("evaluate", "reference model on held-out reference cycles");
  evaluate->add_option("--model", model, "reference model artifact");
  evaluate->add_option("--input", input, "cycles CSV to evaluate");
  auto* monitor = app.add_subcommand("monitor", "stream cycles through the monitoring model");
  monitor->add_option("--model", model, "reference model artifact");
  monitor->add_option("--input", input, "cycles CSV to monitor");
  auto* train_tr = app.add_subcommand("train-transfer", "select consistent features and train the transfer model");
  train_tr->add_option("--reference", reference, "reference model artifact");
  train_tr->add_option("--target", target, "target cycles CSV (the first cycle trains)");
  train_tr->add_option("--eta", eta, "adjusting-factor coefficient in [0,1]");
  auto* predict = app.add_subcommand("predict", "transfer-model estimates on target cycles");
  predict->add_option("--model", model, "transfer model artifact");
  predict->add_option("--reference", reference, "reference model for the direct-application baseline");
  predict->add_option("--input", input, "cycles CSV to estimate");
  auto* report = app.add_subcommand("report", "metrics (and optional SVG charts) from stored predictions");
  report->add_flag("--svg", opt.svg, "write SVG line charts");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    cfg.validate();
    opt.out = cfg.output_dir;
    if (!model.empty()) opt.model = model;
    if (!reference.empty()) opt.reference = reference;
    if (!input.empty()) opt.input = input;
    if (!target.empty()) opt.target = target;
    opt.eta = eta;

    if (simulate->parsed()) cli::run_simulate(cfg, opt);
    if (train_ref->parsed()) cli::run_train_reference(cfg, opt);
    if (evaluate->parsed()) cli::run_evaluate(cfg, opt);
    if (monitor->parsed()) cli::run_monitor(cfg, opt);
    if (train_tr->parsed()) cli::run_train_transfer(cfg, opt);
    if (predict->parsed()) cli::run_predict(cfg, opt);
    if (report->parsed()) cli::run_report(cfg, opt);
  } catch (const MissingArtifactError& e) {
    std::cerr << "error: missing artifact: " << e.what() << '\n';
    return kMissing;
  } catch (const NumericalError& e) {
    std::cerr << "error: numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const Json::exception& e) {
    std::cerr << "error: malformed artifact: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
