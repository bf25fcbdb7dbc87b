// gdvae: dataset generation, training, evaluation and analysis from a JSON run config.

#include "gdvae/errors.hpp"
#include "gdvae/run/commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum ExitCode : int { ok = 0, failure = 1, config = 2, solver = 3, training = 4, missing_artifact = 5 };

std::size_t env_threads() {
  const char* s = std::getenv("GDVAE_THREADS");
  if (!s || !*s) return 1;
  try {
    const long v = std::stol(s);
    if (v < 1) throw std::out_of_range("threads");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw gdvae::ConfigError("GDVAE_THREADS", std::string("expected a positive integer, got '") + s + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manifold-latent variational autoencoders for reduced-order modeling"};
  app.set_version_flag("--version", gdvae::run::kToolVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::size_t> trials, threads, epochs;
  std::optional<std::uint64_t> seed;
  bool resume = false, quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--trials", trials, "number of training trials (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads (default: GDVAE_THREADS or 1)")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", quiet, "suppress progress lines");
  };
  auto* gen = app.add_subcommand("generate", "simulate training pairs and reference test trajectories");
  auto* train = app.add_subcommand("train", "train one model per trial");
  auto* eval = app.add_subcommand("eval", "multi-step error table for the trained trials and configured baselines");
  auto* analyze = app.add_subcommand("analyze", "latent variance statistics, continuity score and latent-code export");
  for (auto* s : {gen, train, eval, analyze}) add_common(s);
  train->add_option("--epochs", epochs, "training epochs (overrides the config)")->check(CLI::PositiveNumber);
  train->add_flag("--resume", resume, "continue from existing trial checkpoints");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ExitCode::ok : ExitCode::config;
  }

  try {
    auto cfg = gdvae::run::RunConfig::load(config_path, seed);
    if (trials) cfg.trials = *trials;
    gdvae::run::RunOptions opts;
    opts.out = out_dir;
    opts.threads = threads ? *threads : env_threads();
    opts.epochs = epochs;
    opts.resume = resume;
    opts.log = quiet ? nullptr : &std::cerr;

    if (gen->parsed()) gdvae::run::cmd_generate(cfg, opts);
    if (train->parsed()) gdvae::run::cmd_train(cfg, opts);
    if (eval->parsed()) {
      const auto table = gdvae::run::cmd_eval(cfg, opts);
      table.write_csv(std::cout);
    }
    if (analyze->parsed()) gdvae::run::cmd_analyze(cfg, opts);
    return ExitCode::ok;
  } catch (const gdvae::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ExitCode::config;
  } catch (const gdvae::ShapeError& e) {
    std::cerr << "config error (inconsistent extents): " << e.what() << '\n';
    return ExitCode::config;
  } catch (const gdvae::SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return ExitCode::solver;
  } catch (const gdvae::ProjectionError& e) {
    std::cerr << "solver error (projection, residual " << e.residual() << ", condition " << e.condition() << "): " << e.what()
              << '\n';
    return ExitCode::solver;
  } catch (const gdvae::TrainingError& e) {
    std::cerr << "training error in " << e.term() << ": " << e.what() << '\n';
    return ExitCode::training;
  } catch (const gdvae::MissingArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return ExitCode::missing_artifact;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::failure;
  }
}
