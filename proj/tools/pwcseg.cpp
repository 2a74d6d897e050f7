#include "pwc/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Piecewise constant image approximation by clustering and region merging"};
  app.require_subcommand(1);
  pwc::RunConfig config;
  std::string levels, mode = "E", mask;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--input", config.input, "8-bit PGM/PPM image")->required();
    cmd->add_option("--out", config.out, "output directory")->capture_default_str();
    cmd->add_option("--max-clusters", config.max_clusters, "largest cluster count G")->capture_default_str();
    cmd->add_option("--levels", levels, "levels to dump as images, e.g. 2,4,8,16");
    cmd->add_option("--mode", mode, "CSV value column: E or sigma")->check(CLI::IsMember({"E", "sigma"}));
  };
  auto* optimal = app.add_subcommand("optimal", "optimal grayscale clustering by dynamic programming");
  auto* hier = app.add_subcommand("hier", "hierarchical sequence, optionally seeded by a mask");
  auto* segment = app.add_subcommand("segment", "region merging into connected segments");
  auto* compare = app.add_subcommand("compare", "sigma curves of every method side by side");
  auto* verify = app.add_subcommand("verify", "invariant battery; exit status 1 on a hard failure");
  for (auto* cmd : {optimal, hier, segment, compare, verify}) add_common(cmd);
  for (auto* cmd : {hier, compare}) cmd->add_option("--mask", mask, "masking image of the same size");
  for (auto* cmd : {segment, compare}) {
    cmd->add_option("--criterion", config.criterion, "plain, additive, flsa, extended or all")
        ->check(CLI::IsMember({"plain", "additive", "flsa", "extended", "all"}))
        ->capture_default_str();
    cmd->add_option("--lambda", config.lambda, "boundary weight of the additive criterion")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pwc::kUsageError;
  }
  config.command = app.get_subcommands().front()->get_name();
  try {
    if (!levels.empty()) config.levels = pwc::parse_levels(levels);
    config.mode = pwc::parse_series_mode(mode);
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return pwc::kUsageError;
  }
  if (!mask.empty()) config.mask = mask;
  return pwc::run(config, std::cout, std::cerr);
}
