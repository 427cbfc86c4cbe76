#include <hbcheb/cli.hpp>
#include <hbcheb/version.hpp>

#include <CLI11.hpp>

#include <string>

int main(int argc, char** argv) {
  CLI::App app{"harmonic balance with certified periodic solutions"};
  app.set_version_flag("--version", std::string("hbcheb ") + hbcheb::kVersion);
  app.require_subcommand(1);

  std::string config;
  hbcheb::RunOptions opts;

  const auto add_common = [&](CLI::App* sub, bool needs_config) {
    CLI::Option* c = sub->add_option("--config", config, "run config file");
    if (needs_config) c->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--threads", opts.threads, "worker thread count")
        ->check(CLI::PositiveNumber);
    sub->add_option("--repeat", opts.repeat, "timing repeat count")
        ->check(CLI::PositiveNumber);
  };

  add_common(app.add_subcommand("frf", "trace a frequency response branch"),
             true);
  add_common(app.add_subcommand(
                 "stab-convergence",
                 "Floquet backends vs the shooting oracle over resolutions"),
             true);
  add_common(app.add_subcommand(
                 "urabe", "certified existence along a branch or at a point"),
             true);
  add_common(app.add_subcommand("selftest", "quick invariant checks"), false);
  add_common(app.add_subcommand("bench", "informational timing harness"),
             true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Eigen::setNbThreads(opts.threads);
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    return hbcheb::run_cli(sub, config, opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
