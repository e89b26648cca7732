#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

#include "thermobeat/config.hpp"
#include "thermobeat/errors.hpp"
#include "thermobeat/pipeline.hpp"

namespace {

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int fail(const std::string& kind, int code, const std::string& message) {
  std::cerr << "error kind=" << kind << " exit=" << code << " message=\"" << one_line(message) << "\"\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace thermobeat;

  CLI::App app{"Beat-note photon correlation simulator and analyser"};
  app.set_version_flag("--version", std::string(THERMOBEAT_VERSION));
  app.require_subcommand(1);

  std::string config_path, out_dir, input, format = "csv";
  std::uint64_t seed = 0;
  unsigned threads = 0;

  const char* help[] = {
      "predict", "analytic g2 curve",
      "simulate", "photon events (PCTS) and their g2",
      "correlate", "g2 from a PCTS file",
      "estimate", "beat frequency from a PCTS file, a g2 CSV or a fresh simulation",
      "sweep", "beat frequency against detuning and the fitted slope",
      "stability", "beat frequency scatter against duration",
  };
  for (int i = 0; i < 12; i += 2) {
    auto* sub = app.add_subcommand(help[i], help[i + 1]);
    sub->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "output format")->check(CLI::IsMember({"csv"}));
    sub->add_option("--threads", threads, "override run.threads");
    sub->add_option("--input", input, "input PCTS (or g2 CSV for estimate)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", 2, e.what());
  }

  try {
    auto* sub = app.get_subcommands().front();
    pipeline::Command command = pipeline::parse_command(sub->get_name());
    config::RunConfig cfg = config_path.empty() ? config::parse_config("") : config::load_config(config_path);
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--threads")) cfg.threads = threads;

    pipeline::RunOptions opts;
    opts.input = input;
    if (!out_dir.empty()) {
      opts.output_dir = out_dir;
    } else if (!cfg.output_dir.empty()) {
      opts.output_dir = cfg.output_dir;
    } else if (const char* env = std::getenv("THERMOBEAT_OUT"); env && *env) {
      opts.output_dir = env;
    } else {
      opts.output_dir = ".";
    }

    for (const auto& w : cfg.experiment.warnings()) std::cerr << "warning: " << w << "\n";
    for (const auto& path : pipeline::run_pipeline(cfg, command, opts)) std::cout << path << "\n";
    return 0;
  } catch (const Error& e) {
    return fail(e.kind(), e.exit_code(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", 1, e.what());
  }
}
