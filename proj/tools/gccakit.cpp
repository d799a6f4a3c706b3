#include <CLI11.hpp>
#include <cstdio>
#include <exception>

#include "gccakit/errors.hpp"
#include "gccakit/log.hpp"
#include "gccakit/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gccakit: correlated-component analysis of multi-subject stimulus-synchronized recordings"};
  app.require_subcommand(1);

  gccakit::cli::CliOptions options;
  std::uint64_t seed = 0;
  bool seed_given = false;

  for (const char* name : {"synth", "fit", "evaluate", "sweep", "threshold"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", options.config_path, "experiment configuration file")
        ->required();
    sub->add_option("--out", options.out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "master seed overriding all configured seeds")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--threads", options.threads, "worker threads (0 = auto)");
  }

  CLI11_PARSE(app, argc, argv);
  options.subcommand = app.get_subcommands().front()->get_name();
  if (seed_given) options.seed_override = seed;

  try {
    gccakit::cli::run(options);
    return 0;
  } catch (const gccakit::ConfigError& e) {
    gccakit::log::error("config: ", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    gccakit::log::error("config: ", e.what());
    return 2;
  } catch (const gccakit::IoError& e) {
    gccakit::log::error("io: ", e.what());
    return 3;
  } catch (const gccakit::NumericError& e) {
    gccakit::log::error("numeric: ", e.what());
    return 4;
  } catch (const std::exception& e) {
    gccakit::log::error(e.what());
    return 1;
  }
}
