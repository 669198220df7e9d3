#include <iostream>

#include "CLI11.hpp"
#include "tiltlab/cli.hpp"

int main(int argc, char** argv) {
  tl::ExperimentConfig cfg;
  CLI::App app{"tiltlab: tilted walk disconnection experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key = value file; flags given on the command line win");

  app.add_option("--d", cfg.d, "dimension");
  app.add_option("--N", cfg.N, "N or list of N, ascending")->delimiter(',');
  app.add_option("--R", cfg.R, "outer radius of the potential, integer >= 3");
  app.add_option("--delta", cfg.delta);
  app.add_option("--eta", cfg.eta);
  app.add_option("--eps", cfg.eps);
  app.add_option("--u", cfg.u, "interlacement level");
  app.add_option("--K", cfg.K, "shape, e.g. point:0,0,0 or ball:0,0,0:0.5");
  app.add_option("--radii", cfg.radii, "a1..a5 of the mesoscopic boxes")->delimiter(',');
  app.add_option("--tstar", cfg.tstar, "excursion time scale, < 0 for N^2 log^2 N");
  app.add_option("--n-runs", cfg.n_runs, "Monte Carlo runs per cell");
  app.add_option("--seed", cfg.seed);
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--M", cfg.M, "disconnection window is M N");
  app.add_option("--centers", cfg.centers, "x0 per N");
  app.add_option("--box", cfg.box, "cube radii for capacity / vacancy checks")->delimiter(',');
  app.add_option("--u-grid", cfg.u_grid, "a:b:n or a comma list");
  app.add_option("--N-grid", cfg.N_grid, "a:b:n or a comma list");
  app.add_option("--decay-runs", cfg.decay_runs);
  app.add_option("--entropy-samples", cfg.entropy_samples);
  app.add_option("--n-direct", cfg.n_direct, "direct SRW runs for the pipeline check, 0 to skip");
  app.add_option("--direct-window", cfg.direct_window);
  app.add_option("--first-index", cfg.first_index, "first true excursion in the domination chain");
  app.add_option("--tail-threshold", cfg.tail_threshold);
  app.add_option("--tv-threshold", cfg.tv_threshold);
  app.add_option("--qsd-dev-threshold", cfg.qsd_dev_threshold);

  for (auto& name : tl::suite_names()) app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  std::string name = app.get_subcommands().front()->get_name();
  try {
    auto r = tl::run_suite(name, cfg);
    tl::write_outputs(r, cfg);
    std::cout << tl::human_summary(r);
    return r.ok() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << name << ": " << e.what() << "\n";
    return 2;
  }
}
