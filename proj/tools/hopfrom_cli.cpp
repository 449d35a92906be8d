#include <hopfrom/scenario.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Parametric invariant-manifold ROMs for Hopf bifurcations of follower-force structures"};
  std::string scenario, out;
  int threads = 1;
  bool verbose = false;
  app.add_option("--scenario", scenario, "Scenario file (YAML)")->required();
  app.add_option("--out", out, "Output directory, overrides the scenario setting");
  app.add_option("--threads", threads, "Worker threads for independent ROM builds and reference loads")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", verbose, "Detailed progress on stderr");
  app.set_version_flag("--version", hopfrom::kVersion);
  CLI11_PARSE(app, argc, argv);

  try {
    const hopfrom::Scenario s = hopfrom::load_scenario(scenario);
    hopfrom::RunOptions ro;
    ro.outDir = out;
    ro.threads = threads;
    ro.verbose = verbose;
    hopfrom::run_scenario(s, ro);
  } catch (const hopfrom::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
