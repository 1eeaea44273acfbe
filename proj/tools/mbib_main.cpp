#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bib/experiment.hpp"

namespace {

// default output root: --out > BIB_OUT_ROOT > config "output" > ./out
std::string resolve_out_dir(const std::string& cli_out, const bib::ExperimentConfig& config,
                            const std::string& leaf) {
  std::string root;
  if (!cli_out.empty())
    root = cli_out;
  else if (const char* env = std::getenv("BIB_OUT_ROOT"); env && *env)
    root = env;
  else if (!config.output_dir.empty())
    root = config.output_dir;
  else
    root = "out";
  return leaf.empty() ? root : root + "/" + leaf;
}

std::string acc_line(const bib::GroupAccuracy& a) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "all=%.4f many=%.4f medium=%.4f few=%.4f", a.all, a.many,
                a.medium, a.few);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Balanced information bottleneck experiment runner"};
  app.require_subcommand(1);

  std::string config_path, out_dir;

  auto* run_cmd = app.add_subcommand("run", "Run one experiment from a config file");
  run_cmd->add_option("config", config_path, "JSON config file")->required();
  run_cmd->add_option("--out", out_dir, "Output directory");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a hyperparameter sweep");
  sweep_cmd->add_option("config", config_path, "JSON config file")->required();
  std::string axis_name;
  std::vector<double> beta_values, a_values, b_values;
  std::vector<std::size_t> tap_counts;
  std::vector<std::string> topo_names;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  sweep_cmd->add_option("--axis", axis_name, "One of: beta, ab_grid, taps, topology")->required();
  sweep_cmd->add_option("--beta", beta_values, "Beta values (axis beta)");
  sweep_cmd->add_option("--a", a_values, "a values (axis ab_grid)");
  sweep_cmd->add_option("--b", b_values, "b values (axis ab_grid)");
  sweep_cmd->add_option("--taps", tap_counts, "Tap counts (axis taps)");
  sweep_cmd->add_option("--topology", topo_names, "Topologies (axis topology)");
  sweep_cmd->add_option("--seeds", seeds, "Seed list");
  sweep_cmd->add_option("--out", out_dir, "Output directory");

  auto* compare_cmd = app.add_subcommand("compare", "Compare methods over seeds");
  compare_cmd->add_option("config", config_path, "JSON config file")->required();
  std::vector<std::string> method_names = {"ce", "bsce", "bib", "mbib"};
  compare_cmd->add_option("--methods", method_names, "Methods to compare");
  compare_cmd->add_option("--seeds", seeds, "Seed list");
  compare_cmd->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  bib::ExperimentConfig config;
  try {
    config = bib::cfg::parse_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (run_cmd->parsed()) {
      const std::string dir = resolve_out_dir(out_dir, config, "");
      const bib::ExperimentReport report = bib::run_experiment(config, dir);
      std::cout << "accuracy: " << acc_line(report.accuracy) << '\n'
                << "rho_v=" << report.rep_v.rho << " rho_z=" << report.rep_z.rho << '\n'
                << "reports written to " << dir << '\n';
      return 0;
    }
    if (sweep_cmd->parsed()) {
      bib::SweepAxis axis;
      if (axis_name == "beta") {
        axis.kind = bib::SweepAxis::Kind::Beta;
        axis.beta_values = beta_values.empty()
                               ? std::vector<double>{0, 1, 2, 3, 4, 5}
                               : beta_values;
      } else if (axis_name == "ab_grid") {
        axis.kind = bib::SweepAxis::Kind::AbGrid;
        const std::vector<double> defaults = {0.0, 0.1, 0.3, 0.5, 1.0};
        axis.a_values = a_values.empty() ? defaults : a_values;
        axis.b_values = b_values.empty() ? defaults : b_values;
      } else if (axis_name == "taps") {
        axis.kind = bib::SweepAxis::Kind::Taps;
        axis.tap_counts = tap_counts.empty() ? std::vector<std::size_t>{2, 3, 4, 5, 6}
                                             : tap_counts;
      } else if (axis_name == "topology") {
        axis.kind = bib::SweepAxis::Kind::Topology;
        if (topo_names.empty()) topo_names = {"mbib", "se_mbib", "all_mbib"};
        for (const std::string& n : topo_names)
          axis.topologies.push_back(bib::method_from_string(n));
      } else {
        std::cerr << "config error: unknown sweep axis '" << axis_name << "'\n";
        return 2;
      }
      const auto rows = bib::sweep(config, axis, seeds);
      const std::string dir = resolve_out_dir(out_dir, config, "");
      std::filesystem::create_directories(dir);
      bib::write_sweep_csv(rows, dir + "/sweep.csv");
      std::cout << "sweep summary written to " << dir << "/sweep.csv\n";
      return 0;
    }
    // compare
    std::vector<bib::Method> methods;
    for (const std::string& n : method_names) methods.push_back(bib::method_from_string(n));
    const auto rows = bib::compare(methods, config, seeds);
    const std::string dir = resolve_out_dir(out_dir, config, "");
    std::filesystem::create_directories(dir);
    bib::write_compare_csv(rows, dir + "/comparison.csv");
    for (const auto& r : rows)
      std::cout << bib::method_name(r.method) << ": acc_all=" << r.acc_all_mean
                << " acc_few=" << r.acc_few_mean << " rho_v=" << r.rho_v_mean
                << " rho_z=" << r.rho_z_mean << '\n';
    std::cout << "comparison written to " << dir << "/comparison.csv\n";
    return 0;
  } catch (const bib::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const bib::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
