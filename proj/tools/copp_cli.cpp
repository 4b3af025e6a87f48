#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "copp/copp.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

std::vector<copp::Method> parse_methods(const std::string& csv) {
  std::vector<copp::Method> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(copp::method_from_name(item));
  }
  return out;
}

void filter_methods(copp::ExperimentConfig& config, const std::string& csv) {
  if (csv.empty()) return;
  std::vector<copp::Method> keep = parse_methods(csv);
  std::vector<copp::Method> filtered;
  for (copp::Method m : config.methods)
    for (copp::Method k : keep)
      if (m == k) {
        filtered.push_back(m);
        break;
      }
  if (!filtered.empty()) config.methods = filtered;
}

int report_failures(const copp::ExperimentReport& report) {
  int failures = 0;
  for (const auto& s : report.summaries) failures += s.failures;
  return failures;
}

void print_summary(const std::string& name, const copp::ExperimentReport& report) {
  std::cout << "[" << name << "]\n";
  for (size_t mi = 0; mi < report.config.methods.size(); ++mi) {
    const copp::MethodSummary& s = report.summaries[mi];
    std::cout << "  " << copp::method_name(report.config.methods[mi])
              << ": coverage " << s.mean_coverage << " (sd " << s.sd_coverage
              << "), length " << s.mean_length << ", failures " << s.failures
              << "\n";
  }
}

int run_configs(const std::vector<copp::NamedConfig>& configs,
                const std::string& out_dir, const std::string& methods_csv,
                int threads) {
  fs::create_directories(out_dir);
  int failures = 0;
  for (copp::NamedConfig nc : configs) {
    filter_methods(nc.config, methods_csv);
    nc.config.threads = threads;
    copp::ExperimentReport report = copp::run_experiment(nc.config);
    copp::emit_report(report, out_dir + "/" + nc.name + ".csv",
                      out_dir + "/" + nc.name + ".json");
    print_summary(nc.name, report);
    failures += report_failures(report);
  }
  return failures > 0 ? kExitPartial : kExitOk;
}

nlohmann::json scenario_truth_sidecar(const copp::ScenarioSpec& s,
                                      std::uint64_t seed) {
  nlohmann::json j;
  j["scenario"] = s;
  j["seed"] = seed;
  if (s.example == 1) {
    j["behavior"] = "P(T=1|x) = sigmoid(-0.5 - 0.5*(x1+x2+x3+x4))";
    j["target"] = s.deterministic_target
                      ? "T = 1 if x3+x4 > x1+x2 else 0"
                      : "P(T=1|x) = sigmoid(-0.5 + x1+x2-x3-x4)";
    j["outcome"] =
        "Y = 1 + x1 - x2 + x3^3 + exp(x4) + T*(3 - 5x1 + 2x2 - 3x3 + x4) + "
        "(1+T)*(1+x1+x2+x3+x4)*eps, eps ~ N(0,1)";
  } else if (s.example == 2) {
    j["behavior"] = {"P(T1=1|x1) = sigmoid(-0.5 + x1)",
                     "P(T2=1|x2) = sigmoid(-0.5 - x2)"};
    j["target"] = {"P(E1=1|x1) = sigmoid(0.5*x1 - 0.5)",
                   "P(E2=1|x2) = sigmoid(0.5*x2 - 1)"};
    j["outcome"] =
        "Y = 1 + x1 + T1*(1 - 3(x1-0.2)^2) + x2 + T2*(1 - 5(x2-0.4)^2) + "
        "(1 + 0.5T1 - T1*x1 + 0.5T2 - T2*x2)*eps";
  } else {
    j["behavior"] = "P(Tk=1|xk) = sigmoid(-0.5 + xk)";
    j["target"] = "P(Ek=1|xk) = sigmoid(-0.5 + 0.5*xk)";
    j["dynamics"] = "x1 = 0.5*eps1; xk = 0.5*x(k-1) + 0.1*T(k-1) + 0.5*epsk; Y = xK";
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal off-policy prediction benchmark suite"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  int reps = 100;
  int threads = 1;
  std::string out_dir = "out";
  std::string methods_csv;
  std::string config_path;

  auto add_common = [&](CLI::App* cmd, bool with_config) {
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--reps", reps, "replication count");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--methods", methods_csv, "comma-separated method filter");
    cmd->add_option("--threads", threads, "parallel replications");
    if (with_config)
      cmd->add_option("--config", config_path, "JSON experiment config")->required();
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  int example = 1, n = 2000, horizon = 3;
  bool high_dim = false;
  sim->add_option("--example", example, "example id (1, 2, 3)");
  sim->add_option("--n", n, "sample size");
  sim->add_flag("--high-dim", high_dim, "pad features to dimension 100");
  sim->add_option("--horizon", horizon, "stages for example 3");
  sim->add_option("--seed", seed, "generator seed");
  sim->add_option("--out", out_dir, "output directory");

  CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
  add_common(run, true);

  CLI::App* fig2 = app.add_subcommand("figure2", "single-stage comparator grid");
  add_common(fig2, false);
  CLI::App* fig3 = app.add_subcommand("figure3", "main simulation grid");
  add_common(fig3, false);
  CLI::App* fig4 = app.add_subcommand("figure4", "horizon study");
  add_common(fig4, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      copp::ScenarioSpec spec{example, n, high_dim, horizon, false};
      spec.validate();
      fs::create_directories(out_dir);
      copp::Rng rng(copp::derive_seed(seed, copp::StreamTag::data_gen));
      std::string base = out_dir + "/example" + std::to_string(example);
      if (example == 1) {
        copp::write_csv_file(copp::generate_example1(n, high_dim, rng), base + ".csv");
      } else if (example == 2) {
        copp::write_csv_file(copp::generate_example2(n, high_dim, rng), base + ".csv");
      } else {
        copp::write_csv_file(copp::generate_example3(n, horizon, rng), base + ".csv");
      }
      std::ofstream os(base + "_truth.json");
      os << scenario_truth_sidecar(spec, seed).dump(2) << '\n';
      std::cout << "wrote " << base << ".csv\n";
      return kExitOk;
    }

    if (run->parsed()) {
      std::ifstream is(config_path);
      if (!is) {
        std::cerr << "cannot read config: " << config_path << "\n";
        return kExitConfig;
      }
      nlohmann::json j;
      is >> j;
      copp::ExperimentConfig config = j.get<copp::ExperimentConfig>();
      if (run->count("--seed")) config.master_seed = seed;
      if (run->count("--reps")) config.replications = reps;
      if (run->count("--threads")) config.threads = threads;
      filter_methods(config, methods_csv);
      config.validate();
      fs::create_directories(out_dir);
      copp::ExperimentReport report = copp::run_experiment(config);
      copp::emit_report(report, out_dir + "/report.csv", out_dir + "/report.json");
      print_summary("run", report);
      return report_failures(report) > 0 ? kExitPartial : kExitOk;
    }

    if (fig2->parsed())
      return run_configs(copp::figure2_configs(seed, reps), out_dir, methods_csv, threads);
    if (fig3->parsed())
      return run_configs(copp::figure3_configs(seed, reps), out_dir, methods_csv, threads);
    if (fig4->parsed())
      return run_configs(copp::figure4_configs(seed, reps), out_dir, methods_csv, threads);
  } catch (const copp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitOk;
}
