#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "copp/baselines.hpp"
#include "copp/conformal.hpp"
#include "copp/dataset.hpp"
#include "copp/extensions.hpp"
#include "copp/sequential.hpp"
#include "copp/synthetic.hpp"

namespace copp {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Method {
  copp,
  copp_is,
  copp_ms,
  copp_is_ms,
  sm,
  dm_true,
  dm_false,
  is_ci,
  dr_ci,
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::copp: return "COPP";
    case Method::copp_is: return "COPP-IS";
    case Method::copp_ms: return "COPP-MS";
    case Method::copp_is_ms: return "COPP-IS-MS";
    case Method::sm: return "SM";
    case Method::dm_true: return "DM-true";
    case Method::dm_false: return "DM-false";
    case Method::is_ci: return "IS-CI";
    case Method::dr_ci: return "DR-CI";
  }
  return "?";
}

// Case-insensitive lookup of the canonical method names.
inline Method method_from_name(const std::string& raw) {
  std::string s = raw;
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  static const std::pair<const char*, Method> table[] = {
      {"COPP", Method::copp},           {"COPP-IS", Method::copp_is},
      {"COPP-MS", Method::copp_ms},     {"COPP-IS-MS", Method::copp_is_ms},
      {"SM", Method::sm},               {"DM-TRUE", Method::dm_true},
      {"DM-FALSE", Method::dm_false},   {"IS-CI", Method::is_ci},
      {"DR-CI", Method::dr_ci},
  };
  for (const auto& [name, m] : table)
    if (s == name) return m;
  throw ConfigError("unknown method: " + s);
}

struct ExperimentConfig {
  ScenarioSpec scenario;
  std::vector<Method> methods;
  double alpha = 0.1;
  int replications = 100;
  int test_points = 10000;
  MultiSplitConfig ms{0, 0.5};  // repetitions 0: auto (100 low-dim, 50 high-dim)
  std::uint64_t master_seed = 1;
  bool known_behavior = false;
  int threads = 1;
  ForestConfig forest;
  int dm_grid = 512;

  void validate() const {
    scenario.validate();
    if (methods.empty()) throw ConfigError("methods must be nonempty");
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (test_points < 1) throw ConfigError("test_points must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    for (Method m : methods) {
      bool single_only = m == Method::sm || m == Method::dm_true ||
                         m == Method::dm_false || m == Method::is_ci ||
                         m == Method::dr_ci;
      if (single_only && !scenario.single_stage())
        throw ConfigError(std::string(method_name(m)) +
                          " applies to single-stage scenarios only");
    }
  }

  CoppConfig copp_config() const {
    CoppConfig c;
    c.alpha = alpha;
    c.forest = forest;
    c.penalized_cv = scenario.high_dim && !known_behavior;
    return c;
  }

  MultiSplitConfig ms_config() const {
    MultiSplitConfig c = ms;
    if (c.repetitions <= 0) c.repetitions = scenario.high_dim ? 50 : 100;
    return c;
  }
};

struct ReplicateResult {
  double coverage = std::numeric_limits<double>::quiet_NaN();
  double avg_length = std::numeric_limits<double>::quiet_NaN();
  bool infinite_length = false;
  double n_matched_cal = -1.0;  // mean over repetitions for multi-split
  bool failed = false;
  std::string error;
};

struct MethodSummary {
  double mean_coverage = 0.0;
  double sd_coverage = 0.0;
  double mean_length = 0.0;
  double mean_matched_cal = 0.0;
  int failures = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  // results[m][r]: method config.methods[m], replication r.
  std::vector<std::vector<ReplicateResult>> results;
  std::vector<MethodSummary> summaries;
  double chosen_bandwidth = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

struct TruthBundle {
  Policy target;              // single-stage
  Policy behavior;            // single-stage analytic
  StagewisePolicy seq_target;
  StagewisePolicy seq_behavior;
};

inline TruthBundle scenario_truth(const ScenarioSpec& s) {
  TruthBundle t;
  if (s.example == 1) {
    t.target = s.deterministic_target
                   ? Example1Truth::deterministic_target_policy()
                   : Example1Truth::target_policy();
    t.behavior = Example1Truth::behavior_policy();
  } else if (s.example == 2) {
    const int d1 = s.high_dim ? 100 : 1;
    t.seq_target = Example2Truth::target_policy(d1);
    t.seq_behavior = Example2Truth::behavior_policy(d1);
  } else {
    t.seq_target = Example3Truth::target_policy(s.horizon);
    t.seq_behavior = Example3Truth::behavior_policy(s.horizon);
  }
  return t;
}

struct TestSet {
  std::vector<Vector> x;
  std::vector<double> y;  // realized outcome under the target policy
};

inline TestSet draw_test_set(const ScenarioSpec& s, const Policy& target,
                             int count, Rng& rng) {
  TestSet out;
  out.x.reserve(count);
  out.y.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::pair<Vector, double> p;
    if (s.example == 1) p = example1_test_point(target, s.high_dim, rng);
    else if (s.example == 2) p = example2_test_point(s.high_dim, rng);
    else p = example3_test_point(s.horizon, rng);
    out.x.push_back(std::move(p.first));
    out.y.push_back(p.second);
  }
  return out;
}

// Misspecified outcome model: mix the oracle distribution function with a
// uniform distribution over the replicate's observed outcome range, with a
// Uniform(0.5,1) mixing fraction drawn per arm and replicate. The uniform
// component drags the likelihood-ratio weights toward 1, reproducing the
// undercoverage of a direct method built on a wrong density model.
inline DensityModel noisy_example1_density(std::uint64_t seed, double y_min,
                                           double y_max) {
  Rng rng(seed);
  double u0 = rng.uniform(0.5, 1.0), u1 = rng.uniform(0.5, 1.0);
  double g = 1.0 / std::max(y_max - y_min, 1e-12);
  DensityModel oracle = example1_oracle_density();
  return {[oracle, u0, u1, g, y_min, y_max](const Vector& x, int t, double y) {
    double u = t == 0 ? u0 : u1;
    double uniform_part = (y >= y_min && y <= y_max) ? g : 0.0;
    return (1.0 - u) * oracle.pdf(x, t, y) + u * uniform_part;
  }};
}

template <class ModelT>
ReplicateResult evaluate_set_model(const ModelT& model, const TestSet& test) {
  ReplicateResult r;
  double covered = 0.0, total_len = 0.0;
  for (size_t i = 0; i < test.x.size(); ++i) {
    PredictionSet set = model.predict(test.x[i]);
    if (set.contains(test.y[i])) covered += 1.0;
    double len = set.lebesgue_length();
    if (std::isinf(len)) r.infinite_length = true;
    else total_len += len;
  }
  r.coverage = covered / static_cast<double>(test.x.size());
  r.avg_length = r.infinite_length
                     ? std::numeric_limits<double>::infinity()
                     : total_len / static_cast<double>(test.x.size());
  return r;
}

inline ReplicateResult evaluate_dm(const DirectMethodModel& model,
                                   const TestSet& test) {
  ReplicateResult r;
  QuantileForest::Workspace ws;
  double covered = 0.0, total_len = 0.0;
  for (size_t i = 0; i < test.x.size(); ++i) {
    if (model.contains(test.x[i], test.y[i], ws)) covered += 1.0;
    double len = model.predict(test.x[i]).lebesgue_length();
    if (std::isinf(len)) r.infinite_length = true;
    else total_len += len;
  }
  r.coverage = covered / static_cast<double>(test.x.size());
  r.avg_length = r.infinite_length
                     ? std::numeric_limits<double>::infinity()
                     : total_len / static_cast<double>(test.x.size());
  return r;
}

inline ReplicateResult evaluate_ci(const KernelBaseline& baseline,
                                   const TestSet& test) {
  ReplicateResult r;
  double covered = 0.0, total_len = 0.0;
  for (size_t i = 0; i < test.x.size(); ++i) {
    KernelCi ci = baseline.ci(test.x[i]);
    if (test.y[i] >= ci.lo && test.y[i] <= ci.hi) covered += 1.0;
    total_len += ci.hi - ci.lo;
  }
  r.coverage = covered / static_cast<double>(test.x.size());
  r.avg_length = total_len / static_cast<double>(test.x.size());
  return r;
}

template <class MsModelT>
double mean_matched(const MsModelT& ms) {
  double s = 0.0;
  for (const auto& m : ms.models) s += m.n_cal_matched;
  return s / static_cast<double>(ms.models.size());
}

inline Policy fit_full_behavior(const BanditDataset& data, const CoppConfig& cfg,
                                std::uint64_t seed) {
  std::vector<int> y(data.actions.begin(), data.actions.end());
  LogisticModel m = cfg.penalized_cv
                        ? fit_logistic_cv(data.contexts, y, data.num_actions, seed)
                        : fit_logistic(data.contexts, y, cfg.ridge_lambda,
                                       data.num_actions);
  return m.as_policy();
}

inline void run_single_stage_replicate(const ExperimentConfig& cfg,
                                       const TruthBundle& truth,
                                       double bandwidth, int rep,
                                       std::vector<std::vector<ReplicateResult>>& out) {
  std::uint64_t seed_r = derive_seed(cfg.master_seed, StreamTag::replicate, rep);
  Rng data_rng(derive_seed(seed_r, StreamTag::data_gen));
  BanditDataset data = generate_example1(cfg.scenario.n, cfg.scenario.high_dim, data_rng);
  Rng test_rng(derive_seed(seed_r, StreamTag::test_points));
  TestSet test = draw_test_set(cfg.scenario, truth.target, cfg.test_points, test_rng);

  CoppConfig cc = cfg.copp_config();
  std::optional<Policy> behavior =
      cfg.known_behavior ? std::optional<Policy>(truth.behavior) : std::nullopt;

  std::optional<Policy> full_behavior;  // shared by the kernel baselines
  auto baseline_behavior = [&]() -> const Policy& {
    if (cfg.known_behavior) return truth.behavior;
    if (!full_behavior)
      full_behavior = fit_full_behavior(data, cc, derive_seed(seed_r, StreamTag::misc, 99));
    return *full_behavior;
  };

  for (size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    ReplicateResult& slot = out[mi][rep];
    try {
      switch (cfg.methods[mi]) {
        case Method::copp: {
          CoppModel m = copp_fit(data, truth.target, behavior, cc, seed_r);
          slot = evaluate_set_model(m, test);
          slot.n_matched_cal = m.n_cal_matched;
          break;
        }
        case Method::copp_is: {
          CoppModel m = copp_is_fit(data, truth.target, behavior, cc, seed_r);
          slot = evaluate_set_model(m, test);
          slot.n_matched_cal = m.n_cal_matched;
          break;
        }
        case Method::copp_ms: {
          CoppMsModel m =
              copp_ms_fit(data, truth.target, behavior, cc, cfg.ms_config(), seed_r);
          slot = evaluate_set_model(m, test);
          slot.n_matched_cal = mean_matched(m);
          break;
        }
        case Method::copp_is_ms: {
          CoppMsModel m = copp_is_ms_fit(data, truth.target, behavior, cc,
                                         cfg.ms_config(), seed_r);
          slot = evaluate_set_model(m, test);
          slot.n_matched_cal = mean_matched(m);
          break;
        }
        case Method::sm: {
          CoppModel m = subsampling_fit(data, truth.target, behavior, cc, seed_r);
          slot = evaluate_set_model(m, test);
          slot.n_matched_cal = m.n_cal_matched;
          break;
        }
        case Method::dm_true: {
          DirectMethodModel m = direct_method_fit(
              data, truth.target, example1_oracle_density(), behavior, cc, seed_r);
          m.grid_size = cfg.dm_grid;
          slot = evaluate_dm(m, test);
          break;
        }
        case Method::dm_false: {
          double y_lo = data.outcomes.minCoeff(), y_hi = data.outcomes.maxCoeff();
          DirectMethodModel m = direct_method_fit(
              data, truth.target,
              noisy_example1_density(derive_seed(seed_r, StreamTag::density_noise),
                                     y_lo, y_hi),
              behavior, cc, seed_r);
          m.grid_size = cfg.dm_grid;
          slot = evaluate_dm(m, test);
          break;
        }
        case Method::is_ci: {
          KernelBaseline b(data, truth.target, baseline_behavior(), nullptr,
                           {bandwidth}, cfg.alpha);
          slot = evaluate_ci(b, test);
          break;
        }
        case Method::dr_ci: {
          QuantileForest mu;
          mu.fit(data.contexts, data.outcomes, cfg.forest,
                 derive_seed(seed_r, StreamTag::forest, 7));
          KernelBaseline b(data, truth.target, baseline_behavior(), &mu,
                           {bandwidth}, cfg.alpha);
          slot = evaluate_ci(b, test);
          break;
        }
      }
    } catch (const std::exception& e) {
      slot.failed = true;
      slot.error = e.what();
    }
  }
}

inline TrajectoryDataset generate_sequential(const ScenarioSpec& s, Rng& rng) {
  return s.example == 2 ? generate_example2(s.n, s.high_dim, rng)
                        : generate_example3(s.n, s.horizon, rng);
}

inline void run_sequential_replicate(const ExperimentConfig& cfg,
                                     const TruthBundle& truth, int rep,
                                     std::vector<std::vector<ReplicateResult>>& out) {
  std::uint64_t seed_r = derive_seed(cfg.master_seed, StreamTag::replicate, rep);
  Rng data_rng(derive_seed(seed_r, StreamTag::data_gen));
  TrajectoryDataset data = generate_sequential(cfg.scenario, data_rng);
  Rng test_rng(derive_seed(seed_r, StreamTag::test_points));
  TestSet test = draw_test_set(cfg.scenario, Policy(), cfg.test_points, test_rng);

  CoppConfig cc = cfg.copp_config();
  std::optional<StagewisePolicy> behavior =
      cfg.known_behavior ? std::optional<StagewisePolicy>(truth.seq_behavior)
                         : std::nullopt;

  for (size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    ReplicateResult& slot = out[mi][rep];
    try {
      switch (cfg.methods[mi]) {
        case Method::copp: {
          SequentialCoppModel m =
              sequential_copp_fit(data, truth.seq_target, behavior, cc, seed_r);
          slot = evaluate_set_model(m, test);
          slot.n_matched_cal = m.n_cal_matched;
          break;
        }
        case Method::copp_is: {
          SequentialCoppModel m =
              sequential_copp_is_fit(data, truth.seq_target, behavior, cc, seed_r);
          slot = evaluate_set_model(m, test);
          slot.n_matched_cal = m.n_cal_matched;
          break;
        }
        case Method::copp_ms: {
          SequentialMsModel m = sequential_copp_ms_fit(
              data, truth.seq_target, behavior, cc, cfg.ms_config(), seed_r);
          slot = evaluate_set_model(m, test);
          slot.n_matched_cal = mean_matched(m);
          break;
        }
        case Method::copp_is_ms: {
          SequentialMsModel m = sequential_copp_is_ms_fit(
              data, truth.seq_target, behavior, cc, cfg.ms_config(), seed_r);
          slot = evaluate_set_model(m, test);
          slot.n_matched_cal = mean_matched(m);
          break;
        }
        default:
          slot.failed = true;
          slot.error = "method not defined for sequential scenarios";
      }
    } catch (const std::exception& e) {
      slot.failed = true;
      slot.error = e.what();
    }
  }
}

// Grid search over bandwidth multipliers on a dedicated tuning replicate,
// keeping the bandwidth whose CI coverage is highest.
inline double select_bandwidth(const ExperimentConfig& cfg, const TruthBundle& truth) {
  std::uint64_t seed = derive_seed(cfg.master_seed, StreamTag::misc, 777);
  Rng data_rng(derive_seed(seed, StreamTag::data_gen));
  BanditDataset data = generate_example1(cfg.scenario.n, cfg.scenario.high_dim, data_rng);
  Rng test_rng(derive_seed(seed, StreamTag::test_points));
  TestSet tune = draw_test_set(cfg.scenario, truth.target,
                               std::min(cfg.test_points, 500), test_rng);
  CoppConfig cc = cfg.copp_config();
  Policy behavior = cfg.known_behavior
                        ? truth.behavior
                        : fit_full_behavior(data, cc, derive_seed(seed, StreamTag::misc, 99));
  double best_h = 0.0, best_cov = -1.0;
  for (double h : bandwidth_grid(data.contexts)) {
    KernelBaseline b(data, truth.target, behavior, nullptr, {h}, cfg.alpha);
    double cov = evaluate_ci(b, tune).coverage;
    if (cov > best_cov) {
      best_cov = cov;
      best_h = h;
    }
  }
  return best_h;
}

}  // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  detail::TruthBundle truth = detail::scenario_truth(config.scenario);

  double bandwidth = std::numeric_limits<double>::quiet_NaN();
  for (Method m : config.methods)
    if (m == Method::is_ci || m == Method::dr_ci) {
      bandwidth = detail::select_bandwidth(config, truth);
      break;
    }

  ExperimentReport report;
  report.config = config;
  report.chosen_bandwidth = bandwidth;
  report.results.assign(config.methods.size(),
                        std::vector<ReplicateResult>(config.replications));

  auto run_rep = [&](int rep) {
    if (config.scenario.single_stage())
      detail::run_single_stage_replicate(config, truth, bandwidth, rep, report.results);
    else
      detail::run_sequential_replicate(config, truth, rep, report.results);
  };

  int threads = std::min(config.threads, config.replications);
  if (threads <= 1) {
    for (int r = 0; r < config.replications; ++r) run_rep(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&]() {
        for (int r = next.fetch_add(1); r < config.replications;
             r = next.fetch_add(1))
          run_rep(r);
      });
    for (auto& th : pool) th.join();
  }

  report.summaries.resize(config.methods.size());
  for (size_t mi = 0; mi < config.methods.size(); ++mi) {
    MethodSummary& s = report.summaries[mi];
    std::vector<double> covs, lens, matched;
    for (const ReplicateResult& r : report.results[mi]) {
      if (r.failed) {
        ++s.failures;
        continue;
      }
      covs.push_back(r.coverage);
      lens.push_back(r.avg_length);
      if (r.n_matched_cal >= 0) matched.push_back(r.n_matched_cal);
    }
    auto mean = [](const std::vector<double>& v) {
      if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
      double m = 0.0;
      for (double x : v) m += x;
      return m / static_cast<double>(v.size());
    };
    s.mean_coverage = mean(covs);
    s.mean_length = mean(lens);
    s.mean_matched_cal = mean(matched);
    if (covs.size() > 1) {
      double m = s.mean_coverage, acc = 0.0;
      for (double c : covs) acc += (c - m) * (c - m);
      s.sd_coverage = std::sqrt(acc / static_cast<double>(covs.size() - 1));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization.

inline void to_json(nlohmann::json& j, const ScenarioSpec& s) {
  j = {{"example", s.example},
       {"n", s.n},
       {"high_dim", s.high_dim},
       {"horizon", s.horizon},
       {"deterministic_target", s.deterministic_target}};
}

inline void from_json(const nlohmann::json& j, ScenarioSpec& s) {
  s.example = j.value("example", 1);
  s.n = j.value("n", 2000);
  s.high_dim = j.value("high_dim", false);
  s.horizon = j.value("horizon", 3);
  s.deterministic_target = j.value("deterministic_target", false);
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  std::vector<std::string> names;
  for (Method m : c.methods) names.push_back(method_name(m));
  j = {{"scenario", c.scenario},
       {"methods", names},
       {"alpha", c.alpha},
       {"replications", c.replications},
       {"test_points", c.test_points},
       {"ms", {{"repetitions", c.ms.repetitions}, {"gamma", c.ms.gamma}}},
       {"seed", c.master_seed},
       {"known_behavior", c.known_behavior},
       {"threads", c.threads}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c.scenario = j.value("scenario", ScenarioSpec{});
  c.methods.clear();
  for (const auto& name : j.at("methods"))
    c.methods.push_back(method_from_name(name.get<std::string>()));
  c.alpha = j.value("alpha", 0.1);
  c.replications = j.value("replications", 100);
  c.test_points = j.value("test_points", 10000);
  if (j.contains("ms")) {
    c.ms.repetitions = j["ms"].value("repetitions", 0);
    c.ms.gamma = j["ms"].value("gamma", 0.5);
  }
  c.master_seed = j.value("seed", std::uint64_t{1});
  c.known_behavior = j.value("known_behavior", false);
  c.threads = j.value("threads", 1);
}

namespace detail {

inline nlohmann::json finite_or_string(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double json_extended(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string())
    return j.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity();
  return j.get<double>();
}

}  // namespace detail

inline std::string report_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "method,replication,coverage,avg_length,n_matched_cal,failed\n";
  for (size_t mi = 0; mi < report.config.methods.size(); ++mi)
    for (size_t r = 0; r < report.results[mi].size(); ++r) {
      const ReplicateResult& rr = report.results[mi][r];
      os << method_name(report.config.methods[mi]) << ',' << r << ',';
      if (rr.failed) os << ",,";
      else {
        os << rr.coverage << ',';
        if (std::isinf(rr.avg_length)) os << "inf";
        else os << rr.avg_length;
        os << ',';
        if (rr.n_matched_cal >= 0) os << rr.n_matched_cal;
      }
      os << ',' << (rr.failed ? 1 : 0) << '\n';
    }
  return os.str();
}

inline nlohmann::json report_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["config"] = report.config;
  j["chosen_bandwidth"] = detail::finite_or_string(report.chosen_bandwidth);
  nlohmann::json sums = nlohmann::json::object();
  for (size_t mi = 0; mi < report.config.methods.size(); ++mi) {
    const MethodSummary& s = report.summaries[mi];
    sums[method_name(report.config.methods[mi])] = {
        {"mean_coverage", detail::finite_or_string(s.mean_coverage)},
        {"sd_coverage", detail::finite_or_string(s.sd_coverage)},
        {"mean_length", detail::finite_or_string(s.mean_length)},
        {"mean_matched_cal", detail::finite_or_string(s.mean_matched_cal)},
        {"failures", s.failures}};
  }
  j["summaries"] = sums;
  return j;
}

inline void emit_report(const ExperimentReport& report, const std::string& csv_path,
                        const std::string& json_path) {
  {
    std::ofstream os(csv_path);
    if (!os) throw std::runtime_error("cannot write " + csv_path);
    os << report_csv(report);
  }
  {
    std::ofstream os(json_path);
    if (!os) throw std::runtime_error("cannot write " + json_path);
    os << report_json(report).dump(2) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Preset experiment grids.

struct NamedConfig {
  std::string name;
  ExperimentConfig config;
};

// Single-stage comparator study: known behavior policy, stochastic and
// deterministic targets, direct/subsampling comparators next to the proposal.
inline std::vector<NamedConfig> figure2_configs(std::uint64_t seed, int reps) {
  std::vector<NamedConfig> out;
  for (bool det : {false, true}) {
    ExperimentConfig c;
    c.scenario = {1, 2000, false, 3, det};
    c.methods = {Method::dm_true, Method::dm_false, Method::sm, Method::copp};
    c.replications = reps;
    c.known_behavior = true;
    c.master_seed = derive_seed(seed, StreamTag::misc, det ? 2 : 1);
    out.push_back({det ? "deterministic" : "stochastic", c});
  }
  return out;
}

// Main simulation grid: examples 1-2, low and high dimension, fitted
// behavior policy; kernel CI baselines run in the single-stage cells.
inline std::vector<NamedConfig> figure3_configs(std::uint64_t seed, int reps) {
  std::vector<NamedConfig> out;
  int tag = 0;
  for (int example : {1, 2})
    for (bool high : {false, true}) {
      ExperimentConfig c;
      c.scenario = {example, 2000, high, 3, false};
      c.methods = {Method::copp, Method::copp_is, Method::copp_ms,
                   Method::copp_is_ms};
      if (example == 1) {
        c.methods.push_back(Method::is_ci);
        c.methods.push_back(Method::dr_ci);
      }
      c.replications = reps;
      c.master_seed = derive_seed(seed, StreamTag::misc, 10 + tag++);
      std::string name = "example" + std::to_string(example) +
                         (high ? "-highdim" : "-lowdim");
      out.push_back({name, c});
    }
  return out;
}

// Horizon study on example 3.
inline std::vector<NamedConfig> figure4_configs(std::uint64_t seed, int reps) {
  std::vector<NamedConfig> out;
  for (int horizon : {3, 4, 5}) {
    ExperimentConfig c;
    c.scenario = {3, 2000, false, horizon, false};
    c.methods = {Method::copp, Method::copp_is, Method::copp_ms,
                 Method::copp_is_ms};
    c.replications = reps;
    c.master_seed = derive_seed(seed, StreamTag::misc, 20 + horizon);
    out.push_back({"horizon" + std::to_string(horizon), c});
  }
  return out;
}

}  // namespace copp
