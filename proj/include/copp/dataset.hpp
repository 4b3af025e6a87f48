#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "copp/rng.hpp"

namespace copp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct InvalidDatasetError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Logged single-stage data: n contexts, actions in {0..m-1}, real outcomes.
struct BanditDataset {
  Matrix contexts;            // n x d
  std::vector<int> actions;   // length n
  Vector outcomes;            // length n
  int num_actions = 2;

  int n() const { return static_cast<int>(contexts.rows()); }
  int dim() const { return static_cast<int>(contexts.cols()); }

  void validate() const {
    const int nn = n();
    if (nn < 1) throw InvalidDatasetError("dataset is empty");
    if (static_cast<int>(actions.size()) != nn || outcomes.size() != nn)
      throw InvalidDatasetError("context/action/outcome lengths differ");
    if (num_actions < 2) throw InvalidDatasetError("num_actions must be >= 2");
    for (int i = 0; i < nn; ++i) {
      if (actions[i] < 0 || actions[i] >= num_actions)
        throw InvalidDatasetError("action out of range");
      if (!std::isfinite(outcomes[i]))
        throw InvalidDatasetError("non-finite outcome");
    }
    if (!contexts.allFinite()) throw InvalidDatasetError("non-finite context");
  }
};

// Logged K-stage trajectories with a final-stage outcome. Stage states may
// have different widths; stage_states[k] is n x d_k.
struct TrajectoryDataset {
  std::vector<Matrix> stage_states;            // K matrices, each n x d_k
  std::vector<std::vector<int>> stage_actions; // K vectors of length n
  Vector outcomes;                             // length n
  int num_actions = 2;

  int horizon() const { return static_cast<int>(stage_states.size()); }
  int n() const {
    return stage_states.empty() ? 0 : static_cast<int>(stage_states[0].rows());
  }
  int stage_dim(int k) const { return static_cast<int>(stage_states[k].cols()); }

  void validate() const {
    const int K = horizon();
    if (K < 1) throw InvalidDatasetError("horizon must be >= 1");
    if (static_cast<int>(stage_actions.size()) != K)
      throw InvalidDatasetError("stage_states/stage_actions horizon mismatch");
    const int nn = n();
    if (nn < 1) throw InvalidDatasetError("dataset is empty");
    if (outcomes.size() != nn) throw InvalidDatasetError("outcome length mismatch");
    for (int k = 0; k < K; ++k) {
      if (static_cast<int>(stage_states[k].rows()) != nn ||
          static_cast<int>(stage_actions[k].size()) != nn)
        throw InvalidDatasetError("stage arrays not aligned");
      if (!stage_states[k].allFinite())
        throw InvalidDatasetError("non-finite stage state");
      for (int i = 0; i < nn; ++i)
        if (stage_actions[k][i] < 0 || stage_actions[k][i] >= num_actions)
          throw InvalidDatasetError("stage action out of range");
    }
    for (int i = 0; i < nn; ++i)
      if (!std::isfinite(outcomes[i])) throw InvalidDatasetError("non-finite outcome");
  }

  // History features for instance i at stage k (0-based): concatenation of
  // states X_1..X_{k+1} and one-hot encodings of actions T_1..T_k.
  Vector history(int i, int k) const {
    int len = 0;
    for (int j = 0; j <= k; ++j) len += stage_dim(j);
    len += k * (num_actions - 1);
    Vector h(len);
    int pos = 0;
    for (int j = 0; j <= k; ++j) {
      h.segment(pos, stage_dim(j)) = stage_states[j].row(i).transpose();
      pos += stage_dim(j);
      if (j < k) {
        for (int a = 1; a < num_actions; ++a)
          h[pos + a - 1] = (stage_actions[j][i] == a) ? 1.0 : 0.0;
        pos += num_actions - 1;
      }
    }
    return h;
  }

  int history_dim(int k) const {
    int len = 0;
    for (int j = 0; j <= k; ++j) len += stage_dim(j);
    return len + k * (num_actions - 1);
  }
};

struct SplitSpec {
  double train_fraction = 0.75;
  std::uint64_t seed = 0;
};

struct IndexSplit {
  std::vector<int> train;
  std::vector<int> calibration;
};

// Deterministic shuffle split. Non-integral sizes round to nearest.
inline IndexSplit split_indices(int n, const SplitSpec& spec) {
  if (n < 2) throw InvalidDatasetError("need n >= 2 to split");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw InvalidDatasetError("train_fraction must be in (0,1)");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(spec.seed, StreamTag::split));
  for (int i = n - 1; i > 0; --i)
    std::swap(idx[i], idx[static_cast<int>(rng.below(i + 1))]);
  int n_train = static_cast<int>(std::llround(spec.train_fraction * n));
  n_train = std::clamp(n_train, 1, n - 1);
  IndexSplit out;
  out.train.assign(idx.begin(), idx.begin() + n_train);
  out.calibration.assign(idx.begin() + n_train, idx.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.calibration.begin(), out.calibration.end());
  return out;
}

inline IndexSplit split_dataset(const BanditDataset& data, const SplitSpec& spec) {
  return split_indices(data.n(), spec);
}

inline IndexSplit split_dataset(const TrajectoryDataset& data, const SplitSpec& spec) {
  return split_indices(data.n(), spec);
}

// ---------------------------------------------------------------------------
// CSV serialization. Bandit data: x0..x{d-1},t,y. Trajectories:
// k{stage}_x{j} and k{stage}_t blocks followed by y. Reals carry 17
// significant digits so round-trips are bit-exact.

namespace detail {

inline std::string fmt_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(cur);
  return out;
}

}  // namespace detail

inline void write_csv(const BanditDataset& data, std::ostream& os) {
  const int d = data.dim();
  for (int j = 0; j < d; ++j) os << "x" << j << ",";
  os << "t,y\n";
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < d; ++j) os << detail::fmt_real(data.contexts(i, j)) << ",";
    os << data.actions[i] << "," << detail::fmt_real(data.outcomes[i]) << "\n";
  }
}

inline void write_csv(const TrajectoryDataset& data, std::ostream& os) {
  const int K = data.horizon();
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < data.stage_dim(k); ++j) os << "k" << k << "_x" << j << ",";
    os << "k" << k << "_t,";
  }
  os << "y\n";
  for (int i = 0; i < data.n(); ++i) {
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < data.stage_dim(k); ++j)
        os << detail::fmt_real(data.stage_states[k](i, j)) << ",";
      os << data.stage_actions[k][i] << ",";
    }
    os << detail::fmt_real(data.outcomes[i]) << "\n";
  }
}

inline BanditDataset read_bandit_csv(std::istream& is, int num_actions = 2) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidDatasetError("empty csv");
  auto header = detail::split_line(line);
  const int cols = static_cast<int>(header.size());
  if (cols < 3 || header[cols - 1] != "y" || header[cols - 2] != "t")
    throw InvalidDatasetError("bandit csv must end with t,y columns");
  const int d = cols - 2;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = detail::split_line(line);
    if (static_cast<int>(f.size()) != cols)
      throw InvalidDatasetError("ragged csv row");
    std::vector<double> vals(cols);
    for (int j = 0; j < cols; ++j) vals[j] = std::stod(f[j]);
    rows.push_back(std::move(vals));
  }
  BanditDataset data;
  const int n = static_cast<int>(rows.size());
  data.contexts.resize(n, d);
  data.actions.resize(n);
  data.outcomes.resize(n);
  int max_action = 1;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) data.contexts(i, j) = rows[i][j];
    data.actions[i] = static_cast<int>(std::llround(rows[i][d]));
    max_action = std::max(max_action, data.actions[i]);
    data.outcomes[i] = rows[i][d + 1];
  }
  data.num_actions = std::max(num_actions, max_action + 1);
  data.validate();
  return data;
}

inline TrajectoryDataset read_trajectory_csv(std::istream& is, int num_actions = 2) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidDatasetError("empty csv");
  auto header = detail::split_line(line);
  const int cols = static_cast<int>(header.size());
  if (cols < 3 || header[cols - 1] != "y")
    throw InvalidDatasetError("trajectory csv must end with y");
  // Column layout per stage: k{k}_x{j}... then k{k}_t.
  std::vector<int> stage_dims;
  int k = 0;
  int c = 0;
  while (c < cols - 1) {
    int d = 0;
    std::string xp = "k" + std::to_string(k) + "_x";
    while (c < cols - 1 && header[c].rfind(xp, 0) == 0) { ++d; ++c; }
    std::string tc = "k" + std::to_string(k) + "_t";
    if (c >= cols - 1 || header[c] != tc)
      throw InvalidDatasetError("malformed trajectory header at stage " + std::to_string(k));
    ++c;
    stage_dims.push_back(d);
    ++k;
  }
  const int K = static_cast<int>(stage_dims.size());
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = detail::split_line(line);
    if (static_cast<int>(f.size()) != cols) throw InvalidDatasetError("ragged csv row");
    std::vector<double> vals(cols);
    for (int j = 0; j < cols; ++j) vals[j] = std::stod(f[j]);
    rows.push_back(std::move(vals));
  }
  const int n = static_cast<int>(rows.size());
  TrajectoryDataset data;
  data.stage_states.resize(K);
  data.stage_actions.assign(K, std::vector<int>(n));
  data.outcomes.resize(n);
  for (int s = 0; s < K; ++s) data.stage_states[s].resize(n, stage_dims[s]);
  int max_action = 1;
  for (int i = 0; i < n; ++i) {
    int pos = 0;
    for (int s = 0; s < K; ++s) {
      for (int j = 0; j < stage_dims[s]; ++j) data.stage_states[s](i, j) = rows[i][pos++];
      data.stage_actions[s][i] = static_cast<int>(std::llround(rows[i][pos++]));
      max_action = std::max(max_action, data.stage_actions[s][i]);
    }
    data.outcomes[i] = rows[i][pos];
  }
  data.num_actions = std::max(num_actions, max_action + 1);
  data.validate();
  return data;
}

inline void write_csv_file(const BanditDataset& d, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_csv(d, os);
}

inline void write_csv_file(const TrajectoryDataset& d, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_csv(d, os);
}

}  // namespace copp
