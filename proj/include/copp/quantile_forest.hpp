#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "copp/dataset.hpp"
#include "copp/rng.hpp"

namespace copp {

struct ForestConfig {
  int num_trees = 200;
  int min_leaf_size = 5;
  int max_features = 0;  // 0 means ceil(d/3)
  bool bootstrap = true;
};

// Meinshausen-style quantile regression forest. Each tree is grown by
// variance-reduction CART on a bootstrap resample with random feature
// subsetting per split; leaves retain the training outcomes so that a query
// yields a proper weighted empirical distribution over them.
class QuantileForest {
 public:
  struct Workspace {
    std::vector<double> rank_weight;
    std::vector<int> touched;
  };

  QuantileForest() = default;

  bool fitted() const { return !trees_.empty(); }
  int num_train() const { return static_cast<int>(sorted_y_.size()); }

  void fit(const Matrix& X, const Vector& y, const ForestConfig& config,
           std::uint64_t seed) {
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    if (n < 1 || d < 1 || y.size() != n)
      throw std::invalid_argument("bad forest training data");
    if (config.min_leaf_size < 1 || n < config.min_leaf_size)
      throw std::invalid_argument("forest needs n >= min_leaf_size samples");
    if (config.num_trees < 1) throw std::invalid_argument("num_trees must be >= 1");
    config_ = config;
    if (config_.max_features <= 0)
      config_.max_features = std::max(1, (d + 2) / 3);
    config_.max_features = std::min(config_.max_features, std::max(d, 1));

    // Training outcomes sorted once; leaves reference ranks in this order.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return y[a] < y[b]; });
    sorted_y_.resize(n);
    std::vector<int> rank_of(n);
    for (int r = 0; r < n; ++r) {
      sorted_y_[r] = y[order[r]];
      rank_of[order[r]] = r;
    }

    // Global per-feature argsort shared by all trees.
    std::vector<std::vector<int>> global_order(d, std::vector<int>(n));
    for (int f = 0; f < d; ++f) {
      auto& g = global_order[f];
      std::iota(g.begin(), g.end(), 0);
      std::sort(g.begin(), g.end(), [&](int a, int b) { return X(a, f) < X(b, f); });
    }

    trees_.assign(config_.num_trees, Tree{});
    TreeBuilder builder(X, y, rank_of, global_order, config_);
    for (int t = 0; t < config_.num_trees; ++t) {
      Rng rng(derive_seed(seed, StreamTag::forest, static_cast<std::uint64_t>(t)));
      builder.build(trees_[t], rng);
    }
  }

  // Weighted empirical distribution of training outcomes for a query point.
  // Returns total accumulated weight (normalization denominator).
  double accumulate_weights(const Vector& x, Workspace& ws) const {
    require_fitted();
    const int n = num_train();
    ws.rank_weight.assign(n, 0.0);
    ws.touched.clear();
    double total = 0.0;
    for (const Tree& tree : trees_) {
      int node = 0;
      while (tree.nodes[node].leaf_id < 0)
        node = (x[tree.nodes[node].feature] <= tree.nodes[node].threshold)
                   ? tree.nodes[node].left
                   : tree.nodes[node].right;
      for (const auto& [rank, w] : tree.leaves[tree.nodes[node].leaf_id]) {
        if (ws.rank_weight[rank] == 0.0) ws.touched.push_back(rank);
        ws.rank_weight[rank] += w;
        total += w;
      }
    }
    return total;
  }

  // Left-continuous weighted quantiles at the given levels (ascending output
  // guaranteed by the shared CDF scan).
  std::pair<double, double> predict_quantiles(const Vector& x, double level_lo,
                                              double level_hi) const {
    Workspace ws;
    return predict_quantiles(x, level_lo, level_hi, ws);
  }

  std::pair<double, double> predict_quantiles(const Vector& x, double level_lo,
                                              double level_hi, Workspace& ws) const {
    if (!(level_lo > 0.0 && level_lo <= level_hi && level_hi < 1.0))
      throw std::invalid_argument("quantile levels must satisfy 0 < lo <= hi < 1");
    double total = accumulate_weights(x, ws);
    const int n = num_train();
    double cum = 0.0;
    double q_lo = sorted_y_[n - 1], q_hi = sorted_y_[n - 1];
    bool lo_done = false;
    for (int r = 0; r < n; ++r) {
      cum += ws.rank_weight[r];
      if (!lo_done && cum >= level_lo * total - 1e-12 * total) {
        q_lo = sorted_y_[r];
        lo_done = true;
      }
      if (cum >= level_hi * total - 1e-12 * total) {
        q_hi = sorted_y_[r];
        break;
      }
    }
    return {q_lo, q_hi};
  }

  double predict_mean(const Vector& x) const {
    Workspace ws;
    return predict_mean(x, ws);
  }

  double predict_mean(const Vector& x, Workspace& ws) const {
    double total = accumulate_weights(x, ws);
    double s = 0.0;
    for (int r : ws.touched) s += ws.rank_weight[r] * sorted_y_[r];
    return s / total;
  }

  // Normalized weight per sorted-outcome rank; exposed for oracle tests.
  std::vector<double> leaf_weights(const Vector& x) const {
    Workspace ws;
    double total = accumulate_weights(x, ws);
    std::vector<double> w(ws.rank_weight);
    for (double& v : w) v /= total;
    return w;
  }

  double training_outcome_at_rank(int r) const { return sorted_y_[r]; }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    int leaf_id = -1;
  };
  struct Tree {
    std::vector<Node> nodes;
    std::vector<std::vector<std::pair<int, double>>> leaves;  // (rank, weight)
  };

  class TreeBuilder {
   public:
    TreeBuilder(const Matrix& X, const Vector& y, const std::vector<int>& rank_of,
                const std::vector<std::vector<int>>& global_order,
                const ForestConfig& config)
        : X_(X), y_(y), rank_of_(rank_of), global_order_(global_order),
          config_(config), n_(static_cast<int>(X.rows())),
          d_(static_cast<int>(X.cols())) {}

    void build(Tree& tree, Rng& rng) {
      // Bootstrap multiset as per-row counts; slots expand the multiset so
      // presorted slot arrays can be partitioned stably down the tree.
      std::vector<int> count(n_, config_.bootstrap ? 0 : 1);
      if (config_.bootstrap)
        for (int i = 0; i < n_; ++i) ++count[static_cast<int>(rng.below(n_))];
      slot_row_.clear();
      for (int r = 0; r < n_; ++r)
        for (int c = 0; c < count[r]; ++c) slot_row_.push_back(r);
      const int ns = static_cast<int>(slot_row_.size());
      std::vector<int> slot_of_row_start(n_ + 1, 0);
      for (int r = 0; r < n_; ++r) slot_of_row_start[r + 1] = slot_of_row_start[r] + count[r];

      sorted_.assign(d_, std::vector<int>(ns));
      for (int f = 0; f < d_; ++f) {
        int pos = 0;
        for (int row : global_order_[f])
          for (int c = 0; c < count[row]; ++c)
            sorted_[f][pos++] = slot_of_row_start[row] + c;
      }
      mark_.assign(ns, 0);
      buf_.resize(ns);
      feat_pool_.resize(d_);
      std::iota(feat_pool_.begin(), feat_pool_.end(), 0);

      tree.nodes.clear();
      tree.leaves.clear();
      grow(tree, 0, ns, rng);
    }

   private:
    double slot_value(int slot, int f) const { return X_(slot_row_[slot], f); }
    double slot_y(int slot) const { return y_[slot_row_[slot]]; }

    int grow(Tree& tree, int lo, int hi, Rng& rng) {
      const int node_id = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(Node{});
      const int size = hi - lo;

      int best_f = -1;
      double best_score = -std::numeric_limits<double>::infinity();
      double best_thr = 0.0;
      if (size >= 2 * config_.min_leaf_size) {
        // Random feature subset without replacement.
        const int mtry = std::min(config_.max_features, d_);
        for (int j = 0; j < mtry; ++j) {
          int pick = j + static_cast<int>(rng.below(d_ - j));
          std::swap(feat_pool_[j], feat_pool_[pick]);
          int f = feat_pool_[j];
          scan_feature(f, lo, hi, best_f, best_score, best_thr);
        }
      }

      if (best_f < 0) {
        // Leaf: weights proportional to bootstrap multiplicity.
        std::vector<std::pair<int, double>> leaf;
        const double w = 1.0 / static_cast<double>(size);
        for (int i = lo; i < hi; ++i) {
          int rank = rank_of_[slot_row_[sorted_[0][i]]];
          if (!leaf.empty() && leaf.back().first == rank)
            leaf.back().second += w;
          else
            leaf.emplace_back(rank, w);
        }
        tree.nodes[node_id].leaf_id = static_cast<int>(tree.leaves.size());
        tree.leaves.push_back(std::move(leaf));
        return node_id;
      }

      // Stable partition of every feature array on the chosen split.
      int left_count = 0;
      for (int i = lo; i < hi; ++i) {
        int slot = sorted_[best_f][i];
        bool l = slot_value(slot, best_f) <= best_thr;
        mark_[slot] = l ? 1 : 0;
        left_count += l ? 1 : 0;
      }
      for (int f = 0; f < d_; ++f) {
        int lpos = lo, rpos = lo + left_count;
        for (int i = lo; i < hi; ++i) {
          int slot = sorted_[f][i];
          if (mark_[slot]) buf_[lpos++] = slot;
          else buf_[rpos++] = slot;
        }
        std::copy(buf_.begin() + lo, buf_.begin() + hi, sorted_[f].begin() + lo);
      }

      tree.nodes[node_id].feature = best_f;
      tree.nodes[node_id].threshold = best_thr;
      int l = grow(tree, lo, lo + left_count, rng);
      int r = grow(tree, lo + left_count, hi, rng);
      tree.nodes[node_id].left = l;
      tree.nodes[node_id].right = r;
      return node_id;
    }

    void scan_feature(int f, int lo, int hi, int& best_f, double& best_score,
                      double& best_thr) const {
      const int size = hi - lo;
      double total_sum = 0.0;
      for (int i = lo; i < hi; ++i) total_sum += slot_y(sorted_[f][i]);
      double left_sum = 0.0;
      int left_n = 0;
      const auto& arr = sorted_[f];
      for (int i = lo; i < hi - 1; ++i) {
        left_sum += slot_y(arr[i]);
        ++left_n;
        double v = slot_value(arr[i], f);
        double vn = slot_value(arr[i + 1], f);
        if (vn <= v) continue;  // split only between distinct values
        int right_n = size - left_n;
        if (left_n < config_.min_leaf_size || right_n < config_.min_leaf_size) continue;
        double right_sum = total_sum - left_sum;
        double score = left_sum * left_sum / left_n + right_sum * right_sum / right_n;
        if (score > best_score) {
          best_score = score;
          best_f = f;
          best_thr = 0.5 * (v + vn);
        }
      }
    }

    const Matrix& X_;
    const Vector& y_;
    const std::vector<int>& rank_of_;
    const std::vector<std::vector<int>>& global_order_;
    ForestConfig config_;
    int n_, d_;
    std::vector<int> slot_row_;
    std::vector<std::vector<int>> sorted_;
    std::vector<char> mark_;
    std::vector<int> buf_;
    std::vector<int> feat_pool_;
  };

  void require_fitted() const {
    if (!fitted()) throw std::logic_error("forest is not fitted");
  }

  ForestConfig config_;
  std::vector<Tree> trees_;
  std::vector<double> sorted_y_;
};

inline QuantileForest fit_forest(const Matrix& X, const Vector& y,
                                 const ForestConfig& config, std::uint64_t seed) {
  QuantileForest forest;
  forest.fit(X, y, config, seed);
  return forest;
}

}  // namespace copp
