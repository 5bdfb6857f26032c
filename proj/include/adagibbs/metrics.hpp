#pragma once

// Ground-truth evaluation: optimal cluster matching, clustering MSE, purity
// and held-out perplexity of topic models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adagibbs/error.hpp"
#include "adagibbs/lda.hpp"
#include "adagibbs/random.hpp"

namespace adagibbs {

using CostMatrix = std::vector<std::vector<double>>;

struct Assignment {
  std::vector<std::size_t> row_to_col;  // permutation
  double cost = 0.0;
};

namespace detail {

// Shortest augmenting path with potentials, O(n^3), for a square matrix.
inline std::vector<std::size_t> solve_assignment(const CostMatrix& c) {
  const std::size_t n = c.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

inline double assignment_cost(const CostMatrix& c, const std::vector<std::size_t>& perm) {
  double s = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) s += c[i][perm[i]];
  return s;
}

inline CostMatrix drop_row_col(const CostMatrix& c, std::size_t r, std::size_t col) {
  CostMatrix out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i == r) continue;
    std::vector<double> row;
    for (std::size_t j = 0; j < c[i].size(); ++j)
      if (j != col) row.push_back(c[i][j]);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace detail

/// Minimum-cost perfect matching of a square matrix. Among optimal
/// assignments the lexicographically smallest permutation is returned.
inline Assignment hungarian_min_cost(const CostMatrix& cost) {
  const std::size_t n = cost.size();
  for (const auto& row : cost) {
    if (row.size() != n) throw DataError("hungarian: cost matrix must be square");
    for (double v : row)
      if (!std::isfinite(v)) throw DataError("hungarian: cost entries must be finite");
  }
  if (n == 0) return {};

  double scale = 0.0;
  for (const auto& row : cost)
    for (double v : row) scale = std::max(scale, std::abs(v));
  const double tol = 1e-9 * (1.0 + scale * static_cast<double>(n));

  // Fix rows one by one to the smallest column that keeps the optimum.
  CostMatrix rest = cost;
  std::vector<std::size_t> cols(n);
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  double remaining = detail::assignment_cost(rest, detail::solve_assignment(rest));
  Assignment out;
  out.row_to_col.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t m = rest.size();
    for (std::size_t j = 0; j < m; ++j) {
      const CostMatrix sub = detail::drop_row_col(rest, 0, j);
      const double sub_cost = sub.empty() ? 0.0 : detail::assignment_cost(sub, detail::solve_assignment(sub));
      if (rest[0][j] + sub_cost <= remaining + tol) {
        out.row_to_col[r] = cols[j];
        cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(j));
        rest = sub;
        remaining = sub_cost;
        break;
      }
    }
  }
  out.cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) out.cost += cost[i][out.row_to_col[i]];
  return out;
}

/// Rectangular matching: the smaller side is padded with dummy rows or
/// columns costing 10^3 x the largest finite entry. Pairs touching padding
/// are reported as unmatched (index = SIZE_MAX).
struct RectangularAssignment {
  std::vector<std::size_t> row_to_col;
  double cost = 0.0;          // real pairs only
  double padding_value = 0.0;
  std::size_t padded_pairs = 0;
};

inline RectangularAssignment hungarian_rectangular(const CostMatrix& cost) {
  const std::size_t rows = cost.size();
  const std::size_t cols = rows ? cost.front().size() : 0;
  for (const auto& r : cost)
    if (r.size() != cols) throw DataError("hungarian: ragged cost matrix");
  const std::size_t n = std::max(rows, cols);
  double hi = 0.0;
  for (const auto& r : cost)
    for (double v : r) {
      if (!std::isfinite(v)) throw DataError("hungarian: cost entries must be finite");
      hi = std::max(hi, std::abs(v));
    }
  RectangularAssignment out;
  out.padding_value = 1e3 * (hi > 0.0 ? hi : 1.0);
  CostMatrix sq(n, std::vector<double>(n, out.padding_value));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) sq[i][j] = cost[i][j];
  const Assignment a = hungarian_min_cost(sq);
  out.row_to_col.assign(rows, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = a.row_to_col[i];
    if (i < rows && j < cols) {
      out.row_to_col[i] = j;
      out.cost += cost[i][j];
    } else {
      ++out.padded_pairs;
    }
  }
  return out;
}

struct ClusterMse {
  double mse = 0.0;               // mean squared distance over matched pairs
  std::size_t matched = 0;
  std::size_t unmatched = 0;      // |K_inferred - K_true|
  double padding_penalty = 0.0;   // unmatched * padding constant, not part of mse
};

/// Matches inferred to true centers by minimum total Euclidean distance and
/// averages the squared distance over matched pairs.
inline ClusterMse cluster_mse(const Eigen::MatrixXd& inferred, const Eigen::MatrixXd& truth) {
  if (inferred.rows() == 0 || truth.rows() == 0) throw DataError("cluster_mse: empty center set");
  if (inferred.cols() != truth.cols()) throw DataError("cluster_mse: dimension mismatch");
  CostMatrix c(static_cast<std::size_t>(inferred.rows()), std::vector<double>(static_cast<std::size_t>(truth.rows())));
  for (Eigen::Index i = 0; i < inferred.rows(); ++i)
    for (Eigen::Index j = 0; j < truth.rows(); ++j)
      c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = (inferred.row(i) - truth.row(j)).norm();
  const auto a = hungarian_rectangular(c);
  ClusterMse out;
  double sq = 0.0;
  for (std::size_t i = 0; i < a.row_to_col.size(); ++i) {
    const std::size_t j = a.row_to_col[i];
    if (j == std::numeric_limits<std::size_t>::max()) continue;
    sq += (inferred.row(static_cast<Eigen::Index>(i)) - truth.row(static_cast<Eigen::Index>(j))).squaredNorm();
    ++out.matched;
  }
  out.mse = sq / static_cast<double>(out.matched);
  out.unmatched = a.padded_pairs;
  out.padding_penalty = static_cast<double>(a.padded_pairs) * a.padding_value;
  return out;
}

/// sum_i (N_i / N) max_j (N_ij / N_i) over clusters i and classes j.
template <class ClusterId, class ClassId>
double purity(std::span<const ClusterId> clusters, std::span<const ClassId> classes) {
  if (clusters.size() != classes.size()) throw DataError("purity: label vectors differ in length");
  if (clusters.empty()) throw DataError("purity: empty input");
  std::map<ClusterId, std::map<ClassId, std::size_t>> table;
  for (std::size_t i = 0; i < clusters.size(); ++i) ++table[clusters[i]][classes[i]];
  std::size_t majority = 0;
  for (const auto& [cl, row] : table) {
    std::size_t best = 0;
    for (const auto& [cls, n] : row) best = std::max(best, n);
    majority += best;
  }
  return static_cast<double>(majority) / static_cast<double>(clusters.size());
}

template <class ClusterId, class ClassId>
double purity(const std::vector<ClusterId>& clusters, const std::vector<ClassId>& classes) {
  return purity(std::span<const ClusterId>(clusters), std::span<const ClassId>(classes));
}

// ---------------------------------------------------------------------------
// Held-out perplexity

class UnknownWord : public DataError {
 public:
  explicit UnknownWord(const std::vector<std::uint32_t>& ids) : DataError(message(ids)), ids_(ids) {}
  const std::vector<std::uint32_t>& ids() const { return ids_; }

 private:
  static std::string message(const std::vector<std::uint32_t>& ids) {
    std::string s = "unknown word ids:";
    for (auto i : ids) s += " " + std::to_string(i);
    return s;
  }
  std::vector<std::uint32_t> ids_;
};

enum class PerplexityNormalization {
  PerDocument,  // exp{-(1/D) sum_d (1/n_d) log p(doc d)}
  PerToken      // exp{-sum_d log p(doc d) / sum_d n_d}
};

/// Topic counts of held-out documents under one chain: n_kd per test doc (K each).
using FoldedCounts = std::vector<std::vector<std::uint32_t>>;

inline void check_vocabulary(const Corpus& test, std::size_t vocab_size) {
  std::vector<std::uint32_t> bad;
  for (const auto& d : test.docs)
    for (auto w : d)
      if (w >= vocab_size && std::find(bad.begin(), bad.end(), w) == bad.end()) bad.push_back(w);
  if (!bad.empty()) throw UnknownWord(bad);
}

/// Topic assignments for held-out documents by `passes` Gibbs sweeps with the
/// chain's phi frozen; returns the final per-document topic counts.
inline FoldedCounts fold_in(const Corpus& test, const TopicSnapshot& chain, std::size_t passes, RandomStream& rng) {
  check_vocabulary(test, chain.vocab_size);
  const std::size_t k_topics = chain.num_topics;
  const std::vector<double> phi = chain.phi_table();

  FoldedCounts counts(test.docs.size(), std::vector<std::uint32_t>(k_topics, 0));
  std::vector<double> weights(k_topics);
  for (std::size_t d = 0; d < test.docs.size(); ++d) {
    const auto& doc = test.docs[d];
    auto& nkd = counts[d];
    std::vector<std::uint32_t> z(doc.size());
    for (auto& t : z) {
      t = static_cast<std::uint32_t>(rng.index(k_topics));
      ++nkd[t];
    }
    for (std::size_t pass = 0; pass < passes; ++pass) {
      for (std::size_t t = 0; t < doc.size(); ++t) {
        --nkd[z[t]];
        for (std::size_t k = 0; k < k_topics; ++k) weights[k] = phi[doc[t] * k_topics + k] * (nkd[k] + chain.alpha[k]);
        z[t] = static_cast<std::uint32_t>(sample_categorical(weights, rng));
        ++nkd[z[t]];
      }
    }
  }
  return counts;
}

/// Perplexity of `test` averaged over S chains inside the log:
///   log p(doc j) = sum_w N_jw log (1/S) sum_s sum_k theta^s_{k|j} phi^s_{w|k}
/// with theta^s_{k|j} = (alpha_k + N^s_kj) / (sum alpha + N^s_j) from the
/// folded-in counts and phi^s the chain's smoothed topic-word estimate.
inline double perplexity(const Corpus& test, std::span<const TopicSnapshot> chains,
                         std::span<const FoldedCounts> folded,
                         PerplexityNormalization norm = PerplexityNormalization::PerDocument) {
  if (chains.empty()) throw DataError("perplexity: need at least one chain");
  if (folded.size() != chains.size()) throw DataError("perplexity: one fold-in per chain required");
  if (test.docs.empty()) throw DataError("perplexity: empty test corpus");
  for (const auto& c : chains) check_vocabulary(test, c.vocab_size);
  const double s_chains = static_cast<double>(chains.size());

  std::vector<std::vector<double>> phi(chains.size());
  for (std::size_t s = 0; s < chains.size(); ++s) {
    const auto& c = chains[s];
    if (folded[s].size() != test.docs.size()) throw DataError("perplexity: fold-in covers a different corpus");
    phi[s] = c.phi_table();
  }

  double acc = 0.0;
  std::size_t tokens = 0, docs = 0;
  for (std::size_t j = 0; j < test.docs.size(); ++j) {
    const auto& doc = test.docs[j];
    if (doc.empty()) continue;
    std::map<std::uint32_t, std::size_t> word_counts;
    for (auto w : doc) ++word_counts[w];
    double log_p = 0.0;
    for (const auto& [w, n_jw] : word_counts) {
      double mix = 0.0;
      for (std::size_t s = 0; s < chains.size(); ++s) {
        const auto& c = chains[s];
        const auto& nkd = folded[s][j];
        const double alpha_sum = std::accumulate(c.alpha.begin(), c.alpha.end(), 0.0);
        const double n_j = std::accumulate(nkd.begin(), nkd.end(), 0.0);
        for (std::size_t k = 0; k < c.num_topics; ++k)
          mix += (c.alpha[k] + nkd[k]) / (alpha_sum + n_j) * phi[s][w * c.num_topics + k];
      }
      log_p += static_cast<double>(n_jw) * std::log(mix / s_chains);
    }
    if (norm == PerplexityNormalization::PerDocument) acc += log_p / static_cast<double>(doc.size());
    else acc += log_p;
    tokens += doc.size();
    ++docs;
  }
  if (docs == 0) throw DataError("perplexity: test documents are all empty");
  const double mean_log = norm == PerplexityNormalization::PerDocument ? acc / static_cast<double>(docs)
                                                                       : acc / static_cast<double>(tokens);
  return std::exp(-mean_log);
}

}  // namespace adagibbs
