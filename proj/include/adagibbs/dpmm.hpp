#pragma once

// Dirichlet-process Gaussian mixture with NIW base measure.
//
// Local update of point i (CRP conditional, denominators alpha + N - 1 dropped):
//   existing cluster k:  N_{k,-i} * p(x_i | cluster k)
//   new cluster:         alpha    * p(x_i)  (prior predictive)
// where p(x_i | cluster k) is the collapsed Student-t predictive (Collapsed
// mode) or N(x_i | mu_k, Sigma_k) with instantiated parameters (Instantiated
// mode). The global update redraws every (mu_k, Sigma_k) from its NIW
// posterior; in Collapsed mode it does nothing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "adagibbs/error.hpp"
#include "adagibbs/niw.hpp"
#include "adagibbs/random.hpp"

namespace adagibbs {

struct PointData {
  MatrixXd X;  // N x dim
  std::optional<std::vector<int>> labels;
  std::optional<MatrixXd> centers;  // true centers, one per row

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }
};

/// Normalized CRP weights for the existing clusters (counts exclude the point
/// being reassigned) followed by the new-cluster weight alpha / (alpha + N - 1).
inline std::vector<double> crp_prior_weights(std::span<const std::size_t> counts_excluding, double alpha) {
  if (!(alpha >= 0.0)) throw DataError("crp: alpha must be nonnegative");
  double total = alpha;
  for (auto c : counts_excluding) total += static_cast<double>(c);
  std::vector<double> w;
  w.reserve(counts_excluding.size() + 1);
  if (!(total > 0.0)) {
    // alpha = 0 and no other points: the point must sit alone.
    w.assign(counts_excluding.size(), 0.0);
    w.push_back(1.0);
    return w;
  }
  for (auto c : counts_excluding) w.push_back(static_cast<double>(c) / total);
  w.push_back(alpha / total);
  return w;
}

/// Prior used by the desk experiments: m0 = data mean, kappa0 = 0.01,
/// nu0 = dim + 3, Psi0 = data covariance.
inline NiwPrior data_driven_niw_prior(const MatrixXd& x, double kappa0 = 0.01, double extra_dof = 3.0) {
  NiwPrior p;
  const auto n = static_cast<double>(x.rows());
  p.mean = x.colwise().mean().transpose();
  const MatrixXd c = x.rowwise() - p.mean.transpose();
  p.scale = (c.transpose() * c) / std::max(1.0, n - 1.0);
  if (x.rows() < 2) p.scale = MatrixXd::Identity(x.cols(), x.cols());
  p.kappa = kappa0;
  p.nu = static_cast<double>(x.cols()) + extra_dof;
  return p;
}

enum class DpmmMode { Collapsed, Instantiated };

struct DpmmCluster {
  GaussianStats stats;
  std::optional<GaussianParams> params;      // Instantiated mode only
  mutable std::optional<StudentT> predictive;  // Collapsed mode cache
};

struct DpmmOptions {
  double alpha = 1.0;
  DpmmMode mode = DpmmMode::Instantiated;
  std::size_t initial_clusters = 1;  // points dealt to this many clusters at random
};

class DpmmSampler {
 public:
  DpmmSampler(std::shared_ptr<const PointData> data, NiwPrior prior, const DpmmOptions& options, RandomStream& init_rng)
      : data_(std::move(data)), prior_(std::move(prior)), alpha_(options.alpha), mode_(options.mode) {
    if (!data_ || data_->n() == 0) throw DataError("dpmm: no data points");
    if (prior_.dim() != data_->dim()) throw DataError("dpmm: prior dimension does not match the data");
    if (!(alpha_ > 0.0)) throw DataError("dpmm: alpha must be positive");
    prior_.validate();
    points_.reserve(data_->n());
    for (Eigen::Index i = 0; i < data_->X.rows(); ++i) points_.emplace_back(data_->X.row(i).transpose());
    prior_predictive_ = niw_predictive(prior_, GaussianStats(prior_.dim()));

    const std::size_t k0 = std::clamp<std::size_t>(options.initial_clusters, 1, data_->n());
    std::vector<std::uint64_t> ids(k0);
    for (auto& id : ids) id = open_cluster();
    assignment_.resize(data_->n());
    for (std::size_t i = 0; i < data_->n(); ++i) {
      const std::uint64_t id = k0 == 1 ? ids[0] : ids[init_rng.index(k0)];
      assignment_[i] = id;
      clusters_.at(id).stats.add(points_[i]);
    }
    std::erase_if(clusters_, [](const auto& kv) { return kv.second.stats.count == 0; });
    if (mode_ == DpmmMode::Instantiated) global_update(init_rng);
  }

  std::size_t num_local_units() const { return data_->n(); }

  void local_update(std::size_t i, RandomStream& rng) {
    const VectorXd& x = points_[i];
    detach(i);

    log_w_.clear();
    ids_.clear();
    for (const auto& [id, c] : clusters_) {
      ids_.push_back(id);
      log_w_.push_back(std::log(static_cast<double>(c.stats.count)) + cluster_logpdf(c, x));
    }
    log_w_.push_back(std::log(alpha_) + prior_predictive_.logpdf(x));

    const std::size_t pick = sample_categorical_log(log_w_, rng);
    std::uint64_t target;
    if (pick == ids_.size()) {
      target = open_cluster();
      DpmmCluster& c = clusters_.at(target);
      c.stats.add(x);
      if (mode_ == DpmmMode::Instantiated) c.params = sample_niw(niw_posterior(prior_, c.stats), rng);
    } else {
      target = ids_[pick];
      DpmmCluster& c = clusters_.at(target);
      c.stats.add(x);
      c.predictive.reset();
    }
    assignment_[i] = target;
  }

  void global_update(RandomStream& rng) {
    if (mode_ == DpmmMode::Collapsed) return;
    for (auto& [id, c] : clusters_) c.params = sample_niw(niw_posterior(prior_, c.stats), rng);
  }

  /// Number of live clusters.
  double summary() const { return static_cast<double>(clusters_.size()); }

  double log_joint() const {
    const double n = static_cast<double>(data_->n());
    double lp = static_cast<double>(clusters_.size()) * std::log(alpha_) + std::lgamma(alpha_) - std::lgamma(alpha_ + n);
    for (const auto& [id, c] : clusters_) lp += std::lgamma(static_cast<double>(c.stats.count));
    if (mode_ == DpmmMode::Collapsed) {
      for (const auto& [id, c] : clusters_) lp += niw_log_marginal(prior_, c.stats);
      return lp;
    }
    for (const auto& [id, c] : clusters_) lp += niw_log_density(prior_, *c.params);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& p = *clusters_.at(assignment_[i]).params;
      lp += gaussian_logpdf(points_[i], p.mu, p.sigma_chol);
    }
    return lp;
  }

  /// CRP prior over the clusters (ascending id order) plus a new cluster, for
  /// point i taken out of its current cluster.
  std::vector<double> prior_weights(std::size_t i) const {
    std::vector<std::size_t> counts;
    for (const auto& [id, c] : clusters_) {
      std::size_t k = c.stats.count;
      if (id == assignment_[i]) --k;
      if (k > 0) counts.push_back(k);
    }
    return crp_prior_weights(counts, alpha_);
  }

  /// Replaces the partition: points with equal labels share a cluster. Fresh
  /// ids are issued; instantiated parameters are drawn from their posteriors.
  void set_assignments(const std::vector<std::size_t>& labels, RandomStream& rng) {
    if (labels.size() != data_->n()) throw DataError("dpmm: one label per point required");
    clusters_.clear();
    std::map<std::size_t, std::uint64_t> ids;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto [it, fresh] = ids.try_emplace(labels[i], 0);
      if (fresh) it->second = open_cluster();
      assignment_[i] = it->second;
      clusters_.at(it->second).stats.add(points_[i]);
    }
    if (mode_ == DpmmMode::Instantiated) global_update(rng);
  }

  const std::vector<std::uint64_t>& assignments() const { return assignment_; }
  const std::map<std::uint64_t, DpmmCluster>& clusters() const { return clusters_; }
  std::size_t num_clusters() const { return clusters_.size(); }
  const NiwPrior& prior() const { return prior_; }
  DpmmMode mode() const { return mode_; }
  const PointData& data() const { return *data_; }

  /// Cluster means in ascending id order: instantiated mu_k when present,
  /// otherwise the empirical mean.
  MatrixXd cluster_centers() const {
    MatrixXd out(static_cast<Eigen::Index>(clusters_.size()), static_cast<Eigen::Index>(prior_.dim()));
    Eigen::Index r = 0;
    for (const auto& [id, c] : clusters_) {
      if (c.params) out.row(r++) = c.params->mu.transpose();
      else out.row(r++) = (c.stats.sum / static_cast<double>(c.stats.count)).transpose();
    }
    return out;
  }

  /// Largest relative deviation between incremental and recomputed statistics.
  double sufficient_stat_error() const {
    std::map<std::uint64_t, GaussianStats> fresh;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      auto [it, inserted] = fresh.try_emplace(assignment_[i], prior_.dim());
      it->second.add(points_[i]);
    }
    if (fresh.size() != clusters_.size()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (const auto& [id, s] : fresh) {
      auto it = clusters_.find(id);
      if (it == clusters_.end() || it->second.stats.count != s.count) return std::numeric_limits<double>::infinity();
      const auto& t = it->second.stats;
      worst = std::max(worst, (t.sum - s.sum).norm() / (1.0 + s.sum.norm()));
      worst = std::max(worst, (t.outer - s.outer).norm() / (1.0 + s.outer.norm()));
    }
    return worst;
  }

 private:
  std::uint64_t open_cluster() {
    const std::uint64_t id = next_id_++;
    clusters_.emplace(id, DpmmCluster{GaussianStats(prior_.dim()), std::nullopt, std::nullopt});
    return id;
  }

  void detach(std::size_t i) {
    auto it = clusters_.find(assignment_[i]);
    it->second.stats.remove(points_[i]);
    it->second.predictive.reset();
    if (it->second.stats.count == 0) clusters_.erase(it);
  }

  double cluster_logpdf(const DpmmCluster& c, const VectorXd& x) const {
    if (mode_ == DpmmMode::Instantiated) return gaussian_logpdf(x, c.params->mu, c.params->sigma_chol);
    if (!c.predictive) c.predictive = niw_predictive(prior_, c.stats);
    return c.predictive->logpdf(x);
  }

  std::shared_ptr<const PointData> data_;
  NiwPrior prior_;
  double alpha_;
  DpmmMode mode_;
  std::vector<VectorXd> points_;
  StudentT prior_predictive_;
  std::map<std::uint64_t, DpmmCluster> clusters_;
  std::vector<std::uint64_t> assignment_;
  std::uint64_t next_id_ = 0;
  std::vector<double> log_w_;
  std::vector<std::uint64_t> ids_;
};

}  // namespace adagibbs
