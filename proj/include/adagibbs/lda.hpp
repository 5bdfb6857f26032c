#pragma once

// Latent Dirichlet allocation with documents as the local units.
//
// Collapsed conditional for token i of document d with word w:
//   p(z_i = k) ∝ (n_wk + eta_w) / (n_k + sum eta) * (n_kd + alpha_k) / (n_d + sum alpha)
// with every count excluding token i. Instantiated mode replaces the first
// factor by beta_k[w] and redraws beta_k ~ Dir(eta + n_.k) in the global update.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "adagibbs/error.hpp"
#include "adagibbs/random.hpp"

namespace adagibbs {

struct Corpus {
  std::size_t vocab_size = 0;
  std::vector<std::vector<std::uint32_t>> docs;

  std::size_t num_docs() const { return docs.size(); }
  std::size_t num_tokens() const {
    std::size_t n = 0;
    for (const auto& d : docs) n += d.size();
    return n;
  }
};

/// Counts of a trained chain, enough to evaluate held-out likelihoods.
struct TopicSnapshot {
  std::size_t num_topics = 0;
  std::size_t vocab_size = 0;
  std::vector<double> alpha;          // K
  std::vector<double> eta;            // V
  std::vector<std::uint32_t> n_wk;    // V x K, row-major by word
  std::vector<std::uint32_t> n_k;     // K

  /// Smoothed topic-word estimate (eta_w + n_wk) / (sum eta + n_k).
  double phi(std::size_t w, std::size_t k) const {
    const double eta_sum = std::accumulate(eta.begin(), eta.end(), 0.0);
    return (eta[w] + n_wk[w * num_topics + k]) / (eta_sum + n_k[k]);
  }

  /// phi(w, k) for all pairs, V x K row-major by word.
  std::vector<double> phi_table() const {
    const double eta_sum = std::accumulate(eta.begin(), eta.end(), 0.0);
    std::vector<double> out(vocab_size * num_topics);
    for (std::size_t w = 0; w < vocab_size; ++w)
      for (std::size_t k = 0; k < num_topics; ++k)
        out[w * num_topics + k] = (eta[w] + n_wk[w * num_topics + k]) / (eta_sum + n_k[k]);
    return out;
  }
};

/// Unnormalized collapsed weights for one token from counts that already
/// exclude it. `n_wk` holds the counts of the token's word per topic.
inline std::vector<double> collapsed_topic_weights(std::span<const double> n_wk, std::span<const double> n_k,
                                                   std::span<const double> n_kd, std::span<const double> alpha,
                                                   double eta_w, double eta_sum) {
  const std::size_t k_topics = n_k.size();
  if (n_wk.size() != k_topics || n_kd.size() != k_topics || alpha.size() != k_topics)
    throw DataError("collapsed weights: inconsistent topic counts");
  const double n_d = std::accumulate(n_kd.begin(), n_kd.end(), 0.0);
  const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  std::vector<double> w(k_topics);
  for (std::size_t k = 0; k < k_topics; ++k)
    w[k] = (n_wk[k] + eta_w) / (n_k[k] + eta_sum) * (n_kd[k] + alpha[k]) / (n_d + alpha_sum);
  return w;
}

enum class LdaMode { Collapsed, Instantiated };

struct LdaOptions {
  std::size_t num_topics = 4;
  double alpha = -1.0;  // symmetric; negative selects 50 / K
  double eta = 0.01;    // symmetric
  LdaMode mode = LdaMode::Instantiated;
  bool sample_theta = false;  // keep explicit per-document theta_d (instantiated mode)
};

class LdaSampler {
 public:
  LdaSampler(std::shared_ptr<const Corpus> corpus, const LdaOptions& options, RandomStream& init_rng)
      : corpus_(std::move(corpus)), k_(options.num_topics), mode_(options.mode),
        sample_theta_(options.sample_theta && options.mode == LdaMode::Instantiated) {
    if (!corpus_) throw DataError("lda: no corpus");
    if (k_ == 0) throw DataError("lda: need at least one topic");
    v_ = corpus_->vocab_size;
    if (v_ == 0) throw DataError("lda: empty vocabulary");
    const double a = options.alpha > 0.0 ? options.alpha : 50.0 / static_cast<double>(k_);
    if (!(options.eta > 0.0)) throw DataError("lda: eta must be positive");
    alpha_.assign(k_, a);
    eta_.assign(v_, options.eta);
    alpha_sum_ = a * static_cast<double>(k_);
    eta_sum_ = options.eta * static_cast<double>(v_);

    for (const auto& doc : corpus_->docs)
      for (auto w : doc)
        if (w >= v_) throw DataError("lda: word id " + std::to_string(w) + " >= V = " + std::to_string(v_));

    std::vector<std::vector<std::uint32_t>> z(corpus_->num_docs());
    for (std::size_t d = 0; d < z.size(); ++d) {
      z[d].resize(corpus_->docs[d].size());
      for (auto& t : z[d]) t = static_cast<std::uint32_t>(init_rng.index(k_));
    }
    set_assignments(std::move(z), init_rng);
  }

  std::size_t num_local_units() const { return corpus_->num_docs(); }
  std::size_t num_topics() const { return k_; }

  /// Resamples every token of document d in order.
  void local_update(std::size_t d, RandomStream& rng) {
    const auto& doc = corpus_->docs[d];
    auto& zd = z_[d];
    weights_.resize(k_);
    for (std::size_t t = 0; t < doc.size(); ++t) {
      const std::uint32_t w = doc[t];
      const std::uint32_t old = zd[t];
      decrement(d, w, old);
      fill_weights(d, w, weights_);
      const auto k = static_cast<std::uint32_t>(sample_categorical(weights_, rng));
      increment(d, w, k);
      zd[t] = k;
      if (mode_ == LdaMode::Instantiated && k != old)
        word_part_ += log_beta(k, w) - log_beta(old, w);
    }
    if (sample_theta_) redraw_theta(d, rng);
    refresh_doc_part(d);
  }

  void global_update(RandomStream& rng) {
    if (mode_ == LdaMode::Collapsed) return;
    std::vector<double> conc(v_);
    for (std::size_t k = 0; k < k_; ++k) {
      for (std::size_t w = 0; w < v_; ++w) conc[w] = eta_[w] + n_wk_[w * k_ + k];
      const auto row = sample_dirichlet(conc, rng);
      std::copy(row.begin(), row.end(), beta_.begin() + static_cast<std::ptrdiff_t>(k * v_));
    }
    recompute_word_part();
  }

  /// Per-token training log likelihood
  ///   (1/T) sum_tokens [log phi_{z,w} + log theta_{d,z}]
  /// with phi = beta (instantiated) or the smoothed count estimate, and theta
  /// the explicit theta_d or (n_kd + alpha_k) / (n_d + sum alpha).
  double summary() const {
    const std::size_t total = corpus_->num_tokens();
    if (total == 0) return 0.0;
    const double word = mode_ == LdaMode::Instantiated ? word_part_ : collapsed_word_part();
    return (word + doc_part_total()) / static_cast<double>(total);
  }

  /// Collapsed log p(words, z) in collapsed mode; in instantiated mode
  /// log p(words | z, beta) + log p(z) + log Dir(beta | eta).
  double log_joint() const {
    double lp = 0.0;
    for (std::size_t d = 0; d < corpus_->num_docs(); ++d) {
      lp += std::lgamma(alpha_sum_) - std::lgamma(static_cast<double>(corpus_->docs[d].size()) + alpha_sum_);
      for (std::size_t k = 0; k < k_; ++k) lp += std::lgamma(n_kd_[d * k_ + k] + alpha_[k]) - std::lgamma(alpha_[k]);
    }
    if (mode_ == LdaMode::Collapsed) {
      for (std::size_t k = 0; k < k_; ++k) {
        lp += std::lgamma(eta_sum_) - std::lgamma(n_k_[k] + eta_sum_);
        for (std::size_t w = 0; w < v_; ++w) {
          const auto c = n_wk_[w * k_ + k];
          if (c > 0) lp += std::lgamma(c + eta_[w]) - std::lgamma(eta_[w]);
        }
      }
      return lp;
    }
    lp += word_part_;
    for (std::size_t k = 0; k < k_; ++k) {
      lp += std::lgamma(eta_sum_);
      for (std::size_t w = 0; w < v_; ++w)
        lp += (eta_[w] - 1.0) * std::log(std::max(beta_[k * v_ + w], std::numeric_limits<double>::min())) -
              std::lgamma(eta_[w]);
    }
    return lp;
  }

  /// Normalized collapsed conditional of token t in document d, computed with
  /// that token removed from the counts. State is left unchanged.
  std::vector<double> collapsed_conditional(std::size_t d, std::size_t t) {
    const std::uint32_t w = corpus_->docs[d][t];
    const std::uint32_t k_cur = z_[d][t];
    decrement(d, w, k_cur);
    std::vector<double> nw(k_), nk(k_), nkd(k_);
    for (std::size_t k = 0; k < k_; ++k) {
      nw[k] = n_wk_[w * k_ + k];
      nk[k] = n_k_[k];
      nkd[k] = n_kd_[d * k_ + k];
    }
    increment(d, w, k_cur);
    auto out = collapsed_topic_weights(nw, nk, nkd, alpha_, eta_[w], eta_sum_);
    const double s = std::accumulate(out.begin(), out.end(), 0.0);
    for (auto& v : out) v /= s;
    return out;
  }

  /// Replaces all topic assignments and rebuilds counts; in instantiated mode
  /// beta (and theta, if kept) are redrawn from the new counts.
  void set_assignments(std::vector<std::vector<std::uint32_t>> z, RandomStream& rng) {
    if (z.size() != corpus_->num_docs()) throw DataError("lda: assignment shape mismatch");
    n_wk_.assign(v_ * k_, 0);
    n_kd_.assign(corpus_->num_docs() * k_, 0);
    n_k_.assign(k_, 0);
    for (std::size_t d = 0; d < z.size(); ++d) {
      if (z[d].size() != corpus_->docs[d].size()) throw DataError("lda: assignment shape mismatch");
      for (std::size_t t = 0; t < z[d].size(); ++t) {
        if (z[d][t] >= k_) throw DataError("lda: topic id out of range");
        increment(d, corpus_->docs[d][t], z[d][t]);
      }
    }
    z_ = std::move(z);
    beta_.assign(mode_ == LdaMode::Instantiated ? k_ * v_ : 0, 0.0);
    theta_.assign(sample_theta_ ? corpus_->num_docs() * k_ : 0, 0.0);
    doc_part_.assign(corpus_->num_docs(), 0.0);
    if (sample_theta_)
      for (std::size_t d = 0; d < corpus_->num_docs(); ++d) redraw_theta(d, rng);
    for (std::size_t d = 0; d < corpus_->num_docs(); ++d) refresh_doc_part(d);
    if (mode_ == LdaMode::Instantiated) global_update(rng);
  }

  /// Overrides beta (K rows of length V, each summing to 1).
  void set_beta(const std::vector<std::vector<double>>& beta) {
    if (mode_ != LdaMode::Instantiated) throw DataError("lda: beta exists only in instantiated mode");
    if (beta.size() != k_) throw DataError("lda: beta needs K rows");
    for (std::size_t k = 0; k < k_; ++k) {
      if (beta[k].size() != v_) throw DataError("lda: beta rows need V entries");
      std::copy(beta[k].begin(), beta[k].end(), beta_.begin() + static_cast<std::ptrdiff_t>(k * v_));
    }
    recompute_word_part();
  }

  void set_theta(std::size_t d, const std::vector<double>& theta) {
    if (!sample_theta_) throw DataError("lda: explicit theta is disabled");
    if (theta.size() != k_) throw DataError("lda: theta needs K entries");
    std::copy(theta.begin(), theta.end(), theta_.begin() + static_cast<std::ptrdiff_t>(d * k_));
    refresh_doc_part(d);
  }

  TopicSnapshot snapshot() const {
    return TopicSnapshot{k_, v_, alpha_, eta_, n_wk_, n_k_};
  }

  double beta(std::size_t k, std::size_t w) const { return beta_[k * v_ + w]; }
  std::uint32_t n_wk(std::size_t w, std::size_t k) const { return n_wk_[w * k_ + k]; }
  std::uint32_t n_kd(std::size_t k, std::size_t d) const { return n_kd_[d * k_ + k]; }
  std::uint32_t n_k(std::size_t k) const { return n_k_[k]; }
  const std::vector<std::vector<std::uint32_t>>& assignments() const { return z_; }
  const Corpus& corpus() const { return *corpus_; }
  LdaMode mode() const { return mode_; }

  /// True when every count table equals its recomputation from z.
  bool counts_consistent() const {
    std::vector<std::uint32_t> wk(v_ * k_, 0), kd(corpus_->num_docs() * k_, 0), kk(k_, 0);
    for (std::size_t d = 0; d < z_.size(); ++d)
      for (std::size_t t = 0; t < z_[d].size(); ++t) {
        ++wk[corpus_->docs[d][t] * k_ + z_[d][t]];
        ++kd[d * k_ + z_[d][t]];
        ++kk[z_[d][t]];
      }
    return wk == n_wk_ && kd == n_kd_ && kk == n_k_;
  }

 private:
  void decrement(std::size_t d, std::uint32_t w, std::uint32_t k) {
    --n_wk_[w * k_ + k];
    --n_kd_[d * k_ + k];
    --n_k_[k];
  }
  void increment(std::size_t d, std::uint32_t w, std::uint32_t k) {
    ++n_wk_[w * k_ + k];
    ++n_kd_[d * k_ + k];
    ++n_k_[k];
  }

  void fill_weights(std::size_t d, std::uint32_t w, std::vector<double>& out) const {
    const std::uint32_t* nw = &n_wk_[w * k_];
    const std::uint32_t* nd = &n_kd_[d * k_];
    const double doc_norm = 1.0 / (static_cast<double>(corpus_->docs[d].size()) - 1.0 + alpha_sum_);
    for (std::size_t k = 0; k < k_; ++k) {
      const double word = mode_ == LdaMode::Instantiated ? beta_[k * v_ + w]
                                                         : (nw[k] + eta_[w]) / (n_k_[k] + eta_sum_);
      const double doc = sample_theta_ ? theta_[d * k_ + k] : (nd[k] + alpha_[k]) * doc_norm;
      out[k] = word * doc;
    }
  }

  void redraw_theta(std::size_t d, RandomStream& rng) {
    std::vector<double> conc(k_);
    for (std::size_t k = 0; k < k_; ++k) conc[k] = alpha_[k] + n_kd_[d * k_ + k];
    const auto th = sample_dirichlet(conc, rng);
    std::copy(th.begin(), th.end(), theta_.begin() + static_cast<std::ptrdiff_t>(d * k_));
  }

  double log_beta(std::size_t k, std::size_t w) const { return std::log(beta_[k * v_ + w]); }

  void recompute_word_part() {
    word_part_ = 0.0;
    for (std::size_t w = 0; w < v_; ++w)
      for (std::size_t k = 0; k < k_; ++k) {
        const auto c = n_wk_[w * k_ + k];
        if (c > 0) word_part_ += c * log_beta(k, w);
      }
  }

  double collapsed_word_part() const {
    double s = 0.0;
    for (std::size_t w = 0; w < v_; ++w)
      for (std::size_t k = 0; k < k_; ++k) {
        const auto c = n_wk_[w * k_ + k];
        if (c > 0) s += c * std::log((c + eta_[w]) / (n_k_[k] + eta_sum_));
      }
    return s;
  }

  void refresh_doc_part(std::size_t d) {
    const double n_d = static_cast<double>(corpus_->docs[d].size());
    double s = 0.0;
    for (std::size_t k = 0; k < k_; ++k) {
      const auto c = n_kd_[d * k_ + k];
      if (c == 0) continue;
      const double th = sample_theta_ ? theta_[d * k_ + k] : (c + alpha_[k]) / (n_d + alpha_sum_);
      s += c * std::log(th);
    }
    doc_part_[d] = s;
  }

  double doc_part_total() const { return std::accumulate(doc_part_.begin(), doc_part_.end(), 0.0); }

  std::shared_ptr<const Corpus> corpus_;
  std::size_t k_;
  std::size_t v_ = 0;
  LdaMode mode_;
  bool sample_theta_;
  std::vector<double> alpha_, eta_;
  double alpha_sum_ = 0.0, eta_sum_ = 0.0;
  std::vector<std::vector<std::uint32_t>> z_;
  std::vector<std::uint32_t> n_wk_, n_kd_, n_k_;
  std::vector<double> beta_;
  std::vector<double> theta_;
  std::vector<double> doc_part_;
  double word_part_ = 0.0;
  std::vector<double> weights_;
};

}  // namespace adagibbs
