#pragma once

// End-to-end figure pipelines: generate -> adapt -> sample per batch size ->
// metrics. Random streams per seed: 0 data, 1 adaptation chain, 2 shared
// warm-up, 3.. sampling chains, 50.. held-out fold-in.
//
// Output layout under the figure directory: files whose content is fixed by
// the seed sit at the top level (timing columns masked by csv.hpp rules);
// curves indexed by wall-clock time and plots of the measured objective go
// under timed/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adagibbs/adapt.hpp"
#include "adagibbs/blasso.hpp"
#include "adagibbs/csv.hpp"
#include "adagibbs/data.hpp"
#include "adagibbs/diagnostics.hpp"
#include "adagibbs/dpmm.hpp"
#include "adagibbs/lda.hpp"
#include "adagibbs/metrics.hpp"
#include "adagibbs/scan.hpp"
#include "adagibbs/svg_plot.hpp"

namespace adagibbs {

/// Batch sizes sampled after adaptation.
enum class SizeSelection {
  WholeGrid,       // every adapted arm
  SelectedAndFull  // m* and m = N only
};

namespace detail {

/// Re-raises with the stage name prefixed, keeping the error class.
template <class F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
  const auto tagged = [&](const char* what) {
    const std::string msg = what;
    return msg.starts_with(stage + ":") ? msg : stage + ": " + msg;
  };
  try {
    return f();
  } catch (const DataError& e) {
    throw DataError(tagged(e.what()));
  } catch (const NumericError& e) {
    throw NumericError(tagged(e.what()));
  }
}

inline std::vector<std::size_t> sampled_sizes(const AdaptationResult& a, std::size_t n, SizeSelection sel) {
  std::vector<std::size_t> out;
  if (sel == SizeSelection::WholeGrid) {
    for (const auto& arm : a.per_arm) out.push_back(arm.m);
  } else {
    out.push_back(a.m_star);
    if (a.m_star != n) out.push_back(n);
  }
  return out;
}

inline Plot objective_plot(const AdaptationResult& a, const std::string& title) {
  Plot p{title, "mini-batch size m", "f(m) = (m w_z + w_theta) tau_int", true, true, {}};
  PlotSeries s{"f(m)", {}, {}, false, 0};
  PlotSeries star{"m* = " + std::to_string(a.m_star), {}, {}, true, 1, 5.0};
  for (const auto& arm : a.per_arm) {
    if (!std::isfinite(arm.objective)) continue;
    s.x.push_back(static_cast<double>(arm.m));
    s.y.push_back(arm.objective);
    if (arm.m == a.m_star) {
      star.x.push_back(static_cast<double>(arm.m));
      star.y.push_back(arm.objective);
    }
  }
  p.series = {s, star};
  return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bayesian lasso probit: MSE against wall-clock time

struct ProbitExperimentConfig {
  std::size_t n = 1200;
  std::size_t d = 4;
  double noise_sd = 1.0;
  double lambda = 1.0;
  double grid_ratio = 4.0;
  std::size_t max_arms = 5;
  std::size_t burnin = 200;
  std::size_t n_per_arm = 30000;
  bool quarter_t_max = true;         // t_max = n_per_arm / 4 rather than the default cap
  std::size_t warmup_sweeps = 200;   // full sweeps giving the common start of every sampling run
  double budget_seconds = 10.0;
  double checkpoint_seconds = 0.5;
  std::size_t mse_batches = 30;
  SizeSelection sizes = SizeSelection::WholeGrid;
};

/// mc_mse: batch-means variance of the running posterior mean of w, summed
/// over coordinates. truth_mse: squared distance of that mean to w_true.
struct MseCurvePoint {
  std::size_t m = 0;
  double seconds = 0.0;
  std::size_t cycles = 0;
  double mc_mse = 0.0;
  double truth_mse = 0.0;
};

struct ProbitExperiment {
  std::shared_ptr<const BlassoData> data;
  AdaptationResult adaptation;
  std::vector<std::size_t> sizes;
  std::vector<MseCurvePoint> curve;  // per size, checkpoints then the end of the run

  MseCurvePoint final_point(std::size_t m) const {
    std::optional<MseCurvePoint> last;
    for (const auto& p : curve)
      if (p.m == m) last = p;
    if (!last) throw DataError("probit experiment: batch size " + std::to_string(m) + " was not sampled");
    return *last;
  }
};

namespace detail {

inline MseCurvePoint mse_point(std::size_t m, double seconds, std::size_t cycles, const std::vector<double>& w,
                               std::size_t d, const VectorXd& w_true, std::size_t batches) {
  MseCurvePoint p{m, seconds, cycles, std::numeric_limits<double>::quiet_NaN(), 0.0};
  VectorXd mean = VectorXd::Zero(static_cast<Eigen::Index>(d));
  std::vector<double> coord(cycles);
  double mc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t c = 0; c < cycles; ++c) coord[c] = w[c * d + j];
    mean[static_cast<Eigen::Index>(j)] = adagibbs::mean(coord);
    if (cycles >= 2 * batches) mc += batch_means_variance(coord, batches);
  }
  if (cycles >= 2 * batches) p.mc_mse = mc;
  p.truth_mse = (mean - w_true).squaredNorm();
  return p;
}

}  // namespace detail

inline ProbitExperiment run_probit_experiment(const ProbitExperimentConfig& cfg, std::uint64_t seed) {
  ProbitExperiment out;
  auto data = detail::in_stage("generate", [&] {
    return std::make_shared<const BlassoData>(gen_probit_data(cfg.n, cfg.d, default_probit_weights(cfg.d), cfg.noise_sd, seed));
  });
  out.data = data;
  const std::size_t n = data->n();

  out.adaptation = detail::in_stage("adapt", [&] {
    BlassoSampler chain(data, cfg.lambda);
    RandomStream rng(seed, 1);
    AdaptOptions ao;
    ao.burnin = cfg.burnin;
    ao.n_per_arm = cfg.n_per_arm;
    if (cfg.quarter_t_max) ao.t_max = cfg.n_per_arm / 4;
    return adapt_batch_size(chain, make_log_grid(n, cfg.grid_ratio, cfg.max_arms), ao, rng);
  });
  out.sizes = detail::sampled_sizes(out.adaptation, n, cfg.sizes);

  detail::in_stage("sample", [&] {
    BlassoSampler warm(data, cfg.lambda);
    RandomStream wr(seed, 2);
    run_scan(warm, ScanSchedule{n, 1}, cfg.warmup_sweeps, wr);
    for (std::size_t m : out.sizes) {
      BlassoSampler s = warm;
      RandomStream rng(seed, 3);
      std::vector<double> w;
      ScanOptions<BlassoSampler> so;
      so.budget_seconds = cfg.budget_seconds;
      so.observer = [&](const BlassoSampler& b, const TracePoint&) {
        const auto& v = b.state().w;
        w.insert(w.end(), v.data(), v.data() + v.size());
      };
      const ChainTrace t = run_scan(s, ScanSchedule{m, 1}, so, rng);
      std::size_t idx = 0;
      for (double at = cfg.checkpoint_seconds; at < cfg.budget_seconds; at += cfg.checkpoint_seconds) {
        while (idx < t.points.size() && t.points[idx].seconds <= at) ++idx;
        out.curve.push_back(detail::mse_point(m, at, idx, w, cfg.d, *data->w_true, cfg.mse_batches));
      }
      const double end = t.points.empty() ? 0.0 : t.points.back().seconds;
      out.curve.push_back(detail::mse_point(m, end, t.points.size(), w, cfg.d, *data->w_true, cfg.mse_batches));
    }
    return 0;
  });
  return out;
}

inline void write_probit_experiment(const std::filesystem::path& dir, const ProbitExperiment& r) {
  write_probit_data(dir / "data.txt", *r.data);
  write_adaptation(dir / "adaptation.csv", r.adaptation);
  write_trace(dir / "adaptation_trace.csv", r.adaptation.adaptation_trace);

  auto out = detail::open_for_write(dir / "timed" / "mse_curves.csv");
  out << "m,seconds,cycles,mc_mse,truth_mse\n";
  for (const auto& p : r.curve)
    out << p.m << ',' << detail::fmt(p.seconds) << ',' << p.cycles << ',' << detail::fmt(p.mc_mse) << ','
        << detail::fmt(p.truth_mse) << '\n';

  Plot mc{"Monte-Carlo MSE of the posterior mean", "seconds", "MSE", false, true, {}};
  Plot truth{"squared error of the posterior mean to w_true", "seconds", "MSE", false, true, {}};
  for (std::size_t m : r.sizes) {
    PlotSeries a{"m = " + std::to_string(m), {}, {}, false, -1}, b = a;
    for (const auto& p : r.curve) {
      if (p.m != m) continue;
      a.x.push_back(p.seconds);
      a.y.push_back(p.mc_mse);
      b.x.push_back(p.seconds);
      b.y.push_back(p.truth_mse);
    }
    mc.series.push_back(a);
    truth.series.push_back(b);
  }
  write_svg(dir / "timed" / "mse.svg", mc);
  write_svg(dir / "timed" / "mse_truth.svg", truth);
  write_svg(dir / "timed" / "objective.svg", detail::objective_plot(r.adaptation, "probit objective"));
}

// ---------------------------------------------------------------------------
// DP Gaussian mixture: clustering, live clusters and purity per data pass

struct GmmExperimentConfig {
  std::size_t n = 1000;
  std::size_t k = 5;
  std::size_t dim = 2;
  double separation = 10.0;
  double alpha = 1.0;
  DpmmMode mode = DpmmMode::Instantiated;
  std::size_t initial_clusters = 50;
  double grid_ratio = 4.0;
  std::size_t max_arms = 5;
  std::size_t burnin = 0;
  std::size_t n_per_arm = 200;
  std::size_t iterations = 200;  // data passes per sampling run
  SizeSelection sizes = SizeSelection::WholeGrid;
};

struct IterationMetrics {
  std::size_t iteration = 0;
  std::size_t clusters = 0;
  double purity = 0.0;
  double center_mse = 0.0;
  std::size_t unmatched = 0;
};

struct GmmRun {
  std::size_t m = 0;
  std::vector<IterationMetrics> per_iteration;  // iterations 1..cfg.iterations
  std::vector<std::size_t> assignments;         // final, clusters numbered 0.. by id order
};

struct GmmExperiment {
  std::shared_ptr<const PointData> data;
  AdaptationResult adaptation;
  std::vector<GmmRun> runs;

  const GmmRun& run(std::size_t m) const {
    for (const auto& r : runs)
      if (r.m == m) return r;
    throw DataError("dpmm experiment: batch size " + std::to_string(m) + " was not sampled");
  }
};

/// Most frequent live-cluster count over iterations [from, to]; ties go to the smaller count.
inline std::size_t modal_cluster_count(const GmmRun& run, std::size_t from, std::size_t to) {
  std::map<std::size_t, std::size_t> votes;
  for (const auto& it : run.per_iteration)
    if (it.iteration >= from && it.iteration <= to) ++votes[it.clusters];
  if (votes.empty()) throw DataError("modal_cluster_count: no iterations in range");
  std::size_t best = 0, best_n = 0;
  for (const auto& [k, c] : votes)
    if (c > best_n) best = k, best_n = c;
  return best;
}

namespace detail {

inline std::vector<std::size_t> compact_ids(const std::vector<std::uint64_t>& ids) {
  std::map<std::uint64_t, std::size_t> index;
  for (auto id : ids) index.emplace(id, 0);
  std::size_t next = 0;
  for (auto& [id, k] : index) k = next++;
  std::vector<std::size_t> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out[i] = index.at(ids[i]);
  return out;
}

}  // namespace detail

inline GmmExperiment run_gmm_experiment(const GmmExperimentConfig& cfg, std::uint64_t seed) {
  GmmExperiment out;
  auto data = detail::in_stage("generate", [&] {
    return std::make_shared<const PointData>(gen_gmm_data(cfg.n, cfg.k, cfg.dim, cfg.separation, seed));
  });
  out.data = data;
  const std::size_t n = data->n();
  const NiwPrior prior = data_driven_niw_prior(data->X);
  const DpmmOptions opts{cfg.alpha, cfg.mode, cfg.initial_clusters};

  out.adaptation = detail::in_stage("adapt", [&] {
    RandomStream rng(seed, 1);
    DpmmSampler chain(data, prior, opts, rng);
    AdaptOptions ao;
    ao.burnin = cfg.burnin;
    ao.n_per_arm = cfg.n_per_arm;
    return adapt_batch_size(chain, make_log_grid(n, cfg.grid_ratio, cfg.max_arms), ao, rng);
  });

  detail::in_stage("sample", [&] {
    for (std::size_t m : detail::sampled_sizes(out.adaptation, n, cfg.sizes)) {
      RandomStream rng(seed, 3);
      DpmmSampler s(data, prior, opts, rng);
      GmmRun run;
      run.m = m;
      ScanOptions<DpmmSampler> so;
      so.cycles = (cfg.iterations * n + m - 1) / m;
      so.observer = [&](const DpmmSampler& x, const TracePoint& p) {
        const std::size_t it = p.cycle * m / n;
        if (it == 0 || (!run.per_iteration.empty() && run.per_iteration.back().iteration >= it)) return;
        IterationMetrics im;
        im.iteration = it;
        im.clusters = x.num_clusters();
        im.purity = purity(x.assignments(), *data->labels);
        const auto cm = cluster_mse(x.cluster_centers(), *data->centers);
        im.center_mse = cm.mse;
        im.unmatched = cm.unmatched;
        run.per_iteration.push_back(im);
      };
      run_scan(s, ScanSchedule{m, 1}, so, rng);
      run.assignments = detail::compact_ids(s.assignments());
      out.runs.push_back(std::move(run));
    }
    return 0;
  });
  return out;
}

/// Posterior clustering panel: one CSV of points with their final cluster
/// per batch size and one scatter plot per batch size (first two coordinates).
inline void write_gmm_clustering(const std::filesystem::path& dir, const GmmExperiment& r) {
  write_points(dir / "data.txt", *r.data);
  write_adaptation(dir / "adaptation.csv", r.adaptation);
  auto out = detail::open_for_write(dir / "clusters.csv");
  out << "m";
  for (std::size_t j = 0; j < r.data->dim(); ++j) out << ",x" << j;
  out << ",label,cluster\n";
  for (const auto& run : r.runs) {
    for (std::size_t i = 0; i < r.data->n(); ++i) {
      out << run.m;
      for (std::size_t j = 0; j < r.data->dim(); ++j)
        out << ',' << detail::fmt(r.data->X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out << ',' << (*r.data->labels)[i] << ',' << run.assignments[i] << '\n';
    }
    Plot p{"posterior clustering, m = " + std::to_string(run.m), "x0", r.data->dim() > 1 ? "x1" : "cluster", false, false, {}};
    std::map<std::size_t, PlotSeries> by_cluster;
    for (std::size_t i = 0; i < r.data->n(); ++i) {
      auto& s = by_cluster[run.assignments[i]];
      s.label = "cluster " + std::to_string(run.assignments[i]);
      s.points = true;
      s.color = static_cast<int>(run.assignments[i]);
      s.x.push_back(r.data->X(static_cast<Eigen::Index>(i), 0));
      s.y.push_back(r.data->dim() > 1 ? r.data->X(static_cast<Eigen::Index>(i), 1) : static_cast<double>(run.assignments[i]));
    }
    for (auto& [k, s] : by_cluster) p.series.push_back(std::move(s));
    write_svg(dir / ("clusters_m" + std::to_string(run.m) + ".svg"), p);
  }
  write_svg(dir / "timed" / "objective.svg", detail::objective_plot(r.adaptation, "DPMM objective"));
}

/// Metrics panel: metrics_m<m>.csv (clusters, purity, center_mse, unmatched per
/// iteration) plus one plot per metric across batch sizes.
inline void write_gmm_metrics(const std::filesystem::path& dir, const GmmExperiment& r) {
  write_points(dir / "data.txt", *r.data);
  write_adaptation(dir / "adaptation.csv", r.adaptation);
  Plot k_plot{"live clusters", "iteration", "K", false, false, {}};
  Plot p_plot{"purity", "iteration", "purity", false, false, {}};
  Plot m_plot{"cluster-center MSE", "iteration", "MSE", false, true, {}};
  for (const auto& run : r.runs) {
    std::vector<MetricRow> rows;
    PlotSeries ks{"m = " + std::to_string(run.m), {}, {}, false, -1}, ps = ks, ms = ks;
    for (const auto& it : run.per_iteration) {
      rows.push_back({"clusters", static_cast<double>(it.clusters), it.iteration, 0});
      rows.push_back({"purity", it.purity, it.iteration, 0});
      rows.push_back({"center_mse", it.center_mse, it.iteration, 0});
      rows.push_back({"unmatched", static_cast<double>(it.unmatched), it.iteration, 0});
      const double x = static_cast<double>(it.iteration);
      ks.x.push_back(x);
      ks.y.push_back(static_cast<double>(it.clusters));
      ps.x.push_back(x);
      ps.y.push_back(it.purity);
      ms.x.push_back(x);
      ms.y.push_back(it.center_mse);
    }
    write_metrics(dir / ("metrics_m" + std::to_string(run.m) + ".csv"), rows);
    k_plot.series.push_back(ks);
    p_plot.series.push_back(ps);
    m_plot.series.push_back(ms);
  }
  write_svg(dir / "clusters.svg", k_plot);
  write_svg(dir / "purity.svg", p_plot);
  write_svg(dir / "mse.svg", m_plot);
  write_svg(dir / "timed" / "objective.svg", detail::objective_plot(r.adaptation, "DPMM objective"));
}

// ---------------------------------------------------------------------------
// LDA: held-out perplexity against wall-clock time

struct LdaExperimentConfig {
  CorpusSpec corpus;
  std::size_t num_topics = 4;
  LdaMode mode = LdaMode::Instantiated;
  double grid_ratio = 4.0;
  std::size_t max_arms = 5;
  std::size_t warmup_sweeps = 150;  // full sweeps of the adaptation chain before adapting
  std::size_t burnin = 0;
  std::size_t n_per_arm = 500;
  double budget_seconds = 10.0;
  double checkpoint_seconds = 1.0;
  std::size_t fold_in_passes = 50;
  std::size_t chains = 1;
  PerplexityNormalization normalization = PerplexityNormalization::PerDocument;
  SizeSelection sizes = SizeSelection::WholeGrid;
};

struct PerplexityPoint {
  std::size_t m = 0;
  double seconds = 0.0;
  double perplexity = 0.0;
};

struct LdaExperiment {
  SyntheticCorpus corpus;
  AdaptationResult adaptation;
  std::vector<std::size_t> sizes;
  std::vector<PerplexityPoint> curve;  // per size, checkpoints then the end of the run

  double final_perplexity(std::size_t m) const {
    std::optional<double> last;
    for (const auto& p : curve)
      if (p.m == m) last = p.perplexity;
    if (!last) throw DataError("lda experiment: batch size " + std::to_string(m) + " was not sampled");
    return *last;
  }
};

inline LdaExperiment run_lda_experiment(const LdaExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.chains < 1) throw DataError("lda experiment: need at least one chain");
  LdaExperiment out;
  out.corpus = detail::in_stage("generate", [&] {
    CorpusSpec spec = cfg.corpus;
    spec.num_topics = cfg.num_topics;
    return gen_synthetic_corpus(spec, seed);
  });
  auto train = std::make_shared<const Corpus>(out.corpus.train);
  const std::size_t d = train->num_docs();
  LdaOptions lo;
  lo.num_topics = cfg.num_topics;
  lo.mode = cfg.mode;

  out.adaptation = detail::in_stage("adapt", [&] {
    RandomStream rng(seed, 1);
    LdaSampler chain(train, lo, rng);
    run_scan(chain, ScanSchedule{d, 1}, cfg.warmup_sweeps, rng);
    AdaptOptions ao;
    ao.burnin = cfg.burnin;
    ao.n_per_arm = cfg.n_per_arm;
    return adapt_batch_size(chain, make_log_grid(d, cfg.grid_ratio, cfg.max_arms), ao, rng);
  });
  out.sizes = detail::sampled_sizes(out.adaptation, d, cfg.sizes);

  detail::in_stage("sample", [&] {
    const Corpus& test = out.corpus.test;
    auto evaluate = [&](const std::vector<TopicSnapshot>& chains) {
      std::vector<FoldedCounts> folded;
      for (std::size_t s = 0; s < chains.size(); ++s) {
        RandomStream fr(seed, 50 + s);
        folded.push_back(fold_in(test, chains[s], cfg.fold_in_passes, fr));
      }
      return perplexity(test, chains, folded, cfg.normalization);
    };
    for (std::size_t m : out.sizes) {
      std::vector<std::vector<TopicSnapshot>> at_checkpoint;  // [checkpoint][chain]
      std::vector<TopicSnapshot> at_end;
      double end_seconds = 0.0;
      for (std::size_t c = 0; c < cfg.chains; ++c) {
        RandomStream rng(seed, 3 + c);
        LdaSampler s(train, lo, rng);
        std::size_t next = 0;
        ScanOptions<LdaSampler> so;
        so.budget_seconds = cfg.budget_seconds;
        so.observer = [&](const LdaSampler& x, const TracePoint& p) {
          while (p.seconds >= cfg.checkpoint_seconds * static_cast<double>(next + 1) &&
                 cfg.checkpoint_seconds * static_cast<double>(next + 1) < cfg.budget_seconds) {
            if (at_checkpoint.size() <= next) at_checkpoint.emplace_back();
            at_checkpoint[next].push_back(x.snapshot());
            ++next;
          }
        };
        const ChainTrace t = run_scan(s, ScanSchedule{m, 1}, so, rng);
        at_end.push_back(s.snapshot());
        if (!t.points.empty()) end_seconds = std::max(end_seconds, t.points.back().seconds);
      }
      for (std::size_t k = 0; k < at_checkpoint.size(); ++k)
        if (at_checkpoint[k].size() == cfg.chains)
          out.curve.push_back({m, cfg.checkpoint_seconds * static_cast<double>(k + 1), evaluate(at_checkpoint[k])});
      out.curve.push_back({m, end_seconds, evaluate(at_end)});
    }
    return 0;
  });
  return out;
}

inline void write_lda_experiment(const std::filesystem::path& dir, const LdaExperiment& r) {
  write_corpus(dir / "corpus.txt", r.corpus.all);
  write_split(dir / "split.txt", r.corpus.test_ids);
  write_adaptation(dir / "adaptation.csv", r.adaptation);
  write_trace(dir / "adaptation_trace.csv", r.adaptation.adaptation_trace);
  auto out = detail::open_for_write(dir / "timed" / "perplexity.csv");
  out << "m,seconds,perplexity\n";
  Plot p{"held-out perplexity", "seconds", "perplexity", false, false, {}};
  for (std::size_t m : r.sizes) {
    PlotSeries s{"m = " + std::to_string(m), {}, {}, false, -1};
    for (const auto& q : r.curve) {
      if (q.m != m) continue;
      out << q.m << ',' << detail::fmt(q.seconds) << ',' << detail::fmt(q.perplexity) << '\n';
      s.x.push_back(q.seconds);
      s.y.push_back(q.perplexity);
    }
    p.series.push_back(s);
  }
  write_svg(dir / "timed" / "perplexity.svg", p);
  write_svg(dir / "timed" / "objective.svg", detail::objective_plot(r.adaptation, "LDA objective"));
}

}  // namespace adagibbs
