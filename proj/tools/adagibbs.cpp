// adagibbs: data generation, batch-size adaptation, sampling, figure
// pipelines and trace diagnostics.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
// ADAGIBBS_OUT_DIR sets the default output directory.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "adagibbs/adagibbs.hpp"

namespace fs = std::filesystem;
using namespace adagibbs;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

fs::path default_out_dir() {
  const char* env = std::getenv("ADAGIBBS_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path(".");
}

// ---------------------------------------------------------------------------
// Model selection shared by adapt and sample

struct ModelArgs {
  std::string model;
  std::string data;
  double lambda = 1.0;
  bool linear = false;
  double alpha = 1.0;
  std::string mode = "instantiated";
  std::size_t initial_clusters = 50;
  std::size_t topics = 4;
  double lda_alpha = -1.0;
  double eta = 0.01;
};

void add_model_options(CLI::App* cmd, ModelArgs& a) {
  cmd->add_option("--model", a.model, "blasso | dpmm | lda")
      ->check(CLI::IsMember({"blasso", "dpmm", "lda"}));
  cmd->add_option("--data", a.data, "data file (blasso, dpmm) or directory from 'generate lda'");
  cmd->add_option("--lambda", a.lambda, "Laplace rate (blasso)")->capture_default_str();
  cmd->add_flag("--linear", a.linear, "Gaussian likelihood instead of probit (blasso)");
  cmd->add_option("--alpha", a.alpha, "DP concentration (dpmm)")->capture_default_str();
  cmd->add_option("--mode", a.mode, "collapsed | instantiated (dpmm, lda)")
      ->check(CLI::IsMember({"collapsed", "instantiated"}))
      ->capture_default_str();
  cmd->add_option("--initial-clusters", a.initial_clusters, "random initial clusters (dpmm)")->capture_default_str();
  cmd->add_option("--topics", a.topics, "number of topics (lda)")->capture_default_str();
  cmd->add_option("--lda-alpha", a.lda_alpha, "document-topic prior; negative means 50/K (lda)")->capture_default_str();
  cmd->add_option("--eta", a.eta, "topic-word prior (lda)")->capture_default_str();
}

struct LoadedCorpus {
  Corpus all;
  Corpus train;
  Corpus test;
};

LoadedCorpus load_corpus_dir(const fs::path& dir) {
  LoadedCorpus c;
  c.all = load_corpus(dir / "corpus.txt");
  std::vector<std::size_t> held;
  if (fs::exists(dir / "split.txt")) held = load_split(dir / "split.txt");
  std::tie(c.train, c.test) = split_corpus(c.all, held);
  return c;
}

/// Calls f(factory) where factory(rng) builds a fresh model over shared data.
template <class F>
void with_model(const ModelArgs& a, F&& f) {
  if (a.model.empty()) throw CLI::RequiredError("--model");
  if (a.data.empty()) throw CLI::RequiredError("--data");
  if (a.model == "blasso") {
    auto data = std::make_shared<const BlassoData>(load_probit_data(a.data));
    const BlassoMode mode = a.linear ? BlassoMode::Linear : BlassoMode::Probit;
    f([=](RandomStream&) { return BlassoSampler(data, a.lambda, mode); });
  } else if (a.model == "dpmm") {
    auto data = std::make_shared<const PointData>(load_points(a.data));
    const NiwPrior prior = data_driven_niw_prior(data->X);
    const DpmmOptions opts{a.alpha, a.mode == "collapsed" ? DpmmMode::Collapsed : DpmmMode::Instantiated,
                           a.initial_clusters};
    f([=](RandomStream& rng) { return DpmmSampler(data, prior, opts, rng); });
  } else {
    auto train = std::make_shared<const Corpus>(load_corpus_dir(a.data).train);
    LdaOptions opts;
    opts.num_topics = a.topics;
    opts.alpha = a.lda_alpha;
    opts.eta = a.eta;
    opts.mode = a.mode == "collapsed" ? LdaMode::Collapsed : LdaMode::Instantiated;
    f([=](RandomStream& rng) { return LdaSampler(train, opts, rng); });
  }
}

/// Runs fn(j) for j in [0, n) on one thread each; rethrows the first failure.
template <class F>
void on_threads(std::size_t n, F&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  for (std::size_t j = 0; j < n; ++j)
    threads.emplace_back([&, j] {
      try {
        fn(j);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::size_t parse_batch_size(const std::string& text, std::size_t n) {
  if (text == "N" || text == "full") return n;
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || text[0] == '-') throw DataError("--m: not a batch size: '" + text + "'");
  return static_cast<std::size_t>(v);
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::string model;
  std::optional<std::size_t> n, d, k;
  std::size_t dim = 2;
  std::size_t v = 6000;
  double separation = 10.0;
  double noise_sd = 1.0;
  std::size_t min_length = CorpusSpec{}.min_length;
  std::size_t max_length = CorpusSpec{}.max_length;
  double gen_alpha = CorpusSpec{}.alpha;
  double gen_eta = CorpusSpec{}.eta;
  double test_fraction = CorpusSpec{}.test_fraction;
  std::uint64_t seed = 1;
  std::string out;
};

void run_generate(const GenerateArgs& a) {
  const fs::path out = a.out;
  if (a.model == "blasso") {
    const std::size_t d = a.d.value_or(4);
    write_probit_data(out, gen_probit_data(a.n.value_or(1200), d, default_probit_weights(d), a.noise_sd, a.seed));
    std::cout << "wrote " << out.string() << '\n';
  } else if (a.model == "dpmm") {
    write_points(out, gen_gmm_data(a.n.value_or(1000), a.k.value_or(5), a.dim, a.separation, a.seed));
    std::cout << "wrote " << out.string() << '\n';
  } else {
    CorpusSpec spec;
    spec.num_docs = a.d.value_or(250);
    spec.num_topics = a.k.value_or(4);
    spec.vocab_size = a.v;
    spec.min_length = a.min_length;
    spec.max_length = a.max_length;
    spec.alpha = a.gen_alpha;
    spec.eta = a.gen_eta;
    spec.test_fraction = a.test_fraction;
    const auto sc = gen_synthetic_corpus(spec, a.seed);
    write_corpus(out / "corpus.txt", sc.all);
    write_split(out / "split.txt", sc.test_ids);
    write_vocabulary(out / "vocab.txt", spec.vocab_size);
    std::cout << "wrote " << (out / "corpus.txt").string() << " (" << sc.train.num_docs() << " train, "
              << sc.test.num_docs() << " test documents)\n";
  }
}

// ---------------------------------------------------------------------------
// adapt

struct AdaptArgs {
  ModelArgs model;
  std::vector<std::size_t> grid;
  double grid_ratio = 4.0;
  std::size_t max_arms = 5;
  std::size_t n_per_arm = AdaptOptions{}.n_per_arm;
  std::size_t burnin = AdaptOptions{}.burnin;
  std::optional<std::size_t> t_max;
  std::size_t chains = 1;
  std::uint64_t seed = 1;
  std::string out;
  bool self_test = false;
};

int run_adapt(const AdaptArgs& a) {
  const fs::path out = a.out.empty() ? default_out_dir() / "adaptation.csv" : fs::path(a.out);
  if (a.self_test) {
    const AdaptationResult r = adapt_scripted(a.seed);
    write_adaptation(out, r);
    double t = 0.0;
    const ScriptedModel reference{&t};
    std::size_t best = 0;
    for (std::size_t m : {1, 10, 100})
      if (best == 0 || reference.analytic_objective(m) < reference.analytic_objective(best)) best = m;
    std::cout << "m_star " << r.m_star << " (analytic argmin " << best << ")\n";
    if (r.m_star != best) {
      std::cerr << "adapt: self-test selected m = " << r.m_star << ", expected " << best << '\n';
      return kNumeric;
    }
    return kOk;
  }

  std::vector<AdaptationResult> results(a.chains);
  with_model(a.model, [&](auto make) {
    RandomStream probe(a.seed, 0);
    const std::size_t n = make(probe).num_local_units();
    const BatchGrid grid = a.grid.empty() ? make_log_grid(n, a.grid_ratio, a.max_arms) : BatchGrid(a.grid);
    AdaptOptions ao;
    ao.burnin = a.burnin;
    ao.n_per_arm = a.n_per_arm;
    ao.t_max = a.t_max;
    on_threads(a.chains, [&](std::size_t j) {
      RandomStream rng(a.seed, 1 + j);
      auto model = make(rng);
      results[j] = adapt_batch_size(model, grid, ao, rng);
    });
  });

  for (std::size_t j = 0; j < results.size(); ++j) {
    for (const auto& arm : results[j].per_arm)
      if (arm.warning) std::cerr << "warning: m = " << arm.m << ": " << *arm.warning << '\n';
    fs::path p = out;
    if (a.chains > 1) p.replace_filename(out.stem().string() + "_chain" + std::to_string(j) + out.extension().string());
    write_adaptation(p, results[j]);
    std::cout << "wrote " << p.string() << '\n';
  }
  if (a.chains > 1)
    std::cout << "m_star " << modal_batch_size(results) << " (modal over " << a.chains << " chains)\n";
  else
    std::cout << "m_star " << results[0].m_star << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
  ModelArgs model;
  std::string m;
  std::size_t cycles = 0;
  double budget_seconds = 0.0;
  std::size_t burnin = 0;
  std::size_t chains = 1;
  std::optional<std::size_t> t_max;
  std::string policy = "cyclic";
  std::uint64_t seed = 1;
  std::string out_dir;
};

void run_sample(const SampleArgs& a) {
  if (a.m.empty()) throw CLI::RequiredError("--m");
  if ((a.cycles > 0) == (a.budget_seconds > 0.0)) throw CLI::ValidationError("give exactly one of --cycles, --budget-seconds");
  if (a.chains < 1) throw CLI::ValidationError("--chains must be >= 1");
  const fs::path dir = a.out_dir.empty() ? default_out_dir() / "sample" : fs::path(a.out_dir);
  const IndexPolicy policy = a.policy == "uniform" ? IndexPolicy::UniformWithReplacement : IndexPolicy::CyclicPermutation;

  std::vector<ChainTrace> traces(a.chains);
  std::size_t m = 0;
  with_model(a.model, [&](auto make) {
    RandomStream probe(a.seed, 0);
    m = parse_batch_size(a.m, make(probe).num_local_units());
    on_threads(a.chains, [&](std::size_t j) {
      RandomStream rng(a.seed, 1 + j);
      auto model = make(rng);
      ScanOptions<std::decay_t<decltype(model)>> so;
      so.cycles = a.cycles;
      so.budget_seconds = a.budget_seconds;
      so.burnin = a.burnin;
      traces[j] = run_scan(model, ScanSchedule{m, 1, policy}, so, rng);
      traces[j].seed = a.seed;
    });
  });

  std::vector<DiagnosticsReport> reports;
  std::vector<std::vector<double>> series;
  for (std::size_t j = 0; j < traces.size(); ++j) {
    write_trace(dir / ("trace_chain" + std::to_string(j) + ".csv"), traces[j]);
    series.push_back(traces[j].summaries());
    DiagnosticsReport r = diagnose(series.back(), a.t_max);
    r.batch_size = m;
    r.objective = objective(m, traces[j].w_z, traces[j].w_theta, r.tau_int);
    reports.push_back(r);
  }
  if (a.chains >= 2) {
    std::size_t len = series.front().size();
    for (const auto& s : series) len = std::min(len, s.size());
    for (auto& s : series) s.resize(len);
    const double e = epsr(series);
    for (auto& r : reports) r.epsr = e;
  }
  write_reports(dir / "report.csv", reports);
  write_reports(std::cout, reports);
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentArgs {
  std::string figure;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string sizes = "grid";
  std::optional<double> budget_seconds;
  std::optional<std::size_t> n_per_arm;
  std::optional<std::size_t> burnin;
  std::optional<std::size_t> warmup_sweeps;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> chains;
  std::string normalization = "per-document";
};

void run_experiment(const ExperimentArgs& a) {
  const fs::path dir = (a.out_dir.empty() ? default_out_dir() : fs::path(a.out_dir)) / a.figure;
  const SizeSelection sel = a.sizes == "selected" ? SizeSelection::SelectedAndFull : SizeSelection::WholeGrid;
  std::cout.setf(std::ios::fixed);
  if (a.figure == "fig3") {
    ProbitExperimentConfig cfg;
    cfg.sizes = sel;
    if (a.budget_seconds) cfg.budget_seconds = *a.budget_seconds;
    if (a.n_per_arm) cfg.n_per_arm = *a.n_per_arm;
    if (a.burnin) cfg.burnin = *a.burnin;
    if (a.warmup_sweeps) cfg.warmup_sweeps = *a.warmup_sweeps;
    const auto r = run_probit_experiment(cfg, a.seed);
    write_probit_experiment(dir, r);
    std::cout << "m_star " << r.adaptation.m_star << '\n';
    for (std::size_t m : r.sizes) {
      const auto p = r.final_point(m);
      std::cout << "m " << m << " cycles " << p.cycles << " mc_mse " << p.mc_mse << " truth_mse " << p.truth_mse << '\n';
    }
  } else if (a.figure == "fig5" || a.figure == "fig6") {
    GmmExperimentConfig cfg;
    cfg.sizes = sel;
    if (a.n_per_arm) cfg.n_per_arm = *a.n_per_arm;
    if (a.burnin) cfg.burnin = *a.burnin;
    if (a.iterations) cfg.iterations = *a.iterations;
    const auto r = run_gmm_experiment(cfg, a.seed);
    if (a.figure == "fig5") write_gmm_clustering(dir, r);
    else write_gmm_metrics(dir, r);
    std::cout << "m_star " << r.adaptation.m_star << '\n';
    for (const auto& run : r.runs) {
      const auto& last = run.per_iteration.back();
      std::cout << "m " << run.m << " clusters " << last.clusters << " purity " << last.purity << '\n';
    }
  } else {
    LdaExperimentConfig cfg;
    cfg.sizes = sel;
    if (a.budget_seconds) cfg.budget_seconds = *a.budget_seconds;
    if (a.n_per_arm) cfg.n_per_arm = *a.n_per_arm;
    if (a.burnin) cfg.burnin = *a.burnin;
    if (a.warmup_sweeps) cfg.warmup_sweeps = *a.warmup_sweeps;
    if (a.chains) cfg.chains = *a.chains;
    cfg.normalization =
        a.normalization == "per-token" ? PerplexityNormalization::PerToken : PerplexityNormalization::PerDocument;
    const auto r = run_lda_experiment(cfg, a.seed);
    write_lda_experiment(dir, r);
    std::cout << "m_star " << r.adaptation.m_star << '\n';
    for (std::size_t m : r.sizes) std::cout << "m " << m << " perplexity " << r.final_perplexity(m) << '\n';
  }
  std::cout << "wrote " << dir.string() << '\n';
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseArgs {
  std::vector<std::string> traces;
  std::optional<std::size_t> t_max;
  std::string column = "summary";
  std::size_t m = 0;
  std::optional<double> w_z, w_theta;
  std::string out;
};

void run_diagnose(const DiagnoseArgs& a) {
  std::vector<std::vector<double>> series;
  std::vector<DiagnosticsReport> reports;
  for (const auto& path : a.traces) {
    const CsvTable t = load_csv(path);
    auto s = t.numeric_column(a.column);
    if (s.empty()) throw DataError(path + ": no rows");
    DiagnosticsReport r = diagnose(s, a.t_max);
    r.batch_size = a.m;
    if (a.w_z && a.w_theta) r.objective = objective(a.m, *a.w_z, *a.w_theta, r.tau_int);
    reports.push_back(r);
    series.push_back(std::move(s));
  }
  if (series.size() >= 2) {
    const double e = epsr(series);
    for (auto& r : reports) r.epsr = e;
  }
  if (!a.out.empty()) write_reports(fs::path(a.out), reports);
  write_reports(std::cout, reports);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive mini-batch Gibbs sampling"};
  app.set_config("--config", "", "INI file: 'key = value' lines, [subcommand] sections");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write synthetic data");
  g->add_option("model", gen.model, "blasso | dpmm | lda")->required()->check(CLI::IsMember({"blasso", "dpmm", "lda"}));
  g->add_option("--n", gen.n, "points (blasso 1200, dpmm 1000)");
  g->add_option("--d", gen.d, "features (blasso 4) or documents (lda 250)");
  g->add_option("--k", gen.k, "clusters (dpmm 5) or topics (lda 4)");
  g->add_option("--dim", gen.dim, "point dimension (dpmm)")->capture_default_str();
  g->add_option("--v", gen.v, "vocabulary size (lda)")->capture_default_str();
  g->add_option("--separation", gen.separation, "distance of cluster centers from the origin (dpmm)")->capture_default_str();
  g->add_option("--noise-sd", gen.noise_sd, "latent noise (blasso)")->capture_default_str();
  g->add_option("--min-length", gen.min_length, "shortest document (lda)")->capture_default_str();
  g->add_option("--max-length", gen.max_length, "longest document (lda)")->capture_default_str();
  g->add_option("--gen-alpha", gen.gen_alpha, "generating document-topic concentration (lda)")->capture_default_str();
  g->add_option("--gen-eta", gen.gen_eta, "generating topic-word concentration (lda)")->capture_default_str();
  g->add_option("--test-fraction", gen.test_fraction, "held-out share of documents (lda)")->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--out", gen.out, "output file (blasso, dpmm) or directory (lda)")->required();

  AdaptArgs ad;
  auto* ac = app.add_subcommand("adapt", "choose the mini-batch size");
  add_model_options(ac, ad.model);
  ac->add_option("--grid", ad.grid, "comma-separated batch sizes")->delimiter(',');
  ac->add_option("--grid-ratio", ad.grid_ratio, "geometric grid ratio when --grid is absent")->capture_default_str();
  ac->add_option("--max-arms", ad.max_arms, "geometric grid length")->capture_default_str();
  ac->add_option("--n-per-arm", ad.n_per_arm)->capture_default_str();
  ac->add_option("--burnin", ad.burnin, "cycles before the first arm")->capture_default_str();
  ac->add_option("--t-max", ad.t_max, "largest autocorrelation lag");
  ac->add_option("--chains", ad.chains, "independent adaptations, one per thread; reports the modal m*")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  ac->add_option("--seed", ad.seed)->capture_default_str();
  ac->add_option("--out", ad.out, "adaptation CSV (default $ADAGIBBS_OUT_DIR/adaptation.csv)");
  ac->add_flag("--self-test", ad.self_test, "adapt the scripted model and check the analytic argmin");

  SampleArgs sa;
  auto* sc = app.add_subcommand("sample", "run chains at a fixed batch size");
  add_model_options(sc, sa.model);
  sc->add_option("--m", sa.m, "batch size, or N for full sweeps");
  sc->add_option("--cycles", sa.cycles);
  sc->add_option("--budget-seconds", sa.budget_seconds);
  sc->add_option("--burnin", sa.burnin)->capture_default_str();
  sc->add_option("--chains", sa.chains, "chains, one per thread")->capture_default_str();
  sc->add_option("--t-max", sa.t_max);
  sc->add_option("--policy", sa.policy, "cyclic | uniform")->check(CLI::IsMember({"cyclic", "uniform"}))->capture_default_str();
  sc->add_option("--seed", sa.seed)->capture_default_str();
  sc->add_option("--out-dir", sa.out_dir, "default $ADAGIBBS_OUT_DIR/sample");

  ExperimentArgs ex;
  auto* ec = app.add_subcommand("experiment", "figure pipeline: generate, adapt, sample, metrics");
  ec->add_option("figure", ex.figure, "fig3 | fig5 | fig6 | fig8")->required()->check(CLI::IsMember({"fig3", "fig5", "fig6", "fig8"}));
  ec->add_option("--seed", ex.seed)->capture_default_str();
  ec->add_option("--out-dir", ex.out_dir, "default $ADAGIBBS_OUT_DIR");
  ec->add_option("--sizes", ex.sizes, "grid (every arm) | selected (m* and N)")
      ->check(CLI::IsMember({"grid", "selected"}))
      ->capture_default_str();
  ec->add_option("--budget-seconds", ex.budget_seconds, "wall-clock budget per batch size (fig3, fig8)");
  ec->add_option("--n-per-arm", ex.n_per_arm);
  ec->add_option("--burnin", ex.burnin);
  ec->add_option("--warmup-sweeps", ex.warmup_sweeps, "full sweeps before sampling (fig3) or adapting (fig8)");
  ec->add_option("--iterations", ex.iterations, "data passes per run (fig5, fig6)");
  ec->add_option("--chains", ex.chains, "perplexity chains S (fig8)");
  ec->add_option("--normalization", ex.normalization, "per-document | per-token (fig8)")
      ->check(CLI::IsMember({"per-document", "per-token"}))
      ->capture_default_str();

  DiagnoseArgs di;
  auto* dc = app.add_subcommand("diagnose", "tau_int, ESS, variance and EPSR of traces");
  dc->add_option("--trace", di.traces, "trace CSV files")->required();
  dc->add_option("--t-max", di.t_max);
  dc->add_option("--column", di.column, "numeric column to analyse")->capture_default_str();
  dc->add_option("--m", di.m, "batch size recorded in the report")->capture_default_str();
  dc->add_option("--w-z", di.w_z, "seconds per local update, for the objective");
  dc->add_option("--w-theta", di.w_theta, "seconds per global update, for the objective");
  dc->add_option("--out", di.out, "report CSV");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(g)) run_generate(gen);
    else if (app.got_subcommand(ac)) return run_adapt(ad);
    else if (app.got_subcommand(sc)) run_sample(sa);
    else if (app.got_subcommand(ec)) run_experiment(ex);
    else run_diagnose(di);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  }
  return kOk;
}
