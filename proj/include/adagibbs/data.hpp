#pragma once

// Synthetic data at the desk-experiment scales and the plain-text formats
// the CLI reads and writes.
//
//   probit data:  "n d", then n rows of d features and a +-1 label;
//                 optional "# w_true v1 .. vd" line.
//   points:       "N dim", then N rows of dim coordinates, optionally followed
//                 by an integer class label; optional "# center c1 .. cdim" lines.
//   corpus:       one document per line, whitespace-separated word ids.
//   split:        one held-out document index per line.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adagibbs/blasso.hpp"
#include "adagibbs/dpmm.hpp"
#include "adagibbs/error.hpp"
#include "adagibbs/lda.hpp"
#include "adagibbs/random.hpp"

namespace adagibbs {

// ---------------------------------------------------------------------------
// Generators

/// Default sparse truth for the probit experiment, cycling 1.5, -1, 0, 0.5.
inline VectorXd default_probit_weights(std::size_t d) {
  static constexpr double kPattern[] = {1.5, -1.0, 0.0, 0.5};
  VectorXd w(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) w[static_cast<Eigen::Index>(j)] = kPattern[j % 4];
  return w;
}

/// X rows iid N(0, I); y_i = sign(w_true^T x_i + noise_sd * e_i), ties to +1.
inline BlassoData gen_probit_data(std::size_t n, std::size_t d, const VectorXd& w_true, double noise_sd,
                                  std::uint64_t seed) {
  if (n < d || d < 1) throw DataError("gen_probit_data: need n >= d >= 1");
  if (static_cast<std::size_t>(w_true.size()) != d) throw DataError("gen_probit_data: |w_true| != d");
  if (!(noise_sd >= 0.0)) throw DataError("gen_probit_data: noise sd must be nonnegative");
  RandomStream rng(seed, 0);
  BlassoData data;
  data.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  data.y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) data.X(i, j) = rng.normal();
    const double latent = data.X.row(i).dot(w_true) + noise_sd * rng.normal();
    data.y[i] = latent >= 0.0 ? 1.0 : -1.0;
  }
  data.w_true = w_true;
  return data;
}

/// K isotropic unit-variance components with centers on a circle of radius
/// `separation` (first two coordinates; a line when dim = 1). Sizes differ by
/// at most one: the first n mod K components get the extra point.
inline PointData gen_gmm_data(std::size_t n, std::size_t k, std::size_t dim, double separation, std::uint64_t seed) {
  if (k < 1 || dim < 1 || n < 1) throw DataError("gen_gmm_data: n, K and dim must be positive");
  RandomStream rng(seed, 0);
  PointData out;
  MatrixXd centers = MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(dim));
  for (std::size_t c = 0; c < k; ++c) {
    const auto r = static_cast<Eigen::Index>(c);
    if (dim == 1) {
      centers(r, 0) = separation * (static_cast<double>(c) - 0.5 * static_cast<double>(k - 1));
    } else if (k > 1) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
      centers(r, 0) = separation * std::cos(angle);
      centers(r, 1) = separation * std::sin(angle);
    }
  }
  std::vector<int> labels;
  labels.reserve(n);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t size = n / k + (c < n % k ? 1 : 0);
    labels.insert(labels.end(), size, static_cast<int>(c));
  }
  for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[rng.index(i)]);
  out.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      out.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          centers(labels[i], static_cast<Eigen::Index>(j)) + rng.normal();
  out.labels = std::move(labels);
  out.centers = std::move(centers);
  return out;
}

struct SyntheticCorpus {
  Corpus all;
  std::vector<std::size_t> test_ids;  // ascending
  Corpus train;
  Corpus test;
  std::vector<std::vector<double>> beta;  // K x V generating topics
};

inline std::pair<Corpus, Corpus> split_corpus(const Corpus& all, const std::vector<std::size_t>& test_ids) {
  Corpus train, test;
  train.vocab_size = test.vocab_size = all.vocab_size;
  std::vector<char> held(all.docs.size(), 0);
  for (auto i : test_ids) {
    if (i >= all.docs.size()) throw DataError("split: document index " + std::to_string(i) + " out of range");
    held[i] = 1;
  }
  for (std::size_t d = 0; d < all.docs.size(); ++d) (held[d] ? test : train).docs.push_back(all.docs[d]);
  return {std::move(train), std::move(test)};
}

struct CorpusSpec {
  std::size_t num_docs = 250;
  std::size_t num_topics = 4;
  std::size_t vocab_size = 6000;
  std::size_t min_length = 1500;
  std::size_t max_length = 2500;
  double alpha = 0.5;   // document-topic concentration used to generate
  double eta = 0.05;    // topic-word concentration used to generate
  double test_fraction = 0.1;
};

/// LDA generative process; a seeded random 10% of documents is held out.
inline SyntheticCorpus gen_synthetic_corpus(const CorpusSpec& spec, std::uint64_t seed) {
  if (spec.num_docs < 1 || spec.num_topics < 1 || spec.vocab_size < 1 || spec.min_length < 1 ||
      spec.max_length < spec.min_length)
    throw DataError("gen_synthetic_corpus: counts must be positive and lengths ordered");
  RandomStream rng(seed, 0);
  SyntheticCorpus out;
  const std::vector<double> eta(spec.vocab_size, spec.eta);
  const std::vector<double> alpha(spec.num_topics, spec.alpha);
  for (std::size_t k = 0; k < spec.num_topics; ++k) out.beta.push_back(sample_dirichlet(eta, rng));

  // Cumulative tables for inverse-CDF word draws.
  std::vector<std::vector<double>> cdf(spec.num_topics);
  for (std::size_t k = 0; k < spec.num_topics; ++k) {
    cdf[k].resize(spec.vocab_size);
    std::partial_sum(out.beta[k].begin(), out.beta[k].end(), cdf[k].begin());
  }
  out.all.vocab_size = spec.vocab_size;
  for (std::size_t d = 0; d < spec.num_docs; ++d) {
    const auto theta = sample_dirichlet(alpha, rng);
    const std::size_t len = spec.min_length + rng.index(spec.max_length - spec.min_length + 1);
    std::vector<std::uint32_t> doc(len);
    for (auto& tok : doc) {
      const std::size_t k = sample_categorical(theta, rng);
      const double u = rng.uniform() * cdf[k].back();
      auto it = std::upper_bound(cdf[k].begin(), cdf[k].end(), u);
      tok = static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - cdf[k].begin(),
                                                                static_cast<std::ptrdiff_t>(spec.vocab_size) - 1));
    }
    out.all.docs.push_back(std::move(doc));
  }
  std::vector<std::size_t> idx(spec.num_docs);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(spec.num_docs)));
  out.test_ids.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(n_test, idx.size())));
  std::sort(out.test_ids.begin(), out.test_ids.end());
  std::tie(out.train, out.test) = split_corpus(out.all, out.test_ids);
  return out;
}

// ---------------------------------------------------------------------------
// Text IO

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open for reading");
  return in;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  return out;
}

inline std::vector<double> parse_numbers(const std::string& line, const std::string& where) {
  std::istringstream ss(line);
  std::vector<double> v;
  std::string tok;
  while (ss >> tok) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw DataError(where + ": not a number: '" + tok + "'");
    }
  }
  return v;
}

inline bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

struct Header {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

inline Header parse_header(const std::string& line, const std::string& where) {
  const auto v = parse_numbers(line, where);
  if (v.size() != 2 || v[0] < 0 || v[1] < 1 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1]))
    throw DataError(where + ": header must be two counts '<rows> <cols>'");
  return {static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1])};
}

}  // namespace detail

inline void write_probit_data(const std::filesystem::path& path, const BlassoData& data) {
  auto out = detail::open_for_write(path);
  out << data.n() << ' ' << data.d() << '\n';
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) out << detail::format_double(data.X(i, j)) << ' ';
    out << (data.y[i] >= 0.0 ? "1" : "-1") << '\n';
  }
  if (data.w_true) {
    out << "# w_true";
    for (Eigen::Index j = 0; j < data.w_true->size(); ++j) out << ' ' << detail::format_double((*data.w_true)[j]);
    out << '\n';
  }
}

inline BlassoData load_probit_data(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  std::string line;
  std::size_t lineno = 0;
  auto where = [&] { return path.string() + ":" + std::to_string(lineno); };
  std::optional<detail::Header> header;
  BlassoData data;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    if (line.rfind("# w_true", 0) == 0) {
      const auto v = detail::parse_numbers(line.substr(8), where());
      data.w_true = Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      continue;
    }
    if (line[0] == '#') continue;
    if (!header) {
      header = detail::parse_header(line, where());
      data.X.resize(static_cast<Eigen::Index>(header->rows), static_cast<Eigen::Index>(header->cols));
      data.y.resize(static_cast<Eigen::Index>(header->rows));
      continue;
    }
    const auto v = detail::parse_numbers(line, where());
    if (v.size() != header->cols + 1)
      throw DataError(where() + ": expected " + std::to_string(header->cols + 1) + " fields, found " +
                      std::to_string(v.size()));
    if (row >= header->rows)
      throw DataError(where() + ": more rows than the header's " + std::to_string(header->rows));
    for (std::size_t j = 0; j < header->cols; ++j) data.X(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) = v[j];
    data.y[static_cast<Eigen::Index>(row)] = v.back();
    ++row;
  }
  if (!header) throw DataError(path.string() + ": empty file");
  if (row != header->rows)
    throw DataError(path.string() + ": header declares " + std::to_string(header->rows) + " rows, found " +
                    std::to_string(row));
  if (data.w_true && static_cast<std::size_t>(data.w_true->size()) != header->cols)
    throw DataError(path.string() + ": w_true has the wrong length");
  return data;
}

inline void write_points(const std::filesystem::path& path, const PointData& data) {
  auto out = detail::open_for_write(path);
  out << data.n() << ' ' << data.dim() << '\n';
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
      if (j) out << ' ';
      out << detail::format_double(data.X(i, j));
    }
    if (data.labels) out << ' ' << (*data.labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
  if (data.centers)
    for (Eigen::Index r = 0; r < data.centers->rows(); ++r) {
      out << "# center";
      for (Eigen::Index j = 0; j < data.centers->cols(); ++j) out << ' ' << detail::format_double((*data.centers)(r, j));
      out << '\n';
    }
}

inline PointData load_points(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  std::string line;
  std::size_t lineno = 0;
  auto where = [&] { return path.string() + ":" + std::to_string(lineno); };
  std::optional<detail::Header> header;
  std::optional<bool> labelled;
  PointData data;
  std::vector<int> labels;
  std::vector<std::vector<double>> centers;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    if (line.rfind("# center", 0) == 0) {
      centers.push_back(detail::parse_numbers(line.substr(8), where()));
      continue;
    }
    if (line[0] == '#') continue;
    if (!header) {
      header = detail::parse_header(line, where());
      data.X.resize(static_cast<Eigen::Index>(header->rows), static_cast<Eigen::Index>(header->cols));
      continue;
    }
    const auto v = detail::parse_numbers(line, where());
    if (v.size() != header->cols && v.size() != header->cols + 1)
      throw DataError(where() + ": expected " + std::to_string(header->cols) + " or " +
                      std::to_string(header->cols + 1) + " fields, found " + std::to_string(v.size()));
    const bool has_label = v.size() == header->cols + 1;
    if (labelled && *labelled != has_label) throw DataError(where() + ": ragged row (label column inconsistent)");
    labelled = has_label;
    if (row >= header->rows)
      throw DataError(where() + ": more rows than the header's " + std::to_string(header->rows));
    for (std::size_t j = 0; j < header->cols; ++j) data.X(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) = v[j];
    if (has_label) labels.push_back(static_cast<int>(v.back()));
    ++row;
  }
  if (!header) throw DataError(path.string() + ": empty file");
  if (row != header->rows)
    throw DataError(path.string() + ": header declares " + std::to_string(header->rows) + " rows, found " +
                    std::to_string(row));
  if (labelled.value_or(false)) data.labels = std::move(labels);
  if (!centers.empty()) {
    MatrixXd c(static_cast<Eigen::Index>(centers.size()), static_cast<Eigen::Index>(header->cols));
    for (std::size_t r = 0; r < centers.size(); ++r) {
      if (centers[r].size() != header->cols) throw DataError(path.string() + ": center has the wrong dimension");
      for (std::size_t j = 0; j < header->cols; ++j) c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = centers[r][j];
    }
    data.centers = std::move(c);
  }
  return data;
}

inline void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  auto out = detail::open_for_write(path);
  for (const auto& doc : corpus.docs) {
    for (std::size_t t = 0; t < doc.size(); ++t) {
      if (t) out << ' ';
      out << doc[t];
    }
    out << '\n';
  }
}

/// Reads one document per line. The vocabulary size is `vocab_size` when
/// given (ids are then range-checked), otherwise max id + 1.
inline Corpus load_corpus(const std::filesystem::path& path, std::optional<std::size_t> vocab_size = std::nullopt) {
  auto in = detail::open_for_read(path);
  Corpus c;
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_id = 0;
  bool any_token = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::vector<std::uint32_t> doc;
    std::string tok;
    while (ss >> tok) {
      std::size_t used = 0;
      unsigned long id = 0;
      try {
        id = std::stoul(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || tok[0] == '-')
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": not a word id: '" + tok + "'");
      if (vocab_size && id >= *vocab_size)
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": word id " + std::to_string(id) +
                        " >= V = " + std::to_string(*vocab_size));
      doc.push_back(static_cast<std::uint32_t>(id));
      max_id = std::max<std::size_t>(max_id, id);
      any_token = true;
    }
    c.docs.push_back(std::move(doc));
  }
  if (c.docs.empty() || !any_token) throw DataError(path.string() + ": empty corpus");
  c.vocab_size = vocab_size.value_or(max_id + 1);
  return c;
}

inline void write_split(const std::filesystem::path& path, const std::vector<std::size_t>& test_ids) {
  auto out = detail::open_for_write(path);
  for (auto i : test_ids) out << i << '\n';
}

inline std::vector<std::size_t> load_split(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  std::vector<std::size_t> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    const auto v = detail::parse_numbers(line, path.string() + ":" + std::to_string(lineno));
    if (v.size() != 1 || v[0] < 0 || v[0] != std::floor(v[0]))
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected one document index");
    ids.push_back(static_cast<std::size_t>(v[0]));
  }
  return ids;
}

inline void write_vocabulary(const std::filesystem::path& path, std::size_t vocab_size) {
  auto out = detail::open_for_write(path);
  for (std::size_t w = 0; w < vocab_size; ++w) out << w << " w" << w << '\n';
}

}  // namespace adagibbs
