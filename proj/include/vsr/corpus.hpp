#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "json.hpp"
#include "vsr/csv.hpp"
#include "vsr/error.hpp"
#include "vsr/random.hpp"

namespace vsr::corpus {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Document {
  std::string doc_id;
  std::string text;
  std::map<std::string, std::string> strata;
};

/// Lowercase, split on non-alphanumerics, drop tokens shorter than 2.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2) tokens.push_back(cur);
    cur.clear();
  };
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) cur.push_back(static_cast<char>(std::tolower(ch)));
    else flush();
  }
  flush();
  return tokens;
}

struct TfidfMatrix {
  std::vector<std::string> vocabulary;  // sorted
  std::vector<double> idf;
  SparseRows weights;                   // documents x vocabulary, rows L2-normalised
};

/// tf = raw count, idf = ln((1 + N) / (1 + df)) + 1, rows scaled to unit norm.
inline TfidfMatrix tfidf(const std::vector<Document>& docs) {
  if (docs.size() < 2) fail(ErrorKind::EmptyCorpus, "TF-IDF needs at least two documents");
  std::vector<std::map<std::string, int>> counts(docs.size());
  std::map<std::string, int> df;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (auto& t : tokenize(docs[i].text)) ++counts[i][t];
    if (counts[i].empty()) fail(ErrorKind::EmptyDocument, "document '" + docs[i].doc_id + "' has no tokens");
    for (const auto& [t, c] : counts[i]) ++df[t];
  }
  TfidfMatrix out;
  std::map<std::string, Index> column;
  const double n = static_cast<double>(docs.size());
  for (const auto& [t, d] : df) {
    column[t] = static_cast<Index>(out.vocabulary.size());
    out.vocabulary.push_back(t);
    out.idf.push_back(std::log((1.0 + n) / (1.0 + d)) + 1.0);
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    double norm2 = 0.0;
    std::vector<std::pair<Index, double>> row;
    for (const auto& [t, c] : counts[i]) {
      const Index j = column[t];
      const double w = c * out.idf[static_cast<std::size_t>(j)];
      row.emplace_back(j, w);
      norm2 += w * w;
    }
    const double norm = std::sqrt(norm2);
    for (auto [j, w] : row) triplets.emplace_back(static_cast<Index>(i), j, w / norm);
  }
  out.weights.resize(static_cast<Index>(docs.size()), static_cast<Index>(out.vocabulary.size()));
  out.weights.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

struct SvdOptions {
  Index oversampling = 10;
  int min_power_iterations = 4;
  int max_power_iterations = 300;
  double tolerance = 1e-13;  // relative change of the leading singular values
  std::uint64_t seed = 0;
};

struct TruncatedSvd {
  MatrixXd u;                // rows x r, orthonormal columns
  VectorXd singular_values;  // non-increasing
  MatrixXd v;                // cols x r
  int power_iterations = 0;

  /// Rows of U scaled by the singular values (the LSA embedding).
  MatrixXd embedding() const { return u * singular_values.asDiagonal(); }
};

namespace detail {

inline MatrixXd orthonormal_basis(const MatrixXd& y) {
  Eigen::HouseholderQR<MatrixXd> qr(y);
  return qr.householderQ() * MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace detail

/// Randomised range finder with subspace (power) iteration, followed by an
/// exact SVD of the small projected matrix. Power iterations continue past
/// the minimum until the leading singular values stop moving.
template <typename Matrix>
TruncatedSvd truncated_svd(const Matrix& a, Index rank, const SvdOptions& opt = {}) {
  const Index rows = a.rows(), cols = a.cols();
  if (rank < 1 || rank > std::min(rows, cols))
    fail(ErrorKind::RankTooLarge, "rank " + std::to_string(rank) + " outside [1, " +
                                      std::to_string(std::min(rows, cols)) + "]");
  const Index width = std::min(rank + opt.oversampling, std::min(rows, cols));

  Rng rng(opt.seed);
  MatrixXd omega(cols, width);
  for (Index j = 0; j < width; ++j)
    for (Index i = 0; i < cols; ++i) omega(i, j) = rng.normal();

  MatrixXd q = detail::orthonormal_basis(a * omega);
  VectorXd previous;
  int it = 0;
  for (; it < opt.max_power_iterations; ++it) {
    const MatrixXd z = detail::orthonormal_basis(a.transpose() * q);
    q = detail::orthonormal_basis(a * z);
    if (it + 1 < opt.min_power_iterations) continue;
    const MatrixXd b = q.transpose() * a;
    const VectorXd sv = Eigen::JacobiSVD<MatrixXd>(b).singularValues().head(rank);
    if (previous.size() == sv.size()) {
      const double scale = std::max(sv(0), std::numeric_limits<double>::min());
      if ((sv - previous).cwiseAbs().maxCoeff() <= opt.tolerance * scale) {
        ++it;
        break;
      }
    }
    previous = sv;
  }

  const MatrixXd b = q.transpose() * a;
  Eigen::JacobiSVD<MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TruncatedSvd out;
  out.u = q * svd.matrixU().leftCols(rank);
  out.v = svd.matrixV().leftCols(rank);
  out.singular_values = svd.singularValues().head(rank);
  out.power_iterations = it;
  // Deterministic sign: largest-magnitude entry of each left vector is positive.
  for (Index j = 0; j < rank; ++j) {
    Index imax = 0;
    out.u.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.u(imax, j) < 0) {
      out.u.col(j) *= -1.0;
      out.v.col(j) *= -1.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// k-means

struct KMeansResult {
  std::vector<std::size_t> assignments;
  MatrixXd centroids;                   // k x dims
  double objective = 0.0;               // sum of squared distances
  std::vector<double> objective_history;  // after every assignment step
  int iterations = 0;
  int reseeds = 0;                      // empty clusters repaired
};

inline constexpr int kMaxLloydIterations = 300;

namespace detail {

inline double squared_distance(const MatrixXd& points, Index i, const MatrixXd& centroids, Index j) {
  return (points.row(i) - centroids.row(j)).squaredNorm();
}

}  // namespace detail

/// Lloyd iterations from the given centroids until the assignment reaches a
/// fixpoint or 300 iterations. An empty cluster is re-seeded at the point
/// farthest from its own centroid.
inline KMeansResult kmeans_from(const MatrixXd& points, MatrixXd centroids) {
  const Index n = points.rows();
  const Index k = centroids.rows();
  if (k < 1 || k > n) fail(ErrorKind::TooFewPoints, "k must lie in [1, number of points]");

  KMeansResult out;
  out.assignments.assign(static_cast<std::size_t>(n), std::numeric_limits<std::size_t>::max());
  std::vector<double> dist(static_cast<std::size_t>(n));
  bool reseeded = false;

  for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (Index i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = detail::squared_distance(points, i, centroids, 0);
      for (Index j = 1; j < k; ++j) {
        const double d = detail::squared_distance(points, i, centroids, j);
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::size_t>(j);
        }
      }
      auto& a = out.assignments[static_cast<std::size_t>(i)];
      if (a != best) changed = true;
      a = best;
      dist[static_cast<std::size_t>(i)] = best_d;
      objective += best_d;
    }
    out.objective_history.push_back(objective);
    out.objective = objective;
    out.iterations = iter + 1;
    if (!changed && !reseeded) break;
    reseeded = false;

    std::vector<Index> size(static_cast<std::size_t>(k), 0);
    for (auto a : out.assignments) ++size[a];
    for (Index j = 0; j < k; ++j) {
      if (size[static_cast<std::size_t>(j)] > 0) continue;
      // Farthest point among clusters that can spare a member.
      Index far = -1;
      for (Index i = 0; i < n; ++i) {
        if (size[out.assignments[static_cast<std::size_t>(i)]] < 2) continue;
        if (far < 0 || dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(far)]) far = i;
      }
      if (far < 0) break;
      --size[out.assignments[static_cast<std::size_t>(far)]];
      out.assignments[static_cast<std::size_t>(far)] = static_cast<std::size_t>(j);
      dist[static_cast<std::size_t>(far)] = 0.0;
      size[static_cast<std::size_t>(j)] = 1;
      ++out.reseeds;
      reseeded = true;
    }

    centroids.setZero();
    for (Index i = 0; i < n; ++i) centroids.row(static_cast<Index>(out.assignments[static_cast<std::size_t>(i)])) += points.row(i);
    for (Index j = 0; j < k; ++j) centroids.row(j) /= static_cast<double>(size[static_cast<std::size_t>(j)]);
  }
  out.centroids = std::move(centroids);
  return out;
}

/// k-means++ seeding followed by Lloyd iterations.
inline KMeansResult kmeans(const MatrixXd& points, Index k, std::uint64_t seed) {
  const Index n = points.rows();
  if (k < 1 || k > n) fail(ErrorKind::TooFewPoints, "k = " + std::to_string(k) + " with " + std::to_string(n) + " points");
  Rng rng(seed);
  MatrixXd centroids(k, points.cols());
  centroids.row(0) = points.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = detail::squared_distance(points, i, centroids, 0);
  for (Index c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : d2) total += d;
    Index pick = n - 1;
    if (total > 0.0) {
      // Default to the last positive-weight point in case rounding leaves r >= 0.
      while (d2[static_cast<std::size_t>(pick)] == 0.0) --pick;
      double r = rng.uniform() * total;
      for (Index i = 0; i < n; ++i) {
        r -= d2[static_cast<std::size_t>(i)];
        if (r < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = points.row(pick);
    for (Index i = 0; i < n; ++i)
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], detail::squared_distance(points, i, centroids, c));
  }
  return kmeans_from(points, std::move(centroids));
}

/// Mean silhouette. Singleton clusters contribute 0, as do points with a = b = 0.
inline double silhouette(const MatrixXd& points, const std::vector<std::size_t>& assignments) {
  const Index n = points.rows();
  if (static_cast<std::size_t>(n) != assignments.size())
    fail(ErrorKind::LengthMismatch, "one assignment per point required");
  std::map<std::size_t, std::size_t> sizes;
  for (auto a : assignments) ++sizes[a];
  if (sizes.size() < 2) fail(ErrorKind::SingleCluster, "silhouette needs at least two clusters");

  std::vector<std::size_t> label_index(assignments.size());
  std::map<std::size_t, std::size_t> dense;
  for (const auto& [label, count] : sizes) dense.emplace(label, dense.size());
  for (std::size_t i = 0; i < assignments.size(); ++i) label_index[i] = dense[assignments[i]];
  std::vector<double> cluster_size(dense.size());
  for (const auto& [label, count] : sizes) cluster_size[dense[label]] = static_cast<double>(count);

  double total = 0.0;
  std::vector<double> sum(dense.size());
  for (Index i = 0; i < n; ++i) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      sum[label_index[static_cast<std::size_t>(j)]] += (points.row(i) - points.row(j)).norm();
    }
    const std::size_t own = label_index[static_cast<std::size_t>(i)];
    if (cluster_size[own] < 2) continue;
    const double a = sum[own] / (cluster_size[own] - 1.0);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sum.size(); ++c)
      if (c != own) b = std::min(b, sum[c] / cluster_size[c]);
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

struct KSelection {
  Index k = 0;
  double silhouette = 0.0;
  std::map<Index, double> scores;  // silhouette per candidate k
  KMeansResult clustering;
};

/// Runs k-means for every k in [k_min, k_max] and keeps the largest mean
/// silhouette (ties to the smaller k). k_max is capped at n - 1.
inline KSelection select_k(const MatrixXd& points, Index k_min, Index k_max, std::uint64_t seed) {
  const Index n = points.rows();
  k_min = std::max<Index>(k_min, 2);
  k_max = std::min<Index>(k_max, n - 1);
  if (k_max < k_min) fail(ErrorKind::TooFewPoints, "no admissible k for " + std::to_string(n) + " points");
  KSelection best;
  best.silhouette = -std::numeric_limits<double>::infinity();
  for (Index k = k_min; k <= k_max; ++k) {
    auto result = kmeans(points, k, mix_seed(seed, static_cast<std::uint64_t>(k)));
    std::set<std::size_t> used(result.assignments.begin(), result.assignments.end());
    const double s = used.size() < 2 ? -1.0 : silhouette(points, result.assignments);
    best.scores[k] = s;
    if (s > best.silhouette) {
      best.k = k;
      best.silhouette = s;
      best.clustering = std::move(result);
    }
  }
  return best;
}

/// For each cluster, the member nearest to its centroid. Equal distances
/// go to the lexicographically smallest id.
inline std::vector<std::size_t> nearest_to_centroids(const MatrixXd& points, const KMeansResult& clustering,
                                                     const std::vector<std::string>& ids) {
  const Index k = clustering.centroids.rows();
  std::vector<std::optional<std::size_t>> best(static_cast<std::size_t>(k));
  std::vector<double> best_d(static_cast<std::size_t>(k), std::numeric_limits<double>::infinity());
  for (Index i = 0; i < points.rows(); ++i) {
    const std::size_t c = clustering.assignments[static_cast<std::size_t>(i)];
    const double d = (points.row(i) - clustering.centroids.row(static_cast<Index>(c))).squaredNorm();
    auto& slot = best[c];
    if (!slot || d < best_d[c] || (d == best_d[c] && ids[static_cast<std::size_t>(i)] < ids[*slot])) {
      slot = static_cast<std::size_t>(i);
      best_d[c] = d;
    }
  }
  std::vector<std::size_t> out;
  for (const auto& s : best)
    if (s) out.push_back(*s);
  return out;
}

// ---------------------------------------------------------------------------
// Stratified representative selection

struct StratumPlan {
  std::string name;
  std::map<std::string, std::string> filter;  // every label must match
  std::optional<Index> k;                      // pinned cluster count
  Index k_min = 2;
  Index k_max = 25;
};

struct SamplerOptions {
  std::uint64_t seed = 0;
  std::optional<Index> rank;            // default min(100, vocabulary, documents - 1)
  std::optional<std::string> exclude;   // regex; matching documents are dropped first
};

struct Selection {
  std::string stratum;
  std::size_t cluster = 0;
  std::string doc_id;

  bool operator==(const Selection&) const = default;
};

struct StratumSummary {
  std::string name;
  std::size_t documents = 0;
  Index k = 0;
  Index rank = 0;
  bool pinned = false;
  std::optional<double> silhouette;
};

struct SampleResult {
  std::vector<Selection> selections;
  std::vector<StratumSummary> strata;
};

inline bool matches(const Document& d, const StratumPlan& plan) {
  for (const auto& [label, value] : plan.filter) {
    auto it = d.strata.find(label);
    if (it == d.strata.end() || it->second != value) return false;
  }
  return true;
}

inline Index default_rank(const TfidfMatrix& m) {
  return std::max<Index>(1, std::min<Index>({100, m.weights.cols(), m.weights.rows() - 1}));
}

inline SampleResult select_representatives(const std::vector<Document>& documents, const std::vector<StratumPlan>& plan,
                                           const SamplerOptions& opt = {}) {
  std::optional<std::regex> exclude;
  if (opt.exclude) exclude.emplace(*opt.exclude, std::regex::ECMAScript);

  SampleResult out;
  for (std::size_t s = 0; s < plan.size(); ++s) {
    const auto& stratum = plan[s];
    std::vector<Document> docs;
    for (const auto& d : documents)
      if (matches(d, stratum) && !(exclude && std::regex_search(d.text, *exclude))) docs.push_back(d);
    std::sort(docs.begin(), docs.end(), [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });

    StratumSummary summary;
    summary.name = stratum.name;
    summary.documents = docs.size();
    summary.pinned = stratum.k.has_value();
    const std::size_t needed = stratum.k ? static_cast<std::size_t>(*stratum.k) : 3;
    if (docs.empty() || docs.size() < needed || (stratum.k && *stratum.k < 1))
      fail(ErrorKind::StratumTooSmall, "stratum '" + stratum.name + "' has " + std::to_string(docs.size()) +
                                           " documents, needs " + std::to_string(needed));

    if (stratum.k && static_cast<std::size_t>(*stratum.k) == docs.size()) {
      summary.k = *stratum.k;
      for (std::size_t i = 0; i < docs.size(); ++i) out.selections.push_back({stratum.name, i, docs[i].doc_id});
      out.strata.push_back(summary);
      continue;
    }

    const std::uint64_t seed = mix_seed(opt.seed, s);
    const auto weights = tfidf(docs);
    const Index rank = opt.rank ? std::min<Index>(*opt.rank, std::min(weights.weights.rows(), weights.weights.cols()))
                                : default_rank(weights);
    SvdOptions svd_opt;
    svd_opt.seed = seed;
    const MatrixXd points = truncated_svd(weights.weights, rank, svd_opt).embedding();
    summary.rank = rank;

    KMeansResult clustering;
    if (stratum.k) {
      clustering = kmeans(points, *stratum.k, seed);
      summary.k = *stratum.k;
      std::set<std::size_t> used(clustering.assignments.begin(), clustering.assignments.end());
      if (used.size() >= 2) summary.silhouette = silhouette(points, clustering.assignments);
    } else {
      auto chosen = select_k(points, stratum.k_min, stratum.k_max, seed);
      summary.k = chosen.k;
      summary.silhouette = chosen.silhouette;
      clustering = std::move(chosen.clustering);
    }

    std::vector<std::string> ids;
    for (const auto& d : docs) ids.push_back(d.doc_id);
    for (auto i : nearest_to_centroids(points, clustering, ids))
      out.selections.push_back({stratum.name, clustering.assignments[i], ids[i]});
    out.strata.push_back(summary);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

/// corpus.csv: doc_id, text, then one column per stratum label.
inline std::vector<Document> parse_corpus_csv(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  auto rows = csv::parse(text);
  if (rows.empty()) fail(ErrorKind::MalformedRow, "line 1: missing header row");
  const csv::Header header(rows[0], {"doc_id", "text"});
  std::vector<Document> docs;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != header.size())
      fail(ErrorKind::MalformedRow, "line " + std::to_string(row.line) + ": expected " +
                                        std::to_string(header.size()) + " fields");
    Document d;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto& name = header.names()[c];
      if (name == "doc_id") d.doc_id = row.fields[c];
      else if (name == "text") d.text = row.fields[c];
      else d.strata[name] = row.fields[c];
    }
    if (d.doc_id.empty()) fail(ErrorKind::MalformedRow, "line " + std::to_string(row.line) + ": empty doc_id");
    if (!seen.insert(d.doc_id).second)
      fail(ErrorKind::DuplicateKey, "line " + std::to_string(row.line) + ": doc_id '" + d.doc_id + "' repeated");
    docs.push_back(std::move(d));
  }
  return docs;
}

/// Plan file: [{"name": ..., "filter": {label: value}, "k": 20} or with "k_min"/"k_max"].
inline std::vector<StratumPlan> parse_strata_plan_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::MalformedRow, std::string("invalid plan JSON: ") + e.what());
  }
  if (!doc.is_array()) fail(ErrorKind::MalformedRow, "plan must be a JSON array");
  std::vector<StratumPlan> plan;
  for (const auto& s : doc) {
    StratumPlan p;
    if (!s.is_object() || !s.contains("name") || !s["name"].is_string())
      fail(ErrorKind::MalformedRow, "each plan entry needs a string 'name'");
    p.name = s["name"].get<std::string>();
    if (s.contains("filter")) {
      if (!s["filter"].is_object()) fail(ErrorKind::MalformedRow, "'filter' must be an object");
      for (const auto& [label, value] : s["filter"].items()) {
        if (!value.is_string()) fail(ErrorKind::MalformedRow, "filter values must be strings");
        p.filter[label] = value.get<std::string>();
      }
    }
    auto count = [&](const char* key) -> std::optional<Index> {
      if (!s.contains(key) || s[key].is_null()) return std::nullopt;
      if (!s[key].is_number_integer() || s[key].get<long long>() < 1)
        fail(ErrorKind::MalformedRow, std::string("'") + key + "' must be a positive integer");
      return static_cast<Index>(s[key].get<long long>());
    };
    p.k = count("k");
    if (auto v = count("k_min")) p.k_min = *v;
    if (auto v = count("k_max")) p.k_max = *v;
    plan.push_back(std::move(p));
  }
  return plan;
}

inline std::string write_selections_csv(const std::vector<Selection>& selections) {
  std::string out = "stratum,cluster,doc_id\n";
  for (const auto& s : selections) csv::append_row(out, {s.stratum, std::to_string(s.cluster), s.doc_id});
  return out;
}

}  // namespace vsr::corpus
