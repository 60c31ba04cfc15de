#include "auditbench/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "auditbench/mathutil.hpp"
#include "auditbench/rng.hpp"

namespace auditbench {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

const char* synth_kind_name(SynthKind k) {
  switch (k) {
    case SynthKind::IndependentMarginals: return "independent_marginals";
    case SynthKind::GaussianCopula: return "gaussian_copula";
    case SynthKind::ChainBayesDp: return "chain_bayes_dp";
  }
  return "?";
}

std::optional<SynthKind> synth_kind_from_name(std::string_view name) {
  if (name == "independent_marginals") return SynthKind::IndependentMarginals;
  if (name == "gaussian_copula") return SynthKind::GaussianCopula;
  if (name == "chain_bayes_dp") return SynthKind::ChainBayesDp;
  return std::nullopt;
}

void SynthesizerSpec::validate() const {
  if (kind == SynthKind::ChainBayesDp) {
    if (!(epsilon > 0.0))
      fail(Errc::NonPositiveEpsilon, "synthesizer epsilon must be positive");
    if (bins <= 0) fail(Errc::ConfigError, "synthesizer bins must be positive");
  }
}

std::string SynthesizerSpec::label() const {
  std::string out = std::string("synth=") + synth_kind_name(kind);
  if (kind == SynthKind::ChainBayesDp)
    out += "(eps=" + format_double(epsilon) + ",bins=" + std::to_string(bins) + ")";
  return out;
}

namespace {

// Midranks (ties averaged) of a column's non-missing cells; missing cells
// receive a neutral score of 0.
std::vector<double> normal_scores(const std::vector<double>& raw) {
  size_t n = raw.size();
  std::vector<size_t> order;
  order.reserve(n);
  for (size_t i = 0; i < n; ++i)
    if (!DataTable::cell_is_missing(raw[i])) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return raw[a] < raw[b]; });

  std::vector<double> scores(n, 0.0);
  size_t m = order.size();
  size_t i = 0;
  while (i < m) {
    size_t j = i;
    while (j + 1 < m && raw[order[j + 1]] == raw[order[i]]) ++j;
    double midrank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    double u = (midrank - 0.5) / static_cast<double>(m);
    double z = normal_quantile(u);
    for (size_t k = i; k <= j; ++k) scores[order[k]] = z;
    i = j + 1;
  }
  return scores;
}

double column_entropy(const std::vector<int>& bins, size_t n_bins) {
  std::vector<double> counts(n_bins, 0.0);
  double total = 0.0;
  for (int b : bins) {
    if (b < 0) continue;
    counts[static_cast<size_t>(b)] += 1.0;
    total += 1.0;
  }
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    double p = c / total;
    h -= p * std::log(p);
  }
  return h;
}

double mutual_information(const std::vector<int>& a, size_t na,
                          const std::vector<int>& b, size_t nb) {
  std::vector<double> joint(na * nb, 0.0);
  std::vector<double> ma(na, 0.0), mb(nb, 0.0);
  double total = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || b[i] < 0) continue;
    joint[static_cast<size_t>(a[i]) * nb + static_cast<size_t>(b[i])] += 1.0;
    ma[static_cast<size_t>(a[i])] += 1.0;
    mb[static_cast<size_t>(b[i])] += 1.0;
    total += 1.0;
  }
  if (total <= 0.0) return 0.0;
  double mi = 0.0;
  for (size_t i = 0; i < na; ++i) {
    for (size_t j = 0; j < nb; ++j) {
      double c = joint[i * nb + j];
      if (c <= 0.0) continue;
      mi += (c / total) *
            std::log(c * total / (ma[i] * mb[j]));
    }
  }
  return std::max(0.0, mi);
}

// Draws an index from normalized frequencies.
size_t draw_categorical(const std::vector<double>& freq, Rng& rng) {
  double u = rng.uniform01();
  double cum = 0.0;
  for (size_t i = 0; i < freq.size(); ++i) {
    cum += freq[i];
    if (u < cum) return i;
  }
  return freq.empty() ? 0 : freq.size() - 1;
}

double empirical_quantile(const std::vector<double>& sorted, double u) {
  if (sorted.empty()) return 0.0;
  if (sorted.size() == 1) return sorted[0];
  double h = u * static_cast<double>(sorted.size() - 1);
  size_t lo = std::min(static_cast<size_t>(h), sorted.size() - 2);
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

FittedSynthesizer fit(const SynthesizerSpec& spec, const DataTable& table,
                      uint64_t seed) {
  spec.validate();
  if (table.n_rows() < 50)
    fail(Errc::TooFewRows, "synthesizer fitting needs at least 50 rows");

  FittedSynthesizer fs;
  fs.spec_ = spec;
  fs.schema_ = table.schema().without_predictions();
  for (size_t c = 0; c < table.n_features(); ++c)
    fs.categories_.push_back(table.categories(c));

  size_t nf = table.n_features();
  size_t n = table.n_rows();
  size_t d = nf + 2;  // features, group, y

  // Raw modeled columns: features as stored, group and y as 0/1 numerics in
  // categorical columns.
  std::vector<std::vector<double>> raw(d);
  for (size_t c = 0; c < nf; ++c) raw[c] = table.column(c);
  raw[nf].resize(n);
  raw[nf + 1].resize(n);
  for (size_t r = 0; r < n; ++r) {
    raw[nf][r] = static_cast<double>(table.group_raw()[r]);
    raw[nf + 1][r] = static_cast<double>(table.y(r));
  }

  auto is_numeric = [&](size_t c) {
    return c < nf && table.schema().features[c].kind == FeatureKind::Numeric;
  };
  auto n_categories = [&](size_t c) -> size_t {
    if (c < nf) return table.categories(c).size();
    return 2;  // group / y
  };

  fs.columns_.resize(d);
  for (size_t c = 0; c < d; ++c) {
    SynthColumn& col = fs.columns_[c];
    col.name = c < nf ? table.schema().features[c].name
                      : (c == nf ? fs.schema_.group_column
                                 : fs.schema_.target_column);
    col.numeric = is_numeric(c);
    if (col.numeric) {
      for (double v : raw[c])
        if (!DataTable::cell_is_missing(v)) col.sorted_values.push_back(v);
      std::sort(col.sorted_values.begin(), col.sorted_values.end());
    } else {
      col.cat_freq.assign(n_categories(c), 0.0);
      double total = 0.0;
      for (double v : raw[c]) {
        if (DataTable::cell_is_missing(v)) continue;
        col.cat_freq[static_cast<size_t>(v)] += 1.0;
        total += 1.0;
      }
      if (total > 0.0) {
        for (double& f : col.cat_freq) f /= total;
      } else if (!col.cat_freq.empty()) {
        std::fill(col.cat_freq.begin(), col.cat_freq.end(),
                  1.0 / static_cast<double>(col.cat_freq.size()));
      }
    }
  }

  if (spec.kind == SynthKind::GaussianCopula) {
    // Gaussian rank correlation of per-column normal scores.
    std::vector<std::vector<double>> z(d);
    for (size_t c = 0; c < d; ++c) z[c] = normal_scores(raw[c]);
    fs.correlation_.assign(d * d, 0.0);
    std::vector<double> norm(d, 0.0);
    for (size_t c = 0; c < d; ++c) {
      for (double v : z[c]) norm[c] += v * v;
      norm[c] = std::sqrt(std::max(norm[c], 1e-30));
    }
    for (size_t a = 0; a < d; ++a) {
      for (size_t b = a; b < d; ++b) {
        double dot = 0.0;
        for (size_t r = 0; r < n; ++r) dot += z[a][r] * z[b][r];
        double corr = a == b ? 1.0 : dot / (norm[a] * norm[b]);
        corr = std::clamp(corr, -1.0, 1.0);
        fs.correlation_[a * d + b] = corr;
        fs.correlation_[b * d + a] = corr;
      }
    }
    fs.correlation_ = repair_correlation(std::move(fs.correlation_), d);
    fs.chol_ = cholesky(fs.correlation_, d);
  }

  if (spec.kind == SynthKind::ChainBayesDp) {
    size_t bins = static_cast<size_t>(spec.bins);
    // Discretize: numeric columns into equal-frequency bins, categoricals
    // into their levels.
    std::vector<std::vector<int>> binned(d, std::vector<int>(n, -1));
    for (size_t c = 0; c < d; ++c) {
      SynthColumn& col = fs.columns_[c];
      if (!col.numeric) {
        for (size_t r = 0; r < n; ++r) {
          if (DataTable::cell_is_missing(raw[c][r])) continue;
          binned[c][r] = static_cast<int>(raw[c][r]);
        }
        continue;
      }
      size_t m = col.sorted_values.size();
      size_t k = std::max<size_t>(1, std::min(bins, m));
      std::vector<size_t> starts(k + 1);
      for (size_t b = 0; b <= k; ++b)
        starts[b] = b * m / k;
      col.bin_slices.clear();
      col.bin_edges.clear();
      for (size_t b = 0; b < k; ++b) {
        col.bin_slices.emplace_back(starts[b], starts[b + 1]);
        col.bin_edges.push_back(m ? col.sorted_values[starts[b]] : 0.0);
      }
      col.bin_edges.push_back(m ? col.sorted_values[m - 1] : 0.0);
      for (size_t r = 0; r < n; ++r) {
        double v = raw[c][r];
        if (DataTable::cell_is_missing(v)) continue;
        // First slice whose start value exceeds v, minus one.
        size_t b = k - 1;
        for (size_t cand = 0; cand + 1 < k; ++cand) {
          if (v < col.bin_edges[cand + 1]) {
            b = cand;
            break;
          }
        }
        binned[c][r] = static_cast<int>(b);
      }
    }

    // Root: highest-entropy column; then greedily attach the (parent,
    // child) pair with maximal mutual information.
    size_t root = 0;
    double best_h = -1.0;
    for (size_t c = 0; c < d; ++c) {
      double h = column_entropy(binned[c], fs.columns_[c].n_bins());
      if (h > best_h + 1e-15) {
        best_h = h;
        root = c;
      }
    }
    fs.chain_root_ = root;
    std::vector<bool> chosen(d, false);
    chosen[root] = true;
    size_t n_edges = d - 1;
    double cell_scale = 2.0 * static_cast<double>(n_edges) / spec.epsilon;
    Rng noise_rng(derive_seed(seed, spec.seed, "chain_noise"));

    for (size_t step = 0; step < n_edges; ++step) {
      double best_mi = -1.0;
      size_t best_parent = 0, best_child = 0;
      for (size_t child = 0; child < d; ++child) {
        if (chosen[child]) continue;
        for (size_t parent = 0; parent < d; ++parent) {
          if (!chosen[parent]) continue;
          double mi = mutual_information(binned[parent],
                                         fs.columns_[parent].n_bins(),
                                         binned[child],
                                         fs.columns_[child].n_bins());
          if (mi > best_mi + 1e-15) {
            best_mi = mi;
            best_parent = parent;
            best_child = child;
          }
        }
      }
      chosen[best_child] = true;

      size_t np = fs.columns_[best_parent].n_bins();
      size_t nc = fs.columns_[best_child].n_bins();
      std::vector<double> joint(np * nc, 0.0);
      for (size_t r = 0; r < n; ++r) {
        int bp = binned[best_parent][r];
        int bc = binned[best_child][r];
        if (bp < 0 || bc < 0) continue;
        joint[static_cast<size_t>(bp) * nc + static_cast<size_t>(bc)] += 1.0;
      }
      for (double& cell : joint)
        cell = std::max(0.0, cell + noise_rng.laplace(cell_scale));

      ChainEdge edge;
      edge.parent = best_parent;
      edge.child = best_child;
      edge.table_epsilon = 2.0 / cell_scale;  // L1 sensitivity 2 per record
      if (step == 0) {
        // The root marginal is post-processing of the first released table.
        fs.root_marginal_.assign(np, 0.0);
        for (size_t p = 0; p < np; ++p)
          for (size_t c2 = 0; c2 < nc; ++c2)
            fs.root_marginal_[p] += joint[p * nc + c2];
        double total = std::accumulate(fs.root_marginal_.begin(),
                                       fs.root_marginal_.end(), 0.0);
        if (total > 0.0) {
          for (double& v : fs.root_marginal_) v /= total;
        } else {
          std::fill(fs.root_marginal_.begin(), fs.root_marginal_.end(),
                    1.0 / static_cast<double>(np));
        }
      }
      edge.conditional.assign(np * nc, 0.0);
      for (size_t p = 0; p < np; ++p) {
        double row_total = 0.0;
        for (size_t c2 = 0; c2 < nc; ++c2) row_total += joint[p * nc + c2];
        for (size_t c2 = 0; c2 < nc; ++c2) {
          edge.conditional[p * nc + c2] =
              row_total > 0.0 ? joint[p * nc + c2] / row_total
                              : 1.0 / static_cast<double>(nc);
        }
      }
      fs.edges_.push_back(std::move(edge));
    }
  }

  return fs;
}

double FittedSynthesizer::total_privacy_budget() const {
  double total = 0.0;
  for (const ChainEdge& e : edges_) total += e.table_epsilon;
  return total;
}

DataTable FittedSynthesizer::sample(size_t n, uint64_t seed) const {
  if (n == 0) fail(Errc::ConfigError, "sample size must be positive");
  size_t nf = schema_.features.size();
  size_t d = columns_.size();

  std::vector<std::vector<double>> feature_cols(nf, std::vector<double>(n));
  std::vector<uint8_t> group(n), y(n);

  auto store = [&](size_t c, size_t row, double v) {
    if (c < nf) {
      feature_cols[c][row] = v;
    } else if (c == nf) {
      group[row] = static_cast<uint8_t>(v);
    } else {
      y[row] = static_cast<uint8_t>(v);
    }
  };

  for (size_t row = 0; row < n; ++row) {
    Rng rng(derive_seed(seed, row, "synth_row"));
    switch (spec_.kind) {
      case SynthKind::IndependentMarginals: {
        for (size_t c = 0; c < d; ++c) {
          const SynthColumn& col = columns_[c];
          if (col.numeric) {
            double v = col.sorted_values.empty()
                           ? 0.0
                           : col.sorted_values[static_cast<size_t>(
                                 rng.below(col.sorted_values.size()))];
            store(c, row, v);
          } else {
            store(c, row, static_cast<double>(draw_categorical(col.cat_freq, rng)));
          }
        }
        break;
      }
      case SynthKind::GaussianCopula: {
        std::vector<double> g(d), z(d, 0.0);
        for (double& v : g) v = rng.normal();
        for (size_t i = 0; i < d; ++i) {
          for (size_t j = 0; j <= i; ++j) z[i] += chol_[i * d + j] * g[j];
        }
        for (size_t c = 0; c < d; ++c) {
          const SynthColumn& col = columns_[c];
          double u = normal_cdf(z[c]);
          if (col.numeric) {
            store(c, row, empirical_quantile(col.sorted_values, u));
          } else {
            double cum = 0.0;
            size_t idx = col.cat_freq.empty() ? 0 : col.cat_freq.size() - 1;
            for (size_t k = 0; k < col.cat_freq.size(); ++k) {
              cum += col.cat_freq[k];
              if (u < cum) {
                idx = k;
                break;
              }
            }
            store(c, row, static_cast<double>(idx));
          }
        }
        break;
      }
      case SynthKind::ChainBayesDp: {
        std::vector<int> bin(d, -1);
        bin[chain_root_] = static_cast<int>(draw_categorical(root_marginal_, rng));
        for (const ChainEdge& e : edges_) {
          size_t nc = columns_[e.child].n_bins();
          size_t p = static_cast<size_t>(bin[e.parent]);
          std::vector<double> row_dist(
              e.conditional.begin() + static_cast<long>(p * nc),
              e.conditional.begin() + static_cast<long>((p + 1) * nc));
          bin[e.child] = static_cast<int>(draw_categorical(row_dist, rng));
        }
        for (size_t c = 0; c < d; ++c) {
          const SynthColumn& col = columns_[c];
          size_t b = static_cast<size_t>(bin[c]);
          if (!col.numeric) {
            store(c, row, static_cast<double>(b));
            continue;
          }
          auto [s, e2] = col.bin_slices.empty()
                             ? std::pair<size_t, size_t>{0, 0}
                             : col.bin_slices[b];
          double u = rng.uniform01();
          double v;
          if (e2 > s) {
            std::vector<double> slice(col.sorted_values.begin() + static_cast<long>(s),
                                      col.sorted_values.begin() + static_cast<long>(e2));
            v = empirical_quantile(slice, u);
          } else if (!col.bin_edges.empty()) {
            v = col.bin_edges[b] + u * (col.bin_edges[b + 1] - col.bin_edges[b]);
          } else {
            v = 0.0;
          }
          store(c, row, v);
        }
        break;
      }
    }
  }

  return DataTable::from_parts(schema_, std::move(feature_cols), categories_,
                               std::move(group), std::move(y), {});
}

namespace {

using nlohmann::json;

json column_to_json(const SynthColumn& c) {
  json j;
  j["name"] = c.name;
  j["numeric"] = c.numeric;
  j["sorted_values"] = c.sorted_values;
  j["cat_freq"] = c.cat_freq;
  j["bin_edges"] = c.bin_edges;
  json slices = json::array();
  for (auto [s, e] : c.bin_slices) slices.push_back({s, e});
  j["bin_slices"] = slices;
  return j;
}

SynthColumn column_from_json(const json& j) {
  SynthColumn c;
  c.name = j.at("name").get<std::string>();
  c.numeric = j.at("numeric").get<bool>();
  c.sorted_values = j.at("sorted_values").get<std::vector<double>>();
  c.cat_freq = j.at("cat_freq").get<std::vector<double>>();
  c.bin_edges = j.at("bin_edges").get<std::vector<double>>();
  for (const auto& s : j.at("bin_slices"))
    c.bin_slices.emplace_back(s.at(0).get<size_t>(), s.at(1).get<size_t>());
  return c;
}

}  // namespace

void FittedSynthesizer::save(const std::string& path) const {
  json j;
  j["format_version"] = 1;
  j["kind"] = synth_kind_name(spec_.kind);
  j["epsilon"] = spec_.epsilon;
  j["bins"] = spec_.bins;
  j["spec_seed"] = spec_.seed;
  j["schema"] = {
      {"group_column", schema_.group_column},
      {"target_column", schema_.target_column},
      {"privileged_value", schema_.privileged_value},
      {"underprivileged_value", schema_.underprivileged_value},
      {"missing_token", schema_.missing_token},
  };
  json feats = json::array();
  for (const auto& f : schema_.features)
    feats.push_back({{"name", f.name},
                     {"kind", f.kind == FeatureKind::Numeric ? "numeric"
                                                             : "categorical"}});
  j["schema"]["features"] = feats;
  j["categories"] = categories_;
  json cols = json::array();
  for (const auto& c : columns_) cols.push_back(column_to_json(c));
  j["columns"] = cols;
  j["correlation"] = correlation_;
  j["chol"] = chol_;
  j["chain_root"] = chain_root_;
  j["root_marginal"] = root_marginal_;
  json edges = json::array();
  for (const auto& e : edges_)
    edges.push_back({{"parent", e.parent},
                     {"child", e.child},
                     {"conditional", e.conditional},
                     {"table_epsilon", e.table_epsilon}});
  j["edges"] = edges;

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

FittedSynthesizer FittedSynthesizer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Errc::IoError, std::string("synthesizer file parse error: ") + e.what());
  }
  if (j.value("format_version", 0) != 1)
    fail(Errc::IoError, "unsupported synthesizer format version");

  FittedSynthesizer fs;
  auto kind = synth_kind_from_name(j.at("kind").get<std::string>());
  if (!kind) fail(Errc::IoError, "unknown synthesizer kind in file");
  fs.spec_.kind = *kind;
  fs.spec_.epsilon = j.at("epsilon").get<double>();
  fs.spec_.bins = j.at("bins").get<int>();
  fs.spec_.seed = j.at("spec_seed").get<uint64_t>();
  const json& s = j.at("schema");
  fs.schema_.group_column = s.at("group_column").get<std::string>();
  fs.schema_.target_column = s.at("target_column").get<std::string>();
  fs.schema_.privileged_value = s.at("privileged_value").get<std::string>();
  fs.schema_.underprivileged_value =
      s.at("underprivileged_value").get<std::string>();
  fs.schema_.missing_token = s.at("missing_token").get<std::string>();
  for (const auto& f : s.at("features")) {
    FeatureSpec fspec;
    fspec.name = f.at("name").get<std::string>();
    fspec.kind = f.at("kind").get<std::string>() == "numeric"
                     ? FeatureKind::Numeric
                     : FeatureKind::Categorical;
    fs.schema_.features.push_back(fspec);
  }
  fs.categories_ =
      j.at("categories").get<std::vector<std::vector<std::string>>>();
  for (const auto& c : j.at("columns"))
    fs.columns_.push_back(column_from_json(c));
  fs.correlation_ = j.at("correlation").get<std::vector<double>>();
  fs.chol_ = j.at("chol").get<std::vector<double>>();
  fs.chain_root_ = j.at("chain_root").get<size_t>();
  fs.root_marginal_ = j.at("root_marginal").get<std::vector<double>>();
  for (const auto& e : j.at("edges")) {
    ChainEdge edge;
    edge.parent = e.at("parent").get<size_t>();
    edge.child = e.at("child").get<size_t>();
    edge.conditional = e.at("conditional").get<std::vector<double>>();
    edge.table_epsilon = e.at("table_epsilon").get<double>();
    fs.edges_.push_back(std::move(edge));
  }
  return fs;
}

}  // namespace auditbench
