#pragma once

// Labeled embedding datasets: loading (JSONL, CSV), validation, partitioning into
// per-category clusters, and seeded synthetic generation.

#include "style_space/common.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace style_space {

struct Record {
  std::string id;
  std::string label;
  Vector weights;

  bool operator==(const Record& other) const {
    return id == other.id && label == other.label && weights.size() == other.weights.size() &&
           (weights.array() == other.weights.array()).all();
  }
};

// Immutable set of D-dimensional weight vectors tagged with id and category label.
class LabeledEmbeddingSet {
 public:
  LabeledEmbeddingSet() = default;

  // Throws DataError on mixed dimensions, duplicate ids, or empty labels.
  explicit LabeledEmbeddingSet(std::vector<Record> records) : records_(std::move(records)) {
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const Record& r = records_[i];
      if (r.weights.size() == 0) throw DataError("record '" + r.id + "' has no weights");
      if (i == 0) dim_ = static_cast<std::size_t>(r.weights.size());
      if (static_cast<std::size_t>(r.weights.size()) != dim_)
        throw DataError("record '" + r.id + "' has dimension " + std::to_string(r.weights.size()) +
                        ", expected " + std::to_string(dim_));
      if (r.label.empty()) throw DataError("record '" + r.id + "' has an empty label");
      if (!ids.insert(r.id).second) throw DataError("duplicate id '" + r.id + "'");
    }
  }

  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t dim() const { return dim_; }

  std::vector<std::string> labels() const {
    std::set<std::string> s;
    for (const auto& r : records_) s.insert(r.label);
    return {s.begin(), s.end()};
  }

  bool operator==(const LabeledEmbeddingSet& other) const {
    return dim_ == other.dim_ && records_ == other.records_;
  }

 private:
  std::vector<Record> records_;
  std::size_t dim_ = 0;
};

// Members of one category, stored column-wise (D x N).
class Cluster {
 public:
  Cluster(std::string label, Matrix members) : label_(std::move(label)), members_(std::move(members)) {
    if (members_.cols() == 0) throw DataError("cluster '" + label_ + "' is empty");
  }

  static Cluster from_vectors(std::string label, const std::vector<Vector>& vectors) {
    if (vectors.empty()) throw DataError("cluster '" + label + "' is empty");
    Matrix m(vectors.front().size(), static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t j = 0; j < vectors.size(); ++j) {
      require_dim(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(vectors[j].size()));
      m.col(static_cast<Eigen::Index>(j)) = vectors[j];
    }
    return Cluster(std::move(label), std::move(m));
  }

  const std::string& label() const { return label_; }
  const Matrix& members() const { return members_; }
  std::size_t count() const { return static_cast<std::size_t>(members_.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(members_.rows()); }
  auto member(std::size_t i) const { return members_.col(static_cast<Eigen::Index>(i)); }

 private:
  std::string label_;
  Matrix members_;
};

// ---------------------------------------------------------------------------
// Loading and saving

namespace detail {

inline double parse_number(std::string_view text, bool& ok) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  double value = 0.0;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  ok = !text.empty() && ec == std::errc() && ptr == text.data() + text.size();
  return value;
}

// JSON has no literal for non-finite numbers; accept the usual spellings as strings
// so validation can report them.
inline double json_weight(const nlohmann::json& v, bool& ok) {
  ok = true;
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "NaN" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "Infinity" || s == "inf" || s == "Inf") return std::numeric_limits<double>::infinity();
    if (s == "-Infinity" || s == "-inf" || s == "-Inf") return -std::numeric_limits<double>::infinity();
  }
  ok = false;
  return 0.0;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

inline LabeledEmbeddingSet parse_jsonl(std::istream& in) {
  std::vector<Record> records;
  std::unordered_set<std::string> ids;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("label") || !j.contains("weights"))
      throw DataError(where + ": record needs id, label and weights");
    if (!j["id"].is_string() || !j["label"].is_string() || !j["weights"].is_array())
      throw DataError(where + ": id and label must be strings, weights an array");
    Record r;
    r.id = j["id"].get<std::string>();
    r.label = j["label"].get<std::string>();
    const auto& w = j["weights"];
    if (w.empty()) throw DataError(where + ": empty weights array");
    r.weights.resize(static_cast<Eigen::Index>(w.size()));
    for (std::size_t k = 0; k < w.size(); ++k) {
      bool ok = false;
      r.weights[static_cast<Eigen::Index>(k)] = detail::json_weight(w[k], ok);
      if (!ok) throw DataError(where + ": weight " + std::to_string(k) + " is not a number");
    }
    if (records.empty()) dim = w.size();
    if (w.size() != dim)
      throw DataError(where + ": dimension mismatch (" + std::to_string(w.size()) + " weights, expected " +
                      std::to_string(dim) + ")");
    if (r.label.empty()) throw DataError(where + ": empty label");
    if (!ids.insert(r.id).second) throw DataError(where + ": duplicate id '" + r.id + "'");
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError("empty dataset");
  return LabeledEmbeddingSet(std::move(records));
}

inline LabeledEmbeddingSet load_jsonl(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_jsonl(in);
}

inline LabeledEmbeddingSet parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset (missing CSV header)");
  const auto header = detail::split(line, ',');
  if (header.size() < 3 || detail::trim(header[0]) != "id" || detail::trim(header[1]) != "label")
    throw DataError("row 1: missing header 'id,label,w0,...'");
  for (std::size_t c = 2; c < header.size(); ++c)
    if (detail::trim(header[c]) != "w" + std::to_string(c - 2))
      throw DataError("row 1, column " + std::to_string(c + 1) + ": expected header 'w" +
                      std::to_string(c - 2) + "'");
  const std::size_t dim = header.size() - 2;

  std::vector<Record> records;
  std::unordered_set<std::string> ids;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const std::string where = "row " + std::to_string(row);
    const auto cells = detail::split(line, ',');
    if (cells.size() != header.size())
      throw DataError(where + ": expected " + std::to_string(header.size()) + " columns, got " +
                      std::to_string(cells.size()));
    Record r;
    r.id = detail::trim(cells[0]);
    r.label = detail::trim(cells[1]);
    r.weights.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < dim; ++k) {
      bool ok = false;
      r.weights[static_cast<Eigen::Index>(k)] = detail::parse_number(cells[k + 2], ok);
      if (!ok)
        throw DataError(where + ", column " + std::to_string(k + 3) + ": non-numeric weight '" +
                        detail::trim(cells[k + 2]) + "'");
    }
    if (r.label.empty()) throw DataError(where + ": empty label");
    if (!ids.insert(r.id).second) throw DataError(where + ": duplicate id '" + r.id + "'");
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError("empty dataset");
  return LabeledEmbeddingSet(std::move(records));
}

inline LabeledEmbeddingSet load_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_csv(in);
}

// Dispatches on extension: ".csv" is CSV, anything else JSONL.
inline LabeledEmbeddingSet load_dataset(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return load_csv(path);
  return load_jsonl(path);
}

namespace detail {

inline nlohmann::ordered_json json_weight_value(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  return v;
}

inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline void write_jsonl(std::ostream& out, const LabeledEmbeddingSet& set) {
  for (const auto& r : set.records()) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["label"] = r.label;
    auto w = nlohmann::ordered_json::array();
    for (Eigen::Index k = 0; k < r.weights.size(); ++k) w.push_back(detail::json_weight_value(r.weights[k]));
    j["weights"] = std::move(w);
    out << j.dump() << '\n';
  }
}

inline void write_csv(std::ostream& out, const LabeledEmbeddingSet& set) {
  out << "id,label";
  for (std::size_t k = 0; k < set.dim(); ++k) out << ",w" << k;
  out << '\n';
  for (const auto& r : set.records()) {
    out << r.id << ',' << r.label;
    for (Eigen::Index k = 0; k < r.weights.size(); ++k) out << ',' << detail::format_double(r.weights[k]);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  std::size_t dim = 0;
  std::size_t record_count = 0;
  std::map<std::string, std::size_t> category_counts;
  std::vector<std::string> non_finite_ids;
  std::vector<std::string> negative_entry_ids;  // warning only
  std::vector<std::string> below_min;
  std::string neutral_label;
  bool neutral_present = false;
  std::size_t passing_categories = 0;
  bool schedulable = false;
  std::vector<std::string> problems;
};

inline ValidationReport validate(const LabeledEmbeddingSet& set, std::size_t min_per_category,
                                 const std::string& neutral_label = "neutral") {
  ValidationReport rep;
  rep.dim = set.dim();
  rep.record_count = set.size();
  rep.neutral_label = neutral_label;
  for (const auto& r : set.records()) {
    ++rep.category_counts[r.label];
    if (!r.weights.allFinite()) rep.non_finite_ids.push_back(r.id);
    if ((r.weights.array() < 0.0).any()) rep.negative_entry_ids.push_back(r.id);
  }
  for (const auto& [label, n] : rep.category_counts) {
    if (n < min_per_category)
      rep.below_min.push_back(label);
    else
      ++rep.passing_categories;
  }
  rep.neutral_present = rep.category_counts.count(neutral_label) > 0;

  if (set.empty()) rep.problems.push_back("dataset is empty");
  for (const auto& id : rep.non_finite_ids) rep.problems.push_back("record '" + id + "' has NaN/Inf weights");
  for (const auto& label : rep.below_min)
    rep.problems.push_back("category '" + label + "' has fewer than " + std::to_string(min_per_category) +
                           " vectors");
  if (!rep.neutral_present) rep.problems.push_back("neutral category '" + neutral_label + "' is missing");
  if (rep.passing_categories < 2) rep.problems.push_back("fewer than 2 categories pass the size check");
  if (rep.neutral_present && std::find(rep.below_min.begin(), rep.below_min.end(), neutral_label) !=
                                 rep.below_min.end())
    rep.problems.push_back("neutral category is below the minimum size");

  rep.schedulable = rep.problems.empty();
  return rep;
}

inline nlohmann::ordered_json to_json(const ValidationReport& rep) {
  nlohmann::ordered_json j;
  j["dim"] = rep.dim;
  j["record_count"] = rep.record_count;
  j["category_counts"] = nlohmann::ordered_json::object();
  for (const auto& [label, n] : rep.category_counts) j["category_counts"][label] = n;
  j["neutral_label"] = rep.neutral_label;
  j["neutral_present"] = rep.neutral_present;
  j["passing_categories"] = rep.passing_categories;
  j["non_finite_ids"] = rep.non_finite_ids;
  j["negative_entry_ids"] = rep.negative_entry_ids;
  j["below_min"] = rep.below_min;
  j["problems"] = rep.problems;
  j["schedulable"] = rep.schedulable;
  return j;
}

// ---------------------------------------------------------------------------
// Partition

// Clusters keyed (and therefore ordered) lexicographically by label. Member order
// follows input order.
inline std::map<std::string, Cluster> partition(const LabeledEmbeddingSet& set) {
  std::map<std::string, std::vector<const Record*>> groups;
  for (const auto& r : set.records()) groups[r.label].push_back(&r);
  std::map<std::string, Cluster> out;
  for (const auto& [label, recs] : groups) {
    Matrix m(static_cast<Eigen::Index>(set.dim()), static_cast<Eigen::Index>(recs.size()));
    for (std::size_t j = 0; j < recs.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = recs[j]->weights;
    out.emplace(label, Cluster(label, std::move(m)));
  }
  return out;
}

inline const Cluster& find_cluster(const std::map<std::string, Cluster>& clusters, const std::string& label) {
  auto it = clusters.find(label);
  if (it == clusters.end()) throw DataError("category '" + label + "' not present in dataset");
  return it->second;
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticCategory {
  std::string label;
  Vector mean;
  Vector std;
  std::size_t count = 0;
};

struct SyntheticSpec {
  std::vector<SyntheticCategory> categories;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
};

inline void check(const SyntheticSpec& spec) {
  if (spec.dim == 0) throw ConfigError("synthetic spec: dim must be >= 1");
  if (spec.categories.empty()) throw ConfigError("synthetic spec: no categories");
  std::set<std::string> seen;
  for (const auto& c : spec.categories) {
    if (c.label.empty()) throw ConfigError("synthetic spec: empty category label");
    if (!seen.insert(c.label).second) throw ConfigError("synthetic spec: duplicate label '" + c.label + "'");
    if (static_cast<std::size_t>(c.mean.size()) != spec.dim || static_cast<std::size_t>(c.std.size()) != spec.dim)
      throw ConfigError("synthetic spec: category '" + c.label + "' mean/std must have dim entries");
    if (!(c.std.array() > 0.0).all() || !c.std.allFinite() || !c.mean.allFinite())
      throw ConfigError("synthetic spec: category '" + c.label + "' needs finite mean and positive std");
    if (c.count == 0) throw ConfigError("synthetic spec: category '" + c.label + "' count must be >= 1");
  }
}

// Axis-aligned Gaussian draws; a single mt19937_64 stream seeded by spec.seed is consumed
// category by category, so equal specs give bit-identical sets.
inline LabeledEmbeddingSet generate_synthetic(const SyntheticSpec& spec) {
  check(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Record> records;
  for (const auto& c : spec.categories) {
    for (std::size_t i = 0; i < c.count; ++i) {
      Record r;
      char id[32];
      std::snprintf(id, sizeof(id), "-%05zu", i);
      r.id = c.label + id;
      r.label = c.label;
      r.weights.resize(static_cast<Eigen::Index>(spec.dim));
      for (std::size_t k = 0; k < spec.dim; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        r.weights[kk] = c.mean[kk] + c.std[kk] * normal(rng);
      }
      records.push_back(std::move(r));
    }
  }
  return LabeledEmbeddingSet(std::move(records));
}

inline const std::vector<std::string>& default_category_labels() {
  static const std::vector<std::string> labels{"neutral", "anger", "happiness", "sadness"};
  return labels;
}

// Inline recipe: `clusters` categories with unit-free isotropic std `stddev`. While
// clusters <= dim, category k is centred at (separation*stddev/sqrt(2)) * e_k, which puts
// every pair of centroids exactly separation*stddev apart. Beyond dim, centres are
// seeded random directions at the same radius.
inline SyntheticSpec make_separated_spec(std::size_t clusters, std::size_t dim, std::size_t count,
                                         std::uint64_t seed, double separation = 3.0, double stddev = 1.0) {
  if (clusters == 0 || dim == 0 || count == 0) throw ConfigError("clusters, dim and n must be >= 1");
  if (!(stddev > 0.0) || !(separation >= 0.0)) throw ConfigError("std must be > 0 and separation >= 0");
  SyntheticSpec spec;
  spec.dim = dim;
  spec.seed = seed;
  const double radius = separation * stddev / std::sqrt(2.0);
  std::mt19937_64 dir_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto& names = default_category_labels();
  for (std::size_t k = 0; k < clusters; ++k) {
    SyntheticCategory c;
    c.label = k < names.size() ? names[k] : "emotion" + std::to_string(k);
    c.mean = Vector::Zero(static_cast<Eigen::Index>(dim));
    if (k < dim) {
      c.mean[static_cast<Eigen::Index>(k)] = radius;
    } else {
      Vector d(static_cast<Eigen::Index>(dim));
      for (auto& v : d) v = normal(dir_rng);
      c.mean = radius * d.normalized();
    }
    c.std = Vector::Constant(static_cast<Eigen::Index>(dim), stddev);
    c.count = count;
    spec.categories.push_back(std::move(c));
  }
  return spec;
}

inline nlohmann::ordered_json to_json(const SyntheticSpec& spec) {
  nlohmann::ordered_json j;
  j["dim"] = spec.dim;
  j["seed"] = spec.seed;
  j["categories"] = nlohmann::ordered_json::array();
  for (const auto& c : spec.categories) {
    nlohmann::ordered_json cj;
    cj["label"] = c.label;
    cj["mean"] = std::vector<double>(c.mean.begin(), c.mean.end());
    cj["std"] = std::vector<double>(c.std.begin(), c.std.end());
    cj["count"] = c.count;
    j["categories"].push_back(std::move(cj));
  }
  return j;
}

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  try {
    SyntheticSpec spec;
    spec.dim = j.at("dim").get<std::size_t>();
    spec.seed = j.value("seed", std::uint64_t{0});
    for (const auto& cj : j.at("categories")) {
      SyntheticCategory c;
      c.label = cj.at("label").get<std::string>();
      const auto mean = cj.at("mean").get<std::vector<double>>();
      const auto sd = cj.at("std").get<std::vector<double>>();
      c.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
      c.std = Eigen::Map<const Vector>(sd.data(), static_cast<Eigen::Index>(sd.size()));
      c.count = cj.at("count").get<std::size_t>();
      spec.categories.push_back(std::move(c));
    }
    check(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
}

}  // namespace style_space
