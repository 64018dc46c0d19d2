#include "conceptvec/intrinsic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "conceptvec/rng.hpp"
#include "conceptvec/util.hpp"

namespace conceptvec {

namespace {

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Seeded sample of k elements without replacement, returned sorted.
std::vector<std::string> sample_without_replacement(std::vector<std::string> pool, size_t k,
                                                    Rng& rng) {
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + rng.uniform_u64(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

GroupDataset build_groups(const std::map<std::string, std::vector<std::string>>& associations,
                          const std::vector<std::string>& universe, size_t max_size,
                          size_t min_size, uint64_t seed, BuildGroupsReport* report) {
  if (min_size < 2) throw std::invalid_argument("min_size must be >= 2");
  if (max_size < min_size) throw std::invalid_argument("max_size must be >= min_size");

  auto universe_sorted = sorted_unique(universe);
  std::unordered_set<std::string> universe_set(universe_sorted.begin(), universe_sorted.end());

  BuildGroupsReport local;
  GroupDataset dataset;
  for (const auto& [key, members] : associations) {
    // per-key stream: group content does not depend on the other keys
    Rng rng(Rng::derive(seed, fnv1a64(key)));

    std::vector<std::string> filtered;
    for (const auto& m : sorted_unique(members))
      if (universe_set.contains(m)) filtered.push_back(m);

    if (filtered.size() < min_size) {
      ++local.skipped_too_small;
      continue;
    }
    std::vector<std::string> related = filtered.size() > max_size
                                           ? sample_without_replacement(filtered, max_size, rng)
                                           : filtered;

    std::unordered_set<std::string> related_set(related.begin(), related.end());
    std::vector<std::string> pool;
    pool.reserve(universe_sorted.size());
    for (const auto& t : universe_sorted)
      if (!related_set.contains(t)) pool.push_back(t);
    if (pool.size() < related.size()) {
      ++local.skipped_universe_exhausted;
      continue;
    }
    ConceptGroup group;
    group.group_id = key;
    group.related = std::move(related);
    group.unrelated = sample_without_replacement(std::move(pool), group.related.size(), rng);
    dataset.groups.push_back(std::move(group));
    ++local.groups_built;
  }
  if (report) *report = local;
  return dataset;
}

std::map<std::string, std::vector<std::string>> load_associations(std::istream& in) {
  std::map<std::string, std::vector<std::string>> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 2)
      throw std::runtime_error("association file line " + std::to_string(line_no) +
                               ": expected 'key<TAB>member_token'");
    out[std::string(fields[0])].emplace_back(fields[1]);
  }
  return out;
}

GroupDataset load_group_dataset(std::istream& in, const std::string& name) {
  GroupDataset dataset;
  dataset.name = name;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      ConceptGroup g;
      g.group_id = j.at("group_id").get<std::string>();
      g.related = j.at("related").get<std::vector<std::string>>();
      g.unrelated = j.at("unrelated").get<std::vector<std::string>>();
      dataset.groups.push_back(std::move(g));
    } catch (const std::exception& e) {
      throw std::runtime_error("group dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (const auto& g : dataset.groups) {
    if (g.related.size() < 2 || g.related.size() != g.unrelated.size())
      throw std::runtime_error("group '" + g.group_id +
                               "': related needs >= 2 tokens and equal-size unrelated set");
    std::set<std::string> rel(g.related.begin(), g.related.end());
    for (const auto& t : g.unrelated)
      if (rel.contains(t))
        throw std::runtime_error("group '" + g.group_id + "': sets overlap on '" + t + "'");
  }
  return dataset;
}

void save_group_dataset(const GroupDataset& dataset, std::ostream& out) {
  for (const auto& g : dataset.groups) {
    nlohmann::json j;
    j["group_id"] = g.group_id;
    j["related"] = g.related;
    j["unrelated"] = g.unrelated;
    out << j.dump() << '\n';
  }
}

double NormalizedPairTable::at(size_t i, size_t j) const {
  auto key = std::minmax(i, j);
  auto it = values.find({key.first, key.second});
  if (it == values.end())
    throw std::out_of_range("pair missing from normalized similarity table");
  return it->second;
}

namespace {

size_t require_token(const Embedding& embedding, const std::string& token) {
  auto idx = embedding.find(token);
  if (!idx) throw std::runtime_error("dataset token missing from embedding: " + token);
  return *idx;
}

}  // namespace

NormalizedPairTable normalize_pairs(const GroupDataset& dataset, const Embedding& embedding) {
  // collect distinct within-set pairs, keys sorted for fixed-order sums
  std::map<std::pair<size_t, size_t>, double> raw;
  auto collect = [&](const std::vector<std::string>& s) {
    std::vector<size_t> ids;
    ids.reserve(s.size());
    for (const auto& t : s) ids.push_back(require_token(embedding, t));
    for (size_t a = 0; a < ids.size(); ++a)
      for (size_t b = a + 1; b < ids.size(); ++b) {
        auto key = std::minmax(ids[a], ids[b]);
        raw.emplace(std::make_pair(key.first, key.second), 0.0);
      }
  };
  for (const auto& g : dataset.groups) {
    collect(g.related);
    collect(g.unrelated);
  }
  if (raw.empty()) throw std::runtime_error("dataset contains no pairs");

  for (auto& [key, value] : raw) value = cosine(embedding.row(key.first), embedding.row(key.second));

  NormalizedPairTable table;
  const double n = static_cast<double>(raw.size());
  double sum = 0;
  for (const auto& [key, value] : raw) sum += value;
  table.raw_mean = sum / n;
  double sq = 0;
  for (const auto& [key, value] : raw) sq += (value - table.raw_mean) * (value - table.raw_mean);
  table.raw_stddev = std::sqrt(sq / n);  // population sigma

  if (table.raw_stddev == 0.0) {
    table.degenerate = true;
    for (const auto& [key, value] : raw) table.values[key] = 0.5;
    return table;
  }

  double z_min = std::numeric_limits<double>::infinity();
  double z_max = -std::numeric_limits<double>::infinity();
  for (const auto& [key, value] : raw) {
    double z = (value - table.raw_mean) / table.raw_stddev;
    z_min = std::min(z_min, z);
    z_max = std::max(z_max, z);
  }
  table.z_min = z_min;
  table.z_max = z_max;
  if (z_max == z_min) {
    table.degenerate = true;
    for (const auto& [key, value] : raw) table.values[key] = 0.5;
    return table;
  }
  for (const auto& [key, value] : raw) {
    double z = (value - table.raw_mean) / table.raw_stddev;
    table.values[key] = (z - z_min) / (z_max - z_min);
  }
  return table;
}

double set_similarity(const std::vector<std::string>& concept_set, const Embedding& embedding,
                      const NormalizedPairTable& table) {
  if (concept_set.size() < 2)
    throw std::invalid_argument("set_similarity needs at least 2 concepts");
  std::vector<size_t> ids;
  ids.reserve(concept_set.size());
  for (const auto& t : concept_set) ids.push_back(require_token(embedding, t));
  double sum = 0;
  size_t pairs = 0;
  for (size_t a = 0; a < ids.size(); ++a)
    for (size_t b = a + 1; b < ids.size(); ++b) {
      sum += table.at(ids[a], ids[b]);
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

IntrinsicResult group_similarity_difference(const GroupDataset& dataset,
                                            const Embedding& embedding) {
  if (dataset.groups.empty()) throw std::runtime_error("empty group dataset");
  auto table = normalize_pairs(dataset, embedding);
  IntrinsicResult result;
  double sum = 0;
  for (const auto& g : dataset.groups) {
    double diff = set_similarity(g.related, embedding, table) -
                  set_similarity(g.unrelated, embedding, table);
    result.per_group.emplace_back(g.group_id, diff);
    sum += diff;
  }
  result.difference_pct = 100.0 * sum / static_cast<double>(dataset.groups.size());
  return result;
}

}  // namespace conceptvec
