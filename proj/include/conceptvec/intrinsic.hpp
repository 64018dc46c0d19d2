#pragma once

// Intrinsic evaluation: related/unrelated concept groups and the normalized
// average group similarity difference.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "conceptvec/embedding.hpp"

namespace conceptvec {

struct ConceptGroup {
  std::string group_id;
  std::vector<std::string> related;    // sorted, duplicate-free, 2..max_size
  std::vector<std::string> unrelated;  // same size, disjoint from related
};

struct GroupDataset {
  std::string name;
  std::vector<ConceptGroup> groups;
  std::string provenance;
};

struct BuildGroupsReport {
  size_t groups_built = 0;
  size_t skipped_too_small = 0;       // fewer than min_size members in the universe
  size_t skipped_universe_exhausted = 0;  // not enough tokens left for the unrelated set
};

// One group per association key. Members are filtered to the universe,
// truncated to max_size by seeded uniform sampling, and paired with an
// equally sized unrelated set sampled from universe \ related. Deterministic
// for a fixed seed regardless of which other keys are present.
GroupDataset build_groups(const std::map<std::string, std::vector<std::string>>& associations,
                          const std::vector<std::string>& universe, size_t max_size,
                          size_t min_size, uint64_t seed,
                          BuildGroupsReport* report = nullptr);

// `key<TAB>member_token` lines.
std::map<std::string, std::vector<std::string>> load_associations(std::istream& in);

// One JSON object per line with group_id, related, unrelated.
GroupDataset load_group_dataset(std::istream& in, const std::string& name);
void save_group_dataset(const GroupDataset& dataset, std::ostream& out);

struct NormalizedPairTable {
  // key: (min index, max index) into the embedding
  std::map<std::pair<size_t, size_t>, double> values;
  double raw_mean = 0, raw_stddev = 0;
  double z_min = 0, z_max = 0;
  bool degenerate = false;  // sigma == 0 or a single pair; everything is 0.5

  double at(size_t i, size_t j) const;
};

// Raw cosine once per distinct unordered pair occurring inside any related
// or unrelated set of the dataset, z-scored against the population mean and
// standard deviation of those pairs, then min-max mapped to [0, 1].
NormalizedPairTable normalize_pairs(const GroupDataset& dataset, const Embedding& embedding);

// Mean normalized similarity over all C(|set|, 2) unordered pairs.
double set_similarity(const std::vector<std::string>& concept_set, const Embedding& embedding,
                      const NormalizedPairTable& table);

struct IntrinsicResult {
  double difference_pct = 0;  // 100 * mean over groups of (related - unrelated)
  std::vector<std::pair<std::string, double>> per_group;  // group_id -> difference (fraction)
};

IntrinsicResult group_similarity_difference(const GroupDataset& dataset,
                                            const Embedding& embedding);

}  // namespace conceptvec
