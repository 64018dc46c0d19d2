#include "conceptvec/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "conceptvec/corpus.hpp"
#include "conceptvec/util.hpp"

namespace conceptvec {

std::optional<size_t> Embedding::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Embedding::rebuild_index() {
  index_.clear();
  for (size_t i = 0; i < tokens.size(); ++i) {
    auto [it, inserted] = index_.emplace(tokens[i], i);
    if (!inserted) throw std::runtime_error("duplicate embedding token: " + tokens[i]);
  }
}

namespace {

void validate_for_save(const Embedding& e) {
  if (e.size() == 0 || e.dimension == 0)
    throw std::runtime_error("cannot save an empty embedding");
  if (e.vectors.size() != e.size() * e.dimension)
    throw std::runtime_error("embedding vector storage does not match token count");
  bool any_nonzero = false;
  for (float v : e.vectors) {
    if (!std::isfinite(v)) throw std::runtime_error("embedding contains a non-finite value");
    if (v != 0.0f) any_nonzero = true;
  }
  if (!any_nonzero) throw std::runtime_error("embedding has no non-zero vector");
}

}  // namespace

void save_text(const Embedding& embedding, std::ostream& out) {
  validate_for_save(embedding);
  out << embedding.size() << ' ' << embedding.dimension << '\n';
  char buf[32];
  for (size_t i = 0; i < embedding.size(); ++i) {
    out << embedding.tokens[i];
    auto row = embedding.row(i);
    for (float v : row) {
      std::snprintf(buf, sizeof(buf), " %.6g", static_cast<double>(v));
      out << buf;
    }
    out << '\n';
  }
}

void save_text(const Embedding& embedding, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  save_text(embedding, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Embedding load_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("embedding file line 1: missing '<count> <dim>' header");
  size_t count = 0, dim = 0;
  {
    std::istringstream hs(line);
    std::string extra;
    if (!(hs >> count >> dim) || (hs >> extra) || count == 0 || dim == 0)
      throw std::runtime_error("embedding file line 1: malformed '<count> <dim>' header");
  }

  Embedding e;
  e.dimension = dim;
  e.tokens.reserve(count);
  e.vectors.reserve(count * dim);

  size_t line_no = 1;
  while (e.tokens.size() < count) {
    if (!std::getline(in, line)) {
      throw std::runtime_error("embedding file line " + std::to_string(line_no + 1) +
                               ": expected " + std::to_string(count) + " vector rows, found " +
                               std::to_string(e.tokens.size()));
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_whitespace(line);
    if (fields.size() != dim + 1)
      throw std::runtime_error("embedding file line " + std::to_string(line_no) + ": expected " +
                               std::to_string(dim + 1) + " fields, found " +
                               std::to_string(fields.size()));
    e.tokens.emplace_back(fields[0]);
    for (size_t j = 1; j <= dim; ++j) {
      std::string field(fields[j]);
      char* end = nullptr;
      float v = std::strtof(field.c_str(), &end);
      if (end != field.c_str() + field.size() || !std::isfinite(v))
        throw std::runtime_error("embedding file line " + std::to_string(line_no) +
                                 ": non-finite or unparseable value '" + field + "'");
      e.vectors.push_back(v);
    }
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty())
      throw std::runtime_error("embedding file line " + std::to_string(line_no) +
                               ": more rows than the header declares");
  }

  try {
    e.rebuild_index();
  } catch (const std::runtime_error& err) {
    throw std::runtime_error(std::string("embedding file: ") + err.what());
  }
  bool any_nonzero = std::any_of(e.vectors.begin(), e.vectors.end(),
                                 [](float v) { return v != 0.0f; });
  if (!any_nonzero) throw std::runtime_error("embedding file: all vectors are zero");
  return e;
}

Embedding load_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  return load_text(in);
}

namespace {

template <typename T>
double cosine_impl(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0, nu = 0, nv = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    double a = static_cast<double>(u[i]);
    double b = static_cast<double>(v[i]);
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("cosine: zero vector");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double cosine(std::span<const float> u, std::span<const float> v) { return cosine_impl(u, v); }
double cosine(std::span<const double> u, std::span<const double> v) { return cosine_impl(u, v); }

UnknownTokenError::UnknownTokenError(std::string_view token, std::vector<std::string> hints)
    : std::runtime_error([&] {
        std::string msg = "unknown token '" + std::string(token) + "'";
        if (!hints.empty()) {
          msg += "; closest vocabulary entries:";
          for (const auto& h : hints) msg += ' ' + h;
        }
        return msg;
      }()),
      hints_(std::move(hints)) {}

std::vector<Neighbor> nearest_neighbors(const Embedding& embedding, std::string_view token,
                                        size_t k, std::string_view type_filter) {
  auto qi = embedding.find(token);
  if (!qi) {
    std::vector<std::pair<size_t, std::string>> scored;
    for (const auto& t : embedding.tokens) scored.emplace_back(edit_distance(token, t), t);
    std::sort(scored.begin(), scored.end());
    std::vector<std::string> hints;
    for (size_t i = 0; i < scored.size() && i < 5; ++i) hints.push_back(scored[i].second);
    throw UnknownTokenError(token, std::move(hints));
  }

  auto query = embedding.row(*qi);
  std::vector<Neighbor> result;
  for (size_t i = 0; i < embedding.size(); ++i) {
    if (i == *qi) continue;
    if (!type_filter.empty() && !std::string_view(embedding.tokens[i]).starts_with(type_filter))
      continue;
    auto row = embedding.row(i);
    bool zero = std::all_of(row.begin(), row.end(), [](float v) { return v == 0.0f; });
    if (zero) continue;  // unrankable
    result.push_back({embedding.tokens[i], cosine(query, row)});
  }
  std::sort(result.begin(), result.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.token < b.token;
  });
  if (result.size() > k) result.resize(k);
  return result;
}

AvgWordVector avg_word_vector(std::string_view concept_name, const Embedding& word_embedding) {
  AvgWordVector out;
  out.vector.assign(word_embedding.dimension, 0.0f);
  std::vector<double> acc(word_embedding.dimension, 0.0);
  for (const auto& name_token : tokenize(concept_name)) {
    auto idx = word_embedding.find(name_token);
    if (!idx) {
      ++out.skipped_tokens;
      continue;
    }
    auto row = word_embedding.row(*idx);
    for (size_t j = 0; j < row.size(); ++j) acc[j] += static_cast<double>(row[j]);
    ++out.used_tokens;
  }
  if (out.used_tokens == 0)
    throw std::runtime_error("no token of concept name '" + std::string(concept_name) +
                             "' is in the word embedding");
  for (size_t j = 0; j < acc.size(); ++j)
    out.vector[j] = static_cast<float>(acc[j] / static_cast<double>(out.used_tokens));
  return out;
}

CoverageReport coverage_report(const Embedding& embedding,
                               const std::vector<std::string>& reference_ids) {
  CoverageReport report;
  std::unordered_map<std::string, size_t, TransparentStringHash, std::equal_to<>> concept_tokens;
  for (size_t i = 0; i < embedding.size(); ++i) {
    auto type = concept_token_type(embedding.tokens[i]);
    if (!type) continue;
    ++report.per_type[std::string(concept_type_name(*type))];
    ++report.embedding_concepts;
    concept_tokens.emplace(embedding.tokens[i], i);
  }

  std::vector<std::string> distinct(reference_ids);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  report.reference_size = distinct.size();
  size_t missing_from_embedding = 0;
  for (const auto& id : distinct) {
    if (concept_tokens.contains(id))
      ++report.intersection;
    else
      ++missing_from_embedding;
  }
  report.union_size = report.embedding_concepts + missing_from_embedding;
  return report;
}

std::string CoverageReport::to_tsv() const {
  std::ostringstream out;
  for (const auto& [type, count] : per_type) out << type << '\t' << count << '\n';
  out << "embedding_concepts\t" << embedding_concepts << '\n'
      << "reference_size\t" << reference_size << '\n'
      << "intersection\t" << intersection << '\n'
      << "union\t" << union_size << '\n'
      << "fraction\t" << fraction() << '\n';
  return out.str();
}

}  // namespace conceptvec
