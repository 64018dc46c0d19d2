#include "conceptvec/corpus.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <sstream>

#include "conceptvec/util.hpp"

namespace conceptvec {

namespace {

constexpr std::array<std::string_view, 6> kTypeNames = {
    "Gene", "Mutation", "Disease", "Chemical", "CellLine", "Species"};

constexpr std::string_view kSplitPunct = ".,;:!?()[]{}\"";

bool is_split_punct(char c) { return kSplitPunct.find(c) != std::string_view::npos; }

bool parse_size(std::string_view s, size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::string_view concept_type_name(ConceptType type) {
  return kTypeNames[static_cast<size_t>(type)];
}

std::optional<ConceptType> parse_concept_type(std::string_view name) {
  for (size_t i = 0; i < kTypeNames.size(); ++i)
    if (name == kTypeNames[i]) return static_cast<ConceptType>(i);
  if (name == "DNAMutation" || name == "ProteinMutation" || name == "SNP")
    return ConceptType::Mutation;
  return std::nullopt;
}

BlockError::BlockError(std::string doc_id, size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) +
                         (doc_id.empty() ? "" : " (PMID " + doc_id + ")") + ": " + message),
      doc_id_(std::move(doc_id)),
      line_(line) {}

std::string ParseReport::to_key_value() const {
  std::ostringstream out;
  out << "documents=" << documents << '\n'
      << "annotations_kept=" << annotations_kept << '\n'
      << "dropped_offset_mismatch=" << dropped_offset_mismatch << '\n'
      << "dropped_missing_id=" << dropped_missing_id << '\n'
      << "dropped_unknown_type=" << dropped_unknown_type << '\n'
      << "multi_id_truncated=" << multi_id_truncated << '\n'
      << "blocks_skipped=" << blocks_skipped << '\n';
  return out.str();
}

namespace {

struct BlockLine {
  std::string text;
  size_t number;  // 1-based line number in the input
};

// Expects "pmid|t|title" / "pmid|a|abstract"; returns {pmid, payload}.
std::optional<std::pair<std::string_view, std::string_view>> parse_text_line(
    std::string_view line, char tag) {
  size_t p1 = line.find('|');
  if (p1 == std::string_view::npos || p1 + 2 >= line.size()) return std::nullopt;
  if (line[p1 + 1] != tag || line[p1 + 2] != '|') return std::nullopt;
  return std::make_pair(line.substr(0, p1), line.substr(p1 + 3));
}

ParsedDocument parse_block(const std::vector<BlockLine>& lines, ParseReport& report) {
  const auto& first = lines.front();
  auto title = parse_text_line(first.text, 't');
  if (!title) throw BlockError("", first.number, "expected a 'PMID|t|' title line");
  std::string pmid(title->first);
  if (pmid.empty()) throw BlockError("", first.number, "empty PMID on title line");

  if (lines.size() < 2)
    throw BlockError(pmid, first.number + 1, "block truncated: missing 'PMID|a|' abstract line");
  const auto& second = lines[1];
  auto abst = parse_text_line(second.text, 'a');
  if (!abst) throw BlockError(pmid, second.number, "expected a 'PMID|a|' abstract line");
  if (abst->first != pmid)
    throw BlockError(pmid, second.number, "PMID mismatch between title and abstract lines");

  ParsedDocument out;
  out.doc.doc_id = pmid;
  out.doc.title = std::string(title->second);
  out.doc.abstract = std::string(abst->second);
  out.doc.text = out.doc.title + ' ' + out.doc.abstract;

  for (size_t i = 2; i < lines.size(); ++i) {
    const auto& line = lines[i];
    auto fields = split(line.text, '\t');
    if (fields.size() < 6)
      throw BlockError(pmid, line.number, "annotation line has fewer than 6 tab-separated fields");
    if (fields[0] != pmid)
      throw BlockError(pmid, line.number, "PMID mismatch on annotation line");

    size_t start = 0, end = 0;
    if (!parse_size(fields[1], start) || !parse_size(fields[2], end))
      throw BlockError(pmid, line.number, "non-numeric annotation offsets");

    std::string_view id = trim(fields[5]);
    if (id.empty() || id == "-") {
      ++report.dropped_missing_id;
      continue;
    }
    if (auto semi = id.find(';'); semi != std::string_view::npos) {
      id = id.substr(0, semi);
      ++report.multi_id_truncated;
      if (id.empty()) {
        ++report.dropped_missing_id;
        continue;
      }
    }

    auto type = parse_concept_type(fields[4]);
    if (!type) {
      ++report.dropped_unknown_type;
      continue;
    }

    std::string_view mention = fields[3];
    if (start >= end || end > out.doc.text.size() ||
        std::string_view(out.doc.text).substr(start, end - start) != mention) {
      ++report.dropped_offset_mismatch;
      continue;
    }

    ConceptAnnotation ann;
    ann.doc_id = pmid;
    ann.start = start;
    ann.end = end;
    ann.mention = std::string(mention);
    ann.type = *type;
    ann.concept_id = std::string(id);
    out.annotations.push_back(std::move(ann));
    ++report.annotations_kept;
  }

  std::stable_sort(out.annotations.begin(), out.annotations.end(),
                   [](const ConceptAnnotation& a, const ConceptAnnotation& b) {
                     return a.start != b.start ? a.start < b.start : a.end < b.end;
                   });
  return out;
}

}  // namespace

std::vector<ParsedDocument> parse_pubtator(std::istream& in, ParseReport& report,
                                           OnBlockError on_error) {
  std::vector<ParsedDocument> docs;
  std::vector<BlockLine> block;
  std::string line;
  size_t line_number = 0;

  auto flush = [&]() {
    if (block.empty()) return;
    // Counters touched before a structural error must not leak into the
    // report when the block is discarded.
    ParseReport attempt;
    try {
      ParsedDocument doc = parse_block(block, attempt);
      report.annotations_kept += attempt.annotations_kept;
      report.dropped_offset_mismatch += attempt.dropped_offset_mismatch;
      report.dropped_missing_id += attempt.dropped_missing_id;
      report.dropped_unknown_type += attempt.dropped_unknown_type;
      report.multi_id_truncated += attempt.multi_id_truncated;
      ++report.documents;
      docs.push_back(std::move(doc));
    } catch (const BlockError& e) {
      if (on_error == OnBlockError::Abort) throw;
      ++report.blocks_skipped;
      report.block_errors.push_back(e.what());
    }
    block.clear();
  };

  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      flush();
    } else {
      block.push_back({line, line_number});
    }
  }
  flush();
  return docs;
}

std::string serialize_pubtator(const ParsedDocument& doc) {
  std::ostringstream out;
  out << doc.doc.doc_id << "|t|" << doc.doc.title << '\n'
      << doc.doc.doc_id << "|a|" << doc.doc.abstract << '\n';
  for (const auto& ann : doc.annotations) {
    out << ann.doc_id << '\t' << ann.start << '\t' << ann.end << '\t' << ann.mention << '\t'
        << concept_type_name(ann.type) << '\t' << ann.concept_id << '\n';
  }
  return out.str();
}

std::string sanitize_concept_id(std::string_view id) {
  std::string out(id);
  for (char& c : out) {
    bool alnum = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    if (!alnum) c = '_';
  }
  return out;
}

std::string make_concept_token(ConceptType type, std::string_view concept_id) {
  std::string out(concept_type_name(type));
  out += '_';
  out += sanitize_concept_id(concept_id);
  return out;
}

bool is_concept_token(std::string_view token) {
  return concept_token_type(token).has_value();
}

std::optional<ConceptType> concept_token_type(std::string_view token) {
  for (size_t i = 0; i < kTypeNames.size(); ++i) {
    const auto& name = kTypeNames[i];
    if (token.size() > name.size() && token[name.size()] == '_' &&
        token.substr(0, name.size()) == name)
      return static_cast<ConceptType>(i);
  }
  return std::nullopt;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  auto flush_segment = [&](std::string_view seg) {
    if (seg.empty()) return;
    if (is_concept_token(seg))
      out.emplace_back(seg);
    else
      out.push_back(ascii_lower(seg));
  };

  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    size_t seg_start = i;
    while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) {
      if (is_split_punct(text[i])) {
        flush_segment(text.substr(seg_start, i - seg_start));
        out.emplace_back(1, text[i]);
        seg_start = i + 1;
      }
      ++i;
    }
    flush_segment(text.substr(seg_start, i - seg_start));
  }
  return out;
}

std::vector<ConceptAnnotation> resolve_overlaps(std::vector<ConceptAnnotation> annotations) {
  std::sort(annotations.begin(), annotations.end(),
            [](const ConceptAnnotation& a, const ConceptAnnotation& b) {
              size_t la = a.end - a.start, lb = b.end - b.start;
              if (la != lb) return la > lb;
              if (a.start != b.start) return a.start < b.start;
              return make_concept_token(a.type, a.concept_id) <
                     make_concept_token(b.type, b.concept_id);
            });
  std::vector<ConceptAnnotation> kept;
  for (auto& ann : annotations) {
    bool overlaps = false;
    for (const auto& k : kept) {
      if (ann.start < k.end && k.start < ann.end) {
        overlaps = true;
        break;
      }
    }
    if (!overlaps) kept.push_back(std::move(ann));
  }
  std::sort(kept.begin(), kept.end(),
            [](const ConceptAnnotation& a, const ConceptAnnotation& b) {
              return a.start < b.start;
            });
  return kept;
}

NormalizedDocument normalize_document(const RawDocument& doc,
                                      const std::vector<ConceptAnnotation>& annotations) {
  auto surviving = resolve_overlaps(annotations);
  std::string text = doc.text;
  for (auto it = surviving.rbegin(); it != surviving.rend(); ++it) {
    std::string replacement = ' ' + make_concept_token(it->type, it->concept_id) + ' ';
    text.replace(it->start, it->end - it->start, replacement);
  }
  NormalizedDocument out;
  out.doc_id = doc.doc_id;
  out.tokens = tokenize(text);
  for (const auto& t : out.tokens)
    if (is_concept_token(t)) ++out.concept_token_count;
  return out;
}

}  // namespace conceptvec
