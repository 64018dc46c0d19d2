#pragma once

// PubTator-format ingestion and corpus normalization: parse annotated
// abstracts, rewrite every annotated mention into a single concept token,
// and tokenize the surrounding text.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace conceptvec {

enum class ConceptType { Gene, Mutation, Disease, Chemical, CellLine, Species };

std::string_view concept_type_name(ConceptType type);

// Recognizes the six canonical type names plus the mutation subtype labels
// some taggers emit (DNAMutation, ProteinMutation, SNP -> Mutation).
std::optional<ConceptType> parse_concept_type(std::string_view name);

struct RawDocument {
  std::string doc_id;   // PMID
  std::string title;
  std::string abstract; // may be empty
  std::string text;     // title + ' ' + abstract; annotation offsets index this
};

struct ConceptAnnotation {
  std::string doc_id;
  size_t start = 0;  // byte offset into RawDocument::text, inclusive
  size_t end = 0;    // exclusive; text[start..end) == mention
  std::string mention;
  ConceptType type = ConceptType::Gene;
  std::string concept_id;  // e.g. "MESH:C539933", "2099", "9606"
};

struct ParsedDocument {
  RawDocument doc;
  std::vector<ConceptAnnotation> annotations;  // sorted by start offset
};

struct ParseReport {
  uint64_t documents = 0;
  uint64_t annotations_kept = 0;
  uint64_t dropped_offset_mismatch = 0;  // mention != text[start..end)
  uint64_t dropped_missing_id = 0;       // empty or "-" identifier
  uint64_t dropped_unknown_type = 0;
  uint64_t multi_id_truncated = 0;       // "id1;id2" kept only id1
  uint64_t blocks_skipped = 0;
  std::vector<std::string> block_errors;

  std::string to_key_value() const;
};

// Structural failure inside one block (missing t/a line, PMID mismatch,
// unparseable annotation fields).
class BlockError : public std::runtime_error {
 public:
  BlockError(std::string doc_id, size_t line, const std::string& message);
  const std::string& doc_id() const { return doc_id_; }
  size_t line() const { return line_; }

 private:
  std::string doc_id_;
  size_t line_;
};

enum class OnBlockError { Abort, Skip };

// Input: blocks separated by blank lines; each block is a `PMID|t|` line, a
// `PMID|a|` line, then zero or more tab-separated annotation lines
// `PMID<TAB>start<TAB>end<TAB>mention<TAB>type<TAB>id`. Content-level
// problems (offset mismatch, missing id, unknown type) drop the annotation
// and bump the matching report counter; structural problems raise BlockError
// (Abort) or skip the block and record it (Skip).
std::vector<ParsedDocument> parse_pubtator(std::istream& in, ParseReport& report,
                                           OnBlockError on_error = OnBlockError::Abort);

// Inverse of parse_pubtator for one block, without a trailing blank line.
std::string serialize_pubtator(const ParsedDocument& doc);

// Every character outside [A-Za-z0-9] becomes '_'.
std::string sanitize_concept_id(std::string_view id);

// (Disease, "MESH:D008288") -> "Disease_MESH_D008288"
std::string make_concept_token(ConceptType type, std::string_view concept_id);

// Prefix test against ^(Gene|Mutation|Disease|Chemical|CellLine|Species)_
bool is_concept_token(std::string_view token);
std::optional<ConceptType> concept_token_type(std::string_view token);

// Lowercases ordinary text, splits on whitespace, breaks the punctuation
// characters .,;:!?()[]{}" into standalone tokens, keeps intra-word hyphens,
// slashes and digits attached. Concept tokens pass through verbatim.
std::vector<std::string> tokenize(std::string_view text);

struct NormalizedDocument {
  std::string doc_id;
  std::vector<std::string> tokens;
  size_t concept_token_count = 0;
};

// Longest span wins; ties go to the smaller start offset, then to the
// lexicographically smaller concept token. Result is sorted by start.
std::vector<ConceptAnnotation> resolve_overlaps(std::vector<ConceptAnnotation> annotations);

// Replaces surviving spans right-to-left with their concept tokens (padded
// with spaces so neighbouring characters cannot glue onto them), then runs
// tokenize over the rewritten text.
NormalizedDocument normalize_document(const RawDocument& doc,
                                      const std::vector<ConceptAnnotation>& annotations);

}  // namespace conceptvec
