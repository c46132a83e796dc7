#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "radrec/timeutil.hpp"

namespace radrec::corpus {

enum class Modality {
  Angiography,
  CT,
  Fluoroscopy,
  MRI,
  Mammogram,
  NuclearMedicine,
  PortableRadiography,
  PET,
  Ultrasound,
  XRay,
};

inline constexpr size_t kNumModalities = 10;

// Canonical file strings are the long names; the short identifiers are
// accepted on input as aliases.
const std::array<Modality, kNumModalities>& all_modalities();
const std::string& modality_name(Modality m);
std::optional<Modality> modality_from_string(const std::string& s);

struct Report {
  std::string report_id;
  std::string patient_id;
  std::string institution;
  Modality modality = Modality::CT;
  timeutil::EpochSeconds timestamp = 0;
  std::string text;
};

enum class EntityKind { Reason, Test, Timeframe };

const std::string& entity_kind_name(EntityKind k);
std::optional<EntityKind> entity_kind_from_string(const std::string& s);

// A typed character span. Offsets count Unicode scalar values into the
// report text; `text` always equals the slice [begin, end).
struct EntitySpan {
  EntityKind kind = EntityKind::Test;
  size_t begin = 0;
  size_t end = 0;
  std::string text;

  bool operator==(const EntitySpan&) const = default;
};

struct CharRange {
  size_t begin = 0;
  size_t end = 0;
  bool operator==(const CharRange&) const = default;
};

struct AnnotatedReport {
  Report report;
  std::vector<CharRange> rec_sentence_spans;
  std::vector<EntitySpan> entities;
};

// Record-level ingestion error: carries the 1-based line number.
struct RecordError : std::runtime_error {
  RecordError(size_t line_arg, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_arg) + ": " + what), line(line_arg) {}
  size_t line;
};

enum class ErrorPolicy { Abort, Skip };

// Streaming JSONL reader; holds one record at a time. With ErrorPolicy::Skip,
// malformed lines are counted and reported through the optional sink instead
// of throwing.
class JsonlReader {
 public:
  explicit JsonlReader(std::istream& in, ErrorPolicy policy = ErrorPolicy::Abort,
                       std::function<void(const RecordError&)> on_error = nullptr);

  // Next report, or nullopt at end of stream.
  std::optional<Report> next();

  size_t lines_read() const { return line_; }
  size_t skipped() const { return skipped_; }

 private:
  std::istream& in_;
  ErrorPolicy policy_;
  std::function<void(const RecordError&)> on_error_;
  size_t line_ = 0;
  size_t skipped_ = 0;
};

std::string report_to_json_line(const Report& r);
// Parses one JSONL record; throws RecordError on schema violations.
Report report_from_json_line(const std::string& line, size_t line_no);

// BRAT standoff: "T<id>\t<label> <begin> <end>\t<surface>" per line, offsets
// in Unicode scalar values. The `recommendation` label marks sentence spans;
// reason/test/timeframe become entities.
AnnotatedReport read_brat(const std::string& txt, const std::string& ann);

struct BratFiles {
  std::string txt;
  std::string ann;
};
BratFiles write_brat(const AnnotatedReport& annotated);

// True iff any keyword occurs case-insensitively in the report text.
// Stand-in for the sampling classifier used to enrich annotation batches.
bool prefilter(const Report& report, const std::vector<std::string>& keywords);

const std::vector<std::string>& default_prefilter_keywords();

}  // namespace radrec::corpus
