#include "radrec/corpus.hpp"

#include <algorithm>
#include <istream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "radrec/utf8.hpp"

namespace radrec::corpus {

using nlohmann::json;

const std::array<Modality, kNumModalities>& all_modalities() {
  static const std::array<Modality, kNumModalities> all = {
      Modality::Angiography, Modality::CT,        Modality::Fluoroscopy,
      Modality::MRI,         Modality::Mammogram, Modality::NuclearMedicine,
      Modality::PortableRadiography, Modality::PET, Modality::Ultrasound,
      Modality::XRay,
  };
  return all;
}

const std::string& modality_name(Modality m) {
  static const std::array<std::string, kNumModalities> names = {
      "Angiography",
      "Computed Tomography",
      "Fluoroscopy",
      "Magnetic Resonance Imaging",
      "Mammogram",
      "Nuclear Medicine",
      "Portable Radiography",
      "Positron emission tomography",
      "Ultrasound",
      "X-Ray",
  };
  return names[static_cast<size_t>(m)];
}

std::optional<Modality> modality_from_string(const std::string& s) {
  static const std::unordered_map<std::string, Modality> table = [] {
    std::unordered_map<std::string, Modality> t;
    for (Modality m : all_modalities()) t.emplace(modality_name(m), m);
    // Short aliases.
    t.emplace("CT", Modality::CT);
    t.emplace("MRI", Modality::MRI);
    t.emplace("NuclearMedicine", Modality::NuclearMedicine);
    t.emplace("PortableRadiography", Modality::PortableRadiography);
    t.emplace("PET", Modality::PET);
    t.emplace("XRay", Modality::XRay);
    return t;
  }();
  auto it = table.find(s);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

const std::string& entity_kind_name(EntityKind k) {
  static const std::array<std::string, 3> names = {"reason", "test", "timeframe"};
  return names[static_cast<size_t>(k)];
}

std::optional<EntityKind> entity_kind_from_string(const std::string& s) {
  if (s == "reason") return EntityKind::Reason;
  if (s == "test") return EntityKind::Test;
  if (s == "timeframe") return EntityKind::Timeframe;
  return std::nullopt;
}

Report report_from_json_line(const std::string& line, size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw RecordError(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw RecordError(line_no, "record is not a JSON object");

  auto str_field = [&](const char* name) -> std::string {
    if (!j.contains(name) || !j[name].is_string())
      throw RecordError(line_no, std::string("missing or non-string field '") + name + "'");
    return j[name].get<std::string>();
  };

  Report r;
  r.report_id = str_field("report_id");
  r.patient_id = str_field("patient_id");
  r.institution = str_field("institution");

  std::string modality = str_field("modality");
  auto m = modality_from_string(modality);
  if (!m) throw RecordError(line_no, "unknown modality '" + modality + "'");
  r.modality = *m;

  std::string ts = str_field("timestamp");
  auto t = timeutil::parse_timestamp(ts);
  if (!t) throw RecordError(line_no, "bad timestamp '" + ts + "' (want YYYY-MM-DDThh:mm:ssZ)");
  r.timestamp = *t;

  r.text = str_field("text");
  if (r.text.empty()) throw RecordError(line_no, "empty report text");
  return r;
}

std::string report_to_json_line(const Report& r) {
  json j;
  j["report_id"] = r.report_id;
  j["patient_id"] = r.patient_id;
  j["institution"] = r.institution;
  j["modality"] = modality_name(r.modality);
  j["timestamp"] = timeutil::format_timestamp(r.timestamp);
  j["text"] = r.text;
  return j.dump();
}

JsonlReader::JsonlReader(std::istream& in, ErrorPolicy policy,
                         std::function<void(const RecordError&)> on_error)
    : in_(in), policy_(policy), on_error_(std::move(on_error)) {}

std::optional<Report> JsonlReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.empty()) continue;
    try {
      return report_from_json_line(line, line_);
    } catch (const RecordError& e) {
      if (policy_ == ErrorPolicy::Abort) throw;
      ++skipped_;
      if (on_error_) on_error_(e);
    }
  }
  return std::nullopt;
}

AnnotatedReport read_brat(const std::string& txt, const std::string& ann) {
  AnnotatedReport out;
  out.report.text = txt;
  const size_t text_len = utf8::length(txt);

  std::istringstream in(ann);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] != 'T')
      throw RecordError(line_no, "expected 'T<id>' annotation line, got '" + line + "'");
    size_t tab1 = line.find('\t');
    if (tab1 == std::string::npos) throw RecordError(line_no, "missing first tab");
    size_t tab2 = line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) throw RecordError(line_no, "missing second tab");

    std::istringstream mid(line.substr(tab1 + 1, tab2 - tab1 - 1));
    std::string label;
    size_t begin = 0, end = 0;
    if (!(mid >> label >> begin >> end)) throw RecordError(line_no, "bad '<label> <begin> <end>'");
    std::string surface = line.substr(tab2 + 1);

    if (begin >= end || end > text_len)
      throw RecordError(line_no, "span [" + std::to_string(begin) + "," + std::to_string(end) +
                                     ") out of bounds for text of length " +
                                     std::to_string(text_len));
    std::string slice = utf8::slice(txt, begin, end);
    if (slice != surface)
      throw RecordError(line_no, "surface '" + surface + "' does not match text slice '" + slice +
                                     "'");

    if (label == "recommendation") {
      out.rec_sentence_spans.push_back({begin, end});
    } else {
      auto kind = entity_kind_from_string(label);
      if (!kind) throw RecordError(line_no, "unknown label '" + label + "'");
      out.entities.push_back(EntitySpan{*kind, begin, end, surface});
    }
  }
  return out;
}

BratFiles write_brat(const AnnotatedReport& annotated) {
  BratFiles files;
  files.txt = annotated.report.text;
  std::ostringstream ann;
  size_t id = 1;
  for (const CharRange& s : annotated.rec_sentence_spans) {
    ann << 'T' << id++ << "\trecommendation " << s.begin << ' ' << s.end << '\t'
        << utf8::slice(files.txt, s.begin, s.end) << '\n';
  }
  for (const EntitySpan& e : annotated.entities) {
    ann << 'T' << id++ << '\t' << entity_kind_name(e.kind) << ' ' << e.begin << ' ' << e.end
        << '\t' << e.text << '\n';
  }
  files.ann = ann.str();
  return files;
}

static std::string ascii_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool prefilter(const Report& report, const std::vector<std::string>& keywords) {
  std::string lower = ascii_lower(report.text);
  for (const std::string& kw : keywords) {
    if (!kw.empty() && lower.find(kw) != std::string::npos) return true;
  }
  return false;
}

const std::vector<std::string>& default_prefilter_keywords() {
  static const std::vector<std::string> kw = {
      "recommend", "follow-up", "follow up", "suggested", "advised", "further evaluation",
  };
  return kw;
}

}  // namespace radrec::corpus
