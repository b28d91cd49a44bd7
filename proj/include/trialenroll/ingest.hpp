#pragma once

// Registry ingestion: legacy ClinicalTrials.gov XML and canonical JSONL into
// validated TrialRecords, label derivation, temporal splitting and dataset
// summaries.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "json.hpp"
#include "trialenroll/common.hpp"

namespace trialenroll {

enum class Gender { All = 0, Female = 1, Male = 2 };
enum class Phase { I = 0, II = 1, III = 2, IV = 3 };

inline constexpr std::string_view kGenderNames[] = {"All", "Female", "Male"};
inline constexpr std::string_view kPhaseNames[] = {"I", "II", "III", "IV"};

inline std::string_view to_string(Gender g) { return kGenderNames[static_cast<int>(g)]; }
inline std::string_view to_string(Phase p) { return kPhaseNames[static_cast<int>(p)]; }

struct TrialRecord {
  std::string nct_id;
  std::vector<std::string> drugs;
  std::vector<std::string> diseases;
  std::vector<std::string> inclusion;
  std::vector<std::string> exclusion;
  Gender gender = Gender::All;
  double min_age_years = -1.0;
  double max_age_years = -1.0;
  std::optional<Phase> phase;
  std::vector<std::string> countries;
  std::vector<std::string> states;
  std::vector<std::string> cities;
  std::optional<Date> start_date;
  std::optional<Date> completion_date;
  std::string status_raw;
  std::string stop_reason;
  std::optional<int> label;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct Rejection {
  std::string nct_id;
  std::string reason;
  std::string detail;
};

// Age strings that failed to parse and similar soft issues.
struct IngestCounters {
  int age_warnings = 0;
};

namespace detail {

inline bool is_nct_id(std::string_view id) {
  if (id.size() != 11 || id.substr(0, 3) != "NCT") return false;
  return std::all_of(id.begin() + 3, id.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace detail

// Throws InvalidRecord on the first broken invariant.
inline void validate(const TrialRecord& r) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::InvalidRecord, r.nct_id + ": " + what);
  };
  if (!detail::is_nct_id(r.nct_id)) fail("nct_id does not match NCT########");
  for (const auto* list : {&r.inclusion, &r.exclusion}) {
    for (const auto& s : *list) {
      if (detail::trim(s).empty()) fail("empty criterion sentence");
    }
  }
  for (double age : {r.min_age_years, r.max_age_years}) {
    if (!(age == -1.0 || age >= 0.0)) fail("age must be -1 or >= 0");
  }
  if (r.label && *r.label != 0 && *r.label != 1) fail("label must be 0 or 1");
}

// ---------------------------------------------------------------------------
// Field parsers

// "18 Years" -> 18, "6 Months" -> 0.5, "N/A" or empty -> -1. Anything else
// is -1 and bumps the warning counter.
inline double parse_age_years(std::string_view raw, IngestCounters* counters = nullptr) {
  const std::string s = detail::to_lower(detail::trim(raw));
  if (s.empty() || s == "n/a" || s == "na" || s == "none") return -1.0;
  auto warn = [&] {
    if (counters) ++counters->age_warnings;
    return -1.0;
  };
  std::istringstream in(s);
  double value = 0.0;
  std::string unit;
  if (!(in >> value) || !(in >> unit) || value < 0.0 || !std::isfinite(value)) return warn();
  std::string extra;
  if (in >> extra) return warn();
  if (unit.back() == 's') unit.pop_back();
  if (unit == "year") return value;
  if (unit == "month") return value / 12.0;
  if (unit == "week") return value * 7.0 / 365.25;
  if (unit == "day") return value / 365.25;
  if (unit == "hour") return value / (365.25 * 24.0);
  if (unit == "minute") return value / (365.25 * 24.0 * 60.0);
  return warn();
}

// "Phase 2", "Phase 1/Phase 2" (highest listed wins), "Early Phase 1", "II".
inline std::optional<Phase> parse_phase(std::string_view raw) {
  std::optional<Phase> best;
  std::string s = detail::to_lower(raw);
  std::size_t start = 0;
  while (start <= s.size()) {
    auto slash = s.find('/', start);
    if (slash == std::string::npos) slash = s.size();
    std::string part = detail::trim(std::string_view(s).substr(start, slash - start));
    if (part.rfind("early ", 0) == 0) part = detail::trim(part.substr(6));
    if (part.rfind("phase", 0) == 0) part = detail::trim(part.substr(5));
    std::optional<Phase> p;
    if (part == "1" || part == "i") p = Phase::I;
    if (part == "2" || part == "ii") p = Phase::II;
    if (part == "3" || part == "iii") p = Phase::III;
    if (part == "4" || part == "iv") p = Phase::IV;
    if (p && (!best || *p > *best)) best = p;
    start = slash + 1;
  }
  return best;
}

inline Gender parse_gender(std::string_view raw) {
  const std::string s = detail::to_lower(detail::trim(raw));
  if (s == "female") return Gender::Female;
  if (s == "male") return Gender::Male;
  return Gender::All;
}

namespace detail {

// Leading list marker length: "-", "*", "•", "·", "1.", "12)", "a)", "(a)".
inline std::size_t marker_length(std::string_view line) {
  if (line.empty()) return 0;
  auto followed_by_space = [&](std::size_t n) {
    return n == line.size() || is_space(line[n]) ? n : std::size_t{0};
  };
  if (line[0] == '-' || line[0] == '*' || line[0] == '+') return followed_by_space(1);
  if (line.substr(0, 3) == "\xE2\x80\xA2") return followed_by_space(3);  // •
  if (line.substr(0, 2) == "\xC2\xB7") return followed_by_space(2);      // ·
  std::size_t i = 0;
  if (line[0] == '(') i = 1;
  std::size_t j = i;
  while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
  if (j == i && j < line.size() && std::isalpha(static_cast<unsigned char>(line[j])) &&
      j + 1 < line.size() && line[j + 1] == ')') {
    return followed_by_space(j + 2);
  }
  if (j > i && j < line.size() && (line[j] == '.' || line[j] == ')')) {
    return followed_by_space(j + 1);
  }
  return 0;
}

inline std::string clean_sentence(std::string_view raw) {
  std::string s = trim(raw);
  for (std::size_t n; (n = marker_length(s)) > 0;) s = trim(std::string_view(s).substr(n));
  while (!s.empty() && (s.back() == '.' || s.back() == ';' || s.back() == ',' ||
                        s.back() == ':' || is_space(s.back()))) {
    s.pop_back();
  }
  return s;
}

inline bool has_alnum(std::string_view s) {
  return std::any_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

inline std::vector<std::string> split_section(std::string_view section) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= section.size()) {
    auto nl = section.find('\n', start);
    if (nl == std::string_view::npos) nl = section.size();
    lines.push_back(trim(section.substr(start, nl - start)));
    start = nl + 1;
  }
  const bool bulleted = std::any_of(lines.begin(), lines.end(),
                                    [](const std::string& l) { return marker_length(l) > 0; });
  // In bulleted sections an unmarked line directly under another line is a
  // hard-wrapped continuation of the same criterion.
  std::vector<std::string> items;
  bool previous_blank = true;
  for (const auto& line : lines) {
    if (line.empty()) {
      previous_blank = true;
      continue;
    }
    if (bulleted && !previous_blank && marker_length(line) == 0 && !items.empty()) {
      items.back() += ' ';
      items.back() += line;
    } else {
      items.push_back(line);
    }
    previous_blank = false;
  }
  std::vector<std::string> sentences;
  for (const auto& item : items) {
    std::size_t s = 0;
    while (s <= item.size()) {
      auto semi = item.find(';', s);
      if (semi == std::string::npos) semi = item.size();
      std::string sentence = clean_sentence(std::string_view(item).substr(s, semi - s));
      if (has_alnum(sentence)) sentences.push_back(std::move(sentence));
      s = semi + 1;
    }
  }
  return sentences;
}

}  // namespace detail

struct SegmentedCriteria {
  std::vector<std::string> inclusion;
  std::vector<std::string> exclusion;
};

// Splits an eligibility textblock at "Inclusion Criteria" / "Exclusion
// Criteria" headers (case-insensitive; a header counts when it opens a line
// or is followed by a colon). Text before any header is treated as inclusion.
inline SegmentedCriteria segment_criteria(std::string_view text) {
  struct Header {
    std::size_t begin, end;
    bool inclusion;
  };
  const std::string lower = detail::to_lower(text);
  std::vector<Header> headers;
  for (auto [needle, is_inc] : {std::pair{std::string_view("inclusion criteria"), true},
                                std::pair{std::string_view("exclusion criteria"), false}}) {
    for (auto pos = lower.find(needle); pos != std::string::npos;
         pos = lower.find(needle, pos + 1)) {
      std::size_t end = pos + needle.size();
      std::size_t after = end;
      while (after < lower.size() && (lower[after] == ' ' || lower[after] == '\t')) ++after;
      const bool colon = after < lower.size() && lower[after] == ':';
      std::size_t before = pos;
      while (before > 0 && (lower[before - 1] == ' ' || lower[before - 1] == '\t')) --before;
      const bool line_start = before == 0 || lower[before - 1] == '\n';
      if (!colon && !line_start) continue;
      if (colon) end = after + 1;
      headers.push_back({pos, end, is_inc});
    }
  }
  std::sort(headers.begin(), headers.end(),
            [](const Header& a, const Header& b) { return a.begin < b.begin; });

  SegmentedCriteria out;
  auto append = [&](std::string_view section, bool inclusion) {
    auto sentences = detail::split_section(section);
    auto& dst = inclusion ? out.inclusion : out.exclusion;
    dst.insert(dst.end(), sentences.begin(), sentences.end());
  };
  const std::size_t preamble_end = headers.empty() ? text.size() : headers.front().begin;
  append(text.substr(0, preamble_end), true);
  for (std::size_t i = 0; i < headers.size(); ++i) {
    const std::size_t stop = i + 1 < headers.size() ? headers[i + 1].begin : text.size();
    if (headers[i].end < stop) {
      append(text.substr(headers[i].end, stop - headers[i].end), headers[i].inclusion);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// XML

namespace detail {

using boost::property_tree::ptree;

inline std::string child_text(const ptree& node, const std::string& path) {
  if (auto v = node.get_optional<std::string>(path)) return trim(*v);
  return {};
}

inline void push_unique(std::vector<std::string>& list, std::string value) {
  if (value.empty()) return;
  if (std::find(list.begin(), list.end(), value) == list.end()) list.push_back(std::move(value));
}

}  // namespace detail

using ParseResult = std::variant<TrialRecord, Rejection>;

// Maps one legacy-schema <clinical_study> document onto a TrialRecord.
// The phase is left empty when the registry says "N/A"; finalize_records()
// drops such trials.
inline ParseResult parse_registry_xml(std::string_view xml, IngestCounters* counters = nullptr) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, doc, pt::xml_parser::no_comments);
  } catch (const pt::xml_parser_error& e) {
    return Rejection{"", "MalformedXml", e.what()};
  }
  const auto study_opt = doc.get_child_optional("clinical_study");
  if (!study_opt) return Rejection{"", "MalformedXml", "missing <clinical_study> root"};
  const pt::ptree& study = *study_opt;

  TrialRecord r;
  r.nct_id = detail::child_text(study, "id_info.nct_id");
  if (r.nct_id.empty()) return Rejection{"", "MissingRequiredField", "nct_id"};
  if (!detail::is_nct_id(r.nct_id)) {
    return Rejection{r.nct_id, "InvalidRecord", "nct_id does not match NCT########"};
  }

  for (const auto& [tag, node] : study) {
    if (tag == "intervention") {
      if (detail::iequals(detail::child_text(node, "intervention_type"), "Drug")) {
        detail::push_unique(r.drugs, detail::child_text(node, "intervention_name"));
      }
    } else if (tag == "condition") {
      detail::push_unique(r.diseases, detail::trim(node.data()));
    } else if (tag == "location") {
      detail::push_unique(r.countries, detail::child_text(node, "facility.address.country"));
      detail::push_unique(r.states, detail::child_text(node, "facility.address.state"));
      detail::push_unique(r.cities, detail::child_text(node, "facility.address.city"));
    }
  }
  if (r.drugs.empty()) return Rejection{r.nct_id, "NonDrugTrial", "no Drug interventions"};
  if (r.countries.empty()) {
    if (auto lc = study.get_child_optional("location_countries")) {
      for (const auto& [tag, node] : *lc) {
        if (tag == "country") detail::push_unique(r.countries, detail::trim(node.data()));
      }
    }
  }

  if (auto elig = study.get_child_optional("eligibility")) {
    const std::string text = elig->get<std::string>("criteria.textblock", "");
    auto criteria = segment_criteria(text);
    r.inclusion = std::move(criteria.inclusion);
    r.exclusion = std::move(criteria.exclusion);
    r.gender = parse_gender(detail::child_text(*elig, "gender"));
    r.min_age_years = parse_age_years(detail::child_text(*elig, "minimum_age"), counters);
    r.max_age_years = parse_age_years(detail::child_text(*elig, "maximum_age"), counters);
  }
  r.phase = parse_phase(detail::child_text(study, "phase"));
  r.start_date = detail::parse_date(detail::child_text(study, "start_date"));
  r.completion_date = detail::parse_date(detail::child_text(study, "completion_date"));
  if (!r.completion_date) {
    r.completion_date = detail::parse_date(detail::child_text(study, "primary_completion_date"));
  }
  r.status_raw = detail::child_text(study, "overall_status");
  r.stop_reason = detail::child_text(study, "why_stopped");
  return r;
}

// ---------------------------------------------------------------------------
// Canonical JSON

inline nlohmann::json to_json(const TrialRecord& r) {
  using nlohmann::json;
  auto opt_date = [](const std::optional<Date>& d) { return d ? json(d->iso()) : json(nullptr); };
  json j;
  j["nct_id"] = r.nct_id;
  j["drugs"] = r.drugs;
  j["diseases"] = r.diseases;
  j["inclusion"] = r.inclusion;
  j["exclusion"] = r.exclusion;
  j["gender"] = to_string(r.gender);
  j["min_age_years"] = r.min_age_years;
  j["max_age_years"] = r.max_age_years;
  j["phase"] = r.phase ? json(to_string(*r.phase)) : json(nullptr);
  j["countries"] = r.countries;
  j["states"] = r.states;
  j["cities"] = r.cities;
  j["start_date"] = opt_date(r.start_date);
  j["completion_date"] = opt_date(r.completion_date);
  j["status_raw"] = r.status_raw;
  j["stop_reason"] = r.stop_reason;
  j["label"] = r.label ? json(*r.label) : json(nullptr);
  return j;
}

inline TrialRecord record_from_json(const nlohmann::json& j) {
  TrialRecord r;
  try {
    r.nct_id = j.at("nct_id").get<std::string>();
    auto list = [&](const char* key) {
      return j.contains(key) ? j.at(key).get<std::vector<std::string>>()
                             : std::vector<std::string>{};
    };
    r.drugs = list("drugs");
    r.diseases = list("diseases");
    r.inclusion = list("inclusion");
    r.exclusion = list("exclusion");
    r.countries = list("countries");
    r.states = list("states");
    r.cities = list("cities");
    r.gender = parse_gender(j.value("gender", "All"));
    r.min_age_years = j.value("min_age_years", -1.0);
    r.max_age_years = j.value("max_age_years", -1.0);
    if (j.contains("phase") && !j["phase"].is_null()) {
      r.phase = parse_phase(j["phase"].get<std::string>());
      if (!r.phase) throw Error(ErrorKind::InvalidRecord, r.nct_id + ": bad phase");
    }
    auto date = [&](const char* key) -> std::optional<Date> {
      if (!j.contains(key) || j[key].is_null()) return std::nullopt;
      auto d = detail::parse_date(j[key].get<std::string>());
      if (!d) throw Error(ErrorKind::InvalidRecord, r.nct_id + ": bad " + key);
      return d;
    };
    r.start_date = date("start_date");
    r.completion_date = date("completion_date");
    r.status_raw = j.value("status_raw", "");
    r.stop_reason = j.value("stop_reason", "");
    if (j.contains("label") && !j["label"].is_null()) r.label = j["label"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidRecord, std::string("record field: ") + e.what());
  }
  validate(r);
  return r;
}

inline void write_records_jsonl(const std::filesystem::path& path,
                                const std::vector<TrialRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

// Rejects duplicate nct_ids and invalid records.
inline std::vector<TrialRecord> read_records_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::vector<TrialRecord> records;
  std::set<std::string> seen;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (detail::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::CorruptLine,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    auto r = record_from_json(j);
    if (!seen.insert(r.nct_id).second) {
      throw Error(ErrorKind::DuplicateRecord, r.nct_id);
    }
    records.push_back(std::move(r));
  }
  return records;
}

inline nlohmann::json to_json(const Rejection& r) {
  return {{"nct_id", r.nct_id}, {"reason", r.reason}, {"detail", r.detail}};
}

// ---------------------------------------------------------------------------
// Labels

enum class LabelDecision { Negative, Positive, Exclude };

// Status (case-insensitive) to label. A stop-reason keyword override, when it
// matches the record's stop reason as a case-insensitive substring, takes
// precedence over the status entry.
struct LabelRule {
  std::map<std::string, LabelDecision> by_status;
  std::vector<std::pair<std::string, LabelDecision>> stop_reason_overrides;

  static LabelRule defaults() {
    LabelRule rule;
    rule.by_status = {{"completed", LabelDecision::Positive},
                      {"withdrawn", LabelDecision::Negative},
                      {"terminated", LabelDecision::Negative},
                      {"suspended", LabelDecision::Negative}};
    return rule;
  }

  // {"status": {"Completed": 1, "Withdrawn": 0, "Recruiting": "exclude"},
  //  "stop_reason": {"low accrual": 0}}
  static LabelRule from_json(const nlohmann::json& j) {
    auto decision = [](const nlohmann::json& v) {
      if (v.is_number_integer() && v.get<int>() == 1) return LabelDecision::Positive;
      if (v.is_number_integer() && v.get<int>() == 0) return LabelDecision::Negative;
      if (v.is_string() && detail::iequals(v.get<std::string>(), "exclude")) {
        return LabelDecision::Exclude;
      }
      throw Error(ErrorKind::InvalidConfig, "label rule values must be 0, 1 or \"exclude\"");
    };
    LabelRule rule;
    if (j.contains("status")) {
      for (const auto& [k, v] : j["status"].items()) {
        rule.by_status[detail::to_lower(detail::trim(k))] = decision(v);
      }
    }
    if (j.contains("stop_reason")) {
      for (const auto& [k, v] : j["stop_reason"].items()) {
        rule.stop_reason_overrides.emplace_back(detail::to_lower(k), decision(v));
      }
    }
    return rule;
  }
};

struct LabelOutcome {
  LabelDecision decision;
  bool unmapped = false;
};

inline LabelOutcome evaluate_label(const TrialRecord& record, const LabelRule& rule) {
  const std::string reason = detail::to_lower(record.stop_reason);
  for (const auto& [keyword, decision] : rule.stop_reason_overrides) {
    if (!keyword.empty() && reason.find(keyword) != std::string::npos) return {decision};
  }
  const auto it = rule.by_status.find(detail::to_lower(detail::trim(record.status_raw)));
  if (it == rule.by_status.end()) return {LabelDecision::Exclude, true};
  return {it->second};
}

// Labelled copy of the record, or a Rejection for excluded statuses.
inline std::variant<TrialRecord, Rejection> derive_label(const TrialRecord& record,
                                                         const LabelRule& rule) {
  const auto outcome = evaluate_label(record, rule);
  if (outcome.decision == LabelDecision::Exclude) {
    return Rejection{record.nct_id, outcome.unmapped ? "UnmappedStatus" : "ExcludedStatus",
                     record.status_raw};
  }
  TrialRecord labelled = record;
  labelled.label = outcome.decision == LabelDecision::Positive ? 1 : 0;
  return labelled;
}

// ---------------------------------------------------------------------------
// Batch ingestion

struct IngestResult {
  std::vector<TrialRecord> records;  // sorted by nct_id
  std::vector<Rejection> rejections;
  std::map<std::string, int> unmapped_statuses;
  IngestCounters counters;
};

// Deduplicates, labels and filters parsed records. Trials without a phase
// are rejected (MissingPhase) since modelling covers phases I-IV only.
// When `relabel` is false, records that already carry a label keep it.
inline IngestResult finalize_records(std::vector<TrialRecord> parsed, const LabelRule& rule,
                                     bool relabel = true) {
  IngestResult out;
  std::stable_sort(parsed.begin(), parsed.end(),
                   [](const TrialRecord& a, const TrialRecord& b) { return a.nct_id < b.nct_id; });
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    auto& r = parsed[i];
    if (i > 0 && parsed[i - 1].nct_id == r.nct_id) {
      out.rejections.push_back({r.nct_id, "DuplicateRecord", "nct_id seen earlier"});
      continue;
    }
    if (!r.phase) {
      out.rejections.push_back({r.nct_id, "MissingPhase", ""});
      continue;
    }
    if (!relabel && r.label) {
      out.records.push_back(std::move(r));
      continue;
    }
    auto labelled = derive_label(r, rule);
    if (auto* rej = std::get_if<Rejection>(&labelled)) {
      if (rej->reason == "UnmappedStatus") ++out.unmapped_statuses[r.status_raw];
      out.rejections.push_back(std::move(*rej));
    } else {
      out.records.push_back(std::move(std::get<TrialRecord>(labelled)));
    }
  }
  return out;
}

// Parses every *.xml file under `dir` (sorted by path for determinism).
inline IngestResult ingest_xml_directory(const std::filesystem::path& dir, const LabelRule& rule) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorKind::IoError, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  IngestCounters counters;
  std::vector<TrialRecord> parsed;
  std::vector<Rejection> early;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto result = parse_registry_xml(buf.str(), &counters);
    if (auto* rej = std::get_if<Rejection>(&result)) {
      if (rej->nct_id.empty()) rej->nct_id = file.filename().string();
      early.push_back(std::move(*rej));
    } else {
      parsed.push_back(std::move(std::get<TrialRecord>(result)));
    }
  }
  IngestResult out = finalize_records(std::move(parsed), rule);
  out.rejections.insert(out.rejections.begin(), early.begin(), early.end());
  out.counters = counters;
  return out;
}

// ---------------------------------------------------------------------------
// Temporal split

struct SplitConfig {
  Date cutoff{2015, 1, 1};
};

struct SplitResult {
  std::vector<TrialRecord> train;  // completion_date < cutoff
  std::vector<TrialRecord> test;   // start_date >= cutoff
  std::vector<TrialRecord> dropped;
};

// Records that match both rules (inconsistent dates) or neither are dropped.
inline SplitResult temporal_split(const std::vector<TrialRecord>& records, const SplitConfig& cfg) {
  SplitResult out;
  for (const auto& r : records) {
    const bool train = r.completion_date && *r.completion_date < cfg.cutoff;
    const bool test = r.start_date && *r.start_date >= cfg.cutoff;
    if (train && !test) {
      out.train.push_back(r);
    } else if (test && !train) {
      out.test.push_back(r);
    } else {
      out.dropped.push_back(r);
    }
  }
  return out;
}

// Number of leakage violations in a split (0 for every temporal_split output).
inline std::size_t count_leakage(const SplitResult& split, const SplitConfig& cfg) {
  std::size_t violations = 0;
  std::set<std::string> train_ids;
  for (const auto& r : split.train) {
    if (!r.completion_date || *r.completion_date >= cfg.cutoff) ++violations;
    train_ids.insert(r.nct_id);
  }
  for (const auto& r : split.test) {
    if (!r.start_date || *r.start_date < cfg.cutoff) ++violations;
    if (train_ids.count(r.nct_id)) ++violations;
  }
  return violations;
}

// ---------------------------------------------------------------------------
// Summary statistics

struct QuantileSummary {
  double mean = 0, min = 0, q25 = 0, q50 = 0, q75 = 0, max = 0;
};

// Nearest-rank quantile: the ceil(p*n)-th smallest value (p = 0 gives min).
inline double nearest_rank(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::EmptyDataset, "quantile of empty list");
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

inline QuantileSummary summarize_values(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  QuantileSummary q;
  q.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  q.min = values.front();
  q.max = values.back();
  q.q25 = nearest_rank(values, 0.25);
  q.q50 = nearest_rank(values, 0.50);
  q.q75 = nearest_rank(values, 0.75);
  return q;
}

struct PhaseCounts {
  std::size_t negative = 0, positive = 0, unlabeled = 0;
  friend bool operator==(const PhaseCounts&, const PhaseCounts&) = default;
};

struct DatasetSummary {
  std::size_t total = 0;
  std::map<std::string, PhaseCounts> phase;            // "I".."IV", "missing"
  std::map<std::string, std::size_t> gender;           // All, Female, Male
  std::map<std::string, std::size_t> country;          // first listed; "(none)"
  std::map<std::string, std::size_t> completion_years; // year ranges
  QuantileSummary min_age, max_age, age_span;
  QuantileSummary inclusion_count, exclusion_count, total_count;
};

inline std::string completion_bucket(const std::optional<Date>& d) {
  if (!d) return "missing";
  const int y = d->year;
  if (y < 2000) return "Before 2000";
  if (y >= 2020) return "After 2020";
  const int lo = y - y % 5;
  return std::to_string(lo) + "-" + std::to_string(lo + 4);
}

inline DatasetSummary summarize_dataset(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw Error(ErrorKind::EmptyDataset, "no records to summarize");
  DatasetSummary s;
  s.total = records.size();
  for (auto name : kPhaseNames) s.phase[std::string(name)];
  for (auto name : kGenderNames) s.gender[std::string(name)] = 0;
  std::vector<double> min_age, max_age, span, inc, exc, tot;
  for (const auto& r : records) {
    auto& pc = s.phase[r.phase ? std::string(to_string(*r.phase)) : "missing"];
    if (!r.label) ++pc.unlabeled;
    else if (*r.label == 1) ++pc.positive;
    else ++pc.negative;
    ++s.gender[std::string(to_string(r.gender))];
    ++s.country[r.countries.empty() ? "(none)" : r.countries.front()];
    ++s.completion_years[completion_bucket(r.completion_date)];
    min_age.push_back(r.min_age_years);
    max_age.push_back(r.max_age_years);
    span.push_back(r.max_age_years - r.min_age_years);
    inc.push_back(static_cast<double>(r.inclusion.size()));
    exc.push_back(static_cast<double>(r.exclusion.size()));
    tot.push_back(static_cast<double>(r.inclusion.size() + r.exclusion.size()));
  }
  s.min_age = summarize_values(std::move(min_age));
  s.max_age = summarize_values(std::move(max_age));
  s.age_span = summarize_values(std::move(span));
  s.inclusion_count = summarize_values(std::move(inc));
  s.exclusion_count = summarize_values(std::move(exc));
  s.total_count = summarize_values(std::move(tot));
  return s;
}

inline nlohmann::json to_json(const QuantileSummary& q) {
  return {{"mean", q.mean}, {"min", q.min}, {"q25", q.q25},
          {"q50", q.q50},   {"q75", q.q75}, {"max", q.max}};
}

inline nlohmann::json to_json(const DatasetSummary& s) {
  using nlohmann::json;
  const double n = static_cast<double>(s.total);
  json j;
  j["total"] = s.total;
  for (const auto& [phase, c] : s.phase) {
    j["phase"][phase] = {{"negative", c.negative}, {"positive", c.positive},
                         {"unlabeled", c.unlabeled}};
  }
  for (const auto& [g, c] : s.gender) {
    j["gender"][g] = {{"count", c}, {"proportion_pct", 100.0 * static_cast<double>(c) / n}};
  }
  for (const auto& [country, c] : s.country) {
    j["country"][country] = {{"count", c},
                             {"proportion_pct", 100.0 * static_cast<double>(c) / n}};
  }
  j["completion_years"] = s.completion_years;
  j["age"] = {{"min_age", to_json(s.min_age)},
              {"max_age", to_json(s.max_age)},
              {"age_span", to_json(s.age_span)}};
  j["criteria_count"] = {{"inclusion", to_json(s.inclusion_count)},
                         {"exclusion", to_json(s.exclusion_count)},
                         {"total", to_json(s.total_count)}};
  return j;
}

}  // namespace trialenroll
