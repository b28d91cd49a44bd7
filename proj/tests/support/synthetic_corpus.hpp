#pragma once

// Seeded record and registry-XML generators for tests.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <string>
#include <vector>

#include "trialenroll/common.hpp"
#include "trialenroll/ingest.hpp"

namespace synth {

using trialenroll::Date;
using trialenroll::Gender;
using trialenroll::Phase;
using trialenroll::Rng;
using trialenroll::TrialRecord;

inline const std::vector<std::string> kDrugs = {
    "aspirin", "bortezomib", "metformin", "cisplatin", "placebo", "ibuprofen",
    "rituximab", "paclitaxel", "atorvastatin", "insulin glargine"};
inline const std::vector<std::string> kDiseases = {
    "Ovarian Cancer", "Type 2 Diabetes", "Multiple Myeloma", "Asthma", "Hypertension",
    "Breast Cancer", "Migraine", "Psoriasis"};
inline const std::vector<std::string> kCountries = {
    "United States", "Canada", "France", "Germany", "China", "Japan", "Brazil", "Spain"};
inline const std::vector<std::string> kWords = {
    "patients", "must", "have", "confirmed", "diagnosis", "of", "disease", "adequate",
    "renal", "hepatic", "function", "prior", "therapy", "within", "weeks", "history",
    "known", "allergy", "pregnant", "women", "written", "consent", "performance", "status",
    "measurable", "lesion", "treatment", "chemotherapy", "cardiac", "infection", "active",
    "years", "age", "laboratory", "values", "normal", "range", "surgery", "study", "drug"};

inline std::string pick(Rng& rng, const std::vector<std::string>& from) {
  return from[rng.below(from.size())];
}

inline std::string filler_sentence(Rng& rng) {
  const std::size_t n = 3 + rng.below(6);
  std::string s = pick(rng, kWords);
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  for (std::size_t i = 1; i < n; ++i) s += " " + pick(rng, kWords);
  return s;
}

inline std::string nct(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "NCT%08zu", i);
  return buf;
}

inline Date random_date(Rng& rng, int year_lo, int year_hi) {
  return {year_lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(year_hi - year_lo + 1))),
          1 + static_cast<int>(rng.below(12)), 1 + static_cast<int>(rng.below(28))};
}

// Plain record with random fields; label drawn at `positive_rate`.
inline TrialRecord random_record(Rng& rng, std::size_t index, double positive_rate = 0.3) {
  TrialRecord r;
  r.nct_id = nct(index);
  for (std::size_t k = 0, n = 1 + rng.below(2); k < n; ++k) {
    auto d = pick(rng, kDrugs);
    if (std::find(r.drugs.begin(), r.drugs.end(), d) == r.drugs.end()) r.drugs.push_back(d);
  }
  r.diseases = {pick(rng, kDiseases)};
  r.gender = static_cast<Gender>(rng.below(3));
  r.min_age_years = rng.below(5) == 0 ? -1.0 : static_cast<double>(18 + rng.below(10));
  r.max_age_years = rng.below(4) == 0 ? -1.0 : static_cast<double>(50 + rng.below(40));
  r.phase = static_cast<Phase>(rng.below(4));
  for (std::size_t k = 0, n = rng.below(3); k < n; ++k) {
    auto c = pick(rng, kCountries);
    if (std::find(r.countries.begin(), r.countries.end(), c) == r.countries.end()) {
      r.countries.push_back(c);
    }
  }
  for (std::size_t k = 0, n = 1 + rng.below(4); k < n; ++k) r.inclusion.push_back(filler_sentence(rng));
  for (std::size_t k = 0, n = rng.below(5); k < n; ++k) r.exclusion.push_back(filler_sentence(rng));
  r.start_date = random_date(rng, 2005, 2019);
  Date end = random_date(rng, r.start_date->year, r.start_date->year + 4);
  if (end < *r.start_date) end = *r.start_date;
  r.completion_date = end;
  const bool positive = rng.uniform() < positive_rate;
  r.status_raw = positive ? "Completed" : (rng.below(2) ? "Terminated" : "Withdrawn");
  r.label = positive ? 1 : 0;
  return r;
}

// Fuzzed records for split checks: dates may be missing, inverted or
// straddle any cutoff.
inline TrialRecord fuzzed_record(Rng& rng, std::size_t index) {
  TrialRecord r = random_record(rng, index);
  switch (rng.below(6)) {
    case 0: r.start_date.reset(); break;
    case 1: r.completion_date.reset(); break;
    case 2: std::swap(r.start_date, r.completion_date); break;
    case 3:
      r.start_date.reset();
      r.completion_date.reset();
      break;
    default: break;
  }
  if (r.start_date && rng.below(3) == 0) r.start_date->day.reset();
  return r;
}

struct LearnabilityOptions {
  std::size_t records = 2000;
  double keyword_rate = 0.25;
  std::string keyword = "zorblatt";
  std::uint64_t seed = 7;
};

// The status-derived label is keyword OR (phase in {II, IV}) XOR (high
// criteria count). Half the records complete before 2015 and half start
// after it, so a 2015-01-01 split gives two equal halves.
inline std::vector<TrialRecord> learnability_corpus(const LearnabilityOptions& opt = {}) {
  Rng rng(opt.seed);
  std::vector<TrialRecord> out;
  out.reserve(opt.records);
  for (std::size_t i = 0; i < opt.records; ++i) {
    TrialRecord r;
    r.nct_id = nct(10000000 + i);
    r.drugs = {pick(rng, kDrugs)};
    r.diseases = {pick(rng, kDiseases)};
    r.gender = static_cast<Gender>(rng.below(3));
    r.min_age_years = static_cast<double>(18 + rng.below(10));
    r.max_age_years = static_cast<double>(50 + rng.below(30));
    r.phase = static_cast<Phase>(rng.below(4));
    r.countries = {pick(rng, kCountries)};
    const bool high = rng.below(2) == 1;
    const std::size_t total = high ? 25 + rng.below(11) : 2 + rng.below(5);
    const std::size_t n_inc = std::max<std::size_t>(1, total / 2);
    for (std::size_t k = 0; k < n_inc; ++k) r.inclusion.push_back(filler_sentence(rng));
    for (std::size_t k = n_inc; k < total; ++k) r.exclusion.push_back(filler_sentence(rng));
    const bool keyword = rng.uniform() < opt.keyword_rate;
    if (keyword) {
      auto& s = r.inclusion[rng.below(r.inclusion.size())];
      s = "Prior " + opt.keyword + " " + s;
    }
    const bool phase_on = *r.phase == Phase::II || *r.phase == Phase::IV;
    const bool positive = keyword || (phase_on != high);
    if (i % 2 == 0) {
      r.start_date = random_date(rng, 2008, 2011);
      r.completion_date = random_date(rng, 2012, 2014);
    } else {
      r.start_date = random_date(rng, 2015, 2018);
      r.completion_date = random_date(rng, 2019, 2022);
    }
    r.status_raw = positive ? "Completed" : "Terminated";
    r.label = positive ? 1 : 0;
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string month_name(int m) {
  static const char* names[] = {"January", "February", "March",     "April",   "May",      "June",
                                "July",    "August",   "September", "October", "November", "December"};
  return names[m - 1];
}

inline std::string registry_date(const Date& d) {
  std::string s = month_name(d.month) + " ";
  if (d.day) s += std::to_string(*d.day) + ", ";
  return s + std::to_string(d.year);
}

inline std::string registry_age(double years) {
  if (years < 0) return "N/A";
  return std::to_string(static_cast<int>(years)) + " Years";
}

// Registry XML whose parse reproduces `r` (labels aside). Ages must be
// whole years.
inline std::string to_registry_xml(const TrialRecord& r) {
  std::string x = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<clinical_study>\n";
  x += "  <id_info>\n    <nct_id>" + r.nct_id + "</nct_id>\n  </id_info>\n";
  x += "  <overall_status>" + xml_escape(r.status_raw) + "</overall_status>\n";
  if (!r.stop_reason.empty()) x += "  <why_stopped>" + xml_escape(r.stop_reason) + "</why_stopped>\n";
  if (r.start_date) x += "  <start_date>" + registry_date(*r.start_date) + "</start_date>\n";
  if (r.completion_date) {
    x += "  <completion_date type=\"Actual\">" + registry_date(*r.completion_date) + "</completion_date>\n";
  }
  x += "  <phase>";
  x += r.phase ? "Phase " + std::to_string(static_cast<int>(*r.phase) + 1) : std::string("N/A");
  x += "</phase>\n";
  for (const auto& d : r.diseases) x += "  <condition>" + xml_escape(d) + "</condition>\n";
  for (const auto& d : r.drugs) {
    x += "  <intervention>\n    <intervention_type>Drug</intervention_type>\n";
    x += "    <intervention_name>" + xml_escape(d) + "</intervention_name>\n  </intervention>\n";
  }
  x += "  <eligibility>\n    <criteria>\n      <textblock>\n";
  x += "        Inclusion Criteria:\n\n";
  for (const auto& s : r.inclusion) x += "          -  " + xml_escape(s) + "\n\n";
  x += "        Exclusion Criteria:\n\n";
  for (const auto& s : r.exclusion) x += "          -  " + xml_escape(s) + "\n\n";
  x += "      </textblock>\n    </criteria>\n";
  x += "    <gender>" + std::string(trialenroll::to_string(r.gender)) + "</gender>\n";
  x += "    <minimum_age>" + registry_age(r.min_age_years) + "</minimum_age>\n";
  x += "    <maximum_age>" + registry_age(r.max_age_years) + "</maximum_age>\n";
  x += "  </eligibility>\n";
  for (std::size_t i = 0; i < r.countries.size(); ++i) {
    x += "  <location>\n    <facility>\n      <address>\n";
    if (i < r.cities.size()) x += "        <city>" + xml_escape(r.cities[i]) + "</city>\n";
    x += "        <country>" + xml_escape(r.countries[i]) + "</country>\n";
    x += "      </address>\n    </facility>\n  </location>\n";
  }
  x += "</clinical_study>\n";
  return x;
}

}  // namespace synth
