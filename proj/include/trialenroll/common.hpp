#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trialenroll {

// Every failure surfaced by the library carries one of these kinds. The CLI
// maps Io* kinds to exit code 2 and everything else to exit code 1.
enum class ErrorKind {
  MalformedXml,
  MissingRequiredField,
  NonDrugTrial,
  DuplicateRecord,
  InvalidRecord,
  EmptyDataset,
  ZeroDimension,
  EmptyList,
  RaggedLengths,
  BadManifest,
  DimensionMismatch,
  CorruptLine,
  DuplicateKey,
  SchemaMismatch,
  LengthMismatch,
  EmptySentence,
  SingleClassDataset,
  TooFewRecords,
  DivergedLoss,
  EmptyPredictions,
  OneClassOnly,
  NoPositives,
  RecordNotFound,
  InvalidConfig,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedXml: return "MalformedXml";
    case ErrorKind::MissingRequiredField: return "MissingRequiredField";
    case ErrorKind::NonDrugTrial: return "NonDrugTrial";
    case ErrorKind::DuplicateRecord: return "DuplicateRecord";
    case ErrorKind::InvalidRecord: return "InvalidRecord";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::ZeroDimension: return "ZeroDimension";
    case ErrorKind::EmptyList: return "EmptyList";
    case ErrorKind::RaggedLengths: return "RaggedLengths";
    case ErrorKind::BadManifest: return "BadManifest";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::CorruptLine: return "CorruptLine";
    case ErrorKind::DuplicateKey: return "DuplicateKey";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptySentence: return "EmptySentence";
    case ErrorKind::SingleClassDataset: return "SingleClassDataset";
    case ErrorKind::TooFewRecords: return "TooFewRecords";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::EmptyPredictions: return "EmptyPredictions";
    case ErrorKind::OneClassOnly: return "OneClassOnly";
    case ErrorKind::NoPositives: return "NoPositives";
    case ErrorKind::RecordNotFound: return "RecordNotFound";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  bool is_io() const noexcept {
    return kind_ == ErrorKind::IoError || kind_ == ErrorKind::BadManifest;
  }

 private:
  ErrorKind kind_;
};

// splitmix64: fixed arithmetic, so every platform produces the same stream.
// Used for all seeded randomness (init, shuffles, oversampling) instead of
// the implementation-defined standard distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t draw;
    do {
      draw = (*this)();
    } while (draw >= limit);
    return draw % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Calendar date with optional day (registry dates are often "Month YYYY").
// A missing day compares as day 1.
struct Date {
  int year = 0;
  int month = 1;
  std::optional<int> day;

  int ordinal() const { return (year * 100 + month) * 100 + day.value_or(1); }
  friend bool operator==(const Date& a, const Date& b) {
    return a.year == b.year && a.month == b.month && a.day == b.day;
  }
  friend std::strong_ordering operator<=>(const Date& a, const Date& b) {
    return a.ordinal() <=> b.ordinal();
  }

  // "YYYY-MM" or "YYYY-MM-DD".
  std::string iso() const {
    char buf[16];
    if (day) {
      std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, *day);
    } else {
      std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    }
    return buf;
  }
};

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

inline bool istarts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

// Month names and ISO forms: "September 2014", "September 15, 2014",
// "2014-09", "2014-09-15".
inline std::optional<Date> parse_date(std::string_view raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  Date d;
  if (std::isdigit(static_cast<unsigned char>(s[0]))) {
    int y = 0, m = 0, day = 0;
    const int n = std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &day);
    if (n < 2 || m < 1 || m > 12) return std::nullopt;
    d.year = y;
    d.month = m;
    if (n == 3) {
      if (day < 1 || day > 31) return std::nullopt;
      d.day = day;
    }
    return d;
  }
  static constexpr std::string_view kMonths[] = {
      "january", "february", "march",     "april",   "may",      "june",
      "july",    "august",   "september", "october", "november", "december"};
  const auto space = s.find(' ');
  if (space == std::string::npos) return std::nullopt;
  const std::string month = to_lower(s.substr(0, space));
  int month_index = 0;
  for (int i = 0; i < 12; ++i) {
    if (month == kMonths[i]) month_index = i + 1;
  }
  if (month_index == 0) return std::nullopt;
  d.month = month_index;
  const std::string rest = s.substr(space + 1);
  int a = 0, b = 0;
  if (std::sscanf(rest.c_str(), "%d, %d", &a, &b) == 2 && rest.find(',') != std::string::npos) {
    if (a < 1 || a > 31) return std::nullopt;
    d.day = a;
    d.year = b;
  } else if (std::sscanf(rest.c_str(), "%d", &a) == 1) {
    d.year = a;
  } else {
    return std::nullopt;
  }
  return d;
}

}  // namespace detail
}  // namespace trialenroll
