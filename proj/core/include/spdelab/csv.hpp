#pragma once

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace spdelab {

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double value) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::string format_int(long long value) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

/// Parse a double, rejecting trailing garbage. Returns false on failure.
inline bool parse_double(std::string_view text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

inline bool parse_int(std::string_view text, long long& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

/// Minimal CSV emitter: one header row, then value rows. Fields are joined
/// with commas and rows end with '\n'; numeric fields use the shortest
/// round-trip form.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& names) { raw_row(names); }

  CsvWriter& field(double v) { return push(format_double(v)); }
  CsvWriter& field(int v) { return push(format_int(v)); }
  CsvWriter& field(long long v) { return push(format_int(v)); }
  CsvWriter& field(std::uint64_t v) { return push(std::to_string(v)); }
  CsvWriter& field(bool v) { return push(v ? "1" : "0"); }
  CsvWriter& field(const std::string& v) { return push(v); }
  CsvWriter& field(const char* v) { return push(std::string(v)); }

  void end_row() {
    raw_row(pending_);
    pending_.clear();
  }

 private:
  CsvWriter& push(std::string s) {
    pending_.push_back(std::move(s));
    return *this;
  }
  void raw_row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << fields[i];
    }
    os_ << '\n';
  }
  std::ostream& os_;
  std::vector<std::string> pending_;
};

} // namespace spdelab
