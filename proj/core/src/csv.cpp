#include "strigs/csv.hpp"

#include <cstdio>

namespace strigs {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (const auto& c : columns) cell(c);
  end_row();
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (!first_) out_ << ',';
  first_ = false;
  if (v.find_first_of(",\"\n") == std::string::npos) {
    out_ << v;
  } else {
    out_ << '"';
    for (char ch : v) {
      if (ch == '"') out_ << '"';
      out_ << ch;
    }
    out_ << '"';
  }
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

}  // namespace strigs
