#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace strigs {

/// 17 significant digits, round-trippable.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& columns);
  CsvWriter& cell(double v);
  CsvWriter& cell(const std::string& v);
  CsvWriter& cell(long long v);
  void end_row();

 private:
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace strigs
