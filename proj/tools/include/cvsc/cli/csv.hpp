#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cvsc::cli {

// 17 significant digits, '.' decimal separator.
std::string format_number(double value);
std::string format_optional(const std::optional<double>& value);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

}  // namespace cvsc::cli
