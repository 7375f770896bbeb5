#pragma once

#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace ridgelab::csv {

/// Shortest round-trip-safe rendering ("%.17g").
std::string number(double v);

/// RFC 4180 field quoting: fields with commas, quotes or line breaks are
/// wrapped in double quotes with inner quotes doubled.
std::string quote(std::string_view field);

/// Opens `path` for writing and throws ErrorKind::Input when that fails.
std::ofstream open_output(const std::string& path);

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(open_output(path)) {}

  void header(const std::vector<std::string>& names);
  void row(const std::vector<std::string>& fields);
  void row(const std::vector<double>& values);

 private:
  std::ofstream out_;
};

}  // namespace ridgelab::csv
