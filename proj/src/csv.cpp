#include "ridgelab/csv.hpp"

#include <cstdio>

#include "ridgelab/errors.hpp"

namespace ridgelab::csv {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Input, "cannot open " + path + " for writing");
  return out;
}

void Writer::header(const std::vector<std::string>& names) { row(names); }

void Writer::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << quote(fields[i]);
  }
  out_ << "\r\n";
}

void Writer::row(const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << number(values[i]);
  }
  out_ << "\r\n";
}

}  // namespace ridgelab::csv
