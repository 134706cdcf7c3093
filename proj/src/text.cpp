#include "fpbnn/text.hpp"

#include <cstdio>
#include <sstream>

#include "fpbnn/errors.hpp"

namespace fpbnn {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string join_ints(const std::vector<int>& values, char sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<int> parse_ints(const std::string& s, char sep) {
  std::vector<int> out;
  if (s.empty() || s == "-") return out;
  for (const auto& item : split(s, sep)) {
    try {
      std::size_t used = 0;
      int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw FormatError("bad integer list '" + s + "'");
    }
  }
  return out;
}

std::string join_doubles(const Eigen::VectorXd& values, char sep) {
  std::string out;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace fpbnn
