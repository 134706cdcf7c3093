#include "fpbnn/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fpbnn/errors.hpp"

namespace fpbnn {

namespace {

constexpr const char* kMagic = "fpbnn-container 1";

void put_le(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
  out.write(bytes, 8);
}

double get_le(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw FormatError("container payload truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

bool valid_token(const std::string& s) {
  return !s.empty() && s.find_first_of(" \t\n\r") == std::string::npos;
}

}  // namespace

void Container::set_meta(const std::string& key, const std::string& value) {
  if (!valid_token(key)) throw FormatError("invalid meta key '" + key + "'");
  if (value.find('\n') != std::string::npos) throw FormatError("meta value contains newline");
  for (auto& [k, v] : meta_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta_.emplace_back(key, value);
}

void Container::add_array(const std::string& name, Eigen::MatrixXd values) {
  if (!valid_token(name)) throw FormatError("invalid array name '" + name + "'");
  if (has_array(name)) throw FormatError("duplicate array '" + name + "'");
  arrays_.emplace_back(name, std::move(values));
}

bool Container::has_meta(const std::string& key) const {
  for (const auto& [k, v] : meta_)
    if (k == key) return true;
  return false;
}

const std::string& Container::meta(const std::string& key) const {
  for (const auto& [k, v] : meta_)
    if (k == key) return v;
  throw FormatError("missing meta field '" + key + "' in " + kind_ + " container");
}

bool Container::has_array(const std::string& name) const {
  for (const auto& [n, a] : arrays_)
    if (n == name) return true;
  return false;
}

const Eigen::MatrixXd& Container::array(const std::string& name) const {
  for (const auto& [n, a] : arrays_)
    if (n == name) return a;
  throw FormatError("missing array '" + name + "' in " + kind_ + " container");
}

void Container::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << kMagic << '\n' << "kind " << kind_ << '\n';
  for (const auto& [k, v] : meta_) out << "meta " << k << ' ' << v << '\n';
  for (const auto& [n, a] : arrays_) out << "array " << n << ' ' << a.rows() << ' ' << a.cols() << '\n';
  out << "end\n";
  for (const auto& [n, a] : arrays_)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index i = 0; i < a.rows(); ++i) put_le(out, a(i, j));
  if (!out) throw FormatError("write to '" + path + "' failed");
}

Container Container::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw FormatError("'" + path + "' is not an fpbnn container");
  Container c;
  std::vector<std::tuple<std::string, Eigen::Index, Eigen::Index>> shapes;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "kind") {
      ls >> c.kind_;
    } else if (tag == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      c.meta_.emplace_back(key, value);
    } else if (tag == "array") {
      std::string name;
      Eigen::Index rows = -1, cols = -1;
      ls >> name >> rows >> cols;
      if (!ls || rows < 0 || cols < 0) throw FormatError("bad array line: " + line);
      shapes.emplace_back(name, rows, cols);
    } else {
      throw FormatError("unknown header line: " + line);
    }
  }
  if (!ended) throw FormatError("container header not terminated");
  for (const auto& [name, rows, cols] : shapes) {
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = get_le(in);
    c.arrays_.emplace_back(name, std::move(a));
  }
  return c;
}

Container Container::read(const std::string& path, const std::string& expected_kind) {
  Container c = read(path);
  if (c.kind() != expected_kind)
    throw FormatError("'" + path + "' holds a " + c.kind() + ", expected " + expected_kind);
  return c;
}

}  // namespace fpbnn
