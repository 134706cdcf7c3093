#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace fpbnn {

/// Self-describing binary container used for checkpoints and anchor-prior
/// files. Layout (see docs/file_formats.md):
///
///   fpbnn-container 1\n
///   kind <kind>\n
///   meta <key> <value>\n        (zero or more)
///   array <name> <rows> <cols>\n (zero or more)
///   end\n
///   <payload>
///
/// The payload concatenates every array in declaration order, column-major,
/// as IEEE-754 binary64 little-endian.
class Container {
 public:
  explicit Container(std::string kind = {}) : kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

  void set_meta(const std::string& key, const std::string& value);
  void add_array(const std::string& name, Eigen::MatrixXd values);

  bool has_meta(const std::string& key) const;
  const std::string& meta(const std::string& key) const;
  bool has_array(const std::string& name) const;
  const Eigen::MatrixXd& array(const std::string& name) const;

  void write(const std::string& path) const;
  static Container read(const std::string& path);
  /// Reads and checks the kind tag.
  static Container read(const std::string& path, const std::string& expected_kind);

 private:
  std::string kind_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> arrays_;
};

}  // namespace fpbnn
