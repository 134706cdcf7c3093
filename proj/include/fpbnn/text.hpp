#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace fpbnn {

/// Shortest round-trip decimal form (%.17g).
std::string format_double(double v);

std::vector<std::string> split(const std::string& s, char sep);

std::string join_ints(const std::vector<int>& values, char sep = ',');
std::vector<int> parse_ints(const std::string& s, char sep = ',');

std::string join_doubles(const Eigen::VectorXd& values, char sep = ',');

}  // namespace fpbnn
