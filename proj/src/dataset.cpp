#include "fpbnn/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

#include "fpbnn/errors.hpp"
#include "fpbnn/network.hpp"
#include "fpbnn/rng.hpp"
#include "fpbnn/text.hpp"

namespace fpbnn {

AffineScaling AffineScaling::identity(Eigen::Index dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

AffineScaling AffineScaling::to_unit_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  AffineScaling s{(lo + hi) / 2.0, (hi - lo) / 2.0};
  s.validate();
  return s;
}

AffineScaling AffineScaling::divide_by(const Eigen::VectorXd& scale) {
  AffineScaling s{Eigen::VectorXd::Zero(scale.size()), scale};
  s.validate();
  return s;
}

void AffineScaling::validate() const {
  if (shift.size() != scale.size()) throw ConfigError("scaling shift/scale length mismatch");
  if (!(scale.array() > 0.0).all() || !scale.allFinite() || !shift.allFinite())
    throw ConfigError("scaling factors must be finite and positive");
}

Eigen::MatrixXd AffineScaling::apply(const Eigen::MatrixXd& raw) const {
  if (raw.cols() != dim()) throw InputShapeError("scaling dimension mismatch");
  return (raw.rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::MatrixXd AffineScaling::invert(const Eigen::MatrixXd& scaled) const {
  if (scaled.cols() != dim()) throw InputShapeError("scaling dimension mismatch");
  return (scaled.array().rowwise() * scale.transpose().array()).matrix().rowwise() +
         shift.transpose();
}

Dataset Dataset::from_raw(const Eigen::MatrixXd& X_raw, const Eigen::MatrixXd& Y_raw,
                          const Eigen::VectorXd& noise_var_raw, AffineScaling input_scaling,
                          AffineScaling output_scaling) {
  Dataset d;
  d.X = input_scaling.apply(X_raw);
  d.Y = output_scaling.apply(Y_raw);
  d.noise_var = noise_var_raw.cwiseQuotient(output_scaling.scale.cwiseAbs2());
  d.input_scaling = std::move(input_scaling);
  d.output_scaling = std::move(output_scaling);
  d.validate();
  return d;
}

Eigen::VectorXd Dataset::raw_noise_var() const {
  return noise_var.cwiseProduct(output_scaling.scale.cwiseAbs2());
}

void Dataset::validate() const {
  if (X.rows() != Y.rows()) throw InputShapeError("X and Y have different row counts");
  if (noise_var.size() != Y.cols()) throw ConfigError("noise covariance must have one entry per output");
  if (!(noise_var.array() > 0.0).all()) throw ConfigError("noise variances must be > 0");
  input_scaling.validate();
  output_scaling.validate();
  if (input_scaling.dim() != X.cols() || output_scaling.dim() != Y.cols())
    throw ConfigError("scaling dimensions do not match data");
  if (!X.allFinite() || !Y.allFinite()) throw ConfigError("dataset contains non-finite values");
}

Dataset Dataset::head(Eigen::Index n) const {
  if (n < 0 || n > size()) throw InputShapeError("head() beyond dataset size");
  Dataset d = *this;
  d.X = X.topRows(n);
  d.Y = Y.topRows(n);
  return d;
}

Dataset resample_likelihood(const Dataset& data, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Dataset out = data;
  const Eigen::VectorXd sd = data.noise_var.cwiseSqrt();
  for (Eigen::Index i = 0; i < out.Y.rows(); ++i)
    for (Eigen::Index j = 0; j < out.Y.cols(); ++j) out.Y(i, j) += sd[j] * standard_normal(rng);
  return out;
}

Dataset resample_bootstrap(const Dataset& data, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Dataset out = data;
  const Eigen::Index N = data.size();
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto src = std::min<Eigen::Index>(N - 1, static_cast<Eigen::Index>(open_uniform(rng) * N));
    out.X.row(i) = data.X.row(src);
    out.Y.row(i) = data.Y.row(src);
  }
  return out;
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::string> default_names(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

}  // namespace

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& values,
                      const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
    out << '\n';
  }
}

Eigen::MatrixXd read_csv_matrix(const std::string& path, std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path + "' is empty");
  const auto names = split(line, ',');
  if (header) *header = names;
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != names.size())
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(names.size()) + " fields");
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < names.size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::string content_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(bytes.data(), bytes.size())));
  return buf;
}

void write_dataset(const std::string& csv_path, const Dataset& data,
                   const DatasetProvenance& provenance) {
  data.validate();
  auto in_names = data.input_names.empty() ? default_names("x", data.input_dim()) : data.input_names;
  auto out_names = data.output_names.empty() ? default_names("y", data.output_dim()) : data.output_names;
  std::vector<std::string> header = in_names;
  header.insert(header.end(), out_names.begin(), out_names.end());
  Eigen::MatrixXd table(data.size(), data.input_dim() + data.output_dim());
  table << data.raw_X(), data.raw_Y();
  write_csv_matrix(csv_path, table, header);

  nlohmann::ordered_json meta;
  meta["inputs"] = in_names;
  meta["outputs"] = out_names;
  meta["rows"] = data.size();
  meta["noise_var_raw"] = to_std(data.raw_noise_var());
  meta["input_scaling"] = {{"shift", to_std(data.input_scaling.shift)},
                           {"scale", to_std(data.input_scaling.scale)}};
  meta["output_scaling"] = {{"shift", to_std(data.output_scaling.shift)},
                            {"scale", to_std(data.output_scaling.scale)}};
  meta["generator"] = provenance.generator;
  meta["distribution"] = provenance.distribution;
  meta["seed"] = provenance.seed;
  meta["coefficients_of_variation"] = provenance.coefficients_of_variation;
  meta["content_hash"] = content_hash(csv_path);
  std::ofstream out(csv_path + ".meta.json");
  if (!out) throw FormatError("cannot write sidecar for '" + csv_path + "'");
  out << meta.dump(2) << '\n';
}

Dataset read_dataset(const std::string& csv_path) {
  std::ifstream side(csv_path + ".meta.json");
  if (!side) throw FormatError("missing sidecar '" + csv_path + ".meta.json'");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(side);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad sidecar for '" + csv_path + "': " + e.what());
  }
  std::vector<std::string> header;
  const Eigen::MatrixXd table = read_csv_matrix(csv_path, &header);
  try {
    const auto in_names = meta.at("inputs").get<std::vector<std::string>>();
    const auto out_names = meta.at("outputs").get<std::vector<std::string>>();
    const auto nin = static_cast<Eigen::Index>(in_names.size());
    const auto nout = static_cast<Eigen::Index>(out_names.size());
    if (table.cols() != nin + nout) throw FormatError("'" + csv_path + "' column count disagrees with sidecar");
    for (Eigen::Index j = 0; j < nin + nout; ++j) {
      const auto& want = j < nin ? in_names[j] : out_names[j - nin];
      if (header[j] != want) throw FormatError("'" + csv_path + "' header disagrees with sidecar");
    }
    AffineScaling in{to_eigen(meta.at("input_scaling").at("shift").get<std::vector<double>>()),
                     to_eigen(meta.at("input_scaling").at("scale").get<std::vector<double>>())};
    AffineScaling out{to_eigen(meta.at("output_scaling").at("shift").get<std::vector<double>>()),
                      to_eigen(meta.at("output_scaling").at("scale").get<std::vector<double>>())};
    Dataset d = Dataset::from_raw(table.leftCols(nin), table.rightCols(nout),
                                  to_eigen(meta.at("noise_var_raw").get<std::vector<double>>()),
                                  std::move(in), std::move(out));
    d.input_names = in_names;
    d.output_names = out_names;
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad sidecar for '" + csv_path + "': " + e.what());
  }
}

}  // namespace fpbnn
