#include "fpbnn/ensemble_model.hpp"

#include "fpbnn/container.hpp"
#include "fpbnn/errors.hpp"
#include "fpbnn/text.hpp"

namespace fpbnn {

std::string to_string(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::Vanilla:
      return "vanilla";
    case TrainingMode::Factorized:
      return "factorized";
    case TrainingMode::Correlated:
      return "correlated";
  }
  return "vanilla";
}

TrainingMode parse_training_mode(const std::string& name) {
  if (name == "vanilla") return TrainingMode::Vanilla;
  if (name == "factorized") return TrainingMode::Factorized;
  if (name == "correlated") return TrainingMode::Correlated;
  throw ConfigError("unknown training mode '" + name + "'");
}

void EnsembleModel::validate() const {
  spec.validate();
  if (members.empty()) throw ConfigError("ensemble has no members");
  for (const auto& m : members)
    if (!(m.spec() == spec)) throw ConfigError("ensemble member architecture mismatch");
  if (mode != TrainingMode::Vanilla && anchors.size() != members.size())
    throw ConfigError("anchored ensemble needs one anchor per member");
  for (const auto& a : anchors)
    if (!(a.spec() == spec)) throw ConfigError("anchor architecture mismatch");
  if (mode == TrainingMode::Correlated && !anchor_prior)
    throw ConfigError("correlated ensemble requires an anchor prior");
  if (noise_var.size() != spec.output_dim) throw ConfigError("noise covariance size mismatch");
  if (input_scaling.dim() != spec.input_dim || output_scaling.dim() != spec.output_dim)
    throw ConfigError("scaling dimension mismatch");
}

namespace {

Eigen::MatrixXd stack_columns(const std::vector<ParamVector>& v, Eigen::Index d) {
  Eigen::MatrixXd m(d, static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = v[k].values();
  return m;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) s += (i ? "," : "") + names[i];
  return s.empty() ? "-" : s;
}

std::vector<std::string> split_names(const std::string& s) {
  return s == "-" ? std::vector<std::string>{} : split(s, ',');
}

}  // namespace

void save_ensemble(const std::string& path, const EnsembleModel& model) {
  model.validate();
  Container c("ensemble");
  write_spec(c, model.spec);
  c.set_meta("mode", to_string(model.mode));
  c.set_meta("members", std::to_string(model.members.size()));
  c.set_meta("has_anchor_prior", model.anchor_prior ? "1" : "0");
  c.set_meta("input_names", join_names(model.input_names));
  c.set_meta("output_names", join_names(model.output_names));
  const Eigen::Index d = model.spec.param_count();
  c.add_array("members", stack_columns(model.members, d));
  c.add_array("anchors", stack_columns(model.anchors, d));
  c.add_array("factorized_precision", model.factorized_precision);
  c.add_array("noise_var", model.noise_var);
  c.add_array("input_shift", model.input_scaling.shift);
  c.add_array("input_scale", model.input_scaling.scale);
  c.add_array("output_shift", model.output_scaling.shift);
  c.add_array("output_scale", model.output_scaling.scale);
  if (model.anchor_prior) write_anchor_prior(c, *model.anchor_prior, "prior_");
  c.write(path);
}

EnsembleModel load_ensemble(const std::string& path) {
  const Container c = Container::read(path, "ensemble");
  EnsembleModel m;
  m.spec = read_spec(c);
  m.mode = parse_training_mode(c.meta("mode"));
  m.input_names = split_names(c.meta("input_names"));
  m.output_names = split_names(c.meta("output_names"));
  const auto& members = c.array("members");
  for (Eigen::Index k = 0; k < members.cols(); ++k) m.members.emplace_back(m.spec, members.col(k));
  const auto& anchors = c.array("anchors");
  for (Eigen::Index k = 0; k < anchors.cols(); ++k) m.anchors.emplace_back(m.spec, anchors.col(k));
  auto column = [&](const std::string& name) -> Eigen::VectorXd {
    const auto& a = c.array(name);
    return a.size() ? Eigen::VectorXd(a.col(0)) : Eigen::VectorXd();
  };
  m.factorized_precision = column("factorized_precision");
  m.noise_var = column("noise_var");
  m.input_scaling = {column("input_shift"), column("input_scale")};
  m.output_scaling = {column("output_shift"), column("output_scale")};
  if (c.meta("has_anchor_prior") == "1") m.anchor_prior = read_anchor_prior(c, "prior_");
  m.validate();
  return m;
}

}  // namespace fpbnn
