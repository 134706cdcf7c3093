#include "fpbnn/experiment_config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "fpbnn/errors.hpp"
#include "fpbnn/experiments.hpp"

namespace fpbnn {

using nlohmann::json;

namespace {

// Thin cursor over a JSON object that remembers its path for error messages
// and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("field '" + (key.empty() ? path_ : where(key)) + "': " + what);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<int> ints(const std::string& key, std::vector<int> fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_array()) fail(key, "expected an array of integers");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) fail(key, "expected an array of integers");
      out.push_back(e.get<int>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown field '" + where(it.key()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
auto wrap(const Fields& f, const std::string& key, F&& parse) {
  try {
    return parse();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind("field '", 0) == 0 || msg.rfind("unknown field", 0) == 0) throw;
    f.fail(key, msg);
  }
}

NetworkSpec parse_network(const json& j) {
  Fields f(j, "network");
  NetworkSpec s;
  s.input_dim = f.integer("input_dim", 1);
  s.hidden_widths = f.ints("hidden_widths", {20, 20, 20, 20});
  s.output_dim = f.integer("output_dim", 1);
  s.activation_slope = f.number("activation_slope", 0.01);
  f.finish();
  try {
    s.validate();
  } catch (const Error& e) {
    f.fail("", e.what());
  }
  return s;
}

FunctionalPrior parse_prior(const json& j, const std::string& path, bool& fit_slope) {
  Fields f(j, path);
  FunctionalPrior p;
  fit_slope = false;
  if (f.has("mean")) {
    Fields m(f.at("mean"), f.where("mean"));
    const std::string kind = m.string("kind", "zero");
    p.mean.kind = wrap(m, "kind", [&] { return parse_mean_kind(kind); });
    p.mean.feature = m.integer("feature", 0);
    if (m.has("slope") && m.at("slope").is_string()) {
      if (m.at("slope").get<std::string>() != "fit") m.fail("slope", "expected a number or \"fit\"");
      fit_slope = true;
      if (p.mean.kind != MeanFunction::Kind::Linear) m.fail("slope", "\"fit\" needs kind linear");
    } else {
      p.mean.slope = m.number("slope", 0.0);
    }
    p.mean.cubic_scale = m.number("scale", 5.0);
    p.mean.theta = m.number("theta", 0.0);
    p.mean.feature_scale = m.number("feature_scale", 1.0);
    p.mean.feature_offset = m.number("feature_offset", 0.0);
    m.finish();
  }
  p.kernel_amp = f.number("kernel_amp", 1.0);
  p.lengthscale = f.number("lengthscale", 1.0);
  p.features = f.ints("features", {0});
  if (f.has("lower")) p.bounds.lower = f.number("lower", 0.0);
  if (f.has("upper")) p.bounds.upper = f.number("upper", 0.0);
  f.finish();
  return p;
}

DataSource parse_data(const json& j, std::uint64_t master_seed) {
  Fields f(j, "data");
  DataSource d;
  d.generator = f.string("generator", "csv");
  d.seed_follows_master = !f.has("seed");
  const std::uint64_t seed = f.seed("seed", master_seed);
  if (d.generator == "csv") {
    d.train_path = f.string("train", "");
    d.test_path = f.string("test", "");
    if (d.train_path.empty()) f.fail("train", "csv data needs a training file");
  } else if (d.generator == "1d") {
    d.one_d.n_region1 = f.integer("n_region1", d.one_d.n_region1);
    d.one_d.n_region2 = f.integer("n_region2", d.one_d.n_region2);
    d.one_d.noise_std = f.number("noise_std", d.one_d.noise_std);
    d.one_d.seed = seed;
    wrap(f, "", [&] { d.one_d.validate(); return 0; });
  } else if (d.generator == "synthetic-materials") {
    d.split = f.string("split", "ind");
    if (d.split != "ind" && d.split != "ood") f.fail("split", "expected \"ind\" or \"ood\"");
    d.n_train = f.integer("n_train", 50);
    d.rve.n_test = f.integer("n_test", d.rve.n_test);
    d.rve.n_train = d.n_train;
    if (f.has("ood_beta")) {
      const json& b = f.at("ood_beta");
      if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
        f.fail("ood_beta", "expected [alpha, beta]");
      d.rve.ood_distribution = SplitDistribution::beta_dist(b[0].get<double>(), b[1].get<double>());
    }
    d.rve.seed = seed;
    wrap(f, "", [&] { d.rve.validate(); return 0; });
  } else {
    f.fail("generator", "unknown generator '" + d.generator + "'");
  }
  f.finish();
  return d;
}

void parse_adam(const json& j, const std::string& path, AdamConfig& a) {
  Fields f(j, path);
  a.epochs = f.integer("epochs", a.epochs);
  a.learning_rate = f.number("learning_rate", a.learning_rate);
  a.final_lr_fraction = f.number("final_lr_fraction", a.final_lr_fraction);
  a.batch_size = f.integer("batch_size", a.batch_size);
  f.finish();
  wrap(f, "", [&] { a.validate(); return 0; });
}

void parse_pretrain(const json& j, PretrainConfig& p) {
  Fields f(j, "pretrain");
  p.optimizer.epochs = f.integer("epochs", p.optimizer.epochs);
  p.optimizer.learning_rate = f.number("learning_rate", p.optimizer.learning_rate);
  p.optimizer.final_lr_fraction = f.number("final_lr_fraction", p.optimizer.final_lr_fraction);
  p.optimizer.batch_size = f.integer("batch_size", p.optimizer.batch_size);
  p.measurement_points = f.integer("measurement_points", p.measurement_points);
  p.init_perturbation = f.number("init_perturbation", p.init_perturbation);
  p.shared_points = f.boolean("shared_points", p.shared_points);
  f.finish();
  wrap(f, "", [&] { p.validate(); return 0; });
}

int line_of(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ":" + std::to_string(line_of(text, e.byte)) + ": malformed JSON (" +
                      e.what() + ")");
  }
}

}  // namespace

PriorStudyConfig parse_prior_study_config(const std::string& text, const std::string& origin) {
  const json j = parse_json(text, origin);
  PriorStudyConfig c;
  Fields f(j, "");
  if (f.has("network")) c.network = parse_network(f.at("network"));
  if (f.has("priors")) {
    const json& ps = f.at("priors");
    if (!ps.is_array() || ps.empty()) f.fail("priors", "expected a non-empty array");
    c.priors.clear();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string path = "priors[" + std::to_string(i) + "]";
      if (!ps[i].is_object()) throw ConfigError("field '" + path + "': expected an object");
      json body = ps[i];
      NamedPrior np;
      np.name = body.value("name", std::string(1, char('A' + i)));
      if (body.contains("epochs") && !body["epochs"].is_number_integer())
        throw ConfigError("field '" + path + ".epochs': expected an integer");
      np.pretrain_epochs = body.value("epochs", 200);
      body.erase("name");
      body.erase("epochs");
      bool fit = false;
      np.prior = parse_prior(body, path, fit);
      if (fit) throw ConfigError("field '" + path + ".mean.slope': \"fit\" needs training data");
      c.priors.push_back(std::move(np));
    }
  }
  c.ensemble_size = f.integer("ensemble_size", c.ensemble_size);
  if (f.has("pretrain")) parse_pretrain(f.at("pretrain"), c.pretrain);
  c.reconstruction_samples = f.integer("reconstruction_samples", c.reconstruction_samples);
  c.eval_points = f.integer("eval_points", c.eval_points);
  c.eval_lo = f.number("eval_lo", c.eval_lo);
  c.eval_hi = f.number("eval_hi", c.eval_hi);
  c.isotropic_variance = f.number("isotropic_variance", c.isotropic_variance);
  c.seed = f.seed("seed", c.seed);
  c.workers = f.integer("workers", c.workers);
  f.finish();
  return c;
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin) {
  const json j = parse_json(text, origin);
  ExperimentConfig c;
  Fields f(j, "");
  c.ensemble.master_seed = f.seed("seed", 0);
  if (f.has("network")) c.network = parse_network(f.at("network"));
  if (f.has("prior")) {
    const json& p = f.at("prior");
    if (p.is_string()) {
      if (p.get<std::string>() != "materials") f.fail("prior", "expected an object, array or \"materials\"");
      c.prior_source = PriorSource::Materials;
    } else if (p.is_array()) {
      c.prior_source = PriorSource::Explicit;
      for (std::size_t i = 0; i < p.size(); ++i) {
        bool fit = false;
        c.prior.push_back(parse_prior(p[i], "prior[" + std::to_string(i) + "]", fit));
        c.fit_slope.push_back(fit);
      }
    } else {
      c.prior_source = PriorSource::Explicit;
      bool fit = false;
      c.prior.push_back(parse_prior(p, "prior", fit));
      c.fit_slope.push_back(fit);
    }
  }
  c.mi_threshold = f.number("mi_threshold", c.mi_threshold);
  if (f.has("data")) c.data = parse_data(f.at("data"), c.ensemble.master_seed);
  if (f.has("mode")) {
    const std::string m = f.string("mode", "");
    c.ensemble.mode = wrap(f, "mode", [&] { return parse_training_mode(m); });
  }
  c.ensemble.ensemble_size = f.integer("ensemble_size", c.ensemble.ensemble_size);
  if (f.has("resampling")) {
    const std::string r = f.string("resampling", "");
    c.ensemble.resampling = wrap(f, "resampling", [&] { return parse_resampling(r); });
  }
  if (f.has("optimizer")) parse_adam(f.at("optimizer"), "optimizer", c.ensemble.optimizer);
  if (f.has("pretrain")) parse_pretrain(f.at("pretrain"), c.ensemble.pretrain);
  if (f.has("factorized_lambda")) c.ensemble.factorized_lambda = f.number("factorized_lambda", 1.0);
  c.ensemble.truncation_tol = f.number("truncation_tol", c.ensemble.truncation_tol);
  c.ensemble.workers = f.integer("workers", c.ensemble.workers);
  c.ensemble.trace_every = f.integer("trace_every", c.ensemble.trace_every);
  c.out_dir = f.string("out_dir", c.out_dir);
  f.finish();
  return c;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_text_file(path), path);
}

void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.ensemble.master_seed = seed;
  if (config.data.seed_follows_master) {
    config.data.one_d.seed = seed;
    config.data.rve.seed = seed;
  }
}

void ExperimentConfig::validate() const {
  if (ensemble.ensemble_size < 1) throw ConfigError("field 'ensemble_size': must be >= 1");
  if (ensemble.workers < 1) throw ConfigError("field 'workers': must be >= 1");
  if (ensemble.factorized_lambda && !(*ensemble.factorized_lambda > 0.0))
    throw ConfigError("field 'factorized_lambda': must be > 0");
  try {
    network.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("field 'network': ") + e.what());
  }
  const bool has_prior = prior_source != PriorSource::None;
  if (ensemble.mode == TrainingMode::Correlated && !has_prior)
    throw ConfigError("field 'prior': correlated mode requires a functional prior");
  if (ensemble.mode == TrainingMode::Factorized && !has_prior && !ensemble.factorized_lambda)
    throw ConfigError("field 'prior': factorized mode requires a prior or factorized_lambda");
  if (has_prior && ensemble.mode != TrainingMode::Vanilla && ensemble.ensemble_size < 2)
    throw ConfigError("field 'ensemble_size': anchored modes with a functional prior need K >= 2");
  if (prior_source == PriorSource::Explicit) {
    if (static_cast<int>(prior.size()) != network.output_dim)
      throw ConfigError("field 'prior': need one prior per output (" +
                        std::to_string(network.output_dim) + "), got " + std::to_string(prior.size()));
    for (std::size_t i = 0; i < prior.size(); ++i) {
      try {
        prior[i].validate(network.input_dim);
      } catch (const Error& e) {
        throw ConfigError("field 'prior[" + std::to_string(i) + "]': " + e.what());
      }
    }
  }
  if (data.generator == "csv") {
    if (!std::filesystem::exists(data.train_path))
      throw ConfigError("field 'data.train': file '" + data.train_path + "' does not exist");
    if (!data.test_path.empty() && !std::filesystem::exists(data.test_path))
      throw ConfigError("field 'data.test': file '" + data.test_path + "' does not exist");
  } else if (data.generator == "1d") {
    if (network.input_dim != 1 || network.output_dim != 1)
      throw ConfigError("field 'network': the 1d generator needs input_dim = output_dim = 1");
  } else if (data.generator == "synthetic-materials") {
    if (network.input_dim != 4 || network.output_dim != 5)
      throw ConfigError("field 'network': synthetic-materials needs input_dim 4, output_dim 5");
    if (data.n_train < 0 || data.n_train > data.rve.n_train)
      throw ConfigError("field 'data.n_train': out of range");
  } else {
    throw ConfigError("field 'data.generator': unknown generator '" + data.generator + "'");
  }
  if (prior_source == PriorSource::Materials && data.generator != "synthetic-materials" &&
      data.generator != "csv")
    throw ConfigError("field 'prior': the materials prior needs multi-input data");
}

LoadedData load_data(const DataSource& source) {
  if (source.generator == "csv") {
    LoadedData d{read_dataset(source.train_path), std::nullopt};
    if (!source.test_path.empty()) d.test = read_dataset(source.test_path);
    return d;
  }
  if (source.generator == "1d") return {gen_1d_dataset(source.one_d), std::nullopt};
  if (source.generator == "synthetic-materials") {
    MaterialsDatasets m = gen_materials_datasets(source.rve);
    Dataset& train = source.split == "ood" ? m.train_ood : m.train_ind;
    return {train.head(source.n_train), std::move(m.test)};
  }
  throw ConfigError("unknown data generator '" + source.generator + "'");
}

MultiOutputPrior resolve_prior(const ExperimentConfig& config, const Dataset& train) {
  switch (config.prior_source) {
    case PriorSource::None:
      return {};
    case PriorSource::Materials:
      return build_materials_prior(train, config.mi_threshold).priors;
    case PriorSource::Explicit:
      break;
  }
  MultiOutputPrior p = config.prior;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j < config.fit_slope.size() && config.fit_slope[j])
      p[j].mean.slope = fit_linear_mean(train.X, train.Y.col(static_cast<Eigen::Index>(j)),
                                        p[j].mean.feature);
  }
  return p;
}

}  // namespace fpbnn
