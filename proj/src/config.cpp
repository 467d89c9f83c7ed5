#include "apnn/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "apnn/errors.hpp"

namespace apnn {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects whatever is left unread.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      out = v->get<double>();
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->is_number_unsigned() || v->get<long long>() >= 0) {
          out = v->get<Int>();
          return;
        }
        throw ConfigError(field(key), "must be >= 0");
      } else {
        out = v->get<Int>();
      }
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = get(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = get(key)) {
      if (!v->is_array()) throw ConfigError(field(key), "expected an array of numbers");
      out.clear();
      for (const json& e : *v) {
        if (!e.is_number()) throw ConfigError(field(key), "expected an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void positive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field, "must be a positive number");
}

}  // namespace

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epsilon = epsilon;
  t.network = network;
  t.sampler.dimension = dimension;
  t.sampler.horizon = horizon;
  t.sampler.interior = interior;
  t.sampler.initial = initial;
  t.sampler.boundary = boundary;
  t.schedule = schedule;
  t.weights = weights;
  t.phi_convention = phi_convention;
  t.boundary_loss = boundary > 0;
  t.iterations = iterations;
  t.seed = seed;
  t.log_every = log_every;
  return t;
}

void RunConfig::validate() const {
  if (dimension != 1 && dimension != 2) throw ConfigError("dimension", "must be 1 or 2");
  positive(epsilon, "epsilon");
  positive(horizon, "horizon");
  if (network.width < 1) throw ConfigError("network.width", "must be >= 1");
  if (network.blocks < 1) throw ConfigError("network.blocks", "must be >= 1");
  if (network.harmonics < 1) throw ConfigError("network.harmonics", "must be >= 1");
  positive(network.time_scale, "network.time_scale");
  if (network.quadrature_nodes < 1) throw ConfigError("network.quadrature_nodes", "must be >= 1");
  positive(schedule.eta0, "schedule.eta0");
  if (!(schedule.gamma > 0.0 && schedule.gamma <= 1.0)) {
    throw ConfigError("schedule.gamma", "must lie in (0, 1]");
  }
  if (schedule.period < 1) throw ConfigError("schedule.period", "must be >= 1");
  if (interior < 1) throw ConfigError("counts.interior", "must be >= 1");
  if (initial < 1) throw ConfigError("counts.initial", "must be >= 1");
  if (boundary < 0) throw ConfigError("counts.boundary", "must be >= 0");
  if (boundary > 0 && network.periodic_embedding) {
    throw ConfigError("counts.boundary", "boundary samples require network.periodic_embedding = false");
  }
  positive(weights.lambda1, "weights.lambda1");
  positive(weights.lambda2, "weights.lambda2");
  positive(weights.lambda3, "weights.lambda3");
  positive(weights.lambda4, "weights.lambda4");
  if (iterations < 0) throw ConfigError("iterations", "must be >= 0");
  if (log_every < 1) throw ConfigError("log_every", "must be >= 1");
  if (reference.grid.nx < 3) throw ConfigError("reference.nx", "must be >= 3");
  if (dimension == 2 && reference.grid.ny < 3) throw ConfigError("reference.ny", "must be >= 3");
  if (reference.grid.velocity_nodes < 1) throw ConfigError("reference.velocity_nodes", "must be >= 1");
  if (reference.grid.dt < 0.0) throw ConfigError("reference.dt", "must be >= 0");
  positive(reference.grid.cfl, "reference.cfl");
  if (reference.grid.cfl > 1.0) throw ConfigError("reference.cfl", "must be <= 1");
  positive(reference.grid.diffusive, "reference.diffusive");
  if (!(reference.limit_oracle_below >= 0.0)) {
    throw ConfigError("reference.limit_oracle_below", "must be >= 0");
  }
  if (evaluation.times.empty()) throw ConfigError("evaluation.times", "must not be empty");
  for (std::size_t k = 0; k < evaluation.times.size(); ++k) {
    const double t = evaluation.times[k];
    if (!(t > 0.0) || t > horizon * (1.0 + 1e-12)) {
      throw ConfigError("evaluation.times", "each time must lie in (0, horizon]");
    }
    if (k > 0 && !(t > evaluation.times[k - 1])) {
      throw ConfigError("evaluation.times", "must be strictly increasing");
    }
  }
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
  for (double e : epsilons) positive(e, "epsilons");
}

RunConfig parse_run_config(const json& j) {
  RunConfig c;
  ObjectReader root(j, "");
  root.integer("dimension", c.dimension);
  if (c.dimension != 1 && c.dimension != 2) throw ConfigError("dimension", "must be 1 or 2");
  // Dimension-dependent defaults.
  c.network.width = c.dimension == 1 ? 128 : 256;
  c.iterations = c.dimension == 1 ? 20000 : 50000;

  root.number("epsilon", c.epsilon);
  root.number("horizon", c.horizon);
  if (const json* n = root.get("network")) {
    ObjectReader r(*n, "network");
    r.integer("width", c.network.width);
    r.integer("blocks", c.network.blocks);
    r.integer("harmonics", c.network.harmonics);
    r.number("time_scale", c.network.time_scale);
    r.boolean("periodic_embedding", c.network.periodic_embedding);
    r.integer("quadrature_nodes", c.network.quadrature_nodes);
    r.finish();
  }
  if (const json* s = root.get("schedule")) {
    ObjectReader r(*s, "schedule");
    r.number("eta0", c.schedule.eta0);
    r.number("gamma", c.schedule.gamma);
    r.integer("period", c.schedule.period);
    r.finish();
  }
  if (const json* s = root.get("counts")) {
    ObjectReader r(*s, "counts");
    r.integer("interior", c.interior);
    r.integer("initial", c.initial);
    r.integer("boundary", c.boundary);
    r.finish();
  }
  if (const json* s = root.get("weights")) {
    ObjectReader r(*s, "weights");
    r.number("lambda1", c.weights.lambda1);
    r.number("lambda2", c.weights.lambda2);
    r.number("lambda3", c.weights.lambda3);
    r.number("lambda4", c.weights.lambda4);
    r.finish();
  }
  std::string conv = "non-stiff";
  root.string("phi_convention", conv);
  if (conv == "non-stiff") {
    c.phi_convention = PhiConvention::kNonStiff;
  } else if (conv == "stiff") {
    c.phi_convention = PhiConvention::kStiff;
  } else {
    throw ConfigError("phi_convention", "expected \"non-stiff\" or \"stiff\"");
  }
  root.integer("iterations", c.iterations);
  root.integer("seed", c.seed);
  root.integer("log_every", c.log_every);
  if (const json* s = root.get("reference")) {
    ObjectReader r(*s, "reference");
    r.integer("nx", c.reference.grid.nx);
    r.integer("ny", c.reference.grid.ny);
    r.integer("velocity_nodes", c.reference.grid.velocity_nodes);
    r.number("dt", c.reference.grid.dt);
    r.number("cfl", c.reference.grid.cfl);
    r.number("diffusive", c.reference.grid.diffusive);
    r.number("limit_oracle_below", c.reference.limit_oracle_below);
    r.finish();
  }
  c.evaluation.times = {0.5 * c.horizon, c.horizon};
  if (const json* s = root.get("evaluation")) {
    ObjectReader r(*s, "evaluation");
    r.numbers("times", c.evaluation.times);
    r.finish();
  }
  root.string("output_dir", c.output_dir);
  root.numbers("epsilons", c.epsilons);
  root.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_run_config(j);
}

json to_json(const RunConfig& c) {
  json j;
  j["dimension"] = c.dimension;
  j["epsilon"] = c.epsilon;
  j["horizon"] = c.horizon;
  j["network"] = {{"width", c.network.width},
                  {"blocks", c.network.blocks},
                  {"harmonics", c.network.harmonics},
                  {"time_scale", c.network.time_scale},
                  {"periodic_embedding", c.network.periodic_embedding},
                  {"quadrature_nodes", c.network.quadrature_nodes}};
  j["schedule"] = {{"eta0", c.schedule.eta0}, {"gamma", c.schedule.gamma}, {"period", c.schedule.period}};
  j["counts"] = {{"interior", c.interior}, {"initial", c.initial}, {"boundary", c.boundary}};
  j["weights"] = {{"lambda1", c.weights.lambda1},
                  {"lambda2", c.weights.lambda2},
                  {"lambda3", c.weights.lambda3},
                  {"lambda4", c.weights.lambda4}};
  j["phi_convention"] = c.phi_convention == PhiConvention::kNonStiff ? "non-stiff" : "stiff";
  j["iterations"] = c.iterations;
  j["seed"] = c.seed;
  j["log_every"] = c.log_every;
  j["reference"] = {{"nx", c.reference.grid.nx},
                    {"ny", c.reference.grid.ny},
                    {"velocity_nodes", c.reference.grid.velocity_nodes},
                    {"dt", c.reference.grid.dt},
                    {"cfl", c.reference.grid.cfl},
                    {"diffusive", c.reference.grid.diffusive},
                    {"limit_oracle_below", c.reference.limit_oracle_below}};
  j["evaluation"] = {{"times", c.evaluation.times}};
  j["output_dir"] = c.output_dir;
  if (!c.epsilons.empty()) j["epsilons"] = c.epsilons;
  return j;
}

}  // namespace apnn
