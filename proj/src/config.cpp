#include "lazyflow/config.hpp"

#include <fstream>
#include <set>

#include "lazyflow/errors.hpp"

namespace lazyflow {

using nlohmann::json;

std::string to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::tau: return "tau";
    case SweepVariable::alpha: return "alpha";
    case SweepVariable::width: return "m";
  }
  return "?";
}

SweepVariable parse_sweep_variable(const std::string& s) {
  if (s == "tau") return SweepVariable::tau;
  if (s == "alpha") return SweepVariable::alpha;
  if (s == "m" || s == "width") return SweepVariable::width;
  throw ConfigError("/sweep/variable", "expected one of tau, alpha, m; got '" + s + "'");
}

std::string to_string(ScaleRule r) {
  switch (r) {
    case ScaleRule::constant: return "constant";
    case ScaleRule::inv_sqrt_width: return "inv_sqrt_width";
    case ScaleRule::inv_width: return "inv_width";
  }
  return "?";
}

namespace {

/// A JSON object with its location, for error messages.
class Node {
 public:
  Node(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
    for (const auto& [k, v] : j_.items())
      if (!allowed.count(k)) throw ConfigError(path_ + "/" + k, "unknown key");
  }

  bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  std::string at(const std::string& k) const { return path_ + "/" + k; }
  const json& raw(const std::string& k) const { return j_.at(k); }

  template <class T>
  T get(const std::string& k, T fallback) const {
    if (!has(k)) return fallback;
    return convert<T>(k);
  }

  template <class T>
  T require(const std::string& k) const {
    if (!has(k)) throw ConfigError(at(k), "required field is missing");
    return convert<T>(k);
  }

  double positive(const std::string& k, double fallback) const {
    const double v = get<double>(k, fallback);
    if (!(v > 0.0)) throw ConfigError(at(k), "must be positive");
    return v;
  }

  long at_least(const std::string& k, long fallback, long lo) const {
    const long v = get<long>(k, fallback);
    if (v < lo) throw ConfigError(at(k), "must be >= " + std::to_string(lo));
    return v;
  }

  Node child(const std::string& k, std::set<std::string> allowed) const {
    static const json empty = json::object();
    return Node(has(k) ? j_.at(k) : empty, at(k), std::move(allowed));
  }

 private:
  template <class T>
  T convert(const std::string& k) const {
    const json& v = j_.at(k);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(at(k), "expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ConfigError(at(k), "expected an integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(at(k), "expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(at(k), "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(at(k), e.what());
    }
  }

  const json& j_;
  std::string path_;
};

ScaleRule parse_scale_rule(const std::string& s, const std::string& path) {
  if (s == "constant") return ScaleRule::constant;
  if (s == "inv_sqrt_width" || s == "1/sqrt(m)") return ScaleRule::inv_sqrt_width;
  if (s == "inv_width" || s == "1/m") return ScaleRule::inv_width;
  throw ConfigError(path, "expected constant, inv_sqrt_width or inv_width; got '" + s + "'");
}

FlowConfig parse_flow(const Node& f) {
  FlowConfig c;
  c.alpha = f.positive("alpha", 1.0);
  if (f.has("horizon")) c.horizon = f.positive("horizon", 1.0);
  if (f.has("budget")) c.budget = f.positive("budget", 1.0);
  c.max_steps = f.at_least("max_steps", 100000, 1);
  const std::string rule = f.get<std::string>("step_rule", "lipschitz");
  if (rule == "fixed") c.step_rule = StepRule::fixed;
  else if (rule == "lipschitz") c.step_rule = StepRule::lipschitz;
  else if (rule == "curvature") c.step_rule = StepRule::curvature;
  else throw ConfigError(f.at("step_rule"), "expected fixed, lipschitz or curvature; got '" + rule + "'");
  if (c.step_rule == StepRule::fixed) c.step = f.positive("step", 0.0);
  c.step_factor = f.get<double>("step_factor", 0.5);
  if (!(c.step_factor > 0.0 && c.step_factor <= 1.0)) throw ConfigError(f.at("step_factor"), "must lie in (0, 1]");
  if (f.has("lipschitz_h")) c.lipschitz_h = f.positive("lipschitz_h", 1.0);
  c.curvature_refresh = int(f.at_least("curvature_refresh", 10, 1));
  const std::string integ = f.get<std::string>("integrator", "rk4");
  if (integ == "rk4") c.integrator = Integrator::rk4;
  else if (integ == "euler") c.integrator = Integrator::euler;
  else throw ConfigError(f.at("integrator"), "expected rk4 or euler; got '" + integ + "'");
  c.divergence_factor = f.get<double>("divergence_factor", 10.0);
  if (!(c.divergence_factor > 1.0)) throw ConfigError(f.at("divergence_factor"), "must exceed 1");

  const Node r = f.child("record", {"mode", "stride", "per_decade", "store_states"});
  const std::string mode = r.get<std::string>("mode", "logarithmic");
  if (mode == "dense") c.record.mode = RecordMode::dense;
  else if (mode == "stride") c.record.mode = RecordMode::stride;
  else if (mode == "logarithmic") c.record.mode = RecordMode::logarithmic;
  else throw ConfigError(r.at("mode"), "expected dense, stride or logarithmic; got '" + mode + "'");
  c.record.stride = r.at_least("stride", 1, 1);
  c.record.per_decade = int(r.at_least("per_decade", 20, 1));
  c.record.store_states = r.get<bool>("store_states", true);

  const Node s = f.child("stop", {"loss_below", "grad_below", "grad_relative_below"});
  if (s.has("loss_below")) c.stop.loss_below = s.positive("loss_below", 1.0);
  if (s.has("grad_below")) c.stop.grad_below = s.positive("grad_below", 1.0);
  if (s.has("grad_relative_below")) c.stop.grad_relative_below = s.positive("grad_relative_below", 1.0);
  return c;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  const Node root(j, "", {"name", "seed", "teacher", "data", "student", "loss", "flow", "training",
                          "linearized", "sweep", "diagnostics", "kernel", "outputs", "$schema"});
  ExperimentConfig c;
  c.name = root.get<std::string>("name", "experiment");
  if (!root.has("seed")) throw ConfigError("/seed", "a master seed is mandatory");
  if (!root.raw("seed").is_number_unsigned() && !(root.raw("seed").is_number_integer() && root.raw("seed").get<long long>() >= 0))
    throw ConfigError("/seed", "expected a nonnegative integer");
  c.seed = root.raw("seed").get<std::uint64_t>();

  const Node t = root.child("teacher", {"neurons"});
  c.teacher.neurons = t.at_least("neurons", 3, 1);

  const Node d = root.child("data", {"input_dim", "n_train", "n_test"});
  c.data.input_dim = d.at_least("input_dim", 2, 1);
  c.data.n_train = d.at_least("n_train", 100, 1);
  c.data.n_test = d.at_least("n_test", 2000, 1);

  const Node s = root.child("student", {"width", "activation", "beta", "scale_rule", "scale_constant",
                                        "init", "wrappers", "backend"});
  c.student.width = s.at_least("width", 50, 1);
  const std::string act = s.get<std::string>("activation", "relu");
  if (act == "relu") c.student.activation.kind = compute::ActivationKind::relu;
  else if (act == "softplus") c.student.activation.kind = compute::ActivationKind::softplus;
  else throw ConfigError(s.at("activation"), "expected relu or softplus; got '" + act + "'");
  c.student.activation.beta = s.positive("beta", 20.0);
  c.student.scale_rule = parse_scale_rule(s.get<std::string>("scale_rule", "constant"), s.at("scale_rule"));
  c.student.scale_constant = s.positive("scale_constant", 1.0);
  const Node init = s.child("init", {"dist", "std"});
  const std::string dist = init.get<std::string>("dist", "xavier");
  if (dist == "normal") c.student.init = InitDist::normal;
  else if (dist == "xavier") c.student.init = InitDist::xavier;
  else throw ConfigError(init.at("dist"), "expected normal or xavier; got '" + dist + "'");
  c.student.init_std = init.get<double>("std", 1.0);
  if (!(c.student.init_std >= 0.0)) throw ConfigError(init.at("std"), "must be nonnegative");
  if (s.has("wrappers")) {
    const json& w = s.raw("wrappers");
    if (!w.is_array()) throw ConfigError(s.at("wrappers"), "expected an array");
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::string path = s.at("wrappers") + "/" + std::to_string(i);
      if (!w[i].is_string()) throw ConfigError(path, "expected a string");
      const std::string name = w[i].get<std::string>();
      if (name == "symmetrized") c.student.symmetrized = true;
      else if (name == "centered") c.student.centered = true;
      else if (name.rfind("scaled:", 0) == 0) {
        try {
          std::size_t used = 0;
          const double a = std::stod(name.substr(7), &used);
          if (used != name.size() - 7 || !(a > 0.0)) throw std::invalid_argument("bad");
          c.student.scaled = a;
        } catch (const std::exception&) {
          throw ConfigError(path, "expected scaled:<positive number>");
        }
      } else {
        throw ConfigError(path, "expected symmetrized, centered or scaled:<alpha>; got '" + name + "'");
      }
    }
  }
  if (s.has("backend")) {
    const std::string b = s.get<std::string>("backend", "omp");
    if (b == "omp") c.student.backend = compute::Backend::omp;
    else if (b == "serial") c.student.backend = compute::Backend::serial;
    else throw ConfigError(s.at("backend"), "expected omp or serial; got '" + b + "'");
  }
  if (c.student.symmetrized && c.student.width % 2 != 0)
    throw ConfigError(s.at("width"), "a symmetrized student needs an even width");

  const Node l = root.child("loss", {"kind", "target_source", "targets"});
  const std::string kind = l.get<std::string>("kind", "square");
  if (kind != "square") throw ConfigError(l.at("kind"), "only the square loss is supported");
  const std::string src = l.get<std::string>("target_source", "teacher");
  if (src == "teacher") c.target_source = TargetSource::teacher;
  else if (src == "explicit") {
    c.target_source = TargetSource::explicit_values;
    if (!l.has("targets")) throw ConfigError(l.at("targets"), "explicit targets are required");
    const json& tv = l.raw("targets");
    if (!tv.is_array() || Eigen::Index(tv.size()) != c.data.n_train)
      throw ConfigError(l.at("targets"), "expected an array of n_train numbers");
    Matrix y(tv.size(), 1);
    for (std::size_t i = 0; i < tv.size(); ++i) {
      if (!tv[i].is_number()) throw ConfigError(l.at("targets") + "/" + std::to_string(i), "expected a number");
      y(i, 0) = tv[i].get<double>();
    }
    c.explicit_targets = y;
  } else {
    throw ConfigError(l.at("target_source"), "expected teacher or explicit; got '" + src + "'");
  }

  c.flow = parse_flow(root.child("flow", {"alpha", "horizon", "budget", "max_steps", "step_rule", "step",
                                          "step_factor", "lipschitz_h", "curvature_refresh", "integrator",
                                          "divergence_factor", "record", "stop"}));
  c.flow.seed = c.seed;

  const Node tr = root.child("training", {"mode", "batch_size"});
  const std::string mode = tr.get<std::string>("mode", "gd");
  if (mode == "gd") c.mode = TrainingMode::gd;
  else if (mode == "sgd") c.mode = TrainingMode::sgd;
  else throw ConfigError(tr.at("mode"), "expected gd or sgd; got '" + mode + "'");
  c.batch_size = tr.at_least("batch_size", 200, 1);
  c.linearized = root.get<bool>("linearized", false);

  if (root.has("sweep")) {
    const Node sw = root.child("sweep", {"variable", "grid", "repeats", "scale_rules"});
    SweepSpec sp;
    try {
      sp.variable = parse_sweep_variable(sw.get<std::string>("variable", "tau"));
    } catch (const ConfigError& e) {
      throw ConfigError(sw.at("variable"), e.what());
    }
    const json& g = sw.has("grid") ? sw.raw("grid") : json::array();
    if (!g.is_array() || g.empty()) throw ConfigError(sw.at("grid"), "expected a nonempty array of numbers");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g[i].is_number() || !(g[i].get<double>() > 0.0))
        throw ConfigError(sw.at("grid") + "/" + std::to_string(i), "expected a positive number");
      sp.grid.push_back(g[i].get<double>());
    }
    if (sp.variable == SweepVariable::width)
      for (std::size_t i = 0; i < sp.grid.size(); ++i) {
        const double m = sp.grid[i];
        if (m != std::floor(m) || (c.student.symmetrized && long(m) % 2 != 0))
          throw ConfigError(sw.at("grid") + "/" + std::to_string(i), "widths must be (even, when symmetrized) integers");
      }
    sp.repeats = int(sw.at_least("repeats", 1, 1));
    if (sw.has("scale_rules")) {
      const json& r = sw.raw("scale_rules");
      if (!r.is_array()) throw ConfigError(sw.at("scale_rules"), "expected an array");
      for (std::size_t i = 0; i < r.size(); ++i) {
        const std::string path = sw.at("scale_rules") + "/" + std::to_string(i);
        if (!r[i].is_string()) throw ConfigError(path, "expected a string");
        sp.scale_rules.push_back(parse_scale_rule(r[i].get<std::string>(), path));
      }
    }
    c.sweep = sp;
  }

  const Node dg = root.child("diagnostics", {"radius", "samples", "d2_epsilon", "d2_directions", "kappa"});
  c.norms.radius = dg.positive("radius", 0.1);
  c.norms.samples = int(dg.at_least("samples", 16, 16));
  c.norms.d2_epsilon = dg.positive("d2_epsilon", 1e-4);
  c.norms.d2_directions = int(dg.at_least("d2_directions", 64, 1));
  c.norms.seed = c.seed;
  c.kappa = dg.get<bool>("kappa", true);

  const Node k = root.child("kernel", {"input_dim", "width", "seeds", "grid_points", "outer_moment",
                                       "inner_moment", "spectrum_points"});
  c.kernel.input_dim = k.at_least("input_dim", 10, 2);
  c.kernel.width = k.at_least("width", 1000, 1);
  c.kernel.seeds = int(k.at_least("seeds", 10, 0));
  c.kernel.grid_points = int(k.at_least("grid_points", 64, 2));
  c.kernel.outer_moment = k.positive("outer_moment", 1.0);
  if (k.has("inner_moment")) c.kernel.inner_moment = k.positive("inner_moment", 1.0);
  c.kernel.spectrum_points = k.at_least("spectrum_points", 500, 1);

  const Node o = root.child("outputs", {"directory", "trajectories", "snapshots", "neuron_cloud"});
  c.outputs.directory = o.get<std::string>("directory", "lazyflow-out");
  c.outputs.trajectories = o.get<bool>("trajectories", true);
  c.outputs.snapshots = o.get<bool>("snapshots", false);
  c.outputs.neuron_cloud = o.get<bool>("neuron_cloud", false);
  if (c.outputs.neuron_cloud && c.data.input_dim != 2)
    throw ConfigError("/outputs/neuron_cloud", "neuron clouds need input_dim = 2");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("/", "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["teacher"] = {{"neurons", c.teacher.neurons}};
  j["data"] = {{"input_dim", c.data.input_dim}, {"n_train", c.data.n_train}, {"n_test", c.data.n_test}};
  json wrappers = json::array();
  if (c.student.symmetrized) wrappers.push_back("symmetrized");
  if (c.student.centered) wrappers.push_back("centered");
  if (c.student.scaled) wrappers.push_back("scaled:" + std::to_string(*c.student.scaled));
  j["student"] = {
      {"width", c.student.width},
      {"activation", c.student.activation.kind == compute::ActivationKind::relu ? "relu" : "softplus"},
      {"beta", c.student.activation.beta},
      {"scale_rule", to_string(c.student.scale_rule)},
      {"scale_constant", c.student.scale_constant},
      {"init", {{"dist", c.student.init == InitDist::normal ? "normal" : "xavier"}, {"std", c.student.init_std}}},
      {"wrappers", wrappers},
      {"backend", c.student.backend == compute::Backend::omp ? "omp" : "serial"}};
  j["loss"] = {{"kind", "square"},
               {"target_source", c.target_source == TargetSource::teacher ? "teacher" : "explicit"}};
  if (c.explicit_targets) {
    json t = json::array();
    for (Eigen::Index i = 0; i < c.explicit_targets->rows(); ++i) t.push_back((*c.explicit_targets)(i, 0));
    j["loss"]["targets"] = t;
  }
  const FlowConfig& f = c.flow;
  json flow = {{"alpha", f.alpha},
               {"max_steps", f.max_steps},
               {"step_rule", to_string(f.step_rule)},
               {"step_factor", f.step_factor},
               {"curvature_refresh", f.curvature_refresh},
               {"integrator", to_string(f.integrator)},
               {"divergence_factor", f.divergence_factor}};
  if (f.horizon) flow["horizon"] = *f.horizon;
  if (f.budget) flow["budget"] = *f.budget;
  if (f.step_rule == StepRule::fixed) flow["step"] = f.step;
  if (f.lipschitz_h) flow["lipschitz_h"] = *f.lipschitz_h;
  const char* modes[] = {"dense", "stride", "logarithmic"};
  flow["record"] = {{"mode", modes[int(f.record.mode)]},
                    {"stride", f.record.stride},
                    {"per_decade", f.record.per_decade},
                    {"store_states", f.record.store_states}};
  json stop = json::object();
  if (f.stop.loss_below) stop["loss_below"] = *f.stop.loss_below;
  if (f.stop.grad_below) stop["grad_below"] = *f.stop.grad_below;
  if (f.stop.grad_relative_below) stop["grad_relative_below"] = *f.stop.grad_relative_below;
  flow["stop"] = stop;
  j["flow"] = flow;
  j["training"] = {{"mode", c.mode == TrainingMode::gd ? "gd" : "sgd"}, {"batch_size", c.batch_size}};
  j["linearized"] = c.linearized;
  if (c.sweep) {
    json rules = json::array();
    for (ScaleRule r : c.sweep->scale_rules) rules.push_back(to_string(r));
    j["sweep"] = {{"variable", to_string(c.sweep->variable)},
                  {"grid", c.sweep->grid},
                  {"repeats", c.sweep->repeats},
                  {"scale_rules", rules}};
  }
  j["diagnostics"] = {{"radius", c.norms.radius},
                      {"samples", c.norms.samples},
                      {"d2_epsilon", c.norms.d2_epsilon},
                      {"d2_directions", c.norms.d2_directions},
                      {"kappa", c.kappa}};
  j["kernel"] = {{"input_dim", c.kernel.input_dim},
                 {"width", c.kernel.width},
                 {"seeds", c.kernel.seeds},
                 {"grid_points", c.kernel.grid_points},
                 {"outer_moment", c.kernel.outer_moment},
                 {"spectrum_points", c.kernel.spectrum_points}};
  if (c.kernel.inner_moment) j["kernel"]["inner_moment"] = *c.kernel.inner_moment;
  j["outputs"] = {{"directory", c.outputs.directory.string()},
                  {"trajectories", c.outputs.trajectories},
                  {"snapshots", c.outputs.snapshots},
                  {"neuron_cloud", c.outputs.neuron_cloud}};
  return j;
}

}  // namespace lazyflow
