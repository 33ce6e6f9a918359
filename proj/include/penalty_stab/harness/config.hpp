#pragma once

/**
 * @file config.hpp
 * @brief JSON experiment configuration: parsing with defaults, validation
 * with field paths, dotted-path overrides and recovery of a config from the
 * metadata block of an emitted CSV.
 */

#include "penalty_stab/analysis.hpp"
#include "penalty_stab/mesh_fem.hpp"
#include "penalty_stab/model_params.hpp"
#include "penalty_stab/solver.hpp"

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace penalty_stab::harness {

using json = nlohmann::json;

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::invalid_argument {
public:
  ConfigError(const std::string &path, const std::string &what)
      : std::invalid_argument(path + ": " + what), path_(path) {}
  const std::string &path() const noexcept { return path_; }

private:
  std::string path_;
};

enum class ExperimentKind { decay, convergence, epsilon_study };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
  case ExperimentKind::decay: return "decay";
  case ExperimentKind::convergence: return "convergence";
  case ExperimentKind::epsilon_study: return "epsilon_study";
  }
  return "decay";
}

inline std::string to_string(Variant v) {
  return v == Variant::penalized_feedback ? "penalized_feedback" : "uncontrolled_dirichlet";
}

inline std::string to_string(ReferenceEpsilon r) {
  return r == ReferenceEpsilon::matched ? "matched" : "own";
}

enum class InitialProfile { sin_pi_x, x_one_minus_x, zero };

inline std::string to_string(InitialProfile p) {
  switch (p) {
  case InitialProfile::sin_pi_x: return "sin_pi_x";
  case InitialProfile::x_one_minus_x: return "x_one_minus_x";
  case InitialProfile::zero: return "zero";
  }
  return "zero";
}

inline std::function<double(double)> profile_function(InitialProfile p) {
  switch (p) {
  case InitialProfile::sin_pi_x: return [](double x) { return std::sin(std::numbers::pi * x); };
  case InitialProfile::x_one_minus_x: return [](double x) { return x * (1.0 - x); };
  case InitialProfile::zero: return [](double) { return 0.0; };
  }
  return [](double) { return 0.0; };
}

struct SweepSpec {
  std::string parameter; ///< nu | alpha | delta | epsilon
  std::vector<double> values;
};

struct DecaySpec {
  std::vector<Variant> variants{Variant::penalized_feedback};
  std::optional<SweepSpec> sweep;
  bool svg = true;
  bool log_y = true;
  std::optional<std::pair<double, double>> fit_window;
};

struct ConvergenceSpec {
  double c = 0.01;
  double l = 2.0;
  std::size_t reference_n_elements = 2048;
  ReferenceEpsilon state_reference = ReferenceEpsilon::matched;
  ReferenceEpsilon control_reference = ReferenceEpsilon::own;
};

struct EpsilonStudySpec {
  std::vector<double> epsilons;
};

/// Fully resolved experiment description.
struct ExperimentConfig {
  double nu = 0.1;
  double alpha = 0.13;
  double delta = 0.13;
  double epsilon = 0.01;
  GainRule gain;

  std::vector<std::size_t> n_elements{128};

  double k = 1.0 / 1050.0;
  double final_time = 1.0;

  InitialProfile initial = InitialProfile::sin_pi_x;
  ProjectionMode projection = ProjectionMode::l2;

  NewtonOptions newton;
  ControlTreatment control = ControlTreatment::implicit;

  ExperimentKind kind = ExperimentKind::decay;
  DecaySpec decay;
  ConvergenceSpec convergence;
  EpsilonStudySpec epsilon_study;

  ModelParams params() const { return {nu, alpha, delta, gain(epsilon), epsilon}; }
  TimeGrid grid() const { return TimeGrid::from_final_time(final_time, k); }

  RunSetup run_setup() const {
    RunSetup s;
    s.nu = nu;
    s.alpha = alpha;
    s.delta = delta;
    s.gain = gain;
    s.initial = profile_function(initial);
    s.projection = projection;
    const TimeGrid g = grid();
    s.k = g.k();
    s.n_steps = g.n_steps();
    s.scheme.control = control;
    s.newton = newton;
    return s;
  }
};

namespace detail {

/// Reads one JSON object and reports keys that were never consumed.
class ObjectReader {
public:
  ObjectReader(const json &obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string child(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const json *find(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = obj_.find(std::string(key));
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(child(it.key()), "unknown field");
    }
  }

private:
  const json &obj_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Number or "p/q" fraction string.
inline double read_real(const json &v, const std::string &path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    const auto slash = s.find('/');
    try {
      std::size_t used = 0;
      if (slash == std::string::npos) {
        const double x = std::stod(s, &used);
        if (used == s.size()) return x;
      } else {
        const std::string num = s.substr(0, slash), den = s.substr(slash + 1);
        std::size_t used_den = 0;
        const double a = std::stod(num, &used);
        const double b = std::stod(den, &used_den);
        if (used == num.size() && used_den == den.size() && b != 0.0) return a / b;
      }
    } catch (const std::exception &) {
    }
    throw ConfigError(path, "cannot read number from \"" + s + "\"");
  }
  throw ConfigError(path, "expected a number");
}

inline double read_positive(const json &v, const std::string &path) {
  const double x = read_real(v, path);
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(path, "must be positive and finite");
  return x;
}

inline std::size_t read_count(const json &v, const std::string &path) {
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw ConfigError(path, "expected a positive integer");
  }
  return static_cast<std::size_t>(v.get<long long>());
}

inline std::string read_string(const json &v, const std::string &path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

inline bool read_bool(const json &v, const std::string &path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
  return v.get<bool>();
}

inline std::vector<double> read_real_list(const json &v, const std::string &path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty list");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(read_real(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline GainRule read_gain(const json &v, const std::string &path) {
  GainRule g;
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "sqrt_eps") {
      g.kind = GainRule::Kind::sqrt_eps;
      return g;
    }
    if (s == "sqrt_2eps") {
      g.kind = GainRule::Kind::sqrt_2eps;
      return g;
    }
  }
  g.kind = GainRule::Kind::constant;
  g.value = read_real(v, path);
  if (!(g.value >= 0.0) || !std::isfinite(g.value)) {
    throw ConfigError(path, "constant gain must be non-negative");
  }
  return g;
}

template <class Enum>
Enum read_choice(const json &v, const std::string &path,
                 std::initializer_list<std::pair<const char *, Enum>> choices) {
  const auto s = read_string(v, path);
  std::string allowed;
  for (const auto &[name, value] : choices) {
    if (s == name) return value;
    allowed += allowed.empty() ? name : std::string(" | ") + name;
  }
  throw ConfigError(path, "unknown value \"" + s + "\" (expected " + allowed + ")");
}

inline void parse_model(const json &v, ExperimentConfig &cfg) {
  ObjectReader rd(v, "model");
  if (auto *x = rd.find("nu")) cfg.nu = read_positive(*x, rd.child("nu"));
  if (auto *x = rd.find("alpha")) cfg.alpha = read_positive(*x, rd.child("alpha"));
  if (auto *x = rd.find("delta")) cfg.delta = read_positive(*x, rd.child("delta"));
  if (auto *x = rd.find("epsilon")) cfg.epsilon = read_positive(*x, rd.child("epsilon"));
  if (auto *x = rd.find("r")) cfg.gain = read_gain(*x, rd.child("r"));
  rd.finish();
}

inline void parse_mesh(const json &v, ExperimentConfig &cfg) {
  ObjectReader rd(v, "mesh");
  if (auto *x = rd.find("n_elements")) {
    const std::string path = rd.child("n_elements");
    cfg.n_elements.clear();
    if (x->is_array()) {
      if (x->empty()) throw ConfigError(path, "expected a non-empty list");
      for (std::size_t i = 0; i < x->size(); ++i) {
        cfg.n_elements.push_back(read_count((*x)[i], path + "[" + std::to_string(i) + "]"));
      }
    } else {
      cfg.n_elements.push_back(read_count(*x, path));
    }
    for (std::size_t i = 0; i < cfg.n_elements.size(); ++i) {
      if (cfg.n_elements[i] < 2) {
        throw ConfigError(path, "a mesh needs at least 2 elements");
      }
    }
  }
  rd.finish();
}

inline void parse_time(const json &v, ExperimentConfig &cfg) {
  ObjectReader rd(v, "time");
  if (auto *x = rd.find("k")) cfg.k = read_positive(*x, rd.child("k"));
  if (auto *x = rd.find("T")) cfg.final_time = read_positive(*x, rd.child("T"));
  rd.finish();
}

inline void parse_initial(const json &v, ExperimentConfig &cfg) {
  ObjectReader rd(v, "initial");
  if (auto *x = rd.find("profile")) {
    cfg.initial = read_choice<InitialProfile>(*x, rd.child("profile"),
                                              {{"sin_pi_x", InitialProfile::sin_pi_x},
                                               {"x_one_minus_x", InitialProfile::x_one_minus_x},
                                               {"zero", InitialProfile::zero}});
  }
  if (auto *x = rd.find("projection")) {
    cfg.projection = read_choice<ProjectionMode>(
        *x, rd.child("projection"),
        {{"l2", ProjectionMode::l2}, {"interpolation", ProjectionMode::interpolation}});
  }
  rd.finish();
}

inline void parse_solver(const json &v, ExperimentConfig &cfg) {
  ObjectReader rd(v, "solver");
  if (auto *x = rd.find("newton_tol")) cfg.newton.tol = read_positive(*x, rd.child("newton_tol"));
  if (auto *x = rd.find("newton_max_iter")) {
    cfg.newton.max_iter = read_count(*x, rd.child("newton_max_iter"));
  }
  if (auto *x = rd.find("control")) {
    cfg.control = read_choice<ControlTreatment>(
        *x, rd.child("control"),
        {{"implicit", ControlTreatment::implicit}, {"lagged", ControlTreatment::lagged}});
  }
  rd.finish();
}

inline void parse_decay(ObjectReader &rd, DecaySpec &d) {
  if (auto *x = rd.find("variants")) {
    const std::string path = rd.child("variants");
    if (!x->is_array() || x->empty()) throw ConfigError(path, "expected a non-empty list");
    d.variants.clear();
    for (std::size_t i = 0; i < x->size(); ++i) {
      d.variants.push_back(read_choice<Variant>(
          (*x)[i], path + "[" + std::to_string(i) + "]",
          {{"penalized_feedback", Variant::penalized_feedback},
           {"uncontrolled_dirichlet", Variant::uncontrolled_dirichlet}}));
    }
  }
  if (auto *x = rd.find("sweep")) {
    ObjectReader sw(*x, rd.child("sweep"));
    SweepSpec s;
    const json *param = sw.find("parameter");
    if (!param) throw ConfigError(sw.child("parameter"), "required");
    s.parameter = read_choice<std::string>(*param, sw.child("parameter"),
                                           {{"nu", "nu"},
                                            {"alpha", "alpha"},
                                            {"delta", "delta"},
                                            {"epsilon", "epsilon"}});
    const json *values = sw.find("values");
    if (!values) throw ConfigError(sw.child("values"), "required");
    s.values = read_real_list(*values, sw.child("values"));
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (!(s.values[i] > 0.0)) {
        throw ConfigError(sw.child("values") + "[" + std::to_string(i) + "]", "must be positive");
      }
    }
    sw.finish();
    d.sweep = std::move(s);
  }
  if (auto *x = rd.find("svg")) d.svg = read_bool(*x, rd.child("svg"));
  if (auto *x = rd.find("log_y")) d.log_y = read_bool(*x, rd.child("log_y"));
  if (auto *x = rd.find("fit_window")) {
    const auto w = read_real_list(*x, rd.child("fit_window"));
    if (w.size() != 2 || !(w[0] < w[1]) || w[0] < 0.0) {
      throw ConfigError(rd.child("fit_window"), "expected [t_start, t_end] with t_start < t_end");
    }
    d.fit_window = std::pair{w[0], w[1]};
  }
}

inline void parse_convergence(ObjectReader &rd, ConvergenceSpec &c) {
  if (auto *x = rd.find("epsilon_rule")) {
    ObjectReader er(*x, rd.child("epsilon_rule"));
    if (auto *y = er.find("c")) c.c = read_positive(*y, er.child("c"));
    if (auto *y = er.find("l")) c.l = read_positive(*y, er.child("l"));
    er.finish();
  }
  if (auto *x = rd.find("reference_n_elements")) {
    c.reference_n_elements = read_count(*x, rd.child("reference_n_elements"));
  }
  const std::initializer_list<std::pair<const char *, ReferenceEpsilon>> refs{
      {"matched", ReferenceEpsilon::matched}, {"own", ReferenceEpsilon::own}};
  if (auto *x = rd.find("reference_epsilon")) {
    c.state_reference = read_choice<ReferenceEpsilon>(*x, rd.child("reference_epsilon"), refs);
  }
  if (auto *x = rd.find("control_reference_epsilon")) {
    c.control_reference =
        read_choice<ReferenceEpsilon>(*x, rd.child("control_reference_epsilon"), refs);
  }
}

inline void parse_epsilon_study(ObjectReader &rd, EpsilonStudySpec &e) {
  const json *x = rd.find("epsilons");
  if (!x) throw ConfigError(rd.child("epsilons"), "required");
  e.epsilons = read_real_list(*x, rd.child("epsilons"));
}

inline void parse_experiment(const json &v, ExperimentConfig &cfg) {
  ObjectReader rd(v, "experiment");
  if (auto *x = rd.find("kind")) {
    cfg.kind = read_choice<ExperimentKind>(*x, rd.child("kind"),
                                           {{"decay", ExperimentKind::decay},
                                            {"convergence", ExperimentKind::convergence},
                                            {"epsilon_study", ExperimentKind::epsilon_study}});
  }
  switch (cfg.kind) {
  case ExperimentKind::decay: parse_decay(rd, cfg.decay); break;
  case ExperimentKind::convergence: parse_convergence(rd, cfg.convergence); break;
  case ExperimentKind::epsilon_study: parse_epsilon_study(rd, cfg.epsilon_study); break;
  }
  rd.finish();
}

inline void check_params(ModelParams p, const std::string &path) {
  try {
    p.validate();
  } catch (const ParameterError &e) {
    throw ConfigError(path, e.what());
  }
}

} // namespace detail

/// Cross-field checks. Everything that could make a run throw before its
/// first time step is caught here.
inline void validate(const ExperimentConfig &cfg) {
  try {
    (void)cfg.grid();
  } catch (const ParameterError &e) {
    throw ConfigError("time.k", e.what());
  }
  switch (cfg.kind) {
  case ExperimentKind::decay: {
    if (cfg.n_elements.size() != 1) {
      throw ConfigError("mesh.n_elements", "a decay experiment takes a single mesh size");
    }
    const auto &sw = cfg.decay.sweep;
    if (!sw) {
      detail::check_params(cfg.params(), "model");
      break;
    }
    for (std::size_t i = 0; i < sw->values.size(); ++i) {
      ExperimentConfig c = cfg;
      const double v = sw->values[i];
      if (sw->parameter == "nu") c.nu = v;
      if (sw->parameter == "alpha") c.alpha = v;
      if (sw->parameter == "delta") c.delta = v;
      if (sw->parameter == "epsilon") c.epsilon = v;
      detail::check_params(c.params(),
                           "experiment.sweep.values[" + std::to_string(i) + "]");
    }
    break;
  }
  case ExperimentKind::convergence: {
    const auto &ns = cfg.n_elements;
    if (ns.size() < 2) throw ConfigError("mesh.n_elements", "needs at least two mesh sizes");
    for (std::size_t i = 1; i < ns.size(); ++i) {
      if (ns[i] != 2 * ns[i - 1]) {
        throw ConfigError("mesh.n_elements",
                          "mesh sizes must be nested: each entry twice the previous");
      }
    }
    const std::size_t ref = cfg.convergence.reference_n_elements;
    if (ref <= ns.back() || ref % ns.back() != 0 || ((ref / ns.back()) & (ref / ns.back() - 1))) {
      throw ConfigError("experiment.reference_n_elements",
                        "must be a power-of-two multiple of every mesh size");
    }
    ExperimentConfig c = cfg;
    c.epsilon = penalty_rule(cfg.convergence.c, cfg.convergence.l, 1.0 / double(ns.front()));
    detail::check_params(c.params(), "model");
    break;
  }
  case ExperimentKind::epsilon_study: {
    if (cfg.n_elements.size() != 1) {
      throw ConfigError("mesh.n_elements", "an epsilon study takes a single mesh size");
    }
    const auto &eps = cfg.epsilon_study.epsilons;
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const std::string path = "experiment.epsilons[" + std::to_string(i) + "]";
      if (!(eps[i] > 0.0)) throw ConfigError(path, "must be positive");
      if (i > 0 && !(eps[i] < eps[i - 1])) throw ConfigError(path, "list must be descending");
      ExperimentConfig c = cfg;
      c.epsilon = eps[i];
      detail::check_params(c.params(), path);
    }
    break;
  }
  }
}

/// Parse and validate. Missing sections take the defaults of ExperimentConfig.
inline ExperimentConfig parse_config(const json &doc) {
  detail::ObjectReader rd(doc, "");
  ExperimentConfig cfg;
  // experiment first so the kind is known for defaults elsewhere
  if (auto *x = rd.find("experiment")) detail::parse_experiment(*x, cfg);
  if (auto *x = rd.find("model")) detail::parse_model(*x, cfg);
  if (auto *x = rd.find("mesh")) detail::parse_mesh(*x, cfg);
  if (auto *x = rd.find("time")) detail::parse_time(*x, cfg);
  if (auto *x = rd.find("initial")) detail::parse_initial(*x, cfg);
  if (auto *x = rd.find("solver")) detail::parse_solver(*x, cfg);
  rd.finish();
  validate(cfg);
  return cfg;
}

/// Resolved config as JSON; parse_config(to_json(c)) reproduces c exactly.
inline json to_json(const ExperimentConfig &cfg) {
  json model{{"nu", cfg.nu}, {"alpha", cfg.alpha}, {"delta", cfg.delta},
             {"epsilon", cfg.epsilon}};
  if (cfg.gain.kind == GainRule::Kind::constant) {
    model["r"] = cfg.gain.value;
  } else {
    model["r"] = cfg.gain.name();
  }
  json mesh;
  if (cfg.n_elements.size() == 1) {
    mesh["n_elements"] = cfg.n_elements.front();
  } else {
    mesh["n_elements"] = cfg.n_elements;
  }
  json exp{{"kind", to_string(cfg.kind)}};
  switch (cfg.kind) {
  case ExperimentKind::decay: {
    json variants = json::array();
    for (auto v : cfg.decay.variants) variants.push_back(to_string(v));
    exp["variants"] = variants;
    if (cfg.decay.sweep) {
      exp["sweep"] = {{"parameter", cfg.decay.sweep->parameter},
                      {"values", cfg.decay.sweep->values}};
    }
    exp["svg"] = cfg.decay.svg;
    exp["log_y"] = cfg.decay.log_y;
    if (cfg.decay.fit_window) {
      exp["fit_window"] = {cfg.decay.fit_window->first, cfg.decay.fit_window->second};
    }
    break;
  }
  case ExperimentKind::convergence:
    exp["epsilon_rule"] = {{"c", cfg.convergence.c}, {"l", cfg.convergence.l}};
    exp["reference_n_elements"] = cfg.convergence.reference_n_elements;
    exp["reference_epsilon"] = to_string(cfg.convergence.state_reference);
    exp["control_reference_epsilon"] = to_string(cfg.convergence.control_reference);
    break;
  case ExperimentKind::epsilon_study:
    exp["epsilons"] = cfg.epsilon_study.epsilons;
    break;
  }
  return json{
      {"model", model},
      {"mesh", mesh},
      {"time", {{"k", cfg.k}, {"T", cfg.final_time}}},
      {"initial",
       {{"profile", to_string(cfg.initial)},
        {"projection", cfg.projection == ProjectionMode::l2 ? "l2" : "interpolation"}}},
      {"solver",
       {{"newton_tol", cfg.newton.tol},
        {"newton_max_iter", cfg.newton.max_iter},
        {"control", cfg.control == ControlTreatment::implicit ? "implicit" : "lagged"}}},
      {"experiment", exp}};
}

/**
 * Apply "a.b.c=value". The value is read as JSON when it parses, otherwise
 * as a plain string. Intermediate objects are created on demand.
 */
inline void apply_override(json &doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError(std::string(assignment), "override must have the form key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json *node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError(key, "empty path component in override");
    if (!node->is_object()) {
      throw ConfigError(key, "override path crosses a non-object value");
    }
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

inline constexpr std::string_view kConfigMetadataKey = "config: ";

/**
 * Read a config document from a JSON file, or from the "# config: {...}"
 * line of a CSV previously written by the harness.
 */
inline json load_config_document(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '#') {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty() || line[0] != '#') break;
      std::string_view body(line);
      body.remove_prefix(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      if (body.starts_with(kConfigMetadataKey)) {
        body.remove_prefix(kConfigMetadataKey.size());
        json doc = json::parse(body, nullptr, false);
        if (doc.is_discarded()) throw ConfigError(path, "malformed config line in CSV metadata");
        return doc;
      }
    }
    throw ConfigError(path, "CSV metadata block has no config line");
  }
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError(path, "not valid JSON");
  return doc;
}

} // namespace penalty_stab::harness
