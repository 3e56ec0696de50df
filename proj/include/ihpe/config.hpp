#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ihpe/errors.hpp"
#include "ihpe/hpe.hpp"
#include "ihpe/instances.hpp"
#include "ihpe/params.hpp"
#include "ihpe/problems.hpp"

// Experiment configuration: a JSON document with an explicit schema version.
//
//   {
//     "schema_version": 1,
//     "problem":  {"kind": "affine_inclusion", "dimension": 50, "seed": 7, ...},
//     "instance": {"kind": "ppm", "lambda": {"rule": "constant", "value": 1.0}},
//     "params":   {"alpha": 0.3, "sigma": 0.0, "beta": 0.3333333333333333},
//     "schedule": {"kind": "constant"},
//     "stopping": {"mode": "pointwise", "rho": 1e-8, "eps_hat": 1e-10, "max_iter": 100000},
//     "output":   {"trace_jsonl": "trace.jsonl", "trace_csv": "trace.csv", ...},
//     "sweep":    {"alpha": [0, 0.3], "sigma": [0.0], "seed": [1, 2]}
//   }

namespace ihpe {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct ParamSpec {
  double alpha = 0.0;
  double sigma = 0.0;
  std::optional<double> beta;
  std::optional<double> tau;  ///< expert path, exclusive with beta
  AlphaSchedule schedule{};

  HpeParams build() const {
    if (beta && tau) throw ParameterError("params", "give either beta or tau, not both");
    if (tau) return validate(HpeParams::from_tau(alpha, sigma, *tau, schedule));
    return validate(HpeParams::from_beta(alpha, sigma, beta.value_or(1.0 / 3.0), schedule));
  }
};

struct OutputSpec {
  std::string trace_jsonl = "trace.jsonl";
  std::string trace_csv = "trace.csv";
  std::string summary = "summary.json";
  std::string bounds = "bounds.json";
};

struct SweepSpec {
  std::vector<double> alpha;
  std::vector<double> sigma;
  std::vector<double> beta;
  std::vector<double> tau;
  std::vector<std::uint64_t> seed;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  ProblemSpec problem;
  InstanceConfig instance;
  std::optional<double> lambda_floor;  ///< defaults to the lambda rule's minimum
  ParamSpec params;
  StoppingRule stopping;
  double certify_tol = 1e-9;
  OutputSpec output;
  std::optional<SweepSpec> sweep;
};

namespace detail {

inline void reject_unknown(const json& obj, const std::string& where,
                           std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ParseError(0, where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) throw ParseError(0, "unknown field '" + where + "." + it.key() + "'");
  }
}

inline double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(0, where + ": expected a number");
  return v.get<double>();
}

inline std::vector<double> get_vector(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(0, where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline Vector to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline Matrix get_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ParseError(0, where + ": expected a nonempty array of rows");
  const std::size_t rows = v.size();
  std::vector<std::vector<double>> data;
  for (std::size_t i = 0; i < rows; ++i) data.push_back(get_vector(v[i], where + "[" + std::to_string(i) + "]"));
  const std::size_t cols = data.front().size();
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (data[i].size() != cols) throw ParseError(0, where + ": ragged matrix rows");
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = data[i][j];
  }
  return m;
}

inline json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

inline std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ParseError(0, where + ": expected a string");
  return v.get<std::string>();
}

inline long get_integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ParseError(0, where + ": expected an integer");
  return v.get<long>();
}

inline std::uint64_t get_seed(const json& v, const std::string& where) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw ParseError(0, where + ": expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

inline ProblemSpec problem_from_json(const json& j) {
  reject_unknown(j, "problem", {"kind", "dimension", "seed", "symmetric", "l1_weight", "matrix",
                                "offset", "lower", "upper", "z0"});
  ProblemSpec p;
  if (!j.contains("kind")) throw ParseError(0, "problem.kind is required");
  p.kind = problem_kind_from_string(get_string(j["kind"], "problem.kind"));
  if (j.contains("dimension")) p.dimension = get_integer(j["dimension"], "problem.dimension");
  if (j.contains("seed")) p.seed = get_seed(j["seed"], "problem.seed");
  if (j.contains("symmetric")) {
    if (!j["symmetric"].is_boolean()) throw ParseError(0, "problem.symmetric: expected a boolean");
    p.symmetric = j["symmetric"].get<bool>();
  }
  if (j.contains("l1_weight")) p.l1_weight = get_number(j["l1_weight"], "problem.l1_weight");
  if (j.contains("matrix")) p.matrix = get_matrix(j["matrix"], "problem.matrix");
  if (j.contains("offset")) p.offset = to_eigen(get_vector(j["offset"], "problem.offset"));
  if (j.contains("lower")) p.lower = to_eigen(get_vector(j["lower"], "problem.lower"));
  if (j.contains("upper")) p.upper = to_eigen(get_vector(j["upper"], "problem.upper"));
  if (j.contains("z0")) p.z0 = to_eigen(get_vector(j["z0"], "problem.z0"));
  return p;
}

inline json problem_to_json(const ProblemSpec& p) {
  json j;
  j["kind"] = std::string(to_string(p.kind));
  j["dimension"] = p.dimension;
  j["seed"] = p.seed;
  if (p.kind == ProblemKind::affine_inclusion) j["symmetric"] = p.symmetric;
  if (p.kind == ProblemKind::l1_composite) j["l1_weight"] = p.l1_weight;
  if (p.matrix) j["matrix"] = matrix_json(*p.matrix);
  if (p.offset) j["offset"] = vector_json(*p.offset);
  if (p.lower) j["lower"] = vector_json(*p.lower);
  if (p.upper) j["upper"] = vector_json(*p.upper);
  if (p.z0) j["z0"] = vector_json(*p.z0);
  return j;
}

inline LambdaRule lambda_from_json(const json& j) {
  reject_unknown(j, "instance.lambda", {"rule", "value", "values"});
  LambdaRule r;
  const std::string rule = j.contains("rule") ? get_string(j["rule"], "instance.lambda.rule") : "cap";
  if (rule == "cap") {
    r.kind = LambdaRule::Kind::cap;
  } else if (rule == "constant") {
    r.kind = LambdaRule::Kind::constant;
    if (!j.contains("value")) throw ParseError(0, "instance.lambda.value is required for rule 'constant'");
    r.value = get_number(j["value"], "instance.lambda.value");
  } else if (rule == "cyclic") {
    r.kind = LambdaRule::Kind::cyclic;
    if (!j.contains("values")) throw ParseError(0, "instance.lambda.values is required for rule 'cyclic'");
    r.values = get_vector(j["values"], "instance.lambda.values");
    if (r.values.empty()) throw ParseError(0, "instance.lambda.values must be nonempty");
  } else {
    throw ParseError(0, "instance.lambda.rule: unknown rule '" + rule + "'");
  }
  return r;
}

inline json lambda_to_json(const LambdaRule& r) {
  switch (r.kind) {
    case LambdaRule::Kind::cap: return json{{"rule", "cap"}};
    case LambdaRule::Kind::constant: return json{{"rule", "constant"}, {"value", r.value}};
    case LambdaRule::Kind::cyclic: return json{{"rule", "cyclic"}, {"values", r.values}};
  }
  return json{};
}

inline AlphaSchedule schedule_from_json(const json& j) {
  reject_unknown(j, "schedule", {"kind", "length"});
  const std::string kind = j.contains("kind") ? get_string(j["kind"], "schedule.kind") : "constant";
  if (kind == "constant") return AlphaSchedule::constant();
  if (kind == "ramp") {
    if (!j.contains("length")) throw ParseError(0, "schedule.length is required for kind 'ramp'");
    return AlphaSchedule::ramp(get_integer(j["length"], "schedule.length"));
  }
  throw ParseError(0, "schedule.kind: unknown kind '" + kind + "'");
}

inline json schedule_to_json(const AlphaSchedule& s) {
  if (s.kind == AlphaSchedule::Kind::constant) return json{{"kind", "constant"}};
  return json{{"kind", "ramp"}, {"length", s.ramp_length}};
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
  using namespace detail;
  reject_unknown(j, "config", {"schema_version", "problem", "instance", "params", "schedule",
                               "stopping", "output", "sweep"});
  ExperimentConfig c;
  if (!j.contains("schema_version")) throw ParseError(0, "schema_version is required");
  c.schema_version = static_cast<int>(get_integer(j["schema_version"], "schema_version"));
  if (c.schema_version != kSchemaVersion) {
    throw ParseError(0, "unsupported schema_version " + std::to_string(c.schema_version));
  }
  if (!j.contains("problem")) throw ParseError(0, "problem section is required");
  c.problem = problem_from_json(j["problem"]);

  if (!j.contains("instance")) throw ParseError(0, "instance section is required");
  const json& ji = j["instance"];
  reject_unknown(ji, "instance", {"kind", "lambda", "lambda_floor"});
  if (!ji.contains("kind")) throw ParseError(0, "instance.kind is required");
  c.instance.kind = instance_kind_from_string(get_string(ji["kind"], "instance.kind"));
  if (ji.contains("lambda")) c.instance.lambda = lambda_from_json(ji["lambda"]);
  if (ji.contains("lambda_floor")) c.lambda_floor = get_number(ji["lambda_floor"], "instance.lambda_floor");

  if (!j.contains("params")) throw ParseError(0, "params section is required");
  const json& jp = j["params"];
  reject_unknown(jp, "params", {"alpha", "sigma", "beta", "tau"});
  if (jp.contains("alpha")) c.params.alpha = get_number(jp["alpha"], "params.alpha");
  if (jp.contains("sigma")) c.params.sigma = get_number(jp["sigma"], "params.sigma");
  if (jp.contains("beta")) c.params.beta = get_number(jp["beta"], "params.beta");
  if (jp.contains("tau")) c.params.tau = get_number(jp["tau"], "params.tau");
  if (j.contains("schedule")) c.params.schedule = schedule_from_json(j["schedule"]);

  if (j.contains("stopping")) {
    const json& js = j["stopping"];
    reject_unknown(js, "stopping", {"mode", "rho", "eps_hat", "max_iter", "tol"});
    if (js.contains("mode")) {
      const std::string m = get_string(js["mode"], "stopping.mode");
      if (m == "pointwise") c.stopping.mode = StoppingRule::Mode::pointwise;
      else if (m == "ergodic") c.stopping.mode = StoppingRule::Mode::ergodic;
      else throw ParseError(0, "stopping.mode: unknown mode '" + m + "'");
    }
    if (js.contains("rho")) c.stopping.rho = get_number(js["rho"], "stopping.rho");
    if (js.contains("eps_hat")) c.stopping.eps_hat = get_number(js["eps_hat"], "stopping.eps_hat");
    if (js.contains("max_iter")) c.stopping.max_iter = get_integer(js["max_iter"], "stopping.max_iter");
    if (js.contains("tol")) c.certify_tol = get_number(js["tol"], "stopping.tol");
  }
  if (j.contains("output")) {
    const json& jo = j["output"];
    reject_unknown(jo, "output", {"trace_jsonl", "trace_csv", "summary", "bounds"});
    if (jo.contains("trace_jsonl")) c.output.trace_jsonl = get_string(jo["trace_jsonl"], "output.trace_jsonl");
    if (jo.contains("trace_csv")) c.output.trace_csv = get_string(jo["trace_csv"], "output.trace_csv");
    if (jo.contains("summary")) c.output.summary = get_string(jo["summary"], "output.summary");
    if (jo.contains("bounds")) c.output.bounds = get_string(jo["bounds"], "output.bounds");
  }
  if (j.contains("sweep")) {
    const json& jw = j["sweep"];
    reject_unknown(jw, "sweep", {"alpha", "sigma", "beta", "tau", "seed"});
    SweepSpec s;
    if (jw.contains("alpha")) s.alpha = get_vector(jw["alpha"], "sweep.alpha");
    if (jw.contains("sigma")) s.sigma = get_vector(jw["sigma"], "sweep.sigma");
    if (jw.contains("beta")) s.beta = get_vector(jw["beta"], "sweep.beta");
    if (jw.contains("tau")) s.tau = get_vector(jw["tau"], "sweep.tau");
    if (jw.contains("seed")) {
      if (!jw["seed"].is_array()) throw ParseError(0, "sweep.seed: expected an array");
      for (const auto& v : jw["seed"]) s.seed.push_back(get_seed(v, "sweep.seed"));
    }
    c.sweep = std::move(s);
  }
  return c;
}

inline json config_to_json(const ExperimentConfig& c) {
  using namespace detail;
  json j;
  j["schema_version"] = c.schema_version;
  j["problem"] = problem_to_json(c.problem);
  j["instance"] = {{"kind", std::string(to_string(c.instance.kind))},
                   {"lambda", lambda_to_json(c.instance.lambda)}};
  if (c.lambda_floor) j["instance"]["lambda_floor"] = *c.lambda_floor;
  j["params"] = {{"alpha", c.params.alpha}, {"sigma", c.params.sigma}};
  if (c.params.beta) j["params"]["beta"] = *c.params.beta;
  if (c.params.tau) j["params"]["tau"] = *c.params.tau;
  j["schedule"] = schedule_to_json(c.params.schedule);
  j["stopping"] = {{"mode", c.stopping.mode == StoppingRule::Mode::pointwise ? "pointwise" : "ergodic"},
                   {"rho", c.stopping.rho},
                   {"eps_hat", c.stopping.eps_hat},
                   {"max_iter", c.stopping.max_iter},
                   {"tol", c.certify_tol}};
  j["output"] = {{"trace_jsonl", c.output.trace_jsonl},
                 {"trace_csv", c.output.trace_csv},
                 {"summary", c.output.summary},
                 {"bounds", c.output.bounds}};
  if (c.sweep) {
    j["sweep"] = {{"alpha", c.sweep->alpha}, {"sigma", c.sweep->sigma}, {"beta", c.sweep->beta},
                  {"tau", c.sweep->tau}, {"seed", c.sweep->seed}};
  }
  return j;
}

/// Parses config text; syntax errors carry the line number.
inline ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    long line = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t i = 0; i + 1 < upto; ++i)
      if (text[i] == '\n') ++line;
    throw ParseError(line, "malformed JSON config");
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ihpe
