#pragma once

#include <cmath>
#include <charconv>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ihpe/errors.hpp"
#include "ihpe/hpe.hpp"
#include "ihpe/params.hpp"

// Trace files.
//
// JSON lines: an optional header object {"type": "header", ...} followed by
// one object per iteration with every IterationRecord field. Distances that
// are unknown are written as null.
//
// CSV: fixed column order, numbers in shortest round-trip form
//   k,norm_v,eps,lambda,error_ratio,step_norm,s_k,dist_to_solution,Lambda,norm_v_a,eps_a

namespace ihpe {

inline constexpr int kTraceVersion = 1;

/// Run metadata needed to re-check a trace offline.
struct TraceHeader {
  int version = kTraceVersion;
  double alpha = 0.0;
  double sigma = 0.0;
  double beta = 1.0 / 3.0;
  double tau = 1.0;
  double eta = 1.0;
  AlphaSchedule schedule{};
  double lambda_floor = 0.0;
  std::optional<double> d0;
  std::string problem;
  std::string instance;

  HpeParams params() const {
    HpeParams p;
    p.alpha = alpha;
    p.sigma = sigma;
    p.beta = beta;
    p.beta_prime = beta_prime(sigma, beta);
    p.tau = tau;
    p.eta = eta;
    p.q_alpha = q_value(alpha, eta);
    p.schedule = schedule;
    return p;
  }

  static TraceHeader from(const HpeParams& p, double lambda_floor, std::optional<double> d0,
                          std::string problem, std::string instance) {
    TraceHeader h;
    h.alpha = p.alpha;
    h.sigma = p.sigma;
    h.beta = p.beta;
    h.tau = p.tau;
    h.eta = p.eta;
    h.schedule = p.schedule;
    h.lambda_floor = lambda_floor;
    h.d0 = d0;
    h.problem = std::move(problem);
    h.instance = std::move(instance);
    return h;
  }
};

namespace detail {

inline nlohmann::json maybe_number(double x) {
  return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x);
}

inline double field(const nlohmann::json& j, const char* name, long line, bool nullable = false) {
  if (!j.contains(name)) throw ParseError(line, std::string("missing field '") + name + "'");
  const auto& v = j[name];
  if (v.is_null() && nullable) return NAN;
  if (!v.is_number()) throw ParseError(line, std::string("field '") + name + "' is not a number");
  return v.get<double>();
}

/// Shortest text that reads back to the same double; empty for NaN.
inline std::string num(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline nlohmann::json header_to_json(const TraceHeader& h) {
  nlohmann::json j;
  j["type"] = "header";
  j["version"] = h.version;
  j["alpha"] = h.alpha;
  j["sigma"] = h.sigma;
  j["beta"] = h.beta;
  j["tau"] = h.tau;
  j["eta"] = h.eta;
  j["schedule"] = h.schedule.kind == AlphaSchedule::Kind::constant ? "constant" : "ramp";
  j["ramp_length"] = h.schedule.ramp_length;
  j["lambda_floor"] = h.lambda_floor;
  j["d0"] = h.d0 ? nlohmann::json(*h.d0) : nlohmann::json(nullptr);
  j["problem"] = h.problem;
  j["instance"] = h.instance;
  return j;
}

inline TraceHeader header_from_json(const nlohmann::json& j, long line) {
  TraceHeader h;
  if (!j.contains("version") || !j["version"].is_number_integer()) {
    throw ParseError(line, "header lacks an integer 'version'");
  }
  h.version = j["version"].get<int>();
  if (h.version != kTraceVersion) {
    throw ParseError(line, "unsupported trace version " + std::to_string(h.version));
  }
  h.alpha = detail::field(j, "alpha", line);
  h.sigma = detail::field(j, "sigma", line);
  h.beta = detail::field(j, "beta", line);
  h.tau = detail::field(j, "tau", line);
  h.eta = detail::field(j, "eta", line);
  const std::string sched = j.value("schedule", std::string("constant"));
  if (sched == "ramp") {
    h.schedule = AlphaSchedule::ramp(static_cast<long>(detail::field(j, "ramp_length", line)));
  } else if (sched != "constant") {
    throw ParseError(line, "unknown schedule '" + sched + "'");
  }
  h.lambda_floor = detail::field(j, "lambda_floor", line);
  const double d0 = detail::field(j, "d0", line, true);
  if (!std::isnan(d0)) h.d0 = d0;
  h.problem = j.value("problem", std::string());
  h.instance = j.value("instance", std::string());
  return h;
}

inline nlohmann::json record_to_json(const IterationRecord& r) {
  nlohmann::json j;
  j["k"] = r.k;
  j["alpha_prev"] = r.alpha_prev;
  j["lambda"] = r.lambda;
  j["norm_v"] = r.norm_v;
  j["eps"] = r.eps;
  j["error_ratio"] = r.error_ratio;
  j["residual_sq"] = r.residual_sq;
  j["tilde_gap_sq"] = r.tilde_gap_sq;
  j["relax_gap_sq"] = r.relax_gap_sq;
  j["step_norm"] = r.step_norm;
  j["s_k"] = r.s_k;
  j["dist_to_solution"] = detail::maybe_number(r.dist_to_solution);
  j["dist_w_to_solution"] = detail::maybe_number(r.dist_w_to_solution);
  j["Lambda"] = r.Lambda;
  j["norm_v_a"] = r.norm_v_a;
  j["eps_a"] = r.eps_a;
  return j;
}

inline IterationRecord record_from_json(const nlohmann::json& j, long line) {
  if (!j.is_object()) throw ParseError(line, "expected a JSON object");
  IterationRecord r;
  if (!j.contains("k") || !j["k"].is_number_integer()) throw ParseError(line, "missing integer field 'k'");
  r.k = j["k"].get<long>();
  r.alpha_prev = detail::field(j, "alpha_prev", line);
  r.lambda = detail::field(j, "lambda", line);
  r.norm_v = detail::field(j, "norm_v", line);
  r.eps = detail::field(j, "eps", line);
  r.error_ratio = detail::field(j, "error_ratio", line);
  r.residual_sq = detail::field(j, "residual_sq", line);
  r.tilde_gap_sq = detail::field(j, "tilde_gap_sq", line);
  r.relax_gap_sq = detail::field(j, "relax_gap_sq", line);
  r.step_norm = detail::field(j, "step_norm", line);
  r.s_k = detail::field(j, "s_k", line);
  r.dist_to_solution = detail::field(j, "dist_to_solution", line, true);
  r.dist_w_to_solution = detail::field(j, "dist_w_to_solution", line, true);
  r.Lambda = detail::field(j, "Lambda", line);
  r.norm_v_a = detail::field(j, "norm_v_a", line);
  r.eps_a = detail::field(j, "eps_a", line);
  return r;
}

inline void write_trace_jsonl(std::ostream& out, const std::optional<TraceHeader>& header,
                              const std::vector<IterationRecord>& trace) {
  if (header) out << header_to_json(*header).dump() << '\n';
  for (const auto& r : trace) out << record_to_json(r).dump() << '\n';
}

struct TraceFile {
  std::optional<TraceHeader> header;
  std::vector<IterationRecord> records;
};

/// Reads a JSON-lines trace. Blank lines are skipped; iteration indices must
/// increase by one starting at 1.
inline TraceFile read_trace_jsonl(std::istream& in) {
  TraceFile tf;
  std::string text;
  long line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
      throw ParseError(line, "malformed JSON");
    }
    if (j.is_object() && j.value("type", std::string()) == "header") {
      if (tf.header || !tf.records.empty()) throw ParseError(line, "header must be the first line");
      tf.header = header_from_json(j, line);
      continue;
    }
    IterationRecord r = record_from_json(j, line);
    const long expected = static_cast<long>(tf.records.size()) + 1;
    if (r.k != expected) {
      throw ParseError(line, "expected k = " + std::to_string(expected) + ", got " + std::to_string(r.k));
    }
    tf.records.push_back(r);
  }
  return tf;
}

inline constexpr const char* kCsvColumns =
    "k,norm_v,eps,lambda,error_ratio,step_norm,s_k,dist_to_solution,Lambda,norm_v_a,eps_a";

inline void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& trace) {
  using detail::num;
  out << kCsvColumns << '\n';
  for (const auto& r : trace) {
    out << r.k << ',' << num(r.norm_v) << ',' << num(r.eps) << ',' << num(r.lambda) << ','
        << num(r.error_ratio) << ',' << num(r.step_norm) << ',' << num(r.s_k) << ','
        << num(r.dist_to_solution) << ',' << num(r.Lambda) << ',' << num(r.norm_v_a) << ','
        << num(r.eps_a) << '\n';
  }
}

}  // namespace ihpe
