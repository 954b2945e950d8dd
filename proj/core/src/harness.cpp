#include "page/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <set>
#include <sstream>

#include "page/dataset.hpp"
#include "page/errors.hpp"
#include "page/parallel.hpp"
#include "page/problems.hpp"
#include "page/rng.hpp"
#include "page/trace_io.hpp"

namespace page {

using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// JSON access with configuration errors instead of library exceptions.

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": invalid JSON: " + e.what());
  }
}

void require_object(const json& j, const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + " must be a JSON object");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(ctx + ": unknown key '" + it.key() + "'");
  }
}

double num(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError(ctx + ": missing '" + key + "'");
  if (!j[key].is_number()) throw ConfigError(ctx + ": '" + key + "' must be a number");
  return j[key].get<double>();
}

double num_or(const json& j, const char* key, double fallback, const std::string& ctx) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return num(j, key, ctx);
}

std::uint64_t count(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError(ctx + ": missing '" + key + "'");
  const json& v = j[key];
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  throw ConfigError(ctx + ": '" + key + "' must be a non-negative integer");
}

std::uint64_t count_or(const json& j, const char* key, std::uint64_t fallback, const std::string& ctx) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return count(j, key, ctx);
}

std::optional<std::uint64_t> opt_count(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return count(j, key, ctx);
}

std::optional<double> opt_num(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return num(j, key, ctx);
}

bool flag_or(const json& j, const char* key, bool fallback, const std::string& ctx) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  if (!j[key].is_boolean()) throw ConfigError(ctx + ": '" + key + "' must be true or false");
  return j[key].get<bool>();
}

std::string str(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key) || !j[key].is_string())
    throw ConfigError(ctx + ": '" + key + "' must be a string");
  return j[key].get<std::string>();
}

std::string str_or(const json& j, const char* key, const std::string& fallback, const std::string& ctx) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return str(j, key, ctx);
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json opt_json(const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Problems

json resolve_problem(const json& in) {
  const std::string ctx = "problem";
  require_object(in, ctx);
  const std::string type = str(in, "type", ctx);
  json out;
  out["type"] = type;
  if (type == "quadratic") {
    check_keys(in, {"type", "n", "d", "mu", "L", "seed", "hessian_spread", "noise_scale",
                    "center_scale", "online", "L_scale"},
               ctx);
    const QuadraticOptions defaults;
    out["n"] = count(in, "n", ctx);
    out["d"] = count(in, "d", ctx);
    out["mu"] = num(in, "mu", ctx);
    out["L"] = num(in, "L", ctx);
    out["seed"] = count_or(in, "seed", 0, ctx);
    out["hessian_spread"] = num_or(in, "hessian_spread", defaults.hessian_spread, ctx);
    out["noise_scale"] = num_or(in, "noise_scale", defaults.noise_scale, ctx);
    out["center_scale"] = num_or(in, "center_scale", defaults.center_scale, ctx);
  } else if (type == "pl_sine") {
    check_keys(in, {"type", "online", "L_scale"}, ctx);
  } else if (type == "hard_instance") {
    check_keys(in, {"type", "n", "d", "L", "delta0", "online", "L_scale"}, ctx);
    out["n"] = count(in, "n", ctx);
    out["d"] = count(in, "d", ctx);
    out["L"] = num_or(in, "L", 1.0, ctx);
    out["delta0"] = num_or(in, "delta0", 1.0, ctx);
  } else if (type == "logreg") {
    check_keys(in, {"type", "alpha", "path", "format", "num_features", "synthetic", "online",
                    "L_scale"},
               ctx);
    out["alpha"] = num_or(in, "alpha", 0.1, ctx);
    if (in.contains("synthetic")) {
      const json& s = in["synthetic"];
      require_object(s, "problem.synthetic");
      check_keys(s, {"rows", "cols", "density", "seed"}, "problem.synthetic");
      json syn;
      syn["rows"] = count(s, "rows", "problem.synthetic");
      syn["cols"] = count(s, "cols", "problem.synthetic");
      syn["density"] = num_or(s, "density", 1.0, "problem.synthetic");
      syn["seed"] = count_or(s, "seed", 0, "problem.synthetic");
      out["synthetic"] = syn;
    } else {
      out["path"] = str(in, "path", ctx);
      out["format"] = str_or(in, "format", "csv", ctx);
      out["num_features"] = count_or(in, "num_features", 0, ctx);
    }
  } else {
    throw ConfigError("problem: unknown type '" + type +
                      "' (expected quadratic, pl_sine, hard_instance or logreg)");
  }
  out["online"] = flag_or(in, "online", false, ctx);
  out["L_scale"] = num_or(in, "L_scale", 1.0, ctx);
  return out;
}

ProblemPtr build_resolved_problem(const json& r) {
  const std::string type = r["type"].get<std::string>();
  ProblemPtr p;
  if (type == "quadratic") {
    QuadraticOptions opt;
    opt.hessian_spread = r["hessian_spread"].get<double>();
    opt.noise_scale = r["noise_scale"].get<double>();
    opt.center_scale = r["center_scale"].get<double>();
    p = make_quadratic(r["n"].get<std::uint64_t>(), r["d"].get<std::uint64_t>(),
                       r["mu"].get<double>(), r["L"].get<double>(), r["seed"].get<std::uint64_t>(),
                       opt);
  } else if (type == "pl_sine") {
    p = make_pl_sine();
  } else if (type == "hard_instance") {
    p = make_hard_instance(r["n"].get<std::uint64_t>(), r["d"].get<std::uint64_t>(),
                           r["L"].get<double>(), r["delta0"].get<double>());
  } else {
    Dataset data;
    if (r.contains("synthetic")) {
      const json& s = r["synthetic"];
      data = make_synthetic_classification(s["rows"].get<std::uint64_t>(),
                                           s["cols"].get<std::uint64_t>(),
                                           s["density"].get<double>(), s["seed"].get<std::uint64_t>());
    } else {
      data = load_dataset(r["path"].get<std::string>(),
                          parse_dataset_format(r["format"].get<std::string>()),
                          r["num_features"].get<std::uint64_t>());
    }
    p = make_nonconvex_logreg(std::move(data), r["alpha"].get<double>());
  }
  if (r["L_scale"].get<double>() != 1.0)
    p = std::make_shared<ScaledSmoothnessView>(p, r["L_scale"].get<double>());
  if (r["online"].get<bool>()) p = stream_view(p);
  return p;
}

// ---------------------------------------------------------------------------
// Experiments

json config_to_json(const PageConfig& c) {
  json j;
  j["eta"] = c.eta;
  j["b"] = c.b;
  j["b_prime"] = c.b_prime;
  j["p"] = c.p;
  j["seed"] = c.seed;
  j["max_iters"] = c.max_iters;
  j["target_eps"] = c.target_eps;
  j["output_mode"] = to_string(c.output_mode);
  j["stop_window"] = c.stop_window;
  j["early_stop"] = c.early_stop;
  j["stop_metric"] = to_string(c.stop_metric);
  j["record_diagnostics"] = c.record_diagnostics;
  return j;
}

json resolve_overrides(const json& in) {
  const std::string ctx = "overrides";
  require_object(in, ctx);
  check_keys(in, {"eta", "b", "b_prime", "p", "output_mode", "stop_metric"}, ctx);
  json out;
  if (in.contains("eta")) out["eta"] = num(in, "eta", ctx);
  if (in.contains("b")) out["b"] = count(in, "b", ctx);
  if (in.contains("b_prime")) out["b_prime"] = count(in, "b_prime", ctx);
  if (in.contains("p")) out["p"] = num(in, "p", ctx);
  if (in.contains("output_mode"))
    out["output_mode"] = to_string(parse_output_mode(str(in, "output_mode", ctx)));
  if (in.contains("stop_metric"))
    out["stop_metric"] = to_string(parse_stop_metric(str(in, "stop_metric", ctx)));
  return out;
}

std::vector<std::uint64_t> resolve_seeds(const json& in, const CliOverrides& cli, const std::string& ctx) {
  if (cli.seed) return {*cli.seed};
  if (!in.contains("seeds")) return {0};
  const json& s = in["seeds"];
  if (!s.is_array()) throw ConfigError(ctx + ": 'seeds' must be an array");
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < s.size(); ++k) {
    json tmp;
    tmp["seed"] = s[k];
    seeds.push_back(count(tmp, "seed", ctx));
  }
  if (seeds.empty()) throw ConfigError(ctx + ": 'seeds' must not be empty");
  return seeds;
}

// Fields shared by experiments and comparisons.
void resolve_common(const json& in, const CliOverrides& cli, json& out, const std::string& ctx) {
  if (!in.contains("problem")) throw ConfigError(ctx + ": missing 'problem'");
  out["problem"] = resolve_problem(in["problem"]);
  const double eps = num(in, "eps", ctx);
  if (!(eps > 0.0)) throw ConfigError(ctx + ": 'eps' must be positive");
  out["eps"] = eps;
  out["delta0"] = opt_json(opt_num(in, "delta0", ctx));
  std::optional<std::uint64_t> max_iters = opt_count(in, "max_iters", ctx);
  if (cli.max_iters) max_iters = cli.max_iters;
  out["max_iters"] = opt_json(max_iters);
  out["early_stop"] = flag_or(in, "early_stop", true, ctx);
  out["stop_window"] = count_or(in, "stop_window", 16, ctx);
  out["record_diagnostics"] = flag_or(in, "record_diagnostics", true, ctx);
  out["seeds"] = resolve_seeds(in, cli, ctx);
  out["workers"] = count_or(in, "workers", 0, ctx);
  std::string out_dir = str_or(in, "out_dir", ".", ctx);
  if (cli.out_dir) out_dir = cli.out_dir->string();
  out["out_dir"] = out_dir;
}

json resolve_experiment(const json& in, const CliOverrides& cli) {
  const std::string ctx = "experiment";
  require_object(in, ctx);
  check_keys(in, {"problem", "regime", "eps", "b_prime", "delta0", "overrides", "max_iters",
                  "early_stop", "stop_window", "record_diagnostics", "seeds", "outputs", "out_dir",
                  "workers"},
             ctx);
  json out;
  resolve_common(in, cli, out, ctx);
  const std::string regime = str(in, "regime", ctx);
  if (regime != "manual") parse_regime(regime);
  out["regime"] = regime;
  out["b_prime"] = opt_json(opt_count(in, "b_prime", ctx));
  out["overrides"] = in.contains("overrides") ? resolve_overrides(in["overrides"]) : json::object();
  json outputs;
  json raw_out = in.contains("outputs") ? in["outputs"] : json::object();
  require_object(raw_out, "outputs");
  check_keys(raw_out, {"trace_csv", "summary_json"}, "outputs");
  outputs["trace_csv"] = raw_out.contains("trace_csv") ? raw_out["trace_csv"] : json("trace_seed{seed}.csv");
  outputs["summary_json"] = raw_out.contains("summary_json") ? raw_out["summary_json"] : json("summary.json");
  for (const char* k : {"trace_csv", "summary_json"}) {
    if (!outputs[k].is_null() && !outputs[k].is_string())
      throw ConfigError(std::string("outputs.") + k + " must be a path string or null");
  }
  out["outputs"] = outputs;
  return out;
}

std::string substitute(std::string pattern, const std::string& key, const std::string& value) {
  for (std::size_t pos = pattern.find(key); pos != std::string::npos; pos = pattern.find(key, pos)) {
    pattern.replace(pos, key.size(), value);
    pos += value.size();
  }
  return pattern;
}

struct Prepared {
  ProblemPtr problem;
  std::optional<Plan> plan;
  PageConfig base;  // seed filled per run
  std::optional<double> delta0;
};

Prepared prepare(const json& r) {
  Prepared prep;
  prep.problem = build_resolved_problem(r["problem"]);
  const Problem& problem = *prep.problem;
  const double eps = r["eps"].get<double>();
  prep.delta0 = r["delta0"].is_null() ? problem.delta0() : std::optional<double>(r["delta0"].get<double>());
  const std::string regime = r["regime"].get<std::string>();
  const json& ov = r["overrides"];
  PageConfig cfg;
  if (regime == "manual") {
    for (const char* k : {"eta", "b", "b_prime", "p"}) {
      if (!ov.contains(k)) throw ConfigError(std::string("manual regime needs overrides.") + k);
    }
    if (r["max_iters"].is_null()) throw ConfigError("manual regime needs max_iters");
    cfg.target_eps = eps;
  } else {
    const std::optional<std::uint64_t> bp =
        r["b_prime"].is_null() ? std::nullopt : std::optional<std::uint64_t>(r["b_prime"].get<std::uint64_t>());
    prep.plan = plan_for(parse_regime(regime), problem, eps, bp, prep.delta0);
    cfg = to_config(*prep.plan, 0, eps);
  }
  if (ov.contains("eta")) cfg.eta = ov["eta"].get<double>();
  if (ov.contains("b")) cfg.b = ov["b"].get<std::uint64_t>();
  if (ov.contains("b_prime")) cfg.b_prime = ov["b_prime"].get<std::uint64_t>();
  if (ov.contains("p")) cfg.p = ov["p"].get<double>();
  if (ov.contains("output_mode")) cfg.output_mode = parse_output_mode(ov["output_mode"].get<std::string>());
  if (ov.contains("stop_metric")) cfg.stop_metric = parse_stop_metric(ov["stop_metric"].get<std::string>());
  if (!r["max_iters"].is_null()) cfg.max_iters = r["max_iters"].get<std::uint64_t>();
  cfg.early_stop = r["early_stop"].get<bool>();
  cfg.stop_window = r["stop_window"].get<std::uint64_t>();
  cfg.record_diagnostics = r["record_diagnostics"].get<bool>();
  cfg.validate();

  if (prep.plan && (ov.contains("eta") || ov.contains("p") || ov.contains("b") || ov.contains("b_prime"))) {
    Plan check = *prep.plan;
    check.eta = cfg.eta;
    check.p = cfg.p;
    check.b = cfg.b;
    check.b_prime = cfg.b_prime;
    if (!satisfies_stepsize_bound(check, problem.constants().L, problem.constants().mu))
      throw ConfigError("overrides violate the stepsize bound of regime " + regime);
  }
  prep.base = cfg;
  return prep;
}

ExperimentResult execute(const json& r, const Prepared& prep, const std::string& method) {
  ExperimentResult res;
  res.problem_id = prep.problem->id();
  res.plan = prep.plan;
  res.config = prep.base;
  const double eps = r["eps"].get<double>();
  if (prep.plan) {
    res.theory_budget = prep.plan->grad_budget;
    if (prep.delta0)
      res.theory_bound = grad_bound(*prep.plan, prep.problem->constants().L, *prep.delta0, eps);
  }
  const auto seeds = r["seeds"].get<std::vector<std::uint64_t>>();
  const json& pattern = r["outputs"]["trace_csv"];
  res.runs.resize(seeds.size());
  parallel_for(seeds.size(), r["workers"].get<std::uint64_t>(), [&](std::size_t k) {
    SeedRun& sr = res.runs[k];
    sr.seed = seeds[k];
    PageConfig cfg = prep.base;
    cfg.seed = seeds[k];
    Trace trace;
    try {
      RunResult rr = run(*prep.problem, cfg);
      trace = std::move(rr.trace);
    } catch (const DivergenceError& e) {
      sr.diverged = true;
      if (e.partial_trace()) trace = *e.partial_trace();
    }
    sr.iterations = trace.iterations();
    sr.output_index = trace.output_index;
    if (!trace.records.empty()) {
      const StepRecord& last = trace.records.back();
      sr.grad_evals_nominal = last.grad_evals_nominal_after;
      sr.grad_evals_wall = last.grad_evals_after;
      sr.final_grad_norm = last.grad_norm;
      sr.final_f_gap = last.f_gap;
      if (trace.target_index)
        sr.grad_evals_to_target = trace.records[*trace.target_index].grad_evals_nominal_after;
    }
    if (!pattern.is_null()) {
      sr.trace_file = substitute(substitute(pattern.get<std::string>(), "{seed}", std::to_string(sr.seed)),
                                 "{method}", method);
      sr.trace_text = trace_csv(trace);
    }
  });
  for (const SeedRun& sr : res.runs) {
    if (sr.diverged) res.exit_code = kExitDiverged;
  }
  return res;
}

json summary_json(const json& resolved, const ExperimentResult& res, const Problem& problem) {
  json s;
  s["kind"] = "experiment";
  s["config"] = resolved;
  s["problem_id"] = res.problem_id;
  const auto& c = problem.constants();
  json consts;
  consts["L"] = c.L;
  consts["sigma"] = opt_json(c.sigma);
  consts["mu"] = opt_json(c.mu);
  consts["f_star"] = opt_json(c.f_star);
  consts["delta0"] = opt_json(problem.delta0());
  consts["n"] = problem.size();
  consts["d"] = problem.dim();
  s["constants"] = consts;
  s["plan"] = res.plan ? json::parse(plan_to_json(*res.plan)) : json(nullptr);
  json warnings = json::array();
  if (res.plan) {
    for (const auto& w : res.plan->warnings) warnings.push_back(w);
  }
  s["plan_warnings"] = warnings;
  json pc = config_to_json(res.config);
  pc.erase("seed");
  s["page_config"] = pc;
  s["theory_budget"] = opt_json(res.theory_budget);
  s["theory_bound"] = opt_json(res.theory_bound);
  json runs = json::array();
  for (const SeedRun& sr : res.runs) {
    json j;
    j["seed"] = sr.seed;
    j["trace_csv"] = sr.trace_file.empty() ? json(nullptr) : json(sr.trace_file);
    j["status"] = sr.diverged ? "diverged" : "ok";
    j["iterations"] = sr.iterations;
    j["reached_target"] = sr.grad_evals_to_target.has_value();
    j["grad_evals_to_target"] = opt_json(sr.grad_evals_to_target);
    j["grad_evals"] = sr.grad_evals_nominal;
    j["grad_evals_wall"] = sr.grad_evals_wall;
    j["final_grad_norm"] = opt_json(sr.final_grad_norm);
    j["final_f_gap"] = opt_json(sr.final_f_gap);
    j["output_index"] = sr.output_index;
    j["theory_budget"] = opt_json(res.theory_budget);
    std::optional<double> ratio;
    if (sr.grad_evals_to_target && res.theory_budget && *res.theory_budget > 0.0)
      ratio = static_cast<double>(*sr.grad_evals_to_target) / *res.theory_budget;
    j["budget_ratio"] = opt_json(ratio);
    runs.push_back(j);
  }
  s["runs"] = runs;
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

// Runs a resolved experiment in memory and renders its summary.
ExperimentResult execute_with_summary(const json& resolved, const std::string& method) {
  const Prepared prep = prepare(resolved);
  ExperimentResult res = execute(resolved, prep, method);
  res.summary_text = summary_json(resolved, res, *prep.problem).dump(2) + "\n";
  return res;
}

// ---------------------------------------------------------------------------
// Comparison

json resolve_compare(const json& in, const CliOverrides& cli) {
  const std::string ctx = "compare";
  require_object(in, ctx);
  check_keys(in, {"problem", "eps", "delta0", "max_iters", "early_stop", "stop_window",
                  "record_diagnostics", "seeds", "methods", "outputs", "out_dir", "workers"},
             ctx);
  json out;
  resolve_common(in, cli, out, ctx);
  if (!in.contains("methods") || !in["methods"].is_array())
    throw UsageError("compare: 'methods' must be an array");
  if (in["methods"].size() < 2) throw UsageError("compare: at least two methods are required");
  json methods = json::array();
  std::set<std::string> names;
  for (const json& m : in["methods"]) {
    require_object(m, "compare.methods[]");
    check_keys(m, {"name", "regime", "b_prime", "overrides", "max_iters"}, "compare.methods[]");
    json rm;
    const std::string regime = str(m, "regime", "compare.methods[]");
    if (regime != "manual") parse_regime(regime);
    rm["name"] = str_or(m, "name", regime, "compare.methods[]");
    if (!names.insert(rm["name"].get<std::string>()).second)
      throw ConfigError("compare: duplicate method name '" + rm["name"].get<std::string>() + "'");
    rm["regime"] = regime;
    rm["b_prime"] = opt_json(opt_count(m, "b_prime", "compare.methods[]"));
    rm["overrides"] = m.contains("overrides") ? resolve_overrides(m["overrides"]) : json::object();
    std::optional<std::uint64_t> mi = opt_count(m, "max_iters", "compare.methods[]");
    if (cli.max_iters) mi = cli.max_iters;
    rm["max_iters"] = opt_json(mi);
    methods.push_back(rm);
  }
  out["methods"] = methods;
  json raw_out = in.contains("outputs") ? in["outputs"] : json::object();
  require_object(raw_out, "outputs");
  check_keys(raw_out, {"trace_csv", "table_csv", "summary_json"}, "outputs");
  json outputs;
  outputs["trace_csv"] = raw_out.contains("trace_csv") ? raw_out["trace_csv"] : json("{method}_trace_seed{seed}.csv");
  outputs["table_csv"] = str_or(raw_out, "table_csv", "compare.csv", "outputs");
  outputs["summary_json"] = str_or(raw_out, "summary_json", "compare.json", "outputs");
  out["outputs"] = outputs;
  return out;
}

json method_experiment(const json& cmp, const json& m) {
  json e;
  e["problem"] = cmp["problem"];
  e["eps"] = cmp["eps"];
  e["delta0"] = cmp["delta0"];
  e["max_iters"] = m["max_iters"].is_null() ? cmp["max_iters"] : m["max_iters"];
  e["early_stop"] = cmp["early_stop"];
  e["stop_window"] = cmp["stop_window"];
  e["record_diagnostics"] = cmp["record_diagnostics"];
  e["seeds"] = cmp["seeds"];
  e["workers"] = cmp["workers"];
  e["out_dir"] = cmp["out_dir"];
  e["regime"] = m["regime"];
  e["b_prime"] = m["b_prime"];
  e["overrides"] = m["overrides"];
  json outputs;
  outputs["trace_csv"] = cmp["outputs"]["trace_csv"];
  outputs["summary_json"] = nullptr;
  e["outputs"] = outputs;
  return e;
}

std::string opt_field(const std::optional<std::uint64_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

CompareResult execute_compare(const json& resolved) {
  CompareResult out;
  json summary;
  summary["kind"] = "compare";
  summary["config"] = resolved;
  json methods = json::array();
  std::ostringstream table;
  table << "method,seed,grad_evals_to_target,iterations,final_grad_norm,final_f_gap\n";
  for (const json& m : resolved["methods"]) {
    const std::string name = m["name"].get<std::string>();
    const json exp = method_experiment(resolved, m);
    MethodResult mr;
    mr.name = name;
    mr.result = execute_with_summary(exp, name);
    std::vector<double> to_target;
    for (const SeedRun& sr : mr.result.runs) {
      to_target.push_back(sr.grad_evals_to_target ? static_cast<double>(*sr.grad_evals_to_target)
                                                  : std::numeric_limits<double>::infinity());
      table << name << ',' << sr.seed << ',' << opt_field(sr.grad_evals_to_target) << ','
            << sr.iterations << ',' << (sr.final_grad_norm ? format_double(*sr.final_grad_norm) : "")
            << ',' << (sr.final_f_gap ? format_double(*sr.final_f_gap) : "") << '\n';
    }
    mr.median_grad_to_target = median_with_inf(to_target);
    json mj;
    mj["name"] = name;
    mj["median_grad_evals_to_target"] =
        std::isfinite(mr.median_grad_to_target) ? json(mr.median_grad_to_target) : json(nullptr);
    mj["summary"] = json::parse(mr.result.summary_text);
    methods.push_back(mj);
    if (mr.result.exit_code != kExitOk) out.exit_code = mr.result.exit_code;
    out.methods.push_back(std::move(mr));
  }
  summary["methods"] = methods;
  out.json_text = summary.dump(2) + "\n";
  out.table_text = table.str();
  return out;
}

// ---------------------------------------------------------------------------
// Verification suite

Vector random_ball_point(const Vector& center, double radius, CounterRng& rng) {
  const std::size_t d = center.size();
  Vector u(d);
  double nrm = 0.0;
  while (nrm == 0.0) {
    for (double& v : u) v = rng.next_normal();
    nrm = vec::norm(u);
  }
  const double r = radius * std::pow(rng.next_unit(), 1.0 / static_cast<double>(d)) / nrm;
  Vector x(center);
  for (std::size_t j = 0; j < d; ++j) x[j] += r * u[j];
  return x;
}

CheckReport run_check(const json& spec, std::uint64_t seed_offset) {
  const std::string ctx = "verify.checks[]";
  require_object(spec, ctx);
  const std::string kind = str(spec, "check", ctx);
  if (!spec.contains("problem")) throw ConfigError(ctx + ": missing 'problem'");
  const ProblemPtr problem = build_resolved_problem(resolve_problem(spec["problem"]));
  const std::uint64_t seed = count_or(spec, "seed", 0, ctx) + seed_offset;
  const double L = problem->constants().L;
  CheckReport r;
  if (kind == "grad_fd") {
    check_keys(spec, {"check", "problem", "seed", "points", "radius", "h", "bound"}, ctx);
    const std::uint64_t points = count_or(spec, "points", 5, ctx);
    const double radius = num_or(spec, "radius", 1.0, ctx);
    const double h = num_or(spec, "h", 1e-6, ctx);
    const double bound = num_or(spec, "bound", 1e-5, ctx);
    if (points == 0) throw UsageError("grad_fd: points must be >= 1");
    CounterRng rng(seed, Stream::kMonteCarlo);
    for (std::uint64_t k = 0; k < points; ++k) {
      CheckReport one = check_grad_fd(*problem, random_ball_point(problem->x0(), radius, rng), h, bound);
      if (k == 0 || one.observed > r.observed) r = one;
    }
    r.trials = points;
  } else if (kind == "descent_lemma") {
    check_keys(spec, {"check", "problem", "seed", "trials", "radius", "eta"}, ctx);
    r = check_descent_lemma_random(*problem, num_or(spec, "eta", 1.0 / L, ctx),
                                   count_or(spec, "trials", 1000, ctx),
                                   num_or(spec, "radius", 1.0, ctx), seed);
  } else if (kind == "variance_recursion") {
    check_keys(spec, {"check", "problem", "seed", "trials", "radius", "p", "b_prime", "b", "eta",
                      "err_scale", "two_sided", "sigma"},
               ctx);
    const double p = num_or(spec, "p", 0.5, ctx);
    const std::uint64_t bp = count_or(spec, "b_prime", 1, ctx);
    const double eta = num_or(spec, "eta", stepsize_bound(L, p, static_cast<double>(bp)), ctx);
    const double err_scale = num_or(spec, "err_scale", 0.5, ctx);
    CounterRng rng(seed, Stream::kEstimate);
    const Vector xt = random_ball_point(problem->x0(), num_or(spec, "radius", 1.0, ctx), rng);
    Vector gt(problem->dim());
    problem->full_grad(xt, gt);
    const double gscale = err_scale / std::sqrt(static_cast<double>(problem->dim()));
    for (double& v : gt) v += gscale * rng.next_normal();
    Vector xt1(xt);
    for (std::size_t j = 0; j < xt1.size(); ++j) xt1[j] -= eta * gt[j];
    RecursionOptions opt;
    opt.b = opt_count(spec, "b", ctx);
    opt.sigma = opt_num(spec, "sigma", ctx);
    opt.two_sided = flag_or(spec, "two_sided", false, ctx);
    r = check_variance_recursion(*problem, xt, xt1, gt, p, bp, count_or(spec, "trials", 10000, ctx),
                                 seed, opt);
  } else if (kind == "pl_constant") {
    check_keys(spec, {"check", "problem", "seed", "mu", "radius", "points_per_line",
                      "random_directions"},
               ctx);
    const std::optional<double> mu = opt_num(spec, "mu", ctx);
    if (!mu && !problem->constants().mu) throw ConfigError("pl_constant: no mu given or declared");
    GridSpec grid;
    grid.radius = num_or(spec, "radius", 10.0, ctx);
    grid.points_per_line = count_or(spec, "points_per_line", 100000, ctx);
    grid.random_directions = count_or(spec, "random_directions", 0, ctx);
    grid.seed = seed;
    r = check_pl_constant(*problem, mu ? *mu : *problem->constants().mu, grid);
  } else if (kind == "lyapunov") {
    check_keys(spec, {"check", "problem", "seed", "regime", "eps", "b_prime", "seeds", "horizon",
                      "pl"},
               ctx);
    const Regime regime = parse_regime(str_or(spec, "regime", "finite", ctx));
    const double eps = num_or(spec, "eps", 0.1, ctx);
    const Plan plan = plan_for(regime, *problem, eps, opt_count(spec, "b_prime", ctx));
    PageConfig cfg = to_config(plan, 0, eps);
    LyapunovOptions opt;
    const std::uint64_t nseeds = count_or(spec, "seeds", 1000, ctx);
    for (std::uint64_t k = 0; k < nseeds; ++k) opt.seeds.push_back(seed + k);
    opt.horizon = count_or(spec, "horizon", 50, ctx);
    opt.pl = flag_or(spec, "pl", is_pl(regime), ctx);
    r = check_lyapunov_descent(*problem, cfg, opt);
  } else {
    throw ConfigError("verify: unknown check '" + kind + "'");
  }
  r.name += "[" + problem->id() + "]";
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points

ProblemPtr build_problem(const std::string& problem_json) {
  return build_resolved_problem(resolve_problem(parse_json(problem_json, "problem")));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double median_with_inf(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::infinity();
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  if (m % 2 == 1) return values[m / 2];
  const double a = values[m / 2 - 1];
  const double b = values[m / 2];
  if (std::isinf(a) || std::isinf(b)) return std::numeric_limits<double>::infinity();
  return 0.5 * (a + b);
}

ExperimentResult run_experiment(const std::string& config_json, const CliOverrides& cli) {
  const json resolved = resolve_experiment(parse_json(config_json, "experiment"), cli);
  ExperimentResult res = execute_with_summary(resolved, "");
  const std::filesystem::path dir = resolved["out_dir"].get<std::string>();
  for (const SeedRun& sr : res.runs) {
    if (!sr.trace_file.empty()) write_file(dir / sr.trace_file, sr.trace_text);
  }
  const json& summary = resolved["outputs"]["summary_json"];
  if (!summary.is_null()) {
    res.summary_path = dir / summary.get<std::string>();
    write_file(res.summary_path, res.summary_text);
  }
  return res;
}

CompareResult compare_methods(const std::string& config_json, const CliOverrides& cli) {
  const json resolved = resolve_compare(parse_json(config_json, "compare"), cli);
  CompareResult res = execute_compare(resolved);
  const std::filesystem::path dir = resolved["out_dir"].get<std::string>();
  for (const MethodResult& m : res.methods) {
    for (const SeedRun& sr : m.result.runs) {
      if (!sr.trace_file.empty()) write_file(dir / sr.trace_file, sr.trace_text);
    }
  }
  res.csv_path = dir / resolved["outputs"]["table_csv"].get<std::string>();
  write_file(res.csv_path, res.table_text);
  res.json_path = dir / resolved["outputs"]["summary_json"].get<std::string>();
  write_file(res.json_path, res.json_text);
  return res;
}

std::string default_verify_suite() {
  return R"({
  "checks": [
    {"check": "grad_fd", "problem": {"type": "quadratic", "n": 64, "d": 8, "mu": 0.1, "L": 1.0, "seed": 1}, "points": 10, "bound": 1e-6},
    {"check": "grad_fd", "problem": {"type": "pl_sine"}, "points": 10, "radius": 3.0, "bound": 1e-6},
    {"check": "grad_fd", "problem": {"type": "hard_instance", "n": 4, "d": 8}, "points": 10, "bound": 1e-6},
    {"check": "grad_fd", "problem": {"type": "logreg", "alpha": 0.1, "synthetic": {"rows": 200, "cols": 10, "density": 0.5, "seed": 3}}, "points": 10, "bound": 1e-6},
    {"check": "descent_lemma", "problem": {"type": "quadratic", "n": 64, "d": 8, "mu": 0.1, "L": 1.0, "seed": 1}, "trials": 1000},
    {"check": "descent_lemma", "problem": {"type": "pl_sine"}, "trials": 1000, "radius": 5.0},
    {"check": "descent_lemma", "problem": {"type": "hard_instance", "n": 4, "d": 8}, "trials": 1000},
    {"check": "descent_lemma", "problem": {"type": "logreg", "alpha": 0.1, "synthetic": {"rows": 200, "cols": 10, "density": 0.5, "seed": 3}}, "trials": 1000, "radius": 3.0},
    {"check": "variance_recursion", "problem": {"type": "quadratic", "n": 64, "d": 8, "mu": 0.1, "L": 1.0, "seed": 1}, "p": 0.5, "b_prime": 2, "trials": 20000},
    {"check": "variance_recursion", "problem": {"type": "hard_instance", "n": 4, "d": 8}, "p": 0.5, "b_prime": 1, "trials": 20000},
    {"check": "variance_recursion", "problem": {"type": "quadratic", "n": 64, "d": 8, "mu": 0.1, "L": 1.0, "seed": 1}, "p": 0.3, "b_prime": 2, "b": 8, "trials": 20000},
    {"check": "pl_constant", "problem": {"type": "pl_sine"}, "mu": 0.03125, "radius": 10.0, "points_per_line": 100000},
    {"check": "pl_constant", "problem": {"type": "quadratic", "n": 64, "d": 8, "mu": 0.1, "L": 1.0, "seed": 1}, "radius": 5.0, "points_per_line": 2001, "random_directions": 16},
    {"check": "lyapunov", "problem": {"type": "hard_instance", "n": 4, "d": 8}, "regime": "finite", "eps": 0.1, "seeds": 1000, "horizon": 50},
    {"check": "lyapunov", "problem": {"type": "quadratic", "n": 64, "d": 8, "mu": 0.1, "L": 1.0, "seed": 1}, "regime": "finite", "eps": 0.05, "seeds": 1000, "horizon": 40},
    {"check": "lyapunov", "problem": {"type": "quadratic", "n": 64, "d": 8, "mu": 0.1, "L": 1.0, "seed": 1}, "regime": "finite_pl", "eps": 0.001, "seeds": 500, "horizon": 100}
  ]
})";
}

VerifyResult verify_suite(const std::string& config_json, const CliOverrides& cli) {
  const json in = parse_json(config_json, "verify");
  require_object(in, "verify");
  check_keys(in, {"checks", "out_dir", "outputs", "workers"}, "verify");
  if (!in.contains("checks") || !in["checks"].is_array())
    throw UsageError("verify: 'checks' must be an array");
  if (in["checks"].empty()) throw UsageError("verify: the check list is empty");
  std::string dir = str_or(in, "out_dir", ".", "verify");
  if (cli.out_dir) dir = cli.out_dir->string();
  std::string file = "verify_reports.jsonl";
  if (in.contains("outputs")) {
    require_object(in["outputs"], "verify.outputs");
    check_keys(in["outputs"], {"reports_jsonl"}, "verify.outputs");
    file = str_or(in["outputs"], "reports_jsonl", file, "verify.outputs");
  }
  VerifyResult res;
  const std::uint64_t offset = cli.seed.value_or(0);
  std::string lines;
  for (const json& spec : in["checks"]) {
    res.reports.push_back(run_check(spec, offset));
    lines += report_to_json(res.reports.back()) + "\n";
    if (!res.reports.back().passed) res.exit_code = kExitCheckFailed;
  }
  res.jsonl_path = std::filesystem::path(dir) / file;
  write_file(res.jsonl_path, lines);
  return res;
}

ReplayResult replay(const std::filesystem::path& summary_path) {
  const json summary = parse_json(read_text_file(summary_path), "summary");
  require_object(summary, "summary");
  const std::string kind = str(summary, "kind", "summary");
  const json& resolved = summary["config"];
  // Artifacts are located relative to the summary, so moved directories replay too.
  std::filesystem::path base = summary_path.parent_path();
  const std::string rel = resolved["outputs"]["summary_json"].get<std::string>();
  for (const auto& part : std::filesystem::path(rel).parent_path()) {
    (void)part;
    base = base.parent_path();
  }
  ReplayResult out;
  auto compare = [&](const std::filesystem::path& file, const std::string& expected) {
    ++out.compared;
    std::string actual;
    try {
      actual = read_text_file(file);
    } catch (const ConfigError&) {
      out.mismatches.push_back(file.string() + ": missing");
      return;
    }
    if (actual != expected) out.mismatches.push_back(file.string() + ": contents differ");
  };
  if (kind == "experiment") {
    const ExperimentResult res = execute_with_summary(resolved, "");
    for (const SeedRun& sr : res.runs) {
      if (!sr.trace_file.empty()) compare(base / sr.trace_file, sr.trace_text);
    }
    compare(summary_path, res.summary_text);
  } else if (kind == "compare") {
    const CompareResult res = execute_compare(resolved);
    for (const MethodResult& m : res.methods) {
      for (const SeedRun& sr : m.result.runs) {
        if (!sr.trace_file.empty()) compare(base / sr.trace_file, sr.trace_text);
      }
    }
    compare(base / resolved["outputs"]["table_csv"].get<std::string>(), res.table_text);
    compare(summary_path, res.json_text);
  } else {
    throw ConfigError("summary: unknown kind '" + kind + "'");
  }
  out.exit_code = out.mismatches.empty() ? kExitOk : kExitCheckFailed;
  return out;
}

}  // namespace page
