#include "bergman/run_config.hpp"

#include "bergman/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace bergman {

namespace {

using Json = nlohmann::json;

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const PerturbationTooLarge*>(&e)) return "PerturbationTooLarge";
  if (dynamic_cast<const CalibrationFailed*>(&e)) return "CalibrationFailed";
  if (dynamic_cast<const NoAdmissibleDelta*>(&e)) return "NoAdmissibleDelta";
  if (dynamic_cast<const SingularKernel*>(&e)) return "SingularKernel";
  if (dynamic_cast<const DegenerateGeneratingForm*>(&e)) return "DegenerateGeneratingForm";
  if (dynamic_cast<const UnsupportedDomain*>(&e)) return "UnsupportedDomain";
  if (dynamic_cast<const NonIntegrable*>(&e)) return "NonIntegrable";
  if (dynamic_cast<const IllConditionedGram*>(&e)) return "IllConditionedGram";
  if (dynamic_cast<const NotInLp*>(&e)) return "NotInLp";
  return "Error";
}

// ---- typed access with key paths ------------------------------------------------------------

double number(const Json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError(key, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(key, "must be finite");
  return v;
}

long integer(const Json& j, const std::string& key, long lo, long hi) {
  if (!j.is_number_integer() && !(j.is_number() && std::floor(j.get<double>()) == j.get<double>())) {
    throw ConfigError(key, "must be an integer");
  }
  const long v = j.is_number_integer() ? j.get<long>() : static_cast<long>(j.get<double>());
  if (v < lo || v > hi) throw ConfigError(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return v;
}

std::uint64_t seed_value(const Json& j, const std::string& key) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0)) {
    throw ConfigError(key, "must be a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

std::vector<double> number_list(const Json& j, const std::string& key, double lo, double hi, bool open_lo = false) {
  if (!j.is_array() || j.empty()) throw ConfigError(key, "must be a nonempty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string k = key + "[" + std::to_string(i) + "]";
    const double v = number(j[i], k);
    if (v < lo || v > hi || (open_lo && v == lo)) {
      throw ConfigError(k, "must lie in " + std::string(open_lo ? "(" : "[") + std::to_string(lo) + ", " +
                               std::to_string(hi) + "]");
    }
    out.push_back(v);
  }
  return out;
}

std::string string_value(const Json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError(key, "must be a string");
  return j.get<std::string>();
}

void require_object(const Json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError(key, "must be an object");
}

/// Overlays `given` on `defaults`; keys missing from the defaults are rejected.
Json merge_options(const Json& defaults, const Json& given, const std::string& key) {
  Json out = defaults;
  if (given.is_null()) return out;
  require_object(given, key);
  for (const auto& [k, v] : given.items()) {
    const std::string path = key + "." + k;
    if (!defaults.contains(k)) throw ConfigError(path, "unknown option");
    const Json& d = defaults[k];
    if (d.is_object()) {
      out[k] = merge_options(d, v, path);
    } else if (d.is_number() && !v.is_number()) {
      throw ConfigError(path, "must be a number");
    } else if (d.is_string() && !v.is_string()) {
      throw ConfigError(path, "must be a string");
    } else if (d.is_array() && !v.is_array()) {
      throw ConfigError(path, "must be an array");
    } else if (d.is_boolean() && !v.is_boolean()) {
      throw ConfigError(path, "must be true or false");
    } else {
      out[k] = v;
    }
  }
  return out;
}

Json index_list(int n, std::initializer_list<std::vector<int>> heads) {
  Json out = Json::array();
  for (auto a : heads) {
    a.resize(n, 0);
    out.push_back(a);
  }
  return out;
}

Json volume_json(const VolumeOptions& v) {
  return {{"angular", v.angular}, {"polar", v.polar},   {"radial", v.radial},
          {"interior", v.interior}, {"shells", v.shells}, {"r0", v.r0}};
}

VolumeOptions volume_from(const Json& j, const std::string& key) {
  VolumeOptions v;
  v.angular = static_cast<int>(integer(j["angular"], key + ".angular", 4, 4096));
  v.polar = static_cast<int>(integer(j["polar"], key + ".polar", 1, 512));
  v.radial = static_cast<int>(integer(j["radial"], key + ".radial", 1, 256));
  v.interior = static_cast<int>(integer(j["interior"], key + ".interior", 1, 256));
  v.shells = static_cast<int>(integer(j["shells"], key + ".shells", 0, 60));
  v.r0 = number(j["r0"], key + ".r0");
  if (!(v.r0 > 0.0 && v.r0 <= 1.0)) throw ConfigError(key + ".r0", "must lie in (0, 1]");
  return v;
}

double check_open_unit(const Json& j, const std::string& key) {
  const double v = number(j, key);
  if (!(v > 0.0 && v < 1.0)) throw ConfigError(key, "must lie in (0, 1)");
  return v;
}

/// Range checks beyond the type checks of merge_options.
void validate_options(const std::string& name, const Json& o, const DomainParams& dp, const std::vector<double>& eps,
                      const std::string& key) {
  const std::string k = key + ".options";
  if (o.contains("seed")) seed_value(o["seed"], k + ".seed");
  auto positive_eps = [&] {
    for (std::size_t i = 0; i < eps.size(); ++i) {
      if (!(eps[i] > 0.0)) throw ConfigError(key + ".eps[" + std::to_string(i) + "]", "must be positive for " + name);
    }
  };
  if (name == "ball-exactness") {
    const auto dims = number_list(o["dims"], k + ".dims", 1, 3);
    (void)dims;
    integer(o["pairs"], k + ".pairs", 1, 1000000);
  } else if (name == "reproduce" || name == "reproduce-boundary") {
    const std::string rule = string_value(o["rule"], k + ".rule");
    if (rule != "volume" && rule != "stratified" && rule != "surface") {
      throw ConfigError(k + ".rule", "must be volume, stratified or surface");
    }
    integer(o["nodes"], k + ".nodes", 1, 20000000);
    volume_from(o["volume"], k + ".volume");
    integer(o["surface"]["angular"], k + ".surface.angular", 4, 4096);
    integer(o["surface"]["polar"], k + ".surface.polar", 1, 1024);
    integer(o["targets"], k + ".targets", 1, 10000);
    if (!o["polynomials"].is_array() || o["polynomials"].empty()) throw ConfigError(k + ".polynomials", "must be a nonempty array");
    for (std::size_t i = 0; i < o["polynomials"].size(); ++i) {
      const std::string pk = k + ".polynomials[" + std::to_string(i) + "]";
      const Json& a = o["polynomials"][i];
      if (!a.is_array() || static_cast<int>(a.size()) != dp.dim) {
        throw ConfigError(pk, "must be a multi-index of length " + std::to_string(dp.dim));
      }
      for (std::size_t j = 0; j < a.size(); ++j) integer(a[j], pk + "[" + std::to_string(j) + "]", 0, 64);
    }
  } else if (name == "k0-law") {
    integer(o["pairs"], k + ".pairs", 1, 10000000);
  } else if (name == "size-estimate") {
    integer(o["samples"], k + ".samples", 1, 10000000);
  } else if (name == "conjugate-symmetry") {
    integer(o["samples"], k + ".samples", 1, 10000000);
    integer(o["modulus_samples"], k + ".modulus_samples", 1, 10000000);
    positive_eps();
  } else if (name == "schur") {
    number_list(o["alphas"], k + ".alphas", 0.0, 1.0, true);
    for (std::size_t i = 0; i < o["alphas"].size(); ++i) check_open_unit(o["alphas"][i], k + ".alphas[" + std::to_string(i) + "]");
    number_list(o["depths"], k + ".depths", 0.0, 1.0, true);
  } else if (name == "model-integral") {
    number_list(o["dims"], k + ".dims", 1, 3);
    for (std::size_t i = 0; i < o["alphas"].size(); ++i) check_open_unit(o["alphas"][i], k + ".alphas[" + std::to_string(i) + "]");
    number_list(o["alphas"], k + ".alphas", 0.0, 1.0, true);
  } else if (name == "gamma-uniformity") {
    const double h = number(o["spacing"], k + ".spacing");
    if (!(h > 0.0 && h <= 1.0)) throw ConfigError(k + ".spacing", "must lie in (0, 1]");
  } else if (name == "defect-decay") {
    const double ratio = number(o["spacing_ratio"], k + ".spacing_ratio");
    if (!(ratio >= 1.0 && ratio <= 100.0)) throw ConfigError(k + ".spacing_ratio", "must lie in [1, 100]");
    integer(o["samples"], k + ".samples", 1, 10000000);
    integer(o["modulus_samples"], k + ".modulus_samples", 1, 10000000);
    positive_eps();
  } else if (name == "abs-bergman") {
    integer(o["dim"], k + ".dim", 1, 3);
    number_list(o["spacings"], k + ".spacings", 0.0, 1.0, true);
    number_list(o["p"], k + ".p", 1.0, 1e6, true);
    integer(o["trials"], k + ".trials", 1, 100);
  } else if (name == "density") {
    const double beta = number(o["beta"], k + ".beta");
    const double p = number(o["p"], k + ".p");
    if (!(beta > 0.0)) throw ConfigError(k + ".beta", "must be positive");
    if (!(p > 1.0)) throw ConfigError(k + ".p", "must exceed 1");
    const auto ns = number_list(o["n_list"], k + ".n_list", 2, 100000);
    for (std::size_t i = 0; i < ns.size(); ++i) integer(o["n_list"][i], k + ".n_list[" + std::to_string(i) + "]", 2, 100000);
  } else if (name == "oracle") {
    integer(o["dim"], k + ".dim", 1, 3);
    integer(o["degree_cap"], k + ".degree_cap", 1, 200);
  } else if (name == "opnorm") {
    const std::string op = string_value(o["op"], k + ".op");
    if (op != "gamma" && op != "b1" && op != "defect" && op != "abs-bergman") {
      throw ConfigError(k + ".op", "must be gamma, b1, defect or abs-bergman");
    }
    number_list(o["p"], k + ".p", 1.0, 1e6, true);
    const double h = number(o["spacing"], k + ".spacing");
    if (!(h > 0.0 && h <= 1.0)) throw ConfigError(k + ".spacing", "must lie in (0, 1]");
    integer(o["trials"], k + ".trials", 1, 100);
    if (op == "defect") positive_eps();
    if (op == "abs-bergman" && dp.kind != "ball") throw ConfigError(key + ".domain.kind", "abs-bergman needs the ball oracle");
  }
}

ExperimentConfig parse_experiment(const Json& j, const std::string& key, const RunConfig& run) {
  ExperimentConfig e;
  Json given;
  if (j.is_string()) {
    e.name = j.get<std::string>();
  } else if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (k != "name" && k != "domain" && k != "eps" && k != "options") throw ConfigError(key + "." + k, "unknown key");
    }
    if (!j.contains("name")) throw ConfigError(key + ".name", "missing experiment name");
    e.name = string_value(j["name"], key + ".name");
    if (j.contains("domain")) e.domain = parse_domain(j["domain"], key + ".domain");
    if (j.contains("eps")) e.eps = number_list(j["eps"], key + ".eps", 0.0, 0.999);
    if (j.contains("options")) given = j["options"];
  } else {
    throw ConfigError(key, "must be an experiment name or an object with \"name\"");
  }
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), e.name) == names.end()) {
    std::string all;
    for (const auto& n : names) all += (all.empty() ? "" : ", ") + n;
    throw ConfigError(e.domain ? key + ".name" : key, "unknown experiment '" + e.name + "' (known: " + all + ")");
  }
  const DomainParams dp = e.domain.value_or(run.domain);
  Json defaults = default_options(e.name, dp);
  if (defaults.contains("seed")) defaults["seed"] = run.seed;
  e.options = merge_options(defaults, given, key + ".options");
  validate_options(e.name, e.options, dp, e.eps.value_or(run.eps), key);
  return e;
}

std::vector<CVec> reproduce_targets(int n, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<CVec> out;
  const double lo = 0.3, hi = n == 1 ? 0.7 : 0.5;
  for (int i = 0; i < count; ++i) {
    CVec z(n);
    for (int j = 0; j < n; ++j) z(j) = std::polar(lo + (hi - lo) * unif(rng), 2.0 * kPi * unif(rng));
    out.push_back(z);
  }
  return out;
}

ValidationReport opnorm_experiment(const DomainSpec& d, const std::vector<KernelContext>& ctxs, const Json& o,
                                   const Thresholds& th) {
  const std::string op = o["op"];
  const auto ps = o["p"].get<std::vector<double>>();
  const double h = o["spacing"];
  const int trials = o["trials"];
  const std::uint64_t seed = o["seed"];
  ValidationReport r;
  r.experiment = "opnorm-" + op;
  r.domain = d.name;
  r.parameters = o;
  r.csv_header = {"eps", "p", "norm_estimate", "lower_bound", "iterations", "nodes"};
  const QuadratureRule rule = layer_rule(d, 1.0, h);
  auto record = [&](double eps, double p, const NormEstimate& e) {
    r.csv_rows.push_back({eps, p, e.value, e.lower_bound ? 1.0 : 0.0, double(e.iterations), double(rule.size())});
    r.gate("finite_eps_" + std::to_string(eps) + "_p_" + std::to_string(p), e.value, 0.0, 1e300);
  };
  if (op == "abs-bergman") {
    const int n = d.dim;
    const DiscreteOperator ab = abs_operator(
        kernel_operator([n](const CVec& w, const CVec& z) { return ball_kernel(n, w, z); }, rule, rule, "B"));
    for (double p : ps) record(0.0, p, estimate_norm(ab, p, trials, seed));
  } else {
    for (const KernelContext& ctx : ctxs) {
      const DiscreteOperator a = op == "gamma" ? gamma_operator(ctx, rule, rule, true) : b1_operator(ctx, rule, rule);
      for (double p : ps) record(ctx.epsilon, p, estimate_norm(a, p, trials, seed));
    }
  }
  (void)th;
  return r;
}

std::string iso_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "ball-exactness",     "reproduce", "reproduce-boundary", "k0-law",       "size-estimate",
      "conjugate-symmetry", "schur",     "model-integral",     "gamma-uniformity", "defect-decay",
      "abs-bergman",        "density",   "oracle",             "opnorm"};
  return names;
}

DomainParams parse_domain(const Json& j, const std::string& key) {
  DomainParams p;
  if (j.is_string()) {
    p.kind = j.get<std::string>();
  } else if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (k != "kind" && k != "dim" && k != "axes" && k != "delta" && k != "shift") {
        throw ConfigError(key + "." + k, "unknown key");
      }
    }
    if (!j.contains("kind")) throw ConfigError(key + ".kind", "missing domain kind");
    p.kind = string_value(j["kind"], key + ".kind");
  } else {
    throw ConfigError(key, "must be a domain name or an object");
  }
  auto get = [&](const char* name) -> const Json* {
    return j.is_object() && j.contains(name) ? &j[name] : nullptr;
  };
  if (p.kind == "ball" || p.kind == "perturbed_ball") {
    p.dim = get("dim") ? static_cast<int>(integer(*get("dim"), key + ".dim", 1, 3)) : 1;
    if (get("axes")) throw ConfigError(key + ".axes", "only ellipsoids take axes");
    if (p.kind == "perturbed_ball") {
      p.delta = get("delta") ? number(*get("delta"), key + ".delta") : (p.dim == 1 ? 0.1 : 0.05);
      if (!(p.delta >= 0.0)) throw ConfigError(key + ".delta", "must be nonnegative");
    } else if (get("delta")) {
      throw ConfigError(key + ".delta", "only perturbed_ball takes delta");
    }
  } else if (p.kind == "ellipsoid") {
    p.axes = get("axes") ? number_list(*get("axes"), key + ".axes", 0.0, 1e6, true) : std::vector<double>{1.0, 2.0};
    if (p.axes.size() > 3) throw ConfigError(key + ".axes", "at most 3 axes are supported");
    p.dim = static_cast<int>(p.axes.size());
    if (get("dim") && integer(*get("dim"), key + ".dim", 1, 3) != p.dim) {
      throw ConfigError(key + ".dim", "must equal the number of axes");
    }
    if (get("delta")) throw ConfigError(key + ".delta", "only perturbed_ball takes delta");
  } else {
    throw ConfigError(j.is_object() ? key + ".kind" : key, "unknown domain kind '" + p.kind +
                                                               "' (known: ball, ellipsoid, perturbed_ball)");
  }
  if (get("shift")) {
    p.shift = number(*get("shift"), key + ".shift");
    if (!(p.shift >= 0.0 && p.shift < 1.0)) throw ConfigError(key + ".shift", "must lie in [0, 1)");
  }
  try {
    (void)make_domain(p);
  } catch (const PerturbationTooLarge& e) {
    throw ConfigError(key + ".delta", e.what());
  } catch (const Error& e) {
    throw ConfigError(key, e.what());
  }
  return p;
}

Json domain_to_json(const DomainParams& d) {
  Json j;
  j["kind"] = d.kind;
  j["dim"] = d.dim;
  if (d.kind == "ellipsoid") j["axes"] = d.axes;
  if (d.kind == "perturbed_ball") j["delta"] = d.delta;
  if (d.shift != 0.0) j["shift"] = d.shift;
  return j;
}

Json default_options(const std::string& name, const DomainParams& domain) {
  const int n = domain.dim;
  const Json seed = 20240917;
  if (name == "ball-exactness") return {{"dims", {1, 2, 3}}, {"pairs", 100}, {"seed", seed}};
  if (name == "reproduce" || name == "reproduce-boundary") {
    VolumeOptions v = VolumeOptions::for_dim(n);
    if (n == 1) {
      v.angular = 64;
      v.interior = 24;
      v.radial = 8;
      v.shells = 12;
    }
    const SurfaceOptions s = SurfaceOptions::for_dim(n);
    Json polys = Json::array();
    if (n == 1) {
      for (int k = 0; k <= 6; ++k) polys.push_back(std::vector<int>{k});
    } else {
      polys = index_list(n, {{0}, {1}, {0, 1}, {2}, {1, 2}});
    }
    const bool boundary = name == "reproduce-boundary";
    if (boundary) polys = index_list(n, {{0}, {1}});
    return {{"rule", boundary ? "surface" : (n == 1 ? "volume" : "stratified")},
            {"nodes", 1000000},
            {"volume", volume_json(v)},
            {"surface", {{"angular", s.angular}, {"polar", s.polar}}},
            {"polynomials", polys},
            {"targets", n == 1 ? 25 : 20},
            {"seed", seed}};
  }
  if (name == "k0-law") return {{"pairs", 10000}, {"seed", seed}};
  if (name == "size-estimate") return {{"samples", 5000}, {"seed", seed}};
  if (name == "conjugate-symmetry") return {{"samples", 20000}, {"modulus_samples", 4000}, {"seed", seed}};
  if (name == "schur") return {{"alphas", {0.25, 0.5, 0.75}}, {"depths", {0.1, 0.01, 0.001}}};
  if (name == "model-integral") return {{"dims", {1, 2}}, {"alphas", {0.25, 0.5, 0.75}}};
  if (name == "gamma-uniformity") return {{"spacing", 1.0 / 24}};
  if (name == "defect-decay") {
    return {{"spacing_ratio", 10.0}, {"samples", 2000}, {"modulus_samples", 4000}, {"seed", seed}};
  }
  if (name == "abs-bergman") {
    return {{"dim", n}, {"spacings", {1.0 / 16, 1.0 / 32}}, {"p", {4.0 / 3, 2.0, 4.0}}, {"trials", 2}, {"seed", seed}};
  }
  if (name == "density") return {{"beta", 0.25}, {"p", 2.0}, {"n_list", {4, 16, 64}}};
  if (name == "oracle") return {{"dim", n}, {"degree_cap", n == 1 ? 40 : 12}, {"seed", seed}};
  if (name == "opnorm") return {{"op", "gamma"}, {"p", {2.0}}, {"spacing", 1.0 / 16}, {"trials", 1}, {"seed", seed}};
  throw ConfigError("experiments", "unknown experiment '" + name + "'");
}

ContextOptions context_options(const ContextConfig& c) {
  ContextOptions o;
  o.mu_override = c.mu_override;
  o.global_mode = c.global_mode;
  o.chi_profile = c.chi_profile;
  o.tau_policy = c.tau_policy == "exact" ? TauPolicy::Exact : TauPolicy::Mollified;
  o.calibration_samples = c.calibration_samples;
  o.seed = c.seed;
  return o;
}

Json RunConfig::to_json() const {
  Json j;
  j["name"] = name;
  j["domain"] = domain_to_json(domain);
  j["eps"] = eps;
  j["seed"] = seed;
  j["threads"] = threads;
  if (!output_dir.empty()) j["output_dir"] = output_dir;
  Json c;
  if (context.mu_override) c["mu_override"] = *context.mu_override;
  c["global_mode"] = context.global_mode;
  c["chi_profile"] = context.chi_profile;
  c["tau_policy"] = context.tau_policy;
  c["calibration_samples"] = context.calibration_samples;
  c["seed"] = context.seed;
  j["context"] = c;
  j["thresholds"] = thresholds;
  Json ex = Json::array();
  for (const auto& e : experiments) {
    Json x;
    x["name"] = e.name;
    if (e.domain) x["domain"] = domain_to_json(*e.domain);
    if (e.eps) x["eps"] = *e.eps;
    x["options"] = e.options;
    ex.push_back(x);
  }
  j["experiments"] = ex;
  return j;
}

RunConfig parse_run_config(const Json& j) {
  require_object(j, "(root)");
  static const std::vector<std::string> keys = {"preset", "name",    "domain",     "eps",        "seed",
                                                "threads", "output_dir", "context", "thresholds", "experiments"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError(k, "unknown key");
  }
  RunConfig c;
  if (j.contains("preset")) {
    const std::string p = string_value(j["preset"], "preset");
    try {
      c = preset_config(p);
    } catch (const ConfigError& e) {
      throw ConfigError("preset", e.what());
    }
  }
  if (j.contains("name")) {
    c.name = string_value(j["name"], "name");
    if (c.name.empty() || c.name.find('/') != std::string::npos || c.name == "." || c.name == "..") {
      throw ConfigError("name", "must be a plain directory name");
    }
  }
  if (j.contains("domain")) c.domain = parse_domain(j["domain"], "domain");
  if (j.contains("eps")) c.eps = number_list(j["eps"], "eps", 0.0, 0.999);
  if (j.contains("seed")) c.seed = seed_value(j["seed"], "seed");
  if (j.contains("threads")) c.threads = static_cast<int>(integer(j["threads"], "threads", 0, 1024));
  if (j.contains("output_dir")) c.output_dir = string_value(j["output_dir"], "output_dir");
  if (j.contains("context")) {
    const Json& x = j["context"];
    require_object(x, "context");
    for (const auto& [k, v] : x.items()) {
      if (k == "mu_override") {
        const double mu = number(v, "context.mu_override");
        if (!(mu > 0.0)) throw ConfigError("context.mu_override", "must be positive");
        c.context.mu_override = mu;
      } else if (k == "global_mode") {
        if (!v.is_boolean()) throw ConfigError("context.global_mode", "must be true or false");
        c.context.global_mode = v.get<bool>();
      } else if (k == "chi_profile") {
        c.context.chi_profile = string_value(v, "context.chi_profile");
        if (c.context.chi_profile != "exp-step") {
          throw ConfigError("context.chi_profile", "must be exp-step");
        }
      } else if (k == "tau_policy") {
        c.context.tau_policy = string_value(v, "context.tau_policy");
        if (c.context.tau_policy != "exact" && c.context.tau_policy != "mollified") {
          throw ConfigError("context.tau_policy", "must be exact or mollified");
        }
      } else if (k == "calibration_samples") {
        c.context.calibration_samples = static_cast<int>(integer(v, "context.calibration_samples", 10, 10000000));
      } else if (k == "seed") {
        c.context.seed = seed_value(v, "context.seed");
      } else {
        throw ConfigError("context." + k, "unknown key");
      }
    }
  }
  if (j.contains("thresholds")) {
    Thresholds probe;
    probe.apply_overrides(j["thresholds"]);
    c.thresholds = j["thresholds"];
  }
  if (j.contains("experiments")) {
    const Json& x = j["experiments"];
    if (!x.is_array() || x.empty()) throw ConfigError("experiments", "must be a nonempty array");
    c.experiments.clear();
    for (std::size_t i = 0; i < x.size(); ++i) {
      c.experiments.push_back(parse_experiment(x[i], "experiments[" + std::to_string(i) + "]", c));
    }
  } else if (c.experiments.empty()) {
    throw ConfigError("experiments", "no experiments selected");
  } else if (j.contains("preset") && j.contains("domain")) {
    throw ConfigError("domain", "a preset keeps its own domains; list \"experiments\" to run them elsewhere");
  } else if (j.contains("seed")) {
    for (auto& e : c.experiments) {
      if (e.options.contains("seed")) e.options["seed"] = c.seed;
    }
  }
  return c;
}

std::vector<std::string> preset_names() { return {"ball-smoke", "full-desk"}; }

RunConfig preset_config(const std::string& name) {
  Json j;
  if (name == "ball-smoke") {
    j = {{"name", "ball-smoke"},
         {"domain", {{"kind", "ball"}, {"dim", 1}}},
         {"eps", {0.1, 0.05, 0.01}},
         {"experiments",
          {{{"name", "ball-exactness"}},
           {{"name", "reproduce"}},
           {{"name", "reproduce-boundary"}, {"domain", {{"kind", "ball"}, {"dim", 2}}},
            {"options", {{"surface", {{"angular", 32}, {"polar", 12}}}, {"targets", 8}}}},
           {{"name", "k0-law"}, {"options", {{"pairs", 2000}}}},
           {{"name", "size-estimate"}, {"options", {{"samples", 2000}}}},
           {{"name", "schur"}, {"options", {{"alphas", {0.5, 0.75}}, {"depths", {0.1, 0.01}}}}},
           {{"name", "model-integral"}, {"options", {{"dims", {1}}}}},
           {{"name", "gamma-uniformity"}, {"options", {{"spacing", 1.0 / 12}}}},
           {{"name", "defect-decay"}},
           {{"name", "abs-bergman"}, {"options", {{"spacings", {1.0 / 8, 1.0 / 16}}, {"trials", 1}}}},
           {{"name", "oracle"}, {"options", {{"degree_cap", 24}}}}}}};
  } else if (name == "full-desk") {
    const Json disc = {{"kind", "ball"}, {"dim", 1}};
    const Json ball2 = {{"kind", "ball"}, {"dim", 2}};
    const Json ellipsoid = {{"kind", "ellipsoid"}, {"axes", {1.0, 2.0}}};
    const Json pball2 = {{"kind", "perturbed_ball"}, {"dim", 2}, {"delta", 0.05}};
    const Json pdisc = {{"kind", "perturbed_ball"}, {"dim", 1}, {"delta", 0.1}};
    const Json halvings = {0.1, 0.05, 0.025, 0.0125};
    j = {{"name", "full-desk"},
         {"domain", disc},
         {"eps", {0.1, 0.05, 0.01}},
         {"experiments",
          {{{"name", "ball-exactness"}},
           {{"name", "reproduce"}, {"domain", disc}},
           {{"name", "reproduce"}, {"domain", ball2}},
           {{"name", "reproduce-boundary"}, {"domain", ball2}},
           {{"name", "k0-law"}, {"domain", ball2}},
           {{"name", "k0-law"}, {"domain", ellipsoid}},
           {{"name", "k0-law"}, {"domain", pball2}},
           {{"name", "size-estimate"}, {"domain", ball2}},
           {{"name", "size-estimate"}, {"domain", ellipsoid}},
           {{"name", "size-estimate"}, {"domain", pball2}},
           {{"name", "conjugate-symmetry"}, {"domain", pball2}, {"eps", halvings}},
           {{"name", "schur"}, {"domain", disc}},
           {{"name", "schur"}, {"domain", ball2}},
           {{"name", "model-integral"}},
           {{"name", "gamma-uniformity"}, {"domain", disc}},
           {{"name", "defect-decay"}, {"domain", pdisc}, {"eps", halvings}},
           {{"name", "defect-decay"}, {"domain", disc}},
           {{"name", "abs-bergman"}, {"options", {{"dim", 1}}}},
           {{"name", "density"}, {"domain", disc}},
           {{"name", "oracle"}, {"options", {{"dim", 1}, {"degree_cap", 40}}}},
           {{"name", "oracle"}, {"options", {{"dim", 2}, {"degree_cap", 12}}}}}}};
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "' (known: ball-smoke, full-desk)");
  }
  return parse_run_config(j);
}

ValidationReport run_experiment(const ExperimentConfig& e, const RunConfig& run, const Thresholds& th) {
  const DomainParams dp = e.domain.value_or(run.domain);
  const std::vector<double> eps = e.eps.value_or(run.eps);
  const Json& o = e.options;
  const DomainSpec d = make_domain(dp);
  const ContextOptions co = context_options(run.context);
  const double eps_max = *std::max_element(eps.begin(), eps.end());
  const std::uint64_t seed = o.contains("seed") ? o["seed"].get<std::uint64_t>() : run.seed;
  const std::string& n = e.name;

  if (n == "ball-exactness") return validate_ball_exactness(o["dims"].get<std::vector<int>>(), o["pairs"], seed, th);
  if (n == "model-integral") {
    return validate_model_integral(o["dims"].get<std::vector<int>>(), o["alphas"].get<std::vector<double>>(), th);
  }
  if (n == "abs-bergman") {
    return validate_abs_bergman(o["dim"], o["spacings"].get<std::vector<double>>(), o["p"].get<std::vector<double>>(),
                                o["trials"], seed, th);
  }
  if (n == "oracle") return validate_oracle(o["dim"], o["degree_cap"], seed, th);
  if (n == "reproduce" || n == "reproduce-boundary") {
    const KernelContext ctx = make_context(d, eps_max, co);
    const std::string kind = o["rule"];
    QuadratureRule rule;
    double tol = th.reproduce_volume;
    if (kind == "volume") {
      rule = volume_rule(d, volume_from(o["volume"], "options.volume"));
    } else if (kind == "stratified") {
      rule = stratified_rule(d, o["nodes"].get<long>(), seed);
      tol = th.reproduce_monte_carlo;
    } else {
      SurfaceOptions s = SurfaceOptions::for_dim(d.dim);
      s.angular = o["surface"]["angular"];
      s.polar = o["surface"]["polar"];
      rule = surface_rule(d, s);
      tol = th.reproduce_boundary;
    }
    const auto polys = o["polynomials"].get<std::vector<std::vector<int>>>();
    ValidationReport r = validate_reproducing(ctx, rule, polys, reproduce_targets(d.dim, o["targets"], seed), tol, th);
    r.parameters["rule"] = kind;
    return r;
  }
  if (n == "k0-law") return validate_k0_law(make_context(d, eps_max, co), o["pairs"], seed, th);
  if (n == "size-estimate") return validate_size_estimate(contexts_over_eps(d, eps, co), o["samples"], seed, th);
  if (n == "conjugate-symmetry") {
    std::vector<double> sorted = eps;
    std::sort(sorted.rbegin(), sorted.rend());
    const ModulusOfContinuity mod = modulus_of_continuity(d, default_deltas(d), o["modulus_samples"], seed);
    return validate_conjugate_symmetry(contexts_over_eps(d, sorted, co), mod, o["samples"], seed, th);
  }
  if (n == "schur") {
    return validate_schur(make_context(d, eps_max, co), o["alphas"].get<std::vector<double>>(),
                          o["depths"].get<std::vector<double>>(), th);
  }
  if (n == "gamma-uniformity") return validate_gamma_uniformity(contexts_over_eps(d, eps, co), o["spacing"], th);
  if (n == "defect-decay") {
    std::vector<double> sorted = eps;
    std::sort(sorted.rbegin(), sorted.rend());
    const ModulusOfContinuity mod = modulus_of_continuity(d, default_deltas(d), o["modulus_samples"], seed);
    return validate_defect_decay(contexts_over_eps(d, sorted, co), mod, o["spacing_ratio"], o["samples"], seed, th);
  }
  if (n == "density") {
    return density_experiment(make_context(d, eps_max, co), o["beta"], o["p"], o["n_list"].get<std::vector<int>>(), th);
  }
  if (n == "opnorm") {
    if (o["op"] == "defect") {
      std::vector<double> sorted = eps;
      std::sort(sorted.rbegin(), sorted.rend());
      const ModulusOfContinuity mod = modulus_of_continuity(d, default_deltas(d), 4000, seed);
      return validate_defect_decay(contexts_over_eps(d, sorted, co), mod, 10.0, 2000, seed, th);
    }
    std::vector<KernelContext> ctxs;
    if (o["op"] != "abs-bergman") ctxs = contexts_over_eps(d, eps, co);
    return opnorm_experiment(d, ctxs, o, th);
  }
  throw ConfigError("experiments", "unknown experiment '" + n + "'");
}

std::filesystem::path output_root(const RunConfig& cfg, const std::string& override_root) {
  if (!override_root.empty()) return override_root;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return "bergman-lp-out";
}

RunOutcome execute(const RunConfig& cfg, const std::filesystem::path& root, std::ostream& log) {
  Thresholds th;
  th.apply_overrides(cfg.thresholds);
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

  RunOutcome out;
  out.directory = root / cfg.name;
  std::filesystem::create_directories(out.directory);
  {
    std::ofstream f(out.directory / "config.json");
    f << cfg.to_json().dump(2) << "\n";
  }

  Json experiments = Json::array();
  Json runtimes = Json::object();
  bool all = true;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < cfg.experiments.size(); ++i) {
    const ExperimentConfig& e = cfg.experiments[i];
    char tag[16];
    std::snprintf(tag, sizeof tag, "%02zu", i + 1);
    log << "[" << tag << "/" << cfg.experiments.size() << "] " << e.name << " ... " << std::flush;
    const auto t0 = std::chrono::steady_clock::now();
    Json entry;
    try {
      const ValidationReport r = run_experiment(e, cfg, th);
      entry = r.to_json();
      entry["csv"] = r.write_csv(out.directory, tag).filename().string();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& ex) {
      entry["experiment"] = e.name;
      entry["domain"] = make_domain(e.domain.value_or(cfg.domain)).name;
      entry["error"] = error_kind(ex);
      entry["message"] = ex.what();
      entry["pass"] = false;
    }
    entry["index"] = i + 1;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    runtimes[std::string(tag) + "-" + e.name] = secs;
    const bool pass = entry["pass"].get<bool>();
    all = all && pass;
    log << (pass ? "PASS" : "FAIL") << " on " << entry.value("domain", "?") << " (" << std::fixed << std::setprecision(1) << secs << " s)"
        << std::defaultfloat << "\n";
    if (!pass) {
      if (entry.contains("error")) log << "      " << entry["error"].get<std::string>() << ": " << entry["message"].get<std::string>() << "\n";
      for (const auto& g : entry.value("gates", Json::array())) {
        if (!g["pass"].get<bool>()) log << "      gate " << g["name"].get<std::string>() << " = " << g["value"] << "\n";
      }
    }
    experiments.push_back(entry);
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  out.report["tool"] = "bergman-lp";
  out.report["thresholds"] = th.to_json();
  out.report["config"] = cfg.to_json();
  out.report["experiments"] = experiments;
  out.report["pass"] = all;
  out.report["generated"] = {{"timestamp", iso_timestamp()}, {"runtime_seconds", runtimes}, {"total_seconds", total}};
  {
    std::ofstream f(out.directory / "report.json");
    f << out.report.dump(2) << "\n";
  }
  {
    std::ofstream f(out.directory / "summary.txt");
    f << summarize(out.report);
  }
  out.exit_code = all ? 0 : 1;
  return out;
}

std::string summarize(const Json& report) {
  std::ostringstream os;
  const Json& ex = report.at("experiments");
  std::size_t passed = 0;
  for (const auto& e : ex) passed += e.value("pass", false) ? 1 : 0;
  os << "run " << report.at("config").value("name", "run") << ": " << (report.value("pass", false) ? "PASS" : "FAIL")
     << " (" << passed << "/" << ex.size() << " experiments passed)\n";
  const Json runtimes = report.contains("generated") ? report["generated"].value("runtime_seconds", Json::object()) : Json::object();
  std::size_t i = 0;
  for (const auto& e : ex) {
    ++i;
    char tag[16];
    std::snprintf(tag, sizeof tag, "%02zu", i);
    os << "\n[" << (e.value("pass", false) ? "PASS" : "FAIL") << "] " << tag << " " << e.value("experiment", "?") << " on "
       << e.value("domain", "?");
    const std::string rk = std::string(tag) + "-" + e.value("experiment", "?");
    if (runtimes.contains(rk)) os << std::fixed << std::setprecision(1) << "  (" << runtimes[rk].get<double>() << " s)" << std::defaultfloat;
    os << "\n";
    if (e.contains("error")) os << "    " << e["error"].get<std::string>() << ": " << e.value("message", "") << "\n";
    for (const auto& g : e.value("gates", Json::array())) {
      os << "    " << (g["pass"].get<bool>() ? "ok   " : "FAIL ") << g["name"].get<std::string>() << " = " << g["value"].dump();
      if (g.contains("lower")) os << "  >= " << g["lower"].dump();
      if (g.contains("upper")) os << "  <= " << g["upper"].dump();
      os << "\n";
    }
    if (e.contains("csv")) os << "    csv: " << e["csv"].get<std::string>() << "\n";
  }
  return os.str();
}

}  // namespace bergman
