#include "bergman/errors.hpp"
#include "bergman/run_config.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace bergman;
using Json = nlohmann::json;

namespace {

struct RunFlags {
  std::string preset;
  std::string config;
  std::string domain;
  std::optional<int> dim;
  std::optional<double> delta;
  std::vector<double> axes;
  std::vector<double> eps;
  std::vector<std::string> experiments;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string name;
  std::string output;
  bool dry_run = false;
};

void add_domain_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--domain", f.domain, "ball | ellipsoid | perturbed_ball");
  app->add_option("--dim", f.dim, "complex dimension");
  app->add_option("--delta", f.delta, "perturbation size for perturbed_ball");
  app->add_option("--axes", f.axes, "ellipsoid semi-axes, comma separated")->delimiter(',');
  app->add_option("--eps", f.eps, "smoothing parameters, comma separated")->delimiter(',');
  app->add_option("--seed", f.seed, "master seed");
}

void add_run_flags(CLI::App* app, RunFlags& f, bool experiments) {
  add_domain_flags(app, f);
  app->add_option("--preset", f.preset, "ball-smoke | full-desk");
  app->add_option("--config", f.config, "JSON run configuration");
  if (experiments) app->add_option("--experiment", f.experiments, "experiments to run, comma separated")->delimiter(',');
  app->add_option("--threads", f.threads, "OpenMP thread bound (0 = default)");
  app->add_option("--name", f.name, "run directory name under the output root");
  app->add_option("--output", f.output, std::string("output root (default $") + kOutputEnv + ", then ./bergman-lp-out)");
  app->add_flag("--dry-run", f.dry_run, "print the effective configuration and exit");
}

Json domain_json(const RunFlags& f) {
  Json d;
  d["kind"] = f.domain;
  if (f.dim) d["dim"] = *f.dim;
  if (f.delta) d["delta"] = *f.delta;
  if (!f.axes.empty()) d["axes"] = f.axes;
  return d;
}

/// Config file or preset, overlaid with command-line flags.
Json base_config(const RunFlags& f) {
  Json j = Json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw ConfigError("--config", "cannot open '" + f.config + "'");
    try {
      j = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("(root)", "must be an object");
  }
  if (!f.preset.empty()) j["preset"] = f.preset;
  if (!f.domain.empty()) j["domain"] = domain_json(f);
  else if (f.dim || f.delta || !f.axes.empty()) throw ConfigError("--domain", "--dim, --delta and --axes need --domain");
  if (!f.eps.empty()) j["eps"] = f.eps;
  if (f.seed) j["seed"] = *f.seed;
  if (f.threads) j["threads"] = *f.threads;
  if (!f.name.empty()) j["name"] = f.name;
  if (!f.experiments.empty()) {
    Json list = Json::array();
    for (const auto& e : f.experiments) list.push_back(e);
    j["experiments"] = list;
  }
  return j;
}

int run_config(const Json& j, const RunFlags& f) {
  const RunConfig cfg = parse_run_config(j);
  if (f.dry_run) {
    std::cout << cfg.to_json().dump(2) << "\n";
    return 0;
  }
  const auto root = output_root(cfg, f.output);
  const RunOutcome out = execute(cfg, root, std::cout);
  std::cout << "\n" << summarize(out.report) << "\nreport: " << (out.directory / "report.json").string() << "\n";
  return out.exit_code;
}

CVec parse_point(const std::string& text, int dim, const std::string& key) {
  // "re,im;re,im" with one coordinate per ';'
  std::vector<cplx> coords;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    double re = 0.0, im = 0.0;
    char comma = 0;
    std::istringstream is(item);
    if (!(is >> re)) throw ConfigError(key, "expected re[,im] per coordinate, got '" + item + "'");
    if (is >> comma) {
      if (comma != ',' || !(is >> im)) throw ConfigError(key, "expected re[,im] per coordinate, got '" + item + "'");
    }
    coords.emplace_back(re, im);
  }
  if (static_cast<int>(coords.size()) != dim) {
    throw ConfigError(key, "needs " + std::to_string(dim) + " coordinate(s) separated by ';'");
  }
  CVec z(dim);
  for (int j = 0; j < dim; ++j) z(j) = coords[j];
  return z;
}

Json cjson(cplx v) { return {{"re", v.real()}, {"im", v.imag()}}; }

int kernel_eval(const RunFlags& f, const std::string& w_text, const std::string& z_text, bool exact_tau, bool local) {
  Json dj = domain_json(f);
  if (f.domain.empty()) dj["kind"] = "ball";
  const DomainParams dp = parse_domain(dj, "--domain");
  const DomainSpec d = make_domain(dp);
  const double eps = f.eps.empty() ? 0.0 : f.eps.front();
  if (f.eps.size() > 1) throw ConfigError("--eps", "kernel-eval takes a single epsilon");
  ContextOptions co;
  co.global_mode = !local;
  co.tau_policy = exact_tau ? TauPolicy::Exact : TauPolicy::Mollified;
  if (f.seed) co.seed = *f.seed;
  const KernelContext ctx = make_context(d, eps, co);
  const CVec w = parse_point(w_text, d.dim, "--w");
  const CVec z = parse_point(z_text, d.dim, "--z");
  if (!(d.rho(w) <= 0.0)) throw ConfigError("--w", "point lies outside the domain");
  if (!(d.rho(z) <= 0.0)) throw ConfigError("--z", "point lies outside the domain");

  Json out;
  out["domain"] = d.name;
  out["epsilon"] = eps;
  out["mu"] = ctx.mu;
  out["c_bound"] = ctx.c_bound;
  out["tau_scale"] = ctx.tau_scale;
  out["global_mode"] = ctx.global_mode;
  out["rho_w"] = d.rho(w);
  out["rho_z"] = d.rho(z);
  out["g"] = cjson(g(ctx, w, z));
  out["g_eps"] = cjson(g_eps(ctx, w, z));
  out["size_proxy"] = size_proxy(ctx, w, z);
  const KernelValue kv = kernel_b1(ctx, w, z);
  out["kernel_b1"] = cjson(kv.value);
  out["abs_kernel_b1"] = std::abs(kv.value);
  const KernelParts kp = kernel_parts(ctx, w, z);
  out["k0"] = kp.k0;
  out["k0_remainder"] = kp.remainder;
  if (dp.kind == "ball" && dp.shift == 0.0) {
    const cplx exact = ball_kernel(d.dim, w, z);
    out["ball_kernel"] = cjson(exact);
    out["relative_error"] = std::abs(kv.value - exact) / std::abs(exact);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int report_command(const std::string& path) {
  std::filesystem::path p = path;
  if (std::filesystem::is_directory(p)) p /= "report.json";
  std::ifstream in(p);
  if (!in) throw ConfigError("--dir", "no report at '" + p.string() + "'");
  Json r;
  try {
    r = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("--dir", std::string("report.json is not valid JSON: ") + e.what());
  }
  if (!r.contains("experiments") || !r.contains("config")) throw ConfigError("--dir", "not a bergman-lp report");
  std::cout << summarize(r);
  return r.value("pass", false) ? 0 : 1;
}

Json one_experiment(const std::string& name, const Json& options) {
  Json e;
  e["name"] = name;
  if (!options.empty()) e["options"] = options;
  return Json::array({e});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bergman-lp: Cauchy-Fantappie kernels, comparison operators and L^p estimate validation"};
  app.require_subcommand(1);

  RunFlags f;
  auto* run = app.add_subcommand("run", "run experiments from a preset, a config file or flags");
  add_run_flags(run, f, true);

  auto* validate = app.add_subcommand("validate", "estimate-validation campaigns (default: kernel and estimate checks)");
  add_run_flags(validate, f, true);

  std::string w_text, z_text;
  bool exact_tau = false, local = false;
  auto* keval = app.add_subcommand("kernel-eval", "evaluate b1 and the support functions at one pair, as JSON");
  add_domain_flags(keval, f);
  keval->add_option("--w", w_text, "integration point, 're,im;re,im'")->required();
  keval->add_option("--z", z_text, "evaluation point, 're,im;re,im'")->required();
  keval->add_flag("--exact-tau", exact_tau, "use the exact Hessian instead of the mollified one");
  keval->add_flag("--local", local, "local mode (no global holomorphic support function)");

  std::vector<double> alphas, depths;
  auto* schur = app.add_subcommand("schur", "Schur integrals along the inward normal ray");
  add_run_flags(schur, f, false);
  schur->add_option("--alpha", alphas, "weight exponents in (0,1)")->delimiter(',');
  schur->add_option("--ray", depths, "distances along the inward normal")->delimiter(',');

  std::string op = "gamma";
  std::vector<double> ps;
  std::optional<double> spacing;
  std::optional<int> trials;
  auto* opnorm = app.add_subcommand("opnorm", "operator norm estimates");
  add_run_flags(opnorm, f, false);
  opnorm->add_option("--op", op, "gamma | b1 | defect | abs-bergman")
      ->check(CLI::IsMember({"gamma", "b1", "defect", "abs-bergman"}));
  opnorm->add_option("--p", ps, "exponents, comma separated")->delimiter(',');
  opnorm->add_option("--spacing", spacing, "uniform grid spacing");
  opnorm->add_option("--trials", trials, "random restarts");

  std::string rule;
  std::optional<long> nodes;
  auto* reproduce = app.add_subcommand("reproduce", "reproducing property for holomorphic monomials");
  add_run_flags(reproduce, f, false);
  reproduce->add_option("--rule", rule, "volume | stratified | surface")
      ->check(CLI::IsMember({"volume", "stratified", "surface"}));
  reproduce->add_option("--nodes", nodes, "node count for the stratified rule");

  std::optional<double> beta, p_density;
  std::vector<int> n_list;
  auto* density = app.add_subcommand("density", "L^p density of truncated projections");
  add_run_flags(density, f, false);
  density->add_option("--beta", beta, "exponent of (1 - z_1)^(-beta)");
  density->add_option("--p", p_density, "L^p exponent");
  density->add_option("--n", n_list, "truncation levels, comma separated")->delimiter(',');

  std::string report_dir;
  auto* report = app.add_subcommand("report", "print the summary of an existing run");
  report->add_option("dir", report_dir, "run directory or report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*report) return report_command(report_dir);
    if (*keval) return kernel_eval(f, w_text, z_text, exact_tau, local);

    Json cfg = base_config(f);
    if (*run) {
      if (!cfg.contains("experiments") && !cfg.contains("preset")) {
        throw ConfigError("experiments", "nothing to run; pass --preset, --config or --experiment");
      }
    } else if (*validate) {
      if (!cfg.contains("experiments") && !cfg.contains("preset")) {
        cfg["experiments"] = {"ball-exactness", "k0-law", "size-estimate", "model-integral"};
      }
    } else if (*schur) {
      Json o = Json::object();
      if (!alphas.empty()) o["alphas"] = alphas;
      if (!depths.empty()) o["depths"] = depths;
      cfg["experiments"] = one_experiment("schur", o);
    } else if (*opnorm) {
      Json o = {{"op", op}};
      if (!ps.empty()) o["p"] = ps;
      if (spacing) o["spacing"] = *spacing;
      if (trials) o["trials"] = *trials;
      cfg["experiments"] = one_experiment("opnorm", o);
    } else if (*reproduce) {
      Json o = Json::object();
      if (!rule.empty()) o["rule"] = rule;
      if (nodes) o["nodes"] = *nodes;
      cfg["experiments"] = one_experiment(rule == "surface" ? "reproduce-boundary" : "reproduce", o);
    } else if (*density) {
      Json o = Json::object();
      if (beta) o["beta"] = *beta;
      if (p_density) o["p"] = *p_density;
      if (!n_list.empty()) o["n_list"] = n_list;
      cfg["experiments"] = one_experiment("density", o);
    }
    if (!*run && !*validate && !cfg.contains("name")) cfg["name"] = app.get_subcommands().front()->get_name();
    return run_config(cfg, f);
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.key << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
