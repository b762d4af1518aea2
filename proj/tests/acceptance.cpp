// One PASS/FAIL line per acceptance criterion, driven by the full-desk campaign.
#include "bergman/errors.hpp"
#include "bergman/run_config.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

using namespace bergman;

namespace {

struct Criterion {
  int id;
  std::string title;
  std::vector<std::string> experiments;
  double runtime_limit;   // seconds, <= 0 for none
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> c = {
      {1, "ball exactness n=1,2,3 (rel err <= 1e-10, < 5 s)", {"ball-exactness"}, 5.0},
      {2, "reproducing property: disc <= 1e-4, ball n=2 Monte Carlo <= 1% (< 2 min)", {"reproduce"}, 120.0},
      {3, "boundary formula on the n=2 sphere (<= 1e-3)", {"reproduce-boundary"}, 0.0},
      {4, "K0 law: finite C_eps, intercept <= 1e-8 on ball, ellipsoid, perturbed ball", {"k0-law"}, 0.0},
      {5, "size/symmetry constants stable under doubling (10%), C' across eps (10%)", {"size-estimate"}, 0.0},
      {6, "conjugate-symmetry defect linear in eps (factor in [1.5, 3] per halving)", {"conjugate-symmetry"}, 0.0},
      {7, "Schur integrals within 30% along the normal ray; disc centre closed form (1%)", {"schur"}, 0.0},
      {8, "rescaled model integral: two pipelines agree (1%)", {"model-integral"}, 0.0},
      {9, "Gamma_eps p=2 norms uniform in eps (15%)", {"gamma-uniformity"}, 0.0},
      {10, "defect decay factor in [1.5, 3] per halving; ball baseline <= 1e-10", {"defect-decay"}, 0.0},
      {11, "|B| norm estimates stable under grid refinement (15%), p = 4/3, 2, 4", {"abs-bergman"}, 0.0},
      {12, "density: errors decrease over n = 4, 16, 64, final <= 1/4 of first", {"density"}, 0.0},
      {13, "oracle suite at degree cap 40 (disc) and 12 (ball n=2), < 2 min", {"oracle"}, 120.0},
  };
  return c;
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const RunConfig cfg = preset_config("full-desk");
  Thresholds th;
  th.apply_overrides(cfg.thresholds);

  struct Outcome {
    bool pass = true;
    double seconds = 0.0;
    std::vector<std::string> notes;
  };
  std::map<std::string, Outcome> by_experiment;
  const auto start = std::chrono::steady_clock::now();
  for (const ExperimentConfig& e : cfg.experiments) {
    Outcome& o = by_experiment[e.name];
    const auto t0 = std::chrono::steady_clock::now();
    const std::string where = make_domain(e.domain.value_or(cfg.domain)).name;
    try {
      const ValidationReport r = run_experiment(e, cfg, th);
      for (const Gate& g : r.gates) {
        if (!g.pass) {
          char buf[256];
          std::snprintf(buf, sizeof buf, "%s[%s] %s = %.6g (allowed [%g, %g])", e.name.c_str(), where.c_str(),
                        g.name.c_str(), g.value, g.lower, g.upper);
          o.notes.push_back(buf);
        }
      }
      o.pass = o.pass && r.passed();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.notes.push_back(e.name + "[" + where + "] raised: " + ex.what());
    }
    o.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  int failed = 0;
  for (const Criterion& c : criteria()) {
    bool pass = true;
    double secs = 0.0;
    std::vector<std::string> notes;
    for (const auto& name : c.experiments) {
      const auto it = by_experiment.find(name);
      if (it == by_experiment.end()) {
        pass = false;
        notes.push_back(name + " missing from the campaign");
        continue;
      }
      pass = pass && it->second.pass;
      secs += it->second.seconds;
      notes.insert(notes.end(), it->second.notes.begin(), it->second.notes.end());
    }
    if (c.runtime_limit > 0.0 && secs > c.runtime_limit) {
      pass = false;
      notes.push_back("runtime " + std::to_string(secs) + " s over the limit");
    }
    std::printf("%s criterion %2d: %s  [%.1f s]\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(), secs);
    for (const auto& n : notes) std::printf("        %s\n", n.c_str());
    failed += pass ? 0 : 1;
  }
  const bool in_time = total < 1800.0;
  std::printf("%s total runtime %.1f s (limit 1800 s)\n", in_time ? "PASS" : "FAIL", total);
  std::printf("%d of %zu criteria failed\n", failed, criteria().size());
  return failed == 0 && in_time ? 0 : 1;
}
