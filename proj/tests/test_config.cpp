#include "bergman/errors.hpp"
#include "bergman/run_config.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace bergman;
using Json = nlohmann::json;

namespace {

std::string key_of(const Json& j) {
  try {
    parse_run_config(j);
  } catch (const ConfigError& e) {
    return e.key;
  }
  return "";
}

}  // namespace

TEST_CASE("config errors name the offending key") {
  CHECK(key_of(Json{{"experiments", {"schur"}}, {"domian", "ball"}}) == "domian");
  CHECK(key_of(Json{{"experiments", {"nope"}}}) == "experiments[0]");
  CHECK(key_of(Json{{"experiments", {"schur"}}, {"domain", {{"kind", "ball"}, {"dim", 7}}}}) == "domain.dim");
  CHECK(key_of(Json{{"experiments", {"schur"}}, {"eps", {0.1, "x"}}}) == "eps[1]");
  CHECK(key_of(Json{{"experiments", {{{"name", "schur"}, {"options", {{"alphas", {0.5, 1.0}}}}}}}}) ==
        "experiments[0].options.alphas[1]");
  CHECK(key_of(Json{{"experiments", {{{"name", "density"}, {"options", {{"bta", 0.2}}}}}}}) ==
        "experiments[0].options.bta");
  CHECK(key_of(Json{{"experiments", {"schur"}}, {"thresholds", {{"schur_sprad", 0.3}}}}) == "thresholds.schur_sprad");
  CHECK(key_of(Json{{"experiments", {"defect-decay"}}, {"eps", {0.1, 0.0}}}) == "experiments[0].eps[1]");
  CHECK(key_of(Json{{"experiments", {"schur"}}, {"domain", {{"kind", "perturbed_ball"}, {"dim", 2}, {"delta", 10.0}}}}) ==
        "domain.delta");
  CHECK(key_of(Json::object()) == "experiments");
}

TEST_CASE("effective config round trips") {
  for (const std::string& p : preset_names()) {
    const RunConfig c = preset_config(p);
    const Json once = c.to_json();
    const Json twice = parse_run_config(once).to_json();
    CHECK(once == twice);
  }
}

TEST_CASE("flag-style config selects the perturbed disc") {
  const RunConfig c = parse_run_config(
      Json{{"domain", "perturbed_ball"}, {"experiments", {"defect-decay"}}, {"eps", {0.1, 0.05, 0.025}}});
  CHECK(c.domain.kind == "perturbed_ball");
  CHECK(c.domain.dim == 1);
  CHECK(c.domain.delta == doctest::Approx(0.1));
  CHECK(c.experiments.at(0).options["spacing_ratio"].get<double>() == doctest::Approx(10.0));
}

TEST_CASE("threshold overrides") {
  Thresholds t;
  t.apply_overrides(Json{{"schur_spread", 0.5}});
  CHECK(t.schur_spread == 0.5);
  CHECK(t.to_json()["version"] == kThresholdsVersion);
  CHECK_THROWS_AS(t.apply_overrides(Json{{"schur_spread", "wide"}}), ConfigError);
}

TEST_CASE("output root precedence") {
  RunConfig c;
  ::unsetenv(kOutputEnv);
  CHECK(output_root(c).string() == "bergman-lp-out");
  ::setenv(kOutputEnv, "/tmp/env-root", 1);
  CHECK(output_root(c).string() == "/tmp/env-root");
  c.output_dir = "/tmp/cfg-root";
  CHECK(output_root(c).string() == "/tmp/cfg-root");
  CHECK(output_root(c, "/tmp/flag-root").string() == "/tmp/flag-root");
  ::unsetenv(kOutputEnv);
}

TEST_CASE("report.json is reproducible apart from the generated block") {
  const auto root = std::filesystem::temp_directory_path() / "bergman-lp-unit";
  std::filesystem::remove_all(root);
  const RunConfig c = parse_run_config(Json{{"name", "repro"},
                                            {"experiments",
                                             {{{"name", "ball-exactness"}, {"options", {{"pairs", 10}}}},
                                              {{"name", "k0-law"}, {"options", {{"pairs", 200}}}}}}});
  std::ostringstream log;
  const RunOutcome a = execute(c, root, log);
  CHECK(a.exit_code == 0);
  std::ifstream echoed(a.directory / "config.json");
  const RunConfig again = parse_run_config(Json::parse(echoed));
  const RunOutcome b = execute(again, root / "second", log);
  Json ra = a.report, rb = b.report;
  ra.erase("generated");
  rb.erase("generated");
  CHECK(ra.dump() == rb.dump());
  std::ifstream csv1(a.directory / "ball-exactness-01.csv"), csv2(b.directory / "ball-exactness-01.csv");
  std::stringstream s1, s2;
  s1 << csv1.rdbuf();
  s2 << csv2.rdbuf();
  CHECK(s1.str() == s2.str());
  CHECK(std::filesystem::exists(a.directory / "summary.txt"));
  std::filesystem::remove_all(root);
}
