#pragma once

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace bergman {

/// Versioned pass/fail defaults; every field can be overridden per run by name.
inline constexpr const char* kThresholdsVersion = "1.0.0";

struct Thresholds {
  double ball_exactness = 1e-10;
  double reproduce_volume = 1e-4;
  double reproduce_monte_carlo = 1e-2;
  double reproduce_boundary = 1e-3;
  double k0_intercept = 1e-8;
  double sample_stability = 0.10;      // smooth constants under sample doubling
  double singular_stability = 0.30;    // singular-integral constants under refinement
  double eps_uniformity = 0.10;        // C' across epsilon
  double halving_low = 1.5;
  double halving_high = 3.0;
  double schur_spread = 0.30;
  double schur_closed_form = 0.01;
  double model_agreement = 0.01;
  double gamma_uniformity = 0.15;
  double defect_baseline = 1e-10;
  double defect_kappa_factor = 2.0;
  double abs_stability = 0.15;
  double density_ratio = 0.25;
  double gram_identity = 1e-8;
  double projection_identity = 1e-8;
  double oracle_agreement = 1e-6;
  double oracle_slope = 0.20;

  nlohmann::json to_json() const;
  /// Applies {"name": value} overrides; unknown names throw ConfigError("thresholds.<name>").
  void apply_overrides(const nlohmann::json& overrides);
};

}  // namespace bergman
