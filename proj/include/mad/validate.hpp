#pragma once

// Cross-checks of the closed forms against the brute-force oracles.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace mad {

struct ValidationCheck {
  std::string name;
  std::string category;  // quadrature, central_diff, voronoi, identity, limit, statistical
  double error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  nlohmann::json detail = nlohmann::json::object();
};

struct ValidationOptions {
  std::uint64_t seed = 20240607;
  /// Test hook: added to every library-side value before comparison, so any
  /// nonzero value well above the tolerances must make the suite fail.
  double perturbation = 0.0;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool passed() const;
  nlohmann::json to_json() const;
};

ValidationReport run_validation(const ValidationOptions& options = {});

}  // namespace mad
