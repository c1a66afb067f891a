#pragma once

#include <optional>
#include <string>
#include <vector>

#include "voltvar/harness.hpp"

namespace voltvar {

/// Fault-injection hook: adds `delta` to one entry of the analytic dP/dtheta
/// block before the finite-difference comparison.
struct JacobianPerturbation {
    int row = 0;
    int col = 0;
    double delta = 0.0;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    double observed = 0.0; // worst value seen
    double bound = 0.0;    // threshold it is compared against
    std::string detail;
};

struct CheckOptions {
    int prox_draws = 1000;
    std::optional<JacobianPerturbation> perturb = {};
};

/// Self-contained property suite run by the `check` subcommand:
///  - analytic Jacobian blocks vs. central finite differences of the
///    injection map at the baseline operating point,
///  - penalty prox vs. a brute-force radial grid minimizer,
///  - consensus: per-bus update vs. the stacked block-Laplacian operator,
///    diffusion non-expansiveness inside the step bound, divergence above it.
std::vector<CheckResult> run_property_checks(const GridNetwork& net, const ScenarioConfig& config,
                                             const CheckOptions& options = {});

} // namespace voltvar
