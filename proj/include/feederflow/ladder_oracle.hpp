#pragma once

#include <complex>
#include <vector>

#include "feederflow/model.hpp"

namespace feederflow {

class SolutionGrid;

/// Discrete ladder circuit standing in as ground truth for the continuum
/// feeder: N series impedances z = (R + jX)·h chained from a slack bus at
/// 1∠0, with the density profile lumped into complex power injections at
/// the nodes. Positive injection supplies power into the line, matching the
/// continuum sign convention.
struct LadderNetwork {
    int n_nodes = 0;  // N + 1
    double h = 0.0;   // segment length
    std::complex<double> z_segment;
    /// S_k weights (p + jq) with the tent spanning [x_{k-1}, x_{k+1}]
    /// (half tents at the ends), so Σ S_k = ∫(p + jq) dx exactly.
    /// injections[0] sits on the slack bus and is served there directly,
    /// it never loads a branch.
    std::vector<std::complex<double>> injections;
};

/// Lumps the profile into an N-segment ladder. Tent weights keep the load
/// centroid: each branch then sees the branch-averaged downstream demand,
/// so piecewise-constant loads converge at second order whether or not
/// their jumps land on nodes. Integrals split at declared breakpoints and
/// tolerate any alignment.
LadderNetwork build_network(const Profile& profile, const FeederParams& prm, int n_segments);

struct PowerflowResult {
    std::vector<std::complex<double>> voltages;        // per node, slack first
    std::vector<std::complex<double>> branch_currents;  // [k] flows node k -> k+1
    bool converged = false;
    int iterations = 0;
    /// |slack power - (series losses - Σ downstream injections)|; complex
    /// power conservation, checked from the final state.
    double power_balance_gap = 0.0;
    std::complex<double> series_loss;  // Σ z·|I_k|², active + j·reactive
};

/// Backward-forward sweep from a flat start: the backward pass accumulates
/// branch currents from constant-power injection currents conj(S_k/V_k),
/// the forward pass re-propagates voltages from the slack. Stops when the
/// voltage update falls below tol in max-norm; non-convergence is reported
/// through the flag, not thrown.
PowerflowResult solve_powerflow(const LadderNetwork& network, double tol = 1e-12,
                                int max_iters = 200);

struct OracleComparison {
    double v_err = 0.0;      // max over nodes of | |V_k| - v(x_k) |
    double theta_err = 0.0;  // max over nodes of | arg(V_k) - θ(x_k) |
    double loss_err = 0.0;   // relative gap between ladder and continuum active loss
};

/// Node-by-node disagreement between the continuum solution and the ladder
/// solved at the same N. Requires grid.intervals() == branch count.
OracleComparison compare_to_continuum(const SolutionGrid& grid, const LadderNetwork& network,
                                      const PowerflowResult& flow, const FeederParams& prm);

}  // namespace feederflow
