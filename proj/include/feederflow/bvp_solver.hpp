#pragma once

#include <Eigen/Dense>

#include "feederflow/model.hpp"

namespace feederflow {

struct SolverOptions {
    int n_intervals = 2048;      // grid intervals N; >= 16 and even
    double newton_tol = 1e-10;   // max-norm tolerance on the transformer residual
    int max_newton_iters = 50;
    double fd_step = 1e-7;       // forward-difference step for the 2x2 Jacobian
    double damping = 1.0;        // initial Newton damping factor in (0, 1]

    /// Throws ValidationError on an out-of-range field.
    void validate() const;

    bool operator==(const SolverOptions&) const = default;
};

struct SolveDiagnostics {
    int iterations = 0;
    double final_residual_norm = 0.0;
    bool converged = false;
    /// |θ(0)|, |v(0) - 1|, |s(L)|, |w(L)|; the last two are imposed as
    /// terminal data and are exactly zero.
    Eigen::Vector4d boundary_residuals = Eigen::Vector4d::Zero();
    /// Converged far from the no-load branch (|v(L) - 1| > 0.5); the BVP may
    /// admit multiple solutions near collapse and this one deserves scrutiny.
    bool suspicious_solution = false;
};

/// Classical RK4 march from x = L down to x = 0 with terminal state
/// (θ, v, s, w)(L) = (theta_L, v_L, 0, 0). `terminal` is (v_L, theta_L).
/// Steps split at declared density breakpoints and sample one-sided limits
/// at piece endpoints, so piecewise profiles keep the full RK4 order
/// whether or not their jumps land on grid nodes.
/// Throws VoltageCollapse if v drops below the guard mid-integration.
SolutionGrid integrate_backward(const Eigen::Vector2d& terminal, const Profile& profile,
                                const FeederParams& prm, int n_intervals);

struct SolveResult {
    SolutionGrid grid;
    SolveDiagnostics diagnostics;
};

/// Backward shooting with damped Newton on the unknowns (v_L, θ_L), driving
/// the transformer residual (v(0) - 1, θ(0)) below newton_tol in max-norm.
/// Starts from the no-load guess (1, 0); on a failed direct solve, retries
/// with the load scaled through λ = 0.25, 0.5, 0.75, 1.0, warm-starting each
/// stage. Throws NotConverged or VoltageCollapse.
SolveResult solve_bvp(const Profile& profile, const FeederParams& prm,
                      const SolverOptions& options);

struct RefineResult {
    SolutionGrid grid;  // the fine (2N) grid
    SolveDiagnostics diagnostics;
    double error_estimate;  // max-norm difference of v on the shared coarse nodes
};

/// Solves at N and 2N and reports their disagreement in v as an a
/// posteriori error estimate for the coarse grid.
RefineResult refine_and_estimate(const Profile& profile, const FeederParams& prm,
                                 const SolverOptions& options);

}  // namespace feederflow
