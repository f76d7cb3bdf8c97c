#include <cmath>

#include "doctest.h"
#include "feederflow/bvp_solver.hpp"
#include "feederflow/model.hpp"
#include "feederflow/numerics.hpp"

using namespace feederflow;

namespace {

const FeederParams kUnit{1.0, 1.0, 1.0};

ManufacturedSolution make_manufactured(const FeederParams& prm, double v_amp = 0.12,
                                       double theta_amp = 0.1) {
    return ManufacturedSolution(boundary_cubic(v_amp, 1.0, prm.L),
                                boundary_cubic(theta_amp, 0.0, prm.L), prm);
}

/// Load block p = -0.1 on [0.4, 0.6]; the reference ladder-circuit values
/// for it are frozen below.
PowerProfile single_load() { return PowerProfile(1.0, {Segment{0.4, 0.6, -0.1, 0.0}}, {}); }

double max_v_error(const SolutionGrid& grid, const ManufacturedSolution& mfg) {
    double err = 0.0;
    for (int i = 0; i <= grid.intervals(); ++i) {
        err = std::max(err, std::abs(grid.v()[i] - mfg.v(grid.x(i))));
    }
    return err;
}

SolverOptions options_with(int n) {
    SolverOptions opt;
    opt.n_intervals = n;
    return opt;
}

}  // namespace

TEST_CASE("solver options validate their ranges") {
    SolverOptions opt;
    CHECK_NOTHROW(opt.validate());

    opt.n_intervals = 15;
    CHECK_THROWS_AS(opt.validate(), ValidationError);
    opt.n_intervals = 14;  // even but below the minimum
    CHECK_THROWS_AS(opt.validate(), ValidationError);
    opt.n_intervals = 16;
    CHECK_NOTHROW(opt.validate());

    opt = SolverOptions{};
    opt.newton_tol = 0.0;
    CHECK_THROWS_AS(opt.validate(), ValidationError);
    opt = SolverOptions{};
    opt.max_newton_iters = 0;
    CHECK_THROWS_AS(opt.validate(), ValidationError);
    opt = SolverOptions{};
    opt.fd_step = -1e-7;
    CHECK_THROWS_AS(opt.validate(), ValidationError);
    opt = SolverOptions{};
    opt.damping = 0.0;
    CHECK_THROWS_AS(opt.validate(), ValidationError);
    opt.damping = 1.5;
    CHECK_THROWS_AS(opt.validate(), ValidationError);
}

TEST_CASE("backward integration of the unloaded line is exactly flat") {
    const PowerProfile none(1.0, {}, {});
    const SolutionGrid grid = integrate_backward({1.0, 0.0}, none, kUnit, 64);
    CHECK(grid.intervals() == 64);
    // Every RK4 increment is exactly zero, so the state never moves.
    CHECK(grid.theta().abs().maxCoeff() == 0.0);
    CHECK((grid.v() - 1.0).abs().maxCoeff() == 0.0);
    CHECK(grid.s().abs().maxCoeff() == 0.0);
    CHECK(grid.w().abs().maxCoeff() == 0.0);
}

TEST_CASE("integration rejects a collapsed terminal guess") {
    const PowerProfile none(1.0, {}, {});
    CHECK_THROWS_AS(integrate_backward({1e-7, 0.0}, none, kUnit, 64), VoltageCollapse);
}

TEST_CASE("no-load solve converges immediately to the flat profile") {
    const PowerProfile none(1.0, {}, {});
    const SolveResult result = solve_bvp(none, kUnit, options_with(64));
    CHECK(result.diagnostics.converged);
    CHECK(result.diagnostics.iterations <= 1);
    CHECK(result.diagnostics.final_residual_norm <= 1e-15);
    CHECK(!result.diagnostics.suspicious_solution);
    CHECK((result.grid.v() - 1.0).abs().maxCoeff() == 0.0);
    CHECK(result.grid.theta().abs().maxCoeff() == 0.0);

    const RefineResult refined = refine_and_estimate(none, kUnit, options_with(64));
    CHECK(refined.error_estimate <= 1e-12);
    CHECK(refined.grid.intervals() == 128);
}

TEST_CASE("solver recovers the manufactured solution at fourth order") {
    const ManufacturedSolution mfg = make_manufactured(kUnit);

    double errs[3];
    int idx = 0;
    for (int n : {128, 256, 512}) {
        const SolveResult result = solve_bvp(mfg, kUnit, options_with(n));
        CHECK(result.diagnostics.converged);
        CHECK(result.diagnostics.boundary_residuals[0] <= 1e-10);  // |θ(0)|
        CHECK(result.diagnostics.boundary_residuals[1] <= 1e-10);  // |v(0) - 1|
        CHECK(result.diagnostics.boundary_residuals[2] == 0.0);    // s(L) imposed
        CHECK(result.diagnostics.boundary_residuals[3] == 0.0);    // w(L) imposed
        errs[idx++] = max_v_error(result.grid, mfg);
    }
    CHECK(errs[2] < 1e-8);
    CHECK(observed_order(errs[0], errs[1]) > 3.5);
    CHECK(observed_order(errs[1], errs[2]) > 3.5);
}

TEST_CASE("grid states satisfy the first-order system at interior nodes") {
    // Central difference quotients of the solved arrays must reproduce the
    // right-hand side to O(h²): the integrator and the analytic system agree.
    const ManufacturedSolution mfg = make_manufactured(kUnit);

    auto consistency_err = [&](int n) {
        const SolveResult result = solve_bvp(mfg, kUnit, options_with(n));
        const SolutionGrid& g = result.grid;
        const double h = g.spacing();
        double worst = 0.0;
        for (int i = 1; i < g.intervals(); ++i) {
            const Eigen::Vector2d pq = mfg.density(g.x(i));
            const Eigen::Vector4d dy = rhs(g.state(i).vec(), pq[0], pq[1], kUnit);
            const Eigen::Vector4d fd =
                (g.state(i + 1).vec() - g.state(i - 1).vec()) / (2.0 * h);
            worst = std::max(worst, (fd - dy).cwiseAbs().maxCoeff());
        }
        return worst;
    };

    const double coarse = consistency_err(256);
    const double fine = consistency_err(512);
    CHECK(fine < 1e-5);
    CHECK(observed_order(coarse, fine) > 1.9);
}

TEST_CASE("solution matches the frozen ladder-circuit reference") {
    // Frozen from an independent 10^4-segment ladder run (backward-forward
    // sweep, tol 1e-12) on the single-load block; the two models agree to
    // well below the tolerances used here.
    const double kLadderVL = 0.9949651149831179;
    const double kLadderThetaL = -0.0050253214892344127;

    const SolveResult result = solve_bvp(single_load(), kUnit, options_with(2048));
    CHECK(result.diagnostics.converged);
    const int n = result.grid.intervals();
    CHECK(std::abs(result.grid.v()[n] - kLadderVL) < 1e-6);
    CHECK(std::abs(result.grid.theta()[n] - kLadderThetaL) < 1e-6);

    // Consumption pulls the voltage down along the run.
    CHECK(result.grid.v()[n] < 1.0);
    CHECK(result.grid.w()[0] < 0.0);
}

TEST_CASE("repeated solves are bit-identical") {
    const SolveResult a = solve_bvp(single_load(), kUnit, options_with(256));
    const SolveResult b = solve_bvp(single_load(), kUnit, options_with(256));
    CHECK(a.diagnostics.iterations == b.diagnostics.iterations);
    for (int i = 0; i <= 256; ++i) {
        CHECK(a.grid.v()[i] == b.grid.v()[i]);
        CHECK(a.grid.theta()[i] == b.grid.theta()[i]);
        CHECK(a.grid.s()[i] == b.grid.s()[i]);
        CHECK(a.grid.w()[i] == b.grid.w()[i]);
    }
}

TEST_CASE("a crushing load reports collapse instead of a bogus solution") {
    const PowerProfile crushing(1.0, {Segment{0.0, 1.0, -50.0, 0.0}}, {});
    CHECK_THROWS_AS(solve_bvp(crushing, kUnit, options_with(256)), FeederError);
}

TEST_CASE("a heavy but feasible load still converges") {
    const PowerProfile heavy(1.0, {Segment{0.0, 1.0, -0.5, -0.1}}, {});
    const SolveResult result = solve_bvp(heavy, kUnit, options_with(512));
    CHECK(result.diagnostics.converged);
    CHECK(result.grid.v().minCoeff() > 0.0);
    CHECK(result.grid.v()[512] < 1.0);
}

TEST_CASE("iteration budget exhaustion reports non-convergence") {
    SolverOptions opt = options_with(256);
    opt.max_newton_iters = 1;
    CHECK_THROWS_AS(solve_bvp(single_load(), kUnit, opt), NotConverged);
}

TEST_CASE("refinement estimate tracks the true error on smooth problems") {
    const ManufacturedSolution mfg = make_manufactured(kUnit);
    const RefineResult r128 = refine_and_estimate(mfg, kUnit, options_with(128));
    const RefineResult r256 = refine_and_estimate(mfg, kUnit, options_with(256));
    CHECK(r128.error_estimate > 0.0);
    // Estimates themselves shrink at the scheme order.
    CHECK(observed_order(r128.error_estimate, r256.error_estimate) > 3.5);
    // And the estimate bounds the true coarse-grid error to within a small factor.
    const SolveResult coarse = solve_bvp(mfg, kUnit, options_with(128));
    const double true_err = max_v_error(coarse.grid, mfg);
    CHECK(r128.error_estimate > 0.2 * true_err);
}

TEST_CASE("density jumps off the grid keep full integration order") {
    // 0.4·N is not an integer for any of these N, so the jumps fall inside
    // RK4 steps; splitting the step at the breakpoints keeps fourth order.
    // The load is heavy (v sags to ~0.72) so the errors sit well above
    // round-off where the order is measurable.
    const PowerProfile prof(1.0, {Segment{0.4, 0.6, -3.0, -1.0}}, {});
    const RefineResult r16 = refine_and_estimate(prof, kUnit, options_with(16));
    const RefineResult r32 = refine_and_estimate(prof, kUnit, options_with(32));
    const RefineResult r64 = refine_and_estimate(prof, kUnit, options_with(64));
    CHECK(r16.error_estimate < 1e-6);
    CHECK(observed_order(r16.error_estimate, r32.error_estimate) > 3.5);
    CHECK(observed_order(r32.error_estimate, r64.error_estimate) > 3.5);

    // The mild benchmark load is resolved to round-off long before N = 128.
    const RefineResult mild = refine_and_estimate(single_load(), kUnit, options_with(128));
    CHECK(mild.error_estimate < 1e-12);
}
