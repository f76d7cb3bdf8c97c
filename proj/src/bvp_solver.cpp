#include "feederflow/bvp_solver.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>

namespace feederflow {

namespace {

class ScaledProfile final : public Profile {
public:
    ScaledProfile(const Profile& base, double factor) : base_(base), factor_(factor) {}

    Eigen::Vector2d density(double x, Side side) const override {
        return factor_ * base_.density(x, side);
    }
    std::vector<double> breakpoints() const override { return base_.breakpoints(); }
    Eigen::Vector2d integral() const override { return factor_ * base_.integral(); }

private:
    const Profile& base_;
    double factor_;
};

struct Shot {
    SolutionGrid grid;
    Eigen::Vector2d residual;  // (v(0) - 1, θ(0))
};

Shot shoot(const Eigen::Vector2d& terminal, const Profile& profile, const FeederParams& prm,
           int n_intervals) {
    SolutionGrid grid = integrate_backward(terminal, profile, prm, n_intervals);
    Eigen::Vector2d residual{grid.v()[0] - 1.0, grid.theta()[0]};
    return {std::move(grid), residual};
}

SolveDiagnostics make_diagnostics(const SolutionGrid& grid, int iterations, double norm) {
    SolveDiagnostics diag;
    diag.iterations = iterations;
    diag.final_residual_norm = norm;
    diag.converged = true;
    const int last = grid.intervals();
    diag.boundary_residuals = {std::abs(grid.theta()[0]), std::abs(grid.v()[0] - 1.0),
                               std::abs(grid.s()[last]), std::abs(grid.w()[last])};
    diag.suspicious_solution = std::abs(grid.v()[last] - 1.0) > 0.5;
    return diag;
}

// One Newton run from a given terminal guess. Returns the converged result,
// or nullopt when the iteration budget runs out / damping stagnates (the
// caller may then fall back to load continuation). `iterations_used` carries
// the count either way so continuation stages report a cumulative total.
std::optional<SolveResult> newton_run(Eigen::Vector2d& terminal, const Profile& profile,
                                      const FeederParams& prm, const SolverOptions& opt,
                                      int& iterations_used) {
    Shot shot_now = shoot(terminal, profile, prm, opt.n_intervals);

    for (;;) {
        const double norm = shot_now.residual.lpNorm<Eigen::Infinity>();
        if (norm <= opt.newton_tol) {
            SolveDiagnostics diag = make_diagnostics(shot_now.grid, iterations_used, norm);
            return SolveResult{std::move(shot_now.grid), diag};
        }
        if (iterations_used >= opt.max_newton_iters) {
            return std::nullopt;
        }

        Eigen::Matrix2d jac;
        for (int j = 0; j < 2; ++j) {
            Eigen::Vector2d probe = terminal;
            probe[j] += opt.fd_step;
            jac.col(j) = (shoot(probe, profile, prm, opt.n_intervals).residual - shot_now.residual) /
                         opt.fd_step;
        }
        const Eigen::Vector2d step = jac.fullPivLu().solve(-shot_now.residual);

        double alpha = opt.damping;
        bool accepted = false;
        bool any_evaluated = false;
        for (int halving = 0; halving <= 8; ++halving, alpha *= 0.5) {
            const Eigen::Vector2d trial = terminal + alpha * step;
            try {
                Shot shot_trial = shoot(trial, profile, prm, opt.n_intervals);
                any_evaluated = true;
                if (shot_trial.residual.lpNorm<Eigen::Infinity>() < norm) {
                    terminal = trial;
                    shot_now = std::move(shot_trial);
                    accepted = true;
                    break;
                }
            } catch (const VoltageCollapse&) {
                // an overlong step ran into the collapse guard; shorten it
                if (halving == 8 && !any_evaluated) throw;
            }
        }
        ++iterations_used;
        if (!accepted) {
            return std::nullopt;  // stagnated
        }
    }
}

}  // namespace

void SolverOptions::validate() const {
    if (n_intervals < 16 || n_intervals % 2 != 0) {
        throw ValidationError("grid intervals must be even and at least 16, got " +
                              std::to_string(n_intervals));
    }
    if (!(newton_tol > 0.0)) throw ValidationError("newton_tol must be positive");
    if (max_newton_iters < 1) throw ValidationError("max_newton_iters must be at least 1");
    if (!(fd_step > 0.0)) throw ValidationError("fd_step must be positive");
    if (!(damping > 0.0) || damping > 1.0) {
        throw ValidationError("damping must lie in (0, 1]");
    }
}

SolutionGrid integrate_backward(const Eigen::Vector2d& terminal, const Profile& profile,
                                const FeederParams& prm, int n_intervals) {
    prm.validate();
    if (n_intervals < 16) {
        throw ValidationError("integration needs at least 16 intervals, got " +
                              std::to_string(n_intervals));
    }
    const double v_terminal = terminal[0];
    if (v_terminal < kVoltageFloor) {
        throw VoltageCollapse("terminal voltage guess " + std::to_string(v_terminal) +
                              " lies below the collapse guard");
    }

    const int n = n_intervals;
    const double h = prm.L / n;
    Eigen::ArrayXd theta(n + 1), v(n + 1), s(n + 1), w(n + 1);

    Eigen::Vector4d y{terminal[1], v_terminal, 0.0, 0.0};
    theta[n] = y[0];
    v[n] = y[1];
    s[n] = y[2];
    w[n] = y[3];

    // One RK4 stage per smooth piece; endpoint samples take the limit from
    // inside the piece so jumps at its edges stay outside. Splitting steps at
    // the declared breakpoints keeps full order when jumps miss the grid.
    auto rk4_step = [&](double x_top, double x_bot) {
        const double dx = x_top - x_bot;
        const Eigen::Vector2d pq_hi = profile.density(x_top, Side::Left);
        const Eigen::Vector2d pq_mid = profile.density(x_top - 0.5 * dx, Side::Right);
        const Eigen::Vector2d pq_lo = profile.density(x_bot, Side::Right);

        const Eigen::Vector4d k1 = rhs(y, pq_hi[0], pq_hi[1], prm);
        const Eigen::Vector4d k2 = rhs(y - 0.5 * dx * k1, pq_mid[0], pq_mid[1], prm);
        const Eigen::Vector4d k3 = rhs(y - 0.5 * dx * k2, pq_mid[0], pq_mid[1], prm);
        const Eigen::Vector4d k4 = rhs(y - dx * k3, pq_lo[0], pq_lo[1], prm);
        y -= dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        if (y[1] < kVoltageFloor) {
            throw VoltageCollapse("voltage amplitude collapsed to " + std::to_string(y[1]) +
                                  " at x = " + std::to_string(x_bot));
        }
    };

    const std::vector<double> bps = profile.breakpoints();
    const double pad = 1e-12 * prm.L;

    for (int k = n; k >= 1; --k) {
        const double x_hi = k * h;
        const double x_lo = (k - 1) * h;
        double top = x_hi;
        for (auto it = bps.rbegin(); it != bps.rend(); ++it) {
            if (*it >= x_hi - pad) continue;
            if (*it <= x_lo + pad) break;
            rk4_step(top, *it);
            top = *it;
        }
        rk4_step(top, x_lo);
        theta[k - 1] = y[0];
        v[k - 1] = y[1];
        s[k - 1] = y[2];
        w[k - 1] = y[3];
    }

    return SolutionGrid(prm.L, std::move(theta), std::move(v), std::move(s), std::move(w));
}

SolveResult solve_bvp(const Profile& profile, const FeederParams& prm,
                      const SolverOptions& options) {
    options.validate();
    prm.validate();

    Eigen::Vector2d terminal{1.0, 0.0};  // the no-load solution
    int iterations = 0;
    try {
        if (auto direct = newton_run(terminal, profile, prm, options, iterations)) {
            return std::move(*direct);
        }
    } catch (const VoltageCollapse&) {
        // full load collapses straight away; approach it gradually instead
    }

    // Load continuation: ramp the profile up in quarters, warm-starting each
    // stage from the previous terminal state.
    terminal = {1.0, 0.0};
    iterations = 0;
    std::optional<SolveResult> result;
    for (const double lambda : {0.25, 0.5, 0.75, 1.0}) {
        const ScaledProfile scaled(profile, lambda);
        result = newton_run(terminal, scaled, prm, options, iterations);
        if (!result) {
            throw NotConverged("shooting failed to converge within " +
                               std::to_string(options.max_newton_iters) +
                               " iterations (continuation stage lambda = " +
                               std::to_string(lambda) + ")");
        }
    }
    return std::move(*result);
}

RefineResult refine_and_estimate(const Profile& profile, const FeederParams& prm,
                                 const SolverOptions& options) {
    SolveResult coarse = solve_bvp(profile, prm, options);

    SolverOptions fine_options = options;
    fine_options.n_intervals = 2 * options.n_intervals;
    SolveResult fine = solve_bvp(profile, prm, fine_options);

    double estimate = 0.0;
    for (int i = 0; i <= options.n_intervals; ++i) {
        estimate = std::max(estimate, std::abs(fine.grid.v()[2 * i] - coarse.grid.v()[i]));
    }
    return {std::move(fine.grid), fine.diagnostics, estimate};
}

}  // namespace feederflow
