#include "feederflow/dissipation.hpp"

#include <cmath>
#include <string>

#include "feederflow/numerics.hpp"

namespace feederflow {

namespace {

// Max-norm over interior nodes, skipping every node whose 5-point stencil
// interior contains a density jump. Interior stencils span x_i ± 2h; the
// one-sided stencils at nodes 1 and N-1 span the first/last 4h.
double reduce_excluding_jumps(const Eigen::ArrayXd& r, const SolutionGrid& grid,
                              const std::vector<double>& jumps) {
    const int n = grid.intervals();
    const double h = grid.spacing();
    const double pad = 1e-9 * grid.length();  // jumps exactly on a span edge don't pollute
    double norm = 0.0;
    for (int i = 1; i < n; ++i) {
        const double lo = (i == 1) ? 0.0 : grid.x(i) - 2.0 * h;
        const double hi = (i == n - 1) ? grid.length() : grid.x(i) + 2.0 * h;
        bool polluted = false;
        for (double xb : jumps) {
            if (xb > lo + pad && xb < hi - pad) {
                polluted = true;
                break;
            }
        }
        if (!polluted) norm = std::max(norm, std::abs(r[i]));
    }
    return norm;
}

LossBalanceSummary summarize_loss_balance(const SolutionGrid& grid, const Profile& profile,
                                          const FeederParams& prm) {
    const IntegralIdentities ids = verify_integral_identities(grid, profile, prm);
    LossBalanceSummary out;
    out.total_loss = ids.loss_balance_rhs;
    out.supply_integral = ids.loss_balance_lhs + grid.w()[0];
    out.v_gradient_0 = grid.w()[0];
    out.balance_gap = ids.loss_balance_gap;
    return out;
}

}  // namespace

FluxArrays evaluate_functions(const SolutionGrid& grid) {
    const Eigen::ArrayXd& v = grid.v();
    const Eigen::ArrayXd& w = grid.w();
    const Eigen::ArrayXd dtheta = grid.theta_gradient();

    FluxArrays out;
    out.psi_b = -v * v * dtheta;
    out.psi_g = -v * w;
    out.delta = w * w + v * v * dtheta * dtheta;
    return out;
}

EqualityResidualArrays equality_residual_arrays(const SolutionGrid& grid, const Profile& profile,
                                                const FeederParams& prm) {
    const FluxArrays flux = evaluate_functions(grid);
    const double h = grid.spacing();
    const int nodes = grid.nodes();

    const Eigen::ArrayXd dpsi_b = derivative_4th(flux.psi_b, h);
    const Eigen::ArrayXd dpsi_g = derivative_4th(flux.psi_g, h);
    const Eigen::ArrayXd dflux_active = derivative_4th(prm.b * flux.psi_b + prm.g * flux.psi_g, h);
    const Eigen::ArrayXd dflux_reactive = derivative_4th(prm.b * flux.psi_g - prm.g * flux.psi_b, h);

    EqualityResidualArrays out;
    out.active.resize(nodes);
    out.reactive.resize(nodes);
    out.voltage.resize(nodes);
    out.phase.resize(nodes);
    for (int i = 0; i < nodes; ++i) {
        const Eigen::Vector2d pq = profile.density(grid.x(i));
        const Eigen::Vector2d sigma = supply_rates(pq[0], pq[1], prm);
        out.active[i] = dflux_active[i] - pq[0] + prm.g * flux.delta[i];
        out.reactive[i] = dflux_reactive[i] - pq[1] + prm.b * flux.delta[i];
        out.voltage[i] = dpsi_g[i] - sigma[0] + flux.delta[i];
        out.phase[i] = dpsi_b[i] - sigma[1];
    }
    return out;
}

EqualityResiduals verify_dissipation_equalities(const SolutionGrid& grid, const Profile& profile,
                                                const FeederParams& prm) {
    const EqualityResidualArrays arrays = equality_residual_arrays(grid, profile, prm);
    const std::vector<double> jumps = profile.breakpoints();
    return {reduce_excluding_jumps(arrays.active, grid, jumps),
            reduce_excluding_jumps(arrays.reactive, grid, jumps),
            reduce_excluding_jumps(arrays.voltage, grid, jumps),
            reduce_excluding_jumps(arrays.phase, grid, jumps)};
}

IntegralIdentities verify_integral_identities(const SolutionGrid& grid, const Profile& profile,
                                              const FeederParams& prm) {
    const FluxArrays flux = evaluate_functions(grid);
    const Eigen::Vector2d pq_total =
        simpson_profile(profile, grid.length(), grid.intervals());
    // σ is linear in (p, q), so its Simpson integral is the supply map of the
    // density integrals.
    const Eigen::Vector2d sigma_total = supply_rates(pq_total[0], pq_total[1], prm);
    const double delta_total = simpson(flux.delta, grid.spacing());

    IntegralIdentities out;
    out.loss_balance_lhs = sigma_total[0] - grid.w()[0];
    out.loss_balance_rhs = delta_total;
    out.loss_balance_gap = std::abs(out.loss_balance_lhs - out.loss_balance_rhs);
    out.phase_balance_lhs = sigma_total[1];
    out.phase_balance_rhs = grid.theta_gradient()[0];
    out.phase_balance_gap = std::abs(out.phase_balance_lhs - out.phase_balance_rhs);
    return out;
}

LossDecomposition loss_decomposition(const SolutionGrid& grid, const FeederParams& prm) {
    const FluxArrays flux = evaluate_functions(grid);
    LossDecomposition out;
    out.total = simpson(flux.delta, grid.spacing());
    out.active = prm.g * out.total;
    out.reactive = prm.b * out.total;
    out.current_sq = prm.admittance_norm_sq() * flux.delta;
    return out;
}

const char* to_string(Phenomenon ph) {
    switch (ph) {
        case Phenomenon::VoltageDrop: return "VoltageDrop";
        case Phenomenon::ReverseFlow: return "ReverseFlow";
        case Phenomenon::PhaseDelay: return "PhaseDelay";
        case Phenomenon::PhaseAdvance: return "PhaseAdvance";
    }
    return "?";
}

std::vector<Phenomenon> PhenomenaReport::flags() const {
    std::vector<Phenomenon> out;
    if (voltage_drop) out.push_back(Phenomenon::VoltageDrop);
    if (reverse_flow) out.push_back(Phenomenon::ReverseFlow);
    if (phase_delay) out.push_back(Phenomenon::PhaseDelay);
    if (phase_advance) out.push_back(Phenomenon::PhaseAdvance);
    return out;
}

PhenomenaReport classify_phenomena(const SolutionGrid& grid, const Profile& profile,
                                   const FeederParams& prm) {
    PhenomenaReport out;
    out.v_gradient_0 = grid.w()[0];
    out.theta_gradient_0 = grid.theta_gradient()[0];
    out.voltage_drop = out.v_gradient_0 <= -kSignTolerance;
    out.reverse_flow = out.v_gradient_0 >= kSignTolerance;
    out.phase_delay = out.theta_gradient_0 <= -kSignTolerance;
    out.phase_advance = out.theta_gradient_0 >= kSignTolerance;

    // One-signedness of q, probed on nodes, node midpoints, and both sides
    // of every jump.
    bool q_nonpositive = true;
    bool q_nonnegative = true;
    auto probe = [&](double x, Side side) {
        const double q = profile.density(x, side)[1];
        q_nonpositive = q_nonpositive && q <= kSignTolerance;
        q_nonnegative = q_nonnegative && q >= -kSignTolerance;
    };
    for (int i = 0; i < grid.nodes(); ++i) {
        probe(grid.x(i), Side::Right);
        probe(grid.x(i), Side::Left);
        if (i < grid.intervals()) probe(grid.x(i) + 0.5 * grid.spacing(), Side::Right);
    }

    const Eigen::Vector2d totals = profile.integral();
    // ∫q ≥ (b/g)·∫p  ⟺  g·∫q - b·∫p ≥ 0 since g > 0.
    const double scaled_excess = prm.g * totals[1] - prm.b * totals[0];

    out.delay_equivalence.premise = q_nonpositive;
    out.delay_equivalence.gradient_side = out.theta_gradient_0 <= kSignTolerance;
    out.delay_equivalence.integral_side = scaled_excess >= -kSignTolerance;
    out.delay_equivalence.holds =
        !out.delay_equivalence.premise ||
        out.delay_equivalence.gradient_side == out.delay_equivalence.integral_side;

    out.advance_equivalence.premise = q_nonnegative;
    out.advance_equivalence.gradient_side = out.theta_gradient_0 >= -kSignTolerance;
    out.advance_equivalence.integral_side = scaled_excess <= kSignTolerance;
    out.advance_equivalence.holds =
        !out.advance_equivalence.premise ||
        out.advance_equivalence.gradient_side == out.advance_equivalence.integral_side;

    return out;
}

DissipationReport analyze(const SolutionGrid& grid, const Profile& profile,
                          const FeederParams& prm) {
    DissipationReport report;
    report.flux = evaluate_functions(grid);
    report.residuals = verify_dissipation_equalities(grid, profile, prm);
    report.integrals = verify_integral_identities(grid, profile, prm);
    report.losses = loss_decomposition(grid, prm);
    report.phenomena = classify_phenomena(grid, profile, prm);
    return report;
}

InjectionComparison injection_evaluation(const Profile& base, const Profile& injection,
                                         const FeederParams& prm, const SolverOptions& options) {
    auto solve_labeled = [&](const Profile& profile, const char* label) {
        try {
            return solve_bvp(profile, prm, options);
        } catch (const NotConverged& e) {
            throw NotConverged(std::string(label) + ": " + e.what());
        } catch (const VoltageCollapse& e) {
            throw VoltageCollapse(std::string(label) + ": " + e.what());
        }
    };

    const SolveResult base_run = solve_labeled(base, "base scenario");
    const CombinedProfile combined(base, injection);
    const SolveResult injected_run = solve_labeled(combined, "injected scenario");

    InjectionComparison out;
    out.base = summarize_loss_balance(base_run.grid, base, prm);
    out.injected = summarize_loss_balance(injected_run.grid, combined, prm);
    out.loss_delta = out.injected.total_loss - out.base.total_loss;
    return out;
}

}  // namespace feederflow
