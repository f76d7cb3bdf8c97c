#include "feederflow/ladder_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "feederflow/dissipation.hpp"
#include "feederflow/numerics.hpp"

namespace feederflow {

LadderNetwork build_network(const Profile& profile, const FeederParams& prm, int n_segments) {
    prm.validate();
    if (n_segments < 16) {
        throw ValidationError("ladder needs at least 16 segments, got " +
                              std::to_string(n_segments));
    }

    LadderNetwork net;
    net.n_nodes = n_segments + 1;
    net.h = prm.L / n_segments;
    net.z_segment = std::complex<double>(prm.resistance(), prm.reactance()) * net.h;
    net.injections.resize(net.n_nodes);

    for (int k = 0; k < net.n_nodes; ++k) {
        const double x = k * net.h;
        Eigen::Vector2d pq = Eigen::Vector2d::Zero();
        if (k > 0) pq += integrate_profile_weighted(profile, x - net.h, x, 0.0, 1.0);
        if (k + 1 < net.n_nodes) pq += integrate_profile_weighted(profile, x, x + net.h, 1.0, 0.0);
        net.injections[k] = {pq[0], pq[1]};
    }
    return net;
}

PowerflowResult solve_powerflow(const LadderNetwork& network, double tol, int max_iters) {
    if (!(tol > 0.0)) throw ValidationError("powerflow tolerance must be positive");
    const int n_seg = network.n_nodes - 1;

    PowerflowResult out;
    out.voltages.assign(network.n_nodes, {1.0, 0.0});
    out.branch_currents.assign(n_seg, {0.0, 0.0});

    for (int it = 1; it <= max_iters; ++it) {
        out.iterations = it;

        // Backward: branch current = minus the injection current of every
        // node downstream of the branch.
        std::complex<double> acc = 0.0;
        bool degenerate = false;
        for (int k = n_seg; k >= 1; --k) {
            if (std::abs(out.voltages[k]) < kVoltageFloor) {
                degenerate = true;
                break;
            }
            acc += std::conj(network.injections[k] / out.voltages[k]);
            out.branch_currents[k - 1] = -acc;
        }
        if (degenerate) break;  // sweep diverged toward collapse; report as not converged

        // Forward: re-propagate voltages from the slack.
        double shift = 0.0;
        for (int k = 1; k <= n_seg; ++k) {
            const std::complex<double> updated =
                out.voltages[k - 1] - network.z_segment * out.branch_currents[k - 1];
            shift = std::max(shift, std::abs(updated - out.voltages[k]));
            out.voltages[k] = updated;
        }
        if (shift <= tol) {
            out.converged = true;
            break;
        }
    }

    std::complex<double> downstream = 0.0;
    out.series_loss = 0.0;
    for (int k = 0; k < n_seg; ++k) {
        out.series_loss += network.z_segment * std::norm(out.branch_currents[k]);
        downstream += network.injections[k + 1];
    }
    const std::complex<double> slack =
        out.voltages[0] * std::conj(out.branch_currents.empty() ? std::complex<double>(0.0)
                                                                : out.branch_currents[0]);
    out.power_balance_gap = std::abs(slack - (out.series_loss - downstream));
    return out;
}

OracleComparison compare_to_continuum(const SolutionGrid& grid, const LadderNetwork& network,
                                      const PowerflowResult& flow, const FeederParams& prm) {
    if (grid.intervals() != network.n_nodes - 1) {
        throw ValidationError("grid has " + std::to_string(grid.intervals()) +
                              " intervals but the ladder has " +
                              std::to_string(network.n_nodes - 1) + " segments");
    }

    OracleComparison out;
    for (int k = 0; k < network.n_nodes; ++k) {
        out.v_err = std::max(out.v_err, std::abs(std::abs(flow.voltages[k]) - grid.v()[k]));
        out.theta_err =
            std::max(out.theta_err, std::abs(std::arg(flow.voltages[k]) - grid.theta()[k]));
    }

    const double continuum_active = loss_decomposition(grid, prm).active;
    constexpr double kLossFloor = 1e-12;
    out.loss_err = std::abs(flow.series_loss.real() - continuum_active) /
                   std::max(continuum_active, kLossFloor);
    return out;
}

}  // namespace feederflow
