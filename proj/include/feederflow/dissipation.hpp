#pragma once

#include <Eigen/Dense>
#include <vector>

#include "feederflow/bvp_solver.hpp"
#include "feederflow/model.hpp"

namespace feederflow {

/// Gradient magnitudes below this are treated as "no definite sign" when
/// classifying phenomena; separates genuine signs from round-off on flat
/// solutions.
inline constexpr double kSignTolerance = 1e-8;

/// Flux and dissipation-rate functions evaluated per node.
struct FluxArrays {
    Eigen::ArrayXd psi_b;  // phase flux   Ψ_b = -v²·dθ/dx  (equals s identically)
    Eigen::ArrayXd psi_g;  // voltage flux Ψ_g = -v·dv/dx
    Eigen::ArrayXd delta;  // dissipation rate Δ = (dv/dx)² + v²·(dθ/dx)² ≥ 0
};

/// Evaluates Ψ_b, Ψ_g, Δ from the state variables alone: dv/dx is the state
/// w and dθ/dx substitutes -s/v² exactly, so no numerical differencing enters.
FluxArrays evaluate_functions(const SolutionGrid& grid);

/// Signed per-node residuals of the four dissipation equalities. The outer
/// d/dx on the flux arrays uses 4th-order finite differences; everything
/// else is sampled analytically.
///   active:   d/dx(b·Ψ_b + g·Ψ_g) - p + g·Δ       (supply rate p)
///   reactive: d/dx(b·Ψ_g - g·Ψ_b) - q + b·Δ       (supply rate q)
///   voltage:  dΨ_g/dx - σ_V + Δ                    (supply rate σ_V, rate Δ)
///   phase:    dΨ_b/dx - σ_P                        (lossless: no rate term)
/// The active/reactive residuals are the orthogonal recombination
/// b·phase + g·voltage and b·voltage - g·phase up to round-off.
struct EqualityResidualArrays {
    Eigen::ArrayXd active;
    Eigen::ArrayXd reactive;
    Eigen::ArrayXd voltage;
    Eigen::ArrayXd phase;
};

EqualityResidualArrays equality_residual_arrays(const SolutionGrid& grid, const Profile& profile,
                                                const FeederParams& prm);

/// Max-norm reductions of the residual arrays over interior nodes, skipping
/// nodes whose difference stencil straddles a density jump (the flux arrays
/// are only piecewise smooth there, so pollution is expected and excluded).
struct EqualityResiduals {
    double active = 0.0;
    double reactive = 0.0;
    double voltage = 0.0;
    double phase = 0.0;
};

EqualityResiduals verify_dissipation_equalities(const SolutionGrid& grid, const Profile& profile,
                                                const FeederParams& prm);

/// The two integral identities tying endpoint gradients to supply and loss
/// totals over the whole feeder:
///   loss balance:  ∫σ_V dx - dv(0)/dx  =  ∫Δ dx
///   phase balance: ∫σ_P dx             =  dθ(0)/dx
/// Density integrals use composite Simpson with one-sided limits at pair
/// endpoints; ∫Δ uses Simpson on the node values; the endpoint gradients
/// come from the states (w(0) and -s(0)/v(0)²).
struct IntegralIdentities {
    double loss_balance_lhs = 0.0;
    double loss_balance_rhs = 0.0;
    double loss_balance_gap = 0.0;
    double phase_balance_lhs = 0.0;
    double phase_balance_rhs = 0.0;
    double phase_balance_gap = 0.0;
};

IntegralIdentities verify_integral_identities(const SolutionGrid& grid, const Profile& profile,
                                              const FeederParams& prm);

/// Distribution-loss decomposition. Δ integrates to the total loss; the
/// active part g·∫Δ equals ∫R·I² with I the current amplitude, and
/// current_sq[i] = (g² + b²)·Δ[i] is that squared amplitude per node.
struct LossDecomposition {
    double total = 0.0;     // ∫Δ dx
    double active = 0.0;    // g·total
    double reactive = 0.0;  // b·total
    Eigen::ArrayXd current_sq;
};

LossDecomposition loss_decomposition(const SolutionGrid& grid, const FeederParams& prm);

enum class Phenomenon { VoltageDrop, ReverseFlow, PhaseDelay, PhaseAdvance };

const char* to_string(Phenomenon ph);

/// One of the two sign equivalences between the transformer-end phase
/// gradient and the profile totals, valid when q is one-signed:
///   q ≤ 0 everywhere:  dθ(0)/dx ≤ 0  ⟺  ∫q ≥ (b/g)·∫p   (delay case)
///   q ≥ 0 everywhere:  dθ(0)/dx ≥ 0  ⟺  ∫q ≤ (b/g)·∫p   (advance case)
/// `holds` is vacuously true when the premise fails on the given profile.
struct SignEquivalence {
    bool premise = false;
    bool gradient_side = false;
    bool integral_side = false;
    bool holds = true;
};

struct PhenomenaReport {
    double v_gradient_0 = 0.0;      // dv(0)/dx = w(0)
    double theta_gradient_0 = 0.0;  // dθ(0)/dx = -s(0)/v(0)²
    bool voltage_drop = false;      // dv(0)/dx ≤ -tol
    bool reverse_flow = false;      // dv(0)/dx ≥ +tol
    bool phase_delay = false;       // dθ(0)/dx ≤ -tol
    bool phase_advance = false;     // dθ(0)/dx ≥ +tol
    SignEquivalence delay_equivalence;
    SignEquivalence advance_equivalence;

    /// Flags in fixed order for deterministic serialization.
    std::vector<Phenomenon> flags() const;
};

/// Classifies the transformer-end gradients with a ±kSignTolerance dead
/// band (gradients inside it raise no flag) and evaluates both sign
/// equivalences on the given profile.
PhenomenaReport classify_phenomena(const SolutionGrid& grid, const Profile& profile,
                                   const FeederParams& prm);

/// Everything the dissipation analysis produces for one solution.
struct DissipationReport {
    FluxArrays flux;
    EqualityResiduals residuals;
    IntegralIdentities integrals;
    LossDecomposition losses;
    PhenomenaReport phenomena;
};

DissipationReport analyze(const SolutionGrid& grid, const Profile& profile,
                          const FeederParams& prm);

/// Loss-balance summary of one solved scenario: the identity
/// ∫Δ = ∫σ_V - dv(0)/dx with its measured gap.
struct LossBalanceSummary {
    double total_loss = 0.0;
    double supply_integral = 0.0;  // ∫σ_V dx
    double v_gradient_0 = 0.0;
    double balance_gap = 0.0;
};

/// Solves the base profile and base + injection side by side and reports
/// how the injection moved the net distribution loss. Solver errors carry
/// a "base scenario:" / "injected scenario:" prefix naming the failing run.
struct InjectionComparison {
    LossBalanceSummary base;
    LossBalanceSummary injected;
    double loss_delta = 0.0;  // injected.total_loss - base.total_loss
};

InjectionComparison injection_evaluation(const Profile& base, const Profile& injection,
                                         const FeederParams& prm, const SolverOptions& options);

}  // namespace feederflow
