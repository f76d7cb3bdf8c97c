#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "feederflow/bvp_solver.hpp"
#include "feederflow/model.hpp"

namespace feederflow {

/// Closed-form solution pair embedded in a scenario: v and θ are the cubic
/// family with zero endpoint slope, v = 1 + a_v·(x³ - (3/2)Lx²) and
/// θ = a_θ·(x³ - (3/2)Lx²), with the densities inverted from the model.
struct ManufacturedSpec {
    double v_amplitude = 0.0;
    double theta_amplitude = 0.0;

    bool operator==(const ManufacturedSpec&) const = default;
};

/// One self-contained problem statement: line constants, load profile, and
/// solver controls. Immutable in spirit — mutate only before validate().
struct Scenario {
    std::string name = "unnamed";
    FeederParams params;
    PowerProfile profile;
    std::optional<ManufacturedSpec> manufactured;  // exclusive with segments/bumps
    SolverOptions solver;

    /// Checks every component invariant plus the exclusivity rule between
    /// the manufactured pair and an explicit profile. Throws ValidationError
    /// (or DomainError for an incompatible manufactured pair).
    void validate() const;

    /// The density profile this scenario solves: the explicit PowerProfile,
    /// or the densities induced by the manufactured pair.
    std::unique_ptr<Profile> make_profile() const;

    /// The embedded analytic pair; nullptr when the scenario is not
    /// manufactured.
    std::unique_ptr<ManufacturedSolution> build_manufactured() const;

    bool operator==(const Scenario&) const = default;
};

/// Parses the scenario text format:
///
///   name = my-feeder            # optional, before any section
///   [feeder]                    # required: g, b, L
///   g = 1.0
///   b = 1.0
///   L = 1.0
///   [segments]                  # optional: repeated `segment =` entries
///   segment = x_start, x_end, p_density, q_density
///   [bumps]                     # optional: repeated `bump =` entries
///   bump = center, half_width, p_amplitude, q_amplitude
///   [solver]                    # optional: defaults apply per key
///   n_intervals = 2048
///   newton_tol = 1e-10
///   max_newton_iters = 50
///   fd_step = 1e-7
///   damping = 1.0
///   [manufactured]              # optional, exclusive with segments/bumps
///   v_amplitude = 0.12
///   theta_amplitude = 0.1
///
/// `#` starts a comment; blank lines are ignored; unknown sections or keys
/// are rejected. Throws ParseError (syntax, with line number) or
/// ValidationError (invariant breach).
Scenario parse_scenario(const std::string& text);

/// Canonical text form; parse_scenario(serialize(sc)) == sc.
std::string serialize(const Scenario& sc);

/// Built-in scenarios: "no_load", "conventional" (consumption-only loads,
/// q ≤ 0), "pv_ev" (consumption plus a midday generation bump, q ≥ 0),
/// "manufactured" (embedded analytic pair). Throws UnknownPreset.
Scenario preset(const std::string& name);

std::vector<std::string> preset_names();

/// Resolves `ref` in order: an existing file path, then
/// `$FEEDERFLOW_PRESET_DIR/<ref>.cfg`, then a built-in preset name.
Scenario load_scenario(const std::string& ref);

/// Assigns a numeric scenario field addressed as "section.key"
/// (e.g. "feeder.b", "solver.n_intervals", "manufactured.v_amplitude");
/// integer fields round from the given value. Throws ValidationError for an
/// unknown path or one that does not apply to the scenario.
void set_numeric_field(Scenario& sc, const std::string& path, double value);

}  // namespace feederflow
