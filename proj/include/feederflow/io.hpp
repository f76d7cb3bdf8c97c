#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "feederflow/bvp_solver.hpp"
#include "feederflow/dissipation.hpp"
#include "feederflow/model.hpp"

namespace feederflow {

/// Shortest round-trippable decimal rendering (17 significant digits).
/// Identical inputs always produce identical text.
std::string format_double(double x);

/// Writes content to a sibling temp file and renames it over the target, so
/// readers never observe a partial file. Throws FeederError on I/O failure.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// One row per node: x,theta,v,s,w,p,q,psi_b,psi_g,delta. Header line first,
/// comma separators, LF endings, 17-significant-digit floats. Densities are
/// sampled from the right at jumps.
std::string render_profile_csv(const SolutionGrid& grid, const Profile& profile);

/// Everything one solve run reports.
struct RunReport {
    std::string scenario;
    FeederParams params;
    int n_intervals = 0;
    SolveDiagnostics diagnostics;
    DissipationReport analysis;
    std::vector<std::string> outputs;  // paths written alongside the report
};

/// Flat `key=value` lines (LF) covering the solve diagnostics, equality
/// residuals, integral identities, loss decomposition, and phenomena flags.
std::string render_report(const RunReport& report);

/// Generic key=value rendering for ad-hoc reports.
std::string render_key_values(const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace feederflow
