#include "feederflow/io.hpp"

#include <cstdio>
#include <fstream>
#include <system_error>

namespace feederflow {

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FeederError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw FeederError("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw FeederError("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                          ec.message());
    }
}

std::string render_profile_csv(const SolutionGrid& grid, const Profile& profile) {
    const FluxArrays flux = evaluate_functions(grid);
    std::string out = "x,theta,v,s,w,p,q,psi_b,psi_g,delta\n";
    for (int i = 0; i < grid.nodes(); ++i) {
        const Eigen::Vector2d pq = profile.density(grid.x(i));
        out += format_double(grid.x(i));
        out += ',';
        out += format_double(grid.theta()[i]);
        out += ',';
        out += format_double(grid.v()[i]);
        out += ',';
        out += format_double(grid.s()[i]);
        out += ',';
        out += format_double(grid.w()[i]);
        out += ',';
        out += format_double(pq[0]);
        out += ',';
        out += format_double(pq[1]);
        out += ',';
        out += format_double(flux.psi_b[i]);
        out += ',';
        out += format_double(flux.psi_g[i]);
        out += ',';
        out += format_double(flux.delta[i]);
        out += '\n';
    }
    return out;
}

std::string render_key_values(const std::vector<std::pair<std::string, std::string>>& entries) {
    std::string out;
    for (const auto& [key, value] : entries) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    }
    return out;
}

std::string render_report(const RunReport& report) {
    std::vector<std::pair<std::string, std::string>> kv;
    auto num = [](double x) { return format_double(x); };

    kv.emplace_back("scenario", report.scenario);
    kv.emplace_back("g", num(report.params.g));
    kv.emplace_back("b", num(report.params.b));
    kv.emplace_back("L", num(report.params.L));
    kv.emplace_back("n_intervals", std::to_string(report.n_intervals));

    const SolveDiagnostics& d = report.diagnostics;
    kv.emplace_back("converged", d.converged ? "true" : "false");
    kv.emplace_back("iterations", std::to_string(d.iterations));
    kv.emplace_back("final_residual_norm", num(d.final_residual_norm));
    kv.emplace_back("boundary_residual_theta0", num(d.boundary_residuals[0]));
    kv.emplace_back("boundary_residual_v0", num(d.boundary_residuals[1]));
    kv.emplace_back("boundary_residual_sL", num(d.boundary_residuals[2]));
    kv.emplace_back("boundary_residual_wL", num(d.boundary_residuals[3]));
    kv.emplace_back("suspicious_solution", d.suspicious_solution ? "true" : "false");

    const DissipationReport& a = report.analysis;
    kv.emplace_back("residual_active", num(a.residuals.active));
    kv.emplace_back("residual_reactive", num(a.residuals.reactive));
    kv.emplace_back("residual_voltage", num(a.residuals.voltage));
    kv.emplace_back("residual_phase", num(a.residuals.phase));
    kv.emplace_back("loss_balance_lhs", num(a.integrals.loss_balance_lhs));
    kv.emplace_back("loss_balance_rhs", num(a.integrals.loss_balance_rhs));
    kv.emplace_back("loss_balance_gap", num(a.integrals.loss_balance_gap));
    kv.emplace_back("phase_balance_lhs", num(a.integrals.phase_balance_lhs));
    kv.emplace_back("phase_balance_rhs", num(a.integrals.phase_balance_rhs));
    kv.emplace_back("phase_balance_gap", num(a.integrals.phase_balance_gap));
    kv.emplace_back("total_loss", num(a.losses.total));
    kv.emplace_back("loss_active", num(a.losses.active));
    kv.emplace_back("loss_reactive", num(a.losses.reactive));
    kv.emplace_back("v_gradient_0", num(a.phenomena.v_gradient_0));
    kv.emplace_back("theta_gradient_0", num(a.phenomena.theta_gradient_0));

    std::string flags;
    for (Phenomenon ph : a.phenomena.flags()) {
        if (!flags.empty()) flags += ',';
        flags += to_string(ph);
    }
    kv.emplace_back("phenomena", flags);
    kv.emplace_back("delay_equivalence_premise",
                    a.phenomena.delay_equivalence.premise ? "true" : "false");
    kv.emplace_back("delay_equivalence_holds",
                    a.phenomena.delay_equivalence.holds ? "true" : "false");
    kv.emplace_back("advance_equivalence_premise",
                    a.phenomena.advance_equivalence.premise ? "true" : "false");
    kv.emplace_back("advance_equivalence_holds",
                    a.phenomena.advance_equivalence.holds ? "true" : "false");

    for (std::size_t i = 0; i < report.outputs.size(); ++i) {
        kv.emplace_back("output_" + std::to_string(i), report.outputs[i]);
    }
    return render_key_values(kv);
}

}  // namespace feederflow
