// Acceptance gate: one line per criterion, PASS/FAIL, exit code = number of
// failures. Tolerances and grid sizes are pinned here on purpose — loosening
// them is a contract change, not a tuning knob.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "feederflow/bvp_solver.hpp"
#include "feederflow/dissipation.hpp"
#include "feederflow/io.hpp"
#include "feederflow/ladder_oracle.hpp"
#include "feederflow/model.hpp"
#include "feederflow/numerics.hpp"
#include "feederflow/scenario.hpp"
#include "support.hpp"

namespace {

using namespace feederflow;

struct Outcome {
    bool ok = true;
    std::string detail;
};

void require(Outcome& out, bool cond, const std::string& what) {
    if (cond) return;
    out.ok = false;
    if (!out.detail.empty()) out.detail += "; ";
    out.detail += what;
}

std::string num(double x) { return format_double(x); }

SolverOptions grid_of(int n) {
    SolverOptions opt;
    opt.n_intervals = n;
    return opt;
}

SolveResult solve_preset(const std::string& name, int n) {
    const Scenario sc = preset(name);
    const auto profile = sc.make_profile();
    return solve_bvp(*profile, sc.params, grid_of(n));
}

PowerProfile single_load() { return PowerProfile(1.0, {Segment{0.4, 0.6, -0.1, 0.0}}, {}); }

// --- criterion bodies ---

Outcome unloaded_feeder_flat() {
    Outcome out;
    const Scenario sc = preset("no_load");
    const auto profile = sc.make_profile();
    const SolveResult r = solve_bvp(*profile, sc.params, grid_of(2048));
    require(out, r.diagnostics.converged, "did not converge");
    const double v_dev = (r.grid.v() - 1.0).abs().maxCoeff();
    const double t_dev = r.grid.theta().abs().maxCoeff();
    require(out, v_dev <= 1e-12, "max|v-1| = " + num(v_dev) + " > 1e-12");
    require(out, t_dev <= 1e-12, "max|theta| = " + num(t_dev) + " > 1e-12");
    const FluxArrays flux = evaluate_functions(r.grid);
    require(out, flux.delta.abs().maxCoeff() == 0.0, "dissipation rate not identically zero");
    const LossDecomposition loss = loss_decomposition(r.grid, sc.params);
    require(out, loss.total == 0.0, "total loss = " + num(loss.total) + " != 0");
    return out;
}

Outcome manufactured_recovery() {
    Outcome out;
    const Scenario sc = preset("manufactured");
    const auto mfg = sc.build_manufactured();
    double errs[3];
    const int sizes[3] = {128, 256, 512};
    for (int k = 0; k < 3; ++k) {
        const SolveResult r = solve_bvp(*mfg, sc.params, grid_of(sizes[k]));
        double err = 0.0;
        for (int i = 0; i <= sizes[k]; ++i) {
            err = std::max(err, std::abs(r.grid.v()[i] - mfg->v(r.grid.x(i))));
        }
        errs[k] = err;
    }
    require(out, errs[2] <= 1e-8, "v error at N=512 is " + num(errs[2]) + " > 1e-8");
    const double o1 = observed_order(errs[0], errs[1]);
    const double o2 = observed_order(errs[1], errs[2]);
    require(out, o1 >= 3.5, "order 128->256 = " + num(o1) + " < 3.5");
    require(out, o2 >= 3.5, "order 256->512 = " + num(o2) + " < 3.5");
    return out;
}

Outcome equality_residuals_refine() {
    Outcome out;
    const Scenario sc = preset("manufactured");
    const auto mfg = sc.build_manufactured();
    auto norms = [&](int n) {
        const SolveResult r = solve_bvp(*mfg, sc.params, grid_of(n));
        return verify_dissipation_equalities(r.grid, *mfg, sc.params);
    };
    const EqualityResiduals coarse = norms(1024);
    const EqualityResiduals fine = norms(2048);
    const struct {
        const char* name;
        double c, f;
    } rows[4] = {{"active", coarse.active, fine.active},
                 {"reactive", coarse.reactive, fine.reactive},
                 {"voltage", coarse.voltage, fine.voltage},
                 {"phase", coarse.phase, fine.phase}};
    for (const auto& row : rows) {
        require(out, row.f <= 1e-6,
                std::string(row.name) + " residual = " + num(row.f) + " > 1e-6 at N=2048");
        const double order = observed_order(row.c, row.f);
        require(out, order >= 1.9,
                std::string(row.name) + " order = " + num(order) + " < 1.9");
    }
    return out;
}

Outcome integral_identities_presets() {
    Outcome out;
    for (const std::string& name : preset_names()) {
        const Scenario sc = preset(name);
        const auto profile = sc.make_profile();
        const SolveResult r = solve_bvp(*profile, sc.params, grid_of(2048));
        const IntegralIdentities ids = verify_integral_identities(r.grid, *profile, sc.params);
        require(out, ids.loss_balance_gap <= 1e-6,
                name + " loss-balance gap = " + num(ids.loss_balance_gap) + " > 1e-6");
        require(out, ids.phase_balance_gap <= 1e-6,
                name + " phase-balance gap = " + num(ids.phase_balance_gap) + " > 1e-6");
    }
    return out;
}

Outcome phase_flux_identity() {
    Outcome out;
    double worst = 0.0;
    std::string where = "none";
    auto scan = [&](const std::string& label, const SolutionGrid& grid) {
        const FluxArrays flux = evaluate_functions(grid);
        const double dev = (flux.psi_b - grid.s()).abs().maxCoeff();
        if (dev > worst) {
            worst = dev;
            where = label;
        }
    };
    for (const std::string& name : preset_names()) {
        scan(name, solve_preset(name, 2048).grid);
    }
    scan("single_load", solve_bvp(single_load(), FeederParams{}, grid_of(2048)).grid);
    Scenario cap = preset("conventional");
    cap.params.b = -0.5;
    scan("capacitive", solve_bvp(cap.profile, cap.params, grid_of(2048)).grid);
    require(out, worst <= 1e-12,
            "max|psi_b - s| = " + num(worst) + " > 1e-12 (" + where + ")");
    return out;
}

Outcome ohmic_identity_and_ladder_loss() {
    Outcome out;
    for (const char* name : {"conventional", "pv_ev"}) {
        const Scenario sc = preset(name);
        const SolveResult r = solve_bvp(sc.profile, sc.params, grid_of(2048));
        const FluxArrays flux = evaluate_functions(r.grid);
        const LossDecomposition loss = loss_decomposition(r.grid, sc.params);
        const double R = sc.params.resistance();
        double rel = 0.0;
        for (int i = 0; i <= r.grid.intervals(); ++i) {
            const double lhs = sc.params.g * flux.delta[i];
            const double scale = std::max(1.0, std::abs(lhs));
            rel = std::max(rel, std::abs(lhs - R * loss.current_sq[i]) / scale);
        }
        require(out, rel <= 1e-12,
                std::string(name) + ": |g*delta - R*I^2| relative = " + num(rel) + " > 1e-12");
    }

    const Scenario sc = preset("conventional");
    const SolveResult r = solve_bvp(sc.profile, sc.params, grid_of(4096));
    const LossDecomposition loss = loss_decomposition(r.grid, sc.params);
    const LadderNetwork net = build_network(sc.profile, sc.params, 4096);
    const PowerflowResult flow = solve_powerflow(net);
    require(out, flow.converged, "ladder power flow did not converge at N=4096");
    if (flow.converged) {
        const double rel = std::abs(flow.series_loss.real() - loss.active) /
                           std::max(loss.active, 1e-12);
        require(out, rel <= 1e-2,
                "ladder/continuum active-loss gap = " + num(rel) + " > 1e-2");
    }
    return out;
}

Outcome phenomena_and_equivalences() {
    Outcome out;
    require(out, kSignTolerance == 1e-8, "sign dead band moved away from 1e-8");

    {
        const Scenario sc = preset("conventional");
        const SolveResult r = solve_bvp(sc.profile, sc.params, grid_of(2048));
        const PhenomenaReport rep = classify_phenomena(r.grid, sc.profile, sc.params);
        require(out, rep.voltage_drop, "conventional: no VoltageDrop flag");
        require(out, !rep.reverse_flow, "conventional: spurious ReverseFlow flag");
        require(out, rep.delay_equivalence.premise, "conventional: delay premise (q <= 0) not met");
        require(out, rep.delay_equivalence.holds, "conventional: delay equivalence violated");
    }
    {
        const Scenario sc = preset("pv_ev");
        const SolveResult r = solve_bvp(sc.profile, sc.params, grid_of(2048));
        const PhenomenaReport rep = classify_phenomena(r.grid, sc.profile, sc.params);
        require(out, rep.reverse_flow, "pv_ev: no ReverseFlow flag");
        require(out, !rep.voltage_drop, "pv_ev: spurious VoltageDrop flag");
        require(out, rep.advance_equivalence.premise, "pv_ev: advance premise (q >= 0) not met");
        require(out, rep.advance_equivalence.holds, "pv_ev: advance equivalence violated");
    }
    return out;
}

Outcome oracle_disagreement_shrinks() {
    Outcome out;
    const PowerProfile prof = single_load();
    const FeederParams prm;
    std::vector<double> v_errs;
    for (int n : {512, 1024, 2048, 4096}) {
        const SolveResult sol = solve_bvp(prof, prm, grid_of(n));
        const LadderNetwork net = build_network(prof, prm, n);
        const PowerflowResult flow = solve_powerflow(net);
        require(out, flow.converged, "ladder did not converge at N=" + std::to_string(n));
        if (!flow.converged) return out;
        v_errs.push_back(compare_to_continuum(sol.grid, net, flow, prm).v_err);
    }
    for (std::size_t k = 1; k < v_errs.size(); ++k) {
        require(out, v_errs[k] < v_errs[k - 1],
                "v_err did not decrease at step " + std::to_string(k) + " (" +
                    num(v_errs[k - 1]) + " -> " + num(v_errs[k]) + ")");
        const double order = observed_order(v_errs[k - 1], v_errs[k]);
        require(out, order >= 0.9,
                "order at step " + std::to_string(k) + " = " + num(order) + " < 0.9");
    }
    return out;
}

Outcome capacitive_reactive_loss() {
    Outcome out;
    for (double b : {-0.5, -1.0}) {
        Scenario sc = preset("conventional");
        sc.params.b = b;
        const SolveResult r = solve_bvp(sc.profile, sc.params, grid_of(1024));
        const LossDecomposition loss = loss_decomposition(r.grid, sc.params);
        require(out, loss.total > 0.0,
                "b = " + num(b) + ": total loss not positive (" + num(loss.total) + ")");
        require(out, loss.reactive < 0.0,
                "b = " + num(b) + ": reactive loss = " + num(loss.reactive) + " not negative");
        const double recombined = b * loss.total;
        require(out, std::abs(loss.reactive - recombined) <= 1e-15 * std::abs(recombined) + 1e-300,
                "b = " + num(b) + ": reactive loss is not b times the total");
    }
    return out;
}

Outcome deterministic_cli_output() {
    Outcome out;
    const testing_support::ScratchDir dir("ff-acceptance-cli");
    const std::string base = std::string(FEEDERFLOW_BIN) + " solve conventional --grid 256 --out '" +
                             dir.path().string() + "'";
    const auto first = testing_support::run_command(base);
    require(out, first.exit_code == 0, "first solve exited " + std::to_string(first.exit_code));
    if (first.exit_code != 0) return out;
    const std::string csv1 = testing_support::read_file(dir.path() / "conventional_profile.csv");
    const std::string rep1 = testing_support::read_file(dir.path() / "conventional_report.txt");

    const auto second = testing_support::run_command(base);
    require(out, second.exit_code == 0, "second solve exited " + std::to_string(second.exit_code));
    const std::string csv2 = testing_support::read_file(dir.path() / "conventional_profile.csv");
    const std::string rep2 = testing_support::read_file(dir.path() / "conventional_report.txt");

    require(out, first.output == second.output, "stdout differs between identical runs");
    require(out, csv1 == csv2, "profile CSV differs between identical runs");
    require(out, rep1 == rep2, "report differs between identical runs");

    // Format contracts: fixed header, LF-only, one row per node, floats that
    // round-trip, and strict key=value report lines.
    require(out, csv1.find('\r') == std::string::npos, "CSV contains carriage returns");
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < csv1.size()) {
        std::size_t nl = csv1.find('\n', pos);
        if (nl == std::string::npos) nl = csv1.size();
        lines.push_back(csv1.substr(pos, nl - pos));
        pos = nl + 1;
    }
    require(out, !lines.empty() && lines[0] == "x,theta,v,s,w,p,q,psi_b,psi_g,delta",
            "CSV header mismatch");
    require(out, lines.size() == 258, "CSV row count " + std::to_string(lines.size()) + " != 258");
    if (lines.size() >= 2) {
        std::size_t comma = lines[1].find(',');
        std::size_t count = 1;
        while (comma != std::string::npos) {
            ++count;
            comma = lines[1].find(',', comma + 1);
        }
        require(out, count == 10, "CSV column count " + std::to_string(count) + " != 10");
        // Spot-check float round-tripping on the second data row.
        if (lines.size() >= 3) {
            const std::string& row = lines[2];
            std::size_t start = 0;
            while (start <= row.size()) {
                std::size_t end = row.find(',', start);
                if (end == std::string::npos) end = row.size();
                const std::string field = row.substr(start, end - start);
                require(out, !field.empty() && format_double(std::stod(field)) == field,
                        "CSV field '" + field + "' does not round-trip");
                start = end + 1;
            }
        }
    }
    for (pos = 0; pos < rep1.size();) {
        std::size_t nl = rep1.find('\n', pos);
        if (nl == std::string::npos) nl = rep1.size();
        const std::string line = rep1.substr(pos, nl - pos);
        const std::size_t eq = line.find('=');
        require(out, eq != std::string::npos && eq > 0,
                "report line '" + line + "' is not key=value");
        if (eq != std::string::npos) {
            require(out, line.substr(0, eq).find(' ') == std::string::npos,
                    "report key '" + line.substr(0, eq) + "' contains spaces");
        }
        pos = nl + 1;
        if (!out.ok) break;
    }
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* label;
        double budget_seconds;  // 0 = no budget
        std::function<Outcome()> body;
    };
    const std::vector<Criterion> criteria = {
        {1, "unloaded feeder stays exactly flat", 1.0, unloaded_feeder_flat},
        {2, "analytic-pair recovery at fourth order", 5.0, manufactured_recovery},
        {3, "equality residuals vanish under refinement", 10.0, equality_residuals_refine},
        {4, "integral identities close on all presets", 0.0, integral_identities_presets},
        {5, "phase flux reproduces s to round-off", 0.0, phase_flux_identity},
        {6, "ohmic-loss identity and ladder loss agreement", 0.0, ohmic_identity_and_ladder_loss},
        {7, "phenomena flags and sign equivalences", 0.0, phenomena_and_equivalences},
        {8, "continuum/ladder disagreement shrinks with the grid", 30.0, oracle_disagreement_shrinks},
        {9, "capacitive susceptance yields negative reactive loss", 0.0, capacitive_reactive_loss},
        {10, "deterministic CLI output with pinned formats", 0.0, deterministic_cli_output},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.body();
        } catch (const std::exception& e) {
            out.ok = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_seconds > 0.0 && seconds > c.budget_seconds) {
            out.ok = false;
            if (!out.detail.empty()) out.detail += "; ";
            out.detail += "runtime " + std::to_string(seconds) + "s exceeds " +
                          std::to_string(c.budget_seconds) + "s budget";
        }
        if (!out.ok) ++failures;
        std::printf("%s criterion %d: %s [%.2fs]%s%s\n", out.ok ? "PASS" : "FAIL", c.id, c.label,
                    seconds, out.detail.empty() ? "" : " -- ", out.detail.c_str());
        std::fflush(stdout);
    }
    return failures;
}
