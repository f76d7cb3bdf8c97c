// feederflow: solve distribution-feeder voltage profiles, check the
// dissipation identities on the result, and cross-validate against a
// discrete ladder circuit.

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "feederflow/bvp_solver.hpp"
#include "feederflow/dissipation.hpp"
#include "feederflow/io.hpp"
#include "feederflow/ladder_oracle.hpp"
#include "feederflow/numerics.hpp"
#include "feederflow/scenario.hpp"

namespace {

namespace ff = feederflow;
namespace fs = std::filesystem;

// Residual threshold for `verify` at the finest grid.
constexpr double kVerifyTolerance = 1e-6;
// Residuals this small count as converged-to-round-off; no order is demanded.
constexpr double kOrderFloor = 1e-10;
constexpr double kMinimumOrder = 1.9;
// `compare` passes when the final ladder/continuum loss gap is below this.
constexpr double kCompareLossTolerance = 1e-2;

ff::Scenario load_with_grid(const std::string& ref, std::optional<int> grid) {
    ff::Scenario sc = ff::load_scenario(ref);
    if (grid) {
        sc.solver.n_intervals = *grid;
        sc.solver.validate();
    }
    return sc;
}

int run_solve(const std::string& ref, std::optional<int> grid, const std::string& out_dir) {
    const ff::Scenario sc = load_with_grid(ref, grid);
    const auto profile = sc.make_profile();
    const ff::SolveResult result = ff::solve_bvp(*profile, sc.params, sc.solver);

    ff::RunReport report;
    report.scenario = sc.name;
    report.params = sc.params;
    report.n_intervals = sc.solver.n_intervals;
    report.diagnostics = result.diagnostics;
    report.analysis = ff::analyze(result.grid, *profile, sc.params);

    fs::create_directories(out_dir);
    const fs::path csv_path = fs::path(out_dir) / (sc.name + "_profile.csv");
    const fs::path report_path = fs::path(out_dir) / (sc.name + "_report.txt");
    report.outputs = {csv_path.string(), report_path.string()};

    ff::atomic_write(csv_path, ff::render_profile_csv(result.grid, *profile));
    const std::string text = ff::render_report(report);
    ff::atomic_write(report_path, text);
    std::cout << text;
    return 0;
}

int run_verify(const std::string& ref, std::optional<int> grid, int refinements, double perturb) {
    const ff::Scenario sc = load_with_grid(ref, grid);
    const auto profile = sc.make_profile();
    // Finite-difference convergence orders are only demanded where the
    // densities are smooth along the whole feeder.
    const bool smooth = sc.manufactured.has_value() ||
                        (sc.profile.segments().empty() && sc.profile.bumps().empty());

    const char* names[6] = {"active",       "reactive",     "voltage",
                            "phase",        "loss_balance", "phase_balance"};
    std::vector<std::array<double, 6>> rows;
    std::vector<int> sizes;

    std::cout << "scenario=" << sc.name << "\nsmooth=" << (smooth ? "true" : "false")
              << "\ntolerance=" << ff::format_double(kVerifyTolerance) << "\n";
    for (int level = 0; level <= refinements; ++level) {
        ff::SolverOptions opt = sc.solver;
        opt.n_intervals = sc.solver.n_intervals << level;
        const ff::SolveResult result = ff::solve_bvp(*profile, sc.params, opt);

        ff::SolutionGrid checked = result.grid;
        if (perturb != 0.0) {
            checked = ff::SolutionGrid(result.grid.length(), result.grid.theta(),
                                       result.grid.v() + perturb, result.grid.s(),
                                       result.grid.w());
        }
        const ff::EqualityResiduals eq =
            ff::verify_dissipation_equalities(checked, *profile, sc.params);
        const ff::IntegralIdentities ids =
            ff::verify_integral_identities(checked, *profile, sc.params);

        rows.push_back({eq.active, eq.reactive, eq.voltage, eq.phase, ids.loss_balance_gap,
                        ids.phase_balance_gap});
        sizes.push_back(opt.n_intervals);
        std::cout << "n=" << opt.n_intervals;
        for (int c = 0; c < 6; ++c) {
            std::cout << ' ' << names[c] << '=' << ff::format_double(rows.back()[c]);
        }
        std::cout << "\n";
    }

    std::vector<std::string> failures;
    const std::array<double, 6>& finest = rows.back();
    for (int c = 0; c < 6; ++c) {
        bool ok = finest[c] <= kVerifyTolerance;
        double order = std::numeric_limits<double>::infinity();
        if (rows.size() >= 2) {
            order = ff::observed_order(rows[rows.size() - 2][c], finest[c]);
            std::cout << "order_" << names[c] << '=' << ff::format_double(order) << "\n";
            if (smooth && finest[c] > kOrderFloor && order < kMinimumOrder) ok = false;
        }
        if (!ok) failures.push_back(names[c]);
    }

    if (failures.empty()) {
        std::cout << "status=pass\n";
        return 0;
    }
    std::cout << "status=fail\n";
    std::cerr << "verification failed:";
    for (const std::string& name : failures) std::cerr << ' ' << name;
    std::cerr << "\n";
    return 4;
}

int run_compare(const std::string& ref, std::optional<int> grid) {
    const ff::Scenario sc = load_with_grid(ref, grid);
    const auto profile = sc.make_profile();

    std::vector<double> v_errs, theta_errs, loss_errs;
    std::cout << "scenario=" << sc.name << "\n";
    for (int level = 0; level < 3; ++level) {
        ff::SolverOptions opt = sc.solver;
        opt.n_intervals = sc.solver.n_intervals << level;
        const ff::SolveResult result = ff::solve_bvp(*profile, sc.params, opt);
        const ff::LadderNetwork net = ff::build_network(*profile, sc.params, opt.n_intervals);
        const ff::PowerflowResult flow = ff::solve_powerflow(net);
        if (!flow.converged) {
            std::cerr << "oracle disagreement: ladder power flow did not converge at n="
                      << opt.n_intervals << "\n";
            return 5;
        }
        const ff::OracleComparison cmp =
            ff::compare_to_continuum(result.grid, net, flow, sc.params);
        v_errs.push_back(cmp.v_err);
        theta_errs.push_back(cmp.theta_err);
        loss_errs.push_back(cmp.loss_err);
        std::cout << "n=" << opt.n_intervals << " v_err=" << ff::format_double(cmp.v_err)
                  << " theta_err=" << ff::format_double(cmp.theta_err)
                  << " loss_err=" << ff::format_double(cmp.loss_err)
                  << " power_balance_gap=" << ff::format_double(flow.power_balance_gap) << "\n";
    }

    std::vector<std::string> failures;
    auto monotone = [](const std::vector<double>& e) {
        for (std::size_t i = 1; i < e.size(); ++i) {
            if (e[i] > e[i - 1] + 1e-14) return false;
        }
        return true;
    };
    if (!monotone(v_errs)) failures.push_back("v_err not decreasing");
    if (!monotone(theta_errs)) failures.push_back("theta_err not decreasing");
    if (loss_errs.back() > kCompareLossTolerance) failures.push_back("final loss_err above 1e-2");

    if (failures.empty()) {
        std::cout << "status=pass\n";
        return 0;
    }
    std::cout << "status=fail\n";
    std::cerr << "oracle disagreement:";
    for (const std::string& f : failures) std::cerr << ' ' << f << ';';
    std::cerr << "\n";
    return 5;
}

int run_losses(const std::string& base_ref, const std::optional<std::string>& inject_ref) {
    const ff::Scenario base = ff::load_scenario(base_ref);
    const auto base_profile = base.make_profile();

    std::unique_ptr<ff::Profile> injection;
    if (inject_ref) {
        const ff::Scenario inj = ff::load_scenario(*inject_ref);
        if (!(inj.params == base.params)) {
            throw ff::ValidationError(
                "injection scenario must use the same feeder constants as the base");
        }
        injection = inj.make_profile();
    } else {
        injection = std::make_unique<ff::PowerProfile>(base.params.L, std::vector<ff::Segment>{},
                                                       std::vector<ff::Bump>{});
    }

    const ff::InjectionComparison cmp =
        ff::injection_evaluation(*base_profile, *injection, base.params, base.solver);

    std::vector<std::pair<std::string, std::string>> kv;
    auto add = [&](const char* key, const ff::LossBalanceSummary& s) {
        const std::string p = key;
        kv.emplace_back(p + "_total_loss", ff::format_double(s.total_loss));
        kv.emplace_back(p + "_supply_integral", ff::format_double(s.supply_integral));
        kv.emplace_back(p + "_v_gradient_0", ff::format_double(s.v_gradient_0));
        kv.emplace_back(p + "_balance_gap", ff::format_double(s.balance_gap));
    };
    kv.emplace_back("base_scenario", base.name);
    add("base", cmp.base);
    add("injected", cmp.injected);
    kv.emplace_back("loss_delta", ff::format_double(cmp.loss_delta));
    std::cout << ff::render_key_values(kv);
    return 0;
}

struct SweepSpec {
    std::string path;
    std::vector<double> values;
};

SweepSpec parse_sweep_spec(const std::string& text) {
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= text.size()) {
        throw ff::ValidationError("--param expects path=v1,v2,...");
    }
    SweepSpec spec;
    spec.path = text.substr(0, eq);
    std::size_t pos = eq + 1;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string token = text.substr(pos, comma - pos);
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc() || ptr != token.data() + token.size()) {
            throw ff::ValidationError("--param has a malformed number: '" + token + "'");
        }
        spec.values.push_back(value);
        pos = comma + 1;
    }
    if (spec.values.empty()) throw ff::ValidationError("--param lists no values");
    return spec;
}

std::string sweep_row(const ff::Scenario& base, const std::string& path, double value,
                      bool* succeeded) {
    std::string row = base.name + "," + path + "," + ff::format_double(value) + ",";
    try {
        ff::Scenario sc = base;
        ff::set_numeric_field(sc, path, value);
        sc.validate();
        const auto profile = sc.make_profile();
        const ff::SolveResult result = ff::solve_bvp(*profile, sc.params, sc.solver);
        const ff::LossDecomposition losses = ff::loss_decomposition(result.grid, sc.params);
        const ff::PhenomenaReport ph = ff::classify_phenomena(result.grid, *profile, sc.params);

        std::string flags;
        for (ff::Phenomenon f : ph.flags()) {
            if (!flags.empty()) flags += ';';
            flags += ff::to_string(f);
        }
        const int last = result.grid.intervals();
        row += "ok," + std::to_string(result.diagnostics.iterations) + ',' +
               ff::format_double(result.grid.v()[last]) + ',' +
               ff::format_double(result.grid.theta()[last]) + ',' +
               ff::format_double(ph.v_gradient_0) + ',' +
               ff::format_double(ph.theta_gradient_0) + ',' +
               ff::format_double(losses.total) + ',' + ff::format_double(losses.active) + ',' +
               ff::format_double(losses.reactive) + ',' + flags;
        *succeeded = true;
    } catch (const ff::NotConverged&) {
        row += "not_converged,,,,,,,,,";
    } catch (const ff::VoltageCollapse&) {
        row += "voltage_collapse,,,,,,,,,";
    } catch (const ff::FeederError&) {
        row += "invalid,,,,,,,,,";
    }
    return row + "\n";
}

int run_sweep(const std::string& ref, const std::string& param, int jobs) {
    const ff::Scenario base = ff::load_scenario(ref);
    const SweepSpec spec = parse_sweep_spec(param);

    std::vector<std::string> rows(spec.values.size());
    std::vector<char> ok(spec.values.size(), 0);
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= spec.values.size()) return;
            bool point_ok = false;
            rows[i] = sweep_row(base, spec.path, spec.values[i], &point_ok);
            ok[i] = point_ok ? 1 : 0;
        }
    };

    const int threads = std::clamp(jobs, 1, 64);
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    std::string csv =
        "scenario,param,value,status,iterations,v_terminal,theta_terminal,"
        "v_gradient_0,theta_gradient_0,total_loss,loss_active,loss_reactive,phenomena\n";
    for (const std::string& row : rows) csv += row;
    std::cout << csv;

    const bool any_ok = std::any_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    if (!any_ok) {
        std::cerr << "sweep: every point failed\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "feederflow: distribution-feeder voltage profiles, dissipation-identity checks, "
        "and ladder-circuit cross-validation"};
    app.require_subcommand(1);

    std::string scenario_ref;
    std::optional<int> grid;
    std::string out_dir = ".";
    int refinements = 2;
    double perturb = 0.0;
    std::optional<std::string> inject_ref;
    std::string param_spec;
    int jobs = 1;

    CLI::App* solve = app.add_subcommand("solve", "Solve a scenario; write CSV and report");
    solve->add_option("scenario", scenario_ref, "Scenario file or preset name")->required();
    solve->add_option("--grid", grid, "Override the grid interval count");
    solve->add_option("--out", out_dir, "Output directory")->capture_default_str();

    CLI::App* verify = app.add_subcommand(
        "verify", "Check the dissipation equalities and integral identities under refinement");
    verify->add_option("scenario", scenario_ref, "Scenario file or preset name")->required();
    verify->add_option("--grid", grid, "Override the base grid interval count");
    verify->add_option("--refine", refinements, "Number of grid doublings")
        ->capture_default_str()
        ->check(CLI::Range(0, 6));
    verify->add_option("--perturb", perturb,
                       "Fault-injection hook: offset v by this before verification");

    CLI::App* compare =
        app.add_subcommand("compare", "Cross-validate against the ladder circuit at n, 2n, 4n");
    compare->add_option("scenario", scenario_ref, "Scenario file or preset name")->required();
    compare->add_option("--grid", grid, "Override the base grid interval count");

    CLI::App* losses =
        app.add_subcommand("losses", "Report the loss balance, optionally with an injection");
    losses->add_option("scenario", scenario_ref, "Base scenario file or preset name")->required();
    losses->add_option("--inject", inject_ref, "Scenario whose profile is added to the base");

    CLI::App* sweep = app.add_subcommand("sweep", "Solve across a list of parameter values");
    sweep->add_option("scenario", scenario_ref, "Scenario file or preset name")->required();
    sweep->add_option("--param", param_spec, "Field sweep, e.g. feeder.b=-0.5,0,0.5,1")
        ->required();
    sweep->add_option("--jobs", jobs, "Parallel solves")->capture_default_str();

    try {
        app.parse(argc, argv);
        if (solve->parsed()) return run_solve(scenario_ref, grid, out_dir);
        if (verify->parsed()) return run_verify(scenario_ref, grid, refinements, perturb);
        if (compare->parsed()) return run_compare(scenario_ref, grid);
        if (losses->parsed()) return run_losses(scenario_ref, inject_ref);
        if (sweep->parsed()) return run_sweep(scenario_ref, param_spec, jobs);
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ff::NotConverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ff::VoltageCollapse& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ff::FeederError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
