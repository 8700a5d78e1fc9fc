// pairsim — command-line front end.
//
// Subcommands load an experiment plan, run the requested simulation or
// analysis, and write CSV/JSON result files under --out.  Result files are
// byte-identical for a fixed seed regardless of worker count; anything
// run-dependent (wall time, worker count) goes to stdout only.

#include "pairsim/config.hpp"
#include "pairsim/driver.hpp"
#include "pairsim/metrics.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> gates;
    int workers = 1;
    bool classical_surrogate = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_format = true) {
    cmd->add_option("config", args.config_path, "experiment plan file")->required();
    cmd->add_option("--seed", args.seed, "override the plan seed");
    cmd->add_option("--gates", args.gates, "override gates per point");
    cmd->add_option("--workers", args.workers, "worker threads (results are worker-invariant)")
        ->check(CLI::Range(1, 256));
    cmd->add_option("--out", args.out_dir, "output directory");
    if (with_format)
        cmd->add_option("--format", args.format, "point data format")
            ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_flag("--classical-surrogate", args.classical_surrogate,
                  "replace pair correlations with independent Poissonian streams");
}

void print_diagnostics(const std::string& path, const pairsim::ParseResult& result,
                       std::ostream& os) {
    for (const auto& d : result.diagnostics) {
        os << path << ":" << d.line << ":" << d.col << ": "
           << (d.severity == pairsim::Severity::Error ? "error" : "warning") << " "
           << pairsim::diag_code_name(d.code) << ": " << d.message << "\n";
    }
}

// Loads and validates the plan; on failure prints diagnostics to stderr and
// exits with the config error code.
pairsim::ExperimentPlan load_plan_or_exit(const CommonArgs& args,
                                          std::vector<std::string>& overrides) {
    std::ifstream in(args.config_path, std::ios::binary);
    if (!in) {
        std::cerr << args.config_path << ": error: cannot open config file\n";
        std::exit(kExitConfig);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    auto result = pairsim::parse_plan(buf.str());
    print_diagnostics(args.config_path, result, std::cerr);
    if (!result.ok()) std::exit(kExitConfig);

    pairsim::ExperimentPlan plan = *result.plan;
    if (args.seed) {
        plan.seed = *args.seed;
        overrides.push_back("seed=" + std::to_string(*args.seed));
    }
    if (args.gates) {
        plan.gates = *args.gates;
        overrides.push_back("gates=" + std::to_string(*args.gates));
    }
    if (args.classical_surrogate) {
        plan.classical_surrogate = true;
        overrides.push_back("classical_surrogate=on");
    }
    return plan;
}

std::string fmt_num(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

std::string fmt_deg(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return std::string(buf);
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void write_json(const fs::path& path, const ordered_json& j) {
    write_file(path, j.dump(2) + "\n");
}

std::vector<double> linspace(double start, double stop, std::uint32_t steps) {
    std::vector<double> out(steps);
    for (std::uint32_t i = 0; i < steps; ++i)
        out[i] = start + (stop - start) * static_cast<double>(i) /
                             static_cast<double>(steps - 1);
    return out;
}

ordered_json record_json(const pairsim::CountRecord& rec) {
    return ordered_json{{"gates", rec.gates},
                        {"singles_1", rec.singles_1},
                        {"singles_2", rec.singles_2},
                        {"coincidences", rec.coincidences},
                        {"accidentals", rec.accidentals_estimate}};
}

struct StdoutReport {
    std::string command;
    std::vector<std::string> overrides;
    int workers = 1;
    std::uint64_t seed = 0;
    double wall_ms = 0.0;
    std::vector<std::string> lines;

    void print() const {
        std::cout << "command: " << command << "\n";
        std::cout << "seed: " << seed << "\nworkers: " << workers << "\n";
        if (!overrides.empty()) {
            std::cout << "overrides:";
            for (const auto& o : overrides) std::cout << " " << o;
            std::cout << "\n";
        }
        for (const auto& l : lines) std::cout << l << "\n";
        std::cout << "wall_time_ms: " << fmt_num(wall_ms) << "\n";
    }
};

int cmd_validate(const CommonArgs& args) {
    std::ifstream in(args.config_path, std::ios::binary);
    if (!in) {
        std::cerr << args.config_path << ": error: cannot open config file\n";
        return kExitConfig;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    auto result = pairsim::parse_plan(buf.str());
    print_diagnostics(args.config_path, result, result.ok() ? std::cout : std::cerr);
    if (!result.ok()) return kExitConfig;
    std::cout << pairsim::serialize_plan(*result.plan);
    return 0;
}

int cmd_fringe(const CommonArgs& args) {
    std::vector<std::string> overrides;
    pairsim::ExperimentPlan plan = load_plan_or_exit(args, overrides);
    if (!plan.sweep || plan.sweep->variable != pairsim::SweepVariable::Theta2) {
        std::cerr << args.config_path
                  << ": error: fringe needs a [sweep] section with variable = theta2\n";
        return kExitConfig;
    }
    if (plan.kind != pairsim::ExperimentKind::SignalIdler &&
        plan.kind != pairsim::ExperimentKind::DegeneratePostselected) {
        std::cerr << args.config_path
                  << ": error: fringe needs kind = signal_idler or degenerate\n";
        return kExitConfig;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto angles_deg = linspace(plan.sweep->start, plan.sweep->stop, plan.sweep->steps);

    pairsim::FringeDataset ds;
    const pairsim::AnalyzerSetting base = pairsim::analyzer_setting(plan);
    ds.theta1 = base.effective1();

    std::vector<std::pair<double, pairsim::CountRecord>> rows;
    try {
        for (std::size_t i = 0; i < angles_deg.size(); ++i) {
            pairsim::AnalyzerSetting a = base;
            a.theta2 = pairsim::deg2rad(angles_deg[i]);
            const std::uint64_t point_seed = pairsim::derive_seed(plan.seed, i);
            const pairsim::CountRecord rec =
                pairsim::run_plan_kind(plan, plan.kind, plan.pump.avg_power_uw, plan.gates,
                                       point_seed, args.workers, &a);
            rows.emplace_back(angles_deg[i], rec);
            ds.points.push_back({a.effective2(), rec});
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }

    pairsim::FringeFit fit;
    try {
        fit = pairsim::visibility_fit(ds);
    } catch (const pairsim::IllPosedFitError& e) {
        std::cerr << "error: ill-posed fit: " << e.what() << "\n";
        return kExitRuntime;
    }

    const fs::path out_dir{args.out_dir};
    if (args.format == "csv") {
        std::string csv = "theta2_deg,singles1,singles2,coincidences,accidentals\r\n";
        for (const auto& [deg, rec] : rows) {
            csv += fmt_deg(deg);
            csv += "," + std::to_string(rec.singles_1);
            csv += "," + std::to_string(rec.singles_2);
            csv += "," + std::to_string(rec.coincidences);
            csv += "," + std::to_string(rec.accidentals_estimate);
            csv += "\r\n";
        }
        write_file(out_dir / "points.csv", csv);
    } else {
        ordered_json pts = ordered_json::array();
        for (const auto& [deg, rec] : rows) {
            ordered_json row = record_json(rec);
            row.erase("gates");
            row["theta2_deg"] = deg;
            pts.push_back(std::move(row));
        }
        write_json(out_dir / "points.json", pts);
    }

    ordered_json jfit{{"A", fit.amplitude},
                      {"B", fit.offset},
                      {"phase_rad", fit.phase},
                      {"visibility", fit.visibility},
                      {"visibility_sigma", fit.visibility_sigma},
                      {"chi2_per_dof", fit.chi2_per_dof}};
    ordered_json top{{"fit", jfit},
                     {"theta1_deg", plan.analyzers.theta1_deg},
                     {"gates_per_point", plan.gates},
                     {"seed", plan.seed},
                     {"plan", pairsim::serialize_plan(plan)}};
    write_json(out_dir / "fit.json", top);

    StdoutReport rep;
    rep.command = "fringe";
    rep.overrides = overrides;
    rep.workers = args.workers;
    rep.seed = plan.seed;
    rep.lines.push_back("visibility: " + fmt_num(fit.visibility) + " +- " +
                        fmt_num(fit.visibility_sigma));
    rep.lines.push_back("chi2_per_dof: " + fmt_num(fit.chi2_per_dof));
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    rep.print();
    return 0;
}

int cmd_car_sweep(const CommonArgs& args) {
    std::vector<std::string> overrides;
    pairsim::ExperimentPlan plan = load_plan_or_exit(args, overrides);
    if (!plan.sweep || plan.sweep->variable != pairsim::SweepVariable::Power) {
        std::cerr << args.config_path
                  << ": error: car-sweep needs a [sweep] section with variable = power\n";
        return kExitConfig;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto powers = linspace(plan.sweep->start, plan.sweep->stop, plan.sweep->steps);

    std::vector<pairsim::SweepPoint> points;
    try {
        points = pairsim::car_power_sweep(plan, powers, plan.gates, args.workers);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }

    const fs::path out_dir{args.out_dir};
    if (args.format == "csv") {
        std::string csv = "power_uw,car,car_err,lhs,lhs_sigma,n_sigma\r\n";
        for (const auto& p : points) {
            csv += fmt_num(p.power_uw);
            csv += "," + (p.car.defined ? fmt_num(p.car.value) : std::string("nan"));
            csv += "," + (p.car.defined ? fmt_num(p.car.sigma) : std::string("nan"));
            csv += "," + fmt_num(p.inequality.lhs);
            csv += "," + fmt_num(p.inequality.sigma);
            csv += "," + fmt_num(p.inequality.n_sigma);
            csv += "\r\n";
        }
        write_file(out_dir / "sweep.csv", csv);
    } else {
        ordered_json arr = ordered_json::array();
        for (const auto& p : points) {
            arr.push_back(ordered_json{
                {"power_uw", p.power_uw},
                {"car", p.car.defined ? ordered_json(p.car.value) : ordered_json(nullptr)},
                {"car_err", p.car.defined ? ordered_json(p.car.sigma) : ordered_json(nullptr)},
                {"lhs", p.inequality.lhs},
                {"lhs_sigma", p.inequality.sigma},
                {"n_sigma", p.inequality.n_sigma}});
        }
        write_json(out_dir / "sweep.json", arr);
    }
    write_json(out_dir / "report.json",
               ordered_json{{"command", "car-sweep"},
                            {"gates_per_point", plan.gates},
                            {"seed", plan.seed},
                            {"plan", pairsim::serialize_plan(plan)}});

    double best_car = 0.0, best_power = 0.0;
    for (const auto& p : points)
        if (p.car.defined && p.car.value > best_car) {
            best_car = p.car.value;
            best_power = p.power_uw;
        }

    StdoutReport rep;
    rep.command = "car-sweep";
    rep.overrides = overrides;
    rep.workers = args.workers;
    rep.seed = plan.seed;
    rep.lines.push_back("points: " + std::to_string(points.size()));
    rep.lines.push_back("max_car: " + fmt_num(best_car) + " at " + fmt_num(best_power) + " uW");
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    rep.print();
    return 0;
}

int cmd_inequality(const CommonArgs& args) {
    std::vector<std::string> overrides;
    pairsim::ExperimentPlan plan = load_plan_or_exit(args, overrides);

    const auto t0 = std::chrono::steady_clock::now();
    pairsim::CountRecord si, ss, is;
    pairsim::InequalityResult res;
    try {
        const double power = plan.pump.avg_power_uw;
        const std::uint64_t point_seed = pairsim::derive_seed(plan.seed, 0);
        si = pairsim::run_plan_kind(plan, pairsim::ExperimentKind::SignalIdler, power,
                                    plan.gates, point_seed, args.workers);
        ss = pairsim::run_plan_kind(plan, pairsim::ExperimentKind::SignalSplit, power,
                                    plan.gates, point_seed, args.workers);
        is = pairsim::run_plan_kind(plan, pairsim::ExperimentKind::IdlerSplit, power,
                                    plan.gates, point_seed, args.workers);
        res = pairsim::zou_mandel_lhs(si, ss, is);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }

    write_json(fs::path{args.out_dir} / "inequality.json",
               ordered_json{{"lhs", res.lhs},
                            {"sigma", res.sigma},
                            {"n_sigma", res.n_sigma},
                            {"signal_idler", record_json(si)},
                            {"signal_split", record_json(ss)},
                            {"idler_split", record_json(is)},
                            {"seed", plan.seed},
                            {"plan", pairsim::serialize_plan(plan)}});

    StdoutReport rep;
    rep.command = "inequality";
    rep.overrides = overrides;
    rep.workers = args.workers;
    rep.seed = plan.seed;
    rep.lines.push_back("lhs: " + fmt_num(res.lhs) + " +- " + fmt_num(res.sigma) +
                        " (n_sigma " + fmt_num(res.n_sigma) + ")");
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    rep.print();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"photon-pair source simulator: Sagnac-loop entanglement, gated"
                 " coincidence counting, and the derived figures of merit"};
    app.require_subcommand(1);

    CommonArgs validate_args, fringe_args, sweep_args, ineq_args;
    CLI::App* validate = app.add_subcommand("validate", "parse a plan and echo canonical form");
    validate->add_option("config", validate_args.config_path, "experiment plan file")->required();
    CLI::App* fringe = app.add_subcommand("fringe", "two-photon interference fringe + fit");
    add_common(fringe, fringe_args);
    CLI::App* sweep = app.add_subcommand("car-sweep", "CAR and inequality vs pump power");
    add_common(sweep, sweep_args);
    CLI::App* ineq = app.add_subcommand("inequality", "classical-inequality statistic");
    add_common(ineq, ineq_args, /*with_format=*/false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(validate_args);
        if (fringe->parsed()) return cmd_fringe(fringe_args);
        if (sweep->parsed()) return cmd_car_sweep(sweep_args);
        if (ineq->parsed()) return cmd_inequality(ineq_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
