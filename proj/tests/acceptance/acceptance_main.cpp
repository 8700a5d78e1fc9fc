// Acceptance suite.  Each numbered check prints one PASS/FAIL line with the
// measured quantity and its pinned threshold; the process exit code is the
// number of failures.  Checks that exercise the command-line interface shell
// out to the real binary with the committed configuration files.
//
// Usage: acceptance_tests <pairsim-cli> <configs-dir> <fixtures-dir>

#include "pairsim/metrics.hpp"
#include "pairsim/sagnac.hpp"
#include "support/oracles.hpp"

#include "json.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using std::numbers::pi;

namespace {

fs::path g_cli, g_configs, g_fixtures, g_scratch;
int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << number << ": " << name
              << " -- " << detail << " [" << seconds << " s]\n";
    if (!pass) ++g_failures;
}

class Timer {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int run_cli(const std::string& args) {
    const std::string cmd = g_cli.string() + " " + args + " > /dev/null 2> /dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

int run_cli_capture(const std::string& args, const fs::path& stdout_file) {
    const std::string cmd =
        g_cli.string() + " " + args + " > " + stdout_file.string() + " 2> /dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const fs::path& p) {
    CsvTable t;
    std::ifstream in(p, std::ios::binary);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            t.header = cells;
            first = false;
        } else {
            std::vector<double> row;
            for (const auto& c : cells) row.push_back(std::strtod(c.c_str(), nullptr));
            t.rows.push_back(row);
        }
    }
    return t;
}

std::string fmt(double x) {
    std::ostringstream ss;
    ss << x;
    return ss.str();
}

// --- criterion 1: analytic fringe law ---------------------------------

void criterion_1() {
    Timer timer;
    const pairsim::TwoPhotonState phi = pairsim::bell_phi_plus();
    double worst = 0.0;
    for (int i = 0; i < 360; ++i)
        for (int j = 0; j < 360; ++j) {
            const double t1 = i * pi / 180.0, t2 = j * pi / 180.0;
            const double want = 0.5 * std::pow(std::cos(t1 - t2), 2);
            worst = std::max(worst, std::abs(pairsim::coincidence_prob(phi, t1, t2) - want));
        }
    const double sec = timer.seconds();
    report(1, "analytic fringe law on the 1-degree grid", worst < 1e-12 && sec < 1.0,
           "max abs error " + fmt(worst) + " (limit 1e-12)", sec);
}

// --- criterion 2: bilateral half-wave-plate invariance -----------------

void criterion_2() {
    Timer timer;
    const pairsim::TwoPhotonState phi = pairsim::bell_phi_plus();
    const pairsim::TwoPhotonState rotated =
        pairsim::apply_both(pairsim::hwp(pi / 8.0), pairsim::hwp(pi / 8.0), phi);
    const double defect = std::abs(pairsim::fidelity(rotated, phi) - 1.0);
    const double sec = timer.seconds();
    report(2, "bilateral 22.5-degree plate invariance of the Bell state",
           defect <= 1e-12 && sec < 1.0, "fidelity defect " + fmt(defect) + " (limit 1e-12)",
           sec);
}

// --- criterion 3: non-degenerate visibility ----------------------------

void criterion_3() {
    Timer timer;
    const fs::path out = g_scratch / "c3";
    const int rc = run_cli("fringe " + (g_configs / "nondegenerate_tpi.cfg").string() +
                           " --out " + out.string() + " --workers 2");
    bool pass = rc == 0;
    std::string detail = "exit " + std::to_string(rc);
    if (pass) {
        const json fit = json::parse(read_file(out / "fit.json"));
        const double v = fit["fit"]["visibility"];
        const double sigma = fit["fit"]["visibility_sigma"];
        pass = v >= 0.91 && sigma <= 0.02;
        detail = "V = " + fmt(v) + " +- " + fmt(sigma) + " (need V >= 0.91, sigma <= 0.02)";
    }
    report(3, "non-degenerate visibility, 12 angles x 1e7 gates", pass, detail,
           timer.seconds());
}

// --- criterion 4: degenerate visibility --------------------------------

void criterion_4() {
    Timer timer;
    const fs::path out = g_scratch / "c4";
    const int rc = run_cli("fringe " + (g_configs / "degenerate_tpi.cfg").string() +
                           " --out " + out.string() + " --workers 2");
    bool pass = rc == 0;
    std::string detail = "exit " + std::to_string(rc);
    if (pass) {
        const json fit = json::parse(read_file(out / "fit.json"));
        const double v = fit["fit"]["visibility"];
        pass = v >= 0.77;  // 0.80 with the stated +-0.03 tolerance
        detail = "V = " + fmt(v) + " (need >= 0.77 = 0.80 - 0.03)";
    }
    report(4, "degenerate visibility at 288 uW per pump", pass, detail, timer.seconds());
}

// --- criterion 5: CAR peak ---------------------------------------------

void criterion_5() {
    Timer timer;
    const double calibration_power_uw = 45.0;  // CAR-peak noise calibration point
    const fs::path out = g_scratch / "c5";
    const int rc = run_cli("car-sweep " + (g_configs / "car_sweep.cfg").string() +
                           " --out " + out.string() + " --workers 2");
    bool pass = rc == 0;
    std::string detail = "exit " + std::to_string(rc);
    if (pass) {
        const CsvTable t = read_csv(out / "sweep.csv");
        std::size_t best = 0;
        for (std::size_t i = 0; i < t.rows.size(); ++i)
            if (t.rows[i][1] > t.rows[best][1]) best = i;
        const double car_peak = t.rows[best][1];
        const double power = t.rows[best][0];
        const bool interior = best > 0 && best + 1 < t.rows.size();
        const double factor = power / calibration_power_uw;
        pass = interior && car_peak >= 25.0 && car_peak <= 35.0 && factor <= 1.5 &&
               factor >= 1.0 / 1.5;
        detail = "max CAR " + fmt(car_peak) + " at " + fmt(power) + " uW (interior=" +
                 (interior ? "yes" : "no") + ", need CAR in [25,35] within 1.5x of " +
                 fmt(calibration_power_uw) + " uW)";
    }
    report(5, "CAR peak across the 10-300 uW sweep", pass, detail, timer.seconds());
}

// --- criterion 6: inequality violation ---------------------------------

void criterion_6() {
    Timer timer;
    const fs::path out = g_scratch / "c6";
    const int rc = run_cli("inequality " + (g_configs / "inequality.cfg").string() +
                           " --out " + out.string() + " --workers 2");
    bool pass = rc == 0;
    std::string detail = "exit " + std::to_string(rc);
    if (pass) {
        const json j = json::parse(read_file(out / "inequality.json"));
        const double lhs = j["lhs"];
        const double n_sigma = j["n_sigma"];
        pass = lhs > 0.0 && n_sigma >= 6.0 && lhs >= 1e-7 && lhs <= 1e-5;
        detail = "lhs = " + fmt(lhs) + " per gate, n_sigma = " + fmt(n_sigma) +
                 " (need > 0, >= 6 sigma, magnitude in [1e-7, 1e-5])";
    }
    report(6, "classical-inequality violation at the CAR peak, 4e8 gates", pass, detail,
           timer.seconds());
}

// --- criterion 7: classical bound --------------------------------------

void criterion_7() {
    Timer timer;
    bool pass = true;
    double worst = -1e9;
    for (int seed = 1; seed <= 20; ++seed) {
        const fs::path out = g_scratch / ("c7_" + std::to_string(seed));
        const int rc = run_cli("inequality " +
                               (g_configs / "classical_surrogate.cfg").string() + " --seed " +
                               std::to_string(seed) + " --out " + out.string() +
                               " --workers 2");
        if (rc != 0) {
            pass = false;
            break;
        }
        const json j = json::parse(read_file(out / "inequality.json"));
        const double n_sigma = j["n_sigma"];
        worst = std::max(worst, n_sigma);
        pass = pass && n_sigma <= 3.0;
    }
    report(7, "classical surrogate stays within the bound over 20 seeds", pass,
           "worst n_sigma " + fmt(worst) + " (limit 3)", timer.seconds());
}

// --- criterion 8: closed-form oracle equivalence ------------------------

void criterion_8() {
    Timer timer;
    bool pass = true;
    std::string detail;
    const pairsim::TwoPhotonState state = pairsim::bell_phi_plus();
    const pairsim::DetectorConfig det{0.35, 0.4, 2e-4, 780.0};
    const pairsim::AnalyzerSetting an{0.2, 0.8, 0.0};
    const double nu = 1e-3;
    const std::uint64_t gates = 1000000;
    for (double mu : {0.01, 0.08, 0.12}) {
        const pairsim::CountRecord rec =
            pairsim::run_gates(gates, state, mu, nu, an, det,
                               pairsim::ExperimentKind::SignalIdler,
                               {.seed = 4242 + static_cast<std::uint64_t>(mu * 1000)});
        const double q1 = pairsim::single_pass_prob(state, 1, an.effective1());
        const double q2 = pairsim::single_pass_prob(state, 2, an.effective2());
        const double joint =
            pairsim::coincidence_prob(state, an.effective1(), an.effective2());
        const auto want = oracles::signal_idler_rates(mu, joint, q1, q2, nu, 0.5, 0.5,
                                                      det.eta_idler, det.eta_signal,
                                                      det.dark_prob, det.dark_prob);
        const double g = static_cast<double>(gates);
        const auto within = [&](std::uint64_t got, double mean, const char* what) {
            const double dev =
                std::abs(static_cast<double>(got) - mean * g) / std::sqrt(mean * g + 1.0);
            if (dev > 3.0) {
                pass = false;
                detail += std::string(what) + " off by " + fmt(dev) + " sigma at mu " +
                          fmt(mu) + "; ";
            }
        };
        within(rec.singles_1, want.p1, "singles_1");
        within(rec.singles_2, want.p2, "singles_2");
        within(rec.coincidences, want.pcoinc, "coincidences");
        within(rec.accidentals_estimate, want.pacc, "accidentals");
    }
    if (detail.empty()) detail = "all rates within 3 sigma at mu in {0.01, 0.08, 0.12}";
    report(8, "Monte Carlo matches the closed-form rate model", pass, detail,
           timer.seconds());
}

// --- criterion 9: quadratic scaling -------------------------------------

void criterion_9() {
    Timer timer;
    pairsim::SourceParams params;
    pairsim::ChannelPlan plan;
    pairsim::Rng rng = pairsim::Rng::seeded(909);

    const int n = 1000000;
    double sum_p = 0.0, sum_2p = 0.0;
    const double mu_p = pairsim::mean_pairs(params, plan, 100.0);
    const double mu_2p = pairsim::mean_pairs(params, plan, 200.0);
    for (int i = 0; i < n; ++i) sum_p += pairsim::sample_pair_count(mu_p, rng);
    for (int i = 0; i < n; ++i) sum_2p += pairsim::sample_pair_count(mu_2p, rng);
    const double ratio = sum_2p / sum_p;
    const bool ratio_ok = ratio >= 4.0 * 0.95 && ratio <= 4.0 * 1.05;

    // Accidental scaling across a decade of mu, noise- and dark-free.
    const pairsim::DetectorConfig det{1.0, 1.0, 0.0, 780.0};
    double lx[2], ly[2];
    int idx = 0;
    for (double mu : {0.01, 0.1}) {
        const pairsim::CountRecord rec = pairsim::run_gates(
            1000000, pairsim::bell_phi_plus(), mu, 0.0, {}, det,
            pairsim::ExperimentKind::SignalIdler,
            {.seed = 11000 + static_cast<std::uint64_t>(idx)});
        lx[idx] = std::log(mu);
        ly[idx] = std::log(static_cast<double>(rec.accidentals_estimate));
        ++idx;
    }
    const double exponent = (ly[1] - ly[0]) / (lx[1] - lx[0]);
    const bool exp_ok = std::abs(exponent - 2.0) <= 0.3;

    report(9, "quadratic pair scaling and accidental power law", ratio_ok && exp_ok,
           "mean ratio at 2P vs P = " + fmt(ratio) + " (need 4 +- 5%), accidental exponent " +
               fmt(exponent) + " (need 2 +- 0.3)",
           timer.seconds());
}

// --- criterion 10: parser round-trip, golden file, error corpus ---------

void criterion_10() {
    Timer timer;
    bool pass = true;
    std::string detail;

    pairsim::Rng rng = pairsim::Rng::seeded(321321);
    int failures = 0;
    for (int i = 0; i < 1000; ++i) {
        const pairsim::ExperimentPlan plan = oracles::random_plan(rng);
        const std::string text = pairsim::serialize_plan(plan);
        const pairsim::ParseResult r = pairsim::parse_plan(text);
        if (!r.ok() || !(*r.plan == plan) || pairsim::serialize_plan(*r.plan) != text)
            ++failures;
    }
    if (failures > 0) {
        pass = false;
        detail += std::to_string(failures) + "/1000 round-trips failed; ";
    }

    const std::string golden = read_file(g_fixtures / "golden_default.cfg");
    if (pairsim::serialize_plan(pairsim::default_plan()) != golden) {
        pass = false;
        detail += "default plan does not serialize to the golden bytes; ";
    } else {
        const pairsim::ParseResult r = pairsim::parse_plan(golden);
        if (!r.ok() || pairsim::serialize_plan(*r.plan) != golden) {
            pass = false;
            detail += "golden file does not round-trip byte-identically; ";
        }
    }

    const std::vector<std::pair<std::string, pairsim::DiagCode>> corpus = {
        {"syntax_error.cfg", pairsim::DiagCode::SyntaxError},
        {"unknown_section.cfg", pairsim::DiagCode::UnknownSection},
        {"unknown_key.cfg", pairsim::DiagCode::UnknownKey},
        {"duplicate_key.cfg", pairsim::DiagCode::DuplicateKey},
        {"duplicate_section.cfg", pairsim::DiagCode::DuplicateSection},
        {"invalid_value.cfg", pairsim::DiagCode::InvalidValue},
        {"out_of_range.cfg", pairsim::DiagCode::OutOfRange},
        {"missing_section.cfg", pairsim::DiagCode::MissingSection},
        {"wrong_pump_count.cfg", pairsim::DiagCode::WrongPumpCount},
        {"invalid_plan.cfg", pairsim::DiagCode::InvalidPlan},
        {"unsupported_version.cfg", pairsim::DiagCode::UnsupportedVersion},
        {"warn_angle_normalized.cfg", pairsim::DiagCode::AngleNormalized},
        {"warn_phase_match.cfg", pairsim::DiagCode::PhaseMatchSuboptimal},
        {"warn_key_ignored.cfg", pairsim::DiagCode::KeyIgnored},
    };
    for (const auto& [file, code] : corpus) {
        const pairsim::ParseResult r =
            pairsim::parse_plan(read_file(g_fixtures / "errors" / file));
        bool found = false;
        bool located = true;
        for (const auto& d : r.diagnostics) {
            if (d.code == code) found = true;
            located = located && d.line >= 1 && d.col >= 1;
        }
        const bool warning = file.rfind("warn_", 0) == 0;
        if (!found || !located || (warning ? !r.ok() : r.ok())) {
            pass = false;
            detail += file + " did not produce " + pairsim::diag_code_name(code) + "; ";
        }
        // The CLI maps config errors to exit code 2.
        if (!warning) {
            const int rc = run_cli("validate " + (g_fixtures / "errors" / file).string());
            if (rc != 2) {
                pass = false;
                detail += file + " exit " + std::to_string(rc) + " != 2; ";
            }
        }
    }
    // Exit-code contract: validate echoes the golden file byte-for-byte with
    // exit 0; runtime guards report exit 3.
    const fs::path echo = g_scratch / "golden_echo.cfg";
    if (run_cli_capture("validate " + (g_fixtures / "golden_default.cfg").string(), echo) !=
            0 ||
        read_file(echo) != golden) {
        pass = false;
        detail += "validate echo of the golden config is not byte-identical; ";
    }
    if (run_cli("fringe " + (g_fixtures / "illposed_fringe.cfg").string() + " --out " +
                (g_scratch / "c10_illposed").string()) != 3) {
        pass = false;
        detail += "ill-posed fringe did not exit 3; ";
    }
    if (run_cli("inequality " + (g_configs / "repro_inequality.cfg").string() +
                " --gates 0 --out " + (g_scratch / "c10_zero").string()) != 3) {
        pass = false;
        detail += "zero-gates guard did not exit 3; ";
    }

    if (detail.empty())
        detail = "1000 round-trips, golden bytes, 14 diagnostic fixtures, exit codes all good";
    report(10, "parser round-trip identity, golden file, error corpus", pass, detail,
           timer.seconds());
}

// --- criterion 11: worker-count reproducibility -------------------------

void criterion_11() {
    Timer timer;
    bool pass = true;
    std::string detail;

    struct Case {
        const char* subcommand;
        const char* config;
        std::vector<const char*> outputs;
    };
    const std::vector<Case> cases = {
        {"fringe", "repro_fringe.cfg", {"points.csv", "fit.json"}},
        {"car-sweep", "repro_sweep.cfg", {"sweep.csv", "report.json"}},
        {"inequality", "repro_inequality.cfg", {"inequality.json"}},
    };
    for (const auto& c : cases) {
        const fs::path a = g_scratch / (std::string("c11_") + c.subcommand + "_w1a");
        const fs::path b = g_scratch / (std::string("c11_") + c.subcommand + "_w1b");
        const fs::path d = g_scratch / (std::string("c11_") + c.subcommand + "_w4");
        const std::string cfg = (g_configs / c.config).string();
        const std::string base = std::string(c.subcommand) + " " + cfg + " --out ";
        if (run_cli(base + a.string() + " --workers 1") != 0 ||
            run_cli(base + b.string() + " --workers 1") != 0 ||
            run_cli(base + d.string() + " --workers 4") != 0) {
            pass = false;
            detail += std::string(c.subcommand) + " failed to run; ";
            continue;
        }
        for (const char* file : c.outputs) {
            const std::string fa = read_file(a / file);
            if (fa.empty()) {
                pass = false;
                detail += std::string(c.subcommand) + "/" + file + " empty; ";
            }
            if (fa != read_file(b / file) || fa != read_file(d / file)) {
                pass = false;
                detail += std::string(c.subcommand) + "/" + file + " differs across runs; ";
            }
        }
    }
    if (detail.empty())
        detail = "fringe, car-sweep and inequality outputs byte-identical for workers 1/1/4";
    report(11, "fixed seed gives byte-identical outputs across worker counts", pass, detail,
           timer.seconds());
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 4) {
        std::cerr << "usage: acceptance_tests <pairsim-cli> <configs-dir> <fixtures-dir>\n";
        return 64;
    }
    g_cli = argv[1];
    g_configs = argv[2];
    g_fixtures = argv[3];
    g_scratch =
        fs::temp_directory_path() / ("pairsim_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(g_scratch);

    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();

    std::error_code ec;
    fs::remove_all(g_scratch, ec);

    if (g_failures == 0)
        std::cout << "ALL CRITERIA PASSED\n";
    else
        std::cout << "FAILURES: " << g_failures << "\n";
    return g_failures;
}
