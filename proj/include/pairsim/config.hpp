// Experiment description files: parse, validate, default-fill, and serialize
// back to canonical text.
//
// The format is line-oriented: `[section]` headers, `key = value` pairs, `#`
// comments.  Unknown sections and keys are errors, not warnings: these files
// carry calibration numbers, and a typo that silently falls back to a default
// is worse than a failed run.  Units ride in the key names (avg_power_uw,
// theta2_deg, signal_nm), so no value is ever unit-ambiguous.
//
// Canonical form: sections in fixed order, keys byte-wise sorted, angles in
// degrees with six decimals, other numbers in shortest round-trip notation.
// Angles are reduced mod 360 and quantized to 1e-6 degrees at parse time, so
// parse(serialize(p)) == p holds exactly.

#pragma once

#include "pairsim/detection.hpp"
#include "pairsim/sagnac.hpp"
#include "pairsim/source.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace pairsim {

enum class Severity { Error, Warning };

enum class DiagCode {
    SyntaxError,
    UnknownSection,
    UnknownKey,
    DuplicateKey,
    DuplicateSection,
    InvalidValue,
    OutOfRange,
    MissingSection,
    WrongPumpCount,
    InvalidPlan,
    UnsupportedVersion,
    AngleNormalized,
    PhaseMatchSuboptimal,
    KeyIgnored,
};

inline const char* diag_code_name(DiagCode c) {
    switch (c) {
        case DiagCode::SyntaxError: return "SYNTAX_ERROR";
        case DiagCode::UnknownSection: return "UNKNOWN_SECTION";
        case DiagCode::UnknownKey: return "UNKNOWN_KEY";
        case DiagCode::DuplicateKey: return "DUPLICATE_KEY";
        case DiagCode::DuplicateSection: return "DUPLICATE_SECTION";
        case DiagCode::InvalidValue: return "INVALID_VALUE";
        case DiagCode::OutOfRange: return "OUT_OF_RANGE";
        case DiagCode::MissingSection: return "MISSING_SECTION";
        case DiagCode::WrongPumpCount: return "WRONG_PUMP_COUNT";
        case DiagCode::InvalidPlan: return "INVALID_PLAN";
        case DiagCode::UnsupportedVersion: return "UNSUPPORTED_VERSION";
        case DiagCode::AngleNormalized: return "ANGLE_NORMALIZED";
        case DiagCode::PhaseMatchSuboptimal: return "PHASE_MATCH_SUBOPTIMAL";
        case DiagCode::KeyIgnored: return "KEY_IGNORED";
    }
    return "UNKNOWN";
}

struct Diagnostic {
    Severity severity = Severity::Error;
    DiagCode code = DiagCode::SyntaxError;
    int line = 0;  // 1-based
    int col = 0;   // 1-based
    std::string message;
};

enum class SweepVariable { Theta2, Power };

struct SweepSpec {
    SweepVariable variable = SweepVariable::Theta2;
    double start = 0.0;
    double stop = 180.0;
    std::uint32_t steps = 12;

    bool operator==(const SweepSpec&) const = default;
};

struct LoopSettings {
    double hwp1_deg = 22.5;
    double qwp1_deg = 0.0;
    double loop_phase_deg = 0.0;
    double residual_rot1_deg = 0.0;
    double residual_rot2_deg = 0.0;

    bool operator==(const LoopSettings&) const = default;
};

struct AnalyzerSettings {
    double theta1_deg = 0.0;
    double theta2_deg = 0.0;
    bool compensation = false;

    bool operator==(const AnalyzerSettings&) const = default;
};

// Fully defaulted, validated description of a run.  Angles are stored in
// degrees (the on-disk unit) and converted to radians by the run drivers.
struct ExperimentPlan {
    PumpConfig pump;
    std::optional<double> pump_power2_uw;  // degenerate second pump; empty = equal
    ChannelPlan channels;
    SourceParams source;
    LoopSettings loop;
    DetectorConfig detectors;
    ExperimentKind kind = ExperimentKind::SignalIdler;
    AnalyzerSettings analyzers;
    std::optional<SweepSpec> sweep;
    std::uint64_t gates = 1000000;
    std::uint64_t seed = 1;
    bool classical_surrogate = false;
    int format_version = 1;
};

inline bool operator==(const PumpConfig& a, const PumpConfig& b) {
    return a.center_wavelength_nm == b.center_wavelength_nm &&
           a.pulse_duration_ps == b.pulse_duration_ps && a.rep_rate_mhz == b.rep_rate_mhz &&
           a.avg_power_uw == b.avg_power_uw;
}

inline bool operator==(const ChannelPlan& a, const ChannelPlan& b) {
    return a.kind == b.kind && a.pump_wavelengths_nm == b.pump_wavelengths_nm &&
           a.signal_nm == b.signal_nm && a.idler_nm == b.idler_nm &&
           a.signal_filter_fwhm_nm == b.signal_filter_fwhm_nm &&
           a.idler_filter_fwhm_nm == b.idler_filter_fwhm_nm;
}

inline bool operator==(const SourceParams& a, const SourceParams& b) {
    return a.kappa_pairs_per_uw2 == b.kappa_pairs_per_uw2 &&
           a.raman_per_uw == b.raman_per_uw && a.ase_floor == b.ase_floor &&
           a.noise_polarized_fraction == b.noise_polarized_fraction;
}

inline bool operator==(const DetectorConfig& a, const DetectorConfig& b) {
    return a.eta_signal == b.eta_signal && a.eta_idler == b.eta_idler &&
           a.dark_prob == b.dark_prob && a.gate_rate_khz == b.gate_rate_khz;
}

inline bool operator==(const ExperimentPlan& a, const ExperimentPlan& b) {
    return a.pump == b.pump && a.pump_power2_uw == b.pump_power2_uw &&
           a.channels == b.channels && a.source == b.source && a.loop == b.loop &&
           a.detectors == b.detectors && a.kind == b.kind && a.analyzers == b.analyzers &&
           a.sweep == b.sweep && a.gates == b.gates && a.seed == b.seed &&
           a.classical_surrogate == b.classical_surrogate &&
           a.format_version == b.format_version;
}

inline ExperimentPlan default_plan() { return {}; }

struct ParseResult {
    std::optional<ExperimentPlan> plan;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return plan.has_value(); }

    const Diagnostic* first_error() const {
        for (const auto& d : diagnostics)
            if (d.severity == Severity::Error) return &d;
        return nullptr;
    }
};

namespace detail_config {

inline double quantize6(double x) {
    double q = std::round(x * 1e6) / 1e6;
    return q + 0.0;  // flush -0.0
}

inline double mod360(double x) {
    double m = std::fmod(x, 360.0);
    if (m < 0.0) m += 360.0;
    return m;
}

inline std::string fmt_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string fmt_angle(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return std::string(buf);
}

inline std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return s.substr(b, e - b);
}

struct KeyLoc {
    int line = 0;
    int col = 0;
};

class PlanParser {
  public:
    ParseResult run(std::string_view text) {
        plan_ = default_plan();
        parse_lines(text);
        finalize();
        ParseResult result;
        result.diagnostics = std::move(diags_);
        bool has_error = false;
        for (const auto& d : result.diagnostics)
            if (d.severity == Severity::Error) has_error = true;
        if (!has_error) result.plan = plan_;
        return result;
    }

  private:
    void error(DiagCode code, int line, int col, std::string msg) {
        diags_.push_back({Severity::Error, code, line, col, std::move(msg)});
    }
    void warn(DiagCode code, int line, int col, std::string msg) {
        diags_.push_back({Severity::Warning, code, line, col, std::move(msg)});
    }

    void parse_lines(std::string_view text) {
        int line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            if (pos == text.size() && line_no > 0) break;
            std::size_t eol = text.find('\n', pos);
            std::string_view raw = (eol == std::string_view::npos)
                                       ? text.substr(pos)
                                       : text.substr(pos, eol - pos);
            pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
            ++line_no;
            last_line_ = line_no;
            if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

            const std::size_t hash = raw.find('#');
            std::string_view body = (hash == std::string_view::npos) ? raw : raw.substr(0, hash);
            std::string_view t = trim(body);
            if (t.empty()) continue;

            const int first_col = static_cast<int>(body.find_first_not_of(" \t")) + 1;
            if (t.front() == '[') {
                handle_section(t, line_no, first_col);
            } else {
                handle_pair(body, t, line_no, first_col);
            }
            if (eol == std::string_view::npos) break;
        }
    }

    void handle_section(std::string_view t, int line, int col) {
        if (t.back() != ']') {
            error(DiagCode::SyntaxError, line, col, "section header is missing ']'");
            section_.clear();
            return;
        }
        std::string name{trim(t.substr(1, t.size() - 2))};
        static const std::set<std::string> known = {
            "pump", "channels", "source", "loop", "detectors", "experiment", "sweep"};
        if (!known.count(name)) {
            error(DiagCode::UnknownSection, line, col, "unknown section [" + name + "]");
            section_.clear();
            return;
        }
        if (!sections_seen_.insert(name).second) {
            error(DiagCode::DuplicateSection, line, col, "section [" + name + "] appears twice");
            section_.clear();
            return;
        }
        section_ = name;
        if (name == "sweep" && !plan_.sweep) plan_.sweep = SweepSpec{};
    }

    void handle_pair(std::string_view body, std::string_view t, int line, int col) {
        const std::size_t eq = t.find('=');
        if (eq == std::string_view::npos) {
            error(DiagCode::SyntaxError, line, col, "expected `key = value`");
            return;
        }
        if (section_.empty()) {
            error(DiagCode::SyntaxError, line, col, "key outside of any section");
            return;
        }
        std::string key{trim(t.substr(0, eq))};
        std::string value{trim(t.substr(eq + 1))};
        const std::size_t val_off = body.find(value.empty() ? "=" : value, body.find('='));
        const int val_col = static_cast<int>(val_off) + (value.empty() ? 2 : 1);
        if (key.empty()) {
            error(DiagCode::SyntaxError, line, col, "empty key");
            return;
        }
        if (value.empty()) {
            error(DiagCode::SyntaxError, line, val_col, "empty value");
            return;
        }
        const std::string path = section_ + "." + key;
        if (!keys_seen_.insert(path).second) {
            error(DiagCode::DuplicateKey, line, col, "duplicate key `" + key + "`");
            return;
        }
        key_locs_[path] = {line, val_col};
        dispatch(key, value, line, col, val_col);
    }

    // --- typed value readers -------------------------------------------

    std::optional<double> read_double(const std::string& value, int line, int col) {
        double out = 0.0;
        const char* b = value.data();
        const char* e = b + value.size();
        auto [ptr, ec] = std::from_chars(b, e, out);
        if (ec != std::errc{} || ptr != e || !std::isfinite(out)) {
            error(DiagCode::InvalidValue, line, col, "expected a finite number, got `" + value + "`");
            return std::nullopt;
        }
        return out;
    }

    std::optional<std::uint64_t> read_u64(const std::string& value, int line, int col) {
        std::uint64_t out = 0;
        const char* b = value.data();
        const char* e = b + value.size();
        auto [ptr, ec] = std::from_chars(b, e, out);
        if (ec != std::errc{} || ptr != e) {
            error(DiagCode::InvalidValue, line, col, "expected a nonnegative integer, got `" + value + "`");
            return std::nullopt;
        }
        return out;
    }

    std::optional<bool> read_on_off(const std::string& value, int line, int col) {
        if (value == "on") return true;
        if (value == "off") return false;
        error(DiagCode::InvalidValue, line, col, "expected `on` or `off`, got `" + value + "`");
        return std::nullopt;
    }

    // Angle keys: reduce mod 360 (with a warning when that changes the
    // value) and quantize to 1e-6 degrees.
    std::optional<double> read_angle(const std::string& key, const std::string& value,
                                     int line, int col) {
        auto raw = read_double(value, line, col);
        if (!raw) return std::nullopt;
        const double normalized = quantize6(mod360(*raw));
        if (normalized != quantize6(*raw))
            warn(DiagCode::AngleNormalized, line, col,
                 key + " reduced mod 360 to " + fmt_angle(normalized));
        return normalized;
    }

    bool check_range(bool ok, int line, int col, const std::string& msg) {
        if (!ok) error(DiagCode::OutOfRange, line, col, msg);
        return ok;
    }

    // --- per-key dispatch ----------------------------------------------

    void dispatch(const std::string& key, const std::string& value, int line, int col,
                  int vcol) {
        const auto unknown = [&] {
            error(DiagCode::UnknownKey, line, col, "unknown key `" + key + "` in [" + section_ + "]");
        };

        if (section_ == "pump") {
            if (key == "center_wavelength_nm") {
                if (auto v = read_double(value, line, vcol))
                    if (check_range(*v >= 1500.0 && *v <= 1620.0, line, vcol,
                                    "pump wavelength must lie in [1500, 1620] nm"))
                        plan_.pump.center_wavelength_nm = *v;
            } else if (key == "pulse_duration_ps") {
                if (auto v = read_double(value, line, vcol))
                    if (check_range(*v > 0.0, line, vcol, "pulse duration must be positive"))
                        plan_.pump.pulse_duration_ps = *v;
            } else if (key == "rep_rate_mhz") {
                if (auto v = read_double(value, line, vcol))
                    if (check_range(*v > 0.0, line, vcol, "repetition rate must be positive"))
                        plan_.pump.rep_rate_mhz = *v;
            } else if (key == "avg_power_uw") {
                if (auto v = read_double(value, line, vcol))
                    if (check_range(*v > 0.0, line, vcol, "pump power must be positive"))
                        plan_.pump.avg_power_uw = *v;
            } else if (key == "avg_power2_uw") {
                if (auto v = read_double(value, line, vcol))
                    if (check_range(*v > 0.0, line, vcol, "pump power must be positive"))
                        plan_.pump_power2_uw = *v;
            } else {
                unknown();
            }
            return;
        }

        if (section_ == "channels") {
            if (key == "kind") {
                if (value == "nondegenerate")
                    ch_kind_ = ChannelKind::NonDegenerate;
                else if (value == "degenerate")
                    ch_kind_ = ChannelKind::Degenerate;
                else
                    error(DiagCode::InvalidValue, line, vcol,
                          "expected `nondegenerate` or `degenerate`, got `" + value + "`");
            } else if (key == "pump_nm" || key == "pump1_nm" || key == "pump2_nm" ||
                       key == "signal_nm" || key == "idler_nm" ||
                       key == "signal_filter_fwhm_nm" || key == "idler_filter_fwhm_nm") {
                if (auto v = read_double(value, line, vcol)) {
                    if (!check_range(*v > 0.0, line, vcol, key + " must be positive")) return;
                    if (key == "pump_nm") ch_pump_ = *v;
                    else if (key == "pump1_nm") ch_pump1_ = *v;
                    else if (key == "pump2_nm") ch_pump2_ = *v;
                    else if (key == "signal_nm") ch_signal_ = *v;
                    else if (key == "idler_nm") ch_idler_ = *v;
                    else if (key == "signal_filter_fwhm_nm") ch_sig_fwhm_ = *v;
                    else ch_idl_fwhm_ = *v;
                }
            } else {
                unknown();
            }
            return;
        }

        if (section_ == "source") {
            if (key == "kappa_pairs_per_uw2") {
                if (auto v = read_double(value, line, vcol))
                    if (check_range(*v >= 0.0, line, vcol, "kappa must be nonnegative"))
                        plan_.source.kappa_pairs_per_uw2 = *v;
            } else if (key == "raman_per_uw") {
                if (auto v = read_double(value, line, vcol))
                    if (check_range(*v >= 0.0, line, vcol, "raman coefficient must be nonnegative"))
                        plan_.source.raman_per_uw = *v;
            } else if (key == "ase_floor") {
                if (auto v = read_double(value, line, vcol))
                    if (check_range(*v >= 0.0, line, vcol, "ase floor must be nonnegative"))
                        plan_.source.ase_floor = *v;
            } else if (key == "noise_polarized_fraction") {
                if (auto v = read_double(value, line, vcol))
                    if (check_range(*v >= 0.0 && *v <= 1.0, line, vcol,
                                    "polarized fraction must lie in [0, 1]"))
                        plan_.source.noise_polarized_fraction = *v;
            } else {
                unknown();
            }
            return;
        }

        if (section_ == "loop") {
            if (key == "hwp1_deg") {
                if (auto v = read_angle(key, value, line, vcol)) plan_.loop.hwp1_deg = *v;
            } else if (key == "qwp1_deg") {
                if (auto v = read_angle(key, value, line, vcol)) plan_.loop.qwp1_deg = *v;
            } else if (key == "loop_phase_deg") {
                if (auto v = read_angle(key, value, line, vcol)) plan_.loop.loop_phase_deg = *v;
            } else if (key == "residual_rot1_deg") {
                if (auto v = read_angle(key, value, line, vcol)) plan_.loop.residual_rot1_deg = *v;
            } else if (key == "residual_rot2_deg") {
                if (auto v = read_angle(key, value, line, vcol)) plan_.loop.residual_rot2_deg = *v;
            } else {
                unknown();
            }
            return;
        }

        if (section_ == "detectors") {
            if (key == "eta_signal" || key == "eta_idler" || key == "dark_prob") {
                if (auto v = read_double(value, line, vcol)) {
                    if (!check_range(*v >= 0.0 && *v <= 1.0, line, vcol,
                                     key + " must lie in [0, 1]"))
                        return;
                    if (key == "eta_signal") plan_.detectors.eta_signal = *v;
                    else if (key == "eta_idler") plan_.detectors.eta_idler = *v;
                    else plan_.detectors.dark_prob = *v;
                }
            } else if (key == "gate_rate_khz") {
                if (auto v = read_double(value, line, vcol))
                    if (check_range(*v > 0.0, line, vcol, "gate rate must be positive"))
                        plan_.detectors.gate_rate_khz = *v;
            } else {
                unknown();
            }
            return;
        }

        if (section_ == "experiment") {
            if (key == "kind") {
                if (value == "signal_idler") plan_.kind = ExperimentKind::SignalIdler;
                else if (value == "signal_split") plan_.kind = ExperimentKind::SignalSplit;
                else if (value == "idler_split") plan_.kind = ExperimentKind::IdlerSplit;
                else if (value == "degenerate") plan_.kind = ExperimentKind::DegeneratePostselected;
                else
                    error(DiagCode::InvalidValue, line, vcol,
                          "expected one of signal_idler/signal_split/idler_split/degenerate");
            } else if (key == "theta1_deg") {
                if (auto v = read_angle(key, value, line, vcol)) plan_.analyzers.theta1_deg = *v;
            } else if (key == "theta2_deg") {
                if (auto v = read_angle(key, value, line, vcol)) plan_.analyzers.theta2_deg = *v;
            } else if (key == "compensation") {
                if (auto v = read_on_off(value, line, vcol)) plan_.analyzers.compensation = *v;
            } else if (key == "classical_surrogate") {
                if (auto v = read_on_off(value, line, vcol)) plan_.classical_surrogate = *v;
            } else if (key == "gates") {
                if (auto v = read_u64(value, line, vcol))
                    if (check_range(*v >= 1, line, vcol, "gates must be >= 1"))
                        plan_.gates = *v;
            } else if (key == "seed") {
                if (auto v = read_u64(value, line, vcol)) plan_.seed = *v;
            } else if (key == "format_version") {
                if (auto v = read_u64(value, line, vcol)) {
                    if (*v != 1)
                        error(DiagCode::UnsupportedVersion, line, vcol,
                              "only format_version = 1 is supported");
                    else
                        plan_.format_version = 1;
                }
            } else {
                unknown();
            }
            return;
        }

        if (section_ == "sweep") {
            SweepSpec& sw = *plan_.sweep;
            if (key == "variable") {
                if (value == "theta2") sw.variable = SweepVariable::Theta2;
                else if (value == "power") sw.variable = SweepVariable::Power;
                else
                    error(DiagCode::InvalidValue, line, vcol, "expected `theta2` or `power`");
            } else if (key == "start") {
                if (auto v = read_double(value, line, vcol)) sw.start = quantize6(*v);
            } else if (key == "stop") {
                if (auto v = read_double(value, line, vcol)) sw.stop = quantize6(*v);
            } else if (key == "steps") {
                if (auto v = read_u64(value, line, vcol))
                    if (check_range(*v >= 2 && *v <= 100000, line, vcol,
                                    "steps must lie in [2, 100000]"))
                        sw.steps = static_cast<std::uint32_t>(*v);
            } else {
                unknown();
            }
            return;
        }
    }

    KeyLoc loc_of(const std::string& path, KeyLoc fallback = {1, 1}) const {
        auto it = key_locs_.find(path);
        return it == key_locs_.end() ? fallback : it->second;
    }

    void finalize() {
        if (!sections_seen_.count("pump")) {
            error(DiagCode::MissingSection, last_line_ + 1, 1,
                  "missing required section [pump]");
        }

        // Channel staging -> plan, with kind-dependent defaults.
        const ChannelKind kind = ch_kind_.value_or(ChannelKind::NonDegenerate);
        plan_.channels.kind = kind;
        if (kind == ChannelKind::NonDegenerate) {
            if (ch_pump1_ || ch_pump2_) {
                const auto l = loc_of(ch_pump1_ ? "channels.pump1_nm" : "channels.pump2_nm");
                error(DiagCode::WrongPumpCount, l.line, l.col,
                      "nondegenerate plans take a single pump_nm");
            }
            plan_.channels.pump_wavelengths_nm = {ch_pump_.value_or(1555.9)};
            plan_.channels.signal_nm = ch_signal_.value_or(1550.95);
            plan_.channels.idler_nm = ch_idler_.value_or(1561.0);
            plan_.channels.signal_filter_fwhm_nm = ch_sig_fwhm_.value_or(1.0);
            plan_.channels.idler_filter_fwhm_nm = ch_idl_fwhm_.value_or(1.0);
        } else {
            if (ch_pump_) {
                const auto l = loc_of("channels.pump_nm");
                error(DiagCode::WrongPumpCount, l.line, l.col,
                      "degenerate plans take pump1_nm and pump2_nm");
            }
            plan_.channels.pump_wavelengths_nm = {ch_pump1_.value_or(1550.95),
                                                  ch_pump2_.value_or(1560.01)};
            plan_.channels.signal_nm = ch_signal_.value_or(1555.9);
            plan_.channels.idler_nm = ch_idler_.value_or(1555.9);
            plan_.channels.signal_filter_fwhm_nm = ch_sig_fwhm_.value_or(0.8);
            plan_.channels.idler_filter_fwhm_nm = ch_idl_fwhm_.value_or(0.8);
            if (plan_.channels.signal_nm != plan_.channels.idler_nm) {
                const auto l = loc_of("channels.signal_nm", loc_of("channels.idler_nm"));
                error(DiagCode::InvalidPlan, l.line, l.col,
                      "degenerate plans need signal_nm == idler_nm");
            }
        }

        // Experiment kind must match the channel plan.
        const bool deg_exp = plan_.kind == ExperimentKind::DegeneratePostselected;
        const bool deg_ch = kind == ChannelKind::Degenerate;
        if (deg_exp != deg_ch) {
            const auto l = loc_of("experiment.kind", loc_of("channels.kind"));
            error(DiagCode::InvalidPlan, l.line, l.col,
                  deg_exp ? "degenerate experiment requires [channels] kind = degenerate"
                          : "nondegenerate experiment requires [channels] kind = nondegenerate");
        }

        if (plan_.pump_power2_uw) {
            const auto l = loc_of("pump.avg_power2_uw");
            if (!deg_ch) {
                warn(DiagCode::KeyIgnored, l.line, l.col,
                     "avg_power2_uw applies only to degenerate plans; ignored");
                plan_.pump_power2_uw.reset();
            } else if (*plan_.pump_power2_uw != plan_.pump.avg_power_uw) {
                warn(DiagCode::PhaseMatchSuboptimal, l.line, l.col,
                     "unequal pump powers degrade the phase matching of reverse"
                     " four-photon scattering");
            }
        }

        if (plan_.sweep) {
            const SweepSpec& sw = *plan_.sweep;
            if (!(sw.stop > sw.start)) {
                const auto l = loc_of("sweep.stop", loc_of("sweep.start"));
                error(DiagCode::OutOfRange, l.line, l.col, "sweep stop must exceed start");
            }
            if (sw.variable == SweepVariable::Power && sw.start <= 0.0) {
                const auto l = loc_of("sweep.start");
                error(DiagCode::OutOfRange, l.line, l.col, "power sweep must start above 0");
            }
        }
    }

    ExperimentPlan plan_;
    std::vector<Diagnostic> diags_;
    std::string section_;
    std::set<std::string> sections_seen_;
    std::set<std::string> keys_seen_;
    std::map<std::string, KeyLoc> key_locs_;
    int last_line_ = 0;

    std::optional<ChannelKind> ch_kind_;
    std::optional<double> ch_pump_, ch_pump1_, ch_pump2_;
    std::optional<double> ch_signal_, ch_idler_, ch_sig_fwhm_, ch_idl_fwhm_;
};

} // namespace detail_config

inline ParseResult parse_plan(std::string_view text) {
    return detail_config::PlanParser{}.run(text);
}

inline std::string serialize_plan(const ExperimentPlan& plan) {
    using detail_config::fmt_angle;
    using detail_config::fmt_double;

    std::string out;
    const auto kv = [&out](const char* key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };

    out += "[pump]\n";
    if (plan.pump_power2_uw) kv("avg_power2_uw", fmt_double(*plan.pump_power2_uw));
    kv("avg_power_uw", fmt_double(plan.pump.avg_power_uw));
    kv("center_wavelength_nm", fmt_double(plan.pump.center_wavelength_nm));
    kv("pulse_duration_ps", fmt_double(plan.pump.pulse_duration_ps));
    kv("rep_rate_mhz", fmt_double(plan.pump.rep_rate_mhz));

    out += "\n[channels]\n";
    kv("idler_filter_fwhm_nm", fmt_double(plan.channels.idler_filter_fwhm_nm));
    kv("idler_nm", fmt_double(plan.channels.idler_nm));
    kv("kind", plan.channels.kind == ChannelKind::NonDegenerate ? "nondegenerate"
                                                                : "degenerate");
    if (plan.channels.kind == ChannelKind::NonDegenerate) {
        kv("pump_nm", fmt_double(plan.channels.pump_wavelengths_nm.at(0)));
    } else {
        kv("pump1_nm", fmt_double(plan.channels.pump_wavelengths_nm.at(0)));
        kv("pump2_nm", fmt_double(plan.channels.pump_wavelengths_nm.at(1)));
    }
    kv("signal_filter_fwhm_nm", fmt_double(plan.channels.signal_filter_fwhm_nm));
    kv("signal_nm", fmt_double(plan.channels.signal_nm));

    out += "\n[source]\n";
    kv("ase_floor", fmt_double(plan.source.ase_floor));
    kv("kappa_pairs_per_uw2", fmt_double(plan.source.kappa_pairs_per_uw2));
    kv("noise_polarized_fraction", fmt_double(plan.source.noise_polarized_fraction));
    kv("raman_per_uw", fmt_double(plan.source.raman_per_uw));

    out += "\n[loop]\n";
    kv("hwp1_deg", fmt_angle(plan.loop.hwp1_deg));
    kv("loop_phase_deg", fmt_angle(plan.loop.loop_phase_deg));
    kv("qwp1_deg", fmt_angle(plan.loop.qwp1_deg));
    kv("residual_rot1_deg", fmt_angle(plan.loop.residual_rot1_deg));
    kv("residual_rot2_deg", fmt_angle(plan.loop.residual_rot2_deg));

    out += "\n[detectors]\n";
    kv("dark_prob", fmt_double(plan.detectors.dark_prob));
    kv("eta_idler", fmt_double(plan.detectors.eta_idler));
    kv("eta_signal", fmt_double(plan.detectors.eta_signal));
    kv("gate_rate_khz", fmt_double(plan.detectors.gate_rate_khz));

    out += "\n[experiment]\n";
    kv("classical_surrogate", plan.classical_surrogate ? "on" : "off");
    kv("compensation", plan.analyzers.compensation ? "on" : "off");
    kv("format_version", "1");
    kv("gates", std::to_string(plan.gates));
    const char* kind_token = "signal_idler";
    switch (plan.kind) {
        case ExperimentKind::SignalIdler: kind_token = "signal_idler"; break;
        case ExperimentKind::SignalSplit: kind_token = "signal_split"; break;
        case ExperimentKind::IdlerSplit: kind_token = "idler_split"; break;
        case ExperimentKind::DegeneratePostselected: kind_token = "degenerate"; break;
    }
    kv("kind", kind_token);
    kv("seed", std::to_string(plan.seed));
    kv("theta1_deg", fmt_angle(plan.analyzers.theta1_deg));
    kv("theta2_deg", fmt_angle(plan.analyzers.theta2_deg));

    if (plan.sweep) {
        out += "\n[sweep]\n";
        kv("start", fmt_angle(plan.sweep->start));
        kv("steps", std::to_string(plan.sweep->steps));
        kv("stop", fmt_angle(plan.sweep->stop));
        kv("variable", plan.sweep->variable == SweepVariable::Theta2 ? "theta2" : "power");
    }
    return out;
}

} // namespace pairsim
