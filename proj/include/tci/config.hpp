#pragma once

// =============================================================================
// Experiment configuration: one struct bundling every physics and pipeline
// parameter, loadable from a sectioned key-value config file. Unknown sections
// or keys are errors; defaults reproduce the published operating point
// (8x8 array, 30 uA plane bias, 2.8 uA bus bias, 1 s runs, wavelengths
// 3.4/5.3/7.4/10 um, 100 kcps reference rate).
// =============================================================================

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tci/array_circuit.hpp"
#include "tci/bus_readout.hpp"
#include "tci/decoder.hpp"
#include "tci/detector_model.hpp"
#include "tci/errors.hpp"

namespace tci {

/// Detection-stage knobs that sit between raw physics and the bus.
struct DetectorSpec {
    double dead_time_ns = 100.0;            // per-wire insensitive interval (L/R recovery scale)
    double p_couple = 1.0;                  // thermal coupling probability
    double coupling_delay_ps = 50.0;        // partner click lag
    double p_row_wire = 0.5;                // photon lands on the row wire with this probability
    double coupling_trigger_floor_ua = 0.0; // partner must be biased above this to couple

    void validate() const {
        if (dead_time_ns < 0.0)
            throw config_error("DetectorSpec: dead time must be >= 0");
        if (p_couple < 0.0 || p_couple > 1.0)
            throw config_error("DetectorSpec: p_couple must be in [0, 1]");
        if (coupling_delay_ps < 0.0)
            throw config_error("DetectorSpec: coupling delay must be >= 0");
        if (p_row_wire < 0.0 || p_row_wire > 1.0)
            throw config_error("DetectorSpec: p_row_wire must be in [0, 1]");
        if (coupling_trigger_floor_ua < 0.0)
            throw config_error("DetectorSpec: trigger floor must be >= 0");
    }
};

/// Decoding parameters.
struct DecoderSpec {
    std::int64_t bin_width_ps = 10;
    std::int64_t max_skew_ps = 10000;          // end-pairing window; must exceed the delta_t span
    std::int64_t coincidence_window_ps = 5000; // row/col midpoint matching window

    void validate() const {
        if (bin_width_ps <= 0)
            throw config_error("DecoderSpec: bin width must be > 0");
        if (max_skew_ps <= 0)
            throw config_error("DecoderSpec: max skew must be > 0");
        if (coincidence_window_ps <= 0)
            throw config_error("DecoderSpec: coincidence window must be > 0");
    }
};

/// Run-level parameters shared by all experiments.
struct RunSpec {
    std::uint64_t seed = 42;
    double duration_s = 1.0;
    std::vector<double> wavelengths_um = {3.4, 5.3, 7.4, 10.0};
    double target_pcr_cps = 100000.0;  // source power is solved to hit this at the reference bias
    DeadTimeModel throughput_model = DeadTimeModel::non_paralyzable;

    void validate() const {
        if (duration_s <= 0.0) throw config_error("RunSpec: duration must be > 0");
        if (wavelengths_um.empty())
            throw config_error("RunSpec: at least one wavelength required");
        if (target_pcr_cps <= 0.0)
            throw config_error("RunSpec: target PCR must be > 0");
    }
};

struct ExperimentConfig {
    ArrayConfig array;
    BiasNetworkSpec bias;
    MicrostripSpec row_bus;
    MicrostripSpec col_bus;
    EfficiencyModel efficiency;
    SourceSpec source;  // mean_photon_rate_cps 0 means auto-adjust to target_pcr_cps
    DarkSpec dark;
    DetectorSpec detector;
    JitterSpec jitter;
    DecoderSpec decoder;
    RunSpec run;

    /// Sync derived fields (tap counts follow the array) and validate everything.
    void finalize() {
        row_bus.n_taps = array.n_rows;
        col_bus.n_taps = array.n_cols;
        array.validate();
        bias.validate();
        row_bus.validate();
        col_bus.validate();
        efficiency.validate();
        source.validate();
        dark.validate();
        detector.validate();
        jitter.validate();
        decoder.validate();
        run.validate();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

inline double parse_double(const std::string& v, int line_no) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size())
            throw config_error("config line " + std::to_string(line_no) +
                               ": trailing characters in number '" + v + "'");
        return x;
    } catch (const config_error&) {
        throw;
    } catch (const std::exception&) {
        throw config_error("config line " + std::to_string(line_no) + ": bad number '" + v + "'");
    }
}

inline std::int64_t parse_int(const std::string& v, int line_no) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size())
            throw config_error("config line " + std::to_string(line_no) +
                               ": trailing characters in integer '" + v + "'");
        return x;
    } catch (const config_error&) {
        throw;
    } catch (const std::exception&) {
        throw config_error("config line " + std::to_string(line_no) + ": bad integer '" + v + "'");
    }
}

inline std::vector<double> parse_double_list(const std::string& v, int line_no) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw config_error("config line " + std::to_string(line_no) + ": empty list item");
        out.push_back(parse_double(item, line_no));
    }
    if (out.empty())
        throw config_error("config line " + std::to_string(line_no) + ": empty list");
    return out;
}

} // namespace detail

/// Parse the sectioned key-value config format. Every key must belong to a
/// known section; unknown keys fail fast so typos cannot silently fall back
/// to defaults.
inline ExperimentConfig load_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string section;
    std::string line;
    int line_no = 0;
    bool efficiency_cleared = false;

    auto set_microstrip = [&](MicrostripSpec& bus, const std::string& key,
                              const std::string& value) {
        if (key == "kinetic_inductance_ph_sq") bus.kinetic_inductance_ph_sq = detail::parse_double(value, line_no);
        else if (key == "dielectric_thickness_nm") bus.dielectric_thickness_nm = detail::parse_double(value, line_no);
        else if (key == "dielectric_rel_permittivity") bus.dielectric_rel_permittivity = detail::parse_double(value, line_no);
        else if (key == "strip_width_um") bus.strip_width_um = detail::parse_double(value, line_no);
        else if (key == "segment_delay_ps") bus.segment_delay_ps = detail::parse_double(value, line_no);
        else if (key == "end_lead_delay_pos_ps") bus.end_lead_delay_pos_ps = detail::parse_double(value, line_no);
        else if (key == "end_lead_delay_neg_ps") bus.end_lead_delay_neg_ps = detail::parse_double(value, line_no);
        else if (key == "i_bus_ua") bus.i_bus_ua = detail::parse_double(value, line_no);
        else if (key == "dead_time_ns") bus.dead_time_ns = detail::parse_double(value, line_no);
        else
            throw config_error("config line " + std::to_string(line_no) + ": unknown key '" +
                               key + "' in section [" + section + "]");
    };

    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("config line " + std::to_string(line_no) +
                                   ": malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "array" && section != "bias_network" && section != "row_bus" &&
                section != "col_bus" && section != "efficiency" && section != "source" &&
                section != "dark" && section != "detector" && section != "jitter" &&
                section != "decoder" && section != "run")
                throw config_error("config line " + std::to_string(line_no) +
                                   ": unknown section [" + section + "]");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw config_error("config line " + std::to_string(line_no) + ": empty key or value");
        if (section.empty())
            throw config_error("config line " + std::to_string(line_no) +
                               ": key outside any section");

        if (section == "array") {
            if (key == "n_rows") cfg.array.n_rows = static_cast<int>(detail::parse_int(value, line_no));
            else if (key == "n_cols") cfg.array.n_cols = static_cast<int>(detail::parse_int(value, line_no));
            else if (key == "pixel_pitch_um") cfg.array.pixel_pitch_um = detail::parse_double(value, line_no);
            else if (key == "pixel_width_um") cfg.array.pixel_width_um = detail::parse_double(value, line_no);
            else if (key == "pixel_height_um") cfg.array.pixel_height_um = detail::parse_double(value, line_no);
            else throw config_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "' in section [array]");
        } else if (section == "bias_network") {
            if (key == "r_bias_ohm") cfg.bias.r_bias_ohm = detail::parse_double(value, line_no);
            else if (key == "r_bias_tolerance") cfg.bias.r_bias_tolerance = detail::parse_double(value, line_no);
            else if (key == "r_shunt_ohm") cfg.bias.r_shunt_ohm = detail::parse_double(value, line_no);
            else if (key == "r_tc_ohm") cfg.bias.r_tc_ohm = detail::parse_double(value, line_no);
            else if (key == "l_bias_uh") cfg.bias.l_bias_uh = detail::parse_double(value, line_no);
            else if (key == "i_total_rows_ua") cfg.bias.i_total_rows_ua = detail::parse_double(value, line_no);
            else if (key == "i_total_cols_ua") cfg.bias.i_total_cols_ua = detail::parse_double(value, line_no);
            else if (key == "heater_threshold_aj") cfg.bias.heater_threshold_aj = detail::parse_double(value, line_no);
            else throw config_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "' in section [bias_network]");
        } else if (section == "row_bus") {
            set_microstrip(cfg.row_bus, key, value);
        } else if (section == "col_bus") {
            set_microstrip(cfg.col_bus, key, value);
        } else if (section == "efficiency") {
            if (key == "entry") {
                const auto fields = detail::parse_double_list(value, line_no);
                if (fields.size() != 4)
                    throw config_error("config line " + std::to_string(line_no) +
                                       ": efficiency entry needs wavelength_um, i50_ua, width_ua, eta_max");
                if (!efficiency_cleared) {
                    cfg.efficiency.entries.clear();
                    efficiency_cleared = true;
                }
                cfg.efficiency.entries.push_back({fields[0], fields[1], fields[2], fields[3]});
            } else {
                throw config_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "' in section [efficiency]");
            }
        } else if (section == "source") {
            if (key == "mean_photon_rate_cps") cfg.source.mean_photon_rate_cps = detail::parse_double(value, line_no);
            else if (key == "modulation_hz") cfg.source.modulation_hz = detail::parse_double(value, line_no);
            else if (key == "duty_cycle") cfg.source.duty_cycle = detail::parse_double(value, line_no);
            else if (key == "broadband_leakage_cps") cfg.source.broadband_leakage_cps = detail::parse_double(value, line_no);
            else throw config_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "' in section [source]");
        } else if (section == "dark") {
            if (key == "blackbody_rate_cps") cfg.dark.blackbody_rate_cps = detail::parse_double(value, line_no);
            else if (key == "blackbody_effective_wavelength_um") cfg.dark.blackbody_effective_wavelength_um = detail::parse_double(value, line_no);
            else if (key == "intrinsic_prefactor_cps") cfg.dark.intrinsic_prefactor_cps = detail::parse_double(value, line_no);
            else if (key == "intrinsic_exponent_per_ua") cfg.dark.intrinsic_exponent_per_ua = detail::parse_double(value, line_no);
            else throw config_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "' in section [dark]");
        } else if (section == "detector") {
            if (key == "dead_time_ns") cfg.detector.dead_time_ns = detail::parse_double(value, line_no);
            else if (key == "p_couple") cfg.detector.p_couple = detail::parse_double(value, line_no);
            else if (key == "coupling_delay_ps") cfg.detector.coupling_delay_ps = detail::parse_double(value, line_no);
            else if (key == "p_row_wire") cfg.detector.p_row_wire = detail::parse_double(value, line_no);
            else if (key == "coupling_trigger_floor_ua") cfg.detector.coupling_trigger_floor_ua = detail::parse_double(value, line_no);
            else throw config_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "' in section [detector]");
        } else if (section == "jitter") {
            if (key == "sigma_per_end_row_ps") cfg.jitter.sigma_per_end_row_ps = detail::parse_double(value, line_no);
            else if (key == "sigma_per_end_col_ps") cfg.jitter.sigma_per_end_col_ps = detail::parse_double(value, line_no);
            else throw config_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "' in section [jitter]");
        } else if (section == "decoder") {
            if (key == "bin_width_ps") cfg.decoder.bin_width_ps = detail::parse_int(value, line_no);
            else if (key == "max_skew_ps") cfg.decoder.max_skew_ps = detail::parse_int(value, line_no);
            else if (key == "coincidence_window_ps") cfg.decoder.coincidence_window_ps = detail::parse_int(value, line_no);
            else throw config_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "' in section [decoder]");
        } else if (section == "run") {
            if (key == "seed") cfg.run.seed = static_cast<std::uint64_t>(detail::parse_int(value, line_no));
            else if (key == "duration_s") cfg.run.duration_s = detail::parse_double(value, line_no);
            else if (key == "wavelengths_um") cfg.run.wavelengths_um = detail::parse_double_list(value, line_no);
            else if (key == "target_pcr_cps") cfg.run.target_pcr_cps = detail::parse_double(value, line_no);
            else if (key == "throughput_model") {
                if (value == "nonparalyzable") cfg.run.throughput_model = DeadTimeModel::non_paralyzable;
                else if (value == "paralyzable") cfg.run.throughput_model = DeadTimeModel::paralyzable;
                else throw config_error("config line " + std::to_string(line_no) +
                                        ": throughput_model must be nonparalyzable or paralyzable");
            } else {
                throw config_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "' in section [run]");
            }
        }
    }

    cfg.finalize();
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path.string());
    return load_config(in);
}

} // namespace tci
