#pragma once

// =============================================================================
// Static array geometry, bias-network and microstrip-bus parameters, and the
// closed-form electrical calculations derived from them: propagation velocity,
// line impedance, meander inductance, parallel bias division, tap delay
// schedules and the inductive coupling energy that drives the thermal readout.
// =============================================================================

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tci/constants.hpp"
#include "tci/errors.hpp"
#include "tci/rng.hpp"

namespace tci {

// -----------------------------------------------------------------------------
// Domain types
// -----------------------------------------------------------------------------

/// Pixel array geometry. Defaults describe the demonstrated 8x8 device with
/// 30 um pitch and 10 um x 5 um pixels.
struct ArrayConfig {
    int n_rows = 8;
    int n_cols = 8;
    double pixel_pitch_um = 30.0;
    double pixel_width_um = 10.0;
    double pixel_height_um = 5.0;

    void validate() const {
        if (n_rows < 1 || n_cols < 1)
            throw config_error("ArrayConfig: n_rows and n_cols must be >= 1");
        if (pixel_pitch_um <= 0.0 || pixel_width_um <= 0.0 || pixel_height_um <= 0.0)
            throw config_error("ArrayConfig: pitch and pixel dimensions must be > 0");
    }

    int pixel_count() const { return n_rows * n_cols; }
};

/// Bias network of one detector plane: parallel branches of R_bias + L_bias
/// feeding the series SNSPD chains, with R_tc setting the recovery path and
/// R_shunt draining inductor leakage. The heater is reduced to an energy
/// threshold compared against the inductive energy released per detection.
struct BiasNetworkSpec {
    double r_bias_ohm = 130.0;
    double r_bias_tolerance = 0.0;   // relative spread of R_bias, uniform +-fraction
    double r_shunt_ohm = 25.0;
    double r_tc_ohm = 25.0;
    double l_bias_uh = 10.0;
    double i_total_rows_ua = 30.0;
    double i_total_cols_ua = 30.0;
    double heater_threshold_aj = 10.0;

    void validate() const {
        if (r_bias_ohm <= 0.0 || r_shunt_ohm <= 0.0 || r_tc_ohm <= 0.0)
            throw config_error("BiasNetworkSpec: resistances must be > 0");
        if (l_bias_uh <= 0.0)
            throw config_error("BiasNetworkSpec: l_bias must be > 0");
        if (r_bias_tolerance < 0.0 || r_bias_tolerance >= 0.5)
            throw config_error("BiasNetworkSpec: tolerance must be in [0, 0.5)");
        if (i_total_rows_ua < 0.0 || i_total_cols_ua < 0.0)
            throw config_error("BiasNetworkSpec: plane bias currents must be >= 0");
        if (heater_threshold_aj < 0.0)
            throw config_error("BiasNetworkSpec: heater threshold must be >= 0");
    }

    double l_bias_h() const { return l_bias_uh * 1e-6; }
    double heater_threshold_j() const { return heater_threshold_aj * 1e-18; }
};

/// Superconducting microstrip transmission-line bus of one plane. The kinetic
/// inductance of the WSi film together with the thin SiO2 dielectric sets the
/// slow propagation velocity that makes time-of-flight tap discrimination work.
struct MicrostripSpec {
    double kinetic_inductance_ph_sq = 550.0;
    double dielectric_thickness_nm = 50.0;
    double dielectric_rel_permittivity = 3.9;  // sputtered SiO2, not quoted; thermal-oxide value
    double strip_width_um = 1.0;
    double segment_delay_ps = 500.0;           // propagation delay between adjacent taps
    double end_lead_delay_pos_ps = 500.0;      // tap 0 to positive-pulse end
    double end_lead_delay_neg_ps = 500.0;      // tap n-1 to negative-pulse end
    int n_taps = 8;
    double i_bus_ua = 2.8;                     // enables the line when > 0
    double dead_time_ns = 153.84615384615384;  // whole-line blocking after a pulse

    void validate() const {
        if (kinetic_inductance_ph_sq <= 0.0 || dielectric_thickness_nm <= 0.0 ||
            dielectric_rel_permittivity <= 0.0)
            throw config_error("MicrostripSpec: film/stack parameters must be > 0");
        if (strip_width_um <= 0.0)
            throw config_error("MicrostripSpec: strip width must be > 0");
        if (segment_delay_ps <= 0.0)
            throw config_error("MicrostripSpec: segment delay must be > 0");
        if (end_lead_delay_pos_ps < 0.0 || end_lead_delay_neg_ps < 0.0)
            throw config_error("MicrostripSpec: end lead delays must be >= 0");
        if (n_taps < 1)
            throw config_error("MicrostripSpec: n_taps must be >= 1");
        if (i_bus_ua < 0.0)
            throw config_error("MicrostripSpec: bus current must be >= 0");
        if (dead_time_ns < 0.0)
            throw config_error("MicrostripSpec: dead time must be >= 0");
    }

    bool enabled() const { return i_bus_ua > 0.0; }
};

/// Per-tap propagation delays to the two line ends, plus the derived
/// end-to-end time-difference centers used by the decoder.
struct TapSchedule {
    struct Tap {
        double delay_to_pos_end_ps;
        double delay_to_neg_end_ps;
    };
    std::vector<Tap> taps;

    int size() const { return static_cast<int>(taps.size()); }

    /// delta_t center of tap k: delay_pos - delay_neg. Strictly increasing in k
    /// with spacing 2 * segment_delay.
    double delta_t_center_ps(int tap) const {
        return taps[static_cast<std::size_t>(tap)].delay_to_pos_end_ps -
               taps[static_cast<std::size_t>(tap)].delay_to_neg_end_ps;
    }

    /// delay_pos + delay_neg, identical for every tap; /2 is the offset between
    /// an event time and the midpoint of its two tags.
    double delay_sum_ps() const {
        return taps.front().delay_to_pos_end_ps + taps.front().delay_to_neg_end_ps;
    }

    std::vector<double> delta_t_centers_ps() const {
        std::vector<double> out;
        out.reserve(taps.size());
        for (int k = 0; k < size(); ++k) out.push_back(delta_t_center_ps(k));
        return out;
    }
};

// -----------------------------------------------------------------------------
// Operations
// -----------------------------------------------------------------------------

/// Pulse propagation velocity (m/s) of the kinetic-inductance microstrip:
/// v = sqrt(d / (L_k * eps0 * eps_r)). Width-independent because both the
/// inductance and capacitance per length scale with the strip width.
inline double microstrip_velocity(const MicrostripSpec& spec) {
    if (spec.kinetic_inductance_ph_sq <= 0.0 || spec.dielectric_thickness_nm <= 0.0 ||
        spec.dielectric_rel_permittivity <= 0.0)
        throw config_error("microstrip_velocity: film/stack parameters must be > 0");
    const double l_k = spec.kinetic_inductance_ph_sq * 1e-12;  // H/sq
    const double d = spec.dielectric_thickness_nm * 1e-9;      // m
    return std::sqrt(d / (l_k * constants::epsilon0 * spec.dielectric_rel_permittivity));
}

/// Characteristic impedance (Ohm) of the microstrip:
/// Z = (1/w) * sqrt(L_k * d / (eps0 * eps_r)).
inline double microstrip_impedance(const MicrostripSpec& spec) {
    if (spec.strip_width_um <= 0.0)
        throw config_error("microstrip_impedance: strip width must be > 0");
    if (spec.kinetic_inductance_ph_sq <= 0.0 || spec.dielectric_thickness_nm <= 0.0 ||
        spec.dielectric_rel_permittivity <= 0.0)
        throw config_error("microstrip_impedance: film/stack parameters must be > 0");
    const double l_k = spec.kinetic_inductance_ph_sq * 1e-12;
    const double d = spec.dielectric_thickness_nm * 1e-9;
    const double w = spec.strip_width_um * 1e-6;
    return std::sqrt(l_k * d / (constants::epsilon0 * spec.dielectric_rel_permittivity)) / w;
}

/// Impedance transformation ratio required to match the line to a cable.
inline double impedance_transform_ratio(const MicrostripSpec& spec,
                                        double cable_impedance_ohm = 50.0) {
    if (cable_impedance_ohm <= 0.0)
        throw config_error("impedance_transform_ratio: cable impedance must be > 0");
    return microstrip_impedance(spec) / cable_impedance_ohm;
}

/// Inductance (uH) of a meandered wire: squares * sheet inductance.
inline double meander_inductance_uh(double width_um, double length_mm, double l_k_ph_sq) {
    if (width_um <= 0.0 || length_mm < 0.0)
        throw config_error("meander_inductance: width must be > 0 and length >= 0");
    const double squares = (length_mm * 1e3) / width_um;
    return squares * l_k_ph_sq * 1e-6;  // pH -> uH
}

/// Divide a plane bias current over n parallel R_bias branches whose
/// resistances carry a seeded uniform +-tolerance spread. Currents are
/// proportional to branch conductance and renormalized to sum exactly to
/// i_total. tolerance 0 gives n equal branches.
inline std::vector<double> per_detector_bias(double i_total_ua, int n_parallel,
                                             double r_bias_ohm, double tolerance,
                                             std::uint64_t seed) {
    if (n_parallel < 1)
        throw config_error("per_detector_bias: n_parallel must be >= 1");
    if (tolerance < 0.0 || tolerance >= 0.5)
        throw config_error("per_detector_bias: tolerance must be in [0, 0.5)");
    if (r_bias_ohm <= 0.0)
        throw config_error("per_detector_bias: r_bias must be > 0");

    std::vector<double> currents(static_cast<std::size_t>(n_parallel),
                                 i_total_ua / n_parallel);
    if (tolerance == 0.0) return currents;

    RngEngine rng(seed);
    std::uniform_real_distribution<double> delta(-tolerance, tolerance);
    std::vector<double> conductance(static_cast<std::size_t>(n_parallel));
    double total = 0.0;
    for (auto& g : conductance) {
        g = 1.0 / (r_bias_ohm * (1.0 + delta(rng)));
        total += g;
    }
    for (int k = 0; k < n_parallel; ++k)
        currents[static_cast<std::size_t>(k)] =
            i_total_ua * conductance[static_cast<std::size_t>(k)] / total;
    return currents;
}

/// Tap k sits k segments from the positive end and n-1-k segments from the
/// negative end, beyond the fixed end leads. The resulting delta_t centers are
/// an arithmetic progression with step 2 * segment_delay.
inline TapSchedule tap_delay_schedule(const MicrostripSpec& spec) {
    if (spec.n_taps < 1)
        throw config_error("tap_delay_schedule: n_taps must be >= 1");
    TapSchedule schedule;
    schedule.taps.reserve(static_cast<std::size_t>(spec.n_taps));
    for (int k = 0; k < spec.n_taps; ++k) {
        schedule.taps.push_back({
            spec.end_lead_delay_pos_ps + k * spec.segment_delay_ps,
            spec.end_lead_delay_neg_ps + (spec.n_taps - 1 - k) * spec.segment_delay_ps,
        });
    }
    return schedule;
}

/// Energy (J) stored in the bias inductor and released into the heater
/// constriction on a detection: E = 1/2 * L * I^2.
inline double coupling_energy_j(double l_bias_h, double i_branch_ua) {
    if (l_bias_h <= 0.0)
        throw config_error("coupling_energy: l_bias must be > 0");
    if (i_branch_ua < 0.0)
        throw config_error("coupling_energy: current must be >= 0");
    const double i_a = i_branch_ua * 1e-6;
    return 0.5 * l_bias_h * i_a * i_a;
}

} // namespace tci
