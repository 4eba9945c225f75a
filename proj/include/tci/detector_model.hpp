#pragma once

// =============================================================================
// Stochastic detection physics: internal efficiency vs bias current and
// wavelength, modulated photon arrival generation, per-pixel detection with
// wire dead time, co-wound thermal coupling, dark-count generation and the
// heater stage that forwards clicks onto the transmission-line buses.
// =============================================================================

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "tci/array_circuit.hpp"
#include "tci/errors.hpp"
#include "tci/events.hpp"
#include "tci/rng.hpp"

namespace tci {

// -----------------------------------------------------------------------------
// Domain types
// -----------------------------------------------------------------------------

/// Internal detection efficiency vs per-detector bias current, one logistic
/// curve per wavelength. The default table is calibrated so the 3.4 um curve
/// has a saturated plateau over the published bias range and the curves order
/// by wavelength at operating currents; entries are model defaults that stand
/// in for the measured curve shapes, not measurements.
struct EfficiencyModel {
    struct Entry {
        double wavelength_um;
        double i50_ua;     // logistic midpoint, per-detector current
        double width_ua;   // logistic scale
        double eta_max;    // saturation efficiency
    };
    std::vector<Entry> entries = {
        {3.4, 1.9, 0.28, 1.0},
        {5.3, 2.7, 0.38, 1.0},
        {7.4, 3.6, 0.55, 1.0},
        {10.0, 4.2, 0.70, 1.0},
    };

    void validate() const {
        if (entries.empty())
            throw config_error("EfficiencyModel: at least one wavelength entry required");
        for (const auto& e : entries) {
            if (e.eta_max <= 0.0 || e.eta_max > 1.0)
                throw config_error("EfficiencyModel: eta_max must be in (0, 1]");
            if (e.width_ua <= 0.0)
                throw config_error("EfficiencyModel: logistic width must be > 0");
        }
    }

    /// Entry with wavelength closest to the request (ties to the earlier entry).
    const Entry& nearest(double wavelength_um) const {
        if (entries.empty())
            throw config_error("EfficiencyModel: empty model");
        const Entry* best = &entries.front();
        double best_dist = std::abs(entries.front().wavelength_um - wavelength_um);
        for (const auto& e : entries) {
            const double dist = std::abs(e.wavelength_um - wavelength_um);
            if (dist < best_dist) {
                best = &e;
                best_dist = dist;
            }
        }
        return *best;
    }
};

/// Flood-illumination source: a thermal emitter square-wave modulated at
/// modulation_hz with the given duty cycle, plus an unmodulated broadband
/// leakage component.
struct SourceSpec {
    double wavelength_um = 3.4;
    double mean_photon_rate_cps = 0.0;  // time-averaged rate at the array; 0 = off
    double modulation_hz = 1000.0;      // <= 0 disables modulation (CW)
    double duty_cycle = 0.5;
    double broadband_leakage_cps = 0.0;

    void validate() const {
        if (mean_photon_rate_cps < 0.0 || broadband_leakage_cps < 0.0)
            throw config_error("SourceSpec: rates must be >= 0");
        if (duty_cycle <= 0.0 || duty_cycle > 1.0)
            throw config_error("SourceSpec: duty cycle must be in (0, 1]");
        if (wavelength_um <= 0.0)
            throw config_error("SourceSpec: wavelength must be > 0");
    }
};

/// Dark-count components per individual nanowire: blackbody background seen
/// through the detection-efficiency curve at an effective wavelength, plus an
/// intrinsic exponential-in-bias term.
struct DarkSpec {
    double blackbody_rate_cps = 50.0;             // photon flux per wire
    double blackbody_effective_wavelength_um = 10.0;
    double intrinsic_prefactor_cps = 0.01;
    double intrinsic_exponent_per_ua = 2.0;

    void validate() const {
        if (blackbody_rate_cps < 0.0 || intrinsic_prefactor_cps < 0.0 ||
            intrinsic_exponent_per_ua < 0.0)
            throw config_error("DarkSpec: all dark-count parameters must be >= 0");
    }

    bool all_zero() const {
        return blackbody_rate_cps == 0.0 && intrinsic_prefactor_cps == 0.0;
    }
};

// -----------------------------------------------------------------------------
// Operations
// -----------------------------------------------------------------------------

/// Internal detection efficiency at a per-detector bias current:
/// eta_max / (1 + exp(-(i - i50)/width)) for i > 0. An unbiased wire cannot
/// click, so i <= 0 returns exactly 0 rather than the logistic tail value.
inline double internal_efficiency(double i_per_detector_ua, double wavelength_um,
                                  const EfficiencyModel& model) {
    if (model.entries.empty())
        throw config_error("internal_efficiency: empty efficiency model");
    if (i_per_detector_ua <= 0.0) return 0.0;
    const auto& e = model.nearest(wavelength_um);
    return e.eta_max / (1.0 + std::exp(-(i_per_detector_ua - e.i50_ua) / e.width_ua));
}

/// Photon arrival times (ps, sorted ascending) over [0, duration): an
/// inhomogeneous Poisson process at mean_rate/duty inside the on-phase of the
/// square-wave modulation, plus homogeneous broadband leakage.
inline std::vector<std::int64_t> generate_photon_arrivals(const SourceSpec& source,
                                                          double duration_s,
                                                          std::uint64_t seed) {
    source.validate();
    if (duration_s <= 0.0)
        throw config_error("generate_photon_arrivals: duration must be > 0");

    RngEngine rng(seed);
    std::vector<std::int64_t> times;

    auto to_ps = [](double t_s) {
        return static_cast<std::int64_t>(std::llrint(t_s * 1e12));
    };

    if (source.mean_photon_rate_cps > 0.0) {
        const bool continuous = source.modulation_hz <= 0.0 || source.duty_cycle >= 1.0;
        if (continuous) {
            const double mean = source.mean_photon_rate_cps * duration_s;
            std::poisson_distribution<std::int64_t> count(mean);
            std::uniform_real_distribution<double> u(0.0, duration_s);
            const std::int64_t n = count(rng);
            times.reserve(static_cast<std::size_t>(n));
            for (std::int64_t k = 0; k < n; ++k) times.push_back(to_ps(u(rng)));
        } else {
            // Map a homogeneous process on the concatenated on-time back onto
            // absolute time, one window at a time.
            const double period = 1.0 / source.modulation_hz;
            const double on_len = source.duty_cycle * period;
            const double full_periods = std::floor(duration_s / period);
            const double remainder = duration_s - full_periods * period;
            const double total_on = full_periods * on_len + std::min(remainder, on_len);
            const double rate_on = source.mean_photon_rate_cps / source.duty_cycle;
            std::poisson_distribution<std::int64_t> count(rate_on * total_on);
            std::uniform_real_distribution<double> u(0.0, total_on);
            const std::int64_t n = count(rng);
            times.reserve(static_cast<std::size_t>(n));
            for (std::int64_t k = 0; k < n; ++k) {
                const double on_coord = u(rng);
                const double window = std::floor(on_coord / on_len);
                const double t = window * period + (on_coord - window * on_len);
                times.push_back(to_ps(t));
            }
        }
    }

    if (source.broadband_leakage_cps > 0.0) {
        const double mean = source.broadband_leakage_cps * duration_s;
        std::poisson_distribution<std::int64_t> count(mean);
        std::uniform_real_distribution<double> u(0.0, duration_s);
        const std::int64_t n = count(rng);
        for (std::int64_t k = 0; k < n; ++k) times.push_back(to_ps(u(rng)));
    }

    std::sort(times.begin(), times.end());
    return times;
}

/// Flood-illumination detection: each arrival lands on a uniformly random
/// pixel and on the row or column wire with probability p_row_wire, then
/// converts with that wire's internal efficiency. A wire that fired is
/// insensitive for detector_dead_time. Four RNG draws are consumed per
/// arrival regardless of outcome, so identical seeds give identical pixel
/// and wire assignments across different bias settings.
inline std::vector<DetectionEvent> detect_photons(
    const std::vector<std::int64_t>& arrival_times_ps, const ArrayConfig& array,
    double wavelength_um, const std::vector<double>& bias_per_row_ua,
    const std::vector<double>& bias_per_col_ua, const EfficiencyModel& eff,
    double detector_dead_time_ns, std::uint64_t seed, double p_row_wire = 0.5) {
    array.validate();
    if (static_cast<int>(bias_per_row_ua.size()) != array.n_rows ||
        static_cast<int>(bias_per_col_ua.size()) != array.n_cols)
        throw config_error("detect_photons: bias lists must match array dimensions");
    if (detector_dead_time_ns < 0.0)
        throw config_error("detect_photons: dead time must be >= 0");
    if (p_row_wire < 0.0 || p_row_wire > 1.0)
        throw config_error("detect_photons: p_row_wire must be in [0, 1]");

    const std::int64_t dead_ps =
        static_cast<std::int64_t>(std::llrint(detector_dead_time_ns * 1e3));

    RngEngine rng(seed);
    std::uniform_int_distribution<int> pick_row(0, array.n_rows - 1);
    std::uniform_int_distribution<int> pick_col(0, array.n_cols - 1);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    // blocked-until time per wire, planes x pixels
    std::vector<std::int64_t> blocked(
        static_cast<std::size_t>(2 * array.n_rows * array.n_cols),
        std::numeric_limits<std::int64_t>::min());
    auto wire_index = [&](Plane p, int r, int c) {
        return static_cast<std::size_t>(
            (p == Plane::rows ? 0 : array.n_rows * array.n_cols) + r * array.n_cols + c);
    };

    std::vector<DetectionEvent> events;
    for (const std::int64_t t : arrival_times_ps) {
        const int r = pick_row(rng);
        const int c = pick_col(rng);
        const Plane wire = (u01(rng) < p_row_wire) ? Plane::rows : Plane::cols;
        const double u = u01(rng);

        const double bias = (wire == Plane::rows) ? bias_per_row_ua[static_cast<std::size_t>(r)]
                                                  : bias_per_col_ua[static_cast<std::size_t>(c)];
        const double eta = internal_efficiency(bias, wavelength_um, eff);
        if (u >= eta) continue;

        auto& until = blocked[wire_index(wire, r, c)];
        if (t < until) continue;
        until = t + dead_ps;

        events.push_back({t, static_cast<std::int16_t>(r), static_cast<std::int16_t>(c),
                          wire, EventCause::photon});
    }
    return events;
}

/// Thermal coupling between the co-wound wires of one pixel: a click on one
/// wire produces the partner wire's click coupling_delay later with
/// probability p_couple, provided the partner carries bias above the trigger
/// floor. p_couple >= 1 and <= 0 short-circuit without consuming randomness.
inline std::optional<DetectionEvent> thermal_couple(const DetectionEvent& event,
                                                    double partner_bias_ua,
                                                    double p_couple,
                                                    double coupling_delay_ps,
                                                    RngEngine& rng,
                                                    double trigger_floor_ua = 0.0) {
    if (p_couple < 0.0 || p_couple > 1.0)
        throw config_error("thermal_couple: p_couple must be in [0, 1]");
    if (partner_bias_ua <= trigger_floor_ua) return std::nullopt;
    if (p_couple <= 0.0) return std::nullopt;
    if (p_couple < 1.0) {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        if (u01(rng) >= p_couple) return std::nullopt;
    }
    DetectionEvent partner = event;
    partner.time_ps = event.time_ps +
                      static_cast<std::int64_t>(std::llrint(coupling_delay_ps));
    partner.origin = partner_plane(event.origin);
    partner.cause = EventCause::thermal_couple;
    return partner;
}

/// Seed-taking convenience overload for a single event.
inline std::optional<DetectionEvent> thermal_couple(const DetectionEvent& event,
                                                    double partner_bias_ua,
                                                    double p_couple,
                                                    double coupling_delay_ps,
                                                    std::uint64_t seed,
                                                    double trigger_floor_ua = 0.0) {
    RngEngine rng(seed);
    return thermal_couple(event, partner_bias_ua, p_couple, coupling_delay_ps, rng,
                          trigger_floor_ua);
}

/// Dark-count rate of a single wire at a per-detector bias current. The
/// blackbody term is detected through the efficiency curve at the effective
/// wavelength; the intrinsic term grows exponentially with bias. An unbiased
/// wire produces no dark counts.
inline double dark_rate_per_wire(const DarkSpec& dark, double i_per_detector_ua,
                                 const EfficiencyModel& eff) {
    dark.validate();
    if (i_per_detector_ua <= 0.0) return 0.0;
    const double eta = internal_efficiency(i_per_detector_ua,
                                           dark.blackbody_effective_wavelength_um, eff);
    return dark.blackbody_rate_cps * eta +
           dark.intrinsic_prefactor_cps *
               std::exp(dark.intrinsic_exponent_per_ua * i_per_detector_ua);
}

/// Dark events of one plane whose branches carry the given per-detector
/// currents; every branch feeds chain_length series wires (the pixels of that
/// row or column). Events come back time-sorted with pixel coordinates
/// (branch, chain position) for rows and (chain position, branch) for columns.
inline std::vector<DetectionEvent> generate_plane_dark_events(
    const DarkSpec& dark, const std::vector<double>& branch_currents_ua,
    int chain_length, Plane plane, const EfficiencyModel& eff, double duration_s,
    std::uint64_t seed) {
    if (duration_s <= 0.0)
        throw config_error("generate_plane_dark_events: duration must be > 0");
    if (chain_length < 1)
        throw config_error("generate_plane_dark_events: chain length must be >= 1");

    RngEngine rng(seed);
    std::uniform_real_distribution<double> u(0.0, duration_s);
    std::vector<DetectionEvent> events;
    for (std::size_t branch = 0; branch < branch_currents_ua.size(); ++branch) {
        const double rate = dark_rate_per_wire(dark, branch_currents_ua[branch], eff);
        if (rate <= 0.0) continue;
        std::poisson_distribution<std::int64_t> count(rate * duration_s);
        for (int k = 0; k < chain_length; ++k) {
            const std::int64_t n = count(rng);
            for (std::int64_t j = 0; j < n; ++j) {
                DetectionEvent ev;
                ev.time_ps = static_cast<std::int64_t>(std::llrint(u(rng) * 1e12));
                if (plane == Plane::rows) {
                    ev.row = static_cast<std::int16_t>(branch);
                    ev.col = static_cast<std::int16_t>(k);
                } else {
                    ev.row = static_cast<std::int16_t>(k);
                    ev.col = static_cast<std::int16_t>(branch);
                }
                ev.origin = plane;
                ev.cause = EventCause::dark;
                events.push_back(ev);
            }
        }
    }
    std::sort(events.begin(), events.end(),
              [](const DetectionEvent& a, const DetectionEvent& b) {
                  return a.time_ps < b.time_ps;
              });
    return events;
}

/// n_wires independent wires at a common per-detector current, homogeneous
/// Poisson each with rate = blackbody * eta(i) + prefactor * exp(exponent * i).
inline std::vector<DetectionEvent> generate_dark_counts(const DarkSpec& dark,
                                                        double i_per_detector_ua,
                                                        const EfficiencyModel& eff,
                                                        int n_wires, double duration_s,
                                                        std::uint64_t seed,
                                                        Plane plane = Plane::rows) {
    if (n_wires < 1)
        throw config_error("generate_dark_counts: n_wires must be >= 1");
    const std::vector<double> currents(static_cast<std::size_t>(n_wires),
                                       i_per_detector_ua);
    return generate_plane_dark_events(dark, currents, 1, plane, eff, duration_s, seed);
}

/// Heater stage: a click forwards onto its plane's transmission line (tap =
/// row or column index) iff the energy stored in the branch inductor reaches
/// the heater threshold. A branch with no current cannot heat the bus.
inline std::optional<BusEvent> heater_trigger(const DetectionEvent& event,
                                              const BiasNetworkSpec& net,
                                              double i_branch_ua) {
    if (i_branch_ua <= 0.0) return std::nullopt;
    if (coupling_energy_j(net.l_bias_h(), i_branch_ua) < net.heater_threshold_j())
        return std::nullopt;
    BusEvent bus;
    bus.line = event.origin;
    bus.tap = (event.origin == Plane::rows) ? event.row : event.col;
    bus.time_ps = event.time_ps;
    return bus;
}

} // namespace tci
