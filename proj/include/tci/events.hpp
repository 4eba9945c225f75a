#pragma once

#include <cstdint>

namespace tci {

/// Detector plane / transmission line selector. Row events read out on the
/// row bus, column events on the column bus.
enum class Plane : std::uint8_t { rows = 0, cols = 1 };

inline const char* plane_name(Plane p) { return p == Plane::rows ? "row" : "col"; }
inline Plane partner_plane(Plane p) { return p == Plane::rows ? Plane::cols : Plane::rows; }

/// What made a nanowire click.
enum class EventCause : std::uint8_t { photon = 0, dark = 1, thermal_couple = 2 };

/// A click of one of the two co-wound nanowires of one pixel.
struct DetectionEvent {
    std::int64_t time_ps = 0;
    std::int16_t row = 0;
    std::int16_t col = 0;
    Plane origin = Plane::rows;  // which meander fired
    EventCause cause = EventCause::photon;
};

/// A heater-forwarded event entering a transmission line at a tap.
/// Row events enter the row line at tap = row index, column events the
/// column line at tap = column index.
struct BusEvent {
    Plane line = Plane::rows;
    std::int32_t tap = 0;
    std::int64_t time_ps = 0;
};

} // namespace tci
