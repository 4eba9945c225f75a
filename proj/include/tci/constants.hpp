#pragma once

namespace tci::constants {

/// Vacuum permittivity (F/m).
inline constexpr double epsilon0 = 8.8541878128e-12;

/// Speed of light in vacuum (m/s).
inline constexpr double c_vacuum = 299792458.0;

/// FWHM of a Gaussian divided by its standard deviation: 2*sqrt(2*ln 2).
inline constexpr double gaussian_fwhm_per_sigma = 2.3548200450309493;

} // namespace tci::constants
