#pragma once

// =============================================================================
// Tag-stream decoding: pairs the two ends of each transmission line, builds
// time-difference histograms, finds peaks and their FWHM, learns the
// delta_t-to-index calibration, and correlates row and column pairs into a
// pixel image with exact unmatched/ambiguous bookkeeping.
// =============================================================================

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tci/constants.hpp"
#include "tci/errors.hpp"

namespace tci {

// -----------------------------------------------------------------------------
// Domain types
// -----------------------------------------------------------------------------

/// One end-pair: a positive- and a negative-end tag of the same line matched
/// within the pairing window. t_mid is kept doubled so it stays exact in
/// integer picoseconds.
struct EndPair {
    std::int64_t t_mid_x2_ps = 0;  // t_pos + t_neg
    std::int64_t delta_t_ps = 0;   // t_pos - t_neg

    double t_mid_ps() const { return 0.5 * static_cast<double>(t_mid_x2_ps); }
};

struct PairResult {
    std::vector<EndPair> pairs;  // in positive-tag order
    std::uint64_t unmatched_pos = 0;
    std::uint64_t unmatched_neg = 0;
};

/// Binned time-difference data. Bin i covers
/// [origin + i*bin_width, origin + (i+1)*bin_width).
struct DeltaHistogram {
    std::int64_t bin_width_ps = 10;
    std::int64_t origin_ps = 0;
    std::vector<std::uint64_t> counts;

    std::uint64_t total() const {
        std::uint64_t sum = 0;
        for (auto c : counts) sum += c;
        return sum;
    }

    double bin_center_ps(std::size_t i) const {
        return static_cast<double>(origin_ps) +
               (static_cast<double>(i) + 0.5) * static_cast<double>(bin_width_ps);
    }
};

/// A located histogram peak.
struct PeakInfo {
    double center_ps = 0.0;  // centroid over the half-maximum region
    double fwhm_ps = 0.0;    // flank-interpolated full width at half maximum
    std::uint64_t area = 0;  // counts inside the half-maximum region
};

/// Learned delta_t-to-index mapping of one line. Entry k maps centers[k] to
/// index k; centers are strictly increasing.
struct CalibrationMap {
    std::vector<double> centers_ps;
    double tolerance_ps = 0.0;

    int size() const { return static_cast<int>(centers_ps.size()); }

    void validate() const {
        if (centers_ps.empty())
            throw config_error("CalibrationMap: at least one center required");
        for (std::size_t i = 1; i < centers_ps.size(); ++i)
            if (centers_ps[i] <= centers_ps[i - 1])
                throw config_error("CalibrationMap: centers must be strictly increasing");
        if (tolerance_ps < 0.0)
            throw config_error("CalibrationMap: tolerance must be >= 0");
    }
};

/// Reconstructed pixel image with conservation counters: every input row pair
/// ends up in exactly one of {grid, ambiguous, unmatched_row_pairs}.
struct PixelImage {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<std::uint64_t> counts;  // row-major
    std::uint64_t unmatched_row_pairs = 0;
    std::uint64_t unmatched_col_pairs = 0;
    std::uint64_t ambiguous = 0;

    std::uint64_t& at(int r, int c) {
        return counts[static_cast<std::size_t>(r * n_cols + c)];
    }
    std::uint64_t at(int r, int c) const {
        return counts[static_cast<std::size_t>(r * n_cols + c)];
    }
    std::uint64_t total() const {
        std::uint64_t sum = 0;
        for (auto c : counts) sum += c;
        return sum;
    }
};

struct ImageStats {
    std::uint64_t total = 0;
    std::vector<std::uint64_t> row_sums;
    std::vector<std::uint64_t> col_sums;
    std::optional<double> coefficient_of_variation;  // absent for an empty image
};

// -----------------------------------------------------------------------------
// Operations
// -----------------------------------------------------------------------------

namespace detail {

inline void check_sorted(const std::vector<std::int64_t>& v, const char* what) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[i - 1])
            throw data_error(std::string(what) + ": input not time-sorted at index " +
                             std::to_string(i));
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

} // namespace detail

/// Greedy chronological end matching: each positive tag takes the nearest
/// unconsumed negative tag within max_skew; every tag is used at most once.
/// Unmatched tags are counted, never an error.
inline PairResult pair_ends(const std::vector<std::int64_t>& pos_times,
                            const std::vector<std::int64_t>& neg_times,
                            std::int64_t max_skew_ps) {
    if (max_skew_ps <= 0) throw config_error("pair_ends: max_skew must be > 0");
    detail::check_sorted(pos_times, "pair_ends(pos)");
    detail::check_sorted(neg_times, "pair_ends(neg)");

    PairResult result;
    result.pairs.reserve(std::min(pos_times.size(), neg_times.size()));
    std::vector<bool> used(neg_times.size(), false);
    std::size_t low = 0;  // first negative tag that can still be matched

    for (const std::int64_t t : pos_times) {
        while (low < neg_times.size() &&
               (used[low] || neg_times[low] < t - max_skew_ps)) {
            if (!used[low]) ++result.unmatched_neg;
            ++low;
        }

        std::size_t best = neg_times.size();
        std::int64_t best_dist = max_skew_ps + 1;
        for (std::size_t j = low; j < neg_times.size(); ++j) {
            if (neg_times[j] > t + max_skew_ps) break;
            if (used[j]) continue;
            const std::int64_t dist = std::llabs(neg_times[j] - t);
            if (dist < best_dist) {
                best = j;
                best_dist = dist;
            } else if (neg_times[j] > t && neg_times[j] - t >= best_dist) {
                break;  // distances only grow from here
            }
        }

        if (best == neg_times.size()) {
            ++result.unmatched_pos;
            continue;
        }
        used[best] = true;
        result.pairs.push_back({t + neg_times[best], t - neg_times[best]});
    }

    for (std::size_t j = low; j < neg_times.size(); ++j)
        if (!used[j]) ++result.unmatched_neg;
    return result;
}

/// Histogram of picosecond values; bin of v is floor((v - origin)/bin_width)
/// with the origin aligned to a bin_width multiple at or below the minimum.
inline DeltaHistogram build_histogram(const std::vector<std::int64_t>& values_ps,
                                      std::int64_t bin_width_ps = 10) {
    if (bin_width_ps <= 0) throw config_error("build_histogram: bin width must be > 0");
    DeltaHistogram hist;
    hist.bin_width_ps = bin_width_ps;
    if (values_ps.empty()) return hist;

    const auto [mn, mx] = std::minmax_element(values_ps.begin(), values_ps.end());
    hist.origin_ps = detail::floor_div(*mn, bin_width_ps) * bin_width_ps;
    const std::size_t n_bins = static_cast<std::size_t>(
        detail::floor_div(*mx - hist.origin_ps, bin_width_ps) + 1);
    hist.counts.assign(n_bins, 0);
    for (const std::int64_t v : values_ps)
        ++hist.counts[static_cast<std::size_t>(
            detail::floor_div(v - hist.origin_ps, bin_width_ps))];
    return hist;
}

/// Locate the n_expected highest local maxima separated by at least
/// min_separation. Peak centers are count-weighted centroids over the
/// half-maximum region; FWHM comes from linear interpolation of the flanks
/// at half maximum (a flank that never crosses half maximum stops at the
/// histogram edge). Returned sorted by center.
inline std::vector<PeakInfo> find_peaks(const DeltaHistogram& hist, int n_expected,
                                        double min_separation_ps) {
    if (n_expected < 1) throw config_error("find_peaks: n_expected must be >= 1");
    const auto& c = hist.counts;
    const double w = static_cast<double>(hist.bin_width_ps);

    // local maxima; a run of equal bins counts once, at its middle
    struct Candidate {
        std::size_t bin;
        std::uint64_t height;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < c.size();) {
        std::size_t j = i;
        while (j + 1 < c.size() && c[j + 1] == c[i]) ++j;
        const bool rises_left = (i == 0) || (c[i - 1] < c[i]);
        const bool falls_right = (j + 1 == c.size()) || (c[j + 1] < c[i]);
        if (c[i] > 0 && rises_left && falls_right)
            candidates.push_back({(i + j) / 2, c[i]});
        i = j + 1;
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return a.height != b.height ? a.height > b.height : a.bin < b.bin;
    });

    std::vector<std::size_t> selected;
    for (const auto& cand : candidates) {
        if (static_cast<int>(selected.size()) == n_expected) break;
        bool clear = true;
        for (const std::size_t s : selected) {
            const double dist = std::abs(hist.bin_center_ps(cand.bin) - hist.bin_center_ps(s));
            if (dist < min_separation_ps) {
                clear = false;
                break;
            }
        }
        if (clear) selected.push_back(cand.bin);
    }

    if (static_cast<int>(selected.size()) < n_expected) {
        std::ostringstream msg;
        msg << "find_peaks: expected " << n_expected << " peaks, found "
            << selected.size() << " (centers:";
        std::sort(selected.begin(), selected.end());
        for (const std::size_t s : selected) msg << ' ' << hist.bin_center_ps(s) << " ps";
        msg << ")";
        throw analysis_error(msg.str());
    }

    std::vector<PeakInfo> peaks;
    peaks.reserve(selected.size());
    for (const std::size_t p : selected) {
        const double half = static_cast<double>(c[p]) / 2.0;

        // walk out to the first bin at or below half maximum on each side
        std::size_t l = p;
        while (l > 0 && static_cast<double>(c[l - 1]) > half) --l;
        std::size_t r = p;
        while (r + 1 < c.size() && static_cast<double>(c[r + 1]) > half) ++r;

        double x_left;
        if (l == 0) {
            x_left = static_cast<double>(hist.origin_ps);  // edge: no crossing found
        } else {
            const double c0 = static_cast<double>(c[l - 1]);
            const double c1 = static_cast<double>(c[l]);
            x_left = hist.bin_center_ps(l - 1) + (half - c0) / (c1 - c0) * w;
        }
        double x_right;
        if (r + 1 == c.size()) {
            x_right = static_cast<double>(hist.origin_ps) +
                      static_cast<double>(c.size()) * w;
        } else {
            const double c0 = static_cast<double>(c[r]);
            const double c1 = static_cast<double>(c[r + 1]);
            x_right = hist.bin_center_ps(r) + (c0 - half) / (c0 - c1) * w;
        }

        PeakInfo peak;
        peak.fwhm_ps = x_right - x_left;
        double weight = 0.0;
        double moment = 0.0;
        for (std::size_t i = l; i <= r; ++i) {
            peak.area += c[i];
            weight += static_cast<double>(c[i]);
            moment += static_cast<double>(c[i]) * hist.bin_center_ps(i);
        }
        peak.center_ps = moment / weight;
        peaks.push_back(peak);
    }

    std::sort(peaks.begin(), peaks.end(),
              [](const PeakInfo& a, const PeakInfo& b) { return a.center_ps < b.center_ps; });
    return peaks;
}

/// Learn the delta_t-to-index map from a histogram with n_expected peaks.
/// min_separation 0 derives one from the central 99% span of the data, which
/// keeps stray mis-pair outliers from inflating the scale. The assignment
/// tolerance is half the smallest adjacent gap, capped by a 3-sigma radius
/// from the widest peak.
inline CalibrationMap calibrate(const DeltaHistogram& hist, int n_expected,
                                double min_separation_ps = 0.0) {
    if (min_separation_ps <= 0.0) {
        const std::uint64_t total = hist.total();
        if (total == 0) throw analysis_error("calibrate: empty histogram");
        const std::uint64_t lo_target = static_cast<std::uint64_t>(0.005 * static_cast<double>(total));
        const std::uint64_t hi_target = static_cast<std::uint64_t>(0.995 * static_cast<double>(total));
        std::uint64_t acc = 0;
        double q_lo = hist.bin_center_ps(0);
        double q_hi = hist.bin_center_ps(hist.counts.size() - 1);
        bool lo_set = false;
        for (std::size_t i = 0; i < hist.counts.size(); ++i) {
            acc += hist.counts[i];
            if (!lo_set && acc > lo_target) {
                q_lo = hist.bin_center_ps(i);
                lo_set = true;
            }
            if (acc >= hi_target) {
                q_hi = hist.bin_center_ps(i);
                break;
            }
        }
        min_separation_ps =
            std::max(static_cast<double>(hist.bin_width_ps), (q_hi - q_lo) / (2.0 * n_expected));
    }

    const auto peaks = find_peaks(hist, n_expected, min_separation_ps);

    CalibrationMap map;
    map.centers_ps.reserve(peaks.size());
    double max_fwhm = 0.0;
    for (const auto& p : peaks) {
        map.centers_ps.push_back(p.center_ps);
        max_fwhm = std::max(max_fwhm, p.fwhm_ps);
    }

    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < map.centers_ps.size(); ++i)
        min_gap = std::min(min_gap, map.centers_ps[i] - map.centers_ps[i - 1]);

    const double sigma_radius = 3.0 * max_fwhm / constants::gaussian_fwhm_per_sigma;
    map.tolerance_ps = map.centers_ps.size() > 1 ? std::min(min_gap / 2.0, sigma_radius)
                                                 : sigma_radius;
    map.validate();
    return map;
}

/// Nearest calibrated center within the assignment tolerance, or nullopt for
/// an ambiguous time difference.
inline std::optional<int> assign_index(std::int64_t delta_t_ps, const CalibrationMap& map) {
    map.validate();
    const double v = static_cast<double>(delta_t_ps);
    const auto it = std::lower_bound(map.centers_ps.begin(), map.centers_ps.end(), v);
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    if (it != map.centers_ps.end()) {
        best = static_cast<int>(it - map.centers_ps.begin());
        best_dist = std::abs(*it - v);
    }
    if (it != map.centers_ps.begin()) {
        const double dist = std::abs(*(it - 1) - v);
        if (dist < best_dist) {
            best = static_cast<int>(it - map.centers_ps.begin()) - 1;
            best_dist = dist;
        }
    }
    if (best < 0 || best_dist > map.tolerance_ps) return std::nullopt;
    return best;
}

/// Greedy chronological coincidence of row pairs with column pairs by
/// midpoint time. A matched coincidence lands in the pixel grid when both
/// indices resolve, otherwise in the ambiguous counter; pairs with no
/// coincidence partner are counted per side.
inline PixelImage correlate_and_image(const std::vector<EndPair>& row_pairs,
                                      const std::vector<EndPair>& col_pairs,
                                      const CalibrationMap& row_map,
                                      const CalibrationMap& col_map,
                                      std::int64_t coincidence_window_ps) {
    if (coincidence_window_ps <= 0)
        throw config_error("correlate_and_image: coincidence window must be > 0");
    row_map.validate();
    col_map.validate();
    for (std::size_t i = 1; i < row_pairs.size(); ++i)
        if (row_pairs[i].t_mid_x2_ps < row_pairs[i - 1].t_mid_x2_ps)
            throw data_error("correlate_and_image: row pairs not sorted by t_mid");
    for (std::size_t i = 1; i < col_pairs.size(); ++i)
        if (col_pairs[i].t_mid_x2_ps < col_pairs[i - 1].t_mid_x2_ps)
            throw data_error("correlate_and_image: col pairs not sorted by t_mid");

    PixelImage image;
    image.n_rows = row_map.size();
    image.n_cols = col_map.size();
    image.counts.assign(static_cast<std::size_t>(image.n_rows * image.n_cols), 0);

    const std::int64_t window_x2 = 2 * coincidence_window_ps;  // t_mid is stored doubled
    std::vector<bool> used(col_pairs.size(), false);
    std::size_t low = 0;

    for (const EndPair& rp : row_pairs) {
        const std::int64_t t = rp.t_mid_x2_ps;
        while (low < col_pairs.size() &&
               (used[low] || col_pairs[low].t_mid_x2_ps < t - window_x2)) {
            if (!used[low]) ++image.unmatched_col_pairs;
            ++low;
        }

        std::size_t best = col_pairs.size();
        std::int64_t best_dist = window_x2 + 1;
        for (std::size_t j = low; j < col_pairs.size(); ++j) {
            if (col_pairs[j].t_mid_x2_ps > t + window_x2) break;
            if (used[j]) continue;
            const std::int64_t dist = std::llabs(col_pairs[j].t_mid_x2_ps - t);
            if (dist < best_dist) {
                best = j;
                best_dist = dist;
            } else if (col_pairs[j].t_mid_x2_ps > t && col_pairs[j].t_mid_x2_ps - t >= best_dist) {
                break;
            }
        }

        if (best == col_pairs.size()) {
            ++image.unmatched_row_pairs;
            continue;
        }
        used[best] = true;

        const auto r = assign_index(rp.delta_t_ps, row_map);
        const auto c = assign_index(col_pairs[best].delta_t_ps, col_map);
        if (r && c)
            ++image.at(*r, *c);
        else
            ++image.ambiguous;
    }

    for (std::size_t j = low; j < col_pairs.size(); ++j)
        if (!used[j]) ++image.unmatched_col_pairs;
    return image;
}

/// Totals, marginals and the coefficient of variation (population std / mean
/// over all pixel counts). The CoV of an empty image is reported absent.
inline ImageStats image_stats(const PixelImage& image) {
    ImageStats stats;
    stats.row_sums.assign(static_cast<std::size_t>(image.n_rows), 0);
    stats.col_sums.assign(static_cast<std::size_t>(image.n_cols), 0);
    for (int r = 0; r < image.n_rows; ++r)
        for (int c = 0; c < image.n_cols; ++c) {
            const std::uint64_t v = image.at(r, c);
            stats.total += v;
            stats.row_sums[static_cast<std::size_t>(r)] += v;
            stats.col_sums[static_cast<std::size_t>(c)] += v;
        }

    const std::size_t n = image.counts.size();
    if (n > 0 && stats.total > 0) {
        const double mean = static_cast<double>(stats.total) / static_cast<double>(n);
        double ss = 0.0;
        for (const auto v : image.counts) {
            const double d = static_cast<double>(v) - mean;
            ss += d * d;
        }
        stats.coefficient_of_variation = std::sqrt(ss / static_cast<double>(n)) / mean;
    }
    return stats;
}

} // namespace tci
