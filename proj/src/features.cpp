#include "demcl/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "demcl/io.hpp"

namespace demcl {

namespace {

std::vector<double> time_averaged_profile(const TimeDopplerSpectrogram& w) {
    const std::size_t n = w.n(), d = w.doppler_bins();
    std::vector<double> avg(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t v = 0; v < d; ++v) avg[v] += w.profiles.at(i, v);
    for (auto& x : avg) x /= static_cast<double>(n);
    return avg;
}

/// Largest absolute Doppler offset (from the fftshifted zero bin at D/2)
/// among cells of the row that sit in the upper half of its dynamic range.
/// The row-adaptive threshold keeps the estimate independent of absolute
/// scale, and the absolute offset makes it invariant to band mirroring
/// when the walker turns around.
double upper_envelope_bin(const TimeDopplerSpectrogram& w, std::size_t row) {
    const std::size_t d = w.doppler_bins();
    double peak = w.profiles.at(row, 0);
    std::vector<double> cells(d);
    for (std::size_t v = 0; v < d; ++v) {
        cells[v] = w.profiles.at(row, v);
        peak = std::max(peak, cells[v]);
    }
    std::nth_element(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(d / 2),
                     cells.end());
    const double median = cells[d / 2];
    const double thr = median + 0.5 * (peak - median);
    const double zero = static_cast<double>(d / 2);
    double env = 0.0;
    for (std::size_t v = 0; v < d; ++v)
        if (w.profiles.at(row, v) > thr)
            env = std::max(env, std::abs(static_cast<double>(v) - zero));
    return env;
}

/// Unbiased autocorrelation of a zero-mean sequence at one lag.
double autocorr(const std::vector<double>& x, std::size_t lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < x.size(); ++t) acc += x[t] * x[t + lag];
    return acc / static_cast<double>(x.size() - lag);
}

}  // namespace

GaitFeatures extract_features(const TimeDopplerSpectrogram& window,
                              const FeatureWindowConfig& cfg) {
    const std::size_t n = window.n(), d = window.doppler_bins();
    if (n != cfg.window_frames)
        throw std::invalid_argument("extract_features: window must hold exactly " +
                                    std::to_string(cfg.window_frames) + " frames, got " +
                                    std::to_string(n));
    if (!(cfg.envelope_threshold_db > 0.0) || !(cfg.torso_band_fraction > 0.0) ||
        cfg.torso_band_fraction > 1.0)
        throw std::invalid_argument("extract_features: invalid thresholds");
    if (!(window.frame_rate > 0.0))
        throw std::invalid_argument("extract_features: window needs a positive frame rate");

    GaitFeatures out;
    const std::vector<double> avg = time_averaged_profile(window);
    std::size_t pk = 0;
    for (std::size_t v = 1; v < d; ++v)
        if (avg[v] > avg[pk]) pk = v;
    out.f1 = static_cast<double>(pk);

    // f2: inclusive span between the outermost bins above peak - threshold
    const double band_thr = avg[pk] - cfg.envelope_threshold_db;
    std::size_t lo = pk, hi = pk;
    for (std::size_t v = 0; v < d; ++v)
        if (avg[v] > band_thr) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    out.f2 = static_cast<double>(hi - lo + 1);

    // f3: contiguous run around the torso line above the tighter threshold
    const double torso_thr = avg[pk] - cfg.envelope_threshold_db * cfg.torso_band_fraction;
    std::size_t tlo = pk, thi = pk;
    while (tlo > 0 && avg[tlo - 1] > torso_thr) --tlo;
    while (thi + 1 < d && avg[thi + 1] > torso_thr) ++thi;
    out.f3 = static_cast<double>(thi - tlo + 1);

    // f4: first autocorrelation peak of the upper-envelope sequence
    std::vector<double> env(n);
    for (std::size_t i = 0; i < n; ++i) env[i] = upper_envelope_bin(window, i);
    double mean = 0.0;
    for (double e : env) mean += e;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (auto& e : env) {
        e -= mean;
        var += e * e;
    }
    if (var == 0.0) {
        if (cfg.fallback_period_s > 0.0) {
            out.f4 = cfg.fallback_period_s;
            return out;
        }
        throw FlatWindowError("extract_features: flat envelope, limb period undefined");
    }

    const double fps = window.frame_rate;
    const std::size_t lag_lo =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.min_period_s * fps)));
    const std::size_t lag_hi = std::min<std::size_t>(
        n - 2, static_cast<std::size_t>(std::lround(cfg.max_period_s * fps)));
    if (lag_lo > lag_hi)
        throw std::invalid_argument("extract_features: window too short for the period search");

    std::vector<double> r(lag_hi + 2, 0.0);
    for (std::size_t lag = lag_lo >= 1 ? lag_lo - 1 : 0; lag <= lag_hi + 1; ++lag)
        r[lag] = autocorr(env, lag);

    double r_top = r[lag_lo];
    for (std::size_t lag = lag_lo + 1; lag <= lag_hi; ++lag) r_top = std::max(r_top, r[lag]);

    // first local peak comparable to the strongest one; sub-harmonic
    // wiggles (a weaker counter-swinging limb) stay below the bar
    const double bar = 0.5 * r_top;
    std::size_t best = 0;
    bool found = false;
    for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
        if (r[lag] > 0.0 && r[lag] >= bar && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
            best = lag;
            found = true;
            break;
        }
    }
    if (!found) {  // no qualifying peak: take the strongest lag in range
        best = lag_lo;
        for (std::size_t lag = lag_lo + 1; lag <= lag_hi; ++lag)
            if (r[lag] > r[best]) best = lag;
    }

    // cycle-to-cycle envelope variation can push the strongest peak to a
    // multiple of the period; prefer a subdivision that is itself a peak
    for (std::size_t k = 4; k >= 2; --k) {
        const std::size_t target = (best + k / 2) / k;
        if (target < std::max<std::size_t>(lag_lo, 2) || target + 1 > lag_hi) continue;
        std::size_t cand = target;
        for (std::size_t c : {target - 1, target + 1})
            if (r[c] > r[cand]) cand = c;
        if (r[cand] > 0.0 && r[cand] >= 0.35 * r[best] && r[cand] >= r[cand - 1] &&
            r[cand] >= r[cand + 1]) {
            best = cand;
            break;
        }
    }
    double refined = static_cast<double>(best);
    const double denom = r[best - 1] - 2.0 * r[best] + r[best + 1];
    if (denom < 0.0) {
        double delta = 0.5 * (r[best - 1] - r[best + 1]) / denom;
        refined += std::clamp(delta, -0.5, 0.5);
    }
    out.f4 = refined / fps;
    return out;
}

std::size_t feature_window_start(std::size_t n, std::size_t sample_start,
                                 std::size_t sample_width, std::size_t z) {
    if (z > n) throw std::invalid_argument("feature window exceeds spectrogram length");
    const std::size_t center = sample_start + sample_width / 2;
    std::size_t lo = center > z / 2 ? center - z / 2 : 0;
    return std::min(lo, n - z);
}

std::vector<GaitFeatures> features_for_samples(const TimeDopplerSpectrogram& tds,
                                               const std::vector<std::size_t>& sample_starts,
                                               std::size_t sample_width,
                                               const FeatureWindowConfig& cfg) {
    const std::size_t n = tds.n();
    if (cfg.window_frames > n)
        throw std::invalid_argument("features_for_samples: feature window Z=" +
                                    std::to_string(cfg.window_frames) +
                                    " exceeds spectrogram length " + std::to_string(n));
    std::vector<GaitFeatures> out;
    out.reserve(sample_starts.size());
    for (std::size_t s : sample_starts) {
        if (s + sample_width > n)
            throw std::invalid_argument("features_for_samples: sample window out of bounds");
        std::size_t lo = feature_window_start(n, s, sample_width, cfg.window_frames);
        out.push_back(extract_features(tds_window(tds, lo, cfg.window_frames), cfg));
    }
    return out;
}

void write_features_csv(const std::filesystem::path& path,
                        const std::vector<FeatureCsvRow>& rows) {
    std::ostringstream ss;
    ss.precision(12);
    ss << "sample_id,label,f1,f2,f3,f4\n";
    for (const auto& r : rows)
        ss << r.sample_id << "," << r.label << "," << r.features.f1 << "," << r.features.f2 << ","
           << r.features.f3 << "," << r.features.f4 << "\n";
    atomic_write(path, ss.str());
}

}  // namespace demcl
