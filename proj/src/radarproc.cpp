#include "demcl/radarproc.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace demcl {

void validate_frame(const RadarFrame& frame) {
    if (frame.k() < 2 || frame.l() < 2)
        throw std::invalid_argument("RadarFrame: K and L must both be >= 2");
    if (frame.samples.v.size() != frame.k() * frame.l())
        throw std::invalid_argument("RadarFrame: sample grid is not K x L");
    if (!(frame.frame_rate > 0.0))
        throw std::invalid_argument("RadarFrame: frame_rate must be positive");
}

namespace {

// FFTW's planner mutates global state; executing a plan does not.
std::mutex g_fftw_mutex;

ComplexMat run_fftw(const ComplexMat& in, int sign, double scale) {
    if (in.rows == 0 || in.cols == 0)
        throw std::invalid_argument("fft2d: zero-sized input grid");
    ComplexMat out(in.rows, in.cols);
    // fftw_complex is bit-compatible with std::complex<double>
    auto* src = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.v.data()));
    auto* dst = reinterpret_cast<fftw_complex*>(out.v.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        plan = fftw_plan_dft_2d(static_cast<int>(in.rows), static_cast<int>(in.cols),
                                src, dst, sign, FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    }
    if (!plan) throw std::runtime_error("fft2d: FFTW plan creation failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        fftw_destroy_plan(plan);
    }
    if (scale != 1.0)
        for (auto& z : out.v) z *= scale;
    return out;
}

}  // namespace

ComplexMat fft2d(const ComplexMat& grid) { return run_fftw(grid, FFTW_FORWARD, 1.0); }

ComplexMat fft2d(const RadarFrame& frame) {
    validate_frame(frame);
    return fft2d(frame.samples);
}

ComplexMat ifft2d(const ComplexMat& spectrum) {
    double scale = 1.0 / (static_cast<double>(spectrum.rows) * static_cast<double>(spectrum.cols));
    return run_fftw(spectrum, FFTW_BACKWARD, scale);
}

RangeDopplerMap to_rdm(const RadarFrame& frame, BinRange keep_range_bins, AxisCalibration cal) {
    validate_frame(frame);
    const std::size_t k = frame.k();
    const std::size_t l = frame.l();
    if (keep_range_bins.hi > k || keep_range_bins.count() == 0)
        throw std::invalid_argument("to_rdm: empty or out-of-range range-bin selection");

    ComplexMat spec = fft2d(frame.samples);

    const std::size_t r = keep_range_bins.count();
    const std::size_t shift = l / 2;  // zero Doppler lands on bin l/2 after the shift
    RangeDopplerMap rdm;
    rdm.frame_index = frame.frame_index;
    rdm.magnitude_db = RealMat(r, l);
    for (std::size_t u = 0; u < r; ++u) {
        for (std::size_t v = 0; v < l; ++v) {
            std::size_t src_v = (v + shift) % l;  // fftshift along Doppler
            double mag = std::abs(spec.at(keep_range_bins.lo + u, src_v));
            rdm.magnitude_db.at(u, v) = 20.0 * std::log10(std::max(mag, kDbEpsilon));
        }
    }
    rdm.range_axis.resize(r);
    for (std::size_t u = 0; u < r; ++u)
        rdm.range_axis[u] = static_cast<double>(keep_range_bins.lo + u) * cal.range_m_per_bin;
    rdm.doppler_axis.resize(l);
    for (std::size_t v = 0; v < l; ++v)
        rdm.doppler_axis[v] =
            (static_cast<double>(v) - static_cast<double>(shift)) * cal.doppler_unit_per_bin;
    return rdm;
}

double percentile(std::vector<double> xs, double p) {
    if (xs.empty()) throw std::invalid_argument("percentile: empty sample set");
    std::sort(xs.begin(), xs.end());
    double pos = (p / 100.0) * static_cast<double>(xs.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, xs.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return xs[lo] + (xs[hi] - xs[lo]) * frac;
}

RangeDopplerMap denoise_rdm(const RangeDopplerMap& rdm, const DenoiseConfig& cfg) {
    if (!(cfg.percentile > 0.0 && cfg.percentile < 100.0))
        throw std::invalid_argument("denoise_rdm: percentile must lie in (0,100)");
    RangeDopplerMap out = rdm;
    const std::size_t r = rdm.range_bins();
    const std::size_t d = rdm.doppler_bins();
    std::vector<double> column(r);
    for (std::size_t v = 0; v < d; ++v) {
        for (std::size_t u = 0; u < r; ++u) column[u] = rdm.magnitude_db.at(u, v);
        double floor_db = percentile(column, cfg.percentile);
        for (std::size_t u = 0; u < r; ++u) {
            double x = rdm.magnitude_db.at(u, v);
            out.magnitude_db.at(u, v) = (x < floor_db + cfg.margin_db) ? floor_db : x;
        }
    }
    return out;
}

std::size_t zero_doppler_bin(const RangeDopplerMap& rdm) {
    std::size_t best = 0;
    double best_abs = std::abs(rdm.doppler_axis.at(0));
    for (std::size_t v = 1; v < rdm.doppler_axis.size(); ++v) {
        double a = std::abs(rdm.doppler_axis[v]);
        if (a < best_abs) {
            best_abs = a;
            best = v;
        }
    }
    return best;
}

RangeDopplerMap suppress_zero_doppler(const RangeDopplerMap& rdm, double atten_db,
                                      std::size_t half_width) {
    if (atten_db < 0.0)
        throw std::invalid_argument("suppress_zero_doppler: attenuation must be >= 0 dB");
    const std::size_t d = rdm.doppler_bins();
    if (half_width >= (d + 1) / 2)
        throw std::invalid_argument("suppress_zero_doppler: half_width must be < D/2");
    RangeDopplerMap out = rdm;
    if (atten_db == 0.0) return out;
    const std::size_t zi = zero_doppler_bin(rdm);
    const std::size_t lo = zi >= half_width ? zi - half_width : 0;
    const std::size_t hi = std::min(zi + half_width, d - 1);
    for (std::size_t u = 0; u < rdm.range_bins(); ++u)
        for (std::size_t v = lo; v <= hi; ++v)
            out.magnitude_db.at(u, v) = rdm.magnitude_db.at(u, v) - atten_db;
    return out;
}

std::vector<double> doppler_profile(const RangeDopplerMap& rdm) {
    const std::size_t r = rdm.range_bins();
    const std::size_t d = rdm.doppler_bins();
    std::vector<double> e(d, 0.0);
    for (std::size_t u = 0; u < r; ++u)
        for (std::size_t v = 0; v < d; ++v) e[v] += rdm.magnitude_db.at(u, v);
    return e;
}

TimeDopplerSpectrogram build_tds(const std::vector<std::vector<double>>& profiles,
                                 double frame_rate) {
    if (profiles.empty()) throw std::invalid_argument("build_tds: no profiles");
    const std::size_t d = profiles.front().size();
    for (const auto& p : profiles)
        if (p.size() != d) throw std::invalid_argument("build_tds: profile lengths differ");
    TimeDopplerSpectrogram tds;
    tds.frame_rate = frame_rate;
    tds.profiles = RealMat(profiles.size(), d);
    for (std::size_t i = 0; i < profiles.size(); ++i)
        std::copy(profiles[i].begin(), profiles[i].end(), tds.profiles.v.begin() + i * d);
    return tds;
}

std::vector<std::size_t> window_starts(std::size_t n, std::size_t width, std::size_t stride) {
    if (stride == 0) throw std::invalid_argument("window_starts: stride must be >= 1");
    std::vector<std::size_t> starts;
    if (width == 0 || width > n) return starts;
    for (std::size_t s = 0; s + width <= n; s += stride) starts.push_back(s);
    return starts;
}

TimeDopplerSpectrogram tds_window(const TimeDopplerSpectrogram& tds, std::size_t start,
                                  std::size_t width) {
    if (start + width > tds.n())
        throw std::invalid_argument("tds_window: window exceeds spectrogram bounds");
    TimeDopplerSpectrogram w;
    w.frame_rate = tds.frame_rate;
    w.profiles = RealMat(width, tds.doppler_bins());
    std::copy(tds.profiles.v.begin() + start * tds.doppler_bins(),
              tds.profiles.v.begin() + (start + width) * tds.doppler_bins(),
              w.profiles.v.begin());
    return w;
}

std::vector<TimeDopplerSpectrogram> slice_windows(const TimeDopplerSpectrogram& tds,
                                                  std::size_t width, std::size_t stride) {
    std::vector<TimeDopplerSpectrogram> windows;
    for (std::size_t s : window_starts(tds.n(), width, stride))
        windows.push_back(tds_window(tds, s, width));
    return windows;
}

}  // namespace demcl
