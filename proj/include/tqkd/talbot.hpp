// talbot.hpp
// Group-delay-dispersion propagation, time-of-arrival statistics, decision
// window calibration and X-basis confusion matrices for the temporal
// Talbot measurement.
//
// Conventions: the propagator multiplies the spectrum (forward FFT of the
// field) by exp(-i beta2 omega^2 / 2), omega being the baseband angular
// frequency in rad/ps. With the DFT-state phase convention of states.hpp
// this shifts the self-image of |f_n> by tau/2 - n*tau/d modulo tau, i.e.
// towards earlier times as n grows.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tqkd/fft.hpp"
#include "tqkd/states.hpp"

namespace tqkd::talbot {

// Ideal rectangular spectral mask. Frequencies are baseband; the mask is
// centered at the offset of center_nm from the carrier.
struct Bandpass {
    double center_nm = 1560.0;
    double width_nm = 4.0;
    double carrier_nm = 1560.0;

    void validate() const {
        if (!(center_nm > 0.0) || !(width_nm > 0.0) || !(carrier_nm > 0.0))
            throw std::invalid_argument("Bandpass: wavelengths must be positive");
    }
};

struct GddSpec {
    double beta2_ps2 = 12900.0;
    int s = 1;
    std::optional<Bandpass> bandpass;

    void validate() const {
        if (beta2_ps2 < 0.0) throw std::invalid_argument("GddSpec: beta2 must be nonnegative");
        if (s < 1) throw std::invalid_argument("GddSpec: Talbot integer s must be >= 1");
        if (bandpass) bandpass->validate();
    }
};

// tau = sqrt(2 pi beta2 / s)
inline double talbot_separation(double beta2_ps2, int s) {
    if (!(beta2_ps2 > 0.0)) throw std::invalid_argument("talbot_separation: beta2 must be positive");
    if (s < 1) throw std::invalid_argument("talbot_separation: s must be >= 1");
    return std::sqrt(2.0 * std::numbers::pi * beta2_ps2 / static_cast<double>(s));
}

struct ArrivalPdf {
    double t0_ps = 0.0;
    double dt_ps = 0.5;
    std::vector<double> density;

    double time_at(std::size_t i) const { return t0_ps + dt_ps * static_cast<double>(i); }

    double total_mass() const {
        double m = 0.0;
        for (double v : density) m += v;
        return m * dt_ps;
    }

    void validate() const {
        if (density.size() < 2) throw std::invalid_argument("ArrivalPdf: need at least two samples");
        for (double v : density)
            if (v < 0.0) throw std::invalid_argument("ArrivalPdf: negative density");
        if (std::abs(total_mass() - 1.0) > 1e-9)
            throw std::invalid_argument("ArrivalPdf: density is not normalized");
    }

    double mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < density.size(); ++i) m += density[i] * time_at(i);
        return m * dt_ps;
    }

    double rms_width() const {
        const double mu = mean();
        double v = 0.0;
        for (std::size_t i = 0; i < density.size(); ++i) {
            const double d = time_at(i) - mu;
            v += density[i] * d * d;
        }
        return std::sqrt(v * dt_ps);
    }

    // Time below which fraction q of the mass lies (linear within a bin).
    double quantile(double q) const {
        const double target = q * total_mass();
        double acc = 0.0;
        for (std::size_t i = 0; i < density.size(); ++i) {
            const double step = density[i] * dt_ps;
            if (acc + step >= target) {
                const double frac = step > 0.0 ? (target - acc) / step : 0.0;
                return time_at(i) + frac * dt_ps;
            }
            acc += step;
        }
        return time_at(density.size() - 1);
    }
};

namespace detail {

// Smallest time interval holding all but `tail` of the waveform energy.
inline std::pair<double, double> occupied_span(const states::SampledWaveform& w, double tail) {
    std::vector<double> e(w.samples.size());
    double total = 0.0;
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        e[i] = std::norm(w.samples[i]);
        total += e[i];
    }
    if (!(total > 0.0)) throw std::invalid_argument("propagate_gdd: zero-energy waveform");
    const double cut = 0.5 * tail * total;
    std::size_t lo = 0, hi = w.samples.size() - 1;
    double acc = 0.0;
    while (lo < hi && acc + e[lo] <= cut) acc += e[lo++];
    acc = 0.0;
    while (hi > lo && acc + e[hi] <= cut) acc += e[hi--];
    return {w.time_at(lo), w.time_at(hi)};
}

// Baseband angular frequency containing all but `tail` of the spectral energy.
inline double occupied_bandwidth(const std::vector<std::complex<double>>& spectrum, double dt, double tail) {
    const std::size_t n = spectrum.size();
    double total = 0.0;
    for (const auto& s : spectrum) total += std::norm(s);
    const double target = (1.0 - tail) * total;
    double acc = std::norm(spectrum[0]);
    std::size_t j = 0;
    while (acc < target && j < n / 2) {
        ++j;
        acc += std::norm(spectrum[j]);
        if (j < n - j) acc += std::norm(spectrum[n - j]);
    }
    return 2.0 * std::numbers::pi * static_cast<double>(j) / (static_cast<double>(n) * dt);
}

inline void apply_bandpass_mask(std::vector<std::complex<double>>& spectrum, double dt, const Bandpass& bp) {
    constexpr double c_nm_per_ps = 299792.458;
    const double delta_omega =
        2.0 * std::numbers::pi * c_nm_per_ps * (1.0 / bp.center_nm - 1.0 / bp.carrier_nm);
    const double half_width =
        std::numbers::pi * c_nm_per_ps * bp.width_nm / (bp.center_nm * bp.center_nm);
    const std::size_t n = spectrum.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double om = tqkd::detail::fft_omega(k, n, dt);
        if (std::abs(om - delta_omega) > half_width) spectrum[k] = {0.0, 0.0};
    }
}

}  // namespace detail

// Dispersive propagation through quadratic spectral phase. The grid is
// extended (powers of two, up to 2^22 samples) until less than 1e-6 of the
// output energy touches the boundaries.
inline states::SampledWaveform propagate_gdd(const states::SampledWaveform& w, const GddSpec& g) {
    g.validate();
    if (w.samples.size() < 2) throw std::invalid_argument("propagate_gdd: empty waveform");
    if (g.beta2_ps2 == 0.0 && !g.bandpass) return w;

    constexpr double kBoundaryTol = 1e-6;
    constexpr std::size_t kMaxSamples = std::size_t(1) << 22;
    const double dt = w.dt_ps;

    const auto [occ_lo, occ_hi] = detail::occupied_span(w, kBoundaryTol / 4.0);

    // Estimate the occupied bandwidth from the spectrum on a minimal grid;
    // the spectral envelope does not depend on zero padding.
    double omega_q;
    {
        std::vector<std::complex<double>> a(tqkd::detail::next_pow2(w.samples.size()), {0.0, 0.0});
        std::copy(w.samples.begin(), w.samples.end(), a.begin());
        tqkd::detail::fft_pow2(a, false);
        omega_q = detail::occupied_bandwidth(a, dt, kBoundaryTol / 4.0);
    }

    const double needed_span = (occ_hi - occ_lo) + 2.0 * g.beta2_ps2 * omega_q + 128.0 * dt;
    std::size_t n = std::max(tqkd::detail::next_pow2(w.samples.size()),
                             tqkd::detail::next_pow2(static_cast<std::size_t>(std::ceil(needed_span / dt))));

    for (;; n *= 2) {
        if (n > kMaxSamples)
            throw std::runtime_error("propagate_gdd: grid overflow, required span ~" +
                                     std::to_string(needed_span) + " ps exceeds 2^22 samples at dt=" +
                                     std::to_string(dt) + " ps");

        const std::size_t pad = n - w.samples.size();
        const std::size_t lo_pad = pad / 2;
        std::vector<std::complex<double>> a(n, {0.0, 0.0});
        std::copy(w.samples.begin(), w.samples.end(), a.begin() + static_cast<std::ptrdiff_t>(lo_pad));

        tqkd::detail::fft_pow2(a, false);
        if (g.bandpass) detail::apply_bandpass_mask(a, dt, *g.bandpass);
        for (std::size_t k = 0; k < n; ++k) {
            const double om = tqkd::detail::fft_omega(k, n, dt);
            const double phase = -0.5 * g.beta2_ps2 * om * om;
            a[k] *= std::complex<double>(std::cos(phase), std::sin(phase));
        }
        tqkd::detail::fft_pow2(a, true);

        double total = 0.0;
        for (const auto& s : a) total += std::norm(s);
        const std::size_t margin = std::max<std::size_t>(16, n / 256);
        double edge = 0.0;
        for (std::size_t i = 0; i < margin; ++i) edge += std::norm(a[i]) + std::norm(a[n - 1 - i]);
        if (total > 0.0 && edge > kBoundaryTol * total) continue;

        states::SampledWaveform out;
        out.t0_ps = w.t0_ps - static_cast<double>(lo_pad) * dt;
        out.dt_ps = dt;
        out.params = w.params;
        out.samples = std::move(a);
        return out;
    }
}

inline ArrivalPdf arrival_pdf(const states::SampledWaveform& w) {
    const double e = w.energy();
    if (!(e > 0.0)) throw std::invalid_argument("arrival_pdf: zero-energy waveform");
    ArrivalPdf p;
    p.t0_ps = w.t0_ps;
    p.dt_ps = w.dt_ps;
    p.density.resize(w.samples.size());
    for (std::size_t i = 0; i < w.samples.size(); ++i) p.density[i] = std::norm(w.samples[i]) / e;
    return p;
}

// Convolution with a zero-mean Gaussian of standard deviation sigma_rms,
// evaluated spectrally so normalization is preserved.
inline ArrivalPdf apply_jitter(const ArrivalPdf& p, double sigma_rms_ps) {
    if (sigma_rms_ps < 0.0) throw std::invalid_argument("apply_jitter: negative sigma");
    if (sigma_rms_ps == 0.0) return p;

    const double dt = p.dt_ps;
    const std::size_t guard = static_cast<std::size_t>(std::ceil(8.0 * sigma_rms_ps / dt));
    const std::size_t n = tqkd::detail::next_pow2(p.density.size() + 2 * guard);
    const std::size_t lo_pad = (n - p.density.size()) / 2;

    const double mass_in = p.total_mass();
    std::vector<std::complex<double>> a(n, {0.0, 0.0});
    for (std::size_t i = 0; i < p.density.size(); ++i) a[lo_pad + i] = p.density[i];
    tqkd::detail::fft_pow2(a, false);
    for (std::size_t k = 0; k < n; ++k) {
        const double om = tqkd::detail::fft_omega(k, n, dt);
        a[k] *= std::exp(-0.5 * sigma_rms_ps * sigma_rms_ps * om * om);
    }
    tqkd::detail::fft_pow2(a, true);

    ArrivalPdf out;
    out.t0_ps = p.t0_ps - static_cast<double>(lo_pad) * dt;
    out.dt_ps = dt;
    out.density.resize(n);
    double mass_out = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.density[i] = std::max(a[i].real(), 0.0);
        mass_out += out.density[i];
    }
    mass_out *= dt;
    if (mass_out > 0.0) {
        const double scale = mass_in / mass_out;
        for (auto& v : out.density) v *= scale;
    }
    return out;
}

// d windows of width period/d tiling each period, plus the absolute time
// range accepted at all. Events outside [accept_lo, accept_hi] are
// no-detections and never enter a confusion matrix.
struct DecisionWindows {
    double period_ps = 0.0;
    std::vector<double> offsets_ps;  // window center for each state, in [0, period)
    double accept_lo_ps = 0.0;
    double accept_hi_ps = 0.0;

    int dim() const { return static_cast<int>(offsets_ps.size()); }
    double width_ps() const { return period_ps / static_cast<double>(dim()); }
    double acceptance_span_ps() const { return accept_hi_ps - accept_lo_ps; }

    // State whose window contains the arrival time; nullopt if the time is
    // outside the acceptance span. Window membership is nearest-center in
    // the circular metric, which coincides with the width-period/d tiling.
    std::optional<int> classify(double t_ps) const {
        if (t_ps < accept_lo_ps || t_ps > accept_hi_ps) return std::nullopt;
        double u = std::fmod(t_ps, period_ps);
        if (u < 0.0) u += period_ps;
        int best = 0;
        double best_dist = period_ps;
        for (int n = 0; n < dim(); ++n) {
            double d = std::abs(u - offsets_ps[static_cast<std::size_t>(n)]);
            d = std::min(d, period_ps - d);
            if (d < best_dist) {
                best_dist = d;
                best = n;
            }
        }
        return best;
    }
};

struct ConfusionMatrix {
    int d = 0;
    std::vector<double> p;  // row-major, p[n*d + k] = P(classified as k | state n)

    double at(int n, int k) const { return p[static_cast<std::size_t>(n * d + k)]; }
    double& at(int n, int k) { return p[static_cast<std::size_t>(n * d + k)]; }

    // 1 - mean diagonal
    double error_rate() const {
        double diag = 0.0;
        for (int n = 0; n < d; ++n) diag += at(n, n);
        return 1.0 - diag / static_cast<double>(d);
    }
};

namespace detail {

// Mass of pdf restricted to [lo, hi], folded modulo `period` into nfold bins.
// Sample mass is split linearly between the two nearest bins.
inline std::vector<double> fold_masses(const ArrivalPdf& pdf, double lo, double hi, double period,
                                       std::size_t nfold) {
    std::vector<double> out(nfold, 0.0);
    const double binw = period / static_cast<double>(nfold);
    for (std::size_t i = 0; i < pdf.density.size(); ++i) {
        const double t = pdf.time_at(i);
        if (t < lo || t > hi || pdf.density[i] == 0.0) continue;
        double u = std::fmod(t, period);
        if (u < 0.0) u += period;
        const double pos = u / binw - 0.5;
        const double fl = std::floor(pos);
        const double frac = pos - fl;
        const long b0 = static_cast<long>(fl);
        const std::size_t i0 = static_cast<std::size_t>((b0 % static_cast<long>(nfold) + nfold) % nfold);
        const std::size_t i1 = (i0 + 1) % nfold;
        const double m = pdf.density[i] * pdf.dt_ps;
        out[i0] += m * (1.0 - frac);
        out[i1] += m * frac;
    }
    return out;
}

}  // namespace detail

// Dispersed noiseless state PDFs plus the windows calibrated from them.
// Shared by confusion sweeps and the Monte Carlo receiver model.
class XBasisModel {
  public:
    states::PulseParams pulses;
    GddSpec gdd;
    std::vector<ArrivalPdf> state_pdfs;  // dispersed |f_n>
    ArrivalPdf time_state_pdf;           // dispersed |t_0>; |t_m> is this shifted by m*tau
    DecisionWindows windows;

    static XBasisModel build(const states::PulseParams& p, const GddSpec& g, double tau_tolerance = 0.01) {
        p.validate();
        g.validate();
        if (!(g.beta2_ps2 > 0.0))
            throw std::invalid_argument("XBasisModel: Talbot calibration requires beta2 > 0");

        const double tau_star = talbot_separation(g.beta2_ps2, g.s);
        if (std::abs(p.separation_ps - tau_star) > tau_tolerance * tau_star)
            throw std::runtime_error(
                "calibrate_windows: pulse separation violates the Talbot condition (expected ~" +
                std::to_string(tau_star) + " ps, got " + std::to_string(p.separation_ps) + " ps)");

        XBasisModel model;
        model.pulses = p;
        model.gdd = g;
        const auto grid = states::default_grid(p);
        for (int n = 0; n < p.d; ++n) {
            const auto w = states::synthesize_waveform(states::dft_basis_vector(p.d, n), p, grid);
            model.state_pdfs.push_back(arrival_pdf(propagate_gdd(w, g)));
        }
        model.time_state_pdf =
            arrival_pdf(propagate_gdd(states::synthesize_waveform(states::time_basis_vector(p.d, 0), p, grid), g));

        model.calibrate();
        return model;
    }

    ConfusionMatrix confusion(double sigma_rms_ps) const {
        if (sigma_rms_ps < 0.0) throw std::invalid_argument("x_basis_confusion: negative sigma");
        const int d = pulses.d;
        const double tau = pulses.separation_ps;
        const std::size_t nfold = fold_bins(d);
        const std::size_t per_window = nfold / static_cast<std::size_t>(d);

        ConfusionMatrix cm;
        cm.d = d;
        cm.p.assign(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), 0.0);
        for (int n = 0; n < d; ++n) {
            const ArrivalPdf jittered = apply_jitter(state_pdfs[static_cast<std::size_t>(n)], sigma_rms_ps);
            const auto folded =
                detail::fold_masses(jittered, windows.accept_lo_ps, windows.accept_hi_ps, tau, nfold);
            double row_total = 0.0;
            std::vector<double> row(static_cast<std::size_t>(d), 0.0);
            for (int k = 0; k < d; ++k) {
                // window of state k = tile assign_[k] of the calibrated tiling
                const std::size_t start = off_bins_ + static_cast<std::size_t>(assign_[static_cast<std::size_t>(k)]) * per_window;
                double m = 0.0;
                for (std::size_t j = 0; j < per_window; ++j) m += folded[(start + j) % nfold];
                row[static_cast<std::size_t>(k)] = m;
                row_total += m;
            }
            if (!(row_total > 0.0))
                throw std::runtime_error("x_basis_confusion: state " + std::to_string(n) +
                                         " has no accepted mass");
            for (int k = 0; k < d; ++k) cm.at(n, k) = row[static_cast<std::size_t>(k)] / row_total;
        }
        return cm;
    }

  private:
    std::size_t off_bins_ = 0;
    std::vector<int> assign_;  // tile index of each state's window

    static std::size_t fold_bins(int d) {
        const std::size_t k = std::max<std::size_t>(
            64, (2048 + static_cast<std::size_t>(d) - 1) / static_cast<std::size_t>(d));
        return static_cast<std::size_t>(d) * k;
    }

    void calibrate() {
        const int d = pulses.d;
        const double tau = pulses.separation_ps;
        const std::size_t nfold = fold_bins(d);
        const std::size_t per_window = nfold / static_cast<std::size_t>(d);
        const double binw = tau / static_cast<double>(nfold);

        // Acceptance span: 99.9% coverage of every state's mass.
        double lo = state_pdfs[0].quantile(0.0005);
        double hi = state_pdfs[0].quantile(0.9995);
        for (int n = 1; n < d; ++n) {
            lo = std::min(lo, state_pdfs[static_cast<std::size_t>(n)].quantile(0.0005));
            hi = std::max(hi, state_pdfs[static_cast<std::size_t>(n)].quantile(0.9995));
        }

        std::vector<std::vector<double>> folded;
        folded.reserve(static_cast<std::size_t>(d));
        for (int n = 0; n < d; ++n)
            folded.push_back(detail::fold_masses(state_pdfs[static_cast<std::size_t>(n)], lo, hi, tau, nfold));

        // Prefix sums over two periods for circular window masses.
        std::vector<std::vector<double>> csum(static_cast<std::size_t>(d));
        for (int n = 0; n < d; ++n) {
            auto& c = csum[static_cast<std::size_t>(n)];
            c.assign(2 * nfold + 1, 0.0);
            for (std::size_t i = 0; i < 2 * nfold; ++i)
                c[i + 1] = c[i] + folded[static_cast<std::size_t>(n)][i % nfold];
        }
        auto window_mass = [&](int n, std::size_t start_bin) {
            const auto& c = csum[static_cast<std::size_t>(n)];
            return c[start_bin + per_window] - c[start_bin];
        };

        // Scan tiling offsets; each state picks its best width-tau/d window
        // and the assignment must be a bijection.
        double best_score = -1.0;
        std::size_t best_off = 0;
        std::vector<int> best_assign;
        for (std::size_t off = 0; off < per_window; ++off) {
            std::vector<int> assign(static_cast<std::size_t>(d), -1);
            std::vector<bool> used(static_cast<std::size_t>(d), false);
            bool ok = true;
            double score = 0.0;
            for (int n = 0; n < d && ok; ++n) {
                double best_m = -1.0;
                int best_k = 0;
                for (int k = 0; k < d; ++k) {
                    const double m = window_mass(n, off + static_cast<std::size_t>(k) * per_window);
                    if (m > best_m) {
                        best_m = m;
                        best_k = k;
                    }
                }
                if (used[static_cast<std::size_t>(best_k)]) ok = false;
                used[static_cast<std::size_t>(best_k)] = true;
                assign[static_cast<std::size_t>(n)] = best_k;
                score += best_m;
            }
            if (ok && score > best_score) {
                best_score = score;
                best_off = off;
                best_assign = assign;
            }
        }
        if (best_assign.empty())
            throw std::runtime_error(
                "calibrate_windows: ambiguous calibration, two states share a window "
                "(check tau against the Talbot condition)");

        off_bins_ = best_off;
        assign_ = best_assign;
        windows.period_ps = tau;
        windows.accept_lo_ps = lo;
        windows.accept_hi_ps = hi;
        windows.offsets_ps.resize(static_cast<std::size_t>(d));
        for (int n = 0; n < d; ++n) {
            const double center = (static_cast<double>(best_off) +
                                   (static_cast<double>(best_assign[static_cast<std::size_t>(n)]) + 0.5) *
                                       static_cast<double>(per_window)) *
                                  binw;
            windows.offsets_ps[static_cast<std::size_t>(n)] = std::fmod(center, tau);
        }
    }
};

inline DecisionWindows calibrate_windows(const states::PulseParams& p, const GddSpec& g,
                                         double tau_tolerance = 0.01) {
    return XBasisModel::build(p, g, tau_tolerance).windows;
}

inline ConfusionMatrix x_basis_confusion(const states::PulseParams& p, const GddSpec& g,
                                         double sigma_rms_ps) {
    return XBasisModel::build(p, g).confusion(sigma_rms_ps);
}

}  // namespace tqkd::talbot
