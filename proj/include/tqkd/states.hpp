// states.hpp
// Time-bin qudit basis states, their DFT superpositions, and sampled
// optical waveforms on a uniform time grid (all times in picoseconds).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tqkd::states {

enum class PulseShape { rectangular, gaussian };

// For gaussian pulses, pulse_width_ps is the intensity FWHM.
struct PulseParams {
    int d = 2;
    double pulse_width_ps = 46.0;
    double separation_ps = 284.699;
    PulseShape shape = PulseShape::rectangular;

    void validate() const {
        if (d < 2) throw std::invalid_argument("PulseParams: d must be >= 2");
        if (!(pulse_width_ps > 0.0) || !(pulse_width_ps < separation_ps))
            throw std::invalid_argument("PulseParams: need 0 < pulse_width < separation");
    }

    // Half-extent of a single pulse beyond which its amplitude is negligible.
    double pulse_half_support() const {
        if (shape == PulseShape::rectangular) return 0.5 * pulse_width_ps;
        return 5.0 * intensity_sigma();
    }

    double intensity_sigma() const {
        return pulse_width_ps / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    }
};

struct GridSpec {
    double t0_ps = 0.0;
    double dt_ps = 0.5;
    std::size_t count = 0;

    void validate() const {
        if (!(dt_ps > 0.0)) throw std::invalid_argument("GridSpec: dt must be positive");
        if (count < 2) throw std::invalid_argument("GridSpec: need at least two samples");
    }
    double t_end_ps() const { return t0_ps + dt_ps * static_cast<double>(count - 1); }
};

struct QuditVector {
    std::vector<std::complex<double>> amplitudes;

    int dim() const { return static_cast<int>(amplitudes.size()); }

    double norm_sq() const {
        double s = 0.0;
        for (const auto& a : amplitudes) s += std::norm(a);
        return s;
    }

    void validate() const {
        if (amplitudes.size() < 2) throw std::invalid_argument("QuditVector: dimension must be >= 2");
        if (std::abs(norm_sq() - 1.0) > 1e-12)
            throw std::invalid_argument("QuditVector: state is not normalized");
    }
};

struct SampledWaveform {
    double t0_ps = 0.0;
    double dt_ps = 0.5;
    std::vector<std::complex<double>> samples;
    PulseParams params;

    double time_at(std::size_t i) const { return t0_ps + dt_ps * static_cast<double>(i); }

    double energy() const {
        double e = 0.0;
        for (const auto& s : samples) e += std::norm(s);
        return e * dt_ps;
    }
};

inline QuditVector time_basis_vector(int d, int m) {
    if (d < 2) throw std::invalid_argument("time_basis_vector: d must be >= 2");
    if (m < 0 || m >= d) throw std::out_of_range("time_basis_vector: index out of range");
    QuditVector v;
    v.amplitudes.assign(static_cast<std::size_t>(d), {0.0, 0.0});
    v.amplitudes[static_cast<std::size_t>(m)] = {1.0, 0.0};
    return v;
}

// |f_n> = (1/sqrt(d)) sum_m exp(-2 pi i n m / d) |t_m>
inline QuditVector dft_basis_vector(int d, int n) {
    if (d < 2) throw std::invalid_argument("dft_basis_vector: d must be >= 2");
    if (n < 0 || n >= d) throw std::out_of_range("dft_basis_vector: index out of range");
    QuditVector v;
    v.amplitudes.resize(static_cast<std::size_t>(d));
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (int m = 0; m < d; ++m) {
        const double phase = -2.0 * std::numbers::pi * static_cast<double>(n) * static_cast<double>(m) /
                             static_cast<double>(d);
        v.amplitudes[static_cast<std::size_t>(m)] = std::polar(scale, phase);
    }
    return v;
}

inline double overlap_probability(const QuditVector& a, const QuditVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("overlap_probability: dimension mismatch");
    std::complex<double> ip{0.0, 0.0};
    for (std::size_t i = 0; i < a.amplitudes.size(); ++i) ip += std::conj(a.amplitudes[i]) * b.amplitudes[i];
    return std::norm(ip);
}

// Grid spanning the full pulse train with two separations of guard on each side.
inline GridSpec default_grid(const PulseParams& p, double dt_ps = 0.5) {
    p.validate();
    const double guard = 2.0 * p.separation_ps;
    const double t0 = -guard;
    const double t_end = static_cast<double>(p.d - 1) * p.separation_ps + guard;
    GridSpec g;
    g.t0_ps = t0;
    g.dt_ps = dt_ps;
    g.count = static_cast<std::size_t>(std::ceil((t_end - t0) / dt_ps)) + 1;
    return g;
}

namespace detail {

inline double pulse_amplitude(const PulseParams& p, double t) {
    if (p.shape == PulseShape::rectangular) {
        return (std::abs(t) < 0.5 * p.pulse_width_ps) ? 1.0 / std::sqrt(p.pulse_width_ps) : 0.0;
    }
    const double sig = p.intensity_sigma();
    const double norm = std::pow(2.0 * std::numbers::pi * sig * sig, -0.25);
    return norm * std::exp(-t * t / (4.0 * sig * sig));
}

}  // namespace detail

// Pulse train sum_m amplitudes[m] * pulse(t - m*tau), numerically normalized
// to unit energy.
inline SampledWaveform synthesize_waveform(const QuditVector& v, const PulseParams& p, const GridSpec& grid) {
    v.validate();
    p.validate();
    grid.validate();
    if (v.dim() != p.d) throw std::invalid_argument("synthesize_waveform: state dimension != params.d");

    const double half = p.pulse_half_support();
    const double first = -half;
    const double last = static_cast<double>(p.d - 1) * p.separation_ps + half;
    if (grid.t0_ps > first || grid.t_end_ps() < last)
        throw std::invalid_argument("synthesize_waveform: grid too short for the pulse train");

    SampledWaveform w;
    w.t0_ps = grid.t0_ps;
    w.dt_ps = grid.dt_ps;
    w.params = p;
    w.samples.assign(grid.count, {0.0, 0.0});
    for (int m = 0; m < p.d; ++m) {
        const auto amp = v.amplitudes[static_cast<std::size_t>(m)];
        if (amp == std::complex<double>{0.0, 0.0}) continue;
        const double center = static_cast<double>(m) * p.separation_ps;
        for (std::size_t i = 0; i < grid.count; ++i) {
            const double t = w.time_at(i) - center;
            if (std::abs(t) > half) continue;
            w.samples[i] += amp * detail::pulse_amplitude(p, t);
        }
    }

    const double e = w.energy();
    if (!(e > 0.0)) throw std::invalid_argument("synthesize_waveform: zero-energy waveform");
    const double scale = 1.0 / std::sqrt(e);
    for (auto& s : w.samples) s *= scale;
    return w;
}

// --- serialization ------------------------------------------------------
//
// CSV: header "t_ps,re,im", one row per sample.
// Binary: 16-byte header (magic "TQKDWAV1", u32 sample count, u32 reserved),
// then little-endian f64 triples (t_ps, re, im).

inline void write_waveform_csv(std::ostream& os, const SampledWaveform& w) {
    os << "t_ps,re,im\n";
    os.precision(17);
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        os << w.time_at(i) << ',' << w.samples[i].real() << ',' << w.samples[i].imag() << '\n';
}

inline SampledWaveform read_waveform_csv(std::istream& is, const PulseParams& params = {}) {
    SampledWaveform w;
    w.params = params;
    std::string line;
    if (!std::getline(is, line) || line.rfind("t_ps", 0) != 0)
        throw std::runtime_error("waveform csv: missing t_ps,re,im header");
    std::vector<double> ts;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        double t, re, im;
        char c1, c2;
        if (!(ss >> t >> c1 >> re >> c2 >> im) || c1 != ',' || c2 != ',')
            throw std::runtime_error("waveform csv: malformed line " + std::to_string(lineno));
        ts.push_back(t);
        w.samples.emplace_back(re, im);
    }
    if (ts.size() < 2) throw std::runtime_error("waveform csv: need at least two samples");
    w.t0_ps = ts.front();
    w.dt_ps = (ts.back() - ts.front()) / static_cast<double>(ts.size() - 1);
    return w;
}

namespace detail {

constexpr char kWaveformMagic[8] = {'T', 'Q', 'K', 'D', 'W', 'A', 'V', '1'};

inline void put_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("binary read: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f64_le(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("binary read: truncated payload");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace detail

inline void write_waveform_bin(std::ostream& os, const SampledWaveform& w) {
    os.write(detail::kWaveformMagic, 8);
    detail::put_u32_le(os, static_cast<std::uint32_t>(w.samples.size()));
    detail::put_u32_le(os, 0);  // reserved
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        detail::put_f64_le(os, w.time_at(i));
        detail::put_f64_le(os, w.samples[i].real());
        detail::put_f64_le(os, w.samples[i].imag());
    }
}

inline SampledWaveform read_waveform_bin(std::istream& is, const PulseParams& params = {}) {
    char magic[8];
    is.read(magic, 8);
    if (!is || !std::equal(magic, magic + 8, detail::kWaveformMagic))
        throw std::runtime_error("waveform binary: bad magic");
    const std::uint32_t count = detail::get_u32_le(is);
    detail::get_u32_le(is);  // reserved
    if (count < 2) throw std::runtime_error("waveform binary: need at least two samples");
    SampledWaveform w;
    w.params = params;
    w.samples.reserve(count);
    double t_first = 0.0, t_last = 0.0;
    for (std::uint32_t i = 0; i < count; ++i) {
        const double t = detail::get_f64_le(is);
        const double re = detail::get_f64_le(is);
        const double im = detail::get_f64_le(is);
        if (i == 0) t_first = t;
        t_last = t;
        w.samples.emplace_back(re, im);
    }
    w.t0_ps = t_first;
    w.dt_ps = (t_last - t_first) / static_cast<double>(count - 1);
    return w;
}

}  // namespace tqkd::states
