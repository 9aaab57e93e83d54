// fft.hpp
// In-place radix-2 FFT used by the dispersion and jitter machinery.

#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace tqkd::detail {

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative Cooley-Tukey, decimation in time. Forward uses e^{-i 2pi k n / N};
// inverse uses the conjugate kernel and scales by 1/N.
inline void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (!is_pow2(n)) throw std::invalid_argument("fft_pow2: size must be a power of two");
    if (n == 1) return;

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

// Angular frequency of FFT bin k on a grid with spacing dt, in rad/ps.
// Bins above n/2 map to negative frequencies.
inline double fft_omega(std::size_t k, std::size_t n, double dt) {
    const double f = (k <= n / 2) ? static_cast<double>(k)
                                  : static_cast<double>(k) - static_cast<double>(n);
    return 2.0 * std::numbers::pi * f / (static_cast<double>(n) * dt);
}

}  // namespace tqkd::detail
