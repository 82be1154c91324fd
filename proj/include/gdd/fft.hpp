#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "gdd/error.hpp"

namespace gdd::fft {

using cplx = std::complex<double>;

namespace detail {

// In-place iterative radix-2, n must be a power of two.
inline void radix2(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const std::size_t half = len / 2;
        // Twiddles computed directly rather than by repeated multiplication
        // to keep the error flat in the transform length.
        std::vector<cplx> w(half);
        for (std::size_t k = 0; k < half; ++k) w[k] = std::polar(1.0, ang * static_cast<double>(k));
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + half] * w[k];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

// Bluestein chirp-z: expresses a length-n DFT as a convolution evaluated
// with power-of-two transforms.
inline void bluestein(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    const std::size_t m = std::bit_ceil(2 * n - 1);
    const double sign = inverse ? 1.0 : -1.0;

    std::vector<cplx> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument small for long inputs.
        const std::size_t k2 = (k * k) % (2 * n);
        chirp[k] = std::polar(1.0, sign * std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n));
    }

    std::vector<cplx> x(m), y(m);
    for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
    y[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) y[k] = y[m - k] = std::conj(chirp[k]);

    radix2(x, false);
    radix2(y, false);
    for (std::size_t i = 0; i < m; ++i) x[i] *= y[i];
    radix2(x, true);

    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * scale * chirp[k];
}

} // namespace detail

/// Unnormalized DFT of any length; the inverse divides by n.
inline void transform(std::vector<cplx>& a, bool inverse = false) {
    const std::size_t n = a.size();
    if (n <= 1) return;
    if (std::has_single_bit(n))
        detail::radix2(a, inverse);
    else
        detail::bluestein(a, inverse);
    if (inverse) {
        const double s = 1.0 / static_cast<double>(n);
        for (auto& v : a) v *= s;
    }
}

inline std::vector<cplx> forward(std::span<const double> x) {
    std::vector<cplx> a(x.begin(), x.end());
    transform(a, false);
    return a;
}

/// Real part of the inverse transform. Throws if the imaginary residue is
/// larger than `tol` relative to the output magnitude.
inline std::vector<double> inverse_real(std::vector<cplx> a, double tol = 1e-9) {
    transform(a, true);
    double peak = 1.0;
    for (const auto& v : a) peak = std::max(peak, std::abs(v.real()));
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i].imag()) > tol * peak) throw numeric_error("fft: imaginary residue above tolerance");
        out[i] = a[i].real();
    }
    return out;
}

/// out[k] = sum_i a[i] * b[(i + k) mod d], via conj(F(a)) * F(b).
inline std::vector<double> correlate(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw shape_error("circular correlation: lengths " + std::to_string(a.size()) + " and " +
                          std::to_string(b.size()) + " differ");
    auto fa = forward(a);
    const auto fb = forward(b);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] = std::conj(fa[i]) * fb[i];
    return inverse_real(std::move(fa));
}

/// out[k] = sum_i a[i] * b[(k - i) mod d], via F(a) * F(b).
inline std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw shape_error("circular convolution: lengths " + std::to_string(a.size()) + " and " +
                          std::to_string(b.size()) + " differ");
    auto fa = forward(a);
    const auto fb = forward(b);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
    return inverse_real(std::move(fa));
}

} // namespace gdd::fft
