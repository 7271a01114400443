#include "deimlab/fft.hpp"

#include "deimlab/errors.hpp"

#include <cmath>
#include <numbers>

namespace deimlab {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_radix2(std::vector<std::complex<double>>& data, bool inverse) {
    const std::size_t n = data.size();
    if (!is_power_of_two(n)) {
        throw ParameterError("fft: length must be a power of two, got " + std::to_string(n));
    }
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = data[i + k];
                const std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& c : data) c *= inv;
    }
}

void fft2(std::vector<std::complex<double>>& data, std::size_t ny, std::size_t nx,
          bool inverse) {
    if (data.size() != ny * nx) {
        throw DimensionError("fft2: data length does not match ny*nx");
    }
    std::vector<std::complex<double>> scratch(std::max(ny, nx));
    for (std::size_t y = 0; y < ny; ++y) {
        scratch.assign(data.begin() + static_cast<std::ptrdiff_t>(y * nx),
                       data.begin() + static_cast<std::ptrdiff_t>((y + 1) * nx));
        fft_radix2(scratch, inverse);
        std::copy(scratch.begin(), scratch.end(),
                  data.begin() + static_cast<std::ptrdiff_t>(y * nx));
    }
    for (std::size_t x = 0; x < nx; ++x) {
        scratch.resize(ny);
        for (std::size_t y = 0; y < ny; ++y) scratch[y] = data[y * nx + x];
        fft_radix2(scratch, inverse);
        for (std::size_t y = 0; y < ny; ++y) data[y * nx + x] = scratch[y];
    }
}

} // namespace deimlab
