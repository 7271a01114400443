#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace deimlab {

/// In-place radix-2 complex FFT (iterative Cooley-Tukey). Length must be a
/// power of two. `inverse` applies the conjugate transform including the
/// 1/n scale.
void fft_radix2(std::vector<std::complex<double>>& data, bool inverse);

/// Row-column 2-D transform of an ny x nx row-major complex field.
void fft2(std::vector<std::complex<double>>& data, std::size_t ny, std::size_t nx,
          bool inverse);

bool is_power_of_two(std::size_t n);

} // namespace deimlab
