#pragma once

#include <span>

#include "faec/numerics/buffer.hpp"

namespace faec {

// Unitary DFT pair: X_k = N^{-1/2} sum_t x_t exp(-2 pi i k t / N) and its
// inverse, so dft/idft are mutually adjoint. Any N >= 1, no padding. Backed
// by FFTW; plans are cached per (N, direction) and safe to use from several
// threads.
ComplexBuffer dft(std::span<const Complex> x);
ComplexBuffer idft(std::span<const Complex> x);
void dft_inplace(std::span<Complex> x);
void idft_inplace(std::span<Complex> x);

// Signed frequency (Hz) of DFT bin k for an N-point grid at sample_rate:
// k * fs / N for k <= N/2, (k - N) * fs / N otherwise.
double bin_frequency(std::size_t k, std::size_t n, double sample_rate);

}  // namespace faec
