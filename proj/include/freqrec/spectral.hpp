#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "freqrec/tensor.hpp"

namespace freqrec {

// One-sided DFT coefficients of a real tensor along `axis`. The
// transformed axis of `real`/`imag` has floor(L/2) + 1 entries, where L is
// `original_length`; the remaining coefficients follow by conjugate
// symmetry.
struct ComplexSpectrum {
  Tensor real;
  Tensor imag;
  std::size_t axis = 0;
  std::size_t original_length = 0;
};

enum class DftAlgorithm {
  kAuto,    // radix-2 when the axis extent is a power of two, else direct
  kDirect,  // O(L^2) summation
  kRadix2,  // requires a power-of-two extent
};

// How irdft treats imaginary parts that a real signal cannot have (DC and,
// for even L, the Nyquist bin).
enum class RealityPolicy {
  kStrict,   // reject spectra whose DC/Nyquist imaginary parts exceed tolerance
  kDiscard,  // drop them; used by learned filters whose output is unconstrained
};

std::size_t one_sided_length(std::size_t length);

// Forward transform, unnormalized:
//   Re C_k =  sum_n x_n cos(2 pi k n / L)
//   Im C_k = -sum_n x_n sin(2 pi k n / L)
// Differentiable in x.
ComplexSpectrum rdft(const Tensor& x, int axis, DftAlgorithm algorithm = DftAlgorithm::kAuto);

// Inverse transform with the 1/L factor; output extent along the axis is
// s.original_length. Differentiable in s.real and s.imag.
Tensor irdft(const ComplexSpectrum& s, RealityPolicy policy = RealityPolicy::kStrict,
             DftAlgorithm algorithm = DftAlgorithm::kAuto, double tolerance = 1e-9);

// |C_0|^2 + [L even] |C_{L/2}|^2 + 2 sum_{0<k<ceil(L/2)} |C_k|^2, summed over
// every slice. Equals L * sum x^2 for s = rdft(x).
double spectral_energy(const ComplexSpectrum& s);

// In-place iterative radix-2 FFT; the size must be a power of two. The
// inverse is unnormalized.
void fft_radix2(std::vector<std::complex<double>>& values, bool inverse);

bool is_power_of_two(std::size_t n);

}  // namespace freqrec
