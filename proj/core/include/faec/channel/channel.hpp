#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "faec/numerics/buffer.hpp"
#include "faec/numerics/rng.hpp"

namespace faec {

using Waveform = std::vector<double>;

// IM/DD link parameters. Units: Hz, km, ps^2/km, dB/km.
//
// noise_sigma is the std-dev of the AWGN added after the photodiode, on the
// scale where a full-scale (x = 1) transmit sample detects as 1. The default
// 0.1 puts a full-scale signal at 20 dB SNR back-to-back.
struct ChannelConfig {
  double sample_rate = 84e9;
  double distance_km = 0.0;
  double beta2_ps2_per_km = -21.7;
  double atten_db_per_km = 0.2;
  double lpf_bandwidth = 32e9;
  double noise_sigma = 0.1;
  bool include_tx_lpf = true;
  bool include_rx_lpf = true;

  void validate() const;
  friend bool operator==(const ChannelConfig&, const ChannelConfig&) = default;
};

struct OpticalField {
  ComplexBuffer samples;
  double sample_rate = 0.0;
};

// Brick-wall low-pass: DFT bins with |f| > bandwidth are zeroed. Linear and
// self-adjoint, so the same call is its own backward pass. Real input gives
// real output (the imaginary residue is dropped).
Waveform lowpass(std::span<const double> x, double bandwidth, double sample_rate);
ComplexBuffer lowpass(std::span<const Complex> x, double bandwidth, double sample_rate);
OpticalField lowpass(const OpticalField& field, double bandwidth);

inline constexpr double kModulatorTolerance = 1e-9;

// Field amplitude E_t = x_t (zero phase). x must lie in [-1e-9, 1 + 1e-9].
OpticalField modulate(std::span<const double> x, double sample_rate);
// dL/dx = Re(dL/dE) with complex gradients packed as dL/dRe + i dL/dIm.
Waveform modulate_backward(std::span<const Complex> grad_field);

// All-pass dispersion exp(i (beta2 / 2) w^2 L) on the circular DFT grid,
// w in rad/ps.
ComplexBuffer dispersion_transfer(std::size_t n, double sample_rate, double distance_km,
                                  double beta2_ps2_per_km);
OpticalField disperse(const OpticalField& field, double distance_km, double beta2_ps2_per_km);
// Adjoint: the conjugate filter, applied to a complex gradient.
ComplexBuffer disperse_backward(std::span<const Complex> grad_field, double sample_rate,
                                double distance_km, double beta2_ps2_per_km);

// Amplitude gain 10^(-atten L / 20).
double attenuation_gain(double atten_db_per_km, double distance_km);
OpticalField attenuate(const OpticalField& field, double atten_db_per_km, double distance_km);

// Square-law detection |E|^2.
Waveform photodiode(const OpticalField& field);
// dL/dE = 2 * dL/dy * E (packed complex gradient).
ComplexBuffer photodiode_backward(const OpticalField& field, std::span<const double> grad_y);

Waveform add_noise(std::span<const double> y, double sigma, RngStream& rng);

// Intermediate state of one channel pass, needed by the backward pass.
struct ChannelTrace {
  ComplexBuffer field;  // received field before detection
  Waveform noise;       // the frozen noise realization
};

// Differentiable model of the full link:
//   modulate -> TX low-pass -> disperse -> attenuate -> photodiode -> + noise -> RX low-pass
// The TX filter runs on the field, which equals filtering the drive signal
// since the modulator is the identity map. Transfer functions are cached per
// length, so a pass object is not thread-safe; use one per context.
class ChannelPass {
 public:
  explicit ChannelPass(ChannelConfig config);

  const ChannelConfig& config() const { return config_; }

  Waveform forward(std::span<const double> tx, RngStream& rng, ChannelTrace* trace = nullptr);
  // Same as forward() with an explicit noise vector (length tx.size()).
  Waveform forward_with_noise(std::span<const double> tx, std::span<const double> noise,
                              ChannelTrace* trace = nullptr);
  // dL/dtx from dL/drx, differentiating the pass recorded in `trace`.
  Waveform backward(const ChannelTrace& trace, std::span<const double> grad_rx);

 private:
  const ComplexBuffer& transfer(std::size_t n);
  const std::vector<double>& rx_mask(std::size_t n);

  ChannelConfig config_;
  std::map<std::size_t, ComplexBuffer> transfer_cache_;
  std::map<std::size_t, std::vector<double>> rx_mask_cache_;
};

// Convenience wrapper: a fresh ChannelPass forward.
Waveform channel_forward(std::span<const double> tx, const ChannelConfig& config, RngStream& rng);

}  // namespace faec
