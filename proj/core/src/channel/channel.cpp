#include "faec/channel/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "faec/errors.hpp"
#include "faec/numerics/dft.hpp"

namespace faec {

namespace {

std::vector<double> lowpass_mask(std::size_t n, double bandwidth, double sample_rate) {
  std::vector<double> mask(n);
  for (std::size_t k = 0; k < n; ++k) {
    mask[k] = std::abs(bin_frequency(k, n, sample_rate)) <= bandwidth ? 1.0 : 0.0;
  }
  return mask;
}

void check_bandwidth(double bandwidth, double sample_rate) {
  if (!(sample_rate > 0.0)) throw ConfigError("lowpass: sample_rate must be > 0");
  if (!(bandwidth > 0.0 && bandwidth < sample_rate / 2.0)) {
    throw ConfigError("lowpass: bandwidth must be in (0, sample_rate/2)");
  }
}

}  // namespace

void ChannelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("channel." + what); };
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) fail("sample_rate must be > 0");
  if (!(distance_km >= 0.0) || !std::isfinite(distance_km)) fail("distance_km must be >= 0");
  if (!std::isfinite(beta2_ps2_per_km)) fail("beta2_ps2_per_km must be finite");
  if (!(atten_db_per_km >= 0.0) || !std::isfinite(atten_db_per_km)) {
    fail("atten_db_per_km must be >= 0");
  }
  if (!(lpf_bandwidth > 0.0 && lpf_bandwidth < sample_rate / 2.0)) {
    fail("lpf_bandwidth must be in (0, sample_rate/2)");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be >= 0");
}

Waveform lowpass(std::span<const double> x, double bandwidth, double sample_rate) {
  check_bandwidth(bandwidth, sample_rate);
  ComplexBuffer spec(x.begin(), x.end());
  dft_inplace(spec);
  const auto mask = lowpass_mask(spec.size(), bandwidth, sample_rate);
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= mask[k];
  idft_inplace(spec);
  Waveform out(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) out[i] = spec[i].real();
  return out;
}

ComplexBuffer lowpass(std::span<const Complex> x, double bandwidth, double sample_rate) {
  check_bandwidth(bandwidth, sample_rate);
  ComplexBuffer spec = dft(x);
  const auto mask = lowpass_mask(spec.size(), bandwidth, sample_rate);
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= mask[k];
  idft_inplace(spec);
  return spec;
}

OpticalField lowpass(const OpticalField& field, double bandwidth) {
  return {lowpass(std::span<const Complex>(field.samples), bandwidth, field.sample_rate),
          field.sample_rate};
}

OpticalField modulate(std::span<const double> x, double sample_rate) {
  OpticalField field{ComplexBuffer(x.size()), sample_rate};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= -kModulatorTolerance && x[i] <= 1.0 + kModulatorTolerance)) {
      throw ContractError("modulate: drive sample " + std::to_string(i) + " = " +
                          std::to_string(x[i]) + " outside [0, 1]");
    }
    field.samples[i] = Complex(x[i], 0.0);
  }
  return field;
}

Waveform modulate_backward(std::span<const Complex> grad_field) {
  Waveform g(grad_field.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_field[i].real();
  return g;
}

ComplexBuffer dispersion_transfer(std::size_t n, double sample_rate, double distance_km,
                                  double beta2_ps2_per_km) {
  ComplexBuffer h(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double omega = 2.0 * std::numbers::pi * bin_frequency(k, n, sample_rate) * 1e-12;
    const double phase = 0.5 * beta2_ps2_per_km * omega * omega * distance_km;
    h[k] = std::polar(1.0, phase);
  }
  return h;
}

OpticalField disperse(const OpticalField& field, double distance_km, double beta2_ps2_per_km) {
  if (!(distance_km >= 0.0)) throw ConfigError("disperse: distance must be >= 0");
  ComplexBuffer spec = dft(field.samples);
  const auto h = dispersion_transfer(spec.size(), field.sample_rate, distance_km, beta2_ps2_per_km);
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= h[k];
  idft_inplace(spec);
  return {std::move(spec), field.sample_rate};
}

ComplexBuffer disperse_backward(std::span<const Complex> grad_field, double sample_rate,
                                double distance_km, double beta2_ps2_per_km) {
  ComplexBuffer spec = dft(grad_field);
  const auto h = dispersion_transfer(spec.size(), sample_rate, distance_km, beta2_ps2_per_km);
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= std::conj(h[k]);
  idft_inplace(spec);
  return spec;
}

double attenuation_gain(double atten_db_per_km, double distance_km) {
  return std::pow(10.0, -atten_db_per_km * distance_km / 20.0);
}

OpticalField attenuate(const OpticalField& field, double atten_db_per_km, double distance_km) {
  if (!(atten_db_per_km >= 0.0)) throw ConfigError("attenuate: attenuation must be >= 0");
  const double gain = attenuation_gain(atten_db_per_km, distance_km);
  OpticalField out = field;
  for (auto& v : out.samples) v *= gain;
  return out;
}

Waveform photodiode(const OpticalField& field) {
  Waveform y(field.samples.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::norm(field.samples[i]);
  return y;
}

ComplexBuffer photodiode_backward(const OpticalField& field, std::span<const double> grad_y) {
  ComplexBuffer g(field.samples.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * grad_y[i] * field.samples[i];
  return g;
}

Waveform add_noise(std::span<const double> y, double sigma, RngStream& rng) {
  Waveform out(y.begin(), y.end());
  if (sigma == 0.0) return out;
  std::vector<double> n(y.size());
  fill_gaussian(rng, n, sigma);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += n[i];
  return out;
}

ChannelPass::ChannelPass(ChannelConfig config) : config_(config) { config_.validate(); }

const ComplexBuffer& ChannelPass::transfer(std::size_t n) {
  auto it = transfer_cache_.find(n);
  if (it != transfer_cache_.end()) return it->second;
  ComplexBuffer h = dispersion_transfer(n, config_.sample_rate, config_.distance_km,
                                        config_.beta2_ps2_per_km);
  const double gain = attenuation_gain(config_.atten_db_per_km, config_.distance_km);
  const auto mask = config_.include_tx_lpf
                        ? lowpass_mask(n, config_.lpf_bandwidth, config_.sample_rate)
                        : std::vector<double>(n, 1.0);
  for (std::size_t k = 0; k < n; ++k) h[k] *= gain * mask[k];
  return transfer_cache_.emplace(n, std::move(h)).first->second;
}

const std::vector<double>& ChannelPass::rx_mask(std::size_t n) {
  auto it = rx_mask_cache_.find(n);
  if (it != rx_mask_cache_.end()) return it->second;
  return rx_mask_cache_.emplace(n, lowpass_mask(n, config_.lpf_bandwidth, config_.sample_rate))
      .first->second;
}

Waveform ChannelPass::forward(std::span<const double> tx, RngStream& rng, ChannelTrace* trace) {
  std::vector<double> noise(tx.size());
  fill_gaussian(rng, noise, config_.noise_sigma);
  return forward_with_noise(tx, noise, trace);
}

Waveform ChannelPass::forward_with_noise(std::span<const double> tx, std::span<const double> noise,
                                         ChannelTrace* trace) {
  const std::size_t n = tx.size();
  if (n == 0) throw ConfigError("channel: empty waveform");
  if (noise.size() != n) throw ConfigError("channel: noise length does not match waveform");
  ComplexBuffer field = std::move(modulate(tx, config_.sample_rate).samples);

  dft_inplace(field);
  const auto& h = transfer(n);
  for (std::size_t k = 0; k < n; ++k) field[k] *= h[k];
  idft_inplace(field);

  Waveform out(n);
  if (!config_.include_rx_lpf) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::norm(field[i]) + noise[i];
  } else {
    const auto& mask = rx_mask(n);
    ComplexBuffer y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = Complex(std::norm(field[i]) + noise[i], 0.0);
    dft_inplace(y);
    for (std::size_t k = 0; k < n; ++k) y[k] *= mask[k];
    idft_inplace(y);
    for (std::size_t i = 0; i < n; ++i) out[i] = y[i].real();
  }
  if (trace) {
    trace->field = std::move(field);
    trace->noise.assign(noise.begin(), noise.end());
  }
  return out;
}

Waveform ChannelPass::backward(const ChannelTrace& trace, std::span<const double> grad_rx) {
  const std::size_t n = trace.field.size();
  if (grad_rx.size() != n) throw ConfigError("channel backward: gradient length mismatch");
  ComplexBuffer g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = Complex(grad_rx[i], 0.0);
  if (config_.include_rx_lpf) {
    const auto& mask = rx_mask(n);
    dft_inplace(g);
    for (std::size_t k = 0; k < n; ++k) g[k] *= mask[k];
    idft_inplace(g);
  }
  // Photodiode: dL/dE = 2 Re(g) E; then the adjoint of the spectral filter.
  for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * g[i].real() * trace.field[i];
  dft_inplace(g);
  const auto& h = transfer(n);
  for (std::size_t k = 0; k < n; ++k) g[k] *= std::conj(h[k]);
  idft_inplace(g);
  Waveform out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = g[i].real();
  return out;
}

Waveform channel_forward(std::span<const double> tx, const ChannelConfig& config, RngStream& rng) {
  ChannelPass pass(config);
  return pass.forward(tx, rng);
}

}  // namespace faec
