#include "faec/cli/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "faec/channel/channel.hpp"
#include "faec/errors.hpp"
#include "faec/numerics/ops.hpp"
#include "faec/numerics/rng.hpp"
#include "faec/trainer/trainer.hpp"
#include "faec/transceiver/layers.hpp"
#include "faec/transceiver/transceiver.hpp"

namespace faec::cli {

namespace {

constexpr std::size_t kProbesPerCase = 120;
constexpr double kSampleRate = 84e9;

// Flat view over several buffers, in order.
class Packing {
 public:
  explicit Packing(std::vector<RealBuffer*> parts) : parts_(std::move(parts)) {}

  std::vector<double> flatten() const {
    std::vector<double> out;
    for (const RealBuffer* p : parts_) out.insert(out.end(), p->values().begin(), p->values().end());
    return out;
  }
  void assign(std::span<const double> x) const {
    std::size_t k = 0;
    for (RealBuffer* p : parts_) {
      std::copy_n(x.begin() + k, p->size(), p->values().begin());
      k += p->size();
    }
  }

 private:
  std::vector<RealBuffer*> parts_;
};

void write_grads(std::span<double> out, std::initializer_list<const RealBuffer*> grads) {
  std::size_t k = 0;
  for (const RealBuffer* g : grads) {
    std::copy(g->values().begin(), g->values().end(), out.begin() + k);
    k += g->size();
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

RealBuffer random_buffer(RngStream& rng, Shape shape, double scale = 1.0) {
  RealBuffer b(std::move(shape));
  fill_gaussian(rng, b.span(), scale);
  return b;
}

// Uniform in [lo, hi] but at least `gap` away from every kink.
RealBuffer away_from(RngStream& rng, Shape shape, double lo, double hi,
                     std::initializer_list<double> kinks, double gap) {
  RealBuffer b(std::move(shape));
  for (double& v : b.values()) {
    do {
      v = lo + (hi - lo) * rng.uniform();
    } while (std::any_of(kinks.begin(), kinks.end(), [&](double k) { return std::abs(v - k) < gap; }));
  }
  return b;
}

GradCase make_case(std::string name, DifferentiableFn fn, std::vector<double> point,
                   double threshold, std::uint64_t seed) {
  GradCase c{std::move(name), std::move(fn), std::move(point), {}, threshold};
  c.probes = probe_coordinates(c.point.size(), kProbesPerCase, seed);
  return c;
}

GradCase dense_case() {
  struct State {
    Parameter w{"w", {4, 5}};
    Parameter b{"b", {4}};
    RealBuffer x, r;
  };
  auto s = std::make_shared<State>();
  RngStream rng = RngStream::derive(11, StreamPurpose::test);
  s->w.value = random_buffer(rng, {4, 5});
  s->b.value = random_buffer(rng, {4});
  s->x = random_buffer(rng, {3, 5});
  s->r = random_buffer(rng, {3, 4});
  auto pack = std::make_shared<Packing>(std::vector<RealBuffer*>{&s->w.value, &s->b.value, &s->x});
  auto fn = [s, pack](std::span<const double> x, std::span<double> grad) {
    pack->assign(x);
    s->w.zero_grad();
    s->b.zero_grad();
    const RealBuffer y = dense(s->x, s->w, s->b);
    if (!grad.empty()) {
      const RealBuffer gx = dense_backward(s->x, s->r, s->w, s->b);
      write_grads(grad, {&s->w.grad, &s->b.grad, &gx});
    }
    return dot(s->r.span(), y.span());
  };
  return make_case("dense", fn, pack->flatten(), kOpThreshold, 1);
}

GradCase activation_case(Activation kind) {
  struct State {
    RealBuffer x, r;
  };
  auto s = std::make_shared<State>();
  RngStream rng = RngStream::derive(12, StreamPurpose::test, {static_cast<std::uint64_t>(kind)});
  s->x = away_from(rng, {64}, -1.0, 2.0, {0.0, 1.0}, 1e-3);
  s->r = random_buffer(rng, {64});
  auto fn = [s, kind](std::span<const double> x, std::span<double> grad) {
    std::copy(x.begin(), x.end(), s->x.values().begin());
    const RealBuffer y = activation(s->x, kind);
    if (!grad.empty()) {
      std::copy(s->r.values().begin(), s->r.values().end(), grad.begin());
      activation_backward(y.span(), grad, kind);
    }
    return dot(s->r.span(), y.span());
  };
  return make_case("activation." + std::string(to_string(kind)), fn, s->x.values(), kOpThreshold,
                   2);
}

GradCase softmax_case() {
  struct State {
    RealBuffer z, r;
  };
  auto s = std::make_shared<State>();
  RngStream rng = RngStream::derive(13, StreamPurpose::test);
  s->z = random_buffer(rng, {6, 8}, 2.0);
  s->r = random_buffer(rng, {6, 8});
  auto fn = [s](std::span<const double> x, std::span<double> grad) {
    std::copy(x.begin(), x.end(), s->z.values().begin());
    const RealBuffer p = softmax(s->z);
    if (!grad.empty()) {
      for (std::size_t row = 0; row < p.rows(); ++row) {
        softmax_backward(p.row(row), s->r.row(row), grad.subspan(row * p.cols(), p.cols()));
      }
    }
    return dot(s->r.span(), p.span());
  };
  return make_case("softmax", fn, s->z.values(), kOpThreshold, 3);
}

GradCase cross_entropy_case() {
  struct State {
    RealBuffer z;
    std::vector<std::size_t> targets;
    std::vector<double> weights;
  };
  auto s = std::make_shared<State>();
  RngStream rng = RngStream::derive(14, StreamPurpose::test);
  s->z = random_buffer(rng, {10, 8});
  for (std::size_t i = 0; i < 10; ++i) {
    s->targets.push_back(rng.uniform_index(8));
    s->weights.push_back(i % 4 == 0 ? 0.0 : 0.1 * static_cast<double>(i));
  }
  auto fn = [s](std::span<const double> x, std::span<double> grad) {
    std::copy(x.begin(), x.end(), s->z.values().begin());
    RealBuffer g;
    const double loss =
        softmax_cross_entropy(s->z, s->targets, s->weights, nullptr, grad.empty() ? nullptr : &g);
    if (!grad.empty()) std::copy(g.values().begin(), g.values().end(), grad.begin());
    return loss;
  };
  return make_case("softmax_cross_entropy", fn, s->z.values(), kOpThreshold, 4);
}

GradCase dense_layer_case() {
  struct State {
    DenseLayer layer{"layer", 6, 5, Activation::relu};
    RealBuffer x, r;
  };
  auto s = std::make_shared<State>();
  RngStream rng = RngStream::derive(15, StreamPurpose::test);
  s->layer.weight.value = random_buffer(rng, {5, 6});
  s->layer.bias.value = random_buffer(rng, {5});
  s->x = random_buffer(rng, {4, 6});
  s->r = random_buffer(rng, {4, 5});
  auto pack = std::make_shared<Packing>(
      std::vector<RealBuffer*>{&s->layer.weight.value, &s->layer.bias.value, &s->x});
  auto fn = [s, pack](std::span<const double> x, std::span<double> grad) {
    pack->assign(x);
    s->layer.weight.zero_grad();
    s->layer.bias.zero_grad();
    const RealBuffer y = s->layer.forward(s->x);
    if (!grad.empty()) {
      const RealBuffer gx = s->layer.backward(s->x, y, s->r, true);
      write_grads(grad, {&s->layer.weight.grad, &s->layer.bias.grad, &gx});
    }
    return dot(s->r.span(), y.span());
  };
  return make_case("dense_layer.relu", fn, pack->flatten(), kOpThreshold, 5);
}

GradCase ffnn_stack_case() {
  struct State {
    FfnnStack stack{"stack", 5, {7, 6}, 3, Activation::relu, Activation::identity};
    RealBuffer x, r;
  };
  auto s = std::make_shared<State>();
  RngStream rng = RngStream::derive(16, StreamPurpose::test);
  std::vector<RealBuffer*> parts;
  for (DenseLayer& l : s->stack.layers()) {
    l.weight.value = random_buffer(rng, l.weight.shape());
    l.bias.value = random_buffer(rng, l.bias.shape(), 0.5);
    parts.push_back(&l.weight.value);
    parts.push_back(&l.bias.value);
  }
  s->x = random_buffer(rng, {4, 5});
  s->r = random_buffer(rng, {4, 3});
  parts.push_back(&s->x);
  auto pack = std::make_shared<Packing>(parts);
  auto fn = [s, pack](std::span<const double> x, std::span<double> grad) {
    pack->assign(x);
    FfnnStack::Cache cache;
    const RealBuffer y = s->stack.forward(s->x, &cache);
    if (!grad.empty()) {
      for (DenseLayer& l : s->stack.layers()) {
        l.weight.zero_grad();
        l.bias.zero_grad();
      }
      const RealBuffer gx = s->stack.backward(cache, s->r, true);
      std::size_t k = 0;
      for (const DenseLayer& l : s->stack.layers()) {
        write_grads(grad.subspan(k), {&l.weight.grad, &l.bias.grad});
        k += l.weight.size() + l.bias.size();
      }
      write_grads(grad.subspan(k), {&gx});
    }
    return dot(s->r.span(), y.span());
  };
  return make_case("ffnn_stack", fn, pack->flatten(), kOpThreshold, 6);
}

GradCase brnn_case(Merge merge) {
  constexpr std::size_t kSteps = 5, kBatch = 2, kIn = 3, kHidden = 4;
  struct State {
    BrnnCell cell;
    std::vector<RealBuffer> xs, rs;
  };
  auto s = std::make_shared<State>();
  s->cell = BrnnCell("cell", kIn, kHidden, Activation::relu, merge);
  RngStream rng = RngStream::derive(17, StreamPurpose::test, {static_cast<std::uint64_t>(merge)});
  std::vector<RealBuffer*> parts;
  for (Parameter* p : {&s->cell.w_fw, &s->cell.b_fw, &s->cell.w_bw, &s->cell.b_bw}) {
    p->value = random_buffer(rng, p->shape(), 0.6);
    parts.push_back(&p->value);
  }
  for (std::size_t t = 0; t < kSteps; ++t) {
    s->xs.push_back(random_buffer(rng, {kBatch, kIn}));
    s->rs.push_back(random_buffer(rng, {kBatch, s->cell.output_dim()}));
  }
  for (RealBuffer& x : s->xs) parts.push_back(&x);
  auto pack = std::make_shared<Packing>(parts);
  auto fn = [s, pack](std::span<const double> x, std::span<double> grad) {
    pack->assign(x);
    BrnnCell::Cache cache;
    const auto ys = s->cell.forward(s->xs, &cache);
    double f = 0.0;
    for (std::size_t t = 0; t < ys.size(); ++t) f += dot(s->rs[t].span(), ys[t].span());
    if (!grad.empty()) {
      for (Parameter* p : {&s->cell.w_fw, &s->cell.b_fw, &s->cell.w_bw, &s->cell.b_bw}) p->zero_grad();
      const auto gxs = s->cell.backward(cache, s->rs, true);
      write_grads(grad, {&s->cell.w_fw.grad, &s->cell.b_fw.grad, &s->cell.w_bw.grad,
                         &s->cell.b_bw.grad});
      std::size_t k = s->cell.w_fw.size() + s->cell.b_fw.size() + s->cell.w_bw.size() +
                      s->cell.b_bw.size();
      for (const RealBuffer& g : gxs) {
        write_grads(grad.subspan(k), {&g});
        k += g.size();
      }
    }
    return f;
  };
  return make_case("brnn_cell." + std::string(to_string(merge)), fn, pack->flatten(),
                   kOpThreshold, 7);
}

// Linear functional of a complex output, differentiated with respect to the
// real and imaginary parts of a complex input packed as (re, im) pairs.
ComplexBuffer unpack_complex(std::span<const double> x) {
  ComplexBuffer z(x.size() / 2);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = {x[2 * i], x[2 * i + 1]};
  return z;
}

double real_dot(const ComplexBuffer& weight, const ComplexBuffer& z) {
  double f = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) f += weight[i].real() * z[i].real() + weight[i].imag() * z[i].imag();
  return f;
}

void pack_complex(const ComplexBuffer& g, std::span<double> out) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    out[2 * i] = g[i].real();
    out[2 * i + 1] = g[i].imag();
  }
}

std::vector<double> random_complex_point(RngStream& rng, std::size_t n) {
  std::vector<double> p(2 * n);
  fill_gaussian(rng, p, 1.0);
  return p;
}

ComplexBuffer random_complex(RngStream& rng, std::size_t n) {
  const auto p = random_complex_point(rng, n);
  return unpack_complex(p);
}

GradCase modulate_case() {
  RngStream rng = RngStream::derive(18, StreamPurpose::test);
  const RealBuffer point = away_from(rng, {48}, 0.05, 0.95, {}, 0.0);
  const ComplexBuffer w = random_complex(rng, 48);
  auto fn = [w](std::span<const double> x, std::span<double> grad) {
    const OpticalField e = modulate(x, kSampleRate);
    if (!grad.empty()) {
      const Waveform g = modulate_backward(w);
      std::copy(g.begin(), g.end(), grad.begin());
    }
    return real_dot(w, e.samples);
  };
  return make_case("channel.modulate", fn, point.values(), kOpThreshold, 8);
}

GradCase lowpass_case() {
  RngStream rng = RngStream::derive(19, StreamPurpose::test);
  const RealBuffer point = random_buffer(rng, {64});
  const RealBuffer r = random_buffer(rng, {64});
  auto fn = [r](std::span<const double> x, std::span<double> grad) {
    const Waveform y = lowpass(x, 32e9, kSampleRate);
    if (!grad.empty()) {
      const Waveform g = lowpass(r.span(), 32e9, kSampleRate);
      std::copy(g.begin(), g.end(), grad.begin());
    }
    return dot(r.span(), y);
  };
  return make_case("channel.lowpass", fn, point.values(), kOpThreshold, 9);
}

GradCase disperse_case() {
  RngStream rng = RngStream::derive(20, StreamPurpose::test);
  constexpr std::size_t n = 64;
  const auto point = random_complex_point(rng, n);
  const ComplexBuffer w = random_complex(rng, n);
  auto fn = [w](std::span<const double> x, std::span<double> grad) {
    const OpticalField e = disperse({unpack_complex(x), kSampleRate}, 50.0, -21.7);
    if (!grad.empty()) pack_complex(disperse_backward(w, kSampleRate, 50.0, -21.7), grad);
    return real_dot(w, e.samples);
  };
  return make_case("channel.disperse", fn, point, kOpThreshold, 10);
}

GradCase attenuate_case() {
  RngStream rng = RngStream::derive(21, StreamPurpose::test);
  constexpr std::size_t n = 32;
  const auto point = random_complex_point(rng, n);
  const ComplexBuffer w = random_complex(rng, n);
  auto fn = [w](std::span<const double> x, std::span<double> grad) {
    const OpticalField e = attenuate({unpack_complex(x), kSampleRate}, 0.2, 30.0);
    if (!grad.empty()) {
      const double gain = attenuation_gain(0.2, 30.0);
      ComplexBuffer g(w.size());
      for (std::size_t i = 0; i < w.size(); ++i) g[i] = gain * w[i];
      pack_complex(g, grad);
    }
    return real_dot(w, e.samples);
  };
  return make_case("channel.attenuate", fn, point, kOpThreshold, 11);
}

GradCase photodiode_case() {
  RngStream rng = RngStream::derive(22, StreamPurpose::test);
  constexpr std::size_t n = 48;
  const auto point = random_complex_point(rng, n);
  const RealBuffer r = random_buffer(rng, {n});
  auto fn = [r](std::span<const double> x, std::span<double> grad) {
    const OpticalField e{unpack_complex(x), kSampleRate};
    const Waveform y = photodiode(e);
    if (!grad.empty()) pack_complex(photodiode_backward(e, r.span()), grad);
    return dot(r.span(), y);
  };
  return make_case("channel.photodiode", fn, point, kOpThreshold, 12);
}

GradCase channel_case(const std::string& name, ChannelConfig cfg, std::uint64_t seed) {
  constexpr std::size_t n = 96;
  RngStream rng = RngStream::derive(23, StreamPurpose::test, {seed});
  const RealBuffer point = away_from(rng, {n}, 0.05, 0.95, {}, 0.0);
  const RealBuffer noise = random_buffer(rng, {n}, cfg.noise_sigma);
  const RealBuffer r = random_buffer(rng, {n});
  auto pass = std::make_shared<ChannelPass>(cfg);
  auto fn = [pass, noise, r](std::span<const double> x, std::span<double> grad) {
    ChannelTrace trace;
    const Waveform y = pass->forward_with_noise(x, noise.span(), &trace);
    if (!grad.empty()) {
      const Waveform g = pass->backward(trace, r.span());
      std::copy(g.begin(), g.end(), grad.begin());
    }
    return dot(r.span(), y);
  };
  return make_case(name, fn, point.values(), kChainThreshold, seed);
}

GradCase e2e_case(const std::string& name, ModelKind kind, std::size_t train_window,
                  std::uint64_t seed) {
  Architecture arch;
  arch.kind = kind;
  arch.messages = 4;
  arch.samples_per_block = 4;
  arch.encoder_hidden = {8};
  arch.decoder_hidden = {8};
  arch.brnn_hidden = 5;
  struct State {
    Transceiver model;
    MessageBatch batch;
    std::vector<Waveform> noise;
    std::unique_ptr<EndToEndLoss> loss;
  };
  auto s = std::make_shared<State>();
  s->model = Transceiver::create(arch, seed, InitOptions{false});
  // Zero biases can park clipped units exactly on a kink.
  RngStream bias_rng = RngStream::derive(seed, StreamPurpose::init, {1});
  for (Parameter* p : s->model.parameters()) {
    if (p->name.find(".b") != std::string::npos) fill_gaussian(bias_rng, p->value.span(), 0.1);
  }

  ChannelConfig channel;
  channel.distance_km = 20.0;
  constexpr std::size_t kBlocks = 4, kEdge = 1, kGuard = 2;
  s->loss = std::make_unique<EndToEndLoss>(channel, kEdge, kGuard, train_window);
  RngStream rng = RngStream::derive(seed, StreamPurpose::test);
  s->batch = sample_batch(rng, 3, kBlocks, arch.messages);
  for (std::size_t b = 0; b < s->batch.size(); ++b) {
    Waveform w(s->loss->padded_samples(kBlocks, arch.samples_per_block));
    fill_gaussian(rng, w, channel.noise_sigma);
    s->noise.push_back(std::move(w));
  }

  std::vector<RealBuffer*> parts;
  for (Parameter* p : s->model.parameters()) parts.push_back(&p->value);
  auto pack = std::make_shared<Packing>(parts);
  auto fn = [s, pack](std::span<const double> x, std::span<double> grad) {
    pack->assign(x);
    s->model.zero_grad();
    const LossResult r = s->loss->evaluate_with_noise(s->model, s->batch, s->noise, !grad.empty());
    if (!grad.empty()) {
      std::size_t k = 0;
      for (const Parameter* p : s->model.parameters()) {
        write_grads(grad.subspan(k), {&p->grad});
        k += p->size();
      }
    }
    return r.loss;
  };
  return make_case(name, fn, pack->flatten(), kChainThreshold, seed);
}

}  // namespace

GradScope parse_grad_scope(std::string_view name) {
  if (name == "ops") return GradScope::ops;
  if (name == "chain") return GradScope::chain;
  if (name == "e2e") return GradScope::e2e;
  if (name == "all") return GradScope::all;
  throw ConfigError("unknown gradcheck scope '" + std::string(name) + "' (ops, chain, e2e, all)");
}

std::vector<GradCase> op_cases() {
  return {dense_case(),
          activation_case(Activation::relu),
          activation_case(Activation::clipped_relu01),
          activation_case(Activation::identity),
          softmax_case(),
          cross_entropy_case(),
          dense_layer_case(),
          ffnn_stack_case(),
          brnn_case(Merge::concat),
          brnn_case(Merge::average),
          modulate_case(),
          lowpass_case(),
          disperse_case(),
          attenuate_case(),
          photodiode_case()};
}

std::vector<GradCase> chain_cases() {
  ChannelConfig b2b;
  ChannelConfig fiber;
  fiber.distance_km = 50.0;
  ChannelConfig lossy = fiber;
  lossy.atten_db_per_km = 0.2;
  lossy.distance_km = 30.0;
  return {channel_case("channel.0km", b2b, 31), channel_case("channel.50km", fiber, 32),
          channel_case("channel.30km.lossy", lossy, 33)};
}

std::vector<GradCase> e2e_cases() {
  return {e2e_case("e2e.ffnn", ModelKind::ffnn, 0, 41),
          e2e_case("e2e.brnn", ModelKind::brnn, 0, 42),
          e2e_case("e2e.brnn.window2", ModelKind::brnn, 2, 43)};
}

std::vector<GradCase> grad_cases(GradScope scope) {
  switch (scope) {
    case GradScope::ops:
      return op_cases();
    case GradScope::chain:
      return chain_cases();
    case GradScope::e2e:
      return e2e_cases();
    case GradScope::all:
      break;
  }
  auto all = op_cases();
  for (auto* more : {chain_cases, e2e_cases}) {
    auto extra = more();
    all.insert(all.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
  }
  return all;
}

bool GradSuiteReport::pass() const {
  return std::all_of(cases.begin(), cases.end(), [](const GradCaseResult& c) { return c.pass(); });
}

std::size_t GradSuiteReport::total_probes() const {
  std::size_t n = 0;
  for (const auto& c : cases) n += c.check.probes;
  return n;
}

const GradCaseResult* GradSuiteReport::worst() const {
  const GradCaseResult* worst = nullptr;
  for (const auto& c : cases) {
    if (!worst || c.check.max_rel_error / c.threshold > worst->check.max_rel_error / worst->threshold) {
      worst = &c;
    }
  }
  return worst;
}

GradSuiteReport run_grad_suite(const std::vector<GradCase>& cases) {
  GradSuiteReport report;
  for (const GradCase& c : cases) {
    report.cases.push_back({c.name, grad_check(c.fn, c.point, c.probes), c.threshold});
  }
  return report;
}

std::string format_grad_report(const GradSuiteReport& report) {
  std::string out;
  char line[256];
  for (const auto& c : report.cases) {
    std::snprintf(line, sizeof line, "%-28s probes %4zu  max rel err %.3e  (< %.0e)  %s\n",
                  c.name.c_str(), c.check.probes, c.check.max_rel_error, c.threshold,
                  c.pass() ? "ok" : "FAIL");
    out += line;
  }
  if (const GradCaseResult* w = report.worst()) {
    std::snprintf(line, sizeof line,
                  "worst: %s at coordinate %zu (analytic %.9e, numeric %.9e, rel err %.3e)\n",
                  w->name.c_str(), w->check.worst_index, w->check.worst_analytic,
                  w->check.worst_numeric, w->check.max_rel_error);
    out += line;
  }
  return out;
}

}  // namespace faec::cli
