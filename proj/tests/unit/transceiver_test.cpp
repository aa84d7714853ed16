#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "faec/errors.hpp"
#include "faec/numerics/rng.hpp"
#include "faec/transceiver/checkpoint.hpp"
#include "faec/transceiver/layers.hpp"
#include "faec/transceiver/transceiver.hpp"

namespace faec {
namespace {

Architecture small_arch(ModelKind kind) {
  Architecture a;
  a.kind = kind;
  a.messages = 8;
  a.samples_per_block = 6;
  a.encoder_hidden = {16, 12};
  a.decoder_hidden = {12};
  a.brnn_hidden = 7;
  return a;
}

void randomize(Transceiver& model, std::uint64_t seed, double sigma) {
  RngStream rng(seed);
  for (Parameter* p : model.parameters()) fill_gaussian(rng, p->value.span(), sigma);
}

void randomize(BrnnCell& cell, std::uint64_t seed, double sigma) {
  RngStream rng(seed);
  for (Parameter* p : {&cell.w_fw, &cell.b_fw, &cell.w_bw, &cell.b_bw}) {
    fill_gaussian(rng, p->value.span(), sigma);
  }
}

std::vector<RealBuffer> random_sequence(RngStream& rng, std::size_t steps, std::size_t dim) {
  std::vector<RealBuffer> xs;
  for (std::size_t t = 0; t < steps; ++t) xs.push_back(gaussian(rng, dim, 1.0));
  return xs;
}

void expect_probability_rows(const RealBuffer& p) {
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0.0;
    for (double v : p.row(r)) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("faec_transceiver_test_" + name);
}

// ---------------------------------------------------------------- one_hot

TEST(OneHot, Examples) {
  EXPECT_EQ(one_hot(0, 4).values(), (std::vector<double>{1, 0, 0, 0}));
  EXPECT_EQ(one_hot(3, 4).values(), (std::vector<double>{0, 0, 0, 1}));
  for (std::size_t m = 0; m < 16; ++m) {
    const RealBuffer v = one_hot(m, 16);
    EXPECT_EQ(std::accumulate(v.values().begin(), v.values().end(), 0.0), 1.0);
  }
  EXPECT_THROW(one_hot(4, 4), ContractError);
}

// ---------------------------------------------------------------- architecture

TEST(Architecture, Validation) {
  Architecture a;
  EXPECT_NO_THROW(a.validate());
  EXPECT_EQ(a.bits_per_message(), 6u);
  a.messages = 12;
  EXPECT_THROW(a.validate(), ConfigError);
  a.messages = 1;
  EXPECT_THROW(a.validate(), ConfigError);
  a = Architecture{};
  a.samples_per_block = 0;
  EXPECT_THROW(a.validate(), ConfigError);
}

TEST(Architecture, KindAndMergeNames) {
  EXPECT_EQ(parse_model_kind("ffnn"), ModelKind::ffnn);
  EXPECT_EQ(parse_model_kind("brnn"), ModelKind::brnn);
  EXPECT_EQ(parse_model_kind("sbrnn"), ModelKind::brnn);
  EXPECT_THROW(parse_model_kind("lstm"), ConfigError);
  EXPECT_EQ(parse_merge("concat"), Merge::concat);
  EXPECT_EQ(parse_merge("average"), Merge::average);
  EXPECT_THROW(parse_merge("sum"), ConfigError);
}

// ---------------------------------------------------------------- construction

TEST(Transceiver, SeededCreationIsDeterministic) {
  for (ModelKind kind : {ModelKind::ffnn, ModelKind::brnn}) {
    const Transceiver a = Transceiver::create(small_arch(kind), 3);
    const Transceiver b = Transceiver::create(small_arch(kind), 3);
    const Transceiver c = Transceiver::create(small_arch(kind), 4);
    const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
    ASSERT_EQ(pa.size(), pb.size());
    bool differs = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      EXPECT_EQ(pa[i]->name, pb[i]->name);
      EXPECT_EQ(pa[i]->value, pb[i]->value);
      differs = differs || pa[i]->value != pc[i]->value;
    }
    EXPECT_TRUE(differs);
  }
}

TEST(Transceiver, ParameterDeclarationOrder) {
  const Transceiver f = Transceiver::create(small_arch(ModelKind::ffnn), 1);
  std::vector<std::string> names;
  for (const Parameter* p : f.parameters()) names.push_back(p->name);
  EXPECT_EQ(names.front(), "encoder.layer0.weight");
  EXPECT_EQ(names.back(), "decoder.layer1.bias");
  EXPECT_EQ(names.size(), 10u);  // 3 encoder + 2 decoder layers

  const Transceiver b = Transceiver::create(small_arch(ModelKind::brnn), 1);
  names.clear();
  for (const Parameter* p : b.parameters()) names.push_back(p->name);
  const std::vector<std::string> expected = {
      "encoder.cell.w_fw",        "encoder.cell.b_fw",        "encoder.cell.w_bw",
      "encoder.cell.b_bw",        "encoder.projection.weight", "encoder.projection.bias",
      "decoder.cell.w_fw",        "decoder.cell.b_fw",        "decoder.cell.w_bw",
      "decoder.cell.b_bw",        "decoder.projection.weight", "decoder.projection.bias"};
  EXPECT_EQ(names, expected);
}

TEST(Transceiver, InitScaleAndZeroBiases) {
  Architecture a = small_arch(ModelKind::ffnn);
  a.encoder_hidden = {400};
  a.messages = 256;
  const Transceiver t = Transceiver::create(a, 9);
  const Parameter* w = t.parameters()[0];  // [400 x 256]
  double s2 = 0.0;
  for (double v : w->value.values()) s2 += v * v;
  EXPECT_NEAR(s2 / static_cast<double>(w->size()), 1.0 / 256.0, 0.05 / 256.0);
  for (const Parameter* p : t.parameters()) {
    if (p->name.ends_with("bias")) {
      for (double v : p->value.values()) EXPECT_EQ(v, 0.0);
    }
  }
}

// ---------------------------------------------------------------- FFNN

TEST(Ffnn, ZeroFinalEncoderLayerGivesDarkBlocks) {
  Transceiver t = Transceiver::create(small_arch(ModelKind::ffnn), 2);
  t.ffnn_encoder().layers().back().zero_initialize();
  const RealBuffer tx = t.encode({{0, 1, 2, 3, 4, 5, 6, 7}});
  for (double v : tx.values()) EXPECT_EQ(v, 0.0);
}

TEST(Ffnn, EncoderRangeForRandomParameters) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Transceiver t = Transceiver::create(small_arch(ModelKind::ffnn), seed);
    randomize(t, seed, 3.0);
    const RealBuffer tx = t.encode({{0, 1, 2, 3, 4, 5, 6, 7}});
    EXPECT_EQ(tx.shape(), (Shape{1, 48}));
    for (double v : tx.values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Ffnn, EncodingIsBlockLocal) {
  Transceiver t = Transceiver::create(small_arch(ModelKind::ffnn), 2);
  randomize(t, 5, 1.0);
  const RealBuffer seq = t.encode({{3, 1, 6}});
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t m = std::vector<std::size_t>{3, 1, 6}[k];
    const RealBuffer one = t.encode({{m}});
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(seq[k * 6 + i], one[i], 1e-15);
  }
}

TEST(Ffnn, ZeroOutputLayerDecodesUniform) {
  const Transceiver t = Transceiver::create(small_arch(ModelKind::ffnn), 2);
  RngStream rng(1);
  const RealBuffer rx({2, 18}, gaussian(rng, 36, 1.0).values());
  const RealBuffer p = t.decode(rx, 3);
  EXPECT_EQ(p.shape(), (Shape{6, 8}));
  for (double v : p.values()) EXPECT_DOUBLE_EQ(v, 1.0 / 8.0);
}

TEST(Ffnn, DecodeIsBlockLocalAndNormalized) {
  Transceiver t = Transceiver::create(small_arch(ModelKind::ffnn), 2);
  randomize(t, 8, 1.0);
  RngStream rng(2);
  const RealBuffer rx({1, 24}, gaussian(rng, 24, 1.0).values());
  const RealBuffer p = t.decode(rx, 4);
  expect_probability_rows(p);
  for (std::size_t k = 0; k < 4; ++k) {
    const RealBuffer block({1, 6}, std::vector<double>(rx.values().begin() + k * 6, rx.values().begin() + (k + 1) * 6));
    const RealBuffer q = t.decode(block, 1);
    for (std::size_t m = 0; m < 8; ++m) EXPECT_NEAR(q[m], p(k, m), 1e-15);
  }
}

// ---------------------------------------------------------------- BRNN cell

TEST(BrnnCell, ZeroWeightsGiveConstantOutput) {
  for (Merge merge : {Merge::concat, Merge::average}) {
    BrnnCell cell("c", 3, 4, Activation::relu, merge);
    cell.b_fw.value = RealBuffer({4}, {0.5, -1.0, 2.0, 0.0});
    cell.b_bw.value = RealBuffer({4}, {1.5, 1.0, -2.0, 0.25});
    RngStream rng(3);
    const auto ys = cell.forward(random_sequence(rng, 5, 3));
    const std::vector<double> fw{0.5, 0.0, 2.0, 0.0}, bw{1.5, 1.0, 0.0, 0.25};
    std::vector<double> expected;
    if (merge == Merge::concat) {
      expected = fw;
      expected.insert(expected.end(), bw.begin(), bw.end());
    } else {
      for (int i = 0; i < 4; ++i) expected.push_back(0.5 * (fw[i] + bw[i]));
    }
    for (const RealBuffer& y : ys) EXPECT_EQ(y.values(), expected);
  }
}

TEST(BrnnCell, SingleStepSeesOnlyItsInput) {
  BrnnCell cell("c", 3, 4, Activation::identity, Merge::concat);
  randomize(cell, 4, 1.0);
  const RealBuffer x({3}, {0.3, -0.7, 1.1});
  const auto ys = cell.forward({x});
  ASSERT_EQ(ys.size(), 1u);
  // Only the first D columns of each weight matrix touch a single step.
  for (std::size_t h = 0; h < 4; ++h) {
    double fw = cell.b_fw.value[h], bw = cell.b_bw.value[h];
    for (std::size_t d = 0; d < 3; ++d) {
      fw += cell.w_fw.value(h, d) * x[d];
      bw += cell.w_bw.value(h, d) * x[d];
    }
    EXPECT_NEAR(ys[0][h], fw, 1e-14);
    EXPECT_NEAR(ys[0][4 + h], bw, 1e-14);
  }
}

TEST(BrnnCell, MatchesDirectRecursion) {
  BrnnCell cell("c", 2, 3, Activation::relu, Merge::concat);
  randomize(cell, 5, 0.8);
  RngStream rng(6);
  const auto xs = random_sequence(rng, 4, 2);
  auto step = [](const Parameter& w, const Parameter& b, const RealBuffer& x, const std::vector<double>& h) {
    std::vector<double> out(3);
    for (std::size_t i = 0; i < 3; ++i) {
      double s = b.value[i];
      for (std::size_t d = 0; d < 2; ++d) s += w.value(i, d) * x[d];
      for (std::size_t j = 0; j < 3; ++j) s += w.value(i, 2 + j) * h[j];
      out[i] = std::max(0.0, s);
    }
    return out;
  };
  std::vector<std::vector<double>> fw(4), bw(4);
  std::vector<double> h(3, 0.0);
  for (std::size_t t = 0; t < 4; ++t) h = fw[t] = step(cell.w_fw, cell.b_fw, xs[t], h);
  h.assign(3, 0.0);
  for (std::size_t t = 4; t-- > 0;) h = bw[t] = step(cell.w_bw, cell.b_bw, xs[t], h);
  const auto ys = cell.forward(xs);
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(ys[t][i], fw[t][i], 1e-14);
      EXPECT_NEAR(ys[t][3 + i], bw[t][i], 1e-14);
    }
  }
}

TEST(BrnnCell, ReversalWithSwappedDirectionsReversesOutput) {
  BrnnCell cell("c", 3, 5, Activation::relu, Merge::average);
  randomize(cell, 7, 0.7);
  BrnnCell swapped = cell;
  std::swap(swapped.w_fw.value, swapped.w_bw.value);
  std::swap(swapped.b_fw.value, swapped.b_bw.value);
  RngStream rng(8);
  auto xs = random_sequence(rng, 6, 3);
  const auto ys = cell.forward(xs);
  std::reverse(xs.begin(), xs.end());
  const auto rev = swapped.forward(xs);
  for (std::size_t t = 0; t < 6; ++t) EXPECT_EQ(rev[t].values(), ys[5 - t].values());
}

TEST(BrnnCell, PalindromeInputGivesPalindromeOutput) {
  BrnnCell cell("c", 2, 4, Activation::relu, Merge::average);
  randomize(cell, 9, 0.7);
  cell.w_bw.value = cell.w_fw.value;
  cell.b_bw.value = cell.b_fw.value;
  RngStream rng(10);
  auto xs = random_sequence(rng, 3, 2);
  xs.push_back(xs[1]);
  xs.push_back(xs[0]);  // x0 x1 x2 x1 x0
  const auto ys = cell.forward(xs);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(ys[t][i], ys[4 - t][i], 1e-15);
  }
}

TEST(BrnnCell, BatchRowsAreIndependent) {
  BrnnCell cell("c", 2, 3, Activation::relu, Merge::concat);
  randomize(cell, 11, 0.8);
  RngStream rng(12);
  const auto a = random_sequence(rng, 4, 2);
  const auto b = random_sequence(rng, 4, 2);
  std::vector<RealBuffer> batch;
  for (std::size_t t = 0; t < 4; ++t) {
    std::vector<double> v = a[t].values();
    v.insert(v.end(), b[t].values().begin(), b[t].values().end());
    batch.emplace_back(Shape{2, 2}, v);
  }
  const auto ya = cell.forward(a), yb = cell.forward(b), yab = cell.forward(batch);
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_NEAR(yab[t](0, i), ya[t][i], 1e-15);
      EXPECT_NEAR(yab[t](1, i), yb[t][i], 1e-15);
    }
  }
}

TEST(BrnnCell, EmptySequenceThrows) {
  BrnnCell cell("c", 2, 3, Activation::relu, Merge::concat);
  EXPECT_THROW(cell.forward({}), ConfigError);
}

// ---------------------------------------------------------------- BRNN transceiver

TEST(Brnn, EncoderRangeForRandomParameters) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Transceiver t = Transceiver::create(small_arch(ModelKind::brnn), seed);
    randomize(t, 100 + seed, 3.0);
    const RealBuffer tx = t.encode({{0, 1, 2, 3, 4, 5, 6, 7}, {7, 7, 7, 7, 0, 0, 0, 0}});
    for (double v : tx.values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Brnn, EncoderIsContextSensitive) {
  Transceiver t = Transceiver::create(small_arch(ModelKind::brnn), 13);
  randomize(t, 14, 0.5);
  const auto base = t.encode_sequence(std::vector<std::size_t>{1, 2, 3, 4, 5});
  const auto changed = t.encode_sequence(std::vector<std::size_t>{1, 2, 6, 4, 5});
  const std::size_t n = 6;
  for (std::size_t block : {1, 3}) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) moved = moved || base[block * n + i] != changed[block * n + i];
    EXPECT_TRUE(moved) << "block " << block;
  }
}

TEST(Brnn, SingleStepEncodeEqualsCellThenProjection) {
  Transceiver t = Transceiver::create(small_arch(ModelKind::brnn), 15);
  randomize(t, 16, 0.5);
  const auto tx = t.encode_sequence(std::vector<std::size_t>{5});
  const auto ys = t.tx_cell().forward({one_hot(5, 8)});
  RealBuffer y = t.tx_projection().forward(ys[0]);
  ASSERT_EQ(tx.size(), y.size());
  for (std::size_t i = 0; i < tx.size(); ++i) EXPECT_DOUBLE_EQ(tx[i], y[i]);
}

TEST(Brnn, DecodeWindowRowsSumToOne) {
  Transceiver t = Transceiver::create(small_arch(ModelKind::brnn), 17);
  randomize(t, 18, 0.7);
  RngStream rng(19);
  const RealBuffer p = t.decode_window(gaussian(rng, 60, 1.0).span());
  EXPECT_EQ(p.shape(), (Shape{10, 8}));
  expect_probability_rows(p);
}

TEST(Brnn, SingleBlockWindowIsRecurrenceFree) {
  Transceiver t = Transceiver::create(small_arch(ModelKind::brnn), 20);
  randomize(t, 21, 0.7);
  RngStream rng(22);
  const RealBuffer block = gaussian(rng, 6, 1.0);
  const RealBuffer p = t.decode_window(block.span());

  // The same block decoded by a cell whose recurrent weights are cut.
  BrnnCell cut = t.rx_cell();
  for (Parameter* w : {&cut.w_fw, &cut.w_bw}) {
    for (std::size_t h = 0; h < cut.hidden_dim(); ++h) {
      for (std::size_t j = cut.input_dim(); j < w->shape()[1]; ++j) w->value(h, j) = 0.0;
    }
  }
  const auto ys = cut.forward({block});
  const RealBuffer logits = t.rx_projection().forward(ys[0]);
  double mx = *std::max_element(logits.values().begin(), logits.values().end()), s = 0.0;
  for (double v : logits.values()) s += std::exp(v - mx);
  for (std::size_t m = 0; m < 8; ++m) EXPECT_NEAR(p[m], std::exp(logits[m] - mx) / s, 1e-14);
}

TEST(Brnn, DecodeIsOrderSensitive) {
  Transceiver t = Transceiver::create(small_arch(ModelKind::brnn), 23);
  randomize(t, 24, 0.7);
  RngStream rng(25);
  const RealBuffer rx = gaussian(rng, 18, 1.0);
  std::vector<double> permuted = rx.values();
  std::rotate(permuted.begin(), permuted.begin() + 6, permuted.begin() + 12);  // swap blocks 0 and 1
  const RealBuffer a = t.decode_window(rx.span());
  const RealBuffer b = t.decode_window(permuted);
  // Block 2 is identical in both windows but its context differs.
  bool differs = false;
  for (std::size_t m = 0; m < 8; ++m) differs = differs || std::abs(a(2, m) - b(2, m)) > 1e-9;
  EXPECT_TRUE(differs);
}

TEST(Brnn, ZeroOutputLayerDecodesUniform) {
  const Transceiver t = Transceiver::create(small_arch(ModelKind::brnn), 26);
  RngStream rng(27);
  const RealBuffer p = t.decode_window(gaussian(rng, 30, 1.0).span());
  for (double v : p.values()) EXPECT_DOUBLE_EQ(v, 1.0 / 8.0);
}

TEST(Brnn, BadWindowThrows) {
  const Transceiver t = Transceiver::create(small_arch(ModelKind::brnn), 28);
  EXPECT_THROW(t.decode_window(std::vector<double>(5, 0.0)), ConfigError);
  EXPECT_THROW(t.decode_window(std::vector<double>{}), ConfigError);
}

// ---------------------------------------------------------------- checkpoint

class CheckpointTest : public ::testing::TestWithParam<ModelKind> {};

TEST_P(CheckpointTest, SaveLoadSaveIsByteIdentical) {
  Transceiver t = Transceiver::create(small_arch(GetParam()), 30);
  randomize(t, 31, 1.0);
  ChannelConfig channel;
  channel.distance_km = 42.5;
  const auto a = temp_path("a.faec"), b = temp_path("b.faec");
  save_checkpoint(t, channel, a);
  const Checkpoint loaded = load_checkpoint(a);
  save_checkpoint(loaded.model, loaded.training_channel, b);
  EXPECT_EQ(read_bytes(a), read_bytes(b));
  EXPECT_EQ(loaded.training_channel, channel);
  EXPECT_EQ(loaded.model.architecture(), t.architecture());
  const auto pa = t.parameters();
  const auto pb = loaded.model.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST_P(CheckpointTest, LoadedModelReproducesProbabilities) {
  Transceiver t = Transceiver::create(small_arch(GetParam()), 32);
  randomize(t, 33, 1.0);
  const Checkpoint c = deserialize_checkpoint(serialize_checkpoint(t, ChannelConfig{}));
  RngStream rng(34);
  const RealBuffer rx({1, 30}, gaussian(rng, 30, 1.0).values());
  EXPECT_EQ(t.decode(rx, 5), c.model.decode(rx, 5));
}

INSTANTIATE_TEST_SUITE_P(Kinds, CheckpointTest, ::testing::Values(ModelKind::ffnn, ModelKind::brnn),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Checkpoint, LayoutHeader) {
  const Transceiver t = Transceiver::create(small_arch(ModelKind::ffnn), 1);
  const auto bytes = serialize_checkpoint(t, ChannelConfig{});
  ASSERT_GT(bytes.size(), 10u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FAEC");
  EXPECT_EQ(bytes[4] | (bytes[5] << 8), kCheckpointVersion);
  const std::uint32_t len = bytes[6] | (bytes[7] << 8) | (bytes[8] << 16) | (bytes[9] << 24);
  const auto header = nlohmann::json::parse(bytes.begin() + 10, bytes.begin() + 10 + len);
  EXPECT_EQ(header.at("architecture").at("kind"), "ffnn");
  EXPECT_EQ(header.at("architecture").at("messages"), 8);
  EXPECT_EQ(bytes.size(), 10 + len + 8 * t.parameter_count());
}

TEST(Checkpoint, FlippedVersionFails) {
  const Transceiver t = Transceiver::create(small_arch(ModelKind::brnn), 1);
  auto bytes = serialize_checkpoint(t, ChannelConfig{});
  bytes[4] ^= 0x01;
  try {
    deserialize_checkpoint(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Checkpoint, TruncationAndTrailingBytesFail) {
  const Transceiver t = Transceiver::create(small_arch(ModelKind::ffnn), 1);
  const auto bytes = serialize_checkpoint(t, ChannelConfig{});
  for (std::size_t keep : {std::size_t{0}, std::size_t{3}, std::size_t{9}, std::size_t{40},
                           bytes.size() - 1}) {
    EXPECT_THROW(deserialize_checkpoint({bytes.begin(), bytes.begin() + keep}), FormatError) << keep;
  }
  auto longer = bytes;
  longer.push_back(0);
  EXPECT_THROW(deserialize_checkpoint(longer), FormatError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(bad_magic), FormatError);
}

TEST(Checkpoint, DimensionMismatchFails) {
  const Transceiver t = Transceiver::create(small_arch(ModelKind::brnn), 1);
  const auto bytes = serialize_checkpoint(t, ChannelConfig{});
  const std::uint32_t len = bytes[6] | (bytes[7] << 8) | (bytes[8] << 16) | (bytes[9] << 24);
  auto header = nlohmann::json::parse(bytes.begin() + 10, bytes.begin() + 10 + len);
  header["architecture"]["brnn_hidden"] = 9;  // manifest still says 7
  const std::string text = header.dump();
  std::vector<std::uint8_t> edited(bytes.begin(), bytes.begin() + 6);
  const std::uint32_t n = static_cast<std::uint32_t>(text.size());
  for (int i = 0; i < 4; ++i) edited.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  edited.insert(edited.end(), text.begin(), text.end());
  edited.insert(edited.end(), bytes.begin() + 10 + len, bytes.end());
  EXPECT_THROW(deserialize_checkpoint(edited), FormatError);
}

TEST(Checkpoint, MissingFileFails) {
  EXPECT_THROW(load_checkpoint(temp_path("does_not_exist.faec")), FormatError);
}

}  // namespace
}  // namespace faec
