#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "csi4/common/errors.hpp"
#include "csi4/models/checkpoint.hpp"
#include "csi4/models/networks.hpp"
#include "gradcheck.hpp"

namespace csi4 {
namespace {

using ad::Shape;
using ad::Tensor;
using namespace models;

std::size_t dense(std::size_t in, std::size_t out) { return in * out + out; }

std::size_t generator_count(const GeneratorSpec& s) {
  std::size_t n = s.num_classes * s.embed_dim, in = s.latent_dim + s.embed_dim;
  for (std::size_t h : s.hidden) {
    n += dense(in, h) + (s.batchnorm ? 2 * h : 0);
    in = h;
  }
  return n + dense(in, s.antennas * s.time);
}

std::size_t critic_count(const CriticSpec& s) {
  std::size_t n = s.num_classes * s.embed_dim, in = s.in_features + s.embed_dim;
  for (std::size_t h : s.hidden) n += dense(in, h), in = h;
  return n + dense(in, 1);
}

std::size_t discriminator_count(const DiscriminatorSpec& s) {
  std::size_t n = s.num_classes * s.embed_dim, in = s.in_features + s.embed_dim;
  for (std::size_t h : s.hidden) n += dense(in, h) + (s.batchnorm ? 2 * h : 0), in = h;
  return n + dense(in, 1);
}

std::size_t classifier_count(const ClassifierSpec& s) {
  std::size_t n = 0, in = 1, h = s.antennas, w = s.time;
  for (std::size_t c : s.conv_channels) {
    n += s.kernel * s.kernel * in * c + c + 2 * c;
    in = c;
    h = (h + 2 * s.padding - s.kernel + 1) / s.pool;
    w = (w + 2 * s.padding - s.kernel + 1) / s.pool;
  }
  return n + dense(h * w * in, s.num_classes);
}

Tensor latent(std::size_t m, std::size_t d, std::uint64_t seed) {
  Rng rng(seed, "test-z");
  return testing::random_tensor({m, d}, rng);
}

TEST(Generator, DefaultParameterCount) {
  GeneratorSpec spec;
  spec.num_classes = 8;
  spec.embed_dim = 8;
  // (108*128+128)+(128*256+256)+(256*512+512)+(512*1024+1024)+(1024*1500+1500)+8*8
  EXPECT_EQ(build_generator(spec, 1).parameter_count(), 2'241'436u);
  EXPECT_EQ(generator_count(spec), 2'241'436u);
}

TEST(Models, ParameterCountsMatchClosedFormForRandomSpecs) {
  Rng rng(123, "random-specs");
  auto width = [&] { return std::size_t(1 + rng.below(24)); };
  for (int i = 0; i < 20; ++i) {
    GeneratorSpec g;
    g.latent_dim = width();
    g.num_classes = 1 + rng.below(6);
    g.embed_dim = width();
    g.hidden = {width(), width(), width(), width()};
    g.antennas = width();
    g.time = width();
    if (rng.below(2) == 0) g = GeneratorSpec::bce_variant(g);
    EXPECT_EQ(build_generator(g, i).parameter_count(), generator_count(g));

    CriticSpec c;
    c.in_features = width();
    c.num_classes = 1 + rng.below(6);
    c.embed_dim = width();
    c.hidden = {width(), width()};
    EXPECT_EQ(build_critic(c, i).parameter_count(), critic_count(c));

    DiscriminatorSpec d;
    d.in_features = width();
    d.num_classes = 1 + rng.below(6);
    d.embed_dim = width();
    d.hidden = {width(), width(), width(), width()};
    d.batchnorm = rng.below(2) == 0;
    EXPECT_EQ(build_discriminator_bce(d, i).parameter_count(), discriminator_count(d));

    ClassifierSpec k;
    k.antennas = 8 + rng.below(30);
    k.time = 8 + rng.below(30);
    k.conv_channels = {width(), width(), width()};
    k.num_classes = 2 + rng.below(7);
    EXPECT_EQ(build_classifier(k, i).parameter_count(), classifier_count(k));
  }
}

TEST(Generator, SeedDeterminism) {
  GeneratorSpec spec;
  spec.hidden = {16, 16, 16, 16};
  EXPECT_EQ(build_generator(spec, 5), build_generator(spec, 5));
  EXPECT_NE(build_generator(spec, 5), build_generator(spec, 6));
}

TEST(Generator, OutputShapeRangeAndDeterminism) {
  GeneratorSpec spec;  // full-scale geometry: 30 x 50, K = 8
  auto params = build_generator(spec, 3);
  // Scale weights up so tanh saturates for some outputs.
  for (auto& e : params.entries()) {
    for (float& v : e.value.data()) v *= 40.0f;
  }
  Tensor z = latent(6, spec.latent_dim, 1);
  std::vector<int> labels{0, 1, 2, 3, 7, 7};
  Tensor out = generate(spec, params, z, labels);
  EXPECT_EQ(out.shape(), (Shape{6, 1500}));
  for (float v : out.data()) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_EQ(out, generate(spec, params, z, labels));
}

TEST(Generator, LabelOutOfRangeIsDataError) {
  GeneratorSpec spec;
  spec.hidden = {8, 8, 8, 8};
  auto params = build_generator(spec, 3);
  std::vector<int> labels{8};
  EXPECT_THROW(generate(spec, params, latent(1, spec.latent_dim, 2), labels), DataError);
  labels = {-1};
  EXPECT_THROW(generate(spec, params, latent(1, spec.latent_dim, 2), labels), DataError);
}

TEST(Generator, EmbeddingStartsAsIdentity) {
  GeneratorSpec spec;
  spec.num_classes = 4;
  spec.embed_dim = 4;
  spec.hidden = {8, 8, 8, 8};
  const Tensor e = build_generator(spec, 1).get("embed.weight");
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(e.at(r, c), r == c ? 1.0f : 0.0f);
  }
}

TEST(Generator, InitialWeightsFollowNarrowNormal) {
  GeneratorSpec spec;
  auto params = build_generator(spec, 9);
  const Tensor& w = params.get("fc5.weight");
  double s = 0, s2 = 0;
  for (float v : w.data()) s += v, s2 += double(v) * v;
  const double n = double(w.size());
  EXPECT_NEAR(s / n, 0.0, 1e-3);
  EXPECT_NEAR(std::sqrt(s2 / n), 0.02, 1e-3);
  for (float v : params.get("fc5.bias").data()) EXPECT_EQ(v, 0.0f);
}

TEST(Critic, ShapeEvalDeterminismAndDropoutStochasticity) {
  CriticSpec spec;
  spec.in_features = 80;
  spec.num_classes = 4;
  spec.embed_dim = 4;
  auto params = build_critic(spec, 2);
  Rng rng(1, "critic-x");
  Tensor x = testing::random_tensor({5, 80}, rng);
  std::vector<int> labels{0, 1, 2, 3, 0};
  Tensor a = critic_scores(spec, params, x, labels);
  EXPECT_EQ(a.shape(), (Shape{5, 1}));
  EXPECT_EQ(a, critic_scores(spec, params, x, labels));

  auto train_out = [&](std::uint64_t seed) {
    ad::Graph g;
    BoundParams bp(g, params, false);
    Rng mask(seed, "dropout");
    ForwardContext ctx{ad::Mode::train, &mask, nullptr};
    return critic_forward(spec, bp, g.constant(x), labels, ctx).value();
  };
  EXPECT_NE(train_out(1), train_out(2));
}

TEST(Critic, OutputIsUnbounded) {
  CriticSpec spec;
  spec.in_features = 10;
  spec.num_classes = 2;
  spec.embed_dim = 2;
  auto params = build_critic(spec, 4);
  params.get("fc3.bias")[0] = 7.5f;
  std::vector<int> labels{1};
  EXPECT_GT(std::abs(critic_scores(spec, params, Tensor(Shape{1, 10}), labels)[0]), 1.0f);
}

ad::Tensor discriminator_scores(const DiscriminatorSpec& spec, const ModelParams& params,
                                const Tensor& x, std::span<const int> labels) {
  ad::Graph g;
  BoundParams bp(g, params, false);
  ForwardContext ctx{ad::Mode::eval, nullptr, nullptr};
  return discriminator_forward(spec, bp, g.constant(x), labels, ctx).value();
}

TEST(Discriminator, OutputsAreProbabilities) {
  DiscriminatorSpec spec;
  spec.in_features = 80;
  spec.num_classes = 4;
  spec.embed_dim = 4;
  auto params = build_discriminator_bce(spec, 5);
  Rng rng(3, "disc-x");
  Tensor x = testing::random_tensor({7, 80}, rng, 5.0f);
  std::vector<int> labels{0, 1, 2, 3, 3, 2, 1};
  const Tensor scores = discriminator_scores(spec, params, x, labels);
  for (float v : scores.data()) {
    EXPECT_GT(v, 0.0f);
    EXPECT_LT(v, 1.0f);
  }
}

TEST(Discriminator, ZeroWeightsGiveOneHalf) {
  DiscriminatorSpec spec;
  spec.in_features = 12;
  spec.num_classes = 3;
  spec.embed_dim = 3;
  auto params = build_discriminator_bce(spec, 5);
  for (auto& e : params.entries()) {
    if (e.trainable) std::fill(e.value.data().begin(), e.value.data().end(), 0.0f);
  }
  std::vector<int> labels{0, 2};
  Tensor out = discriminator_scores(spec, params, Tensor(Shape{2, 12}), labels);
  EXPECT_FLOAT_EQ(out[0], 0.5f);
  EXPECT_FLOAT_EQ(out[1], 0.5f);
}

TEST(Discriminator, ParameterOrderStableAcrossRebuilds) {
  DiscriminatorSpec spec;
  auto a = build_discriminator_bce(spec, 11), b = build_discriminator_bce(spec, 11);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.entries()[i].name, b.entries()[i].name);
  EXPECT_EQ(a, b);
}

TEST(Classifier, OutputShapeAndEvalDeterminism) {
  ClassifierSpec spec;  // 30 x 50, 8 classes
  auto params = build_classifier(spec, 1);
  Rng rng(2, "clf-x");
  Tensor x = testing::random_tensor({3, 1, 30, 50}, rng);
  Tensor logits = classifier_logits(spec, params, x);
  EXPECT_EQ(logits.shape(), (Shape{3, 8}));
  EXPECT_EQ(logits, classifier_logits(spec, params, x));
  EXPECT_THROW(classifier_logits(spec, params, Tensor(Shape{3, 1, 30, 49})), DimensionError);
}

TEST(Classifier, PredictionInvariantToBatchComposition) {
  ClassifierSpec spec;
  spec.antennas = 8;
  spec.time = 10;
  spec.num_classes = 4;
  auto params = build_classifier(spec, 7);
  // Non-trivial running statistics.
  for (auto& e : params.entries()) {
    if (e.name.ends_with("running_var")) std::fill(e.value.data().begin(), e.value.data().end(), 2.0f);
    if (e.name.ends_with("running_mean")) std::fill(e.value.data().begin(), e.value.data().end(), 0.1f);
  }
  Rng rng(3, "clf-batch");
  Tensor x = testing::random_tensor({20, 8, 10}, rng);
  auto together = classifier_predict(spec, params, x, 256);
  auto chunked = classifier_predict(spec, params, x, 3);
  EXPECT_EQ(together, chunked);
  for (std::size_t i = 0; i < 20; ++i) {
    Tensor one(Shape{1, 8, 10}, std::vector<float>(x.data().begin() + i * 80, x.data().begin() + (i + 1) * 80));
    EXPECT_EQ(classifier_predict(spec, params, one)[0], together[i]) << i;
  }
}

class CheckpointTest : public ::testing::Test {
 protected:
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "csi4_ckpt_test";
  void SetUp() override { std::filesystem::create_directories(dir); }
  void TearDown() override { std::filesystem::remove_all(dir); }
};

TEST_F(CheckpointTest, RoundTripsAreBitExactForAllKinds) {
  GeneratorSpec g;
  g.hidden = {16, 32, 16, 8};
  g.amplitude_min = -0.25f;
  g.amplitude_max = 3.5f;
  std::vector<Checkpoint> cases = {
      {g, build_generator(g, 1)},
      {GeneratorSpec::bce_variant(g), build_generator(GeneratorSpec::bce_variant(g), 2)},
      {CriticSpec{}, build_critic(CriticSpec{}, 3)},
      {DiscriminatorSpec{}, build_discriminator_bce(DiscriminatorSpec{}, 4)},
      {ClassifierSpec{}, build_classifier(ClassifierSpec{}, 5)},
  };
  for (const auto& c : cases) {
    const auto path = dir / "m.ckpt";
    save_checkpoint(c, path);
    EXPECT_EQ(load_checkpoint(path), c);
  }
}

TEST_F(CheckpointTest, RejectsBadMagicTruncationAndLayoutMismatch) {
  CriticSpec spec;
  spec.in_features = 20;
  const auto path = dir / "c.ckpt";
  save_checkpoint({spec, build_critic(spec, 1)}, path);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& b) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << b;
  };
  write("XXXXXXXX" + bytes.substr(8));
  EXPECT_THROW(load_checkpoint(path), FormatError);
  write(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(load_checkpoint(path), IoError);
  // Params from a different spec under this spec's header.
  CriticSpec other = spec;
  other.hidden = {8, 4};
  save_checkpoint({spec, build_critic(other, 1)}, path);
  EXPECT_THROW(load_checkpoint(path), FormatError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
}

}  // namespace
}  // namespace csi4
