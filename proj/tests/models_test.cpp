#include <doctest.h>

#include <random>

#include "checks.hpp"
#include "mvg/model.hpp"
#include "mvg/sample.hpp"

using mvg::ArchitectureConfig;
using mvg::ArchitectureKind;
using mvg::Model;
using mvg::Shape;

namespace {

std::vector<Shape> stage_shapes(const Model<float>& m) {
  std::vector<Shape> out;
  for (const auto& s : m.pipeline()) out.push_back(s.shape);
  return out;
}

std::vector<std::string> stage_names(const Model<float>& m) {
  std::vector<std::string> out;
  for (const auto& s : m.pipeline()) out.push_back(s.name);
  return out;
}

// Independent closed-form count for a single-view stack.
std::size_t single_view_count(std::size_t f, std::size_t k, std::size_t flat, std::size_t hidden,
                              std::size_t classes) {
  return f * (k * k + 1) + f * (f * k * k + 1) + hidden * (flat + 1) + classes * (hidden + 1);
}

}  // namespace

TEST_CASE("single-view pipeline shapes") {
  const Model<float> m(ArchitectureConfig::single_view(1));
  CHECK(stage_names(m) ==
        std::vector<std::string>{"input", "conv1", "pool1", "conv2", "pool2", "flatten", "fc", "softmax"});
  CHECK(stage_shapes(m) == std::vector<Shape>{{1, 47, 57}, {128, 43, 53}, {128, 21, 26}, {128, 17, 22},
                                              {128, 8, 11}, {11264}, {256}, {20}});
}

TEST_CASE("parallel-view pipeline shapes") {
  const Model<float> m(ArchitectureConfig::parallel_view());
  CHECK(stage_names(m) == std::vector<std::string>{"input", "conv1", "pool1", "merger", "conv2", "pool2", "flatten",
                                                   "fc", "softmax"});
  CHECK(stage_shapes(m) == std::vector<Shape>{{1, 47, 57}, {128, 43, 53}, {128, 21, 26}, {512, 21, 26},
                                              {128, 17, 22}, {128, 8, 11}, {11264}, {256}, {20}});
  CHECK(m.branch_count() == 4);
}

TEST_CASE("merged-view pipeline shapes") {
  const Model<float> m(ArchitectureConfig::merged_view());
  CHECK(stage_shapes(m) == std::vector<Shape>{{1, 94, 114}, {128, 90, 110}, {128, 45, 55}, {128, 41, 51},
                                              {128, 20, 25}, {64000}, {256}, {20}});
}

TEST_CASE("parameter counts agree with a closed-form summation") {
  const Model<float> single(ArchitectureConfig::single_view(0));
  CHECK(single.parameter_count() == single_view_count(128, 5, 11264, 256, 20));
  CHECK(single.parameter_count() == 3302036);

  const Model<float> merged(ArchitectureConfig::merged_view());
  CHECK(merged.parameter_count() == single_view_count(128, 5, 64000, 256, 20));

  const Model<float> parallel(ArchitectureConfig::parallel_view());
  CHECK(parallel.parameter_count() ==
        4 * 128 * 26 + 128 * (512 * 25 + 1) + 256 * (11264 + 1) + 20 * (256 + 1));
}

TEST_CASE("forward trace matches the build-time pipeline") {
  std::mt19937_64 gen(1);
  for (auto config : {ArchitectureConfig::single_view(2), ArchitectureConfig::parallel_view(),
                      ArchitectureConfig::merged_view()}) {
    auto model = Model<float>::build(testutil::shrunk(config), 3);
    const auto probs = model.forward(testutil::random_sample(12, 14, gen));
    std::vector<Shape> expected;
    for (std::size_t i = 1; i < model.pipeline().size(); ++i) expected.push_back(model.pipeline()[i].shape);
    CHECK(model.last_trace() == expected);
    double total = 0.0;
    for (float p : probs.data()) {
      CHECK(p >= 0.0f);
      CHECK(p <= 1.0f);
      total += p;
    }
    CHECK(std::abs(total - 1.0) <= 1e-6);
  }
}

TEST_CASE("builders reject impossible geometries") {
  auto tiny = ArchitectureConfig::single_view(0);
  tiny.view_rows = 6;
  tiny.view_cols = 6;
  CHECK_THROWS_AS(Model<float>{tiny}, mvg::BuildError);
  CHECK_THROWS_AS(Model<float>{ArchitectureConfig::single_view(4)}, mvg::BuildError);
  auto one_class = ArchitectureConfig::merged_view();
  one_class.classes = 1;
  CHECK_THROWS_AS(Model<float>{one_class}, mvg::BuildError);
}

TEST_CASE("forward rejects mismatched views and backward needs a forward") {
  auto model = Model<double>::build(testutil::shrunk(ArchitectureConfig::parallel_view()), 1);
  std::mt19937_64 gen(2);
  auto sample = testutil::random_sample(12, 14, gen);
  sample.views[2] = mvg::BasicTensor<float>(Shape{1, 12, 15});
  CHECK_THROWS_AS(model.forward(sample), mvg::DimensionError);
  CHECK_THROWS_AS(model.backward(mvg::BasicTensor<double>(Shape{3})), mvg::StateError);
}

TEST_CASE("single-view models read only their own view") {
  std::mt19937_64 gen(9);
  for (std::size_t d = 0; d < mvg::kViewCount; ++d) {
    const auto model = Model<double>::build(testutil::shrunk(ArchitectureConfig::single_view(d)), 5);
    auto a = testutil::random_sample(12, 14, gen);
    auto b = testutil::random_sample(12, 14, gen);
    b.views[d] = a.views[d];
    CHECK(model.predict(a) == model.predict(b));
  }
}

TEST_CASE("whole-model gradients match central differences") {
  for (auto kind : {ArchitectureKind::single_view, ArchitectureKind::parallel_view, ArchitectureKind::merged_view})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      CAPTURE(seed);
      CHECK(checks::model_gradient_error(kind, seed) < 1e-4);
    }
}

TEST_CASE("zero output gradient gives zero parameter gradients") {
  std::mt19937_64 gen(4);
  auto model = Model<double>::build(testutil::shrunk(ArchitectureConfig::merged_view()), 8);
  model.zero_grad();
  model.forward(testutil::random_sample(12, 14, gen));
  model.backward(mvg::BasicTensor<double>(Shape{3}));
  for (const auto* p : model.parameters())
    for (double g : p->grad.data()) CHECK(g == 0.0);
}

TEST_CASE("equal views through equal branches give identical branch outputs") {
  auto model = Model<double>::build(testutil::shrunk(ArchitectureConfig::parallel_view()), 12);
  for (std::size_t b = 1; b < model.branch_count(); ++b) {
    model.branch(b).conv().kernels().value = model.branch(0).conv().kernels().value;
    model.branch(b).conv().bias().value = model.branch(0).conv().bias().value;
  }
  std::mt19937_64 gen(6);
  auto sample = testutil::random_sample(12, 14, gen);
  for (auto& v : sample.views) v = sample.views[1];
  const auto input = mvg::tensor_cast<double>(sample.views[0]);
  const auto first = model.branch(0).infer(input);
  for (std::size_t b = 1; b < model.branch_count(); ++b) CHECK(model.branch(b).infer(input) == first);

  auto swapped = sample;
  std::swap(swapped.views[0], swapped.views[3]);
  CHECK(model.predict(swapped) == model.predict(sample));
}

TEST_CASE("tiling places views in reading order and crops back exactly") {
  mvg::MultiViewSample s;
  for (std::size_t v = 0; v < 4; ++v) s.views[v] = mvg::BasicTensor<float>(Shape{1, 1, 1}, 0.1f * (v + 1));
  const auto tiled = mvg::tile_views<float>(s);
  CHECK(testutil::to_vector(tiled) ==
        std::vector<double>{0.1f, 0.2f, 0.3f, 0.4f});

  std::mt19937_64 gen(3);
  const auto big = testutil::random_sample(47, 57, gen);
  const auto t = mvg::tile_views<float>(big);
  CHECK(t.shape() == Shape({1, 94, 114}));
  const auto parts = mvg::crop_quadrants(t);
  for (std::size_t v = 0; v < 4; ++v) CHECK(parts[v] == big.views[v]);

  auto bad = big;
  bad.views[3] = mvg::BasicTensor<float>(Shape{1, 47, 56});
  CHECK_THROWS_AS(mvg::tile_views<float>(bad), mvg::DimensionError);
}

TEST_CASE("deferred dense gradients equal immediate accumulation") {
  std::mt19937_64 gen(14);
  for (auto config : {ArchitectureConfig::single_view(0), ArchitectureConfig::parallel_view(),
                      ArchitectureConfig::merged_view()}) {
    auto a = Model<double>::build(testutil::shrunk(config), 2);
    auto b = Model<double>::build(testutil::shrunk(config), 2);
    a.zero_grad();
    b.zero_grad();
    for (int i = 0; i < 7; ++i) {
      const auto sample = testutil::random_sample(12, 14, gen, i % 3);
      auto pa = a.forward(sample);
      pa[sample.label] -= 1.0;
      a.backward_logits(pa);
      auto pb = b.forward(sample);
      pb[sample.label] -= 1.0;
      b.backward_logits_deferred(pb);
    }
    b.flush_gradients();
    const auto ga = a.parameters(), gb = b.parameters();
    for (std::size_t i = 0; i < ga.size(); ++i) {
      CAPTURE(ga[i]->name);
      CHECK(oracle::relative_error(testutil::to_vector(ga[i]->grad), testutil::to_vector(gb[i]->grad)) < 1e-13);
    }
  }
}
