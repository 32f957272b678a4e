#include "helpers.hpp"
#include "mvgeom/featurefield.hpp"
#include "mvgeom/synthscene.hpp"

#include <doctest.h>

#include <filesystem>
#include <limits>

using namespace mvgeom;

namespace {

ReferenceSet plane_references(int count, double depth, int size = 16,
                              Texture texture = Texture{Texture::Kind::kNoise, 0.8, 4}) {
  SceneSpec scene;
  scene.channels = 3;
  scene.primitives.push_back(Primitive::plane(Vec3(0, 0, depth), Vec3(0, 0, -1), Vec3(1, 0, 0), 0, 0, texture));
  ReferenceSet refs;
  for (int i = 0; i < count; ++i) {
    const CameraPose cam = testing::make_camera(size, size, size, Mat3::Identity(), Vec3(0.1 * i, -0.05 * i, 0));
    refs.features.push_back(render_ground_truth(scene, cam, size, size).features);
    refs.poses.push_back(cam);
  }
  return refs;
}

}  // namespace

TEST_CASE("composite weights examples") {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> one = {inf}, d1 = {0.1};
  CHECK(composite_weights(one, d1)[0] == 1.0);
  const std::vector<double> zeros(5, 0.0), d5(5, 0.3);
  for (double w : composite_weights(zeros, d5)) CHECK(w == 0.0);
  const std::vector<double> s2 = {0.5, 0.5}, dd = {1.0, 1.0};
  const auto w = composite_weights(s2, dd);
  CHECK(w[0] == doctest::Approx(1 - std::exp(-0.5)));
  CHECK(w[1] == doctest::Approx(std::exp(-0.5) * (1 - std::exp(-0.5))));
  CHECK(w[0] == doctest::Approx(0.3935).epsilon(1e-3));
  CHECK(w[1] == doctest::Approx(0.2387).epsilon(1e-3));
  const std::vector<double> neg = {-1.0};
  CHECK_THROWS_AS(composite_weights(neg, d1), DomainError);
  const std::vector<double> pos = {1.0}, zero_delta = {0.0};
  CHECK_THROWS_AS(composite_weights(pos, zero_delta), DomainError);
}

TEST_CASE("composite weights match the transmittance-difference oracle") {
  std::mt19937_64 rng(17);
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0.01, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 40;
    std::vector<double> s(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = e(rng) * (trial % 3 == 0 ? 10.0 : 1.0);
      d[i] = u(rng);
    }
    const auto w = composite_weights(s, d);
    const auto expect = oracle::composite(s, d);
    double sum = 0.0, optical = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(w[i] >= 0.0);
      CHECK(std::abs(w[i] - expect[i]) < 1e-12);
      sum += w[i];
      optical += s[i] * d[i];
    }
    CHECK(sum <= 1.0 + 1e-15);
    CHECK(std::abs(sum - (1.0 - std::exp(-optical))) < 1e-9);
  }
}

TEST_CASE("moving an opaque sample nearer reduces the weights behind it") {
  const std::vector<double> d(6, 0.2);
  std::vector<double> far = {0.1, 0.1, 0.1, 0.1, 5.0, 0.1};
  std::vector<double> near = {0.1, 0.1, 5.0, 0.1, 0.1, 0.1};
  const auto wf = composite_weights(far, d), wn = composite_weights(near, d);
  for (std::size_t s = 3; s < 5; ++s) CHECK(wn[s] < wf[s]);
}

TEST_CASE("an empty field renders nothing") {
  const ReferenceSet refs = plane_references(2, 2.0);
  const FieldFunction empty = [](const FieldSample& s) { return FieldOutput{0.0, {s.feature.begin(), s.feature.end()}}; };
  const auto out = render_feature_map(refs, refs.poses[0], empty, 16, 16);
  for (float v : out.features.data()) CHECK(v == 0.0f);
  for (float v : out.alpha.data()) CHECK(v == 0.0f);
  CHECK_THROWS_AS(central_ray_median_depth(out), DomainError);
}

TEST_CASE("opaque plane at the reference pose reproduces the reference") {
  const ReferenceSet refs = plane_references(1, 2.0);
  const auto out = render_feature_map(refs, refs.poses[0], opaque_plane_field(Vec3(0, 0, 1), 2.0, 0.4), 16, 16);
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) {
      CHECK(out.alpha.at(r, c) == doctest::Approx(1.0));
      for (int ch = 0; ch < 3; ++ch) CHECK(std::abs(out.features.at(r, c, ch) - refs.features[0].at(r, c, ch)) < 1e-3);
    }
  }
  CHECK(std::abs(central_ray_median_depth(out) - 2.0) < 0.35);
}

TEST_CASE("constant references give feature = constant * alpha") {
  ReferenceSet refs = plane_references(3, 2.0);
  for (auto& f : refs.features) std::fill(f.data().begin(), f.data().end(), 0.7f);
  const CameraPose target = testing::make_camera(16, 16, 16.0, axis_angle(Vec3(0, 1, 0), 0.1), Vec3(0.05, 0, 0));
  const auto out = render_feature_map(refs, target, consistency_field(0.5, 0.01), 16, 16);
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) {
      for (int ch = 0; ch < 3; ++ch) CHECK(out.features.at(r, c, ch) == doctest::Approx(0.7 * out.alpha.at(r, c)).epsilon(1e-5));
    }
  }
}

TEST_CASE("shuffling references leaves the render unchanged") {
  const ReferenceSet refs = plane_references(4, 2.5);
  ReferenceSet shuffled;
  for (int i : {2, 0, 3, 1}) {
    shuffled.features.push_back(refs.features[static_cast<std::size_t>(i)]);
    shuffled.poses.push_back(refs.poses[static_cast<std::size_t>(i)]);
  }
  const CameraPose target = testing::make_camera(12, 12, 12.0, Mat3::Identity(), Vec3(0.12, -0.03, 0));
  const auto a = render_feature_map(refs, target, consistency_field(), 12, 12);
  const auto b = render_feature_map(shuffled, target, consistency_field(), 12, 12);
  for (std::size_t i = 0; i < a.features.size(); ++i) CHECK(std::abs(a.features.data()[i] - b.features.data()[i]) < 1e-6);
  for (std::size_t i = 0; i < a.alpha.size(); ++i) CHECK(std::abs(a.alpha.data()[i] - b.alpha.data()[i]) < 1e-6);
}

TEST_CASE("consistency field finds the plane the references agree on") {
  const ReferenceSet refs = plane_references(4, 2.0, 24, Texture{Texture::Kind::kChecker, 0.8, 4});
  const auto out = render_feature_map(refs, refs.poses[1], consistency_field(), 24, 24);
  CHECK(std::abs(central_ray_median_depth(out) - 2.0) < 0.35);
  int near_plane = 0;
  for (float d : out.median_depth.data()) near_plane += std::abs(d - 2.0) < 0.35;
  CHECK(near_plane >= 0.8 * 24 * 24);
}

TEST_CASE("reference sets round-trip through a directory") {
  const ReferenceSet refs = plane_references(3, 2.0, 8);
  const std::string dir = testing::temp_path("refs");
  std::filesystem::remove_all(dir);
  write_reference_set(refs, dir);
  const ReferenceSet back = read_reference_set(dir);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.features[i] == refs.features[i]);
    CHECK(back.poses[i].pose.translation == refs.poses[i].pose.translation);
  }
  ReferenceSet bad = refs;
  bad.features[1] = FeatureGrid(4, 4, 3);
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("mlp field save/load round-trips and keeps density non-negative") {
  const MlpField mlp = MlpField::random(3, 8, 3, 5);
  const std::string path = testing::temp_path("field.mlp");
  mlp.save(path);
  const MlpField back = MlpField::load(path);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> f = {n(rng), n(rng), n(rng)};
    const FieldSample s{Vec3::Zero(), f, std::abs(n(rng)), 2};
    const FieldOutput a = mlp(s), b = back(s);
    CHECK(a.density >= 0.0);
    CHECK(a.density == b.density);
    CHECK(a.feature == b.feature);
  }
  const ReferenceSet refs = plane_references(2, 2.0, 8);
  CHECK_NOTHROW(render_feature_map(refs, refs.poses[0], back.as_function(), 8, 8));
}
