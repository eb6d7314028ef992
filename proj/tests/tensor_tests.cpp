#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "aipgame/rng.hpp"
#include "aipgame/tensor.hpp"

using namespace aipgame;

namespace {

Tensor make(Shape shape, std::vector<double> data) {
  return Tensor(std::move(shape), std::move(data));
}

Tensor random_tensor(Shape shape, SeededRng& rng, double lo = -100.0, double hi = 100.0) {
  std::size_t count = 1;
  for (std::size_t e : shape) count *= e;
  std::vector<double> data(count);
  for (double& v : data) v = lo + (hi - lo) * rng.uniform();
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("construction validates shape and data") {
    CHECK_THROWS_AS(Tensor({0, 3}), std::invalid_argument);
    CHECK_THROWS_AS(make({2, 2}, {1.0, 2.0, 3.0}), std::invalid_argument);
    CHECK_THROWS_AS(make({2}, {1.0, std::nan("")}), std::runtime_error);
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    for (double v : t.values()) CHECK(v == 0.0);
  }

  TEST_CASE("l2_norm basics") {
    CHECK(l2_norm(Tensor({4, 4})) == 0.0);
    CHECK(l2_norm(make({2}, {3.0, 4.0})) == doctest::Approx(5.0).epsilon(1e-12));
    Tensor hundred({10, 10});
    for (double& v : hundred.values()) v = 2.0;
    CHECK(l2_norm(hundred) == doctest::Approx(20.0).epsilon(1e-12));
  }

  TEST_CASE("l2_project interior point unchanged") {
    Tensor t = make({2}, {3.0, 4.0});
    Tensor p = l2_project(t, 10.0);
    CHECK(p == t);
  }

  TEST_CASE("l2_project radial scaling") {
    Tensor p = l2_project(make({2}, {3.0, 4.0}), 1.0);
    CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-12));
  }

  TEST_CASE("l2_project zero tensor and bad eps") {
    Tensor z({3});
    CHECK(l2_project(z, 2.5) == z);
    CHECK_THROWS_AS(l2_project(z, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(l2_project(z, -1.0), std::invalid_argument);
  }

  TEST_CASE("l2_project is idempotent and respects the budget") {
    SeededRng rng(41);
    for (int trial = 0; trial < 1000; ++trial) {
      Tensor t = random_tensor({4, 5}, rng);
      double eps = 0.01 + 50.0 * rng.uniform();
      Tensor once = l2_project(t, eps);
      Tensor twice = l2_project(once, eps);
      CHECK(l2_norm(once) <= eps * (1.0 + 1e-9));
      for (std::size_t i = 0; i < once.size(); ++i) {
        double scale = std::max(std::abs(once[i]), 1.0);
        CHECK(std::abs(twice[i] - once[i]) <= 1e-12 * scale);
      }
    }
  }

  TEST_CASE("clip_values") {
    Tensor t = make({3}, {-1.0, 100.0, 300.0});
    Tensor c = clip_values(t, 0.0, 255.0);
    CHECK(c.values() == std::vector<double>{0.0, 100.0, 255.0});
    CHECK(clip_values(c, 0.0, 255.0) == c);
    Tensor zeroed = clip_values(t, 0.0, 0.0);
    for (double v : zeroed.values()) CHECK(v == 0.0);
    CHECK_THROWS_AS(clip_values(t, 1.0, 0.0), std::invalid_argument);
  }

  TEST_CASE("quantize rounding and clamping") {
    Tensor q = quantize(make({4}, {3.4, 3.5, 255.7, -0.3}));
    CHECK(q.values() == std::vector<double>{3.0, 4.0, 255.0, 0.0});
  }

  TEST_CASE("quantize is idempotent with integer output") {
    SeededRng rng(42);
    Tensor t = random_tensor({8, 8}, rng, -20.0, 280.0);
    Tensor q = quantize(t);
    CHECK(quantize(q) == q);
    for (double v : q.values()) {
      CHECK(v == std::floor(v));
      CHECK(v >= 0.0);
      CHECK(v <= 255.0);
    }
    Tensor ints = make({3}, {0.0, 17.0, 255.0});
    CHECK(quantize(ints) == ints);
  }

  TEST_CASE("resize_bilinear identity at the same shape") {
    SeededRng rng(43);
    Tensor t = random_tensor({5, 7, 3}, rng, 0.0, 255.0);
    Tensor r = resize_bilinear(t, 5, 7);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(std::abs(r[i] - t[i]) <= 1e-9);
    }
  }

  TEST_CASE("resize_bilinear 1x1 source broadcasts") {
    Tensor r = resize_bilinear(make({1, 1}, {37.0}), 4, 3);
    for (double v : r.values()) CHECK(v == doctest::Approx(37.0).epsilon(1e-12));
  }

  TEST_CASE("resize_bilinear hand-computed column upsample") {
    Tensor r = resize_bilinear(make({2, 1}, {0.0, 2.0}), 3, 1);
    REQUIRE(r.size() == 3);
    CHECK(r[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r[2] == doctest::Approx(2.0).epsilon(1e-12));
  }

  TEST_CASE("resize_bilinear rejects zero extents") {
    Tensor t({2, 2});
    CHECK_THROWS_AS(resize_bilinear(t, 0, 2), std::invalid_argument);
    CHECK_THROWS_AS(resize_bilinear(t, 2, 0), std::invalid_argument);
  }

  TEST_CASE("resize adjoint satisfies the inner-product identity") {
    SeededRng rng(44);
    for (int trial = 0; trial < 100; ++trial) {
      Tensor x = random_tensor({6, 5}, rng);
      Tensor y = random_tensor({9, 4}, rng);
      double lhs = dot(resize_bilinear(x, 9, 4), y);
      double rhs = dot(x, resize_bilinear_adjoint(y, 6, 5));
      double scale = std::max({std::abs(lhs), std::abs(rhs), 1.0});
      CHECK(std::abs(lhs - rhs) <= 1e-6 * scale);
    }
  }

  TEST_CASE("image_dims handles rank 2 and rank 3") {
    ImageDims two = image_dims(Tensor({4, 6}));
    CHECK(two.height == 4);
    CHECK(two.width == 6);
    CHECK(two.channels == 1);
    CHECK(image_dims(Tensor({4, 6, 3})).channels == 3);
    CHECK_THROWS_AS(image_dims(Tensor({4})), std::invalid_argument);
  }

  TEST_CASE("arithmetic operators") {
    Tensor a = make({2}, {1.0, 2.0});
    Tensor b = make({2}, {10.0, 20.0});
    CHECK((a + b).values() == std::vector<double>{11.0, 22.0});
    CHECK((b - a).values() == std::vector<double>{9.0, 18.0});
    CHECK((a * 3.0).values() == std::vector<double>{3.0, 6.0});
    CHECK_THROWS_AS(a += Tensor({3}), std::invalid_argument);
  }
}
