// The oracles themselves, pinned on hand-checkable cases.
#include "doctest.h"
#include "oracles.hpp"
#include "ref_ssim.hpp"

TEST_CASE("levenshtein hand cases") {
  CHECK(oracle::levenshtein(std::string("kitten"), std::string("sitting")) == 3);
  CHECK(oracle::levenshtein(std::string(""), std::string("abc")) == 3);
  CHECK(oracle::levenshtein(std::string("flaw"), std::string("lawn")) == 2);
  CHECK(oracle::levenshtein(oracle::split_words("a b c"), oracle::split_words("a x c d")) == 2);
}

TEST_CASE("finite differences of a cubic") {
  auto f = [](const std::vector<double>& x) { return x[0] * x[0] * x[0] + 2 * x[1]; };
  const auto g = oracle::fd_gradient(f, {2.0, -1.0}, 1e-4);
  CHECK(g[0] == doctest::Approx(12.0).epsilon(1e-6));
  CHECK(g[1] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("reference ssim of an image with itself is one") {
  oracle::Gen gen(5);
  const auto v = gen.floats(40 * 40 * 3, 0.0, 1.0);
  CHECK(oracle::ref_ms_ssim(v, v, 40, 40, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(oracle::ref_ms_ssim(v, v, 40, 40, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("naive stencils on a ramp") {
  oracle::Tensor ramp = oracle::Tensor::zeros(oracle::Shape{1, 4, 5});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) ramp.at(0, y, x) = 0.5f * x + 0.25f * y;
  CHECK(oracle::laplacian_l1(ramp) == doctest::Approx(0.0));
  // 16 x-differences of 0.5 and 15 y-differences of 0.25
  CHECK(oracle::grad_l1(ramp) == doctest::Approx((16 * 0.5 + 15 * 0.25) / 31.0));
}
