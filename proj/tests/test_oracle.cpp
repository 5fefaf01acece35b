#include <cmath>
#include <limits>

#include "doctest.h"
#include "oracle.hpp"

using namespace mars;

TEST_CASE("finite differences recover a quadratic derivative") {
  double x = 3.0;
  const auto grad = oracle::finite_diff_gradient([&]() { return x * x; }, {&x},
                                                 1e-5);
  REQUIRE(grad.size() == 1);
  CHECK(std::abs(grad[0] - 6.0) <= 1e-8);
  CHECK(x == 3.0);  // probe restores the coordinate
}

TEST_CASE("finite differences of a constant vanish") {
  double x = 1.0, y = -2.0;
  const auto grad =
      oracle::finite_diff_gradient([]() { return 42.0; }, {&x, &y}, 1e-5);
  CHECK(grad[0] == 0.0);
  CHECK(grad[1] == 0.0);
}

TEST_CASE("finite differences reject non-finite probes") {
  double x = 0.0;
  CHECK_THROWS_AS(
      oracle::finite_diff_gradient(
          [&]() { return std::numeric_limits<double>::infinity(); }, {&x},
          1e-5),
      std::runtime_error);
}
