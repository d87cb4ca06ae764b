#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "dircalc/errors.hpp"
#include "dircalc/special.hpp"

using namespace dircalc;

TEST(Special, UpperIncompleteGammaAgainstBoost) {
  for (double a : {0.5, 1.0, 2.0, 3.5, 12.0, 24.0}) {
    for (double x : {1e-6, 1e-3, 0.1, 1.0, 5.0, 20.0, 60.0, 200.0}) {
      const double ref = boost::math::gamma_q(a, x);
      if (ref < 1e-290) continue;
      EXPECT_NEAR(gamma_q(a, x), ref, 1e-13 * ref + 1e-300) << "a=" << a << " x=" << x;
    }
  }
}

TEST(Special, LogUpperGammaBeyondUnderflow) {
  EXPECT_NEAR(log_gamma_q(1.0, 900.0), -900.0, 1e-9);
  EXPECT_NEAR(log_gamma_q(2.0, 900.0), -900.0 + std::log(901.0), 1e-9);
  EXPECT_EQ(gamma_q(1.0, 900.0), 0.0);
}

TEST(Special, Symbols) {
  for (double N : {1.0, 2.0, 3.5}) {
    for (double x : {0.01, 0.5, 2.0, 10.0}) {
      const double q = x * boost::math::gamma_p_derivative(N, x);
      EXPECT_NEAR(q_symbol(x, N), q, 1e-13 * q);
      EXPECT_NEAR(p_symbol(x, N), boost::math::gamma_q(N, x), 1e-13);
      EXPECT_NEAR(r_symbol(x, N), boost::math::gamma_q(N, x) * std::exp(x / 2.0), 1e-12 * std::exp(x / 2.0));
    }
  }
  EXPECT_DOUBLE_EQ(q_symbol(0.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(p_symbol(0.0, 2.0), 1.0);
}

TEST(Special, RejectsBadArguments) {
  EXPECT_THROW(gamma_q(0.0, 1.0), ValidationError);
  EXPECT_THROW(gamma_q(1.0, -1.0), ValidationError);
  EXPECT_THROW(gamma_q(std::nan(""), 1.0), ValidationError);
}
