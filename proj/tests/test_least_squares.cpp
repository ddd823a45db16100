#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "sqz/errors.hpp"
#include "sqz/least_squares.hpp"
#include "sqz/opo_model.hpp"

using namespace sqz;

namespace {

// Independent one-sided stencil: forward differences at h and h/2 combined
// by Richardson extrapolation, so truncation error is O(h^2).
std::vector<double> forward_jacobian(const ResidualFunction& fn, std::vector<double> p, std::size_t m) {
  std::vector<double> base, far, near;
  fn(p, base);
  std::vector<double> jac(m * p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double h = 1e-5 * (p[j] != 0.0 ? std::abs(p[j]) : 1.0);
    const double keep = p[j];
    p[j] = keep + h;
    fn(p, far);
    p[j] = keep + 0.5 * h;
    fn(p, near);
    p[j] = keep;
    for (std::size_t i = 0; i < m; ++i) {
      const double d_far = (far[i] - base[i]) / h;
      const double d_near = (near[i] - base[i]) / (0.5 * h);
      jac[i * p.size() + j] = 2.0 * d_near - d_far;
    }
  }
  return jac;
}

}  // namespace

TEST_CASE("linear scalar problem") {
  auto fn = [](std::span<const double> t, std::vector<double>& r) { r.assign(1, t[0] - 3.0); };
  const auto fit = least_squares(fn, {0.0}, {});
  CHECK(fit.converged);
  CHECK(fit.values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.residual_sum_of_squares < 1e-20);
}

TEST_CASE("Rosenbrock residuals from the classical start") {
  auto fn = [](std::span<const double> t, std::vector<double>& r) {
    r = {10.0 * (t[1] - t[0] * t[0]), 1.0 - t[0]};
  };
  const auto fit = least_squares(fn, {-1.2, 1.0}, {});
  CHECK(fit.converged);
  CHECK(std::abs(fit.values[0] - 1.0) < 1e-6);
  CHECK(std::abs(fit.values[1] - 1.0) < 1e-6);
}

TEST_CASE("exponential decay with noise: covariance matches the linearized formula") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z(0.0, 0.01);
  std::vector<double> t, y;
  for (int i = 0; i < 50; ++i) {
    t.push_back(0.1 * i);
    y.push_back(2.0 * std::exp(-0.7 * t.back()) + z(rng));
  }
  auto fn = [&](std::span<const double> p, std::vector<double>& r) {
    r.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) r[i] = p[0] * std::exp(-p[1] * t[i]) - y[i];
  };
  const auto fit = least_squares(fn, {1.0, 1.0}, {}, {"amplitude", "rate"});
  CHECK(fit.converged);
  CHECK(fit.degrees_of_freedom == 48);
  CHECK(fit.value("amplitude") == doctest::Approx(2.0).epsilon(0.02));
  CHECK(fit.value("rate") == doctest::Approx(0.7).epsilon(0.03));
  CHECK(fit.cov(0, 1) == fit.cov(1, 0));
  CHECK(fit.standard_errors[0] == doctest::Approx(std::sqrt(fit.cov(0, 0))));
  CHECK(fit.cov(0, 0) * fit.cov(1, 1) - fit.cov(0, 1) * fit.cov(1, 0) > 0.0);
  CHECK(fit.gradient_norm < 1e-6);
  CHECK_THROWS_AS(fit.index_of("offset"), InvalidArgument);
}

TEST_CASE("bounds are enforced by projection") {
  auto fn = [](std::span<const double> t, std::vector<double>& r) { r = {t[0] - 3.0, 0.5 * (t[0] - 3.0)}; };
  const std::vector<Bounds> b{{0.0, 2.0}};
  const auto fit = least_squares(fn, {1.0}, b);
  CHECK(fit.values[0] == 2.0);
  CHECK(fit.standard_errors[0] == 0.0);
  REQUIRE_FALSE(fit.warnings.empty());
  CHECK(fit.warnings[0].find("upper bound") != std::string::npos);
  CHECK_THROWS_AS(least_squares(fn, {5.0}, b), InvalidArgument);
}

TEST_CASE("singular normal matrix is reported as not converged") {
  // Only the sum of the two parameters is identifiable.
  auto fn = [](std::span<const double> t, std::vector<double>& r) { r = {t[0] + t[1] - 1.0, 2.0 * (t[0] + t[1]) - 2.5}; };
  const auto fit = least_squares(fn, {0.0, 0.0}, {});
  CHECK_FALSE(fit.converged);
  CHECK(fit.message.find("singular") != std::string::npos);
}

TEST_CASE("insensitive parameter is named in the diagnostic") {
  auto fn = [](std::span<const double> t, std::vector<double>& r) { r = {t[0] - 1.0, t[0] - 1.2}; };
  const auto fit = least_squares(fn, {0.0, 4.0}, {}, {"a", "unused"});
  CHECK_FALSE(fit.converged);
  CHECK(fit.message.find("unused") != std::string::npos);
}

TEST_CASE("non-finite residuals abort with a diagnostic") {
  auto fn = [](std::span<const double> t, std::vector<double>& r) { r = {std::log(t[0])}; };
  CHECK_THROWS_AS(least_squares(fn, {-1.0}, {}), NumericalError);
  auto nan_fn = [](std::span<const double>, std::vector<double>& r) {
    r = {std::numeric_limits<double>::quiet_NaN()};
  };
  CHECK_THROWS_WITH_AS(least_squares(nan_fn, {1.0}, {}), doctest::Contains("not finite"), NumericalError);
}

TEST_CASE("property: central Jacobian agrees with an independent forward stencil") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> freqs;
  for (int i = 1; i <= 40; ++i) freqs.push_back(i * 3e6);
  for (int trial = 0; trial < 100; ++trial) {
    const double power = 1e-3 + 3e-3 * u(rng);
    auto fn = [&](std::span<const double> p, std::vector<double>& r) {
      r.resize(freqs.size());
      const double x = std::sqrt(power / p[2]);
      for (std::size_t i = 0; i < freqs.size(); ++i)
        r[i] = 10.0 * std::log10(quadrature_variance_normalized(p[0], p[1], x, freqs[i] / p[3], Quadrature::Squeezed));
    };
    const std::vector<double> p{0.5 + 0.45 * u(rng), 0.005 + 0.05 * u(rng), 5e-3 + 2e-3 * u(rng),
                                40e6 + 40e6 * u(rng)};
    const auto central = numeric_jacobian(fn, p, {}, freqs.size());
    const auto forward = forward_jacobian(fn, p, freqs.size());
    // Relative to each column's largest entry: with a 1e-8 relative step the
    // rounding error of an entry is set by |r|, not by the entry itself.
    for (std::size_t j = 0; j < p.size(); ++j) {
      double scale = 0.0;
      for (std::size_t i = 0; i < freqs.size(); ++i) scale = std::max(scale, std::abs(forward[i * p.size() + j]));
      REQUIRE(scale > 0.0);
      for (std::size_t i = 0; i < freqs.size(); ++i) {
        const std::size_t k = i * p.size() + j;
        CHECK(std::abs(central[k] - forward[k]) <= 1e-5 * scale);
      }
    }
  }
}

TEST_CASE("Jacobian falls back to one-sided stencils at bounds") {
  auto fn = [](std::span<const double> t, std::vector<double>& r) { r = {std::sqrt(t[0])}; };
  const std::vector<Bounds> b{{0.0, 1.0}};
  const std::vector<double> at_lower{0.0};
  const auto jac = numeric_jacobian(fn, at_lower, b, 1);
  CHECK(std::isfinite(jac[0]));
  CHECK(jac[0] > 0.0);
}
