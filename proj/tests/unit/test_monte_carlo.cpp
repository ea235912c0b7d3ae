#include <cmath>
#include <limits>

#include "doctest.h"
#include "guardrail/core/errors.hpp"
#include "guardrail/mc/monte_carlo.hpp"

using namespace guardrail;
using namespace guardrail::mc;

TEST_SUITE("mc") {
  TEST_CASE("constant sampler has zero width") {
    const auto e = estimate_mean([](RngStream&) { return 3.0; }, 100, RngStream(1));
    CHECK(e.mean == 3.0);
    CHECK(e.half_width == 0.0);
    CHECK(e.n_samples == 100);
    CHECK(e.method == Method::kMonteCarlo);
  }

  TEST_CASE("standard normal mean at one million draws") {
    const auto e = estimate_mean([](RngStream& r) { return r.normal(); }, 1000000, RngStream(2));
    CHECK(std::abs(e.mean) <= 4e-3);
    CHECK(e.contains(0.0));
    // z_{0.995} * 1/sqrt(n)
    CHECK(e.half_width == doctest::Approx(2.5758293035489 / 1000.0).epsilon(5e-3));
  }

  TEST_CASE("uniform mean at one million draws") {
    const auto e = estimate_mean([](RngStream& r) { return r.uniform(); }, 1000000, RngStream(3));
    CHECK(e.contains(0.5));
  }

  TEST_CASE("results do not depend on the thread count") {
    auto sampler = [](RngStream& r) { return r.normal() * r.uniform(); };
    McOptions one;
    one.threads = 1;
    McOptions four = one;
    four.threads = 4;
    const auto a = estimate_mean(sampler, 123457, RngStream(4, {1}), one);
    const auto b = estimate_mean(sampler, 123457, RngStream(4, {1}), four);
    CHECK(a.mean == b.mean);
    CHECK(a.half_width == b.half_width);
  }

  TEST_CASE("block merge matches a direct two-pass computation") {
    McOptions opts;
    opts.block_size = 1000;
    const std::size_t n = 10007;
    const auto m = estimate_moments(
        2,
        [](RngStream& r, std::span<double> out) {
          const double z = r.normal();
          out[0] = z;
          out[1] = 2.0 * z + r.uniform();
        },
        n, RngStream(5), opts);
    // Replay the same draws block by block.
    std::vector<double> a, b;
    for (std::size_t blk = 0; blk * 1000 < n; ++blk) {
      RngStream r = RngStream(5).derive(blk);
      for (std::size_t i = blk * 1000; i < std::min(n, (blk + 1) * 1000); ++i) {
        const double z = r.normal();
        a.push_back(z);
        b.push_back(2.0 * z + r.uniform());
      }
    }
    long double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ma += a[i];
      mb += b[i];
    }
    ma /= n;
    mb /= n;
    long double cab = 0, caa = 0;
    for (std::size_t i = 0; i < n; ++i) {
      cab += (a[i] - ma) * (b[i] - mb);
      caa += (a[i] - ma) * (a[i] - ma);
    }
    CHECK(m.mean[0] == doctest::Approx(static_cast<double>(ma)).epsilon(1e-12));
    CHECK(m.mean[1] == doctest::Approx(static_cast<double>(mb)).epsilon(1e-12));
    CHECK(m.covariance(0, 1) == doctest::Approx(static_cast<double>(cab / (n - 1))).epsilon(1e-10));
    CHECK(m.covariance(0, 0) == doctest::Approx(static_cast<double>(caa / (n - 1))).epsilon(1e-10));
  }

  TEST_CASE("linear combination of outputs") {
    const auto m = estimate_moments(
        2,
        [](RngStream& r, std::span<double> out) {
          out[0] = r.uniform();
          out[1] = out[0];
        },
        50000, RngStream(6));
    const double c[] = {1.0, -1.0};
    const auto d = m.linear(c, 0.99);
    CHECK(d.mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(d.half_width == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  }

  TEST_CASE("ratio and product via the delta method") {
    // X ~ U(0,1), Y = 1(X < 0.25): E[X Y] / E[Y] = 0.125, E[X] E[Y] = 0.125.
    const auto m = estimate_moments(
        3,
        [](RngStream& r, std::span<double> out) {
          const double u = r.uniform();
          out[0] = u < 0.25 ? u : 0.0;
          out[1] = u < 0.25 ? 1.0 : 0.0;
          out[2] = u;
        },
        400000, RngStream(7));
    const auto ratio = ratio_estimate(m, 0, 1, 0.99);
    CHECK(ratio.contains(0.125));
    CHECK(ratio.half_width > 0.0);
    const auto prod = product_estimate(m, 2, 1, 0.99);
    CHECK(prod.contains(0.125));
  }

  TEST_CASE("ratio with an indicator that never fires is zero") {
    const auto m = estimate_moments(
        2, [](RngStream&, std::span<double> out) { out[0] = out[1] = 0.0; }, 10, RngStream(8));
    const auto r = ratio_estimate(m, 0, 1, 0.99);
    CHECK(r.mean == 0.0);
    CHECK(r.half_width == 0.0);
  }

  TEST_CASE("argument and domain errors") {
    auto finite = [](RngStream& r) { return r.uniform(); };
    CHECK_THROWS_AS(estimate_mean(finite, 1, RngStream(0)), Error);
    try {
      estimate_mean(
          [](RngStream& r) {
            const double u = r.uniform();
            return u < 0.001 ? std::numeric_limits<double>::infinity() : u;
          },
          100000, RngStream(0));
      FAIL("expected a domain error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDomain);
      CHECK(std::string(e.what()).find("draw") != std::string::npos);
    }
  }

  TEST_CASE("critical values") {
    CHECK(normal_critical_value(0.95) == doctest::Approx(1.959963984540054));
    CHECK(normal_critical_value(0.99) == doctest::Approx(2.575829303548901));
    CHECK(chi_critical_value(0.95, 1) == doctest::Approx(1.959963984540054));
    CHECK_THROWS(normal_critical_value(1.0));
  }
}
