#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>

#include "stainco/objective.hpp"
#include "stainco/rng.hpp"

using namespace stainco;

namespace {

TensorD random_features(int n, int d, Rng& rng, double scale = 1.0) {
  TensorD t({n, d});
  for (auto& v : t.data) v = rng.normal(0.0, scale);
  return t;
}

std::vector<int> ring_negatives(int n) {
  std::vector<int> neg(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) neg[static_cast<std::size_t>(i)] = (i + 1) % n;
  return neg;
}

}  // namespace

TEST_CASE("lambda follows the 0.2 * p rule") {
  CHECK_THAT(lambda_from_label_fraction(1.0), Catch::Matchers::WithinAbs(0.2, 1e-15));
  CHECK_THAT(lambda_from_label_fraction(0.1), Catch::Matchers::WithinAbs(0.02, 1e-15));
  CHECK_THAT(lambda_from_label_fraction(0.05), Catch::Matchers::WithinAbs(0.01, 1e-15));
  CHECK_THAT(lambda_from_label_fraction(0.5), Catch::Matchers::WithinAbs(0.1, 1e-15));
  CHECK_THROWS_AS(lambda_from_label_fraction(0.0), ConfigError);
  CHECK_THROWS_AS(lambda_from_label_fraction(1.5), ConfigError);
  CHECK_THROWS_AS(lambda_from_label_fraction(-0.1), ConfigError);
}

TEST_CASE("triplet loss closed-form cases") {
  SECTION("positives at distance zero, negatives exactly at the margin") {
    // f_h[i] = f_e[i]; mismatched pairs at distance m -> max(0 - m + m, 0) = 0
    const double m = 40.0;
    TensorD fh({2, 2}), fe({2, 2});
    fh.data = {0.0, 0.0, m, 0.0};
    fe.data = {0.0, 0.0, m, 0.0};
    const auto neg = ring_negatives(2);
    CHECK(triplet_cotrain_loss<double>(fh, fe, neg, m) == 0.0);
  }
  SECTION("all rows identical gives the margin") {
    TensorD fh({4, 3}), fe({4, 3});
    for (auto& v : fh.data) v = 1.25;
    for (auto& v : fe.data) v = 1.25;
    const auto neg = ring_negatives(4);
    CHECK(triplet_cotrain_loss<double>(fh, fe, neg, 40.0) == 40.0);
  }
  SECTION("d_pos=2, d_neg=5, m=40 gives 37") {
    // anchor at origin; positive at distance 2; the negative row sits at
    // distance 5 from every anchor by symmetry of the construction below.
    const int n = 2, d = 2;
    TensorD fh({n, d}), fe({n, d});
    // f_h rows: (0,0), (7,0); f_e rows: (2,0), (5,0)
    fh.data = {0.0, 0.0, 7.0, 0.0};
    fe.data = {2.0, 0.0, 5.0, 0.0};
    const auto neg = ring_negatives(2);
    // row 0: d_pos=2, d_neg=|0-5|=5 ; row 1: d_pos=|7-5|=2, d_neg=|7-2|=5
    CHECK(triplet_cotrain_loss<double>(fh, fe, neg, 40.0) == 37.0);
  }
}

TEST_CASE("triplet loss validates inputs") {
  TensorD fh({1, 4}), fe({1, 4});
  std::vector<int> neg{0};
  CHECK_THROWS_AS(triplet_cotrain_loss<double>(fh, fe, neg, 1.0), ConfigError);

  TensorD fh2({3, 4}), fe2({3, 4});
  std::vector<int> fixed_point{0, 2, 1};
  CHECK_THROWS_AS(triplet_cotrain_loss<double>(fh2, fe2, fixed_point, 1.0), ConfigError);
}

TEST_CASE("triplet loss is non-negative and zero exactly off the hinge") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(6));
    const int d = 1 + static_cast<int>(rng.below(8));
    TensorD fh = random_features(n, d, rng);
    TensorD fe = random_features(n, d, rng);
    Rng neg_rng(trial);
    const auto neg = neg_rng.derangement(n);
    const double margin = rng.uniform(0.0, 3.0);
    const double loss = triplet_cotrain_loss<double>(fh, fe, neg, margin);
    CHECK(loss >= 0.0);

    // per-sample zero condition
    double manual = 0.0;
    for (int i = 0; i < n; ++i) {
      double dp = 0, dn = 0;
      for (int j = 0; j < d; ++j) {
        dp += std::pow(fh.at(i, j) - fe.at(i, j), 2);
        dn += std::pow(fh.at(i, j) - fe.at(neg[static_cast<std::size_t>(i)], j), 2);
      }
      manual += std::max(std::sqrt(dp) - std::sqrt(dn) + margin, 0.0);
    }
    CHECK_THAT(loss, Catch::Matchers::WithinAbs(manual / n, 1e-12));
  }
}

TEST_CASE("triplet gradients match central finite differences") {
  Rng rng(17);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 8, d = 16;
    TensorD fh = random_features(n, d, rng, 2.0);
    TensorD fe = random_features(n, d, rng, 2.0);
    Rng neg_rng(100 + trial);
    const auto neg = neg_rng.derangement(n);
    const double margin = 3.0;

    TensorD gh, ge;
    triplet_cotrain_loss<double>(fh, fe, neg, margin, &gh, &ge);

    const double eps = 1e-6;
    auto fd_check = [&](TensorD& f, const TensorD& g) {
      Rng pick(trial * 977 + (&f == &fh ? 0 : 1));
      for (int probe = 0; probe < 12; ++probe) {
        const std::size_t idx = pick.below(f.numel());
        const double orig = f[idx];
        f[idx] = orig + eps;
        const double lp = triplet_cotrain_loss<double>(fh, fe, neg, margin);
        f[idx] = orig - eps;
        const double lm = triplet_cotrain_loss<double>(fh, fe, neg, margin);
        f[idx] = orig;
        const double fd = (lp - lm) / (2 * eps);
        // skip probes near the hinge kink: any sample whose hinge changed
        // sign between the two evaluations is unreliable
        const double denom = std::max({std::abs(fd), std::abs(g[idx]), 1e-3});
        if (std::abs(fd - g[idx]) / denom > 1e-4) {
          // tolerate only genuine kink crossings; re-verify with smaller step
          const double eps2 = 1e-8;
          f[idx] = orig + eps2;
          const double lp2 = triplet_cotrain_loss<double>(fh, fe, neg, margin);
          f[idx] = orig - eps2;
          const double lm2 = triplet_cotrain_loss<double>(fh, fe, neg, margin);
          f[idx] = orig;
          const double fd2 = (lp2 - lm2) / (2 * eps2);
          CHECK_THAT(fd2, Catch::Matchers::WithinRel(g[idx], 1e-3));
        }
        ++checked;
      }
    };
    fd_check(fh, gh);
    fd_check(fe, ge);
  }
  CHECK(checked >= 400);
}

TEST_CASE("triplet loss is translation and rotation invariant") {
  Rng rng(23);
  const int n = 6, d = 4;
  TensorD fh = random_features(n, d, rng);
  TensorD fe = random_features(n, d, rng);
  Rng neg_rng(999);
  const auto neg = neg_rng.derangement(n);
  const double base = triplet_cotrain_loss<double>(fh, fe, neg, 1.5);

  SECTION("translation") {
    TensorD fh2 = fh, fe2 = fe;
    std::vector<double> c(d);
    for (auto& v : c) v = rng.normal();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) {
        fh2.at(i, j) += c[static_cast<std::size_t>(j)];
        fe2.at(i, j) += c[static_cast<std::size_t>(j)];
      }
    CHECK_THAT(triplet_cotrain_loss<double>(fh2, fe2, neg, 1.5),
               Catch::Matchers::WithinAbs(base, 1e-10));
  }
  SECTION("rotation") {
    // Givens rotation in coordinates (0, 2)
    const double th = 0.83;
    auto rotate = [&](TensorD& f) {
      for (int i = 0; i < n; ++i) {
        const double a = f.at(i, 0), b = f.at(i, 2);
        f.at(i, 0) = std::cos(th) * a - std::sin(th) * b;
        f.at(i, 2) = std::sin(th) * a + std::cos(th) * b;
      }
    };
    TensorD fh2 = fh, fe2 = fe;
    rotate(fh2);
    rotate(fe2);
    CHECK_THAT(triplet_cotrain_loss<double>(fh2, fe2, neg, 1.5),
               Catch::Matchers::WithinAbs(base, 1e-10));
  }
}

TEST_CASE("cross entropy basics") {
  SECTION("uniform logits give log C") {
    TensorD z({2, 2});
    std::vector<int> y{0, 1};
    CHECK_THAT(softmax_cross_entropy<double>(z, y), Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
  }
  SECTION("confident correct predictions give ~0") {
    TensorD z({2, 2});
    z.data = {30.0, -30.0, -30.0, 30.0};
    std::vector<int> y{0, 1};
    CHECK(softmax_cross_entropy<double>(z, y) < 1e-12);
  }
  SECTION("gradient matches finite differences") {
    Rng rng(31);
    TensorD z({5, 3});
    for (auto& v : z.data) v = rng.normal();
    std::vector<int> y{0, 2, 1, 1, 0};
    TensorD g;
    softmax_cross_entropy<double>(z, y, &g);
    const double eps = 1e-7;
    for (std::size_t i = 0; i < z.numel(); ++i) {
      const double orig = z[i];
      z[i] = orig + eps;
      const double lp = softmax_cross_entropy<double>(z, y);
      z[i] = orig - eps;
      const double lm = softmax_cross_entropy<double>(z, y);
      z[i] = orig;
      CHECK_THAT((lp - lm) / (2 * eps), Catch::Matchers::WithinAbs(g[i], 1e-6));
    }
  }
}

TEST_CASE("combined objective composes the two terms") {
  TensorD z({2, 2});
  z.data = {50.0, -50.0, -50.0, 50.0};
  std::vector<int> y{0, 1};
  SECTION("lambda = 0 reduces to the supervised loss") {
    CHECK(combined_loss<double>(z, y, 123.0, 0.0) ==
          softmax_cross_entropy<double>(z, y));
  }
  SECTION("perfect predictions and zero triplet give zero") {
    CHECK(combined_loss<double>(z, y, 0.0, 0.2) < 1e-12);
  }
  SECTION("triplet term scales linearly") {
    const double ce = softmax_cross_entropy<double>(z, y);
    CHECK_THAT(combined_loss<double>(z, y, 10.0, 0.02), Catch::Matchers::WithinAbs(ce + 0.2, 1e-12));
  }
}
