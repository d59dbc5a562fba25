#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fungi/loss.hpp"
#include "fungi/rng.hpp"

using namespace fungi;

namespace {

// Literal double-sum of the image/text terms, no stabilization. Test-only
// oracle, independent of the stabilized implementation.
LossBreakdown loss_oracle(const Mat& s, const PositiveSets& pos, double tau) {
  const Index n = s.rows();
  LossBreakdown out;
  for (Index q = 0; q < n; ++q) {
    double denom = 0.0;
    for (Index r = 0; r < n; ++r) denom += std::exp(s(q, r) / tau);
    double acc = 0.0;
    for (int r : pos.images_to_texts[static_cast<std::size_t>(q)]) {
      acc += std::log(std::exp(s(q, r) / tau) / denom);
    }
    out.image -= acc / static_cast<double>(pos.images_to_texts[static_cast<std::size_t>(q)].size());
  }
  out.image /= static_cast<double>(n);
  for (Index r = 0; r < n; ++r) {
    double denom = 0.0;
    for (Index q = 0; q < n; ++q) denom += std::exp(s(q, r) / tau);
    double acc = 0.0;
    for (int q : pos.texts_to_images[static_cast<std::size_t>(r)]) {
      acc += std::log(std::exp(s(q, r) / tau) / denom);
    }
    out.text -= acc / static_cast<double>(pos.texts_to_images[static_cast<std::size_t>(r)].size());
  }
  out.text /= static_cast<double>(n);
  out.total = out.image + out.text;
  return out;
}

std::vector<int> random_labels(Index n, Rng& rng) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& l : labels) l = static_cast<int>(rng.uniform_int(3));
  return labels;
}

Mat random_similarities(Index n, Rng& rng) {
  Mat s(n, n);
  for (Index q = 0; q < n; ++q)
    for (Index r = 0; r < n; ++r) s(q, r) = rng.uniform(-1.0, 1.0);
  return s;
}

}  // namespace

TEST_CASE("uniform similarities with two singleton pairs give ln 2 per side") {
  Mat s = Mat::Constant(2, 2, 0.3);
  const auto pos = PositiveSets::from_labels({0, 1});
  const auto loss = contrastive_loss(s, pos, 0.1);
  CHECK(loss.image == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss.text == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss.total == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("a saturated diagonal drives the loss to zero") {
  Mat s = Mat::Identity(3, 3);  // cosine-bounded; small tau saturates the softmax
  const auto pos = PositiveSets::from_labels({0, 1, 2});
  const auto loss = contrastive_loss(s, pos, 0.01);
  CHECK(loss.total >= 0.0);
  CHECK(loss.total < 1e-3);
}

TEST_CASE("stabilized loss matches the literal oracle on random mixed batches") {
  Rng rng(314);
  double max_gap = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.uniform_int(5));  // 2..6
    const Mat s = random_similarities(n, rng);
    const auto pos = PositiveSets::from_labels(random_labels(n, rng));
    const double tau = std::vector<double>{0.05, 0.1, 0.5}[rng.uniform_int(3)];
    const auto fast = contrastive_loss(s, pos, tau);
    const auto slow = loss_oracle(s, pos, tau);
    max_gap = std::max(max_gap, std::abs(fast.image - slow.image));
    max_gap = std::max(max_gap, std::abs(fast.text - slow.text));
    CHECK(fast.total == fast.image + fast.text);  // additivity is exact
    CHECK(fast.total >= 0.0);
  }
  CHECK(max_gap < 1e-10);
}

TEST_CASE("the loss is invariant under a shared permutation of rows and columns") {
  Rng rng(7);
  const Index n = 5;
  const Mat s = random_similarities(n, rng);
  const auto labels = random_labels(n, rng);
  const auto base = contrastive_loss(s, PositiveSets::from_labels(labels), 0.1);

  std::vector<int> perm{3, 0, 4, 1, 2};
  Mat sp(n, n);
  std::vector<int> lp(static_cast<std::size_t>(n));
  for (Index q = 0; q < n; ++q) {
    lp[static_cast<std::size_t>(q)] = labels[static_cast<std::size_t>(perm[q])];
    for (Index r = 0; r < n; ++r) sp(q, r) = s(perm[q], perm[r]);
  }
  const auto permuted = contrastive_loss(sp, PositiveSets::from_labels(lp), 0.1);
  CHECK(permuted.total == doctest::Approx(base.total).epsilon(1e-12));
}

TEST_CASE("degenerate inputs are rejected with typed errors") {
  Mat s = Mat::Constant(2, 2, 0.1);
  PositiveSets empty;
  empty.images_to_texts = {{0}, {}};
  empty.texts_to_images = {{0}, {1}};
  CHECK_THROWS_AS(contrastive_loss(s, empty, 0.1), DataError);

  Mat bad = s;
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(contrastive_loss(bad, PositiveSets::from_labels({0, 1}), 0.1), NumericError);
}

TEST_CASE("loss gradient in the similarity matrix matches finite differences") {
  Rng rng(77);
  const Index n = 4;
  const Mat s = random_similarities(n, rng);
  const auto pos = PositiveSets::from_labels(random_labels(n, rng));
  const double tau = 0.2;

  double d_log_tau = 0.0;
  const Mat analytic = contrastive_loss_grad(s, pos, tau, &d_log_tau);
  const double h = 1e-6;
  for (Index q = 0; q < n; ++q) {
    for (Index r = 0; r < n; ++r) {
      Mat plus = s, minus = s;
      plus(q, r) += h;
      minus(q, r) -= h;
      const double fd =
          (contrastive_loss(plus, pos, tau).total - contrastive_loss(minus, pos, tau).total) /
          (2.0 * h);
      CHECK(analytic(q, r) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
  const double log_tau = std::log(tau);
  const double fd_tau = (contrastive_loss(s, pos, std::exp(log_tau + h)).total -
                         contrastive_loss(s, pos, std::exp(log_tau - h)).total) /
                        (2.0 * h);
  CHECK(d_log_tau == doctest::Approx(fd_tau).epsilon(1e-5));
}
