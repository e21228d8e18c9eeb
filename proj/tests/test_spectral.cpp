#include <Eigen/Eigenvalues>
#include <catch_amalgamated.hpp>

#include "geoleak/rng.hpp"
#include "geoleak/spectral.hpp"
#include "oracles/reference.hpp"

using namespace geoleak;

namespace {
SocialGraph random_graph(int n, double edge_prob, rng::Stream& s) {
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (s.uniform01() < edge_prob) edges.emplace_back(a, b);
  return SocialGraph::from_friendships(n, edges);
}
}  // namespace

TEST_CASE("edgeless graph has the identity Laplacian") {
  auto op = normalized_laplacian(SocialGraph::from_friendships(3, {}));
  REQUIRE(op.laplacian_dense().isApprox(Eigen::MatrixXd::Identity(3, 3)));
}

TEST_CASE("single edge gives the 2x2 analytic Laplacian") {
  auto op = normalized_laplacian(SocialGraph::from_friendships(2, {{0, 1}}));
  Eigen::MatrixXd expected(2, 2);
  expected << 1, -1, -1, 1;
  REQUIRE(op.laplacian_dense().isApprox(expected, 1e-12));
}

TEST_CASE("triangle spectrum is {0, 1.5, 1.5}") {
  auto op = normalized_laplacian(
      SocialGraph::from_friendships(3, {{0, 1}, {1, 2}, {0, 2}}));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.laplacian_dense());
  REQUIRE(std::abs(es.eigenvalues()[0] - 0.0) < 1e-10);
  REQUIRE(std::abs(es.eigenvalues()[1] - 1.5) < 1e-10);
  REQUIRE(std::abs(es.eigenvalues()[2] - 1.5) < 1e-10);
}

TEST_CASE("Laplacian is symmetric PSD with spectrum in [0,2] on random graphs") {
  rng::Stream s(303);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(s.uniform_int(19));
    auto op = normalized_laplacian(random_graph(n, 0.3, s));
    const Eigen::MatrixXd l = op.laplacian_dense();
    REQUIRE((l - l.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
    REQUIRE(es.eigenvalues().minCoeff() >= -1e-9);
    REQUIRE(es.eigenvalues().maxCoeff() <= 2.0 + 1e-9);
    // rescaled spectrum sits inside the Chebyshev domain
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ess(op.scaled_laplacian_dense());
    REQUIRE(ess.eigenvalues().minCoeff() >= -1.0 - 1e-6);
    REQUIRE(ess.eigenvalues().maxCoeff() <= 1.0 + 1e-6);
    REQUIRE(op.lambda_max() <= 2.0);
    REQUIRE(op.lambda_max() > 0.0);
  }
}

TEST_CASE("chebyshev_apply with K=1 returns the input") {
  rng::Stream s(304);
  auto op = normalized_laplacian(random_graph(6, 0.4, s));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 3);
  const auto out = chebyshev_apply(op, x, 1);
  REQUIRE(out.size() == 1);
  REQUIRE(out[0] == x);
}

TEST_CASE("chebyshev_apply with K=2 appends the scaled Laplacian product") {
  rng::Stream s(305);
  auto op = normalized_laplacian(random_graph(5, 0.5, s));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 2);
  const auto out = chebyshev_apply(op, x, 2);
  REQUIRE(out.size() == 2);
  REQUIRE(out[1].isApprox(op.scaled_laplacian_dense() * x, 1e-12));
}

TEST_CASE("chebyshev_apply matches the eigendecomposition oracle") {
  rng::Stream s(306);
  auto op = normalized_laplacian(random_graph(5, 0.5, s));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 3);
  const auto got = chebyshev_apply(op, x, 4);
  const auto t_mats =
      oracle::cheb_matrices_by_eigendecomposition(op.scaled_laplacian_dense(), 4);
  for (int k = 0; k < 4; ++k) {
    REQUIRE((got[k] - t_mats[k] * x).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("chebyshev stack satisfies the three-term recurrence exactly") {
  rng::Stream s(307);
  auto op = normalized_laplacian(random_graph(8, 0.35, s));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(8, 4);
  const auto stack = chebyshev_apply(op, x, 5);
  for (int k = 2; k < 5; ++k) {
    const Eigen::MatrixXd expected =
        2.0 * op.apply_scaled(stack[k - 1]) - stack[k - 2];
    REQUIRE((stack[k] - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("chebyshev_apply validates its inputs") {
  rng::Stream s(308);
  auto op = normalized_laplacian(random_graph(4, 0.5, s));
  const Eigen::MatrixXd wrong = Eigen::MatrixXd::Zero(5, 2);
  REQUIRE_THROWS_AS(chebyshev_apply(op, wrong, 2), Error);
  const Eigen::MatrixXd ok = Eigen::MatrixXd::Zero(4, 2);
  REQUIRE_THROWS_AS(chebyshev_apply(op, ok, 0), Error);
}
