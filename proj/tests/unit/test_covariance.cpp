#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cstring>

#include "umm/covariance.hpp"
#include "umm/rng.hpp"
#include "umm/synth.hpp"

using namespace umm;

namespace {

EpochFeatures epoch_from(const Vector& v, int channels, int samples) {
  Matrix m(channels, samples);
  for (int t = 0; t < samples; ++t)
    for (int c = 0; c < channels; ++c) m(c, t) = v(t * channels + c);
  return EpochFeatures(m);
}

EpochPool pool_from_vectors(const std::vector<Vector>& vs, int channels, int samples) {
  EpochPool pool(channels, samples);
  std::vector<EpochFeatures> epochs;
  for (const auto& v : vs) epochs.push_back(epoch_from(v, channels, samples));
  pool.add_trial(epochs);
  return pool;
}

std::vector<EpochFeatures> random_epochs(int n, int channels, int samples, Rng& rng) {
  std::vector<EpochFeatures> out;
  for (int k = 0; k < n; ++k) {
    Matrix m(channels, samples);
    for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    out.emplace_back(std::move(m));
  }
  return out;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST_CASE("sample covariance hand examples") {
  SUBCASE("two epochs, divisor n") {
    auto pool = pool_from_vectors({Vector::Zero(2), (Vector(2) << 2, 0).finished()}, 2, 1);
    const Matrix s = sample_covariance(pool);
    CHECK(s(0, 0) == 1.0);
    CHECK(s(0, 1) == 0.0);
    CHECK(s(1, 0) == 0.0);
    CHECK(s(1, 1) == 0.0);
  }
  SUBCASE("identical epochs give the zero matrix") {
    auto pool = pool_from_vectors({(Vector(2) << 3, -1).finished(),
                                   (Vector(2) << 3, -1).finished(),
                                   (Vector(2) << 3, -1).finished()},
                                  2, 1);
    CHECK(sample_covariance(pool).isZero(0.0));
  }
  SUBCASE("empty pool") {
    EpochPool pool(2, 1);
    CHECK_THROWS_AS(sample_covariance(pool), EmptyPool);
  }
}

TEST_CASE("sample covariance Monte-Carlo against a known Gaussian") {
  // 4-D Gaussian with covariance K = L L'
  Matrix l(4, 4);
  l << 1.0, 0, 0, 0,
       0.4, 0.8, 0, 0,
       -0.2, 0.3, 0.9, 0,
       0.1, -0.1, 0.2, 0.7;
  const Matrix k = l * l.transpose();
  Rng rng(123);
  std::vector<Vector> draws;
  for (int i = 0; i < 500; ++i) {
    Vector z(4);
    for (int j = 0; j < 4; ++j) z(j) = rng.normal();
    draws.push_back(l * z);
  }
  auto pool = pool_from_vectors(draws, 4, 1);
  const Matrix s = sample_covariance(pool);
  CHECK((s - k).norm() <= 0.3 * k.norm());
}

TEST_CASE("shrinkage fixed point when S is already nu*I") {
  // mean zero, sample covariance exactly 0.5 I
  auto pool = pool_from_vectors({(Vector(2) << 1, 0).finished(),
                                 (Vector(2) << -1, 0).finished(),
                                 (Vector(2) << 0, 1).finished(),
                                 (Vector(2) << 0, -1).finished()},
                                2, 1);
  for (double g : {0.0, 0.3, 1.0}) {
    EstimatorOptions opts;
    opts.gamma_override = g;
    const auto model = shrinkage_covariance(pool, CovScope::pooled_all, opts);
    CHECK(model.sigma()(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(model.sigma()(1, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(model.sigma()(0, 1) == 0.0);
  }
}

TEST_CASE("shrinkage keeps n << D pools positive definite") {
  Rng rng(42);
  EpochPool pool(5, 10);  // D = 50
  pool.add_trial(random_epochs(5, 5, 10, rng));
  const auto model = shrinkage_covariance(pool, CovScope::pooled_all);
  Eigen::SelfAdjointEigenSolver<Matrix> es(model.sigma(), Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > 1e-10);
  CHECK(model.shrinkage_intensity() > 0.0);
  CHECK(model.shrinkage_intensity() <= 1.0);
}

TEST_CASE("gamma forced to one gives exactly the scaled identity") {
  Rng rng(5);
  EpochPool pool(3, 2);
  pool.add_trial(random_epochs(20, 3, 2, rng));
  EstimatorOptions opts;
  opts.gamma_override = 1.0;
  const auto model = shrinkage_covariance(pool, CovScope::pooled_all, opts);
  const double nu = sample_covariance(pool).trace() / 6.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(model.sigma()(i, j) == (i == j ? nu : 0.0));
}

TEST_CASE("shrinkage needs two epochs") {
  EpochPool pool(2, 1);
  pool.add_trial({epoch_from((Vector(2) << 1, 2).finished(), 2, 1)});
  CHECK_THROWS_AS(shrinkage_covariance(pool, CovScope::pooled_all), InsufficientData);
  EpochPool empty(2, 1);
  CHECK_THROWS_AS(shrinkage_covariance(empty, CovScope::pooled_all), EmptyPool);
}

TEST_CASE("block-Toeplitz with T=1 equals shrinkage exactly") {
  Rng rng(8);
  EpochPool pool(4, 1);
  pool.add_trial(random_epochs(30, 4, 1, rng));
  const auto s = shrinkage_covariance(pool, CovScope::pooled_all);
  const auto t = block_toeplitz_covariance(pool, CovScope::pooled_all);
  CHECK(bitwise_equal(s.sigma(), t.sigma()));
}

TEST_CASE("block-Toeplitz structural invariant is exact") {
  Rng rng(9);
  const int c = 3, t = 5;
  EpochPool pool(c, t);
  pool.add_trial(random_epochs(40, c, t, rng));
  const auto model = block_toeplitz_covariance(pool, CovScope::pooled_all);
  const Matrix& sigma = model.sigma();

  for (int i = 0; i + 1 < t; ++i) {
    for (int j = 0; j + 1 < t; ++j) {
      CHECK(bitwise_equal(sigma.block(i * c, j * c, c, c),
                          sigma.block((i + 1) * c, (j + 1) * c, c, c)));
    }
  }
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < t; ++j)
      CHECK(bitwise_equal(sigma.block(i * c, j * c, c, c),
                          sigma.block(j * c, i * c, c, c).transpose().eval()));
}

TEST_CASE("block-Toeplitz estimator beats shrinkage on stationary noise") {
  // exactly stationary generator: AR(1) in time, static spatial mixing
  SynthConfig cfg;
  cfg.n_symbols = 4;
  cfg.code = CodeKind::sequential;
  cfg.repetitions = 25;  // 100 epochs per trial
  cfg.channels = 4;
  cfg.samples = 6;
  cfg.snr = 0.0;  // pure noise
  cfg.ar_coeff = 0.5;
  cfg.n_trials = 1;

  double dist_t = 0.0, dist_s = 0.0;
  double gap_small = 0.0, gap_large = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    const Matrix truth = generator_noise_covariance(cfg);
    const auto trials = generate_session(cfg);
    EpochPool pool(cfg.channels, cfg.samples);
    pool.add_trial(trials.front().epochs);
    const auto st = block_toeplitz_covariance(pool, CovScope::pooled_all);
    const auto ss = shrinkage_covariance(pool, CovScope::pooled_all);
    dist_t += (st.sigma() - truth).norm();
    dist_s += (ss.sigma() - truth).norm();
    gap_small += (st.sigma() - ss.sigma()).norm();

    // grow the pool to 400 epochs: the two estimators should agree better
    SynthConfig big = cfg;
    big.n_trials = 4;
    const auto more = generate_session(big);
    EpochPool big_pool(cfg.channels, cfg.samples);
    for (const auto& tr : more) big_pool.add_trial(tr.epochs);
    const auto bt = block_toeplitz_covariance(big_pool, CovScope::pooled_all);
    const auto bs = shrinkage_covariance(big_pool, CovScope::pooled_all);
    gap_large += (bt.sigma() - bs.sigma()).norm();
  }
  CHECK(dist_t < dist_s);
  CHECK(gap_large < gap_small);
}

TEST_CASE("taper bandwidth one zeroes all off-lag blocks") {
  Rng rng(10);
  const int c = 2, t = 4;
  EpochPool pool(c, t);
  pool.add_trial(random_epochs(30, c, t, rng));
  EstimatorOptions opts;
  opts.taper_bandwidth = 1;
  const auto model = block_toeplitz_covariance(pool, CovScope::pooled_all, opts);
  const Matrix& sigma = model.sigma();
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < t; ++j) {
      if (i == j) continue;
      CHECK(sigma.block(i * c, j * c, c, c).isZero(0.0));
    }
  CHECK(bitwise_equal(sigma.block(0, 0, c, c), sigma.block(c, c, c, c)));
}

TEST_CASE("spd_solve examples and round trip") {
  SUBCASE("identity") {
    auto model = CovarianceModel::from_matrix(Matrix::Identity(3, 3), CovKind::shrinkage,
                                              CovScope::current_trial);
    Vector v(3);
    v << 1, -2, 3;
    CHECK((model.solve(v) - v).norm() == 0.0);
  }
  SUBCASE("diagonal") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 1;
    d(1, 1) = 4;
    auto model = CovarianceModel::from_matrix(d, CovKind::shrinkage, CovScope::current_trial);
    Vector v(2);
    v << 2, 2;
    const Vector x = model.solve(v);
    CHECK(x(0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(x(1) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("random SPD round trip at D=300") {
    Rng rng(77);
    const int d = 300;
    Matrix g(d, d);
    for (int i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    Matrix spd = g * g.transpose() / d;
    spd.diagonal().array() += 0.1;
    spd = ((spd + spd.transpose()) / 2.0).eval();
    auto model = CovarianceModel::from_matrix(spd, CovKind::shrinkage, CovScope::pooled_all);
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.normal();
    const Vector x = model.solve(v);
    CHECK((spd * x - v).norm() <= 1e-8 * v.norm());
  }
  SUBCASE("solve_rows works rowwise") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2;
    d(1, 1) = 8;
    auto model = CovarianceModel::from_matrix(d, CovKind::shrinkage, CovScope::current_trial);
    Matrix rows(2, 2);
    rows << 2, 8,
            4, 16;
    const Matrix x = model.solve_rows(rows);
    CHECK(x(0, 0) == doctest::Approx(1.0));
    CHECK(x(0, 1) == doctest::Approx(1.0));
    CHECK(x(1, 0) == doctest::Approx(2.0));
    CHECK(x(1, 1) == doctest::Approx(2.0));
  }
}

TEST_CASE("factorization errors") {
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(CovarianceModel::from_matrix(indefinite, CovKind::shrinkage,
                                               CovScope::current_trial),
                  NotPositiveDefinite);

  Matrix asym(2, 2);
  asym << 1, 0.5, 0.1, 1;
  CHECK_THROWS_AS(
      CovarianceModel::from_matrix(asym, CovKind::shrinkage, CovScope::current_trial),
      ShapeMismatch);

  auto model = CovarianceModel::from_matrix(Matrix::Identity(2, 2), CovKind::shrinkage,
                                            CovScope::current_trial);
  CHECK_THROWS_AS(model.solve(Vector::Zero(3)), ShapeMismatch);
}

TEST_CASE("update_scope semantics") {
  Rng rng(13);
  const auto t1 = random_epochs(68, 2, 3, rng);
  const auto t2 = random_epochs(68, 2, 3, rng);
  const auto t3 = random_epochs(68, 2, 3, rng);

  SUBCASE("current trial replaces") {
    EpochPool pool(2, 3);
    for (const auto* t : {&t1, &t2, &t3}) {
      update_scope(CovScope::current_trial, pool, *t);
      CHECK(pool.size() == 68);
    }
  }
  SUBCASE("pooled appends") {
    EpochPool pool(2, 3);
    update_scope(CovScope::pooled_all, pool, t1);
    update_scope(CovScope::pooled_all, pool, t2);
    update_scope(CovScope::pooled_all, pool, t3);
    CHECK(pool.size() == 204);
    CHECK(pool.trial_count() == 3);
  }
  SUBCASE("pooled re-estimation equals single-shot estimation bit for bit") {
    EpochPool incremental(2, 3);
    update_scope(CovScope::pooled_all, incremental, t1);
    update_scope(CovScope::pooled_all, incremental, t2);
    update_scope(CovScope::pooled_all, incremental, t3);

    std::vector<EpochFeatures> all = t1;
    all.insert(all.end(), t2.begin(), t2.end());
    all.insert(all.end(), t3.begin(), t3.end());
    EpochPool single(2, 3);
    single.add_trial(all);

    const auto a = shrinkage_covariance(incremental, CovScope::pooled_all);
    const auto b = shrinkage_covariance(single, CovScope::pooled_all);
    CHECK(bitwise_equal(a.sigma(), b.sigma()));
  }
}

TEST_CASE("estimation is permutation invariant up to summation order") {
  Rng rng(21);
  auto epochs = random_epochs(50, 3, 4, rng);
  EpochPool pool(3, 4);
  pool.add_trial(epochs);

  std::vector<EpochFeatures> shuffled = epochs;
  std::vector<int> perm(shuffled.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  rng.shuffle(perm);
  std::vector<EpochFeatures> permuted;
  for (int i : perm) permuted.push_back(epochs[static_cast<std::size_t>(i)]);
  EpochPool pool2(3, 4);
  pool2.add_trial(permuted);

  const auto a = shrinkage_covariance(pool, CovScope::pooled_all);
  const auto b = shrinkage_covariance(pool2, CovScope::pooled_all);
  CHECK((a.sigma() - b.sigma()).norm() <= 1e-9 * a.sigma().norm());
}

TEST_CASE("shrinkage contracts the eigenvalue spread") {
  Rng rng(31);
  EpochPool pool(4, 3);
  pool.add_trial(random_epochs(100, 4, 3, rng));
  const Matrix s = sample_covariance(pool);
  EstimatorOptions opts;
  opts.gamma_override = 0.4;
  const auto model = shrinkage_covariance(pool, CovScope::pooled_all, opts);

  Eigen::SelfAdjointEigenSolver<Matrix> es_s(s, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> es_m(model.sigma(), Eigen::EigenvaluesOnly);
  const double spread_s = es_s.eigenvalues().maxCoeff() - es_s.eigenvalues().minCoeff();
  const double spread_m = es_m.eigenvalues().maxCoeff() - es_m.eigenvalues().minCoeff();
  CHECK(spread_m <= spread_s + 1e-12);
}

TEST_CASE("per-trial centering flag changes the estimate when trial means differ") {
  Rng rng(55);
  auto t1 = random_epochs(30, 2, 2, rng);
  auto t2 = random_epochs(30, 2, 2, rng);
  for (auto& e : t2) e.data.array() += 5.0;  // strong trial offset
  EpochPool pool(2, 2);
  pool.add_trial(t1);
  pool.add_trial(t2);

  const Matrix grand = sample_covariance(pool, false);
  const Matrix per_trial = sample_covariance(pool, true);
  // grand-mean centering sees the offset as variance, per-trial does not
  CHECK(per_trial.trace() < grand.trace());
}
