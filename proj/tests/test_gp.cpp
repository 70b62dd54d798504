#include "mhe/gp.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using mhe::DenseGp;
using mhe::GpTriplet;
using mhe::RbfHyperparams;
using mhe::SparseGp;
using mhe::TrainingSet;
using mhe::Vec3;

// Direct-formula oracle, independent of the library path: builds the Gram
// matrix with plain loops and inverts it with a pivoted LU.
struct OracleResult {
  double mean;
  double var;
};

OracleResult dense_oracle(const TrainingSet& ts, const RbfHyperparams& hp, double z_star) {
  const int n = ts.size();
  Eigen::MatrixXd gram(n, n);
  Eigen::VectorXd k_star(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = ts.inputs[i] - ts.inputs[j];
      gram(i, j) = hp.signal_var *
                   std::exp(-d * d / (2.0 * hp.length_scale * hp.length_scale));
    }
    gram(i, i) += hp.noise_var;
    const double d = ts.inputs[i] - z_star;
    k_star[i] = hp.signal_var *
                std::exp(-d * d / (2.0 * hp.length_scale * hp.length_scale));
  }
  const Eigen::MatrixXd inv = gram.fullPivLu().inverse();
  OracleResult out;
  out.mean = k_star.dot(inv * ts.targets);
  out.var = hp.signal_var - k_star.dot(inv * k_star);
  return out;
}

TrainingSet random_set(int n, std::mt19937& gen, double noise = 0.05) {
  std::uniform_real_distribution<double> ux(-3.0, 3.0);
  std::normal_distribution<double> nn(0.0, noise);
  TrainingSet ts;
  ts.inputs.resize(n);
  ts.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    ts.inputs[i] = ux(gen);
    ts.targets[i] = std::sin(1.3 * ts.inputs[i]) + nn(gen);
  }
  return ts;
}

TEST(Kernel, ZeroDistanceGivesSignalVariance) {
  const RbfHyperparams hp{2.0, 1.7, 0.1};
  EXPECT_DOUBLE_EQ(mhe::kernel(0.4, 0.4, hp), 1.7);
}

TEST(Kernel, VanishesAtLargeDistance) {
  const RbfHyperparams hp{1.0, 1.0, 0.1};
  EXPECT_LT(mhe::kernel(0.0, 40.0, hp), 1e-300);
}

TEST(Kernel, UnitDistanceValue) {
  const RbfHyperparams hp{1.0, 1.0, 0.1};
  EXPECT_NEAR(mhe::kernel(0.0, 1.0, hp), std::exp(-0.5), 1e-12);
}

TEST(DenseGpTest, MatchesDirectFormulaOracle) {
  std::mt19937 gen(21);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + static_cast<int>(gen() % 8);  // 3..10 points
    const TrainingSet ts = random_set(n, gen);
    const RbfHyperparams hp{0.8, 1.3, 0.05};
    const DenseGp gp(ts, hp);
    std::uniform_real_distribution<double> ux(-4.0, 4.0);
    for (int k = 0; k < 20; ++k) {
      const double z = ux(gen);
      const OracleResult expect = dense_oracle(ts, hp, z);
      const mhe::Prediction got = gp.predict(z);
      EXPECT_NEAR(got.mean, expect.mean, 1e-10);
      EXPECT_NEAR(got.var, std::max(0.0, expect.var), 1e-10);
    }
  }
}

TEST(DenseGpTest, SinglePointInterpolation) {
  TrainingSet ts;
  ts.inputs.resize(1);
  ts.targets.resize(1);
  ts.inputs[0] = 0.7;
  ts.targets[0] = -1.4;
  const DenseGp gp(ts, {1.0, 1.0, 1e-10});
  const mhe::Prediction p = gp.predict(0.7);
  EXPECT_NEAR(p.mean, -1.4, 1e-8);
  EXPECT_NEAR(p.var, 0.0, 1e-8);
}

TEST(DenseGpTest, PriorReversionFarFromData) {
  std::mt19937 gen(33);
  const TrainingSet ts = random_set(8, gen);
  const RbfHyperparams hp{0.5, 2.0, 0.01};
  const DenseGp gp(ts, hp);
  const mhe::Prediction p = gp.predict(300.0);
  EXPECT_NEAR(p.mean, 0.0, 1e-12);
  EXPECT_NEAR(p.var, hp.signal_var, 1e-12);
}

TEST(DenseGpTest, VarianceNonNegativeEverywhere) {
  std::mt19937 gen(55);
  const TrainingSet ts = random_set(40, gen);
  const DenseGp gp(ts, {0.3, 1.0, 1e-6});
  for (double z = -5.0; z <= 5.0; z += 0.05) {
    EXPECT_GE(gp.predict(z).var, 0.0);
  }
}

TEST(LogMarginal, GradientMatchesCentralDifferences) {
  std::mt19937 gen(77);
  for (int trial = 0; trial < 5; ++trial) {
    const TrainingSet ts = random_set(10, gen);
    const RbfHyperparams hp{0.9, 1.1, 0.05};
    const mhe::LogMarginal lm = mhe::log_marginal_likelihood(ts, hp);

    const double h = 1e-5;
    Eigen::Vector3d logs{std::log(hp.length_scale), 0.5 * std::log(hp.signal_var),
                         0.5 * std::log(hp.noise_var)};
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d up = logs, dn = logs;
      up[k] += h;
      dn[k] -= h;
      auto make = [](const Eigen::Vector3d& t) {
        return RbfHyperparams{std::exp(t[0]), std::exp(2.0 * t[1]), std::exp(2.0 * t[2])};
      };
      const double fd = (mhe::log_marginal_likelihood(ts, make(up)).value -
                         mhe::log_marginal_likelihood(ts, make(dn)).value) /
                        (2.0 * h);
      EXPECT_NEAR(lm.grad[k], fd, 1e-5 * std::max(1.0, std::abs(fd)))
          << "component " << k;
    }
  }
}

TEST(FitDense, ZeroTargetsGiveZeroMean) {
  TrainingSet ts;
  ts.inputs = Eigen::VectorXd::LinSpaced(12, -2.0, 2.0);
  ts.targets = Eigen::VectorXd::Zero(12);
  const DenseGp gp = mhe::fit_dense(ts, {1.0, 1.0, 0.01});
  for (double z = -3.0; z <= 3.0; z += 0.25) {
    EXPECT_EQ(gp.predict(z).mean, 0.0);
  }
}

TEST(FitDense, RecoversGenerativeHyperparameters) {
  // draw a function from a known GP prior, fit, and require the recovered
  // hyperparameters within a factor ~2 in log space
  const RbfHyperparams truth{1.0, 4.0, 0.01};
  const int n = 120;
  std::mt19937 gen(101);
  std::uniform_real_distribution<double> ux(-5.0, 5.0);
  TrainingSet ts;
  ts.inputs.resize(n);
  for (int i = 0; i < n; ++i) ts.inputs[i] = ux(gen);

  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) k(i, j) = mhe::kernel(ts.inputs[i], ts.inputs[j], truth);
    k(i, i) += 1e-10;
  }
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(k).matrixL();
  std::normal_distribution<double> nn(0.0, 1.0);
  Eigen::VectorXd white(n);
  for (int i = 0; i < n; ++i) white[i] = nn(gen);
  ts.targets = l * white;
  for (int i = 0; i < n; ++i) ts.targets[i] += std::sqrt(truth.noise_var) * nn(gen);

  const DenseGp gp = mhe::fit_dense(ts, {0.5, 1.0, 1e-3});
  EXPECT_LE(std::abs(std::log(gp.hyperparams().length_scale / truth.length_scale)),
            std::log(2.0));
  EXPECT_LE(std::abs(std::log(gp.hyperparams().signal_var / truth.signal_var)),
            2.0 * std::log(2.0));
  EXPECT_LE(std::abs(std::log(gp.hyperparams().noise_var / truth.noise_var)),
            2.0 * std::log(3.0));
}

TEST(FitDense, RequiresTwoPoints) {
  TrainingSet ts;
  ts.inputs = Eigen::VectorXd::Zero(1);
  ts.targets = Eigen::VectorXd::Zero(1);
  EXPECT_THROW(mhe::fit_dense(ts, {1.0, 1.0, 0.01}), std::invalid_argument);
}

TEST(Sparsify, ExactAtFullInducingSet) {
  std::mt19937 gen(202);
  const TrainingSet ts = random_set(60, gen);
  const DenseGp dense(ts, {0.7, 1.0, 0.02});
  const SparseGp sparse = mhe::sparsify_at(dense, ts.inputs);
  for (double z = -3.5; z <= 3.5; z += 0.05) {
    EXPECT_NEAR(sparse.predict(z).mean, dense.predict(z).mean, 1e-6);
  }
}

TEST(Sparsify, SingleInducingPointIsSingleBump) {
  std::mt19937 gen(203);
  const TrainingSet ts = random_set(50, gen, 0.01);
  const DenseGp dense(ts, {0.7, 1.0, 0.02});
  const SparseGp sparse = mhe::sparsify(dense, 1);
  const double center = sparse.inducing_inputs()[0];
  // |mean| decays monotonically with distance from the inducing input
  double prev = std::abs(sparse.predict(center).mean);
  for (double d = 0.5; d <= 4.0; d += 0.5) {
    const double cur = std::abs(sparse.predict(center + d).mean);
    EXPECT_LE(cur, prev + 1e-12);
    prev = cur;
  }
}

TEST(Sparsify, FiftyPointsTrackDensePrediction) {
  // near-linear residual data with mild curvature, like the x-axis drag maps
  const int n = 600;
  std::mt19937 gen(404);
  std::uniform_real_distribution<double> ux(-4.0, 4.0);
  std::normal_distribution<double> nn(0.0, 0.1);
  TrainingSet ts;
  ts.inputs.resize(n);
  ts.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    ts.inputs[i] = ux(gen);
    ts.targets[i] = 0.8 * ts.inputs[i] + 0.05 * ts.inputs[i] * ts.inputs[i] + nn(gen);
  }
  const DenseGp dense = mhe::fit_dense(ts, {1.0, 1.0, 0.01});
  const SparseGp sparse = mhe::sparsify(dense, 50);

  const double data_std = std::sqrt(
      (ts.targets.array() - ts.targets.mean()).square().sum() / (n - 1));
  double dev2 = 0.0;
  int count = 0;
  for (double z = -4.0; z <= 4.0; z += 0.02, ++count) {
    const double d = sparse.predict(z).mean - dense.predict(z).mean;
    dev2 += d * d;
  }
  EXPECT_LE(std::sqrt(dev2 / count), 0.05 * data_std);
}

TEST(Sparsify, InvariantUnderTrainingPermutation) {
  std::mt19937 gen(505);
  const TrainingSet ts = random_set(80, gen);
  TrainingSet shuffled = ts;
  std::vector<int> idx(80);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), gen);
  for (int i = 0; i < 80; ++i) {
    shuffled.inputs[i] = ts.inputs[idx[i]];
    shuffled.targets[i] = ts.targets[idx[i]];
  }
  const RbfHyperparams hp{0.6, 1.0, 0.05};
  const SparseGp a = mhe::sparsify(DenseGp(ts, hp), 20);
  const SparseGp b = mhe::sparsify(DenseGp(shuffled, hp), 20);
  for (double z = -3.0; z <= 3.0; z += 0.1) {
    EXPECT_NEAR(a.predict(z).mean, b.predict(z).mean, 1e-9);
    EXPECT_NEAR(a.predict(z).var, b.predict(z).var, 1e-9);
  }
}

TEST(Sparsify, RejectsBadInducingCount) {
  std::mt19937 gen(606);
  const TrainingSet ts = random_set(10, gen);
  const DenseGp dense(ts, {1.0, 1.0, 0.05});
  EXPECT_THROW(mhe::sparsify(dense, 0), std::invalid_argument);
  EXPECT_THROW(mhe::sparsify(dense, 11), std::invalid_argument);
}

TEST(Sparsify, DuplicateInducingInputsAreJittered) {
  std::mt19937 gen(707);
  const TrainingSet ts = random_set(20, gen);
  const DenseGp dense(ts, {1.0, 1.0, 0.05});
  Eigen::VectorXd inducing(4);
  inducing << 0.5, 0.5, 0.5, 1.5;  // duplicates
  const SparseGp sp = mhe::sparsify_at(dense, inducing);
  EXPECT_TRUE(std::isfinite(sp.predict(0.5).mean));
  EXPECT_GE(sp.predict(0.5).var, 0.0);
}

TEST(SparseGpSerialization, RoundTripIsExact) {
  std::mt19937 gen(808);
  const TrainingSet ts = random_set(64, gen);
  const DenseGp dense = mhe::fit_dense(ts, {1.0, 1.0, 0.01});
  const SparseGp sp = mhe::sparsify(dense, 16);
  const SparseGp back = SparseGp::from_json_string(sp.to_json_string());
  for (double z = -3.0; z <= 3.0; z += 0.07) {
    EXPECT_NEAR(back.predict(z).mean, sp.predict(z).mean, 1e-15);
    EXPECT_NEAR(back.predict(z).var, sp.predict(z).var, 1e-15);
  }
  EXPECT_EQ(back.avg_train_var(), sp.avg_train_var());
}

GpTriplet make_triplet(std::mt19937& gen) {
  GpTriplet t;
  for (int axis = 0; axis < 3; ++axis) {
    const TrainingSet ts = random_set(50, gen);
    t.axis[axis] = mhe::sparsify(DenseGp(ts, {0.8, 1.0, 0.05}), 12);
  }
  return t;
}

TEST(Triplet, AxesAreIndependent) {
  std::mt19937 gen(909);
  const GpTriplet t = make_triplet(gen);
  const Vec3 base{0.4, -0.2, 1.0};
  const auto p0 = t.predict(base);
  const auto p1 = t.predict({2.0, -0.2, 1.0});
  EXPECT_EQ(p0.mean[1], p1.mean[1]);
  EXPECT_EQ(p0.mean[2], p1.mean[2]);
  EXPECT_NE(p0.mean[0], p1.mean[0]);
}

TEST(Triplet, MatchesScalarPredictions) {
  std::mt19937 gen(910);
  const GpTriplet t = make_triplet(gen);
  const Vec3 a{0.3, 0.9, -1.2};
  const auto p = t.predict(a);
  for (int axis = 0; axis < 3; ++axis) {
    const mhe::Prediction s = t.axis[axis].predict(a[axis]);
    EXPECT_EQ(p.mean[axis], s.mean);
    EXPECT_EQ(p.var[axis], s.var);
  }
}

TEST(Triplet, ZeroResidualDataPredictsZero) {
  GpTriplet t;
  for (int axis = 0; axis < 3; ++axis) {
    TrainingSet ts;
    ts.inputs = Eigen::VectorXd::LinSpaced(40, -2.0, 9.0);
    ts.targets = Eigen::VectorXd::Zero(40);
    t.axis[axis] = mhe::sparsify(DenseGp(ts, {1.0, 1.0, 0.01}), 10);
  }
  const auto p = t.predict({0.0, 1.0, 8.0});
  EXPECT_NEAR(p.mean.norm(), 0.0, 1e-12);
}

TEST(Triplet, SaveLoadRoundTrip) {
  std::mt19937 gen(911);
  const GpTriplet t = make_triplet(gen);
  const std::string path = ::testing::TempDir() + "/triplet.json";
  t.save(path);
  const GpTriplet back = GpTriplet::load(path);
  const Vec3 a{0.1, 0.2, 0.3};
  EXPECT_EQ((t.predict(a).mean - back.predict(a).mean).norm(), 0.0);
}

}  // namespace
