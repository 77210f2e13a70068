#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "emobench/butterworth.hpp"
#include "emobench/lds.hpp"
#include "emobench/preprocess.hpp"
#include "test_util.hpp"

using namespace emobench;

// --- remove_baseline -----------------------------------------------------------

TEST_CASE("signal equal to the baseline mean becomes zero") {
  Matrix baseline(2, 50);
  baseline.row(0).setConstant(3.0);
  baseline.row(1).setConstant(-1.5);
  Matrix signal(2, 100);
  signal.row(0).setConstant(3.0);
  signal.row(1).setConstant(-1.5);

  const Matrix out = remove_baseline(signal, baseline);
  CHECK(out.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("baseline removal subtracts exactly the baseline channel means") {
  // Direct recomputation oracle: mean(out) == mean(signal) - mean(baseline).
  const Matrix signal = test_util::random_matrix(3, 200, 11, 2.0);
  Matrix baseline = test_util::random_matrix(3, 60, 12, 1.0);
  baseline.row(1).array() += 4.0;

  const Matrix out = remove_baseline(signal, baseline);
  for (int ch = 0; ch < 3; ++ch) {
    const double expected = signal.row(ch).mean() - baseline.row(ch).mean();
    CHECK(out.row(ch).mean() == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("trial without baseline passes through unchanged") {
  Trial trial;
  trial.signals["eeg"] = test_util::random_matrix(2, 100, 13);
  const Trial out = remove_baseline(trial);
  CHECK((out.signals.at("eeg") - trial.signals.at("eeg")).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("baseline with wrong channel count raises ChannelMismatch") {
  try {
    remove_baseline(Matrix::Zero(3, 10), Matrix::Zero(2, 10));
    FAIL("expected ChannelMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ChannelMismatch);
  }
}

// --- pca_suppress ----------------------------------------------------------------

TEST_CASE("pure Gaussian noise loses no components at threshold 5") {
  const Matrix signal = test_util::random_matrix(6, 4000, 21);
  PcaReport report;
  const Matrix out = pca_suppress(signal, 5.0, &report);
  CHECK(report.removed.empty());
  const double rel = (out - signal).norm() / signal.norm();
  CHECK(rel < 1e-10);
}

TEST_CASE("a shared kurtotic spike train is removed and its energy cut by 90%") {
  const int channels = 6, samples = 4000;
  Matrix noise = test_util::random_matrix(channels, samples, 22, 0.3);

  // Sparse spikes broadcast into every channel through a fixed mixing vector.
  Eigen::VectorXd mix(channels);
  for (int ch = 0; ch < channels; ++ch) mix(ch) = 0.8 + 0.1 * ch;
  Eigen::VectorXd spikes = Eigen::VectorXd::Zero(samples);
  std::mt19937 gen(23);
  std::uniform_int_distribution<int> where(0, samples - 1);
  for (int k = 0; k < 25; ++k) spikes(where(gen)) = (k % 2 == 0) ? 12.0 : -12.0;

  const Matrix contaminated = noise + mix * spikes.transpose();
  PcaReport report;
  const Matrix cleaned = pca_suppress(contaminated, 5.0, &report);

  REQUIRE(report.removed.size() == 1);  // exactly the spike-carrying component

  // Residual spike energy: project the cleaned signal onto the spike series.
  const double before = (contaminated * spikes).squaredNorm();
  const double after = (cleaned * spikes).squaredNorm();
  CHECK(after <= 0.1 * before);
}

TEST_CASE("infinite threshold reconstructs the input") {
  const Matrix signal = test_util::random_matrix(4, 500, 24, 2.0);
  PcaReport report;
  const Matrix out = pca_suppress(signal, std::numeric_limits<double>::infinity(), &report);
  CHECK(report.removed.empty());
  CHECK((out - signal).norm() / signal.norm() < 1e-10);
}

TEST_CASE("pca preserves total variance when nothing is removed") {
  const Matrix signal = test_util::random_matrix(5, 1000, 25);
  const Matrix out = pca_suppress(signal, 1e18);

  auto total_var = [](const Matrix& m) {
    double acc = 0.0;
    for (int ch = 0; ch < m.rows(); ++ch) {
      const double mean = m.row(ch).mean();
      acc += (m.row(ch).array() - mean).square().sum() / static_cast<double>(m.cols());
    }
    return acc;
  };
  CHECK(total_var(out) == doctest::Approx(total_var(signal)).epsilon(1e-10));
}

TEST_CASE("degenerate inputs are rejected") {
  try {
    pca_suppress(Matrix::Zero(4, 100), 5.0);
    FAIL("expected DegenerateCovariance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateCovariance);
  }
  try {
    pca_suppress(Matrix::Random(10, 8), 5.0);  // samples <= channels
    FAIL("expected DegenerateCovariance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateCovariance);
  }
}

// --- de_features -----------------------------------------------------------------

TEST_CASE("unit-variance Gaussian in a near-full band hits the closed form") {
  const double rate = 200.0;
  std::mt19937 gen(31);
  std::normal_distribution<double> dist;
  Matrix signal(1, 10000);
  for (int i = 0; i < 10000; ++i) signal(0, i) = dist(gen);

  const std::vector<FrequencyBand> full_band = {{"full", 0.25, 97.0}};
  const FeatureTensor tensor = de_features(signal, full_band, 50.0, rate);
  REQUIRE(tensor.n_windows() == 1);
  REQUIRE(tensor.feature_dim() == 1);
  const double expected = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  CHECK(std::abs(tensor.values(0, 0) - expected) < 0.05);
}

TEST_CASE("scaling the signal by 2 adds ln 2 to every DE value") {
  const double rate = 200.0;
  Matrix signal = test_util::random_matrix(3, 3200, 32);
  const std::vector<FrequencyBand> bands = default_eeg_bands();

  const FeatureTensor base = de_features(signal, bands, 4.0, rate);
  const FeatureTensor scaled = de_features(Matrix(2.0 * signal), bands, 4.0, rate);
  const Matrix diff = scaled.values - base.values;
  for (int r = 0; r < diff.rows(); ++r) {
    for (int c = 0; c < diff.cols(); ++c) {
      CHECK(std::abs(diff(r, c) - std::numbers::ln2) < 0.01);
    }
  }
}

TEST_CASE("DE scale covariance: c*x shifts DE by ln|c| elementwise") {
  const double rate = 128.0;
  const Matrix signal = test_util::random_matrix(2, 1024, 33);
  const std::vector<FrequencyBand> bands = default_eeg_bands();
  const double c = -3.7;

  const FeatureTensor base = de_features(signal, bands, 2.0, rate);
  const FeatureTensor scaled = de_features(Matrix(c * signal), bands, 2.0, rate);
  const Matrix diff = scaled.values - base.values;
  const double expected = std::log(std::abs(c));
  for (int r = 0; r < diff.rows(); ++r) {
    for (int col = 0; col < diff.cols(); ++col) {
      CHECK(std::abs(diff(r, col) - expected) < 1e-6);
    }
  }
}

TEST_CASE("62-channel 4 s windows at 200 Hz over 60 s yield shape (15, 310)") {
  const Matrix signal = test_util::random_matrix(62, 12000, 34);
  const FeatureTensor tensor = de_features(signal, default_eeg_bands(), 4.0, 200.0);
  CHECK(tensor.n_windows() == 15);
  CHECK(tensor.feature_dim() == 310);
  CHECK(tensor.feature_names.size() == 310);
}

TEST_CASE("window count is floor(samples / window_samples) exactly") {
  for (int samples : {800, 801, 1599, 1600, 2449}) {
    const Matrix signal = test_util::random_matrix(1, samples, 35);
    const FeatureTensor tensor = de_features(signal, default_eeg_bands(), 4.0, 200.0);
    CHECK(tensor.n_windows() == samples / 800);
  }
}

TEST_CASE("zero-variance windows are clamped and flagged") {
  Matrix signal = test_util::random_matrix(1, 1600, 36);
  signal.row(0).segment(0, 800).setZero();  // first window is dead
  const FeatureTensor tensor = de_features(signal, default_eeg_bands(), 4.0, 200.0);
  REQUIRE(tensor.n_windows() == 2);
  CHECK(tensor.flagged_windows == std::vector<int>{0});
  // Clamped DE of the floor variance.
  const double floor_de =
      0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * kVarianceFloor);
  CHECK(tensor.values(0, 0) == doctest::Approx(floor_de));
  CHECK(std::isfinite(tensor.values(0, 0)));
}

// --- preprocess_eeg (composition) -----------------------------------------------

namespace {

Trial make_eeg_trial(int channels, int samples, unsigned seed) {
  Trial trial;
  trial.trial_id = 1;
  trial.signals["eeg"] = test_util::random_matrix(channels, samples, seed);
  trial.baselines["eeg"] = test_util::random_matrix(channels, 64, seed + 1, 0.2);
  return trial;
}

Modality make_eeg_modality(int channels, double rate) {
  Modality m;
  m.kind = ModalityKind::Eeg;
  m.sample_rate_hz = rate;
  for (int ch = 0; ch < channels; ++ch) m.channel_names.push_back("C" + std::to_string(ch));
  return m;
}

}  // namespace

TEST_CASE("full chain produces a finite tensor of the documented shape") {
  const Trial trial = make_eeg_trial(4, 2560, 41);
  const Modality eeg = make_eeg_modality(4, 128.0);
  PreprocConfig config;
  config.window_seconds = 4.0;

  const FeatureTensor tensor = preprocess_eeg(trial, eeg, config);
  CHECK(tensor.n_windows() == 5);
  CHECK(tensor.feature_dim() == 20);
  CHECK_NOTHROW(tensor.require_finite());
}

TEST_CASE("disabling pca and lds reduces the chain to de(bandpass(debaseline(x)))") {
  const Trial trial = make_eeg_trial(3, 1280, 42);
  const Modality eeg = make_eeg_modality(3, 128.0);

  PreprocConfig config;
  config.window_seconds = 2.0;
  config.pca_enabled = false;
  config.lds.enabled = false;

  const FeatureTensor chain = preprocess_eeg(trial, eeg, config);

  const Matrix debased = remove_baseline(trial.signals.at("eeg"), trial.baselines.at("eeg"));
  const Matrix filtered = bandpass(debased, config.bandpass_low_hz, config.bandpass_high_hz,
                                   eeg.sample_rate_hz, config.filter_order);
  const FeatureTensor manual = de_features(filtered, config.bands, config.window_seconds,
                                           eeg.sample_rate_hz, config.filter_order,
                                           eeg.channel_names);
  CHECK((chain.values - manual.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("permuting channels permutes feature blocks identically") {
  const int channels = 4;
  const Trial trial = make_eeg_trial(channels, 1280, 43);
  const Modality eeg = make_eeg_modality(channels, 128.0);

  PreprocConfig config;
  config.window_seconds = 2.0;
  config.pca_enabled = false;  // PCA is basis-dependent; equivariance holds without it
  config.lds.enabled = true;

  const std::vector<int> perm = {2, 0, 3, 1};
  Trial permuted = trial;
  Matrix& sig = permuted.signals.at("eeg");
  Matrix& base = permuted.baselines.at("eeg");
  for (int ch = 0; ch < channels; ++ch) {
    sig.row(ch) = trial.signals.at("eeg").row(perm[static_cast<std::size_t>(ch)]);
    base.row(ch) = trial.baselines.at("eeg").row(perm[static_cast<std::size_t>(ch)]);
  }

  const FeatureTensor original = preprocess_eeg(trial, eeg, config);
  const FeatureTensor shuffled = preprocess_eeg(permuted, eeg, config);

  const int n_bands = static_cast<int>(config.bands.size());
  for (int ch = 0; ch < channels; ++ch) {
    const Matrix expected =
        original.values.middleCols(perm[static_cast<std::size_t>(ch)] * n_bands, n_bands);
    const Matrix got = shuffled.values.middleCols(ch * n_bands, n_bands);
    CHECK((expected - got).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("a single-trial session reduces session-scope PCA to trial scope") {
  const Trial trial = make_eeg_trial(4, 1280, 44);
  const Modality eeg = make_eeg_modality(4, 128.0);
  PreprocConfig config;
  config.window_seconds = 2.0;

  const FeatureTensor trial_scope = preprocess_eeg(trial, eeg, config);
  const std::vector<FeatureTensor> session_scope =
      preprocess_eeg_session({trial}, eeg, config);
  REQUIRE(session_scope.size() == 1);
  CHECK((trial_scope.values - session_scope[0].values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("session-scope PCA shares one removal set across trials") {
  // A spike train contaminating only the second trial still defines a session
  // component; joint suppression removes that component from both trials.
  const int channels = 5, samples = 2000;
  Matrix quiet = test_util::random_matrix(channels, samples, 45, 0.3);
  Matrix loud = test_util::random_matrix(channels, samples, 46, 0.3);
  Eigen::VectorXd mix(channels);
  for (int ch = 0; ch < channels; ++ch) mix(ch) = 1.0 - 0.1 * ch;
  Eigen::VectorXd spikes = Eigen::VectorXd::Zero(samples);
  std::mt19937 gen(47);
  for (int k = 0; k < 20; ++k) {
    spikes(static_cast<Eigen::Index>(gen() % samples)) = (k % 2 == 0) ? 15.0 : -15.0;
  }
  loud += mix * spikes.transpose();

  PcaReport report;
  const std::vector<Matrix> cleaned = pca_suppress_joint({quiet, loud}, 5.0, &report);
  REQUIRE(report.removed.size() == 1);
  const double before = (loud * spikes).squaredNorm();
  const double after = (cleaned[1] * spikes).squaredNorm();
  CHECK(after <= 0.1 * before);
  // The spike direction is also projected out of the quiet trial.
  const double quiet_mix_before = (mix.transpose() * quiet).squaredNorm();
  const double quiet_mix_after = (mix.transpose() * cleaned[0]).squaredNorm();
  CHECK(quiet_mix_after < quiet_mix_before);
}

TEST_CASE("config validation rejects bands outside the band-pass range") {
  PreprocConfig config;
  config.bands.push_back({"too_high", 50.0, 60.0});
  try {
    config.validate(200.0);
    FAIL("expected InvalidBandEdges");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidBandEdges);
  }
}

TEST_CASE("config validation rejects fractional window sample counts") {
  PreprocConfig config;
  config.window_seconds = 0.3;  // 0.3 * 128 = 38.4 samples
  try {
    config.validate(128.0);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
}
