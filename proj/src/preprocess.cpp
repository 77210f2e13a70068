#include "emobench/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "emobench/butterworth.hpp"
#include "emobench/lds.hpp"

namespace emobench {

std::vector<FrequencyBand> default_eeg_bands() {
  return {
      {"delta", 1.0, 4.0},  {"theta", 4.0, 8.0},   {"alpha", 8.0, 14.0},
      {"beta", 14.0, 31.0}, {"gamma", 31.0, 50.0},
  };
}

void PreprocConfig::validate(double sample_rate_hz) const {
  if (!(bandpass_low_hz > 0.0) || !(bandpass_low_hz < bandpass_high_hz) ||
      !(bandpass_high_hz < sample_rate_hz / 2.0)) {
    throw Error(ErrorCode::InvalidBandEdges,
                "band-pass range [" + std::to_string(bandpass_low_hz) + ", " +
                    std::to_string(bandpass_high_hz) + "] invalid at " +
                    std::to_string(sample_rate_hz) + " Hz");
  }
  if (bands.empty()) {
    throw Error(ErrorCode::InvalidConfig, "no analysis bands configured");
  }
  double prev_high = 0.0;
  for (const FrequencyBand& b : bands) {
    if (!(b.low_hz > 0.0) || !(b.low_hz < b.high_hz)) {
      throw Error(ErrorCode::InvalidBandEdges, "band '" + b.name + "' has bad edges");
    }
    if (b.low_hz < bandpass_low_hz - 1e-9 || b.high_hz > bandpass_high_hz + 1e-9) {
      throw Error(ErrorCode::InvalidBandEdges,
                  "band '" + b.name + "' lies outside the band-pass range");
    }
    if (b.low_hz < prev_high - 1e-9) {
      throw Error(ErrorCode::InvalidBandEdges,
                  "band '" + b.name + "' overlaps its predecessor");
    }
    if (!(b.high_hz < sample_rate_hz / 2.0)) {
      throw Error(ErrorCode::InvalidBandEdges,
                  "band '" + b.name + "' reaches the Nyquist frequency");
    }
    prev_high = b.high_hz;
  }
  if (!(window_seconds > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "window_seconds must be positive");
  }
  const double w = window_seconds * sample_rate_hz;
  if (std::abs(w - std::round(w)) > 1e-6 || std::round(w) < 1.0) {
    throw Error(ErrorCode::InvalidConfig,
                "window_seconds * sample_rate must be a positive integer, got " +
                    std::to_string(w));
  }
  if (lds.iterations < 1) {
    throw Error(ErrorCode::InvalidConfig, "lds iterations must be >= 1");
  }
}

Matrix remove_baseline(const Matrix& signal, const Matrix& baseline) {
  if (baseline.rows() != signal.rows()) {
    throw Error(ErrorCode::ChannelMismatch,
                "baseline has " + std::to_string(baseline.rows()) + " channels, signal has " +
                    std::to_string(signal.rows()));
  }
  Matrix out = signal;
  for (Eigen::Index ch = 0; ch < signal.rows(); ++ch) {
    out.row(ch).array() -= baseline.row(ch).mean();
  }
  return out;
}

Trial remove_baseline(const Trial& trial) {
  Trial out = trial;
  for (const auto& [key, baseline] : trial.baselines) {
    const auto it = out.signals.find(key);
    if (it == out.signals.end()) continue;
    it->second = remove_baseline(it->second, baseline);
  }
  return out;
}

namespace {

double excess_kurtosis(const Eigen::VectorXd& v) {
  const double n = static_cast<double>(v.size());
  const double mean = v.mean();
  double m2 = 0.0, m4 = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double d = v(i) - mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) return 0.0;  // constant scores carry no artifact signature
  return m4 / (m2 * m2) - 3.0;
}

}  // namespace

Matrix pca_suppress(const Matrix& signal, double kurtosis_threshold, PcaReport* report) {
  const Eigen::Index channels = signal.rows();
  const Eigen::Index samples = signal.cols();
  if (samples <= channels) {
    throw Error(ErrorCode::DegenerateCovariance,
                "need more samples (" + std::to_string(samples) + ") than channels (" +
                    std::to_string(channels) + ")");
  }

  const Eigen::VectorXd mean = signal.rowwise().mean();
  const Matrix centered = signal.colwise() - mean;
  const Matrix cov = centered * centered.transpose() / static_cast<double>(samples);
  const double total_var = cov.trace();
  if (!(total_var > 0.0)) {
    throw Error(ErrorCode::DegenerateCovariance, "channel covariance has zero variance");
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::DegenerateCovariance, "eigendecomposition failed");
  }
  // Descending eigenvalue order.
  Eigen::VectorXd eigenvalues = eig.eigenvalues().reverse();
  Matrix basis = eig.eigenvectors().rowwise().reverse();

  Matrix scores = basis.transpose() * centered;  // channels x samples

  if (report != nullptr) report->removed.clear();
  for (Eigen::Index k = 0; k < channels; ++k) {
    const double kurt = excess_kurtosis(scores.row(k).transpose());
    if (kurt > kurtosis_threshold) {
      if (report != nullptr) {
        report->removed.push_back(
            {static_cast<int>(k), kurt, eigenvalues(k) / total_var});
      }
      scores.row(k).setZero();
    }
  }

  Matrix cleaned = basis * scores;
  cleaned.colwise() += mean;
  return cleaned;
}

std::vector<Matrix> pca_suppress_joint(const std::vector<Matrix>& segments,
                                       double kurtosis_threshold, PcaReport* report) {
  if (segments.empty()) return {};
  const Eigen::Index channels = segments.front().rows();
  Eigen::Index total = 0;
  for (const Matrix& s : segments) {
    if (s.rows() != channels) {
      throw Error(ErrorCode::ChannelMismatch, "segments disagree on channel count");
    }
    total += s.cols();
  }
  Matrix joined(channels, total);
  Eigen::Index at = 0;
  for (const Matrix& s : segments) {
    joined.middleCols(at, s.cols()) = s;
    at += s.cols();
  }
  const Matrix cleaned = pca_suppress(joined, kurtosis_threshold, report);
  std::vector<Matrix> out;
  out.reserve(segments.size());
  at = 0;
  for (const Matrix& s : segments) {
    out.push_back(cleaned.middleCols(at, s.cols()));
    at += s.cols();
  }
  return out;
}

FeatureTensor de_features(const Matrix& signal, const std::vector<FrequencyBand>& bands,
                          double window_seconds, double rate_hz, int filter_order,
                          const std::vector<std::string>& channel_names) {
  const Eigen::Index channels = signal.rows();
  const Eigen::Index samples = signal.cols();
  const auto window_samples =
      static_cast<Eigen::Index>(std::llround(window_seconds * rate_hz));
  if (window_samples < 1 || samples < window_samples) {
    throw Error(ErrorCode::SignalTooShort,
                "signal of " + std::to_string(samples) + " samples is shorter than one " +
                    std::to_string(window_samples) + "-sample window");
  }
  const Eigen::Index n_windows = samples / window_samples;  // trailing partial discarded
  const auto n_bands = static_cast<Eigen::Index>(bands.size());

  std::vector<SosFilter> filters;
  filters.reserve(bands.size());
  for (const FrequencyBand& b : bands) {
    filters.push_back(design_butterworth_bandpass(filter_order, b.low_hz, b.high_hz, rate_hz));
  }

  FeatureTensor tensor;
  tensor.values.resize(n_windows, channels * n_bands);
  tensor.window_seconds = window_seconds;

  const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
  std::vector<double> window(static_cast<std::size_t>(window_samples));
  std::vector<char> flagged(static_cast<std::size_t>(n_windows), 0);

  for (Eigen::Index w = 0; w < n_windows; ++w) {
    for (Eigen::Index ch = 0; ch < channels; ++ch) {
      for (Eigen::Index i = 0; i < window_samples; ++i) {
        window[static_cast<std::size_t>(i)] = signal(ch, w * window_samples + i);
      }
      for (Eigen::Index b = 0; b < n_bands; ++b) {
        const std::vector<double> filtered = filtfilt(filters[static_cast<std::size_t>(b)], window);
        double mean = 0.0;
        for (double v : filtered) mean += v;
        mean /= static_cast<double>(filtered.size());
        double var = 0.0;
        for (double v : filtered) var += (v - mean) * (v - mean);
        var /= static_cast<double>(filtered.size());
        if (var < kVarianceFloor) {
          var = kVarianceFloor;
          flagged[static_cast<std::size_t>(w)] = 1;
        }
        tensor.values(w, ch * n_bands + b) = 0.5 * std::log(two_pi_e * var);
      }
    }
  }

  tensor.feature_names.reserve(static_cast<std::size_t>(channels * n_bands));
  for (Eigen::Index ch = 0; ch < channels; ++ch) {
    const std::string ch_name = ch < static_cast<Eigen::Index>(channel_names.size())
                                    ? channel_names[static_cast<std::size_t>(ch)]
                                    : "ch" + std::to_string(ch);
    for (const FrequencyBand& b : bands) {
      tensor.feature_names.push_back(ch_name + "_de_" + b.name);
    }
  }
  for (Eigen::Index w = 0; w < n_windows; ++w) {
    if (flagged[static_cast<std::size_t>(w)]) tensor.flagged_windows.push_back(static_cast<int>(w));
  }
  return tensor;
}

namespace {

// Stages shared by the trial- and session-scope chains.
Matrix debase_and_filter(const Trial& trial, const Modality& eeg,
                         const PreprocConfig& config) {
  const auto sig_it = trial.signals.find(eeg.key());
  if (sig_it == trial.signals.end()) {
    throw Error(ErrorCode::MissingModality,
                "trial " + std::to_string(trial.trial_id) + " carries no EEG signal");
  }
  Matrix signal = sig_it->second;
  const auto base_it = trial.baselines.find(eeg.key());
  if (base_it != trial.baselines.end()) {
    signal = remove_baseline(signal, base_it->second);
  }
  return bandpass(signal, config.bandpass_low_hz, config.bandpass_high_hz,
                  eeg.sample_rate_hz, config.filter_order);
}

FeatureTensor features_and_smooth(const Matrix& signal, const Trial& trial,
                                  const Modality& eeg, const PreprocConfig& config) {
  FeatureTensor tensor = de_features(signal, config.bands, config.window_seconds,
                                     eeg.sample_rate_hz, config.filter_order,
                                     eeg.channel_names);
  lds_smooth_columns(tensor.values, config.lds);
  tensor.origin.trial_id = trial.trial_id;
  tensor.origin.modality = eeg.key();
  return tensor;
}

}  // namespace

FeatureTensor preprocess_eeg(const Trial& trial, const Modality& eeg,
                             const PreprocConfig& config, PcaReport* pca_report) {
  config.validate(eeg.sample_rate_hz);
  Matrix signal = debase_and_filter(trial, eeg, config);
  if (config.pca_enabled) {
    signal = pca_suppress(signal, config.pca_kurtosis_threshold, pca_report);
  }
  return features_and_smooth(signal, trial, eeg, config);
}

std::vector<FeatureTensor> preprocess_eeg_session(const std::vector<Trial>& trials,
                                                  const Modality& eeg,
                                                  const PreprocConfig& config,
                                                  PcaReport* pca_report) {
  config.validate(eeg.sample_rate_hz);
  std::vector<Matrix> filtered;
  filtered.reserve(trials.size());
  for (const Trial& trial : trials) {
    filtered.push_back(debase_and_filter(trial, eeg, config));
  }
  if (config.pca_enabled) {
    filtered = pca_suppress_joint(filtered, config.pca_kurtosis_threshold, pca_report);
  }
  std::vector<FeatureTensor> tensors;
  tensors.reserve(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    tensors.push_back(features_and_smooth(filtered[i], trials[i], eeg, config));
  }
  return tensors;
}

}  // namespace emobench
