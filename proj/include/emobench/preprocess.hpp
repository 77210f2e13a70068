#pragma once

#include <string>
#include <vector>

#include "emobench/types.hpp"

namespace emobench {

struct FrequencyBand {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;
};

// delta 1-4, theta 4-8, alpha 8-14, beta 14-31, gamma 31-50 Hz.
std::vector<FrequencyBand> default_eeg_bands();

struct LdsConfig {
  bool enabled = true;
  double process_var_ratio = 0.1;
  int iterations = 1;
};

// Artifact suppression can run per trial (default) or on a whole session's
// concatenated samples, sharing one basis and removal set across its trials.
enum class PcaScope { Trial, Session };

struct PreprocConfig {
  double bandpass_low_hz = 0.3;
  double bandpass_high_hz = 50.0;
  int filter_order = 4;
  std::vector<FrequencyBand> bands = default_eeg_bands();
  double window_seconds = 4.0;
  bool pca_enabled = true;
  double pca_kurtosis_threshold = 5.0;
  PcaScope pca_scope = PcaScope::Trial;
  LdsConfig lds;

  // Bands must lie inside the band-pass range, be ordered and non-overlapping
  // except at shared edges, and window_seconds * rate must be integral.
  void validate(double sample_rate_hz) const;
};

// Variance floor applied before the DE log so dead channels yield a finite
// (flagged) value instead of -inf.
inline constexpr double kVarianceFloor = 1e-12;

// Subtracts the per-channel mean of the baseline segment from the EEG signal.
// Trials without an EEG baseline pass through unchanged (logged by callers).
// Throws ChannelMismatch when baseline and signal channel counts differ.
Matrix remove_baseline(const Matrix& signal, const Matrix& baseline);
Trial remove_baseline(const Trial& trial);

struct PcaReport {
  struct Component {
    int index = 0;               // eigenvector index, descending eigenvalue order
    double excess_kurtosis = 0;  // of the component scores
    double variance_share = 0;   // eigenvalue / total variance
  };
  std::vector<Component> removed;
};

// Eigendecomposition of the channel covariance; component scores whose excess
// kurtosis exceeds the threshold are zeroed and the signal reconstructed.
// Requires samples > channels. Throws DegenerateCovariance when the
// covariance has no variance at all.
Matrix pca_suppress(const Matrix& signal, double kurtosis_threshold,
                    PcaReport* report = nullptr);

// Session-scope variant: one basis and removal set computed on the
// concatenation, applied to every segment. A single segment reduces exactly
// to pca_suppress.
std::vector<Matrix> pca_suppress_joint(const std::vector<Matrix>& segments,
                                       double kurtosis_threshold,
                                       PcaReport* report = nullptr);

// Per non-overlapping window, per channel, per band: band-pass the window,
// take the population variance, emit DE = 0.5 * ln(2*pi*e*var). Feature order
// is channel-major then band. The trailing partial window is discarded.
// Throws SignalTooShort when the signal is shorter than one window.
FeatureTensor de_features(const Matrix& signal, const std::vector<FrequencyBand>& bands,
                          double window_seconds, double rate_hz, int filter_order = 4,
                          const std::vector<std::string>& channel_names = {});

// Full EEG chain: remove_baseline -> bandpass -> pca_suppress -> de_features
// -> per-dimension LDS smoothing, in exactly that order. Applies trial-scope
// PCA regardless of pca_scope; the session variant below owns that case.
FeatureTensor preprocess_eeg(const Trial& trial, const Modality& eeg,
                             const PreprocConfig& config,
                             PcaReport* pca_report = nullptr);

// Session-scope chain: baseline removal and band-pass per trial, then joint
// PCA across the session's trials, then DE and LDS per trial.
std::vector<FeatureTensor> preprocess_eeg_session(const std::vector<Trial>& trials,
                                                  const Modality& eeg,
                                                  const PreprocConfig& config,
                                                  PcaReport* pca_report = nullptr);

}  // namespace emobench
