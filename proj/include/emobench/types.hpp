#pragma once

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emobench/error.hpp"

namespace emobench {

// channels x samples for raw signals, windows x feature_dim for tensors.
using Matrix = Eigen::MatrixXd;
// Container payload precision (files store little-endian float32).
using MatrixF = Eigen::MatrixXf;

// --- Modalities -------------------------------------------------------------

enum class ModalityKind { Eeg, EyeMovement, Peripheral };
enum class EyePayload { RawTracking, PrecomputedFeatures };

const char* modality_kind_name(ModalityKind kind);
ModalityKind modality_kind_from_name(const std::string& name);

struct Modality {
  ModalityKind kind = ModalityKind::Eeg;
  std::vector<std::string> channel_names;
  double sample_rate_hz = 0.0;
  // Meaningful for EyeMovement only: raw tracking streams are CSV record
  // streams, precomputed features are windows x dim matrices.
  EyePayload eye_payload = EyePayload::RawTracking;

  // Key used in trial signal maps and manifests ("eeg", "eye", "peripheral").
  std::string key() const;
  void validate() const;  // positive rate, non-empty unique channel names
};

// --- Labels -----------------------------------------------------------------

enum class LabelSource { DiscreteStimulus, ThresholdedRating };

struct LabelScheme {
  std::string name;
  std::vector<std::string> classes;  // ordered; index is the class id
  LabelSource source = LabelSource::DiscreteStimulus;
  // ThresholdedRating only: ratings strictly greater than the threshold map to
  // classes[1], the rest to classes[0].
  double threshold = 0.0;

  int n_classes() const { return static_cast<int>(classes.size()); }
  void validate() const;

  // Class index for a named class; -1 if unknown.
  int index_of(const std::string& class_name) const;
  // Class index for a raw rating under a ThresholdedRating scheme.
  int resolve_rating(double rating) const;
};

// --- Eye-movement record streams ---------------------------------------------

struct EyeEvent {
  enum class Type { Fixation, Blink, Saccade };
  Type type = Type::Fixation;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct EyeSample {
  double t_s = 0.0;
  double pupil_x = 0.0;
  double pupil_y = 0.0;
  double gaze_x = 0.0;
  double gaze_y = 0.0;
};

struct EyeStream {
  std::vector<EyeSample> samples;  // timestamps non-decreasing
  std::vector<EyeEvent> events;
};

// --- Trials and recording sets ------------------------------------------------

struct Trial {
  int trial_id = 0;
  int label = 0;  // class index under the dataset's LabelScheme
  // Original rating for ThresholdedRating schemes (NaN otherwise).
  double raw_rating = std::numeric_limits<double>::quiet_NaN();
  // modality key -> channels x samples
  std::map<std::string, Matrix> signals;
  // optional per-modality baseline segments, channels x samples
  std::map<std::string, Matrix> baselines;
  // raw eye-tracking stream, when the dataset declares one
  std::optional<EyeStream> eye_stream;
};

struct RecordingSet {
  std::string dataset_name;
  std::vector<std::string> subjects;  // lexicographically sorted ids
  int sessions_per_subject = 1;
  LabelScheme label_scheme;
  std::vector<Modality> modalities;
  // (subject, session) -> trials
  std::map<std::pair<std::string, int>, std::vector<Trial>> trials;

  const Modality* find_modality(ModalityKind kind) const;
  const Modality* find_modality_by_key(const std::string& key) const;
};

// --- Feature tensors -----------------------------------------------------------

struct TensorOrigin {
  std::string subject;
  int session = 0;
  int trial_id = 0;
  std::string modality;
};

struct FeatureTensor {
  Matrix values;  // windows x feature_dim
  double window_seconds = 0.0;
  TensorOrigin origin;
  std::vector<std::string> feature_names;  // size feature_dim, fixed order
  // Windows where at least one feature hit the zero-variance floor.
  std::vector<int> flagged_windows;

  int n_windows() const { return static_cast<int>(values.rows()); }
  int feature_dim() const { return static_cast<int>(values.cols()); }
  void require_finite() const;  // throws NonFiniteSample
};

}  // namespace emobench
