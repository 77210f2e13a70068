#include "emobench/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace emobench {

const char* modality_kind_name(ModalityKind kind) {
  switch (kind) {
    case ModalityKind::Eeg: return "eeg";
    case ModalityKind::EyeMovement: return "eye";
    case ModalityKind::Peripheral: return "peripheral";
  }
  return "unknown";
}

ModalityKind modality_kind_from_name(const std::string& name) {
  if (name == "eeg") return ModalityKind::Eeg;
  if (name == "eye" || name == "eye_movement") return ModalityKind::EyeMovement;
  if (name == "peripheral") return ModalityKind::Peripheral;
  throw Error(ErrorCode::InvalidConfig, "unknown modality kind '" + name + "'");
}

std::string Modality::key() const { return modality_kind_name(kind); }

void Modality::validate() const {
  if (!(sample_rate_hz > 0.0)) {
    throw Error(ErrorCode::InvalidConfig,
                "modality '" + key() + "' sample rate must be positive");
  }
  if (channel_names.empty()) {
    throw Error(ErrorCode::InvalidConfig,
                "modality '" + key() + "' declares no channels");
  }
  std::set<std::string> seen;
  for (const auto& name : channel_names) {
    if (!seen.insert(name).second) {
      throw Error(ErrorCode::InvalidConfig,
                  "modality '" + key() + "' has duplicate channel '" + name + "'");
    }
  }
}

void LabelScheme::validate() const {
  if (classes.size() < 2) {
    throw Error(ErrorCode::InvalidConfig,
                "label scheme '" + name + "' needs at least 2 classes");
  }
  if (source == LabelSource::ThresholdedRating && classes.size() != 2) {
    throw Error(ErrorCode::InvalidConfig,
                "thresholded rating schemes are binary (low/high)");
  }
}

int LabelScheme::index_of(const std::string& class_name) const {
  const auto it = std::find(classes.begin(), classes.end(), class_name);
  return it == classes.end() ? -1 : static_cast<int>(it - classes.begin());
}

int LabelScheme::resolve_rating(double rating) const {
  return rating > threshold ? 1 : 0;
}

const Modality* RecordingSet::find_modality(ModalityKind kind) const {
  for (const auto& m : modalities) {
    if (m.kind == kind) return &m;
  }
  return nullptr;
}

const Modality* RecordingSet::find_modality_by_key(const std::string& key) const {
  for (const auto& m : modalities) {
    if (m.key() == key) return &m;
  }
  return nullptr;
}

void FeatureTensor::require_finite() const {
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (!std::isfinite(values(r, c))) {
        throw Error(ErrorCode::NonFiniteSample,
                    "feature tensor for " + origin.subject + "/s" +
                        std::to_string(origin.session) + "/t" +
                        std::to_string(origin.trial_id) + " has non-finite cell (" +
                        std::to_string(r) + ", " + std::to_string(c) + ")");
      }
    }
  }
}

}  // namespace emobench
