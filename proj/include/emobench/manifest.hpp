#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "emobench/types.hpp"

namespace emobench {

// Dataset manifest: one JSON document at the dataset root. Schema:
//
//   {
//     "dataset_name": "...",
//     "sessions_per_subject": 3,
//     "label_scheme": {
//       "name": "...", "classes": ["negative", "neutral", "positive"],
//       "source": "discrete_stimulus" | "thresholded_rating",
//       "threshold": 5.0                     // thresholded_rating only
//     },
//     "modalities": [
//       {"kind": "eeg" | "eye" | "peripheral",
//        "channels": ["C1", ...], "sample_rate_hz": 200.0,
//        "payload": "raw_tracking" | "precomputed_features"}   // eye only
//     ],
//     "trials": [
//       {"subject": "s01", "session": 0, "trial_id": 0,
//        "label": "positive" | 2 | 6.5,      // class name, index, or rating
//        "signals": {"eeg": "rel/path.ebc", ...},
//        "baselines": {"eeg": "rel/path.ebc"}}                 // optional
//     ]
//   }
//
// Signal paths are relative to the manifest's directory. ".csv" files use the
// CSV fallback reader (eye raw-tracking streams are always CSV).

struct TrialEntry {
  std::string subject;
  int session = 0;
  int trial_id = 0;
  int label = 0;
  double raw_rating = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, std::string> signal_paths;    // modality key -> relative path
  std::map<std::string, std::string> baseline_paths;  // optional

  bool operator==(const TrialEntry& other) const;
};

struct DatasetDescriptor {
  std::filesystem::path root;  // directory holding the manifest
  std::string dataset_name;
  int sessions_per_subject = 1;
  LabelScheme label_scheme;
  std::vector<Modality> modalities;
  std::vector<std::string> subjects;  // sorted; subjects dropped by the
                                      // modality-presence rule are absent
  std::vector<TrialEntry> trials;     // sorted by (subject, session, trial_id)
  std::vector<std::string> notes;     // dropped-subject log lines etc.

  const Modality* find_modality(const std::string& key) const;
  // Structural equality; ignores root and notes.
  bool equivalent(const DatasetDescriptor& other) const;
};

struct ValidationIssue {
  ErrorCode code = ErrorCode::InvalidConfig;
  std::string message;
};

struct ValidationResult {
  DatasetDescriptor descriptor;
  std::vector<ValidationIssue> issues;  // all violations, not just the first

  bool ok() const { return issues.empty(); }
};

// Pure given the filesystem state: same document, same tree -> same result.
ValidationResult validate_manifest(const std::filesystem::path& manifest_path);

// Inverse of validation for a resolved descriptor; re-validating the emitted
// document yields an equivalent descriptor.
std::string serialize_manifest(const DatasetDescriptor& descriptor);

// Loads one trial's signals (and baselines / eye streams) from disk.
Trial load_trial(const DatasetDescriptor& descriptor, const TrialEntry& entry);

// Loads every trial. Convenient for small sets; the pipeline streams instead.
RecordingSet load_recording_set(const DatasetDescriptor& descriptor);

}  // namespace emobench
