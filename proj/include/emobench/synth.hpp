#pragma once

#include <cstdint>
#include <filesystem>

#include "emobench/manifest.hpp"

namespace emobench {

// Synthetic multimodal dataset for desk-scale verification. Class structure:
//
//  - EEG channels are sums of band-limited noise (the same Butterworth
//    machinery preprocessing uses, so the structure is expressible in DE
//    features). In even-indexed channels the alpha-band variance is
//    1 + class * class_separation; everywhere else it is 1.
//  - The aux (peripheral) modality carries class-shifted means: class c
//    raises the mean of channels with index = c (mod classes) by
//    class_separation.
//  - Every subject applies a fixed random variance tilt (EEG) and mean offset
//    (aux) scaled by subject_shift.
//
// Output is a pure function of the spec: generation is keyed per
// (subject, session, trial) so trees are byte-identical across runs.
struct SynthSpec {
  int n_subjects = 6;
  int n_sessions = 1;
  int n_trials = 15;
  int classes = 3;
  int eeg_channels = 8;
  int aux_channels = 8;
  double sample_rate_hz = 128.0;
  double trial_seconds = 20.0;
  double class_separation = 6.0;
  double subject_shift = 0.2;
  std::uint64_t seed = 42;

  void validate() const;
};

// Writes manifest.json plus per-trial containers under out_dir and returns the
// validated descriptor. Throws IoFailure and config errors.
DatasetDescriptor generate_synthetic(const SynthSpec& spec,
                                     const std::filesystem::path& out_dir);

}  // namespace emobench
