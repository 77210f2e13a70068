#include "emobench/synth.hpp"

#include <cmath>
#include <fstream>

#include "emobench/butterworth.hpp"
#include "emobench/container.hpp"
#include "emobench/preprocess.hpp"
#include "emobench/rng.hpp"

namespace emobench {

void SynthSpec::validate() const {
  if (n_subjects < 1 || n_sessions < 1 || n_trials < 1 || classes < 2 ||
      eeg_channels < 1 || aux_channels < 1) {
    throw Error(ErrorCode::InvalidConfig, "synthetic spec counts must be >= 1 (classes >= 2)");
  }
  if (!(class_separation >= 0.0) || !(subject_shift >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "class_separation and subject_shift must be >= 0");
  }
  if (!(sample_rate_hz > 100.0)) {
    throw Error(ErrorCode::InvalidConfig,
                "sample rate must exceed 100 Hz so the gamma band stays below Nyquist");
  }
  if (!(trial_seconds * sample_rate_hz >= 64.0)) {
    throw Error(ErrorCode::InvalidConfig, "trials are too short to band-filter");
  }
  if (n_trials < classes) {
    throw Error(ErrorCode::InvalidConfig, "need at least one trial per class");
  }
}

namespace {

constexpr int kAlphaBand = 2;  // index into default_eeg_bands()

std::string subject_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%02d", index);
  return buf;
}

double population_var(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return var / static_cast<double>(v.size());
}

}  // namespace

DatasetDescriptor generate_synthetic(const SynthSpec& spec,
                                     const std::filesystem::path& out_dir) {
  spec.validate();

  const std::vector<FrequencyBand> bands = default_eeg_bands();
  std::vector<SosFilter> filters;
  filters.reserve(bands.size());
  for (const FrequencyBand& b : bands) {
    filters.push_back(design_butterworth_bandpass(4, b.low_hz, b.high_hz, spec.sample_rate_hz));
  }

  const auto samples = static_cast<Eigen::Index>(std::llround(spec.trial_seconds * spec.sample_rate_hz));
  const Eigen::Index baseline_samples = std::max<Eigen::Index>(
      static_cast<Eigen::Index>(std::llround(spec.sample_rate_hz)), 32);

  DatasetDescriptor desc;
  desc.root = out_dir;
  desc.dataset_name = "synthetic";
  desc.sessions_per_subject = spec.n_sessions;
  desc.label_scheme.name = "synthetic_classes";
  desc.label_scheme.source = LabelSource::DiscreteStimulus;
  for (int c = 0; c < spec.classes; ++c) {
    desc.label_scheme.classes.push_back("class" + std::to_string(c));
  }

  Modality eeg;
  eeg.kind = ModalityKind::Eeg;
  eeg.sample_rate_hz = spec.sample_rate_hz;
  for (int ch = 0; ch < spec.eeg_channels; ++ch) {
    eeg.channel_names.push_back("EEG" + std::to_string(ch));
  }
  Modality aux;
  aux.kind = ModalityKind::Peripheral;
  aux.sample_rate_hz = spec.sample_rate_hz;
  for (int ch = 0; ch < spec.aux_channels; ++ch) {
    aux.channel_names.push_back("AUX" + std::to_string(ch));
  }
  desc.modalities = {eeg, aux};

  for (int subj = 0; subj < spec.n_subjects; ++subj) {
    const std::string sid = subject_id(subj);
    desc.subjects.push_back(sid);

    // Fixed per-subject tilts, independent of session/trial ordering.
    Rng subj_rng(derive_seed(spec.seed, {0xabu, static_cast<std::uint64_t>(subj)}));
    Matrix eeg_tilt(spec.eeg_channels, static_cast<Eigen::Index>(bands.size()));
    for (Eigen::Index ch = 0; ch < eeg_tilt.rows(); ++ch) {
      for (Eigen::Index b = 0; b < eeg_tilt.cols(); ++b) {
        eeg_tilt(ch, b) = std::exp(subj_rng.uniform(-1.0, 1.0) * spec.subject_shift);
      }
    }
    Eigen::VectorXd aux_offset(spec.aux_channels);
    for (Eigen::Index ch = 0; ch < aux_offset.size(); ++ch) {
      aux_offset(ch) = subj_rng.uniform(-1.0, 1.0) * spec.subject_shift;
    }

    for (int sess = 0; sess < spec.n_sessions; ++sess) {
      for (int trial = 0; trial < spec.n_trials; ++trial) {
        const int label = trial % spec.classes;
        Rng rng(derive_seed(spec.seed, {0x7e, static_cast<std::uint64_t>(subj),
                                        static_cast<std::uint64_t>(sess),
                                        static_cast<std::uint64_t>(trial)}));

        // EEG: per channel, sum of variance-normalized band components.
        MatrixF eeg_data(spec.eeg_channels, samples);
        std::vector<double> noise(static_cast<std::size_t>(samples));
        for (int ch = 0; ch < spec.eeg_channels; ++ch) {
          const bool marked = ch % 2 == 0;
          std::vector<double> channel(static_cast<std::size_t>(samples), 0.0);
          for (std::size_t b = 0; b < bands.size(); ++b) {
            for (double& v : noise) v = rng.normal();
            std::vector<double> component = filtfilt(filters[b], noise);
            double target = eeg_tilt(ch, static_cast<Eigen::Index>(b));
            if (marked && b == kAlphaBand) {
              target *= 1.0 + label * spec.class_separation;
            }
            const double realized = population_var(component);
            const double gain = realized > 0.0 ? std::sqrt(target / realized) : 0.0;
            for (std::size_t i = 0; i < component.size(); ++i) {
              channel[i] += gain * component[i];
            }
          }
          const double dc_offset = rng.uniform(-10.0, 10.0);
          for (Eigen::Index i = 0; i < samples; ++i) {
            eeg_data(ch, i) = static_cast<float>(channel[static_cast<std::size_t>(i)] + dc_offset);
          }
        }

        // EEG baseline: what a pre-stimulus segment measures is the channel's
        // resting level, here the trial mean plus light noise.
        MatrixF eeg_baseline(spec.eeg_channels, baseline_samples);
        for (int ch = 0; ch < spec.eeg_channels; ++ch) {
          double mean = 0.0;
          for (Eigen::Index i = 0; i < samples; ++i) mean += eeg_data(ch, i);
          mean /= static_cast<double>(samples);
          for (Eigen::Index i = 0; i < baseline_samples; ++i) {
            eeg_baseline(ch, i) = static_cast<float>(mean + 0.05 * rng.normal());
          }
        }

        // Aux: class-shifted means. Each class raises its own channel group
        // (channel index mod class count), so every class owns a margin
        // direction instead of sharing one ordered axis.
        MatrixF aux_data(spec.aux_channels, samples);
        for (int ch = 0; ch < spec.aux_channels; ++ch) {
          const double mean =
              (ch % spec.classes == label ? spec.class_separation : 0.0) + aux_offset(ch);
          for (Eigen::Index i = 0; i < samples; ++i) {
            aux_data(ch, i) = static_cast<float>(mean + rng.normal());
          }
        }

        char rel[128];
        std::snprintf(rel, sizeof(rel), "data/%s/ses%d/t%02d", sid.c_str(), sess, trial);
        const std::string base = rel;
        write_container(out_dir / (base + "_eeg.ebc"), eeg_data, spec.sample_rate_hz);
        write_container(out_dir / (base + "_eeg_baseline.ebc"), eeg_baseline,
                        spec.sample_rate_hz);
        write_container(out_dir / (base + "_aux.ebc"), aux_data, spec.sample_rate_hz);

        TrialEntry entry;
        entry.subject = sid;
        entry.session = sess;
        entry.trial_id = trial;
        entry.label = label;
        entry.signal_paths["eeg"] = base + "_eeg.ebc";
        entry.signal_paths["peripheral"] = base + "_aux.ebc";
        entry.baseline_paths["eeg"] = base + "_eeg_baseline.ebc";
        desc.trials.push_back(std::move(entry));
      }
    }
  }

  const std::string manifest = serialize_manifest(desc);
  const std::filesystem::path manifest_path = out_dir / "manifest.json";
  {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream f(manifest_path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoFailure, "cannot write '" + manifest_path.string() + "'");
    f << manifest;
  }

  ValidationResult validated = validate_manifest(manifest_path);
  if (!validated.ok()) {
    throw Error(ErrorCode::IoFailure,
                "generated dataset failed validation: " + validated.issues.front().message);
  }
  return validated.descriptor;
}

}  // namespace emobench
