#include "emobench/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "emobench/aux_features.hpp"
#include "emobench/container.hpp"

namespace emobench {

using nlohmann::json;

bool TrialEntry::operator==(const TrialEntry& other) const {
  const bool rating_equal =
      (std::isnan(raw_rating) && std::isnan(other.raw_rating)) || raw_rating == other.raw_rating;
  return subject == other.subject && session == other.session && trial_id == other.trial_id &&
         label == other.label && rating_equal && signal_paths == other.signal_paths &&
         baseline_paths == other.baseline_paths;
}

const Modality* DatasetDescriptor::find_modality(const std::string& key) const {
  for (const Modality& m : modalities) {
    if (m.key() == key) return &m;
  }
  return nullptr;
}

bool DatasetDescriptor::equivalent(const DatasetDescriptor& other) const {
  if (dataset_name != other.dataset_name ||
      sessions_per_subject != other.sessions_per_subject ||
      subjects != other.subjects || trials.size() != other.trials.size()) {
    return false;
  }
  if (label_scheme.name != other.label_scheme.name ||
      label_scheme.classes != other.label_scheme.classes ||
      label_scheme.source != other.label_scheme.source) {
    return false;
  }
  if (modalities.size() != other.modalities.size()) return false;
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    const Modality& a = modalities[i];
    const Modality& b = other.modalities[i];
    if (a.kind != b.kind || a.channel_names != b.channel_names ||
        a.sample_rate_hz != b.sample_rate_hz || a.eye_payload != b.eye_payload) {
      return false;
    }
  }
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!(trials[i] == other.trials[i])) return false;
  }
  return true;
}

namespace {

void add_issue(ValidationResult& result, ErrorCode code, const std::string& message) {
  result.issues.push_back({code, message});
}

std::string trial_tag(const std::string& subject, int session, int trial_id) {
  return subject + "/session" + std::to_string(session) + "/trial" + std::to_string(trial_id);
}

// Shape check without loading payloads: container headers are enough for
// channel counts; CSVs need their header row; eye streams have a fixed schema.
void check_signal_shape(ValidationResult& result, const std::filesystem::path& full,
                        const Modality& modality, const std::string& tag,
                        const char* role) {
  if (!std::filesystem::exists(full)) {
    add_issue(result, ErrorCode::MissingFile,
              tag + ": " + role + " file '" + full.string() + "' does not exist");
    return;
  }
  if (modality.kind == ModalityKind::EyeMovement &&
      modality.eye_payload == EyePayload::RawTracking) {
    return;  // record stream, validated by the reader
  }
  try {
    std::size_t channels = 0;
    std::size_t samples = 0;
    if (full.extension() == ".csv") {
      std::vector<std::string> names;
      const MatrixF data = read_signal_csv(full, &names);
      channels = names.size();
      samples = static_cast<std::size_t>(data.cols());
    } else {
      const ContainerHeader header = read_container_header(full);
      channels = header.channels;
      samples = static_cast<std::size_t>(header.samples);
      // Containers carry their own rate; a zero rate means "unspecified".
      if (header.sample_rate_hz > 0.0 &&
          std::abs(header.sample_rate_hz - modality.sample_rate_hz) > 1e-9) {
        add_issue(result, ErrorCode::InvalidConfig,
                  tag + ": " + role + " '" + full.filename().string() + "' declares " +
                      std::to_string(header.sample_rate_hz) + " Hz, modality '" +
                      modality.key() + "' declares " +
                      std::to_string(modality.sample_rate_hz) + " Hz");
      }
    }
    if (channels != modality.channel_names.size()) {
      add_issue(result, ErrorCode::ChannelCountMismatch,
                tag + ": " + role + " '" + full.filename().string() + "' has " +
                    std::to_string(channels) + " channels, modality '" + modality.key() +
                    "' declares " + std::to_string(modality.channel_names.size()));
    }
    if (samples < 1) {
      add_issue(result, ErrorCode::TruncatedPayload,
                tag + ": " + role + " '" + full.filename().string() + "' has no samples");
    }
  } catch (const Error& e) {
    add_issue(result, e.code(), tag + ": " + e.what());
  }
}

}  // namespace

ValidationResult validate_manifest(const std::filesystem::path& manifest_path) {
  ValidationResult result;
  DatasetDescriptor& desc = result.descriptor;
  desc.root = manifest_path.parent_path();

  std::ifstream f(manifest_path);
  if (!f) {
    add_issue(result, ErrorCode::MissingFile,
              "manifest '" + manifest_path.string() + "' does not exist");
    return result;
  }
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    add_issue(result, ErrorCode::InvalidConfig,
              std::string("manifest is not valid JSON: ") + e.what());
    return result;
  }

  try {
    desc.dataset_name = doc.at("dataset_name").get<std::string>();
    desc.sessions_per_subject = doc.value("sessions_per_subject", 1);

    const json& scheme = doc.at("label_scheme");
    desc.label_scheme.name = scheme.at("name").get<std::string>();
    desc.label_scheme.classes = scheme.at("classes").get<std::vector<std::string>>();
    const std::string source = scheme.value("source", "discrete_stimulus");
    if (source == "discrete_stimulus") {
      desc.label_scheme.source = LabelSource::DiscreteStimulus;
      if (scheme.contains("threshold")) {
        add_issue(result, ErrorCode::InvalidConfig,
                  "discrete_stimulus schemes carry no threshold");
      }
    } else if (source == "thresholded_rating") {
      desc.label_scheme.source = LabelSource::ThresholdedRating;
      if (!scheme.contains("threshold")) {
        add_issue(result, ErrorCode::InvalidConfig,
                  "thresholded_rating schemes need exactly one threshold");
      } else {
        desc.label_scheme.threshold = scheme.at("threshold").get<double>();
      }
    } else {
      add_issue(result, ErrorCode::InvalidConfig, "unknown label source '" + source + "'");
    }
    try {
      desc.label_scheme.validate();
    } catch (const Error& e) {
      add_issue(result, e.code(), e.what());
    }

    for (const json& m : doc.at("modalities")) {
      Modality modality;
      modality.kind = modality_kind_from_name(m.at("kind").get<std::string>());
      modality.channel_names = m.at("channels").get<std::vector<std::string>>();
      modality.sample_rate_hz = m.at("sample_rate_hz").get<double>();
      if (modality.kind == ModalityKind::EyeMovement) {
        const std::string payload = m.value("payload", "raw_tracking");
        if (payload == "raw_tracking") {
          modality.eye_payload = EyePayload::RawTracking;
        } else if (payload == "precomputed_features") {
          modality.eye_payload = EyePayload::PrecomputedFeatures;
        } else {
          add_issue(result, ErrorCode::InvalidConfig,
                    "unknown eye payload '" + payload + "'");
        }
      }
      try {
        modality.validate();
      } catch (const Error& e) {
        add_issue(result, e.code(), e.what());
      }
      desc.modalities.push_back(std::move(modality));
    }
    if (desc.modalities.empty()) {
      add_issue(result, ErrorCode::InvalidConfig, "manifest declares no modalities");
    }

    std::set<std::tuple<std::string, int, int>> seen_trials;
    for (const json& t : doc.at("trials")) {
      TrialEntry entry;
      entry.subject = t.at("subject").get<std::string>();
      entry.session = t.at("session").get<int>();
      entry.trial_id = t.at("trial_id").get<int>();
      const std::string tag = trial_tag(entry.subject, entry.session, entry.trial_id);

      if (!seen_trials.insert({entry.subject, entry.session, entry.trial_id}).second) {
        add_issue(result, ErrorCode::DuplicateTrialId, tag + " appears more than once");
      }
      if (entry.session < 0 || entry.session >= desc.sessions_per_subject) {
        add_issue(result, ErrorCode::InvalidConfig,
                  tag + ": session out of range [0, " +
                      std::to_string(desc.sessions_per_subject) + ")");
      }

      const json& label = t.at("label");
      if (desc.label_scheme.source == LabelSource::ThresholdedRating) {
        if (!label.is_number()) {
          add_issue(result, ErrorCode::UnknownLabel,
                    tag + ": thresholded schemes need a numeric rating");
        } else {
          entry.raw_rating = label.get<double>();
          entry.label = desc.label_scheme.resolve_rating(entry.raw_rating);
        }
      } else if (label.is_string()) {
        entry.label = desc.label_scheme.index_of(label.get<std::string>());
        if (entry.label < 0) {
          add_issue(result, ErrorCode::UnknownLabel,
                    tag + ": label '" + label.get<std::string>() +
                        "' is not in the scheme's class list");
        }
      } else if (label.is_number_integer()) {
        entry.label = label.get<int>();
        if (entry.label < 0 || entry.label >= desc.label_scheme.n_classes()) {
          add_issue(result, ErrorCode::UnknownLabel,
                    tag + ": class index " + std::to_string(entry.label) + " out of range");
        }
      } else {
        add_issue(result, ErrorCode::UnknownLabel, tag + ": unsupported label type");
      }

      if (t.contains("signals")) {
        for (const auto& [key, value] : t.at("signals").items()) {
          entry.signal_paths[key] = value.get<std::string>();
        }
      }
      if (t.contains("baselines")) {
        for (const auto& [key, value] : t.at("baselines").items()) {
          entry.baseline_paths[key] = value.get<std::string>();
        }
      }
      desc.trials.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    add_issue(result, ErrorCode::InvalidConfig,
              std::string("manifest schema violation: ") + e.what());
    return result;
  } catch (const Error& e) {
    add_issue(result, e.code(), e.what());
    return result;
  }

  // Subjects lacking a declared modality in every trial are dropped (logged);
  // a subject with the modality in only some trials is an error instead.
  std::set<std::string> all_subjects;
  for (const TrialEntry& t : desc.trials) all_subjects.insert(t.subject);

  std::set<std::string> dropped;
  for (const std::string& subject : all_subjects) {
    for (const Modality& m : desc.modalities) {
      int with = 0, without = 0;
      for (const TrialEntry& t : desc.trials) {
        if (t.subject != subject) continue;
        (t.signal_paths.count(m.key()) > 0 ? with : without) += 1;
      }
      if (with == 0 && without > 0) {
        dropped.insert(subject);
        desc.notes.push_back("dropped subject '" + subject + "': no '" + m.key() +
                             "' signals (modality declared by the dataset)");
      } else if (with > 0 && without > 0) {
        add_issue(result, ErrorCode::MissingModality,
                  "subject '" + subject + "' has '" + m.key() +
                      "' signals for only some trials");
      }
    }
  }
  if (!dropped.empty()) {
    std::vector<TrialEntry> kept;
    kept.reserve(desc.trials.size());
    for (TrialEntry& t : desc.trials) {
      if (dropped.count(t.subject) == 0) kept.push_back(std::move(t));
    }
    desc.trials = std::move(kept);
  }

  desc.subjects.clear();
  for (const std::string& s : all_subjects) {
    if (dropped.count(s) == 0) desc.subjects.push_back(s);
  }
  std::sort(desc.subjects.begin(), desc.subjects.end());

  if (desc.trials.empty()) {
    add_issue(result, ErrorCode::EmptySession, "manifest resolves to zero usable trials");
  }

  // Every (subject, session) must hold at least one trial.
  for (const std::string& subject : desc.subjects) {
    for (int session = 0; session < desc.sessions_per_subject; ++session) {
      const bool any = std::any_of(desc.trials.begin(), desc.trials.end(),
                                   [&](const TrialEntry& t) {
                                     return t.subject == subject && t.session == session;
                                   });
      if (!any) {
        add_issue(result, ErrorCode::EmptySession,
                  "empty session: subject '" + subject + "' session " +
                      std::to_string(session) + " has no trials");
      }
    }
  }

  // File-level checks.
  for (const TrialEntry& t : desc.trials) {
    const std::string tag = trial_tag(t.subject, t.session, t.trial_id);
    for (const auto& [key, rel] : t.signal_paths) {
      const Modality* modality = desc.find_modality(key);
      if (modality == nullptr) {
        add_issue(result, ErrorCode::MissingModality,
                  tag + ": signal for undeclared modality '" + key + "'");
        continue;
      }
      check_signal_shape(result, desc.root / rel, *modality, tag, "signal");
    }
    for (const auto& [key, rel] : t.baseline_paths) {
      const Modality* modality = desc.find_modality(key);
      if (modality == nullptr) {
        add_issue(result, ErrorCode::MissingModality,
                  tag + ": baseline for undeclared modality '" + key + "'");
        continue;
      }
      check_signal_shape(result, desc.root / rel, *modality, tag, "baseline");
    }
  }

  std::sort(desc.trials.begin(), desc.trials.end(),
            [](const TrialEntry& a, const TrialEntry& b) {
              return std::tie(a.subject, a.session, a.trial_id) <
                     std::tie(b.subject, b.session, b.trial_id);
            });
  return result;
}

std::string serialize_manifest(const DatasetDescriptor& desc) {
  json doc;
  doc["dataset_name"] = desc.dataset_name;
  doc["sessions_per_subject"] = desc.sessions_per_subject;

  json scheme;
  scheme["name"] = desc.label_scheme.name;
  scheme["classes"] = desc.label_scheme.classes;
  scheme["source"] = desc.label_scheme.source == LabelSource::DiscreteStimulus
                         ? "discrete_stimulus"
                         : "thresholded_rating";
  if (desc.label_scheme.source == LabelSource::ThresholdedRating) {
    scheme["threshold"] = desc.label_scheme.threshold;
  }
  doc["label_scheme"] = scheme;

  doc["modalities"] = json::array();
  for (const Modality& m : desc.modalities) {
    json mj;
    mj["kind"] = modality_kind_name(m.kind);
    mj["channels"] = m.channel_names;
    mj["sample_rate_hz"] = m.sample_rate_hz;
    if (m.kind == ModalityKind::EyeMovement) {
      mj["payload"] = m.eye_payload == EyePayload::RawTracking ? "raw_tracking"
                                                               : "precomputed_features";
    }
    doc["modalities"].push_back(mj);
  }

  doc["trials"] = json::array();
  for (const TrialEntry& t : desc.trials) {
    json tj;
    tj["subject"] = t.subject;
    tj["session"] = t.session;
    tj["trial_id"] = t.trial_id;
    if (desc.label_scheme.source == LabelSource::ThresholdedRating) {
      tj["label"] = t.raw_rating;
    } else {
      tj["label"] = desc.label_scheme.classes[static_cast<std::size_t>(t.label)];
    }
    tj["signals"] = t.signal_paths;
    if (!t.baseline_paths.empty()) tj["baselines"] = t.baseline_paths;
    doc["trials"].push_back(tj);
  }
  return doc.dump(2) + "\n";
}

Trial load_trial(const DatasetDescriptor& desc, const TrialEntry& entry) {
  Trial trial;
  trial.trial_id = entry.trial_id;
  trial.label = entry.label;
  trial.raw_rating = entry.raw_rating;

  for (const auto& [key, rel] : entry.signal_paths) {
    const Modality* modality = desc.find_modality(key);
    if (modality == nullptr) {
      throw Error(ErrorCode::MissingModality, "undeclared modality '" + key + "'");
    }
    const std::filesystem::path full = desc.root / rel;
    if (modality->kind == ModalityKind::EyeMovement &&
        modality->eye_payload == EyePayload::RawTracking) {
      trial.eye_stream = read_eye_csv(full);
    } else {
      trial.signals[key] = read_signal_file(full).cast<double>();
    }
  }
  for (const auto& [key, rel] : entry.baseline_paths) {
    trial.baselines[key] = read_signal_file(desc.root / rel).cast<double>();
  }
  return trial;
}

RecordingSet load_recording_set(const DatasetDescriptor& desc) {
  RecordingSet set;
  set.dataset_name = desc.dataset_name;
  set.subjects = desc.subjects;
  set.sessions_per_subject = desc.sessions_per_subject;
  set.label_scheme = desc.label_scheme;
  set.modalities = desc.modalities;
  for (const TrialEntry& entry : desc.trials) {
    set.trials[{entry.subject, entry.session}].push_back(load_trial(desc, entry));
  }
  return set;
}

}  // namespace emobench
