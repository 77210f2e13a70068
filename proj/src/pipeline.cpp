#include "emobench/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "emobench/aux_features.hpp"
#include "emobench/cca.hpp"
#include "emobench/container.hpp"
#include "emobench/metrics.hpp"

namespace emobench {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::MissingFile, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return std::move(buf).str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw Error(ErrorCode::IoFailure, "write failed for '" + path.string() + "'");
}

json preproc_to_json(const PreprocConfig& p) {
  json bands = json::array();
  for (const FrequencyBand& b : p.bands) {
    bands.push_back({{"name", b.name}, {"low_hz", b.low_hz}, {"high_hz", b.high_hz}});
  }
  return json{{"bandpass_low_hz", p.bandpass_low_hz},
              {"bandpass_high_hz", p.bandpass_high_hz},
              {"filter_order", p.filter_order},
              {"bands", bands},
              {"window_seconds", p.window_seconds},
              {"pca_enabled", p.pca_enabled},
              {"pca_kurtosis_threshold", p.pca_kurtosis_threshold},
              {"pca_scope", p.pca_scope == PcaScope::Trial ? "trial" : "session"},
              {"lds", {{"enabled", p.lds.enabled},
                       {"process_var_ratio", p.lds.process_var_ratio},
                       {"iterations", p.lds.iterations}}}};
}

PreprocConfig preproc_from_json(const json& j) {
  PreprocConfig p;
  p.bandpass_low_hz = j.value("bandpass_low_hz", p.bandpass_low_hz);
  p.bandpass_high_hz = j.value("bandpass_high_hz", p.bandpass_high_hz);
  p.filter_order = j.value("filter_order", p.filter_order);
  p.window_seconds = j.value("window_seconds", p.window_seconds);
  p.pca_enabled = j.value("pca_enabled", p.pca_enabled);
  p.pca_kurtosis_threshold = j.value("pca_kurtosis_threshold", p.pca_kurtosis_threshold);
  const std::string scope = j.value("pca_scope", "trial");
  if (scope == "trial") {
    p.pca_scope = PcaScope::Trial;
  } else if (scope == "session") {
    p.pca_scope = PcaScope::Session;
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown pca_scope '" + scope + "'");
  }
  if (j.contains("lds")) {
    const json& l = j.at("lds");
    p.lds.enabled = l.value("enabled", p.lds.enabled);
    p.lds.process_var_ratio = l.value("process_var_ratio", p.lds.process_var_ratio);
    p.lds.iterations = l.value("iterations", p.lds.iterations);
  }
  if (j.contains("bands")) {
    p.bands.clear();
    for (const json& b : j.at("bands")) {
      p.bands.push_back({b.at("name").get<std::string>(), b.at("low_hz").get<double>(),
                         b.at("high_hz").get<double>()});
    }
  }
  return p;
}

// Modalities the pipeline trains on, EEG first.
std::vector<std::string> required_modalities(const DatasetDescriptor& descriptor) {
  std::vector<std::string> keys;
  if (descriptor.find_modality("eeg") != nullptr) keys.push_back("eeg");
  for (const Modality& m : descriptor.modalities) {
    if (m.key() != "eeg") keys.push_back(m.key());
  }
  return keys;
}

std::string unit_id(const std::string& subject, int session) {
  return subject + "/ses" + std::to_string(session);
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& config_path) {
  json doc;
  {
    std::ifstream f(config_path);
    if (!f) {
      throw Error(ErrorCode::InvalidConfig,
                  "config '" + config_path.string() + "' does not exist");
    }
    try {
      doc = json::parse(f);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
    }
  }

  RunConfig config;
  const std::filesystem::path base = config_path.parent_path();
  auto resolve = [&](const std::string& rel) {
    const std::filesystem::path p(rel);
    return p.is_absolute() ? p : base / p;
  };

  try {
    config.dataset_manifest = resolve(doc.at("dataset").get<std::string>());
    if (doc.contains("output_dir")) config.output_dir = resolve(doc.at("output_dir").get<std::string>());
    if (doc.contains("cache_dir")) config.cache_dir = resolve(doc.at("cache_dir").get<std::string>());
    config.task = task_from_name(doc.value("task", "subject_dependent"));
    if (doc.contains("split")) {
      const json& s = doc.at("split");
      if (s.contains("ratio")) config.ratio = SplitRatio::parse(s.at("ratio").get<std::string>());
      config.stratify = s.value("stratify", true);
    }
    if (doc.contains("preproc")) config.preproc = preproc_from_json(doc.at("preproc"));
    config.fusion = doc.value("fusion", "concat");
    if (config.fusion != "concat" && config.fusion != "cca") {
      throw Error(ErrorCode::InvalidConfig, "unknown fusion mode '" + config.fusion + "'");
    }
    config.cca_components = doc.value("cca_components", config.cca_components);
    config.cca_ridge = doc.value("cca_ridge", config.cca_ridge);

    if (!doc.contains("models") || !doc.at("models").is_array() || doc.at("models").empty()) {
      throw Error(ErrorCode::InvalidConfig, "config needs at least one model");
    }
    std::set<std::string> names;
    for (const json& m : doc.at("models")) {
      ModelSpec spec;
      spec.id = m.at("id").get<std::string>();
      if (spec.id != "linear" && spec.id != "mlp" && spec.id != "adapter") {
        throw Error(ErrorCode::InvalidConfig, "unknown model id '" + spec.id + "'");
      }
      spec.name = m.value("name", spec.id);
      if (!names.insert(spec.name).second) {
        throw Error(ErrorCode::InvalidConfig, "duplicate model name '" + spec.name + "'");
      }
      spec.train.epochs = m.value("epochs", spec.id == "mlp" ? 80 : 200);
      spec.train.learning_rate = m.value("learning_rate", spec.id == "mlp" ? 0.05 : 0.2);
      spec.train.l2 = m.value("l2", 1e-4);
      spec.train.init_scale = m.value("init_scale", 0.01);
      spec.train.batch_size = m.value("batch_size", spec.id == "mlp" ? 32 : 0);
      spec.train.standardize = m.value("standardize", true);
      if (m.contains("hidden")) spec.train.hidden = m.at("hidden").get<std::vector<int>>();
      if (spec.id == "mlp" && spec.train.hidden.empty()) spec.train.hidden = {32};
      if (spec.id == "adapter") {
        if (!m.contains("command")) {
          throw Error(ErrorCode::InvalidConfig, "adapter models need a 'command'");
        }
        spec.adapter.command = m.at("command").get<std::string>();
        spec.adapter.timeout_seconds = m.value("timeout_seconds", 30.0);
      }
      config.models.push_back(std::move(spec));
    }

    if (doc.contains("seeds")) {
      config.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    }
    if (config.seeds.empty()) {
      throw Error(ErrorCode::InvalidConfig, "config needs at least one seed");
    }
    config.workers = doc.value("workers", 1);
    if (config.workers < 1) {
      throw Error(ErrorCode::InvalidConfig, "workers must be >= 1");
    }
    const std::string fmt = doc.value("format", "both");
    if (fmt == "csv") {
      config.format = ReportFormat::Csv;
    } else if (fmt == "md") {
      config.format = ReportFormat::Markdown;
    } else if (fmt == "both") {
      config.format = ReportFormat::Both;
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown report format '" + fmt + "'");
    }
    config.ratio.validate();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config schema violation: ") + e.what());
  }
  return config;
}

std::string normalized_config_json(const RunConfig& config) {
  json models = json::array();
  for (const ModelSpec& m : config.models) {
    json mj{{"id", m.id},
            {"name", m.name},
            {"epochs", m.train.epochs},
            {"learning_rate", m.train.learning_rate},
            {"l2", m.train.l2},
            {"init_scale", m.train.init_scale},
            {"batch_size", m.train.batch_size},
            {"standardize", m.train.standardize},
            {"hidden", m.train.hidden}};
    if (m.id == "adapter") {
      mj["command"] = m.adapter.command;
      mj["timeout_seconds"] = m.adapter.timeout_seconds;
    }
    models.push_back(mj);
  }
  const json doc{{"engine_version", kEngineVersion},
                 {"dataset", config.dataset_manifest.string()},
                 {"task", task_name(config.task)},
                 {"ratio", config.ratio.str()},
                 {"stratify", config.stratify},
                 {"preproc", preproc_to_json(config.preproc)},
                 {"fusion", config.fusion},
                 {"cca_components", config.cca_components},
                 {"cca_ridge", config.cca_ridge},
                 {"models", models},
                 {"seeds", config.seeds}};
  return doc.dump(2) + "\n";
}

std::vector<TrialKey> trial_keys(const DatasetDescriptor& descriptor) {
  std::vector<TrialKey> keys;
  keys.reserve(descriptor.trials.size());
  for (const TrialEntry& t : descriptor.trials) {
    keys.push_back({t.subject, t.session, t.trial_id, t.label});
  }
  return keys;
}

namespace {

// Loads just one modality of a trial (plus its baseline).
Trial load_trial_modality(const DatasetDescriptor& descriptor, const TrialEntry& entry,
                          const std::string& modality_key) {
  Trial trial;
  trial.trial_id = entry.trial_id;
  trial.label = entry.label;
  const auto sig_it = entry.signal_paths.find(modality_key);
  if (sig_it != entry.signal_paths.end()) {
    trial.signals[modality_key] =
        read_signal_file(descriptor.root / sig_it->second).cast<double>();
  }
  const auto base_it = entry.baseline_paths.find(modality_key);
  if (base_it != entry.baseline_paths.end()) {
    trial.baselines[modality_key] =
        read_signal_file(descriptor.root / base_it->second).cast<double>();
  }
  return trial;
}

// Sidecar-aware tensor cache. Values live in a container (feature_dim x
// windows), metadata in JSON next to it.
void save_tensor(const std::filesystem::path& base, const FeatureTensor& tensor,
                 double rate_hz) {
  write_container(base.string() + ".ebc",
                  MatrixF(tensor.values.transpose().cast<float>()), rate_hz);
  json meta{{"window_seconds", tensor.window_seconds},
            {"feature_names", tensor.feature_names},
            {"flagged_windows", tensor.flagged_windows},
            {"origin", {{"subject", tensor.origin.subject},
                        {"session", tensor.origin.session},
                        {"trial_id", tensor.origin.trial_id},
                        {"modality", tensor.origin.modality}}}};
  write_text(base.string() + ".json", meta.dump(2) + "\n");
}

FeatureTensor load_tensor(const std::filesystem::path& base) {
  FeatureTensor tensor;
  tensor.values = read_container(base.string() + ".ebc").cast<double>().transpose();
  const json meta = json::parse(slurp(base.string() + ".json"));
  tensor.window_seconds = meta.at("window_seconds").get<double>();
  tensor.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
  tensor.flagged_windows = meta.at("flagged_windows").get<std::vector<int>>();
  tensor.origin.subject = meta.at("origin").at("subject").get<std::string>();
  tensor.origin.session = meta.at("origin").at("session").get<int>();
  tensor.origin.trial_id = meta.at("origin").at("trial_id").get<int>();
  tensor.origin.modality = meta.at("origin").at("modality").get<std::string>();
  return tensor;
}

bool tensor_cached(const std::filesystem::path& base) {
  return std::filesystem::exists(base.string() + ".ebc") &&
         std::filesystem::exists(base.string() + ".json");
}

// Bookkeeping shared by the preprocessing workers.
struct PreprocContext {
  const RunConfig& config;
  const DatasetDescriptor& descriptor;
  std::string fingerprint;  // engine version + preproc config
  PreprocessStats* stats = nullptr;
  std::mutex stats_mutex{};

  std::filesystem::path cache_base(const TrialEntry& entry, const std::string& modality,
                                   const std::string& extra) const {
    std::string key = fingerprint;
    key += "|" + entry.subject + "|" + std::to_string(entry.session) + "|" +
           std::to_string(entry.trial_id) + "|" + modality + "|" + extra;
    const auto sig_it = entry.signal_paths.find(modality);
    if (sig_it != entry.signal_paths.end()) {
      key += "|" + std::to_string(fnv1a64(slurp(descriptor.root / sig_it->second)));
    }
    const auto base_it = entry.baseline_paths.find(modality);
    if (base_it != entry.baseline_paths.end()) {
      key += "|" + std::to_string(fnv1a64(slurp(descriptor.root / base_it->second)));
    }
    return config.resolved_cache_dir() / hex64(fnv1a64(key));
  }

  void note(bool hit) {
    if (stats == nullptr) return;
    std::lock_guard<std::mutex> lock(stats_mutex);
    (hit ? stats->cache_hits : stats->computed) += 1;
  }
};

// Trial-scope EEG tensor, consulting the cache.
FeatureTensor eeg_tensor_for_trial(PreprocContext& ctx, const TrialEntry& entry,
                                   const Modality& eeg) {
  const std::filesystem::path base = ctx.cache_base(entry, "eeg", "");
  if (tensor_cached(base)) {
    ctx.note(true);
  } else {
    const Trial trial = load_trial_modality(ctx.descriptor, entry, "eeg");
    FeatureTensor tensor = preprocess_eeg(trial, eeg, ctx.config.preproc);
    tensor.origin.subject = entry.subject;
    tensor.origin.session = entry.session;
    save_tensor(base, tensor, eeg.sample_rate_hz);
    ctx.note(false);
  }
  return load_tensor(base);
}

// Session-scope EEG tensors for a whole (subject, session) group. The cache
// key folds in every EEG file of the group, because each trial's features
// depend on its session mates through the shared PCA basis.
std::map<int, FeatureTensor> eeg_tensors_for_session(
    PreprocContext& ctx, const std::vector<const TrialEntry*>& group, const Modality& eeg) {
  std::string session_hash;
  for (const TrialEntry* entry : group) {
    const auto sig_it = entry->signal_paths.find("eeg");
    if (sig_it != entry->signal_paths.end()) {
      session_hash += std::to_string(fnv1a64(slurp(ctx.descriptor.root / sig_it->second)));
    }
    const auto base_it = entry->baseline_paths.find("eeg");
    if (base_it != entry->baseline_paths.end()) {
      session_hash += std::to_string(fnv1a64(slurp(ctx.descriptor.root / base_it->second)));
    }
  }

  std::vector<std::filesystem::path> bases;
  bool all_cached = true;
  for (const TrialEntry* entry : group) {
    bases.push_back(ctx.cache_base(*entry, "eeg", "session" + session_hash));
    if (!tensor_cached(bases.back())) all_cached = false;
  }

  if (!all_cached) {
    std::vector<Trial> trials;
    trials.reserve(group.size());
    for (const TrialEntry* entry : group) {
      trials.push_back(load_trial_modality(ctx.descriptor, *entry, "eeg"));
    }
    const std::vector<FeatureTensor> tensors =
        preprocess_eeg_session(trials, eeg, ctx.config.preproc);
    for (std::size_t i = 0; i < group.size(); ++i) {
      FeatureTensor tensor = tensors[i];
      tensor.origin.subject = group[i]->subject;
      tensor.origin.session = group[i]->session;
      save_tensor(bases[i], tensor, eeg.sample_rate_hz);
      ctx.note(false);
    }
  } else {
    for (std::size_t i = 0; i < group.size(); ++i) ctx.note(true);
  }

  std::map<int, FeatureTensor> out;
  for (std::size_t i = 0; i < group.size(); ++i) {
    out[group[i]->trial_id] = load_tensor(bases[i]);
  }
  return out;
}

// Non-EEG modalities for one trial; eeg_windows anchors eye-stream grids.
std::map<std::string, FeatureTensor> aux_tensors_for_trial(PreprocContext& ctx,
                                                           const TrialEntry& entry,
                                                           int eeg_windows) {
  std::map<std::string, FeatureTensor> tensors;
  for (const Modality& modality : ctx.descriptor.modalities) {
    const std::string key = modality.key();
    if (key == "eeg") continue;
    if (entry.signal_paths.find(key) == entry.signal_paths.end()) continue;
    const std::filesystem::path base =
        ctx.cache_base(entry, key, "grid" + std::to_string(eeg_windows));
    if (tensor_cached(base)) {
      ctx.note(true);
    } else {
      FeatureTensor tensor;
      const std::filesystem::path file = ctx.descriptor.root / entry.signal_paths.at(key);
      if (modality.kind == ModalityKind::Peripheral) {
        const Matrix signal = read_signal_file(file).cast<double>();
        tensor = peripheral_features(signal, modality.sample_rate_hz,
                                     ctx.config.preproc.window_seconds);
        tensor.feature_names = peripheral_feature_names(modality.channel_names);
      } else if (modality.kind == ModalityKind::EyeMovement &&
                 modality.eye_payload == EyePayload::RawTracking) {
        tensor = eye_features(read_eye_csv(file), ctx.config.preproc.window_seconds,
                              eeg_windows);
      } else if (modality.kind == ModalityKind::EyeMovement) {
        const Matrix features = read_signal_file(file).cast<double>().transpose();
        tensor = precomputed_eye_passthrough(features, eeg_windows,
                                             ctx.config.preproc.window_seconds);
      } else {
        throw Error(ErrorCode::MissingModality, "no extractor for modality '" + key + "'");
      }
      tensor.origin.subject = entry.subject;
      tensor.origin.session = entry.session;
      tensor.origin.trial_id = entry.trial_id;
      tensor.origin.modality = key;
      save_tensor(base, tensor, modality.sample_rate_hz);
      ctx.note(false);
    }
    tensors[key] = load_tensor(base);
  }
  return tensors;
}

}  // namespace

FeatureStore preprocess_stage(const RunConfig& config, const DatasetDescriptor& descriptor,
                              PreprocessStats* stats) {
  const Modality* eeg = descriptor.find_modality("eeg");
  if (eeg != nullptr) config.preproc.validate(eeg->sample_rate_hz);

  std::error_code ec;
  std::filesystem::create_directories(config.resolved_cache_dir(), ec);

  PreprocContext ctx{config, descriptor,
                     std::string(kEngineVersion) + preproc_to_json(config.preproc).dump(),
                     stats};

  // Work units: single trials for trial-scope PCA, whole (subject, session)
  // groups when the PCA basis is shared across a session.
  const bool session_scope =
      eeg != nullptr && config.preproc.pca_enabled &&
      config.preproc.pca_scope == PcaScope::Session;
  std::vector<std::vector<std::size_t>> jobs;
  if (session_scope) {
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < descriptor.trials.size(); ++i) {
      groups[{descriptor.trials[i].subject, descriptor.trials[i].session}].push_back(i);
    }
    for (auto& [key, members] : groups) jobs.push_back(std::move(members));
  } else {
    for (std::size_t i = 0; i < descriptor.trials.size(); ++i) jobs.push_back({i});
  }

  std::vector<std::map<std::string, FeatureTensor>> results(descriptor.trials.size());
  std::vector<std::string> failures(descriptor.trials.size());
  std::atomic<std::size_t> next{0};

  auto run_job = [&](const std::vector<std::size_t>& members) {
    std::map<int, FeatureTensor> session_eeg;
    if (session_scope) {
      std::vector<const TrialEntry*> group;
      for (std::size_t i : members) group.push_back(&descriptor.trials[i]);
      session_eeg = eeg_tensors_for_session(ctx, group, *eeg);
    }
    for (std::size_t i : members) {
      const TrialEntry& entry = descriptor.trials[i];
      int eeg_windows = -1;
      if (eeg != nullptr) {
        FeatureTensor tensor = session_scope ? std::move(session_eeg.at(entry.trial_id))
                                             : eeg_tensor_for_trial(ctx, entry, *eeg);
        eeg_windows = tensor.n_windows();
        results[i]["eeg"] = std::move(tensor);
      }
      std::map<std::string, FeatureTensor> aux = aux_tensors_for_trial(ctx, entry, eeg_windows);
      for (auto& [key, tensor] : aux) results[i][key] = std::move(tensor);
    }
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      try {
        run_job(jobs[j]);
      } catch (const std::exception& e) {
        failures[jobs[j].front()] = e.what();
      }
    }
  };

  const int n_workers =
      std::max(1, std::min<int>(config.workers, static_cast<int>(jobs.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }

  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i].empty()) {
      const TrialEntry& t = descriptor.trials[i];
      throw Error(ErrorCode::IoFailure,
                  "preprocessing failed for " + t.subject + "/ses" +
                      std::to_string(t.session) + "/t" + std::to_string(t.trial_id) + ": " +
                      failures[i]);
    }
  }

  FeatureStore store;
  for (std::size_t i = 0; i < descriptor.trials.size(); ++i) {
    const TrialEntry& t = descriptor.trials[i];
    const FeatureStore::Key key{t.subject, t.session, t.trial_id};
    store.tensors[key] = std::move(results[i]);
    store.labels[key] = t.label;
  }
  return store;
}

SplitPlan split_stage(const RunConfig& config, const DatasetDescriptor& descriptor,
                      std::uint64_t seed, std::vector<std::string>* warnings) {
  const std::vector<TrialKey> keys = trial_keys(descriptor);
  if (config.task == Task::SubjectDependent) {
    return split_sd(keys, config.ratio, seed, config.stratify, warnings);
  }
  return split_si(keys, config.ratio, seed);
}

namespace {

struct FusedSplit {
  Matrix train_x, val_x, test_x;
  std::vector<int> train_y, val_y, test_y;
  std::vector<SampleRef> train_refs, val_refs, test_refs;
};

Matrix concat_columns(const MaterializedSet& set, const std::vector<std::string>& keys) {
  Eigen::Index dim = 0;
  for (const std::string& k : keys) dim += set.features.at(k).cols();
  Matrix out(set.size(), dim);
  Eigen::Index at = 0;
  for (const std::string& k : keys) {
    const Matrix& f = set.features.at(k);
    out.middleCols(at, f.cols()) = f;
    at += f.cols();
  }
  return out;
}

FusedSplit fuse(const RunConfig& config, const MaterializedSplit& split,
                const std::vector<std::string>& keys) {
  FusedSplit out;
  out.train_y = split.train.labels;
  out.val_y = split.val.labels;
  out.test_y = split.test.labels;
  out.train_refs = split.train.refs;
  out.val_refs = split.val.refs;
  out.test_refs = split.test.refs;

  if (config.fusion == "cca") {
    if (keys.size() != 2) {
      throw Error(ErrorCode::InvalidConfig,
                  "cca fusion needs exactly 2 modalities, dataset has " +
                      std::to_string(keys.size()));
    }
    const Matrix& ax = split.train.features.at(keys[0]);
    const Matrix& ay = split.train.features.at(keys[1]);
    const int k = std::min<int>(config.cca_components,
                                static_cast<int>(std::min(ax.cols(), ay.cols())));
    const CcaResult cca = cca_fuse(ax, ay, k, config.cca_ridge);
    out.train_x = cca_project(cca, ax, ay);
    out.val_x = split.val.size() > 0
                    ? cca_project(cca, split.val.features.at(keys[0]),
                                  split.val.features.at(keys[1]))
                    : Matrix(0, 2 * k);
    out.test_x = split.test.size() > 0
                     ? cca_project(cca, split.test.features.at(keys[0]),
                                   split.test.features.at(keys[1]))
                     : Matrix(0, 2 * k);
  } else {
    out.train_x = concat_columns(split.train, keys);
    out.val_x = concat_columns(split.val, keys);
    out.test_x = concat_columns(split.test, keys);
  }
  return out;
}

// Rows of a fused set belonging to one (subject, session) unit.
struct UnitSlice {
  Matrix x;
  std::vector<int> y;
};

UnitSlice slice_unit(const Matrix& x, const std::vector<int>& y,
                     const std::vector<SampleRef>& refs, const std::string& subject,
                     int session) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].subject == subject && refs[i].session == session) {
      rows.push_back(static_cast<Eigen::Index>(i));
    }
  }
  UnitSlice slice;
  slice.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  slice.y.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    slice.x.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    slice.y.push_back(y[static_cast<std::size_t>(rows[i])]);
  }
  return slice;
}

// Containers for the adapter exchange: features as dim x n, labels as 1 x n.
void write_exchange(const std::filesystem::path& dir, const std::string& stem,
                    const Matrix& x, const std::vector<int>* y) {
  write_container(dir / (stem + "_features.ebc"), MatrixF(x.transpose().cast<float>()), 0.0);
  if (y != nullptr) {
    MatrixF labels(1, static_cast<Eigen::Index>(y->size()));
    for (std::size_t i = 0; i < y->size(); ++i) {
      labels(0, static_cast<Eigen::Index>(i)) = static_cast<float>((*y)[i]);
    }
    write_container(dir / (stem + "_labels.ebc"), labels, 0.0);
  }
}

UnitPrediction run_model_on_unit(const RunConfig& config, const ModelSpec& spec,
                                 const std::string& unit, std::uint64_t seed,
                                 const UnitSlice& train, const UnitSlice& val,
                                 const UnitSlice& test, int n_classes) {
  UnitPrediction up;
  up.method = spec.name;
  up.seed = seed;
  up.unit = unit;
  up.labels = test.y;

  TrainConfig train_config = spec.train;
  train_config.seed = seed;

  if (spec.id == "linear") {
    const TrainResult r =
        train_linear_softmax(train.x, train.y, val.x, val.y, n_classes, train_config);
    up.selected_epoch = r.run.selected_epoch;
    up.epochs = r.run.epochs;
    up.predicted = r.model.predict(r.scaler.apply(test.x));
  } else if (spec.id == "mlp") {
    const TrainResult r = train_mlp(train.x, train.y, val.x, val.y, n_classes, train_config);
    up.selected_epoch = r.run.selected_epoch;
    up.epochs = r.run.epochs;
    up.predicted = r.model.predict(r.scaler.apply(test.x));
  } else {  // adapter
    std::string unit_dir = unit;
    std::replace(unit_dir.begin(), unit_dir.end(), '/', '_');
    const std::filesystem::path dir = config.output_dir / "adapter_work" / spec.name /
                                      ("seed" + std::to_string(seed)) / unit_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    write_exchange(dir, "train", train.x, &train.y);
    write_exchange(dir, "val", val.x, &val.y);
    write_exchange(dir, "test", test.x, nullptr);  // test labels never leave the engine

    AdapterPaths paths;
    paths.train_features = dir / "train_features.ebc";
    paths.train_labels = dir / "train_labels.ebc";
    paths.val_features = dir / "val_features.ebc";
    paths.val_labels = dir / "val_labels.ebc";
    paths.test_features = dir / "test_features.ebc";

    WireCapture capture;
    const AdapterRunResult r =
        adapter_run(spec.adapter, config.task, n_classes, static_cast<int>(train.x.cols()),
                    seed, paths, static_cast<int>(test.y.size()), &capture);
    up.selected_epoch = r.run.selected_epoch;
    up.epochs = r.run.epochs;
    up.predicted = r.predictions;

    std::ostringstream wire;
    for (const std::string& line : capture.sent) wire << "> " << line << "\n";
    for (const std::string& line : capture.received) wire << "< " << line << "\n";
    write_text(dir / "wire.log", wire.str());
  }
  return up;
}

}  // namespace

std::vector<UnitPrediction> train_stage(const RunConfig& config,
                                        const DatasetDescriptor& descriptor,
                                        const FeatureStore& store, const SplitPlan& plan,
                                        std::uint64_t seed) {
  const std::vector<std::string> keys = required_modalities(descriptor);
  const MaterializedSplit split = materialize(plan, store, keys);
  const FusedSplit fused = fuse(config, split, keys);
  const int n_classes = descriptor.label_scheme.n_classes();

  // One job per (model, unit); results land in fixed slots so the output
  // order does not depend on scheduling.
  struct Job {
    const ModelSpec* spec;
    std::string unit;
    UnitSlice train, val, test;
  };
  std::vector<Job> jobs;
  for (const ModelSpec& spec : config.models) {
    if (config.task == Task::SubjectIndependent) {
      jobs.push_back({&spec,
                      "fold",
                      {fused.train_x, fused.train_y},
                      {fused.val_x, fused.val_y},
                      {fused.test_x, fused.test_y}});
    } else {
      std::set<std::pair<std::string, int>> units;
      for (const PlanUnit& u : plan.units) units.insert({u.subject, u.session});
      for (const auto& [subject, session] : units) {
        jobs.push_back(
            {&spec, unit_id(subject, session),
             slice_unit(fused.train_x, fused.train_y, fused.train_refs, subject, session),
             slice_unit(fused.val_x, fused.val_y, fused.val_refs, subject, session),
             slice_unit(fused.test_x, fused.test_y, fused.test_refs, subject, session)});
      }
    }
  }

  std::vector<UnitPrediction> predictions(jobs.size());
  std::vector<std::string> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      try {
        predictions[j] = run_model_on_unit(config, *jobs[j].spec, jobs[j].unit, seed,
                                           jobs[j].train, jobs[j].val, jobs[j].test,
                                           n_classes);
      } catch (const std::exception& e) {
        failures[j] = e.what();
      }
    }
  };

  const int n_workers =
      std::max(1, std::min<int>(config.workers, static_cast<int>(jobs.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (!failures[j].empty()) {
      throw Error(ErrorCode::IoFailure, "training failed for " + jobs[j].spec->name + " on " +
                                            jobs[j].unit + ": " + failures[j]);
    }
  }
  return predictions;
}

EvalReport eval_stage(const RunConfig& config, const DatasetDescriptor& descriptor,
                      const std::vector<UnitPrediction>& predictions) {
  EvalReport report;
  report.dataset = descriptor.dataset_name;
  report.task = config.task;
  report.aggregation_unit =
      config.task == Task::SubjectDependent ? "subject_session" : "fold";

  const int n_classes = descriptor.label_scheme.n_classes();
  for (const ModelSpec& spec : config.models) {
    MethodResult method;
    method.method = spec.name;
    for (const UnitPrediction& up : predictions) {
      if (up.method != spec.name) continue;
      const ConfusionResult r = confusion_metrics(up.predicted, up.labels, n_classes);
      method.units.push_back({up.unit, up.seed, r.metrics});
    }
    std::sort(method.units.begin(), method.units.end(),
              [](const UnitMetric& a, const UnitMetric& b) {
                return std::tie(a.unit, a.seed) < std::tie(b.unit, b.seed);
              });
    report.methods.push_back(std::move(method));
  }
  return report;
}

void save_predictions(const std::filesystem::path& path, const RunConfig& config,
                      const DatasetDescriptor& descriptor,
                      const std::vector<UnitPrediction>& predictions) {
  json entries = json::array();
  for (const UnitPrediction& up : predictions) {
    entries.push_back({{"method", up.method},
                       {"seed", up.seed},
                       {"unit", up.unit},
                       {"selected_epoch", up.selected_epoch},
                       {"predicted", up.predicted},
                       {"labels", up.labels}});
  }
  const json doc{{"engine_version", kEngineVersion},
                 {"dataset", descriptor.dataset_name},
                 {"task", task_name(config.task)},
                 {"entries", entries}};
  write_text(path, doc.dump(2) + "\n");
}

std::vector<UnitPrediction> load_predictions(const std::filesystem::path& path) {
  const json doc = json::parse(slurp(path));
  std::vector<UnitPrediction> predictions;
  for (const json& e : doc.at("entries")) {
    UnitPrediction up;
    up.method = e.at("method").get<std::string>();
    up.seed = e.at("seed").get<std::uint64_t>();
    up.unit = e.at("unit").get<std::string>();
    up.selected_epoch = e.at("selected_epoch").get<int>();
    up.predicted = e.at("predicted").get<std::vector<int>>();
    up.labels = e.at("labels").get<std::vector<int>>();
    predictions.push_back(std::move(up));
  }
  return predictions;
}

void save_model_runs(const std::filesystem::path& path,
                     const std::vector<UnitPrediction>& predictions) {
  json runs = json::array();
  for (const UnitPrediction& up : predictions) {
    json epochs = json::array();
    for (const EpochRecord& e : up.epochs) {
      epochs.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_accuracy", e.val_accuracy},
                        {"val_macro_f1", e.val_macro_f1}});
    }
    runs.push_back({{"method", up.method},
                    {"seed", up.seed},
                    {"unit", up.unit},
                    {"selected_epoch", up.selected_epoch},
                    {"epochs", epochs}});
  }
  write_text(path, json{{"engine_version", kEngineVersion}, {"runs", runs}}.dump(2) + "\n");
}

void save_metrics(const std::filesystem::path& path, const EvalReport& report) {
  json methods = json::array();
  for (const MethodResult& m : report.methods) {
    json units = json::array();
    for (const UnitMetric& u : m.units) {
      units.push_back({{"unit", u.unit},
                       {"seed", u.seed},
                       {"accuracy", u.metrics.accuracy},
                       {"macro_f1", u.metrics.macro_f1}});
    }
    methods.push_back({{"method", m.method}, {"units", units}});
  }
  const json doc{{"dataset", report.dataset},
                 {"task", task_name(report.task)},
                 {"aggregation_unit", report.aggregation_unit},
                 {"methods", methods}};
  write_text(path, doc.dump(2) + "\n");
}

EvalReport load_metrics(const std::filesystem::path& path) {
  const json doc = json::parse(slurp(path));
  EvalReport report;
  report.dataset = doc.at("dataset").get<std::string>();
  report.task = task_from_name(doc.at("task").get<std::string>());
  report.aggregation_unit = doc.at("aggregation_unit").get<std::string>();
  for (const json& m : doc.at("methods")) {
    MethodResult method;
    method.method = m.at("method").get<std::string>();
    for (const json& u : m.at("units")) {
      UnitMetric unit;
      unit.unit = u.at("unit").get<std::string>();
      unit.seed = u.at("seed").get<std::uint64_t>();
      unit.metrics.accuracy = u.at("accuracy").get<double>();
      unit.metrics.macro_f1 = u.at("macro_f1").get<double>();
      method.units.push_back(std::move(unit));
    }
    report.methods.push_back(std::move(method));
  }
  return report;
}

std::vector<std::filesystem::path> run_benchmark(const RunConfig& config) {
  const ValidationResult validation = validate_manifest(config.dataset_manifest);
  if (!validation.ok()) {
    std::string message = "dataset manifest is invalid:";
    for (const ValidationIssue& issue : validation.issues) {
      message += "\n  [" + std::string(error_code_name(issue.code)) + "] " + issue.message;
    }
    throw Error(ErrorCode::InvalidConfig, message);
  }
  const DatasetDescriptor& descriptor = validation.descriptor;
  for (const std::string& note : descriptor.notes) {
    std::cerr << "note: " << note << "\n";
  }

  PreprocessStats stats;
  const FeatureStore store = preprocess_stage(config, descriptor, &stats);
  std::cerr << "preprocess: " << stats.computed << " computed, " << stats.cache_hits
            << " cache hits\n";

  std::vector<UnitPrediction> predictions;
  for (std::uint64_t seed : config.seeds) {
    std::vector<std::string> warnings;
    const SplitPlan plan = split_stage(config, descriptor, seed, &warnings);
    for (const std::string& w : warnings) std::cerr << "note: " << w << "\n";
    write_text(config.output_dir / ("plan_" + std::string(task_name(config.task)) +
                                    "_seed" + std::to_string(seed) + ".txt"),
               serialize_plan(plan));
    std::vector<UnitPrediction> seed_predictions =
        train_stage(config, descriptor, store, plan, seed);
    predictions.insert(predictions.end(), seed_predictions.begin(), seed_predictions.end());
  }

  save_predictions(config.output_dir / "predictions.json", config, descriptor, predictions);
  save_model_runs(config.output_dir / "model_runs.json", predictions);
  const EvalReport report = eval_stage(config, descriptor, predictions);
  save_metrics(config.output_dir / "metrics.json", report);
  std::vector<std::filesystem::path> emitted =
      emit_report(report, config.output_dir, config.format);

  const std::string config_echo = normalized_config_json(config);
  const json manifest{{"engine_version", kEngineVersion},
                      {"config_hash", hex64(fnv1a64(config_echo))},
                      {"dataset_name", descriptor.dataset_name},
                      {"task", task_name(config.task)},
                      {"seeds", config.seeds},
                      {"n_prediction_units", predictions.size()}};
  write_text(config.output_dir / "run_manifest.json", manifest.dump(2) + "\n");
  write_text(config.output_dir / "config_normalized.json", config_echo);

  return emitted;
}

}  // namespace emobench
