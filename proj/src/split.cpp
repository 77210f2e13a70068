#include "emobench/split.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "emobench/rng.hpp"

namespace emobench {

void SplitRatio::validate() const {
  if (train < 1 || val < 1 || test < 1) {
    throw Error(ErrorCode::InvalidConfig,
                "split ratio parts must be positive integers, got " + str());
  }
}

SplitRatio SplitRatio::parse(const std::string& text) {
  SplitRatio r;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> r.train >> c1 >> r.val >> c2 >> r.test) || c1 != ':' || c2 != ':') {
    throw Error(ErrorCode::InvalidConfig, "cannot parse split ratio '" + text + "'");
  }
  r.validate();
  return r;
}

std::string SplitRatio::str() const {
  return std::to_string(train) + ":" + std::to_string(val) + ":" + std::to_string(test);
}

const char* task_name(Task task) {
  return task == Task::SubjectDependent ? "subject_dependent" : "subject_independent";
}

Task task_from_name(const std::string& name) {
  if (name == "subject_dependent" || name == "sd") return Task::SubjectDependent;
  if (name == "subject_independent" || name == "si") return Task::SubjectIndependent;
  throw Error(ErrorCode::InvalidConfig, "unknown task '" + name + "'");
}

const char* split_set_name(SplitSet set) {
  switch (set) {
    case SplitSet::Train: return "train";
    case SplitSet::Val: return "val";
    case SplitSet::Test: return "test";
  }
  return "?";
}

namespace {

SplitSet split_set_from_name(const std::string& name) {
  if (name == "train") return SplitSet::Train;
  if (name == "val") return SplitSet::Val;
  if (name == "test") return SplitSet::Test;
  throw Error(ErrorCode::InvalidConfig, "unknown split set '" + name + "'");
}

// floor(k*val/sum) and floor(k*test/sum); the remainder stays in train.
void set_sizes(int k, const SplitRatio& ratio, int& n_train, int& n_val, int& n_test) {
  n_val = k * ratio.val / ratio.sum();
  n_test = k * ratio.test / ratio.sum();
  n_train = k - n_val - n_test;
}

void sort_units(std::vector<PlanUnit>& units) {
  std::sort(units.begin(), units.end(), [](const PlanUnit& a, const PlanUnit& b) {
    return std::tie(a.subject, a.session, a.trial_id) <
           std::tie(b.subject, b.session, b.trial_id);
  });
}

// Assigns shuffled indices to sets in train/val/test block order.
void assign_blocks(const std::vector<std::size_t>& order, int n_train, int n_val,
                   std::vector<SplitSet>& sets) {
  for (std::size_t i = 0; i < order.size(); ++i) {
    SplitSet s = SplitSet::Test;
    if (i < static_cast<std::size_t>(n_train)) {
      s = SplitSet::Train;
    } else if (i < static_cast<std::size_t>(n_train + n_val)) {
      s = SplitSet::Val;
    }
    sets[order[i]] = s;
  }
}

}  // namespace

SplitPlan split_sd(const std::vector<TrialKey>& trials, const SplitRatio& ratio,
                   std::uint64_t seed, bool stratify, std::vector<std::string>* warnings) {
  ratio.validate();

  // Group by (subject, session), preserving deterministic key order.
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    groups[{trials[i].subject, trials[i].session}].push_back(i);
  }

  SplitPlan plan;
  plan.task = Task::SubjectDependent;
  plan.ratio = ratio;
  plan.seed = seed;

  std::uint64_t group_index = 0;
  for (auto& [key, members] : groups) {
    const int k = static_cast<int>(members.size());
    if (k < ratio.sum()) {
      throw Error(ErrorCode::TooFewTrials,
                  "group (" + key.first + ", session " + std::to_string(key.second) +
                      ") has " + std::to_string(k) + " trials, ratio " + ratio.str() +
                      " needs " + std::to_string(ratio.sum()));
    }

    // Stable within-group order before shuffling.
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return trials[a].trial_id < trials[b].trial_id;
    });

    Rng rng(derive_seed(seed, {0x5d, group_index++}));

    // Stratify only when every class present in the group has enough trials.
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t idx : members) by_label[trials[idx].label].push_back(idx);
    bool do_stratify = stratify && by_label.size() > 1;
    for (const auto& [label, idxs] : by_label) {
      if (static_cast<int>(idxs.size()) < kStratifyMinPerClass) do_stratify = false;
    }
    if (stratify && !do_stratify && warnings != nullptr) {
      warnings->push_back("group (" + key.first + ", session " +
                          std::to_string(key.second) +
                          "): class counts too small to stratify, plain shuffle used");
    }

    std::vector<SplitSet> sets(trials.size());
    if (do_stratify) {
      for (auto& [label, idxs] : by_label) {
        rng.shuffle(idxs);
        int n_train = 0, n_val = 0, n_test = 0;
        set_sizes(static_cast<int>(idxs.size()), ratio, n_train, n_val, n_test);
        assign_blocks(idxs, n_train, n_val, sets);
      }
    } else {
      rng.shuffle(members);
      int n_train = 0, n_val = 0, n_test = 0;
      set_sizes(k, ratio, n_train, n_val, n_test);
      assign_blocks(members, n_train, n_val, sets);
    }

    for (std::size_t idx : members) {
      plan.units.push_back({trials[idx].subject, trials[idx].session, trials[idx].trial_id,
                            sets[idx]});
    }
  }

  sort_units(plan.units);
  return plan;
}

SplitPlan split_si(const std::vector<TrialKey>& trials, const SplitRatio& ratio,
                   std::uint64_t seed) {
  ratio.validate();

  std::set<std::string> subject_set;
  for (const TrialKey& t : trials) subject_set.insert(t.subject);
  std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
  if (subjects.size() < 3) {
    throw Error(ErrorCode::TooFewSubjects,
                "subject-independent split needs at least 3 subjects, got " +
                    std::to_string(subjects.size()));
  }

  Rng rng(derive_seed(seed, {0x51}));
  rng.shuffle(subjects);

  // The floor rule can starve val/test below ratio-sum subjects; the >= 3
  // precondition promises one subject per set, so clamp up.
  int n_train = 0, n_val = 0, n_test = 0;
  set_sizes(static_cast<int>(subjects.size()), ratio, n_train, n_val, n_test);
  if (n_val == 0) {
    n_val = 1;
    --n_train;
  }
  if (n_test == 0) {
    n_test = 1;
    --n_train;
  }

  std::map<std::string, SplitSet> subject_sets;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    SplitSet s = SplitSet::Test;
    if (i < static_cast<std::size_t>(n_train)) {
      s = SplitSet::Train;
    } else if (i < static_cast<std::size_t>(n_train + n_val)) {
      s = SplitSet::Val;
    }
    subject_sets[subjects[i]] = s;
  }

  SplitPlan plan;
  plan.task = Task::SubjectIndependent;
  plan.ratio = ratio;
  plan.seed = seed;
  for (const TrialKey& t : trials) {
    plan.units.push_back({t.subject, t.session, t.trial_id, subject_sets.at(t.subject)});
  }
  sort_units(plan.units);
  return plan;
}

std::string serialize_plan(const SplitPlan& plan) {
  std::ostringstream out;
  out << "# emobench split plan v1\n";
  out << "task=" << task_name(plan.task) << " ratio=" << plan.ratio.str()
      << " seed=" << plan.seed << "\n";
  for (const PlanUnit& u : plan.units) {
    out << u.subject << "\t" << u.session << "\t" << u.trial_id << "\t"
        << split_set_name(u.set) << "\n";
  }
  return out.str();
}

SplitPlan parse_plan(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# emobench split plan", 0) != 0) {
    throw Error(ErrorCode::InvalidConfig, "not a split plan file");
  }
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::InvalidConfig, "split plan missing header line");
  }
  SplitPlan plan;
  {
    std::istringstream hdr(line);
    std::string field;
    while (hdr >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "task") {
        plan.task = task_from_name(value);
      } else if (key == "ratio") {
        plan.ratio = SplitRatio::parse(value);
      } else if (key == "seed") {
        plan.seed = std::stoull(value);
      }
    }
  }
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    PlanUnit u;
    std::string set_name;
    if (!(row >> u.subject >> u.session >> u.trial_id >> set_name)) {
      throw Error(ErrorCode::InvalidConfig, "bad plan line: '" + line + "'");
    }
    u.set = split_set_from_name(set_name);
    plan.units.push_back(u);
  }
  return plan;
}

MaterializedSplit materialize(const SplitPlan& plan, const FeatureStore& store,
                              const std::vector<std::string>& required_modalities) {
  MaterializedSplit out;

  // First pass: confirm features exist and agree on window counts.
  for (const PlanUnit& u : plan.units) {
    const FeatureStore::Key key{u.subject, u.session, u.trial_id};
    const auto trial_it = store.tensors.find(key);
    if (trial_it == store.tensors.end() || store.labels.find(key) == store.labels.end()) {
      throw Error(ErrorCode::MissingFeatures,
                  "no features for (" + u.subject + ", " + std::to_string(u.session) +
                      ", " + std::to_string(u.trial_id) + ")");
    }
    int expected = -1;
    for (const std::string& modality : required_modalities) {
      const auto mod_it = trial_it->second.find(modality);
      if (mod_it == trial_it->second.end()) {
        throw Error(ErrorCode::MissingFeatures,
                    "trial (" + u.subject + ", " + std::to_string(u.session) + ", " +
                        std::to_string(u.trial_id) + ") lacks modality '" + modality + "'");
      }
      if (expected < 0) {
        expected = mod_it->second.n_windows();
      } else if (mod_it->second.n_windows() != expected) {
        throw Error(ErrorCode::RowCountMismatch,
                    "trial (" + u.subject + ", " + std::to_string(u.session) + ", " +
                        std::to_string(u.trial_id) + ") modality '" + modality + "' has " +
                        std::to_string(mod_it->second.n_windows()) + " windows, expected " +
                        std::to_string(expected));
      }
    }
  }

  // Count rows per set per modality, then fill.
  auto set_of = [&](SplitSet s) -> MaterializedSet& {
    switch (s) {
      case SplitSet::Train: return out.train;
      case SplitSet::Val: return out.val;
      case SplitSet::Test: return out.test;
    }
    return out.train;
  };

  std::map<SplitSet, int> rows;
  for (const PlanUnit& u : plan.units) {
    const FeatureStore::Key key{u.subject, u.session, u.trial_id};
    const FeatureTensor& first =
        store.tensors.at(key).at(required_modalities.front());
    rows[u.set] += first.n_windows();
  }
  for (SplitSet s : {SplitSet::Train, SplitSet::Val, SplitSet::Test}) {
    MaterializedSet& m = set_of(s);
    for (const std::string& modality : required_modalities) {
      // Feature dim from any trial carrying this modality.
      int dim = 0;
      for (const auto& [key, mods] : store.tensors) {
        const auto it = mods.find(modality);
        if (it != mods.end()) {
          dim = it->second.feature_dim();
          break;
        }
      }
      m.features[modality] = Matrix::Zero(rows[s], dim);
    }
    m.labels.reserve(static_cast<std::size_t>(rows[s]));
    m.refs.reserve(static_cast<std::size_t>(rows[s]));
  }

  std::map<SplitSet, int> cursor;
  for (const PlanUnit& u : plan.units) {
    const FeatureStore::Key key{u.subject, u.session, u.trial_id};
    const auto& mods = store.tensors.at(key);
    const int label = store.labels.at(key);
    const int n_windows = mods.at(required_modalities.front()).n_windows();
    MaterializedSet& m = set_of(u.set);
    int& row = cursor[u.set];
    for (int w = 0; w < n_windows; ++w) {
      for (const std::string& modality : required_modalities) {
        m.features[modality].row(row) = mods.at(modality).values.row(w);
      }
      m.labels.push_back(label);
      m.refs.push_back({u.subject, u.session, u.trial_id, w});
      ++row;
    }
  }

  return out;
}

}  // namespace emobench
