#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "emobench/split.hpp"
#include "test_util.hpp"

using namespace emobench;

namespace {

std::vector<TrialKey> make_trials(int subjects, int sessions, int trials, int classes,
                                  unsigned label_seed = 0) {
  std::vector<TrialKey> keys;
  std::mt19937 gen(label_seed);
  for (int s = 0; s < subjects; ++s) {
    for (int sess = 0; sess < sessions; ++sess) {
      for (int t = 0; t < trials; ++t) {
        const int label = label_seed == 0 ? t % classes
                                          : static_cast<int>(gen() % static_cast<unsigned>(classes));
        keys.push_back({"s" + std::to_string(s), sess, t, label});
      }
    }
  }
  return keys;
}

std::map<SplitSet, int> count_sets(const SplitPlan& plan, const std::string& subject,
                                   int session) {
  std::map<SplitSet, int> counts;
  for (const PlanUnit& u : plan.units) {
    if (u.subject == subject && u.session == session) counts[u.set] += 1;
  }
  return counts;
}

// Exhaustive partition check: every trial appears exactly once.
bool is_partition(const SplitPlan& plan, const std::vector<TrialKey>& trials) {
  std::set<std::tuple<std::string, int, int>> seen;
  for (const PlanUnit& u : plan.units) {
    if (!seen.insert({u.subject, u.session, u.trial_id}).second) return false;
  }
  if (seen.size() != trials.size()) return false;
  for (const TrialKey& t : trials) {
    if (seen.count({t.subject, t.session, t.trial_id}) == 0) return false;
  }
  return true;
}

// Exhaustive scan: no subject lands in two different sets.
bool si_purity(const SplitPlan& plan) {
  std::map<std::string, SplitSet> assignment;
  for (const PlanUnit& u : plan.units) {
    const auto it = assignment.find(u.subject);
    if (it == assignment.end()) {
      assignment[u.subject] = u.set;
    } else if (it->second != u.set) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("SD 15 trials at 3:1:1 split 9/3/3 per group") {
  const auto trials = make_trials(2, 2, 15, 3);
  const SplitPlan plan = split_sd(trials, SplitRatio{3, 1, 1}, 7);
  for (int s = 0; s < 2; ++s) {
    for (int sess = 0; sess < 2; ++sess) {
      auto counts = count_sets(plan, "s" + std::to_string(s), sess);
      CHECK(counts[SplitSet::Train] == 9);
      CHECK(counts[SplitSet::Val] == 3);
      CHECK(counts[SplitSet::Test] == 3);
    }
  }
}

TEST_CASE("SD 40 trials split 24/8/8, 5 trials split 3/1/1") {
  {
    const auto trials = make_trials(1, 1, 40, 2);
    const SplitPlan plan = split_sd(trials, SplitRatio{3, 1, 1}, 1);
    auto counts = count_sets(plan, "s0", 0);
    CHECK(counts[SplitSet::Train] == 24);
    CHECK(counts[SplitSet::Val] == 8);
    CHECK(counts[SplitSet::Test] == 8);
  }
  {
    const auto trials = make_trials(1, 1, 5, 2);
    const SplitPlan plan = split_sd(trials, SplitRatio{3, 1, 1}, 1);
    auto counts = count_sets(plan, "s0", 0);
    CHECK(counts[SplitSet::Train] == 3);
    CHECK(counts[SplitSet::Val] == 1);
    CHECK(counts[SplitSet::Test] == 1);
  }
}

TEST_CASE("SD rejects groups below the ratio sum, naming the group") {
  auto trials = make_trials(2, 1, 15, 3);
  trials.resize(15 + 4);  // second subject keeps only 4 trials
  try {
    split_sd(trials, SplitRatio{3, 1, 1}, 1);
    FAIL("expected TooFewTrials");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewTrials);
    CHECK(std::string(e.what()).find("s1") != std::string::npos);
  }
}

TEST_CASE("SD stratification keeps per-class proportions when counts allow") {
  // 15 trials, 3 classes, 5 per class: stratified split puts 3/1/1 per class.
  const auto trials = make_trials(1, 1, 15, 3);
  const SplitPlan plan = split_sd(trials, SplitRatio{3, 1, 1}, 11, /*stratify=*/true);

  std::map<int, std::map<SplitSet, int>> per_class;
  for (const PlanUnit& u : plan.units) {
    per_class[u.trial_id % 3][u.set] += 1;
  }
  for (int c = 0; c < 3; ++c) {
    CHECK(per_class[c][SplitSet::Train] == 3);
    CHECK(per_class[c][SplitSet::Val] == 1);
    CHECK(per_class[c][SplitSet::Test] == 1);
  }
}

TEST_CASE("SD warns and falls back when classes are too small to stratify") {
  const auto trials = make_trials(1, 1, 8, 4);  // 2 per class < 5
  std::vector<std::string> warnings;
  const SplitPlan plan = split_sd(trials, SplitRatio{3, 1, 1}, 3, true, &warnings);
  CHECK(is_partition(plan, trials));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("stratify") != std::string::npos);
}

TEST_CASE("SI subject counts: 12 -> 8/2/2 and 32 -> 20/6/6") {
  {
    const auto trials = make_trials(12, 1, 4, 2);
    const SplitPlan plan = split_si(trials, SplitRatio{3, 1, 1}, 5);
    std::map<SplitSet, std::set<std::string>> subjects;
    for (const PlanUnit& u : plan.units) subjects[u.set].insert(u.subject);
    CHECK(subjects[SplitSet::Train].size() == 8);
    CHECK(subjects[SplitSet::Val].size() == 2);
    CHECK(subjects[SplitSet::Test].size() == 2);
  }
  {
    const auto trials = make_trials(32, 1, 2, 2);
    const SplitPlan plan = split_si(trials, SplitRatio{3, 1, 1}, 5);
    std::map<SplitSet, std::set<std::string>> subjects;
    for (const PlanUnit& u : plan.units) subjects[u.set].insert(u.subject);
    CHECK(subjects[SplitSet::Train].size() == 20);
    CHECK(subjects[SplitSet::Val].size() == 6);
    CHECK(subjects[SplitSet::Test].size() == 6);
  }
}

TEST_CASE("SI guarantees non-empty val and test at the 3-subject minimum") {
  const auto trials = make_trials(3, 1, 5, 2);
  const SplitPlan plan = split_si(trials, SplitRatio{3, 1, 1}, 5);
  std::map<SplitSet, std::set<std::string>> subjects;
  for (const PlanUnit& u : plan.units) subjects[u.set].insert(u.subject);
  CHECK(subjects[SplitSet::Train].size() == 1);
  CHECK(subjects[SplitSet::Val].size() == 1);
  CHECK(subjects[SplitSet::Test].size() == 1);
}

TEST_CASE("SI rejects fewer than 3 subjects") {
  try {
    split_si(make_trials(2, 1, 5, 2), SplitRatio{3, 1, 1}, 5);
    FAIL("expected TooFewSubjects");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewSubjects);
  }
}

TEST_CASE("zero ratio parts are rejected by construction") {
  try {
    SplitRatio{3, 0, 1}.validate();
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
  CHECK_NOTHROW(SplitRatio::parse("3:1:1").validate());
}

TEST_CASE("property: partition, purity, locality, determinism over random shapes") {
  std::mt19937 gen(2024);
  for (int round = 0; round < 300; ++round) {
    const int subjects = 3 + static_cast<int>(gen() % 10);
    const int sessions = 1 + static_cast<int>(gen() % 3);
    const int trials = 5 + static_cast<int>(gen() % 20);
    const int classes = 2 + static_cast<int>(gen() % 3);
    const auto keys = make_trials(subjects, sessions, trials, classes,
                                  1000 + static_cast<unsigned>(round));
    const std::uint64_t seed = gen();

    const SplitPlan sd = split_sd(keys, SplitRatio{3, 1, 1}, seed);
    CHECK(is_partition(sd, keys));
    // SD locality: every group is split internally, so each group holds
    // members of all three sets.
    for (int s = 0; s < subjects; ++s) {
      for (int sess = 0; sess < sessions; ++sess) {
        auto counts = count_sets(sd, "s" + std::to_string(s), sess);
        CHECK(counts[SplitSet::Train] >= 1);
        CHECK(counts[SplitSet::Val] >= 1);
        CHECK(counts[SplitSet::Test] >= 1);
        CHECK(counts[SplitSet::Train] + counts[SplitSet::Val] + counts[SplitSet::Test] ==
              trials);
      }
    }

    const SplitPlan si = split_si(keys, SplitRatio{3, 1, 1}, seed);
    CHECK(is_partition(si, keys));
    CHECK(si_purity(si));

    // Determinism: identical inputs and seed give byte-identical plans.
    CHECK(serialize_plan(split_sd(keys, SplitRatio{3, 1, 1}, seed)) == serialize_plan(sd));
    CHECK(serialize_plan(split_si(keys, SplitRatio{3, 1, 1}, seed)) == serialize_plan(si));
  }
}

TEST_CASE("plan serialization round-trips") {
  const auto trials = make_trials(4, 2, 7, 3);
  const SplitPlan plan = split_si(trials, SplitRatio{3, 1, 1}, 99);
  const SplitPlan back = parse_plan(serialize_plan(plan));
  CHECK(back.task == plan.task);
  CHECK(back.seed == plan.seed);
  CHECK(back.ratio.str() == plan.ratio.str());
  REQUIRE(back.units.size() == plan.units.size());
  for (std::size_t i = 0; i < plan.units.size(); ++i) {
    CHECK(back.units[i].subject == plan.units[i].subject);
    CHECK(back.units[i].session == plan.units[i].session);
    CHECK(back.units[i].trial_id == plan.units[i].trial_id);
    CHECK(back.units[i].set == plan.units[i].set);
  }
}

// --- materialize -----------------------------------------------------------------

namespace {

FeatureStore make_store(const std::vector<TrialKey>& trials, int windows, int dim) {
  FeatureStore store;
  int salt = 0;
  for (const TrialKey& t : trials) {
    FeatureTensor tensor;
    tensor.values = test_util::random_matrix(windows, dim, 500 + static_cast<unsigned>(salt++));
    tensor.window_seconds = 4.0;
    tensor.origin = {t.subject, t.session, t.trial_id, "eeg"};
    const FeatureStore::Key key{t.subject, t.session, t.trial_id};
    store.tensors[key]["eeg"] = std::move(tensor);
    store.labels[key] = t.label;
  }
  return store;
}

}  // namespace

TEST_CASE("materialized window counts are trial-proportional and leak-free") {
  const auto trials = make_trials(3, 1, 10, 2);
  const int windows = 4;
  const FeatureStore store = make_store(trials, windows, 6);
  const SplitPlan plan = split_sd(trials, SplitRatio{3, 1, 1}, 17);

  const MaterializedSplit split = materialize(plan, store, {"eeg"});
  // 10 trials -> 6/2/2 per group, 3 groups, 4 windows each.
  CHECK(split.train.size() == 3 * 6 * windows);
  CHECK(split.val.size() == 3 * 2 * windows);
  CHECK(split.test.size() == 3 * 2 * windows);

  // Window-level leakage: no trial contributes to two sets.
  std::map<std::tuple<std::string, int, int>, std::set<int>> seen;
  int set_index = 0;
  for (const MaterializedSet* set : {&split.train, &split.val, &split.test}) {
    for (const SampleRef& ref : set->refs) {
      seen[{ref.subject, ref.session, ref.trial_id}].insert(set_index);
    }
    ++set_index;
  }
  for (const auto& [key, sets] : seen) CHECK(sets.size() == 1);
}

TEST_CASE("materializing the same plan twice gives identical order and content") {
  const auto trials = make_trials(2, 1, 8, 2);
  const FeatureStore store = make_store(trials, 3, 5);
  const SplitPlan plan = split_sd(trials, SplitRatio{3, 1, 1}, 4);

  const MaterializedSplit a = materialize(plan, store, {"eeg"});
  const MaterializedSplit b = materialize(plan, store, {"eeg"});
  CHECK(a.train.labels == b.train.labels);
  CHECK((a.train.features.at("eeg") - b.train.features.at("eeg")).cwiseAbs().maxCoeff() ==
        0.0);
  for (std::size_t i = 0; i < a.train.refs.size(); ++i) {
    CHECK(a.train.refs[i].trial_id == b.train.refs[i].trial_id);
    CHECK(a.train.refs[i].window == b.train.refs[i].window);
  }
}

TEST_CASE("materialize reports missing features") {
  const auto trials = make_trials(1, 1, 6, 2);
  FeatureStore store = make_store(trials, 3, 5);
  store.tensors.erase({"s0", 0, 3});
  const SplitPlan plan = split_sd(trials, SplitRatio{3, 1, 1}, 4);
  try {
    materialize(plan, store, {"eeg"});
    FAIL("expected MissingFeatures");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingFeatures);
  }
}

TEST_CASE("materialize rejects modality window-count mismatches") {
  const auto trials = make_trials(1, 1, 6, 2);
  FeatureStore store = make_store(trials, 3, 5);
  for (const TrialKey& t : trials) {
    FeatureTensor aux;
    aux.values = test_util::random_matrix(t.trial_id == 2 ? 4 : 3, 2,
                                          900 + static_cast<unsigned>(t.trial_id));
    store.tensors[{t.subject, t.session, t.trial_id}]["peripheral"] = std::move(aux);
  }
  const SplitPlan plan = split_sd(trials, SplitRatio{3, 1, 1}, 4);
  try {
    materialize(plan, store, {"eeg", "peripheral"});
    FAIL("expected RowCountMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RowCountMismatch);
  }
}
