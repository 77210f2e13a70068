#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "emobench/types.hpp"

namespace emobench {

struct SplitRatio {
  int train = 3;
  int val = 1;
  int test = 1;

  int sum() const { return train + val + test; }
  void validate() const;  // all parts strictly positive
  static SplitRatio parse(const std::string& text);  // "3:1:1"
  std::string str() const;
};

enum class Task { SubjectDependent, SubjectIndependent };
const char* task_name(Task task);
Task task_from_name(const std::string& name);

enum class SplitSet { Train, Val, Test };
const char* split_set_name(SplitSet set);

// The split protocol operates on trial identities, not signals.
struct TrialKey {
  std::string subject;
  int session = 0;
  int trial_id = 0;
  int label = 0;
};

struct PlanUnit {
  std::string subject;
  int session = 0;
  int trial_id = 0;
  SplitSet set = SplitSet::Train;
};

struct SplitPlan {
  Task task = Task::SubjectDependent;
  SplitRatio ratio;
  std::uint64_t seed = 0;
  // Sorted by (subject, session, trial_id); every trial appears exactly once.
  std::vector<PlanUnit> units;
};

// Per (subject, session): trials are shuffled with a seeded PRNG,
// label-stratified when every class in the group has at least
// kStratifyMinPerClass trials, and assigned floor(k*w/sum) per set with the
// remainder going to train. Throws TooFewTrials naming the offending group.
inline constexpr int kStratifyMinPerClass = 5;
SplitPlan split_sd(const std::vector<TrialKey>& trials, const SplitRatio& ratio,
                   std::uint64_t seed, bool stratify = true,
                   std::vector<std::string>* warnings = nullptr);

// Subjects are shuffled and assigned whole; validation and test subject sets
// are disjoint from each other and from train. Throws TooFewSubjects.
SplitPlan split_si(const std::vector<TrialKey>& trials, const SplitRatio& ratio,
                   std::uint64_t seed);

// Human-diffable plan text: one line per unit, stable ordering.
std::string serialize_plan(const SplitPlan& plan);
SplitPlan parse_plan(const std::string& text);

// --- Materialization -----------------------------------------------------------

struct FeatureStore {
  using Key = std::tuple<std::string, int, int>;  // subject, session, trial_id
  // trial -> modality key -> tensor
  std::map<Key, std::map<std::string, FeatureTensor>> tensors;
  std::map<Key, int> labels;
};

struct SampleRef {
  std::string subject;
  int session = 0;
  int trial_id = 0;
  int window = 0;
};

struct MaterializedSet {
  // modality key -> rows x dim; rows aligned with labels/refs
  std::map<std::string, Matrix> features;
  std::vector<int> labels;
  std::vector<SampleRef> refs;

  int size() const { return static_cast<int>(labels.size()); }
};

struct MaterializedSplit {
  MaterializedSet train, val, test;
};

// Expands a plan to window-level samples; every window inherits its trial's
// set, so no trial straddles sets. Modalities must agree on window counts per
// trial. Throws MissingFeatures, RowCountMismatch.
MaterializedSplit materialize(const SplitPlan& plan, const FeatureStore& store,
                              const std::vector<std::string>& required_modalities);

}  // namespace emobench
