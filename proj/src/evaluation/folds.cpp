#include <algorithm>
#include <map>
#include <random>

#include "coughscreen/evaluation.hpp"

namespace coughscreen::evaluation {
namespace {

const char* class_name(int label) { return label == 1 ? "TB" : "non-TB"; }

int sex_key(const std::optional<corpus::Sex>& sex) {
  if (!sex) return 2;
  return *sex == corpus::Sex::kMale ? 0 : 1;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t level, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(level),
                    static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

// Deals patients round-robin into k folds after a seeded shuffle and a stable
// sort by (class, sex), so each fold gets floor or ceil of every stratum.
std::vector<std::vector<const PatientInfo*>> deal(std::vector<const PatientInfo*> patients,
                                                  std::size_t k, std::mt19937_64& rng,
                                                  const std::string& what) {
  std::size_t count[2] = {0, 0};
  for (const auto* p : patients) ++count[p->label];
  for (int c = 0; c < 2; ++c) {
    if (count[c] < k) {
      throw ConfigError(what + " = " + std::to_string(k) + " needs at least " +
                        std::to_string(k) + " patients of each class, but class " +
                        class_name(c) + " has " + std::to_string(count[c]) +
                        "; lower the fold count in the [evaluation] config section");
    }
  }
  std::shuffle(patients.begin(), patients.end(), rng);
  std::stable_sort(patients.begin(), patients.end(), [](const auto* a, const auto* b) {
    if (a->label != b->label) return a->label > b->label;
    return sex_key(a->sex) < sex_key(b->sex);
  });
  std::vector<std::vector<const PatientInfo*>> folds(k);
  for (std::size_t i = 0; i < patients.size(); ++i) folds[i % k].push_back(patients[i]);
  return folds;
}

std::vector<std::string> ids_of(const std::vector<const PatientInfo*>& ps) {
  std::vector<std::string> out;
  out.reserve(ps.size());
  for (const auto* p : ps) out.push_back(p->patient_id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Split> splits(const std::vector<const PatientInfo*>& patients, std::size_t k,
                          std::mt19937_64& rng, const std::string& what) {
  const auto folds = deal(patients, k, rng, what);
  std::vector<Split> out(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<const PatientInfo*> train;
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    }
    out[f].train = ids_of(train);
    out[f].test = ids_of(folds[f]);
  }
  return out;
}

}  // namespace

void FoldCounts::validate() const {
  if (outer < 2 || inner_a < 2 || inner_b < 2) {
    throw ConfigError("fold counts must all be >= 2 (outer " + std::to_string(outer) +
                      ", inner_a " + std::to_string(inner_a) + ", inner_b " +
                      std::to_string(inner_b) + ")");
  }
}

FoldPlan make_fold_plan(std::span<const PatientInfo> patients, std::uint64_t seed,
                        const FoldCounts& counts) {
  counts.validate();
  std::map<std::string, int> seen;
  std::vector<const PatientInfo*> all;
  for (const auto& p : patients) {
    if (p.label != 0 && p.label != 1) throw DataError("patient " + p.patient_id + ": bad label");
    if (!seen.emplace(p.patient_id, p.label).second) {
      throw DataError("patient " + p.patient_id + " listed twice");
    }
    all.push_back(&p);
  }
  // Sort by id first so the plan does not depend on input order.
  std::sort(all.begin(), all.end(),
            [](const auto* a, const auto* b) { return a->patient_id < b->patient_id; });

  FoldPlan plan;
  plan.seed = seed;
  plan.counts = counts;
  auto outer_rng = make_rng(seed, 0, 0);
  const auto outer = splits(all, counts.outer, outer_rng, "outer_folds");
  for (std::size_t o = 0; o < outer.size(); ++o) {
    OuterFold fold;
    fold.train = outer[o].train;
    fold.test = outer[o].test;
    std::vector<const PatientInfo*> train;
    for (const auto* p : all) {
      if (std::binary_search(fold.train.begin(), fold.train.end(), p->patient_id)) {
        train.push_back(p);
      }
    }
    auto rng_a = make_rng(seed, 1, o);
    fold.inner_a = splits(train, counts.inner_a, rng_a, "inner_a_folds");
    auto rng_b = make_rng(seed, 2, o);
    fold.inner_b = splits(train, counts.inner_b, rng_b, "inner_b_folds");
    plan.outer.push_back(std::move(fold));
  }
  return plan;
}

std::vector<PatientInfo> patient_infos(const features::FeatureTable& table,
                                       const std::vector<corpus::PatientRecord>* manifest) {
  std::map<std::string, std::optional<corpus::Sex>> sex;
  if (manifest) {
    for (const auto& r : *manifest) sex[r.patient_id] = r.sex;
  }
  std::vector<PatientInfo> out;
  for (const auto& id : table.patients()) {
    PatientInfo p;
    p.patient_id = id;
    p.label = table.patient_label(id);
    if (auto it = sex.find(id); it != sex.end()) p.sex = it->second;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace coughscreen::evaluation
