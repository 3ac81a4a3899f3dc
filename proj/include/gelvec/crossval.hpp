#ifndef GELVEC_CROSSVAL_HPP
#define GELVEC_CROSSVAL_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "features.hpp"
#include "svm.hpp"

namespace gelvec {

// Confusion counts with +1 (disease) as the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;

  void add(int truth, int predicted) {
    if (truth > 0)
      (predicted > 0 ? tp : fn) += 1;
    else
      (predicted > 0 ? fp : tn) += 1;
  }
  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fn += o.fn;
    tn += o.tn;
    fp += o.fp;
    return *this;
  }

  std::size_t total() const { return tp + fn + tn + fp; }
  double accuracy() const { return total() ? static_cast<double>(tp + tn) / static_cast<double>(total()) : 0.0; }
  double sensitivity() const { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
  double specificity() const { return tn + fp ? static_cast<double>(tn) / static_cast<double>(tn + fp) : 0.0; }

  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct FoldResult {
  std::vector<std::size_t> test_indices;
  Confusion confusion;
  int passes = 0;
};

struct EvalReport {
  Confusion confusion;
  std::vector<FoldResult> folds;

  double accuracy() const { return confusion.accuracy(); }
  double sensitivity() const { return confusion.sensitivity(); }
  double specificity() const { return confusion.specificity(); }
};

// Fisher-Yates with an explicit engine so fold assignment only depends on
// the seed and the engine, not on the standard library's shuffle.
inline void seeded_shuffle(std::vector<std::size_t>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

// Stratified fold assignment: each class is shuffled, the classes are
// concatenated and dealt round-robin, so every fold is nonempty when k <= n
// and class proportions are as even as possible.
inline std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels, std::size_t k,
                                                              std::uint64_t seed) {
  if (k < 2) throw FoldError("k must be at least 2");
  if (k > labels.size())
    throw FoldError("k = " + std::to_string(k) + " exceeds sample count " + std::to_string(labels.size()));
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] > 0 ? pos : neg).push_back(i);
  seeded_shuffle(pos, seed);
  seeded_shuffle(neg, seed ^ 0x5bd1e995u);

  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t slot = 0;
  for (const auto* cls : {&pos, &neg})
    for (std::size_t i : *cls) folds[slot++ % k].push_back(i);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

// Seeded stratified k-fold evaluation. With `scale`, min-max parameters are
// fitted on each training split only and applied to its held-out fold.
inline EvalReport cross_validate(const Dataset& data, std::size_t k, const SmoParams& params, std::uint64_t seed,
                                 bool scale = true) {
  data.validate();
  const auto folds = stratified_folds(data.labels, k, seed);

  EvalReport report;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    std::sort(train.begin(), train.end());

    Dataset tr = data.subset(train);
    const bool has_pos = std::find(tr.labels.begin(), tr.labels.end(), 1) != tr.labels.end();
    const bool has_neg = std::find(tr.labels.begin(), tr.labels.end(), -1) != tr.labels.end();
    if (!has_pos || !has_neg) throw FoldError("training split for fold " + std::to_string(f) + " lacks a class");

    std::optional<MinMaxScaler> scaler;
    if (scale) {
      scaler = MinMaxScaler::fit(tr.points);
      for (auto& p : tr.points) p = scaler->apply(p);
    }
    const SvmModel model = train_smo(tr, params, scaler);

    FoldResult fold{folds[f], {}, model.passes};
    for (std::size_t i : folds[f]) fold.confusion.add(data.labels[i], predict(model, data.points[i]));
    report.confusion += fold.confusion;
    report.folds.push_back(std::move(fold));
  }
  return report;
}

}  // namespace gelvec

#endif  // GELVEC_CROSSVAL_HPP
