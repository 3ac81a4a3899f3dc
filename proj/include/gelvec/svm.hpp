#ifndef GELVEC_SVM_HPP
#define GELVEC_SVM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "features.hpp"

namespace gelvec {

struct LinearKernel {
  friend bool operator==(const LinearKernel&, const LinearKernel&) = default;
};

// exp(-gamma * |x - z|^2). gamma <= 0 means "1 / dim", resolved at training.
struct RbfKernel {
  double gamma = 0.0;
  friend bool operator==(const RbfKernel&, const RbfKernel&) = default;
};

using Kernel = std::variant<LinearKernel, RbfKernel>;

inline double evaluate(const Kernel& k, std::span<const double> a, std::span<const double> b) {
  if (const auto* rbf = std::get_if<RbfKernel>(&k)) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      d2 += d * d;
    }
    return std::exp(-rbf->gamma * d2);
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot;
}

// Labelled training data; labels are +1 (disease) or -1 (normal).
struct Dataset {
  std::vector<std::vector<double>> points;
  std::vector<int> labels;

  Dataset() = default;
  Dataset(std::vector<std::vector<double>> x, std::vector<int> y) : points(std::move(x)), labels(std::move(y)) {
    validate();
  }
  static Dataset from_features(std::span<const FeatureVector> vectors, std::span<const int> labels) {
    std::vector<std::vector<double>> x;
    x.reserve(vectors.size());
    for (const FeatureVector& v : vectors) x.push_back(v.values);
    return {std::move(x), std::vector<int>(labels.begin(), labels.end())};
  }

  std::size_t size() const { return points.size(); }
  std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }

  void validate() const {
    if (points.size() != labels.size()) throw DimensionMismatch("point and label counts differ");
    for (const auto& p : points)
      if (p.size() != dim()) throw DimensionMismatch("points differ in dimension");
    for (int y : labels)
      if (y != 1 && y != -1) throw InvalidArgument("labels must be +1 or -1");
  }

  Dataset subset(std::span<const std::size_t> idx) const {
    Dataset d;
    for (std::size_t i : idx) {
      d.points.push_back(points[i]);
      d.labels.push_back(labels[i]);
    }
    return d;
  }
};

struct SmoParams {
  double C = 1.0;
  double tol = 1e-3;
  int max_passes = 200;
  Kernel kernel = LinearKernel{};
};

struct SvmModel {
  Kernel kernel = LinearKernel{};
  double C = 1.0;
  double bias = 0.0;
  std::size_t dim = 0;
  // Multipliers for every training point; empty for a model read from disk.
  std::vector<double> alphas;
  std::vector<std::vector<double>> support_vectors;
  std::vector<int> support_labels;
  std::vector<double> support_alphas;
  std::optional<MinMaxScaler> scaling;
  int passes = 0;
};

namespace detail {

inline std::vector<double> scaled(const SvmModel& m, std::span<const double> x) {
  if (x.size() != m.dim)
    throw DimensionMismatch("input dimension " + std::to_string(x.size()) + " does not match model dimension " +
                            std::to_string(m.dim));
  return m.scaling ? m.scaling->apply(x) : std::vector<double>(x.begin(), x.end());
}

// Dual-ascent state for sequential minimal optimization.
class Smo {
public:
  Smo(const Dataset& data, const SmoParams& p)
      : x_(data.points), y_(data.labels), p_(p), n_(data.size()), alpha_(n_, 0.0), error_(n_), diag_(n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      error_[i] = -y_[i];
      diag_[i] = evaluate(p_.kernel, x_[i], x_[i]);
    }
  }

  int run() {
    int sweep = 0;
    while (sweep < p_.max_passes) {
      ++sweep;
      int changed = 0;
      for (std::size_t i = 0; i < n_; ++i)
        if (violates_kkt(i) && examine(i)) ++changed;
      if (changed == 0 && !refit_bias()) break;
    }
    return sweep;
  }

  const std::vector<double>& alphas() const { return alpha_; }
  double bias() const { return b_; }

private:
  bool violates_kkt(std::size_t i) const {
    const double r = y_[i] * error_[i];
    return (r < -p_.tol && alpha_[i] < p_.C) || (r > p_.tol && alpha_[i] > 0.0);
  }

  bool non_bound(std::size_t j) const { return alpha_[j] > 0.0 && alpha_[j] < p_.C; }

  // With every multiplier at a bound the pair updates leave b anywhere in a
  // range; move it to the middle of the interval the KKT conditions allow.
  // Returns true when that exposed new violators, so sweeping resumes.
  bool refit_bias() {
    for (std::size_t k = 0; k < n_; ++k)
      if (non_bound(k)) return false;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_; ++k) {
      const double g = error_[k] + y_[k] - b_;  // decision value without bias
      const bool at_zero = alpha_[k] <= 0.0;
      // y (g + b) >= 1 at zero, <= 1 at C.
      if ((y_[k] > 0) == at_zero)
        lo = std::max(lo, y_[k] - g);
      else
        hi = std::min(hi, y_[k] - g);
    }
    double b_new = b_;
    if (std::isfinite(lo) && std::isfinite(hi))
      b_new = 0.5 * (lo + hi);
    else if (std::isfinite(lo))
      b_new = std::max(b_, lo);
    else if (std::isfinite(hi))
      b_new = std::min(b_, hi);
    if (b_new == b_) return false;
    for (double& e : error_) e += b_new - b_;
    b_ = b_new;
    for (std::size_t k = 0; k < n_; ++k)
      if (violates_kkt(k)) return true;
    return false;
  }

  // Second choice: the non-bound j maximizing |E_i - E_j| (lowest index on
  // ties); if that pair cannot move, every other j in cyclic order from i+1.
  bool examine(std::size_t i) {
    std::optional<std::size_t> best;
    double best_gap = -1.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (j == i || !non_bound(j)) continue;
      const double gap = std::abs(error_[i] - error_[j]);
      if (gap > best_gap) {
        best_gap = gap;
        best = j;
      }
    }
    if (best && take_step(i, *best)) return true;
    for (std::size_t k = 1; k < n_; ++k) {
      const std::size_t j = (i + k) % n_;
      if (best && j == *best) continue;
      if (take_step(i, j)) return true;
    }
    return false;
  }

  // Objective of the pair subproblem as a function of alpha_j, up to a
  // constant; used when the curvature along the constraint line vanishes.
  double pair_objective(std::size_t i, std::size_t j, double aj, double kij) const {
    const double s = y_[i] * y_[j];
    const double ai = alpha_[i] + s * (alpha_[j] - aj);
    const double fi = error_[i] + y_[i] - b_ - alpha_[i] * y_[i] * diag_[i] - alpha_[j] * y_[j] * kij;
    const double fj = error_[j] + y_[j] - b_ - alpha_[i] * y_[i] * kij - alpha_[j] * y_[j] * diag_[j];
    return ai + aj - 0.5 * ai * ai * diag_[i] - 0.5 * aj * aj * diag_[j] - s * ai * aj * kij - y_[i] * ai * fi -
           y_[j] * aj * fj;
  }

  bool take_step(std::size_t i, std::size_t j) {
    constexpr double kMinChange = 1e-8;
    const double ai = alpha_[i];
    const double aj = alpha_[j];
    const int yi = y_[i];
    const int yj = y_[j];
    double lo, hi;
    if (yi != yj) {
      lo = std::max(0.0, aj - ai);
      hi = std::min(p_.C, p_.C + aj - ai);
    } else {
      lo = std::max(0.0, ai + aj - p_.C);
      hi = std::min(p_.C, ai + aj);
    }
    if (hi - lo <= 0.0) return false;

    const double kij = evaluate(p_.kernel, x_[i], x_[j]);
    const double eta = diag_[i] + diag_[j] - 2.0 * kij;
    double aj_new;
    if (eta > 0.0) {
      aj_new = std::clamp(aj + yj * (error_[i] - error_[j]) / eta, lo, hi);
    } else {
      const double obj_lo = pair_objective(i, j, lo, kij);
      const double obj_hi = pair_objective(i, j, hi, kij);
      if (obj_lo > obj_hi + 1e-12)
        aj_new = lo;
      else if (obj_hi > obj_lo + 1e-12)
        aj_new = hi;
      else
        aj_new = aj;
    }
    if (aj_new < 1e-12 * p_.C) aj_new = 0.0;
    if (aj_new > p_.C * (1.0 - 1e-12)) aj_new = p_.C;
    if (std::abs(aj_new - aj) <= kMinChange) return false;

    double ai_new = ai + yi * yj * (aj - aj_new);
    if (ai_new < 1e-12 * p_.C) ai_new = 0.0;
    if (ai_new > p_.C * (1.0 - 1e-12)) ai_new = p_.C;

    const double dai = ai_new - ai;
    const double daj = aj_new - aj;
    const double b1 = b_ - error_[i] - yi * dai * diag_[i] - yj * daj * kij;
    const double b2 = b_ - error_[j] - yi * dai * kij - yj * daj * diag_[j];
    double b_new;
    if (ai_new > 0.0 && ai_new < p_.C)
      b_new = b1;
    else if (aj_new > 0.0 && aj_new < p_.C)
      b_new = b2;
    else
      b_new = 0.5 * (b1 + b2);

    // Kernel rows for the active pair only.
    const double db = b_new - b_;
    for (std::size_t k = 0; k < n_; ++k) {
      const double kik = k == i ? diag_[i] : (k == j ? kij : evaluate(p_.kernel, x_[i], x_[k]));
      const double kjk = k == j ? diag_[j] : (k == i ? kij : evaluate(p_.kernel, x_[j], x_[k]));
      error_[k] += yi * dai * kik + yj * daj * kjk + db;
    }
    alpha_[i] = ai_new;
    alpha_[j] = aj_new;
    b_ = b_new;
    return true;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<int>& y_;
  SmoParams p_;
  std::size_t n_;
  std::vector<double> alpha_;
  std::vector<double> error_;  // f(x_k) - y_k
  std::vector<double> diag_;
  double b_ = 0.0;
};

}  // namespace detail

inline Kernel resolve_kernel(const Kernel& k, std::size_t dim) {
  if (const auto* rbf = std::get_if<RbfKernel>(&k); rbf && !(rbf->gamma > 0.0))
    return RbfKernel{dim ? 1.0 / static_cast<double>(dim) : 1.0};
  return k;
}

// Soft-margin SVM via deterministic sequential minimal optimization. The
// data is used as given; `scaling` is only recorded in the model so that
// decision_value applies it to raw inputs.
inline SvmModel train_smo(const Dataset& data, const SmoParams& params,
                          std::optional<MinMaxScaler> scaling = std::nullopt) {
  data.validate();
  if (!(params.C > 0.0)) throw InvalidArgument("C must be positive");
  if (!(params.tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (params.max_passes < 1) throw InvalidArgument("max_passes must be >= 1");
  const bool has_pos = std::find(data.labels.begin(), data.labels.end(), 1) != data.labels.end();
  const bool has_neg = std::find(data.labels.begin(), data.labels.end(), -1) != data.labels.end();
  if (!has_pos || !has_neg) throw SingleClassData("training data must contain both +1 and -1 labels");
  if (scaling && scaling->dim() != data.dim()) throw DimensionMismatch("scaler dimension does not match data");

  SmoParams p = params;
  p.kernel = resolve_kernel(params.kernel, data.dim());
  detail::Smo smo(data, p);
  const int passes = smo.run();

  SvmModel m;
  m.kernel = p.kernel;
  m.C = p.C;
  m.bias = smo.bias();
  m.dim = data.dim();
  m.alphas = smo.alphas();
  m.scaling = std::move(scaling);
  m.passes = passes;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (m.alphas[i] <= 0.0) continue;
    m.support_vectors.push_back(data.points[i]);
    m.support_labels.push_back(data.labels[i]);
    m.support_alphas.push_back(m.alphas[i]);
  }
  return m;
}

// Decision function on an input already in the model's (scaled) space.
inline double decision_value_scaled(const SvmModel& m, std::span<const double> z) {
  double f = m.bias;
  for (std::size_t s = 0; s < m.support_vectors.size(); ++s)
    f += m.support_alphas[s] * m.support_labels[s] * evaluate(m.kernel, m.support_vectors[s], z);
  return f;
}

inline double decision_value(const SvmModel& m, std::span<const double> x) {
  return decision_value_scaled(m, detail::scaled(m, x));
}

// Boundary points (decision exactly 0) are flagged as disease.
inline int predict(const SvmModel& m, std::span<const double> x) { return decision_value(m, x) >= 0.0 ? 1 : -1; }

// Scales `data` with the model's stored parameters, if any.
inline Dataset model_space(const SvmModel& m, const Dataset& data) {
  Dataset d;
  d.labels = data.labels;
  d.points.reserve(data.size());
  for (const auto& p : data.points) d.points.push_back(detail::scaled(m, p));
  return d;
}

// sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K(x_i, x_j) on the
// training set the model was fitted to.
inline double dual_objective(const SvmModel& m, const Dataset& data) {
  if (m.alphas.size() != data.size())
    throw DimensionMismatch("model carries " + std::to_string(m.alphas.size()) + " multipliers for " +
                            std::to_string(data.size()) + " points");
  const Dataset z = model_space(m, data);
  double linear = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (m.alphas[i] == 0.0) continue;
    linear += m.alphas[i];
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (m.alphas[j] == 0.0) continue;
      quad += m.alphas[i] * m.alphas[j] * z.labels[i] * z.labels[j] * evaluate(m.kernel, z.points[i], z.points[j]);
    }
  }
  return linear - 0.5 * quad;
}

// Largest KKT violation over the training set:
//   alpha = 0      -> y f >= 1
//   0 < alpha < C  -> y f == 1
//   alpha = C      -> y f <= 1
inline double max_kkt_violation(const SvmModel& m, const Dataset& data) {
  if (m.alphas.size() != data.size()) throw DimensionMismatch("model/dataset size mismatch");
  const Dataset z = model_space(m, data);
  double worst = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double r = z.labels[i] * decision_value_scaled(m, z.points[i]) - 1.0;
    double v = 0.0;
    if (m.alphas[i] <= 0.0)
      v = std::max(0.0, -r);
    else if (m.alphas[i] >= m.C)
      v = std::max(0.0, r);
    else
      v = std::abs(r);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace gelvec

#endif  // GELVEC_SVM_HPP
