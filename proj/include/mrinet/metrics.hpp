#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mrinet {

/// YES (tumor present) is the positive class. The numeric value is the
/// class index used for one-hot targets and softmax outputs.
enum class Label : std::uint8_t { No = 0, Yes = 1 };

std::string_view label_name(Label label) noexcept;
/// Accepts "YES"/"NO" in any case. Throws InvalidConfig otherwise.
Label parse_label(std::string_view text);

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fn = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fn + fp + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws LengthMismatch or Empty.
ConfusionMatrix confusion(std::span<const Label> labels,
                          std::span<const Label> predictions);

/// Each field is nullopt ("Undefined") when its denominator is zero.
struct BasicMetrics {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

/// Throws Empty when the matrix has no samples.
BasicMetrics basic_metrics(const ConfusionMatrix& cm);

/// Chance-agreement terms. p_yes uses the actual-YES marginal (tp+fn)
/// times the predicted-YES marginal (tp+fp).
struct KappaTerms {
  double p0 = 0.0;
  double p_yes = 0.0;
  double p_no = 0.0;
  double p_e = 0.0;
  std::optional<double> kappa;  // nullopt when p_e == 1
};

KappaTerms kappa_terms(const ConfusionMatrix& cm);
std::optional<double> cohens_kappa(const ConfusionMatrix& cm);

struct ScoredSample {
  Label truth = Label::No;
  double score = 0.0;  // P(YES), finite, in [0, 1]
};

struct RocPoint {
  double threshold = 0.0;  // +inf for the leading (0, 0) point
  double fpr = 0.0;
  double tpr = 0.0;
};

/// Thresholds are +inf followed by the distinct scores in descending order;
/// predict YES iff score >= threshold. Throws OneClassOnly.
std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples);

/// Trapezoidal area under an ROC curve.
double auc(std::span<const RocPoint> curve);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// One point per distinct score, descending. Throws NoPositives.
std::vector<PrPoint> pr_curve(std::span<const ScoredSample> samples);

/// sum_n (R_n - R_{n-1}) * P_n over pr_curve (step interpolation).
double average_precision(std::span<const ScoredSample> samples);

/// Rows are true classes (YES, NO); columns are predictions (YES, NO).
using Matrix2 = std::array<std::array<double, 2>, 2>;

/// Row-normalized confusion matrix. Throws EmptyRow.
Matrix2 normalized_confusion(const ConfusionMatrix& cm);

struct MetricsReport {
  ConfusionMatrix confusion;
  BasicMetrics basic;
  KappaTerms kappa;
  std::optional<Matrix2> normalized;       // nullopt if a class row is empty
  std::optional<double> auc;               // nullopt when one class only
  std::optional<double> average_precision;
  std::vector<RocPoint> roc;
  std::vector<PrPoint> pr;
};

/// Full report from scores plus hard predictions (same order).
MetricsReport build_report(std::span<const ScoredSample> samples,
                           std::span<const Label> predictions);

}  // namespace mrinet
