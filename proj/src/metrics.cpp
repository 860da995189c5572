#include "mrinet/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "mrinet/error.hpp"

namespace mrinet {

std::string_view label_name(Label label) noexcept {
  return label == Label::Yes ? "YES" : "NO";
}

Label parse_label(std::string_view text) {
  std::string upper(text);
  for (char& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (upper == "YES") return Label::Yes;
  if (upper == "NO") return Label::No;
  throw Error(ErrorKind::InvalidConfig, "unknown label '" + std::string(text) + "'");
}

ConfusionMatrix confusion(std::span<const Label> labels,
                          std::span<const Label> predictions) {
  if (labels.size() != predictions.size()) {
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(labels.size()) + " labels vs " +
                    std::to_string(predictions.size()) + " predictions");
  }
  if (labels.empty()) throw Error(ErrorKind::Empty, "no samples");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool actual = labels[i] == Label::Yes;
    const bool predicted = predictions[i] == Label::Yes;
    if (actual && predicted) ++cm.tp;
    else if (actual) ++cm.fn;
    else if (predicted) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

BasicMetrics basic_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorKind::Empty, "confusion matrix is empty");
  BasicMetrics m;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

KappaTerms kappa_terms(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorKind::Empty, "confusion matrix is empty");
  const double n = static_cast<double>(cm.total());
  KappaTerms k;
  k.p0 = static_cast<double>(cm.tp + cm.tn) / n;
  k.p_yes = (static_cast<double>(cm.tp + cm.fn) / n) *
            (static_cast<double>(cm.tp + cm.fp) / n);
  k.p_no = (static_cast<double>(cm.fp + cm.tn) / n) *
           (static_cast<double>(cm.fn + cm.tn) / n);
  k.p_e = k.p_yes + k.p_no;

  // kappa = (p0 - pe) / (1 - pe), scaled by N^2 so the zero test and the
  // division happen on exact integers.
  using Wide = __int128;
  const Wide total = static_cast<Wide>(cm.total());
  const Wide chance = static_cast<Wide>(cm.tp + cm.fn) * static_cast<Wide>(cm.tp + cm.fp) +
                      static_cast<Wide>(cm.fp + cm.tn) * static_cast<Wide>(cm.fn + cm.tn);
  const Wide num = total * static_cast<Wide>(cm.tp + cm.tn) - chance;
  const Wide den = total * total - chance;
  if (den != 0) {
    k.kappa = static_cast<double>(num) / static_cast<double>(den);
  }
  return k;
}

std::optional<double> cohens_kappa(const ConfusionMatrix& cm) {
  return kappa_terms(cm).kappa;
}

namespace {

void validate_scores(std::span<const ScoredSample> samples) {
  for (const auto& s : samples) {
    if (!std::isfinite(s.score) || s.score < 0.0 || s.score > 1.0) {
      throw Error(ErrorKind::InvalidProbability,
                  "score " + std::to_string(s.score) + " outside [0, 1]");
    }
  }
}

// Samples sorted by descending score.
std::vector<ScoredSample> sorted_desc(std::span<const ScoredSample> samples) {
  std::vector<ScoredSample> sorted(samples.begin(), samples.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredSample& a, const ScoredSample& b) {
                     return a.score > b.score;
                   });
  return sorted;
}

// Calls fn(threshold, tp, fp) once per distinct score, descending, with
// cumulative counts of samples whose score >= threshold.
template <typename Fn>
void sweep(const std::vector<ScoredSample>& sorted, Fn&& fn) {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double threshold = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == threshold) {
      if (sorted[i].truth == Label::Yes) ++tp;
      else ++fp;
      ++i;
    }
    fn(threshold, tp, fp);
  }
}

}  // namespace

std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples) {
  validate_scores(samples);
  const auto positives = static_cast<std::uint64_t>(
      std::count_if(samples.begin(), samples.end(),
                    [](const ScoredSample& s) { return s.truth == Label::Yes; }));
  const std::uint64_t negatives = samples.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorKind::OneClassOnly, "ROC needs both YES and NO samples");
  }
  std::vector<RocPoint> curve{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  sweep(sorted_desc(samples), [&](double t, std::uint64_t tp, std::uint64_t fp) {
    curve.push_back({t, static_cast<double>(fp) / static_cast<double>(negatives),
                     static_cast<double>(tp) / static_cast<double>(positives)});
  });
  return curve;
}

double auc(std::span<const RocPoint> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
  }
  return area;
}

std::vector<PrPoint> pr_curve(std::span<const ScoredSample> samples) {
  validate_scores(samples);
  const auto positives = static_cast<std::uint64_t>(
      std::count_if(samples.begin(), samples.end(),
                    [](const ScoredSample& s) { return s.truth == Label::Yes; }));
  if (positives == 0) throw Error(ErrorKind::NoPositives, "no YES samples");
  std::vector<PrPoint> curve;
  sweep(sorted_desc(samples), [&](double t, std::uint64_t tp, std::uint64_t fp) {
    curve.push_back({t, static_cast<double>(tp) / static_cast<double>(tp + fp),
                     static_cast<double>(tp) / static_cast<double>(positives)});
  });
  return curve;
}

double average_precision(std::span<const ScoredSample> samples) {
  const auto curve = pr_curve(samples);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const PrPoint& p : curve) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

Matrix2 normalized_confusion(const ConfusionMatrix& cm) {
  const std::uint64_t yes = cm.tp + cm.fn;
  const std::uint64_t no = cm.fp + cm.tn;
  if (yes == 0 || no == 0) {
    throw Error(ErrorKind::EmptyRow, "a true-class row of the confusion matrix is empty");
  }
  const double y = static_cast<double>(yes);
  const double n = static_cast<double>(no);
  return {{{static_cast<double>(cm.tp) / y, static_cast<double>(cm.fn) / y},
           {static_cast<double>(cm.fp) / n, static_cast<double>(cm.tn) / n}}};
}

MetricsReport build_report(std::span<const ScoredSample> samples,
                           std::span<const Label> predictions) {
  std::vector<Label> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.truth);

  MetricsReport report;
  report.confusion = confusion(labels, predictions);
  report.basic = basic_metrics(report.confusion);
  report.kappa = kappa_terms(report.confusion);
  const ConfusionMatrix& cm = report.confusion;
  if (cm.tp + cm.fn > 0 && cm.fp + cm.tn > 0) {
    report.normalized = normalized_confusion(cm);
    report.roc = roc_curve(samples);
    report.auc = auc(report.roc);
    report.pr = pr_curve(samples);
    report.average_precision = average_precision(samples);
  } else {
    validate_scores(samples);
  }
  return report;
}

}  // namespace mrinet
