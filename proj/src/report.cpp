#include "mrinet/report.hpp"

#include <cstdio>
#include <fstream>

#include "mrinet/error.hpp"
#include "mrinet/training.hpp"

namespace mrinet {

namespace fs = std::filesystem;
using csv::format_double;

namespace {

std::string opt(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string(kUndefined);
}

std::string count(std::uint64_t v) { return std::to_string(v); }

}  // namespace

std::vector<csv::Row> metrics_rows(const MetricsReport& r) {
  const auto& k = r.kappa;
  return {
      {"metric", "value"},
      {"accuracy", opt(r.basic.accuracy)},
      {"precision", opt(r.basic.precision)},
      {"recall", opt(r.basic.recall)},
      {"f1", opt(r.basic.f1)},
      {"kappa", opt(k.kappa)},
      {"auc", opt(r.auc)},
      {"average_precision", opt(r.average_precision)},
      {"p0", format_double(k.p0)},
      {"p_yes", format_double(k.p_yes)},
      {"p_no", format_double(k.p_no)},
      {"p_e", format_double(k.p_e)},
      {"tp", count(r.confusion.tp)},
      {"fn", count(r.confusion.fn)},
      {"fp", count(r.confusion.fp)},
      {"tn", count(r.confusion.tn)},
  };
}

std::vector<csv::Row> roc_rows(std::span<const RocPoint> curve) {
  std::vector<csv::Row> rows{{"threshold", "fpr", "tpr"}};
  for (const auto& p : curve) {
    rows.push_back({format_double(p.threshold), format_double(p.fpr), format_double(p.tpr)});
  }
  return rows;
}

std::vector<csv::Row> pr_rows(std::span<const PrPoint> curve) {
  std::vector<csv::Row> rows{{"threshold", "precision", "recall"}};
  for (const auto& p : curve) {
    rows.push_back(
        {format_double(p.threshold), format_double(p.precision), format_double(p.recall)});
  }
  return rows;
}

std::vector<csv::Row> confusion_rows(const MetricsReport& r) {
  const auto& cm = r.confusion;
  auto norm = [&](int row, int col) {
    return r.normalized ? format_double((*r.normalized)[row][col]) : std::string(kUndefined);
  };
  auto row_norm = [&](int row, std::uint64_t a, std::uint64_t b) {
    if (r.normalized) return std::pair{norm(row, 0), norm(row, 1)};
    const std::uint64_t n = a + b;
    if (n == 0) return std::pair{std::string(kUndefined), std::string(kUndefined)};
    return std::pair{format_double(static_cast<double>(a) / static_cast<double>(n)),
                     format_double(static_cast<double>(b) / static_cast<double>(n))};
  };
  const auto yes = row_norm(0, cm.tp, cm.fn);
  const auto no = row_norm(1, cm.fp, cm.tn);
  return {
      {"actual", "predicted_yes", "predicted_no", "normalized_yes", "normalized_no"},
      {"YES", count(cm.tp), count(cm.fn), yes.first, yes.second},
      {"NO", count(cm.fp), count(cm.tn), no.first, no.second},
  };
}

std::vector<csv::Row> history_rows(const RunHistory& history) {
  std::vector<csv::Row> rows{{"epoch", "train_loss", "train_acc", "val_loss", "val_acc"}};
  for (const auto& e : history.epochs) {
    rows.push_back({std::to_string(e.epoch), format_double(e.train_loss),
                    format_double(e.train_accuracy), format_double(e.val_loss),
                    format_double(e.val_accuracy)});
  }
  return rows;
}

std::string render_roc_svg(std::span<const RocPoint> curve) {
  constexpr double kOrigin = 40.0;
  constexpr double kSide = 400.0;
  auto px = [&](double x) { return kOrigin + x * kSide; };
  auto py = [&](double y) { return kOrigin + (1.0 - y) * kSide; };
  char buf[128];
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" "
      "viewBox=\"0 0 480 480\">\n"
      "<rect x=\"40\" y=\"40\" width=\"400\" height=\"400\" fill=\"none\" stroke=\"#ccc\"/>\n"
      "<line x1=\"40\" y1=\"440\" x2=\"440\" y2=\"440\" stroke=\"black\"/>\n"
      "<line x1=\"40\" y1=\"440\" x2=\"40\" y2=\"40\" stroke=\"black\"/>\n"
      "<line x1=\"40\" y1=\"440\" x2=\"440\" y2=\"40\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n"
      "<text x=\"240\" y=\"470\" text-anchor=\"middle\" font-size=\"14\">FPR</text>\n"
      "<text x=\"15\" y=\"240\" text-anchor=\"middle\" font-size=\"14\" "
      "transform=\"rotate(-90 15 240)\">TPR</text>\n"
      "<polyline fill=\"none\" stroke=\"blue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.2f,%.2f", i ? " " : "", px(curve[i].fpr),
                  py(curve[i].tpr));
    svg += buf;
  }
  svg += "\"/>\n</svg>\n";
  return svg;
}

void write_history(const RunHistory& history, const fs::path& path) {
  csv::write_file(path, history_rows(history));
}

RunHistory read_history(const fs::path& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows.front() != history_rows(RunHistory{}).front()) {
    throw Error(ErrorKind::HeaderParse, path.string() + ": bad history header");
  }
  RunHistory h;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 5) throw Error(ErrorKind::HeaderParse, path.string() + ": bad history row");
    EpochRecord e;
    e.epoch = static_cast<std::size_t>(std::stoull(r[0]));
    e.train_loss = csv::parse_double(r[1]);
    e.train_accuracy = csv::parse_double(r[2]);
    e.val_loss = csv::parse_double(r[3]);
    e.val_accuracy = csv::parse_double(r[4]);
    h.epochs.push_back(e);
  }
  return h;
}

void emit_report(const MetricsReport& report, const RunHistory* history,
                 const fs::path& out_dir) {
  fs::create_directories(out_dir);
  csv::write_file(out_dir / "metrics.csv", metrics_rows(report));
  csv::write_file(out_dir / "roc.csv", roc_rows(report.roc));
  csv::write_file(out_dir / "pr.csv", pr_rows(report.pr));
  csv::write_file(out_dir / "confusion.csv", confusion_rows(report));
  csv::write_file(out_dir / "history.csv", history_rows(history ? *history : RunHistory{}));
  std::ofstream svg(out_dir / "roc.svg", std::ios::binary);
  if (!svg) throw Error(ErrorKind::Io, "cannot write " + (out_dir / "roc.svg").string());
  svg << render_roc_svg(report.roc);
}

}  // namespace mrinet
