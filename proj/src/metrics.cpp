#include "leafseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <tuple>

#include "leafseg/error.hpp"

namespace leafseg {

namespace {

void require_same_size(const LabelImage& a, const LabelImage& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "label images differ in size");
  }
}

/// Leaf sizes per image and the overlap count of every co-occurring pair.
struct Contingency {
  std::vector<std::int32_t> a_labels;  // sorted
  std::vector<std::int32_t> b_labels;  // sorted
  Eigen::Array<std::int64_t, Eigen::Dynamic, 1> a_size;
  Eigen::Array<std::int64_t, Eigen::Dynamic, 1> b_size;
  Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> overlap;  // a x b
};

std::vector<std::int32_t> leaf_labels(const LabelImage& img) {
  std::vector<std::int32_t> labels(img.data(), img.data() + img.size());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  labels.erase(std::remove_if(labels.begin(), labels.end(), [](std::int32_t v) { return v <= 0; }), labels.end());
  return labels;
}

Eigen::Index position(const std::vector<std::int32_t>& labels, std::int32_t v) {
  return std::lower_bound(labels.begin(), labels.end(), v) - labels.begin();
}

Contingency contingency(const LabelImage& a, const LabelImage& b) {
  Contingency t;
  t.a_labels = leaf_labels(a);
  t.b_labels = leaf_labels(b);
  const auto na = static_cast<Eigen::Index>(t.a_labels.size());
  const auto nb = static_cast<Eigen::Index>(t.b_labels.size());
  t.a_size = decltype(t.a_size)::Zero(na);
  t.b_size = decltype(t.b_size)::Zero(nb);
  t.overlap = decltype(t.overlap)::Zero(na, nb);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const std::int32_t la = a.data()[i];
    const std::int32_t lb = b.data()[i];
    const Eigen::Index ia = la > 0 ? position(t.a_labels, la) : -1;
    const Eigen::Index ib = lb > 0 ? position(t.b_labels, lb) : -1;
    if (ia >= 0) ++t.a_size(ia);
    if (ib >= 0) ++t.b_size(ib);
    if (ia >= 0 && ib >= 0) ++t.overlap(ia, ib);
  }
  return t;
}

double best_dice_from(const Contingency& t) {
  const Eigen::Index na = t.a_size.size();
  const Eigen::Index nb = t.b_size.size();
  if (na == 0 && nb == 0) return 1.0;
  if (na == 0 || nb == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < na; ++i) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < nb; ++j) best = std::max(best, dice(t.overlap(i, j), t.a_size(i), t.b_size(j)));
    total += best;
  }
  return total / static_cast<double>(na);
}

}  // namespace

double dice(std::int64_t overlap, std::int64_t size_a, std::int64_t size_b) noexcept {
  if (size_a + size_b == 0) return 1.0;
  return 2.0 * static_cast<double>(overlap) / static_cast<double>(size_a + size_b);
}

double dice(const Plane<bool>& a, const Plane<bool>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorCode::DimensionMismatch, "masks differ in size");
  return dice((a && b).count(), a.count(), b.count());
}

double best_dice(const LabelImage& src, const LabelImage& ref) {
  require_same_size(src, ref);
  return best_dice_from(contingency(src, ref));
}

double symmetric_best_dice(const LabelImage& pred, const LabelImage& gt) {
  require_same_size(pred, gt);
  const Contingency forward = contingency(pred, gt);
  Contingency backward{forward.b_labels, forward.a_labels, forward.b_size, forward.a_size,
                       forward.overlap.transpose()};
  return std::min(best_dice_from(forward), best_dice_from(backward));
}

double foreground_dice(const LabelImage& pred, const LabelImage& gt) {
  require_same_size(pred, gt);
  return dice(Plane<bool>(pred > 0), Plane<bool>(gt > 0));
}

CountDifference count_difference(const LabelImage& pred, const LabelImage& gt) {
  const int dic = static_cast<int>(leaf_labels(pred).size()) - static_cast<int>(leaf_labels(gt).size());
  return {dic, std::abs(dic)};
}

double subset_matched_jaccard(const LabelImage& pred, const LabelImage& gt) {
  require_same_size(pred, gt);
  const Contingency t = contingency(pred, gt);
  const Eigen::Index np = t.a_size.size();
  const Eigen::Index ng = t.b_size.size();
  if (ng == 0) return np == 0 ? 1.0 : 0.0;

  struct Candidate {
    double jaccard;
    Eigen::Index gt;
    Eigen::Index pred;
  };
  std::vector<Candidate> candidates;
  for (Eigen::Index p = 0; p < np; ++p) {
    for (Eigen::Index g = 0; g < ng; ++g) {
      const std::int64_t inter = t.overlap(p, g);
      if (inter == 0) continue;
      candidates.push_back({static_cast<double>(inter) / static_cast<double>(t.a_size(p) + t.b_size(g) - inter), g, p});
    }
  }
  // Labels are sorted, so index order equals label order for the tie-breaks.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.jaccard, a.gt, a.pred) < std::tie(a.jaccard, b.gt, b.pred);
  });
  std::vector<char> pred_used(static_cast<std::size_t>(np), 0);
  std::vector<char> gt_used(static_cast<std::size_t>(ng), 0);
  double total = 0.0;
  for (const Candidate& c : candidates) {
    if (pred_used[static_cast<std::size_t>(c.pred)] || gt_used[static_cast<std::size_t>(c.gt)]) continue;
    pred_used[static_cast<std::size_t>(c.pred)] = gt_used[static_cast<std::size_t>(c.gt)] = 1;
    total += c.jaccard;
  }
  return total / static_cast<double>(ng);
}

PlantMetrics evaluate_plant(const std::string& plant_id, const LabelImage& pred, const LabelImage& gt) {
  require_same_size(pred, gt);
  const CountDifference count = count_difference(pred, gt);
  return {plant_id, count.dic, count.abs_dic, foreground_dice(pred, gt), symmetric_best_dice(pred, gt),
          subset_matched_jaccard(pred, gt)};
}

namespace {

template <typename Getter>
MetricSummary summarize(const std::vector<PlantMetrics>& records, Getter get) {
  const double n = static_cast<double>(records.size());
  double mean = 0.0;
  for (const auto& r : records) mean += get(r);
  mean /= n;
  double var = 0.0;
  for (const auto& r : records) var += (get(r) - mean) * (get(r) - mean);
  return {mean, std::sqrt(var / n)};
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

MetricReport aggregate(std::vector<PlantMetrics> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyReport, "no plants to aggregate");
  MetricReport report;
  report.dic = summarize(records, [](const PlantMetrics& r) { return static_cast<double>(r.dic); });
  report.abs_dic = summarize(records, [](const PlantMetrics& r) { return static_cast<double>(r.abs_dic); });
  report.fbd = summarize(records, [](const PlantMetrics& r) { return r.fbd; });
  report.sbd = summarize(records, [](const PlantMetrics& r) { return r.sbd; });
  report.smj = summarize(records, [](const PlantMetrics& r) { return r.smj; });
  report.plants = std::move(records);
  return report;
}

void write_report_csv(std::ostream& out, const MetricReport& report) {
  out << "plant_id,dic,abs_dic,fbd,sbd,smj\n";
  for (const auto& p : report.plants) {
    out << p.plant_id << ',' << p.dic << ',' << p.abs_dic << ',' << fixed6(p.fbd) << ',' << fixed6(p.sbd) << ','
        << fixed6(p.smj) << '\n';
  }
  if (report.plants.empty()) return;
  auto row = [&](const char* name, auto pick) {
    out << name << ',' << fixed6(pick(report.dic)) << ',' << fixed6(pick(report.abs_dic)) << ','
        << fixed6(pick(report.fbd)) << ',' << fixed6(pick(report.sbd)) << ',' << fixed6(pick(report.smj)) << '\n';
  };
  row("#mean", [](const MetricSummary& s) { return s.mean; });
  row("#std", [](const MetricSummary& s) { return s.stddev; });
}

void save_report_csv(const std::filesystem::path& path, const MetricReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_report_csv(out, report);
}

}  // namespace leafseg
