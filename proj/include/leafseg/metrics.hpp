#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "leafseg/image.hpp"

namespace leafseg {

/// 2|a n b| / (|a| + |b|); 1 when both are empty.
double dice(std::int64_t overlap, std::int64_t size_a, std::int64_t size_b) noexcept;

/// Dice of two boolean masks of one grid.
double dice(const Plane<bool>& a, const Plane<bool>& b);

/// Mean over leaves of `src` of the best Dice against any leaf of `ref`.
/// 1 when neither has leaves, 0 when exactly one side is empty.
double best_dice(const LabelImage& src, const LabelImage& ref);

double symmetric_best_dice(const LabelImage& pred, const LabelImage& gt);

/// Foreground/background Dice: leaf identity ignored.
double foreground_dice(const LabelImage& pred, const LabelImage& gt);

struct CountDifference {
  int dic = 0;
  int abs_dic = 0;
};

CountDifference count_difference(const LabelImage& pred, const LabelImage& gt);

/// Greedy one-to-one matching on the highest Jaccard index (ties: lower gt
/// label, then lower pred label), averaged over gt leaves with unmatched gt
/// leaves scoring 0. 1 when both images have no leaves.
double subset_matched_jaccard(const LabelImage& pred, const LabelImage& gt);

struct PlantMetrics {
  std::string plant_id;
  int dic = 0;
  int abs_dic = 0;
  double fbd = 0.0;
  double sbd = 0.0;
  double smj = 0.0;
};

PlantMetrics evaluate_plant(const std::string& plant_id, const LabelImage& pred, const LabelImage& gt);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct MetricReport {
  std::vector<PlantMetrics> plants;
  MetricSummary dic, abs_dic, fbd, sbd, smj;
};

/// Per-metric mean and population standard deviation, plants weighted equally.
MetricReport aggregate(std::vector<PlantMetrics> records);

/// `plant_id,dic,abs_dic,fbd,sbd,smj`, one row per plant, then `#mean` and
/// `#std` rows (omitted for an empty report). Reals use 6 decimals.
void write_report_csv(std::ostream& out, const MetricReport& report);
void save_report_csv(const std::filesystem::path& path, const MetricReport& report);

}  // namespace leafseg
