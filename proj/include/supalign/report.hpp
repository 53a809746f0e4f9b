#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "supalign/metrics.hpp"

namespace supalign {

/// Comma-separated writer; doubles are printed with 17 significant digits so
/// re-parsing reproduces them exactly.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter& cell(std::string_view s);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& empty() { return cell(std::string_view{}); }
  void end_row();
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  bool first_ = true;
};

std::string format_double(double v);

/// Short label used in charts: Neuron, SAE, RandSAE.
std::string_view short_label(SourceTag tag);
/// "SAE->Neuron" style comparison name.
std::string comparison_label(const AlignmentReport& r);

/// One row per (report, fold) with the columns experiment_id, metric,
/// source_tag, target_tag, fold, score, alpha_selected, pruned_src, pruned_tgt.
void write_alignment_csv(const std::filesystem::path& path, const std::vector<AlignmentReport>& reports);
/// Inverse of write_alignment_csv; rows regroup into reports in file order.
std::vector<AlignmentReport> read_alignment_csv(const std::filesystem::path& path);

/// Mean and standard error per report.
void write_summary_csv(const std::filesystem::path& path, const std::vector<AlignmentReport>& reports);

struct Bar {
  std::string label;
  double value = 0.0;
  double err = 0.0;
};

struct BarGroup {
  std::string label;
  std::vector<Bar> bars;
};

/// Static SVG 1.1 grouped bar chart with +-err whiskers. Bars with the same
/// label share a color and a legend entry.
std::string grouped_bar_svg(const std::string& title, const std::string& y_label,
                            const std::vector<BarGroup>& groups);

/// Groups reports by experiment_id (one group per id, in order of first
/// appearance), one bar per comparison.
std::vector<BarGroup> groups_from_reports(const std::vector<AlignmentReport>& reports,
                                          const std::vector<std::string>& group_labels = {});

struct EmittedFiles {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> notices;
};

/// alignment.csv, alignment_summary.csv and one <metric>.svg per metric that
/// has reports; metrics without reports get a notice instead of a file.
EmittedFiles emit_report(const std::filesystem::path& dir, const std::vector<AlignmentReport>& reports);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace supalign
