#include "supalign/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include "supalign/error.hpp"

namespace supalign {

namespace {

const std::vector<std::string> kAlignmentHeader = {"experiment_id", "metric",       "source_tag",
                                                   "target_tag",    "fold",         "score",
                                                   "alpha_selected", "pruned_src", "pruned_tgt"};

const char* const kPalette[] = {"#4C72B0", "#DD8452", "#55A868", "#C44E52",
                                "#8172B3", "#937860", "#DA8BC3", "#8C8C8C"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fmt(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// Tick step of 1, 2 or 5 times a power of ten giving about five ticks.
double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("alignment csv: bad " + what + " '" + s + "'");
  }
}

long long parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("alignment csv: bad " + what + " '" + s + "'");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  out_.open(path, std::ios::trunc);
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(std::string_view s) {
  if (!first_) out_ << ',';
  out_ << s;
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_double(v))); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::string_view(std::to_string(v))); }

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw IoError("write failed: " + path_.string());
}

std::string_view short_label(SourceTag tag) {
  switch (tag) {
    case SourceTag::kNeurons: return "Neuron";
    case SourceTag::kSaeLatents: return "SAE";
    case SourceTag::kRandSaeLatents: return "RandSAE";
  }
  return "?";
}

std::string comparison_label(const AlignmentReport& r) {
  return std::string(short_label(r.source)) + "->" + std::string(short_label(r.target));
}

void write_alignment_csv(const std::filesystem::path& path, const std::vector<AlignmentReport>& reports) {
  CsvWriter csv(path, kAlignmentHeader);
  for (const auto& r : reports) {
    for (std::size_t f = 0; f < r.per_fold_scores.size(); ++f) {
      csv.cell(r.experiment_id).cell(to_string(r.metric)).cell(to_string(r.source)).cell(to_string(r.target));
      csv.cell(f).cell(r.per_fold_scores[f]);
      if (f < r.alpha_exponent.size() && r.alpha_exponent[f]) {
        csv.cell(format_double(std::pow(10.0, *r.alpha_exponent[f])));
      } else {
        csv.empty();
      }
      csv.cell(r.pruned_src).cell(r.pruned_tgt);
      csv.end_row();
    }
  }
  csv.close();
}

std::vector<AlignmentReport> read_alignment_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != kAlignmentHeader) {
    throw FormatError(path.string() + ": unexpected alignment csv header");
  }
  std::vector<AlignmentReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != kAlignmentHeader.size()) {
      throw FormatError(path.string() + ": row has " + std::to_string(cells.size()) + " cells");
    }
    const Metric metric = parse_metric(cells[1]);
    const SourceTag src = parse_source_tag(cells[2]);
    const SourceTag tgt = parse_source_tag(cells[3]);
    const long long fold = parse_int(cells[4], "fold");
    const bool continues = !out.empty() && out.back().experiment_id == cells[0] &&
                           out.back().metric == metric && out.back().source == src &&
                           out.back().target == tgt &&
                           static_cast<long long>(out.back().per_fold_scores.size()) == fold;
    if (!continues) {
      if (fold != 0) throw FormatError(path.string() + ": fold rows out of order");
      AlignmentReport r;
      r.experiment_id = cells[0];
      r.metric = metric;
      r.source = src;
      r.target = tgt;
      r.pruned_src = static_cast<std::size_t>(parse_int(cells[7], "pruned_src"));
      r.pruned_tgt = static_cast<std::size_t>(parse_int(cells[8], "pruned_tgt"));
      out.push_back(std::move(r));
    }
    auto& r = out.back();
    r.per_fold_scores.push_back(parse_double(cells[5], "score"));
    if (cells[6].empty()) {
      r.alpha_exponent.emplace_back();
    } else {
      r.alpha_exponent.emplace_back(
          static_cast<int>(std::lround(std::log10(parse_double(cells[6], "alpha_selected")))));
    }
  }
  for (auto& r : out) summarize(r);
  return out;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<AlignmentReport>& reports) {
  CsvWriter csv(path, {"experiment_id", "metric", "source_tag", "target_tag", "folds", "mean", "stderr",
                       "pruned_src", "pruned_tgt"});
  for (const auto& r : reports) {
    csv.cell(r.experiment_id).cell(to_string(r.metric)).cell(to_string(r.source)).cell(to_string(r.target));
    csv.cell(r.per_fold_scores.size()).cell(r.mean).cell(r.stderr_).cell(r.pruned_src).cell(r.pruned_tgt);
    csv.end_row();
  }
  csv.close();
}

std::string grouped_bar_svg(const std::string& title, const std::string& y_label,
                            const std::vector<BarGroup>& groups) {
  // Legend order is first appearance of each bar label.
  std::vector<std::string> series;
  std::size_t max_bars = 1;
  double lo = 0.0, hi = 0.0;
  for (const auto& g : groups) {
    max_bars = std::max(max_bars, g.bars.size());
    for (const auto& b : g.bars) {
      if (std::find(series.begin(), series.end(), b.label) == series.end()) series.push_back(b.label);
      lo = std::min(lo, b.value - b.err);
      hi = std::max(hi, b.value + b.err);
    }
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double step = nice_step(hi - lo);
  lo = std::floor(lo / step) * step;
  hi = std::ceil(hi / step) * step;

  const double margin_left = 70, margin_right = 150, margin_top = 40, margin_bottom = 50;
  const double bar_w = 22, bar_gap = 4, group_gap = 30;
  const double group_w = static_cast<double>(max_bars) * (bar_w + bar_gap) - bar_gap;
  const double plot_w = std::max(200.0, static_cast<double>(groups.size()) * (group_w + group_gap) + group_gap);
  const double plot_h = 300;
  const double width = margin_left + plot_w + margin_right;
  const double height = margin_top + plot_h + margin_bottom;
  const auto y_of = [&](double v) { return margin_top + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(width, 0)
    << "\" height=\"" << fmt(height, 0) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n"
    << "<text x=\"" << fmt(width / 2, 1) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << xml_escape(title) << "</text>\n";

  for (double t = lo; t <= hi + 0.5 * step; t += step) {
    const double y = y_of(t);
    s << "<line x1=\"" << fmt(margin_left, 1) << "\" y1=\"" << fmt(y, 1) << "\" x2=\""
      << fmt(margin_left + plot_w, 1) << "\" y2=\"" << fmt(y, 1) << "\" stroke=\"#e0e0e0\"/>\n"
      << "<text x=\"" << fmt(margin_left - 6, 1) << "\" y=\"" << fmt(y + 4, 1)
      << "\" text-anchor=\"end\">" << fmt(std::abs(t) < 1e-12 ? 0.0 : t, step < 0.1 ? 2 : 1) << "</text>\n";
  }
  s << "<line x1=\"" << fmt(margin_left, 1) << "\" y1=\"" << fmt(y_of(0.0), 1) << "\" x2=\""
    << fmt(margin_left + plot_w, 1) << "\" y2=\"" << fmt(y_of(0.0), 1) << "\" stroke=\"#000000\"/>\n"
    << "<text transform=\"translate(18," << fmt(margin_top + plot_h / 2, 1)
    << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(y_label) << "</text>\n";

  double x = margin_left + group_gap;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.bars.size(); ++i) {
      const Bar& b = g.bars[i];
      const auto color_idx = static_cast<std::size_t>(
          std::find(series.begin(), series.end(), b.label) - series.begin());
      const double bx = x + static_cast<double>(i) * (bar_w + bar_gap);
      const double top = y_of(std::max(b.value, 0.0));
      const double bottom = y_of(std::min(b.value, 0.0));
      s << "<rect x=\"" << fmt(bx, 1) << "\" y=\"" << fmt(top, 1) << "\" width=\"" << fmt(bar_w, 1)
        << "\" height=\"" << fmt(bottom - top, 1) << "\" fill=\"" << kPalette[color_idx % 8]
        << "\"><title>" << xml_escape(g.label + " " + b.label) << ": " << fmt(b.value, 4) << " +- "
        << fmt(b.err, 4) << "</title></rect>\n";
      if (b.err > 0.0) {
        const double cx = bx + bar_w / 2;
        const double y1 = y_of(b.value + b.err), y2 = y_of(b.value - b.err);
        s << "<path d=\"M" << fmt(cx, 1) << ' ' << fmt(y1, 1) << "V" << fmt(y2, 1) << "M"
          << fmt(cx - 5, 1) << ' ' << fmt(y1, 1) << "h10M" << fmt(cx - 5, 1) << ' ' << fmt(y2, 1)
          << "h10\" stroke=\"#000000\" fill=\"none\"/>\n";
      }
    }
    s << "<text x=\"" << fmt(x + group_w / 2, 1) << "\" y=\"" << fmt(margin_top + plot_h + 20, 1)
      << "\" text-anchor=\"middle\">" << xml_escape(g.label) << "</text>\n";
    x += group_w + group_gap;
  }

  for (std::size_t i = 0; i < series.size(); ++i) {
    const double ly = margin_top + 10 + static_cast<double>(i) * 20;
    const double lx = margin_left + plot_w + 20;
    s << "<rect x=\"" << fmt(lx, 1) << "\" y=\"" << fmt(ly - 10, 1) << "\" width=\"12\" height=\"12\" fill=\""
      << kPalette[i % 8] << "\"/>\n"
      << "<text x=\"" << fmt(lx + 18, 1) << "\" y=\"" << fmt(ly, 1) << "\">" << xml_escape(series[i])
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::vector<BarGroup> groups_from_reports(const std::vector<AlignmentReport>& reports,
                                          const std::vector<std::string>& group_labels) {
  std::vector<std::string> ids;
  for (const auto& r : reports) {
    if (std::find(ids.begin(), ids.end(), r.experiment_id) == ids.end()) ids.push_back(r.experiment_id);
  }
  std::vector<BarGroup> groups;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    BarGroup g;
    g.label = i < group_labels.size() ? group_labels[i] : ids[i];
    for (const auto& r : reports) {
      if (r.experiment_id == ids[i]) g.bars.push_back({comparison_label(r), r.mean, r.stderr_});
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

EmittedFiles emit_report(const std::filesystem::path& dir, const std::vector<AlignmentReport>& reports) {
  if (reports.empty()) throw DegenerateInputError("emit_report: no reports");
  EmittedFiles files;
  write_alignment_csv(dir / "alignment.csv", reports);
  files.written.push_back(dir / "alignment.csv");
  write_summary_csv(dir / "alignment_summary.csv", reports);
  files.written.push_back(dir / "alignment_summary.csv");
  for (const Metric m : {Metric::kSemiMatch, Metric::kSoftMatch, Metric::kRidge}) {
    std::vector<AlignmentReport> subset;
    for (const auto& r : reports) {
      if (r.metric == m) subset.push_back(r);
    }
    const std::string name(to_string(m));
    if (subset.empty()) {
      files.notices.push_back("no " + name + " reports; " + name + ".svg not written");
      std::clog << "[report] " << files.notices.back() << '\n';
      continue;
    }
    const auto path = dir / (name + ".svg");
    write_text(path, grouped_bar_svg(name + " alignment", "score (mean +- s.e.)", groups_from_reports(subset)));
    files.written.push_back(path);
  }
  return files;
}

}  // namespace supalign
