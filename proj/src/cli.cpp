#include "pwc/cli.hpp"

#include "pwc/hierarchy.hpp"
#include "pwc/optimal1d.hpp"
#include "pwc/regions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace pwc {

void validate(const RunConfig& c) {
  static const std::vector<std::string> commands{"optimal", "hier", "segment", "compare", "verify"};
  if (std::find(commands.begin(), commands.end(), c.command) == commands.end())
    throw UsageError("unknown command '" + c.command + "'");
  if (c.input.empty()) throw UsageError("--input is required");
  if (c.max_clusters < 1) throw UsageError("--max-clusters must be at least 1");
  if (!(c.lambda >= 0)) throw UsageError("--lambda must be non-negative");
  static const std::vector<std::string> criteria{"plain", "additive", "flsa", "extended", "all"};
  if (std::find(criteria.begin(), criteria.end(), c.criterion) == criteria.end())
    throw UsageError("unknown criterion '" + c.criterion + "'");
  for (std::size_t l : c.levels)
    if (l < 1) throw UsageError("levels must be positive");
}

std::vector<std::size_t> parse_levels(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || value == 0)
      throw UsageError("bad level list '" + text + "'");
    out.push_back(value);
    start = end + 1;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

IntImage block_mask(const IntImage& image, std::size_t factor) {
  if (factor < 1) throw PreconditionError("block factor must be positive");
  IntImage out{image.width, image.height, PixelMatrix<std::int64_t>(image.pixels.rows(), image.pixels.cols())};
  for (std::size_t by = 0; by < image.height; by += factor) {
    for (std::size_t bx = 0; bx < image.width; bx += factor) {
      const std::size_t ey = std::min(by + factor, image.height), ex = std::min(bx + factor, image.width);
      const auto n = static_cast<std::int64_t>((ey - by) * (ex - bx));
      for (Eigen::Index c = 0; c < image.channels(); ++c) {
        std::int64_t sum = 0;
        for (std::size_t y = by; y < ey; ++y)
          for (std::size_t x = bx; x < ex; ++x) sum += image.pixels(static_cast<Eigen::Index>(y * image.width + x), c);
        std::int64_t q = sum / n, r = sum % n;
        if (2 * r > n || (2 * r == n && (q & 1) != 0)) ++q;
        for (std::size_t y = by; y < ey; ++y)
          for (std::size_t x = bx; x < ex; ++x) out.pixels(static_cast<Eigen::Index>(y * image.width + x), c) = q;
      }
    }
  }
  return out;
}

namespace {

RasterImage load_image(const std::filesystem::path& path) { return read_pnm(read_file(path)); }

void ensure_out(const RunConfig& c) { std::filesystem::create_directories(c.out); }

Histogram gray_histogram(const IntImage& u) {
  if (u.channels() != 1) throw UsageError("the optimal sequence needs a grayscale (P5) image");
  return histogram(u);
}

std::vector<ClusterId> optimal_pixel_labels(const IntImage& u, const Histogram& h, const Cuts& cuts) {
  const std::vector<ClusterId> bin_label = labels_from_cuts(h.size(), cuts);
  std::vector<ClusterId> out(u.pixel_count());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = bin_label[h.find(u.pixels(static_cast<Eigen::Index>(p), 0))];
  return out;
}

void write_level_files(const RunConfig& c, const std::string& stem, const IntImage& u, std::size_t g,
                       const std::vector<ClusterId>& labels, bool with_labels) {
  write_file(c.out / (stem + "_g" + std::to_string(g) + ".pgm"), write_approximation(u, labels));
  if (with_labels) {
    LabelMap map{u.width, u.height, std::vector<std::uint32_t>(labels.begin(), labels.end())};
    write_file(c.out / (stem + "_g" + std::to_string(g) + ".lbl"), write_labels(map));
  }
}

IntImage load_mask(const RunConfig& c, const IntImage& u) {
  const IntImage v = to_int_image(load_image(*c.mask));
  if (v.width != u.width || v.height != u.height)
    throw UsageError("mask is " + std::to_string(v.width) + "x" + std::to_string(v.height) + " but the input is " +
                     std::to_string(u.width) + "x" + std::to_string(u.height));
  return v;
}

RegionSegmentation segment_with(const IntImage& u, const std::string& name, double lambda, std::size_t max_g,
                                const std::vector<std::size_t>& levels) {
  RegionGraph g = RegionGraph::singletons(u);
  RegionSegmentation out;
  if (name == "extended") {
    out = region_grow_extended(std::move(g), 1, levels);
  } else {
    const MergeCriterion c = name == "plain"      ? MergeCriterion::plain()
                             : name == "additive" ? MergeCriterion::additive(lambda)
                                                  : MergeCriterion::flsa();
    out = region_merge(std::move(g), c, 1, levels);
  }
  out.series = out.series.truncated(max_g);
  return out;
}

std::vector<std::string> criteria_of(const RunConfig& c) {
  if (c.criterion == "all") return {"plain", "additive", "flsa", "extended"};
  return {c.criterion};
}

std::vector<ClusterId> to_cluster_ids(const std::vector<RegionId>& labels) {
  return std::vector<ClusterId>(labels.begin(), labels.end());
}

}  // namespace

int cmd_optimal(const RunConfig& c, std::ostream& log) {
  const IntImage u = to_int_image(load_image(c.input));
  const Histogram h = gray_histogram(u);
  const OptimalSolution sol = optimal_sequence(h, c.max_clusters);
  ensure_out(c);
  write_file(c.out / "optimal.csv", write_series(sol.error, c.mode));
  for (std::size_t g : c.levels) {
    if (g > sol.max_clusters) continue;
    write_level_files(c, "optimal", u, g, optimal_pixel_labels(u, h, sol.cuts_for(g)), false);
  }
  log << "optimal: " << sol.error.size() << " levels written to " << (c.out / "optimal.csv").string() << "\n";
  return kSuccess;
}

int cmd_hier(const RunConfig& c, std::ostream& log) {
  const IntImage u = to_int_image(load_image(c.input));
  const Sequence seq = c.mask ? build_sequence(u, mask_from(load_mask(c, u)), c.max_clusters)
                              : build_sequence(u, c.max_clusters);
  ensure_out(c);
  write_file(c.out / "hier.csv", write_series(seq.series, c.mode));
  for (std::size_t g : c.levels) {
    if (g < seq.hierarchy.min_clusters() || g > seq.hierarchy.max_clusters()) continue;
    write_level_files(c, "hier", u, g, seq.pixel_labels_at(g), true);
  }
  log << "hier: " << seq.series.size() << " levels, mask clusters " << seq.mask_clusters << ", convexity residuals "
      << seq.convexity.residual.size() << "\n";
  return kSuccess;
}

int cmd_segment(const RunConfig& c, std::ostream& log) {
  const IntImage u = to_int_image(load_image(c.input));
  ensure_out(c);
  for (const auto& name : criteria_of(c)) {
    const RegionSegmentation seg = segment_with(u, name, c.lambda, c.max_clusters, c.levels);
    write_file(c.out / (name + ".csv"), write_series(seg.series, SeriesMode::both));
    for (const auto& [g, labels] : seg.snapshots) write_level_files(c, name, u, g, to_cluster_ids(labels), false);
    log << name << ": " << seg.series.size() << " levels, " << seg.merges << " merges, " << seg.captures
        << " captures, " << seg.splits << " splits\n";
  }
  return kSuccess;
}

int cmd_compare(const RunConfig& c, std::ostream& log) {
  const IntImage u = to_int_image(load_image(c.input));
  ensure_out(c);
  std::map<std::string, ErrorSeries> curves;
  if (u.channels() == 1) curves["optimal"] = optimal_sequence(histogram(u), c.max_clusters).error;
  curves["hier"] = build_sequence(u, c.max_clusters).series;
  const IntImage v = c.mask ? load_mask(c, u) : block_mask(u, 16);
  curves["hier_mask"] = build_sequence(u, mask_from(v), c.max_clusters).series;
  for (const char* name : {"additive", "flsa", "extended"})
    curves[name] = segment_with(u, name, c.lambda, c.max_clusters, {}).series;

  const std::vector<std::string> order{"optimal", "hier", "hier_mask", "additive", "flsa", "extended"};
  std::string csv = "g";
  for (const auto& name : order)
    if (curves.count(name)) csv += "," + name;
  csv += "\n";
  for (std::size_t g = 1; g <= c.max_clusters; ++g) {
    std::string row = std::to_string(g);
    bool any = false;
    for (const auto& name : order) {
      auto it = curves.find(name);
      if (it == curves.end()) continue;
      const auto s = it->second.sigma_at(g);
      row += ",";
      if (s) {
        row += format_double(*s);
        any = true;
      }
    }
    if (any) csv += row + "\n";
  }
  write_file(c.out / "compare.csv", csv);
  for (const auto& [name, series] : curves) write_file(c.out / (name + ".csv"), write_series(series, SeriesMode::both));
  log << "compare: " << curves.size() << " curves written to " << (c.out / "compare.csv").string() << "\n";
  return kSuccess;
}

// ---------------------------------------------------------------------------

namespace {

struct Check {
  std::string name;
  bool hard;
  bool passed;
  std::string detail;
};

IntImage crop(const IntImage& u, std::size_t w, std::size_t h) {
  w = std::min(w, u.width);
  h = std::min(h, u.height);
  IntImage out{w, h, PixelMatrix<std::int64_t>(static_cast<Eigen::Index>(w * h), u.channels())};
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      out.pixels.row(static_cast<Eigen::Index>(y * w + x)) = u.pixels.row(static_cast<Eigen::Index>(y * u.width + x));
  return out;
}

detail::wide_int sse_numerator(const ExactStats& s) {
  detail::wide_int norm = 0;
  for (Eigen::Index c = 0; c < s.sum().size(); ++c) norm += detail::wide_int(s.sum()(c)) * s.sum()(c);
  return detail::wide_int(s.count()) * s.sum_sq() - norm;
}

// Cluster-by-cluster exact comparison: every cluster of `b` carries the
// same count and `factor` times the squared-error numerator of the
// corresponding cluster of `a`.
bool scaled_exactly(const ExactPartition& a, const ExactPartition& b, std::int64_t count_factor,
                    detail::wide_int num_factor) {
  if (a.cluster_count() != b.cluster_count()) return false;
  auto ia = a.clusters().begin();
  auto ib = b.clusters().begin();
  for (; ia != a.clusters().end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (ib->second.count() != count_factor * ia->second.count()) return false;
    if (sse_numerator(ib->second) != num_factor * sse_numerator(ia->second)) return false;
  }
  return true;
}

std::vector<Check> verify_battery(const IntImage& u, std::size_t max_g) {
  std::vector<Check> checks;
  auto add = [&](std::string name, bool hard, bool passed, std::string detail) {
    checks.push_back({std::move(name), hard, passed, std::move(detail)});
  };
  const bool gray = u.channels() == 1;
  const Sequence seq = build_sequence(u, max_g);
  const std::size_t gmax = seq.hierarchy.max_clusters();
  const std::size_t top = std::min(gmax, max_g);

  add("hier_nonincreasing", true, seq.series.is_nonincreasing(), std::to_string(seq.series.size()) + " levels");
  {
    const auto residual = seq.series.convexity_violations();
    add("hier_convexity", false, residual.empty(), std::to_string(residual.size()) + " residual violations");
  }

  if (gray) {
    const Histogram h = histogram(u);
    const OptimalSolution opt = optimal_sequence(h, max_g);
    add("optimal_nonincreasing", true, opt.error.is_nonincreasing(), std::to_string(opt.error.size()) + " levels");
    const auto viol = opt.error.convexity_violations();
    add("optimal_convexity", false, viol.empty(), std::to_string(viol.size()) + " violations");

    std::size_t below = 0;
    for (std::size_t g = 1; g <= top; ++g)
      if (*seq.series.error_at(g) < *opt.error.error_at(g)) ++below;
    add("majorization", true, below == 0, std::to_string(below) + " levels below the optimum");
    add("majorization_g1", true, *seq.series.error_at(1) == *opt.error.error_at(1),
        format_double(*seq.series.error_at(1)) + " vs " + format_double(*opt.error.error_at(1)));
    if (top == gmax)
      add("majorization_gmax", true, *seq.series.error_at(gmax) == *opt.error.error_at(gmax),
          format_double(*seq.series.error_at(gmax)));

    const IntImage ua = affine(u, 3, 5);
    const Histogram ha = histogram(ua);
    const OptimalSolution opta = optimal_sequence(ha, max_g);
    bool same = opta.max_clusters == opt.max_clusters;
    for (std::size_t g = 1; same && g <= opt.max_clusters; ++g) same = opta.cuts_for(g) == opt.cuts_for(g);
    add("optimal_affine", true, same, "a = 3, b = 5");
  }

  {
    const IntImage ua = affine(u, 3, 5);
    const Sequence sa = build_sequence(ua, max_g);
    bool ok = sa.hierarchy.max_clusters() == gmax;
    for (std::size_t g = 1; ok && g <= top; ++g)
      ok = sa.pixel_labels_at(g) == seq.pixel_labels_at(g) &&
           scaled_exactly(seq.hierarchy.level(g), sa.hierarchy.level(g), 1, 9);
    add("hier_affine", true, ok, "a = 3, b = 5: label maps equal, E scaled by 9");
  }
  {
    const IntImage ud = enlarge2x(u);
    const Sequence sd = build_sequence(ud, max_g);
    bool ok = sd.hierarchy.max_clusters() == gmax;
    for (std::size_t g = 1; ok && g <= top; ++g) {
      const auto l = seq.pixel_labels_at(g);
      ok = sd.pixel_labels_at(g) == enlarge2x(std::span<const ClusterId>(l), u.width, u.height) &&
           *sd.series.error_at(g) == 4 * *seq.series.error_at(g);
    }
    add("hier_pixel_doubling", true, ok, "E ratio 4 and commuting label maps");
  }

  {
    IntImage small = crop(u, 3, 3);
    if (gray) {
      const Histogram hs = histogram(small);
      const OptimalSolution o = optimal_sequence(hs, 3);
      const auto labels = optimal_pixel_labels(small, hs, o.cuts_for(o.max_clusters));
      const RasterImage q = approximation(small, labels);
      small = to_int_image(q);
    }
    const Sequence ss = build_sequence(small, 1000);
    std::vector<std::size_t> levels;
    for (std::size_t g = ss.hierarchy.min_clusters(); g <= ss.hierarchy.max_clusters(); ++g) levels.push_back(g);
    const auto rep = self_consistency_check(small, ss, levels);
    add("self_consistency_small", gray, rep.all_reproduced(), std::to_string(levels.size()) + " levels on a 3x3 crop");

    const IntImage mid = crop(u, 16, 16);
    const Sequence sm = build_sequence(mid, 1000);
    levels.clear();
    for (std::size_t g = sm.hierarchy.min_clusters(); g <= std::min<std::size_t>(sm.hierarchy.max_clusters(), 16); ++g)
      levels.push_back(g);
    const auto rep16 = self_consistency_check(mid, sm, levels);
    std::size_t failed = 0;
    for (const auto& l : rep16.levels) failed += l.reproduced ? 0 : 1;
    add("self_consistency_16x16", false, failed == 0, std::to_string(failed) + " of " + std::to_string(levels.size()) +
                                                          " levels not reproduced");
  }

  {
    const IntImage piece = crop(u, 32, 32);
    const RegionSegmentation seg = region_merge(RegionGraph::singletons(piece), MergeCriterion::plain(), 1);
    std::string why;
    RegionGraph probe = RegionGraph::singletons(piece);
    for (std::size_t k = 0; k < 10 && probe.region_count() > 1; ++k) {
      const auto ids = probe.region_ids();
      probe.merge(ids.front(), probe.neighbors(ids.front()).front().id);
    }
    add("region_graph_consistency", true, probe.consistent(&why), why.empty() ? "recount matches" : why);
    if (gray) {
      const OptimalSolution o = optimal_sequence(histogram(piece), 1000);
      std::size_t violations = 0;
      const double slack = 1e-9 * std::max(1.0, *seg.series.error_at(1));
      for (const auto& e : seg.series.entries()) {
        const auto oe = o.error.error_at(std::min(e.g, o.max_clusters));
        if (oe && e.error + slack < *oe) ++violations;
      }
      add("connected_vs_disconnected", true, violations == 0,
          std::to_string(violations) + " levels where region merging beats the optimum (32x32 crop)");
    }
  }
  return checks;
}

}  // namespace

int cmd_verify(const RunConfig& c, std::ostream& log) {
  const IntImage u = to_int_image(load_image(c.input));
  const std::vector<Check> checks = verify_battery(u, c.max_clusters);
  std::ostringstream report;
  bool hard_failure = false;
  for (const auto& ch : checks) {
    const char* tag = ch.passed ? "PASS" : ch.hard ? "FAIL" : "WARN";
    report << tag << " " << ch.name << (ch.hard ? "" : " (soft)") << ": " << ch.detail << "\n";
    hard_failure = hard_failure || (ch.hard && !ch.passed);
  }
  ensure_out(c);
  write_file(c.out / "verify.txt", report.str());
  log << report.str();
  return hard_failure ? kInvariantFailure : kSuccess;
}

int run(const RunConfig& config, std::ostream& log, std::ostream& err) {
  try {
    validate(config);
    if (config.command == "optimal") return cmd_optimal(config, log);
    if (config.command == "hier") return cmd_hier(config, log);
    if (config.command == "segment") return cmd_segment(config, log);
    if (config.command == "compare") return cmd_compare(config, log);
    return cmd_verify(config, log);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DimensionMismatch& e) {
    err << "input error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
}

}  // namespace pwc
