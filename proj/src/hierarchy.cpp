#include "pwc/hierarchy.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <tuple>

namespace pwc {

namespace {

using RowKey = std::vector<std::int64_t>;

RowKey row_key(const PixelMatrix<std::int64_t>& m, Eigen::Index row) {
  RowKey k(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) k[static_cast<std::size_t>(c)] = m(row, c);
  return k;
}

// Value of an item whose pixels are all equal; for mixed items this is the
// truncated mean, only used to order clusters deterministically.
RowKey item_value(const ExactStats& s) {
  RowKey k(static_cast<std::size_t>(s.channels()));
  for (Eigen::Index c = 0; c < s.channels(); ++c) k[static_cast<std::size_t>(c)] = s.sum()(c) / s.count();
  return k;
}

// Exact mean of an item, ordered channel by channel as a rational.
struct MeanKey {
  RowKey sum;
  std::int64_t count;

  explicit MeanKey(const ExactStats& s) : sum(static_cast<std::size_t>(s.channels())), count(s.count()) {
    for (Eigen::Index c = 0; c < s.channels(); ++c) sum[static_cast<std::size_t>(c)] = s.sum()(c);
  }

  bool operator<(const MeanKey& o) const {
    for (std::size_t c = 0; c < sum.size(); ++c) {
      const detail::wide_int a = detail::wide_int(sum[c]) * o.count, b = detail::wide_int(o.sum[c]) * count;
      if (a != b) return a < b;
    }
    return false;
  }
};

std::map<ClusterId, ClusterId> min_item_per_cluster(const ExactPartition& p) {
  std::map<ClusterId, ClusterId> out;
  for (std::size_t i = 0; i < p.item_count(); ++i) out.try_emplace(p.label(i), static_cast<ClusterId>(i));
  return out;
}

// Replays merges on a label vector, keeping member lists per cluster.
class Replay {
 public:
  explicit Replay(const ExactPartition& base) : labels_(base.labels()) {
    for (std::size_t i = 0; i < labels_.size(); ++i) members_[labels_[i]].push_back(i);
  }

  void apply(const MergeRecord& m) {
    auto a = members_.find(m.first);
    auto b = members_.find(m.second);
    if (a == members_.end() || b == members_.end() || m.first == m.second ||
        (m.result != m.first && m.result != m.second)) {
      throw PreconditionError("merge record refers to a missing cluster");
    }
    const ClusterId gone = m.absorbed();
    auto& from = members_[gone];
    auto& into = members_[m.result];
    for (std::size_t i : from) labels_[i] = m.result;
    into.insert(into.end(), from.begin(), from.end());
    members_.erase(gone);
  }

  const std::vector<ClusterId>& labels() const { return labels_; }
  const std::map<ClusterId, std::vector<std::size_t>>& members() const { return members_; }

 private:
  std::vector<ClusterId> labels_;
  std::map<ClusterId, std::vector<std::size_t>> members_;
};

ExactPartition snapshot(const ExactPartition& base, const Replay& replay) {
  return ExactPartition(base.items(), replay.labels());
}

double ordered_error(const ExactPartition& p) {
  std::vector<std::pair<RowKey, ExactStats>> ordered;
  std::map<ClusterId, RowKey> lowest;
  for (std::size_t i = 0; i < p.item_count(); ++i) {
    RowKey v = item_value(p.item(i));
    auto [it, inserted] = lowest.try_emplace(p.label(i), v);
    if (!inserted && v < it->second) it->second = std::move(v);
  }
  ordered.reserve(lowest.size());
  for (const auto& [id, key] : lowest) ordered.emplace_back(key, p.cluster(id));
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  long double total = 0;
  for (const auto& [key, s] : ordered) total += s.sse();
  return static_cast<double>(total);
}

}  // namespace

ValueClasses value_classes(const PixelMatrix<std::int64_t>& pixels) {
  ValueClasses out;
  std::map<RowKey, ClusterId> index;
  std::vector<Eigen::Index> first_row;
  out.pixel_class.resize(static_cast<std::size_t>(pixels.rows()));
  for (Eigen::Index i = 0; i < pixels.rows(); ++i) {
    auto [it, inserted] = index.try_emplace(row_key(pixels, i), static_cast<ClusterId>(out.stats.size()));
    if (inserted) {
      out.stats.emplace_back(pixels.cols());
      first_row.push_back(i);
    }
    out.stats[static_cast<std::size_t>(it->second)].add(pixels.row(i).transpose());
    out.pixel_class[static_cast<std::size_t>(i)] = it->second;
  }
  out.values.resize(static_cast<Eigen::Index>(first_row.size()), pixels.cols());
  for (std::size_t k = 0; k < first_row.size(); ++k)
    out.values.row(static_cast<Eigen::Index>(k)) = pixels.row(first_row[k]);
  return out;
}

ExactPartition finest_partition(const ValueClasses& classes) {
  std::vector<ClusterId> labels(classes.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<ClusterId>(i);
  return ExactPartition(classes.stats, std::move(labels));
}

ExactPartition initial_partition_from_values(const IntImage& u) {
  const ValueClasses classes = value_classes(u.pixels);
  return ExactPartition::from_pixels(u.pixels, classes.pixel_class);
}

std::vector<ClusterId> pixel_labels(const ValueClasses& classes, const ExactPartition& p) {
  if (p.item_count() != classes.size()) throw DimensionMismatch("partition is not over these value classes");
  std::vector<ClusterId> out(classes.pixel_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p.label(static_cast<std::size_t>(classes.pixel_class[i]));
  return out;
}

void canonicalize(ExactPartition& p) {
  const auto lowest = min_item_per_cluster(p);
  p.relabel([&](ClusterId id) { return lowest.at(id); });
}

bool is_canonical(const ExactPartition& p) {
  for (const auto& [id, item] : min_item_per_cluster(p))
    if (id != item) return false;
  return true;
}

// ---------------------------------------------------------------------------

Hierarchy::Hierarchy(ExactPartition base, std::vector<MergeRecord> merges)
    : base_(std::move(base)), merges_(std::move(merges)) {
  if (merges_.size() >= std::max<std::size_t>(base_.cluster_count(), 1) && base_.cluster_count() > 0)
    throw PreconditionError("more merges than clusters allow");
  Replay replay(base_);
  for (const auto& m : merges_) {
    if (m.delta < 0) throw PreconditionError("merge increments must be non-negative");
    replay.apply(m);
  }
}

ExactPartition Hierarchy::level(std::size_t g) const {
  if (g < min_clusters() || g > max_clusters()) throw PreconditionError("level out of range");
  Replay replay(base_);
  for (std::size_t k = 0; k < max_clusters() - g; ++k) replay.apply(merges_[k]);
  return snapshot(base_, replay);
}

std::vector<ExactPartition> Hierarchy::levels() const {
  std::vector<ExactPartition> out(merges_.size() + 1);
  Replay replay(base_);
  out[merges_.size()] = base_;
  for (std::size_t k = 0; k < merges_.size(); ++k) {
    replay.apply(merges_[k]);
    out[merges_.size() - k - 1] = snapshot(base_, replay);
  }
  return out;
}

ErrorSeries Hierarchy::error_series() const {
  std::int64_t n = 0;
  for (const auto& s : base_.items()) n += s.count();
  ErrorSeries out(static_cast<std::size_t>(n));
  if (base_.cluster_count() == 0) return out;
  const auto all = levels();
  for (std::size_t k = 0; k < all.size(); ++k) out.push(min_clusters() + k, ordered_error(all[k]));
  return out;
}

// ---------------------------------------------------------------------------

Hierarchy ward_merge_pass(const ExactPartition& p) {
  struct Slot {
    ClusterId id;
    ExactStats stats;
    bool alive = true;
    double best = std::numeric_limits<double>::infinity();
    std::size_t partner = 0;
  };
  std::vector<Slot> slots;
  for (const auto& [id, s] : p.clusters()) slots.push_back({id, s});
  const std::size_t m = slots.size();

  auto key = [&](double d, std::size_t a, std::size_t b) {
    const ClusterId x = slots[a].id, y = slots[b].id;
    return std::make_tuple(d, std::min(x, y), std::max(x, y));
  };
  auto refresh = [&](std::size_t a) {
    slots[a].best = std::numeric_limits<double>::infinity();
    bool have = false;
    for (std::size_t b = 0; b < m; ++b) {
      if (b == a || !slots[b].alive) continue;
      const double d = merge_delta(slots[a].stats, slots[b].stats);
      if (!have || key(d, a, b) < key(slots[a].best, a, slots[a].partner)) {
        slots[a].best = d;
        slots[a].partner = b;
        have = true;
      }
    }
  };
  for (std::size_t a = 0; a < m; ++a) refresh(a);

  std::vector<MergeRecord> merges;
  merges.reserve(m > 0 ? m - 1 : 0);
  for (std::size_t step = 1; step < m; ++step) {
    std::size_t a = m;
    for (std::size_t i = 0; i < m; ++i) {
      if (!slots[i].alive) continue;
      if (a == m || key(slots[i].best, i, slots[i].partner) < key(slots[a].best, a, slots[a].partner)) a = i;
    }
    const std::size_t b = slots[a].partner;
    const double delta = slots[a].best;
    const std::size_t keep = slots[a].id < slots[b].id ? a : b;
    const std::size_t gone = keep == a ? b : a;
    merges.push_back({std::min(slots[a].id, slots[b].id), std::max(slots[a].id, slots[b].id), delta, slots[keep].id});
    slots[keep].stats += slots[gone].stats;
    slots[gone].alive = false;
    for (std::size_t x = 0; x < m; ++x) {
      if (!slots[x].alive || x == keep) continue;
      if (slots[x].partner == a || slots[x].partner == b) {
        refresh(x);
      } else {
        const double d = merge_delta(slots[x].stats, slots[keep].stats);
        if (key(d, x, keep) < key(slots[x].best, x, slots[x].partner)) {
          slots[x].best = d;
          slots[x].partner = keep;
        }
      }
    }
    refresh(keep);
  }
  return Hierarchy(p, std::move(merges));
}

// ---------------------------------------------------------------------------

namespace {

struct SplitCandidate {
  bool valid = false;
  double delta = 0;
  ClusterId cluster = 0;
  std::vector<std::size_t> separated;  // items leaving to the new cluster
  ClusterId separated_min = 0;
  std::size_t separated_size = 0;

  bool better_than(const SplitCandidate& o) const {
    if (!o.valid) return valid;
    if (!valid) return false;
    if (delta != o.delta) return delta < o.delta;
    if (separated_min != o.separated_min) return separated_min > o.separated_min;
    if (separated_size != o.separated_size) return separated_size < o.separated_size;
    return cluster < o.cluster;
  }
};

struct ValueGroup {
  std::vector<std::size_t> items;
  ExactStats stats;
};

// Items grouped by exact mean, in increasing mean order.
std::vector<ValueGroup> value_groups(const ExactPartition& p, const std::vector<std::size_t>& members) {
  std::map<MeanKey, ValueGroup> groups;
  for (std::size_t i : members) {
    auto& g = groups[MeanKey(p.item(i))];
    g.items.push_back(i);
    g.stats += p.item(i);
  }
  std::vector<ValueGroup> out;
  out.reserve(groups.size());
  for (auto& [v, g] : groups) out.push_back(std::move(g));
  return out;
}

SplitCandidate make_candidate(ClusterId cluster, const ExactStats& whole, std::vector<std::size_t> part,
                              const std::vector<std::size_t>& members, const ExactStats& part_stats) {
  SplitCandidate c;
  c.valid = true;
  c.cluster = cluster;
  c.delta = split_delta(whole, part_stats);
  std::sort(part.begin(), part.end());
  const bool holds_min = std::binary_search(part.begin(), part.end(), static_cast<std::size_t>(cluster));
  if (holds_min) {
    std::vector<std::size_t> rest;
    std::set_difference(members.begin(), members.end(), part.begin(), part.end(), std::back_inserter(rest));
    part = std::move(rest);
  }
  c.separated_min = static_cast<ClusterId>(part.front());
  c.separated_size = part.size();
  c.separated = std::move(part);
  return c;
}

SplitCandidate best_split(const ExactPartition& p, ClusterId cluster, const std::vector<std::size_t>& members) {
  SplitCandidate best;
  const auto groups = value_groups(p, members);
  if (groups.size() < 2) return best;
  const ExactStats& whole = p.cluster(cluster);
  if (p.item(members.front()).channels() == 1) {
    ExactStats prefix;
    std::vector<std::size_t> items;
    for (std::size_t k = 0; k + 1 < groups.size(); ++k) {
      prefix += groups[k].stats;
      items.insert(items.end(), groups[k].items.begin(), groups[k].items.end());
      SplitCandidate c = make_candidate(cluster, whole, items, members, prefix);
      if (c.better_than(best)) best = std::move(c);
    }
    return best;
  }
  const Vector<double> centre = whole.mean();
  std::size_t seed = 0;
  double far = -1;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const double d = (groups[k].stats.mean() - centre).squaredNorm();
    if (d > far) {
      far = d;
      seed = k;
    }
  }
  std::vector<bool> in_part(groups.size(), false);
  in_part[seed] = true;
  ExactStats part = groups[seed].stats;
  ExactStats rest = whole - part;
  std::size_t rest_groups = groups.size() - 1;
  while (rest_groups >= 2) {
    double best_delta = 0;
    std::size_t pick = groups.size();
    for (std::size_t k = 0; k < groups.size(); ++k) {
      if (in_part[k]) continue;
      const double d = correction_delta(rest, part, groups[k].stats);
      if (d < best_delta) {
        best_delta = d;
        pick = k;
      }
    }
    if (pick == groups.size()) break;
    in_part[pick] = true;
    part += groups[pick].stats;
    rest -= groups[pick].stats;
    --rest_groups;
  }
  std::vector<std::size_t> items;
  for (std::size_t k = 0; k < groups.size(); ++k)
    if (in_part[k]) items.insert(items.end(), groups[k].items.begin(), groups[k].items.end());
  return make_candidate(cluster, whole, std::move(items), members, part);
}

std::size_t distinct_values(const ExactPartition& p) {
  std::set<MeanKey> values;
  for (const auto& s : p.items()) values.insert(MeanKey(s));
  return values.size();
}

}  // namespace

SplitOutcome split_pass(const ExactPartition& p, std::size_t target_g) {
  if (!is_canonical(p)) throw PreconditionError("split_pass requires canonical cluster ids");
  SplitOutcome out{p, {}, false, {}};
  const std::size_t target = std::min(target_g, distinct_values(p));
  if (target < target_g) out.diagnostic = "target capped at " + std::to_string(target) + " distinct values";
  if (target <= p.cluster_count()) return out;

  auto members = out.partition.members();
  std::map<ClusterId, SplitCandidate> candidates;
  for (const auto& [id, items] : members) candidates[id] = best_split(out.partition, id, items);

  while (out.partition.cluster_count() < target) {
    const SplitCandidate* best = nullptr;
    for (const auto& [id, c] : candidates)
      if (c.valid && c.delta < 0 && (best == nullptr || c.better_than(*best))) best = &c;
    if (best == nullptr) {
      out.stalled = true;
      out.diagnostic = "no cluster admits a split with negative increment at g=" +
                       std::to_string(out.partition.cluster_count());
      break;
    }
    const SplitCandidate chosen = *best;
    out.partition.apply_move(chosen.separated, chosen.cluster, chosen.separated_min);
    out.splits.push_back({chosen.cluster, chosen.separated_min, chosen.delta});
    auto& parent_items = members[chosen.cluster];
    std::vector<std::size_t> rest;
    std::set_difference(parent_items.begin(), parent_items.end(), chosen.separated.begin(), chosen.separated.end(),
                        std::back_inserter(rest));
    parent_items = std::move(rest);
    members[chosen.separated_min] = chosen.separated;
    candidates[chosen.cluster] = best_split(out.partition, chosen.cluster, members[chosen.cluster]);
    candidates[chosen.separated_min] = best_split(out.partition, chosen.separated_min, members[chosen.separated_min]);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct UnitTable {
  Units units;
  std::vector<ExactStats> stats;
};

UnitTable make_units(const ExactPartition& p, const Units* given) {
  UnitTable t;
  if (given == nullptr) {
    t.units.resize(p.item_count());
    for (std::size_t i = 0; i < p.item_count(); ++i) t.units[i] = {i};
  } else {
    t.units = *given;
  }
  std::vector<bool> seen(p.item_count(), false);
  for (const auto& u : t.units) {
    if (u.empty()) throw PreconditionError("empty unit");
    ExactStats s;
    for (std::size_t i : u) {
      if (i >= p.item_count() || seen[i]) throw PreconditionError("units must cover each item exactly once");
      if (p.label(i) != p.label(u.front())) throw PreconditionError("a unit spans several clusters");
      seen[i] = true;
      s += p.item(i);
    }
    t.stats.push_back(std::move(s));
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw PreconditionError("units must cover every item");
  return t;
}

constexpr std::size_t kMaxSweeps = 10000;
constexpr std::size_t kMaxLloydIterations = 1000;

}  // namespace

ExactPartition refine_exact(const ExactPartition& p, const Units* units, RefineStats* stats) {
  if (p.cluster_count() < 2) throw PreconditionError("refine_exact requires at least two clusters");
  const UnitTable table = make_units(p, units);
  ExactPartition q = p;
  RefineStats local;
  for (; local.sweeps < kMaxSweeps;) {
    ++local.sweeps;
    bool moved = false;
    std::map<ClusterId, std::vector<std::size_t>> by_cluster;
    for (std::size_t u = 0; u < table.units.size(); ++u) by_cluster[q.label(table.units[u].front())].push_back(u);
    for (const auto& [id, list] : by_cluster) {
      for (std::size_t u : list) {
        if (q.label(table.units[u].front()) != id) continue;
        const ExactStats& src = q.cluster(id);
        if (table.stats[u].count() == src.count()) continue;
        double best = 0;
        ClusterId target = id;
        for (const auto& [dst, dst_stats] : q.clusters()) {
          if (dst == id) continue;
          const double d = correction_delta(src, dst_stats, table.stats[u]);
          if (d < best) {
            best = d;
            target = dst;
          }
        }
        if (target != id) {
          q.apply_move(table.units[u], id, target);
          ++local.moves;
          moved = true;
        }
      }
    }
    if (!moved) break;
  }
  if (stats) *stats = local;
  return q;
}

ExactPartition refine_kmeans(const ExactPartition& p, const Units* units, RefineStats* stats) {
  if (p.cluster_count() < 2) throw PreconditionError("refine_kmeans requires at least two clusters");
  const UnitTable table = make_units(p, units);
  std::vector<Vector<double>> unit_mean;
  for (const auto& s : table.stats) unit_mean.push_back(s.mean());
  ExactPartition q = p;
  RefineStats local;
  for (; local.sweeps < kMaxLloydIterations;) {
    ++local.sweeps;
    std::map<ClusterId, Vector<double>> centre;
    for (const auto& [id, s] : q.clusters()) centre.emplace(id, s.mean());
    std::vector<ClusterId> current(table.units.size()), next(table.units.size());
    for (std::size_t u = 0; u < table.units.size(); ++u) {
      current[u] = q.label(table.units[u].front());
      ClusterId best = current[u];
      double best_d = (unit_mean[u] - centre.at(best)).squaredNorm();
      for (const auto& [id, c] : centre) {
        const double d = (unit_mean[u] - c).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = id;
        }
      }
      next[u] = best;
    }
    std::vector<bool> locked(table.units.size(), false);
    for (bool fixed = false; !fixed;) {
      fixed = true;
      std::map<ClusterId, std::size_t> load;
      for (const auto& [id, c] : centre) load[id] = 0;
      for (ClusterId l : next) ++load[l];
      for (const auto& [id, n] : load) {
        if (n != 0) continue;
        std::size_t keep = table.units.size();
        double far = -1;
        for (std::size_t u = 0; u < table.units.size(); ++u) {
          if (current[u] != id || locked[u]) continue;
          const double d = (unit_mean[u] - centre.at(id)).squaredNorm();
          if (d > far) {
            far = d;
            keep = u;
          }
        }
        if (keep == table.units.size()) continue;
        next[keep] = id;
        locked[keep] = true;
        fixed = false;
        break;
      }
    }
    if (next == current) break;
    std::vector<ClusterId> labels = q.labels();
    for (std::size_t u = 0; u < table.units.size(); ++u)
      for (std::size_t i : table.units[u]) labels[i] = next[u];
    q = ExactPartition(q.items(), std::move(labels));
    ++local.moves;
  }
  if (stats) *stats = local;
  return q;
}

// ---------------------------------------------------------------------------

Hierarchy convexify(const Hierarchy& h, ConvexifyReport* report) {
  ConvexifyReport local;
  std::vector<MergeRecord> merges = h.merges();
  const std::size_t limit = 16 * merges.size() * merges.size() + 1024;
  std::size_t steps = 0;
  std::size_t i = 0;
  while (i + 1 < merges.size() && steps++ < limit) {
    if (!(merges[i].delta > merges[i + 1].delta)) {
      ++i;
      continue;
    }
    if (!merges[i + 1].touches(merges[i].result)) {
      std::swap(merges[i], merges[i + 1]);
      ++local.swaps;
    } else {
      Replay replay(h.base());
      for (std::size_t k = 0; k < i; ++k) replay.apply(merges[k]);
      const Hierarchy tail = ward_merge_pass(snapshot(h.base(), replay));
      merges.resize(i);
      merges.insert(merges.end(), tail.merges().begin(), tail.merges().end());
      ++local.rederivations;
    }
    if (i > 0) --i;
  }
  Hierarchy out(h.base(), std::move(merges));
  local.residual = out.error_series().convexity_violations();
  if (report) *report = std::move(local);
  return out;
}

// ---------------------------------------------------------------------------

MaskImage mask_from(const IntImage& image) {
  return {image.width, image.height, image.pixels.cast<double>()};
}

MaskImage mask_from(const RasterImage& image) { return mask_from(to_int_image(image)); }

MaskImage render_approximation(const ValueClasses& classes, const ExactPartition& p, std::size_t width,
                               std::size_t height) {
  if (width * height != classes.pixel_count()) throw DimensionMismatch("dimensions do not match the image");
  MaskImage out{width, height, PixelMatrix<double>(static_cast<Eigen::Index>(classes.pixel_count()), classes.channels())};
  std::map<ClusterId, Vector<double>> means;
  for (const auto& [id, s] : p.clusters()) means.emplace(id, s.mean());
  for (std::size_t i = 0; i < classes.pixel_count(); ++i)
    out.values.row(static_cast<Eigen::Index>(i)) =
        means.at(p.label(static_cast<std::size_t>(classes.pixel_class[i]))).transpose();
  return out;
}

ExactPartition mask_partition(const ValueClasses& classes, const MaskImage& mask) {
  if (mask.pixel_count() != classes.pixel_count() || static_cast<std::size_t>(mask.values.rows()) != mask.pixel_count())
    throw DimensionMismatch("mask dimensions do not match the image");
  std::map<std::vector<double>, ClusterId> level_sets;
  std::vector<std::map<ClusterId, std::int64_t>> votes(classes.size());
  for (std::size_t i = 0; i < classes.pixel_count(); ++i) {
    std::vector<double> key(static_cast<std::size_t>(mask.values.cols()));
    for (Eigen::Index c = 0; c < mask.values.cols(); ++c)
      key[static_cast<std::size_t>(c)] = mask.values(static_cast<Eigen::Index>(i), c);
    auto [it, inserted] = level_sets.try_emplace(std::move(key), static_cast<ClusterId>(level_sets.size()));
    ++votes[static_cast<std::size_t>(classes.pixel_class[i])][it->second];
  }
  std::vector<ClusterId> labels(classes.size());
  for (std::size_t a = 0; a < classes.size(); ++a) {
    ClusterId best = 0;
    std::int64_t most = -1;
    for (const auto& [set, n] : votes[a]) {
      if (n > most) {
        most = n;
        best = set;
      }
    }
    labels[a] = best;
  }
  ExactPartition p(classes.stats, std::move(labels));
  canonicalize(p);
  return p;
}

// ---------------------------------------------------------------------------

namespace {

// Levels coarser than the seed: greedy splitting from one cluster with the
// seed clusters as indivisible items, stored as merges. Seed clusters with
// equal means cannot be told apart by a split and are merged first.
std::vector<MergeRecord> coarse_merges(const ExactPartition& seed) {
  std::vector<ClusterId> ids;
  std::vector<ExactStats> items;
  for (const auto& [id, s] : seed.clusters()) {
    ids.push_back(id);
    items.push_back(s);
  }
  const ExactPartition whole(items, std::vector<ClusterId>(items.size(), 0));
  const SplitOutcome top = split_pass(whole, items.size());

  std::vector<MergeRecord> merges;
  for (const auto& [cluster, members] : top.partition.members()) {
    std::map<MeanKey, std::vector<std::size_t>> same;
    for (std::size_t a : members) same[MeanKey(items[a])].push_back(a);
    for (const auto& [key, group] : same) {
      ExactStats acc = items[group.front()];
      for (std::size_t k = 1; k < group.size(); ++k) {
        merges.push_back({ids[group.front()], ids[group[k]], merge_delta(acc, items[group[k]]), ids[group.front()]});
        acc += items[group[k]];
      }
    }
  }
  for (auto it = top.splits.rbegin(); it != top.splits.rend(); ++it)
    merges.push_back({ids[static_cast<std::size_t>(it->parent)], ids[static_cast<std::size_t>(it->created)], -it->delta,
                      ids[static_cast<std::size_t>(it->parent)]});
  return merges;
}

}  // namespace

std::vector<ClusterId> Sequence::pixel_labels_at(std::size_t g) const {
  return pixel_labels(classes, hierarchy.level(g));
}

Sequence build_sequence(const IntImage& u, const MaskImage& v, std::size_t max_clusters) {
  if (v.width != u.width || v.height != u.height || v.pixel_count() != u.pixel_count())
    throw DimensionMismatch("mask dimensions do not match the image");
  if (max_clusters < 1) throw PreconditionError("max_clusters must be at least 1");
  Sequence seq;
  seq.classes = value_classes(u.pixels);
  const ExactPartition seed = mask_partition(seq.classes, v);
  seq.mask_clusters = seed.cluster_count();

  const SplitOutcome down = split_pass(seed, seq.classes.size());
  std::vector<MergeRecord> merges;
  for (auto it = down.splits.rbegin(); it != down.splits.rend(); ++it)
    merges.push_back({it->parent, it->created, -it->delta, it->parent});
  const std::vector<MergeRecord> up = coarse_merges(seed);
  merges.insert(merges.end(), up.begin(), up.end());

  Hierarchy h(down.partition, std::move(merges));
  seq.hierarchy = convexify(h, &seq.convexity);
  seq.series = seq.hierarchy.error_series().truncated(max_clusters);
  return seq;
}

Sequence build_sequence(const IntImage& u, std::size_t max_clusters) {
  return build_sequence(u, mask_from(u), max_clusters);
}

bool same_levels(const Hierarchy& a, const Hierarchy& b) {
  if (a.max_clusters() != b.max_clusters() || a.min_clusters() != b.min_clusters()) return false;
  if (a.base().item_count() != b.base().item_count()) return false;
  auto la = a.levels();
  auto lb = b.levels();
  for (std::size_t k = 0; k < la.size(); ++k) {
    canonicalize(la[k]);
    canonicalize(lb[k]);
    if (la[k].labels() != lb[k].labels()) return false;
  }
  return true;
}

bool SelfConsistencyReport::all_reproduced() const {
  return std::all_of(levels.begin(), levels.end(), [](const auto& l) { return l.reproduced; });
}

SelfConsistencyReport self_consistency_check(const IntImage& u, const Sequence& h,
                                             std::span<const std::size_t> levels) {
  SelfConsistencyReport report;
  for (std::size_t g : levels) {
    if (g < h.hierarchy.min_clusters() || g > h.hierarchy.max_clusters()) continue;
    const MaskImage mask = render_approximation(h.classes, h.hierarchy.level(g), u.width, u.height);
    const Sequence again = build_sequence(u, mask, h.hierarchy.max_clusters());
    report.levels.push_back({g, same_levels(h.hierarchy, again.hierarchy)});
  }
  return report;
}

}  // namespace pwc
