#include "pwc/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <tuple>

namespace pwc {

MergeCriterion MergeCriterion::additive(double lambda) {
  if (lambda < 0) throw PreconditionError("boundary weight must be non-negative");
  return {CriterionKind::additive, lambda};
}

MergeCriterion MergeCriterion::flsa(double lambda) {
  if (lambda < 0) throw PreconditionError("boundary weight must be non-negative");
  return {CriterionKind::flsa, lambda};
}

std::string to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::plain: return "plain";
    case CriterionKind::additive: return "additive";
    case CriterionKind::flsa: return "flsa";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

template <typename F>
void RegionGraph::for_each_neighbor_pixel(std::size_t p, F&& f) const {
  const std::size_t x = p % width_, y = p / width_;
  if (x > 0) f(p - 1);
  if (x + 1 < width_) f(p + 1);
  if (y > 0) f(p - width_);
  if (y + 1 < height_) f(p + width_);
}

RegionGraph RegionGraph::singletons(const IntImage& image) {
  std::vector<std::int32_t> labels(image.pixel_count());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::int32_t>(i);
  RegionGraph g;
  g.image_ = image;
  g.build(labels);
  return g;
}

RegionGraph RegionGraph::from_labels(const IntImage& image, std::span<const std::int32_t> labels) {
  if (labels.size() != image.pixel_count()) throw DimensionMismatch("label map does not match the image");
  RegionGraph g;
  g.image_ = image;
  g.build(labels);
  // Every label must be a single 4-connected component.
  std::vector<bool> seen(labels.size(), false);
  std::set<std::int32_t> started;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    if (seen[s]) continue;
    if (!started.insert(labels[s]).second)
      throw PreconditionError("initial region " + std::to_string(labels[s]) + " is not 4-connected");
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      g.for_each_neighbor_pixel(p, [&](std::size_t q) {
        if (!seen[q] && labels[q] == labels[p]) {
          seen[q] = true;
          stack.push_back(q);
        }
      });
    }
  }
  return g;
}

void RegionGraph::build(std::span<const std::int32_t> labels) {
  width_ = image_.width;
  height_ = image_.height;
  const std::size_t n = image_.pixel_count();
  if (n == 0) throw PreconditionError("empty image");
  labels_.assign(n, 0);
  std::map<std::int32_t, std::uint32_t> slot;
  for (std::size_t p = 0; p < n; ++p) {
    auto [it, inserted] = slot.try_emplace(labels[p], static_cast<std::uint32_t>(regions_.size()));
    if (inserted) {
      Region r;
      r.id = static_cast<RegionId>(p);
      r.stats = ExactStats(image_.channels());
      r.alive = true;
      regions_.push_back(std::move(r));
    }
    labels_[p] = it->second;
    Region& r = regions_[it->second];
    r.stats.add(image_.pixels.row(static_cast<Eigen::Index>(p)).transpose());
    r.pixels.push_back(p);
  }
  alive_count_ = regions_.size();
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t x = p % width_;
    if (x + 1 < width_ && labels_[p] != labels_[p + 1]) add_length(labels_[p], labels_[p + 1], 1);
    if (p + width_ < n && labels_[p] != labels_[p + width_]) add_length(labels_[p], labels_[p + width_], 1);
  }
  error_ = 0;
  for (const auto& r : regions_) error_ += r.stats.sse();
}

std::uint32_t RegionGraph::slot_of(RegionId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= labels_.size()) throw PreconditionError("unknown region id");
  const std::uint32_t s = labels_[static_cast<std::size_t>(id)];
  if (regions_[s].id != id) throw PreconditionError("unknown region id " + std::to_string(id));
  return s;
}

bool RegionGraph::contains(RegionId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= labels_.size()) return false;
  return regions_[labels_[static_cast<std::size_t>(id)]].id == id;
}

std::vector<RegionId> RegionGraph::region_ids() const {
  std::vector<RegionId> out;
  out.reserve(alive_count_);
  for (const auto& r : regions_)
    if (r.alive) out.push_back(r.id);
  std::sort(out.begin(), out.end());
  return out;
}

const ExactStats& RegionGraph::stats(RegionId id) const { return regions_[slot_of(id)].stats; }
const std::vector<std::size_t>& RegionGraph::pixels(RegionId id) const { return regions_[slot_of(id)].pixels; }

std::vector<RegionGraph::Neighbor> RegionGraph::neighbors(RegionId id) const {
  std::vector<Neighbor> out;
  for (const auto& e : regions_[slot_of(id)].edges) out.push_back({regions_[e.slot].id, e.length});
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
  return out;
}

std::int64_t RegionGraph::boundary_length(RegionId a, RegionId b) const {
  const std::uint32_t sa = slot_of(a), sb = slot_of(b);
  for (const auto& e : regions_[sa].edges)
    if (e.slot == sb) return e.length;
  return 0;
}

std::size_t RegionGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& r : regions_)
    if (r.alive) twice += r.edges.size();
  return twice / 2;
}

std::int64_t RegionGraph::total_boundary() const {
  std::int64_t twice = 0;
  for (const auto& r : regions_)
    if (r.alive)
      for (const auto& e : r.edges) twice += e.length;
  return twice / 2;
}

std::vector<RegionId> RegionGraph::label_map() const {
  std::vector<RegionId> out(labels_.size());
  for (std::size_t p = 0; p < labels_.size(); ++p) out[p] = regions_[labels_[p]].id;
  return out;
}

RegionId RegionGraph::region_of(std::size_t pixel) const { return regions_[labels_.at(pixel)].id; }

double RegionGraph::recomputed_error() const {
  long double total = 0;
  for (const auto& r : regions_)
    if (r.alive) total += r.stats.sse();
  return static_cast<double>(total);
}

void RegionGraph::add_length(std::uint32_t a, std::uint32_t b, std::int64_t delta) {
  auto bump = [&](std::uint32_t from, std::uint32_t to) {
    auto& edges = regions_[from].edges;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      if (edges[k].slot == to) {
        edges[k].length += delta;
        if (edges[k].length == 0) {
          edges[k] = edges.back();
          edges.pop_back();
        }
        return;
      }
    }
    if (delta <= 0) throw std::logic_error("boundary length underflow");
    edges.push_back({to, delta});
  };
  bump(a, b);
  bump(b, a);
}

RegionId RegionGraph::merge(RegionId a, RegionId b) {
  if (a == b) throw PreconditionError("cannot merge a region with itself");
  std::uint32_t sa = slot_of(a), sb = slot_of(b);
  if (boundary_length(a, b) == 0) throw PreconditionError("merge of non-adjacent regions");
  // Pixels of the smaller region are relabelled; the survivor takes the
  // smaller id.
  if (regions_[sa].pixels.size() < regions_[sb].pixels.size()) std::swap(sa, sb);
  Region& keep = regions_[sa];
  Region& gone = regions_[sb];
  error_ += merge_delta(keep.stats, gone.stats);
  keep.stats += gone.stats;
  keep.id = std::min(keep.id, gone.id);
  for (std::size_t p : gone.pixels) labels_[p] = sa;
  keep.pixels.insert(keep.pixels.end(), gone.pixels.begin(), gone.pixels.end());
  gone.pixels.clear();
  gone.pixels.shrink_to_fit();

  std::vector<Edge> moved = std::move(gone.edges);
  gone.edges.clear();
  for (const auto& e : moved) {
    auto& their = regions_[e.slot].edges;
    their.erase(std::find_if(their.begin(), their.end(), [&](const Edge& x) { return x.slot == sb; }));
  }
  for (const auto& e : moved) {
    if (e.slot != sa) add_length(sa, e.slot, e.length);
  }
  gone.alive = false;
  gone.id = -1;
  ++gone.version;
  ++keep.version;
  --alive_count_;
  return keep.id;
}

void RegionGraph::transfer(std::span<const std::size_t> pixels, std::uint32_t from, std::uint32_t to) {
  Region& src = regions_[from];
  ExactStats part;
  std::size_t lowest = std::numeric_limits<std::size_t>::max();
  for (std::size_t p : pixels) {
    if (labels_.at(p) != from) throw PreconditionError("pixel does not belong to the source region");
    part.add(image_.pixels.row(static_cast<Eigen::Index>(p)).transpose());
    lowest = std::min(lowest, p);
  }
  if (part.count() >= src.stats.count()) throw PreconditionError("the source region must keep a pixel");
  Region& dst = regions_[to];
  if (dst.stats.empty()) {
    error_ += split_delta(src.stats, part);
  } else {
    error_ += correction_delta(src.stats, dst.stats, part);
  }
  for (std::size_t p : pixels) {
    for_each_neighbor_pixel(p, [&](std::size_t q) {
      const std::uint32_t l = labels_[q];
      if (l != from) add_length(from, l, -1);
      if (l != to) add_length(to, l, 1);
    });
    labels_[p] = to;
  }
  src.stats -= part;
  dst.stats += part;
  std::erase_if(src.pixels, [&](std::size_t p) { return labels_[p] != from; });
  dst.pixels.insert(dst.pixels.end(), pixels.begin(), pixels.end());
  const bool fresh = !dst.alive;
  dst.alive = true;
  dst.id = fresh ? static_cast<RegionId>(lowest) : std::min(dst.id, static_cast<RegionId>(lowest));
  if (static_cast<std::size_t>(src.id) == lowest || labels_[static_cast<std::size_t>(src.id)] != from)
    src.id = static_cast<RegionId>(*std::min_element(src.pixels.begin(), src.pixels.end()));
  ++src.version;
  ++dst.version;
  if (fresh) ++alive_count_;
}

void RegionGraph::move_pixels(std::span<const std::size_t> pixels, RegionId from, RegionId to) {
  if (pixels.empty()) throw PreconditionError("empty pixel set");
  if (from == to) throw PreconditionError("source and destination coincide");
  transfer(pixels, slot_of(from), slot_of(to));
}

RegionId RegionGraph::extract(std::span<const std::size_t> pixels, RegionId from) {
  if (pixels.empty()) throw PreconditionError("empty pixel set");
  const std::uint32_t src = slot_of(from);
  regions_.push_back({});
  const auto slot = static_cast<std::uint32_t>(regions_.size() - 1);
  regions_[slot].stats = ExactStats(image_.channels());
  transfer(pixels, src, slot);
  return regions_[slot].id;
}

bool RegionGraph::consistent(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  std::vector<ExactStats> stats(regions_.size(), ExactStats(image_.channels()));
  std::vector<std::size_t> count(regions_.size(), 0), lowest(regions_.size(), labels_.size());
  for (std::size_t p = 0; p < labels_.size(); ++p) {
    const auto s = labels_[p];
    if (!regions_[s].alive) return fail("pixel labelled with a dead region");
    stats[s].add(image_.pixels.row(static_cast<Eigen::Index>(p)).transpose());
    ++count[s];
    lowest[s] = std::min(lowest[s], p);
  }
  std::size_t alive = 0;
  for (std::size_t s = 0; s < regions_.size(); ++s) {
    const Region& r = regions_[s];
    if (!r.alive) continue;
    ++alive;
    if (!(stats[s] == r.stats)) return fail("statistics differ from recount");
    if (count[s] != r.pixels.size()) return fail("pixel list differs from labels");
    if (static_cast<std::size_t>(r.id) != lowest[s]) return fail("region id is not its first pixel");
  }
  if (alive != alive_count_) return fail("live region count mismatch");
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::int64_t> edges;
  for (std::size_t p = 0; p < labels_.size(); ++p) {
    auto note = [&](std::size_t q) {
      auto a = labels_[p], b = labels_[q];
      if (a != b) ++edges[{std::min(a, b), std::max(a, b)}];
    };
    if (p % width_ + 1 < width_) note(p + 1);
    if (p + width_ < labels_.size()) note(p + width_);
  }
  std::size_t stored = 0;
  for (std::size_t s = 0; s < regions_.size(); ++s) {
    if (!regions_[s].alive) continue;
    for (const auto& e : regions_[s].edges) {
      ++stored;
      const auto key = std::make_pair(std::min<std::uint32_t>(static_cast<std::uint32_t>(s), e.slot),
                                      std::max<std::uint32_t>(static_cast<std::uint32_t>(s), e.slot));
      auto it = edges.find(key);
      if (it == edges.end() || it->second != e.length) return fail("boundary length differs from recount");
    }
  }
  if (stored != 2 * edges.size()) return fail("edge set differs from recount");
  const double fresh = recomputed_error();
  if (std::abs(fresh - error()) > 1e-9 * std::max(1.0, fresh)) return fail("running error drifted");
  return true;
}

double merge_score(const RegionGraph& g, RegionId a, RegionId b, const MergeCriterion& c) {
  const std::int64_t len = g.boundary_length(a, b);
  if (len == 0) throw PreconditionError("regions are not adjacent");
  const double delta = merge_delta(g.stats(a), g.stats(b));
  switch (c.kind) {
    case CriterionKind::plain: return delta;
    case CriterionKind::additive: return delta - c.lambda * static_cast<double>(len);
    case CriterionKind::flsa: return delta / static_cast<double>(len);
  }
  return delta;
}

// ---------------------------------------------------------------------------

class RegionMergeEngine {
 public:
  RegionMergeEngine(RegionGraph& g, MergeCriterion c) : g_(g), criterion_(c) {
    for (std::uint32_t s = 0; s < g_.regions_.size(); ++s) push_edges(s);
  }

  struct Candidate {
    double score;
    RegionId lo, hi;
    std::uint32_t a, b;
    std::uint32_t va, vb;
    bool operator>(const Candidate& o) const {
      return std::tie(score, lo, hi) > std::tie(o.score, o.lo, o.hi);
    }
  };

  void push_edges(std::uint32_t s) {
    const auto& r = g_.regions_[s];
    if (!r.alive) return;
    for (const auto& e : r.edges) push(s, e.slot, e.length);
  }

  void push(std::uint32_t a, std::uint32_t b, std::int64_t len) {
    const auto& ra = g_.regions_[a];
    const auto& rb = g_.regions_[b];
    const double delta = merge_delta(ra.stats, rb.stats);
    double score = delta;
    if (criterion_.kind == CriterionKind::additive) score = delta - criterion_.lambda * static_cast<double>(len);
    if (criterion_.kind == CriterionKind::flsa) score = delta / static_cast<double>(len);
    heap_.push({score, std::min(ra.id, rb.id), std::max(ra.id, rb.id), a, b, ra.version, rb.version});
  }

  bool valid(const Candidate& c) const {
    const auto& ra = g_.regions_[c.a];
    const auto& rb = g_.regions_[c.b];
    return ra.alive && rb.alive && ra.version == c.va && rb.version == c.vb;
  }

  /// Best current candidate, or nullptr when none remains.
  const Candidate* top() {
    while (!heap_.empty() && !valid(heap_.top())) heap_.pop();
    return heap_.empty() ? nullptr : &heap_.top();
  }

  /// Applies the best merge; returns the surviving slot or -1.
  std::int64_t merge_best() {
    const Candidate* c = top();
    if (c == nullptr) return -1;
    const Candidate chosen = *c;
    heap_.pop();
    const RegionId survivor = g_.merge(g_.regions_[chosen.a].id, g_.regions_[chosen.b].id);
    const std::uint32_t slot = g_.slot_of(survivor);
    push_edges(slot);
    return slot;
  }

  RegionGraph& graph() { return g_; }

 private:
  RegionGraph& g_;
  MergeCriterion criterion_;
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap_;
};

namespace {

struct LevelRecorder {
  std::vector<std::pair<std::size_t, double>> levels;
  std::set<std::size_t> wanted;
  RegionSegmentation* out;

  void record(const RegionGraph& g) {
    const std::size_t count = g.region_count();
    if (!levels.empty() && levels.back().first == count) {
      levels.back().second = g.error();
    } else {
      levels.emplace_back(count, g.error());
    }
    if (wanted.count(count)) out->snapshots[count] = g.label_map();
  }

  void finish(std::size_t pixel_count) {
    std::sort(levels.begin(), levels.end());
    out->series = ErrorSeries(pixel_count);
    for (const auto& [g, e] : levels) out->series.push(g, std::max(e, 0.0));
  }
};

}  // namespace

RegionSegmentation region_merge(RegionGraph g, const MergeCriterion& c, std::size_t target_g,
                                std::span<const std::size_t> snapshot_levels) {
  if (target_g < 1) throw PreconditionError("target region count must be at least 1");
  RegionSegmentation out;
  LevelRecorder rec{{}, {snapshot_levels.begin(), snapshot_levels.end()}, &out};
  RegionMergeEngine engine(g, c);
  rec.record(g);
  while (g.region_count() > target_g) {
    if (engine.merge_best() < 0) break;
    ++out.merges;
    rec.record(g);
  }
  rec.finish(g.pixel_count());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kMaxPiecesPerEdge = 64;
constexpr std::size_t kMaxRepairMoves = 16;

struct Piece {
  std::vector<std::size_t> pixels;
  ExactStats stats;
};

}  // namespace

class ExtendedGrower {
 public:
  explicit ExtendedGrower(RegionGraph& g) : g_(g), engine_(g, MergeCriterion::plain()), stamp_(g.pixel_count(), 0) {}

  /// Forced minimum-increment merge; returns the survivor or -1.
  RegionId forced_merge() {
    const std::int64_t slot = engine_.merge_best();
    return slot < 0 ? -1 : g_.regions_[static_cast<std::size_t>(slot)].id;
  }

  void repair(std::vector<RegionId> touched, RegionSegmentation& out) {
    for (std::size_t step = 0; step < kMaxRepairMoves; ++step) {
      Move best;
      best.delta = -1e-12 * (1.0 + std::abs(g_.error()));
      const auto* top = engine_.top();
      for (RegionId t : touched) {
        if (!g_.contains(t)) continue;
        for (const auto& nb : g_.neighbors(t)) {
          consider(t, nb.id, top, best);
          consider(nb.id, t, top, best);
        }
      }
      if (best.kind == Move::none) return;
      const std::uint32_t donor = g_.slot_of(best.donor);
      if (best.kind == Move::capture) {
        g_.move_pixels(best.pixels, best.donor, best.receiver);
        ++out.captures;
        const std::uint32_t receiver = g_.labels_[best.pixels.front()];
        engine_.push_edges(donor);
        engine_.push_edges(receiver);
        touched = {g_.regions_[donor].id, g_.regions_[receiver].id};
      } else {
        const RegionId fresh = g_.extract(best.pixels, best.donor);
        ++out.splits;
        engine_.push_edges(g_.slot_of(fresh));
        engine_.push_edges(donor);
        touched = {fresh, g_.regions_[donor].id};
        const RegionId merged = forced_merge();
        ++out.merges;
        if (merged >= 0) touched.push_back(merged);
      }
    }
  }

 private:
  struct Move {
    enum Kind { none, capture, split } kind = none;
    double delta = 0;
    RegionId donor = 0, receiver = 0;
    std::vector<std::size_t> pixels;
  };

  // Monochrome 4-connected pieces of `donor` touching `receiver`; never the
  // whole donor.
  std::vector<Piece> pieces(RegionId donor, RegionId receiver) {
    std::vector<Piece> out;
    const auto& dpix = g_.pixels(donor);
    const auto& rpix = g_.pixels(receiver);
    const std::uint32_t dslot = g_.slot_of(donor), rslot = g_.slot_of(receiver);
    std::vector<std::size_t> seeds;
    if (rpix.size() < dpix.size()) {
      for (std::size_t p : rpix)
        g_.for_each_neighbor_pixel(p, [&](std::size_t q) {
          if (g_.labels_[q] == dslot) seeds.push_back(q);
        });
    } else {
      for (std::size_t p : dpix) {
        bool touches = false;
        g_.for_each_neighbor_pixel(p, [&](std::size_t q) { touches = touches || g_.labels_[q] == rslot; });
        if (touches) seeds.push_back(p);
      }
    }
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    ++epoch_;
    const auto& px = g_.image_.pixels;
    for (std::size_t s : seeds) {
      if (out.size() >= kMaxPiecesPerEdge) break;
      if (stamp_[s] == epoch_) continue;
      Piece piece;
      piece.stats = ExactStats(px.cols());
      std::vector<std::size_t> stack{s};
      stamp_[s] = epoch_;
      while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        piece.pixels.push_back(p);
        piece.stats.add(px.row(static_cast<Eigen::Index>(p)).transpose());
        g_.for_each_neighbor_pixel(p, [&](std::size_t q) {
          if (stamp_[q] != epoch_ && g_.labels_[q] == dslot &&
              px.row(static_cast<Eigen::Index>(q)) == px.row(static_cast<Eigen::Index>(s))) {
            stamp_[q] = epoch_;
            stack.push_back(q);
          }
        });
      }
      if (piece.pixels.size() < dpix.size()) out.push_back(std::move(piece));
    }
    return out;
  }

  void consider(RegionId donor, RegionId receiver, const RegionMergeEngine::Candidate* top, Move& best) {
    const ExactStats& ds = g_.stats(donor);
    const ExactStats& rs = g_.stats(receiver);
    const std::uint32_t dslot = g_.slot_of(donor);
    const bool top_usable = top != nullptr && top->a != dslot && top->b != dslot;
    std::vector<Piece> found = pieces(donor, receiver);
    std::size_t pick = found.size();
    for (std::size_t k = 0; k < found.size(); ++k) {
      const double capture = correction_delta(ds, rs, found[k].stats);
      if (capture < best.delta) {
        best.kind = Move::capture;
        best.delta = capture;
        pick = k;
      }
      if (top_usable) {
        const double composite = split_delta(ds, found[k].stats) + top->score;
        if (composite < best.delta) {
          best.kind = Move::split;
          best.delta = composite;
          pick = k;
        }
      }
    }
    if (pick < found.size()) {
      best.donor = donor;
      best.receiver = receiver;
      best.pixels = std::move(found[pick].pixels);
    }
  }

  RegionGraph& g_;
  RegionMergeEngine engine_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

RegionSegmentation region_grow_extended(RegionGraph g, std::size_t target_g,
                                        std::span<const std::size_t> snapshot_levels) {
  if (target_g < 1) throw PreconditionError("target region count must be at least 1");
  RegionSegmentation out;
  LevelRecorder rec{{}, {snapshot_levels.begin(), snapshot_levels.end()}, &out};
  ExtendedGrower grower(g);
  rec.record(g);
  while (g.region_count() > target_g) {
    const RegionId survivor = grower.forced_merge();
    if (survivor < 0) break;
    ++out.merges;
    grower.repair({survivor}, out);
    rec.record(g);
  }
  rec.finish(g.pixel_count());
  return out;
}

}  // namespace pwc
