#include "fetalscreen/perturb.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "fetalscreen/error.hpp"
#include "fetalscreen/geometry.hpp"
#include "fetalscreen/random.hpp"

namespace fetalscreen {

namespace {

constexpr std::array<PixelCoord, 8> kRing = {{{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
constexpr std::array<PixelCoord, 4> kFour = {{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};

class Perturber {
 public:
  Perturber(const LabelMask& truth, std::uint64_t seed)
      : truth_(truth),
        w_(truth.width()),
        h_(truth.height()),
        pred_(truth.labels().begin(), truth.labels().end()),
        rng_(seed) {
    const int n = schema_max_label(truth.schema()) + 1;
    inter_.assign(n, 0);
    uni_.assign(n, 0);
    count_.assign(n, 0);
    frozen_.assign(n, false);
    bbox_.assign(n, BoundingBox{w_, h_, -1, -1});
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x) {
        const auto l = pred_[idx(x, y)];
        ++inter_[l];
        ++uni_[l];
        ++count_[l];
        grow(l, x, y);
      }
  }

  double jaccard(std::uint8_t l) const { return uni_[l] == 0 ? 1.0 : static_cast<double>(inter_[l]) / uni_[l]; }
  std::size_t truth_count(std::uint8_t l) const { return truth_.count(l); }

  // One boundary move that lowers J(l). Returns false when no move was found.
  bool degrade(std::uint8_t l, int tries) {
    const bool erode = rng_.bernoulli(0.5);
    if (frontier_label_ != l || frontier_age_ > std::max<std::size_t>(16, frontier_.size() / 8)) rebuild_frontier(l);
    if (frontier_.empty()) return false;
    for (int attempt = 0; attempt < tries; ++attempt) {
      const auto p = frontier_[rng_.below(frontier_.size())];
      const auto cur = pred_[idx(p.x, p.y)];
      if (cur != truth_at(p)) continue;
      if (erode && cur == l) {
        const auto other = random_foreign_neighbour(p, l);
        if (other < 0 || frozen_[other] || count_[l] <= 1 || !smooth(p, static_cast<std::uint8_t>(other), 3) || !smooth(p, l, 1)) continue;
        assign(p, static_cast<std::uint8_t>(other));
        ++frontier_age_;
        return true;
      }
      if (!erode && cur != l && touches4(p, l)) {
        if (frozen_[cur] || count_[cur] <= 1 || !smooth(p, l, 3) || !smooth(p, cur, 1)) continue;
        assign(p, l);
        ++frontier_age_;
        return true;
      }
    }
    frontier_label_ = -1;  // stale list is the likelier cause; retry on a fresh one
    return false;
  }

  // Restores pixels involving l to their true labels until J(l) reaches
  // `goal`. Candidates are visited in shuffled passes since a fix can make a
  // neighbour fixable (peeling a thin spur from its tip).
  void repair(std::uint8_t l, double goal) {
    const auto& b = bbox_[l];
    std::vector<PixelCoord> todo;
    for (int y = std::max(0, b.min_y - 1); y <= std::min(h_ - 1, b.max_y + 1); ++y)
      for (int x = std::max(0, b.min_x - 1); x <= std::min(w_ - 1, b.max_x + 1); ++x) {
        const auto cur = pred_[idx(x, y)], t = truth_.at(x, y);
        if (cur != t && (cur == l || t == l) && !frozen_[cur] + !frozen_[t] == 2) todo.push_back({x, y});
      }
    rng_.shuffle(std::span(todo));
    bool progress = true;
    while (progress && !todo.empty() && jaccard(l) < goal) {
      progress = false;
      std::vector<PixelCoord> left;
      for (const auto& p : todo) {
        if (jaccard(l) >= goal) break;
        const auto cur = pred_[idx(p.x, p.y)];
        const auto t = truth_at(p);
        if (cur == t) continue;
        if (!touches8(p, t) || count_[cur] <= 1 || !removable(p, cur)) {
          left.push_back(p);
          continue;
        }
        assign(p, t);
        progress = true;
      }
      todo = std::move(left);
    }
  }

  // Later labels leave every pixel of a frozen label alone, truth or predicted.
  void freeze(std::uint8_t l) { frozen_[l] = true; }

  LabelMask result() const { return LabelMask(w_, h_, truth_.schema(), pred_); }

 private:
  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * w_ + x; }
  std::uint8_t truth_at(PixelCoord p) const { return truth_.at(p.x, p.y); }
  bool in(int x, int y) const { return x >= 0 && y >= 0 && x < w_ && y < h_; }
  bool is(int x, int y, std::uint8_t l) const { return in(x, y) && pred_[idx(x, y)] == l; }

  void grow(std::uint8_t l, int x, int y) {
    auto& b = bbox_[l];
    b.min_x = std::min(b.min_x, x);
    b.min_y = std::min(b.min_y, y);
    b.max_x = std::max(b.max_x, x);
    b.max_y = std::max(b.max_y, y);
  }

  // Pixels on either side of l's boundary, the only places a move can happen.
  void rebuild_frontier(std::uint8_t l) {
    frontier_.clear();
    const auto& b = bbox_[l];
    for (int y = std::max(0, b.min_y - 1); y <= std::min(h_ - 1, b.max_y + 1); ++y)
      for (int x = std::max(0, b.min_x - 1); x <= std::min(w_ - 1, b.max_x + 1); ++x) {
        const bool inside = pred_[idx(x, y)] == l;
        for (const auto& d : kFour)
          if (in(x + d.x, y + d.y) && (pred_[idx(x + d.x, y + d.y)] == l) != inside) {
            frontier_.push_back({x, y});
            break;
          }
      }
    frontier_label_ = l;
    frontier_age_ = 0;
  }

  int random_foreign_neighbour(PixelCoord p, std::uint8_t l) {
    const auto start = rng_.below(4);
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& d = kFour[(start + k) % 4];
      const int x = p.x + d.x, y = p.y + d.y;
      if (in(x, y) && pred_[idx(x, y)] != l) return pred_[idx(x, y)];
    }
    return -1;
  }

  bool touches4(PixelCoord p, std::uint8_t l) const {
    for (const auto& d : kFour)
      if (is(p.x + d.x, p.y + d.y, l)) return true;
    return false;
  }

  // The l-neighbours of p form one unbroken arc of at least `min_run` cells
  // around the ring. Degrading moves need this for both labels involved so
  // boundaries stay smooth; checkerboards would leave pixels no later move
  // could restore without splitting a component.
  bool smooth(PixelCoord p, std::uint8_t l, int min_run) const {
    std::array<bool, 8> member{};
    int members = 0;
    for (int i = 0; i < 8; ++i) members += member[i] = is(p.x + kRing[i].x, p.y + kRing[i].y, l);
    if (members < min_run) return false;
    if (members == 8) return true;
    int starts = 0;
    for (int i = 0; i < 8; ++i) starts += member[i] && !member[(i + 7) % 8];
    return starts == 1;
  }

  bool touches8(PixelCoord p, std::uint8_t l) const {
    for (const auto& d : kRing)
      if (is(p.x + d.x, p.y + d.y, l)) return true;
    return false;
  }

  // Removing p from l keeps l's 8-neighbours of p in a single 8-connected group.
  bool removable(PixelCoord p, std::uint8_t l) const {
    std::array<bool, 8> member{};
    int members = 0;
    for (int i = 0; i < 8; ++i) {
      member[i] = is(p.x + kRing[i].x, p.y + kRing[i].y, l);
      members += member[i];
    }
    if (members == 0) return false;
    std::array<int, 8> group{};
    for (int i = 0; i < 8; ++i) group[i] = i;
    auto find = [&](int i) {
      while (group[i] != i) i = group[i];
      return i;
    };
    for (int i = 0; i < 8; ++i)
      for (int j = i + 1; j < 8; ++j)
        if (member[i] && member[j] && std::abs(kRing[i].x - kRing[j].x) <= 1 && std::abs(kRing[i].y - kRing[j].y) <= 1)
          group[find(j)] = find(i);
    int roots = 0;
    for (int i = 0; i < 8; ++i) roots += member[i] && find(i) == i;
    return roots == 1;
  }

  void assign(PixelCoord p, std::uint8_t to) {
    auto& cell = pred_[idx(p.x, p.y)];
    const auto from = cell;
    const auto t = truth_at(p);
    if (t == from) --inter_[from];
    else --uni_[from];
    if (t == to) ++inter_[to];
    else ++uni_[to];
    --count_[from];
    ++count_[to];
    cell = to;
    grow(to, p.x, p.y);
  }

  const LabelMask& truth_;
  int w_, h_;
  std::vector<std::uint8_t> pred_;
  Rng rng_;
  std::vector<std::size_t> inter_, uni_, count_;
  std::vector<BoundingBox> bbox_;
  std::vector<bool> frozen_;
  std::vector<PixelCoord> frontier_;
  int frontier_label_ = -1;
  std::size_t frontier_age_ = 0;
};

}  // namespace

LabelMask perturb_mask(const LabelMask& mask, double target_jaccard, std::uint64_t seed,
                       const PerturbOptions& options) {
  if (!(target_jaccard > 0.0 && target_jaccard <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "target_jaccard must lie in (0, 1]");
  if (target_jaccard == 1.0) return mask;

  Perturber state(mask, seed);
  std::vector<std::uint8_t> targets;
  for (int l = 1; l <= schema_max_label(mask.schema()); ++l)
    if (state.truth_count(static_cast<std::uint8_t>(l)) > 0) targets.push_back(static_cast<std::uint8_t>(l));

  // Smallest structures first: each label is settled against neighbours that
  // are still free to absorb the change, then frozen.
  std::stable_sort(targets.begin(), targets.end(),
                   [&](auto a, auto b) { return state.truth_count(a) < state.truth_count(b); });
  constexpr int kTries = 4096;
  for (auto l : targets) {
    for (int round = 0; round < options.max_rounds; ++round) {
      const auto budget = 8 * state.truth_count(l) + 64;
      if (state.jaccard(l) > target_jaccard + options.tolerance) {
        for (std::size_t k = 0; k < budget && state.jaccard(l) > target_jaccard; ++k)
          if (!state.degrade(l, kTries) && !state.degrade(l, kTries)) break;
      } else if (state.jaccard(l) < target_jaccard - options.tolerance) {
        state.repair(l, target_jaccard);
      } else {
        break;
      }
    }
    state.freeze(l);
  }

  for (auto l : targets)
    if (std::abs(state.jaccard(l) - target_jaccard) > options.accept)
      throw Error(ErrorCode::TargetUnreachable, std::string(label_name(mask.schema(), l)) + " settled at Jaccard " +
                                                    std::to_string(state.jaccard(l)));
  return state.result();
}

}  // namespace fetalscreen
