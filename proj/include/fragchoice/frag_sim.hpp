#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fragchoice/errors.hpp"
#include "fragchoice/measures.hpp"
#include "fragchoice/rng.hpp"
#include "fragchoice/rules.hpp"

namespace fragchoice {

// ---------------------------------------------------------------------------
// Order-statistics index over (length, id) keys with subtree length-sums:
// a treap with deterministic priorities. Supports insert/erase, cumulative-
// weight search, and rank/select among equal lengths, all O(log n).
// ---------------------------------------------------------------------------
class LengthIndex {
 public:
  void insert(double len, std::uint64_t id) {
    std::int32_t n = alloc(len, id);
    auto [a, b] = split(root_, len, id);
    root_ = merge(merge(a, n), b);
  }

  void erase(double len, std::uint64_t id) {
    auto [a, bc] = split(root_, len, id);
    auto [b, c] = split_leq(bc, len, id);
    if (b == -1 || nodes_[b].cnt != 1 || nodes_[b].len != len ||
        nodes_[b].id != id)
      throw std::invalid_argument("LengthIndex::erase: key not present");
    free_node(b);
    root_ = merge(a, c);
  }

  double total() const { return root_ == -1 ? 0.0 : nodes_[root_].sum; }
  std::int64_t size() const { return root_ == -1 ? 0 : nodes_[root_].cnt; }

  // First element in (length,id) order whose inclusive prefix length-sum
  // exceeds p; clamps to the largest element when p >= total.
  std::pair<double, std::uint64_t> cumulative_search(double p) const {
    if (root_ == -1) throw std::invalid_argument("LengthIndex: empty");
    std::int32_t n = root_;
    std::pair<double, std::uint64_t> last{0.0, 0};
    while (n != -1) {
      double ls = nodes_[n].left == -1 ? 0.0 : nodes_[nodes_[n].left].sum;
      if (p < ls) {
        n = nodes_[n].left;
      } else if (p < ls + nodes_[n].len) {
        return {nodes_[n].len, nodes_[n].id};
      } else {
        p -= ls + nodes_[n].len;
        last = {nodes_[n].len, nodes_[n].id};
        n = nodes_[n].right;
      }
    }
    // p exceeded the total sum: rightmost element.
    std::int32_t m = root_;
    while (nodes_[m].right != -1) m = nodes_[m].right;
    return {nodes_[m].len, nodes_[m].id};
  }

  // Number of elements with exactly this length.
  std::int64_t count_equal(double len) const {
    return rank_lt(len, UINT64_MAX) - rank_lt(len, 0);
  }

  // k-th (0-based, by id order) element among those with this length.
  std::pair<double, std::uint64_t> kth_equal(double len, std::int64_t k) const {
    std::int64_t start = rank_lt(len, 0);
    return select(start + k);
  }

 private:
  struct Node {
    double len;
    std::uint64_t id;
    std::uint64_t prio;
    std::int32_t left, right;
    std::int32_t cnt;
    double sum;
  };

  static bool key_less(double l1, std::uint64_t i1, double l2, std::uint64_t i2) {
    return l1 < l2 || (l1 == l2 && i1 < i2);
  }

  std::int32_t alloc(double len, std::uint64_t id) {
    std::int32_t n;
    if (free_ != -1) {
      n = free_;
      free_ = nodes_[n].left;
    } else {
      n = static_cast<std::int32_t>(nodes_.size());
      nodes_.emplace_back();
    }
    nodes_[n] = Node{len, id, mix64(id + 0x632BE59BD9B4E019ULL), -1, -1, 1, len};
    return n;
  }

  void free_node(std::int32_t n) {
    nodes_[n].left = free_;
    free_ = n;
  }

  void pull(std::int32_t n) {
    Node& nd = nodes_[n];
    nd.cnt = 1;
    nd.sum = nd.len;
    if (nd.left != -1) {
      nd.cnt += nodes_[nd.left].cnt;
      nd.sum += nodes_[nd.left].sum;
    }
    if (nd.right != -1) {
      nd.cnt += nodes_[nd.right].cnt;
      nd.sum += nodes_[nd.right].sum;
    }
  }

  // Split into keys < (len,id) and keys >= (len,id).
  std::pair<std::int32_t, std::int32_t> split(std::int32_t t, double len,
                                              std::uint64_t id) {
    if (t == -1) return {-1, -1};
    if (key_less(nodes_[t].len, nodes_[t].id, len, id)) {
      auto [a, b] = split(nodes_[t].right, len, id);
      nodes_[t].right = a;
      pull(t);
      return {t, b};
    }
    auto [a, b] = split(nodes_[t].left, len, id);
    nodes_[t].left = b;
    pull(t);
    return {a, t};
  }

  // Split into keys <= (len,id) and keys > (len,id).
  std::pair<std::int32_t, std::int32_t> split_leq(std::int32_t t, double len,
                                                  std::uint64_t id) {
    if (t == -1) return {-1, -1};
    if (!key_less(len, id, nodes_[t].len, nodes_[t].id)) {
      auto [a, b] = split_leq(nodes_[t].right, len, id);
      nodes_[t].right = a;
      pull(t);
      return {t, b};
    }
    auto [a, b] = split_leq(nodes_[t].left, len, id);
    nodes_[t].left = b;
    pull(t);
    return {a, t};
  }

  std::int32_t merge(std::int32_t a, std::int32_t b) {
    if (a == -1) return b;
    if (b == -1) return a;
    if (nodes_[a].prio > nodes_[b].prio) {
      nodes_[a].right = merge(nodes_[a].right, b);
      pull(a);
      return a;
    }
    nodes_[b].left = merge(a, nodes_[b].left);
    pull(b);
    return b;
  }

  std::int64_t rank_lt(double len, std::uint64_t id) const {
    std::int64_t r = 0;
    std::int32_t n = root_;
    while (n != -1) {
      if (key_less(nodes_[n].len, nodes_[n].id, len, id)) {
        r += 1 + (nodes_[n].left == -1 ? 0 : nodes_[nodes_[n].left].cnt);
        n = nodes_[n].right;
      } else {
        n = nodes_[n].left;
      }
    }
    return r;
  }

  std::pair<double, std::uint64_t> select(std::int64_t k) const {
    std::int32_t n = root_;
    while (n != -1) {
      std::int64_t lc = nodes_[n].left == -1 ? 0 : nodes_[nodes_[n].left].cnt;
      if (k < lc) {
        n = nodes_[n].left;
      } else if (k == lc) {
        return {nodes_[n].len, nodes_[n].id};
      } else {
        k -= lc + 1;
        n = nodes_[n].right;
      }
    }
    throw std::invalid_argument("LengthIndex::select: rank out of range");
  }

  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
  std::int32_t free_ = -1;
};

// ---------------------------------------------------------------------------
// Live fragmentation state.
// ---------------------------------------------------------------------------

struct Interval {
  double left;
  double len;
};

struct SplitEvent {
  std::uint64_t parent_id, child1_id, child2_id;
  double parent_len;
  double u;          // quantile drawn from Psi
  double v;          // split fraction
  double point_pos;  // position of the added point
};

class IntervalConfig {
 public:
  enum class Mode { discrete, poissonized };

  // Cut points must be strictly increasing within (0,1); n0 = cuts+1
  // intervals partition [0,1).
  static IntervalConfig from_cuts(std::span<const double> cuts,
                                  Mode mode = Mode::discrete) {
    IntervalConfig c;
    c.mode_ = mode;
    double prev = 0.0;
    for (double x : cuts) {
      if (!(x > prev) || !(x < 1.0))
        throw std::invalid_argument(
            "IntervalConfig: cuts must be strictly increasing in (0,1)");
      c.push_interval(prev, x - prev);
      prev = x;
    }
    c.push_interval(prev, 1.0 - prev);
    c.n0_ = static_cast<std::int64_t>(cuts.size()) + 1;
    return c;
  }

  void track_alphas(std::vector<double> alphas) {
    alphas_ = std::move(alphas);
    alpha_counts_.assign(alphas_.size(), 0);
  }

  void log_positions(bool on) { log_positions_ = on; }

  Mode mode() const { return mode_; }
  double time() const { return t_; }
  std::int64_t n_points() const { return n_points_; }
  std::int64_t n0() const { return n0_; }
  std::int64_t interval_count() const { return index_.size(); }
  double total_length() const { return index_.total(); }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& positions() const { return positions_; }

  std::int64_t alpha_count(std::size_t i) const { return alpha_counts_[i]; }
  double alpha_fraction(std::size_t i) const {
    return n_points_ == 0 ? 0.0
                          : static_cast<double>(alpha_counts_[i]) /
                                static_cast<double>(n_points_);
  }

  // Rescaling factor: interval count in discrete-step mode, e^t when
  // poissonized.
  double scale() const {
    return mode_ == Mode::discrete
               ? static_cast<double>(n0_ + n_points_)
               : std::exp(t_);
  }

  // One split event. Draw order: [poissonized clock], quantile u,
  // [tie-break], split fraction v.
  SplitEvent step(const ChoiceRule& rule, Rng& rng) {
    if (mode_ == Mode::poissonized)
      t_ = std::log(std::exp(t_) + rng.exponential());
    double u = rule.sample_u(rng);
    double p = u * index_.total();
    auto sel = index_.cumulative_search(p);
    double len = sel.first;
    std::uint64_t id = sel.second;
    std::int64_t eq = index_.count_equal(len);
    if (eq > 1) {
      auto k = static_cast<std::int64_t>(rng.uniform01() * static_cast<double>(eq));
      if (k >= eq) k = eq - 1;
      auto kth = index_.kth_equal(len, k);
      id = kth.second;
    }
    double v = rng.uniform_open();
    Interval iv = intervals_[id];
    double m1 = v * iv.len;
    double m2 = iv.len - m1;  // by subtraction: the pair sums to iv.len exactly
    if (!(m1 > 0.0) || !(m2 > 0.0)) {  // v rounded onto an endpoint
      m1 = 0.5 * iv.len;
      m2 = iv.len - m1;
    }
    std::uint64_t c1 = push_interval(iv.left, m1);
    std::uint64_t c2 = push_interval(iv.left + m1, m2);
    index_.erase(iv.len, id);
    alive_[id] = false;
    ++n_points_;
    double pos = iv.left + m1;
    for (std::size_t i = 0; i < alphas_.size(); ++i)
      if (pos <= alphas_[i]) ++alpha_counts_[i];
    if (log_positions_) positions_.push_back(pos);
    return SplitEvent{id, c1, c2, iv.len, u, v, pos};
  }

  // Atoms of the size-biased CDF, ascending, with the fraction of each
  // atom's mass lying in [0,alpha] and the number of tied intervals.
  struct AlphaAtom {
    double len;
    double mass;        // total length-mass at this length
    double alpha_mass;  // part contributed by [0,alpha]
    std::int64_t ties;
  };

  std::vector<AlphaAtom> alpha_atoms(double alpha) const {
    std::vector<AlphaAtom> atoms;
    atoms.reserve(static_cast<std::size_t>(index_.size()));
    for (std::size_t id = 0; id < intervals_.size(); ++id) {
      if (!alive_[id]) continue;
      const Interval& iv = intervals_[id];
      double overlap = std::clamp(alpha - iv.left, 0.0, iv.len);
      atoms.push_back({iv.len, iv.len, overlap, 1});
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const AlphaAtom& a, const AlphaAtom& b) { return a.len < b.len; });
    std::size_t w = 0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (w > 0 && atoms[w - 1].len == atoms[i].len) {
        atoms[w - 1].mass += atoms[i].mass;
        atoms[w - 1].alpha_mass += atoms[i].alpha_mass;
        atoms[w - 1].ties += 1;
      } else {
        atoms[w++] = atoms[i];
      }
    }
    atoms.resize(w);
    return atoms;
  }

  StepCDF size_biased() const {
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(intervals_.size());
    for (std::size_t id = 0; id < intervals_.size(); ++id)
      if (alive_[id]) atoms.emplace_back(intervals_[id].len, intervals_[id].len);
    return StepCDF(std::move(atoms));
  }

  StepCDF rescaled_size_biased() const { return size_biased().scaled(scale()); }

  // Instantaneous (per-event) drift of the restricted size-biased CDF at
  // level x: x^2 * sum over atoms z > x of (dA^a/dA)(z) * (Psi(A(z)) -
  // Psi(A(z-))) / z, plus an exact correction for the interval straddling
  // alpha. The atom sum treats a split's alpha-mass as dividing in
  // proportion to the child lengths, which is exact for intervals lying
  // entirely inside or outside [0,alpha]; the straddler's children have
  // deterministic overlaps instead, and its conditional expected
  // contribution has the closed form below. Without the correction the
  // compensated process fails its own martingale test.
  double drift_estimate(const ChoiceRule& rule, double alpha, double x) const {
    if (!(x > 0.0)) throw std::invalid_argument("drift_estimate: x must be > 0");
    auto atoms = alpha_atoms(alpha);
    double cum = 0.0, drift = 0.0;

    // the (at most one) interval with alpha in its interior
    double s_len = 0.0, s_overlap = 0.0;
    for (std::size_t id = 0; id < intervals_.size(); ++id) {
      if (!alive_[id]) continue;
      const Interval& iv = intervals_[id];
      if (iv.left < alpha && alpha < iv.left + iv.len) {
        s_len = iv.len;
        s_overlap = alpha - iv.left;
        break;
      }
    }

    for (const AlphaAtom& a : atoms) {
      double prev = cum;
      cum += a.mass;
      if (a.len <= x) continue;
      double dpsi = rule.Psi(cum) - rule.Psi(prev);
      drift += (a.alpha_mass / a.mass) * dpsi / a.len;
      if (a.len == s_len && s_overlap > 0.0) {
        // replace the straddler's proportional share by the exact value
        double share = dpsi / static_cast<double>(a.ties);
        double q = x / s_len, g = s_overlap / s_len;
        double mg = std::min(q, g);
        double exact = s_len * mg * mg / 2.0 +
                       s_overlap * std::max(0.0, q - g) +
                       s_len * std::pow(std::max(0.0, q - 1.0 + g), 2) / 2.0;
        drift += share * (exact / (x * x) - g / s_len);
      }
    }
    return x * x * drift;
  }

  // Cumulative-weight search answer for a given mass level (test hook).
  double search_length(double p) const { return index_.cumulative_search(p).first; }

  std::vector<Interval> live_intervals() const {
    std::vector<Interval> out;
    out.reserve(static_cast<std::size_t>(index_.size()));
    for (std::size_t id = 0; id < intervals_.size(); ++id)
      if (alive_[id]) out.push_back(intervals_[id]);
    return out;
  }

 private:
  IntervalConfig() = default;

  std::uint64_t push_interval(double left, double len) {
    std::uint64_t id = intervals_.size();
    intervals_.push_back({left, len});
    alive_.push_back(true);
    index_.insert(len, id);
    return id;
  }

  LengthIndex index_;
  std::vector<Interval> intervals_;  // indexed by id; split parents stay
  std::vector<char> alive_;
  std::vector<double> alphas_;
  std::vector<std::int64_t> alpha_counts_;
  std::vector<double> positions_;
  bool log_positions_ = false;
  Mode mode_ = Mode::discrete;
  double t_ = 0.0;
  std::int64_t n_points_ = 0;
  std::int64_t n0_ = 1;
};

// ---------------------------------------------------------------------------
// Batched runs with snapshots.
// ---------------------------------------------------------------------------

struct FragSnapshot {
  std::int64_t step;
  double t;
  std::vector<double> alpha_fractions;
  StepCDF rescaled;
};

struct FragStats {
  std::vector<double> alphas;
  std::vector<FragSnapshot> snapshots;
};

// Geometric snapshot schedule ending exactly at n_steps.
inline std::vector<std::int64_t> geometric_schedule(std::int64_t n_steps,
                                                    int count) {
  std::vector<std::int64_t> s;
  for (int i = 1; i <= count; ++i) {
    auto v = static_cast<std::int64_t>(std::llround(
        std::pow(static_cast<double>(n_steps), static_cast<double>(i) / count)));
    if (v < 1) v = 1;
    if (s.empty() || v > s.back()) s.push_back(v);
  }
  if (s.empty() || s.back() != n_steps) s.push_back(n_steps);
  return s;
}

inline FragStats run(IntervalConfig& config, const ChoiceRule& rule,
                     std::int64_t n_steps, std::span<const double> alphas,
                     Rng& rng, std::span<const std::int64_t> snapshot_steps) {
  if (n_steps < 1) throw std::invalid_argument("run: n_steps must be >= 1");
  config.track_alphas({alphas.begin(), alphas.end()});
  FragStats stats;
  stats.alphas.assign(alphas.begin(), alphas.end());
  std::size_t next_snap = 0;
  for (std::int64_t s = 1; s <= n_steps; ++s) {
    config.step(rule, rng);
    while (next_snap < snapshot_steps.size() && snapshot_steps[next_snap] == s) {
      FragSnapshot snap;
      snap.step = s;
      snap.t = config.time();
      for (std::size_t i = 0; i < alphas.size(); ++i)
        snap.alpha_fractions.push_back(config.alpha_fraction(i));
      snap.rescaled = config.rescaled_size_biased();
      stats.snapshots.push_back(std::move(snap));
      ++next_snap;
    }
  }
  return stats;
}

}  // namespace fragchoice
