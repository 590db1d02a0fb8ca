#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fragchoice/errors.hpp"
#include "fragchoice/rng.hpp"

namespace fragchoice {

enum class RuleKind { uniform, max, min, mixture, table };

// A selection law Psi on [0,1]: nondecreasing with Psi(0)=0, Psi(1)=1.
// Immutable after construction; safe for concurrent reads.
class ChoiceRule {
 public:
  static ChoiceRule uniform() {
    ChoiceRule r;
    r.kind_ = RuleKind::uniform;
    return r;
  }

  // Psi(u) = u^k. Also valid for real k >= 1.
  static ChoiceRule max_k(double k) {
    if (!(k >= 1.0)) throw std::invalid_argument("max rule requires k >= 1");
    ChoiceRule r;
    r.kind_ = RuleKind::max;
    r.k_ = k;
    return r;
  }

  // Psi(u) = 1 - (1-u)^k.
  static ChoiceRule min_k(double k) {
    if (!(k >= 1.0)) throw std::invalid_argument("min rule requires k >= 1");
    ChoiceRule r;
    r.kind_ = RuleKind::min;
    r.k_ = k;
    return r;
  }

  static ChoiceRule mixture(std::vector<double> weights,
                            std::vector<ChoiceRule> parts) {
    if (weights.size() != parts.size() || parts.empty())
      throw std::invalid_argument("mixture: weights/parts size mismatch");
    double sum = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("mixture: negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("mixture: weights must sum to 1");
    ChoiceRule r;
    r.kind_ = RuleKind::mixture;
    r.weights_ = std::move(weights);
    r.parts_ = std::move(parts);
    return r;
  }

  // Monotone sample points (u_i, Psi_i), u ascending over [0,1] with
  // endpoints Psi(0)=0 and Psi(1)=1. Evaluated by linear interpolation.
  static ChoiceRule table(std::vector<double> u, std::vector<double> psi_vals) {
    if (u.size() != psi_vals.size() || u.size() < 2)
      throw std::invalid_argument("table rule: need >= 2 matching points");
    if (u.front() != 0.0 || u.back() != 1.0)
      throw std::invalid_argument("table rule: u must span [0,1]");
    if (std::abs(psi_vals.front()) > 1e-12 ||
        std::abs(psi_vals.back() - 1.0) > 1e-12)
      throw std::invalid_argument("table rule: Psi endpoints must be 0 and 1");
    for (std::size_t i = 1; i < u.size(); ++i) {
      if (!(u[i] > u[i - 1]))
        throw std::invalid_argument("table rule: u not strictly increasing");
      if (psi_vals[i] < psi_vals[i - 1])
        throw std::invalid_argument("table rule: Psi not monotone");
    }
    ChoiceRule r;
    r.kind_ = RuleKind::table;
    r.tab_u_ = std::move(u);
    r.tab_p_ = std::move(psi_vals);
    r.tab_p_.front() = 0.0;
    r.tab_p_.back() = 1.0;
    return r;
  }

  RuleKind kind() const { return kind_; }
  double k() const { return k_; }

  double Psi(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    switch (kind_) {
      case RuleKind::uniform:
        return u;
      case RuleKind::max:
        return std::pow(u, k_);
      case RuleKind::min:
        return 1.0 - std::pow(1.0 - u, k_);
      case RuleKind::mixture: {
        double s = 0.0;
        for (std::size_t i = 0; i < parts_.size(); ++i)
          s += weights_[i] * parts_[i].Psi(u);
        return s;
      }
      case RuleKind::table:
        return table_eval(u);
    }
    return u;
  }

  // Density psi = Psi'. Closed form for builtin kinds; centered finite
  // difference with step 1e-5 for table kind (one-sided at the endpoints).
  double psi(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    switch (kind_) {
      case RuleKind::uniform:
        return 1.0;
      case RuleKind::max:
        return k_ * std::pow(u, k_ - 1.0);
      case RuleKind::min:
        return k_ * std::pow(1.0 - u, k_ - 1.0);
      case RuleKind::mixture: {
        double s = 0.0;
        for (std::size_t i = 0; i < parts_.size(); ++i)
          s += weights_[i] * parts_[i].psi(u);
        return s;
      }
      case RuleKind::table: {
        const double h = 1e-5;
        double lo = u - h, hi = u + h;
        if (lo < 0.0) lo = 0.0;
        if (hi > 1.0) hi = 1.0;
        return (table_eval(hi) - table_eval(lo)) / (hi - lo);
      }
    }
    return 1.0;
  }

  // Generalized inverse Psi^{-1}(p). Exact for uniform/max/min; monotone
  // bisection to 1e-12 for mixture and table kinds.
  double inverse(double p) const {
    p = std::clamp(p, 0.0, 1.0);
    switch (kind_) {
      case RuleKind::uniform:
        return p;
      case RuleKind::max:
        return std::pow(p, 1.0 / k_);
      case RuleKind::min:
        return 1.0 - std::pow(1.0 - p, 1.0 / k_);
      case RuleKind::mixture:
      case RuleKind::table: {
        double lo = 0.0, hi = 1.0;
        while (hi - lo > 1e-12) {
          double mid = 0.5 * (lo + hi);
          if (Psi(mid) < p)
            lo = mid;
          else
            hi = mid;
        }
        return 0.5 * (lo + hi);
      }
    }
    return p;
  }

  // Inverse-transform sample: u = Psi^{-1}(U), U uniform on (0,1].
  double sample_u(Rng& rng) const {
    double v = inverse(rng.uniform_oc());
    return v > 0.0 ? v : std::numeric_limits<double>::min();
  }

  struct AssumptionReport {
    bool ok;
    double worst_ratio;  // min over grid of (1-Psi(u)) / (1-u)^kappa
    double worst_u;
  };

  // Grid check of 1 - Psi(u) >= c (1-u)^kappa on u = i/grid_points.
  AssumptionReport check_assumption(double c, double kappa,
                                    int grid_points = 10000) const {
    if (!(c > 0.0) || !(kappa >= 1.0) || grid_points < 100)
      throw std::invalid_argument("check_assumption: need c>0, kappa>=1, grid_points>=100");
    AssumptionReport rep{true, std::numeric_limits<double>::infinity(), 0.0};
    for (int i = 1; i < grid_points; ++i) {
      double u = static_cast<double>(i) / grid_points;
      double lhs = 1.0 - Psi(u);
      double rhs = std::pow(1.0 - u, kappa);
      double ratio = lhs / rhs;
      if (ratio < rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.worst_u = u;
      }
      if (lhs < c * rhs) rep.ok = false;
    }
    return rep;
  }

  std::optional<std::pair<double, double>> assumption_constants;  // (c, kappa)

 private:
  ChoiceRule() = default;

  double table_eval(double u) const {
    auto it = std::upper_bound(tab_u_.begin(), tab_u_.end(), u);
    if (it == tab_u_.begin()) return tab_p_.front();
    if (it == tab_u_.end()) return tab_p_.back();
    std::size_t j = static_cast<std::size_t>(it - tab_u_.begin());
    double t = (u - tab_u_[j - 1]) / (tab_u_[j] - tab_u_[j - 1]);
    return tab_p_[j - 1] + t * (tab_p_[j] - tab_p_[j - 1]);
  }

  RuleKind kind_ = RuleKind::uniform;
  double k_ = 1.0;
  std::vector<double> weights_;
  std::vector<ChoiceRule> parts_;
  std::vector<double> tab_u_, tab_p_;
};

namespace detail {

inline ChoiceRule parse_primitive_rule(const std::string& s) {
  if (s == "uniform") return ChoiceRule::uniform();
  auto colon = s.find(':');
  std::string head = s.substr(0, colon);
  if (head == "max" || head == "min") {
    if (colon == std::string::npos)
      throw std::invalid_argument("rule '" + s + "': missing k");
    double k = std::stod(s.substr(colon + 1));
    return head == "max" ? ChoiceRule::max_k(k) : ChoiceRule::min_k(k);
  }
  if (head == "table") {
    if (colon == std::string::npos)
      throw std::invalid_argument("rule 'table': missing path");
    std::string path = s.substr(colon + 1);
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("rule table: cannot open " + path);
    std::vector<double> us, ps;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      double a, b;
      if (!(ls >> a >> b)) {
        if (first) {  // header row
          first = false;
          continue;
        }
        throw std::invalid_argument("rule table: bad line '" + line + "'");
      }
      first = false;
      us.push_back(a);
      ps.push_back(b);
    }
    return ChoiceRule::table(std::move(us), std::move(ps));
  }
  throw std::invalid_argument("unknown rule descriptor '" + s + "'");
}

}  // namespace detail

// Descriptor grammar: `uniform`, `max:K`, `min:K`,
// `mix:w1*max:2+w2*min:3`, `table:PATH` (CSV columns u,Psi ascending).
inline ChoiceRule parse_rule(const std::string& descriptor) {
  if (descriptor.rfind("mix:", 0) == 0) {
    std::string body = descriptor.substr(4);
    std::vector<double> weights;
    std::vector<ChoiceRule> parts;
    std::size_t pos = 0;
    while (pos < body.size()) {
      std::size_t next = body.find('+', pos);
      std::string term = body.substr(pos, next == std::string::npos ? next : next - pos);
      auto star = term.find('*');
      if (star == std::string::npos)
        throw std::invalid_argument("mix term '" + term + "': expected w*rule");
      weights.push_back(std::stod(term.substr(0, star)));
      parts.push_back(detail::parse_primitive_rule(term.substr(star + 1)));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    return ChoiceRule::mixture(std::move(weights), std::move(parts));
  }
  return detail::parse_primitive_rule(descriptor);
}

}  // namespace fragchoice
