#pragma once

// Rescaled limits of point sequences converging to a marked point: mutual
// stability, self-stable families, their metric quotient, and extended
// metrics lifted onto that quotient.
//
// Limits are estimated from a finite prefix m = 1..M. A selector picks the
// indices that take part (all of them, or an arithmetic subsequence); the
// decision window is the last quarter of the selected indices.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "balk/axioms.hpp"
#include "balk/construct.hpp"
#include "balk/core.hpp"

namespace balk::pretangent {

using Point = std::vector<double>;

// ---------------------------------------------------------------------------
// Ambient space

class AmbientSpace {
 public:
  enum class Kind { Euclidean, Tabulated, Oracle };
  using DistanceFn = std::function<double(const Point&, const Point&)>;

  static AmbientSpace euclidean(std::size_t dim, Point p) {
    if (dim == 0) throw InputError("euclidean ambient needs dim >= 1");
    if (p.size() != dim) throw InputError("marked point has " + std::to_string(p.size()) + " coordinates, expected " + std::to_string(dim));
    for (double c : p)
      if (!std::isfinite(c)) throw InputError("marked point has a non-finite coordinate");
    AmbientSpace a;
    a.kind_ = Kind::Euclidean;
    a.dim_ = dim;
    a.p_ = std::move(p);
    return a;
  }

  /// Points of a tabulated ambient are one-coordinate vectors holding an element index.
  static AmbientSpace tabulated(FiniteMetric metric, Index p) {
    auto report = check_metric(metric);
    if (!report.passed()) throw ContractError("tabulated ambient needs a valid metric", std::move(report));
    if (p >= metric.n()) throw InputError("marked point index out of range");
    AmbientSpace a;
    a.kind_ = Kind::Tabulated;
    a.dim_ = 1;
    a.table_ = std::move(metric);
    a.p_ = {static_cast<double>(p)};
    return a;
  }

  static AmbientSpace oracle(DistanceFn fn, Point p) {
    if (!fn) throw InputError("oracle ambient needs a distance function");
    AmbientSpace a;
    a.kind_ = Kind::Oracle;
    a.dim_ = p.size();
    a.oracle_ = std::move(fn);
    a.p_ = std::move(p);
    return a;
  }

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  const Point& marked_point() const { return p_; }
  const FiniteMetric& table() const { return table_; }

  void validate_point(const Point& x) const {
    if (kind_ == Kind::Oracle) return;
    if (x.size() != dim_) throw InputError("point has " + std::to_string(x.size()) + " coordinates, expected " + std::to_string(dim_));
    if (kind_ == Kind::Tabulated) {
      const double i = x[0];
      if (!(i >= 0.0) || i != std::floor(i) || i >= static_cast<double>(table_.n())) {
        throw InputError("tabulated point " + std::to_string(i) + " is not an element index");
      }
    } else {
      for (double c : x)
        if (!std::isfinite(c)) throw InputError("point has a non-finite coordinate");
    }
  }

  double distance(const Point& x, const Point& y) const {
    switch (kind_) {
      case Kind::Euclidean: {
        double s = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
        return dim_ == 1 ? std::fabs(x[0] - y[0]) : std::sqrt(s);
      }
      case Kind::Tabulated: return table_(static_cast<Index>(x[0]), static_cast<Index>(y[0]));
      case Kind::Oracle: return oracle_(x, y);
    }
    return 0.0;
  }

  double distance_to_p(const Point& x) const { return distance(x, p_); }

 private:
  Kind kind_ = Kind::Euclidean;
  std::size_t dim_ = 1;
  FiniteMetric table_;
  DistanceFn oracle_;
  Point p_;
};

// ---------------------------------------------------------------------------
// Normalizing sequences

class NormalizingSequence {
 public:
  struct Power {
    double c = 1.0;
    double a = 1.0;
  };
  struct Geometric {
    double c = 1.0;
    double q = 0.5;
  };
  struct Tabulated {
    std::vector<double> values;
  };
  using Form = std::variant<Power, Geometric, Tabulated>;

  /// r_m = c * m^(-a)
  static NormalizingSequence power(double c, double a) {
    if (!(c > 0.0) || !(a > 0.0)) throw InputError("power normalizing sequence needs c > 0 and a > 0");
    return NormalizingSequence(Power{c, a});
  }
  /// r_m = c * q^m
  static NormalizingSequence geometric(double c, double q) {
    if (!(c > 0.0) || !(q > 0.0 && q < 1.0)) throw InputError("geometric normalizing sequence needs c > 0 and 0 < q < 1");
    return NormalizingSequence(Geometric{c, q});
  }
  static NormalizingSequence tabulated(std::vector<double> values) {
    return NormalizingSequence(Tabulated{std::move(values)});
  }

  const Form& form() const { return form_; }

  /// r_m for m >= 1.
  double operator()(std::size_t m) const {
    const auto md = static_cast<double>(m);
    return std::visit(
        [&](const auto& f) -> double {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, Power>) {
            return f.c * std::pow(md, -f.a);
          } else if constexpr (std::is_same_v<F, Geometric>) {
            return f.c * std::pow(f.q, md);
          } else {
            return f.values.at(m - 1);
          }
        },
        form_);
  }

  /// All r_m positive and finite for m <= M; a tabulated tail must be
  /// nonincreasing over its last M/2 entries.
  void validate(std::size_t M) const {
    if (const auto* t = std::get_if<Tabulated>(&form_)) {
      if (t->values.size() != M) {
        throw InputError("tabulated normalizing sequence has " + std::to_string(t->values.size()) +
                         " entries, expected M = " + std::to_string(M));
      }
      for (std::size_t m = M / 2 + 1; m < M; ++m) {
        if (t->values[m] > t->values[m - 1]) {
          throw InputError("tabulated normalizing sequence increases at m = " + std::to_string(m + 1));
        }
      }
    }
    for (std::size_t m = 1; m <= M; ++m) {
      const double r = (*this)(m);
      if (!(r > 0.0) || !std::isfinite(r)) {
        throw InputError("normalizing sequence is not positive at m = " + std::to_string(m) +
                         " (r_m = " + std::to_string(r) + ")");
      }
    }
  }

 private:
  explicit NormalizingSequence(Form f) : form_(std::move(f)) {}
  Form form_;
};

// ---------------------------------------------------------------------------
// Point sequences

struct PointSequence {
  /// The constant sequence at the marked point.
  struct Constant {};
  /// x_m = p + r_m v
  struct Linear {
    Point v;
  };
  /// x_m = p + r_m v + r_m^alpha w, alpha > 1
  struct Analytic {
    Point v;
    Point w;
    double alpha = 2.0;
  };
  struct Tabulated {
    std::vector<Point> points;
  };
  using Form = std::variant<Constant, Linear, Analytic, Tabulated>;

  std::string label;
  Form form;

  static PointSequence constant(std::string label) { return {std::move(label), Constant{}}; }
  static PointSequence linear(std::string label, Point v) { return {std::move(label), Linear{std::move(v)}}; }
  static PointSequence analytic(std::string label, Point v, Point w, double alpha) {
    if (!(alpha > 1.0)) throw InputError("analytic sequence '" + label + "' needs alpha > 1");
    return {std::move(label), Analytic{std::move(v), std::move(w), alpha}};
  }
  static PointSequence tabulated(std::string label, std::vector<Point> points) {
    return {std::move(label), Tabulated{std::move(points)}};
  }
};

// ---------------------------------------------------------------------------
// Limit selection

/// Which indices take part in a limit: all of them, or m = start, start+step, ...
struct LimitSelector {
  std::size_t start = 1;
  std::size_t step = 1;

  static LimitSelector ordinary() { return {}; }
  static LimitSelector subsequence(std::size_t start, std::size_t step) {
    if (start < 1 || step < 1) throw InputError("subsequence selector needs start >= 1 and step >= 1");
    return {start, step};
  }
  static LimitSelector odd() { return {1, 2}; }
  static LimitSelector even() { return {2, 2}; }

  bool is_ordinary() const { return start == 1 && step == 1; }

  std::vector<std::size_t> indices(std::size_t M) const {
    std::vector<std::size_t> out;
    for (std::size_t m = start; m <= M; m += step) out.push_back(m);
    if (out.size() < std::max<std::size_t>(1, M / 4)) {
      throw InputError("selector keeps " + std::to_string(out.size()) + " of " + std::to_string(M) +
                       " indices; at least M/4 are required");
    }
    return out;
  }

  friend bool operator==(const LimitSelector&, const LimitSelector&) = default;
};

/// Everything needed to evaluate sequences and their rescaled limits.
struct Context {
  AmbientSpace ambient;
  NormalizingSequence normalizing = NormalizingSequence::power(1.0, 1.0);
  std::size_t M = 10'000;
  LimitSelector selector;
  /// Stability tolerance for limits.
  double tol = 1e-6;

  void validate() const {
    if (M < 4) throw InputError("prefix length M must be >= 4");
    if (!(tol > 0.0) || !std::isfinite(tol)) throw InputError("pretangent tolerance must be positive");
    normalizing.validate(M);
    (void)selector.indices(M);
  }
};

/// x_m for m in 1..M.
inline Point point_at(const Context& ctx, const PointSequence& s, std::size_t m) {
  const auto& p = ctx.ambient.marked_point();
  return std::visit(
      [&](const auto& f) -> Point {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, PointSequence::Constant>) {
          return p;
        } else if constexpr (std::is_same_v<F, PointSequence::Tabulated>) {
          return f.points[m - 1];
        } else {
          const double r = ctx.normalizing(m);
          Point x = p;
          for (std::size_t i = 0; i < x.size(); ++i) x[i] += r * f.v[i];
          if constexpr (std::is_same_v<F, PointSequence::Analytic>) {
            const double ra = std::pow(r, f.alpha);
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += ra * f.w[i];
          }
          return x;
        }
      },
      s.form);
}

/// Shape checks: catalog forms need a euclidean ambient of matching dimension;
/// tabulated forms need exactly M valid points.
inline void validate_sequence(const Context& ctx, const PointSequence& s) {
  if (s.label.empty()) throw InputError("sequence labels must be nonempty");
  const auto& amb = ctx.ambient;
  auto need_euclid = [&](const Point& v, const char* what) {
    if (amb.kind() != AmbientSpace::Kind::Euclidean) {
      throw InputError("sequence '" + s.label + "' uses a catalog form, which needs a euclidean ambient");
    }
    if (v.size() != amb.dim()) {
      throw InputError("sequence '" + s.label + "' has " + what + " of dimension " + std::to_string(v.size()) +
                       ", expected " + std::to_string(amb.dim()));
    }
  };
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, PointSequence::Linear>) {
          need_euclid(f.v, "direction v");
        } else if constexpr (std::is_same_v<F, PointSequence::Analytic>) {
          need_euclid(f.v, "direction v");
          need_euclid(f.w, "correction w");
          if (!(f.alpha > 1.0)) throw InputError("sequence '" + s.label + "' needs alpha > 1");
        } else if constexpr (std::is_same_v<F, PointSequence::Tabulated>) {
          if (f.points.size() != ctx.M) {
            throw InputError("sequence '" + s.label + "' has " + std::to_string(f.points.size()) +
                             " points, but the prefix length is M = " + std::to_string(ctx.M));
          }
          for (const auto& x : f.points) amb.validate_point(x);
        }
      },
      s.form);
}

/// Numerical membership in the sequences tending to p: the largest distance to p
/// over the second half of the prefix is at most half the largest over the
/// first half, or already within the tolerance.
inline bool tends_to_marked_point(const Context& ctx, const PointSequence& s) {
  double head = 0.0, tail = 0.0;
  for (std::size_t m = 1; m <= ctx.M; ++m) {
    double& bucket = m <= ctx.M / 2 ? head : tail;
    bucket = std::max(bucket, ctx.ambient.distance_to_p(point_at(ctx, s, m)));
  }
  return tail <= ctx.tol || tail <= 0.5 * head;
}

// ---------------------------------------------------------------------------
// Tail estimation

enum class Stability { Stable, Unstable, Inconclusive };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct StabilityVerdict {
  Stability status = Stability::Inconclusive;
  /// Mean over the decision window; the limit when stable.
  double limit = 0.0;
  /// max - min over the decision window.
  double tail_spread = 0.0;
  /// Window minimum and maximum: estimates of the lowest and highest accumulation points.
  double lower = 0.0;
  double upper = 0.0;

  bool stable() const { return status == Stability::Stable; }
  friend bool operator==(const StabilityVerdict&, const StabilityVerdict&) = default;
};

/// Stable when the window spread is within tol * max(1, |estimate|); unstable
/// when the lowest and highest accumulation estimates differ by more than three
/// times that; inconclusive in between.
inline StabilityVerdict estimate_tail(std::span<const double> q, double tol) {
  if (q.empty()) throw InputError("cannot estimate the limit of an empty sequence");
  const std::size_t window = std::max<std::size_t>(1, q.size() / 4);
  const auto tail = q.subspan(q.size() - window);
  StabilityVerdict v;
  v.limit = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(window);
  const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end());
  v.lower = *lo;
  v.upper = *hi;
  v.tail_spread = v.upper - v.lower;
  if (!std::isfinite(v.limit) || !std::isfinite(v.tail_spread)) {
    v.status = Stability::Unstable;
    return v;
  }
  const double scale = tol * std::max(1.0, std::fabs(v.limit));
  if (v.tail_spread <= scale) {
    v.status = Stability::Stable;
  } else if (v.tail_spread > 3.0 * scale) {
    v.status = Stability::Unstable;
  } else {
    v.status = Stability::Inconclusive;
  }
  return v;
}

/// Samples of `fn(m)` on the selector's index set.
template <typename Fn>
std::vector<double> sample_selected(const Context& ctx, Fn&& fn) {
  const auto idx = ctx.selector.indices(ctx.M);
  std::vector<double> q;
  q.reserve(idx.size());
  for (std::size_t m : idx) q.push_back(fn(m));
  return q;
}

/// Rescaled distance d(x_m, y_m) / r_m and its tail verdict.
inline StabilityVerdict mutual_stability(const Context& ctx, const PointSequence& x, const PointSequence& y) {
  validate_sequence(ctx, x);
  validate_sequence(ctx, y);
  const auto q = sample_selected(ctx, [&](std::size_t m) {
    return ctx.ambient.distance(point_at(ctx, x, m), point_at(ctx, y, m)) / ctx.normalizing(m);
  });
  return estimate_tail(q, ctx.tol);
}

// ---------------------------------------------------------------------------
// Self-stable families

struct PairVerdict {
  std::string first;
  std::string second;
  StabilityVerdict verdict;
  friend bool operator==(const PairVerdict&, const PairVerdict&) = default;
};

struct Rejection {
  std::string label;
  std::string reason;
  friend bool operator==(const Rejection&, const Rejection&) = default;
};

struct SelfStableFamily {
  std::vector<PointSequence> family;
  std::vector<Rejection> rejected;
  std::vector<PairVerdict> verdicts;
};

inline constexpr const char* kMarkedSequenceLabel = "p";

/// Greedy pass in pool order, starting from the constant sequence at p: a
/// candidate is admitted iff it is mutually stable with every admitted member.
/// An inconclusive pair aborts the run.
inline SelfStableFamily build_self_stable(const Context& ctx, const std::vector<PointSequence>& pool) {
  ctx.validate();
  SelfStableFamily out;
  out.family.push_back(PointSequence::constant(kMarkedSequenceLabel));
  std::vector<std::string> seen{kMarkedSequenceLabel};
  for (const auto& s : pool) {
    if (std::find(seen.begin(), seen.end(), s.label) != seen.end()) {
      throw InputError("duplicate sequence label '" + s.label + "'");
    }
    seen.push_back(s.label);
    validate_sequence(ctx, s);
  }
  if (ctx.ambient.kind() == AmbientSpace::Kind::Oracle) {
    // Spot check the oracle on a handful of points drawn from the pool.
    std::vector<Point> pts{ctx.ambient.marked_point()};
    for (const auto& s : pool)
      for (std::size_t m : {std::size_t{1}, ctx.M / 2, ctx.M}) pts.push_back(point_at(ctx, s, std::max<std::size_t>(1, m)));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() > kMaxUniverse) pts.resize(kMaxUniverse);
    auto sample = FiniteMetric::tabulate(Universe::letters(pts.size()),
                                         [&](Index i, Index j) { return ctx.ambient.distance(pts[i], pts[j]); });
    auto report = check_metric(sample, Tolerance::relative(1e-9));
    if (!report.passed()) throw ContractError("oracle distance fails the metric axioms on sampled points", std::move(report));
  }

  for (const auto& cand : pool) {
    if (!tends_to_marked_point(ctx, cand)) {
      out.rejected.push_back({cand.label, "does not tend to the marked point"});
      continue;
    }
    std::vector<PairVerdict> local;
    std::optional<std::string> blocker;
    for (const auto& member : out.family) {
      auto v = mutual_stability(ctx, member, cand);
      if (v.status == Stability::Inconclusive) {
        throw InputError("stability of (" + member.label + ", " + cand.label + ") is inconclusive: tail spread " +
                         std::to_string(v.tail_spread) + " lies between tol and 3*tol; raise M or adjust the tolerance");
      }
      if (v.status == Stability::Unstable && !blocker) blocker = member.label;
      local.push_back({member.label, cand.label, v});
    }
    out.verdicts.insert(out.verdicts.end(), local.begin(), local.end());
    if (blocker) {
      out.rejected.push_back({cand.label, "not mutually stable with '" + *blocker + "'"});
    } else {
      out.family.push_back(cand);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metric quotient

struct PretangentClass {
  std::vector<std::string> members;
  std::string representative;
  friend bool operator==(const PretangentClass&, const PretangentClass&) = default;
};

struct PretangentSpaceApprox {
  std::vector<PretangentClass> classes;
  /// Class distances, over a universe labelled by the representatives.
  FiniteMetric rho;
  /// The representative sequence of each class, in class order.
  std::vector<PointSequence> representatives;
  std::vector<PairVerdict> verdicts;
};

/// Groups a self-stable family by zero rescaled distance. Classes are the
/// connected components of the graph d~ <= tol, validated afterwards: members
/// of a class within 3*tol, distinct classes farther than 10*tol, and class
/// distances independent of the representatives up to 3*tol.
inline PretangentSpaceApprox quotient(const Context& ctx, const std::vector<PointSequence>& family) {
  ctx.validate();
  if (family.empty()) throw InputError("cannot form the quotient of an empty family");
  const auto n = family.size();
  std::vector<std::vector<double>> dt(n, std::vector<double>(n, 0.0));
  PretangentSpaceApprox out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      auto v = mutual_stability(ctx, family[i], family[j]);
      if (!v.stable()) {
        throw InputError("family is not self-stable: (" + family[i].label + ", " + family[j].label + ") is " +
                         to_string(v.status));
      }
      dt[i][j] = dt[j][i] = v.limit;
      out.verdicts.push_back({family[i].label, family[j].label, v});
    }

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> root = [&](std::size_t i) { return parent[i] == i ? i : parent[i] = root(parent[i]); };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (dt[i][j] <= ctx.tol) parent[std::max(root(i), root(j))] = std::min(root(i), root(j));

  std::vector<std::size_t> class_of(n), reps;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = root(i);
    auto it = std::find(reps.begin(), reps.end(), r);
    if (it == reps.end()) {
      reps.push_back(r);
      out.classes.push_back({{}, family[r].label});
      out.representatives.push_back(family[r]);
      it = reps.end() - 1;
    }
    class_of[i] = static_cast<std::size_t>(it - reps.begin());
    out.classes[class_of[i]].members.push_back(family[i].label);
  }
  if (reps.size() > kMaxUniverse) throw InputError("quotient has more than 24 classes");

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto ci = class_of[i], cj = class_of[j];
      const double rho = dt[reps[ci]][reps[cj]];
      if (ci == cj && dt[i][j] > 3.0 * ctx.tol) {
        throw InputError("class of '" + family[i].label + "' and '" + family[j].label +
                         "' straddles the tolerance: rescaled distance " + std::to_string(dt[i][j]) + " exceeds 3*tol");
      }
      if (ci != cj && rho <= 10.0 * ctx.tol) {
        throw InputError("classes of '" + family[i].label + "' and '" + family[j].label +
                         "' are closer than 10*tol; tolerance too coarse for this family");
      }
      if (ci != cj && std::fabs(dt[i][j] - rho) > 3.0 * ctx.tol) {
        throw InputError("class distance depends on the representative: " + std::to_string(dt[i][j]) + " vs " +
                         std::to_string(rho));
      }
    }

  std::vector<std::string> names;
  for (const auto& c : out.classes) names.push_back(c.representative);
  out.rho = FiniteMetric::tabulate(Universe(names), [&](Index a, Index b) { return a == b ? 0.0 : dt[reps[a]][reps[b]]; });
  auto report = check_metric(out.rho, Tolerance::absolute(10.0 * ctx.tol));
  if (!report.passed()) throw ContractError("class distances fail the metric axioms", std::move(report));
  return out;
}

// ---------------------------------------------------------------------------
// Lifted extended metrics

/// An extended metric evaluated on finite point sets of the ambient. Points
/// handed to `eval` are distinct.
struct TauRule {
  std::string name;
  std::function<double(std::span<const Point>, const AmbientSpace&)> eval;

  static double diameter_of(std::span<const Point> pts, const AmbientSpace& amb) {
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, amb.distance(pts[i], pts[j]));
    return best;
  }

  static double max_distance_to_p(std::span<const Point> pts, const AmbientSpace& amb) {
    double best = 0.0;
    for (const auto& x : pts) best = std::max(best, amb.distance_to_p(x));
    return best;
  }

  static TauRule diameter() { return {"diameter", [](auto pts, const auto& amb) { return diameter_of(pts, amb); }}; }

  /// diam(A) + coef * h(A)^power on sets of three or more points, where h is
  /// the largest distance to p. Pairs and singletons keep their diameter.
  static TauRule perturbed(double coef, double power) {
    return {"perturbed", [coef, power](auto pts, const auto& amb) {
              const double diam = diameter_of(pts, amb);
              if (pts.size() < 3) return diam;
              return diam + coef * std::pow(max_distance_to_p(pts, amb), power);
            }};
  }

  /// A set function over the elements of a tabulated ambient.
  static TauRule set_function(SetFunction tau) {
    return {"set-function", [tau = std::move(tau)](auto pts, const auto& amb) {
              if (amb.kind() != AmbientSpace::Kind::Tabulated) {
                throw InputError("set-function rule needs a tabulated ambient");
              }
              if (!(tau.universe() == amb.table().universe())) {
                throw InputError("set-function rule and ambient have different universes");
              }
              Subset s;
              for (const auto& x : pts) s = s.with(static_cast<Index>(x[0]));
              return tau(s);
            }};
  }
};

/// Distinct points among the m-th terms of `seqs`.
inline std::vector<Point> image_at(const Context& ctx, std::span<const PointSequence> seqs, std::size_t m) {
  std::vector<Point> pts;
  for (const auto& s : seqs) pts.push_back(point_at(ctx, s, m));
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

/// Tail verdict of tau(Im(x^1_m, ..., x^n_m)) / r_m for the representatives of `classes`.
inline StabilityVerdict lift_estimate(const Context& ctx, const TauRule& rule, const PretangentSpaceApprox& space,
                                      Subset classes) {
  require_nonempty_within(classes, space.rho.universe());
  std::vector<PointSequence> seqs;
  for (Index i : classes.members()) seqs.push_back(space.representatives[i]);
  const auto q = sample_selected(ctx, [&](std::size_t m) {
    const auto pts = image_at(ctx, seqs, m);
    return rule.eval(pts, ctx.ambient) / ctx.normalizing(m);
  });
  return estimate_tail(q, ctx.tol);
}

/// The lifted value on a set of classes. Fails when the rescaled values do
/// not converge on the selected indices.
inline double lift_balk(const Context& ctx, const TauRule& rule, const PretangentSpaceApprox& space, Subset classes) {
  const auto v = lift_estimate(ctx, rule, space, classes);
  if (!v.stable()) {
    throw InputError("lifted value of '" + canonical_subset_key(classes, space.rho.universe()) +
                     "' does not converge on the selected indices (" + to_string(v.status) + ", spread " +
                     std::to_string(v.tail_spread) + ")");
  }
  return v.limit;
}

/// lift_balk on every nonempty set of classes.
inline SetFunction lifted_set_function(const Context& ctx, const TauRule& rule, const PretangentSpaceApprox& space) {
  return SetFunction::tabulate(space.rho.universe(),
                               [&](Subset s) { return lift_balk(ctx, rule, space, s); });
}

// ---------------------------------------------------------------------------
// Scenario diagnostics

struct FamilyEstimate {
  std::vector<std::string> labels;
  StabilityVerdict tail;
  /// Largest |value| over the whole selected index set.
  double max_abs = 0.0;
  bool passed = false;
  friend bool operator==(const FamilyEstimate&, const FamilyEstimate&) = default;
};

/// Per-family evidence for a pointwise limit claim. A failing family refutes
/// the claim; passing families are only consistent with it.
struct ScenarioReport {
  std::string check;
  bool passed = true;
  double tolerance = 0.0;
  std::vector<FamilyEstimate> families;
  std::optional<std::size_t> failing_family;

  const char* reading() const { return passed ? "consistent" : "refutes"; }
};

namespace detail {

inline FamilyEstimate limit_to_zero(const Context& ctx, std::vector<std::string> labels, const std::vector<double>& q) {
  FamilyEstimate fe;
  fe.labels = std::move(labels);
  fe.tail = estimate_tail(q, ctx.tol);
  for (double v : q) fe.max_abs = std::max(fe.max_abs, std::fabs(v));
  fe.passed = std::fabs(fe.tail.limit) <= ctx.tol;
  return fe;
}

inline void require_convergent(const Context& ctx, const PointSequence& s) {
  validate_sequence(ctx, s);
  if (!tends_to_marked_point(ctx, s)) throw InputError("sequence '" + s.label + "' does not tend to the marked point");
}

inline void record(ScenarioReport& r, FamilyEstimate fe) {
  if (!fe.passed && r.passed) {
    r.passed = false;
    r.failing_family = r.families.size();
  }
  r.families.push_back(std::move(fe));
}

}  // namespace detail

/// |tau(Im) - diam(Im)| / max d(x^i_m, p), taken as 0 when every point is p.
inline double generation_defect(const TauRule& rule, std::span<const Point> pts, const AmbientSpace& amb) {
  const double h = TauRule::max_distance_to_p(pts, amb);
  if (h == 0.0) return 0.0;
  return std::fabs(rule.eval(pts, amb) - TauRule::diameter_of(pts, amb)) / h;
}

/// Tail-estimates the generation defect on each family; passes iff every
/// estimate is within tol of zero.
inline ScenarioReport generated_at_point(const Context& ctx, const TauRule& rule,
                                         const std::vector<std::vector<PointSequence>>& families) {
  ctx.validate();
  ScenarioReport r;
  r.check = "generated-at-point";
  r.tolerance = ctx.tol;
  for (const auto& fam : families) {
    if (fam.empty()) throw InputError("families must be nonempty");
    std::vector<std::string> labels;
    for (const auto& s : fam) {
      detail::require_convergent(ctx, s);
      labels.push_back(s.label);
    }
    const auto q = sample_selected(ctx, [&](std::size_t m) {
      const auto pts = image_at(ctx, fam, m);
      return generation_defect(rule, pts, ctx.ambient);
    });
    detail::record(r, detail::limit_to_zero(ctx, std::move(labels), q));
  }
  return r;
}

/// d(x,y) * min(d(x,p), d(y,p)) / max(d(x,p), d(y,p))^2, and 0 at (p, p).
inline double ultra_weight(const AmbientSpace& amb, const Point& x, const Point& y) {
  const double dx = amb.distance_to_p(x), dy = amb.distance_to_p(y);
  const double hi = std::max(dx, dy);
  if (hi == 0.0) return 0.0;
  return amb.distance(x, y) * std::min(dx, dy) / (hi * hi);
}

/// max of the three pairwise weights times (d1/d2 - 1), where d1 >= d2 are the
/// two longest sides of the triangle and d1/d2 is taken as 1 when d2 = 0.
inline double ultra_defect(const AmbientSpace& amb, const Point& x, const Point& y, const Point& z) {
  const double phi = std::max({ultra_weight(amb, x, y), ultra_weight(amb, x, z), ultra_weight(amb, y, z)});
  std::array<double, 3> sides{amb.distance(x, y), amb.distance(x, z), amb.distance(y, z)};
  std::sort(sides.begin(), sides.end(), std::greater<>());
  const double ratio = sides[1] == 0.0 ? 1.0 : sides[0] / sides[1];
  return phi * (ratio - 1.0);
}

/// Tail-estimates ultra_defect along each triple of sequences; passes iff every
/// estimate is within tol of zero.
inline ScenarioReport ultrametric_criterion(const Context& ctx,
                                            const std::vector<std::array<PointSequence, 3>>& triples) {
  ctx.validate();
  ScenarioReport r;
  r.check = "ultra-criterion";
  r.tolerance = ctx.tol;
  for (const auto& t : triples) {
    std::vector<std::string> labels;
    for (const auto& s : t) {
      detail::require_convergent(ctx, s);
      labels.push_back(s.label);
    }
    const auto q = sample_selected(ctx, [&](std::size_t m) {
      return ultra_defect(ctx.ambient, point_at(ctx, t[0], m), point_at(ctx, t[1], m), point_at(ctx, t[2], m));
    });
    detail::record(r, detail::limit_to_zero(ctx, std::move(labels), q));
  }
  return r;
}

}  // namespace balk::pretangent
