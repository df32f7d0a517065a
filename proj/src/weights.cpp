#include "bergman/weights.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bergman/error.hpp"

namespace bergman {
namespace {

constexpr double kMinGap = 1e-300;

double parse_double(std::string_view text, std::string_view what) {
  std::string buf(text);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || !std::isfinite(v)) {
    throw ValidationError("cannot parse " + std::string(what) + " from '" + buf + "'");
  }
  return v;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

Weight Weight::constant() { return Weight(Base::constant, 1.0); }

Weight Weight::standard_alpha(double alpha) {
  if (!(alpha < 1.0) || !std::isfinite(alpha)) {
    throw ValidationError("standard_alpha requires alpha < 1");
  }
  return Weight(Base::constant, 1.0 - alpha);
}

Weight Weight::loglog() { return Weight(Base::loglog, 1.0); }

Weight Weight::tabulated(std::vector<std::pair<double, double>> samples, double eta) {
  if (samples.size() < 2) throw ValidationError("weight table needs at least two samples");
  if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("weight table coverage eta must be in (0,1)");
  auto table = std::make_shared<WeightTable>();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto [x, w] = samples[i];
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ValidationError("weight table sample " + std::to_string(i) + " is not positive");
    }
    if (!(x >= 0.0 && x < 1.0)) {
      throw ValidationError("weight table abscissa " + std::to_string(i) + " outside [0,1)");
    }
    if (i > 0 && !(x > samples[i - 1].first)) {
      throw ValidationError("weight table abscissae must be strictly increasing");
    }
    table->x.push_back(x);
    table->w.push_back(w);
  }
  if (table->x.front() > 1e-12) throw ValidationError("weight table must start at x = 0");
  if (table->x.back() < 1.0 - eta) {
    throw ValidationError("weight table does not cover [0, 1 - eta]");
  }
  const std::size_t n = table->x.size();
  table->tail_at.assign(n, 0.0);
  table->tail_at[n - 1] = table->w[n - 1] * (1.0 - table->x[n - 1]);
  for (std::size_t i = n - 1; i-- > 0;) {
    table->tail_at[i] = table->tail_at[i + 1] +
                        0.5 * (table->w[i] + table->w[i + 1]) * (table->x[i + 1] - table->x[i]);
  }
  const double total = table->tail_at[0];
  for (auto& v : table->w) v /= total;
  for (auto& v : table->tail_at) v /= total;
  Weight out(Base::table, 1.0);
  out.scale_ = 1.0 / total;
  out.table_ = std::move(table);
  return out;
}

double Weight::base_density(double t) const {
  switch (base_) {
    case Base::constant:
      return 1.0;
    case Base::loglog: {
      const double L = 1.0 - std::log(t);
      return 1.0 / (t * L * L);
    }
    case Base::table: {
      const auto& tb = *table_;
      const double x = 1.0 - t;
      if (x >= tb.x.back()) return tb.w.back();
      const auto it = std::upper_bound(tb.x.begin(), tb.x.end(), x);
      const std::size_t i = static_cast<std::size_t>(it - tb.x.begin()) - 1;
      const double f = (x - tb.x[i]) / (tb.x[i + 1] - tb.x[i]);
      return tb.w[i] + f * (tb.w[i + 1] - tb.w[i]);
    }
  }
  return 0.0;
}

double Weight::base_tail(double t) const {
  switch (base_) {
    case Base::constant:
      return t;
    case Base::loglog:
      return 1.0 / (1.0 - std::log(t));
    case Base::table: {
      const auto& tb = *table_;
      const double x = 1.0 - t;
      if (x >= tb.x.back()) return tb.w.back() * t;
      const auto it = std::upper_bound(tb.x.begin(), tb.x.end(), x);
      const std::size_t i = static_cast<std::size_t>(it - tb.x.begin()) - 1;
      const double wx = base_density(t);
      return tb.tail_at[i + 1] + 0.5 * (wx + tb.w[i + 1]) * (tb.x[i + 1] - x);
    }
  }
  return 0.0;
}

double Weight::density_from_gap(double t) const {
  if (!(t > 0.0 && t <= 1.0)) throw ValidationError("weight evaluated outside [0,1)");
  const double d = base_density(t);
  if (power_ == 1.0) return d;
  return power_ * d * std::pow(base_tail(t), power_ - 1.0);
}

double Weight::tail_from_gap(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("tail evaluated outside [0,1]");
  if (t == 0.0) return 0.0;
  const double b = base_tail(t);
  return power_ == 1.0 ? b : std::pow(b, power_);
}

double Weight::trusted_gap() const noexcept {
  return base_ == Base::table ? 1.0 - table_->x.back() : 0.0;
}

WeightKind Weight::kind() const noexcept {
  switch (base_) {
    case Base::constant:
      return power_ == 1.0 ? WeightKind::constant : WeightKind::standard_alpha;
    case Base::loglog:
      return WeightKind::loglog;
    case Base::table:
      return WeightKind::tabulated;
  }
  return WeightKind::constant;
}

std::string Weight::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (base_) {
    case Base::constant:
      if (power_ == 1.0) return "constant";
      os << "alpha:" << 1.0 - power_;
      return os.str();
    case Base::loglog:
      os << "loglog";
      break;
    case Base::table:
      os << "table(" << table_->x.size() << " samples)";
      break;
  }
  if (power_ != 1.0) os << "^" << power_;
  return os.str();
}

Weight alpha_transform(const Weight& w, double alpha) {
  if (!(alpha < 1.0) || !std::isfinite(alpha)) throw ValidationError("alpha_transform requires alpha < 1");
  Weight out = w;
  out.power_ = w.power_ * (1.0 - alpha);
  return out;
}

Weight load_weight_table(const std::string& path, double eta) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open weight table '" + path + "'");
  std::vector<std::pair<double, double>> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected 'x,w'");
    }
    const std::string xs = trim(line.substr(0, comma));
    if (lineno == 1 && (xs == "x" || xs == "X")) continue;
    try {
      samples.emplace_back(parse_double(xs, "x"), parse_double(trim(line.substr(comma + 1)), "w"));
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return Weight::tabulated(std::move(samples), eta);
}

Weight make_weight(std::string_view spec) {
  if (spec == "constant") return Weight::constant();
  if (spec == "loglog") return Weight::loglog();
  if (spec.starts_with("alpha:")) return Weight::standard_alpha(parse_double(spec.substr(6), "alpha"));
  if (spec.starts_with("table:")) return load_weight_table(std::string(spec.substr(6)));
  throw ValidationError("unknown weight spec '" + std::string(spec) +
                        "' (expected constant, alpha:<a>, loglog, table:<path>)");
}

DoublingReport check_doubling(const Weight& w, std::size_t grid_size) {
  if (grid_size < 16) throw ValidationError("check_doubling needs grid_size >= 16");
  // Forty octaves of t below 1/2, evenly spaced in log t.
  constexpr double kOctaves = 40.0;
  DoublingReport rep;
  rep.grid_size = grid_size;
  rep.c_min = INFINITY;
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double t = 0.5 * std::exp2(-kOctaves * static_cast<double>(i) / static_cast<double>(grid_size - 1));
    const double num = w.density_from_gap(t);
    const double den = w.density_from_gap(2.0 * t);
    if (!std::isfinite(num) || !std::isfinite(den) || !(den > 0.0)) {
      throw NumericalGuardError("weight evaluation failed in doubling check");
    }
    const double ratio = num / den;
    if (ratio < rep.c_min) {
      rep.c_min = ratio;
      rep.worst_t = t;
    }
  }
  return rep;
}

RadiiSchedule RadiiSchedule::from_gaps(std::vector<double> gaps, std::string weight_label) {
  if (gaps.empty()) throw ValidationError("schedule needs at least r_0");
  for (std::size_t n = 0; n < gaps.size(); ++n) {
    if (!(gaps[n] > 0.0 && gaps[n] <= 1.0)) throw ValidationError("schedule gap outside (0,1]");
    if (n > 0 && gaps[n] > gaps[n - 1]) throw ValidationError("schedule radii must be nondecreasing");
  }
  RadiiSchedule s;
  s.radii_.resize(gaps.size());
  for (std::size_t n = 0; n < gaps.size(); ++n) s.radii_[n] = 1.0 - gaps[n];
  s.gaps_ = std::move(gaps);
  s.label_ = std::move(weight_label);
  return s;
}

AnnulusIndex RadiiSchedule::annulus_index(double modulus) const {
  if (!(modulus >= 0.0 && modulus < 1.0)) throw ValidationError("annulus_index requires |z| < 1");
  if (radii_.empty()) throw ValidationError("empty schedule");
  const auto it = std::upper_bound(radii_.begin(), radii_.end(), modulus);
  std::size_t n = static_cast<std::size_t>(it - radii_.begin()) - 1;
  // A point computed to lie a rounding error inside r_{n+1} belongs to annulus n+1.
  if (n + 1 < radii_.size() && radii_[n + 1] - modulus <= std::max(1e-15, 1e-9 * gaps_[n + 1])) ++n;
  return {n, n == size()};
}

RadiiSchedule compute_radii(const Weight& w, std::size_t N, double tol) {
  if (N < 1) throw ValidationError("compute_radii needs N >= 1");
  if (!(tol > 0.0)) throw ValidationError("compute_radii needs tol > 0");
  std::vector<double> gaps(N + 1);
  gaps[0] = 1.0;
  if (std::abs(w.tail_from_gap(1.0) - 1.0) > tol) {
    throw NumericalGuardError("weight is not normalized: tail(0) != 1");
  }
  for (std::size_t n = 1; n <= N; ++n) {
    const double target = std::ldexp(1.0, -static_cast<int>(n));
    if (w.tail_from_gap(kMinGap) > target) {
      throw ValidationError("1 - r_" + std::to_string(n) + " underflows double precision");
    }
    // Bracket in log(gap), then finish in gap itself so the result is
    // accurate to the last bit of the gap.
    double lo = std::log(kMinGap);
    double hi = std::log(gaps[n - 1]);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (w.tail_from_gap(std::exp(mid)) < target ? lo : hi) = mid;
    }
    double glo = std::exp(lo);
    double ghi = std::min(std::exp(hi), gaps[n - 1]);
    if (w.tail_from_gap(glo) > target) glo = kMinGap;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (glo + ghi);
      if (mid <= glo || mid >= ghi) break;
      (w.tail_from_gap(mid) < target ? glo : ghi) = mid;
    }
    const double g = std::abs(w.tail_from_gap(glo) - target) <= std::abs(w.tail_from_gap(ghi) - target) ? glo : ghi;
    if (std::abs(w.tail_from_gap(g) - target) > tol) {
      throw NumericalGuardError("tail equation for r_" + std::to_string(n) + " not solvable to tolerance");
    }
    if (g < w.trusted_gap()) {
      throw NumericalGuardError("r_" + std::to_string(n) + " lies beyond the last weight sample");
    }
    if (!(g < gaps[n - 1])) throw NumericalGuardError("radii not strictly increasing");
    gaps[n] = g;
  }
  return RadiiSchedule::from_gaps(std::move(gaps), w.describe());
}

double radii_separation(const RadiiSchedule& s) {
  if (s.size() < 1) throw ValidationError("radii_separation needs N >= 1");
  double best = INFINITY;
  for (std::size_t n = 0; n < s.size(); ++n) best = std::min(best, s.gap(n) / s.gap(n + 1));
  return best;
}

std::size_t default_truncation(const Weight& w) {
  if (w.kind() != WeightKind::loglog) return 14;
  std::size_t N = 0;
  for (std::size_t n = 1; n <= 9; ++n) {
    if (w.tail_from_gap(kMinGap) > std::ldexp(1.0, -static_cast<int>(n))) break;
    N = n;
  }
  return std::max<std::size_t>(N, 1);
}

}  // namespace bergman
