#include "bergman/carleson.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "bergman/error.hpp"
#include "bergman/rng.hpp"

namespace bergman {

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  for (const auto& a : atoms_) {
    if (!(std::norm(a.position) < 1.0)) throw ValidationError("measure atom outside the open disk");
    if (!(a.mass >= 0.0) || !std::isfinite(a.mass)) throw ValidationError("measure atom mass must be >= 0");
  }
}

double DiscreteMeasure::total_mass() const noexcept {
  double t = 0.0;
  for (const auto& a : atoms_) t += a.mass;
  return t;
}

DiscreteMeasure DiscreteMeasure::scaled(double factor) const {
  if (!(factor >= 0.0)) throw ValidationError("measure scale must be >= 0");
  std::vector<Atom> out = atoms_;
  for (auto& a : out) a.mass *= factor;
  return DiscreteMeasure(std::move(out));
}

DiscreteMeasure DiscreteMeasure::with_atom(Atom a) const {
  std::vector<Atom> out = atoms_;
  out.push_back(a);
  return DiscreteMeasure(std::move(out));
}

DiscreteMeasure restrict_annulus(const DiscreteMeasure& mu, const RadiiSchedule& s, std::size_t n) {
  if (n + 1 > s.size()) throw ValidationError("restrict_annulus needs n <= N-1");
  std::vector<Atom> out;
  for (const auto& a : mu.atoms()) {
    const double m = std::abs(a.position);
    if (m >= s.radius(n) && m < s.radius(n + 1)) out.push_back(a);
  }
  return DiscreteMeasure(std::move(out));
}

double h2_carleson_constant(const DiscreteMeasure& mu) {
  if (mu.empty()) throw ValidationError("Carleson constant of an empty measure");
  const auto& atoms = mu.atoms();
  std::vector<double> levels;
  levels.reserve(atoms.size());
  for (const auto& a : atoms) levels.push_back(std::abs(a.position));
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  struct Ang {
    double theta;
    double mass;
  };
  double best = 0.0;
  std::vector<Ang> ring;
  for (double s : levels) {
    const double h = 1.0 - s;
    double origin_mass = 0.0;
    ring.clear();
    for (const auto& a : atoms) {
      const double m = std::abs(a.position);
      if (m < s) continue;
      if (m == 0.0) {
        origin_mass += a.mass;  // arg is undefined at 0; it sits in every level-0 box
      } else {
        ring.push_back({std::arg(a.position), a.mass});
      }
    }
    double window_best = 0.0;
    if (!ring.empty()) {
      if (2.0 * h >= kTwoPi) {
        for (const auto& r : ring) window_best += r.mass;
      } else {
        std::sort(ring.begin(), ring.end(), [](const Ang& x, const Ang& y) { return x.theta < y.theta; });
        const std::size_t n = ring.size();
        // Windows [theta_i, theta_i + 2h] over the doubled circle.
        const double width = 2.0 * h * (1.0 + 1e-13);
        std::size_t j = 0;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (j < i) {
            j = i;
            acc = 0.0;
          }
          auto angle_at = [&](std::size_t k) { return ring[k % n].theta + (k >= n ? kTwoPi : 0.0); };
          while (j < i + n && angle_at(j) - ring[i].theta <= width) {
            acc += ring[j % n].mass;
            ++j;
          }
          window_best = std::max(window_best, acc);
          acc -= ring[i].mass;
        }
      }
    }
    best = std::max(best, (window_best + origin_mass) / h);
  }
  return best;
}

Theorem1Profile theorem1_profile(const DiscreteMeasure& mu, const RadiiSchedule& s) {
  for (const auto& a : mu.atoms()) {
    if (s.annulus_index(a.position).overflow) throw ValidationError("measure atom beyond r_N");
  }
  Theorem1Profile p;
  p.per_n.assign(s.size(), 0.0);
  for (std::size_t n = 0; n < s.size(); ++n) {
    const DiscreteMeasure part = restrict_annulus(mu, s, n);
    if (part.empty()) continue;
    p.per_n[n] = std::ldexp(h2_carleson_constant(part), static_cast<int>(n));
    p.sup = std::max(p.sup, p.per_n[n]);
  }
  return p;
}

EmbeddingResult embedding_constant_direct(const DiscreteMeasure& mu, const KernelModel& km) {
  EmbeddingResult out;
  std::vector<Atom> atoms;
  for (const auto& a : mu.atoms()) {
    if (a.mass > 0.0) atoms.push_back(a);
  }
  if (atoms.empty()) return out;
  const std::size_t A = atoms.size();
  const std::size_t D = km.degree();
  double xmax = 0.0;
  for (const auto& a : atoms) xmax = std::max(xmax, std::norm(a.position));
  out.tail_flag = km.tail_bound(xmax) > km.tail_rel_tol() * km.diag(std::sqrt(xmax));

  Eigen::MatrixXcd H;
  if (A <= D + 1) {
    std::vector<Complex> pos(A);
    for (std::size_t a = 0; a < A; ++a) pos[a] = atoms[a].position;
    H.resize(static_cast<Eigen::Index>(A), static_cast<Eigen::Index>(A));
    std::vector<Complex> row(A);
    for (std::size_t b = 0; b < A; ++b) {
      km.kernel_row(pos[b], pos, row);  // row[a] = K(z_b, z_a)
      for (std::size_t a = 0; a < A; ++a) {
        H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            std::sqrt(atoms[a].mass * atoms[b].mass) * row[a];
      }
    }
  } else {
    // E_{k,a} = sqrt(m_a) z_a^k / sqrt(c_k); H = E E^*.
    Eigen::MatrixXcd E(static_cast<Eigen::Index>(D + 1), static_cast<Eigen::Index>(A));
    for (std::size_t a = 0; a < A; ++a) {
      Complex p = std::sqrt(atoms[a].mass);
      for (std::size_t k = 0; k <= D; ++k) {
        E(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(a)) = p / std::sqrt(km.coeff(k));
        p *= atoms[a].position;
      }
    }
    H = E * E.adjoint();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalGuardError("eigensolver failed in embedding constant");
  out.value = es.eigenvalues().maxCoeff();
  return out;
}

DiscreteMeasure lemma1_measure(const PointSequence& lambda, const RadiiSchedule& s) {
  std::vector<Atom> atoms;
  atoms.reserve(lambda.size());
  for (const auto& z : lambda.points()) {
    const auto idx = s.annulus_index(z);
    if (idx.overflow) throw ValidationError("sequence point beyond r_N");
    atoms.push_back({z, std::ldexp(1.0 - std::abs(z), -static_cast<int>(idx.n))});
  }
  return DiscreteMeasure(std::move(atoms));
}

DiscreteMeasure random_measure(const RadiiSchedule& s, std::size_t count, std::size_t n_lo, std::size_t n_hi,
                               std::uint64_t seed, std::uint64_t stream) {
  if (n_lo > n_hi || n_hi + 1 > s.size()) throw ValidationError("random_measure annulus range invalid");
  CounterRng rng(seed, stream);
  std::vector<Atom> atoms;
  atoms.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = n_lo + static_cast<std::size_t>(rng.below(n_hi - n_lo + 1));
    const double lg_hi = std::log(s.gap(n));
    const double lg_lo = std::log(s.gap(n + 1));
    // strictly inside the annulus so the annulus index is unambiguous
    const double u = rng.uniform(0.02, 0.98);
    const double gap = std::exp(lg_hi + u * (lg_lo - lg_hi));
    const double r = 1.0 - gap;
    const double theta = rng.uniform(-kPi, kPi);
    const double mass = std::ldexp(gap, -static_cast<int>(n)) * std::pow(10.0, rng.uniform(-1.0, 1.0));
    atoms.push_back({std::polar(r, theta), mass});
  }
  return DiscreteMeasure(std::move(atoms));
}

}  // namespace bergman
