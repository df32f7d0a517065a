#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bergman/geometry.hpp"
#include "bergman/space.hpp"
#include "bergman/types.hpp"
#include "bergman/weights.hpp"

namespace bergman {

struct Atom {
  Complex position;
  double mass = 0.0;
};

/// Finitely many point masses in the disk.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  explicit DiscreteMeasure(std::vector<Atom> atoms);

  [[nodiscard]] const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  [[nodiscard]] std::size_t size() const noexcept { return atoms_.size(); }
  [[nodiscard]] bool empty() const noexcept { return atoms_.empty(); }
  [[nodiscard]] double total_mass() const noexcept;
  [[nodiscard]] DiscreteMeasure scaled(double factor) const;
  [[nodiscard]] DiscreteMeasure with_atom(Atom a) const;

 private:
  std::vector<Atom> atoms_;
};

/// Atoms with r_n <= |z| < r_{n+1}.
[[nodiscard]] DiscreteMeasure restrict_annulus(const DiscreteMeasure& mu, const RadiiSchedule& s,
                                               std::size_t n);

/// sup of mu(Q)/(1-|zeta|) over boxes anchored at the atom moduli, computed
/// exactly by an angular sliding window per level. The box sup is approached
/// from below |zeta|, so both box conditions are taken closed.
[[nodiscard]] double h2_carleson_constant(const DiscreteMeasure& mu);

struct Theorem1Profile {
  std::vector<double> per_n;  // 2^n C_n, n = 0..N-1
  double sup = 0.0;
};

[[nodiscard]] Theorem1Profile theorem1_profile(const DiscreteMeasure& mu, const RadiiSchedule& s);

struct EmbeddingResult {
  double value = 0.0;
  bool tail_flag = false;
};

/// Best constant C in int |p|^2 dmu <= C ||p||^2 over polynomials of degree <= D,
/// via the smaller of the two Gram formulations.
[[nodiscard]] EmbeddingResult embedding_constant_direct(const DiscreteMeasure& mu, const KernelModel& km);

/// Atom 2^{-n(lambda)} (1 - |lambda|) at every lambda.
[[nodiscard]] DiscreteMeasure lemma1_measure(const PointSequence& lambda, const RadiiSchedule& s);

/// Seeded corpus measure: `count` atoms, annulus uniform in [n_lo, n_hi],
/// angle uniform, 1 - |z| log-uniform inside the annulus, mass
/// 2^{-n}(1-|z|) 10^{U(-1,1)}.
[[nodiscard]] DiscreteMeasure random_measure(const RadiiSchedule& s, std::size_t count, std::size_t n_lo,
                                             std::size_t n_hi, std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace bergman
