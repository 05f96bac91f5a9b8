// Copyright 2026 The chainstar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "chainstar/errors.hpp"
#include "chainstar/layout.hpp"
#include "chainstar/model.hpp"
#include "chainstar/pauli.hpp"
#include "chainstar/state.hpp"

namespace chainstar {

inline constexpr std::uint64_t kDefaultSectorCap = std::uint64_t{1} << 20;

/// The unitary, Hermitian pair transform (1/2)[1 + Z_i + X_j - Z_i X_j]:
/// identity when site i is spin-up, a flip of site j when it is spin-down.
/// Conjugating by it maps Pauli strings to single Pauli strings.
inline PauliSum triplet_transform(int i, int j) {
  if (i == j) throw Error("triplet_transform: sites must differ");
  if (i < 0 || j < 0) throw SiteOutOfRange("triplet_transform: negative site");
  PauliSum t;
  t.push_back(PauliString(0.5));
  t.push_back(PauliString::single(0.5, i, Axis::Z));
  t.push_back(PauliString::single(0.5, j, Axis::X));
  t.emplace_back(-0.5, std::vector<PauliFactor>{{i, Axis::Z}, {j, Axis::X}});
  return t;
}

/// One step of the chain reduction, identified by its two sites.
struct PairTransform {
  int control;  // the site whose z value steers the flip
  int target;

  PauliSum strings() const { return triplet_transform(control, target); }
};

/// Conjugation U^dagger H U with U given as a string sum, computed exactly
/// in string form by expanding the double product and collecting terms.
inline PauliSum conjugate(const PauliSum& h, const PauliSum& u) {
  return multiply(adjoint(u), multiply(h, u));
}

/// Conjugates by an ordered transform sequence, first element first:
/// H -> T_1 H T_1 -> T_2 (T_1 H T_1) T_2 -> ...
inline PauliSum conjugate(PauliSum h, std::span<const PairTransform> transforms) {
  for (const auto& t : transforms) {
    const PauliSum u = t.strings();
    h = conjugate(h, u);
  }
  return h;
}

/// The ordered pair-transform cascade reducing one chain: descending
/// sweeps (M-1, M), (M-2, M-1), ..., (1, 2) in chain positions, exactly
/// the two- and three-spin walkthrough extended spin-triplet by
/// spin-triplet. Applied via conjugate(), the N-wise chain strings
/// collapse onto the chain's first site.
inline std::vector<PairTransform> chain_transform(const SpinLayout& layout, int chain) {
  const int m = layout.chain_size(chain);
  if (m < 2) throw ChainTooShort("chain_transform: chain needs at least two spins");
  std::vector<PairTransform> steps;
  steps.reserve(m - 1);
  for (int pos = m - 1; pos >= 1; --pos) {
    steps.push_back({layout.site(chain, pos), layout.site(chain, pos + 1)});
  }
  return steps;
}

/// All chains' cascades concatenated; chains with a single spin need no
/// transform. Transforms of different chains act on disjoint sites, so
/// the order between chains is immaterial.
inline std::vector<PairTransform> full_transform(const SpinLayout& layout) {
  std::vector<PairTransform> steps;
  for (int k = 0; k < layout.chain_count(); ++k) {
    if (layout.chain_size(k) < 2) continue;
    auto chain_steps = chain_transform(layout, k);
    steps.insert(steps.end(), chain_steps.begin(), chain_steps.end());
  }
  return steps;
}

/// What the cascade does to a whole-chain Pauli string on one axis.
struct ReductionReport {
  int chain = 0;
  Axis axis = Axis::X;          // axis of the N-wise chain string
  Axis reduced_axis = Axis::X;  // axis of the surviving first-site operator
  int sign = 1;
  std::vector<int> parity_sites;  // 1-based chain positions whose z values scale the coupling
};

/// Closed form of the chain reduction for odd M (X works for any M):
/// X -> +X_1; Y -> (-1)^((M-1)/2) Y_1 times the z parities of positions
/// 3, 5, ..., M; Z -> +Z_1 times the same parities.
inline ReductionReport reduce_chain_axis(Axis axis, int m, int chain = 0) {
  if (m < 1) throw Error("reduce_chain_axis: M must be positive");
  ReductionReport r;
  r.chain = chain;
  r.axis = axis;
  r.reduced_axis = axis;
  if (axis == Axis::X) return r;
  if (m % 2 == 0) {
    throw EvenMForYZ("reduce_chain_axis: Y and Z chain strings need odd M");
  }
  for (int pos = 3; pos <= m; pos += 2) r.parity_sites.push_back(pos);
  if (axis == Axis::Y) r.sign = ((m - 1) / 2) % 2 ? -1 : 1;
  return r;
}

/// Coefficient of Z on the chain's first site after reducing per-spin
/// fields: omega_1 + sum_{j>=2} (prod_{j'=2..j} sigma_j') omega_j.
inline double reduce_field(int m, std::span<const double> per_spin, std::span<const int> sector) {
  if (static_cast<int>(per_spin.size()) != m || static_cast<int>(sector.size()) != m - 1) {
    throw ShapeMismatch("reduce_field: need M frequencies and M-1 sector signs");
  }
  double coeff = per_spin[0];
  int parity = 1;
  for (int j = 2; j <= m; ++j) {
    parity *= sector[j - 2];
    coeff += parity * per_spin[j - 1];
  }
  return coeff;
}

/// Effective standard-star parameters of one sector.
inline EffectiveStarParams sector_effective_model(const ModelSpec& spec, const SectorLabel& sector) {
  spec.validate();
  sector.check_shape(spec.layout);
  EffectiveStarParams p;
  p.omega_a = spec.omega_a;
  p.sector = sector;
  for (int k = 0; k < spec.layout.chain_count(); ++k) {
    const int m = spec.layout.chain_size(k);
    double parity_product = 1.0;
    if (spec.gamma_y[k] != 0.0 || spec.gamma_z[k] != 0.0) {
      const auto report = reduce_chain_axis(Axis::Z, m, k);
      for (int pos : report.parity_sites) parity_product *= sector.sign_at(k, pos);
    }
    const int y_sign = (spec.gamma_y[k] != 0.0) ? reduce_chain_axis(Axis::Y, m, k).sign : 1;
    p.g_x.push_back(spec.gamma_x[k]);
    p.g_y.push_back(y_sign * parity_product * spec.gamma_y[k]);
    p.g_z.push_back(parity_product * spec.gamma_z[k]);
    const std::vector<double> per_spin(m, spec.chain_field[k]);
    p.f.push_back(reduce_field(m, per_spin, sector.signs[k]));
  }
  return p;
}

/// All sectors in deterministic lexicographic order: chains in order,
/// positions ascending within a chain, +1 before -1 (the all-plus sector
/// comes first).
inline std::vector<SectorLabel> enumerate_sectors(const SpinLayout& layout,
                                                  std::uint64_t cap = kDefaultSectorCap) {
  int bits = 0;
  for (int k = 0; k < layout.chain_count(); ++k) bits += layout.chain_size(k) - 1;
  if (bits >= 63 || (std::uint64_t{1} << bits) > cap) {
    throw SectorCountTooLarge("enumerate_sectors: 2^" + std::to_string(bits) +
                              " sectors exceeds the cap");
  }
  const std::uint64_t count = std::uint64_t{1} << bits;
  std::vector<SectorLabel> out;
  out.reserve(count);
  for (std::uint64_t code = 0; code < count; ++code) {
    SectorLabel label;
    label.signs.reserve(layout.chain_count());
    int bit = bits;
    for (int k = 0; k < layout.chain_count(); ++k) {
      std::vector<int> chain_signs;
      chain_signs.reserve(layout.chain_size(k) - 1);
      for (int j = 2; j <= layout.chain_size(k); ++j) {
        --bit;
        chain_signs.push_back((code >> bit) & 1u ? -1 : 1);
      }
      label.signs.push_back(std::move(chain_signs));
    }
    out.push_back(std::move(label));
  }
  return out;
}

/// Global basis index of the product state |s_a> (x)_k |c_k>^(x M_k),
/// where eff_index packs (s_a c_1 ... c_N) as an (N+1)-bit integer with
/// the ancilla most significant and bit 0 meaning spin-up / |+>.
inline std::uint64_t embed_effective_index(const SpinLayout& layout, std::uint64_t eff_index) {
  const int n = layout.chain_count();
  const int s = layout.site_count();
  std::uint64_t g = 0;
  if ((eff_index >> n) & 1u) g |= std::uint64_t{1} << (s - 1);  // ancilla
  for (int k = 0; k < n; ++k) {
    if ((eff_index >> (n - 1 - k)) & 1u) {
      for (int j = 1; j <= layout.chain_size(k); ++j) {
        g |= std::uint64_t{1} << (s - 1 - layout.site(k, j));
      }
    }
  }
  return g;
}

/// Global basis indices of the 2^(N+1)-dimensional invariant subspace,
/// ordered by the effective integer.
inline std::vector<std::uint64_t> invariant_subspace_indices(const SpinLayout& layout) {
  const std::uint64_t dim = std::uint64_t{1} << (layout.chain_count() + 1);
  std::vector<std::uint64_t> out;
  out.reserve(dim);
  for (std::uint64_t e = 0; e < dim; ++e) out.push_back(embed_effective_index(layout, e));
  return out;
}

/// The same basis as full state vectors.
inline std::vector<StateVector> invariant_subspace_basis(const SpinLayout& layout) {
  std::vector<StateVector> basis;
  for (std::uint64_t g : invariant_subspace_indices(layout)) {
    basis.push_back(StateVector::basis_state(layout.site_count(), g));
  }
  return basis;
}

/// Matrix elements <b_i|H|b_j> of a string sum over the invariant
/// subspace basis, computed without materializing H.
inline DenseOperator restrict_to_invariant_subspace(const PauliSum& h, const SpinLayout& layout) {
  const auto indices = invariant_subspace_indices(layout);
  const int s = layout.site_count();
  const auto dim = static_cast<Eigen::Index>(indices.size());
  DenseOperator out = DenseOperator::Zero(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    const StateVector column = apply_sum(h, StateVector::basis_state(s, indices[j]));
    for (Eigen::Index i = 0; i < dim; ++i) out(i, j) = column[indices[i]];
  }
  return out;
}

/// Conjugates the full chain-star Hamiltonian by every chain's cascade.
inline PauliSum transform_chain_star(const ModelSpec& spec) {
  const auto steps = full_transform(spec.layout);
  return conjugate(build_chain_star(spec), steps);
}

/// Replaces the frozen Z factors of a transformed Hamiltonian with the
/// sector's signs and renames surviving sites to the (N+1)-qubit
/// effective register (ancilla = 0, chain k first site = k+1). Throws if
/// a term carries a non-Z factor on a frozen site, i.e. if the input is
/// not block-diagonal.
inline PauliSum freeze_sector(const PauliSum& transformed, const SpinLayout& layout,
                              const SectorLabel& sector) {
  sector.check_shape(layout);
  const int s = layout.site_count();
  // site -> (effective site, or -1 if frozen), and frozen-site sign
  std::vector<int> eff_site(s, -1);
  std::vector<int> frozen_sign(s, 0);
  eff_site[SpinLayout::kAncillaSite] = 0;
  for (int k = 0; k < layout.chain_count(); ++k) {
    eff_site[layout.site(k, 1)] = k + 1;
    for (int j = 2; j <= layout.chain_size(k); ++j) {
      frozen_sign[layout.site(k, j)] = sector.sign_at(k, j);
    }
  }
  PauliSum out;
  for (const auto& term : transformed) {
    Complex coeff = term.coefficient();
    std::vector<PauliFactor> factors;
    for (const auto& f : term.factors()) {
      if (eff_site[f.site] >= 0) {
        factors.push_back({eff_site[f.site], f.axis});
      } else if (f.axis == Axis::Z) {
        coeff *= static_cast<double>(frozen_sign[f.site]);
      } else {
        throw ShapeMismatch("freeze_sector: non-Z factor on a frozen site");
      }
    }
    out.emplace_back(coeff, std::move(factors));
  }
  return collect(out, 0.0);
}

}  // namespace chainstar
