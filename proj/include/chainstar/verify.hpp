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

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "chainstar/errors.hpp"
#include "chainstar/model.hpp"
#include "chainstar/pauli.hpp"
#include "chainstar/reduction.hpp"
#include "chainstar/state.hpp"

namespace chainstar {

/// Dense cross-examination of the unitary-reduction claim on one model.
struct MappingReport {
  std::vector<EffectiveStarParams> per_sector;  // ordered like enumerate_sectors
  double spectral_max_deviation = 0.0;       // full spectrum vs union of sector spectra
  double block_diagonality_residual = 0.0;   // largest offending coefficient after transforming
  double restriction_max_deviation = 0.0;    // P H P vs the all-plus standard star
  double subspace_invariance_residual = 0.0; // max norm of (1-P) H acting on the subspace
  double freeze_vs_closed_form = 0.0;        // syntactic freeze route vs closed-form couplings

  bool pass(double tol = 1e-9) const {
    return spectral_max_deviation < tol && block_diagonality_residual < tol &&
           restriction_max_deviation < tol && subspace_invariance_residual < tol &&
           freeze_vs_closed_form < tol;
  }
};

namespace detail {

inline std::vector<double> sorted_eigenvalues(const DenseOperator& h) {
  Eigen::SelfAdjointEigenSolver<DenseOperator> es(h, Eigen::EigenvaluesOnly);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline double max_coefficient_deviation(const PauliSum& a, const PauliSum& b) {
  PauliSum diff = a;
  for (const auto& t : b) diff.push_back(t.scaled(-1.0));
  double dev = 0.0;
  for (const auto& t : collect(diff, 0.0)) dev = std::max(dev, std::abs(t.coefficient()));
  return dev;
}

}  // namespace detail

/// Runs every dense check of the reduction on one spec. Optional
/// per-spin field frequencies (one vector of length M_k per chain) are
/// added on top of the spec's uniform chain fields, exercising the
/// general field reduction.
inline MappingReport verify_mapping(const ModelSpec& spec,
                                    const std::vector<std::vector<double>>& per_spin_fields = {},
                                    int dense_limit = kDefaultDenseSiteLimit,
                                    std::uint64_t sector_cap = kDefaultSectorCap) {
  spec.validate();
  const SpinLayout& layout = spec.layout;
  const int s = layout.site_count();
  const int n = layout.chain_count();
  if (s > dense_limit) throw DimensionTooLarge("verify_mapping: spec exceeds the dense limit");
  if (!per_spin_fields.empty()) {
    if (static_cast<int>(per_spin_fields.size()) != n) {
      throw ShapeMismatch("verify_mapping: need one field vector per chain");
    }
    for (int k = 0; k < n; ++k) {
      if (static_cast<int>(per_spin_fields[k].size()) != layout.chain_size(k)) {
        throw ShapeMismatch("verify_mapping: field vector length must match the chain");
      }
    }
  }

  PauliSum h = build_chain_star(spec);
  if (!per_spin_fields.empty()) {
    for (int k = 0; k < n; ++k) {
      for (int j = 1; j <= layout.chain_size(k); ++j) {
        if (per_spin_fields[k][j - 1] == 0.0) continue;
        h.push_back(PauliString::single(per_spin_fields[k][j - 1], layout.site(k, j), Axis::Z));
      }
    }
  }

  MappingReport report;

  // Sector models: closed form, plus general per-spin field reduction.
  const auto sectors = enumerate_sectors(layout, sector_cap);
  for (const auto& sector : sectors) {
    EffectiveStarParams p = sector_effective_model(spec, sector);
    if (!per_spin_fields.empty()) {
      for (int k = 0; k < n; ++k) {
        p.f[k] += reduce_field(layout.chain_size(k), per_spin_fields[k], sector.signs[k]);
      }
    }
    report.per_sector.push_back(std::move(p));
  }

  // Spectral union.
  const std::vector<double> full_spectrum = detail::sorted_eigenvalues(materialize(h, s, dense_limit));
  std::vector<double> union_spectrum;
  union_spectrum.reserve(full_spectrum.size());
  for (const auto& p : report.per_sector) {
    const auto ev = detail::sorted_eigenvalues(materialize(build_standard_star(p), n + 1, dense_limit));
    union_spectrum.insert(union_spectrum.end(), ev.begin(), ev.end());
  }
  std::sort(union_spectrum.begin(), union_spectrum.end());
  if (union_spectrum.size() != full_spectrum.size()) {
    throw ShapeMismatch("verify_mapping: sector dimensions do not add up");
  }
  for (std::size_t i = 0; i < full_spectrum.size(); ++i) {
    report.spectral_max_deviation =
        std::max(report.spectral_max_deviation, std::abs(full_spectrum[i] - union_spectrum[i]));
  }

  // Block diagonality of the transformed Hamiltonian: every factor on a
  // non-first chain site must be a Z. Also compare the frozen sector
  // Hamiltonians against the closed-form couplings, term by term.
  const PauliSum transformed = conjugate(h, full_transform(layout));
  std::vector<bool> frozen(s, false);
  for (int k = 0; k < n; ++k) {
    for (int j = 2; j <= layout.chain_size(k); ++j) frozen[layout.site(k, j)] = true;
  }
  for (const auto& term : transformed) {
    for (const auto& f : term.factors()) {
      if (frozen[f.site] && f.axis != Axis::Z) {
        report.block_diagonality_residual =
            std::max(report.block_diagonality_residual, std::abs(term.coefficient()));
      }
    }
  }
  if (report.block_diagonality_residual == 0.0) {
    for (std::size_t i = 0; i < sectors.size(); ++i) {
      report.freeze_vs_closed_form = std::max(
          report.freeze_vs_closed_form,
          detail::max_coefficient_deviation(freeze_sector(transformed, layout, sectors[i]),
                                            build_standard_star(report.per_sector[i])));
    }
  }

  // Invariance of the product subspace and the restriction identity.
  const auto indices = invariant_subspace_indices(layout);
  const DenseOperator restricted = restrict_to_invariant_subspace(h, layout);
  for (std::size_t j = 0; j < indices.size(); ++j) {
    StateVector column = apply_sum(h, StateVector::basis_state(s, indices[j]));
    for (std::size_t i = 0; i < indices.size(); ++i) {
      column.amplitudes()(static_cast<Eigen::Index>(indices[i])) = 0.0;
    }
    report.subspace_invariance_residual =
        std::max(report.subspace_invariance_residual, column.norm());
  }
  const DenseOperator all_plus_star =
      materialize(build_standard_star(report.per_sector.front()), n + 1, dense_limit);
  report.restriction_max_deviation = (restricted - all_plus_star).cwiseAbs().maxCoeff();

  return report;
}

}  // namespace chainstar
