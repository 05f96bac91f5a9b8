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
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chainstar/dynamics.hpp"
#include "chainstar/errors.hpp"
#include "chainstar/layout.hpp"
#include "chainstar/state.hpp"

namespace chainstar {

/// Wootters concurrence of a two-qubit density matrix. The eigenvalues of
/// rho rho~ are taken from the Hermitian similarity form
/// sqrt(rho) rho~ sqrt(rho), which keeps them real by construction;
/// negatives below 1e-10 are truncated.
inline double concurrence(const DensityMatrix& rho) {
  if (rho.qubit_count() != 2) throw ShapeMismatch("concurrence: need a two-qubit state");
  rho.validate();
  const Eigen::MatrixXcd& r = rho.entries();

  Eigen::Matrix4cd yy = Eigen::Matrix4cd::Zero();
  yy(0, 3) = -1;
  yy(1, 2) = 1;
  yy(2, 1) = 1;
  yy(3, 0) = -1;
  const Eigen::MatrixXcd tilde = yy * r.conjugate() * yy;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es_rho(r);
  Eigen::Matrix4cd sqrt_rho = Eigen::Matrix4cd::Zero();
  for (int i = 0; i < 4; ++i) {
    const double ev = std::max(0.0, es_rho.eigenvalues()(i));
    sqrt_rho += std::sqrt(ev) * es_rho.eigenvectors().col(i) * es_rho.eigenvectors().col(i).adjoint();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sqrt_rho * tilde * sqrt_rho);
  double lambdas[4];
  for (int i = 0; i < 4; ++i) {
    double ev = es.eigenvalues()(i);
    if (ev < 0.0) {
      if (ev < -1e-10) throw NotAState("concurrence: spectrum of rho rho~ dips below -1e-10");
      ev = 0.0;
    }
    lambdas[i] = std::sqrt(ev);
  }
  std::sort(lambdas, lambdas + 4, std::greater<double>());
  const double raw = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
  double c = std::max(0.0, raw);
  if (c > 1.0 + 1e-9) throw NotAState("concurrence: value exceeds 1 beyond tolerance");
  return std::min(c, 1.0);
}

/// Concurrence of two chains along a trace, with its closed-form twin.
struct ConcurrenceReport {
  std::string subsystem;
  std::vector<double> times;
  std::vector<double> values;        // partial-trace route
  std::vector<double> closed_form;   // 2 |beta_i| |beta_j|
  double max_path_deviation = 0.0;
};

/// Effective (N+1)-qubit state assembled from trace amplitudes at sample i.
inline StateVector effective_state_from_trace(const EvolutionTrace& trace, std::size_t i) {
  const int n = trace.chain_count();
  StateVector v = StateVector::zero(n + 1);
  const std::uint64_t e0 = (std::uint64_t{1} << n) - 1;
  v.amplitudes()(static_cast<Eigen::Index>(e0)) = trace.alpha.at(i);
  const std::uint64_t all = (std::uint64_t{1} << (n + 1)) - 1;
  for (int k = 0; k < n; ++k) {
    v.amplitudes()(static_cast<Eigen::Index>(all ^ (std::uint64_t{1} << (n - 1 - k)))) =
        trace.beta[i][k];
  }
  return v.normalize();
}

/// Concurrence between chains i and j (0-based) along a trace, computed
/// two ways that must agree within `agreement_tol`: the closed form
/// 2|beta_i||beta_j| and a partial trace of the effective register.
inline ConcurrenceReport chain_pair_concurrence(const EvolutionTrace& trace, int i, int j,
                                                double agreement_tol = 1e-9) {
  const int n = trace.chain_count();
  if (i == j) throw IndexOutOfRange("chain_pair_concurrence: chains must differ");
  if (i < 0 || j < 0 || i >= n || j >= n) {
    throw IndexOutOfRange("chain_pair_concurrence: chain index out of range");
  }
  ConcurrenceReport report;
  report.subsystem = "chains " + std::to_string(i) + "-" + std::to_string(j);
  report.times = trace.times;
  for (std::size_t s = 0; s < trace.size(); ++s) {
    const double closed = 2.0 * std::abs(trace.beta[s][i]) * std::abs(trace.beta[s][j]);
    const StateVector eff = effective_state_from_trace(trace, s);
    const double traced = concurrence(partial_trace(eff, {i + 1, j + 1}));
    report.values.push_back(traced);
    report.closed_form.push_back(closed);
    report.max_path_deviation = std::max(report.max_path_deviation, std::abs(traced - closed));
  }
  if (report.max_path_deviation > agreement_tol) {
    throw Error("chain_pair_concurrence: closed form and partial trace disagree by " +
                std::to_string(report.max_path_deviation));
  }
  return report;
}

/// Concurrence between two physical spins of a full-register state.
inline double spin_pair_concurrence(const StateVector& state, int site_a, int site_b,
                                    bool allow_ancilla = false) {
  if (site_a == site_b) throw SiteOutOfRange("spin_pair_concurrence: sites must differ");
  if (!allow_ancilla && (site_a == SpinLayout::kAncillaSite || site_b == SpinLayout::kAncillaSite)) {
    throw SiteOutOfRange("spin_pair_concurrence: ancilla not requested");
  }
  return concurrence(partial_trace(state, {site_a, site_b}));
}

struct PostselectionResult {
  double probability = 0.0;
  StateVector state;  // renormalized, same register
};

/// Projects onto the ancilla sigma^z eigenspace of the requested outcome
/// (+1 keeps ancilla-up components) and renormalizes.
inline PostselectionResult ghz_postselect(const StateVector& state, int ancilla_outcome) {
  if (ancilla_outcome != 1 && ancilla_outcome != -1) {
    throw Error("ghz_postselect: outcome must be +1 or -1");
  }
  const int s = state.site_count();
  const int keep_bit = ancilla_outcome == 1 ? 0 : 1;
  StateVector projected = StateVector::zero(s);
  double probability = 0.0;
  for (std::uint64_t b = 0; b < state.dimension(); ++b) {
    if (StateVector::bit_of(b, SpinLayout::kAncillaSite, s) != keep_bit) continue;
    const Complex amp = state[b];
    probability += std::norm(amp);
    projected.amplitudes()(static_cast<Eigen::Index>(b)) = amp;
  }
  if (probability < 1e-14) {
    throw ImpossibleOutcome("ghz_postselect: outcome has vanishing probability");
  }
  projected.amplitudes() /= std::sqrt(probability);
  return {probability, std::move(projected)};
}

/// GHZ target on the full two-chain register:
/// (|up>^M |down>^M + |down>^M |up>^M) / sqrt(2) with the ancilla down.
inline StateVector ghz_state_full(const SpinLayout& layout) {
  if (layout.chain_count() != 2) throw ShapeMismatch("ghz_state_full: exactly two chains");
  StateVector v = StateVector::zero(layout.site_count());
  const int n = 2;
  // effective bits (s_a c_1 c_2): ancilla down = 1, one chain up per branch
  const std::uint64_t branch_a = embed_effective_index(layout, 0b101);
  const std::uint64_t branch_b = embed_effective_index(layout, 0b110);
  v.amplitudes()(static_cast<Eigen::Index>(branch_a)) = 1.0 / std::numbers::sqrt2;
  v.amplitudes()(static_cast<Eigen::Index>(branch_b)) = 1.0 / std::numbers::sqrt2;
  (void)n;
  return v;
}

/// Joint distribution of the per-chain collective z components
/// sum_j sigma^z_{kj}; outcomes are listed with their total.
struct CollectiveZOutcome {
  std::vector<int> per_chain;
  int total = 0;
  double probability = 0.0;
};

inline std::vector<CollectiveZOutcome> collective_z_distribution(const StateVector& state,
                                                                 const SpinLayout& layout,
                                                                 double prob_floor = 1e-14) {
  std::map<std::vector<int>, double> dist;
  for (std::uint64_t b = 0; b < state.dimension(); ++b) {
    const double w = std::norm(state[b]);
    if (w == 0.0) continue;
    std::vector<int> outcome(layout.chain_count(), 0);
    for (int k = 0; k < layout.chain_count(); ++k) {
      int down = 0;
      for (int j = 1; j <= layout.chain_size(k); ++j) {
        down += StateVector::bit_of(b, layout.site(k, j), layout.site_count());
      }
      outcome[k] = layout.chain_size(k) - 2 * down;
    }
    dist[outcome] += w;
  }
  std::vector<CollectiveZOutcome> out;
  for (const auto& [per_chain, probability] : dist) {
    if (probability < prob_floor) continue;
    CollectiveZOutcome o;
    o.per_chain = per_chain;
    for (int v : per_chain) o.total += v;
    o.probability = probability;
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace chainstar
