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

#include <bit>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "chainstar/errors.hpp"
#include "chainstar/pauli.hpp"

namespace chainstar {

inline constexpr int kDefaultKeepSiteLimit = 10;

/// Complex amplitude vector over the 2^S computational basis.
/// Bit convention matches materialize(): site 0 is the most significant
/// bit of the basis index, bit 0 encodes spin-up.
class StateVector {
 public:
  StateVector(int site_count, Eigen::VectorXcd amplitudes)
      : site_count_(site_count), amplitudes_(std::move(amplitudes)) {
    if (site_count_ < 1 || amplitudes_.size() != Eigen::Index{1} << site_count_) {
      throw Error("StateVector: amplitude length must be 2^site_count");
    }
  }

  static StateVector zero(int site_count) {
    return StateVector(site_count, Eigen::VectorXcd::Zero(Eigen::Index{1} << site_count));
  }

  static StateVector basis_state(int site_count, std::uint64_t basis_index) {
    StateVector v = zero(site_count);
    if (basis_index >= v.dimension()) throw IndexOutOfRange("basis index out of range");
    v.amplitudes_(static_cast<Eigen::Index>(basis_index)) = 1.0;
    return v;
  }

  int site_count() const { return site_count_; }
  std::uint64_t dimension() const { return std::uint64_t{1} << site_count_; }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  Eigen::VectorXcd& amplitudes() { return amplitudes_; }
  Complex operator[](std::uint64_t i) const { return amplitudes_(static_cast<Eigen::Index>(i)); }

  double norm() const { return amplitudes_.norm(); }

  Complex inner(const StateVector& other) const {
    if (other.site_count_ != site_count_) throw ShapeMismatch("inner: site counts differ");
    return amplitudes_.dot(other.amplitudes_);  // Eigen's dot conjugates *this
  }

  StateVector& normalize() {
    const double n = norm();
    if (n == 0.0) throw NotAState("normalize: zero vector");
    amplitudes_ /= n;
    return *this;
  }

  /// Bit of a given site in a basis index under the site-0-MSB convention.
  static int bit_of(std::uint64_t basis_index, int site, int site_count) {
    return static_cast<int>((basis_index >> (site_count - 1 - site)) & 1u);
  }

 private:
  int site_count_;
  Eigen::VectorXcd amplitudes_;
};

/// Matrix-free action of a Pauli string: a permutation of the basis with
/// per-amplitude phases, so one pass over the amplitudes suffices.
inline StateVector apply_string(const PauliString& ps, const StateVector& v) {
  const int s = v.site_count();
  const auto m = detail::make_masks(ps, s);
  const std::uint64_t dim = v.dimension();
  Eigen::VectorXcd out(static_cast<Eigen::Index>(dim));
  const Eigen::VectorXcd& in = v.amplitudes();
  for (std::uint64_t b = 0; b < dim; ++b) {
    const Complex phase = std::popcount(b & m.phase) % 2 ? -m.base : m.base;
    out(static_cast<Eigen::Index>(b ^ m.flip)) = phase * in(static_cast<Eigen::Index>(b));
  }
  return StateVector(s, std::move(out));
}

/// Sum of apply_string over a term list, accumulating in place.
inline StateVector apply_sum(const PauliSum& terms, const StateVector& v) {
  const int s = v.site_count();
  const std::uint64_t dim = v.dimension();
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
  const Eigen::VectorXcd& in = v.amplitudes();
  for (const auto& ps : terms) {
    const auto m = detail::make_masks(ps, s);
    for (std::uint64_t b = 0; b < dim; ++b) {
      const Complex phase = std::popcount(b & m.phase) % 2 ? -m.base : m.base;
      acc(static_cast<Eigen::Index>(b ^ m.flip)) += phase * in(static_cast<Eigen::Index>(b));
    }
  }
  return StateVector(s, std::move(acc));
}

inline Complex expectation(const PauliSum& terms, const StateVector& v) {
  return v.inner(apply_sum(terms, v));
}

/// Density matrix over a designated subset of sites, basis ordered by
/// ascending original site index (first kept site = most significant bit).
class DensityMatrix {
 public:
  DensityMatrix(std::vector<int> sites, Eigen::MatrixXcd entries)
      : sites_(std::move(sites)), entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() ||
        entries_.rows() != Eigen::Index{1} << sites_.size()) {
      throw ShapeMismatch("DensityMatrix: dimension must be 2^|sites|");
    }
  }

  const std::vector<int>& sites() const { return sites_; }
  const Eigen::MatrixXcd& entries() const { return entries_; }
  int qubit_count() const { return static_cast<int>(sites_.size()); }

  double trace_real() const { return entries_.trace().real(); }

  double purity() const { return (entries_ * entries_).trace().real(); }

  /// Checks Hermiticity, unit trace, and positivity of the spectrum.
  void validate(double tol = 1e-8) const {
    if ((entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() > tol) {
      throw NotAState("density matrix is not Hermitian");
    }
    if (std::abs(entries_.trace() - Complex(1.0, 0.0)) > tol) {
      throw NotAState("density matrix trace differs from 1");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(entries_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol) {
      throw NotAState("density matrix has a negative eigenvalue");
    }
  }

 private:
  std::vector<int> sites_;
  Eigen::MatrixXcd entries_;
};

/// Reduced density matrix over `keep`, summing out every other site.
inline DensityMatrix partial_trace(const StateVector& v, const std::set<int>& keep,
                                   int keep_limit = kDefaultKeepSiteLimit) {
  const int s = v.site_count();
  if (keep.empty()) throw Error("partial_trace: keep set must be nonempty");
  if (static_cast<int>(keep.size()) > keep_limit) {
    throw TooManySitesKept("partial_trace: keeping " + std::to_string(keep.size()) +
                           " sites exceeds the limit of " + std::to_string(keep_limit));
  }
  std::vector<int> kept(keep.begin(), keep.end());
  if (kept.front() < 0 || kept.back() >= s) throw SiteOutOfRange("partial_trace: site out of range");

  std::vector<std::uint64_t> kept_bits;   // global bit for each kept site, MSB-first
  for (int site : kept) kept_bits.push_back(std::uint64_t{1} << (s - 1 - site));
  std::vector<std::uint64_t> env_bits;
  for (int site = 0; site < s; ++site) {
    if (!keep.count(site)) env_bits.push_back(std::uint64_t{1} << (s - 1 - site));
  }

  const int k = static_cast<int>(kept.size());
  const std::uint64_t kdim = std::uint64_t{1} << k;
  const std::uint64_t edim = std::uint64_t{1} << env_bits.size();

  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(kdim),
                                                static_cast<Eigen::Index>(kdim));
  Eigen::VectorXcd block(static_cast<Eigen::Index>(kdim));
  for (std::uint64_t e = 0; e < edim; ++e) {
    std::uint64_t genv = 0;
    for (std::size_t j = 0; j < env_bits.size(); ++j) {
      if ((e >> (env_bits.size() - 1 - j)) & 1u) genv |= env_bits[j];
    }
    for (std::uint64_t i = 0; i < kdim; ++i) {
      std::uint64_t g = genv;
      for (int j = 0; j < k; ++j) {
        if ((i >> (k - 1 - j)) & 1u) g |= kept_bits[j];
      }
      block(static_cast<Eigen::Index>(i)) = v[g];
    }
    rho.noalias() += block * block.adjoint();
  }
  return DensityMatrix(std::move(kept), std::move(rho));
}

}  // namespace chainstar
