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
#include <bit>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chainstar/errors.hpp"

namespace chainstar {

using Complex = std::complex<double>;
using DenseOperator = Eigen::MatrixXcd;

/// Sites beyond this count refuse dense materialization by default
/// (2^12 complex-double matrices are ~256 MB; larger is a misuse).
inline constexpr int kDefaultDenseSiteLimit = 12;

enum class Axis : std::uint8_t { X = 0, Y = 1, Z = 2 };

inline char axis_name(Axis a) { return a == Axis::X ? 'X' : (a == Axis::Y ? 'Y' : 'Z'); }

struct PauliFactor {
  int site;
  Axis axis;
  friend bool operator==(const PauliFactor&, const PauliFactor&) = default;
};

/// A complex-weighted tensor product of single-site Pauli operators.
///
/// Factors are stored sorted by site index with distinct sites (canonical
/// form); the empty factor list is the identity. Global bit convention:
/// site 0 is the most significant bit of a basis index, and bit 0 encodes
/// the spin-up state (sigma^z eigenvalue +1).
class PauliString {
 public:
  PauliString() = default;

  explicit PauliString(Complex coefficient) : coefficient_(coefficient) {}

  PauliString(Complex coefficient, std::vector<PauliFactor> factors)
      : coefficient_(coefficient), factors_(std::move(factors)) {
    std::sort(factors_.begin(), factors_.end(),
              [](const PauliFactor& a, const PauliFactor& b) { return a.site < b.site; });
    for (std::size_t i = 0; i + 1 < factors_.size(); ++i) {
      if (factors_[i].site == factors_[i + 1].site) {
        throw Error("PauliString: duplicate site " + std::to_string(factors_[i].site));
      }
    }
    if (!factors_.empty() && factors_.front().site < 0) {
      throw SiteOutOfRange("PauliString: negative site index");
    }
  }

  static PauliString single(Complex coefficient, int site, Axis axis) {
    return PauliString(coefficient, {{site, axis}});
  }

  const Complex& coefficient() const { return coefficient_; }
  const std::vector<PauliFactor>& factors() const { return factors_; }
  bool is_identity_string() const { return factors_.empty(); }
  std::size_t weight() const { return factors_.size(); }

  int max_site() const { return factors_.empty() ? -1 : factors_.back().site; }

  PauliString scaled(Complex s) const {
    PauliString out = *this;
    out.coefficient_ *= s;
    return out;
  }

  /// Tensor products of Paulis are Hermitian, so only the coefficient conjugates.
  PauliString adjoint() const {
    PauliString out = *this;
    out.coefficient_ = std::conj(coefficient_);
    return out;
  }

  bool same_factors(const PauliString& other) const { return factors_ == other.factors_; }

  /// Syntactic commutation test: two Pauli strings commute iff they
  /// disagree on an even number of shared sites.
  bool commutes_with(const PauliString& other) const {
    std::size_t i = 0, j = 0, clashes = 0;
    while (i < factors_.size() && j < other.factors_.size()) {
      if (factors_[i].site < other.factors_[j].site) {
        ++i;
      } else if (factors_[i].site > other.factors_[j].site) {
        ++j;
      } else {
        if (factors_[i].axis != other.factors_[j].axis) ++clashes;
        ++i;
        ++j;
      }
    }
    return clashes % 2 == 0;
  }

  /// Operator product with eager coefficient folding; the result is again
  /// a single canonical string.
  friend PauliString operator*(const PauliString& a, const PauliString& b) {
    PauliString out;
    out.coefficient_ = a.coefficient_ * b.coefficient_;
    out.factors_.reserve(a.factors_.size() + b.factors_.size());
    std::size_t i = 0, j = 0;
    while (i < a.factors_.size() || j < b.factors_.size()) {
      if (j == b.factors_.size() ||
          (i < a.factors_.size() && a.factors_[i].site < b.factors_[j].site)) {
        out.factors_.push_back(a.factors_[i++]);
      } else if (i == a.factors_.size() || b.factors_[j].site < a.factors_[i].site) {
        out.factors_.push_back(b.factors_[j++]);
      } else {
        const PauliFactor& fa = a.factors_[i++];
        const PauliFactor& fb = b.factors_[j++];
        if (fa.axis == fb.axis) continue;  // sigma^2 = 1
        out.factors_.push_back({fa.site, product_axis(fa.axis, fb.axis)});
        out.coefficient_ *= product_phase(fa.axis, fb.axis);
      }
    }
    return out;
  }

  std::string str() const {
    std::string s = "(" + std::to_string(coefficient_.real()) + (coefficient_.imag() < 0 ? "" : "+") +
                    std::to_string(coefficient_.imag()) + "i)";
    for (const auto& f : factors_) s += " " + std::string(1, axis_name(f.axis)) + std::to_string(f.site);
    return s;
  }

 private:
  static Axis product_axis(Axis a, Axis b) {
    // The axis not equal to either operand.
    return static_cast<Axis>(3 - static_cast<int>(a) - static_cast<int>(b));
  }
  static Complex product_phase(Axis a, Axis b) {
    // XY = iZ, YZ = iX, ZX = iY; reversed order conjugates the phase.
    const int d = (static_cast<int>(b) - static_cast<int>(a) + 3) % 3;
    return d == 1 ? Complex(0, 1) : Complex(0, -1);
  }
  Complex coefficient_{1.0, 0.0};
  std::vector<PauliFactor> factors_;
};

/// A Hamiltonian (or any operator) as a list of Pauli-string terms.
using PauliSum = std::vector<PauliString>;

inline int max_site(const PauliSum& terms) {
  int m = -1;
  for (const auto& t : terms) m = std::max(m, t.max_site());
  return m;
}

/// Merges terms with identical factor lists and drops terms whose
/// coefficient magnitude is at most drop_tol. Output order is canonical
/// (sorted by factor list), so equal sums compare equal element-wise.
inline PauliSum collect(const PauliSum& terms, double drop_tol = 0.0) {
  std::map<std::vector<std::pair<int, int>>, PauliString> merged;
  for (const auto& t : terms) {
    std::vector<std::pair<int, int>> key;
    key.reserve(t.factors().size());
    for (const auto& f : t.factors()) key.emplace_back(f.site, static_cast<int>(f.axis));
    auto it = merged.find(key);
    if (it == merged.end()) {
      merged.emplace(std::move(key), t);
    } else {
      it->second = PauliString(it->second.coefficient() + t.coefficient(), it->second.factors());
    }
  }
  PauliSum out;
  out.reserve(merged.size());
  for (auto& [key, term] : merged) {
    if (std::abs(term.coefficient()) > drop_tol) out.push_back(std::move(term));
  }
  return out;
}

inline PauliSum multiply(const PauliSum& a, const PauliSum& b, double drop_tol = 0.0) {
  PauliSum out;
  out.reserve(a.size() * b.size());
  for (const auto& ta : a)
    for (const auto& tb : b) out.push_back(ta * tb);
  return collect(out, drop_tol);
}

inline PauliSum adjoint(const PauliSum& a) {
  PauliSum out;
  out.reserve(a.size());
  for (const auto& t : a) out.push_back(PauliString(std::conj(t.coefficient()), t.factors()));
  return out;
}

inline bool commutes(const PauliString& a, const PauliSum& h) {
  // Exact commutator in string form. When a pair of strings commutes the two
  // products are bitwise-identical doubles, so the cancellation is exact and
  // no tolerance is needed.
  PauliSum comm;
  for (const auto& t : h) {
    comm.push_back(a * t);
    comm.push_back((t * a).scaled(-1.0));
  }
  return collect(comm, 0.0).empty();
}

namespace detail {

struct StringMasks {
  std::uint64_t flip = 0;    // X and Y factors
  std::uint64_t phase = 0;   // Y and Z factors
  Complex base{1.0, 0.0};    // coefficient times i^(#Y)
};

inline StringMasks make_masks(const PauliString& ps, int site_count) {
  if (ps.max_site() >= site_count) {
    throw SiteOutOfRange("Pauli factor on site " + std::to_string(ps.max_site()) +
                         " exceeds system of " + std::to_string(site_count) + " sites");
  }
  static const Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  StringMasks m;
  int y_count = 0;
  for (const auto& f : ps.factors()) {
    const std::uint64_t bit = std::uint64_t{1} << (site_count - 1 - f.site);
    if (f.axis != Axis::Z) m.flip |= bit;
    if (f.axis != Axis::X) m.phase |= bit;
    if (f.axis == Axis::Y) ++y_count;
  }
  m.base = ps.coefficient() * kIPow[y_count & 3];
  return m;
}

}  // namespace detail

/// Dense sum of Pauli strings with identity filled on untouched sites.
/// Site 0 is the most significant bit of the basis index.
inline DenseOperator materialize(std::span<const PauliString> strings, int site_count,
                                 int dense_limit = kDefaultDenseSiteLimit) {
  if (site_count < 1) throw Error("materialize: need at least one site");
  if (site_count > dense_limit) {
    throw DimensionTooLarge("materialize: " + std::to_string(site_count) +
                            " sites exceeds the dense limit of " + std::to_string(dense_limit));
  }
  const std::uint64_t dim = std::uint64_t{1} << site_count;
  DenseOperator out = DenseOperator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& ps : strings) {
    const auto m = detail::make_masks(ps, site_count);
    for (std::uint64_t b = 0; b < dim; ++b) {
      const Complex v = std::popcount(b & m.phase) % 2 ? -m.base : m.base;
      out(static_cast<Eigen::Index>(b ^ m.flip), static_cast<Eigen::Index>(b)) += v;
    }
  }
  return out;
}

inline DenseOperator materialize(const PauliString& ps, int site_count,
                                 int dense_limit = kDefaultDenseSiteLimit) {
  return materialize(std::span<const PauliString>(&ps, 1), site_count, dense_limit);
}

inline DenseOperator materialize(const PauliSum& sum, int site_count,
                                 int dense_limit = kDefaultDenseSiteLimit) {
  return materialize(std::span<const PauliString>(sum.data(), sum.size()), site_count, dense_limit);
}

}  // namespace chainstar
