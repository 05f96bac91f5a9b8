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

#include <numeric>
#include <string>
#include <vector>

#include "chainstar/errors.hpp"

namespace chainstar {

/// Star geometry: one ancilla (global site 0) plus N chains of M_k spins.
/// Chain k (0-based) at position j (1-based, 1..M_k) sits at global index
/// 1 + sum of earlier chain sizes + (j - 1).
class SpinLayout {
 public:
  static constexpr int kAncillaSite = 0;

  explicit SpinLayout(std::vector<int> chain_sizes) : chain_sizes_(std::move(chain_sizes)) {
    if (chain_sizes_.empty()) throw InvalidSpec("layout: need at least one chain");
    offsets_.reserve(chain_sizes_.size());
    int offset = 1;
    for (int m : chain_sizes_) {
      if (m < 1) throw InvalidSpec("layout: every chain needs at least one spin");
      offsets_.push_back(offset);
      offset += m;
    }
    site_count_ = offset;
  }

  int chain_count() const { return static_cast<int>(chain_sizes_.size()); }
  int chain_size(int chain) const { return chain_sizes_.at(check_chain(chain)); }
  const std::vector<int>& chain_sizes() const { return chain_sizes_; }
  int site_count() const { return site_count_; }

  /// Global site of position `pos` (1-based) in `chain` (0-based).
  int site(int chain, int pos) const {
    check_chain(chain);
    if (pos < 1 || pos > chain_sizes_[chain]) {
      throw IndexOutOfRange("layout: position " + std::to_string(pos) + " not in chain");
    }
    return offsets_[chain] + (pos - 1);
  }

  friend bool operator==(const SpinLayout& a, const SpinLayout& b) {
    return a.chain_sizes_ == b.chain_sizes_;
  }

 private:
  int check_chain(int chain) const {
    if (chain < 0 || chain >= chain_count()) {
      throw IndexOutOfRange("layout: chain " + std::to_string(chain) + " out of range");
    }
    return chain;
  }

  std::vector<int> chain_sizes_;
  std::vector<int> offsets_;
  int site_count_ = 0;
};

/// One +/-1 value per constant of motion: for chain k the tuple
/// (sigma_{k,2}, ..., sigma_{k,M_k}) of post-transformation sigma^z
/// eigenvalues on the non-first chain sites.
struct SectorLabel {
  std::vector<std::vector<int>> signs;  // [chain][position-2]

  static SectorLabel all_plus(const SpinLayout& layout) {
    SectorLabel s;
    s.signs.reserve(layout.chain_count());
    for (int k = 0; k < layout.chain_count(); ++k) {
      s.signs.emplace_back(layout.chain_size(k) - 1, 1);
    }
    return s;
  }

  void check_shape(const SpinLayout& layout) const {
    if (static_cast<int>(signs.size()) != layout.chain_count()) {
      throw ShapeMismatch("sector label: chain count mismatch");
    }
    for (int k = 0; k < layout.chain_count(); ++k) {
      if (static_cast<int>(signs[k].size()) != layout.chain_size(k) - 1) {
        throw ShapeMismatch("sector label: tuple length mismatch on chain " + std::to_string(k));
      }
      for (int v : signs[k]) {
        if (v != 1 && v != -1) throw ShapeMismatch("sector label: values must be +1 or -1");
      }
    }
  }

  /// Sign of chain k at 1-based chain position pos (pos >= 2).
  int sign_at(int chain, int pos) const { return signs.at(chain).at(pos - 2); }

  friend bool operator==(const SectorLabel&, const SectorLabel&) = default;
};

}  // namespace chainstar
