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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chainstar/errors.hpp"
#include "chainstar/layout.hpp"
#include "chainstar/pauli.hpp"

namespace chainstar {

enum class ModelFamily { X, XY, XYZ, XX };

inline std::string family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::X:
      return "X";
    case ModelFamily::XY:
      return "XY";
    case ModelFamily::XYZ:
      return "XYZ";
    case ModelFamily::XX:
      return "XX";
  }
  throw Error("unknown family");
}

inline ModelFamily family_from_name(const std::string& name) {
  if (name == "X") return ModelFamily::X;
  if (name == "XY") return ModelFamily::XY;
  if (name == "XYZ") return ModelFamily::XYZ;
  if (name == "XX") return ModelFamily::XX;
  throw InvalidSpec("unknown model family '" + name + "'");
}

/// Axes carrying an ancilla-chain interaction term for a family.
inline std::vector<Axis> active_axes(ModelFamily f) {
  switch (f) {
    case ModelFamily::X:
      return {Axis::X};
    case ModelFamily::XY:
    case ModelFamily::XX:
      return {Axis::X, Axis::Y};
    case ModelFamily::XYZ:
      return {Axis::X, Axis::Y, Axis::Z};
  }
  throw Error("unknown family");
}

/// Declarative model description. All couplings and frequencies carry
/// angular-frequency units (hbar = 1 throughout).
struct ModelSpec {
  ModelFamily family = ModelFamily::XX;
  SpinLayout layout{{1}};
  double omega_a = 0.0;
  std::vector<double> gamma_x;     // per chain
  std::vector<double> gamma_y;     // per chain
  std::vector<double> gamma_z;     // per chain
  std::vector<double> chain_field; // per-spin frequency omega_0^k, per chain

  ModelSpec() { resize_to_layout(); }

  ModelSpec(ModelFamily f, SpinLayout l) : family(f), layout(std::move(l)) { resize_to_layout(); }

  void resize_to_layout() {
    const std::size_t n = static_cast<std::size_t>(layout.chain_count());
    gamma_x.resize(n, 0.0);
    gamma_y.resize(n, 0.0);
    gamma_z.resize(n, 0.0);
    chain_field.resize(n, 0.0);
  }

  double gamma(int chain, Axis axis) const {
    switch (axis) {
      case Axis::X:
        return gamma_x.at(chain);
      case Axis::Y:
        return gamma_y.at(chain);
      case Axis::Z:
        return gamma_z.at(chain);
    }
    throw Error("unknown axis");
  }

  void validate() const {
    const std::size_t n = static_cast<std::size_t>(layout.chain_count());
    if (gamma_x.size() != n || gamma_y.size() != n || gamma_z.size() != n ||
        chain_field.size() != n) {
      throw InvalidSpec("model: coupling arrays must have one entry per chain");
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (family == ModelFamily::XX &&
          (gamma_x[k] != gamma_y[k] || gamma_z[k] != 0.0)) {
        throw InvalidSpec("XX family requires gamma_x = gamma_y and gamma_z = 0");
      }
      if (family == ModelFamily::XY && gamma_z[k] != 0.0) {
        throw InvalidSpec("XY family requires gamma_z = 0");
      }
    }
    if (family != ModelFamily::X) {
      for (int k = 0; k < layout.chain_count(); ++k) {
        if (layout.chain_size(k) % 2 == 0) {
          throw InvalidSpec("family " + family_name(family) +
                            " requires an odd number of spins per chain (chain " +
                            std::to_string(k) + " has " + std::to_string(layout.chain_size(k)) +
                            ")");
        }
      }
    }
  }

  /// Parses the documented JSON shape; unknown keys are an error.
  static ModelSpec from_json(const nlohmann::json& j);
};

inline ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {"family",  "chain_sizes", "omega_a",
                                                 "gamma_x", "gamma_y",     "gamma_z",
                                                 "chain_field"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw InvalidSpec("model JSON: unknown key '" + key + "'");
    }
  }
  if (!j.contains("family") || !j.contains("chain_sizes")) {
    throw InvalidSpec("model JSON: 'family' and 'chain_sizes' are required");
  }
  ModelSpec spec(family_from_name(j.at("family").get<std::string>()),
                 SpinLayout(j.at("chain_sizes").get<std::vector<int>>()));
  spec.omega_a = j.value("omega_a", 0.0);
  const auto read_array = [&](const char* key, std::vector<double>& dst) {
    if (!j.contains(key)) return;
    dst = j.at(key).get<std::vector<double>>();
    if (dst.size() != static_cast<std::size_t>(spec.layout.chain_count())) {
      throw InvalidSpec(std::string("model JSON: '") + key + "' must have one entry per chain");
    }
  };
  read_array("gamma_x", spec.gamma_x);
  read_array("gamma_y", spec.gamma_y);
  read_array("gamma_z", spec.gamma_z);
  read_array("chain_field", spec.chain_field);
  if (spec.family == ModelFamily::XX && !j.contains("gamma_y")) spec.gamma_y = spec.gamma_x;
  spec.validate();
  return spec;
}

inline nlohmann::ordered_json to_json(const ModelSpec& spec) {
  return nlohmann::ordered_json{{"family", family_name(spec.family)},
                                {"chain_sizes", spec.layout.chain_sizes()},
                                {"omega_a", spec.omega_a},
                                {"gamma_x", spec.gamma_x},
                                {"gamma_y", spec.gamma_y},
                                {"gamma_z", spec.gamma_z},
                                {"chain_field", spec.chain_field}};
}

/// Parameters of the standard star a chain-star reduces to in one sector:
/// ancilla frequency, per-chain effective couplings and fields.
struct EffectiveStarParams {
  double omega_a = 0.0;
  std::vector<double> g_x;
  std::vector<double> g_y;
  std::vector<double> g_z;
  std::vector<double> f;
  SectorLabel sector;

  int chain_count() const { return static_cast<int>(g_x.size()); }

  void validate() const {
    const std::size_t n = g_x.size();
    if (g_y.size() != n || g_z.size() != n || f.size() != n) {
      throw ShapeMismatch("effective star: array lengths must match");
    }
  }
};

/// Terms of the chain-star Hamiltonian: the ancilla Zeeman term, one
/// N-wise string per chain and active axis, and per-spin chain fields.
inline PauliSum build_chain_star(const ModelSpec& spec) {
  spec.validate();
  PauliSum terms;
  terms.push_back(PauliString::single(spec.omega_a, SpinLayout::kAncillaSite, Axis::Z));
  for (int k = 0; k < spec.layout.chain_count(); ++k) {
    for (Axis axis : active_axes(spec.family)) {
      std::vector<PauliFactor> factors;
      factors.push_back({SpinLayout::kAncillaSite, axis});
      for (int j = 1; j <= spec.layout.chain_size(k); ++j) {
        factors.push_back({spec.layout.site(k, j), axis});
      }
      terms.emplace_back(spec.gamma(k, axis), std::move(factors));
    }
  }
  for (int k = 0; k < spec.layout.chain_count(); ++k) {
    if (spec.chain_field[k] == 0.0) continue;
    for (int j = 1; j <= spec.layout.chain_size(k); ++j) {
      terms.push_back(PauliString::single(spec.chain_field[k], spec.layout.site(k, j), Axis::Z));
    }
  }
  return terms;
}

/// Standard-star terms on an (N+1)-site register: ancilla = site 0,
/// chain qubit k (0-based) = site k+1. Zero couplings and fields are
/// omitted; the ancilla Zeeman term anchors the list.
inline PauliSum build_standard_star(const EffectiveStarParams& p) {
  p.validate();
  PauliSum terms;
  terms.push_back(PauliString::single(p.omega_a, 0, Axis::Z));
  for (int k = 0; k < p.chain_count(); ++k) {
    const int site = k + 1;
    const std::pair<Axis, double> couplings[] = {
        {Axis::X, p.g_x[k]}, {Axis::Y, p.g_y[k]}, {Axis::Z, p.g_z[k]}};
    for (const auto& [axis, g] : couplings) {
      if (g == 0.0) continue;
      terms.emplace_back(g, std::vector<PauliFactor>{{0, axis}, {site, axis}});
    }
    if (p.f[k] != 0.0) terms.push_back(PauliString::single(p.f[k], site, Axis::Z));
  }
  return terms;
}

/// Detuning Delta = omega_0 - omega_a of the uniform-field scenario where
/// every chain carries the same total field omega_0 = chain_field * M.
inline double detuning(const ModelSpec& spec) {
  double omega0 = spec.chain_field.at(0) * spec.layout.chain_size(0);
  for (int k = 1; k < spec.layout.chain_count(); ++k) {
    const double w = spec.chain_field[k] * spec.layout.chain_size(k);
    if (std::abs(w - omega0) > 1e-12 * std::max(1.0, std::abs(omega0))) {
      throw NonUniformFields("detuning: chain_field[k] * M_k differs between chains");
    }
  }
  return omega0 - spec.omega_a;
}

}  // namespace chainstar
