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

#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "chainstar/dynamics.hpp"
#include "chainstar/experiments.hpp"
#include "test_oracles.hpp"

using namespace chainstar;

TEST_CASE("zero Hamiltonian leaves the state untouched") {
  const StateVector psi0 = StateVector::basis_state(3, 5);
  const PauliSum h{PauliString(0.0)};
  for (const auto& psi : evolve_dense(h, psi0, std::vector<double>{0.0, 0.7, 2.1})) {
    REQUIRE((psi.amplitudes() - psi0.amplitudes()).norm() < 1e-14);
  }
  for (const auto& psi : evolve_matrix_free(h, psi0, std::vector<double>{0.0, 0.7, 2.1})) {
    REQUIRE((psi.amplitudes() - psi0.amplitudes()).norm() < 1e-12);
  }
}

TEST_CASE("an eigenstate only acquires phase") {
  const PauliSum h{PauliString::single(1.7, 0, Axis::Z)};
  const StateVector up = StateVector::basis_state(1, 0);
  for (const auto& psi : evolve_dense(h, up, std::vector<double>{0.3, 1.1, 4.0})) {
    REQUIRE(std::abs(std::abs(psi[0]) - 1.0) < 1e-12);
    REQUIRE(std::abs(psi[1]) < 1e-14);
  }
  // Phase convention: exp(-i omega_a t) on the spin-up eigenstate.
  const StateVector at_t = evolve_dense(h, up, std::vector<double>{0.5}).front();
  REQUIRE(std::abs(at_t[0] - std::exp(Complex(0, -1.7 * 0.5))) < 1e-12);
}

TEST_CASE("dense propagation preserves norm") {
  std::mt19937 rng(47);
  PauliSum h;
  for (int i = 0; i < 5; ++i) h.push_back(oracle::random_string(5, rng, true));
  const StateVector psi0 = oracle::random_state(5, rng);
  for (const auto& psi : evolve_dense(h, psi0, make_time_grid(3.0, 20))) {
    REQUIRE(std::abs(psi.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("xx amplitudes at notable times") {
  // t = 0
  const RabiParams p9 = RabiParams::make(std::vector<double>(9, 1.0), 0.0, 2.0);
  auto [a0, b0] = xx_amplitudes(p9, 0.0);
  REQUIRE(a0 == Complex(1, 0));
  for (const auto& b : b0) REQUIRE(b == Complex(0, 0));

  // omega t = pi/2 at resonance: |alpha|^2 = 0, |beta_k|^2 = 1/9
  auto [a_peak, b_peak] = xx_amplitudes(p9, std::numbers::pi / (2 * p9.omega));
  REQUIRE(std::norm(a_peak) < 1e-30);
  for (const auto& b : b_peak) REQUIRE(std::abs(std::norm(b) - 1.0 / 9) < 1e-15);

  // detuning ratio 10: peak 1/109
  const double g = 2.0;  // calibrated coupling c*gamma with gamma = 1
  const RabiParams detuned = RabiParams::make(std::vector<double>(9, 1.0), 10.0 * g, 2.0);
  auto [a_det, b_det] = xx_amplitudes(detuned, std::numbers::pi / (2 * detuned.omega));
  REQUIRE(std::abs(std::norm(b_det.front()) - 1.0 / 109) < 1e-15);
  (void)a_det;

  RabiParams broken = p9;
  broken.omega = 1.0;
  REQUIRE_THROWS_AS(xx_amplitudes(broken, 0.1), Error);
}

TEST_CASE("the general detuned amplitude reduces to the bare-ancilla form at omega_0 = 0") {
  const double omega_a = 0.8;
  const RabiParams p = RabiParams::make({0.4, 0.7}, -omega_a, 2.0);
  for (double t : make_time_grid(4.0, 17)) {
    auto [alpha, beta] = xx_amplitudes(p, t);
    const Complex direct(std::cos(p.omega * t), -omega_a / p.omega * std::sin(p.omega * t));
    REQUIRE(std::abs(alpha - direct) < 1e-15);
    (void)beta;
  }
}

TEST_CASE("calibration returns one constant across specs") {
  std::mt19937 rng(53);
  std::uniform_real_distribution<double> u(0.2, 1.5);
  std::vector<double> constants;
  for (int trial = 0; trial < 3; ++trial) {
    const int chains = 1 + trial;
    ModelSpec spec(ModelFamily::XX, SpinLayout(std::vector<int>(chains, 1)));
    for (int k = 0; k < chains; ++k) spec.gamma_x[k] = spec.gamma_y[k] = u(rng);
    spec.omega_a = u(rng);
    constants.push_back(calibrate_convention(spec));
  }
  REQUIRE(constants == std::vector<double>{2.0, 2.0, 2.0});

  ModelSpec decoupled(ModelFamily::XX, SpinLayout({1, 1}));
  REQUIRE(calibrate_convention(decoupled) == 1.0);

  // A one-chain, five-spin instance exercises the genuine chain reduction.
  REQUIRE(calibrate_convention(uniform_xx_spec(1, 5, 0.6)) == 2.0);
}

TEST_CASE("analytic ansatz matches dense propagation of the full chain-star") {
  // Including nonzero ancilla and chain fields: the ansatz (with its
  // uniform diagonal phase) must track exp(-iHt) exactly.
  ModelSpec spec = uniform_xx_spec(2, 3, 0.45, 0.9);
  spec.chain_field = {0.25, 0.25};
  const double c = calibrate_convention(spec);
  REQUIRE(c == 2.0);
  const RabiParams p = RabiParams::from_spec(spec, c);

  const auto times = make_time_grid(2 * std::numbers::pi / p.omega, 60);
  PropagationOptions opts;
  opts.keep_states = true;
  const PropagationResult run = propagate_chain_star(spec, times, opts);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const StateVector ansatz = effective_state(p, spec.omega_a, times[i]);
    Complex overlap(0, 0);
    for (std::uint64_t e = 0; e < ansatz.dimension(); ++e) {
      overlap += std::conj(ansatz[e]) *
                 run.states[i][embed_effective_index(spec.layout, e)];
    }
    REQUIRE(std::abs(overlap - Complex(1, 0)) < 1e-10);
  }
}

TEST_CASE("matrix-free agrees with dense on an 11-site chain-star") {
  const ModelSpec spec = uniform_xx_spec(2, 5, 0.7, 0.5);
  const PauliSum h = build_chain_star(spec);
  const StateVector psi0 =
      StateVector::basis_state(spec.layout.site_count(), initial_state_index(spec.layout));
  const auto times = make_time_grid(2.5, 10);
  const auto dense = evolve_dense(h, psi0, times);
  const auto krylov = evolve_matrix_free(h, psi0, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    REQUIRE((dense[i].amplitudes() - krylov[i].amplitudes()).norm() < 1e-9);
    REQUIRE(std::abs(krylov[i].norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("numeric trace stays in the single-flip slice and conserves energy") {
  ModelSpec spec = uniform_xx_spec(3, 1, 0.8, 0.6);
  const auto times = make_time_grid(5.0, 50);
  const PropagationResult run = propagate_chain_star(spec, times);
  run.trace.check_normalization();
  REQUIRE(run.max_subspace_leakage < 1e-10);
  REQUIRE(run.max_slice_leakage < 1e-10);
  REQUIRE(run.max_energy_drift < 1e-9);
  REQUIRE(run.max_norm_drift < 1e-10);
}

TEST_CASE("w states") {
  const StateVector w1 = w_state(1);
  REQUIRE(w1[0b10] == Complex(1, 0));  // |down_a>|+>

  const StateVector w3 = w_state(3);
  int nonzero = 0;
  for (std::uint64_t i = 0; i < w3.dimension(); ++i) {
    if (std::abs(w3[i]) > 0) {
      ++nonzero;
      REQUIRE(std::abs(w3[i] - Complex(1 / std::sqrt(3.0), 0)) < 1e-15);
      REQUIRE(StateVector::bit_of(i, 0, 4) == 1);  // ancilla down
    }
  }
  REQUIRE(nonzero == 3);

  const StateVector w9 = w_state(9);
  REQUIRE(std::abs(w9.norm() - 1.0) < 1e-12);
  for (std::uint64_t i = 0; i < w9.dimension(); ++i) {
    if (std::abs(w9[i]) > 0) REQUIRE(std::abs(w9[i] - Complex(1.0 / 3, 0)) < 1e-15);
  }
}

TEST_CASE("w fidelity peaks at pi/(2 omega)") {
  const ModelSpec spec = uniform_xx_spec(2, 5, 0.8);
  const WPeakResult peak = w_fidelity_peak(spec, 2.0, {}, 100);
  REQUIRE(peak.fidelity > 1.0 - 1e-9);
  REQUIRE(std::abs(peak.located_time - peak.t_star) < 1.5 * (2 * std::numbers::pi / 100) /
                                                          RabiParams::from_spec(spec, 2.0).omega);
  REQUIRE(peak.subspace_leakage < 1e-10);

  // Analytic effective-register version for nine chains.
  const RabiParams p9 = RabiParams::make(std::vector<double>(9, 1.0), 0.0, 2.0);
  const auto [t_star, fidelity] = w_fidelity_peak_analytic(p9);
  REQUIRE(std::abs(fidelity - 1.0) < 1e-12);
  REQUIRE(t_star == std::numbers::pi / (2 * p9.omega));

  ModelSpec detuned = uniform_xx_spec(2, 5, 0.8, 0.5);
  REQUIRE_THROWS_AS(w_fidelity_peak(detuned, 2.0), NotResonant);

  ModelSpec sign_afflicted = uniform_xx_spec(2, 3, 0.8);
  REQUIRE_THROWS_AS(w_fidelity_peak(sign_afflicted, 2.0), InvalidSpec);
}

TEST_CASE("revival at T = 2 pi / omega") {
  const RabiParams p = RabiParams::make({0.5, 0.9, 0.3}, 0.4, 2.0);
  const double period = 2 * std::numbers::pi / p.omega;
  const EvolutionTrace analytic = analytic_trace(p, make_time_grid(period, 40));
  REQUIRE(revival_check(analytic, p.omega) == 1.0);

  // Half period at zero ancilla field: signed overlap -1.
  const RabiParams resonant = RabiParams::make({0.5, 0.9, 0.3}, 0.0, 2.0);
  const EvolutionTrace res_trace =
      analytic_trace(resonant, make_time_grid(2 * std::numbers::pi / resonant.omega, 40));
  const Complex half = overlap_with_initial(res_trace, std::numbers::pi / resonant.omega);
  REQUIRE(std::abs(half - Complex(-1, 0)) < 1e-12);

  // Numeric revival for the two-chain, five-spin model.
  const ModelSpec spec = uniform_xx_spec(2, 5, 0.7);
  const RabiParams pn = RabiParams::from_spec(spec, 2.0);
  const auto times = make_time_grid(2 * std::numbers::pi / pn.omega, 16);
  const PropagationResult run = propagate_chain_star(spec, times);
  REQUIRE(std::abs(revival_check(run.trace, pn.omega) - 1.0) < 1e-9);

  REQUIRE_THROWS_AS(overlap_with_initial(analytic, 1e6), Error);
}

TEST_CASE("peak transfer probability decreases with detuning") {
  const double g = 2.0 * 1.0;
  double previous = 2.0;
  for (double ratio : {0.0, 1.0, 5.0, 10.0}) {
    const RabiParams p = RabiParams::make(std::vector<double>(9, 1.0), ratio * g, 2.0);
    const EvolutionTrace trace =
        analytic_trace(p, make_time_grid(2 * std::numbers::pi / p.omega, 200));
    double peak = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      peak = std::max(peak, trace.beta_population_sum(i));
    }
    REQUIRE(peak < previous);
    previous = peak;
  }
}

TEST_CASE("trace CSV export shape") {
  const RabiParams p = RabiParams::make({0.5, 0.9}, 0.0, 2.0);
  const EvolutionTrace trace = analytic_trace(p, make_time_grid(1.0, 4));
  std::ostringstream os;
  write_trace_csv(trace, os);
  const std::string out = os.str();
  REQUIRE(out.rfind("t,abs_alpha_sq,abs_beta_1_sq,abs_beta_2_sq,source\n", 0) == 0);
  REQUIRE(std::count(out.begin(), out.end(), '\n') == 6);
  REQUIRE(out.find("analytic") != std::string::npos);
}

TEST_CASE("Krylov guards") {
  const PauliSum h{PauliString::single(1.0, 0, Axis::X)};
  const StateVector psi0 = StateVector::basis_state(1, 0);
  KrylovOptions opts;
  opts.krylov_dim = 1;
  REQUIRE_THROWS_AS(evolve_matrix_free(h, psi0, std::vector<double>{1.0}, opts), NoConvergence);
  REQUIRE_THROWS_AS(
      evolve_matrix_free(h, psi0, std::vector<double>{1.0, 0.5}, KrylovOptions{}), Error);
}
