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
#include <complex>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chainstar/errors.hpp"
#include "chainstar/model.hpp"
#include "chainstar/pauli.hpp"
#include "chainstar/reduction.hpp"
#include "chainstar/state.hpp"

namespace chainstar {

enum class TraceSource { analytic, numeric };

inline std::string source_name(TraceSource s) {
  return s == TraceSource::analytic ? "analytic" : "numeric";
}

/// Amplitudes of the evolved state in the single-flip slice: alpha on
/// |up_a>|-...->, beta_k on |down_a>|-..+_k..->.
struct EvolutionTrace {
  std::vector<double> times;
  std::vector<Complex> alpha;
  std::vector<std::vector<Complex>> beta;  // [time][chain]
  TraceSource source = TraceSource::analytic;

  int chain_count() const { return times.empty() ? 0 : static_cast<int>(beta.front().size()); }
  std::size_t size() const { return times.size(); }

  double alpha_population(std::size_t i) const { return std::norm(alpha.at(i)); }
  double beta_population(std::size_t i, int k) const { return std::norm(beta.at(i).at(k)); }
  double beta_population_sum(std::size_t i) const {
    double s = 0;
    for (const auto& b : beta.at(i)) s += std::norm(b);
    return s;
  }

  /// |alpha|^2 + sum_k |beta_k|^2 = 1 at every sample; for numeric traces
  /// this doubles as a confinement check of the single-flip slice.
  void check_normalization(double tol = 1e-10) const {
    for (std::size_t i = 0; i < size(); ++i) {
      if (std::abs(alpha_population(i) + beta_population_sum(i) - 1.0) > tol) {
        throw Error("trace normalization violated at t = " + std::to_string(times[i]));
      }
    }
  }

  std::size_t index_of_time(double t, double rel_tol = 1e-9) const {
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (std::abs(times[i] - t) <= rel_tol * std::max(1.0, std::abs(t))) return i;
    }
    throw Error("trace does not sample t = " + std::to_string(t));
  }
};

/// Effective Rabi parameters of the XX scenario. `calibration` is the
/// constant c reconciling the model couplings with the closed-form
/// frequency: omega^2 = sum_k (c gamma_k)^2 + delta^2.
struct RabiParams {
  double omega = 0.0;
  double delta = 0.0;
  std::vector<double> gammas;
  double calibration = 1.0;

  static RabiParams make(std::vector<double> gammas, double delta, double calibration) {
    RabiParams p;
    p.gammas = std::move(gammas);
    p.delta = delta;
    p.calibration = calibration;
    double sq = delta * delta;
    for (double g : p.gammas) sq += (calibration * g) * (calibration * g);
    p.omega = std::sqrt(sq);
    return p;
  }

  /// Reads gammas from an XX spec and the detuning from its fields.
  static RabiParams from_spec(const ModelSpec& spec, double calibration) {
    spec.validate();
    if (spec.family != ModelFamily::XX) throw InvalidSpec("RabiParams: XX family required");
    return make(spec.gamma_x, detuning(spec), calibration);
  }

  void validate(double tol = 1e-12) const {
    double sq = delta * delta;
    for (double g : gammas) sq += (calibration * g) * (calibration * g);
    if (std::abs(omega * omega - sq) > tol * std::max(1.0, sq)) {
      throw Error("RabiParams: omega inconsistent with couplings and detuning");
    }
  }

  int chain_count() const { return static_cast<int>(gammas.size()); }
};

/// Closed-form slice amplitudes under U(t) = exp(-iHt):
///   alpha(t) = cos(omega t) + i (Delta/omega) sin(omega t),
///   beta_k(t) = -i (c gamma_k / omega) sin(omega t).
/// At omega_0 = 0 (Delta = -omega_a) this is cos - i (omega_a/omega) sin;
/// the quoted closed form carries the opposite phase convention, which the
/// dense oracle rules out for this propagator.
inline std::pair<Complex, std::vector<Complex>> xx_amplitudes(const RabiParams& p, double t) {
  p.validate();
  std::vector<Complex> beta(p.gammas.size(), Complex(0, 0));
  if (p.omega == 0.0) return {Complex(1, 0), beta};
  const double c = std::cos(p.omega * t);
  const double s = std::sin(p.omega * t);
  const Complex alpha(c, p.delta / p.omega * s);
  for (std::size_t k = 0; k < p.gammas.size(); ++k) {
    beta[k] = Complex(0, -p.calibration * p.gammas[k] / p.omega * s);
  }
  return {alpha, beta};
}

inline EvolutionTrace analytic_trace(const RabiParams& p, std::span<const double> times) {
  EvolutionTrace trace;
  trace.source = TraceSource::analytic;
  trace.times.assign(times.begin(), times.end());
  for (double t : times) {
    auto [a, b] = xx_amplitudes(p, t);
    trace.alpha.push_back(a);
    trace.beta.push_back(std::move(b));
  }
  trace.check_normalization();
  return trace;
}

/// Effective-register state of the XX evolution on N+1 sites, including
/// the uniform diagonal phase exp(-i (1-N) omega_0 t) that the rotating
/// frame of xx_amplitudes removes. With it the result matches exp(-iHt)
/// on the standard star exactly, not just in populations.
inline StateVector effective_state(const RabiParams& p, double omega_a, double t) {
  const int n = p.chain_count();
  auto [alpha, beta] = xx_amplitudes(p, t);
  const double omega0 = p.delta + omega_a;
  const Complex global = std::exp(Complex(0, -(1.0 - n) * omega0 * t));
  StateVector v = StateVector::zero(n + 1);
  const std::uint64_t e0 = (std::uint64_t{1} << n) - 1;  // ancilla up, every chain qubit down
  v.amplitudes()(static_cast<Eigen::Index>(e0)) = global * alpha;
  const std::uint64_t all = (std::uint64_t{1} << (n + 1)) - 1;
  for (int k = 0; k < n; ++k) {
    const std::uint64_t ek = all ^ (std::uint64_t{1} << (n - 1 - k));
    v.amplitudes()(static_cast<Eigen::Index>(ek)) = global * beta[k];
  }
  return v;
}

inline std::vector<double> make_time_grid(double t_max, int intervals) {
  if (intervals < 1 || t_max < 0) throw Error("make_time_grid: bad grid");
  std::vector<double> times(intervals + 1);
  for (int i = 0; i <= intervals; ++i) times[i] = t_max * i / intervals;
  return times;
}

// ---------------------------------------------------------------------------
// Dense propagation
// ---------------------------------------------------------------------------

/// exp(-iHt) through one Hermitian eigendecomposition; states at arbitrary
/// times are then a rotation of the eigenbasis coefficients.
class DensePropagator {
 public:
  DensePropagator(const PauliSum& h, int site_count, int dense_limit = kDefaultDenseSiteLimit)
      : site_count_(site_count) {
    const DenseOperator hm = materialize(h, site_count, dense_limit);
    Eigen::SelfAdjointEigenSolver<DenseOperator> es(hm);
    if (es.info() != Eigen::Success) throw Error("DensePropagator: eigendecomposition failed");
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
  }

  StateVector at(const StateVector& psi0, double t) const {
    Eigen::VectorXcd c0 = eigenvectors_.adjoint() * psi0.amplitudes();
    for (Eigen::Index i = 0; i < c0.size(); ++i) {
      c0(i) *= std::exp(Complex(0, -eigenvalues_(i) * t));
    }
    return StateVector(site_count_, eigenvectors_ * c0);
  }

  std::vector<StateVector> evolve(const StateVector& psi0, std::span<const double> times) const {
    const Eigen::VectorXcd c0 = eigenvectors_.adjoint() * psi0.amplitudes();
    std::vector<StateVector> out;
    out.reserve(times.size());
    Eigen::VectorXcd c(c0.size());
    for (double t : times) {
      for (Eigen::Index i = 0; i < c0.size(); ++i) {
        c(i) = c0(i) * std::exp(Complex(0, -eigenvalues_(i) * t));
      }
      out.emplace_back(site_count_, eigenvectors_ * c);
    }
    return out;
  }

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

 private:
  int site_count_;
  Eigen::VectorXd eigenvalues_;
  DenseOperator eigenvectors_;
};

inline std::vector<StateVector> evolve_dense(const PauliSum& h, const StateVector& psi0,
                                             std::span<const double> times,
                                             int dense_limit = kDefaultDenseSiteLimit) {
  return DensePropagator(h, psi0.site_count(), dense_limit).evolve(psi0, times);
}

// ---------------------------------------------------------------------------
// Matrix-free propagation (Lanczos)
// ---------------------------------------------------------------------------

struct KrylovOptions {
  int krylov_dim = 40;
  double tol = 1e-10;
  int max_splits = 48;  // recursion depth when a step must be subdivided
};

/// Krylov-subspace approximation of exp(-iH dt) acting on a vector. The
/// Hamiltonian is applied only through its Pauli strings, so the state
/// dimension is bounded by memory, not by dense materialization.
class MatrixFreePropagator {
 public:
  MatrixFreePropagator(const PauliSum& h, int site_count) : site_count_(site_count) {
    for (const auto& term : collect(h, 0.0)) {
      masks_.push_back(detail::make_masks(term, site_count));
    }
  }

  void apply(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const {
    out.setZero();
    const std::uint64_t dim = in.size();
    for (const auto& m : masks_) {
      for (std::uint64_t b = 0; b < dim; ++b) {
        const Complex phase = std::popcount(b & m.phase) % 2 ? -m.base : m.base;
        out(static_cast<Eigen::Index>(b ^ m.flip)) += phase * in(static_cast<Eigen::Index>(b));
      }
    }
  }

  /// Advances v <- exp(-iH dt) v. The Lanczos basis grows until the
  /// standard residual estimate beta_m |[exp(-i dt T)]_{m,1}| dt drops
  /// below opts.tol; if the configured dimension is not enough, the step
  /// is subdivided.
  void step(Eigen::VectorXcd& v, double dt, const KrylovOptions& opts, int depth = 0) const {
    if (dt == 0.0) return;
    if (opts.krylov_dim < 2) throw NoConvergence("krylov_dim must be at least 2");
    if (depth > opts.max_splits) {
      throw NoConvergence("Krylov step failed to reach the residual target");
    }
    const double norm0 = v.norm();
    if (norm0 == 0.0) throw NotAState("Krylov step on a zero vector");

    const Eigen::Index dim = v.size();
    const int m = static_cast<int>(std::min<Eigen::Index>(opts.krylov_dim, dim));
    Eigen::MatrixXcd basis(dim, m);
    Eigen::VectorXd alphas = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd betas = Eigen::VectorXd::Zero(m);  // betas[j] links j and j+1
    basis.col(0) = v / norm0;

    Eigen::VectorXcd w(dim);
    Eigen::VectorXcd small;
    int built = 0;
    bool converged = false;
    for (int j = 0; j < m && !converged; ++j) {
      apply(basis.col(j), w);
      if (j > 0) w -= betas(j - 1) * basis.col(j - 1);
      alphas(j) = basis.col(j).dot(w).real();
      w -= alphas(j) * basis.col(j);
      // One reorthogonalization pass keeps the basis usable for the
      // step sizes this propagator takes.
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).adjoint() * w);
      built = j + 1;
      const double b = w.norm();

      small = exp_tridiagonal(alphas, betas, built, dt);
      if (b < 1e-14 * std::max(1.0, alphas.cwiseAbs().maxCoeff())) {
        converged = true;  // invariant subspace found: the small problem is exact
        break;
      }
      const double residual = b * std::abs(small(built - 1)) * std::abs(dt);
      if (residual <= opts.tol) {
        converged = true;
        break;
      }
      if (j + 1 < m) {
        betas(j) = b;
        basis.col(j + 1) = w / b;
      }
    }

    if (!converged) {
      step(v, dt / 2, opts, depth + 1);
      step(v, dt / 2, opts, depth + 1);
      return;
    }
    v = norm0 * (basis.leftCols(built) * small);
  }

 private:
  /// First column of exp(-i dt T) for the leading k-by-k tridiagonal block.
  static Eigen::VectorXcd exp_tridiagonal(const Eigen::VectorXd& alphas,
                                          const Eigen::VectorXd& betas, int k, double dt) {
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(k, k);
    for (int j = 0; j < k; ++j) {
      tri(j, j) = alphas(j);
      if (j + 1 < k) tri(j, j + 1) = tri(j + 1, j) = betas(j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(k);
    for (int j = 0; j < k; ++j) {
      Complex acc(0, 0);
      for (int l = 0; l < k; ++l) {
        acc += es.eigenvectors()(j, l) * std::exp(Complex(0, -es.eigenvalues()(l) * dt)) *
               es.eigenvectors()(0, l);
      }
      out(j) = acc;
    }
    return out;
  }

  int site_count_;
  std::vector<detail::StringMasks> masks_;
};

inline std::vector<StateVector> evolve_matrix_free(const PauliSum& h, const StateVector& psi0,
                                                   std::span<const double> times,
                                                   const KrylovOptions& opts = {}) {
  MatrixFreePropagator prop(h, psi0.site_count());
  std::vector<StateVector> out;
  out.reserve(times.size());
  Eigen::VectorXcd v = psi0.amplitudes();
  double current = 0.0;
  for (double t : times) {
    if (t < current) throw Error("evolve_matrix_free: times must be nondecreasing");
    prop.step(v, t - current, opts);
    current = t;
    out.emplace_back(psi0.site_count(), v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chain-star propagation with slice extraction
// ---------------------------------------------------------------------------

struct PropagationOptions {
  int dense_limit = kDefaultDenseSiteLimit;
  KrylovOptions krylov{};
  bool keep_states = false;
  bool track_energy = true;
};

struct PropagationResult {
  EvolutionTrace trace;
  std::vector<StateVector> states;  // filled when keep_states
  double max_subspace_leakage = 0.0;  // norm outside the 2^(N+1) invariant subspace
  double max_slice_leakage = 0.0;     // norm outside the (N+1)-dim single-flip slice
  double max_energy_drift = 0.0;
  double max_norm_drift = 0.0;
};

/// Canonical initial state |up_a>|down>^(sum M_k) as a global basis index.
inline std::uint64_t initial_state_index(const SpinLayout& layout) {
  const std::uint64_t eff = (std::uint64_t{1} << layout.chain_count()) - 1;
  return embed_effective_index(layout, eff);
}

/// Propagates the full chain-star register from the canonical initial
/// state, dense when the register fits the dense limit and Lanczos
/// otherwise, and projects every sample onto the single-flip slice.
inline PropagationResult propagate_chain_star(const ModelSpec& spec,
                                              std::span<const double> times,
                                              const PropagationOptions& opts = {}) {
  spec.validate();
  const SpinLayout& layout = spec.layout;
  const int s = layout.site_count();
  const int n = layout.chain_count();
  const PauliSum h = build_chain_star(spec);
  const StateVector psi0 = StateVector::basis_state(s, initial_state_index(layout));

  std::vector<StateVector> states = (s <= opts.dense_limit)
                                        ? evolve_dense(h, psi0, times, opts.dense_limit)
                                        : evolve_matrix_free(h, psi0, times, opts.krylov);

  const std::uint64_t eff_e0 = (std::uint64_t{1} << n) - 1;
  std::vector<std::uint64_t> slice_indices{embed_effective_index(layout, eff_e0)};
  const std::uint64_t eff_all = (std::uint64_t{1} << (n + 1)) - 1;
  for (int k = 0; k < n; ++k) {
    slice_indices.push_back(
        embed_effective_index(layout, eff_all ^ (std::uint64_t{1} << (n - 1 - k))));
  }
  // Leakage is accumulated over the complement directly; subtracting two
  // near-equal norms would drown genuine 1e-10-level leakage in rounding.
  std::vector<std::uint8_t> in_subspace(std::uint64_t{1} << s, 0);
  std::vector<std::uint8_t> in_slice(std::uint64_t{1} << s, 0);
  for (std::uint64_t g : invariant_subspace_indices(layout)) in_subspace[g] = 1;
  for (std::uint64_t g : slice_indices) in_slice[g] = 1;

  PropagationResult result;
  result.trace.source = TraceSource::numeric;
  result.trace.times.assign(times.begin(), times.end());
  const double e0 = opts.track_energy && !times.empty()
                        ? expectation(h, states.front()).real()
                        : 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const StateVector& psi = states[i];
    const Complex alpha = psi[slice_indices[0]];
    std::vector<Complex> beta;
    beta.reserve(n);
    for (int k = 0; k < n; ++k) beta.push_back(psi[slice_indices[k + 1]]);
    result.trace.alpha.push_back(alpha);
    result.trace.beta.push_back(std::move(beta));

    double out_subspace = 0.0, out_slice = 0.0;
    for (std::uint64_t b = 0; b < psi.dimension(); ++b) {
      const double w = std::norm(psi[b]);
      if (!in_subspace[b]) out_subspace += w;
      if (!in_slice[b]) out_slice += w;
    }
    result.max_subspace_leakage = std::max(result.max_subspace_leakage, std::sqrt(out_subspace));
    result.max_slice_leakage = std::max(result.max_slice_leakage, std::sqrt(out_slice));
    result.max_norm_drift = std::max(result.max_norm_drift, std::abs(psi.norm() - 1.0));
    if (opts.track_energy) {
      result.max_energy_drift =
          std::max(result.max_energy_drift, std::abs(expectation(h, psi).real() - e0));
    }
  }
  if (opts.keep_states) result.states = std::move(states);
  return result;
}

/// State of the full chain-star register at one instant, without holding
/// a whole trace in memory.
inline StateVector chain_star_state_at(const ModelSpec& spec, double t,
                                       const PropagationOptions& opts = {}) {
  spec.validate();
  const int s = spec.layout.site_count();
  const PauliSum h = build_chain_star(spec);
  const StateVector psi0 = StateVector::basis_state(s, initial_state_index(spec.layout));
  const std::vector<double> times{t};
  if (s <= opts.dense_limit) return evolve_dense(h, psi0, times, opts.dense_limit).front();
  return evolve_matrix_free(h, psi0, times, opts.krylov).front();
}

// ---------------------------------------------------------------------------
// Convention calibration
// ---------------------------------------------------------------------------

/// Brute-force reconciliation of the closed-form amplitudes with this
/// toolkit's Hamiltonian normalization: picks the c in {1/2, 1, 2} whose
/// analytic populations track a dense reference run. The outcome is a
/// single constant, but it is measured rather than assumed.
inline double calibrate_convention(const ModelSpec& spec,
                                   int dense_limit = kDefaultDenseSiteLimit,
                                   double required_match = 1e-8) {
  spec.validate();
  if (spec.family != ModelFamily::XX) throw InvalidSpec("calibrate_convention: XX family required");
  if (spec.layout.site_count() > dense_limit) {
    throw DimensionTooLarge("calibrate_convention: spec exceeds the dense limit");
  }
  bool coupled = false;
  for (double g : spec.gamma_x) coupled |= (g != 0.0);
  if (!coupled) return 1.0;  // decoupled: populations constant, any c works

  const PauliSum h = build_chain_star(spec);
  const DensePropagator prop(h, spec.layout.site_count(), dense_limit);
  const StateVector psi0 =
      StateVector::basis_state(spec.layout.site_count(), initial_state_index(spec.layout));
  const int n = spec.layout.chain_count();
  const std::uint64_t eff_all = (std::uint64_t{1} << (n + 1)) - 1;

  double best_c = 0.0;
  double best_dev = std::numeric_limits<double>::infinity();
  for (double c : {0.5, 1.0, 2.0}) {
    const RabiParams p = RabiParams::from_spec(spec, c);
    const auto times = make_time_grid(2 * std::numbers::pi / p.omega, 200);
    double dev = 0.0;
    for (double t : times) {
      const StateVector psi = prop.at(psi0, t);
      auto [alpha, beta] = xx_amplitudes(p, t);
      dev = std::max(dev, std::abs(std::norm(psi[initial_state_index(spec.layout)]) -
                                   std::norm(alpha)));
      for (int k = 0; k < n; ++k) {
        const std::uint64_t g =
            embed_effective_index(spec.layout, eff_all ^ (std::uint64_t{1} << (n - 1 - k)));
        dev = std::max(dev, std::abs(std::norm(psi[g]) - std::norm(beta[k])));
      }
    }
    if (dev < best_dev) {
      best_dev = dev;
      best_c = c;
    }
  }
  if (best_dev > required_match) {
    throw NoConventionMatches("calibrate_convention: best candidate deviates by " +
                              std::to_string(best_dev));
  }
  return best_c;
}

// ---------------------------------------------------------------------------
// Target states and peaks
// ---------------------------------------------------------------------------

/// |down_a> (1/sqrt(N)) sum_k |-..+_k..-> on N+1 effective sites.
inline StateVector w_state(int n) {
  if (n < 1) throw Error("w_state: need at least one chain");
  StateVector v = StateVector::zero(n + 1);
  const std::uint64_t all = (std::uint64_t{1} << (n + 1)) - 1;
  const double amp = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < n; ++k) {
    v.amplitudes()(static_cast<Eigen::Index>(all ^ (std::uint64_t{1} << (n - 1 - k)))) = amp;
  }
  return v;
}

/// The same W state written on the full register: chain k fully up in the
/// k-th branch, everything else down.
inline StateVector w_state_full(const SpinLayout& layout) {
  const int n = layout.chain_count();
  StateVector v = StateVector::zero(layout.site_count());
  const std::uint64_t eff_all = (std::uint64_t{1} << (n + 1)) - 1;
  const double amp = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < n; ++k) {
    const std::uint64_t g =
        embed_effective_index(layout, eff_all ^ (std::uint64_t{1} << (n - 1 - k)));
    v.amplitudes()(static_cast<Eigen::Index>(g)) = amp;
  }
  return v;
}

struct WPeakResult {
  double t_star = 0.0;          // pi / (2 omega)
  double located_time = 0.0;    // numeric argmax of the transfer probability
  double fidelity = 0.0;        // |<W|psi(t_star)>|
  double subspace_leakage = 0.0;
  double slice_leakage = 0.0;
};

/// Certifies W-state generation on the full register. Requires the
/// resonant equal-coupling XX scenario with a sign-free chain mapping
/// ((M-1)/2 even per chain).
inline WPeakResult w_fidelity_peak(const ModelSpec& spec, double calibration,
                                   const PropagationOptions& opts = {}, int scan_intervals = 200) {
  spec.validate();
  if (spec.family != ModelFamily::XX) throw InvalidSpec("w_fidelity_peak: XX family required");
  for (int k = 1; k < spec.layout.chain_count(); ++k) {
    if (spec.gamma_x[k] != spec.gamma_x[0]) {
      throw InvalidSpec("w_fidelity_peak: couplings must be identical");
    }
  }
  for (int k = 0; k < spec.layout.chain_count(); ++k) {
    if ((spec.layout.chain_size(k) - 1) / 2 % 2 != 0) {
      throw InvalidSpec("w_fidelity_peak: (M-1)/2 must be even for a sign-free mapping");
    }
  }
  const RabiParams p = RabiParams::from_spec(spec, calibration);
  if (std::abs(p.delta) > 1e-12 * std::max(1.0, p.omega)) {
    throw NotResonant("w_fidelity_peak: detuning must vanish");
  }
  if (p.omega == 0.0) throw InvalidSpec("w_fidelity_peak: couplings must not vanish");

  WPeakResult result;
  result.t_star = std::numbers::pi / (2 * p.omega);

  auto times = make_time_grid(2 * std::numbers::pi / p.omega, scan_intervals);
  times.push_back(result.t_star);
  std::sort(times.begin(), times.end());
  PropagationOptions run_opts = opts;
  // Keeping every state of a 16-site scan would hold hundreds of MB, so the
  // matrix-free path re-propagates to the single peak time instead.
  run_opts.keep_states = spec.layout.site_count() <= opts.dense_limit;
  const PropagationResult run = propagate_chain_star(spec, times, run_opts);

  std::size_t best = 0;
  for (std::size_t i = 1; i < run.trace.size(); ++i) {
    if (run.trace.beta_population_sum(i) > run.trace.beta_population_sum(best)) best = i;
  }
  result.located_time = run.trace.times[best];

  const StateVector at_peak = run_opts.keep_states
                                  ? run.states[run.trace.index_of_time(result.t_star)]
                                  : chain_star_state_at(spec, result.t_star, opts);
  result.fidelity = std::abs(w_state_full(spec.layout).inner(at_peak));
  result.subspace_leakage = run.max_subspace_leakage;
  result.slice_leakage = run.max_slice_leakage;
  return result;
}

/// Analytic counterpart on the effective register.
inline std::pair<double, double> w_fidelity_peak_analytic(const RabiParams& p) {
  if (std::abs(p.delta) > 1e-12 * std::max(1.0, p.omega)) {
    throw NotResonant("w_fidelity_peak_analytic: detuning must vanish");
  }
  if (p.omega == 0.0) throw InvalidSpec("w_fidelity_peak_analytic: couplings must not vanish");
  const double t_star = std::numbers::pi / (2 * p.omega);
  auto [alpha, beta] = xx_amplitudes(p, t_star);
  Complex overlap(0, 0);
  const double amp = 1.0 / std::sqrt(static_cast<double>(p.chain_count()));
  for (const Complex& b : beta) overlap += amp * b;
  (void)alpha;
  return {t_star, std::abs(overlap)};
}

/// Overlap <psi(0)|psi(t)> read off a trace; the initial state is the
/// alpha, so this reduces to alpha(t) when alpha(0) = 1.
inline Complex overlap_with_initial(const EvolutionTrace& trace, double t) {
  const std::size_t i0 = trace.index_of_time(0.0);
  const std::size_t it = trace.index_of_time(t);
  Complex overlap = std::conj(trace.alpha[i0]) * trace.alpha[it];
  for (int k = 0; k < trace.chain_count(); ++k) {
    overlap += std::conj(trace.beta[i0][k]) * trace.beta[it][k];
  }
  return overlap;
}

/// |<psi(0)|psi(T)>| at the revival period T = 2 pi / omega.
inline double revival_check(const EvolutionTrace& trace, double omega) {
  if (omega <= 0.0) throw Error("revival_check: need a positive frequency");
  return std::abs(overlap_with_initial(trace, 2 * std::numbers::pi / omega));
}

// ---------------------------------------------------------------------------
// CSV export
// ---------------------------------------------------------------------------

inline std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Header: t,abs_alpha_sq,abs_beta_1_sq,...,abs_beta_N_sq,source
inline void write_trace_csv(const EvolutionTrace& trace, std::ostream& os) {
  os << "t,abs_alpha_sq";
  for (int k = 1; k <= trace.chain_count(); ++k) os << ",abs_beta_" << k << "_sq";
  os << ",source\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    os << format_g17(trace.times[i]) << ',' << format_g17(trace.alpha_population(i));
    for (int k = 0; k < trace.chain_count(); ++k) {
      os << ',' << format_g17(trace.beta_population(i, k));
    }
    os << ',' << source_name(trace.source) << '\n';
  }
}

}  // namespace chainstar
