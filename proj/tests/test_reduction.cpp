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

#include "chainstar/experiments.hpp"
#include "chainstar/reduction.hpp"
#include "chainstar/verify.hpp"
#include "test_oracles.hpp"

using namespace chainstar;

namespace {

/// Dense conjugation oracle: T^dagger M T from Kronecker products.
Eigen::MatrixXcd conjugate_dense(const PauliSum& h, const PauliSum& t, int sites) {
  const Eigen::MatrixXcd tm = oracle::dense_sum(t, sites);
  return tm.adjoint() * oracle::dense_sum(h, sites) * tm;
}

PauliString whole_chain_string(const SpinLayout& layout, int chain, Axis axis, double coeff = 1.0) {
  std::vector<PauliFactor> factors;
  for (int j = 1; j <= layout.chain_size(chain); ++j) factors.push_back({layout.site(chain, j), axis});
  return PauliString(coeff, std::move(factors));
}

}  // namespace

TEST_CASE("pair transform materializes to diag(I, X) and is a Hermitian involution") {
  const PauliSum t = triplet_transform(0, 1);
  const DenseOperator tm = materialize(t, 2);

  DenseOperator expected = DenseOperator::Zero(4, 4);
  expected(0, 0) = expected(1, 1) = 1.0;  // control up: identity
  expected(2, 3) = expected(3, 2) = 1.0;  // control down: flip the target
  REQUIRE((tm - expected).cwiseAbs().maxCoeff() == 0.0);

  REQUIRE((tm - tm.adjoint()).cwiseAbs().maxCoeff() == 0.0);
  const DenseOperator sq = tm * tm;
  REQUIRE((sq - DenseOperator::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

  // The same statements in exact string form.
  const PauliSum square = multiply(t, t);
  REQUIRE(square.size() == 1);
  REQUIRE(square[0].is_identity_string());
  REQUIRE(square[0].coefficient() == Complex(1, 0));

  REQUIRE_THROWS_AS(triplet_transform(3, 3), Error);
}

TEST_CASE("pair transform conjugation matches the two-spin walkthrough") {
  const PauliSum t = triplet_transform(0, 1);

  const PauliSum xx = conjugate({PauliString(1.0, {{0, Axis::X}, {1, Axis::X}})}, t);
  REQUIRE(xx.size() == 1);
  REQUIRE(xx[0].factors() == std::vector<PauliFactor>{{0, Axis::X}});
  REQUIRE(xx[0].coefficient() == Complex(1, 0));

  const PauliSum yy = conjugate({PauliString(1.0, {{0, Axis::Y}, {1, Axis::Y}})}, t);
  REQUIRE(yy.size() == 1);
  REQUIRE(yy[0].coefficient() == Complex(-1, 0));
  REQUIRE(yy[0].factors() == std::vector<PauliFactor>{{0, Axis::X}, {1, Axis::Z}});

  const PauliSum zz = conjugate({PauliString(1.0, {{0, Axis::Z}, {1, Axis::Z}})}, t);
  REQUIRE(zz.size() == 1);
  REQUIRE(zz[0].factors() == std::vector<PauliFactor>{{1, Axis::Z}});
  REQUIRE(zz[0].coefficient() == Complex(1, 0));

  // Dense oracle for the same three conjugations.
  for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
    const PauliSum in{PauliString(1.0, {{0, axis}, {1, axis}})};
    REQUIRE((materialize(conjugate(in, t), 2) - conjugate_dense(in, t, 2)).cwiseAbs().maxCoeff() <
            1e-14);
  }
}

TEST_CASE("string conjugation matches the dense oracle on random inputs") {
  std::mt19937 rng(37);
  for (int trial = 0; trial < 25; ++trial) {
    const int sites = 3 + trial % 2;
    std::uniform_int_distribution<int> site_pick(0, sites - 1);
    int i = site_pick(rng), j = site_pick(rng);
    if (i == j) j = (j + 1) % sites;
    const PauliSum t = triplet_transform(i, j);
    const PauliSum h{oracle::random_string(sites, rng), oracle::random_string(sites, rng)};
    REQUIRE((materialize(conjugate(h, t), sites) - conjugate_dense(h, t, sites))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
  }
}

TEST_CASE("chain transform composition") {
  const SpinLayout two({2});
  const auto steps2 = chain_transform(two, 0);
  REQUIRE(steps2.size() == 1);
  REQUIRE(steps2[0].control == two.site(0, 1));
  REQUIRE(steps2[0].target == two.site(0, 2));

  const SpinLayout three({3});
  const auto steps3 = chain_transform(three, 0);
  REQUIRE(steps3.size() == 2);
  // T_23 acts first, then T_12.
  REQUIRE(steps3[0].control == three.site(0, 2));
  REQUIRE(steps3[0].target == three.site(0, 3));
  REQUIRE(steps3[1].control == three.site(0, 1));
  REQUIRE(steps3[1].target == three.site(0, 2));

  REQUIRE_THROWS_AS(chain_transform(SpinLayout({1}), 0), ChainTooShort);
}

TEST_CASE("five-spin chain reduction collapses the X string onto the first site") {
  const SpinLayout layout({5});
  const auto steps = chain_transform(layout, 0);
  const PauliSum reduced = conjugate({whole_chain_string(layout, 0, Axis::X)}, steps);
  REQUIRE(reduced.size() == 1);
  REQUIRE(reduced[0].factors() == std::vector<PauliFactor>{{layout.site(0, 1), Axis::X}});
  REQUIRE(reduced[0].coefficient() == Complex(1, 0));

  // Dense cross-check on 2^5 dimensions, transform by transform.
  Eigen::MatrixXcd dense = oracle::dense_string(whole_chain_string(layout, 0, Axis::X), 6);
  for (const auto& step : steps) {
    const Eigen::MatrixXcd tm = oracle::dense_sum(step.strings(), 6);
    dense = (tm.adjoint() * dense * tm).eval();
  }
  REQUIRE((materialize(reduced, 6) - dense).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("closed-form axis reduction matches the conjugation route") {
  for (int m : {1, 3, 5, 7, 9}) {
    for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
      const ReductionReport report = reduce_chain_axis(axis, m);
      REQUIRE(report.reduced_axis == axis);
      if (axis == Axis::X) {
        REQUIRE(report.sign == 1);
        REQUIRE(report.parity_sites.empty());
        continue;
      }
      if (m == 1) {
        REQUIRE(report.sign == 1);
        REQUIRE(report.parity_sites.empty());
        continue;
      }
      const SpinLayout layout({m});
      const PauliSum reduced =
          conjugate({whole_chain_string(layout, 0, axis)}, chain_transform(layout, 0));
      REQUIRE(reduced.size() == 1);
      std::vector<PauliFactor> expected{{layout.site(0, 1), axis}};
      for (int pos : report.parity_sites) expected.push_back({layout.site(0, pos), Axis::Z});
      REQUIRE(reduced[0].factors() == expected);
      REQUIRE(reduced[0].coefficient() == Complex(report.sign, 0));
    }
  }
}

TEST_CASE("Y-axis reduction sign alternates with (M-1)/2 parity") {
  REQUIRE(reduce_chain_axis(Axis::Y, 1).sign == 1);
  REQUIRE(reduce_chain_axis(Axis::Y, 3).sign == -1);
  REQUIRE(reduce_chain_axis(Axis::Y, 5).sign == 1);
  REQUIRE(reduce_chain_axis(Axis::Y, 7).sign == -1);
  REQUIRE(reduce_chain_axis(Axis::Y, 9).sign == 1);
  REQUIRE(reduce_chain_axis(Axis::Z, 5).parity_sites == std::vector<int>{3, 5});
  REQUIRE(reduce_chain_axis(Axis::Y, 3).parity_sites == std::vector<int>{3});
  REQUIRE_THROWS_AS(reduce_chain_axis(Axis::Y, 4), EvenMForYZ);
  REQUIRE_THROWS_AS(reduce_chain_axis(Axis::Z, 2), EvenMForYZ);
}

TEST_CASE("field reduction coefficients") {
  const std::vector<int> plus{1};
  REQUIRE(reduce_field(2, std::vector<double>{0.3, 0.5}, plus) == 0.8);
  const std::vector<int> mixed{1, -1};
  REQUIRE(reduce_field(3, std::vector<double>{0.3, 0.5, 0.2}, mixed) ==
          Catch::Approx(0.3 + 0.5 - 0.2));
  const std::vector<int> minus_then_plus{-1, 1};
  REQUIRE(reduce_field(3, std::vector<double>{0.3, 0.5, 0.2}, minus_then_plus) ==
          Catch::Approx(0.3 - 0.5 - 0.2));
  const std::vector<int> all_plus{1, 1, 1, 1};
  REQUIRE(reduce_field(5, std::vector<double>(5, 0.4), all_plus) == Catch::Approx(2.0));
  REQUIRE_THROWS_AS(reduce_field(3, std::vector<double>{0.1, 0.2}, mixed), ShapeMismatch);

  // Conjugation route: transform sum_j w_j Z_j and freeze each sector.
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const SpinLayout layout({5});
  std::vector<double> w(5);
  for (double& x : w) x = u(rng);
  PauliSum field_terms;
  for (int j = 1; j <= 5; ++j) {
    field_terms.push_back(PauliString::single(w[j - 1], layout.site(0, j), Axis::Z));
  }
  const PauliSum transformed = conjugate(field_terms, chain_transform(layout, 0));
  for (const SectorLabel& sector : enumerate_sectors(layout)) {
    const PauliSum frozen = freeze_sector(transformed, layout, sector);
    REQUIRE(frozen.size() == 1);
    REQUIRE(frozen[0].factors() == std::vector<PauliFactor>{{1, Axis::Z}});
    REQUIRE(std::abs(frozen[0].coefficient().real() - reduce_field(5, w, sector.signs[0])) < 1e-14);
  }
}

TEST_CASE("sector effective models") {
  ModelSpec spec = uniform_xx_spec(2, 5, 0.8, 1.3, 0.2);
  const SectorLabel all_plus = SectorLabel::all_plus(spec.layout);
  const EffectiveStarParams p = sector_effective_model(spec, all_plus);
  REQUIRE(p.g_x == std::vector<double>{0.8, 0.8});
  REQUIRE(p.g_y == std::vector<double>{0.8, 0.8});  // (M-1)/2 even: no sign
  REQUIRE(p.g_z == std::vector<double>{0.0, 0.0});
  REQUIRE(p.f == std::vector<double>{1.0, 1.0});  // M * chain_field

  ModelSpec xy(ModelFamily::XY, SpinLayout({3}));
  xy.gamma_x = {0.4};
  xy.gamma_y = {0.9};
  SectorLabel flipped;
  flipped.signs = {{1, -1}};  // sigma_3 = -1
  const EffectiveStarParams q = sector_effective_model(xy, flipped);
  REQUIRE(q.g_y == std::vector<double>{0.9});  // (-1) * (-1)

  SectorLabel wrong_shape;
  wrong_shape.signs = {{1}};
  REQUIRE_THROWS_AS(sector_effective_model(xy, wrong_shape), ShapeMismatch);
}

TEST_CASE("sector enumeration is complete and lexicographic") {
  REQUIRE(enumerate_sectors(SpinLayout({3})).size() == 4);
  REQUIRE(enumerate_sectors(SpinLayout({3, 3})).size() == 16);
  REQUIRE(enumerate_sectors(SpinLayout({5, 5})).size() == 256);

  const auto sectors = enumerate_sectors(SpinLayout({3}));
  REQUIRE(sectors[0].signs == std::vector<std::vector<int>>{{1, 1}});
  REQUIRE(sectors[1].signs == std::vector<std::vector<int>>{{1, -1}});
  REQUIRE(sectors[2].signs == std::vector<std::vector<int>>{{-1, 1}});
  REQUIRE(sectors[3].signs == std::vector<std::vector<int>>{{-1, -1}});

  REQUIRE_THROWS_AS(enumerate_sectors(SpinLayout({5, 5}), 16), SectorCountTooLarge);
}

TEST_CASE("invariant subspace basis ordering and encoding") {
  const SpinLayout tiny({1});
  const auto basis = invariant_subspace_basis(tiny);
  REQUIRE(basis.size() == 4);
  for (std::uint64_t e = 0; e < 4; ++e) REQUIRE(basis[e][e] == Complex(1, 0));

  // |down_a, +, -> on two five-spin chains: ancilla bit 1, chain 1 all
  // zeros, chain 2 all ones.
  const SpinLayout layout({5, 5});
  REQUIRE(embed_effective_index(layout, 0b101) == 0b10000011111ULL);
}

TEST_CASE("conjugation preserves spectra") {
  std::mt19937 rng(43);
  const SpinLayout layout({3});
  PauliSum h;
  for (int i = 0; i < 4; ++i) h.push_back(oracle::random_string(4, rng, true));
  const PauliSum transformed = conjugate(h, chain_transform(layout, 0));
  Eigen::SelfAdjointEigenSolver<DenseOperator> before(materialize(h, 4), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<DenseOperator> after(materialize(transformed, 4),
                                                     Eigen::EigenvaluesOnly);
  REQUIRE((before.eigenvalues() - after.eigenvalues()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("transformed chain-star commutes with every frozen-site Z") {
  ModelSpec spec(ModelFamily::XYZ, SpinLayout({3, 5}));
  spec.omega_a = 0.4;
  spec.gamma_x = {0.9, -0.2};
  spec.gamma_y = {0.5, 0.7};
  spec.gamma_z = {-0.3, 0.6};
  spec.chain_field = {0.15, -0.2};
  const PauliSum transformed = transform_chain_star(spec);
  for (int k = 0; k < spec.layout.chain_count(); ++k) {
    for (int j = 2; j <= spec.layout.chain_size(k); ++j) {
      REQUIRE(commutes(PauliString::single(1.0, spec.layout.site(k, j), Axis::Z), transformed));
    }
  }
}

TEST_CASE("restriction to the invariant subspace equals the all-plus star") {
  const ModelSpec spec = uniform_xx_spec(2, 5, 0.8, 1.1, 0.3);
  const DenseOperator restricted =
      restrict_to_invariant_subspace(build_chain_star(spec), spec.layout);
  const EffectiveStarParams p = sector_effective_model(spec, SectorLabel::all_plus(spec.layout));
  const DenseOperator star = materialize(build_standard_star(p), 3);
  REQUIRE((restricted - star).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("full mapping verification on a random XYZ model with per-spin fields") {
  ExperimentConfig config = ExperimentConfig::defaults_for("verify-mapping");
  auto [spec, fields] = random_xyz_fixture(config.model.layout, 9001);
  const MappingReport report = verify_mapping(spec, fields);
  REQUIRE(report.spectral_max_deviation < 1e-9);
  REQUIRE(report.block_diagonality_residual == 0.0);
  REQUIRE(report.restriction_max_deviation < 1e-12);
  REQUIRE(report.subspace_invariance_residual < 1e-12);
  REQUIRE(report.freeze_vs_closed_form < 1e-12);
  REQUIRE(report.pass());
}

TEST_CASE("omitting the Y reduction sign breaks the restriction identity") {
  // Regression fixture: for an XY chain of three spins the all-plus sector
  // carries g_y = -gamma_y. Dropping that sign leaves the spectrum of a
  // single-chain star untouched (the sector union contains both signs), but
  // the restricted operator itself detects it.
  ModelSpec xy(ModelFamily::XY, SpinLayout({3}));
  xy.omega_a = 0.8;
  xy.gamma_x = {0.6};
  xy.gamma_y = {0.9};

  const DenseOperator restricted =
      restrict_to_invariant_subspace(build_chain_star(xy), xy.layout);
  EffectiveStarParams p = sector_effective_model(xy, SectorLabel::all_plus(xy.layout));
  REQUIRE(p.g_y == std::vector<double>{-0.9});
  REQUIRE((restricted - materialize(build_standard_star(p), 2)).cwiseAbs().maxCoeff() < 1e-12);

  p.g_y[0] = 0.9;  // drop the (-1)^((M-1)/2) sign
  REQUIRE((restricted - materialize(build_standard_star(p), 2)).cwiseAbs().maxCoeff() > 1.0);
}

TEST_CASE("freeze_sector rejects non-block-diagonal input") {
  const SpinLayout layout({3});
  const PauliSum raw{whole_chain_string(layout, 0, Axis::X)};
  REQUIRE_THROWS_AS(freeze_sector(raw, layout, SectorLabel::all_plus(layout)), ShapeMismatch);
}
