#include <doctest.h>

#include <random>

#include "sphwave/mesh.hpp"
#include "sphwave/wavelets.hpp"
#include "test_helpers.hpp"

using namespace sphwave;
using sphtest::kPi;

namespace {

Eigen::VectorXd random_vector(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
}

}  // namespace

TEST_SUITE_BEGIN("wavelets");

TEST_CASE("vbap gains: vertex hit, centroid, barycentric property") {
    const SubdivisionMesh mesh = build_mesh(1);
    const MeshLevel& coarse = mesh.levels[0];

    // Source at a vertex.
    const Eigen::VectorXd at_vertex = vbap_gains(coarse, Direction(0.0, 0.0));
    CHECK(at_vertex[0] == doctest::Approx(1.0));
    CHECK(at_vertex.sum() == doctest::Approx(1.0));
    CHECK((at_vertex.array() >= 0).all());

    // Centroid of an equilateral octant triangle: three equal thirds.
    const Eigen::Vector3d centroid =
        (coarse.vertices[0] + coarse.vertices[1] + coarse.vertices[4]).normalized();
    const Eigen::VectorXd at_centroid = vbap_gains(coarse, Direction::from_unit(centroid));
    int nonzero = 0;
    for (int i = 0; i < at_centroid.size(); ++i)
        if (at_centroid[i] > 0) ++nonzero;
    CHECK(nonzero == 3);
    CHECK(at_centroid[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(at_centroid[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(at_centroid[4] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // Arbitrary sources: nonnegative, sum one, at most three nonzeros.
    for (const auto& dir : sphtest::random_directions(200, 11)) {
        const Eigen::VectorXd g = vbap_gains(coarse, dir);
        CHECK(g.minCoeff() >= 0.0);
        CHECK(g.sum() == doctest::Approx(1.0).epsilon(1e-12));
        int nz = 0;
        for (int i = 0; i < g.size(); ++i)
            if (g[i] != 0.0) ++nz;
        CHECK(nz <= 3);
    }
}

TEST_CASE("lazy filters are the even/odd selectors") {
    const SubdivisionMesh mesh = build_mesh(2);
    for (int level = 1; level <= 2; ++level) {
        const FilterLevel lazy = lazy_filters(mesh, level);
        CHECK(biorthogonality_error(lazy) == 0.0);
        for (int r = 0; r < lazy.A.rows(); ++r) CHECK(lazy.A.row(r).sum() == 1.0);
    }
    FilterBank bank = make_filter_bank(mesh, WaveletFamily::lazy);
    const Eigen::VectorXd fine = upsample(bank, random_vector(18, 3), 1, 2);
    const Eigen::VectorXd back = inverse_transform(bank, forward_transform(bank, fine, 2), 2);
    CHECK((back - fine).lpNorm<Eigen::Infinity>() < 1e-12);
    // lazy: c^0 is the restriction of the data to the level-0 indices
    const Eigen::VectorXd f = random_vector(66, 4);
    const WaveletCoefficients wf = forward_transform(bank, f, 2);
    CHECK((wf.c0 - f.head(6)).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((inverse_transform(bank, wf, 2) - f).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("interpolating filters: constants, zero integrals, biorthogonality") {
    const SubdivisionMesh mesh = build_mesh(2);
    const FilterBank bank = make_filter_bank(mesh, WaveletFamily::interpolating);

    // Constant signal: details vanish, coarse stays constant.
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(66);
    const WaveletCoefficients wc = forward_transform(bank, ones, 2);
    CHECK((wc.c0.array() - 1.0).abs().maxCoeff() < 1e-12);
    for (const auto& d : wc.details) CHECK(d.cwiseAbs().maxCoeff() < 1e-12);

    // Biorthogonality by direct matrix products.
    for (int level = 1; level <= 2; ++level)
        CHECK(biorthogonality_error(bank.level(level)) < 1e-9);

    // Materialized wavelets have zero area-weighted integral.
    const Eigen::VectorXd areas = vertex_areas(mesh, 2);
    for (int index : {0, 3, 7}) {
        const Eigen::VectorXd psi0 = materialize(bank, 0, MaterializeKind::wavelet, index);
        CHECK(std::abs(psi0.dot(areas)) < 1e-6);
    }
    const Eigen::VectorXd psi1 = materialize(bank, 1, MaterializeKind::wavelet, 2);
    CHECK(std::abs(psi1.dot(areas)) < 1e-6);

    // Dual wavelets annihilate constants (the functional form of the zero
    // integral: the duals act pointwise, not against the area measure).
    const Eigen::VectorXd dual = materialize(bank, 0, MaterializeKind::dual_wavelet, 5);
    CHECK(std::abs(dual.sum()) < 1e-12);
}

TEST_CASE("lifting constructs the interpolating family from the lazy one") {
    const SubdivisionMesh mesh = build_mesh(2);
    const int level = 1;
    const NeighborSets ns = neighbor_sets(mesh, level);
    const FilterLevel lazy = lazy_filters(mesh, level);

    // lift with S = 0 is a no-op
    const FilterLevel same = lift(lazy, Eigen::MatrixXd::Zero(6, 12));
    CHECK((same.A - lazy.A).cwiseAbs().maxCoeff() == 0.0);
    CHECK((*same.Q - *lazy.Q).cwiseAbs().maxCoeff() == 0.0);

    // dual lift with the 1/2 prediction, then lift with the update weights,
    // equals the built-in interpolating family.
    Eigen::MatrixXd s_dual = Eigen::MatrixXd::Zero(12, 6);
    for (int o = 0; o < 12; ++o) {
        s_dual(o, ns.v[o][0]) = 0.5;
        s_dual(o, ns.v[o][1]) = 0.5;
    }
    const FilterLevel predicted = dual_lift(lazy, s_dual);
    const FilterLevel reference = interpolating_filters(mesh, level);
    // The update operator follows from A_ref = A_pred + S B_pred and
    // B_pred D^T = I: S is the odd-column block of the difference.
    const Eigen::MatrixXd s_update = (reference.A - predicted.A).rightCols(12);
    const FilterLevel lifted = lift(predicted, s_update);
    CHECK((lifted.A - reference.A).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((lifted.P - reference.P).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((*lifted.B - *reference.B).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((*lifted.Q - *reference.Q).cwiseAbs().maxCoeff() < 1e-12);

    // Random lifts preserve biorthogonality.
    std::mt19937 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd s_rand(6, 12), sd_rand(12, 6);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 12; ++c) s_rand(r, c) = gauss(rng);
    for (int r = 0; r < 12; ++r)
        for (int c = 0; c < 6; ++c) sd_rand(r, c) = gauss(rng);
    CHECK(biorthogonality_error(lift(reference, s_rand)) < 1e-9);
    CHECK(biorthogonality_error(dual_lift(reference, sd_rand)) < 1e-9);
    CHECK_THROWS_AS(lift(lazy, Eigen::MatrixXd::Zero(3, 3)), std::invalid_argument);
}

TEST_CASE("sint swaps the interpolating spaces and preserves pressure") {
    const SubdivisionMesh mesh = build_mesh(3);
    const FilterBank bank = make_filter_bank(mesh, WaveletFamily::sint);
    for (int level = 1; level <= 3; ++level) {
        const FilterLevel& fl = bank.level(level);
        CHECK(biorthogonality_error(fl) < 1e-9);
        // pressure: unit column sums of A and of P
        CHECK((fl.A.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
        CHECK((fl.P.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
        // P_SINT genuinely upsamples: some row has more than one nonzero
        int busy_rows = 0;
        for (int r = 0; r < fl.P.rows(); ++r) {
            int nz = 0;
            for (int c = 0; c < fl.P.cols(); ++c)
                if (std::abs(fl.P(r, c)) > 1e-14) ++nz;
            if (nz > 1) ++busy_rows;
        }
        CHECK(busy_rows > 0);
    }
}

TEST_CASE("vbap family: nonnegative columns summing to one, trivial P") {
    const SubdivisionMesh mesh = build_mesh(2);
    const FilterBank bank = make_filter_bank(mesh, WaveletFamily::vbap);
    for (int level = 1; level <= 2; ++level) {
        const FilterLevel& fl = bank.level(level);
        const int coarse_n = static_cast<int>(fl.A.rows());
        CHECK(fl.A.minCoeff() >= 0.0);
        CHECK(fl.A.maxCoeff() <= 1.0 + 1e-12);
        CHECK((fl.A.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
        CHECK_FALSE(fl.B.has_value());
        CHECK_FALSE(fl.Q.has_value());
        // even columns are unit vectors
        for (int k = 0; k < coarse_n; ++k) {
            CHECK(fl.A(k, k) == 1.0);
            CHECK(fl.A.col(k).sum() == 1.0);
        }
        // odd columns: midpoints split between their parents
        const NeighborSets ns = neighbor_sets(mesh, level);
        for (int o = 0; o < ns.odd_count(); ++o) {
            const int m = coarse_n + o;
            CHECK(fl.A(ns.v[o][0], m) == doctest::Approx(0.5).epsilon(1e-9));
            CHECK(fl.A(ns.v[o][1], m) == doctest::Approx(0.5).epsilon(1e-9));
        }
        // trivial upsampling
        CHECK((fl.P.topRows(coarse_n) -
               Eigen::MatrixXd::Identity(coarse_n, coarse_n)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(fl.P.bottomRows(fl.P.rows() - coarse_n).cwiseAbs().maxCoeff() == 0.0);
    }

    // Upsampled c~ touches only even entries.
    const Eigen::VectorXd c0 = random_vector(6, 17);
    const Eigen::VectorXd up = upsample(bank, c0, 0, 1);
    CHECK((up.head(6) - c0).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(up.tail(12).cwiseAbs().maxCoeff() == 0.0);

    // Forward transform with details requested must fail (no B).
    CHECK_THROWS_AS(forward_transform(bank, random_vector(66, 8), 1), std::runtime_error);
}

TEST_CASE("perfect reconstruction and pressure conservation") {
    const SubdivisionMesh mesh = build_mesh(2);
    for (WaveletFamily family :
         {WaveletFamily::lazy, WaveletFamily::interpolating, WaveletFamily::sint}) {
        const FilterBank bank = make_filter_bank(mesh, family);
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::VectorXd f = random_vector(66, 100 + trial);
            const WaveletCoefficients wc = forward_transform(bank, f, 2);
            CHECK(wc.total_dimension() == 66);
            const Eigen::VectorXd back = inverse_transform(bank, wc, 2);
            CHECK((back - f).lpNorm<Eigen::Infinity>() < 1e-9);
        }
    }

    // Pressure-preserving families conserve the coefficient sum per level.
    for (WaveletFamily family : {WaveletFamily::vbap, WaveletFamily::sint}) {
        const FilterBank bank = make_filter_bank(mesh, family);
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::VectorXd f = random_vector(66, 200 + trial);
            Eigen::VectorXd c = f;
            for (int level = 2; level >= 1; --level) {
                c = bank.level(level).A * c;
                CHECK(c.sum() == doctest::Approx(f.sum()).epsilon(1e-12));
            }
        }
        // chained P...A column sums stay one
        Eigen::MatrixXd chain = bank.level(1).P * bank.level(1).A * bank.level(2).A;
        chain = bank.level(2).P * chain;
        CHECK((chain.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("truncated reconstruction splits into P and Q contributions") {
    const SubdivisionMesh mesh = build_mesh(2);
    const FilterBank bank = make_filter_bank(mesh, WaveletFamily::sint);
    const Eigen::VectorXd f = random_vector(66, 31);
    const WaveletCoefficients wc = forward_transform(bank, f, 2);
    const Eigen::VectorXd c1 = downsample(bank, f, 2, 1);
    const Eigen::VectorXd rebuilt =
        bank.level(1).P * wc.c0 + *bank.level(1).Q * wc.details[0];
    CHECK((rebuilt - c1).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("materialized filters: deltas at the finest level, orbit symmetry") {
    const SubdivisionMesh mesh = build_mesh(2);
    const FilterBank bank = make_filter_bank(mesh, WaveletFamily::interpolating);

    const Eigen::VectorXd delta = materialize(bank, 2, MaterializeKind::scaling, 13);
    CHECK(delta.size() == 66);
    CHECK(delta[13] == 1.0);
    CHECK(delta.cwiseAbs().sum() == 1.0);

    // Scaling functions across one orbit are permutations of each other.
    const SymmetryOrbits so = symmetry_orbits(mesh, 1);
    const auto fine_perms = octahedral_vertex_permutations(mesh, 2);
    const auto coarse_perms = octahedral_vertex_permutations(mesh, 0);
    const int rep = so.orbits[0][0];
    const Eigen::VectorXd phi_rep = materialize(bank, 0, MaterializeKind::scaling, rep);
    bool matched_all = true;
    for (size_t g = 0; g < coarse_perms.size(); ++g) {
        const int member = coarse_perms[g][rep];
        const Eigen::VectorXd phi_member = materialize(bank, 0, MaterializeKind::scaling, member);
        for (int p = 0; p < 66; ++p)
            if (std::abs(phi_member[fine_perms[g][p]] - phi_rep[p]) > 1e-9) matched_all = false;
    }
    CHECK(matched_all);

    CHECK_THROWS_AS(materialize(bank, 2, MaterializeKind::wavelet, 0), std::invalid_argument);
    CHECK_THROWS_AS(materialize(bank, 0, MaterializeKind::scaling, 99), std::out_of_range);
}

TEST_CASE("filter bank files round trip") {
    const SubdivisionMesh mesh = build_mesh(2);
    const FilterBank bank = make_filter_bank(mesh, WaveletFamily::sint);
    save_filter_bank(bank, "bank_io_test");
    const FilterBank loaded = load_filter_bank("bank_io_test");
    CHECK(loaded.family == WaveletFamily::sint);
    REQUIRE(loaded.max_level() == 2);
    for (int j = 1; j <= 2; ++j) {
        CHECK((loaded.level(j).A - bank.level(j).A).cwiseAbs().maxCoeff() == 0.0);
        CHECK((*loaded.level(j).Q - *bank.level(j).Q).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_SUITE_END();
