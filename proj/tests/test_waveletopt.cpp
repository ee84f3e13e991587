#include <doctest.h>

#include "sphwave/waveletopt.hpp"
#include "test_helpers.hpp"

using namespace sphwave;

TEST_SUITE_BEGIN("waveletopt");

TEST_CASE("lambda target structure") {
    const SubdivisionMesh mesh = build_mesh(2);
    for (int level = 1; level <= 2; ++level) {
        const LambdaTarget lambda = build_lambda(mesh, level);
        const int coarse_n = mesh.vertex_count(level - 1);
        const int fine_n = mesh.vertex_count(level);
        REQUIRE(lambda.matrix.rows() == fine_n);
        // every column sums to one
        CHECK((lambda.matrix.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
        // odd columns: diagonal 1/3 and four entries of 1/6
        const NeighborSets ns = neighbor_sets(mesh, level);
        for (int o = 0; o < ns.odd_count(); ++o) {
            const int m = coarse_n + o;
            CHECK(lambda.matrix(m, m) == doctest::Approx(1.0 / 3.0));
            int sixths = 0;
            for (int r = 0; r < fine_n; ++r)
                if (r != m && lambda.matrix(r, m) > 0) {
                    CHECK(lambda.matrix(r, m) == doctest::Approx(1.0 / 6.0));
                    ++sixths;
                }
            CHECK(sixths == 4);
        }
        // even columns: valence-dependent gamma; the original octahedron
        // vertices have valence 4, so gamma = 1/3 there too
        for (int k = 0; k < 6; ++k)
            CHECK(lambda.matrix(k, k) == doctest::Approx(1.0 / 3.0));
        if (level == 2) {
            for (int k = 6; k < 18; ++k)
                CHECK(lambda.matrix(k, k) == doctest::Approx(2.0 / 8.0));  // valence 6
        }
    }
}

TEST_CASE("stage 2 completes lazy and interpolating banks") {
    const SubdivisionMesh mesh = build_mesh(2);
    for (WaveletFamily family : {WaveletFamily::lazy, WaveletFamily::interpolating}) {
        const FilterBank bank = make_filter_bank(mesh, family);
        for (int level = 1; level <= 2; ++level) {
            const auto [b, q] = complete_wavelet_filters(bank.level(level).A, bank.level(level).P);
            FilterLevel fl;
            fl.A = bank.level(level).A;
            fl.P = bank.level(level).P;
            fl.B = b;
            fl.Q = q;
            CHECK(biorthogonality_error(fl) < 1e-8);
            // AQ = 0 to machine precision by the kernel construction
            CHECK((fl.A * *fl.Q).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    // the recovered B/Q need not equal the lifted originals
    const FilterBank inter = make_filter_bank(mesh, WaveletFamily::interpolating);
    const auto [b, q] = complete_wavelet_filters(inter.level(1).A, inter.level(1).P);
    CHECK((b - *inter.level(1).B).cwiseAbs().maxCoeff() > 1e-3);

    // rank-deficient A is rejected
    Eigen::MatrixXd bad_a = Eigen::MatrixXd::Zero(6, 18);
    Eigen::MatrixXd any_p = Eigen::MatrixXd::Zero(18, 6);
    CHECK_THROWS(complete_wavelet_filters(bad_a, any_p));
}

TEST_CASE("stage 2 supplies the missing vbap wavelet filters on demand") {
    const SubdivisionMesh mesh = build_mesh(2);
    FilterBank bank = make_filter_bank(mesh, WaveletFamily::vbap);
    for (int level = 1; level <= 2; ++level) {
        REQUIRE_FALSE(bank.level(level).B.has_value());
        auto [b, q] = complete_wavelet_filters(bank.level(level).A, bank.level(level).P);
        bank.level(level).B = std::move(b);
        bank.level(level).Q = std::move(q);
        CHECK(biorthogonality_error(bank.level(level)) < 1e-8);
    }
    // with the completed filters the family reconstructs perfectly
    Eigen::VectorXd f = Eigen::VectorXd::LinSpaced(66, -1.0, 1.0);
    const Eigen::VectorXd back = inverse_transform(bank, forward_transform(bank, f, 2), 2);
    CHECK((back - f).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("optimized level-1 filters: constraints, pressure, positivity") {
    const SubdivisionMesh mesh = build_mesh(2);
    WaveletOptOptions opt;
    WaveletOptReport report;
    const FilterBank bank = optimize_scaling_filters(mesh, 1, opt, &report);
    REQUIRE(report.levels.size() == 1);
    const auto& lr = report.levels[0];

    // dof accounting: the unreduced counts match 6x18 = 108 per matrix
    CHECK(lr.free_parameters < 108);
    CHECK(lr.independent_constraints < lr.raw_constraints);

    const Eigen::MatrixXd& a = bank.level(1).A;
    const Eigen::MatrixXd& p = bank.level(1).P;
    CHECK((a * p - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((a.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-4);
    CHECK((p * a).colwise().sum().isApproxToConstant(1.0, 1e-3));
    // negative mass
    const double neg = a.cwiseMin(0.0).squaredNorm() + p.cwiseMin(0.0).squaredNorm();
    CHECK(neg < 1e-4);
    // objective decreased
    CHECK(lr.cost_final <= lr.cost_init);
}

TEST_CASE("stage-1 cost and constraint gradients match finite differences") {
    const SubdivisionMesh mesh = build_mesh(2);
    for (int level : {1, 2}) {
        const SymmetryOrbits orbits = symmetry_orbits(mesh, level);
        const ReducedProblem rp = reduce_dofs(orbits);
        const LambdaTarget lambda = build_lambda(mesh, level);
        const WaveletOptWeights weights;
        const int coarse_n = mesh.vertex_count(level - 1);
        const int fine_n = mesh.vertex_count(level);

        ScalarFn cost = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
            const auto mats = rp.upscale(x);
            const Eigen::MatrixXd& a = mats[0];
            const Eigen::MatrixXd& p = mats[1];
            Eigen::MatrixXd da = Eigen::MatrixXd::Zero(coarse_n, fine_n);
            Eigen::MatrixXd dp = Eigen::MatrixXd::Zero(fine_n, coarse_n);
            double f = 0.0;
            const Eigen::MatrixXd resid = p * a - lambda.matrix;
            const double norm = 1.0 / (fine_n * double(fine_n));
            f += weights.alpha_lambda * norm * resid.squaredNorm();
            da += weights.alpha_lambda * norm * 2.0 * p.transpose() * resid;
            dp += weights.alpha_lambda * norm * 2.0 * resid * a.transpose();
            const Eigen::RowVectorXd cs = a.colwise().sum().array() - 1.0;
            f += weights.alpha_p1 / fine_n * cs.squaredNorm();
            da += weights.alpha_p1 / fine_n * 2.0 * Eigen::VectorXd::Ones(coarse_n) * cs;
            const Eigen::MatrixXd an = a.cwiseMin(0.0);
            const Eigen::MatrixXd pn = p.cwiseMin(0.0);
            f += weights.alpha_neg / (coarse_n * double(fine_n)) *
                 (an.squaredNorm() + pn.squaredNorm());
            da += weights.alpha_neg / (coarse_n * double(fine_n)) * 2.0 * an;
            dp += weights.alpha_neg / (coarse_n * double(fine_n)) * 2.0 * pn;
            if (grad) *grad = rp.pullback({da, dp});
            return f;
        };

        std::mt19937 rng(17 + level);
        std::normal_distribution<double> gauss(0.3, 0.4);
        for (int trial = 0; trial < 10; ++trial) {
            Eigen::VectorXd x(rp.free_count);
            for (int i = 0; i < rp.free_count; ++i) x[i] = gauss(rng);
            CHECK(check_gradient(cost, x, 1e-6) < 1e-4);
        }
    }
}

TEST_CASE("optimization is robust to the starting point") {
    const SubdivisionMesh mesh = build_mesh(2);
    WaveletOptOptions a_opt;
    a_opt.random_init = true;
    a_opt.seed = 11;
    WaveletOptOptions b_opt;
    b_opt.random_init = true;
    b_opt.seed = 92001;
    const FilterBank a = optimize_scaling_filters(mesh, 1, a_opt);
    const FilterBank b = optimize_scaling_filters(mesh, 1, b_opt);
    CHECK((a.level(1).A - b.level(1).A).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((a.level(1).P - b.level(1).P).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("level-2 optimization freezes level 1 bitwise") {
    const SubdivisionMesh mesh = build_mesh(2);
    WaveletOptOptions opt;
    const FilterBank one = optimize_scaling_filters(mesh, 1, opt);
    const FilterBank two = optimize_scaling_filters(mesh, 2, opt);
    CHECK((one.level(1).A - two.level(1).A).cwiseAbs().maxCoeff() == 0.0);
    CHECK((one.level(1).P - two.level(1).P).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("full optimized bank passes the biorthogonality suite") {
    const SubdivisionMesh mesh = build_mesh(2);
    WaveletOptOptions opt;
    const FilterBank bank = optimized_filter_bank(mesh, 2, opt);
    for (int level = 1; level <= 2; ++level)
        CHECK(biorthogonality_error(bank.level(level)) < 1e-8);
    // pressure through the whole chain
    Eigen::MatrixXd chain = bank.level(2).P * bank.level(1).P * bank.level(1).A * bank.level(2).A;
    CHECK((chain.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-3);
}

TEST_SUITE_END();
