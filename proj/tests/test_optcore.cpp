#include <doctest.h>

#include <random>

#include "sphwave/mesh.hpp"
#include "sphwave/optcore.hpp"
#include "test_helpers.hpp"

using namespace sphwave;

namespace {

double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const double a = x[0], b = x[1];
    const double f = (1 - a) * (1 - a) + 100.0 * (b - a * a) * (b - a * a);
    if (grad) {
        grad->resize(2);
        (*grad)[0] = -2.0 * (1 - a) - 400.0 * a * (b - a * a);
        (*grad)[1] = 200.0 * (b - a * a);
    }
    return f;
}

}  // namespace

TEST_SUITE_BEGIN("optcore");

TEST_CASE("unconstrained quadratic") {
    ScalarFn f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = Eigen::VectorXd::Constant(1, 2.0 * (x[0] - 3.0));
        return (x[0] - 3.0) * (x[0] - 3.0);
    };
    const MinimizeResult r = minimize(f, Eigen::VectorXd::Zero(1));
    CHECK(r.report.converged);
    CHECK(std::abs(r.x[0] - 3.0) < 1e-8);
}

TEST_CASE("equality constrained quadratic hits the lagrange point") {
    ScalarFn f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = 2.0 * x;
        return x.squaredNorm();
    };
    std::vector<ScalarFn> cons;
    cons.push_back([](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = Eigen::VectorXd::Ones(2);
        return x[0] + x[1] - 1.0;
    });
    const MinimizeResult r = minimize(f, cons, Eigen::VectorXd::Zero(2));
    CHECK(r.report.converged);
    CHECK(std::abs(r.x[0] - 0.5) < 1e-6);
    CHECK(std::abs(r.x[1] - 0.5) < 1e-6);
    CHECK(r.report.constraint_violation < 1e-8);
}

TEST_CASE("rosenbrock from the classic start") {
    // Oracle: plain gradient descent with a tiny step, run long, approaches
    // the known minimum (1, 1); the quasi-Newton result must reach it much
    // more precisely.
    Eigen::VectorXd x(2);
    x << -1.2, 1.0;
    Eigen::VectorXd g(2);
    Eigen::VectorXd x_gd = x;
    for (int i = 0; i < 200000; ++i) {
        rosenbrock(x_gd, &g);
        x_gd -= 1e-3 * g / std::max(1.0, g.norm());
    }
    CHECK((x_gd - Eigen::Vector2d(1.0, 1.0)).norm() < 0.05);

    const MinimizeResult r = minimize(rosenbrock, x);
    CHECK(std::abs(r.x[0] - 1.0) < 1e-4);
    CHECK(std::abs(r.x[1] - 1.0) < 1e-4);
}

TEST_CASE("minimize is invariant under constraint reordering") {
    ScalarFn f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = 2.0 * x;
        return x.squaredNorm();
    };
    ScalarFn c1 = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) {
            *g = Eigen::VectorXd::Zero(3);
            (*g)[0] = 1;
            (*g)[1] = 1;
        }
        return x[0] + x[1] - 1.0;
    };
    ScalarFn c2 = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) {
            *g = Eigen::VectorXd::Zero(3);
            (*g)[1] = 1;
            (*g)[2] = 2;
        }
        return x[1] + 2.0 * x[2] + 0.5;
    };
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(3);
    const MinimizeResult a = minimize(f, {c1, c2}, x0);
    const MinimizeResult b = minimize(f, {c2, c1}, x0);
    CHECK((a.x - b.x).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("non-finite start throws") {
    ScalarFn f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) g->setZero(1);
        return std::log(x[0]);  // -inf at 0
    };
    CHECK_THROWS_AS(minimize(f, Eigen::VectorXd::Zero(1)), std::runtime_error);
}

TEST_CASE("gradient checker") {
    ScalarFn quad = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        Eigen::MatrixXd h(3, 3);
        h << 4, 1, 0, 1, 3, 1, 0, 1, 2;
        if (g) *g = 2.0 * h * x;
        return x.dot(h * x);
    };
    Eigen::VectorXd x(3);
    x << 0.3, -0.7, 1.1;
    CHECK(check_gradient(quad, x, 1e-5) < 1e-7);

    // Heaviside penalty x^2 theta(-x) is C1; away from zero the check passes.
    ScalarFn penalty = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        double f = 0.0;
        if (g) g->setZero(x.size());
        for (int i = 0; i < x.size(); ++i) {
            const double neg = std::min(x[i], 0.0);
            f += neg * neg;
            if (g) (*g)[i] = 2.0 * neg;
        }
        return f;
    };
    Eigen::VectorXd positive(3);
    positive << 0.5, 1.5, 2.5;
    CHECK(check_gradient(penalty, positive, 1e-6) < 1e-6);

    ScalarFn broken = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = Eigen::VectorXd::Constant(1, 10.0);  // wrong on purpose
        return x[0] * x[0];
    };
    CHECK(check_gradient(broken, Eigen::VectorXd::Ones(1), 1e-6) > 0.1);
}

TEST_CASE("independent constraint selection") {
    // duplicate rows: exactly one survives
    Eigen::MatrixXd dup(3, 2);
    dup << 1, 2, 1, 2, 0, 1;
    const auto mask = independent_constraints(dup);
    CHECK(mask[0]);
    CHECK_FALSE(mask[1]);
    CHECK(mask[2]);

    // full-rank square: all selected
    Eigen::MatrixXd full(3, 3);
    full << 2, 0, 0, 1, 1, 0, 0, 3, 1;
    for (bool b : independent_constraints(full)) CHECK(b);

    // a zero row is never selected
    Eigen::MatrixXd withzero(2, 2);
    withzero << 0, 0, 1, 1;
    const auto mz = independent_constraints(withzero);
    CHECK_FALSE(mz[0]);
    CHECK(mz[1]);
}

TEST_CASE("dof reduction on the level-1 filter pair") {
    const SubdivisionMesh mesh = build_mesh(1);
    const SymmetryOrbits so = symmetry_orbits(mesh, 1);

    // All entries free: 108 unknowns per matrix.
    DofOptions every;
    every.use_orbits = false;
    every.use_groups = false;
    const ReducedProblem full = reduce_dofs(so, every);
    CHECK(full.free_count == 2 * 6 * 18);

    // Orbit + group reduction: at most 4 parameters per matrix at level 1.
    const ReducedProblem rp = reduce_dofs(so);
    CHECK(rp.free_count <= 8);
    CHECK(rp.free_count >= 2);

    // upscale(downscale(M)) = M for orbit-symmetric matrices within the
    // template: build one by upscaling a random parameter vector.
    std::mt19937 rng(9);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd x(rp.free_count);
    for (int i = 0; i < rp.free_count; ++i) x[i] = gauss(rng);
    const auto mats = rp.upscale(x);
    const Eigen::VectorXd back = rp.downscale(mats);
    CHECK((back - x).lpNorm<Eigen::Infinity>() < 1e-12);
    const auto mats2 = rp.upscale(back);
    CHECK((mats2[0] - mats[0]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((mats2[1] - mats[1]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rref prunes the symmetric level-1 orthonormality constraints") {
    const SubdivisionMesh mesh = build_mesh(1);
    const SymmetryOrbits so = symmetry_orbits(mesh, 1);
    const ReducedProblem rp = reduce_dofs(so);

    // The 36 scalar constraints of A P = I as functions of the reduced
    // parameters, with their Jacobian at a generic point.
    auto constraints = [&rp](const Eigen::VectorXd& x, Eigen::MatrixXd* jac) {
        const auto mats = rp.upscale(x);
        const Eigen::MatrixXd ap = mats[0] * mats[1];
        Eigen::VectorXd c(36);
        for (int r = 0; r < 6; ++r)
            for (int k = 0; k < 6; ++k) c[r * 6 + k] = ap(r, k) - (r == k ? 1.0 : 0.0);
        if (jac) {
            jac->resize(36, x.size());
            for (int r = 0; r < 6; ++r)
                for (int k = 0; k < 6; ++k) {
                    Eigen::MatrixXd da = Eigen::MatrixXd::Zero(6, 18);
                    Eigen::MatrixXd dp = Eigen::MatrixXd::Zero(18, 6);
                    da.row(r) = mats[1].col(k).transpose();
                    dp.col(k) = mats[0].row(r).transpose();
                    jac->row(r * 6 + k) = rp.pullback({da, dp}).transpose();
                }
        }
        return c;
    };

    std::mt19937 rng(21);
    std::normal_distribution<double> gauss(0.5, 0.2);
    Eigen::VectorXd probe(rp.free_count);
    for (int i = 0; i < rp.free_count; ++i) probe[i] = gauss(rng);
    Eigen::MatrixXd jac;
    constraints(probe, &jac);
    const auto mask = independent_constraints(jac);
    int selected = 0;
    for (bool b : mask) selected += b;
    CHECK(selected < 36);
    CHECK(selected >= 1);

    // Satisfying the selected subset implies the full set: perturb random
    // reduced points until the independent residuals vanish, then check all.
    std::vector<int> keep;
    for (int i = 0; i < 36; ++i)
        if (mask[i]) keep.push_back(i);
    int feasible = 0;
    int attempts = 0;
    while (feasible < 100 && attempts < 400) {
        ++attempts;
        Eigen::VectorXd x(rp.free_count);
        for (int i = 0; i < rp.free_count; ++i) x[i] = gauss(rng);
        // Project to feasibility of the independent subset alone (Newton).
        for (int it = 0; it < 60; ++it) {
            Eigen::MatrixXd j;
            const Eigen::VectorXd c = constraints(x, &j);
            Eigen::VectorXd ck(keep.size());
            Eigen::MatrixXd jk(keep.size(), x.size());
            for (size_t i = 0; i < keep.size(); ++i) {
                ck[static_cast<Eigen::Index>(i)] = c[keep[i]];
                jk.row(static_cast<Eigen::Index>(i)) = j.row(keep[i]);
            }
            if (ck.lpNorm<Eigen::Infinity>() < 1e-12) break;
            x -= jk.completeOrthogonalDecomposition().solve(ck);
        }
        const Eigen::VectorXd c_all = constraints(x, nullptr);
        Eigen::VectorXd ck(keep.size());
        for (size_t i = 0; i < keep.size(); ++i) ck[static_cast<Eigen::Index>(i)] = c_all[keep[i]];
        if (ck.lpNorm<Eigen::Infinity>() > 1e-9) continue;  // projection failed, re-roll
        ++feasible;
        // Feasibility of the subset must imply the full set.
        CHECK(c_all.lpNorm<Eigen::Infinity>() < 1e-6);
    }
    CHECK(feasible == 100);
}

TEST_SUITE_END();
