/*
 * Copyright (c) 2026, the msdis authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "msdis/rng.hpp"
#include "msdis/subspace.hpp"
#include "oracles.hpp"

using namespace msdis;

namespace {

MatC random_complex(Index rows, Index cols, Rng& rng) {
    MatC m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.complex_normal();
    return m;
}

MatC random_hpd(Index dim, Rng& rng, double ridge = 0.1) {
    MatC a = random_complex(dim, dim, rng);
    return a * a.adjoint() + ridge * MatC::Identity(dim, dim);
}

}  // namespace

TEST_CASE("whitener: identity and scaled identity", "[subspace]") {
    Whitener w1 = whitener_from(MatC::Identity(5, 5));
    CHECK((w1.root_inverse - MatC::Identity(5, 5)).norm() < 1e-12);
    Whitener w4 = whitener_from(4.0 * MatC::Identity(5, 5));
    CHECK((w4.root_inverse - 0.5 * MatC::Identity(5, 5)).norm() < 1e-12);
}

TEST_CASE("whitener: diagonal closed form", "[subspace]") {
    MatC c = MatC::Zero(3, 3);
    c(0, 0) = 1.0;
    c(1, 1) = 4.0;
    c(2, 2) = 9.0;
    Whitener w = whitener_from(c);
    MatC expected = MatC::Zero(3, 3);
    expected(0, 0) = 1.0;
    expected(1, 1) = 0.5;
    expected(2, 2) = 1.0 / 3.0;
    CHECK((w.root_inverse - expected).norm() < 1e-12);
}

TEST_CASE("whitener: random covariances whiten and invert", "[subspace]") {
    Rng rng(derive_seed(21, 0));
    for (int it = 0; it < 20; ++it) {
        const Index dim = 3 + static_cast<Index>(rng.below(10));
        MatC c = random_hpd(dim, rng);
        Whitener w = whitener_from(c);
        CHECK((w.root_inverse * c * w.root_inverse - MatC::Identity(dim, dim)).norm() <
              1e-8 * std::sqrt(static_cast<double>(dim)));
        CHECK((w.root_inverse * w.root_inverse - c.inverse()).norm() < 1e-8 * c.inverse().norm());
        CHECK((w.root_inverse - w.root_inverse.adjoint()).norm() < 1e-12 * w.root_inverse.norm());
    }
}

TEST_CASE("whitener: rejects bad inputs", "[subspace]") {
    CHECK_THROWS_AS(whitener_from(MatC::Zero(4, 4)), SingularCovarianceError);

    MatC rank_deficient = MatC::Zero(3, 3);
    rank_deficient(0, 0) = 1.0;  // eigenvalues {1, 0, 0}
    CHECK_THROWS_AS(whitener_from(rank_deficient), SingularCovarianceError);

    MatC nonhermitian = MatC::Identity(3, 3);
    nonhermitian(0, 1) = Complex(0.5, 0.0);
    CHECK_THROWS_AS(whitener_from(nonhermitian), UsageError);

    CHECK_THROWS_AS(whitener_from(MatC::Identity(3, 4)), UsageError);

    MatC negative = -MatC::Identity(3, 3);
    CHECK_THROWS_AS(whitener_from(negative), SingularCovarianceError);
}

TEST_CASE("projector: orthonormal columns reproduce B B^H", "[subspace]") {
    Rng rng(derive_seed(21, 1));
    MatC b = oracle::gram_schmidt(random_complex(8, 3, rng));
    REQUIRE(b.cols() == 3);
    Projector p = column_space_projector(b);
    CHECK(p.rank == 3);
    CHECK((p.matrix - b * b.adjoint()).norm() < 1e-12);
    CHECK(p.verify());
}

TEST_CASE("projector: zero and empty inputs give the zero projector", "[subspace]") {
    Projector pz = column_space_projector(MatC::Zero(6, 2));
    CHECK(pz.rank == 0);
    CHECK(pz.matrix.norm() == 0.0);
    Projector pe = column_space_projector(MatC(6, 0));
    CHECK(pe.rank == 0);
    CHECK(pe.matrix.norm() == 0.0);
    CHECK(pe.dim() == 6);
    Projector z = zero_projector(5);
    CHECK(z.rank == 0);
    CHECK(z.verify());
}

TEST_CASE("projector: collinear columns collapse to rank one", "[subspace]") {
    Rng rng(derive_seed(21, 2));
    VecC u = random_complex(7, 1, rng).col(0).normalized();
    MatC b(7, 2);
    b.col(0) = u;
    b.col(1) = 2.0 * u;
    Projector p = column_space_projector(b);
    CHECK(p.rank == 1);
    CHECK((p.matrix - u * u.adjoint()).norm() < 1e-10);
}

TEST_CASE("projector: random instances satisfy the algebra", "[subspace]") {
    Rng rng(derive_seed(21, 3));
    for (int it = 0; it < 40; ++it) {
        const Index m = 4 + static_cast<Index>(rng.below(29));
        const Index d = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m) + 1));
        MatC b = random_complex(m, d, rng);
        if (d >= 2 && rng.below(2) == 0) b.col(d - 1) = b.col(0) * Complex(0.3, -1.1);  // force deficiency
        Projector p = column_space_projector(b);
        CHECK(p.verify());
        // Range containment: P b = b.
        CHECK((p.matrix * b - b).norm() < 1e-9 * std::max(1.0, b.norm()));
        // Eigenvalues in {0, 1}.
        Eigen::SelfAdjointEigenSolver<MatC> eig(p.matrix);
        for (Index i = 0; i < m; ++i) {
            const double lambda = eig.eigenvalues()(i);
            CHECK(std::min(std::abs(lambda), std::abs(lambda - 1.0)) < 1e-6);
        }
        // Rank agrees with the Gram-Schmidt oracle.
        CHECK(p.rank == oracle::gram_schmidt(b).cols());
    }
}

TEST_CASE("residual projector: zero interference reduces to the column space", "[subspace]") {
    Rng rng(derive_seed(21, 4));
    MatC s = random_complex(10, 2, rng);
    Projector xi = zero_projector(10);
    Projector pi = residual_target_projector(s, xi);
    Projector direct = column_space_projector(s);
    CHECK(pi.rank == direct.rank);
    CHECK((pi.matrix - direct.matrix).norm() < 1e-10);
}

TEST_CASE("residual projector: fully covered modes vanish", "[subspace]") {
    Rng rng(derive_seed(21, 5));
    MatC span = random_complex(9, 4, rng);
    Projector xi = column_space_projector(span);
    // Columns inside the interference span.
    MatC s = span * random_complex(4, 2, rng);
    Projector pi = residual_target_projector(s, xi);
    CHECK(pi.rank == 0);
    CHECK(pi.matrix.norm() < 1e-8);
}

TEST_CASE("residual projector: partial overlap keeps the new direction", "[subspace]") {
    // Interference spans e0; the mode matrix spans {e0, e1}. The residual
    // projector must be exactly the projector onto e1.
    MatC s = MatC::Zero(4, 2);
    s(0, 0) = 1.0;
    s(1, 1) = 1.0;
    MatC interference = MatC::Zero(4, 1);
    interference(0, 0) = 1.0;
    Projector xi = column_space_projector(interference);
    Projector pi = residual_target_projector(s, xi);
    CHECK(pi.rank == 1);
    MatC expected = MatC::Zero(4, 4);
    expected(1, 1) = 1.0;
    CHECK((pi.matrix - expected).norm() < 1e-10);
}

TEST_CASE("residual projector: annihilates the interference subspace", "[subspace]") {
    Rng rng(derive_seed(21, 6));
    for (int it = 0; it < 25; ++it) {
        const Index m = 6 + static_cast<Index>(rng.below(20));
        MatC span = random_complex(m, 1 + static_cast<Index>(rng.below(4)), rng);
        Projector xi = column_space_projector(span);
        // Modes with a deliberate component inside the interference span.
        MatC s = random_complex(m, 2, rng) + span * random_complex(span.cols(), 2, rng);
        Projector pi = residual_target_projector(s, xi);
        CHECK(pi.verify());
        CHECK((pi.matrix * xi.matrix).norm() < 1e-8 * std::max(1.0, pi.matrix.norm()));
        MatC eye = MatC::Identity(m, m);
        CHECK(((eye - xi.matrix) * pi.matrix - pi.matrix).norm() < 1e-8 * std::max(1.0, pi.matrix.norm()));
    }
}

TEST_CASE("residual projector: rank splits into kept and overlapped parts", "[subspace]") {
    Rng rng(derive_seed(21, 7));
    // Construct spans with a known one-dimensional intersection: interference
    // = span{u, v}, modes = span{u, w} with u, v, w linearly independent.
    for (int it = 0; it < 10; ++it) {
        const Index m = 8;
        MatC basis = oracle::gram_schmidt(random_complex(m, 3, rng));
        REQUIRE(basis.cols() == 3);
        MatC interference(m, 2), modes(m, 2);
        interference.col(0) = basis.col(0);
        interference.col(1) = basis.col(1);
        modes.col(0) = basis.col(0) * Complex(0.8, 0.2);
        modes.col(1) = basis.col(2) + 0.5 * basis.col(0);
        Projector xi = column_space_projector(interference);
        Projector pi = residual_target_projector(modes, xi);
        // rank(modes) = 2, overlap dimension = 1, so the residual has rank 1.
        CHECK(pi.rank == 1);
        // And it must equal the projector onto the orthogonal complement part
        // of basis.col(2), computed by the oracle.
        MatC residual_dir = basis.col(2) - xi.matrix * basis.col(2);
        CHECK((pi.matrix - oracle::projector_onto(residual_dir)).norm() < 1e-9);
    }
}

TEST_CASE("residual projector: dimension mismatch rejected", "[subspace]") {
    Projector xi = zero_projector(5);
    CHECK_THROWS_AS(residual_target_projector(MatC::Zero(6, 2), xi), UsageError);
}

TEST_CASE("projection energy shortcut matches the explicit matrix", "[subspace]") {
    Rng rng(derive_seed(21, 8));
    for (int it = 0; it < 20; ++it) {
        const Index m = 5 + static_cast<Index>(rng.below(20));
        MatC b = random_complex(m, 1 + static_cast<Index>(rng.below(4)), rng);
        Projector p = column_space_projector(b);
        VecC r = random_complex(m, 1, rng).col(0);
        CHECK(p.energy(r) == Catch::Approx((p.matrix * r).squaredNorm()).epsilon(1e-10));
        CHECK((p.apply(r) - p.matrix * r).norm() < 1e-10 * std::max(1.0, r.norm()));
    }
}
