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
#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "msdis/common.hpp"

namespace msdis {

/// Default relative cutoff for numerical rank decisions. Surfaced in config
/// because the detector's penalty term counts ranks explicitly.
inline constexpr double kDefaultRankTol = 1e-10;

// ---------------------------------------------------------------------------
// Whitening
// ---------------------------------------------------------------------------

/// Hermitian inverse square root of a noise covariance.
struct Whitener {
    MatC root_inverse;  // C^{-1/2}
    MatC source;        // the covariance it was built from

    Index dim() const { return root_inverse.rows(); }
    VecC apply(const VecC& v) const { return root_inverse * v; }
    MatC apply(const MatC& m) const { return root_inverse * m; }
};

/// Builds C^{-1/2} = U diag(lambda^{-1/2}) U^H from the eigendecomposition.
/// Eigenvalues at or below tol * lambda_max are treated as singular.
inline Whitener whitener_from(const MatC& covariance, double tol = 1e-12) {
    if (covariance.rows() != covariance.cols()) throw UsageError("covariance must be square");
    const double scale = covariance.norm();
    if (!(scale > 0.0)) throw SingularCovarianceError("covariance is zero");
    if ((covariance - covariance.adjoint()).norm() > 1e-10 * scale)
        throw UsageError("covariance is not Hermitian");

    Eigen::SelfAdjointEigenSolver<MatC> eig((covariance + covariance.adjoint()) / 2.0);
    if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
    const VecD& lambda = eig.eigenvalues();  // ascending
    const double lambda_max = lambda(lambda.size() - 1);
    if (!(lambda_max > 0.0) || lambda(0) <= tol * lambda_max)
        throw SingularCovarianceError("covariance is numerically singular");

    Whitener w;
    w.source = covariance;
    w.root_inverse = eig.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
                     eig.eigenvectors().adjoint();
    w.root_inverse = ((w.root_inverse + w.root_inverse.adjoint()) / 2.0).eval();
    return w;
}

// ---------------------------------------------------------------------------
// Projectors
// ---------------------------------------------------------------------------

/// Orthonormal basis of the numerical column space. The basis form is what
/// the detector's inner loops consume; explicit projector matrices are built
/// from it on demand.
struct RangeBasis {
    MatC basis;  // M x rank, orthonormal columns
    int rank = 0;
};

/// scale_floor guards rank decisions on deflated matrices: the cutoff is
/// rel_tol * max(sigma_max, scale_floor), so directions that only survive
/// deflation as rounding residue are not promoted to full rank.
inline RangeBasis orthonormal_range(const MatC& b, double rel_tol = kDefaultRankTol,
                                    double scale_floor = 0.0) {
    RangeBasis out;
    if (b.cols() == 0 || b.rows() == 0) {
        out.basis.resize(b.rows(), 0);
        return out;
    }
    Eigen::BDCSVD<MatC> svd(b, Eigen::ComputeThinU);
    const VecD& sigma = svd.singularValues();
    const double smax = sigma.size() > 0 ? sigma(0) : 0.0;
    const double cutoff = rel_tol * std::max(smax, scale_floor);
    int rank = 0;
    for (Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > cutoff && sigma(i) > 0.0) ++rank;
    out.rank = rank;
    out.basis = svd.matrixU().leftCols(rank);
    return out;
}

/// Hermitian idempotent matrix with its rank. rank always equals
/// round(trace) by construction; verify() re-checks the algebra.
struct Projector {
    MatC matrix;  // M x M
    MatC basis;   // M x rank, orthonormal columns spanning the range
    int rank = 0;

    Index dim() const { return matrix.rows(); }
    VecC apply(const VecC& v) const { return basis * (basis.adjoint() * v).eval(); }

    /// Projection energy ||P v||^2 without forming P v.
    double energy(const VecC& v) const { return (basis.adjoint() * v).squaredNorm(); }

    bool verify(double idem_tol = 1e-8, double herm_tol = 1e-10, double trace_tol = 1e-6) const {
        const double pnorm = matrix.norm();
        if ((matrix * matrix - matrix).norm() > idem_tol * std::max(1.0, pnorm)) return false;
        if ((matrix - matrix.adjoint()).norm() > herm_tol * std::max(1.0, pnorm)) return false;
        return std::abs(matrix.trace().real() - rank) <= trace_tol;
    }
};

inline Projector projector_from_basis(RangeBasis range) {
    Projector p;
    p.rank = range.rank;
    p.matrix.noalias() = range.basis * range.basis.adjoint();
    p.basis = std::move(range.basis);
    return p;
}

inline Projector zero_projector(Index dim) {
    Projector p;
    p.matrix = MatC::Zero(dim, dim);
    p.basis.resize(dim, 0);
    p.rank = 0;
    return p;
}

/// Orthogonal projector onto the numerical column space of b (b * pinv(b),
/// via SVD). Zero columns or an empty b give the zero projector.
inline Projector column_space_projector(const MatC& b, double rel_tol = kDefaultRankTol) {
    if (b.cols() == 0) return zero_projector(b.rows());
    return projector_from_basis(orthonormal_range(b, rel_tol));
}

/// Part of a whitened mode matrix not already covered by the interference
/// subspace: deflates the columns against the interference basis, then takes
/// the projector onto what remains.
inline RangeBasis residual_range(const MatC& whitened_mode, const RangeBasis& interference,
                                 double rel_tol = kDefaultRankTol) {
    if (interference.rank == 0) return orthonormal_range(whitened_mode, rel_tol);
    MatC deflated = whitened_mode;
    deflated.noalias() -= interference.basis * (interference.basis.adjoint() * whitened_mode).eval();
    // Rank relative to the pre-deflation scale: a column fully inside the
    // interference span deflates to rounding residue, which must count as 0.
    return orthonormal_range(deflated, rel_tol, whitened_mode.norm());
}

inline Projector residual_target_projector(const MatC& whitened_mode, const Projector& interference,
                                           double rel_tol = kDefaultRankTol) {
    if (whitened_mode.rows() != interference.dim())
        throw UsageError("mode matrix and interference projector dimensions disagree");
    RangeBasis xi{interference.basis, interference.rank};
    return projector_from_basis(residual_range(whitened_mode, xi, rel_tol));
}

}  // namespace msdis
