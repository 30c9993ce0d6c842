#pragma once

#include <complex>

#include "l1switch/types.hpp"

namespace l1switch {

// ============================================================================
// State-space realization of the loop-shaping gain D0(s). The control law is
// u = -(D0(s)/s) mu, realized as the filter cascaded into an integrator; the
// integrator keeps the loop free of algebraic feedthrough.
// ============================================================================

struct FilterSpec {
    Matrix A;  // n_f x n_f, Hurwitz when n_f > 0
    Matrix B;  // n_f x m
    Matrix C;  // m x n_f
    Matrix D;  // m x m

    [[nodiscard]] int n_f() const { return static_cast<int>(A.rows()); }
    [[nodiscard]] int m() const { return static_cast<int>(D.rows()); }

    /// D0(s) = k (static gain, no filter state).
    static FilterSpec constant_gain(double k, int m) {
        FilterSpec f;
        f.A = Matrix::Zero(0, 0);
        f.B = Matrix::Zero(0, m);
        f.C = Matrix::Zero(m, 0);
        f.D = k * Matrix::Identity(m, m);
        return f;
    }

    void validate() const {
        const int nf = n_f();
        const int mm = m();
        if (A.cols() != nf || B.rows() != nf || B.cols() != mm || C.rows() != mm ||
            C.cols() != nf || D.cols() != mm)
            throw ConfigError("filter: inconsistent realization dimensions");
        if (nf > 0) {
            Eigen::EigenSolver<Matrix> es(A);
            for (int i = 0; i < nf; ++i)
                if (es.eigenvalues()[i].real() >= 0.0)
                    throw ConfigError("filter: A must be Hurwitz (D0 stable)");
        }
    }

    /// D0(s) evaluated at a complex frequency.
    [[nodiscard]] Eigen::MatrixXcd eval(std::complex<double> s) const {
        using CMatrix = Eigen::MatrixXcd;
        CMatrix out = D.cast<std::complex<double>>();
        if (n_f() > 0) {
            CMatrix resolvent = s * CMatrix::Identity(n_f(), n_f()) - A.cast<std::complex<double>>();
            out += C.cast<std::complex<double>>() *
                   resolvent.partialPivLu().solve(B.cast<std::complex<double>>());
        }
        return out;
    }

    /// D0(0) = D - C A^{-1} B (A is Hurwitz, hence invertible).
    [[nodiscard]] Matrix dc_gain() const {
        if (n_f() == 0) return D;
        return D - C * A.partialPivLu().solve(B);
    }
};

}  // namespace l1switch
