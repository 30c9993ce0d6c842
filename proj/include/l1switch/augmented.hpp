#pragma once

#include "l1switch/filter.hpp"
#include "l1switch/plant.hpp"
#include "l1switch/types.hpp"

namespace l1switch {

// ============================================================================
// Augmented state-space of the non-adaptive closed loop. State ordering is
// [x, x_f, x_I] and the cascade u = -x_I fixes the signs of the omega columns:
// the third block column carries -B omega, -B_f omega, -D_f omega. The
// cross-form simulation test pins this convention against the direct filter
// cascade.
// ============================================================================

struct AugmentedSystem {
    Matrix A;  // (n+n_f+m) x (n+n_f+m)
    Matrix B;  // (n+n_f+m) x m, multiplies sigma(t)
    Matrix E;  // (n+n_f+m) x m, multiplies r(t)  (feedforward gain folded in)
    Matrix C;  // m x (n+n_f+m), reads u = -x_I
    int n = 0, n_f = 0, m = 0;

    [[nodiscard]] int size() const { return n + n_f + m; }
};

/// Writes the theta-dependent first block column of A; everything else in A is
/// theta-independent and set once by build_augmented.
inline void update_augmented_theta(AugmentedSystem& aug, const LtiSubsystem& sys,
                                   const FilterSpec& filter, const Matrix& theta) {
    const int n = aug.n, n_f = aug.n_f, m = aug.m;
    aug.A.topLeftCorner(n, n) = sys.A;
    aug.A.topLeftCorner(n, n).noalias() += sys.B * theta.transpose();
    if (n_f > 0) aug.A.block(n, 0, n_f, n).noalias() = filter.B * theta.transpose();
    aug.A.bottomLeftCorner(m, n).noalias() = filter.D * theta.transpose();
}

inline AugmentedSystem build_augmented(const LtiSubsystem& sys, const FilterSpec& filter,
                                       const Matrix& theta, const Matrix& omega,
                                       const Matrix& k_ff) {
    AugmentedSystem aug;
    aug.n = sys.n();
    aug.n_f = filter.n_f();
    aug.m = sys.m();
    const int n = aug.n, n_f = aug.n_f, m = aug.m, N = aug.size();

    aug.A = Matrix::Zero(N, N);
    aug.A.block(0, n, n, n_f).setZero();
    aug.A.topRightCorner(n, m).noalias() = -sys.B * omega;
    if (n_f > 0) {
        aug.A.block(n, n, n_f, n_f) = filter.A;
        aug.A.block(n, n + n_f, n_f, m).noalias() = -filter.B * omega;
        aug.A.block(N - m, n, m, n_f) = filter.C;
    }
    aug.A.bottomRightCorner(m, m).noalias() = -filter.D * omega;
    update_augmented_theta(aug, sys, filter, theta);

    aug.B = Matrix::Zero(N, m);
    aug.B.topRows(n) = sys.B;
    if (n_f > 0) aug.B.middleRows(n, n_f) = filter.B;
    aug.B.bottomRows(m) = filter.D;

    aug.E = Matrix::Zero(N, m);
    if (n_f > 0) aug.E.middleRows(n, n_f).noalias() = -filter.B * k_ff;
    aug.E.bottomRows(m).noalias() = -filter.D * k_ff;

    aug.C = Matrix::Zero(m, N);
    aug.C.rightCols(m) = -Matrix::Identity(m, m);
    return aug;
}

// ============================================================================
// Blocks of the compact tracking-error dynamics, built from the pseudoinverse
// B+ = (B^T B)^{-1} B^T. They feed the quantitative tracking-error constants.
// ============================================================================

struct ErrorDynamicsBlocks {
    Matrix H;              // (n+n_f+m) x (n_f+m)
    Matrix J;              // (n+n_f+m) x n
    Matrix F;              // (n_f+m) x (n_f+m)
    Matrix G;              // (n_f+m) x n
    Matrix u_feedthrough;  // m x n, the -D_f B+ term of the input-error output
};

inline Matrix left_pseudoinverse(const Matrix& B) {
    Eigen::FullPivLU<Matrix> rank_check(B);
    if (rank_check.rank() != B.cols())
        throw ConfigError("pseudoinverse: B is rank deficient");
    const Matrix gram = B.transpose() * B;
    return Eigen::LLT<Matrix>(gram).solve(B.transpose());
}

inline ErrorDynamicsBlocks build_error_blocks(const LtiSubsystem& sys, const FilterSpec& filter,
                                              const Matrix& omega) {
    const int n = sys.n(), m = sys.m(), n_f = filter.n_f();
    const int N = n + n_f + m;
    const Matrix b_pinv = left_pseudoinverse(sys.B);
    const Matrix b_pinv_a = b_pinv * sys.A;

    ErrorDynamicsBlocks blocks;
    blocks.H = Matrix::Zero(N, n_f + m);
    blocks.H.topLeftCorner(n, n_f).noalias() = -sys.B * filter.C;
    blocks.H.topRightCorner(n, m).noalias() = -sys.B * (filter.D * omega);

    blocks.J = Matrix::Zero(N, n);
    blocks.J.topRows(n).noalias() = -sys.B * (filter.D * b_pinv);
    if (n_f > 0) blocks.J.middleRows(n, n_f).noalias() = -filter.B * b_pinv_a;
    blocks.J.bottomRows(m).noalias() = -filter.D * b_pinv_a;

    blocks.F = Matrix::Zero(n_f + m, n_f + m);
    if (n_f > 0) {
        blocks.F.topLeftCorner(n_f, n_f) = filter.A;
        blocks.F.topRightCorner(n_f, m).noalias() = -filter.B * omega;
        blocks.F.bottomLeftCorner(m, n_f) = filter.C;
    }
    blocks.F.bottomRightCorner(m, m).noalias() = -filter.D * omega;

    blocks.G = Matrix::Zero(n_f + m, n);
    if (n_f > 0) blocks.G.topRows(n_f).noalias() = -filter.B * b_pinv_a;
    blocks.G.bottomRows(m).noalias() = -filter.D * b_pinv_a;

    blocks.u_feedthrough = -filter.D * b_pinv;
    return blocks;
}

}  // namespace l1switch
