#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace simstack {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;

/// Reciprocal condition number below which a factorization is rejected.
inline constexpr double kMinRcond = 1e-12;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when (I - Q11 P22) or (I - P22 Q11) is numerically singular.
class SingularCascade : public NumericalError {
public:
    SingularCascade(std::size_t junction, const std::string& what)
        : NumericalError(what), junction_(junction) {}
    /// Zero-based index of the failing junction inside a chain (0 for a single cascade).
    std::size_t junction() const noexcept { return junction_; }

private:
    std::size_t junction_;
};

class NonInvertibleTransmission : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonInvertibleTransfer : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularShift : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// ---------------------------------------------------------------------------
// Factorization accounting
// ---------------------------------------------------------------------------

/// Per-call accumulator for LU factorizations. Callers own it; nothing global.
struct FactorTally {
    std::size_t factorizations = 0;
};

inline void bump(FactorTally* tally) {
    if (tally) ++tally->factorizations;
}

/// Partial-pivoted LU with a reciprocal-condition guard.
/// Returns false if the matrix is (numerically) singular.
bool factorize(const CMatrix& a, Eigen::PartialPivLU<CMatrix>& lu, FactorTally* tally);

// ---------------------------------------------------------------------------
// BlockTwoPort
// ---------------------------------------------------------------------------

enum class PortKind { scattering, transfer, impedance };

const char* to_string(PortKind kind);

/// A balanced 2N-port network held as four N x N blocks.
class BlockTwoPort {
public:
    BlockTwoPort(PortKind kind, CMatrix b11, CMatrix b12, CMatrix b21, CMatrix b22);

    /// Split a dense 2N x 2N matrix into blocks.
    static BlockTwoPort from_dense(PortKind kind, const CMatrix& m);
    static BlockTwoPort identity(PortKind kind, Eigen::Index n);
    /// S = [[0, I], [I, 0]]: the reflectionless through connection.
    static BlockTwoPort through(Eigen::Index n);

    PortKind kind() const noexcept { return kind_; }
    Eigen::Index n() const noexcept { return b11_.rows(); }

    const CMatrix& b11() const noexcept { return b11_; }
    const CMatrix& b12() const noexcept { return b12_; }
    const CMatrix& b21() const noexcept { return b21_; }
    const CMatrix& b22() const noexcept { return b22_; }
    /// One-based block access, i, j in {1, 2}.
    const CMatrix& block(int i, int j) const;

    CMatrix assemble() const;

private:
    PortKind kind_;
    CMatrix b11_, b12_, b21_, b22_;
};

/// Sigma_2N = blkdiag(I, -I) and J_2N = blkantidiag(I, I).
struct ConstraintMatrices {
    RMatrix sigma;
    RMatrix exchange;

    static ConstraintMatrices make(Eigen::Index n);
};

enum class PortSide { input, output };

/// Incident/reflected wave pair at one side of a network, in sqrt(W).
struct WaveVector {
    CVector incident;
    CVector reflected;
    PortSide side = PortSide::input;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Cascade of scattering networks P then Q.
BlockTwoPort cascade_s(const BlockTwoPort& p, const BlockTwoPort& q, FactorTally* tally = nullptr);

/// Left fold S(S(...S(x0, x1)...), x_{m-1}).
BlockTwoPort cascade_s_chain(std::span<const BlockTwoPort> chain, FactorTally* tally = nullptr);

BlockTwoPort s_to_t(const BlockTwoPort& s, FactorTally* tally = nullptr);
BlockTwoPort t_to_s(const BlockTwoPort& t, FactorTally* tally = nullptr);

/// Plain ordered product of transfer matrices.
BlockTwoPort t_chain(std::span<const BlockTwoPort> chain);

/// S = (Z + z0 I)^-1 (Z - z0 I).
BlockTwoPort z_to_s(const BlockTwoPort& z, double z0, FactorTally* tally = nullptr);

/// Default checker tolerance, 1e-10 * sqrt(2N).
double default_tolerance(Eigen::Index n);

bool check_unitary(const BlockTwoPort& s, double tol);
bool check_symmetric(const BlockTwoPort& s, double tol);
bool check_pseudo_unitary(const BlockTwoPort& g, double tol);
bool check_persymmetric(const BlockTwoPort& g, double tol);

// Residual norms behind the checkers, useful for reporting.
double unitary_residual(const BlockTwoPort& s);
double symmetric_residual(const BlockTwoPort& s);
double pseudo_unitary_residual(const BlockTwoPort& g);
double persymmetric_residual(const BlockTwoPort& g);

// ---------------------------------------------------------------------------
// Expanded (substitution) evaluation of the recursive cascade
// ---------------------------------------------------------------------------

/// Evaluates block (i, j) of the left-nested cascade of `chain` by direct
/// substitution of the cascade formula, without reusing any subexpression.
/// Every (I - X Y)^-1 that appears in the written-out expression costs one
/// factorization in `tally`.
CMatrix expanded_cascade_block(std::span<const BlockTwoPort> chain, int i, int j,
                               FactorTally* tally = nullptr);

/// Number of N x N inversions in the written-out (2,1) block of an L-layer
/// stack (L layers, L-1 media), measured by running the expanded evaluator.
std::size_t count_inversions_s(int layers);

/// Evaluated quartic approximation of the inversion count, rounded.
long long inversion_count_quartic_fit(int layers);

}  // namespace simstack
