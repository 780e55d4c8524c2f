#include "simstack/multiport.hpp"

#include <cmath>
#include <string>

namespace simstack {

namespace {

void require_kind(const BlockTwoPort& net, PortKind kind, const char* op) {
    if (net.kind() != kind) {
        throw std::invalid_argument(std::string(op) + ": expected " + to_string(kind) +
                                    " network, got " + to_string(net.kind()));
    }
}

void require_same_n(const BlockTwoPort& a, const BlockTwoPort& b, const char* op) {
    if (a.n() != b.n()) {
        throw std::invalid_argument(std::string(op) + ": port count mismatch (" +
                                    std::to_string(a.n()) + " vs " + std::to_string(b.n()) + ")");
    }
}

CMatrix eye(Eigen::Index n) { return CMatrix::Identity(n, n); }

}  // namespace

bool factorize(const CMatrix& a, Eigen::PartialPivLU<CMatrix>& lu, FactorTally* tally) {
    lu.compute(a);
    bump(tally);
    const double rc = lu.rcond();
    return std::isfinite(rc) && rc >= kMinRcond;
}

const char* to_string(PortKind kind) {
    switch (kind) {
        case PortKind::scattering: return "scattering";
        case PortKind::transfer: return "transfer";
        case PortKind::impedance: return "impedance";
    }
    return "unknown";
}

BlockTwoPort::BlockTwoPort(PortKind kind, CMatrix b11, CMatrix b12, CMatrix b21, CMatrix b22)
    : kind_(kind), b11_(std::move(b11)), b12_(std::move(b12)), b21_(std::move(b21)), b22_(std::move(b22)) {
    const Eigen::Index n = b11_.rows();
    for (const CMatrix* b : {&b11_, &b12_, &b21_, &b22_}) {
        if (b->rows() != n || b->cols() != n) {
            throw std::invalid_argument("BlockTwoPort: all four blocks must be N x N");
        }
    }
}

BlockTwoPort BlockTwoPort::from_dense(PortKind kind, const CMatrix& m) {
    if (m.rows() != m.cols() || m.rows() % 2 != 0) {
        throw std::invalid_argument("BlockTwoPort::from_dense: matrix must be 2N x 2N");
    }
    const Eigen::Index n = m.rows() / 2;
    return BlockTwoPort(kind, m.topLeftCorner(n, n), m.topRightCorner(n, n),
                        m.bottomLeftCorner(n, n), m.bottomRightCorner(n, n));
}

BlockTwoPort BlockTwoPort::identity(PortKind kind, Eigen::Index n) {
    return BlockTwoPort(kind, eye(n), CMatrix::Zero(n, n), CMatrix::Zero(n, n), eye(n));
}

BlockTwoPort BlockTwoPort::through(Eigen::Index n) {
    return BlockTwoPort(PortKind::scattering, CMatrix::Zero(n, n), eye(n), eye(n), CMatrix::Zero(n, n));
}

const CMatrix& BlockTwoPort::block(int i, int j) const {
    if (i == 1 && j == 1) return b11_;
    if (i == 1 && j == 2) return b12_;
    if (i == 2 && j == 1) return b21_;
    if (i == 2 && j == 2) return b22_;
    throw std::out_of_range("BlockTwoPort::block: indices must be 1 or 2");
}

CMatrix BlockTwoPort::assemble() const {
    const Eigen::Index n = this->n();
    CMatrix m(2 * n, 2 * n);
    m << b11_, b12_, b21_, b22_;
    return m;
}

ConstraintMatrices ConstraintMatrices::make(Eigen::Index n) {
    ConstraintMatrices c;
    c.sigma = RMatrix::Zero(2 * n, 2 * n);
    c.sigma.topLeftCorner(n, n).setIdentity();
    c.sigma.bottomRightCorner(n, n) = -RMatrix::Identity(n, n);
    c.exchange = RMatrix::Zero(2 * n, 2 * n);
    c.exchange.topRightCorner(n, n).setIdentity();
    c.exchange.bottomLeftCorner(n, n).setIdentity();
    return c;
}

BlockTwoPort cascade_s(const BlockTwoPort& p, const BlockTwoPort& q, FactorTally* tally) {
    require_kind(p, PortKind::scattering, "cascade_s");
    require_kind(q, PortKind::scattering, "cascade_s");
    require_same_n(p, q, "cascade_s");
    const Eigen::Index n = p.n();

    Eigen::PartialPivLU<CMatrix> lu_x;
    if (!factorize(eye(n) - q.b11() * p.b22(), lu_x, tally)) {
        throw SingularCascade(0, "cascade_s: (I - Q11 P22) is singular");
    }
    Eigen::PartialPivLU<CMatrix> lu_y;
    if (!factorize(eye(n) - p.b22() * q.b11(), lu_y, tally)) {
        throw SingularCascade(0, "cascade_s: (I - P22 Q11) is singular");
    }

    CMatrix r11 = p.b11() + p.b12() * lu_x.solve(q.b11() * p.b21());
    CMatrix r12 = p.b12() * lu_x.solve(q.b12());
    CMatrix r21 = q.b21() * lu_y.solve(p.b21());
    CMatrix r22 = q.b22() + q.b21() * lu_y.solve(p.b22() * q.b12());
    return BlockTwoPort(PortKind::scattering, std::move(r11), std::move(r12), std::move(r21), std::move(r22));
}

BlockTwoPort cascade_s_chain(std::span<const BlockTwoPort> chain, FactorTally* tally) {
    if (chain.empty()) throw std::invalid_argument("cascade_s_chain: empty chain");
    BlockTwoPort acc = chain.front();
    require_kind(acc, PortKind::scattering, "cascade_s_chain");
    for (std::size_t k = 1; k < chain.size(); ++k) {
        try {
            acc = cascade_s(acc, chain[k], tally);
        } catch (const SingularCascade& e) {
            throw SingularCascade(k - 1, "cascade_s_chain: junction " + std::to_string(k - 1) + ": " + e.what());
        }
    }
    return acc;
}

BlockTwoPort s_to_t(const BlockTwoPort& s, FactorTally* tally) {
    require_kind(s, PortKind::scattering, "s_to_t");
    const Eigen::Index n = s.n();
    Eigen::PartialPivLU<CMatrix> lu;
    if (!factorize(s.b21(), lu, tally)) {
        throw NonInvertibleTransmission("s_to_t: S21 is singular, network has no through path");
    }
    CMatrix t22 = lu.solve(eye(n));
    CMatrix t21 = -lu.solve(s.b22());
    CMatrix t12 = s.b11() * t22;
    CMatrix t11 = s.b12() + s.b11() * t21;
    return BlockTwoPort(PortKind::transfer, std::move(t11), std::move(t12), std::move(t21), std::move(t22));
}

BlockTwoPort t_to_s(const BlockTwoPort& t, FactorTally* tally) {
    require_kind(t, PortKind::transfer, "t_to_s");
    const Eigen::Index n = t.n();
    Eigen::PartialPivLU<CMatrix> lu;
    if (!factorize(t.b22(), lu, tally)) {
        throw NonInvertibleTransfer("t_to_s: T22 is singular");
    }
    CMatrix s21 = lu.solve(eye(n));
    CMatrix s22 = -lu.solve(t.b21());
    CMatrix s11 = t.b12() * s21;
    CMatrix s12 = t.b11() + t.b12() * s22;
    return BlockTwoPort(PortKind::scattering, std::move(s11), std::move(s12), std::move(s21), std::move(s22));
}

BlockTwoPort t_chain(std::span<const BlockTwoPort> chain) {
    if (chain.empty()) throw std::invalid_argument("t_chain: empty chain");
    require_kind(chain.front(), PortKind::transfer, "t_chain");
    if (chain.size() == 1) return chain.front();
    CMatrix acc = chain.front().assemble();
    for (std::size_t k = 1; k < chain.size(); ++k) {
        require_kind(chain[k], PortKind::transfer, "t_chain");
        require_same_n(chain.front(), chain[k], "t_chain");
        acc = acc * chain[k].assemble();
    }
    return BlockTwoPort::from_dense(PortKind::transfer, acc);
}

BlockTwoPort z_to_s(const BlockTwoPort& z, double z0, FactorTally* tally) {
    require_kind(z, PortKind::impedance, "z_to_s");
    if (!(z0 > 0.0)) throw std::invalid_argument("z_to_s: z0 must be positive");
    const CMatrix zm = z.assemble();
    const Eigen::Index m = zm.rows();
    Eigen::PartialPivLU<CMatrix> lu;
    if (!factorize(zm + z0 * eye(m), lu, tally)) {
        throw SingularShift("z_to_s: (Z + Z0 I) is singular");
    }
    return BlockTwoPort::from_dense(PortKind::scattering, lu.solve(zm - z0 * eye(m)));
}

double default_tolerance(Eigen::Index n) { return 1e-10 * std::sqrt(2.0 * static_cast<double>(n)); }

double unitary_residual(const BlockTwoPort& s) {
    require_kind(s, PortKind::scattering, "unitary_residual");
    const CMatrix m = s.assemble();
    return (m.adjoint() * m - eye(m.rows())).norm();
}

double symmetric_residual(const BlockTwoPort& s) {
    require_kind(s, PortKind::scattering, "symmetric_residual");
    const CMatrix m = s.assemble();
    return (m - m.transpose()).norm();
}

double pseudo_unitary_residual(const BlockTwoPort& g) {
    require_kind(g, PortKind::transfer, "pseudo_unitary_residual");
    const CMatrix m = g.assemble();
    const auto c = ConstraintMatrices::make(g.n());
    const CMatrix sigma = c.sigma.cast<cplx>();
    return (m.adjoint() * sigma * m - sigma).norm();
}

double persymmetric_residual(const BlockTwoPort& g) {
    require_kind(g, PortKind::transfer, "persymmetric_residual");
    const CMatrix m = g.assemble();
    const auto c = ConstraintMatrices::make(g.n());
    const CMatrix j = c.exchange.cast<cplx>();
    return (m - j * m.conjugate() * j).norm();
}

bool check_unitary(const BlockTwoPort& s, double tol) { return unitary_residual(s) <= tol; }
bool check_symmetric(const BlockTwoPort& s, double tol) { return symmetric_residual(s) <= tol; }
bool check_pseudo_unitary(const BlockTwoPort& g, double tol) { return pseudo_unitary_residual(g) <= tol; }
bool check_persymmetric(const BlockTwoPort& g, double tol) { return persymmetric_residual(g) <= tol; }

}  // namespace simstack
