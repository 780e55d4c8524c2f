#include <cmath>
#include <string>

#include "simstack/multiport.hpp"

namespace simstack {

namespace {

CMatrix solve_shifted(const CMatrix& a, const CMatrix& b, const CMatrix& rhs, std::size_t junction,
                      FactorTally* tally) {
    Eigen::PartialPivLU<CMatrix> lu;
    if (!factorize(CMatrix::Identity(a.rows(), a.cols()) - a * b, lu, tally)) {
        throw SingularCascade(junction, "expanded cascade: singular junction " + std::to_string(junction));
    }
    return lu.solve(rhs);
}

// Block (i, j) of S(S(...S(chain[0], chain[1])...), chain[len-1]).
// Each occurrence of a prefix block in the cascade formula is re-evaluated.
CMatrix eval(std::span<const BlockTwoPort> chain, std::size_t len, int i, int j, FactorTally* tally) {
    if (len == 1) return chain[0].block(i, j);
    const auto p = [&](int a, int b) { return eval(chain, len - 1, a, b, tally); };
    const BlockTwoPort& q = chain[len - 1];
    const std::size_t junction = len - 2;

    if (i == 1 && j == 1) {
        // P11 + P12 (I - Q11 P22)^-1 Q11 P21
        return p(1, 1) + p(1, 2) * solve_shifted(q.b11(), p(2, 2), q.b11() * p(2, 1), junction, tally);
    }
    if (i == 1 && j == 2) {
        // P12 (I - Q11 P22)^-1 Q12
        return p(1, 2) * solve_shifted(q.b11(), p(2, 2), q.b12(), junction, tally);
    }
    if (i == 2 && j == 1) {
        // Q21 (I - P22 Q11)^-1 P21
        return q.b21() * solve_shifted(p(2, 2), q.b11(), p(2, 1), junction, tally);
    }
    // Q22 + Q21 (I - P22 Q11)^-1 P22 Q12
    return q.b22() + q.b21() * solve_shifted(p(2, 2), q.b11(), p(2, 2) * q.b12(), junction, tally);
}

}  // namespace

CMatrix expanded_cascade_block(std::span<const BlockTwoPort> chain, int i, int j, FactorTally* tally) {
    if (chain.empty()) throw std::invalid_argument("expanded_cascade_block: empty chain");
    if ((i != 1 && i != 2) || (j != 1 && j != 2)) {
        throw std::out_of_range("expanded_cascade_block: indices must be 1 or 2");
    }
    for (const auto& net : chain) {
        if (net.kind() != PortKind::scattering) {
            throw std::invalid_argument("expanded_cascade_block: scattering networks required");
        }
        if (net.n() != chain.front().n()) {
            throw std::invalid_argument("expanded_cascade_block: port count mismatch");
        }
    }
    return eval(chain, chain.size(), i, j, tally);
}

std::size_t count_inversions_s(int layers) {
    if (layers < 2) throw std::invalid_argument("count_inversions_s: L must be >= 2");
    // Generic single-port blocks; the count depends only on the expression shape.
    std::vector<BlockTwoPort> chain;
    const auto scalar = [](double re, double im) { return CMatrix::Constant(1, 1, cplx(re, im)); };
    for (int l = 0; l < layers; ++l) {
        chain.emplace_back(PortKind::scattering, scalar(0.2, 0.1), scalar(0.7, 0.0), scalar(0.7, 0.0),
                           scalar(-0.1, 0.2));
        if (l + 1 < layers) {
            chain.emplace_back(PortKind::scattering, scalar(0.1, -0.3), scalar(0.5, 0.2), scalar(0.5, 0.2),
                               scalar(-0.2, 0.1));
        }
    }
    FactorTally tally;
    (void)expanded_cascade_block(chain, 2, 1, &tally);
    return tally.factorizations;
}

long long inversion_count_quartic_fit(int layers) {
    // (2/3)L^4 - (49/6)L^3 + (127/3)L^2 - (551/6)L + 72, over a common denominator of 6.
    const long double l = layers;
    const long double num = 4 * l * l * l * l - 49 * l * l * l + 254 * l * l - 551 * l + 432;
    return std::llround(num / 6.0L);
}

}  // namespace simstack
