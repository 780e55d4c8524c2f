#include "simstack/channel.hpp"

#include <cmath>
#include <limits>

namespace simstack {

namespace {

CMatrix diag_matrix(const CVector& d) { return d.asDiagonal(); }

// Columns spanning the orthogonal complement of range(a), appended to a.
CMatrix pad_columns(const CMatrix& a) {
    const Eigen::Index n = a.rows();
    const Eigen::Index k = a.cols();
    if (k == n) return a;
    Eigen::HouseholderQR<CMatrix> qr(a);
    const CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
    CMatrix out(n, n);
    out << a, q.rightCols(n - k);
    return out;
}

}  // namespace

RisLayer::RisLayer(Eigen::VectorXd phases) : phases_(std::move(phases)) {
    if (phases_.size() < 1) throw std::invalid_argument("RisLayer: at least one element required");
}

CVector RisLayer::theta_bar() const {
    CVector d(n());
    for (Eigen::Index i = 0; i < n(); ++i) d(i) = std::polar(1.0, phases_(i));
    return d;
}

BlockTwoPort RisLayer::scattering() const {
    const Eigen::Index m = n();
    const CMatrix t = diag_matrix(theta_bar());
    return BlockTwoPort(PortKind::scattering, CMatrix::Zero(m, m), t, t, CMatrix::Zero(m, m));
}

BlockTwoPort RisLayer::transfer() const {
    const Eigen::Index m = n();
    const CVector d = theta_bar();
    return BlockTwoPort(PortKind::transfer, diag_matrix(d), CMatrix::Zero(m, m), CMatrix::Zero(m, m),
                        diag_matrix(d.conjugate()));
}

SimStack::SimStack(std::vector<RisLayer> layers, std::vector<BlockTwoPort> media_s, FactorTally* tally) {
    if (layers.empty()) throw std::invalid_argument("SimStack: at least one layer required");
    if (media_s.size() + 1 != layers.size()) {
        throw std::invalid_argument("SimStack: need exactly L-1 media for L layers");
    }
    const Eigen::Index n = layers.front().n();
    for (const auto& l : layers) {
        if (l.n() != n) throw std::invalid_argument("SimStack: layer sizes differ");
    }
    auto media = std::make_shared<Media>();
    for (auto& m : media_s) {
        if (m.kind() != PortKind::scattering) throw std::invalid_argument("SimStack: media must be scattering");
        if (m.n() != n) throw std::invalid_argument("SimStack: medium size differs from layer size");
        media->transfer.push_back(s_to_t(m, tally));
        media->scattering.push_back(std::move(m));
    }
    layers_ = std::move(layers);
    media_ = std::move(media);
}

RMatrix SimStack::phase_matrix() const {
    RMatrix phi(static_cast<Eigen::Index>(layers_.size()), n());
    for (std::size_t l = 0; l < layers_.size(); ++l) phi.row(static_cast<Eigen::Index>(l)) = layers_[l].phases();
    return phi;
}

SimStack SimStack::with_phases(const RMatrix& phi) const {
    if (phi.rows() != static_cast<Eigen::Index>(layers_.size()) || phi.cols() != n()) {
        throw std::invalid_argument("SimStack::with_phases: phase matrix must be L x N");
    }
    std::vector<RisLayer> layers;
    layers.reserve(layers_.size());
    for (Eigen::Index l = 0; l < phi.rows(); ++l) layers.emplace_back(phi.row(l).transpose());
    return SimStack(std::move(layers), media_);
}

std::vector<BlockTwoPort> SimStack::scattering_chain() const {
    std::vector<BlockTwoPort> out;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        out.push_back(layers_[l].scattering());
        if (l < media_->scattering.size()) out.push_back(media_->scattering[l]);
    }
    return out;
}

std::vector<BlockTwoPort> SimStack::transfer_chain() const {
    std::vector<BlockTwoPort> out;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        out.push_back(layers_[l].transfer());
        if (l < media_->transfer.size()) out.push_back(media_->transfer[l]);
    }
    return out;
}

SimStack build_stack(const ArrayGeometry& geom, const MediumProvider& provider, const RMatrix& phi,
                     FactorTally* tally) {
    geom.validate();
    const Eigen::Index n = geom.elements();
    std::vector<RisLayer> layers;
    for (int l = 0; l < geom.layers; ++l) {
        layers.emplace_back(phi.size() == 0 ? Eigen::VectorXd::Zero(n) : Eigen::VectorXd(phi.row(l).transpose()));
    }
    std::vector<BlockTwoPort> media;
    if (geom.layers > 1) {
        // Uniform geometry: every adjacent pair sees the same medium.
        const BlockTwoPort first = medium_scattering(geom, 1, provider, tally);
        for (int l = 1; l < geom.layers; ++l) media.push_back(first);
    }
    return SimStack(std::move(layers), std::move(media), tally);
}

void ChannelRealization::validate(Eigen::Index n) const {
    if (h_it.rows() != n) throw std::invalid_argument("ChannelRealization: H_IT must have N rows");
    if (h_ri.cols() != n) throw std::invalid_argument("ChannelRealization: H_RI must have N columns");
    if (h_ri.rows() != h_it.cols()) throw std::invalid_argument("ChannelRealization: H_RI / H_IT disagree on K");
    if (!(noise_psd > 0)) throw std::invalid_argument("ChannelRealization: N0 must be > 0");
    if (!(p_max > 0)) throw std::invalid_argument("ChannelRealization: P_max must be > 0");
}

ChannelRealization make_realization(Eigen::Index n, int users, std::uint64_t seed, std::uint64_t stream,
                                    double noise_psd, double p_max) {
    auto seg = external_segments(n, users, seed, stream);
    return ChannelRealization{std::move(seg.h_it), std::move(seg.h_ri), noise_psd, p_max};
}

CMatrix transfer_bottom_row(const SimStack& stack) {
    const Eigen::Index n = stack.n();
    const auto& layers = stack.layers();
    const auto& media = stack.media_transfer();
    // [G1_21, G1_22] = [0, Theta-bar_1^-1]
    CMatrix row = CMatrix::Zero(n, 2 * n);
    row.rightCols(n) = diag_matrix(layers.front().theta_bar().conjugate());
    for (std::size_t l = 0; l < media.size(); ++l) {
        row = row * media[l].assemble();
        const CVector d = layers[l + 1].theta_bar();
        row.leftCols(n) = row.leftCols(n) * d.asDiagonal();
        row.rightCols(n) = row.rightCols(n) * d.conjugate().asDiagonal();
    }
    return row;
}

CMatrix channel_exact_t(const SimStack& stack, const ChannelRealization& ch, FactorTally* tally) {
    ch.validate(stack.n());
    const CMatrix t22 = transfer_bottom_row(stack).rightCols(stack.n());
    Eigen::PartialPivLU<CMatrix> lu;
    if (!factorize(t22, lu, tally)) {
        throw NonInvertibleTransfer("channel_exact_t: T_I22 is singular (fully reflective stack)");
    }
    return ch.h_ri * lu.solve(ch.h_it);
}

CMatrix channel_exact_s(const SimStack& stack, const ChannelRealization& ch, FactorTally* tally) {
    ch.validate(stack.n());
    const auto chain = stack.scattering_chain();
    return ch.h_ri * expanded_cascade_block(chain, 2, 1, tally) * ch.h_it;
}

CMatrix channel_simplified(const SimStack& stack, const ChannelRealization& ch) {
    ch.validate(stack.n());
    const auto& layers = stack.layers();
    const auto& media = stack.media();
    CMatrix acc = layers.front().theta_bar().asDiagonal() * ch.h_it;
    for (std::size_t l = 0; l < media.size(); ++l) {
        acc = layers[l + 1].theta_bar().asDiagonal() * (media[l].b21() * acc);
    }
    return ch.h_ri * acc;
}

CMatrix wave_oracle_channel(const SimStack& stack, const ChannelRealization& ch) {
    ch.validate(stack.n());
    const Eigen::Index n = stack.n();
    const Eigen::Index k = ch.users();
    if (k > n) throw std::invalid_argument("wave_oracle_channel: requires K <= N");

    // Transmitter and receiver segments as transfer matrices with
    // T0_22^-1 = H_IT and TL_22^-1 = H_RI (padded to N x N).
    const CMatrix h_it = pad_columns(ch.h_it);
    const CMatrix h_ri = pad_columns(ch.h_ri.adjoint()).adjoint();
    const CMatrix eye = CMatrix::Identity(n, n);
    CMatrix t0 = CMatrix::Zero(2 * n, 2 * n);
    t0.bottomRightCorner(n, n) = h_it.partialPivLu().solve(eye);
    CMatrix tl = CMatrix::Zero(2 * n, 2 * n);
    tl.topLeftCorner(n, n) = eye;
    tl.bottomRightCorner(n, n) = h_ri.partialPivLu().solve(eye);

    // Stack transfer matrix from the general conversion of every element.
    CMatrix ti = CMatrix::Identity(2 * n, 2 * n);
    for (const auto& s : stack.scattering_chain()) ti = ti * s_to_t(s).assemble();

    const CMatrix t = t0 * ti * tl;
    const CMatrix t11 = t.topLeftCorner(n, n);
    const CMatrix t12 = t.topRightCorner(n, n);
    const CMatrix t21 = t.bottomLeftCorner(n, n);
    const CMatrix t22 = t.bottomRightCorner(n, n);
    Eigen::PartialPivLU<CMatrix> lu(t22 + t12);
    const double rc = lu.rcond();
    if (!(rc >= kMinRcond)) throw NonInvertibleTransfer("wave_oracle_channel: T22 + T12 is singular");

    // v_o = (T22 + T12)^-1 v_i + (I - (T22 + T12)^-1 (T21 + T11)) a_o with a_o = 0.
    const CVector a_o = CVector::Zero(n);
    const CMatrix coupling = eye - lu.solve(t21 + t11);
    CMatrix h(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const CVector v_i = eye.col(c);
        h.col(c) = lu.solve(v_i) + coupling * a_o;
    }
    return h.topLeftCorner(k, k);
}

double relative_error(const CMatrix& a, const CMatrix& b) {
    const double denom = std::max(b.norm(), std::numeric_limits<double>::min());
    return (a - b).norm() / denom;
}

}  // namespace simstack
