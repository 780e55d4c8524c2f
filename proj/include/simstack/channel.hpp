#pragma once

#include <memory>
#include <vector>

#include "simstack/medium.hpp"
#include "simstack/multiport.hpp"

namespace simstack {

/// One transmissive, single-connected RIS layer: Theta11 = Theta22 = 0 and
/// Theta21 = Theta12 = diag(exp(j phi)).
class RisLayer {
public:
    explicit RisLayer(Eigen::VectorXd phases);
    static RisLayer zeros(Eigen::Index n) { return RisLayer(Eigen::VectorXd::Zero(n)); }

    Eigen::Index n() const noexcept { return phases_.size(); }
    const Eigen::VectorXd& phases() const noexcept { return phases_; }
    /// Diagonal of Theta-bar.
    CVector theta_bar() const;

    BlockTwoPort scattering() const;
    /// blkdiag(Theta-bar, Theta-bar^-1), equal to s_to_t(scattering()).
    BlockTwoPort transfer() const;

private:
    Eigen::VectorXd phases_;
};

/// L layers interleaved with L-1 media. Media are shared between copies, so
/// re-phasing a stack does not copy or re-convert them.
class SimStack {
public:
    /// Media transfer matrices are derived once here; `tally` sees those factorizations.
    SimStack(std::vector<RisLayer> layers, std::vector<BlockTwoPort> media_s, FactorTally* tally = nullptr);

    std::size_t layer_count() const noexcept { return layers_.size(); }
    Eigen::Index n() const noexcept { return layers_.front().n(); }
    const std::vector<RisLayer>& layers() const noexcept { return layers_; }
    const std::vector<BlockTwoPort>& media() const noexcept { return media_->scattering; }
    const std::vector<BlockTwoPort>& media_transfer() const noexcept { return media_->transfer; }

    /// Phase matrix, one row per layer.
    RMatrix phase_matrix() const;
    SimStack with_phases(const RMatrix& phi) const;

    /// Theta_1, S_1, Theta_2, ..., Theta_L.
    std::vector<BlockTwoPort> scattering_chain() const;
    /// G_1, T_1, G_2, ..., G_L.
    std::vector<BlockTwoPort> transfer_chain() const;

private:
    struct Media {
        std::vector<BlockTwoPort> scattering;
        std::vector<BlockTwoPort> transfer;
    };
    SimStack(std::vector<RisLayer> layers, std::shared_ptr<const Media> media)
        : layers_(std::move(layers)), media_(std::move(media)) {}

    std::vector<RisLayer> layers_;
    std::shared_ptr<const Media> media_;
};

/// Builds the stack for a geometry and provider with the given phases
/// (zeros when `phi` is empty).
SimStack build_stack(const ArrayGeometry& geom, const MediumProvider& provider, const RMatrix& phi = RMatrix(),
                     FactorTally* tally = nullptr);

struct ChannelRealization {
    CMatrix h_it;  // N x K
    CMatrix h_ri;  // K x N
    double noise_psd = 1.0;
    double p_max = 2.0;

    Eigen::Index users() const noexcept { return h_it.cols(); }
    void validate(Eigen::Index n) const;
};

ChannelRealization make_realization(Eigen::Index n, int users, std::uint64_t seed, std::uint64_t stream,
                                    double noise_psd, double p_max);

/// Bottom block row of G_1 T_1 ... T_{L-1} G_L, i.e. [T_I21, T_I22].
CMatrix transfer_bottom_row(const SimStack& stack);

/// H = H_RI T_I22^-1 H_IT. One factorization per call.
CMatrix channel_exact_t(const SimStack& stack, const ChannelRealization& ch, FactorTally* tally = nullptr);

/// H = H_RI S_I21 H_IT with S_I21 written out from the recursive cascade.
CMatrix channel_exact_s(const SimStack& stack, const ChannelRealization& ch, FactorTally* tally = nullptr);

/// H = H_RI Theta_L S_{L-1,21} ... S_{1,21} Theta_1 H_IT.
CMatrix channel_simplified(const SimStack& stack, const ChannelRealization& ch);

/// Voltage-domain channel of the transmitter / stack / receiver cascade with
/// a_o = 0, excited one basis vector at a time. K < N is padded to K = N.
CMatrix wave_oracle_channel(const SimStack& stack, const ChannelRealization& ch);

/// ||A - B||_F / max(||B||_F, tiny).
double relative_error(const CMatrix& a, const CMatrix& b);

}  // namespace simstack
