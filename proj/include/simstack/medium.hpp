#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "simstack/multiport.hpp"

namespace simstack {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kFreeSpaceImpedance = 376.730313668;
inline constexpr double kPi = 3.14159265358979323846;

class GeometryDegenerate : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Position {
    double x = 0.0, y = 0.0, z = 0.0;
};

/// Uniform planar arrays in the yz-plane, one per layer, stacked along x.
/// Lengths are in meters. Element index n = iz * n_y + iy.
struct ArrayGeometry {
    int n_y = 6;
    int n_z = 6;
    double l_x = 0.0;
    double l_y = 0.0;
    double l_z = 0.0;
    double dipole_length = 0.0;
    double dipole_radius = 0.0;
    double wavelength = 0.0;
    int layers = 3;

    Eigen::Index elements() const { return static_cast<Eigen::Index>(n_y) * n_z; }
    Position position(int layer, Eigen::Index element) const;
    /// Throws std::invalid_argument listing every violated invariant.
    void validate() const;
};

double wavelength_from_frequency(double frequency_hz);

/// The L = 3, N = 6 x 6 convergence geometry; spacings are multiples of lambda.
ArrayGeometry convergence_geometry(double frequency_hz, double l_x_wl, double l_y_wl, double l_z_wl);

/// Layer-sweep geometry with a fixed budget of 72 elements:
/// n_y = 6, n_z = N / 6, l_x = lambda / (12 (L - 1)), l_y = lambda / 2, l_z = 36 lambda / (2N).
ArrayGeometry layer_sweep_geometry(int layers, double frequency_hz, int total_elements = 72);

enum class MediumKind { dipole, rayleigh_sommerfeld };

const char* to_string(MediumKind kind);

struct MediumProvider {
    MediumKind kind = MediumKind::dipole;
    double z0 = 50.0;  // reference impedance for the dipole provider, ohms
    /// Patch area for the RS provider; <= 0 means dipole_length^2.
    double patch_area = 0.0;
};

// ---- thin-wire dipole provider ------------------------------------------------

/// Induced-EMF mutual impedance between two parallel z-directed dipoles of
/// equal length with sinusoidal current. `lateral` is the distance between the
/// wire axes, `vertical` the offset of their centers along z. For the self
/// term pass lateral = wire radius and vertical = 0.
cplx dipole_mutual_impedance(double lateral, double vertical, double length, double wavelength,
                             double abs_tol = 1e-9);

/// Z-matrix of the medium between layers `from` and `to` (zero-based).
BlockTwoPort dipole_medium_between(const ArrayGeometry& geom, int from, int to);

/// Z-matrix of the medium between layer pair_index and pair_index + 1 (one-based pair index).
BlockTwoPort dipole_medium(const ArrayGeometry& geom, int pair_index);

// ---- Rayleigh-Sommerfeld provider ----------------------------------------------

/// Transmission coefficient (A cos(chi) / d) (1 / (2 pi d) - j / lambda) exp(j 2 pi d / lambda).
cplx rs_coefficient(double distance, double cos_chi, double area, double wavelength);

/// S-matrix of the medium between layer pair_index and pair_index + 1; S11 = S22 = 0, S12 = S21^T.
BlockTwoPort rs_medium(const ArrayGeometry& geom, int pair_index, double patch_area = 0.0);

/// Human-readable warnings when the RS model is outside its validity region.
std::vector<std::string> rs_validity_warnings(const ArrayGeometry& geom, double patch_area = 0.0);

/// Scattering medium for a provider (dipole media go through z_to_s).
BlockTwoPort medium_scattering(const ArrayGeometry& geom, int pair_index, const MediumProvider& provider,
                               FactorTally* tally = nullptr);

// ---- external fading segments --------------------------------------------------

/// Deterministic generator for stream `stream` of a run seeded by `seed`.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

struct ExternalSegments {
    CMatrix h_it;  // N x K, transmitter -> first layer
    CMatrix h_ri;  // K x N, last layer -> users
};

/// i.i.d. CN(0, 1) entries.
CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

ExternalSegments external_segments(Eigen::Index elements, int users, std::uint64_t seed,
                                   std::uint64_t stream = 0);

namespace serial {
/// Entry-by-entry Z-matrix without the offset table; reference for dipole_medium_between.
BlockTwoPort dipole_medium_between(const ArrayGeometry& geom, int from, int to);
}  // namespace serial

}  // namespace simstack
