#include "simstack/medium.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include "simstack/quadrature.hpp"

namespace simstack {

namespace {

constexpr double kCoincidence = 1e-12;

struct Offset {
    double lateral;
    double vertical;
};

Offset offset_between(const ArrayGeometry& g, int la, Eigen::Index a, int lb, Eigen::Index b) {
    const Position pa = g.position(la, a);
    const Position pb = g.position(lb, b);
    const double dx = pa.x - pb.x;
    const double dy = pa.y - pb.y;
    return {std::hypot(dx, dy), pb.z - pa.z};
}

// Z between two distinct or identical elements given their axis offset.
cplx element_impedance(const ArrayGeometry& g, Offset off, bool same_element) {
    if (same_element) {
        return dipole_mutual_impedance(g.dipole_radius, 0.0, g.dipole_length, g.wavelength);
    }
    const double scale = g.wavelength;
    if (off.lateral < kCoincidence * scale && std::abs(off.vertical) < kCoincidence * scale) {
        throw GeometryDegenerate("dipole medium: two element centers coincide");
    }
    if (off.lateral < g.dipole_radius && std::abs(off.vertical) < g.dipole_length) {
        throw GeometryDegenerate("dipole medium: collinear elements overlap");
    }
    return dipole_mutual_impedance(std::max(off.lateral, g.dipole_radius), off.vertical, g.dipole_length,
                                   g.wavelength);
}

void check_pair(const ArrayGeometry& geom, int from, int to) {
    if (from < 0 || to < 0 || from >= geom.layers || to >= geom.layers || from == to) {
        throw std::invalid_argument("medium: invalid layer pair");
    }
}

void check_pair_index(const ArrayGeometry& geom, int pair_index) {
    if (pair_index < 1 || pair_index > geom.layers - 1) {
        throw std::invalid_argument("medium: pair_index must lie in [1, L-1], got " + std::to_string(pair_index));
    }
}

// Impedance for every (|d iy|, |d iz|) pattern between two layers separated by `dx` along x.
// dx == 0 means intra-layer, where (0, 0) is the self term.
Eigen::MatrixXcd offset_table(const ArrayGeometry& g, double dx) {
    Eigen::MatrixXcd table(g.n_y, g.n_z);
    const int ny = g.n_y;
    const int nz = g.n_z;
    std::exception_ptr failure;
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (int iy = 0; iy < ny; ++iy) {
        for (int iz = 0; iz < nz; ++iz) {
            try {
                const Offset off{std::hypot(dx, iy * g.l_y), iz * g.l_z};
                table(iy, iz) = element_impedance(g, off, dx == 0.0 && iy == 0 && iz == 0);
            } catch (...) {
#pragma omp critical(simstack_offset_table)
                if (!failure) failure = std::current_exception();
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    return table;
}

CMatrix fill_from_table(const ArrayGeometry& g, const Eigen::MatrixXcd& table) {
    const Eigen::Index n = g.elements();
    CMatrix m(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            const auto dy = std::abs(static_cast<int>(a % g.n_y) - static_cast<int>(b % g.n_y));
            const auto dz = std::abs(static_cast<int>(a / g.n_y) - static_cast<int>(b / g.n_y));
            m(a, b) = table(dy, dz);
        }
    }
    return m;
}

}  // namespace

Position ArrayGeometry::position(int layer, Eigen::Index element) const {
    const auto iy = static_cast<double>(element % n_y);
    const auto iz = static_cast<double>(element / n_y);
    return {layer * l_x, iy * l_y, iz * l_z};
}

void ArrayGeometry::validate() const {
    std::vector<std::string> errs;
    if (n_y < 1) errs.emplace_back("n_y must be >= 1");
    if (n_z < 1) errs.emplace_back("n_z must be >= 1");
    if (layers < 1) errs.emplace_back("layers must be >= 1");
    if (!(wavelength > 0)) errs.emplace_back("wavelength must be > 0");
    if (!(l_x > 0)) errs.emplace_back("l_x must be > 0");
    if (!(l_y > 0)) errs.emplace_back("l_y must be > 0");
    if (!(l_z > 0)) errs.emplace_back("l_z must be > 0");
    if (!(dipole_length > 0)) errs.emplace_back("dipole_length must be > 0");
    if (!(dipole_radius > 0)) errs.emplace_back("dipole_radius must be > 0");
    if (!(dipole_radius < dipole_length)) errs.emplace_back("dipole_radius must be smaller than dipole_length");
    if (!errs.empty()) {
        std::ostringstream os;
        os << "invalid geometry:";
        for (const auto& e : errs) os << "\n  " << e;
        throw std::invalid_argument(os.str());
    }
}

double wavelength_from_frequency(double frequency_hz) {
    if (!(frequency_hz > 0)) throw std::invalid_argument("frequency must be > 0");
    return kSpeedOfLight / frequency_hz;
}

ArrayGeometry convergence_geometry(double frequency_hz, double l_x_wl, double l_y_wl, double l_z_wl) {
    const double lambda = wavelength_from_frequency(frequency_hz);
    ArrayGeometry g;
    g.n_y = 6;
    g.n_z = 6;
    g.layers = 3;
    g.wavelength = lambda;
    g.l_x = l_x_wl * lambda;
    g.l_y = l_y_wl * lambda;
    g.l_z = l_z_wl * lambda;
    g.dipole_length = lambda / 4.0;
    g.dipole_radius = lambda / 500.0;
    g.validate();
    return g;
}

ArrayGeometry layer_sweep_geometry(int layers, double frequency_hz, int total_elements) {
    if (layers < 2) throw std::invalid_argument("layer sweep: L must be >= 2");
    if (total_elements % layers != 0) {
        throw std::invalid_argument("layer sweep: N L must equal " + std::to_string(total_elements) +
                                    " with integer N");
    }
    const int n = total_elements / layers;
    if (n % 6 != 0) throw std::invalid_argument("layer sweep: N must be a multiple of n_y = 6");
    const double lambda = wavelength_from_frequency(frequency_hz);
    ArrayGeometry g;
    g.n_y = 6;
    g.n_z = n / 6;
    g.layers = layers;
    g.wavelength = lambda;
    g.l_x = lambda / (12.0 * (layers - 1));
    g.l_y = lambda / 2.0;
    g.l_z = 36.0 * lambda / (2.0 * n);
    g.dipole_length = lambda / 4.0;
    g.dipole_radius = lambda / 500.0;
    g.validate();
    if (g.elements() * g.layers != total_elements) {
        throw std::logic_error("layer sweep: element budget mismatch");
    }
    return g;
}

const char* to_string(MediumKind kind) {
    switch (kind) {
        case MediumKind::dipole: return "dipole";
        case MediumKind::rayleigh_sommerfeld: return "rayleigh-sommerfeld";
    }
    return "unknown";
}

cplx dipole_mutual_impedance(double lateral, double vertical, double length, double wavelength, double abs_tol) {
    const double k = 2.0 * kPi / wavelength;
    const double half = 0.5 * length;
    const double s = std::sin(k * half);
    if (std::abs(s) < 1e-9) throw std::invalid_argument("dipole impedance: sin(k l / 2) vanishes");
    const double c = std::cos(k * half);
    const cplx j(0.0, 1.0);
    const cplx prefactor = j * kFreeSpaceImpedance / (4.0 * kPi * s * s);

    const double d2 = lateral * lateral;
    const auto green = [&](double r) { return std::exp(-j * (k * r)) / r; };
    const auto integrand = [&](double z) -> cplx {
        const double za = vertical + z;
        const double r0 = std::sqrt(d2 + za * za);
        const double r1 = std::sqrt(d2 + (za - half) * (za - half));
        const double r2 = std::sqrt(d2 + (za + half) * (za + half));
        const cplx field = green(r1) + green(r2) - 2.0 * c * green(r0);
        return field * std::sin(k * (half - std::abs(z)));
    };

    // Split at the current kink and wherever a distance reaches its minimum.
    std::vector<double> breaks{-half, half, 0.0, -vertical, -vertical - half, -vertical + half};
    breaks.erase(std::remove_if(breaks.begin(), breaks.end(), [&](double b) { return b < -half || b > half; }),
                 breaks.end());
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end(),
                             [&](double a, double b) { return std::abs(a - b) < 1e-15 * length; }),
                 breaks.end());

    const double tol = abs_tol / std::abs(prefactor) / static_cast<double>(breaks.size() - 1);
    cplx sum = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        sum += quad::integrate(integrand, breaks[i], breaks[i + 1], tol).value;
    }
    return prefactor * sum;
}

BlockTwoPort dipole_medium_between(const ArrayGeometry& geom, int from, int to) {
    geom.validate();
    check_pair(geom, from, to);
    const double dx = std::abs(to - from) * geom.l_x;
    const CMatrix intra = fill_from_table(geom, offset_table(geom, 0.0));
    const CMatrix trans = fill_from_table(geom, offset_table(geom, dx));
    // Rows index layer `to`, columns layer `from`.
    return BlockTwoPort(PortKind::impedance, intra, trans.transpose(), trans, intra);
}

BlockTwoPort dipole_medium(const ArrayGeometry& geom, int pair_index) {
    check_pair_index(geom, pair_index);
    return dipole_medium_between(geom, pair_index - 1, pair_index);
}

namespace serial {

BlockTwoPort dipole_medium_between(const ArrayGeometry& geom, int from, int to) {
    geom.validate();
    check_pair(geom, from, to);
    const Eigen::Index n = geom.elements();
    CMatrix z11(n, n), z22(n, n), z21(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            z11(a, b) = element_impedance(geom, offset_between(geom, from, a, from, b), a == b);
            z22(a, b) = element_impedance(geom, offset_between(geom, to, a, to, b), a == b);
            z21(a, b) = element_impedance(geom, offset_between(geom, to, a, from, b), false);
        }
    }
    CMatrix z12 = z21.transpose();
    return BlockTwoPort(PortKind::impedance, std::move(z11), std::move(z12), std::move(z21), std::move(z22));
}

}  // namespace serial

cplx rs_coefficient(double distance, double cos_chi, double area, double wavelength) {
    if (!(distance > 0)) throw GeometryDegenerate("rs coefficient: zero propagation distance");
    const cplx j(0.0, 1.0);
    const double k = 2.0 * kPi / wavelength;
    return (area * cos_chi / distance) * (1.0 / (2.0 * kPi * distance) - j / wavelength) *
           std::exp(j * (k * distance));
}

BlockTwoPort rs_medium(const ArrayGeometry& geom, int pair_index, double patch_area) {
    geom.validate();
    check_pair_index(geom, pair_index);
    const double area = patch_area > 0 ? patch_area : geom.dipole_length * geom.dipole_length;
    const Eigen::Index n = geom.elements();
    CMatrix s21(n, n);
    const int from = pair_index - 1;
    const int to = pair_index;
#pragma omp parallel for schedule(static)
    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index e = 0; e < n; ++e) {
            const Position pt = geom.position(to, m);
            const Position pf = geom.position(from, e);
            const double dx = pt.x - pf.x;
            // d >= l_x > 0 after validate().
            const double d = std::sqrt(dx * dx + (pt.y - pf.y) * (pt.y - pf.y) + (pt.z - pf.z) * (pt.z - pf.z));
            s21(m, e) = rs_coefficient(d, std::abs(dx) / d, area, geom.wavelength);
        }
    }
    CMatrix s12 = s21.transpose();
    return BlockTwoPort(PortKind::scattering, CMatrix::Zero(n, n), std::move(s12), std::move(s21),
                        CMatrix::Zero(n, n));
}

std::vector<std::string> rs_validity_warnings(const ArrayGeometry& geom, double patch_area) {
    const double area = patch_area > 0 ? patch_area : geom.dipole_length * geom.dipole_length;
    const double lambda2 = geom.wavelength * geom.wavelength;
    std::vector<std::string> out;
    if (area < lambda2) {
        std::ostringstream os;
        os << "Rayleigh-Sommerfeld model: element area " << area / lambda2
           << " lambda^2 is not much larger than lambda^2";
        out.push_back(os.str());
    }
    if (geom.l_x < 2.0 * geom.wavelength) {
        std::ostringstream os;
        os << "Rayleigh-Sommerfeld model: layer spacing " << geom.l_x / geom.wavelength
           << " lambda is within the near field (< 2 lambda)";
        out.push_back(os.str());
    }
    return out;
}

BlockTwoPort medium_scattering(const ArrayGeometry& geom, int pair_index, const MediumProvider& provider,
                               FactorTally* tally) {
    switch (provider.kind) {
        case MediumKind::dipole: return z_to_s(dipole_medium(geom, pair_index), provider.z0, tally);
        case MediumKind::rayleigh_sommerfeld: return rs_medium(geom, pair_index, provider.patch_area);
    }
    throw std::invalid_argument("unknown medium provider");
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5173u};
    return std::mt19937_64(seq);
}

CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    CMatrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double re = normal(rng);
            const double im = normal(rng);
            m(r, c) = cplx(re, im);
        }
    }
    return m;
}

ExternalSegments external_segments(Eigen::Index elements, int users, std::uint64_t seed, std::uint64_t stream) {
    if (users < 1) throw std::invalid_argument("external_segments: K must be >= 1");
    if (elements < 1) throw std::invalid_argument("external_segments: N must be >= 1");
    auto rng = make_rng(seed, stream);
    ExternalSegments seg;
    seg.h_it = complex_gaussian(elements, users, rng);
    seg.h_ri = complex_gaussian(users, elements, rng);
    return seg;
}

}  // namespace simstack
