#include <gtest/gtest.h>

#include <cmath>

#include "simstack/medium.hpp"
#include "simstack/quadrature.hpp"

using namespace simstack;

namespace {

constexpr double kLambda = 1.0;

ArrayGeometry small_geometry(int n_y = 3, int n_z = 2) {
    ArrayGeometry g;
    g.n_y = n_y;
    g.n_z = n_z;
    g.layers = 3;
    g.wavelength = kLambda;
    g.l_x = 0.4;
    g.l_y = 0.5;
    g.l_z = 0.5;
    g.dipole_length = 0.25;
    g.dipole_radius = 0.002;
    return g;
}

}  // namespace

TEST(Quadrature, IntegratesOscillatoryComplexFunction) {
    const auto r = quad::integrate([](double x) { return std::exp(std::complex<double>(0, x)); }, 0.0, kPi, 1e-12);
    EXPECT_NEAR(r.value.real(), 0.0, 1e-12);
    EXPECT_NEAR(r.value.imag(), 2.0, 1e-12);
}

TEST(Quadrature, HandlesNearSingularPeak) {
    // Lorentzian with width 1e-3: integral over [-1, 1] is 2 atan(1000) / 1e-3.
    const double w = 1e-3;
    const auto r = quad::integrate([w](double x) { return std::complex<double>(1.0 / (x * x + w * w), 0); }, -1, 1,
                                   1e-8);
    EXPECT_NEAR(r.value.real(), 2.0 * std::atan(1.0 / w) / w, 1e-7);
}

TEST(DipoleImpedance, HalfWaveSelfImpedance) {
    const cplx z = dipole_mutual_impedance(1e-5, 0.0, 0.5, kLambda);
    EXPECT_NEAR(z.real(), 73.13, 0.1);
    EXPECT_NEAR(z.imag(), 42.54, 0.3);
}

TEST(DipoleImpedance, HalfWaveSideBySideTable) {
    // Classic induced-EMF values for parallel half-wave dipoles.
    const cplx z_half = dipole_mutual_impedance(0.5, 0.0, 0.5, kLambda);
    EXPECT_NEAR(z_half.real(), -12.5, 0.2);
    EXPECT_NEAR(z_half.imag(), -29.9, 0.2);
    const cplx z_one = dipole_mutual_impedance(1.0, 0.0, 0.5, kLambda);
    EXPECT_NEAR(z_one.real(), 4.0, 0.2);
    EXPECT_NEAR(z_one.imag(), 17.7, 0.2);
}

TEST(DipoleImpedance, MutualTermDecaysWithDistance) {
    double previous = std::numeric_limits<double>::infinity();
    for (double d : {1.0, 2.0, 5.0, 10.0}) {
        const double m = std::abs(dipole_mutual_impedance(d, 0.0, 0.25, kLambda));
        EXPECT_LT(m, previous) << "d = " << d;
        previous = m;
    }
    // Far field: |Z| d approaches a constant.
    const double a = std::abs(dipole_mutual_impedance(20.0, 0.0, 0.25, kLambda)) * 20.0;
    const double b = std::abs(dipole_mutual_impedance(40.0, 0.0, 0.25, kLambda)) * 40.0;
    EXPECT_NEAR(a / b, 1.0, 0.01);
}

TEST(DipoleImpedance, SymmetricInVerticalOffset) {
    const cplx up = dipole_mutual_impedance(0.3, 0.4, 0.25, kLambda);
    const cplx down = dipole_mutual_impedance(0.3, -0.4, 0.25, kLambda);
    EXPECT_NEAR(std::abs(up - down), 0.0, 1e-8);
}

TEST(DipoleImpedance, ScalesWithWavelength) {
    const cplx a = dipole_mutual_impedance(0.3, 0.2, 0.25, 1.0);
    const cplx b = dipole_mutual_impedance(0.3e-2, 0.2e-2, 0.25e-2, 1e-2);
    EXPECT_NEAR(std::abs(a - b), 0.0, 1e-6);
}

TEST(DipoleMedium, BlocksAreReciprocal) {
    const auto g = small_geometry();
    const auto z = dipole_medium(g, 1);
    EXPECT_EQ(z.kind(), PortKind::impedance);
    EXPECT_EQ(z.n(), 6);
    EXPECT_LT((z.b11() - z.b11().transpose()).norm(), 1e-12);
    EXPECT_LT((z.b12() - z.b21().transpose()).norm(), 1e-12);
    EXPECT_EQ(z.b11(), z.b22());
    for (Eigen::Index i = 0; i < z.n(); ++i) {
        EXPECT_GT(z.b11()(i, i).real(), 0.0);  // radiation resistance
    }
}

TEST(DipoleMedium, OffsetTableMatchesDirectFill) {
    const auto g = small_geometry();
    const auto fast = dipole_medium_between(g, 0, 1);
    const auto slow = serial::dipole_medium_between(g, 0, 1);
    EXPECT_LT((fast.assemble() - slow.assemble()).norm(), 1e-12);
}

TEST(DipoleMedium, IsDeterministic) {
    const auto g = small_geometry();
    EXPECT_EQ(dipole_medium(g, 1).assemble(), dipole_medium(g, 1).assemble());
}

TEST(DipoleMedium, OverlappingCollinearElementsAreDegenerate) {
    auto g = small_geometry();
    g.l_z = 0.1;  // shorter than the dipole length
    EXPECT_THROW(dipole_medium(g, 1), GeometryDegenerate);
}

TEST(DipoleMedium, RejectsBadPairIndex) {
    const auto g = small_geometry();
    EXPECT_THROW(dipole_medium(g, 0), std::invalid_argument);
    EXPECT_THROW(dipole_medium(g, 3), std::invalid_argument);
}

TEST(DipoleMedium, ScatteringIsSymmetric) {
    const auto g = small_geometry();
    MediumProvider provider;
    const auto s = medium_scattering(g, 1, provider);
    EXPECT_LT(symmetric_residual(s), 1e-12);
}

TEST(RayleighSommerfeld, OnAxisMagnitudeAndFarFieldPhase) {
    const double area = 0.0625, d = 3.0;
    const cplx c = rs_coefficient(d, 1.0, area, kLambda);
    const double expected = area / d * std::hypot(1.0 / (2 * kPi * d), 1.0 / kLambda);
    EXPECT_NEAR(std::abs(c), expected, 1e-14);
    const double far = 1e4;
    const cplx cf = rs_coefficient(far, 1.0, area, kLambda) * std::exp(cplx(0, -2 * kPi * far / kLambda));
    EXPECT_NEAR(std::arg(cf), -kPi / 2, 1e-4);
}

TEST(RayleighSommerfeld, ObliquityScalesCoefficient) {
    const cplx a = rs_coefficient(2.0, 1.0, 0.1, kLambda);
    const cplx b = rs_coefficient(2.0, 0.5, 0.1, kLambda);
    EXPECT_NEAR(std::abs(b - 0.5 * a), 0.0, 1e-15);
    EXPECT_THROW(rs_coefficient(0.0, 1.0, 0.1, kLambda), GeometryDegenerate);
}

TEST(RayleighSommerfeld, MediumHasNoReflection) {
    const auto g = small_geometry();
    const auto s = rs_medium(g, 1);
    EXPECT_EQ(s.kind(), PortKind::scattering);
    EXPECT_EQ(s.b11().norm(), 0.0);
    EXPECT_EQ(s.b22().norm(), 0.0);
    EXPECT_LT((s.b12() - s.b21().transpose()).norm(), 1e-15);
    // Element 0 to element 0 is on axis at distance l_x.
    EXPECT_NEAR(std::abs(s.b21()(0, 0) - rs_coefficient(g.l_x, 1.0, g.dipole_length * g.dipole_length, kLambda)), 0.0,
                1e-14);
}

TEST(RayleighSommerfeld, WarnsOutsideValidity) {
    auto g = small_geometry();
    EXPECT_EQ(rs_validity_warnings(g).size(), 2u);
    g.l_x = 3.0;
    EXPECT_EQ(rs_validity_warnings(g, 2.0).size(), 0u);
}

TEST(Geometry, PositionsFollowElementOrdering) {
    const auto g = small_geometry(3, 2);
    const Position p = g.position(2, 4);  // iy = 1, iz = 1
    EXPECT_DOUBLE_EQ(p.x, 0.8);
    EXPECT_DOUBLE_EQ(p.y, 0.5);
    EXPECT_DOUBLE_EQ(p.z, 0.5);
}

TEST(Geometry, ValidateReportsEveryProblem) {
    ArrayGeometry g;
    try {
        g.validate();
        FAIL() << "expected invalid_argument";
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        for (const char* field : {"wavelength", "l_x", "l_y", "l_z", "dipole_length", "dipole_radius"}) {
            EXPECT_NE(msg.find(field), std::string::npos) << field;
        }
    }
}

TEST(Geometry, LayerSweepKeepsSeventyTwoElements) {
    const double lambda = wavelength_from_frequency(28e9);
    for (int layers : {2, 3, 4, 6}) {
        const auto g = layer_sweep_geometry(layers, 28e9);
        EXPECT_EQ(g.elements() * layers, 72);
        EXPECT_EQ(g.n_y, 6);
        EXPECT_NEAR(g.l_x, lambda / (12.0 * (layers - 1)), 1e-15);
        EXPECT_NEAR(g.l_y, lambda / 2, 1e-15);
        EXPECT_NEAR(g.l_z, 36.0 * lambda / (2.0 * static_cast<double>(g.elements())), 1e-15);
    }
    EXPECT_THROW(layer_sweep_geometry(5, 28e9), std::invalid_argument);
}

TEST(Geometry, ConvergenceGeometryUsesQuarterWaveDipoles) {
    const auto g = convergence_geometry(28e9, 0.5, 1.0 / 3, 1.0 / 3);
    EXPECT_EQ(g.elements(), 36);
    EXPECT_EQ(g.layers, 3);
    EXPECT_NEAR(g.dipole_length, g.wavelength / 4, 1e-15);
    EXPECT_NEAR(g.dipole_radius, g.wavelength / 500, 1e-15);
    EXPECT_NEAR(g.wavelength, 0.0107068735, 1e-9);
}

TEST(Fading, UnitVarianceCircularEntries) {
    auto rng = make_rng(42);
    const CMatrix m = complex_gaussian(1000, 100, rng);
    const double var = m.squaredNorm() / static_cast<double>(m.size());
    EXPECT_NEAR(var, 1.0, 0.02);
    EXPECT_NEAR(m.real().squaredNorm() / static_cast<double>(m.size()), 0.5, 0.01);
    EXPECT_NEAR(std::abs(m.mean()), 0.0, 0.01);
    // Circular symmetry: E[h^2] = 0.
    EXPECT_NEAR(std::abs(m.array().square().mean()), 0.0, 0.02);
}

TEST(Fading, SeedAndStreamDetermineSegments) {
    const auto a = external_segments(8, 2, 5, 3);
    const auto b = external_segments(8, 2, 5, 3);
    const auto c = external_segments(8, 2, 5, 4);
    EXPECT_EQ(a.h_it, b.h_it);
    EXPECT_EQ(a.h_ri, b.h_ri);
    EXPECT_NE(a.h_it, c.h_it);
    EXPECT_EQ(a.h_it.rows(), 8);
    EXPECT_EQ(a.h_ri.rows(), 2);
    EXPECT_THROW(external_segments(8, 0, 5), std::invalid_argument);
}
