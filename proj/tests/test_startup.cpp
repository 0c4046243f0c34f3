#include <gtest/gtest.h>

#include "support.hpp"
#include "wgi/scenario_io.hpp"
#include "wgi/startup.hpp"

using namespace wgi;
using wgi::test::rel;
using wgi::test::uniform;

namespace {
constexpr double kC = 48e-6;
const double kMuMax = 1 / std::numbers::sqrt2;
}  // namespace

TEST(StartupMu, ChargedGivesZero) {
    const StartupParams p{69.4, 0.5 * kC * 300 * 300};
    EXPECT_EQ(startup_mu({3, 1}, 300.0, kC, p, kMuMax), SpaceVector{});
}

TEST(StartupMu, ZeroCurrentGivesZero) {
    const StartupParams p{69.4, 0.5 * kC * 300 * 300};
    EXPECT_EQ(startup_mu({}, 230.0, kC, p, kMuMax), SpaceVector{});
}

TEST(StartupMu, DeficitExample) {
    const StartupParams p{69.4, 0.5 * kC * 300 * 300};
    const SpaceVector mu = startup_mu({1, 0}, 230.0, kC, p, kMuMax);
    EXPECT_NEAR(0.5 * kC * (300.0 * 300 - 230.0 * 230), 0.8904, 1e-4);
    EXPECT_NEAR(mu.real(), -69.4 * 0.8904 / 230.0, 1e-4);
    EXPECT_NEAR(mu.real(), -0.2687, 1e-4);
    EXPECT_EQ(mu.imag(), 0.0);
}

TEST(StartupMu, BridgeActsAsResistor) {
    // v_c mu = -R_eq i with R_eq = kappa (E_c* - E_c) >= 0 while charging
    for (int n = 0; n < 500; ++n) {
        const StartupParams p{uniform(1, 100), 0.5 * kC * 300 * 300};
        const double v_c = uniform(200, 299);
        const SpaceVector i = wgi::test::random_vector(0.5);
        const SpaceVector mu = startup_mu(i, v_c, kC, p, 10.0);
        const SpaceVector r_eq = -v_c * mu / i;
        EXPECT_NEAR(r_eq.imag(), 0.0, 1e-9 * std::abs(r_eq));
        EXPECT_GE(r_eq.real(), 0.0);
        EXPECT_LE(std::abs(startup_mu(i, v_c, kC, p, kMuMax)), kMuMax * (1 + 1e-15));
    }
}

TEST(StartupMu, DivisionGuard) { EXPECT_THROW(startup_mu({1, 0}, 0.1, kC, {69.4, 2.16}, kMuMax), NonPhysicalState); }

TEST(Kappa, NominalValue) {
    const double V_b = std::numbers::sqrt3 * 94.0;
    EXPECT_NEAR(design_kappa(25e-3, 100.0, V_b), 4.6e4 / (0.025 * V_b * V_b), 1e-9);
    EXPECT_NEAR(design_kappa(25e-3, 100.0, 162.8), 69.4, 0.05);
}

TEST(Kappa, QuadraticInChargingResistor) {
    EXPECT_DOUBLE_EQ(design_kappa(25e-3, 200.0, 162.8), 4 * design_kappa(25e-3, 100.0, 162.8));
}

TEST(Kappa, DesignIdentity) {
    for (int n = 0; n < 200; ++n) {
        const double tau = uniform(1e-3, 0.1), R = uniform(1, 1000), V = uniform(10, 1000);
        EXPECT_LE(rel(design_kappa(tau, R, V) * V * V / (R * R) * tau, 4.6), 1e-12);
    }
}

TEST(Kappa, RejectsNonPositiveInputs) {
    EXPECT_THROW(design_kappa(0, 100, 162.8), InvalidTarget);
    EXPECT_THROW(design_kappa(0.025, -1, 162.8), InvalidTarget);
}

class StartupRun : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        const Scenario sc = *builtin_scenario("paper-startup");
        trace_ = new Trace(run(sc));
        r_ch_ = sc.plant.R_ch;
        v_c_ref_ = sc.controller.v_c_ref;
        C_ = sc.plant.C;
    }
    static void TearDownTestSuite() { delete trace_; }
    static inline Trace* trace_ = nullptr;
    static inline double r_ch_ = 0, v_c_ref_ = 0, C_ = 0;
};

TEST_F(StartupRun, CurrentBoundedByChargingResistor) {
    int n = 0;
    for (const TraceRow& r : *trace_) {
        if (r.mode != Mode::Startup) continue;
        ++n;
        EXPECT_LE(std::abs(r.i), std::abs(r.v_p) / r_ch_) << "t=" << r.t;
    }
    EXPECT_GT(n, 400);
}

TEST_F(StartupRun, DcLinkSettlesWithinTarget) {
    double entry = -1, reached = -1;
    for (const TraceRow& r : *trace_) {
        if (r.mode != Mode::Startup) continue;
        if (entry < 0) entry = r.t;
        if (reached < 0 && std::abs(r.v_c - v_c_ref_) <= 0.01 * v_c_ref_) reached = r.t;
    }
    ASSERT_GE(reached, 0.0);
    EXPECT_LE(reached - entry, 25e-3);
}

TEST_F(StartupRun, EnergyNonDecreasingWhileBelowReference) {
    const double E_ref = 0.5 * C_ * v_c_ref_ * v_c_ref_;
    double prev = -1;
    for (const TraceRow& r : *trace_) {
        if (r.mode != Mode::Startup) continue;
        const double E = 0.5 * C_ * r.v_c * r.v_c;
        if (prev >= 0 && prev < E_ref) EXPECT_GE(E, prev * (1 - 1e-12)) << "t=" << r.t;
        prev = E;
    }
}
