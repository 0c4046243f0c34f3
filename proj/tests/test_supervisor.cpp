#include <gtest/gtest.h>

#include "support.hpp"
#include "wgi/scenario_io.hpp"
#include "wgi/supervisor.hpp"

using namespace wgi;

namespace {

// controllers must never be handed the true PCC voltage
template <class T>
concept CarriesPccVoltage = requires(T m) { m.v_p; } || requires(T m) { m.v_pcc; };
static_assert(!CarriesPccVoltage<Measurements>);

ControllerConfig nominal_config() {
    return make_controller_config(*builtin_scenario("paper-normal"));
}

const Trace& normal_trace() {
    static const Trace tr = run(wgi::test::truncated("paper-normal", 0.15, 0.2));
    return tr;
}

}  // namespace

TEST(Modes, NamesRoundTrip) {
    for (Mode m : {Mode::Idle, Mode::Precharge, Mode::Startup, Mode::Run}) EXPECT_EQ(parse_mode(mode_name(m)), m);
    EXPECT_FALSE(parse_mode("BOOST").has_value());
}

TEST(Modes, SwitchCommands) {
    for (Mode m : {Mode::Idle, Mode::Precharge, Mode::Startup, Mode::Run}) {
        ControllerOutputs o;
        apply_switches(m, o);
        EXPECT_EQ(o.sw2, m == Mode::Run);
        EXPECT_EQ(o.sw1, m != Mode::Idle);
        EXPECT_EQ(o.inverter_active, m == Mode::Startup || m == Mode::Run);
    }
}

TEST(Modes, OutOfOrderRequestThrows) {
    const ControllerConfig cfg = nominal_config();
    ControllerState s;
    EXPECT_THROW(request_mode(s, Mode::Run, 0.0, cfg), SequenceError);
    EXPECT_THROW(request_mode(s, Mode::Idle, 0.0, cfg), SequenceError);
    s = request_mode(s, Mode::Precharge, 0.0, cfg);
    EXPECT_THROW(request_mode(s, Mode::Precharge, 0.01, cfg), SequenceError);
    s = request_mode(s, Mode::Startup, 0.05, cfg);
    EXPECT_EQ(s.mode.tag, Mode::Startup);
    EXPECT_EQ(s.mode.entry_time, 0.05);
    EXPECT_DOUBLE_EQ(s.startup.E_c_ref, 0.5 * cfg.plant.C * cfg.v_c_ref * cfg.v_c_ref);
    EXPECT_EQ(s.startup.kappa, cfg.gains.kappa);
    EXPECT_THROW(request_mode(s, Mode::Precharge, 0.06, cfg), SequenceError);
}

TEST(ControlStep, IdleIgnoresInputs) {
    const ControllerConfig cfg = nominal_config();
    const DiscreteObserver d = discretize_observer(cfg.gains.observer, cfg.plant.L, cfg.plant.omega, cfg.Ts);
    const ControllerState s;
    for (int n = 0; n < 50; ++n) {
        Measurements m;
        m.t = n * cfg.Ts;
        m.i = wgi::test::random_vector(10);
        m.v_c = wgi::test::uniform(0, 400);
        m.p_i = wgi::test::uniform(0, 2000);
        const ControlStepResult r = control_step(s, m, cfg, d);
        EXPECT_EQ(r.outputs.mu, SpaceVector{});
        EXPECT_FALSE(r.outputs.sw1 || r.outputs.sw2 || r.outputs.inverter_active);
        EXPECT_FALSE(r.next.observer.enabled);
        EXPECT_EQ(r.next.mode.tag, Mode::Idle);
        EXPECT_EQ(r.next.energy.p_ref, s.energy.p_ref);
        EXPECT_EQ(r.next.droop.x_vp, s.droop.x_vp);
        EXPECT_EQ(r.next.cla.x_i, s.cla.x_i);
    }
}

TEST(ControlStep, RunAtOperatingPointAppliesRotationFeedforward) {
    const ControllerConfig cfg = nominal_config();
    const DiscreteObserver d = discretize_observer(cfg.gains.observer, cfg.plant.L, cfg.plant.omega, cfg.Ts);
    const double V = cfg.V_p_ref, p = 600.0;
    ControllerState s;
    s.mode = {Mode::Run, 0.1};
    s.observer = {SpaceVector(p / V, 0.0), SpaceVector(V, 0.0), true};
    s.vp_filtered = V;
    s.energy.p_ref = p;
    Measurements m;
    m.t = 0.2;
    m.i = {p / V, 0.0};
    m.v_c = cfg.v_c_ref;
    m.p_i = p;
    const ControlStepResult r = control_step(s, m, cfg, d);
    const SpaceVector want = (SpaceVector(V, 0.0) + j * cfg.plant.omega * cfg.plant.L * m.i) / m.v_c;
    EXPECT_LE(std::abs(r.outputs.mu - want), 1e-9);
    EXPECT_FALSE(r.outputs.sat_i);
    EXPECT_FALSE(r.outputs.sat_mu);
    EXPECT_FALSE(r.outputs.guard_hold);
    EXPECT_EQ(r.outputs.q_ref, 0.0);
    EXPECT_DOUBLE_EQ(r.outputs.p_i_max, cfg.i_max * V);
    EXPECT_TRUE(r.outputs.sw2);
}

TEST(ControlStep, LowEstimateHoldsPreviousModulation) {
    const ControllerConfig cfg = nominal_config();
    const DiscreteObserver d = discretize_observer(cfg.gains.observer, cfg.plant.L, cfg.plant.omega, cfg.Ts);
    ControllerState s;
    s.mode = {Mode::Run, 0.1};
    s.observer = {SpaceVector{}, SpaceVector(1.0, 0.0), true};
    s.vp_filtered = 1.0;
    s.last_mu = {0.3, 0.1};
    Measurements m;
    m.v_c = 300.0;
    const ControlStepResult r = control_step(s, m, cfg, d);
    EXPECT_TRUE(r.outputs.guard_hold);
    EXPECT_EQ(r.outputs.mu, SpaceVector(0.3, 0.1));
}

TEST(Timeline, TimedScheduleFollowsEvents) {
    const Trace& tr = normal_trace();
    for (const TraceRow& r : tr) {
        const Mode want = r.t < 0.05 - 1e-9 ? Mode::Precharge : r.t < 0.1 - 1e-9 ? Mode::Startup : Mode::Run;
        ASSERT_EQ(r.mode, want) << "t=" << r.t;
    }
}

TEST(Timeline, ModesNeverRegress) {
    for (const char* name : {"paper-startup", "paper-normal", "paper-sag-swell"}) {
        const Trace tr = run(*builtin_scenario(name));
        for (std::size_t k = 1; k < tr.size(); ++k)
            ASSERT_GE(static_cast<int>(tr[k].mode), static_cast<int>(tr[k - 1].mode)) << name << " t=" << tr[k].t;
    }
}

TEST(Timeline, ModulationWithinLimitEverywhere) {
    const Scenario sc = *builtin_scenario("paper-sag-swell");
    const Trace tr = run(sc);
    for (const TraceRow& r : tr) ASSERT_LE(std::abs(r.mu), sc.plant.mu_max * (1 + 1e-12)) << "t=" << r.t;
}

TEST(Timeline, ThresholdTransitions) {
    Scenario sc = *builtin_scenario("paper-normal");
    sc.controller.transitions = TransitionPolicy::Threshold;
    sc.events = {{0.0, EventKind::SetMode, static_cast<double>(Mode::Precharge)}};
    sc.duration = 0.4;
    const Trace tr = run(sc);
    double t_startup = -1, t_run = -1;
    for (const TraceRow& r : tr) {
        if (t_startup < 0 && r.mode == Mode::Startup) t_startup = r.t;
        if (t_run < 0 && r.mode == Mode::Run) {
            t_run = r.t;
            EXPECT_LE(std::abs(r.v_c - sc.controller.v_c_ref), 0.01 * sc.controller.v_c_ref);
        }
    }
    ASSERT_GT(t_startup, 0.0);
    ASSERT_GT(t_run, t_startup);
    EXPECT_GE(t_run, 50e-3);  // observer enabled at PRECHARGE needs 50 ms before RUN
    EXPECT_TRUE(summarize(tr, sc.control_period, sc.controller.v_c_ref).finite);
    EXPECT_NEAR(tr.back().v_c, sc.controller.v_c_ref, 0.01 * sc.controller.v_c_ref);
}

TEST(Observer, StartsAtPrechargeByDefault) {
    const Trace& tr = normal_trace();
    EXPECT_GT(std::abs(tr[400].v_p_hat), 0.0);
}

TEST(Observer, CanBeDeferredToStartup) {
    Scenario sc = wgi::test::truncated("paper-normal", 0.1, 0.12);
    sc.controller.observer_start = ObserverStart::AtStartup;
    const Trace tr = run(sc);
    for (const TraceRow& r : tr)
        if (r.mode == Mode::Precharge) ASSERT_EQ(r.v_p_hat, SpaceVector{});
    EXPECT_GT(std::abs(tr.back().v_p_hat), 100.0);
}
