#include "rejectsched/energy_min.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

namespace rejectsched::emin {
namespace {

using testing::make_instance;

Job deadline_job(JobId id, Time r, Time d, std::vector<double> proc) {
    Job j = testing::make_job(id, r, std::move(proc));
    j.deadline = d;
    return j;
}

Grids grid(std::vector<double> speeds, double step) {
    Grids g;
    g.speeds = std::move(speeds);
    g.time_step = step;
    return g;
}

TEST(EnumerateStrategies, HandExample) {
    const auto s = enumerate_strategies(deadline_job(0, 0, 1, {1}), 1, grid({1, 2}, 0.5));
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0].start(0.5), 0.0);
    EXPECT_EQ(s[0].speed, 1.0);
    EXPECT_EQ(s[0].end(0.5), 1.0);
    EXPECT_EQ(s[1].start(0.5), 0.0);
    EXPECT_EQ(s[1].speed, 2.0);
    EXPECT_EQ(s[2].start(0.5), 0.5);
    EXPECT_EQ(s[2].speed, 2.0);
    EXPECT_EQ(s[2].end(0.5), 1.0);
}

TEST(EnumerateStrategies, MatchesTripleLoop) {
    const Grids g = grid({0.5, 1, 2, 4}, 0.25);
    const Job j = deadline_job(3, 0.3, 4.0, {2.0, 1.0});
    std::vector<std::tuple<MachineIndex, long, double>> expect;
    for (MachineIndex i = 0; i < 2; ++i)
        for (long tau = 0; tau < 100; ++tau)
            for (double v : g.speeds) {
                const double start = tau * 0.25, end = start + j.p(i) / v;
                if (start >= 0.3 && end <= 4.0 + 1e-12) expect.emplace_back(i, tau, v);
            }
    const auto got = enumerate_strategies(j, 2, g);
    ASSERT_EQ(got.size(), expect.size());
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_EQ(got[k].key(), expect[k]);
}

TEST(EnumerateStrategies, WindowTooShort) {
    EXPECT_THROW(enumerate_strategies(deadline_job(0, 0, 0.4, {1}), 1, grid({1, 2}, 0.1)), InvalidInput);
}

TEST(EnumerateStrategies, MachinesMultiply) {
    const Grids g = grid({1, 2}, 0.5);
    EXPECT_EQ(enumerate_strategies(deadline_job(0, 0, 2, {1, 1}), 2, g).size(),
              2 * enumerate_strategies(deadline_job(0, 0, 2, {1}), 1, g).size());
}

TEST(EnumerateStrategies, OffGridSpeedsSkipped) {
    const auto s = enumerate_strategies(deadline_job(0, 0, 1, {1}), 1, grid({1, 3}, 0.5));
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].speed, 1.0);
    try {
        enumerate_strategies(deadline_job(0, 0, 1, {1}), 1, grid({3}, 0.5));
        FAIL();
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("compatible time_step"), std::string::npos);
    }
}

TEST(EnumerateStrategies, NeedsDeadline) {
    EXPECT_THROW(enumerate_strategies(testing::make_job(0, 0, {1}), 1, grid({1}, 1)), InvalidInput);
}

TEST(CheckAlignment, SuggestsCoarsestStep) {
    const auto inst = make_instance(Model::EnergyDeadline, 1, {deadline_job(0, 0, 3, {1}), deadline_job(1, 0, 3, {1.5})});
    const auto rep = check_alignment(inst, grid({1, 2}, 0.5));
    EXPECT_EQ(rep.misaligned.size(), 1u);  // 1.5 / 2
    EXPECT_NEAR(rep.suggested_step, 0.25, 1e-12);
    EXPECT_TRUE(check_alignment(inst, grid({1, 2}, 0.25)).ok());
}

TEST(Grids, Validation) {
    EXPECT_THROW(validate_grids(grid({}, 1)), InvalidInput);
    EXPECT_THROW(validate_grids(grid({2, 1}, 1)), InvalidInput);
    EXPECT_THROW(validate_grids(grid({1}, 0)), InvalidInput);
    Grids g = grid({1, 2}, 1);
    g.eps_disc = 0.5;
    const auto P = power_law(2.0);
    EXPECT_THROW(validate_grids(g, &P), InvalidInput);  // ratio 2 > 1.5
    g.eps_disc = 1.0;
    EXPECT_NO_THROW(validate_grids(g, &P));
}

TEST(Grids, GeometricSpeedsMeetTolerance) {
    Grids g;
    g.speeds = geometric_speeds(0.5, 4.0, 3.0, 0.1);
    g.time_step = 1;
    g.eps_disc = 0.1;
    const auto P = power_law(3.0);
    EXPECT_NO_THROW(validate_grids(g, &P));
    EXPECT_EQ(g.speeds.front(), 0.5);
    EXPECT_EQ(g.speeds.back(), 4.0);
}

TEST(Grids, JsonRoundTrip) {
    Grids g = grid({1, 2, 4}, 0.125);
    g.eps_disc = 1.5;
    const auto back = grids_from_json(Json::parse(to_json(g).dump()));
    EXPECT_EQ(back.speeds, g.speeds);
    EXPECT_EQ(back.time_step, g.time_step);
    EXPECT_EQ(back.eps_disc, g.eps_disc);
    EXPECT_THROW(grids_from_json(Json::parse(R"({"speeds":[1]})")), InvalidInput);
}

TEST(MarginalEnergy, Examples) {
    const auto P = power_law(2.0);
    LoadProfile empty(1);
    const Strategy s{0, 0, 0, 2, 2.0};
    EXPECT_DOUBLE_EQ(marginal_energy(s, empty, P, 1.0), 8.0);
    LoadProfile busy(1);
    busy.add({0, 9, 0, 2, 1.0});
    EXPECT_DOUBLE_EQ(marginal_energy(s, busy, P, 1.0), 16.0);
    EXPECT_EQ(marginal_energy({0, 0, 0, 2, 0.0}, busy, P, 1.0), 0.0);
}

TEST(GreedyAssign, SlowestFeasibleSpeed) {
    const auto inst = make_instance(Model::EnergyDeadline, 1, {deadline_job(0, 0, 3, {3})}, 2.0);
    const auto r = greedy_assign(inst, grid({1, 2}, 0.5), {power_law(2.0)}, {1.0, 0.0});
    EXPECT_EQ(r.chosen.at(0).speed, 1.0);
    EXPECT_DOUBLE_EQ(r.total_energy, 3.0);
}

TEST(GreedyAssign, DisjointWindowsAdd) {
    const auto one = make_instance(Model::EnergyDeadline, 1, {deadline_job(0, 0, 2, {1})}, 2.0);
    const auto two =
        make_instance(Model::EnergyDeadline, 1, {deadline_job(0, 0, 2, {1}), deadline_job(1, 5, 7, {1})}, 2.0);
    const Grids g = grid({1, 2}, 0.5);
    const auto a = greedy_assign(one, g, {power_law(2.0)}, {1.0, 0.0});
    const auto b = greedy_assign(two, g, {power_law(2.0)}, {1.0, 0.0});
    EXPECT_DOUBLE_EQ(b.total_energy, 2.0 * a.total_energy);
}

TEST(GreedyAssign, ForcedOverlapStacksSpeeds) {
    const auto inst =
        make_instance(Model::EnergyDeadline, 1, {deadline_job(0, 0, 1, {1}), deadline_job(1, 0, 1, {1})}, 2.0);
    const auto r = greedy_assign(inst, grid({1}, 0.5), {power_law(2.0)}, {1.0, 0.0});
    EXPECT_DOUBLE_EQ(r.total_energy, 4.0);
    EXPECT_DOUBLE_EQ(r.load.at(0, 0), 2.0);
    // The second job saw the first one's load.
    EXPECT_DOUBLE_EQ(r.duals.delta.at(1), 3.0);
}

TEST(GreedyAssign, TieBreakLowestMachineThenStartThenSpeed) {
    const auto inst = make_instance(Model::EnergyDeadline, 2, {deadline_job(0, 0, 4, {1, 1})}, 2.0);
    const auto r = greedy_assign(inst, grid({1}, 1.0), {power_law(2.0)}, {1.0, 0.0});
    EXPECT_EQ(r.chosen.at(0).machine, 0u);
    EXPECT_EQ(r.chosen.at(0).first_slot, 0);
}

TEST(GreedyAssign, Errors) {
    const auto flow = make_instance(Model::Flow, 1, {testing::make_job(0, 0, {1})});
    EXPECT_THROW(greedy_assign(flow, grid({1}, 1), {power_law(2.0)}, {1.0, 0.0}), InvalidInput);
    const auto tight = make_instance(Model::EnergyDeadline, 1, {deadline_job(0, 0, 0.25, {1})}, 2.0);
    EXPECT_THROW(greedy_assign(tight, grid({1, 2}, 0.25), {power_law(2.0)}, {1.0, 0.0}), InvalidInput);
    const auto ok = make_instance(Model::EnergyDeadline, 2, {deadline_job(0, 0, 2, {1, 1})}, 2.0);
    EXPECT_THROW(greedy_assign(ok, grid({1}, 1), {power_law(2.0), power_law(2.0), power_law(3.0)}, {1.0, 0.0}),
                 InvalidInput);
}

TEST(Smoothness, LinearPower) {
    const PowerFunction linear{"s", [](double s) { return s; }};
    const double est = smoothness_lambda_estimate(linear, 2000, 3, 0.0);
    EXPECT_LE(est, 1.0 + 1e-12);
    EXPECT_GE(est, 1.0 - 1e-12);
}

TEST(Smoothness, HandWitness) {
    EXPECT_DOUBLE_EQ(smoothness_ratio(power_law(2.0), {1.0}, {1.0}, 0.5), 2.5);
}

// Independent grid search (tests/oracles/gamma_and_smooth.py) puts the
// supremum for s^2, mu = 1/2 at 3 (a = 2b, one term).
TEST(Smoothness, QuadraticEstimate) {
    const double est = smoothness_lambda_estimate(power_law(2.0), 20000, 1, 0.5);
    EXPECT_GE(est, 2.5);
    EXPECT_LE(est, 3.0 + 1e-12);
    EXPECT_LE(est, 4.0);
    EXPECT_THROW(smoothness_lambda_estimate(power_law(2.0), 1, 1, 1.0), InvalidInput);
}

TEST(Smoothness, Deterministic) {
    EXPECT_EQ(smoothness_lambda_estimate(power_law(3.0), 500, 9, 2.0 / 3.0),
              smoothness_lambda_estimate(power_law(3.0), 500, 9, 2.0 / 3.0));
}

TEST(GenRandomEnergy, EveryJobHasAStrategy) {
    const Grids g = grid({1, 2, 4}, 0.125);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        GenParams p;
        p.seed = seed;
        p.n = 6;
        p.m = 2;
        p.p_lo = 0.5;
        p.p_hi = 4.0;
        p.horizon = 10.0;
        const auto inst = gen_random_energy(p, g);
        for (const auto& j : inst.jobs) EXPECT_FALSE(enumerate_strategies(j, inst.machines, g).empty());
        EXPECT_EQ(serialize(inst), serialize(gen_random_energy(p, g)));
    }
}

// ---------------------------------------------------------------------------
// Properties over seeded random instances
// ---------------------------------------------------------------------------

class GreedyProperties : public ::testing::TestWithParam<double> {};

TEST_P(GreedyProperties, Invariants) {
    const double alpha = GetParam();
    const Grids g = grid({1, 2, 4}, 0.125);
    const SmoothParams sp = default_smooth_params(alpha);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        GenParams p;
        p.seed = seed;
        p.n = 1 + seed % 10;
        p.m = 1 + seed % 3;
        p.p_lo = 0.5;
        p.p_hi = 3.0;
        p.horizon = 6.0;
        p.alpha = alpha;
        const auto inst = gen_random_energy(p, g);
        const auto r = greedy_assign(inst, g, {power_law(alpha)}, sp);
        SCOPED_TRACE("seed " + std::to_string(seed));

        for (const auto& j : inst.jobs) {
            const auto& s = r.chosen.at(j.id);
            EXPECT_GE(s.start(g.time_step), j.release - 1e-12);
            EXPECT_LE(s.end(g.time_step), *j.deadline + 1e-12);
            EXPECT_NEAR(s.speed * s.slots * g.time_step, j.p(s.machine), 1e-9);
            for (const auto& sd : r.duals.beta.at(j.id)) EXPECT_LE(r.duals.delta.at(j.id), sd.beta);
        }
        EXPECT_EQ(rebuild_profile(r), r.load);

        double f = 0.0;
        for (double e : r.machine_energy) f += e;
        EXPECT_DOUBLE_EQ(f, r.total_energy);
        const double expect = (1.0 - sp.mu) / sp.lambda * f;
        EXPECT_NEAR(r.duals.objective(), expect, 1e-9 * std::max(1.0, expect));
        for (double gm : r.duals.gamma_m) EXPECT_LE(gm, 0.0);
    }
}

INSTANTIATE_TEST_SUITE_P(Alpha, GreedyProperties, ::testing::Values(2.0, 3.0));

}  // namespace
}  // namespace rejectsched::emin
