#pragma once

#include "rejectsched/energy_min.hpp"
#include "rejectsched/flow_energy.hpp"
#include "rejectsched/flowtime.hpp"
#include "rejectsched/instance_io.hpp"
#include "rejectsched/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace rejectsched::oracle {

// ---------------------------------------------------------------------------
// Exact optima
// ---------------------------------------------------------------------------

namespace detail {

/// Least total flow of the jobs in `mask` run back to back on machine i, each
/// at max(release, previous end); depth-first over orders with pruning.
inline double best_sequence(const Instance& inst, MachineIndex i, unsigned mask) {
    std::vector<const Job*> jobs;
    for (std::size_t k = 0; k < inst.jobs.size(); ++k)
        if (mask >> k & 1u) jobs.push_back(&inst.jobs[k]);
    double best = kInfinity;
    std::vector<bool> used(jobs.size(), false);
    std::function<void(std::size_t, Time, double)> dfs = [&](std::size_t depth, Time now, double cost) {
        if (cost >= best) return;
        if (depth == jobs.size()) {
            best = cost;
            return;
        }
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            if (used[k]) continue;
            const Time end = std::max(now, jobs[k]->release) + jobs[k]->p(i);
            used[k] = true;
            dfs(depth + 1, end, cost + end - jobs[k]->release);
            used[k] = false;
        }
    };
    dfs(0, 0.0, 0.0);
    return best;
}

}  // namespace detail

/// Exact least total flow time over every assignment and every per-machine
/// order, with all jobs scheduled.
inline double brute_force_flow_opt(const Instance& inst, std::size_t cap = 8) {
    const std::size_t n = inst.jobs.size(), m = inst.machines;
    if (n > cap || n > 16) throw InvalidInput("brute_force_flow_opt: too many jobs (" + std::to_string(n) + ")");
    if (m > 3) throw InvalidInput("brute_force_flow_opt: at most 3 machines");
    if (n == 0) return 0.0;
    const unsigned full = (1u << n) - 1u;
    std::vector<std::vector<double>> best(m, std::vector<double>(full + 1, 0.0));
    for (MachineIndex i = 0; i < m; ++i)
        for (unsigned mask = 1; mask <= full; ++mask) best[i][mask] = detail::best_sequence(inst, i, mask);

    double opt = kInfinity;
    std::vector<unsigned> masks(m, 0);
    std::function<void(std::size_t)> assign = [&](std::size_t k) {
        if (k == n) {
            double total = 0.0;
            for (MachineIndex i = 0; i < m; ++i) total += best[i][masks[i]];
            opt = std::min(opt, total);
            return;
        }
        for (MachineIndex i = 0; i < m; ++i) {
            masks[i] |= 1u << k;
            assign(k + 1);
            masks[i] &= ~(1u << k);
        }
    };
    assign(0);
    return opt;
}

/// Exact least energy over all strategy combinations on the grid, depth first
/// with branch and bound on the partial energy (marginals are non-negative for
/// non-decreasing power functions).
inline double brute_force_energy_opt(const Instance& inst, const emin::Grids& grids,
                                     const std::vector<emin::PowerFunction>& powers, double cap = 1e7) {
    if (inst.model != Model::EnergyDeadline) throw InvalidInput("brute_force_energy_opt requires energy_deadline");
    std::vector<emin::PowerFunction> P = powers;
    if (P.size() == 1) P.resize(inst.machines, P.front());
    if (P.size() != inst.machines) throw InvalidInput("one power function per machine required");
    std::vector<std::vector<emin::Strategy>> options;
    double combos = 1.0;
    for (const auto& j : inst.jobs) {
        options.push_back(emin::enumerate_strategies(j, inst.machines, grids));
        combos *= static_cast<double>(options.back().size());
    }
    if (combos > cap) throw InvalidInput("brute_force_energy_opt: too many strategy combinations");

    const double step = grids.time_step;
    emin::LoadProfile load(inst.machines);
    std::vector<std::vector<double>> rows(inst.machines);
    double best = kInfinity;
    std::function<void(std::size_t, double)> dfs = [&](std::size_t k, double energy) {
        if (energy >= best) return;
        if (k == options.size()) {
            best = energy;
            return;
        }
        std::vector<std::pair<double, const emin::Strategy*>> order;
        for (const auto& s : options[k]) {
            double e = 0.0;
            const auto& row = rows[s.machine];
            for (long t = s.first_slot; t < s.first_slot + s.slots; ++t) {
                const double u = static_cast<std::size_t>(t) < row.size() ? row[static_cast<std::size_t>(t)] : 0.0;
                e += (P[s.machine](u + s.speed) - P[s.machine](u)) * step;
            }
            order.emplace_back(e, &s);
        }
        std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [e, s] : order) {
            auto& row = rows[s->machine];
            const auto end = static_cast<std::size_t>(s->first_slot + s->slots);
            if (row.size() < end) row.resize(end, 0.0);
            std::vector<double> saved(row.begin() + s->first_slot, row.begin() + static_cast<long>(end));
            for (std::size_t t = static_cast<std::size_t>(s->first_slot); t < end; ++t) row[t] += s->speed;
            dfs(k + 1, energy + e);
            std::copy(saved.begin(), saved.end(), row.begin() + s->first_slot);
        }
    };
    dfs(0, 0.0);
    return best;
}

inline double brute_force_energy_opt(const Instance& inst, const emin::Grids& grids, double cap = 1e7) {
    return brute_force_energy_opt(inst, grids, {emin::power_law(inst.alpha.value_or(2.0))}, cap);
}

// ---------------------------------------------------------------------------
// Dual lower bounds
// ---------------------------------------------------------------------------

/// Sum of lambda_j minus the integrals of beta_i, after checking feasibility.
inline double dual_lower_bound(const flow::FlowResult& res) {
    const auto rep = verify::verify_flow_duals(res, res.epsilon);
    if (!rep.certified())
        throw Error("dual_lower_bound: " + std::to_string(rep.violations.size()) + " dual constraints violated");
    double total = 0.0;
    for (const auto& [id, l] : res.lambda) total += l;
    for (const auto& b : res.beta) total -= b.integral();
    return total;
}

inline double dual_lower_bound(const energy::EnergyFlowResult& res, int grid_points = 8) {
    const auto rep = verify::verify_flow_energy_duals(res, res.epsilon, res.alpha, res.gamma, grid_points);
    if (!rep.certified())
        throw Error("dual_lower_bound: " + std::to_string(rep.violations.size()) + " dual constraints violated");
    return res.dual_objective();
}

// ---------------------------------------------------------------------------
// Adversaries
// ---------------------------------------------------------------------------

struct AdversaryTranscript {
    std::string adversary;
    double epsilon = 0.0;
    double alpha = 0.0;
    double L = 0.0;
    std::vector<Job> jobs;                            // in release order
    std::vector<ExecutionRecord> decisions;           // algorithm's record per job
    std::vector<ExecutionRecord> adversary_schedule;  // validated
    double algorithm_cost = 0.0;
    double adversary_cost = 0.0;
    double ratio = 0.0;
    bool feasible = false;
    std::vector<std::string> notes;
};

inline Json to_json(const AdversaryTranscript& t) {
    Json jobs = Json::array(), dec = Json::array(), adv = Json::array();
    for (const auto& j : t.jobs) jobs.push_back(to_json(j));
    auto rec = [](const ExecutionRecord& r) {
        return Json{{"job", r.job},     {"machine", r.machine},           {"start", r.start},
                    {"speed", r.speed}, {"end", r.end}, {"outcome", to_string(r.outcome)}};
    };
    for (const auto& r : t.decisions) dec.push_back(rec(r));
    for (const auto& r : t.adversary_schedule) adv.push_back(rec(r));
    return Json{{"adversary", t.adversary},
                {"eps", t.epsilon},
                {"alpha", t.alpha},
                {"L", t.L},
                {"jobs", jobs},
                {"decisions", dec},
                {"adversary_schedule", adv},
                {"algorithm_cost", t.algorithm_cost},
                {"adversary_cost", t.adversary_cost},
                {"ratio", t.ratio},
                {"feasible", t.feasible},
                {"notes", t.notes}};
}

/// Checks a single-machine schedule: every job appears once, starts no
/// earlier than its release, runs exactly p/speed, meets its deadline if any,
/// and no two executions overlap.
inline std::vector<std::string> validate_schedule(const std::vector<Job>& jobs,
                                                  const std::vector<ExecutionRecord>& sched) {
    std::vector<std::string> errs;
    if (sched.size() != jobs.size()) errs.push_back("schedule does not cover every job");
    std::vector<ExecutionRecord> sorted = sched;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    for (const auto& r : sorted) {
        auto it = std::find_if(jobs.begin(), jobs.end(), [&](const Job& j) { return j.id == r.job; });
        if (it == jobs.end()) {
            errs.push_back("unknown job " + std::to_string(r.job));
            continue;
        }
        const double tol = 1e-9 * std::max(1.0, r.end);
        if (r.start < it->release - tol) errs.push_back("job " + std::to_string(r.job) + " starts before release");
        if (std::abs((r.end - r.start) * r.speed - it->p(r.machine)) > tol)
            errs.push_back("job " + std::to_string(r.job) + " has the wrong volume");
        if (it->deadline && r.end > *it->deadline + tol)
            errs.push_back("job " + std::to_string(r.job) + " misses its deadline");
    }
    for (std::size_t k = 0; k + 1 < sorted.size(); ++k)
        if (sorted[k].end > sorted[k + 1].start + 1e-9 * std::max(1.0, sorted[k].end))
            errs.push_back("jobs " + std::to_string(sorted[k].job) + " and " + std::to_string(sorted[k + 1].job) +
                           " overlap");
    return errs;
}

/// A flow-time engine: full trace of a run on an instance.
using FlowEngine = std::function<ScheduleTrace(const Instance&)>;

inline FlowEngine flow_engine(double eps) {
    return [eps](const Instance& inst) { return flow::simulate_flow(inst, eps).trace; };
}

inline double total_flow(const Instance& inst, const ScheduleTrace& tr) {
    double f = 0.0;
    for (const auto& j : inst.jobs) f += tr.records.at(j.id).end - j.release;
    return f;
}

/// 1/eps jobs of length L at time 0; if the engine starts one of them by
/// t <= L^2, jobs of size 1/L follow at t, t + 1/L, ..., t + L - 1/L. The
/// adversary runs each small job at its release and the long jobs one after
/// another from t + L (from 0 when no small jobs came).
inline AdversaryTranscript lb1_adversary(double eps, double L, const FlowEngine& engine) {
    const int q = flow::inverse_epsilon(eps);
    if (!(L > 0.0)) throw InvalidInput("L must be positive");
    AdversaryTranscript tr;
    tr.adversary = "lb1";
    tr.epsilon = eps;
    tr.L = L;

    Instance inst;
    inst.model = Model::Flow;
    inst.machines = 1;
    for (int k = 0; k < q; ++k) {
        Job j;
        j.id = k;
        j.release = 0.0;
        j.proc = {L};
        inst.jobs.push_back(j);
    }
    canonicalize(inst);
    const ScheduleTrace first = engine(inst);
    Time t = kInfinity;
    for (const auto& e : first.events)
        if (e.kind == EventKind::Start) t = std::min(t, e.time);

    const bool small = t <= L * L;
    const long count = small ? std::lround(L * L) : 0;
    for (long k = 0; k < count; ++k) {
        Job j;
        j.id = q + k;
        j.release = t + static_cast<double>(k) / L;
        j.proc = {1.0 / L};
        inst.jobs.push_back(j);
    }
    canonicalize(inst);
    const ScheduleTrace run = small ? engine(inst) : first;
    tr.jobs = inst.jobs;
    for (const auto& j : inst.jobs) tr.decisions.push_back(run.records.at(j.id));
    tr.algorithm_cost = total_flow(inst, run);
    if (std::isinf(t)) tr.notes.push_back("engine never started a long job");
    else tr.notes.push_back("first long job started at " + Json(t).dump());

    Time cursor = small ? t + L : 0.0;
    for (const auto& j : inst.jobs) {
        if (j.id >= q) tr.adversary_schedule.push_back({j.id, 0, j.release, 1.0, j.release + j.p(0), Outcome::Completed, 0.0});
    }
    for (int k = 0; k < q; ++k) {
        tr.adversary_schedule.push_back({k, 0, cursor, 1.0, cursor + L, Outcome::Completed, 0.0});
        cursor += L;
    }
    const auto errs = validate_schedule(inst.jobs, tr.adversary_schedule);
    tr.feasible = errs.empty();
    for (const auto& e : errs) tr.notes.push_back(e);
    for (const auto& r : tr.adversary_schedule) {
        const auto& j = *std::find_if(inst.jobs.begin(), inst.jobs.end(), [&](const Job& x) { return x.id == r.job; });
        tr.adversary_cost += r.end - j.release;
    }
    tr.ratio = tr.algorithm_cost / tr.adversary_cost;
    return tr;
}

/// Energy engine that commits a start and a speed when a job is released.
struct CommitEngine {
    std::function<ExecutionRecord(const Job&)> commit;
    std::function<double()> energy;
};

inline CommitEngine greedy_commit_engine(const emin::Grids& grids, double alpha) {
    auto s = std::make_shared<emin::GreedyEnergyScheduler>(1, grids, std::vector{emin::power_law(alpha)},
                                                          emin::default_smooth_params(alpha));
    const double step = grids.time_step;
    return {[s, step](const Job& j) {
                const auto& st = s->commit(j);
                return ExecutionRecord{j.id, 0, st.start(step), st.speed, st.end(step), Outcome::Completed, 0.0};
            },
            [s] { return s->total_energy(); }};
}

/// Grid the lb2 adversary uses unless told otherwise.
inline emin::Grids lb2_default_grids() {
    emin::Grids g;
    g.speeds = {1.0, 2.0, 4.0};
    g.time_step = 0.125;
    return g;
}

/// Job 1 spans [0, 3^(alpha+1)] with a third of it as volume; each next job
/// spans [S_j + 1, C_j] of the previous commitment, again with a third as
/// volume (rounded down to the volume grid). Stops after alpha jobs or once the
/// span is at most 1. The adversary runs everything at speed 1, one job at a
/// time, in the first order that meets all windows.
inline AdversaryTranscript lb2_adversary(int alpha, const CommitEngine& engine, double volume_unit = 0.5) {
    if (alpha < 2) throw InvalidInput("lb2 needs an integer alpha >= 2");
    if (!(volume_unit > 0.0)) throw InvalidInput("volume unit must be positive");
    AdversaryTranscript tr;
    tr.adversary = "lb2";
    tr.alpha = alpha;
    Time r = 0.0, d = std::pow(3.0, alpha + 1);
    for (int k = 0; k < alpha; ++k) {
        const double span = d - r;
        if (k > 0 && span <= 1.0) {
            tr.notes.push_back("stopped: span " + Json(span).dump() + " <= 1");
            break;
        }
        const double p = std::floor(span / 3.0 / volume_unit + 1e-9) * volume_unit;
        if (!(p > 0.0)) {
            tr.notes.push_back("stopped: volume rounds to 0");
            break;
        }
        Job j;
        j.id = k;
        j.release = r;
        j.deadline = d;
        j.proc = {p};
        const ExecutionRecord rec = engine.commit(j);
        if (rec.start < r - 1e-9 || rec.end > d + 1e-9 || !(rec.speed > 0.0))
            throw Error("lb2: engine committed an invalid execution for job " + std::to_string(k));
        tr.jobs.push_back(j);
        tr.decisions.push_back(rec);
        r = rec.start + 1.0;
        d = rec.end;
    }
    tr.algorithm_cost = engine.energy();

    std::vector<std::size_t> order(tr.jobs.size());
    std::iota(order.begin(), order.end(), 0);
    do {
        std::vector<ExecutionRecord> sched;
        Time now = 0.0;
        for (std::size_t k : order) {
            const Job& j = tr.jobs[k];
            const Time s = std::max(now, j.release);
            sched.push_back({j.id, 0, s, 1.0, s + j.p(0), Outcome::Completed, 0.0});
            now = s + j.p(0);
        }
        if (validate_schedule(tr.jobs, sched).empty()) {
            tr.adversary_schedule = sched;
            tr.feasible = true;
            break;
        }
    } while (std::next_permutation(order.begin(), order.end()));
    if (!tr.feasible) tr.notes.push_back("no feasible speed-1 schedule");
    for (const auto& j : tr.jobs) tr.adversary_cost += j.p(0);  // P(1) = 1 for s^alpha
    tr.ratio = tr.adversary_cost > 0.0 ? tr.algorithm_cost / tr.adversary_cost : 0.0;
    return tr;
}

/// lb2 against the greedy engine on `grids`; volumes are rounded to
/// time_step * max speed so the fastest speed always fits the grid.
inline AdversaryTranscript lb2_adversary(int alpha, const emin::Grids& grids = lb2_default_grids()) {
    return lb2_adversary(alpha, greedy_commit_engine(grids, alpha), grids.time_step * grids.speeds.back());
}

}  // namespace rejectsched::oracle
