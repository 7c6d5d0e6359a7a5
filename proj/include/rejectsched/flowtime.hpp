#pragma once

#include "rejectsched/piecewise.hpp"
#include "rejectsched/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace rejectsched::flow {

/// SPT order on machine i: processing time, then release, then id.
inline bool order_precedes(const Job& a, const Job& b, MachineIndex i) {
    return std::tuple(a.p(i), a.release, a.id) < std::tuple(b.p(i), b.release, b.id);
}

/// Returns 1/eps, which must be a positive integer so both rejection
/// counters hit their thresholds exactly.
inline int inverse_epsilon(double eps) {
    if (!(eps > 0.0)) throw InvalidInput("epsilon must be positive");
    const double inv = 1.0 / eps;
    const double q = std::round(inv);
    if (q < 1.0 || std::abs(inv - q) > 1e-9 * q) throw InvalidInput("1/epsilon must be a positive integer");
    return static_cast<int>(q);
}

struct RunningJob {
    const Job* job = nullptr;
    Time start = 0.0;
    Time end = 0.0;  // fixed at start, speed 1
    int counter = 0;  // arrivals dispatched here since start (Rule 1)
};

struct MachineStateFlow {
    std::vector<const Job*> pending;  // sorted by order_precedes, running job excluded
    std::optional<RunningJob> running;
    int counter = 0;  // arrivals since the last Rule 2 reset

    double remaining(Time t) const { return running ? running->end - t : 0.0; }
};

/// Dispatch estimate of job j on machine i against the current pending set,
/// with j inserted into the order (so j itself counts among the jobs that
/// precede-or-equal it).
inline double lambda_i(const Job& j, MachineIndex i, const MachineStateFlow& state, double eps) {
    if (!(eps > 0.0)) throw InvalidInput("epsilon must be positive");
    const double pj = j.p(i);
    double total = pj / eps;
    for (const Job* l : state.pending) total += order_precedes(*l, j, i) ? l->p(i) : pj;
    return total + pj;
}

struct DispatchDecision {
    MachineIndex machine = 0;
    double lambda_min = 0.0;  // min_i lambda_ij
    double lambda_j = 0.0;    // eps/(1+eps) * lambda_min
};

inline DispatchDecision dispatch_flow(const Job& j, const std::vector<MachineStateFlow>& states, double eps) {
    DispatchDecision d;
    d.lambda_min = kInfinity;
    for (MachineIndex i = 0; i < states.size(); ++i) {
        const double l = lambda_i(j, i, states[i], eps);
        if (l < d.lambda_min) {
            d.lambda_min = l;
            d.machine = i;
        }
    }
    d.lambda_j = eps / (1.0 + eps) * d.lambda_min;
    return d;
}

struct FlowResult {
    Instance instance;
    double epsilon = 0.5;
    ScheduleTrace trace;
    std::map<JobId, double> lambda;
    std::vector<PiecewiseLinear> beta;  // one step function per machine
    double total_flow = 0.0;
    double rejected_fraction = 0.0;

    const Job& job(JobId id) const {
        for (const auto& j : instance.jobs)
            if (j.id == id) return j;
        throw Error("unknown job " + std::to_string(id));
    }
    Time completion(JobId id) const { return trace.records.at(id).end; }
    Time definitive_finish(JobId id) const { return trace.definitive_finish.at(id); }
    double beta_coefficient() const { return epsilon / ((1.0 + epsilon) * (1.0 + epsilon)); }
};

namespace detail {

/// Step function t -> coef * #{intervals [from, to) containing t}, with the
/// count kept as an integer.
inline PiecewiseLinear count_steps(const std::vector<std::pair<Time, Time>>& intervals, double coef) {
    std::vector<std::pair<Time, int>> deltas;
    for (const auto& [from, to] : intervals) {
        if (!(to > from)) continue;
        deltas.emplace_back(from, +1);
        deltas.emplace_back(to, -1);
    }
    std::stable_sort(deltas.begin(), deltas.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Time> times;
    std::vector<double> values;
    int count = 0;
    for (std::size_t k = 0; k < deltas.size();) {
        const Time t = deltas[k].first;
        for (; k < deltas.size() && deltas[k].first == t; ++k) count += deltas[k].second;
        times.push_back(t);
        values.push_back(coef * count);
    }
    return PiecewiseLinear::steps(std::move(times), std::move(values));
}

inline void sort_events(ScheduleTrace& tr) {
    std::stable_sort(tr.events.begin(), tr.events.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
}

}  // namespace detail

/// beta_i(t) = eps/(1+eps)^2 * (|U_i(t)| + |V_i(t)|); a job on machine i is in
/// U or V exactly on [r_j, definitive finish).
inline std::vector<PiecewiseLinear> build_beta(const Instance& inst, const ScheduleTrace& tr, double eps) {
    std::vector<std::vector<std::pair<Time, Time>>> per_machine(inst.machines);
    for (const auto& j : inst.jobs)
        per_machine.at(tr.records.at(j.id).machine).emplace_back(j.release, tr.definitive_finish.at(j.id));
    std::vector<PiecewiseLinear> beta;
    for (const auto& iv : per_machine) beta.push_back(detail::count_steps(iv, eps / ((1.0 + eps) * (1.0 + eps))));
    return beta;
}

/// Online run of the SPT engine with Rejection Rules 1 and 2.
///
/// Processing at an arrival of j at time t: dispatch to argmin lambda_ij;
/// Rule 1 on the running job of the target machine; Rule 2 on the target
/// machine's counter; then an idle machine starts its first pending job.
/// Completions at time t are handled before arrivals at t.
inline FlowResult simulate_flow(const Instance& inst, double eps) {
    if (inst.model != Model::Flow) throw InvalidInput("simulate_flow requires the flow model");
    const int q = inverse_epsilon(eps);

    FlowResult res;
    res.instance = inst;
    res.epsilon = eps;
    ScheduleTrace& tr = res.trace;
    std::vector<MachineStateFlow> states(inst.machines);
    std::map<JobId, double> delay;

    auto start_next = [&](MachineIndex i, Time t) {
        auto& st = states[i];
        if (st.running || st.pending.empty()) return;
        const Job* j = st.pending.front();
        st.pending.erase(st.pending.begin());
        st.running = RunningJob{j, t, t + j->p(i), 0};
        tr.events.push_back({t, EventKind::Start, j->id, i});
    };

    auto close = [&](const Job& j, MachineIndex i, Time start, Time end, Outcome o, double remaining) {
        tr.records[j.id] = ExecutionRecord{j.id, i, start, 1.0, end, o, remaining};
        tr.events.push_back({end, o == Outcome::Completed ? EventKind::Complete : EventKind::Reject, j.id, i});
        if (is_rejection(o)) tr.rejected_ids.insert(j.id);
    };

    auto arrive = [&](const Job& j) {
        const Time t = j.release;
        const DispatchDecision d = dispatch_flow(j, states, eps);
        const MachineIndex i = d.machine;
        auto& st = states[i];
        res.lambda[j.id] = d.lambda_j;
        delay[j.id] = 0.0;
        tr.events.push_back({t, EventKind::Dispatch, j.id, i});

        std::vector<const Job*> present = st.pending;  // U_i(t) minus the running job, before j
        auto pos = std::upper_bound(st.pending.begin(), st.pending.end(), &j,
                                    [i](const Job* a, const Job* b) { return order_precedes(*a, *b, i); });
        st.pending.insert(pos, &j);

        // Rule 1: the running job is interrupted at the (1/eps)-th arrival.
        if (st.running && ++st.running->counter == q) {
            const RunningJob k = *st.running;
            const double rem = k.end - t;
            close(*k.job, i, k.start, t, Outcome::RejectedRule1, rem);
            delay[k.job->id] += rem;
            for (const Job* l : present) delay[l->id] += rem;
            st.running.reset();
        }

        // Rule 2: every (1 + 1/eps)-th arrival rejects the longest pending job.
        if (++st.counter == q + 1) {
            st.counter = 0;
            if (!st.pending.empty()) {
                const Job* victim = st.pending.back();
                st.pending.pop_back();
                // Work ahead of the victim, not counting the arrival that triggered it.
                double term = st.remaining(t) + victim->p(i);
                for (const Job* l : st.pending)
                    if (l != &j) term += l->p(i);
                delay[victim->id] += term;
                close(*victim, i, t, t, Outcome::RejectedRule2, victim->p(i));
            }
        }
        start_next(i, t);
    };

    std::size_t next = 0;
    while (true) {
        Time tc = kInfinity;
        MachineIndex ic = 0;
        for (MachineIndex i = 0; i < states.size(); ++i)
            if (states[i].running && states[i].running->end < tc) {
                tc = states[i].running->end;
                ic = i;
            }
        const Time ta = next < inst.jobs.size() ? inst.jobs[next].release : kInfinity;
        if (tc == kInfinity && ta == kInfinity) break;
        if (tc <= ta) {
            const RunningJob k = *states[ic].running;
            states[ic].running.reset();
            close(*k.job, ic, k.start, k.end, Outcome::Completed, 0.0);
            start_next(ic, tc);
        } else {
            arrive(inst.jobs[next++]);
        }
    }

    for (const auto& j : inst.jobs) {
        const auto& rec = tr.records.at(j.id);
        const Time finish = rec.end + delay[j.id];
        tr.definitive_finish[j.id] = finish;
        tr.events.push_back({finish, EventKind::DefinitiveFinish, j.id, rec.machine});
        res.total_flow += rec.end - j.release;
    }
    detail::sort_events(tr);
    tr.objective = res.total_flow;
    res.rejected_fraction =
        inst.jobs.empty() ? 0.0 : static_cast<double>(tr.rejected_ids.size()) / static_cast<double>(inst.jobs.size());
    res.beta = build_beta(inst, tr, eps);
    return res;
}

// ---------------------------------------------------------------------------
// Set views recovered from a finished run
// ---------------------------------------------------------------------------

/// |U_i(t)|: jobs on i released and not yet completed or rejected.
inline std::size_t pending_count(const FlowResult& res, MachineIndex i, Time t) {
    std::size_t n = 0;
    for (const auto& j : res.instance.jobs) {
        const auto& rec = res.trace.records.at(j.id);
        if (rec.machine == i && j.release <= t && t < rec.end) ++n;
    }
    return n;
}

/// |R_i(t)|: Rule 2 rejections on i that are not yet definitively finished.
inline std::size_t rule2_backlog(const FlowResult& res, MachineIndex i, Time t) {
    std::size_t n = 0;
    for (const auto& [id, rec] : res.trace.records)
        if (rec.machine == i && rec.outcome == Outcome::RejectedRule2 && rec.end <= t &&
            t < res.trace.definitive_finish.at(id))
            ++n;
    return n;
}

/// Sorted distinct event times of the trace.
inline std::vector<Time> event_times(const ScheduleTrace& tr) {
    std::vector<Time> ts;
    for (const auto& e : tr.events) ts.push_back(e.time);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

/// Checks |U_i(t)| <= (1/eps)(|R_i(t)| + 1) at every event time and machine.
/// Returns the (machine, time) pairs where it fails.
inline std::vector<std::pair<MachineIndex, Time>> pending_bound_failures(const FlowResult& res) {
    const int q = inverse_epsilon(res.epsilon);
    std::vector<std::pair<MachineIndex, Time>> bad;
    for (Time t : event_times(res.trace))
        for (MachineIndex i = 0; i < res.instance.machines; ++i)
            if (pending_count(res, i, t) > static_cast<std::size_t>(q) * (rule2_backlog(res, i, t) + 1))
                bad.emplace_back(i, t);
    return bad;
}

// ---------------------------------------------------------------------------
// Partition witness for the pending set
// ---------------------------------------------------------------------------

struct MappingWitness {
    /// Subsets U^1..U^r tied to the Rule 2 rejections in `victims`, then the
    /// trailing subset U^{r+1}.
    std::vector<std::vector<JobId>> subsets;
    std::vector<JobId> victims;
    int counter = 0;  // c_i at time t
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

/// Rebuilds the partition of U_i(t) by replaying machine i's events up to and
/// including time t. An arrival displaces the longest waiting job of every
/// subset that has a longer one, carrying it down the chain into the trailing
/// subset; a Rule 2 rejection turns the trailing subset into the
/// victim's subset. Violations list every item of the construction that did
/// not hold.
inline MappingWitness mapping_witness(const FlowResult& res, MachineIndex i, Time t) {
    const int q = inverse_epsilon(res.epsilon);
    const auto& tr = res.trace;
    MappingWitness w;
    std::vector<std::vector<JobId>> groups;  // victim groups, trailing group kept separately
    std::vector<JobId> tail;

    // The running job cannot be overtaken, so it never moves between subsets.
    JobId running = -1;
    bool has_running = false;
    auto longest = [&](std::vector<JobId>& g) {
        auto best = g.end();
        for (auto it = g.begin(); it != g.end(); ++it)
            if (!(has_running && *it == running) &&
                (best == g.end() || order_precedes(res.job(*best), res.job(*it), i)))
                best = it;
        return best;
    };
    auto erase_from_all = [&](JobId id) {
        for (auto& g : groups) std::erase(g, id);
        std::erase(tail, id);
    };
    auto fail = [&](std::string msg) { w.violations.push_back(std::move(msg)); };

    for (const auto& e : tr.events) {
        if (e.time > t) break;
        if (e.machine != i) continue;
        const auto& rec = tr.records.at(e.job);
        switch (e.kind) {
        case EventKind::Dispatch: {
            ++w.counter;
            JobId carry = e.job;
            for (auto& g : groups) {
                auto it = longest(g);
                if (it == g.end() || !order_precedes(res.job(carry), res.job(*it), i)) continue;
                const JobId out = *it;
                g.erase(it);
                g.push_back(carry);
                carry = out;
            }
            tail.push_back(carry);
            break;
        }
        case EventKind::Complete:
            erase_from_all(e.job);
            has_running = false;
            break;
        case EventKind::Reject:
            if (rec.outcome == Outcome::RejectedRule2) {
                w.counter = 0;
                if (std::find(tail.begin(), tail.end(), e.job) == tail.end())
                    fail("rule-2 victim " + std::to_string(e.job) + " not in trailing subset");
                erase_from_all(e.job);
                groups.push_back(tail);
                w.victims.push_back(e.job);
                tail.clear();
            } else {
                erase_from_all(e.job);
                has_running = false;
            }
            break;
        case EventKind::DefinitiveFinish: {
            auto it = std::find(w.victims.begin(), w.victims.end(), e.job);
            if (it == w.victims.end()) break;
            const auto k = static_cast<std::size_t>(it - w.victims.begin());
            if (!groups[k].empty()) {
                fail("subset of victim " + std::to_string(e.job) + " non-empty at its definitive finish " +
                     std::to_string(e.time));
                tail.insert(tail.end(), groups[k].begin(), groups[k].end());
            }
            groups.erase(groups.begin() + static_cast<long>(k));
            w.victims.erase(it);
            break;
        }
        case EventKind::Start:
            running = e.job;
            has_running = true;
            break;
        }
    }

    // Sizes.
    for (std::size_t k = 0; k < groups.size(); ++k)
        if (groups[k].size() > static_cast<std::size_t>(q))
            fail("subset " + std::to_string(k + 1) + " has more than 1/eps jobs");
    if (tail.size() > static_cast<std::size_t>(w.counter)) fail("trailing subset larger than c_i");

    // Estimated completions with no further arrivals.
    std::map<JobId, Time> estimate;
    {
        std::vector<const Job*> waiting;
        Time cursor = t;
        for (const auto& j : res.instance.jobs) {
            const auto& rec = tr.records.at(j.id);
            if (rec.machine != i || !(j.release <= t && t < rec.end)) continue;
            if (rec.start <= t && rec.outcome != Outcome::RejectedRule2)
                cursor = estimate[j.id] = rec.start + j.p(i);
            else
                waiting.push_back(&j);
        }
        std::sort(waiting.begin(), waiting.end(),
                  [i](const Job* a, const Job* b) { return order_precedes(*a, *b, i); });
        for (const Job* j : waiting) estimate[j->id] = cursor += j->p(i);
    }
    std::size_t covered = tail.size();
    for (std::size_t k = 0; k < groups.size(); ++k) {
        covered += groups[k].size();
        const Time bound = tr.definitive_finish.at(w.victims[k]);
        for (JobId id : groups[k])
            if (estimate.at(id) > bound + 1e-9 * std::max(1.0, std::abs(bound)))
                fail("job " + std::to_string(id) + " estimated to finish after its victim's definitive finish");
    }
    if (covered != estimate.size()) fail("partition does not cover U_i(t)");

    w.subsets = groups;
    w.subsets.push_back(tail);
    return w;
}

}  // namespace rejectsched::flow
