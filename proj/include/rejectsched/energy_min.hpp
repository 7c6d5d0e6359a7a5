#pragma once

#include "rejectsched/instance_io.hpp"
#include "rejectsched/random.hpp"
#include "rejectsched/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace rejectsched::emin {

// ---------------------------------------------------------------------------
// Power functions and grids
// ---------------------------------------------------------------------------

struct PowerFunction {
    std::string name;
    std::function<double(double)> eval;

    double operator()(double s) const { return eval(s); }
};

inline PowerFunction power_law(double alpha) {
    if (!(alpha >= 1.0)) throw InvalidInput("power law exponent must be at least 1");
    std::ostringstream name;
    name << "s^" << alpha;
    return {name.str(), [alpha](double s) { return std::pow(s, alpha); }};
}

struct Grids {
    std::vector<double> speeds;  // ascending
    double time_step = 1.0;
    Time horizon = 0.0;  // 0: unbounded, the profile grows as needed
    std::optional<double> eps_disc;
};

namespace detail {

constexpr double kGridTol = 1e-9;

/// Returns k if x is within tolerance of k * step for an integer k >= 0.
inline std::optional<long> on_grid(double x, double step) {
    const double q = x / step;
    const double k = std::round(q);
    if (std::abs(q - k) > kGridTol * std::max(1.0, std::abs(q))) return std::nullopt;
    return static_cast<long>(k);
}

inline long ceil_slot(double x, double step) {
    if (auto k = on_grid(x, step)) return *k;
    return static_cast<long>(std::ceil(x / step));
}

inline long floor_slot(double x, double step) {
    if (auto k = on_grid(x, step)) return *k;
    return static_cast<long>(std::floor(x / step));
}

/// Largest g with every value an integer multiple of g (to tolerance).
inline double float_gcd(double a, double b) {
    const double tol = kGridTol * std::max(a, b);
    while (b > tol) {
        const double r = std::fmod(a, b);
        a = b;
        b = (r > b - tol) ? 0.0 : r;
    }
    return a;
}

}  // namespace detail

/// Energy per unit of volume is P(v)/v; rounding a speed up to the next grid
/// value inflates it by at most the ratio checked here.
inline void validate_grids(const Grids& g, const PowerFunction* P = nullptr) {
    if (g.speeds.empty()) throw InvalidInput("grid needs at least one speed");
    for (std::size_t k = 0; k < g.speeds.size(); ++k) {
        if (!(g.speeds[k] > 0.0)) throw InvalidInput("grid speeds must be positive");
        if (k > 0 && !(g.speeds[k] > g.speeds[k - 1])) throw InvalidInput("grid speeds must be strictly ascending");
    }
    if (!(g.time_step > 0.0)) throw InvalidInput("time_step must be positive");
    if (!(g.horizon >= 0.0)) throw InvalidInput("horizon must be non-negative");
    if (g.eps_disc) {
        if (!(*g.eps_disc > 0.0)) throw InvalidInput("eps_disc must be positive");
        if (P)
            for (std::size_t k = 0; k + 1 < g.speeds.size(); ++k) {
                const double lo = g.speeds[k], hi = g.speeds[k + 1];
                const double inflation = ((*P)(hi) / hi) / ((*P)(lo) / lo);
                if (inflation > 1.0 + *g.eps_disc * (1.0 + 1e-12))
                    throw InvalidInput("speed grid too coarse for eps_disc between " + std::to_string(lo) + " and " +
                                       std::to_string(hi));
            }
    }
}

/// Speeds v_min * r^k with r^(alpha-1) = 1 + eps_disc, capped by v_max
/// (which is always included).
inline std::vector<double> geometric_speeds(double v_min, double v_max, double alpha, double eps_disc) {
    if (!(v_min > 0.0) || v_max < v_min) throw InvalidInput("invalid speed range");
    if (!(alpha > 1.0) || !(eps_disc > 0.0)) throw InvalidInput("need alpha > 1 and eps_disc > 0");
    const double r = std::pow(1.0 + eps_disc, 1.0 / (alpha - 1.0));
    std::vector<double> v;
    for (double s = v_min; s < v_max * (1.0 - 1e-12); s *= r) v.push_back(s);
    v.push_back(v_max);
    return v;
}

inline Json to_json(const Grids& g) {
    Json doc{{"speeds", g.speeds}, {"time_step", g.time_step}};
    if (g.horizon > 0.0) doc["horizon"] = g.horizon;
    if (g.eps_disc) doc["eps_disc"] = *g.eps_disc;
    return doc;
}

inline Grids grids_from_json(const Json& doc) {
    Grids g;
    try {
        g.speeds = doc.at("speeds").get<std::vector<double>>();
        g.time_step = doc.at("time_step").get<double>();
        if (doc.contains("horizon")) g.horizon = doc.at("horizon").get<double>();
        if (doc.contains("eps_disc")) g.eps_disc = doc.at("eps_disc").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed grid config: ") + e.what());
    }
    validate_grids(g);
    return g;
}

/// Every (job, machine, speed) whose duration p/v is not a multiple of the
/// time step, plus the coarsest step that all durations are multiples of.
struct AlignmentReport {
    struct Item {
        JobId job;
        MachineIndex machine;
        double speed;
    };
    std::vector<Item> misaligned;
    double suggested_step = 0.0;

    bool ok() const { return misaligned.empty(); }
};

inline AlignmentReport check_alignment(const Instance& inst, const Grids& g) {
    AlignmentReport rep;
    double gcd = 0.0;
    for (const auto& j : inst.jobs)
        for (MachineIndex i = 0; i < inst.machines; ++i)
            for (double v : g.speeds) {
                const double dur = j.p(i) / v;
                gcd = gcd == 0.0 ? dur : detail::float_gcd(std::max(gcd, dur), std::min(gcd, dur));
                if (!detail::on_grid(dur, g.time_step)) rep.misaligned.push_back({j.id, i, v});
            }
    rep.suggested_step = gcd > 0.0 ? gcd : g.time_step;
    return rep;
}

// ---------------------------------------------------------------------------
// Strategies and load profile
// ---------------------------------------------------------------------------

struct Strategy {
    MachineIndex machine = 0;
    JobId job = 0;
    long first_slot = 0;  // start = first_slot * step
    long slots = 0;       // duration = slots * step
    double speed = 0.0;

    Time start(double step) const { return static_cast<double>(first_slot) * step; }
    Time end(double step) const { return static_cast<double>(first_slot + slots) * step; }

    auto key() const { return std::tuple(machine, first_slot, speed); }
    bool operator==(const Strategy&) const = default;
};

/// All (machine, start, speed) triples with start >= r, end <= d and both on
/// the time grid. Speeds whose duration is off the grid are skipped. Sorted
/// by machine, then start, then speed.
inline std::vector<Strategy> enumerate_strategies(const Job& j, std::size_t machines, const Grids& g) {
    if (!j.deadline) throw InvalidInput("job " + std::to_string(j.id) + " has no deadline");
    const double step = g.time_step;
    const long first = detail::ceil_slot(j.release, step);
    long last_end = detail::floor_slot(*j.deadline, step);
    if (g.horizon > 0.0) last_end = std::min(last_end, detail::floor_slot(g.horizon, step));
    std::vector<Strategy> out;
    for (MachineIndex i = 0; i < machines; ++i)
        for (long tau = first;; ++tau) {
            bool any = false;
            for (double v : g.speeds) {
                const auto len = detail::on_grid(j.p(i) / v, step);
                if (!len || *len <= 0 || tau + *len > last_end) continue;
                out.push_back({i, j.id, tau, *len, v});
                any = true;
            }
            if (!any) break;
        }
    if (out.empty()) {
        std::ostringstream msg;
        msg << "job " << j.id << " has no feasible strategy on this grid";
        Instance one;
        one.machines = machines;
        one.jobs = {j};
        const auto rep = check_alignment(one, g);
        if (!rep.ok()) msg << " (durations off the time grid; a compatible time_step is " << rep.suggested_step << ")";
        else msg << " (window too short for the fastest speed)";
        throw InvalidInput(msg.str());
    }
    std::sort(out.begin(), out.end(), [](const Strategy& a, const Strategy& b) { return a.key() < b.key(); });
    return out;
}

/// Per machine, per slot: sum of the speeds of the strategies covering it.
class LoadProfile {
public:
    explicit LoadProfile(std::size_t machines = 0) : load_(machines) {}

    std::size_t machines() const { return load_.size(); }
    double at(MachineIndex i, long slot) const {
        const auto& row = load_.at(i);
        return slot >= 0 && static_cast<std::size_t>(slot) < row.size() ? row[static_cast<std::size_t>(slot)] : 0.0;
    }
    const std::vector<double>& row(MachineIndex i) const { return load_.at(i); }

    void add(const Strategy& s) {
        auto& row = load_.at(s.machine);
        const auto end = static_cast<std::size_t>(s.first_slot + s.slots);
        if (row.size() < end) row.resize(end, 0.0);
        for (long k = s.first_slot; k < s.first_slot + s.slots; ++k) row[static_cast<std::size_t>(k)] += s.speed;
    }

    /// f_i = sum over slots of P(u) * step.
    double energy(MachineIndex i, const PowerFunction& P, double step) const {
        double e = 0.0;
        for (double u : load_.at(i))
            if (u > 0.0) e += P(u) * step;
        return e;
    }

    bool operator==(const LoadProfile&) const = default;

private:
    std::vector<std::vector<double>> load_;
};

inline double marginal_energy(const Strategy& s, const LoadProfile& load, const PowerFunction& P, double step) {
    if (s.speed == 0.0) return 0.0;
    double e = 0.0;
    for (long k = s.first_slot; k < s.first_slot + s.slots; ++k) {
        const double u = load.at(s.machine, k);
        e += (P(u + s.speed) - P(u)) * step;
    }
    return e;
}

// ---------------------------------------------------------------------------
// Smoothness estimate
// ---------------------------------------------------------------------------

/// Value of (sum_i [P(b_i + A_i) - P(A_i)] - mu P(A_n)) / P(sum b), A_i the
/// prefix sums of a.
inline double smoothness_ratio(const PowerFunction& P, const std::vector<double>& a, const std::vector<double>& b,
                               double mu) {
    double prefix = 0.0, lhs = 0.0, bsum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        prefix += a[k];
        lhs += P(b[k] + prefix) - P(prefix);
        bsum += b[k];
    }
    return (lhs - mu * P(prefix)) / P(bsum);
}

/// Largest ratio over `trials` random sequence pairs of length 1..6 with
/// entries in (0, 2]: an empirical lower estimate of the smallest lambda
/// making P (lambda, mu)-smooth in the nested form.
inline double smoothness_lambda_estimate(const PowerFunction& P, int trials, std::uint64_t seed, double mu) {
    if (!(mu >= 0.0 && mu < 1.0)) throw InvalidInput("mu must lie in [0, 1)");
    Rng rng(seed);
    double best = -kInfinity;
    std::vector<double> a, b;
    for (int t = 0; t < trials; ++t) {
        const auto n = static_cast<std::size_t>(rng.integer(1, 6));
        a.resize(n);
        b.resize(n);
        for (auto& x : a) x = rng.open_closed(2.0);
        for (auto& x : b) x = rng.open_closed(2.0);
        best = std::max(best, smoothness_ratio(P, a, b, mu));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Greedy engine
// ---------------------------------------------------------------------------

struct SmoothParams {
    double lambda = 1.0;
    double mu = 0.0;
};

/// Default smoothness parameters for P = s^alpha.
inline SmoothParams default_smooth_params(double alpha, int trials = 20000, std::uint64_t seed = 1) {
    const double mu = (alpha - 1.0) / alpha;
    return {smoothness_lambda_estimate(power_law(alpha), trials, seed, mu), mu};
}

struct StrategyDual {
    Strategy strategy;
    double beta = 0.0;
};

struct EnergyDuals {
    std::map<JobId, double> delta;
    std::map<JobId, std::vector<StrategyDual>> beta;  // every strategy of j, pre-arrival profile
    std::vector<double> gamma_m;
    SmoothParams lambda_mu;

    double objective() const {
        double s = 0.0;
        for (const auto& [j, d] : delta) s += d;
        for (double g : gamma_m) s += g;
        return s;
    }
};

/// Online greedy: each committed job takes the strategy of least marginal
/// energy against the current profile, first in (machine, start, speed)
/// order on ties, and is never revised.
class GreedyEnergyScheduler {
public:
    GreedyEnergyScheduler(std::size_t machines, Grids grids, std::vector<PowerFunction> powers, SmoothParams sp)
        : machines_(machines), grids_(std::move(grids)), powers_(std::move(powers)), load_(machines) {
        if (machines == 0) throw InvalidInput("need at least one machine");
        if (powers_.size() == 1 && machines > 1) powers_.resize(machines, powers_.front());
        if (powers_.size() != machines) throw InvalidInput("one power function per machine required");
        for (const auto& P : powers_) validate_grids(grids_, &P);
        if (!(sp.lambda > 0.0)) throw InvalidInput("lambda must be positive");
        duals_.lambda_mu = sp;
    }

    const Strategy& commit(const Job& j) {
        auto options = enumerate_strategies(j, machines_, grids_);
        const double inv = 1.0 / duals_.lambda_mu.lambda;
        auto& rec = duals_.beta[j.id];
        std::size_t best = 0;
        double best_e = kInfinity;
        for (std::size_t k = 0; k < options.size(); ++k) {
            const double e = marginal_energy(options[k], load_, powers_[options[k].machine], grids_.time_step);
            rec.push_back({options[k], inv * e});
            if (e < best_e) {
                best_e = e;
                best = k;
            }
        }
        duals_.delta[j.id] = inv * best_e;
        load_.add(options[best]);
        const Strategy& s = chosen_[j.id] = options[best];
        const double step = grids_.time_step;
        trace_.events.push_back({j.release, EventKind::Dispatch, j.id, s.machine});
        trace_.records[j.id] =
            ExecutionRecord{j.id, s.machine, s.start(step), s.speed, s.end(step), Outcome::Completed, 0.0};
        return s;
    }

    double machine_energy(MachineIndex i) const { return load_.energy(i, powers_.at(i), grids_.time_step); }
    double total_energy() const {
        double e = 0.0;
        for (MachineIndex i = 0; i < machines_; ++i) e += machine_energy(i);
        return e;
    }

    /// Closes the run: gamma_i = -(mu/lambda) f_i(A*_i), trace events sorted.
    void finish() {
        duals_.gamma_m.assign(machines_, 0.0);
        const auto& [lambda, mu] = duals_.lambda_mu;
        for (MachineIndex i = 0; i < machines_; ++i) duals_.gamma_m[i] = -(mu / lambda) * machine_energy(i);
        const double step = grids_.time_step;
        for (const auto& [id, s] : chosen_) {
            trace_.events.push_back({s.start(step), EventKind::Start, id, s.machine});
            trace_.events.push_back({s.end(step), EventKind::Complete, id, s.machine});
            trace_.definitive_finish[id] = s.end(step);
        }
        std::stable_sort(trace_.events.begin(), trace_.events.end(),
                         [](const Event& a, const Event& b) { return a.time < b.time; });
        trace_.objective = total_energy();
    }

    const LoadProfile& load() const { return load_; }
    const EnergyDuals& duals() const { return duals_; }
    const ScheduleTrace& trace() const { return trace_; }
    const std::map<JobId, Strategy>& chosen() const { return chosen_; }
    const Grids& grids() const { return grids_; }
    const PowerFunction& power(MachineIndex i) const { return powers_.at(i); }

private:
    std::size_t machines_;
    Grids grids_;
    std::vector<PowerFunction> powers_;
    LoadProfile load_;
    EnergyDuals duals_;
    ScheduleTrace trace_;
    std::map<JobId, Strategy> chosen_;
};

struct GreedyResult {
    Instance instance;
    Grids grids;
    std::vector<PowerFunction> powers;
    ScheduleTrace trace;
    EnergyDuals duals;
    LoadProfile load;
    std::map<JobId, Strategy> chosen;
    std::vector<double> machine_energy;
    double total_energy = 0.0;
};

inline GreedyResult greedy_assign(const Instance& inst, const Grids& grids, const std::vector<PowerFunction>& powers,
                                  SmoothParams sp) {
    if (inst.model != Model::EnergyDeadline) throw InvalidInput("greedy_assign requires the energy_deadline model");
    GreedyEnergyScheduler s(inst.machines, grids, powers, sp);
    for (const auto& j : inst.jobs) s.commit(j);
    s.finish();
    GreedyResult r;
    r.instance = inst;
    r.grids = grids;
    for (MachineIndex i = 0; i < inst.machines; ++i) r.powers.push_back(s.power(i));
    r.trace = s.trace();
    r.duals = s.duals();
    r.load = s.load();
    r.chosen = s.chosen();
    for (MachineIndex i = 0; i < inst.machines; ++i) r.machine_energy.push_back(s.machine_energy(i));
    r.total_energy = s.total_energy();
    return r;
}

/// P = s^alpha on every machine (alpha from the instance, default 2) and the
/// matching default smoothness parameters.
inline GreedyResult greedy_assign(const Instance& inst, const Grids& grids) {
    const double alpha = inst.alpha.value_or(2.0);
    return greedy_assign(inst, grids, {power_law(alpha)}, default_smooth_params(alpha));
}

/// Rebuilds the load profile from the committed strategies in job order.
inline LoadProfile rebuild_profile(const GreedyResult& r) {
    LoadProfile p(r.instance.machines);
    for (const auto& j : r.instance.jobs) p.add(r.chosen.at(j.id));
    return p;
}

// ---------------------------------------------------------------------------
// Random instances on a grid
// ---------------------------------------------------------------------------

/// Releases on the time grid within [0, horizon]; volumes are integer multiples
/// of time_step * max speed (so the fastest speed always fits the grid); the
/// window holds the job at a randomly drawn speed on its best machine plus a
/// random slack of up to `slack_slots` slots.
inline Instance gen_random_energy(const GenParams& g, const Grids& grids, long slack_slots = 4) {
    validate_grids(grids);
    if (!(g.p_lo > 0.0) || g.p_hi < g.p_lo) throw InvalidInput("invalid processing range");
    if (g.n == 0 || g.m == 0) throw InvalidInput("need n >= 1 and m >= 1");
    if (!(g.horizon >= 0.0) || slack_slots < 0) throw InvalidInput("invalid horizon or slack");
    const double step = grids.time_step;
    const double unit = step * grids.speeds.back();
    const long kmin = std::max(1L, static_cast<long>(std::ceil(g.p_lo / unit - 1e-9)));
    const long kmax = std::max(kmin, static_cast<long>(std::floor(g.p_hi / unit + 1e-9)));
    const long rmax = static_cast<long>(std::floor(g.horizon / step + 1e-9));
    Rng rng(g.seed);
    Instance inst;
    inst.model = Model::EnergyDeadline;
    inst.machines = g.m;
    inst.alpha = g.alpha.value_or(2.0);
    for (std::size_t k = 0; k < g.n; ++k) {
        Job j;
        j.id = static_cast<JobId>(k);
        j.release = static_cast<double>(rng.integer(0, rmax)) * step;
        j.proc.resize(g.m);
        for (auto& p : j.proc) p = static_cast<double>(rng.integer(kmin, kmax)) * unit;
        const double v = grids.speeds[static_cast<std::size_t>(
            rng.integer(0, static_cast<std::int64_t>(grids.speeds.size()) - 1))];
        const double pmin = *std::min_element(j.proc.begin(), j.proc.end());
        const long need = static_cast<long>(std::ceil(pmin / v / step - 1e-9));
        j.deadline = j.release + static_cast<double>(need + rng.integer(0, slack_slots)) * step;
        inst.jobs.push_back(std::move(j));
    }
    canonicalize(inst);
    return inst;
}

}  // namespace rejectsched::emin
