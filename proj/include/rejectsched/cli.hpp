#pragma once

#include "rejectsched/energy_min.hpp"
#include "rejectsched/flow_energy.hpp"
#include "rejectsched/flowtime.hpp"
#include "rejectsched/instance_io.hpp"
#include "rejectsched/oracle.hpp"
#include "rejectsched/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace rejectsched::cli {

enum class Engine { Flow, FlowEnergy, Energy };

inline Engine engine_from_string(const std::string& s) {
    if (s == "flow") return Engine::Flow;
    if (s == "flow_energy") return Engine::FlowEnergy;
    if (s == "energy") return Engine::Energy;
    throw InvalidInput("unknown engine '" + s + "'");
}

inline std::string to_string(Engine e) {
    switch (e) {
    case Engine::Flow: return "flow";
    case Engine::FlowEnergy: return "flow_energy";
    case Engine::Energy: return "energy";
    }
    return "?";
}

inline Model model_of(Engine e) {
    switch (e) {
    case Engine::Flow: return Model::Flow;
    case Engine::FlowEnergy: return Model::FlowEnergy;
    default: return Model::EnergyDeadline;
    }
}

/// Verification failures; mapped to exit code 1.
class Violated : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Files and formatting
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes to `path`, or to `fallback` when the path is empty or "-".
inline void write_text(const std::string& path, const std::string& text, std::ostream& fallback) {
    if (path.empty() || path == "-") {
        fallback << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << text;
}

/// Shortest round-trip decimal, so every CSV cell is reproducible.
inline std::string num(double x) { return Json(x).dump(); }
inline std::string num(std::optional<double> x) { return x ? num(*x) : std::string(); }

inline const char* kCsvHeader =
    "instance_id,engine,eps,alpha,n,m,alg_cost,dual_lb,opt,ratio_vs_opt,ratio_vs_duallb,rejected_frac,runtime_ms\n";

struct RatioRow {
    std::string instance_id;
    Engine engine = Engine::Flow;
    std::optional<double> eps;
    std::optional<double> alpha;
    std::size_t n = 0, m = 0;
    double alg_cost = 0.0;
    std::optional<double> dual_lb, opt;
    double rejected_frac = 0.0;
    std::optional<double> runtime_ms;
    bool duals_certified = true;  // dual_lb stays empty otherwise

    std::string csv() const {
        auto ratio = [&](std::optional<double> d) -> std::optional<double> {
            if (!d || !(*d > 0.0)) return std::nullopt;
            return alg_cost / *d;
        };
        std::ostringstream o;
        o << instance_id << ',' << to_string(engine) << ',' << num(eps) << ',' << num(alpha) << ',' << n << ',' << m
          << ',' << num(alg_cost) << ',' << num(dual_lb) << ',' << num(opt) << ',' << num(ratio(opt)) << ','
          << num(ratio(dual_lb)) << ',' << num(rejected_frac) << ',' << num(runtime_ms) << '\n';
        return o.str();
    }
};

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

inline emin::Grids default_grids() { return oracle::lb2_default_grids(); }

inline emin::Grids load_grids(const std::string& path) {
    return path.empty() ? default_grids() : emin::grids_from_json(parse_json(read_file(path)));
}

/// Prints a warning for every job volume the speed grid cannot cover exactly.
inline void warn_alignment(const Instance& inst, const emin::Grids& g, std::ostream& err) {
    const auto rep = emin::check_alignment(inst, g);
    if (rep.misaligned.empty()) return;
    err << "warning: " << rep.misaligned.size()
        << " (job, machine, speed) durations fall off the time grid and are skipped; compatible time_step "
        << num(rep.suggested_step) << '\n';
}

// ---------------------------------------------------------------------------
// Running engines
// ---------------------------------------------------------------------------

struct RunSettings {
    Engine engine = Engine::Flow;
    double eps = 0.5;
    std::optional<double> alpha;  // overrides the instance's alpha
    emin::Grids grids = default_grids();
};

inline void check_model(const Instance& inst, Engine e) {
    if (inst.model != model_of(e))
        throw InvalidInput("engine '" + to_string(e) + "' cannot run a '" + std::string(rejectsched::to_string(inst.model)) +
                           "' instance");
}

inline Instance with_alpha(Instance inst, const RunSettings& s) {
    if (s.alpha) inst.alpha = s.alpha;
    return inst;
}

inline Json lambda_json(const std::map<JobId, double>& lambda) {
    Json out = Json::array();
    for (const auto& [id, l] : lambda) out.push_back({{"job", id}, {"lambda", l}});
    return out;
}

inline std::map<JobId, double> lambda_from_json(const Json& doc) {
    std::map<JobId, double> out;
    for (const auto& e : doc) out[e.at("job").get<JobId>()] = e.at("lambda").get<double>();
    return out;
}

/// The document `run` writes: the instance, the trace, the duals and a summary.
inline Json run_document(const Instance& raw, const RunSettings& s) {
    check_model(raw, s.engine);
    const Instance inst = with_alpha(raw, s);
    Json doc{{"engine", to_string(s.engine)}, {"eps", s.eps}};
    switch (s.engine) {
    case Engine::Flow: {
        const auto r = flow::simulate_flow(inst, s.eps);
        doc["trace"] = to_json(r.trace);
        doc["duals"] = {{"lambda", lambda_json(r.lambda)}};
        doc["summary"] = {{"total_flow", r.total_flow},
                          {"rejected", r.trace.rejected_ids.size()},
                          {"rejected_fraction", r.rejected_fraction}};
        break;
    }
    case Engine::FlowEnergy: {
        const auto r = energy::simulate_flow_energy(inst, s.eps);
        doc["alpha"] = r.alpha;
        doc["trace"] = to_json(r.trace);
        doc["duals"] = {{"lambda", lambda_json(r.lambda)}, {"gamma", r.gamma}};
        doc["summary"] = {{"weighted_flow", r.weighted_flow},
                          {"energy", r.energy},
                          {"objective", r.objective},
                          {"dual_objective", r.dual_objective()},
                          {"rejected_weight_fraction", r.rejected_weight_fraction}};
        break;
    }
    case Engine::Energy: {
        const double alpha = inst.alpha.value_or(2.0);
        const auto r = emin::greedy_assign(inst, s.grids, std::vector<emin::PowerFunction>(inst.machines, emin::power_law(alpha)),
                                           emin::default_smooth_params(alpha));
        doc["alpha"] = alpha;
        doc["grid"] = to_json(s.grids);
        doc["trace"] = to_json(r.trace);
        Json delta = Json::array();
        for (const auto& [id, d] : r.duals.delta) delta.push_back({{"job", id}, {"delta", d}});
        doc["duals"] = {{"delta", delta},
                        {"gamma", r.duals.gamma_m},
                        {"lambda", r.duals.lambda_mu.lambda},
                        {"mu", r.duals.lambda_mu.mu}};
        doc["summary"] = {{"total_energy", r.total_energy}, {"dual_objective", r.duals.objective()}};
        break;
    }
    }
    doc["instance"] = to_json(inst);
    return doc;
}

// ---------------------------------------------------------------------------
// Verification of a stored run
// ---------------------------------------------------------------------------

/// Rebuilds the dual solution stored in a run document and checks every
/// constraint. The stored lambda values are used as-is; beta and V are
/// functions of the trace. For the energy engine the greedy run is replayed
/// and must reproduce the stored trace, since the strategy duals are not kept.
inline verify::VerifyReport verify_document(const Json& doc, std::size_t max_configs, std::uint64_t seed) {
    try {
        const Engine e = engine_from_string(doc.at("engine").get<std::string>());
        const Instance inst = instance_from_json(doc.at("instance"));
        check_model(inst, e);
        const double eps = doc.at("eps").get<double>();
        const ScheduleTrace tr = trace_from_json(doc.at("trace"));
        for (const auto& j : inst.jobs)
            if (!tr.records.count(j.id)) throw InvalidInput("trace has no record for job " + std::to_string(j.id));
        switch (e) {
        case Engine::Flow: {
            flow::FlowResult r;
            r.instance = inst;
            r.epsilon = eps;
            r.trace = tr;
            r.lambda = lambda_from_json(doc.at("duals").at("lambda"));
            r.beta = flow::build_beta(inst, tr, eps);
            return verify::verify_flow_duals(r, eps);
        }
        case Engine::FlowEnergy: {
            energy::EnergyFlowResult r;
            r.instance = inst;
            r.epsilon = eps;
            r.alpha = inst.alpha.value();
            r.gamma = energy::gamma_of(eps, r.alpha);
            r.trace = tr;
            r.lambda = lambda_from_json(doc.at("duals").at("lambda"));
            for (MachineIndex i = 0; i < inst.machines; ++i) r.V.push_back(energy::build_fractional_weight(inst, tr, i));
            return verify::verify_flow_energy_duals(r, eps, r.alpha, r.gamma);
        }
        case Engine::Energy: {
            const auto grids = emin::grids_from_json(doc.at("grid"));
            const double alpha = inst.alpha.value_or(2.0);
            const auto r = emin::greedy_assign(inst, grids,
                                               std::vector<emin::PowerFunction>(inst.machines, emin::power_law(alpha)),
                                               emin::default_smooth_params(alpha));
            if (!(r.trace.records == tr.records)) throw Violated("stored trace differs from the greedy replay");
            return verify::verify_energy_config_duals(r, max_configs, seed);
        }
        }
    } catch (const Json::exception& ex) {
        throw InvalidInput(std::string("malformed run document: ") + ex.what());
    } catch (const std::bad_optional_access&) {
        throw InvalidInput("malformed run document: flow_energy instance without alpha");
    }
    throw InvalidInput("unreachable");
}

// ---------------------------------------------------------------------------
// Ratio rows
// ---------------------------------------------------------------------------

struct RatioSettings {
    RunSettings run;
    std::size_t max_brute = 8;  // brute-force OPT only for n <= max_brute
    std::size_t max_configs = 10000;
    bool timing = false;
};

/// Fills dual_lb only when every dual constraint holds.
template <class Result>
void set_dual_bound(RatioRow& row, const Result& r) {
    try {
        row.dual_lb = oracle::dual_lower_bound(r);
    } catch (const InvalidInput&) {
        throw;
    } catch (const Error&) {
        row.duals_certified = false;
    }
}

/// One CSV row: algorithm cost, verified dual lower bound, brute-force OPT
/// when affordable.
inline RatioRow ratio_row(const std::string& id, const Instance& raw, const RatioSettings& s) {
    check_model(raw, s.run.engine);
    const auto t0 = std::chrono::steady_clock::now();
    const Instance inst = with_alpha(raw, s.run);
    RatioRow row;
    row.instance_id = id;
    row.engine = s.run.engine;
    row.eps = s.run.eps;
    row.n = inst.size();
    row.m = inst.machines;
    const bool brute = inst.size() <= s.max_brute;
    switch (s.run.engine) {
    case Engine::Flow: {
        const auto r = flow::simulate_flow(inst, s.run.eps);
        row.alg_cost = r.total_flow;
        row.rejected_frac = r.rejected_fraction;
        set_dual_bound(row, r);
        if (brute && inst.machines <= 3 && inst.size() <= 8) row.opt = oracle::brute_force_flow_opt(inst);
        break;
    }
    case Engine::FlowEnergy: {
        const auto r = energy::simulate_flow_energy(inst, s.run.eps);
        row.alpha = r.alpha;
        row.alg_cost = r.objective;
        row.rejected_frac = r.rejected_weight_fraction;
        set_dual_bound(row, r);
        break;
    }
    case Engine::Energy: {
        const double alpha = inst.alpha.value_or(2.0);
        row.eps.reset();
        row.alpha = alpha;
        const std::vector<emin::PowerFunction> powers(inst.machines, emin::power_law(alpha));
        const auto r = emin::greedy_assign(inst, s.run.grids, powers, emin::default_smooth_params(alpha));
        row.alg_cost = r.total_energy;
        row.duals_certified = verify::verify_energy_config_duals(r, s.max_configs).certified();
        if (row.duals_certified) row.dual_lb = r.duals.objective();
        if (brute) {
            try {
                row.opt = oracle::brute_force_energy_opt(inst, s.run.grids, powers);
            } catch (const InvalidInput&) {
                // too many strategy combinations; leave the cell empty
            }
        }
        break;
    }
    }
    if (s.timing)
        row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

// ---------------------------------------------------------------------------
// Adversary rows
// ---------------------------------------------------------------------------

/// lb1 against the flow engine. The `opt` cell holds the adversary's cost,
/// which bounds OPT from above, so ratio_vs_opt is the transcript's ratio.
inline RatioRow lb1_row(double eps, double L, bool timing) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto t = oracle::lb1_adversary(eps, L, oracle::flow_engine(eps));
    Instance inst;
    inst.model = Model::Flow;
    inst.machines = 1;
    inst.jobs = t.jobs;
    canonicalize(inst);
    const auto r = flow::simulate_flow(inst, eps);
    RatioRow row;
    row.instance_id = "lb1_L" + num(L);
    row.engine = Engine::Flow;
    row.eps = eps;
    row.n = t.jobs.size();
    row.m = 1;
    row.alg_cost = t.algorithm_cost;
    set_dual_bound(row, r);
    row.opt = t.adversary_cost;
    row.rejected_frac = r.rejected_fraction;
    if (timing) row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

inline RatioRow lb2_row(int alpha, const emin::Grids& grids, bool timing) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto t = oracle::lb2_adversary(alpha, grids);
    RatioRow row;
    row.instance_id = "lb2_a" + std::to_string(alpha);
    row.engine = Engine::Energy;
    row.alpha = alpha;
    row.n = t.jobs.size();
    row.m = 1;
    row.alg_cost = t.algorithm_cost;
    row.opt = t.adversary_cost;
    if (timing) row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

/// Hardware concurrency, capped by REJECTSCHED_THREADS when set.
inline std::size_t thread_count() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("REJECTSCHED_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || cap < 1) throw InvalidInput("REJECTSCHED_THREADS must be a positive integer");
        n = std::min(n, static_cast<std::size_t>(cap));
    }
    return n;
}

/// Runs task(k) for k in [0, count) on the pool; results keep index order.
/// The first exception (lowest index) is rethrown after all workers stop.
template <class T, class F>
std::vector<T> parallel_map(std::size_t count, F task) {
    std::vector<std::optional<T>> out(count);
    std::vector<std::exception_ptr> errs(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next++) < count;) {
            try {
                out[k] = task(k);
            } catch (...) {
                errs[k] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < std::min(thread_count(), count); ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    std::vector<T> res;
    for (auto& o : out) res.push_back(std::move(*o));
    return res;
}

// ---------------------------------------------------------------------------
// Instance generation
// ---------------------------------------------------------------------------

struct GenerateSettings {
    GenParams params;
    emin::Grids grids = default_grids();
    long slack_slots = 4;
};

inline Instance generate(const GenerateSettings& s) {
    if (s.params.model == Model::EnergyDeadline) {
        GenParams p = s.params;
        if (!p.alpha) p.alpha = 2.0;
        return emin::gen_random_energy(p, s.grids, s.slack_slots);
    }
    return gen_random(s.params);
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

/// Entry point of the `rejectsched` tool. `args` excludes the program name.
/// Exit codes: 0 success, 1 dual violations, 2 usage or input errors.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Online scheduling with rejection: simulate, verify duals, compare against oracles"};
    app.name("rejectsched");
    app.require_subcommand(1);

    // generate
    GenerateSettings gen;
    std::string gen_model = "flow", gen_grid, gen_out;
    double gen_alpha = 0.0;
    auto* g = app.add_subcommand("generate", "Write a seeded random instance as JSON");
    g->add_option("--model", gen_model, "flow | flow_energy | energy_deadline")->capture_default_str();
    g->add_option("--n", gen.params.n, "Number of jobs")->capture_default_str();
    g->add_option("--m", gen.params.m, "Number of machines")->capture_default_str();
    g->add_option("--seed", gen.params.seed)->capture_default_str();
    g->add_option("--alpha", gen_alpha, "Power exponent (flow_energy, energy_deadline)");
    g->add_option("--horizon", gen.params.horizon, "Releases fall in [0, horizon]")->capture_default_str();
    g->add_option("--p-lo", gen.params.p_lo)->capture_default_str();
    g->add_option("--p-hi", gen.params.p_hi)->capture_default_str();
    g->add_option("--w-lo", gen.params.w_lo)->capture_default_str();
    g->add_option("--w-hi", gen.params.w_hi)->capture_default_str();
    g->add_option("--slack", gen.slack_slots, "Extra deadline slots (energy_deadline)")->capture_default_str();
    g->add_option("--grid", gen_grid, "Grid config JSON (energy_deadline)");
    g->add_option("--out", gen_out, "Output file (stdout when omitted)");

    // run
    RunSettings rs;
    std::string run_engine = "flow", run_in, run_grid, run_out, run_csv;
    double run_alpha = 0.0;
    auto* r = app.add_subcommand("run", "Run an engine; write trace, duals and summary as JSON");
    r->add_option("instance", run_in, "Instance JSON")->required();
    r->add_option("--engine", run_engine, "flow | flow_energy | energy")->capture_default_str();
    r->add_option("--eps", rs.eps)->capture_default_str();
    r->add_option("--alpha", run_alpha, "Override the instance's alpha");
    r->add_option("--grid", run_grid, "Grid config JSON (energy engine)");
    r->add_option("--out", run_out, "Output file (stdout when omitted)");
    r->add_option("--csv", run_csv, "Also write the trace as CSV");

    // verify
    std::string ver_in, ver_out;
    std::size_t ver_configs = 10000;
    std::uint64_t ver_seed = 1;
    auto* v = app.add_subcommand("verify", "Check every dual constraint of a run document");
    v->add_option("run", ver_in, "JSON written by `run`")->required();
    v->add_option("--out", ver_out, "Report file (stdout when omitted)");
    v->add_option("--max-configs", ver_configs, "Energy configurations checked per machine before sampling")
        ->capture_default_str();
    v->add_option("--seed", ver_seed, "Sampling seed")->capture_default_str();

    // ratio
    RatioSettings ratio;
    std::string rat_engine = "flow", rat_in, rat_grid, rat_out, rat_id;
    double rat_alpha = 0.0;
    auto* q = app.add_subcommand("ratio", "One CSV row: cost, dual bound, brute-force OPT");
    q->add_option("instance", rat_in, "Instance JSON")->required();
    q->add_option("--engine", rat_engine)->capture_default_str();
    q->add_option("--eps", ratio.run.eps)->capture_default_str();
    q->add_option("--alpha", rat_alpha);
    q->add_option("--grid", rat_grid);
    q->add_option("--max-brute", ratio.max_brute, "Largest n given to the brute-force oracle")->capture_default_str();
    q->add_option("--id", rat_id, "instance_id cell (file name when omitted)");
    q->add_option("--out", rat_out);
    q->add_flag("--timing", ratio.timing, "Fill runtime_ms (breaks byte-identical output)");

    // sweep
    std::string sw_engine = "flow", sw_adv, sw_grid, sw_out;
    std::vector<double> sw_eps{0.5}, sw_alpha{2.0}, sw_L{4.0, 16.0, 64.0};
    GenParams sw_gen;
    std::size_t sw_count = 10, sw_brute = 8;
    long sw_slack = 4;
    bool sw_timing = false;
    auto* w = app.add_subcommand("sweep", "CSV table over seeds and eps/alpha/L grids");
    w->add_option("--engine", sw_engine)->capture_default_str();
    w->add_option("--adversary", sw_adv, "lb1 | lb2 instead of random instances");
    w->add_option("--eps", sw_eps, "Comma-separated list")->delimiter(',')->capture_default_str();
    w->add_option("--alpha", sw_alpha, "Comma-separated list")->delimiter(',')->capture_default_str();
    w->add_option("--L", sw_L, "Comma-separated list (lb1)")->delimiter(',')->capture_default_str();
    w->add_option("--seed", sw_gen.seed, "First seed")->capture_default_str();
    w->add_option("--count", sw_count, "Instances per parameter point")->capture_default_str();
    w->add_option("--n", sw_gen.n)->capture_default_str();
    w->add_option("--m", sw_gen.m)->capture_default_str();
    w->add_option("--horizon", sw_gen.horizon)->capture_default_str();
    w->add_option("--p-lo", sw_gen.p_lo)->capture_default_str();
    w->add_option("--p-hi", sw_gen.p_hi)->capture_default_str();
    w->add_option("--w-hi", sw_gen.w_hi, "Weights uniform on [1, w-hi] (flow_energy)")->capture_default_str();
    w->add_option("--slack", sw_slack)->capture_default_str();
    w->add_option("--grid", sw_grid);
    w->add_option("--max-brute", sw_brute)->capture_default_str();
    w->add_option("--out", sw_out);
    w->add_flag("--timing", sw_timing);

    // adversary
    std::string adv_kind = "lb1", adv_out, adv_grid;
    double adv_eps = 0.5, adv_L = 4.0;
    int adv_alpha = 2;
    auto* a = app.add_subcommand("adversary", "Play a lower-bound adversary and write the transcript");
    a->add_option("kind", adv_kind, "lb1 | lb2")->capture_default_str();
    a->add_option("--eps", adv_eps)->capture_default_str();
    a->add_option("--L", adv_L)->capture_default_str();
    a->add_option("--alpha", adv_alpha, "Integer alpha (lb2)")->capture_default_str();
    a->add_option("--grid", adv_grid, "Grid config JSON (lb2)");
    a->add_option("--out", adv_out);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    try {
        if (g->parsed()) {
            gen.params.model = model_from_string(gen_model);
            if (gen_alpha > 0.0) gen.params.alpha = gen_alpha;
            gen.grids = load_grids(gen_grid);
            write_text(gen_out, serialize(generate(gen)) + "\n", out);
        } else if (r->parsed()) {
            rs.engine = engine_from_string(run_engine);
            if (run_alpha > 0.0) rs.alpha = run_alpha;
            rs.grids = load_grids(run_grid);
            const Instance inst = parse_instance(read_file(run_in));
            if (rs.engine == Engine::Energy) warn_alignment(inst, rs.grids, err);
            const Json doc = run_document(inst, rs);
            write_text(run_out, doc.dump(2) + "\n", out);
            if (!run_csv.empty()) {
                std::ostringstream csv;
                write_csv(csv, trace_from_json(doc.at("trace")));
                write_text(run_csv, csv.str(), out);
            }
        } else if (v->parsed()) {
            const auto rep = verify_document(parse_json(read_file(ver_in)), ver_configs, ver_seed);
            write_text(ver_out, verify::to_json(rep).dump(2) + "\n", out);
            return rep.certified() ? 0 : 1;
        } else if (q->parsed()) {
            ratio.run.engine = engine_from_string(rat_engine);
            if (rat_alpha > 0.0) ratio.run.alpha = rat_alpha;
            ratio.run.grids = load_grids(rat_grid);
            const Instance inst = parse_instance(read_file(rat_in));
            if (ratio.run.engine == Engine::Energy) warn_alignment(inst, ratio.run.grids, err);
            const std::string id = rat_id.empty() ? std::filesystem::path(rat_in).stem().string() : rat_id;
            const auto row = ratio_row(id, inst, ratio);
            write_text(rat_out, std::string(kCsvHeader) + row.csv(), out);
            if (!row.duals_certified) {
                err << "error: dual constraints violated; dual_lb left empty\n";
                return 1;
            }
        } else if (w->parsed()) {
            const emin::Grids grids = load_grids(sw_grid);
            std::vector<std::function<RatioRow()>> jobs;
            if (sw_adv == "lb1") {
                for (double e : sw_eps)
                    for (double L : sw_L) jobs.push_back([=] { return lb1_row(e, L, sw_timing); });
            } else if (sw_adv == "lb2") {
                for (double al : sw_alpha) {
                    if (al != std::floor(al)) throw InvalidInput("lb2 needs integer alpha values");
                    jobs.push_back([=] { return lb2_row(static_cast<int>(al), grids, sw_timing); });
                }
            } else if (!sw_adv.empty()) {
                throw InvalidInput("unknown adversary '" + sw_adv + "'");
            } else {
                const Engine eng = engine_from_string(sw_engine);
                const std::vector<double> alphas =
                    eng == Engine::Flow ? std::vector<double>{0.0} : sw_alpha;
                for (double e : sw_eps)
                    for (double al : alphas)
                        for (std::size_t k = 0; k < sw_count; ++k)
                            jobs.push_back([=, &grids] {
                                GenerateSettings gs;
                                gs.params = sw_gen;
                                gs.params.seed = sw_gen.seed + k;
                                gs.params.model = model_of(eng);
                                if (eng != Engine::Flow) gs.params.alpha = al;
                                gs.params.w_lo = 1.0;
                                if (eng != Engine::FlowEnergy) gs.params.w_hi = 1.0;
                                gs.grids = grids;
                                gs.slack_slots = sw_slack;
                                RatioSettings s;
                                s.run.engine = eng;
                                s.run.eps = e;
                                s.run.grids = grids;
                                s.max_brute = sw_brute;
                                s.timing = sw_timing;
                                return ratio_row(std::to_string(gs.params.seed), generate(gs), s);
                            });
            }
            const auto rows = parallel_map<RatioRow>(jobs.size(), [&](std::size_t k) { return jobs[k](); });
            std::string text = kCsvHeader;
            std::size_t uncertified = 0;
            for (const auto& row : rows) {
                text += row.csv();
                uncertified += row.duals_certified ? 0 : 1;
            }
            write_text(sw_out, text, out);
            if (uncertified) {
                err << "error: " << uncertified << " rows with violated dual constraints; dual_lb left empty\n";
                return 1;
            }
        } else if (a->parsed()) {
            oracle::AdversaryTranscript t;
            if (adv_kind == "lb1") t = oracle::lb1_adversary(adv_eps, adv_L, oracle::flow_engine(adv_eps));
            else if (adv_kind == "lb2") t = oracle::lb2_adversary(adv_alpha, load_grids(adv_grid));
            else throw InvalidInput("unknown adversary '" + adv_kind + "'");
            write_text(adv_out, oracle::to_json(t).dump(2) + "\n", out);
        }
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace rejectsched::cli
