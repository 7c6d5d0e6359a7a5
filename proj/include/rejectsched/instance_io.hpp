#pragma once

#include "json.hpp"
#include "rejectsched/random.hpp"
#include "rejectsched/types.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace rejectsched {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

inline Json to_json(const Job& j) {
    Json out = {{"id", j.id}, {"release", j.release}, {"weight", j.weight}, {"proc", j.proc}};
    if (j.deadline) out["deadline"] = *j.deadline;
    return out;
}

inline Json to_json(const Instance& inst) {
    Json out = {{"model", std::string(to_string(inst.model))}, {"machines", inst.machines}};
    if (inst.alpha) out["alpha"] = *inst.alpha;
    Json jobs = Json::array();
    for (const auto& j : inst.jobs) jobs.push_back(to_json(j));
    out["jobs"] = std::move(jobs);
    return out;
}

inline Instance instance_from_json(const Json& doc) {
    Instance inst;
    try {
        inst.model = model_from_string(doc.at("model").get<std::string>());
        const auto m = doc.at("machines").get<std::int64_t>();
        if (m <= 0) throw InvalidInput("machine count must be positive");
        inst.machines = static_cast<std::size_t>(m);
        if (doc.contains("alpha") && !doc["alpha"].is_null()) inst.alpha = doc["alpha"].get<double>();
        for (const auto& jj : doc.at("jobs")) {
            Job job;
            job.id = jj.at("id").get<JobId>();
            job.release = jj.at("release").get<double>();
            job.weight = jj.value("weight", 1.0);
            job.proc = jj.at("proc").get<std::vector<double>>();
            if (jj.contains("deadline") && !jj["deadline"].is_null()) job.deadline = jj["deadline"].get<double>();
            inst.jobs.push_back(std::move(job));
        }
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("malformed instance: ") + e.what());
    }
    canonicalize(inst);
    return inst;
}

inline Json parse_json(std::istream& in) {
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InvalidInput(std::string("malformed JSON: ") + e.what());
    }
}

inline Json parse_json(const std::string& text) {
    std::istringstream in(text);
    return parse_json(in);
}

inline Instance parse_instance(std::istream& in) { return instance_from_json(parse_json(in)); }
inline Instance parse_instance(const std::string& text) { return instance_from_json(parse_json(text)); }

inline std::string serialize(const Instance& inst) { return to_json(inst).dump(2); }

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

inline Json to_json(const ScheduleTrace& tr) {
    Json records = Json::array();
    for (const auto& [id, r] : tr.records)
        records.push_back({{"job", r.job},
                           {"machine", r.machine},
                           {"start", r.start},
                           {"speed", r.speed},
                           {"end", r.end},
                           {"outcome", std::string(to_string(r.outcome))},
                           {"remaining", r.remaining}});
    Json events = Json::array();
    for (const auto& e : tr.events)
        events.push_back({{"time", e.time}, {"kind", std::string(to_string(e.kind))}, {"job", e.job},
                          {"machine", e.machine}});
    Json finish = Json::array();
    for (const auto& [id, t] : tr.definitive_finish) finish.push_back({{"job", id}, {"time", t}});
    return {{"records", records},
            {"events", events},
            {"objective", tr.objective},
            {"rejected_ids", tr.rejected_ids},
            {"definitive_finish", finish}};
}

inline ScheduleTrace trace_from_json(const Json& doc) {
    ScheduleTrace tr;
    try {
        for (const auto& r : doc.at("records")) {
            ExecutionRecord rec;
            rec.job = r.at("job").get<JobId>();
            rec.machine = r.at("machine").get<MachineIndex>();
            rec.start = r.at("start").get<double>();
            rec.speed = r.at("speed").get<double>();
            rec.end = r.at("end").get<double>();
            rec.outcome = outcome_from_string(r.at("outcome").get<std::string>());
            rec.remaining = r.value("remaining", 0.0);
            tr.records[rec.job] = rec;
        }
        for (const auto& e : doc.at("events"))
            tr.events.push_back({e.at("time").get<double>(), event_kind_from_string(e.at("kind").get<std::string>()),
                                 e.at("job").get<JobId>(), e.at("machine").get<MachineIndex>()});
        tr.objective = doc.at("objective").get<double>();
        tr.rejected_ids = doc.at("rejected_ids").get<std::set<JobId>>();
        for (const auto& f : doc.at("definitive_finish"))
            tr.definitive_finish[f.at("job").get<JobId>()] = f.at("time").get<double>();
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("malformed trace: ") + e.what());
    }
    return tr;
}

/// CSV export: `job,machine,start,speed,end,outcome`, one row per job in id order.
inline void write_csv(std::ostream& out, const ScheduleTrace& tr) {
    out << "job,machine,start,speed,end,outcome\n";
    for (const auto& [id, r] : tr.records) {
        out << r.job << ',' << r.machine << ',' << Json(r.start).dump() << ',' << Json(r.speed).dump() << ','
            << Json(r.end).dump() << ',' << to_string(r.outcome) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

struct GenParams {
    std::uint64_t seed = 1;
    std::size_t n = 8;
    std::size_t m = 1;
    double p_lo = 1.0, p_hi = 10.0;
    double w_lo = 1.0, w_hi = 1.0;
    Time horizon = 10.0;
    Model model = Model::Flow;
    std::optional<double> alpha;
};

/// Releases uniform on [0, horizon], one independent volume per (job, machine),
/// weights uniform on the weight range (unit for the Flow model).
inline Instance gen_random(const GenParams& g) {
    if (!(g.p_lo > 0.0) || g.p_hi < g.p_lo) throw InvalidInput("invalid processing range");
    if (!(g.w_lo > 0.0) || g.w_hi < g.w_lo) throw InvalidInput("invalid weight range");
    if (g.n == 0 || g.m == 0) throw InvalidInput("need n >= 1 and m >= 1");
    if (!(g.horizon >= 0.0)) throw InvalidInput("invalid horizon");
    if (g.model == Model::EnergyDeadline)
        throw InvalidInput("energy_deadline instances come from gen_random_energy");
    Rng rng(g.seed);
    Instance inst;
    inst.model = g.model;
    inst.machines = g.m;
    inst.alpha = g.alpha;
    if (g.model == Model::FlowEnergy && !inst.alpha) inst.alpha = 2.0;
    for (std::size_t k = 0; k < g.n; ++k) {
        Job j;
        j.id = static_cast<JobId>(k);
        j.release = rng.uniform(0.0, g.horizon);
        const double w = rng.uniform(g.w_lo, g.w_hi);
        j.weight = g.model == Model::Flow ? 1.0 : w;
        j.proc.resize(g.m);
        for (auto& p : j.proc) p = rng.uniform(g.p_lo, g.p_hi);
        inst.jobs.push_back(std::move(j));
    }
    canonicalize(inst);
    return inst;
}

}  // namespace rejectsched
