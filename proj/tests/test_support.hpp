#pragma once

#include "rejectsched/instance_io.hpp"

#include <cstdint>

namespace rejectsched::testing {

inline Job make_job(JobId id, Time release, std::vector<double> proc, double weight = 1.0) {
    Job j;
    j.id = id;
    j.release = release;
    j.weight = weight;
    j.proc = std::move(proc);
    return j;
}

inline Instance make_instance(Model model, std::size_t machines, std::vector<Job> jobs,
                              std::optional<double> alpha = std::nullopt) {
    Instance inst;
    inst.model = model;
    inst.machines = machines;
    inst.alpha = alpha;
    inst.jobs = std::move(jobs);
    canonicalize(inst);
    return inst;
}

/// Random flow instance with 1..max_n jobs on 1..max_m machines; sizes and
/// horizon are drawn from the seed too so the corpus mixes light and heavy load.
inline Instance random_flow_instance(std::uint64_t seed, std::size_t max_n, std::size_t max_m) {
    Rng shape(seed ^ 0x9e3779b97f4a7c15ULL);
    GenParams g;
    g.seed = seed;
    g.n = static_cast<std::size_t>(shape.integer(1, static_cast<std::int64_t>(max_n)));
    g.m = static_cast<std::size_t>(shape.integer(1, static_cast<std::int64_t>(max_m)));
    g.p_lo = 1.0;
    g.p_hi = shape.uniform(1.0, 20.0);
    g.horizon = shape.uniform(0.0, 3.0) * static_cast<double>(g.n);
    g.model = Model::Flow;
    return gen_random(g);
}

inline Instance random_energy_flow_instance(std::uint64_t seed, std::size_t max_n, std::size_t max_m,
                                            double alpha) {
    Rng shape(seed ^ 0xd1b54a32d192ed03ULL);
    GenParams g;
    g.seed = seed;
    g.n = static_cast<std::size_t>(shape.integer(1, static_cast<std::int64_t>(max_n)));
    g.m = static_cast<std::size_t>(shape.integer(1, static_cast<std::int64_t>(max_m)));
    g.p_lo = 0.5;
    g.p_hi = shape.uniform(0.5, 10.0);
    g.w_lo = 0.1;
    g.w_hi = shape.uniform(0.1, 5.0);
    g.horizon = shape.uniform(0.0, 3.0) * static_cast<double>(g.n);
    g.model = Model::FlowEnergy;
    g.alpha = alpha;
    return gen_random(g);
}

}  // namespace rejectsched::testing
