#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rejectsched {

using JobId = std::int64_t;
using MachineIndex = std::size_t;
using Time = double;

inline constexpr Time kInfinity = std::numeric_limits<Time>::infinity();

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an instance, grid or config violates its invariants.
class InvalidInput : public Error {
public:
    using Error::Error;
};

enum class Model { Flow, FlowEnergy, EnergyDeadline };

inline std::string_view to_string(Model m) {
    switch (m) {
    case Model::Flow: return "flow";
    case Model::FlowEnergy: return "flow_energy";
    case Model::EnergyDeadline: return "energy_deadline";
    }
    return "?";
}

inline Model model_from_string(std::string_view s) {
    if (s == "flow") return Model::Flow;
    if (s == "flow_energy") return Model::FlowEnergy;
    if (s == "energy_deadline") return Model::EnergyDeadline;
    throw InvalidInput("unknown model '" + std::string(s) + "'");
}

struct Job {
    JobId id = 0;
    Time release = 0.0;
    double weight = 1.0;
    std::vector<double> proc;  // volume per machine
    std::optional<Time> deadline;

    double p(MachineIndex i) const { return proc.at(i); }
    double density(MachineIndex i) const { return weight / proc.at(i); }

    friend bool operator==(const Job&, const Job&) = default;
};

struct Instance {
    Model model = Model::Flow;
    std::size_t machines = 1;
    std::optional<double> alpha;
    std::vector<Job> jobs;  // canonical arrival order: (release, id)

    std::size_t size() const { return jobs.size(); }

    friend bool operator==(const Instance&, const Instance&) = default;
};

/// Checks every job/instance invariant and sorts jobs into arrival order.
/// The Flow model forces unit weights.
inline void canonicalize(Instance& inst) {
    if (inst.machines == 0) throw InvalidInput("machine count must be positive");
    if (inst.alpha && !(*inst.alpha > 1.0)) throw InvalidInput("alpha must be > 1");
    std::set<JobId> ids;
    for (auto& j : inst.jobs) {
        const std::string tag = "job " + std::to_string(j.id) + ": ";
        if (!ids.insert(j.id).second) throw InvalidInput(tag + "duplicate id");
        if (!(j.release >= 0.0)) throw InvalidInput(tag + "release must be non-negative");
        if (j.proc.size() != inst.machines)
            throw InvalidInput(tag + "proc length " + std::to_string(j.proc.size()) +
                               " does not match machine count " + std::to_string(inst.machines));
        for (double p : j.proc)
            if (!(p > 0.0)) throw InvalidInput(tag + "processing volumes must be positive");
        if (inst.model == Model::Flow) j.weight = 1.0;
        if (!(j.weight > 0.0)) throw InvalidInput(tag + "weight must be positive");
        if (j.deadline && !(*j.deadline > j.release)) throw InvalidInput(tag + "deadline before release");
        if (inst.model == Model::EnergyDeadline && !j.deadline)
            throw InvalidInput(tag + "energy_deadline model requires a deadline");
    }
    std::stable_sort(inst.jobs.begin(), inst.jobs.end(), [](const Job& a, const Job& b) {
        return a.release != b.release ? a.release < b.release : a.id < b.id;
    });
}

enum class Outcome { Completed, RejectedRule1, RejectedRule2, RejectedWeightCounter, NeverStarted };

inline std::string_view to_string(Outcome o) {
    switch (o) {
    case Outcome::Completed: return "completed";
    case Outcome::RejectedRule1: return "rejected_rule1";
    case Outcome::RejectedRule2: return "rejected_rule2";
    case Outcome::RejectedWeightCounter: return "rejected_weight_counter";
    case Outcome::NeverStarted: return "never_started";
    }
    return "?";
}

inline Outcome outcome_from_string(std::string_view s) {
    for (Outcome o : {Outcome::Completed, Outcome::RejectedRule1, Outcome::RejectedRule2,
                      Outcome::RejectedWeightCounter, Outcome::NeverStarted})
        if (to_string(o) == s) return o;
    throw InvalidInput("unknown outcome '" + std::string(s) + "'");
}

inline bool is_rejection(Outcome o) {
    return o == Outcome::RejectedRule1 || o == Outcome::RejectedRule2 ||
           o == Outcome::RejectedWeightCounter;
}

/// Execution of one job. A job rejected before it ever started has
/// start == end == rejection time. `remaining` is the volume left at the
/// moment the record closed (zero for completed jobs).
struct ExecutionRecord {
    JobId job = 0;
    MachineIndex machine = 0;
    Time start = 0.0;
    double speed = 1.0;
    Time end = 0.0;
    Outcome outcome = Outcome::NeverStarted;
    double remaining = 0.0;

    friend bool operator==(const ExecutionRecord&, const ExecutionRecord&) = default;
};

enum class EventKind { Dispatch, Start, Complete, Reject, DefinitiveFinish };

inline std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::Dispatch: return "dispatch";
    case EventKind::Start: return "start";
    case EventKind::Complete: return "complete";
    case EventKind::Reject: return "reject";
    case EventKind::DefinitiveFinish: return "definitive_finish";
    }
    return "?";
}

inline EventKind event_kind_from_string(std::string_view s) {
    for (EventKind k : {EventKind::Dispatch, EventKind::Start, EventKind::Complete, EventKind::Reject,
                        EventKind::DefinitiveFinish})
        if (to_string(k) == s) return k;
    throw InvalidInput("unknown event kind '" + std::string(s) + "'");
}

struct Event {
    Time time = 0.0;
    EventKind kind = EventKind::Dispatch;
    JobId job = 0;
    MachineIndex machine = 0;

    friend bool operator==(const Event&, const Event&) = default;
};

struct ScheduleTrace {
    std::map<JobId, ExecutionRecord> records;
    std::vector<Event> events;  // non-decreasing in time
    double objective = 0.0;
    std::set<JobId> rejected_ids;
    std::map<JobId, Time> definitive_finish;

    friend bool operator==(const ScheduleTrace&, const ScheduleTrace&) = default;
};

}  // namespace rejectsched
