#pragma once

#include "rejectsched/types.hpp"

#include <algorithm>
#include <vector>

namespace rejectsched {

/// Right-continuous piecewise-linear function of time, zero before its first
/// breakpoint. Built by summing pieces `value + slope * (t - from)` supported
/// on half-open intervals [from, to).
class PiecewiseLinear {
public:
    struct Piece {
        Time from;
        Time to;
        double value;  // at `from`
        double slope;
    };

    PiecewiseLinear() = default;

    explicit PiecewiseLinear(const std::vector<Piece>& pieces) {
        struct Delta {
            Time t;
            double a, b;
            int open;
        };
        std::vector<Delta> deltas;
        deltas.reserve(2 * pieces.size());
        for (const auto& p : pieces) {
            if (!(p.to > p.from)) continue;
            const double a = p.value - p.slope * p.from;
            deltas.push_back({p.from, a, p.slope, +1});
            if (p.to != kInfinity) deltas.push_back({p.to, -a, -p.slope, -1});
        }
        std::stable_sort(deltas.begin(), deltas.end(), [](const Delta& x, const Delta& y) { return x.t < y.t; });
        // Open-piece counting makes intervals with no support exactly zero
        // instead of carrying cancellation residue.
        double a = 0.0, b = 0.0;
        int open = 0;
        for (std::size_t k = 0; k < deltas.size();) {
            const Time t = deltas[k].t;
            for (; k < deltas.size() && deltas[k].t == t; ++k) {
                a += deltas[k].a;
                b += deltas[k].b;
                open += deltas[k].open;
            }
            if (open == 0) a = b = 0.0;
            breaks_.push_back(t);
            coef_.push_back({a, b});
        }
    }

    /// Builds a step function from an explicit breakpoint list; `values[k]`
    /// holds on [times[k], times[k+1]).
    static PiecewiseLinear steps(std::vector<Time> times, std::vector<double> values) {
        PiecewiseLinear f;
        f.breaks_ = std::move(times);
        for (double v : values) f.coef_.push_back({v, 0.0});
        return f;
    }

    double operator()(Time t) const {
        const auto k = interval_of(t);
        return k < 0 ? 0.0 : eval(static_cast<std::size_t>(k), t);
    }

    /// Limit from the left at t.
    double left_limit(Time t) const {
        auto it = std::lower_bound(breaks_.begin(), breaks_.end(), t);
        if (it == breaks_.begin()) return 0.0;
        return eval(static_cast<std::size_t>(it - breaks_.begin() - 1), t);
    }

    /// Exact integral over [0, inf) assuming the function vanishes after the
    /// last breakpoint.
    double integral() const {
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < breaks_.size(); ++k) {
            const Time t0 = breaks_[k], t1 = breaks_[k + 1];
            total += coef_[k].a * (t1 - t0) + coef_[k].b * (t1 * t1 - t0 * t0) / 2.0;
        }
        return total;
    }

    const std::vector<Time>& breakpoints() const { return breaks_; }
    double slope_after(std::size_t k) const { return coef_.at(k).b; }
    bool empty() const { return breaks_.empty(); }

private:
    struct Coef {
        double a, b;
    };

    long interval_of(Time t) const {
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
        return static_cast<long>(it - breaks_.begin()) - 1;
    }

    double eval(std::size_t k, Time t) const { return coef_[k].a + coef_[k].b * t; }

    std::vector<Time> breaks_;
    std::vector<Coef> coef_;
};

}  // namespace rejectsched
