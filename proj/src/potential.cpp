#include "resprep/potential.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "resprep/errors.hpp"

namespace resprep {

namespace {

void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw InvalidArgument(message);
    }
}

double overlap(double lo, double hi, double a, double b)
{
    return std::max(0.0, std::min(hi, b) - std::max(lo, a));
}

}  // namespace

void PotentialConfig::validate() const
{
    require(std::isfinite(d) && d > 0.0, "PotentialConfig: d must be positive");
    require(std::isfinite(b) && b >= 0.0, "PotentialConfig: b must be non-negative");
    require(std::isfinite(v_well) && v_well >= 0.0, "PotentialConfig: v_well must be non-negative");
    require(std::isfinite(v_barrier) && v_barrier >= 0.0,
            "PotentialConfig: v_barrier must be non-negative");
}

double PotentialConfig::value_at(double x) const
{
    if (x <= 0.0) {
        return hard_wall;
    }
    if (x <= d) {
        return -v_well;
    }
    if (x <= d + b) {
        return v_barrier;
    }
    return 0.0;
}

double PotentialConfig::cell_average(double lo, double hi) const
{
    lo = std::max(lo, 0.0);
    if (!(hi > lo)) {
        return value_at(std::max(hi, 0.0));
    }
    const double well = overlap(lo, hi, 0.0, d);
    const double barrier = overlap(lo, hi, d, d + b);
    return (-v_well * well + v_barrier * barrier) / (hi - lo);
}

void SwitchingSchedule::validate() const
{
    initial.validate();
    final.validate();
    require(std::isfinite(t_switch) && t_switch >= 0.0, "SwitchingSchedule: t_switch must be >= 0");
}

double SwitchingSchedule::initial_weight(double t) const
{
    require(t >= 0.0, "SwitchingSchedule: time must be non-negative, got " + std::to_string(t));
    if (is_sudden()) {
        return t == 0.0 ? 1.0 : 0.0;
    }
    return std::exp(-t / t_switch);
}

double SwitchingSchedule::max_potential_change() const
{
    // The difference is piecewise constant with breakpoints from both configs.
    std::vector<double> edges{0.0, initial.d, initial.outer_edge(), final.d, final.outer_edge()};
    std::sort(edges.begin(), edges.end());
    double change = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        if (edges[i + 1] > edges[i]) {
            const double mid = 0.5 * (edges[i] + edges[i + 1]);
            change = std::max(change, std::abs(final.value_at(mid) - initial.value_at(mid)));
        }
    }
    return change;
}

double potential_at(const SwitchingSchedule& schedule, double t, double x)
{
    const double w = schedule.initial_weight(t);
    if (x <= 0.0) {
        return hard_wall;
    }
    const double v_init = schedule.initial.value_at(x);
    const double v_fin = schedule.final.value_at(x);
    if (w == 1.0) {
        return v_init;
    }
    if (w == 0.0) {
        return v_fin;
    }
    return v_fin + (v_init - v_fin) * w;
}

std::vector<double> sample_interval_averages(const PotentialConfig& config, double dx, std::size_t n)
{
    std::vector<double> v(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = static_cast<double>(j) * dx;
        v[j] = config.cell_average(x, x + dx);
    }
    return v;
}

}  // namespace resprep
