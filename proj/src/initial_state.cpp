#include "resprep/initial_state.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "resprep/errors.hpp"

namespace resprep {

double WavefunctionGrid::norm() const
{
    double s = 0.0;
    for (const auto& v : values) {
        s += std::norm(v);
    }
    return s * dx;
}

complex bound_state_value(const PotentialConfig& config, const UnitSystem& unit, double big_k, double x)
{
    if (x <= 0.0) {
        return 0.0;
    }
    const complex k{0.0, big_k};
    const complex q2 = k * k + 2.0 * config.v_well / unit.kappa;
    if (x <= config.d) {
        return even_pair(q2, x).sine_over;
    }
    const auto well = even_pair(q2, config.d);
    const complex u_d = well.sine_over;
    const complex slope_d = well.cosine;
    const complex qp2 = k * k - 2.0 * config.v_barrier / unit.kappa;
    const double edge = config.outer_edge();
    if (x <= edge) {
        const auto bar = even_pair(qp2, x - config.d);
        return bar.cosine * u_d + bar.sine_over * slope_d;
    }
    const auto bar = even_pair(qp2, config.b);
    const complex u_edge = bar.cosine * u_d + bar.sine_over * slope_d;
    return u_edge * std::exp(-big_k * (x - edge));
}

GroundState ground_state(const PotentialConfig& config, const UnitSystem& unit, const GroundStateOptions& options)
{
    config.validate();
    if (!(options.dx > 0.0) || options.length < 0.0 || !(options.tail_cutoff > 0.0)) {
        throw InvalidArgument("ground_state: invalid grid options");
    }
    const auto levels = find_bound_states(config, unit);
    if (levels.empty()) {
        throw NoBoundState("ground_state: the configuration holds no bound state");
    }
    if (levels.size() > 1 && !options.select_lowest) {
        throw AmbiguousGroundState("ground_state: the configuration holds " + std::to_string(levels.size()) +
                                   " bound states");
    }
    GroundState gs;
    gs.pole = levels.front();
    gs.energy = gs.pole.e_r;
    const double big_k = gs.pole.k_res.imag();

    // The interior is at most a few decay lengths wide, so the peak is found
    // by sampling it; the tail beyond d + b decays monotonically.
    const double edge = config.outer_edge();
    double peak = 0.0;
    const auto n_inside = static_cast<std::size_t>(std::ceil(edge / options.dx)) + 1;
    for (std::size_t j = 0; j < n_inside; ++j) {
        peak = std::max(peak, std::abs(bound_state_value(config, unit, big_k, options.dx * static_cast<double>(j))));
    }
    const double at_edge = std::abs(bound_state_value(config, unit, big_k, edge));
    gs.truncation_point = edge + std::max(0.0, std::log(at_edge / (options.tail_cutoff * peak)) / big_k);

    const double length = options.length > 0.0 ? options.length : gs.truncation_point;
    const auto n = static_cast<std::size_t>(std::floor(length / options.dx + 1e-9)) + 1;
    auto& psi = gs.wavefunction;
    psi.dx = options.dx;
    psi.values.assign(n, complex{0.0, 0.0});
    for (std::size_t j = 1; j < n; ++j) {
        const double x = psi.x(j);
        if (x > gs.truncation_point) {
            break;
        }
        psi.values[j] = bound_state_value(config, unit, big_k, x);
    }
    const double norm = psi.norm();
    const double scale = 1.0 / std::sqrt(norm);
    // Real and positive inside the well.
    for (auto& v : psi.values) {
        v = complex{v.real() * scale, 0.0};
    }
    return gs;
}

void write_wavefunction_csv(std::ostream& out, const WavefunctionGrid& psi)
{
    out << "x,re_psi,im_psi,density\n";
    const auto old = out.precision(12);
    for (std::size_t j = 0; j < psi.size(); ++j) {
        const auto v = psi.values[j];
        out << psi.x(j) << ',' << v.real() << ',' << v.imag() << ',' << std::norm(v) << '\n';
    }
    out.precision(old);
}

}  // namespace resprep
