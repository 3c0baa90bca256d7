#include "resprep/poles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "resprep/errors.hpp"

namespace resprep {

namespace {

constexpr double axis_angle_tolerance = 1e-9;

bool same_pole(complex a, complex b)
{
    return std::abs(a - b) <= 1e-8 * std::max(1.0, std::abs(a));
}

void add_unique(std::vector<complex>& poles, complex k)
{
    for (const auto& p : poles) {
        if (same_pole(p, k)) {
            return;
        }
    }
    poles.push_back(k);
}

double wrap_to_pi(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

struct ContourEvaluator {
    const PotentialConfig& config;
    const UnitSystem& unit;

    complex value_checked(complex k) const
    {
        const auto t = omega_terms(config, unit, k);
        const complex v = t.value;
        if (std::abs(v) <= 1e-13 * t.scale() || v == complex{0.0, 0.0}) {
            std::ostringstream msg;
            msg.precision(12);
            msg << "winding_number: contour passes through a zero near k = " << k;
            throw Error(msg.str());
        }
        return v;
    }

    /// Change of arg(Omega) along the straight segment a -> b.
    double segment(complex a, complex b, complex fa, complex fb, int depth) const
    {
        const complex m = 0.5 * (a + b);
        const complex fm = value_checked(m);
        const double whole = std::arg(fb / fa);
        const double first = std::arg(fm / fa);
        const double second = std::arg(fb / fm);
        // |Omega'/Omega| bounds how far the argument can turn inside the segment.
        const double turn = std::abs(omega_derivative(config, unit, m) / fm) * std::abs(b - a);
        const double quarter = 0.25 * std::numbers::pi;
        if (std::abs(first) < quarter && std::abs(second) < quarter && turn < 0.5 * std::numbers::pi &&
            std::abs(wrap_to_pi(first + second - whole)) < 1e-9) {
            return first + second;
        }
        if (depth > 50) {
            throw Error("winding_number: adaptive contour subdivision did not converge");
        }
        return segment(a, m, fa, fm, depth + 1) + segment(m, b, fm, fb, depth + 1);
    }
};

void check_region(const SearchRegion& r)
{
    if (!(r.re_max > r.re_min) || !(r.im_max > r.im_min)) {
        throw InvalidArgument("SearchRegion: empty rectangle");
    }
}

}  // namespace

std::string to_string(PoleKind kind)
{
    switch (kind) {
    case PoleKind::bound:
        return "bound";
    case PoleKind::resonance:
        return "resonance";
    case PoleKind::antiresonance:
        return "antiresonance";
    case PoleKind::virtual_state:
        return "virtual";
    }
    return "unknown";
}

Resonance make_resonance(complex k, const UnitSystem& unit)
{
    Resonance r;
    const bool on_axis = std::abs(k.real()) <= axis_angle_tolerance * std::abs(k);
    if (on_axis) {
        k = complex{0.0, k.imag()};
        r.kind = k.imag() > 0.0 ? PoleKind::bound : PoleKind::virtual_state;
    } else if (k.imag() < 0.0) {
        r.kind = k.real() > 0.0 ? PoleKind::resonance : PoleKind::antiresonance;
    } else {
        std::ostringstream msg;
        msg << "make_resonance: pole " << k << " off the imaginary axis in the upper half plane";
        throw InvalidArgument(msg.str());
    }
    r.k_res = k;
    r.e_complex = 0.5 * unit.kappa * k * k;
    r.e_r = r.e_complex.real();
    if (on_axis) {
        r.e_complex = complex{r.e_r, 0.0};
        r.gamma = 0.0;
        r.tau = std::numeric_limits<double>::infinity();
    } else {
        // gamma = 2 kappa k1 |k2|; the antiresonance mirror has the same width.
        r.gamma = 2.0 * std::abs(r.e_complex.imag());
        r.tau = 1.0 / r.gamma;
    }
    return r;
}

SearchRegion bound_state_region(const PotentialConfig& config, const UnitSystem& unit)
{
    const double k_max = std::sqrt(2.0 * config.v_well / unit.kappa);
    const double reach = std::max(k_max, 1e-3);
    return {-0.01 * reach, 0.01 * reach, 1e-7 * reach, k_max + 0.01 * reach};
}

int winding_number(const PotentialConfig& config, const UnitSystem& unit, const SearchRegion& region)
{
    check_region(region);
    const ContourEvaluator eval{config, unit};
    const std::array<complex, 4> corners{complex{region.re_min, region.im_min}, complex{region.re_max, region.im_min},
                                         complex{region.re_max, region.im_max},
                                         complex{region.re_min, region.im_max}};
    constexpr int pieces = 16;
    double total = 0.0;
    for (int side = 0; side < 4; ++side) {
        const complex a = corners[side];
        const complex b = corners[(side + 1) % 4];
        complex prev = a;
        complex f_prev = eval.value_checked(a);
        for (int i = 1; i <= pieces; ++i) {
            const complex next = a + (b - a) * (static_cast<double>(i) / pieces);
            const complex f_next = eval.value_checked(next);
            total += eval.segment(prev, next, f_prev, f_next, 0);
            prev = next;
            f_prev = f_next;
        }
    }
    const double turns = total / (2.0 * std::numbers::pi);
    const double rounded = std::round(turns);
    if (std::abs(turns - rounded) > 1e-3) {
        throw Error("winding_number: non-integer winding " + std::to_string(turns));
    }
    return static_cast<int>(rounded);
}

std::optional<complex> refine_pole(const PotentialConfig& config, const UnitSystem& unit, complex seed,
                                   int max_iterations)
{
    complex k = seed;
    for (int it = 0; it < max_iterations; ++it) {
        const complex f = omega(config, unit, k);
        const complex df = omega_derivative(config, unit, k);
        if (df == complex{0.0, 0.0} || !std::isfinite(std::abs(f))) {
            return std::nullopt;
        }
        complex step = f / df;
        const double cap = 0.5 * std::abs(k) + 0.05;
        if (std::abs(step) > cap) {
            step *= cap / std::abs(step);
        }
        k -= step;
        if (!std::isfinite(k.real()) || !std::isfinite(k.imag())) {
            return std::nullopt;
        }
        if (std::abs(step) <= 1e-15 * std::max(std::abs(k), 1e-6)) {
            break;
        }
    }
    if (is_pole(config, unit, k)) {
        return k;
    }
    return std::nullopt;
}

std::vector<Resonance> find_bound_states(const PotentialConfig& config, const UnitSystem& unit)
{
    config.validate();
    const double k_max = std::sqrt(2.0 * config.v_well / unit.kappa);
    std::vector<Resonance> out;
    if (k_max == 0.0) {
        return out;
    }
    // On k = iK the pole function is real: Omega(iK) = u'(d+b) + K u(d+b).
    auto f = [&](double big_k) { return omega(config, unit, complex{0.0, big_k}).real(); };
    // Sample uniformly in the well wave number q = sqrt(k_max^2 - K^2), whose
    // roots are roughly pi/d apart.
    const int samples = std::max(64, static_cast<int>(std::ceil(32.0 * k_max * config.d / std::numbers::pi)));
    std::vector<double> grid;
    for (int i = 0; i <= samples; ++i) {
        const double q = k_max * static_cast<double>(i) / samples;
        grid.push_back(std::sqrt(std::max(0.0, k_max * k_max - q * q)));
    }
    grid.back() = 1e-9 * k_max;  // K = 0 is the threshold, not a bound state
    std::sort(grid.begin(), grid.end());
    double f_lo = f(grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double f_hi = f(grid[i]);
        if (f_lo == 0.0 || (f_lo < 0.0) != (f_hi < 0.0)) {
            double root = grid[i - 1];
            if (f_lo != 0.0) {
                boost::uintmax_t iterations = 200;
                const auto bracket = boost::math::tools::toms748_solve(
                    f, grid[i - 1], grid[i], f_lo, f_hi, boost::math::tools::eps_tolerance<double>(), iterations);
                root = 0.5 * (bracket.first + bracket.second);
            }
            if (root > 0.0) {
                out.push_back(make_resonance(complex{0.0, root}, unit));
            }
        }
        f_lo = f_hi;
    }
    std::sort(out.begin(), out.end(), [](const Resonance& a, const Resonance& b) { return a.e_r < b.e_r; });
    return out;
}

namespace {

/// Newton seeds at the local minima of |Omega| along [k_lo, k_hi]. A narrow
/// resonance just below the axis shows up as a sharp dip there.
std::vector<complex> real_axis_seeds(const PotentialConfig& config, const UnitSystem& unit, double k_lo,
                                     double k_hi, int n)
{
    std::vector<complex> seeds;
    if (!(k_hi > k_lo)) {
        return seeds;
    }
    auto f = [&](double k) { return std::abs(omega(config, unit, complex{k, 0.0})); };
    std::vector<double> ks(n), vals(n);
    for (int i = 0; i < n; ++i) {
        ks[i] = k_lo + (k_hi - k_lo) * (i + 0.5) / n;
        vals[i] = f(ks[i]);
    }
    for (int i = 0; i < n; ++i) {
        const bool left = i == 0 || vals[i] <= vals[i - 1];
        const bool right = i + 1 == n || vals[i] <= vals[i + 1];
        if (!(left && right)) {
            continue;
        }
        const double a = i == 0 ? k_lo : ks[i - 1];
        const double b = i + 1 == n ? k_hi : ks[i + 1];
        const auto [k_min, f_min] = boost::math::tools::brent_find_minima(f, a, b, 50);
        const complex slope = omega_derivative(config, unit, complex{k_min, 0.0});
        const double depth = std::abs(slope) > 0.0 ? f_min / std::abs(slope) : 0.0;
        seeds.emplace_back(k_min, 0.0);
        seeds.emplace_back(k_min, -depth);
    }
    return seeds;
}

struct PoleSearch {
    const PotentialConfig& config;
    const UnitSystem& unit;
    std::vector<complex>& found;
    int max_depth = 14;

    int found_inside(const SearchRegion& r) const
    {
        return static_cast<int>(std::count_if(found.begin(), found.end(), [&](complex k) { return r.contains(k); }));
    }

    bool try_seed(const SearchRegion& r, complex seed)
    {
        const auto k = refine_pole(config, unit, seed);
        if (k && r.contains(*k)) {
            const auto before = found.size();
            add_unique(found, *k);
            return found.size() > before;
        }
        return false;
    }

    int safe_winding(const SearchRegion& r) const { return winding_number(config, unit, r); }

    void search(const SearchRegion& r, int expected, int depth)
    {
        if (expected <= found_inside(r)) {
            return;
        }
        if (expected == 1) {
            if (r.re_max > 0.0 && r.im_min < 0.0) {
                for (complex seed : real_axis_seeds(config, unit, std::max(r.re_min, 0.0), r.re_max, 32)) {
                    if (try_seed(r, seed)) {
                        return;
                    }
                }
            }
            const double w = r.re_max - r.re_min;
            const double h = r.im_max - r.im_min;
            const std::array<std::pair<double, double>, 5> offsets{
                {{0.5, 0.5}, {0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}}};
            for (const auto& [fx, fy] : offsets) {
                if (try_seed(r, complex{r.re_min + fx * w, r.im_min + fy * h})) {
                    return;
                }
            }
        }
        if (depth >= max_depth) {
            return;
        }
        // Split slightly off centre so sub-contours rarely graze a zero.
        const std::array<double, 3> fractions{0.5123, 0.4711, 0.5377};
        for (double frac : fractions) {
            const double xm = r.re_min + frac * (r.re_max - r.re_min);
            const double ym = r.im_min + (1.0 - frac) * (r.im_max - r.im_min);
            const std::array<SearchRegion, 4> quads{SearchRegion{r.re_min, xm, r.im_min, ym},
                                                    SearchRegion{xm, r.re_max, r.im_min, ym},
                                                    SearchRegion{r.re_min, xm, ym, r.im_max},
                                                    SearchRegion{xm, r.re_max, ym, r.im_max}};
            std::array<int, 4> counts{};
            try {
                for (std::size_t i = 0; i < 4; ++i) {
                    counts[i] = safe_winding(quads[i]);
                }
            } catch (const InvalidArgument&) {
                throw;
            } catch (const Error&) {
                continue;
            }
            for (std::size_t i = 0; i < 4; ++i) {
                if (counts[i] > 0) {
                    search(quads[i], counts[i], depth + 1);
                }
            }
            return;
        }
    }
};

}  // namespace

std::vector<Resonance> find_poles(const PotentialConfig& config, const UnitSystem& unit,
                                  const SearchRegion& region, int max_count)
{
    config.validate();
    check_region(region);
    const int expected = winding_number(config, unit, region);
    if (expected > max_count) {
        throw IncompleteSearch("find_poles: region holds more poles than max_count", 0, expected);
    }
    std::vector<complex> found;
    if (expected > 0) {
        // Bound states from the imaginary axis.
        if (region.re_min <= 0.0 && region.re_max >= 0.0 && region.im_max > 0.0) {
            for (const auto& r : find_bound_states(config, unit)) {
                if (region.contains(r.k_res)) {
                    add_unique(found, r.k_res);
                }
            }
        }
        // Resonances seeded from delay-time peaks along the real axis.
        if (region.re_max > 0.0 && region.im_min < 0.0 && region.im_max >= -0.05 * (region.re_max - region.re_min)) {
            const double k_lo = std::max(region.re_min, 1e-3 * region.re_max);
            const int n = 400;
            std::vector<double> ks(n), dts(n);
            for (int i = 0; i < n; ++i) {
                ks[i] = k_lo + (region.re_max - k_lo) * (i + 0.5) / n;
                try {
                    dts[i] = delay_time(config, unit, ks[i]);
                } catch (const RefinementFailure&) {
                    dts[i] = std::numeric_limits<double>::infinity();
                }
            }
            for (int i = 1; i + 1 < n; ++i) {
                if (dts[i] > 0.0 && dts[i] >= dts[i - 1] && dts[i] >= dts[i + 1]) {
                    const double gamma = std::isfinite(dts[i]) ? 4.0 / dts[i] : 0.0;
                    const double k2 = -gamma / (2.0 * unit.kappa * ks[i]);
                    const auto k = refine_pole(config, unit, complex{ks[i], k2});
                    if (k && region.contains(*k) && !(std::abs(k->real()) <= axis_angle_tolerance * std::abs(*k))) {
                        add_unique(found, *k);
                    }
                }
            }
        }
        if (static_cast<int>(found.size()) < expected && region.re_max > 0.0 && region.im_min < 0.0) {
            for (complex seed : real_axis_seeds(config, unit, std::max(region.re_min, 0.0), region.re_max, 400)) {
                const auto k = refine_pole(config, unit, seed);
                if (k && region.contains(*k) && !(std::abs(k->real()) <= axis_angle_tolerance * std::abs(*k))) {
                    add_unique(found, *k);
                }
            }
        }
        if (static_cast<int>(found.size()) < expected) {
            PoleSearch search{config, unit, found};
            search.search(region, expected, 0);
        }
    }
    if (static_cast<int>(found.size()) != expected) {
        std::ostringstream msg;
        msg << "find_poles: located " << found.size() << " poles but the contour encloses " << expected;
        throw IncompleteSearch(msg.str(), static_cast<int>(found.size()), expected);
    }
    std::vector<Resonance> out;
    out.reserve(found.size());
    for (const auto& k : found) {
        out.push_back(make_resonance(k, unit));
    }
    std::sort(out.begin(), out.end(), [](const Resonance& a, const Resonance& b) {
        if (a.e_r != b.e_r) {
            return a.e_r < b.e_r;
        }
        return a.k_res.imag() > b.k_res.imag();
    });
    return out;
}

std::optional<Resonance> lowest_resonance(const PotentialConfig& config, const UnitSystem& unit, double k_max)
{
    // The first quadrant holds no zeros; lifting the top edge off the axis
    // keeps the contour clear of resonances narrower than rounding.
    const SearchRegion region{1e-4, k_max, -k_max, 0.01 * k_max};
    std::vector<Resonance> poles;
    try {
        poles = find_poles(config, unit, region, 256);
    } catch (const IncompleteSearch&) {
        return std::nullopt;
    }
    for (const auto& p : poles) {
        if (p.kind == PoleKind::resonance && p.e_r > 0.0) {
            return p;
        }
    }
    return std::nullopt;
}

}  // namespace resprep
