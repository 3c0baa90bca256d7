#include "resprep/pipeline.hpp"

#include "resprep/errors.hpp"

namespace resprep {

Pipeline make_pipeline(const PotentialConfig& initial, const PotentialConfig& final, const UnitSystem& unit,
                       const Numerics& numerics)
{
    Pipeline p{initial, final, unit, numerics, {}, {}};
    GroundStateOptions gs;
    gs.dx = numerics.dx;
    p.ground = ground_state(initial, unit, gs);
    const auto pole = lowest_resonance(final, unit);
    if (!pole) {
        throw Error("make_pipeline: the final configuration has no resonance");
    }
    p.pole = *pole;
    return p;
}

PropagationSetup decay_setup(const Pipeline& pipeline, double t_switch, double t_end)
{
    auto setup = decay_profile(pipeline.schedule(t_switch), pipeline.unit);
    const auto& n = pipeline.numerics;
    setup.dx = n.dx;
    setup.dt = n.dt;
    setup.box_length = n.box_length;
    setup.t_end = t_end;
    setup.e_cut = n.e_cut;
    setup.absorber = AbsorberSpec{n.absorber_width_fraction, n.absorber_strength};
    setup.refine_initial_state = n.refine_initial_state;
    return setup;
}

PropagationSetup spectrum_setup(const Pipeline& pipeline, double t_switch)
{
    const auto schedule = pipeline.schedule(t_switch);
    auto setup = spectrum_profile(schedule, projection_time(schedule, pipeline.numerics.epsilon_v), pipeline.unit);
    const auto& n = pipeline.numerics;
    setup.dx = n.dx;
    if (n.spectrum_dt > 0.0) {
        setup.dt = n.spectrum_dt;
    }
    setup.e_cut = n.e_cut;
    setup.growth_threshold = n.growth_threshold;
    setup.max_points = n.max_points;
    setup.refine_initial_state = n.refine_initial_state;
    return setup;
}

PropagationResult run_decay(const Pipeline& pipeline, double t_switch, double t_end)
{
    return propagate(pipeline.ground.wavefunction, decay_setup(pipeline, t_switch, t_end));
}

SpectrumRun run_spectrum(const Pipeline& pipeline, double t_switch)
{
    SpectrumRun run;
    if (t_switch == 0.0) {
        run.state = pipeline.ground.wavefunction;
        return run;
    }
    const auto setup = spectrum_setup(pipeline, t_switch);
    auto result = propagate(pipeline.ground.wavefunction, setup);
    run.state = std::move(result.final_state);
    run.projection_time = setup.t_end;
    run.steps = result.steps;
    return run;
}

std::vector<double> spectrum_energies(const Pipeline& pipeline)
{
    return energy_grid(pipeline.pole.e_r, pipeline.pole.gamma, pipeline.numerics.energy_grid);
}

double lorentzian_objective(const Pipeline& pipeline, double t_switch)
{
    const auto run = run_spectrum(pipeline, t_switch);
    return lorentzian_deviation(run.state, pipeline.final, pipeline.unit, pipeline.pole);
}

double exponential_objective(const Pipeline& pipeline, double t_switch, double fit_t_min, double horizon,
                             double t_end)
{
    const auto result = run_decay(pipeline, t_switch, t_end);
    return exponential_deviation(result.record, fit_t_min, horizon);
}

}  // namespace resprep
