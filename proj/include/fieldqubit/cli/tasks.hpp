#pragma once

#include "fieldqubit/circuit.hpp"
#include "fieldqubit/cli/config.hpp"
#include "fieldqubit/field.hpp"
#include "fieldqubit/io/csv.hpp"
#include "fieldqubit/noise.hpp"
#include "fieldqubit/numerics.hpp"
#include "fieldqubit/tlsbath.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace fieldqubit::cli {

inline const std::vector<std::string>& task_names() {
    static const std::vector<std::string> names{"spectrum",        "field-sweep", "esr",          "echo-fit",
                                                "spin-freeze-fit", "telegraph",   "hyperpol-sim", "hyperpol-fit"};
    return names;
}

namespace parse {

/// `energies: {e_c_ghz, e_l_ghz, e_j_ghz}` or `elements: {capacitance_f, inductance_h, critical_current_a}`.
inline circuit::CircuitEnergies energies(const Node& p) {
    if (p.has("elements") && !p.has("energies")) {
        const Node n = p.at("elements");
        return circuit::energies_from_elements(
            {n.at("capacitance_f").positive(), n.at("inductance_h").positive(), n.at("critical_current_a").positive()});
    }
    const Node n = p.at("energies");
    circuit::CircuitEnergies e;
    e.charging = n.at("e_c_ghz").positive();
    e.inductive = n.at("e_l_ghz").positive();
    e.josephson = n.at("e_j_ghz").positive();
    return e;
}

inline json energies_json(const circuit::CircuitEnergies& e) {
    json j;
    j["e_c_ghz"] = e.charging;
    j["e_l_ghz"] = e.inductive;
    j["e_j_ghz"] = e.josephson;
    return j;
}

inline int basis(const Node& p) {
    const long b = p.integer_or("basis", circuit::default_basis_size);
    if (b < circuit::min_basis_size || b > circuit::max_basis_size)
        throw SchemaError(p.child_path("basis"), "must lie in [" + std::to_string(circuit::min_basis_size) + ", " +
                                                     std::to_string(circuit::max_basis_size) + "]");
    return static_cast<int>(b);
}

inline tlsbath::QubitState qubit_state(const Node& n) {
    return n.choice({"ground", "excited"}) == "excited" ? tlsbath::QubitState::excited : tlsbath::QubitState::ground;
}

inline std::string state_name(tlsbath::QubitState s) { return s == tlsbath::QubitState::excited ? "excited" : "ground"; }

inline tlsbath::QubitState opposite(tlsbath::QubitState s) {
    return s == tlsbath::QubitState::excited ? tlsbath::QubitState::ground : tlsbath::QubitState::excited;
}

/// `model: {gamma_q_per_s, p_th, ladder: {...}, loss?: {rate_per_s, population}}`.
/// The ladder takes either `coupling_per_s` or `total_cross_relaxation_per_s`.
inline tlsbath::HyperpolParameters hyperpol_model(const Node& m) {
    tlsbath::HyperpolParameters p;
    p.gamma_q = m.at("gamma_q_per_s").positive();
    p.p_th = m.at("p_th").non_negative();
    if (p.p_th >= 1.0) throw SchemaError(m.child_path("p_th"), "must be < 1");
    const Node l = m.at("ladder");
    const long count = l.integer_or("count", 100);
    if (count < 1) throw SchemaError(l.child_path("count"), "must be >= 1");
    p.count = static_cast<int>(count);
    p.spacing = l.at("spacing_per_s").positive();
    p.offset = l.has("offset_per_s") ? l.at("offset_per_s").non_negative() : 0.0;
    if (p.offset > 0.5 * p.spacing) throw SchemaError(l.child_path("offset_per_s"), "must lie in [0, spacing/2]");
    p.decoherence = l.at("gamma_2_per_s").positive();
    p.tls_relaxation = l.positive_or("gamma_t_per_s", 20.0);
    if (l.has("total_cross_relaxation_per_s")) {
        p.coupling = 1.0;
        p.coupling = tlsbath::with_total_cross_relaxation(p.ladder(), l.at("total_cross_relaxation_per_s").positive())
                         .coupling;
    } else {
        p.coupling = l.at("coupling_per_s").positive();
    }
    if (auto loss = m.find("loss")) {
        p.loss.rate = loss->at("rate_per_s").non_negative();
        p.loss.population = loss->number_or("population", p.p_th);
    }
    return p;
}

inline json hyperpol_model_json(const tlsbath::HyperpolParameters& p) {
    json l;
    l["count"] = p.count;
    l["spacing_per_s"] = p.spacing;
    l["offset_per_s"] = p.offset;
    l["coupling_per_s"] = p.coupling;
    l["gamma_2_per_s"] = p.decoherence;
    l["gamma_t_per_s"] = p.tls_relaxation;
    json m;
    m["gamma_q_per_s"] = p.gamma_q;
    m["p_th"] = p.p_th;
    m["ladder"] = l;
    if (p.loss.rate > 0.0) m["loss"] = {{"rate_per_s", p.loss.rate}, {"population", p.loss.population}};
    return m;
}

/// Shared protocol settings; repetitions/target/init may be overridden per trace.
inline tlsbath::ProtocolConfig protocol(const Node& n, tlsbath::ProtocolConfig cfg = {}) {
    if (n.has("repetitions")) cfg.repetitions = n.at("repetitions").integer();
    if (cfg.repetitions < 1) throw SchemaError(n.child_path("repetitions"), "must be >= 1");
    if (n.has("target")) cfg.target = qubit_state(n.at("target"));
    cfg.init = n.has("init") ? qubit_state(n.at("init")) : opposite(cfg.target);
    cfg.cycle_duration = n.positive_or("cycle_duration_s", cfg.cycle_duration);
    cfg.strobe_interval = n.positive_or("strobe_interval_s", cfg.strobe_interval);
    cfg.trace_duration = n.positive_or("trace_duration_s", cfg.trace_duration);
    cfg.reset_fidelity = n.number_or("reset_fidelity", cfg.reset_fidelity);
    if (cfg.reset_fidelity < 0.0 || cfg.reset_fidelity > 1.0)
        throw SchemaError(n.child_path("reset_fidelity"), "must lie in [0, 1]");
    return cfg;
}

inline json protocol_json(const tlsbath::ProtocolConfig& c) {
    json j;
    j["repetitions"] = c.repetitions;
    j["target"] = state_name(c.target);
    j["init"] = state_name(c.init);
    j["cycle_duration_s"] = c.cycle_duration;
    j["strobe_interval_s"] = c.strobe_interval;
    j["trace_duration_s"] = c.trace_duration;
    j["reset_fidelity"] = c.reset_fidelity;
    return j;
}

inline noise::DecayCurve decay_curve(Context& ctx, const Node& file) {
    return io::decay_curve_from_table(ctx.read_table(file));
}

} // namespace parse

inline json convergence(const numerics::FitResult& f) {
    json j;
    j["converged"] = f.converged;
    j["identifiable"] = f.identifiable;
    j["iterations"] = f.iterations;
    j["residual_norm"] = f.residual_norm;
    return j;
}

// ---- spectrum ----------------------------------------------------------

inline json run_spectrum(Context& ctx) {
    const Node p = ctx.parameters();
    circuit::CircuitEnergies e = parse::energies(p);
    const auto fluxes = grid(p.at("flux_phi0"));
    const int basis = parse::basis(p);
    if (auto f = p.find("field")) {
        e = field::scale_energies(e, f->at("field_t").non_negative(), f->at("bc_junction_t").positive(),
                                  f->at("bc_inductor_t").positive());
    }
    const bool with_slope = p.boolean_or("sensitivity", false);

    std::vector<double> phi, ge, gf, slope;
    int largest_basis = 0;
    std::vector<double> sorted = fluxes;
    std::sort(sorted.begin(), sorted.end());
    for (double x : sorted) {
        const auto t = circuit::transition_frequencies(e, x, basis);
        largest_basis = std::max(largest_basis, t.basis_size);
        phi.push_back(x);
        ge.push_back(t.f_ge);
        gf.push_back(t.f_gf);
        if (with_slope) slope.push_back(circuit::flux_sensitivity(e, x, basis).per_flux_quantum);
    }
    if (with_slope)
        ctx.write("spectrum.csv", io::format_csv({"flux_phi0", "f_ge_ghz", "f_gf_ghz", "dw_ge_dflux_rad_per_s_phi0"},
                                                 {phi, ge, gf, slope}));
    else
        ctx.write("spectrum.csv", io::format_csv({"flux_phi0", "f_ge_ghz", "f_gf_ghz"}, {phi, ge, gf}));

    const auto sweet = circuit::transition_frequencies(e, 0.5, basis);
    const auto el = circuit::elements_from_energies(e);
    const auto lowest = std::min_element(ge.begin(), ge.end()) - ge.begin();
    json r;
    r["energies"] = parse::energies_json(e);
    r["elements"] = {{"capacitance", quantity(el.capacitance, "F")},
                     {"inductance", quantity(el.inductance, "H")},
                     {"critical_current", quantity(el.critical_current, "A")}};
    r["results"] = {{"f_ge_half_flux", quantity(sweet.f_ge, "GHz")},
                    {"f_gf_half_flux", quantity(sweet.f_gf, "GHz")},
                    {"plasma_frequency", quantity(e.plasma_frequency(), "GHz")},
                    {"f_ge_minimum", quantity(ge[static_cast<std::size_t>(lowest)], "GHz")},
                    {"f_ge_minimum_flux", quantity(phi[static_cast<std::size_t>(lowest)], "Phi0")},
                    {"largest_basis", largest_basis}};
    return r;
}

// ---- field-sweep -------------------------------------------------------

inline json run_field_sweep(Context& ctx) {
    const Node p = ctx.parameters();
    json r;
    json results;

    // The circuit is only needed for the frequency sweep.
    if (auto fields_node = p.find("fields_t")) {
        const circuit::CircuitEnergies e0 = parse::energies(p);
        const int basis = parse::basis(p);
        const double flux = p.number_or("flux_phi0", 0.5);
        r["energies"] = parse::energies_json(e0);
        const Node bc = p.at("critical_fields");
        const double bc_j = bc.at("junction_t").positive();
        const double bc_l = bc.at("inductor_t").positive();
        const auto fields = grid(*fields_node);
        const auto base = circuit::transition_frequencies(e0, flux, basis);
        std::vector<double> b, ge, gf, shift, ej, elc, res;
        std::optional<std::pair<double, double>> resonator;
        if (auto rn = p.find("resonator"))
            resonator = {rn->at("f_r0_ghz").positive(), rn->at("critical_field_t").positive()};
        for (double field : fields) {
            const auto e = field::scale_energies(e0, field, bc_j, bc_l);
            const auto t = circuit::transition_frequencies(e, flux, basis);
            b.push_back(field);
            ge.push_back(t.f_ge);
            gf.push_back(t.f_gf);
            shift.push_back(t.f_ge / base.f_ge - 1.0);
            ej.push_back(e.josephson);
            elc.push_back(e.inductive);
            if (resonator)
                res.push_back(field::resonator_frequency(resonator->first, field,
                                                         {resonator->second, field::Element::resonator}));
        }
        std::vector<std::string> header{"field_t", "f_ge_ghz", "f_gf_ghz", "relative_shift", "e_j_ghz", "e_l_ghz"};
        std::vector<std::vector<double>> cols{b, ge, gf, shift, ej, elc};
        if (resonator) {
            header.emplace_back("resonator_ghz");
            cols.push_back(res);
        }
        ctx.write("field_sweep.csv", io::format_csv(header, cols));
        results["f_ge_zero_field"] = quantity(base.f_ge, "GHz");
        results["relative_shift_at_max_field"] = quantity(shift.back(), "1");
        results["max_field"] = quantity(b.back(), "T");
    }

    if (auto g = p.find("gradiometer")) {
        circuit::GradiometerGeometry geo{g->at("l1_h").non_negative(), g->at("ls_h").non_negative(),
                                         g->at("l2_h").non_negative(), g->at("l3_h").non_negative()};
        results["asymmetry"] = quantity(geo.asymmetry(), "1");
        results["effective_inductance"] = quantity(circuit::effective_inductance(geo), "H");
        if (g->has("area1_m2")) {
            const double ratio = circuit::periodicity_ratio(geo, g->at("area1_m2").positive(), g->at("area2_m2").non_negative());
            // A perfectly balanced gradiometer has no field period at all.
            results["periodicity_ratio"] = std::isfinite(ratio) ? quantity(ratio, "1") : json{{"value", "inf"}, {"unit", "1"}};
        }
    }

    if (auto d = p.find("gap_data")) {
        const auto mode = d->at("mode").choice({"gap", "resonator"}) == "gap" ? field::GapFitMode::gap
                                                                               : field::GapFitMode::resonator;
        const auto table = ctx.read_table(d->at("csv"));
        const auto fields = table.numbers("field_t");
        const auto values = table.numbers("value");
        const auto sigma = table.has_column("sigma") ? table.numbers("sigma") : std::vector<double>(fields.size(), 1.0);
        std::vector<field::FieldSample> samples;
        for (std::size_t i = 0; i < fields.size(); ++i) samples.push_back({fields[i], values[i], sigma[i]});
        const auto fit = field::fit_critical_field(samples, mode);
        results["critical_field"] = quantity(fit.critical_field, fit.critical_field_error, "T");
        results["zero_field_value"] =
            quantity(fit.zero_field_value, mode == field::GapFitMode::gap ? "1" : "GHz");
        r["convergence"] = convergence(fit.fit);
    }
    if (results.empty())
        throw SchemaError(p.child_path("fields_t"), "missing required key (or one of gradiometer, gap_data)");
    r["results"] = results;
    return r;
}

// ---- esr ---------------------------------------------------------------

inline json run_esr(Context& ctx) {
    const Node p = ctx.parameters();
    const auto freqs = grid(p.at("frequencies_ghz"));
    field::EsrModel model;
    model.g_factor = p.positive_or("g_factor", 2.0);
    std::vector<double> bfield, pop;
    const bool thermal = p.has("temperature_k");
    const double temperature = thermal ? p.at("temperature_k").positive() : 0.0;
    for (double f : freqs) {
        bfield.push_back(field::esr_field(f, model));
        if (thermal) pop.push_back(field::thermal_population(f, temperature));
    }
    if (thermal)
        ctx.write("esr.csv", io::format_csv({"f_ghz", "esr_field_t", "thermal_population"}, {freqs, bfield, pop}));
    else
        ctx.write("esr.csv", io::format_csv({"f_ghz", "esr_field_t"}, {freqs, bfield}));
    json results;
    results["esr_field_first"] = quantity(bfield.front(), "T");
    results["field_per_ghz"] = quantity(field::esr_field(1.0, model), "T/GHz");
    if (auto c = p.find("compensation"))
        results["compensation_field"] = quantity(
            field::compensation_field(c->at("parallel_field_t").number(), c->at("misalignment_rad").number()), "T");
    if (auto m = p.find("measured_population")) {
        results["effective_temperature"] = quantity(
            field::temperature_from_population(m->at("f_ghz").positive(), m->at("population").number()), "K");
    }
    json r;
    r["g_factor"] = model.g_factor;
    r["results"] = results;
    return r;
}

// ---- echo-fit ----------------------------------------------------------

inline json run_echo_fit(Context& ctx) {
    const Node p = ctx.parameters();
    const auto e = parse::energies(p);
    const int basis = parse::basis(p);
    const double tol = p.positive_or("sweet_spot_tolerance_phi0", 1e-6);
    const Node index_node = p.at("index");
    const auto index = ctx.read_table(index_node);
    const auto fluxes = index.numbers("flux_phi0");
    const auto files = index.strings("file");
    const auto base = ctx.input_path(index_node).parent_path();
    std::vector<noise::FluxCurve> curves;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const std::string text = io::read_file(base / files[i]);
        ctx.digest.update(text);
        curves.push_back({fluxes[i], io::decay_curve_from_table(io::parse_csv(text, files[i]))});
    }
    const auto fit = noise::joint_fit_echo(curves, e, basis, tol);
    std::vector<double> phi, rate, err, slope, pinned;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        phi.push_back(curves[i].flux);
        rate.push_back(fit.rates.gaussian_rates[i]);
        err.push_back(fit.rates.gaussian_rate_errors[i]);
        slope.push_back(fit.sensitivities[i]);
        pinned.push_back(fit.rates.pinned[i] ? 1.0 : 0.0);
    }
    ctx.write("echo_rates.csv",
              io::format_csv({"flux_phi0", "gamma_phi_per_s", "gamma_phi_error_per_s", "abs_dw_dflux_rad_per_s_phi0",
                              "pinned"},
                             {phi, rate, err, slope, pinned}));
    json r;
    r["parameters"] = {{"gamma_exp", quantity(fit.rates.gamma_exp, fit.rates.gamma_exp_error, "1/s")},
                       {"sqrt_a_phi", quantity(fit.sqrt_a_phi, fit.sqrt_a_phi_error, "Phi0")}};
    r["derived"] = {{"a_phi", quantity(fit.a_phi(), 2.0 * fit.sqrt_a_phi * fit.sqrt_a_phi_error, "Phi0^2")},
                    {"curves", curves.size()}};
    r["convergence"] = convergence(fit.rates.fit);
    return r;
}

// ---- spin-freeze-fit ---------------------------------------------------

inline json run_spin_freeze_fit(Context& ctx) {
    const Node p = ctx.parameters();
    const auto table = ctx.read_table(p.at("data"));
    const auto fields = table.numbers("field_t");
    const auto amps = table.numbers("amplitude_phi0");
    const auto sigma = table.has_column("sigma") ? table.numbers("sigma") : std::vector<double>(fields.size(), 1.0);
    std::vector<noise::AmplitudeSample> samples;
    for (std::size_t i = 0; i < fields.size(); ++i) samples.push_back({fields[i], amps[i], sigma[i]});
    const bool floor = p.boolean_or("include_floor", false);
    const auto fit = noise::fit_spin_temperature(samples, floor);
    std::vector<double> model;
    for (double b : fields) model.push_back(std::sqrt(noise::flux_noise_power(b, fit.model)));
    ctx.write("spin_freeze_model.csv",
              io::format_csv({"field_t", "amplitude_phi0", "model_phi0"}, {fields, amps, model}));
    const double sqrt_a0 = fit.fit.parameters[0];
    json r;
    r["parameters"] = {{"spin_temperature", quantity(fit.model.spin_temperature, fit.spin_temperature_error, "K")},
                       {"sqrt_a0", quantity(sqrt_a0, fit.fit.standard_error(0), "Phi0")}};
    if (floor)
        r["parameters"]["sqrt_floor"] = quantity(fit.fit.parameters[2], fit.fit.standard_error(2), "Phi0");
    r["derived"] = {{"a0", quantity(fit.model.a0, 2.0 * sqrt_a0 * fit.fit.standard_error(0), "Phi0^2")}};
    r["convergence"] = convergence(fit.fit);
    return r;
}

// ---- telegraph ---------------------------------------------------------

inline noise::TelegraphProcess telegraph_process(const Node& n) {
    noise::TelegraphProcess proc;
    proc.amplitude = n.number_or("amplitude", 1.0);
    if (n.has("gamma_up_per_s") || !n.has("gamma1_per_s")) {
        proc.gamma_up = n.at("gamma_up_per_s").non_negative();
        proc.gamma_down = n.at("gamma_down_per_s").non_negative();
    } else {
        const auto rates = noise::detailed_balance_rates(n.at("gamma1_per_s").positive(), n.at("p_th").non_negative());
        proc.gamma_up = rates.up;
        proc.gamma_down = rates.down;
    }
    return proc;
}

/// Least-squares slope of log10(y) against log10(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log10(x[i]), ly = std::log10(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline json run_telegraph(Context& ctx) {
    const Node p = ctx.parameters();
    json results;
    if (auto f = p.find("fluctuator")) {
        const auto proc = telegraph_process(*f);
        proc.validate();
        const long samples = p.at("samples").integer();
        if (samples < 2) throw SchemaError(p.child_path("samples"), "must be >= 2");
        const double dt = p.at("dt_s").positive();
        const long segments = p.integer_or("segments", 64);
        if (segments < 1 || samples < 2 * segments) throw SchemaError(p.child_path("segments"), "need samples >= 2 * segments");
        const auto trace = noise::simulate_telegraph(proc, static_cast<double>(samples) * dt, dt, ctx.seed);
        const auto psd = numerics::estimate_psd(trace, dt, static_cast<std::size_t>(segments));
        std::vector<double> model;
        for (double fr : psd.frequencies) model.push_back(noise::lorentzian_psd(proc, 2.0 * constants::pi * fr));
        ctx.write("psd.csv", io::format_csv({"freq_hz", "psd", "psd_model"}, {psd.frequencies, psd.values, model}));
        if (p.boolean_or("write_trace", false)) {
            std::vector<double> t(trace.size());
            for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) * dt;
            ctx.write("trace.csv", io::format_csv({"t_s", "value"}, {t, trace}));
        }
        double mean = 0.0;
        for (double v : trace) mean += v;
        mean /= static_cast<double>(trace.size());
        results["gamma1"] = quantity(proc.gamma1(), "1/s");
        results["excited_fraction"] = quantity(mean / proc.amplitude, "1");
        results["variance_model"] = quantity(proc.variance(), "amplitude^2");
    }
    if (auto en = p.find("ensemble")) {
        const long count = en->at("count").integer();
        if (count < 1) throw SchemaError(en->child_path("count"), "must be >= 1");
        const double gmin = en->at("gamma_min_per_s").positive();
        const double gmax = en->at("gamma_max_per_s").positive();
        const auto procs = noise::log_uniform_ensemble(static_cast<std::size_t>(count), gmin, gmax,
                                                       en->number_or("p_th", 0.5 - 1e-9), en->number_or("amplitude", 1.0),
                                                       ctx.seed);
        const long points = en->integer_or("points", 200);
        const auto freqs = circuit::linear_grid(std::log10(gmin / 10.0), std::log10(gmax * 10.0), static_cast<std::size_t>(points));
        std::vector<double> f, omega;
        for (double lf : freqs) {
            f.push_back(std::pow(10.0, lf) / (2.0 * constants::pi));
            omega.push_back(std::pow(10.0, lf));
        }
        const auto s = noise::ensemble_psd(procs, omega);
        ctx.write("ensemble_psd.csv", io::format_csv({"freq_hz", "psd"}, {f, s}));
        // Slope over the two central decades of the rate band.
        std::vector<double> bx, by;
        const double centre = std::sqrt(gmin * gmax);
        for (std::size_t i = 0; i < omega.size(); ++i)
            if (omega[i] >= centre / 10.0 && omega[i] <= centre * 10.0) {
                bx.push_back(omega[i]);
                by.push_back(s[i]);
            }
        if (bx.size() >= 2) results["ensemble_loglog_slope"] = quantity(loglog_slope(bx, by), "1");
    }
    if (auto rm = p.find("ramsey")) {
        const auto times = grid(rm->at("times_s"));
        const auto curve = noise::ramsey_beating(rm->at("f_mean_hz").number(), rm->at("delta_f_hz").number(), times,
                                                 rm->at("t2_s").positive(), rm->number_or("weight", 0.5));
        ctx.write("ramsey.csv", io::format_decay_curve(curve));
    }
    if (results.empty() && !p.has("ramsey")) throw SchemaError(p.child_path("fluctuator"), "missing required key (or ensemble, ramsey)");
    json r;
    r["results"] = results;
    return r;
}

// ---- hyperpolarization -------------------------------------------------

inline json run_hyperpol_sim(Context& ctx) {
    const Node p = ctx.parameters();
    const auto model = parse::hyperpol_model(p.at("model"));
    static const json no_protocol = json::object();
    const Node proto = p.find("protocol").value_or(Node(no_protocol, p.child_path("protocol")));
    std::vector<tlsbath::QubitState> targets{tlsbath::QubitState::excited, tlsbath::QubitState::ground};
    if (auto t = p.find("targets")) {
        targets.clear();
        for (std::size_t i = 0; i < t->size(); ++i) targets.push_back(parse::qubit_state(t->index(i)));
    }
    const tlsbath::BathDynamics bath(model.ladder(), model.gamma_q, model.p_th, model.loss);
    json traces = json::array();
    for (auto target : targets) {
        tlsbath::ProtocolConfig base;
        base.target = target;
        const auto cfg = parse::protocol(proto, base);
        const auto state = bath.stabilize(bath.thermal_state(), cfg);
        const auto tr = bath.relax(state, cfg);
        double above = -1.0, below = 1.0;
        for (std::size_t i = 0; i < tr.curve.size(); ++i) {
            above = std::max(above, tr.curve.populations[i] - tr.reference[i]);
            below = std::min(below, tr.curve.populations[i] - tr.reference[i]);
        }
        const std::string name = "trace_" + parse::state_name(target) + ".csv";
        ctx.write(name, io::format_csv({"t_s", "population", "reference_population"},
                                       {tr.curve.times, tr.curve.populations, tr.reference}));
        json t;
        t["file"] = name;
        t["protocol"] = parse::protocol_json(cfg);
        t["max_above_reference"] = std::max(0.0, above);
        t["max_below_reference"] = std::max(0.0, -below);
        double mean_tls = 0.0;
        for (Eigen::Index k = 0; k < state.tls.size(); ++k) mean_tls += state.tls[k];
        t["mean_tls_population"] = mean_tls / static_cast<double>(std::max<Eigen::Index>(1, state.tls.size()));
        traces.push_back(t);
    }
    json r;
    r["model"] = parse::hyperpol_model_json(model);
    r["derived"] = {{"total_cross_relaxation", quantity(bath.total_cross_relaxation(), "1/s")},
                    {"gamma1", quantity(bath.gamma1(), "1/s")},
                    {"t1", quantity(1.0 / bath.gamma1(), "s")}};
    r["traces"] = traces;
    return r;
}

inline json run_hyperpol_fit(Context& ctx) {
    const Node p = ctx.parameters();
    const auto init = parse::hyperpol_model(p.at("initial"));
    tlsbath::ProtocolConfig shared;
    if (auto proto = p.find("protocol")) shared = parse::protocol(*proto, shared);
    const Node list = p.at("traces");
    if (list.size() == 0) throw SchemaError(list.path(), "need at least one trace");
    std::vector<tlsbath::ObservedTrace> traces;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const Node t = list.index(i);
        auto base = shared;
        if (!t.has("init") && t.has("target")) base.init = parse::opposite(parse::qubit_state(t.at("target")));
        traces.push_back({parse::protocol(t, base), parse::decay_curve(ctx, t.at("csv"))});
        names.push_back(t.at("csv").string());
    }
    const auto fit = tlsbath::fit_hyperpolarization(traces, init);

    const tlsbath::BathDynamics bath(fit.parameters.ladder(), fit.parameters.gamma_q, fit.parameters.p_th,
                                     fit.parameters.loss);
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto model = tlsbath::simulate_trace(bath, traces[i].config, traces[i].curve.times);
        ctx.write("fit_" + std::to_string(i) + ".csv",
                  io::format_csv({"t_s", "population", "model_population"},
                                 {traces[i].curve.times, traces[i].curve.populations, model}));
    }
    const auto& q = fit.parameters;
    const auto& e = fit.errors;
    json r;
    r["parameters"] = {{"gamma_q", quantity(q.gamma_q, e[0], "1/s")},
                       {"coupling", quantity(q.coupling, e[1], "1/s")},
                       {"gamma_2", quantity(q.decoherence, e[2], "1/s")},
                       {"spacing", quantity(q.spacing, e[3], "1/s")},
                       {"offset", quantity(q.offset, e[4], "1/s")},
                       {"gamma_t", quantity(q.tls_relaxation, e[5], "1/s")},
                       {"p_th", quantity(q.p_th, e[6], "1")}};
    r["parameters"]["gamma_2"]["held_fixed"] = true;
    r["derived"] = {{"total_cross_relaxation", quantity(fit.total_cross_relaxation, fit.total_cross_relaxation_error, "1/s")},
                    {"gamma1", quantity(fit.gamma1, fit.gamma1_error, "1/s")},
                    {"ladder_count", q.count}};
    r["convergence"] = convergence(fit.fit);
    r["convergence"]["identifiable"] = fit.identifiable;
    r["warnings"] = fit.warnings;
    r["traces"] = names;
    return r;
}

inline json dispatch_run(const std::string& task, Context& ctx) {
    if (task == "spectrum") return run_spectrum(ctx);
    if (task == "field-sweep") return run_field_sweep(ctx);
    if (task == "esr") return run_esr(ctx);
    if (task == "echo-fit") return run_echo_fit(ctx);
    if (task == "spin-freeze-fit") return run_spin_freeze_fit(ctx);
    if (task == "telegraph") return run_telegraph(ctx);
    if (task == "hyperpol-sim") return run_hyperpol_sim(ctx);
    return run_hyperpol_fit(ctx);
}

} // namespace fieldqubit::cli
