#pragma once

#include "fieldqubit/cli/config.hpp"
#include "fieldqubit/cli/tasks.hpp"

#include <cstdio>
#include <string>
#include <vector>

namespace fieldqubit::cli {

/// Synthetic data for a fit task. Writes the datasets, `ground_truth.json`
/// (independent of the seed) and a ready-to-run fit config `<task>.json`
/// whose own output goes to `fit/`.
struct Generated {
    json ground_truth;
    json fit_parameters;
};

namespace detail {

inline std::string numbered(const char* stem, std::size_t i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%03zu%s", stem, i, ext);
    return buf;
}

} // namespace detail

inline Generated generate_echo(Context& ctx) {
    const Node p = ctx.parameters();
    const auto e = parse::energies(p);
    const int basis = parse::basis(p);
    const auto fluxes = grid(p.at("fluxes_phi0"));
    const auto times = grid(p.at("times_s"));
    const double gamma_exp = p.at("gamma_exp_per_s").positive();
    const double sqrt_a = p.at("sqrt_a_phi_phi0").positive();
    const double noise = p.number_or("noise", 0.0);
    if (noise < 0.0) throw SchemaError(p.child_path("noise"), "must be >= 0");
    const auto curves = noise::synthesize_echo_curves(fluxes, times, gamma_exp, sqrt_a, e, noise, ctx.seed, basis);
    std::vector<std::string> files;
    std::string index = "flux_phi0,file\n";
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto name = detail::numbered("echo/curve_", i, ".csv");
        ctx.write(name, io::format_decay_curve(curves[i].curve));
        index += io::format_number(curves[i].flux) + "," + name + "\n";
    }
    ctx.write("echo_index.csv", index);
    Generated g;
    g.ground_truth = {{"gamma_exp_per_s", gamma_exp}, {"sqrt_a_phi_phi0", sqrt_a}, {"noise", noise},
                      {"curves", curves.size()}};
    g.fit_parameters = {{"energies", parse::energies_json(e)}, {"basis", basis}, {"index", "echo_index.csv"}};
    return g;
}

inline Generated generate_spin_freeze(Context& ctx) {
    const Node p = ctx.parameters();
    const auto fields = grid(p.at("fields_t"));
    noise::SpinFreezeModel m;
    const double sqrt_a0 = p.at("sqrt_a0_phi0").positive();
    const double sqrt_floor = p.has("sqrt_floor_phi0") ? p.at("sqrt_floor_phi0").non_negative() : 0.0;
    m.a0 = sqrt_a0 * sqrt_a0;
    m.floor = sqrt_floor * sqrt_floor;
    m.spin_temperature = p.at("spin_temperature_k").positive();
    const double noise = p.number_or("noise", 0.0); // relative
    if (noise < 0.0) throw SchemaError(p.child_path("noise"), "must be >= 0");
    numerics::Rng rng(ctx.seed);
    std::vector<double> amp, sigma;
    for (double b : fields) {
        const double a = std::sqrt(noise::flux_noise_power(b, m));
        amp.push_back(a * (1.0 + noise * rng.normal()));
        sigma.push_back(a * (noise > 0.0 ? noise : 0.01));
    }
    ctx.write("spin_freeze.csv", io::format_csv({"field_t", "amplitude_phi0", "sigma"}, {fields, amp, sigma}));
    Generated g;
    g.ground_truth = {{"sqrt_a0_phi0", sqrt_a0}, {"spin_temperature_k", m.spin_temperature},
                      {"sqrt_floor_phi0", sqrt_floor}, {"noise", noise}};
    g.fit_parameters = {{"data", "spin_freeze.csv"}, {"include_floor", p.boolean_or("include_floor", sqrt_floor > 0.0)}};
    return g;
}

inline Generated generate_gap(Context& ctx) {
    const Node p = ctx.parameters();
    const auto fields = grid(p.at("fields_t"));
    const std::string mode = p.at("mode").choice({"gap", "resonator"});
    const double bc = p.at("critical_field_t").positive();
    const double zero = mode == "gap" ? 1.0 : p.at("f_r0_ghz").positive();
    const double noise = p.number_or("noise", 0.0); // relative
    if (noise < 0.0) throw SchemaError(p.child_path("noise"), "must be >= 0");
    numerics::Rng rng(ctx.seed);
    std::vector<double> values, sigma;
    for (double b : fields) {
        const double v = mode == "gap" ? field::gap_fraction(b, {bc, field::Element::junction})
                                       : field::resonator_frequency(zero, b, {bc, field::Element::resonator});
        values.push_back(v + noise * zero * rng.normal());
        sigma.push_back(zero * (noise > 0.0 ? noise : 0.01));
    }
    ctx.write("gap_data.csv", io::format_csv({"field_t", "value", "sigma"}, {fields, values, sigma}));
    Generated g;
    g.ground_truth = {{"mode", mode}, {"critical_field_t", bc}, {"zero_field_value", zero}, {"noise", noise}};
    g.fit_parameters = {{"gap_data", {{"csv", "gap_data.csv"}, {"mode", mode}}}};
    return g;
}

inline Generated generate_hyperpol(Context& ctx) {
    const Node p = ctx.parameters();
    const auto truth = parse::hyperpol_model(p.at("model"));
    tlsbath::ProtocolConfig shared;
    if (auto proto = p.find("protocol")) shared = parse::protocol(*proto, shared);
    std::vector<long> reps{1, 10, 100, 10000};
    if (auto r = p.find("repetitions")) {
        reps.clear();
        for (std::size_t i = 0; i < r->size(); ++i) {
            reps.push_back(r->index(i).integer());
            if (reps.back() < 1) throw SchemaError(r->index(i).path(), "must be >= 1");
        }
    }
    std::vector<tlsbath::QubitState> targets{tlsbath::QubitState::excited, tlsbath::QubitState::ground};
    if (auto t = p.find("targets")) {
        targets.clear();
        for (std::size_t i = 0; i < t->size(); ++i) targets.push_back(parse::qubit_state(t->index(i)));
    }
    const double noise = p.number_or("noise", 0.0);
    if (noise < 0.0) throw SchemaError(p.child_path("noise"), "must be >= 0");
    std::vector<tlsbath::ProtocolConfig> configs;
    for (long n : reps)
        for (auto target : targets) {
            auto c = shared;
            c.repetitions = n;
            c.target = target;
            c.init = parse::opposite(target);
            configs.push_back(c);
        }
    const auto traces = tlsbath::synthesize_traces(truth, configs, noise, ctx.seed);
    json list = json::array();
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& c = traces[i].config;
        const std::string name = "traces/n" + std::to_string(c.repetitions) + "_" + parse::state_name(c.target) + ".csv";
        ctx.write(name, io::format_decay_curve(traces[i].curve));
        json t = parse::protocol_json(c);
        t["csv"] = name;
        list.push_back(t);
    }
    // Default starting point: deliberately off the truth so a refit has work to do.
    tlsbath::HyperpolParameters start = truth;
    start.gamma_q *= 0.75;
    start.spacing *= 1.5;
    start.offset = 0.2 * start.spacing;
    start.tls_relaxation *= 2.0;
    start.coupling = 1.0;
    start.coupling = tlsbath::with_total_cross_relaxation(
                         start.ladder(), 1.3 * tlsbath::cross_relaxation_rates(truth.ladder()).total)
                         .coupling;
    start.p_th = std::min(0.95, truth.p_th * 0.9);
    const json initial = p.has("initial") ? p.at("initial").raw() : parse::hyperpol_model_json(start);

    Generated g;
    g.ground_truth = {{"model", parse::hyperpol_model_json(truth)},
                      {"total_cross_relaxation_per_s", tlsbath::cross_relaxation_rates(truth.ladder()).total},
                      {"gamma1_per_s", truth.gamma_q + tlsbath::cross_relaxation_rates(truth.ladder()).total + truth.loss.rate},
                      {"noise", noise}};
    g.fit_parameters = {{"initial", initial}, {"traces", list}};
    return g;
}

inline Generated dispatch_generate(const std::string& task, Context& ctx) {
    if (task == "echo-fit") return generate_echo(ctx);
    if (task == "spin-freeze-fit") return generate_spin_freeze(ctx);
    if (task == "field-sweep") return generate_gap(ctx);
    if (task == "hyperpol-fit") return generate_hyperpol(ctx);
    throw SchemaError("task", "no synthetic generator for task '" + task +
                                  "' (available: echo-fit, spin-freeze-fit, field-sweep, hyperpol-fit)");
}

} // namespace fieldqubit::cli
