#include "fieldqubit/circuit.hpp"
#include "fieldqubit/constants.hpp"
#include "fieldqubit/noise.hpp"
#include "fieldqubit/numerics.hpp"
#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

using namespace fieldqubit;
using namespace fieldqubit::noise;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const circuit::CircuitEnergies device{14.1, 0.454, 32.2, {}};

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::vector<double> times_grid(double stop, int n) {
    std::vector<double> t;
    for (int i = 0; i < n; ++i) t.push_back(stop * i / (n - 1));
    return t;
}

} // namespace

TEST_CASE("detailed balance rates", "[telegraph]") {
    const auto r = detailed_balance_rates(10e3, 0.2);
    CHECK_THAT(r.up, WithinRel(2e3, 1e-15));
    CHECK_THAT(r.down, WithinRel(8e3, 1e-15));
    CHECK(r.up + r.down == 10e3);
    CHECK(detailed_balance_rates(10e3, 0.0).up == 0.0);
    const auto near = detailed_balance_rates(10e3, 0.5 - 1e-12);
    CHECK_THAT(near.up, WithinRel(near.down, 1e-10));
    CHECK_THROWS_AS(detailed_balance_rates(10e3, 0.5), Error);
    CHECK_THROWS_AS(detailed_balance_rates(10e3, -0.1), Error);
}

TEST_CASE("telegraph: frozen process stays put", "[telegraph]") {
    const TelegraphProcess frozen{0.0, 0.0, 0.3};
    for (int s : {0, 1}) {
        const auto tr = simulate_telegraph(frozen, 1.0, 1e-3, 7, s);
        for (double v : tr) CHECK(v == (s ? 0.3 : 0.0));
    }
    CHECK_THROWS_AS(simulate_telegraph(frozen, 1.0, 1e-3, 7), Error);
}

TEST_CASE("telegraph: occupancy and dwell statistics", "[telegraph][oracle]") {
    const TelegraphProcess proc{2e3, 8e3, 1.0};
    const double dt = 1e-5, duration = 10.0;
    const auto tr = simulate_telegraph(proc, duration, dt, 12345);
    // Correlated samples: var(mean) ~ 2 p0 p1 / (Gamma_1 T).
    const double sigma = std::sqrt(2.0 * 0.2 * 0.8 / (proc.gamma1() * duration));
    CHECK_THAT(mean(tr), WithinAbs(0.2, 3.0 * sigma));
    // Up-dwell in steps is geometric with leave probability p0 (1 - exp(-Gamma_1 dt)).
    long runs = 0, up = 0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        if (tr[i] == 1.0) {
            ++up;
            if (i == 0 || tr[i - 1] == 0.0) ++runs;
        }
    }
    const double dwell = dt * static_cast<double>(up) / static_cast<double>(runs);
    const double expected = dt / (0.8 * -std::expm1(-proc.gamma1() * dt));
    CHECK_THAT(dwell, WithinRel(expected, 0.03));
    CHECK_THAT(dwell, WithinRel(1.0 / proc.gamma_down, 0.06));
}

TEST_CASE("telegraph: symmetric rates half occupancy", "[telegraph]") {
    const TelegraphProcess proc{5e3, 5e3, 1.0};
    const auto tr = simulate_telegraph(proc, 4.0, 1e-5, 99);
    CHECK_THAT(mean(tr), WithinAbs(0.5, 3.0 * std::sqrt(2.0 * 0.25 / (1e4 * 4.0))));
}

TEST_CASE("telegraph: discretisation guard", "[telegraph][errors]") {
    try {
        simulate_telegraph({2e3, 8e3, 1.0}, 1.0, 1e-4 * 1.3, 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_input);
    }
}

TEST_CASE("telegraph: seeds are reproducible", "[telegraph]") {
    const TelegraphProcess proc{2e3, 8e3, 1.0};
    CHECK(simulate_telegraph(proc, 0.1, 1e-5, 4) == simulate_telegraph(proc, 0.1, 1e-5, 4));
    CHECK(simulate_telegraph(proc, 0.1, 1e-5, 4) != simulate_telegraph(proc, 0.1, 1e-5, 5));
}

TEST_CASE("Lorentzian PSD shape and normalisation", "[psd]") {
    const TelegraphProcess proc{3e3, 7e3, 0.4};
    CHECK_THAT(lorentzian_psd(proc, proc.gamma1()), WithinRel(0.5 * lorentzian_psd(proc, 0.0), 1e-14));
    // Integral over omega / 2 pi equals the variance; substitute omega = Gamma_1 tan(u).
    const double integral = oracle::simpson(
        [&](double u) {
            const double w = proc.gamma1() * std::tan(u);
            return lorentzian_psd(proc, w) * proc.gamma1() / (std::cos(u) * std::cos(u));
        },
        0.0, 0.5 * std::numbers::pi - 1e-9, 20000) / (2.0 * std::numbers::pi);
    CHECK_THAT(integral, WithinRel(proc.variance(), 1e-6));
    // p0 p1 peaks at the symmetric split.
    double best = 0.0, best_p = 0.0;
    for (double p = 0.0; p <= 0.5; p += 0.01) {
        const auto r = detailed_balance_rates(1e4, std::min(p, 0.499999));
        const double v = TelegraphProcess{r.up, r.down, 1.0}.variance();
        if (v > best) {
            best = v;
            best_p = p;
        }
    }
    CHECK(best <= 0.25);
    CHECK(best_p >= 0.49);
}

TEST_CASE("simulated telegraph PSD matches the Lorentzian", "[psd][oracle]") {
    const auto r = detailed_balance_rates(1e4, 0.2);
    const TelegraphProcess proc{r.up, r.down, 1.0};
    const double dt = 0.05 / proc.gamma1();
    const auto tr = simulate_telegraph(proc, 1e6 * dt, dt, 2024);
    const auto s = numerics::estimate_psd(tr, dt, 122);
    // Band averages, two bands per decade in omega over [Gamma_1/10, 10 Gamma_1].
    for (int b = 0; b < 4; ++b) {
        const double w_lo = proc.gamma1() / 10.0 * std::pow(10.0, 0.5 * b);
        const double w_hi = w_lo * std::pow(10.0, 0.5);
        double est = 0.0, model = 0.0;
        int n = 0;
        for (std::size_t k = 1; k < s.frequencies.size(); ++k) {
            const double w = 2.0 * std::numbers::pi * s.frequencies[k];
            if (w < w_lo || w >= w_hi) continue;
            est += s.values[k];
            model += lorentzian_psd(proc, w);
            ++n;
        }
        REQUIRE(n > 0);
        CHECK_THAT(est, WithinRel(model, 0.1));
    }
    // Parseval closure against the analytic variance.
    double var = 0.0;
    const double m = mean(tr);
    for (double v : tr) var += (v - m) * (v - m);
    var /= static_cast<double>(tr.size());
    CHECK_THAT(var, WithinRel(proc.variance(), 0.1));
}

TEST_CASE("ensemble PSD", "[psd]") {
    const TelegraphProcess one{2e3, 8e3, 1.0};
    const std::vector<double> omegas{1e2, 1e3, 1e4, 1e5};
    const auto single = ensemble_psd(std::vector<TelegraphProcess>{one}, omegas);
    const auto triple = ensemble_psd(std::vector<TelegraphProcess>{one, one, one}, omegas);
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        CHECK(single[i] == lorentzian_psd(one, omegas[i]));
        CHECK_THAT(triple[i], WithinRel(3.0 * single[i], 1e-15));
    }
}

TEST_CASE("log-uniform ensemble gives a 1/f spectrum", "[psd][oracle]") {
    const auto procs = log_uniform_ensemble(200, 1e1, 1e5, 0.3, 1.0, 77);
    std::vector<double> lx, ly;
    for (int i = 0; i <= 40; ++i) {
        const double w = std::pow(10.0, 2.0 + 2.0 * i / 40.0);
        lx.push_back(std::log10(w));
        ly.push_back(std::log10(ensemble_psd(procs, std::vector<double>{w})[0]));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double n = static_cast<double>(lx.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK_THAT(slope, WithinAbs(-1.0, 0.1));
}

TEST_CASE("spin freezing flux-noise power", "[spinfreeze]") {
    const SpinFreezeModel m{4e-10, 0.085, 1e-11};
    CHECK_THAT(flux_noise_power(0.0, m), WithinRel(4e-10 + 1e-11, 1e-15));
    CHECK_THAT(flux_noise_power(50.0, m), WithinRel(1e-11, 1e-12));
    // sqrt(A(B)/A(0)) = 1/2 exactly where cosh(mu_B B / k_B T_S) = 2.
    const SpinFreezeModel bare{4e-10, 0.085, 0.0};
    const double b_half = std::acosh(2.0) * constants::boltzmann * 0.085 / constants::bohr_magneton;
    CHECK_THAT(std::sqrt(flux_noise_power(b_half, bare) / flux_noise_power(0.0, bare)), WithinRel(0.5, 1e-12));
    double last = flux_noise_power(0.0, m);
    for (double b = 0.01; b < 2.0; b += 0.01) {
        const double v = flux_noise_power(b, m);
        CHECK(v <= last);
        CHECK(flux_noise_power(-b, m) == v);
        last = v;
    }
}

TEST_CASE("echo dephasing rate", "[echo]") {
    CHECK(echo_dephasing_rate(1e-10, 0.0) == 0.0);
    CHECK_THAT(echo_dephasing_rate(1e-10, 2e10), WithinRel(2.0 * echo_dephasing_rate(1e-10, 1e10), 1e-15));
    CHECK_THAT(echo_dephasing_rate(4e-10, 1e10), WithinRel(2.0 * echo_dephasing_rate(1e-10, 1e10), 1e-15));
    const double s = circuit::flux_sensitivity(device, 0.48).per_flux_quantum;
    const double a = 1e-5 * 1e-5;
    CHECK_THAT(echo_dephasing_rate(a, s), WithinRel(std::sqrt(a * std::log(2.0)) * std::abs(s), 1e-14));
}

TEST_CASE("echo decay model", "[echo]") {
    CHECK(echo_decay_model(0.0, 1e5, 1e4) == 1.0);
    CHECK_THAT(echo_decay_model(1.0, 1e5, 1e4), WithinAbs(0.5, 1e-300));
    CHECK_THAT(echo_decay_model(3e-5, 0.0, 1e4), WithinRel(0.5 * std::exp(-0.3) + 0.5, 1e-15));
    numerics::Rng rng(6);
    for (int i = 0; i < 1000; ++i) {
        const double p = echo_decay_model(rng.uniform(0, 1e-3), rng.uniform(0, 1e6), rng.uniform(0, 1e6));
        CHECK(p >= 0.5);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("sweet-spot echo curve reduces to an exponential fit", "[echo][oracle]") {
    const auto t = times_grid(40e-6, 60);
    numerics::Rng rng(3);
    FluxCurve c{0.5, {}};
    for (double x : t) {
        c.curve.times.push_back(x);
        c.curve.populations.push_back(std::clamp(echo_decay_model(x, 0.0, 6e4) + 0.01 * rng.normal(), 0.0, 1.0));
    }
    const auto fit = fit_echo_rates(std::vector<FluxCurve>{c});
    REQUIRE(fit.pinned[0]);
    std::vector<numerics::DataPoint> data;
    for (std::size_t i = 0; i < t.size(); ++i) data.push_back({t[i], c.curve.populations[i], 1.0});
    Eigen::VectorXd init(1);
    init << 3e4;
    const auto ref = numerics::least_squares_fit(
        [](double x, const Eigen::VectorXd& p) { return 0.5 * std::exp(-p[0] * x) + 0.5; }, data, init);
    CHECK_THAT(fit.gamma_exp, WithinRel(ref.parameters[0], 1e-8));
}

TEST_CASE("joint echo fit recovers shared rate and flux-noise amplitude", "[echo][oracle]") {
    const auto fluxes = circuit::linear_grid(0.48, 0.52, 42);
    const auto t = times_grid(20e-6, 60);
    const auto curves = synthesize_echo_curves(fluxes, t, 5e4, 1e-5, device, 0.01, 11);
    const auto fit = joint_fit_echo(curves, device);
    CHECK_THAT(fit.rates.gamma_exp, WithinRel(5e4, 0.05));
    CHECK_THAT(fit.sqrt_a_phi, WithinRel(1e-5, 0.05));
    CHECK(fit.rates.fit.converged);
}

TEST_CASE("joint echo fit: sweet-spot-only design is not identifiable", "[echo][errors]") {
    const auto t = times_grid(20e-6, 30);
    const std::vector<double> fluxes{0.5, 0.5, -0.5, 1.5};
    const auto curves = synthesize_echo_curves(fluxes, t, 5e4, 1e-5, device, 0.0, 1);
    try {
        joint_fit_echo(curves, device);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::non_identifiable);
    }
}

TEST_CASE("joint echo fit tracks spin-freezing suppression", "[echo][spinfreeze][oracle]") {
    const SpinFreezeModel m{1e-10, 0.085, 0.25e-10};
    const double a0 = std::sqrt(flux_noise_power(0.0, m));
    const double a1 = std::sqrt(flux_noise_power(0.6, m));
    const auto fluxes = circuit::linear_grid(0.48, 0.52, 12);
    const auto t = times_grid(20e-6, 60);
    const auto f0 = joint_fit_echo(synthesize_echo_curves(fluxes, t, 5e4, a0, device, 0.01, 21), device);
    const auto f1 = joint_fit_echo(synthesize_echo_curves(fluxes, t, 5e4, a1, device, 0.01, 22), device);
    CHECK_THAT(f1.sqrt_a_phi / f0.sqrt_a_phi, WithinRel(a1 / a0, 0.05));
}

TEST_CASE("spin temperature fit", "[spinfreeze]") {
    auto samples = [](const SpinFreezeModel& m, double noise, std::uint64_t seed) {
        numerics::Rng rng(seed);
        std::vector<AmplitudeSample> out;
        for (int i = 0; i < 25; ++i) {
            const double b = 0.02 * i;
            const double a = std::sqrt(flux_noise_power(b, m));
            out.push_back({b, a * (1.0 + noise * rng.normal()), a * std::max(noise, 1e-3)});
        }
        return out;
    };
    const SpinFreezeModel bare{1e-10, 0.085, 0.0};
    const auto exact = fit_spin_temperature(samples(bare, 0.0, 1), false);
    CHECK_THAT(exact.model.spin_temperature, WithinRel(0.085, 1e-6));
    const auto noisy = fit_spin_temperature(samples(bare, 0.01, 2), false);
    CHECK_THAT(noisy.model.spin_temperature, WithinRel(0.085, 0.05));
    CHECK(noisy.spin_temperature_error > 0.0);

    // A floor the model does not know about biases T_S upward.
    const SpinFreezeModel floored{1e-10, 0.085, 0.1e-10};
    const auto mismatched = fit_spin_temperature(samples(floored, 0.0, 3), false);
    CHECK(mismatched.model.spin_temperature > 1.05 * 0.085);
    const auto matched = fit_spin_temperature(samples(floored, 0.0, 3), true);
    CHECK_THAT(matched.model.spin_temperature, WithinRel(0.085, 1e-4));
    CHECK_THAT(matched.model.floor, WithinRel(0.1e-10, 1e-3));
}

TEST_CASE("spin temperature fit: degenerate data", "[spinfreeze][errors]") {
    std::vector<AmplitudeSample> flat{{0.0, 1e-5, 1e-7}, {0.2, 1e-5, 1e-7}, {0.4, 1e-5, 1e-7}};
    try {
        fit_spin_temperature(flat, false);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::non_identifiable);
    }
    std::vector<AmplitudeSample> rising{{0.0, 1e-5, 1e-7}, {0.2, 2e-5, 1e-7}, {0.4, 3e-5, 1e-7}};
    try {
        fit_spin_temperature(rising, false);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::non_physical);
    }
}

TEST_CASE("Ramsey beating", "[ramsey]") {
    const auto t = times_grid(4e-6, 401);
    const auto single = ramsey_beating(10e6, 0.0, t, 20e-6);
    CHECK(single.populations[0] == 1.0);
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK_THAT(single.populations[i],
                   WithinAbs(0.5 + 0.5 * std::exp(-t[i] / 20e-6) * std::cos(2 * M_PI * 10e6 * t[i]), 1e-12));
    // Equal weights: envelope |cos(pi df t)|, first null at 1/(2 df) = 1 us.
    const auto beat = ramsey_beating(10e6, 0.5e6, t, 20e-6, 0.5);
    CHECK_THAT(beat.populations[100], WithinAbs(0.5, 1e-12));
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double envelope = 0.5 * std::exp(-t[i] / 20e-6) * std::abs(std::cos(M_PI * 0.5e6 * t[i]));
        CHECK(std::abs(beat.populations[i] - 0.5) <= envelope + 1e-12);
    }
}
