// Acceptance run: one [PASS]/[FAIL] line per criterion with pinned
// tolerances and wall-clock limits. Exit status is nonzero on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "ep/cat_code.hpp"
#include "ep/photon_swap.hpp"
#include "ep/parallel.hpp"
#include "ep/pipeline.hpp"
#include "ep/polarization.hpp"
#include "ep/random.hpp"
#include "ep/spin_register.hpp"
#include "oracles.hpp"
#include "schedule_replay.hpp"

using namespace ep;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;
bool scattering_properties_hold = false;

void run(const char* id, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = limit_s <= 0.0 || secs < limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("[%s] %s %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", id, o.detail.c_str(), secs,
                in_time ? "" : ", over time limit");
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const double kJ = 1e8;

Outcome ac1() {
    BellResult b = build_bell(kJ);
    Vec bell = Vec::Zero(4);
    bell[0] = bell[3] = 1.0 / std::sqrt(2.0);
    const double f = fidelity(b.state, StateVector(bell, dot_layout(2)));
    const cplx m = std::exp(cplx(0, -kPi / 4)) / 2.0;
    const cplx p = std::exp(cplx(0, kPi / 4)) / 2.0;
    const cplx expect[4] = {m, p, p, m};
    double err = 0.0;
    for (size_t i = 0; i < 4; ++i) {
        err = std::max(err, std::abs(b.intermediate[i] - expect[i]));
    }
    return {f >= 1.0 - 1e-10 && err <= 1e-10,
            "bell fidelity=" + fmt("%.15f", f) + " intermediate_err=" + fmt("%.2e", err)};
}

Outcome ac2() {
    BellResult b = build_bell(kJ);
    StateVector in(oracle::kron(b.state.amplitudes(), b.state.amplitudes()), dot_layout(4));
    MergeSpec spec;
    spec.j1 = spec.j2 = kJ;
    MergeTrace tr = merge_blocks(in, spec);
    double worst = 0.0;
    int cuts = 0;
    for (size_t mask = 1; mask < 15; mask += 2) {
        std::vector<size_t> part;
        for (size_t q = 0; q < 4; ++q) {
            if (mask >> q & 1U) part.push_back(q);
        }
        auto sp = schmidt_spectrum(tr.state, part);
        worst = std::max({worst, std::abs(sp[0] - 1 / std::sqrt(2.0)), std::abs(sp[1] - 1 / std::sqrt(2.0))});
        ++cuts;
    }
    CanonicalForm c = canonicalize(tr.state);
    // Oracle: the same steps replayed with dense 16x16 exponentials, then
    // the reported corrections applied by hand.
    Schedule merge{4, merge_steps(spec)};
    Vec ref = oracle::replay(merge, in.amplitudes());
    for (size_t q : c.x_flips) ref = oracle::on_qubit(oracle::px(), q, 4) * ref;
    for (size_t q = 0; q < 4; ++q) {
        Mat rz = Mat::Zero(2, 2);
        rz(0, 0) = std::exp(cplx(0, -c.z_angles[q] / 2));
        rz(1, 1) = std::exp(cplx(0, c.z_angles[q] / 2));
        ref = oracle::on_qubit(rz, q, 4) * ref;
    }
    const double f_oracle = std::norm(ghz_state(4).amplitudes().dot(ref));
    const double lib_vs_oracle = std::sqrt(std::max(0.0, 1.0 - std::norm(tr.state.amplitudes().dot(oracle::replay(merge, in.amplitudes())))));
    MergeSpec ctrl = spec;
    ctrl.delta = 0.0;
    const bool control_fails = !is_ghz_class(merge_blocks(in, ctrl).state);
    const bool ok = cuts == 7 && worst <= 1e-8 && c.fidelity >= 1 - 1e-8 && f_oracle >= 1 - 1e-8 &&
                    c.x_flips.size() == 1 && lib_vs_oracle <= 1e-8 && control_fails;
    return {ok, "bipartitions=" + std::to_string(cuts) + " schmidt_err=" + fmt("%.2e", worst) +
                    " canonical_fidelity=" + fmt("%.12f", c.fidelity) + " oracle_fidelity=" + fmt("%.12f", f_oracle) +
                    " x_flips=" + std::to_string(c.x_flips.size()) +
                    " delta0_control=" + (control_fails ? "not-GHZ" : "GHZ")};
}

Outcome ac3() {
    bool ok = true;
    std::ostringstream os;
    for (size_t n = 2; n <= 10; ++n) {
        TimingReport t = timing(plan_ghz(n, kJ, kJ));
        const bool steps = t.ising_steps == (n + 1) / 2 && t.heisenberg_steps == (n - 1) / 2;
        const bool decade = std::abs(std::log10(t.total / (static_cast<double>(n) * 1e-8))) < 1.0;
        ok = ok && steps && decade;
        os << " n" << n << "=" << fmt("%.3g", t.total);
    }
    return {ok, "steps and totals (s):" + os.str()};
}

Outcome ac4() {
    double worst = 0.0, worst_rt = 0.0;
    for (double a : {1.0, 1.5, 2.0, 2.5}) {
        const int nm = CavitySpec::min_n_max(a);
        const double ov = std::abs(cat_amplitudes(a, 1, nm).dot(cat_amplitudes(cplx(0, a), 1, nm)));
        worst = std::max(worst, std::abs(ov - oracle::cat_overlap(a)));
        CavitySpec cav{a, nm, 0.0};
        const Eigen::Index nc = cav.dim();
        Vec v = Vec::Zero(4 * nc);
        v[0] = 0.6;
        v[3 * nc] = cplx(0, 0.8);
        StateVector s(v, encode_layout(nm));
        worst_rt = std::max(worst_rt, 1.0 - fidelity(decode(encode(s, cav), cav), s));
    }
    return {worst <= 1e-8 && worst_rt <= 1e-8,
            "overlap_err=" + fmt("%.2e", worst) + " roundtrip_infidelity=" + fmt("%.2e", worst_rt)};
}

Outcome ac5() {
    CavitySpec cav = CavitySpec::with_alpha(2.0, 1.0);
    CavityRegister ref = CavityRegister::chain(cav.alpha, 3, cav.n_max);
    std::vector<CavitySpec> specs(3, cav);
    size_t checked = 0, bad = 0;
    for (uint64_t i = 0; i < 1000; ++i) {
        for (bool corr : {true, false}) {
            TrajectoryRecord r = loss_trajectory(ref, specs, {0.2, 0.05, corr}, derive_seed(5, i));
            for (size_t j = 0; j < 3; ++j) {
                if (r.syndromes[j].size() != 4) ++bad;
                for (size_t k = 0; k < r.syndromes[j].size(); ++k) {
                    const int expect = r.jumps_per_round[j][k] % 2 == 0 ? 1 : -1;
                    const int seen = corr ? r.parity_outcomes[j][k] : r.syndromes[j][k];
                    bad += seen != expect;
                    ++checked;
                }
            }
        }
    }
    return {bad == 0 && checked == 1000 * 2 * 3 * 4,
            "parity checks=" + std::to_string(checked) + " exceptions=" + std::to_string(bad)};
}

Outcome ac6() {
    PipelineConfig c;
    c.protect.trajectories = 1000;
    c.protect.durations = {0.05, 0.1, 0.2};
    c.protect.kappa = 1.0;
    RunOutput out = cmd_protect(c, default_workers(), Format::Csv);
    write_outputs(out, "acceptance_out/protect");
    bool ok = true;
    std::ostringstream os;
    for (const auto& row : out.report["table"]) {
        const double mc = row["corrected"]["mean"], mu = row["uncorrected"]["mean"];
        const double sigma = row["paired_gain"]["sigma"].is_null() ? 0.0 : row["paired_gain"]["sigma"].get<double>();
        ok = ok && mc > mu && sigma >= 3.0;
        os << " kt=" << row["kappa_t"].get<double>() << ":" << fmt("%.3f", mc) << "/" << fmt("%.3f", mu) << "("
           << fmt("%.1f", sigma) << "sigma)";
    }
    return {ok, "corrected/uncorrected:" + os.str()};
}

Outcome ac7() {
    ThreeLevelDot dot{1000.0, 500.0, 1.0, 1.0};
    GaussianMode mode{1.0, 1000.0};
    SpectralGrid g = SpectralGrid::default_for(dot, mode);
    double norm_defect = 0.0;
    for (Frame fr : {Frame::Rotating, Frame::Lab}) {
        DynamicsOptions o;
        o.frame = fr;
        norm_defect = std::max(norm_defect, integrate_dynamics(dot, mode, g, 10.0, o).max_norm_defect);
    }
    ThreeLevelDot dark = dot;
    dark.gamma2 = 0.0;
    double p_dark = 0.0;
    for (double v : integrate_dynamics(dark, mode, g, 10.0).p) p_dark = std::max(p_dark, std::abs(v));

    ThreeLevelDot d2{1000.0, 500.0, 0.7, 1.3};
    GaussianMode m2{1.5, 1000.0};
    SpectralGrid g2 = SpectralGrid::default_for(d2, m2);
    Trajectory tr = integrate_dynamics(d2, m2, g2, 6.0);
    norm_defect = std::max(norm_defect, tr.max_norm_defect);
    const double ref = oracle::swap_rk4(0.7, 1.3, 1.5, g2.k_min, g2.k_max, static_cast<int>(4 * g2.n_k), 6.0,
                                        resolution_limit(d2, m2, g2) / 4.0);
    const double oracle_err = std::abs(tr.p.back() - ref);

    const double s = 4.0;
    DynamicsOptions ch;
    ch.propagator = Propagator::Chebyshev;
    Trajectory a = integrate_dynamics(d2, m2, g2, 6.0, ch);
    ThreeLevelDot ds{1000.0, 500.0, s * 0.7, s * 1.3};
    GaussianMode ms{s * 1.5, 1000.0};
    SpectralGrid gs = SpectralGrid::centered(1000.0, s * (g2.k_max - g2.k_min) / 2, g2.n_k);
    Trajectory b = integrate_dynamics(ds, ms, gs, 6.0 / s, ch);
    double scale_err = 0.0;
    for (size_t i = 0; i < a.p.size(); ++i) scale_err = std::max(scale_err, std::abs(a.p[i] - b.p[i]));
    norm_defect = std::max({norm_defect, a.max_norm_defect, b.max_norm_defect});

    scattering_properties_hold = norm_defect <= 1e-6 && p_dark <= 1e-15 && oracle_err <= 1e-4 && scale_err <= 1e-6;
    return {scattering_properties_hold, "norm_defect=" + fmt("%.2e", norm_defect) + " gamma2=0 max_P=" +
                                            fmt("%.1e", p_dark) + " oracle_err=" + fmt("%.2e", oracle_err) +
                                            " scaling_err=" + fmt("%.2e", scale_err)};
}

Outcome ac8() {
    PipelineConfig c;
    RunOutput out = cmd_sweep(c, default_workers(), Format::Csv);
    write_outputs(out, "acceptance_out/sweep");
    const auto& r = out.report;
    const size_t rows = r["rows"], unconverged = r["unconverged"];
    const double pmax = r["maximum"]["p_longtime"];
    bool report_ok = !r["closed_form_comparison"].empty();
    for (const auto& e : r["closed_form_comparison"]) {
        report_ok = report_ok && e.contains("params") && e.contains("p_ode") && e.contains("p_closed") &&
                    e.contains("abs_diff");
    }
    const bool shape = rows == 400 && unconverged == 0 && out.ok;
    std::string detail = "rows=" + std::to_string(rows) + " unconverged=" + std::to_string(unconverged) +
                         " max_P=" + fmt("%.4f", pmax) + " at d=" + fmt("%.3g", r["maximum"]["d"].get<double>()) +
                         " gamma=" + fmt("%.3g", r["maximum"]["gamma"].get<double>());
    if (pmax >= 0.9) {
        return {shape, detail};
    }
    const auto& chk = r["pulse_delay_check"];
    detail += "; documented outcome: maximum below the expected 0.9, scattering properties " +
              std::string(scattering_properties_hold ? "hold" : "FAIL") + ", closed-form discrepancy report " +
              (report_ok ? "emitted" : "MISSING") + ", same point with the pulse delayed by 4/d gives P=" +
              fmt("%.4f", chk["p_longtime"].get<double>());
    return {shape && scattering_properties_hold && report_ok, detail};
}

Outcome ac9() {
    PipelineConfig c;
    c.ghz.n_dots = 8;
    c.protect.kappa = 0.0;
    c.swap.p_success = 1.0;
    c.conversion = {1.0, 1.0};
    c.pipeline.trajectories = 8;
    RunOutput out = cmd_pipeline(c, default_workers(), Format::Csv);
    write_outputs(out, "acceptance_out/pipeline");
    const double f = out.report["final_fidelity"];
    const double h = out.report["herald"]["total"];
    const double expect_h = std::pow(1.0, 8.0) * std::pow(1.0 * 1.0, 4.0);
    const size_t photons = out.report["n_photons"];
    return {f >= 1 - 1e-6 && h == expect_h && photons == 4,
            "photons=" + std::to_string(photons) + " fidelity=" + fmt("%.12f", f) + " herald=" + fmt("%.17g", h)};
}

std::map<std::string, std::string> read_dir(const std::string& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        files[e.path().filename().string()] = os.str();
    }
    return files;
}

Outcome ac10() {
    PipelineConfig c;
    c.protect.trajectories = 100;
    c.pipeline.trajectories = 20;
    c.protect.kappa = 1.0;
    c.sweep.d_points = 3;
    c.sweep.gamma_points = 3;
    c.sweep.d_min = c.sweep.gamma_min = 0.5;
    c.sweep.d_max = c.sweep.gamma_max = 2.0;
    using Cmd = std::function<RunOutput(size_t, Format)>;
    std::vector<std::pair<std::string, Cmd>> cmds = {
        {"ghz", [&](size_t, Format f) { return cmd_ghz(c, std::nullopt, f); }},
        {"protect", [&](size_t w, Format f) { return cmd_protect(c, w, f); }},
        {"swap", [&](size_t, Format f) { return cmd_swap(c, f); }},
        {"sweep", [&](size_t w, Format f) { return cmd_sweep(c, w, f); }},
        {"pipeline", [&](size_t w, Format f) { return cmd_pipeline(c, w, f); }},
    };
    size_t compared = 0;
    bool ok = true;
    for (auto& [name, cmd] : cmds) {
        for (Format f : {Format::Csv, Format::Json}) {
            const std::string base = "acceptance_out/determinism/" + name;
            std::filesystem::remove_all(base);
            write_outputs(cmd(1, f), base + "/w1");
            write_outputs(cmd(4, f), base + "/w4");
            auto a = read_dir(base + "/w1");
            auto b = read_dir(base + "/w4");
            ok = ok && a == b && !a.empty();
            compared += a.size();
        }
    }
    return {ok, "commands=5 formats=2 files_compared=" + std::to_string(compared) + " byte-identical=" +
                    (ok ? "yes" : "no")};
}

}  // namespace

int main() {
    run("AC1", 1.0, ac1);
    run("AC2", 5.0, ac2);
    run("AC3", 1.0, ac3);
    run("AC4", 5.0, ac4);
    run("AC5", 60.0, ac5);
    run("AC6", 300.0, ac6);
    run("AC7", 120.0, ac7);
    run("AC8", 600.0, ac8);
    run("AC9", 60.0, ac9);
    run("AC10", 0.0, ac10);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
