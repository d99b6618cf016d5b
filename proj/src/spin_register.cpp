#include "ep/spin_register.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <stdexcept>

#include <unsupported/Eigen/KroneckerProduct>

namespace ep {

namespace {

const cplx kI(0.0, 1.0);

std::string kind_name(CouplingKind k) {
    return k == CouplingKind::Heisenberg ? "heisenberg" : "ising";
}

CouplingKind kind_from(const std::string& s) {
    if (s == "heisenberg") {
        return CouplingKind::Heisenberg;
    }
    if (s == "ising") {
        return CouplingKind::Ising;
    }
    throw std::invalid_argument("schedule: unknown coupling kind '" + s + "'");
}

bool is_allowed_angle(double a) {
    return std::abs(a - kPi / 2) <= 1e-12 || std::abs(a - kPi) <= 1e-12;
}

// Dot index -> current subsystem position; released dots map to npos.
struct DotMap {
    std::vector<size_t> pos;
    explicit DotMap(size_t n) : pos(n) {
        for (size_t k = 0; k < n; ++k) {
            pos[k] = k;
        }
    }
    size_t at(size_t dot) const {
        if (dot >= pos.size() || pos[dot] == SIZE_MAX) {
            throw std::invalid_argument("execute: dot " + std::to_string(dot) + " is not in the register");
        }
        return pos[dot];
    }
    void release(size_t dot) {
        size_t p = at(dot);
        pos[dot] = SIZE_MAX;
        for (auto& q : pos) {
            if (q != SIZE_MAX && q > p) {
                --q;
            }
        }
    }
};

StateVector apply_step(const StateVector& s, const Step& step, DotMap& map) {
    if (const auto* is = std::get_if<InteractionStep>(&step)) {
        Mat u = expm_hermitian(pair_hamiltonian(is->kind, is->strength), is->duration);
        Vec v = s.amplitudes();
        for (const auto& p : is->pairs) {
            v = apply_local(v, s.layout(), u, {map.at(p.a), map.at(p.b)});
        }
        return StateVector::normalized(std::move(v), s.layout());
    }
    if (const auto* ps = std::get_if<PulseSpec>(&step)) {
        Vec v = s.amplitudes();
        for (const auto& z : ps->z_corrections) {
            v = apply_local(v, s.layout(), z_rotation(z.angle), {map.at(z.dot)});
        }
        v = apply_local(v, s.layout(), pulse_unitary(ps->angle, ps->phase), {map.at(ps->target)});
        return StateVector::normalized(std::move(v), s.layout());
    }
    if (const auto* zs = std::get_if<PhaseStep>(&step)) {
        Vec v = s.amplitudes();
        for (const auto& z : zs->rotations) {
            v = apply_local(v, s.layout(), z_rotation(z.angle), {map.at(z.dot)});
        }
        return StateVector::normalized(std::move(v), s.layout());
    }
    const auto& rs = std::get<ReleaseStep>(step);
    size_t p = map.at(rs.target);
    Vec plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    // Projection onto |+> keeps half the weight for a GHZ register; the
    // renormalized branch is the kept one.
    Vec proj = apply_local(s.amplitudes(), s.layout(), plus * plus.adjoint(), {p});
    StateVector collapsed = StateVector::normalized(std::move(proj), s.layout());
    map.release(rs.target);
    return remove_subsystem(collapsed, p, plus);
}

}  // namespace

Mat pauli_x() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Mat pauli_y() {
    Mat m(2, 2);
    m << 0, -kI, kI, 0;
    return m;
}

Mat pauli_z() {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Mat pulse_unitary(double angle, double phase) {
    Mat n = std::cos(phase) * pauli_x() + std::sin(phase) * pauli_y();
    return std::cos(angle / 2) * Mat::Identity(2, 2) - kI * std::sin(angle / 2) * n;
}

Mat z_rotation(double angle) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = std::exp(-kI * angle / 2.0);
    m(1, 1) = std::exp(kI * angle / 2.0);
    return m;
}

Mat pair_hamiltonian(CouplingKind kind, double strength) {
    Mat zz = Eigen::kroneckerProduct(pauli_z(), pauli_z());
    if (kind == CouplingKind::Ising) {
        return strength * zz;
    }
    Mat xx = Eigen::kroneckerProduct(pauli_x(), pauli_x());
    Mat yy = Eigen::kroneckerProduct(pauli_y(), pauli_y());
    return strength * (xx + yy + zz);
}

SubsystemLayout dot_layout(size_t n) {
    std::vector<std::string> labels;
    for (size_t k = 0; k < n; ++k) {
        labels.push_back("d" + std::to_string(k));
    }
    return SubsystemLayout(std::vector<int>(n, 2), labels);
}

StateVector plus_register(size_t n) {
    auto lay = dot_layout(n);
    Vec v = Vec::Constant(static_cast<Eigen::Index>(lay.total_dim()), 1.0);
    return StateVector::normalized(std::move(v), lay);
}

StateVector ghz_state(size_t n) {
    auto lay = dot_layout(n);
    Vec v = Vec::Zero(static_cast<Eigen::Index>(lay.total_dim()));
    v[0] = 1.0;
    v[v.size() - 1] = 1.0;
    return StateVector::normalized(std::move(v), lay);
}

LinearMap hamiltonian(const CouplingSpec& spec, const SubsystemLayout& layout) {
    if (!(spec.strength > 0.0) || !std::isfinite(spec.strength)) {
        throw std::invalid_argument("coupling: strength must be positive");
    }
    if (spec.pair.a == spec.pair.b) {
        throw std::invalid_argument("coupling: pair indices must differ");
    }
    if (spec.pair.a >= layout.size() || spec.pair.b >= layout.size()) {
        throw DimensionError("coupling: dot index out of range");
    }
    if (layout.dim(spec.pair.a) != 2 || layout.dim(spec.pair.b) != 2) {
        throw DimensionError("coupling: dots must be qubits");
    }
    return embed(pair_hamiltonian(spec.kind, spec.strength), layout, {spec.pair.a, spec.pair.b});
}

BellResult build_bell(double j2) {
    if (!(j2 > 0.0)) {
        throw std::invalid_argument("build_bell: J2 must be positive");
    }
    auto start = plus_register(2);
    double t = kPi / (4.0 * j2);
    auto mid = evolve(start, hamiltonian({CouplingKind::Ising, j2, {0, 1}}, start.layout()), t);
    auto out = apply_local(mid, pulse_unitary(kPi / 2, 0.0), {1});
    return {mid, out, t};
}

std::vector<Step> merge_steps(const MergeSpec& m) {
    std::vector<Step> steps;
    steps.push_back(InteractionStep{CouplingKind::Ising, m.j2, {{m.contact_a, m.contact_b}}, kPi / (4.0 * m.j2)});
    steps.push_back(PhaseStep{{{m.contact_a, -kPi / 2}, {m.contact_b, -kPi / 2}}});
    steps.push_back(PulseSpec{m.partner, kPi, -m.delta / 2, {}});
    steps.push_back(InteractionStep{CouplingKind::Heisenberg, m.j1, {{m.contact_b, m.partner}}, kPi / (8.0 * m.j1)});
    return steps;
}

MergeTrace merge_blocks(const StateVector& state, const MergeSpec& m) {
    const size_t n = state.layout().size();
    std::set<size_t> ids{m.contact_a, m.contact_b, m.partner};
    if (ids.size() != 3 || *ids.rbegin() >= n) {
        throw std::invalid_argument("merge_blocks: contacts and partner must be distinct dots in range");
    }
    if (!(m.j1 > 0.0) || !(m.j2 > 0.0)) {
        throw std::invalid_argument("merge_blocks: couplings must be positive");
    }
    // Block B = {contact_b, partner} must be unentangled from the rest.
    auto sv = schmidt_spectrum(state, {m.contact_b, m.partner});
    if (sv.size() > 1 && sv[1] > 1e-8) {
        throw std::invalid_argument("merge_blocks: contacts belong to the same block");
    }
    auto steps = merge_steps(m);
    DotMap map(n);
    StateVector s = apply_step(state, steps[0], map);
    StateVector after_ising = apply_step(s, steps[1], map);
    StateVector after_pulse = apply_step(after_ising, steps[2], map);
    StateVector out = apply_step(after_pulse, steps[3], map);
    return {after_ising, after_pulse, out};
}

void Schedule::validate() const {
    std::vector<bool> released(n_dots, false);
    auto check_dot = [&](size_t d) {
        if (d >= n_dots) {
            throw std::invalid_argument("schedule: dot index " + std::to_string(d) + " out of range");
        }
        if (released[d]) {
            throw std::invalid_argument("schedule: dot " + std::to_string(d) + " used after release");
        }
    };
    for (const auto& step : steps) {
        if (const auto* is = std::get_if<InteractionStep>(&step)) {
            if (!(is->duration > 0.0) || !std::isfinite(is->duration)) {
                throw std::invalid_argument("schedule: interaction duration must be positive");
            }
            if (!(is->strength > 0.0) || !std::isfinite(is->strength)) {
                throw std::invalid_argument("schedule: coupling strength must be positive");
            }
            if (is->pairs.empty()) {
                throw std::invalid_argument("schedule: interaction step without pairs");
            }
            std::set<size_t> used;
            for (const auto& p : is->pairs) {
                check_dot(p.a);
                check_dot(p.b);
                if (p.a == p.b || !used.insert(p.a).second || !used.insert(p.b).second) {
                    throw std::invalid_argument("schedule: pairs in one step must be disjoint");
                }
            }
        } else if (const auto* ps = std::get_if<PulseSpec>(&step)) {
            check_dot(ps->target);
            if (!is_allowed_angle(ps->angle) || !std::isfinite(ps->phase)) {
                throw std::invalid_argument("schedule: pulse angle must be pi/2 or pi");
            }
            for (const auto& z : ps->z_corrections) {
                check_dot(z.dot);
                if (!std::isfinite(z.angle)) {
                    throw std::invalid_argument("schedule: non-finite phase");
                }
            }
        } else if (const auto* zs = std::get_if<PhaseStep>(&step)) {
            for (const auto& z : zs->rotations) {
                check_dot(z.dot);
                if (!std::isfinite(z.angle)) {
                    throw std::invalid_argument("schedule: non-finite phase");
                }
            }
        } else {
            size_t t = std::get<ReleaseStep>(step).target;
            check_dot(t);
            released[t] = true;
        }
    }
}

Schedule plan_ghz(size_t n, double j1, double j2) {
    if (n < 2) {
        throw std::invalid_argument("plan_ghz: need at least 2 dots");
    }
    if (!(j1 > 0.0) || !(j2 > 0.0)) {
        throw std::invalid_argument("plan_ghz: couplings must be positive");
    }
    // Odd n: build n+1 dots and release the spare at the end.
    const size_t dots = n % 2 == 0 ? n : n + 1;
    Schedule s;
    s.n_dots = dots;
    InteractionStep bell{CouplingKind::Ising, j2, {}, kPi / (4.0 * j2)};
    for (size_t k = 0; k < dots; k += 2) {
        bell.pairs.push_back({k, k + 1});
    }
    s.steps.push_back(bell);
    for (size_t k = 1; k < dots; k += 2) {
        s.steps.push_back(PulseSpec{k, kPi / 2, 0.0, {}});
    }
    for (size_t b = 2; b < dots; b += 2) {
        MergeSpec m{0, b, b + 1, j1, j2, kPi / 2};
        for (auto& st : merge_steps(m)) {
            s.steps.push_back(std::move(st));
        }
        // Re-align the partner so the register reads |0..0> / |1..1>.
        s.steps.push_back(PulseSpec{b + 1, kPi, 0.0, {}});
    }
    if (dots != n) {
        s.steps.push_back(ReleaseStep{dots - 1});
    }
    return s;
}

TimingReport timing(const Schedule& schedule) {
    TimingReport r;
    size_t released = 0;
    for (const auto& step : schedule.steps) {
        if (const auto* is = std::get_if<InteractionStep>(&step)) {
            (is->kind == CouplingKind::Ising ? r.ising_steps : r.heisenberg_steps) += 1;
            r.total += is->duration;
        } else if (std::holds_alternative<ReleaseStep>(step)) {
            ++released;
        }
    }
    r.n = schedule.n_dots - released;
    return r;
}

TimingReport timing_formula(size_t n, double j1, double j2) {
    TimingReport r;
    r.n = n;
    // Integer division is the floor bracket [x].
    r.ising_steps = (n + 1) / 2;
    r.heisenberg_steps = n >= 1 ? (n - 1) / 2 : 0;
    r.total = static_cast<double>(r.ising_steps) * kPi / (4.0 * j2) +
              static_cast<double>(r.heisenberg_steps) * kPi / (8.0 * j1);
    return r;
}

StateVector execute(const Schedule& schedule, const StateVector& initial) {
    schedule.validate();
    const auto& lay = initial.layout();
    if (lay.size() != schedule.n_dots ||
        std::any_of(lay.dims().begin(), lay.dims().end(), [](int d) { return d != 2; })) {
        throw DimensionError("execute: initial state must hold n_dots qubits");
    }
    DotMap map(schedule.n_dots);
    StateVector s = initial;
    for (const auto& step : schedule.steps) {
        s = apply_step(s, step, map);
    }
    return s;
}

CanonicalForm canonicalize(const StateVector& state) {
    const auto& lay = state.layout();
    const size_t n = lay.size();
    const Vec& a = state.amplitudes();
    Eigen::Index best = 0;
    a.cwiseAbs().maxCoeff(&best);
    auto i0 = static_cast<size_t>(best);
    const size_t full = lay.total_dim() - 1;
    size_t i1 = full ^ i0;
    // Flip the smaller of the two complementary bit sets.
    if (std::popcount(i1) < std::popcount(i0)) {
        std::swap(i0, i1);
    }
    std::vector<size_t> flips;
    for (size_t k = 0; k < n; ++k) {
        if ((i0 >> (n - 1 - k)) & 1U) {
            flips.push_back(k);
        }
    }
    // After the flips the two branches sit at |0..0> and |1..1>; an Rz on
    // dot 0 equalizes their phases.
    cplx c0 = a[static_cast<Eigen::Index>(i0)];
    cplx c1 = a[static_cast<Eigen::Index>(i1)];
    double rel = std::abs(c1) > 0.0 ? -std::arg(c1 / c0) : 0.0;
    std::vector<double> z(n, 0.0);
    z[0] = rel;
    Vec v = a;
    for (size_t k : flips) {
        v = apply_local(v, lay, pauli_x(), {k});
    }
    v = apply_local(v, lay, z_rotation(z[0]), {0});
    StateVector out(std::move(v), lay);
    double f = std::norm(ghz_state(n).amplitudes().dot(out.amplitudes()));
    return {flips, z, out, std::min(f, 1.0)};
}

bool is_ghz_class(const StateVector& state, double tol) {
    const size_t n = state.layout().size();
    if (n < 2) {
        return false;
    }
    const double h = 1.0 / std::sqrt(2.0);
    // Subsets containing subsystem 0 cover every bipartition once.
    for (size_t mask = 1; mask + 1 < (size_t{1} << n); mask += 2) {
        std::vector<size_t> part;
        for (size_t k = 0; k < n; ++k) {
            if ((mask >> k) & 1U) {
                part.push_back(k);
            }
        }
        auto sv = schmidt_spectrum(state, part);
        if (std::abs(sv[0] - h) > tol || std::abs(sv[1] - h) > tol) {
            return false;
        }
        for (size_t k = 2; k < sv.size(); ++k) {
            if (sv[k] > tol) {
                return false;
            }
        }
    }
    return true;
}

nlohmann::json to_json(const Schedule& schedule) {
    nlohmann::json steps = nlohmann::json::array();
    auto zlist = [](const std::vector<ZCorrection>& zs) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& z : zs) {
            arr.push_back({{"dot", z.dot}, {"angle", z.angle}});
        }
        return arr;
    };
    for (const auto& step : schedule.steps) {
        if (const auto* is = std::get_if<InteractionStep>(&step)) {
            nlohmann::json pairs = nlohmann::json::array();
            for (const auto& p : is->pairs) {
                pairs.push_back({p.a, p.b});
            }
            steps.push_back({{"kind", kind_name(is->kind)},
                             {"strength", is->strength},
                             {"pairs", pairs},
                             {"duration", is->duration}});
        } else if (const auto* ps = std::get_if<PulseSpec>(&step)) {
            steps.push_back({{"kind", "pulse"},
                             {"target", ps->target},
                             {"angle", ps->angle},
                             {"phase", ps->phase},
                             {"z_corrections", zlist(ps->z_corrections)}});
        } else if (const auto* zs = std::get_if<PhaseStep>(&step)) {
            steps.push_back({{"kind", "phase"}, {"rotations", zlist(zs->rotations)}});
        } else {
            steps.push_back({{"kind", "release"}, {"target", std::get<ReleaseStep>(step).target}});
        }
    }
    return {{"n_dots", schedule.n_dots}, {"steps", steps}};
}

Schedule schedule_from_json(const nlohmann::json& j) {
    try {
        Schedule s;
        s.n_dots = j.at("n_dots").get<size_t>();
        auto zlist = [](const nlohmann::json& arr) {
            std::vector<ZCorrection> out;
            for (const auto& z : arr) {
                out.push_back({z.at("dot").get<size_t>(), z.at("angle").get<double>()});
            }
            return out;
        };
        for (const auto& st : j.at("steps")) {
            const auto kind = st.at("kind").get<std::string>();
            if (kind == "pulse") {
                PulseSpec p{st.at("target").get<size_t>(), st.at("angle").get<double>(), st.at("phase").get<double>(),
                            {}};
                if (st.contains("z_corrections")) {
                    p.z_corrections = zlist(st.at("z_corrections"));
                }
                s.steps.push_back(p);
            } else if (kind == "phase") {
                s.steps.push_back(PhaseStep{zlist(st.at("rotations"))});
            } else if (kind == "release") {
                s.steps.push_back(ReleaseStep{st.at("target").get<size_t>()});
            } else {
                InteractionStep is{kind_from(kind), st.at("strength").get<double>(), {},
                                   st.at("duration").get<double>()};
                for (const auto& p : st.at("pairs")) {
                    is.pairs.push_back({p.at(0).get<size_t>(), p.at(1).get<size_t>()});
                }
                s.steps.push_back(is);
            }
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("schedule: malformed JSON: ") + e.what());
    }
}

}  // namespace ep
