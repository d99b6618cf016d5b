#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "ep/cat_code.hpp"
#include "ep/random.hpp"
#include "ep/spin_register.hpp"

namespace ep {

namespace {

const cplx kI(0.0, 1.0);

Vec vacuum(int n_max) {
    Vec v = Vec::Zero(n_max + 1);
    v[0] = 1.0;
    return v;
}

// Folds the norm of `ket` into `weight` and normalizes `ket`.
void fold_norm(cplx& weight, Vec& ket) {
    double n = ket.norm();
    if (n > 0.0) {
        ket /= n;
        weight *= n;
    } else {
        weight = 0.0;
        ket = Vec::Zero(ket.size());
        ket[0] = 1.0;
    }
}

}  // namespace

CavityRegister::CavityRegister(std::vector<Branch> branches, int n_max, bool labelled)
    : branches_(std::move(branches)), n_max_(n_max), labelled_(labelled) {
    if (branches_.size() != (labelled_ ? 2U : 1U)) {
        throw std::invalid_argument("cavity register: labelled registers hold 2 branches, unlabelled 1");
    }
    const size_t k = branches_.front().cavities.size();
    for (const auto& b : branches_) {
        if (b.cavities.size() != k) {
            throw DimensionError("cavity register: branches disagree on cavity count");
        }
        for (const auto& c : b.cavities) {
            if (c.size() != n_max_ + 1) {
                throw DimensionError("cavity register: cavity ket has wrong dimension");
            }
        }
    }
    if (!labelled_ && k == 0) {
        throw DimensionError("cavity register: unlabelled register needs a cavity");
    }
}

CavityRegister CavityRegister::chain(cplx alpha, size_t k, int n_max, cplx a, cplx b) {
    Vec c0 = cat_amplitudes(alpha, 1, n_max);
    Vec c1 = cat_amplitudes(kI * alpha, 1, n_max);
    CavityRegister r({Branch{a, std::vector<Vec>(k, c0)}, Branch{b, std::vector<Vec>(k, c1)}}, n_max, true);
    r.normalize();
    return r;
}

CavityRegister CavityRegister::product(const std::vector<Vec>& cavities, int n_max) {
    std::vector<Vec> kets;
    cplx w = 1.0;
    for (auto c : cavities) {
        fold_norm(w, c);
        kets.push_back(std::move(c));
    }
    CavityRegister r({Branch{w, kets}}, n_max, false);
    r.normalize();
    return r;
}

CavityRegister CavityRegister::from_state_vector(const StateVector& state, double tol) {
    const auto& dims = state.layout().dims();
    const bool labelled = dims.front() == 2;
    const size_t first = labelled ? 1 : 0;
    if (dims.size() <= first && !labelled) {
        throw DimensionError("cavity register: no cavities in layout");
    }
    const int nc = dims.size() > first ? dims[first] : 2;
    for (size_t k = first; k < dims.size(); ++k) {
        if (dims[k] != nc) {
            throw DimensionError("cavity register: cavities must share one truncation");
        }
    }
    const size_t k = dims.size() - first;
    const Eigen::Index block = static_cast<Eigen::Index>(state.dim() / (labelled ? 2 : 1));
    std::vector<Branch> branches;
    for (size_t b = 0; b < (labelled ? 2U : 1U); ++b) {
        Vec rest = state.amplitudes().segment(static_cast<Eigen::Index>(b) * block, block);
        Branch br{rest.norm(), {}};
        if (br.weight == cplx(0.0)) {
            br.cavities.assign(k, vacuum(nc - 1));
            branches.push_back(br);
            continue;
        }
        rest /= rest.norm();
        for (size_t j = 0; j + 1 < k; ++j) {
            const Eigen::Index cols = rest.size() / nc;
            Mat m = Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(rest.data(), nc,
                                                                                                   cols);
            Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const auto& sv = svd.singularValues();
            if (sv.size() > 1 && sv[1] > std::sqrt(tol)) {
                throw std::invalid_argument("cavity register: branch is not a product of cavity states");
            }
            br.cavities.push_back(svd.matrixU().col(0));
            rest = svd.matrixV().col(0).conjugate();
            br.weight *= sv[0];
        }
        br.cavities.push_back(rest);
        branches.push_back(br);
    }
    CavityRegister r(std::move(branches), nc - 1, labelled);
    return r;
}

StateVector CavityRegister::to_state_vector() const {
    std::vector<int> dims;
    std::vector<std::string> labels;
    if (labelled_) {
        dims.push_back(2);
        labels.push_back("label");
    }
    for (size_t j = 0; j < n_cavities(); ++j) {
        dims.push_back(n_max_ + 1);
        labels.push_back("cavity" + std::to_string(j));
    }
    SubsystemLayout lay(dims, labels);
    Vec out(static_cast<Eigen::Index>(lay.total_dim()));
    const Eigen::Index block = out.size() / static_cast<Eigen::Index>(branches_.size());
    for (size_t b = 0; b < branches_.size(); ++b) {
        Vec acc = Vec::Constant(1, branches_[b].weight);
        for (const auto& c : branches_[b].cavities) {
            Vec next(acc.size() * c.size());
            for (Eigen::Index i = 0; i < acc.size(); ++i) {
                next.segment(i * c.size(), c.size()) = acc[i] * c;
            }
            acc = std::move(next);
        }
        out.segment(static_cast<Eigen::Index>(b) * block, block) = acc;
    }
    return StateVector::normalized(std::move(out), std::move(lay));
}

double CavityRegister::norm2() const {
    double s = 0.0;
    for (const auto& b : branches_) {
        s += std::norm(b.weight);
    }
    return s;
}

void CavityRegister::normalize() {
    double n = std::sqrt(norm2());
    if (!(n > 0.0)) {
        throw ZeroProbabilityError("cavity register: null state");
    }
    for (auto& b : branches_) {
        b.weight /= n;
    }
}

void CavityRegister::check_index(size_t j) const {
    if (j >= n_cavities()) {
        throw DimensionError("cavity register: cavity index " + std::to_string(j) + " out of range");
    }
}

cplx CavityRegister::overlap(const CavityRegister& other) const {
    if (other.labelled_ != labelled_ || other.n_cavities() != n_cavities() || other.n_max_ != n_max_) {
        throw DimensionError("cavity register: overlap of differently shaped registers");
    }
    cplx s = 0.0;
    for (size_t b = 0; b < branches_.size(); ++b) {
        cplx term = std::conj(branches_[b].weight) * other.branches_[b].weight;
        for (size_t j = 0; j < n_cavities(); ++j) {
            term *= branches_[b].cavities[j].dot(other.branches_[b].cavities[j]);
        }
        s += term;
    }
    return s;
}

double CavityRegister::photon_weight(size_t j) const {
    check_index(j);
    double s = 0.0;
    for (const auto& b : branches_) {
        s += std::norm(b.weight) * ep::mean_photons(b.cavities[j]);
    }
    return s;
}

double CavityRegister::mean_photons(size_t j) const {
    return photon_weight(j) / norm2();
}

void CavityRegister::apply_cavity_op(size_t j, const Mat& op) {
    check_index(j);
    for (auto& b : branches_) {
        Vec v = op * b.cavities[j];
        fold_norm(b.weight, v);
        b.cavities[j] = std::move(v);
    }
}

void CavityRegister::apply_lowering(size_t j) {
    check_index(j);
    for (auto& b : branches_) {
        Vec& c = b.cavities[j];
        Vec v = Vec::Zero(c.size());
        for (Eigen::Index n = 1; n < c.size(); ++n) {
            v[n - 1] = std::sqrt(static_cast<double>(n)) * c[n];
        }
        fold_norm(b.weight, v);
        c = std::move(v);
    }
}

void CavityRegister::apply_drift(size_t j, double kappa_t) {
    check_index(j);
    for (auto& b : branches_) {
        Vec& c = b.cavities[j];
        for (Eigen::Index n = 0; n < c.size(); ++n) {
            c[n] *= std::exp(-0.5 * kappa_t * static_cast<double>(n));
        }
        fold_norm(b.weight, c);
    }
}

void CavityRegister::append_cavity(const std::array<Vec, 2>& per_branch) {
    for (size_t b = 0; b < branches_.size(); ++b) {
        Vec v = per_branch[b];
        if (v.size() != n_max_ + 1) {
            throw DimensionError("cavity register: appended ket has wrong dimension");
        }
        fold_norm(branches_[b].weight, v);
        branches_[b].cavities.push_back(std::move(v));
    }
}

void CavityRegister::set_weights(cplx w0, cplx w1) {
    branches_[0].weight = w0;
    if (labelled_) {
        branches_[1].weight = w1;
    }
}

double CavityRegister::parity_probability(size_t j, int sign) const {
    check_index(j);
    const int want = sign > 0 ? 0 : 1;
    double s = 0.0;
    for (const auto& b : branches_) {
        double part = 0.0;
        for (Eigen::Index n = want; n < b.cavities[j].size(); n += 2) {
            part += std::norm(b.cavities[j][n]);
        }
        s += std::norm(b.weight) * part;
    }
    return std::clamp(s / norm2(), 0.0, 1.0);
}

void CavityRegister::project_parity(size_t j, int sign) {
    apply_cavity_op(j, parity_projector(n_max_, sign));
}

double logical_fidelity(const CavityRegister& reg, const CavityRegister& ref) {
    return std::clamp(std::norm(ref.overlap(reg)) / (ref.norm2() * reg.norm2()), 0.0, 1.0);
}

namespace {

void require_chain_form(const CavityRegister& chain, cplx alpha, double tol) {
    if (!chain.labelled()) {
        throw std::invalid_argument("extend_chain: register has no label qubit");
    }
    Vec c0 = cat_amplitudes(alpha, 1, chain.n_max());
    Vec c1 = cat_amplitudes(kI * alpha, 1, chain.n_max());
    for (size_t b = 0; b < 2; ++b) {
        const Vec& target = b == 0 ? c0 : c1;
        for (const auto& c : chain.branch(b).cavities) {
            if (std::norm(target.dot(c)) < 1.0 - tol) {
                throw std::invalid_argument("extend_chain: input is not in chain form");
            }
        }
    }
}

}  // namespace

CavityRegister extend_chain(const CavityRegister& chain, const StateVector& fresh_bell, const CavitySpec& cavity) {
    cavity.validate();
    if (chain.n_max() != cavity.n_max) {
        throw DimensionError("extend_chain: truncation mismatch");
    }
    require_chain_form(chain, cavity.alpha, 1e-6);
    if (fresh_bell.layout().dims() != std::vector<int>{2, 2}) {
        throw DimensionError("extend_chain: fresh pair must be two dots");
    }
    if (std::norm(fresh_bell[0]) + std::norm(fresh_bell[3]) < 1.0 - 1e-9) {
        throw std::invalid_argument("extend_chain: fresh pair is not of the form a|00> + b|11>");
    }
    const double nrm = std::sqrt(chain.norm2());
    const cplx w0 = chain.branch(0).weight / nrm;
    const cplx w1 = chain.branch(1).weight / nrm;

    // Every operation below is diagonal in the label, so the label can
    // stand in for the whole chain: simulate [label, dot_a, dot_b].
    Vec label(2);
    label << w0, w1;
    StateVector q(label, SubsystemLayout({2}));
    StateVector dots = tensor(q, StateVector(fresh_bell.amplitudes(), SubsystemLayout({2, 2})));
    Schedule sched{3, merge_steps(MergeSpec{0, 1, 2, 1.0, 1.0, kPi / 2})};
    sched.steps.push_back(PulseSpec{2, kPi, 0.0, {}});
    StateVector merged = execute(sched, StateVector(dots.amplitudes(), dot_layout(3)));

    const int nc = cavity.dim();
    Vec vac = vacuum(cavity.n_max);
    StateVector with_cav = insert_subsystem(merged, 3, vac, "cavity");
    Vec v = apply_local(with_cav.amplitudes(), with_cav.layout(), encode_unitary(cavity.alpha, cavity.n_max), {1, 2, 3});
    Mat cnot = Mat::Identity(4, 4);
    cnot(2, 2) = cnot(3, 3) = 0.0;
    cnot(2, 3) = cnot(3, 2) = 1.0;
    v = apply_local(v, with_cav.layout(), cnot, {0, 2});
    StateVector encoded(std::move(v), with_cav.layout());
    Vec zero(2);
    zero << 1.0, 0.0;
    StateVector freed = remove_subsystem(remove_subsystem(encoded, 2, zero), 1, zero);

    // freed is on [label, cavity]: c0|0>|cav0> + c1|1>|cav1>.
    std::array<Vec, 2> kets;
    std::array<cplx, 2> c{};
    for (Eigen::Index b = 0; b < 2; ++b) {
        Vec seg = freed.amplitudes().segment(b * nc, nc);
        double n = seg.norm();
        c[static_cast<size_t>(b)] = n;
        kets[static_cast<size_t>(b)] = n > 0.0 ? Vec(seg / n) : vacuum(cavity.n_max);
    }
    // Rz on the label restores the input relative phase.
    cplx ph0 = kets[0].dot(cat_amplitudes(cavity.alpha, 1, cavity.n_max));
    cplx ph1 = kets[1].dot(cat_amplitudes(kI * cavity.alpha, 1, cavity.n_max));
    kets[0] *= ph0;
    kets[1] *= ph1;
    cplx n0 = c[0] * std::conj(ph0);
    cplx n1 = c[1] * std::conj(ph1);
    if (std::abs(w0) > 0.0 && std::abs(w1) > 0.0 && std::abs(n0) > 0.0 && std::abs(n1) > 0.0) {
        double theta = std::arg(w1 / w0) - std::arg(n1 / n0);
        n0 *= std::exp(-kI * theta / 2.0);
        n1 *= std::exp(kI * theta / 2.0);
    }
    std::vector<CavityRegister::Branch> branches;
    for (size_t b = 0; b < 2; ++b) {
        branches.push_back(chain.branch(b));
        branches[b].weight = b == 0 ? n0 : n1;
    }
    CavityRegister out(std::move(branches), chain.n_max(), true);
    out.append_cavity(kets);
    out.normalize();
    return out;
}

StateVector extend_chain(const StateVector& chain, const StateVector& fresh_bell, const CavitySpec& cavity) {
    if (chain.layout().size() == 1 && chain.layout().dim(0) == 2) {
        CavityRegister bare({{chain[0], {}}, {chain[1], {}}}, cavity.n_max, true);
        return extend_chain(bare, fresh_bell, cavity).to_state_vector();
    }
    return extend_chain(CavityRegister::from_state_vector(chain), fresh_bell, cavity).to_state_vector();
}

CavityRegister protect_register(const StateVector& dots, const CavitySpec& cavity) {
    cavity.validate();
    const auto& lay = dots.layout();
    const size_t n = lay.size();
    if (n < 2 || std::any_of(lay.dims().begin(), lay.dims().end(), [](int d) { return d != 2; })) {
        throw DimensionError("protect_register: need at least two dots");
    }
    const size_t last = dots.dim() - 1;
    if (std::norm(dots[0]) + std::norm(dots[last]) < 1.0 - 1e-9) {
        throw std::invalid_argument("protect_register: register is not of the form a|0..0> + b|1..1>");
    }
    // Encode on (dot k, dot k+1, cavity k): dot k is freed and dot k+1
    // keeps the label, so each branch picks up the column of U for |b b 0>.
    Mat u = encode_unitary(cavity.alpha, cavity.n_max);
    const Eigen::Index nc = cavity.dim();
    std::array<Vec, 2> code;
    for (Eigen::Index b = 0; b < 2; ++b) {
        Vec col = u.col(b * 3 * nc);
        Vec word = col.segment(b * nc, nc);
        if (std::abs(word.norm() - 1.0) > 1e-12) {
            throw ConvergenceError("protect_register: encode column left the code space");
        }
        code[static_cast<size_t>(b)] = word;
    }
    std::vector<CavityRegister::Branch> branches{{dots[0], std::vector<Vec>(n - 1, code[0])},
                                                 {dots[last], std::vector<Vec>(n - 1, code[1])}};
    CavityRegister r(std::move(branches), cavity.n_max, true);
    r.normalize();
    return r;
}

DecodeResult decode_register(const CavityRegister& reg, const CavitySpec& cavity) {
    if (!reg.labelled() || reg.n_max() != cavity.n_max) {
        throw DimensionError("decode_register: register shape mismatch");
    }
    Vec c0 = cat_amplitudes(cavity.alpha, 1, cavity.n_max);
    Vec c1 = cat_amplitudes(kI * cavity.alpha, 1, cavity.n_max);
    std::array<cplx, 2> w{};
    for (size_t b = 0; b < 2; ++b) {
        const Vec& word = b == 0 ? c0 : c1;
        w[b] = reg.branch(b).weight;
        for (const auto& c : reg.branch(b).cavities) {
            w[b] *= word.dot(c);
        }
    }
    double kept = (std::norm(w[0]) + std::norm(w[1])) / reg.norm2();
    if (kept < 1e-15) {
        throw ZeroProbabilityError("decode_register: no weight left in the code space");
    }
    const size_t n = reg.n_cavities() + 1;
    auto lay = dot_layout(n);
    Vec v = Vec::Zero(static_cast<Eigen::Index>(lay.total_dim()));
    v[0] = w[0];
    v[v.size() - 1] = w[1];
    return {StateVector::normalized(std::move(v), lay), std::min(kept, 1.0)};
}

ParityResult parity_measure(const CavityRegister& reg, size_t j, double u) {
    double p_plus = reg.parity_probability(j, 1);
    int outcome = u < p_plus ? 1 : -1;
    double p = outcome == 1 ? p_plus : 1.0 - p_plus;
    if (p < 1e-15) {
        throw ZeroProbabilityError("parity_measure: selected outcome has zero probability");
    }
    CavityRegister out = reg;
    out.project_parity(j, outcome);
    out.normalize();
    return {outcome, out, p};
}

StateParityResult parity_measure(const StateVector& state, size_t subsystem, double u) {
    if (subsystem >= state.layout().size()) {
        throw DimensionError("parity_measure: subsystem out of range");
    }
    const int n_max = state.layout().dim(subsystem) - 1;
    Vec even = apply_local(state.amplitudes(), state.layout(), parity_projector(n_max, 1), {subsystem});
    double p_plus = std::clamp(even.squaredNorm(), 0.0, 1.0);
    int outcome = u < p_plus ? 1 : -1;
    auto proj = partial_project(state, subsystem, LinearMap(parity_projector(n_max, outcome), SubsystemLayout({n_max + 1})));
    return {outcome, proj.state, proj.probability};
}

Mat repump_unitary(cplx alpha, double kappa_tau, int n_max) {
    const double shrink = std::exp(-kappa_tau / 2.0);
    Mat src(n_max + 1, 2);
    Mat dst(n_max + 1, 2);
    Mat a = lowering(n_max);
    for (int b = 0; b < 2; ++b) {
        cplx rot = b == 0 ? cplx(1.0) : kI;
        Vec s = a * cat_amplitudes(rot * alpha * shrink, 1, n_max);
        src.col(b) = s / s.norm();
        dst.col(b) = cat_amplitudes(rot * alpha, 1, n_max);
    }
    // Symmetric orthonormalization X S^{-1/2} of each pair.
    auto lowdin = [](const Mat& x) {
        Mat s = x.adjoint() * x;
        Eigen::SelfAdjointEigenSolver<Mat> es(s);
        Vec inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse().cast<cplx>();
        return Mat(x * es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint());
    };
    Mat bs = complete_orthonormal(lowdin(src));
    Mat bt = complete_orthonormal(lowdin(dst));
    return bt * bs.adjoint();
}

CavityRegister repump_correct(const CavityRegister& reg, const std::vector<int>& syndrome, cplx alpha,
                              const std::vector<double>& kappa_tau) {
    if (syndrome.size() != reg.n_cavities() || kappa_tau.size() != reg.n_cavities()) {
        throw DimensionError("repump_correct: syndrome length does not match cavity count");
    }
    CavityRegister out = reg;
    for (size_t j = 0; j < syndrome.size(); ++j) {
        if (syndrome[j] == -1) {
            out.apply_cavity_op(j, repump_unitary(alpha, kappa_tau[j], reg.n_max()));
        } else if (syndrome[j] != 1) {
            throw std::invalid_argument("repump_correct: syndrome entries must be +1 or -1");
        }
    }
    out.normalize();
    return out;
}

namespace {

// Normalized no-jump survival probability after time dt.
double survival(const CavityRegister& reg, const std::vector<CavitySpec>& specs, double dt) {
    double total = 0.0;
    for (size_t b = 0; b < reg.n_branches(); ++b) {
        double p = std::norm(reg.branch(b).weight);
        for (size_t j = 0; j < reg.n_cavities(); ++j) {
            const Vec& c = reg.branch(b).cavities[j];
            double s = 0.0;
            for (Eigen::Index n = 0; n < c.size(); ++n) {
                s += std::norm(c[n]) * std::exp(-specs[j].kappa * dt * static_cast<double>(n));
            }
            p *= s;
        }
        total += p;
    }
    return total / reg.norm2();
}

void drift_all(CavityRegister& reg, const std::vector<CavitySpec>& specs, double dt) {
    for (size_t j = 0; j < reg.n_cavities(); ++j) {
        if (specs[j].kappa > 0.0) {
            reg.apply_drift(j, specs[j].kappa * dt);
        }
    }
    reg.normalize();
}

}  // namespace

TrajectoryRecord loss_trajectory(const CavityRegister& initial, const std::vector<CavitySpec>& specs,
                                 const TrajectoryOptions& options, uint64_t seed) {
    const size_t k = initial.n_cavities();
    if (specs.size() != k) {
        throw DimensionError("loss_trajectory: one cavity spec per cavity required");
    }
    for (const auto& s : specs) {
        s.validate();
    }
    if (!(options.duration >= 0.0) || !(options.syndrome_interval >= 0.0)) {
        throw std::invalid_argument("loss_trajectory: duration and interval must be >= 0");
    }
    Rng rng(seed);
    CavityRegister state = initial;
    state.normalize();
    TrajectoryRecord rec{seed, std::vector<std::vector<double>>(k), std::vector<std::vector<int>>(k),
                         std::vector<std::vector<int>>(k), std::vector<std::vector<int>>(k), state};
    std::vector<int> jumps_since(k, 0);
    std::vector<int> reference(k, 1);
    std::vector<double> since_restore(k, 0.0);
    double t = 0.0;

    auto run_until = [&](double t_end) {
        while (t < t_end) {
            const double span = t_end - t;
            const double r = rng.uniform_open0();
            if (survival(state, specs, span) > r) {
                drift_all(state, specs, span);
                t = t_end;
                break;
            }
            double lo = 0.0;
            double hi = span;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, t_end); ++it) {
                double mid = 0.5 * (lo + hi);
                (survival(state, specs, mid) > r ? lo : hi) = mid;
            }
            drift_all(state, specs, hi);
            t += hi;
            double total = 0.0;
            std::vector<double> rates(k);
            for (size_t j = 0; j < k; ++j) {
                rates[j] = specs[j].kappa * state.photon_weight(j);
                total += rates[j];
            }
            double pick = rng.uniform() * total;
            size_t j = 0;
            while (j + 1 < k && pick >= rates[j]) {
                pick -= rates[j];
                ++j;
            }
            state.apply_lowering(j);
            state.normalize();
            rec.jump_times[j].push_back(t);
            ++jumps_since[j];
        }
    };

    size_t rounds = 0;
    if (options.syndrome_interval > 0.0) {
        rounds = static_cast<size_t>(std::floor(options.duration / options.syndrome_interval + 1e-9));
    }
    for (size_t r = 1; r <= rounds; ++r) {
        double t_next = std::min(options.duration, static_cast<double>(r) * options.syndrome_interval);
        double t_prev = t;
        run_until(t_next);
        for (auto& s : since_restore) {
            s += t_next - t_prev;
        }
        std::vector<int> outcomes(k);
        for (size_t j = 0; j < k; ++j) {
            auto pm = parity_measure(state, j, rng.uniform());
            state = pm.state;
            outcomes[j] = pm.outcome;
            rec.parity_outcomes[j].push_back(pm.outcome);
            rec.syndromes[j].push_back(pm.outcome * reference[j]);
            rec.jumps_per_round[j].push_back(jumps_since[j]);
            jumps_since[j] = 0;
        }
        if (options.correct) {
            std::vector<double> kt(k);
            for (size_t j = 0; j < k; ++j) {
                kt[j] = specs[j].kappa * since_restore[j];
            }
            // One repump per cavity uses that cavity's own alpha.
            for (size_t j = 0; j < k; ++j) {
                if (outcomes[j] == -1) {
                    state.apply_cavity_op(j, repump_unitary(specs[j].alpha, kt[j], state.n_max()));
                    since_restore[j] = 0.0;
                }
            }
            state.normalize();
        } else {
            reference = outcomes;
        }
    }
    run_until(options.duration);
    rec.final_state = state;
    return rec;
}

}  // namespace ep
