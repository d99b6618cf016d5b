#include "ep/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace ep {

namespace {

constexpr double kNormTol = 1e-9;
constexpr double kHermTol = 1e-12;
constexpr size_t kDenseExpLimit = 256;

void require_same_layout(const SubsystemLayout& a, const SubsystemLayout& b, const char* what) {
    if (a.dims() != b.dims()) {
        throw DimensionError(std::string(what) + ": layout mismatch");
    }
}

}  // namespace

SubsystemLayout::SubsystemLayout(std::vector<int> dims, std::vector<std::string> labels)
    : dims_(std::move(dims)), labels_(std::move(labels)) {
    if (labels_.empty()) {
        labels_.assign(dims_.size(), "");
    }
    if (labels_.size() != dims_.size()) {
        throw DimensionError("layout: label count does not match dims");
    }
    for (int d : dims_) {
        if (d < 2) {
            throw DimensionError("layout: subsystem dimension must be >= 2");
        }
    }
    std::set<std::string> seen;
    for (const auto& l : labels_) {
        if (!l.empty() && !seen.insert(l).second) {
            throw DimensionError("layout: duplicate label '" + l + "'");
        }
    }
}

size_t SubsystemLayout::total_dim() const {
    size_t n = 1;
    for (int d : dims_) {
        n *= static_cast<size_t>(d);
    }
    return n;
}

size_t SubsystemLayout::stride(size_t i) const {
    size_t s = 1;
    for (size_t k = i + 1; k < dims_.size(); ++k) {
        s *= static_cast<size_t>(dims_[k]);
    }
    return s;
}

SubsystemLayout SubsystemLayout::concat(const SubsystemLayout& other) const {
    auto d = dims_;
    auto l = labels_;
    d.insert(d.end(), other.dims_.begin(), other.dims_.end());
    l.insert(l.end(), other.labels_.begin(), other.labels_.end());
    return SubsystemLayout(std::move(d), std::move(l));
}

SubsystemLayout SubsystemLayout::without(size_t i) const {
    if (i >= dims_.size()) {
        throw DimensionError("layout: subsystem index out of range");
    }
    auto d = dims_;
    auto l = labels_;
    d.erase(d.begin() + static_cast<long>(i));
    l.erase(l.begin() + static_cast<long>(i));
    return SubsystemLayout(std::move(d), std::move(l));
}

SubsystemLayout SubsystemLayout::permuted(const std::vector<size_t>& order) const {
    if (order.size() != dims_.size()) {
        throw DimensionError("layout: permutation size mismatch");
    }
    std::vector<int> d;
    std::vector<std::string> l;
    std::vector<bool> used(dims_.size(), false);
    for (size_t k : order) {
        if (k >= dims_.size() || used[k]) {
            throw DimensionError("layout: invalid permutation");
        }
        used[k] = true;
        d.push_back(dims_[k]);
        l.push_back(labels_[k]);
    }
    return SubsystemLayout(std::move(d), std::move(l));
}

size_t SubsystemLayout::index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    return static_cast<size_t>(it - labels_.begin());
}

std::vector<int> digits_of(const SubsystemLayout& layout, size_t index) {
    std::vector<int> d(layout.size());
    for (size_t k = layout.size(); k-- > 0;) {
        d[k] = static_cast<int>(index % static_cast<size_t>(layout.dim(k)));
        index /= static_cast<size_t>(layout.dim(k));
    }
    return d;
}

size_t index_of(const SubsystemLayout& layout, const std::vector<int>& digits) {
    if (digits.size() != layout.size()) {
        throw DimensionError("digit count does not match layout");
    }
    size_t idx = 0;
    for (size_t k = 0; k < digits.size(); ++k) {
        if (digits[k] < 0 || digits[k] >= layout.dim(k)) {
            throw DimensionError("digit out of range");
        }
        idx = idx * static_cast<size_t>(layout.dim(k)) + static_cast<size_t>(digits[k]);
    }
    return idx;
}

StateVector::StateVector(Vec amplitudes, SubsystemLayout layout) : amp_(std::move(amplitudes)), layout_(std::move(layout)) {
    if (static_cast<size_t>(amp_.size()) != layout_.total_dim()) {
        throw DimensionError("state: amplitude length does not match layout");
    }
    double n = amp_.norm();
    if (!(std::abs(n - 1.0) <= kNormTol)) {
        throw std::invalid_argument("state: norm " + std::to_string(n) + " is not 1");
    }
}

StateVector StateVector::normalized(Vec amplitudes, SubsystemLayout layout) {
    double n = amplitudes.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw ZeroProbabilityError("state: cannot normalize a null vector");
    }
    amplitudes /= n;
    return StateVector(std::move(amplitudes), std::move(layout));
}

StateVector StateVector::basis(const SubsystemLayout& layout, const std::vector<int>& digits) {
    return from_index(layout, index_of(layout, digits));
}

StateVector StateVector::from_index(const SubsystemLayout& layout, size_t index) {
    if (index >= layout.total_dim()) {
        throw DimensionError("state: basis index out of range");
    }
    Vec v = Vec::Zero(static_cast<Eigen::Index>(layout.total_dim()));
    v[static_cast<Eigen::Index>(index)] = 1.0;
    return StateVector(std::move(v), layout);
}

double hermiticity_defect(const Mat& m) {
    if (m.rows() != m.cols()) {
        return INFINITY;
    }
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double unitarity_defect(const Mat& u) {
    Mat g = u.adjoint() * u;
    g -= Mat::Identity(u.cols(), u.cols());
    return g.cwiseAbs().maxCoeff();
}

LinearMap::LinearMap(SpMat m, SubsystemLayout layout) : sparse_(true), sp_(std::move(m)), layout_(std::move(layout)) {
    auto n = static_cast<Eigen::Index>(layout_.total_dim());
    if (sp_.rows() != n || sp_.cols() != n) {
        throw DimensionError("map: matrix size does not match layout");
    }
    sp_.makeCompressed();
    SpMat adj = SpMat(sp_.adjoint());
    SpMat diff = sp_ - adj;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < diff.outerSize(); ++k) {
        for (SpMat::InnerIterator it(diff, k); it; ++it) {
            worst = std::max(worst, std::abs(it.value()));
        }
    }
    hermitian_ = worst <= kHermTol;
}

LinearMap::LinearMap(Mat m, SubsystemLayout layout) : sparse_(false), dn_(std::move(m)), layout_(std::move(layout)) {
    auto n = static_cast<Eigen::Index>(layout_.total_dim());
    if (dn_.rows() != n || dn_.cols() != n) {
        throw DimensionError("map: matrix size does not match layout");
    }
    hermitian_ = hermiticity_defect(dn_) <= kHermTol;
}

Mat LinearMap::dense() const {
    return sparse_ ? Mat(sp_) : dn_;
}

Vec LinearMap::apply(const Vec& v) const {
    if (static_cast<size_t>(v.size()) != dim()) {
        throw DimensionError("map: vector length mismatch");
    }
    return sparse_ ? Vec(sp_ * v) : Vec(dn_ * v);
}

StateVector LinearMap::apply(const StateVector& s) const {
    require_same_layout(s.layout(), layout_, "map apply");
    return StateVector::normalized(apply(s.amplitudes()), s.layout());
}

bool LinearMap::is_diagonal() const {
    if (sparse_) {
        for (Eigen::Index k = 0; k < sp_.outerSize(); ++k) {
            for (SpMat::InnerIterator it(sp_, k); it; ++it) {
                if (it.row() != it.col() && it.value() != cplx(0.0)) {
                    return false;
                }
            }
        }
        return true;
    }
    Mat off = dn_;
    off.diagonal().setZero();
    return off.cwiseAbs().maxCoeff() == 0.0;
}

double LinearMap::norm_bound() const {
    if (sparse_) {
        double best = 0.0;
        for (Eigen::Index k = 0; k < sp_.outerSize(); ++k) {
            double row = 0.0;
            for (SpMat::InnerIterator it(sp_, k); it; ++it) {
                row += std::abs(it.value());
            }
            best = std::max(best, row);
        }
        return best;
    }
    return dn_.cwiseAbs().rowwise().sum().maxCoeff();
}

StateVector tensor(const StateVector& a, const StateVector& b) {
    SubsystemLayout lay = a.layout().concat(b.layout());
    Vec out(static_cast<Eigen::Index>(lay.total_dim()));
    const auto nb = static_cast<Eigen::Index>(b.dim());
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(a.dim()); ++i) {
        out.segment(i * nb, nb) = a.amplitudes()[i] * b.amplitudes();
    }
    return StateVector::normalized(std::move(out), std::move(lay));
}

StateVector tensor(const std::vector<StateVector>& states) {
    if (states.empty()) {
        throw DimensionError("tensor: no operands");
    }
    StateVector acc = states.front();
    for (size_t k = 1; k < states.size(); ++k) {
        acc = tensor(acc, states[k]);
    }
    return acc;
}

LinearMap tensor(const std::vector<LinearMap>& maps) {
    if (maps.empty()) {
        throw DimensionError("tensor: no operands");
    }
    SubsystemLayout lay = maps.front().layout();
    SpMat acc = maps.front().is_sparse() ? maps.front().sparse_matrix() : SpMat(maps.front().dense().sparseView());
    for (size_t k = 1; k < maps.size(); ++k) {
        lay = lay.concat(maps[k].layout());
        SpMat b = maps[k].is_sparse() ? maps[k].sparse_matrix() : SpMat(maps[k].dense().sparseView());
        std::vector<Eigen::Triplet<cplx>> trip;
        trip.reserve(static_cast<size_t>(acc.nonZeros() * b.nonZeros()));
        for (Eigen::Index i = 0; i < acc.outerSize(); ++i) {
            for (SpMat::InnerIterator ia(acc, i); ia; ++ia) {
                for (Eigen::Index j = 0; j < b.outerSize(); ++j) {
                    for (SpMat::InnerIterator ib(b, j); ib; ++ib) {
                        trip.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                                          ia.value() * ib.value());
                    }
                }
            }
        }
        SpMat next(acc.rows() * b.rows(), acc.cols() * b.cols());
        next.setFromTriplets(trip.begin(), trip.end());
        acc = std::move(next);
    }
    return LinearMap(std::move(acc), std::move(lay));
}

Mat expm_hermitian(const Mat& h, double t) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("expm: eigendecomposition failed");
    }
    Vec phases = (es.eigenvalues().cast<cplx>() * cplx(0.0, -t)).array().exp();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Vec krylov_expv(const SpMat& h, const Vec& v, double t, double tol) {
    const Eigen::Index n = v.size();
    const Eigen::Index m_max = std::min<Eigen::Index>(40, n);
    double hnorm = 0.0;
    for (Eigen::Index k = 0; k < h.outerSize(); ++k) {
        double row = 0.0;
        for (SpMat::InnerIterator it(h, k); it; ++it) {
            row += std::abs(it.value());
        }
        hnorm = std::max(hnorm, row);
    }
    Vec w = v;
    if (hnorm == 0.0 || t == 0.0) {
        return w;
    }
    double remaining = t;
    double step = std::min(t, 10.0 / hnorm);
    Mat basis(n, m_max + 1);
    int guard = 0;
    while (remaining > 0.0) {
        if (++guard > 1000000) {
            throw ConvergenceError("krylov: too many substeps");
        }
        double dt = std::min(step, remaining);
        double beta0 = w.norm();
        basis.col(0) = w / beta0;
        std::vector<double> alpha;
        std::vector<double> beta;
        Eigen::Index m = 0;
        bool breakdown = false;
        for (Eigen::Index j = 0; j < m_max; ++j) {
            Vec u = h * basis.col(j);
            alpha.push_back(std::real(basis.col(j).dot(u)));
            // Full reorthogonalization keeps the small basis well conditioned.
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index i = 0; i <= j; ++i) {
                    u -= basis.col(i).dot(u) * basis.col(i);
                }
            }
            double b = u.norm();
            m = j + 1;
            if (b < 1e-14 * hnorm) {
                breakdown = true;
                break;
            }
            beta.push_back(b);
            basis.col(j + 1) = u / b;
        }
        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            tri(i, i) = alpha[static_cast<size_t>(i)];
            if (i + 1 < m) {
                tri(i, i + 1) = tri(i + 1, i) = beta[static_cast<size_t>(i)];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
        Vec phase = (es.eigenvalues().cast<cplx>() * cplx(0.0, -dt)).array().exp();
        Vec coeff = es.eigenvectors().cast<cplx>() * (phase.asDiagonal() *
                                                      es.eigenvectors().row(0).transpose().cast<cplx>());
        if (!breakdown) {
            double err = beta0 * beta.back() * std::abs(coeff[m - 1]);
            if (err > tol * dt / t && step > 1e-300) {
                step *= 0.5;
                continue;
            }
        }
        w = beta0 * (basis.leftCols(m) * coeff);
        remaining -= dt;
    }
    return w;
}

StateVector evolve(const StateVector& state, const LinearMap& h, double t) {
    require_same_layout(state.layout(), h.layout(), "evolve");
    if (!h.hermitian()) {
        throw NotHermitianError("evolve: generator is not hermitian");
    }
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument("evolve: time must be finite and >= 0");
    }
    const Vec& v = state.amplitudes();
    Vec out;
    if (h.is_diagonal()) {
        Vec diag = h.is_sparse() ? Vec(h.sparse_matrix().diagonal()) : Vec(h.dense_matrix().diagonal());
        out = (diag.real().cast<cplx>() * cplx(0.0, -t)).array().exp() * v.array();
    } else if (h.dim() <= kDenseExpLimit) {
        out = expm_hermitian(h.dense(), t) * v;
    } else {
        SpMat sp = h.is_sparse() ? h.sparse_matrix() : SpMat(h.dense_matrix().sparseView());
        out = krylov_expv(sp, v, t);
    }
    double n = out.norm();
    if (std::abs(n - 1.0) > kNormTol) {
        throw ConvergenceError("evolve: norm drift " + std::to_string(std::abs(n - 1.0)));
    }
    return StateVector::normalized(std::move(out), state.layout());
}

cplx inner(const StateVector& a, const StateVector& b) {
    require_same_layout(a.layout(), b.layout(), "inner");
    return a.amplitudes().dot(b.amplitudes());
}

double fidelity(const StateVector& a, const StateVector& b) {
    double f = std::norm(inner(a, b));
    return std::clamp(f, 0.0, 1.0);
}

namespace {

// Gathers amplitudes into a (dA x dB) matrix with rows over `rows`.
Mat reshape_bipartite(const StateVector& s, const std::vector<size_t>& rows) {
    const auto& lay = s.layout();
    std::vector<bool> in_a(lay.size(), false);
    for (size_t k : rows) {
        in_a[k] = true;
    }
    std::vector<size_t> a_sys;
    std::vector<size_t> b_sys;
    for (size_t k = 0; k < lay.size(); ++k) {
        (in_a[k] ? a_sys : b_sys).push_back(k);
    }
    size_t da = 1;
    size_t db = 1;
    for (size_t k : a_sys) {
        da *= static_cast<size_t>(lay.dim(k));
    }
    for (size_t k : b_sys) {
        db *= static_cast<size_t>(lay.dim(k));
    }
    Mat m(static_cast<Eigen::Index>(da), static_cast<Eigen::Index>(db));
    for (size_t idx = 0; idx < s.dim(); ++idx) {
        auto dg = digits_of(lay, idx);
        size_t r = 0;
        size_t c = 0;
        for (size_t k : a_sys) {
            r = r * static_cast<size_t>(lay.dim(k)) + static_cast<size_t>(dg[k]);
        }
        for (size_t k : b_sys) {
            c = c * static_cast<size_t>(lay.dim(k)) + static_cast<size_t>(dg[k]);
        }
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = s[idx];
    }
    return m;
}

}  // namespace

std::vector<double> schmidt_spectrum(const StateVector& state, const std::vector<size_t>& subsystems) {
    const size_t n = state.layout().size();
    std::set<size_t> uniq(subsystems.begin(), subsystems.end());
    if (uniq.empty() || uniq.size() != subsystems.size() || uniq.size() >= n || *uniq.rbegin() >= n) {
        throw DimensionError("schmidt_spectrum: bipartition must be a nonempty proper subset");
    }
    Mat m = reshape_bipartite(state, std::vector<size_t>(uniq.begin(), uniq.end()));
    Eigen::BDCSVD<Mat> svd(m);
    const auto& sv = svd.singularValues();
    return std::vector<double>(sv.data(), sv.data() + sv.size());
}

Vec apply_local(const Vec& v, const SubsystemLayout& layout, const Mat& op, const std::vector<size_t>& targets) {
    if (static_cast<size_t>(v.size()) != layout.total_dim()) {
        throw DimensionError("apply_local: vector length mismatch");
    }
    size_t local = 1;
    std::vector<bool> is_target(layout.size(), false);
    for (size_t t : targets) {
        if (t >= layout.size() || is_target[t]) {
            throw DimensionError("apply_local: invalid target list");
        }
        is_target[t] = true;
        local *= static_cast<size_t>(layout.dim(t));
    }
    if (static_cast<size_t>(op.rows()) != local || static_cast<size_t>(op.cols()) != local) {
        throw DimensionError("apply_local: operator size mismatch");
    }
    // offs[j]: flat offset of local basis index j.
    std::vector<size_t> offs(local);
    for (size_t j = 0; j < local; ++j) {
        size_t rem = j;
        size_t off = 0;
        for (size_t k = targets.size(); k-- > 0;) {
            auto d = static_cast<size_t>(layout.dim(targets[k]));
            off += (rem % d) * layout.stride(targets[k]);
            rem /= d;
        }
        offs[j] = off;
    }
    // Enumerate base indices with all target digits zero.
    std::vector<size_t> bases{0};
    for (size_t k = 0; k < layout.size(); ++k) {
        if (is_target[k]) {
            continue;
        }
        std::vector<size_t> next;
        next.reserve(bases.size() * static_cast<size_t>(layout.dim(k)));
        for (size_t b : bases) {
            for (int d = 0; d < layout.dim(k); ++d) {
                next.push_back(b + static_cast<size_t>(d) * layout.stride(k));
            }
        }
        bases.swap(next);
    }
    Vec out(v.size());
    Vec buf(static_cast<Eigen::Index>(local));
    for (size_t b : bases) {
        for (size_t j = 0; j < local; ++j) {
            buf[static_cast<Eigen::Index>(j)] = v[static_cast<Eigen::Index>(b + offs[j])];
        }
        Vec r = op * buf;
        for (size_t j = 0; j < local; ++j) {
            out[static_cast<Eigen::Index>(b + offs[j])] = r[static_cast<Eigen::Index>(j)];
        }
    }
    return out;
}

StateVector apply_local(const StateVector& s, const Mat& op, const std::vector<size_t>& targets) {
    return StateVector::normalized(apply_local(s.amplitudes(), s.layout(), op, targets), s.layout());
}

LinearMap embed(const Mat& op, const SubsystemLayout& layout, const std::vector<size_t>& targets) {
    if (op.rows() != op.cols()) {
        throw DimensionError("embed: operator must be square");
    }
    const size_t n = layout.total_dim();
    std::vector<Eigen::Triplet<cplx>> trip;
    // Column j of the full map is apply_local on basis vector j; build it
    // from the local matrix directly.
    size_t local = static_cast<size_t>(op.rows());
    for (size_t col = 0; col < n; ++col) {
        auto dg = digits_of(layout, col);
        size_t lc = 0;
        for (size_t t : targets) {
            lc = lc * static_cast<size_t>(layout.dim(t)) + static_cast<size_t>(dg[t]);
        }
        for (size_t lr = 0; lr < local; ++lr) {
            cplx val = op(static_cast<Eigen::Index>(lr), static_cast<Eigen::Index>(lc));
            if (val == cplx(0.0)) {
                continue;
            }
            auto rd = dg;
            size_t rem = lr;
            for (size_t k = targets.size(); k-- > 0;) {
                auto d = static_cast<size_t>(layout.dim(targets[k]));
                rd[targets[k]] = static_cast<int>(rem % d);
                rem /= d;
            }
            trip.emplace_back(static_cast<Eigen::Index>(index_of(layout, rd)), static_cast<Eigen::Index>(col), val);
        }
    }
    SpMat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.setFromTriplets(trip.begin(), trip.end());
    return LinearMap(std::move(m), layout);
}

Projection partial_project(const StateVector& state, size_t subsystem, const LinearMap& projector) {
    const auto& lay = state.layout();
    if (subsystem >= lay.size()) {
        throw DimensionError("partial_project: subsystem out of range");
    }
    if (projector.layout().size() != 1 || projector.layout().dim(0) != lay.dim(subsystem)) {
        throw DimensionError("partial_project: projector dimension mismatch");
    }
    Mat p = projector.dense();
    if ((p * p - p).cwiseAbs().maxCoeff() > 1e-12) {
        throw std::invalid_argument("partial_project: operator is not idempotent");
    }
    Vec out = apply_local(state.amplitudes(), lay, p, {subsystem});
    double prob = out.squaredNorm();
    if (prob < 1e-15) {
        throw ZeroProbabilityError("partial_project: outcome has zero probability");
    }
    prob = std::min(prob, 1.0);
    out /= std::sqrt(out.squaredNorm());
    return {StateVector(std::move(out), lay), prob};
}

StateVector permute(const StateVector& s, const std::vector<size_t>& order) {
    const auto& lay = s.layout();
    SubsystemLayout out_lay = lay.permuted(order);
    Vec out(static_cast<Eigen::Index>(s.dim()));
    for (size_t idx = 0; idx < s.dim(); ++idx) {
        auto dg = digits_of(lay, idx);
        std::vector<int> nd(order.size());
        for (size_t k = 0; k < order.size(); ++k) {
            nd[k] = dg[order[k]];
        }
        out[static_cast<Eigen::Index>(index_of(out_lay, nd))] = s[idx];
    }
    return StateVector(std::move(out), std::move(out_lay));
}

StateVector remove_subsystem(const StateVector& s, size_t i, const Vec& local, double tol) {
    const auto& lay = s.layout();
    if (i >= lay.size() || local.size() != lay.dim(i)) {
        throw DimensionError("remove_subsystem: bad subsystem or local state");
    }
    SubsystemLayout out_lay = lay.without(i);
    Vec out = Vec::Zero(static_cast<Eigen::Index>(out_lay.total_dim()));
    const size_t st = lay.stride(i);
    const auto d = static_cast<size_t>(lay.dim(i));
    for (size_t idx = 0; idx < s.dim(); ++idx) {
        size_t digit = (idx / st) % d;
        size_t hi = idx / (st * d);
        size_t lo = idx % st;
        size_t j = hi * st + lo;
        out[static_cast<Eigen::Index>(j)] += std::conj(local[static_cast<Eigen::Index>(digit)]) * s[idx];
    }
    double n2 = out.squaredNorm();
    if (n2 < 1.0 - tol) {
        throw std::invalid_argument("remove_subsystem: subsystem is not in the given local state");
    }
    return StateVector::normalized(std::move(out), std::move(out_lay));
}

StateVector insert_subsystem(const StateVector& s, size_t pos, const Vec& local, const std::string& label) {
    const auto& lay = s.layout();
    if (pos > lay.size()) {
        throw DimensionError("insert_subsystem: position out of range");
    }
    auto dims = lay.dims();
    auto labels = lay.labels();
    dims.insert(dims.begin() + static_cast<long>(pos), static_cast<int>(local.size()));
    labels.insert(labels.begin() + static_cast<long>(pos), label);
    SubsystemLayout out_lay(std::move(dims), std::move(labels));
    const size_t st = pos < lay.size() ? lay.stride(pos) * static_cast<size_t>(lay.dim(pos)) : 1;
    const auto d = static_cast<size_t>(local.size());
    Vec out(static_cast<Eigen::Index>(out_lay.total_dim()));
    for (size_t idx = 0; idx < s.dim(); ++idx) {
        size_t hi = idx / st;
        size_t lo = idx % st;
        for (size_t k = 0; k < d; ++k) {
            out[static_cast<Eigen::Index>((hi * d + k) * st + lo)] = s[idx] * local[static_cast<Eigen::Index>(k)];
        }
    }
    return StateVector::normalized(std::move(out), std::move(out_lay));
}

Mat complete_orthonormal(const Mat& leading) {
    const Eigen::Index d = leading.rows();
    const Eigen::Index k0 = leading.cols();
    if (k0 > d || unitarity_defect(leading) > 1e-9) {
        throw std::invalid_argument("complete_orthonormal: leading columns are not orthonormal");
    }
    Mat q(d, d);
    q.leftCols(k0) = leading;
    Eigen::Index filled = k0;
    for (Eigen::Index e = 0; e < d && filled < d; ++e) {
        Vec v = Vec::Zero(d);
        v[e] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index c = 0; c < filled; ++c) {
                v -= q.col(c).dot(v) * q.col(c);
            }
        }
        double n = v.norm();
        // Skip candidates already (nearly) in the span.
        if (n > 1e-6) {
            q.col(filled++) = v / n;
        }
    }
    if (filled != d) {
        throw ConvergenceError("complete_orthonormal: basis completion failed");
    }
    return q;
}

}  // namespace ep
