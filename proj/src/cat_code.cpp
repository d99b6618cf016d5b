#include "ep/cat_code.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>

namespace ep {

int CavitySpec::min_n_max(double abs_alpha) {
    return static_cast<int>(std::ceil(abs_alpha * abs_alpha + 8.0 * abs_alpha + 10.0));
}

CavitySpec CavitySpec::with_alpha(cplx alpha, double kappa) {
    return CavitySpec{alpha, min_n_max(std::abs(alpha)), kappa};
}

void CavitySpec::validate() const {
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
        throw std::invalid_argument("cavity: alpha must be finite");
    }
    if (n_max < min_n_max(std::abs(alpha))) {
        throw TruncationError("cavity: n_max=" + std::to_string(n_max) + " is below the required " +
                              std::to_string(min_n_max(std::abs(alpha))) + " for |alpha|=" +
                              std::to_string(std::abs(alpha)));
    }
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
        throw std::invalid_argument("cavity: kappa must be >= 0");
    }
}

Vec coherent_amplitudes(cplx alpha, int n_max) {
    if (n_max < CavitySpec::min_n_max(std::abs(alpha))) {
        throw TruncationError("coherent: n_max too small for |alpha|=" + std::to_string(std::abs(alpha)));
    }
    Vec c(n_max + 1);
    c[0] = std::exp(-std::norm(alpha) / 2.0);
    for (int n = 1; n <= n_max; ++n) {
        c[n] = c[n - 1] * alpha / std::sqrt(static_cast<double>(n));
    }
    double defect = 1.0 - c.squaredNorm();
    if (defect > 1e-10) {
        throw TruncationError("coherent: truncation tail " + std::to_string(defect) + " exceeds 1e-10");
    }
    return c / c.norm();
}

StateVector coherent(cplx alpha, int n_max) {
    return StateVector(coherent_amplitudes(alpha, n_max), SubsystemLayout({n_max + 1}));
}

Vec cat_amplitudes(cplx alpha, int sign, int n_max) {
    if (sign != 1 && sign != -1) {
        throw std::invalid_argument("cat: sign must be +1 or -1");
    }
    if (sign == -1 && std::abs(alpha) == 0.0) {
        throw ZeroProbabilityError("cat: odd cat with alpha=0 is the null vector");
    }
    Vec v = coherent_amplitudes(alpha, n_max) + static_cast<double>(sign) * coherent_amplitudes(-alpha, n_max);
    double n = v.norm();
    if (!(n > 1e-300)) {
        throw ZeroProbabilityError("cat: null superposition");
    }
    return v / n;
}

StateVector cat(cplx alpha, int sign, int n_max) {
    return StateVector(cat_amplitudes(alpha, sign, n_max), SubsystemLayout({n_max + 1}));
}

Mat lowering(int n_max) {
    Mat a = Mat::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return a;
}

Mat number_operator(int n_max) {
    Mat m = Mat::Zero(n_max + 1, n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        m(n, n) = static_cast<double>(n);
    }
    return m;
}

Mat parity_projector(int n_max, int sign) {
    Mat p = Mat::Zero(n_max + 1, n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        bool even = n % 2 == 0;
        if ((sign > 0) == even) {
            p(n, n) = 1.0;
        }
    }
    return p;
}

double mean_photons(const Vec& fock) {
    double s = 0.0;
    for (Eigen::Index n = 0; n < fock.size(); ++n) {
        s += static_cast<double>(n) * std::norm(fock[n]);
    }
    return s / fock.squaredNorm();
}

StateVector dispersive_rotation(const StateVector& state, const DispersiveCoupling& coupling, double t) {
    const auto& lay = state.layout();
    if (lay.size() != 2 || lay.dim(0) != 2) {
        throw DimensionError("dispersive_rotation: layout must be [qubit, cavity]");
    }
    if (coupling.delta == 0.0 || !std::isfinite(coupling.delta)) {
        throw std::invalid_argument("dispersive_rotation: detuning must be nonzero");
    }
    const int nc = lay.dim(1);
    Mat proj0 = Mat::Zero(2, 2);
    proj0(0, 0) = 1.0;
    Mat h = (coupling.g * coupling.g / coupling.delta) *
            Mat(Eigen::kroneckerProduct(proj0, number_operator(nc - 1)));
    return evolve(state, LinearMap(SpMat(h.sparseView()), lay), t);
}

SubsystemLayout encode_layout(int n_max) {
    return SubsystemLayout({2, 2, n_max + 1}, {"dot_a", "dot_b", "cavity"});
}

Mat encode_unitary(cplx alpha, int n_max) {
    const Eigen::Index nc = n_max + 1;
    const Eigen::Index d = 4 * nc;
    Vec cp = cat_amplitudes(alpha, 1, n_max);
    Vec ci = cat_amplitudes(cplx(0.0, 1.0) * alpha, 1, n_max);
    // Targets |0,0,C+_alpha> and |0,1,C+_{i alpha}>; the dot label makes
    // them exactly orthogonal.
    Mat targets = Mat::Zero(d, 2);
    targets.block(0, 0, nc, 1) = cp;
    targets.block(nc, 1, nc, 1) = ci;
    Mat out_basis = complete_orthonormal(targets);
    // Input basis: |0,0,0>, |1,1,0>, then the remaining standard vectors.
    const Eigen::Index in_a = 0;
    const Eigen::Index in_b = 3 * nc;
    Mat u = Mat::Zero(d, d);
    u.col(in_a) = out_basis.col(0);
    u.col(in_b) = out_basis.col(1);
    Eigen::Index next = 2;
    for (Eigen::Index k = 0; k < d; ++k) {
        if (k == in_a || k == in_b) {
            continue;
        }
        u.col(k) = out_basis.col(next++);
    }
    return u;
}

StateVector encode(const StateVector& state, const CavitySpec& cavity) {
    cavity.validate();
    const auto& lay = state.layout();
    if (lay.dims() != encode_layout(cavity.n_max).dims()) {
        throw DimensionError("encode: layout must be [2, 2, n_max+1]");
    }
    const Eigen::Index nc = cavity.dim();
    double code_weight = std::norm(state[0]) + std::norm(state[static_cast<size_t>(3 * nc)]);
    if (code_weight < 1.0 - 1e-6) {
        throw std::invalid_argument("encode: input is not in span{|00>,|11>} (x) vacuum");
    }
    Mat u = encode_unitary(cavity.alpha, cavity.n_max);
    return StateVector::normalized(u * state.amplitudes(), lay);
}

StateVector decode(const StateVector& state, const CavitySpec& cavity) {
    cavity.validate();
    const auto& lay = state.layout();
    if (lay.dims() != encode_layout(cavity.n_max).dims()) {
        throw DimensionError("decode: layout must be [2, 2, n_max+1]");
    }
    Mat u = encode_unitary(cavity.alpha, cavity.n_max);
    return StateVector::normalized(u.adjoint() * state.amplitudes(), lay);
}

}  // namespace ep
