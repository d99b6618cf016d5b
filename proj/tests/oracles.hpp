#pragma once

// Reference computations that share no code path with the library.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline const double kPi = std::acos(-1.0);

// exp(-i H t) by Pade scaling and squaring.
inline Mat expm(const Mat& h, double t) {
    Mat a = cplx(0.0, -t) * h;
    return a.exp();
}

inline Mat kron(const Mat& a, const Mat& b) { return Eigen::kroneckerProduct(a, b).eval(); }

inline Mat identity(Eigen::Index d) { return Mat::Identity(d, d); }

inline Mat px() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline Mat py() {
    Mat m(2, 2);
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}
inline Mat pz() {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

// Single-qubit operator `op` on qubit q of n (qubit 0 most significant).
inline Mat on_qubit(const Mat& op, size_t q, size_t n) {
    Mat out = Mat::Identity(1, 1);
    for (size_t i = 0; i < n; ++i) {
        out = kron(out, i == q ? op : identity(2));
    }
    return out;
}

inline Mat two_qubit(const Mat& a, size_t qa, const Mat& b, size_t qb, size_t n) {
    return on_qubit(a, qa, n) * on_qubit(b, qb, n);
}

// |<C+_alpha | C+_{i alpha}>| from coherent-state overlaps:
// 2 e^{-x} |cos x| / (1 + e^{-2x}), x = |alpha|^2.
inline double cat_overlap(double abs_alpha) {
    const double x = abs_alpha * abs_alpha;
    return 2.0 * std::exp(-x) * std::abs(std::cos(x)) / (1.0 + std::exp(-2.0 * x));
}

// Poisson law for the number of photons lost from a coherent state of mean
// n0 after kappa t: mean n0 (1 - e^{-kappa t}).
inline double expected_jumps(double n0, double kappa_t) { return n0 * (1.0 - std::exp(-kappa_t)); }

// Fixed-step RK4 on the rotating-frame amplitude equations in unweighted
// variables g1(k), g2(k), g3 with phases exp(i (k - w1) t) evaluated
// directly. Returns P(t_end) = sum_k w_k |g2|^2.
inline double swap_rk4(double gamma1, double gamma2, double d, double k_lo, double k_hi, int n_k, double t_end,
                       double dt_max) {
    const double dk = (k_hi - k_lo) / (n_k - 1);
    std::vector<double> u(n_k), w(n_k, dk);
    w.front() = w.back() = dk / 2;
    const double center = 0.5 * (k_lo + k_hi);
    for (int i = 0; i < n_k; ++i) {
        u[i] = k_lo + dk * i - center;
    }
    const double s1 = std::sqrt(gamma1 / (2 * kPi));
    const double s2 = std::sqrt(gamma2 / (2 * kPi));
    const size_t len = 2 * static_cast<size_t>(n_k) + 1;
    std::vector<cplx> y(len, 0.0);
    const double amp = std::pow(2.0 / (kPi * d * d), 0.25);
    for (int i = 0; i < n_k; ++i) {
        y[i] = amp * std::exp(-u[i] * u[i] / (d * d));
    }
    auto rhs = [&](double t, const std::vector<cplx>& s, std::vector<cplx>& ds) {
        const cplx g3 = s[2 * n_k];
        cplx acc = 0.0;
        for (int i = 0; i < n_k; ++i) {
            const cplx z = std::exp(cplx(0.0, u[i] * t));
            ds[i] = -s1 * g3 * z;
            ds[n_k + i] = -s2 * g3 * z;
            acc += w[i] * std::conj(z) * (s1 * s[i] + s2 * s[n_k + i]);
        }
        ds[2 * n_k] = acc;
    };
    const int steps = static_cast<int>(std::ceil(t_end / dt_max));
    const double h = t_end / steps;
    std::vector<cplx> k1(len), k2(len), k3(len), k4(len), tmp(len);
    double t = 0.0;
    for (int s = 0; s < steps; ++s) {
        rhs(t, y, k1);
        for (size_t i = 0; i < len; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(t + 0.5 * h, tmp, k2);
        for (size_t i = 0; i < len; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(t + 0.5 * h, tmp, k3);
        for (size_t i = 0; i < len; ++i) tmp[i] = y[i] + h * k3[i];
        rhs(t + h, tmp, k4);
        for (size_t i = 0; i < len; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t += h;
    }
    double p = 0.0;
    for (int i = 0; i < n_k; ++i) {
        p += w[i] * std::norm(y[n_k + i]);
    }
    return p;
}

}  // namespace oracle
