#include "ep/photon_swap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "ep/parallel.hpp"
#include "ep/spin_register.hpp"

namespace ep {

namespace {

const cplx kI(0.0, 1.0);
using OdeState = std::vector<cplx>;

// Discretized problem in weighted variables x_k = sqrt(w_k) g(k).
struct Discrete {
    Eigen::VectorXd u;
    Eigen::VectorXd c1;
    Eigen::VectorXd c2;
    Eigen::VectorXd sw;
    size_t n = 0;
};

Discrete discretize(const ThreeLevelDot& dot, const SpectralGrid& grid) {
    Discrete p;
    p.n = grid.n_k;
    Eigen::VectorXd w = grid.weights();
    p.sw = w.cwiseSqrt();
    p.u = grid.k().array() - dot.w1;
    p.c1 = (w * (dot.gamma1 / (2.0 * kPi))).cwiseSqrt();
    p.c2 = (w * (dot.gamma2 / (2.0 * kPi))).cwiseSqrt();
    return p;
}

// z_k = exp(i t u_k) on a uniform grid, by recurrence re-anchored every
// 256 points.
void phasors(const Discrete& p, double t, std::vector<cplx>& z) {
    z.resize(p.n);
    const double du = p.n > 1 ? p.u[1] - p.u[0] : 0.0;
    const cplx step = std::exp(kI * (t * du));
    for (size_t i = 0; i < p.n; ++i) {
        if (i % 256 == 0) {
            z[i] = std::exp(kI * (t * p.u[static_cast<Eigen::Index>(i)]));
        } else {
            z[i] = z[i - 1] * step;
        }
    }
}

struct RotatingRhs {
    const Discrete* p;
    mutable std::vector<cplx> z;
    void operator()(const OdeState& s, OdeState& ds, double t) const {
        const size_t n = p->n;
        phasors(*p, t, z);
        const cplx g3 = s[2 * n];
        cplx acc = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double a1 = p->c1[ii];
            const double a2 = p->c2[ii];
            ds[i] = -a1 * g3 * z[i];
            ds[n + i] = -a2 * g3 * z[i];
            acc += std::conj(z[i]) * (a1 * s[i] + a2 * s[n + i]);
        }
        ds[2 * n] = acc;
    }
};

struct LabRhs {
    const Discrete* p;
    void operator()(const OdeState& s, OdeState& ds, double /*t*/) const {
        const size_t n = p->n;
        const cplx g3 = s[2 * n];
        cplx acc = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double a1 = p->c1[ii];
            const double a2 = p->c2[ii];
            ds[i] = -kI * p->u[ii] * s[i] - a1 * g3;
            ds[n + i] = -kI * p->u[ii] * s[n + i] - a2 * g3;
            acc += a1 * s[i] + a2 * s[n + i];
        }
        ds[2 * n] = acc;
    }
};

// exp(-i H dt) for the lab-frame generator dpsi/dt = -i H psi, H the hermitian
// arrowhead matrix, by Chebyshev expansion with Bessel coefficients.
class ChebyshevStep {
  public:
    ChebyshevStep(const Discrete& p, double dt) : p_(p) {
        const double cnorm = std::sqrt(p.c1.squaredNorm() + p.c2.squaredNorm());
        const double lo = std::min(p.u.minCoeff(), 0.0) - cnorm;
        const double hi = std::max(p.u.maxCoeff(), 0.0) + cnorm;
        center_ = 0.5 * (hi + lo);
        half_ = 0.5 * (hi - lo) * 1.01 + 1e-300;
        const double x = half_ * dt;
        for (int k = 0;; ++k) {
            double j = std::cyl_bessel_j(static_cast<double>(k), x);
            coeff_.push_back((k == 0 ? 1.0 : 2.0) * std::pow(-kI, k) * j);
            if (k > x + 10 && std::abs(j) < 1e-18) {
                break;
            }
            if (k > 100000) {
                throw ConvergenceError("chebyshev: expansion did not converge");
            }
        }
        global_ = std::exp(-kI * center_ * dt);
    }

    Vec apply(const Vec& v) const {
        const size_t n = p_.n;
        const size_t len = 2 * n + 1;
        Vec t0 = v;
        Vec t1(static_cast<Eigen::Index>(len));
        Vec acc(static_cast<Eigen::Index>(len));
        // t1 = H' t0
        recur(t0, t0, t1, 1.0, false);
        for (size_t i = 0; i < len; ++i) {
            acc[static_cast<Eigen::Index>(i)] = coeff_[0] * t0[static_cast<Eigen::Index>(i)] +
                                                coeff_[1] * t1[static_cast<Eigen::Index>(i)];
        }
        for (size_t k = 2; k < coeff_.size(); ++k) {
            // t0 <- 2 H' t1 - t0, then swap roles.
            recur(t1, t0, t0, 2.0, true);
            const cplx ck = coeff_[k];
            cplx* a = acc.data();
            const cplx* t = t0.data();
            for (size_t i = 0; i < len; ++i) {
                a[i] += ck * t[i];
            }
            t0.swap(t1);
        }
        return global_ * acc;
    }

  private:
    // out = scale * H' in - (subtract ? prev : 0); out may alias prev.
    void recur(const Vec& in, const Vec& prev, Vec& out, double scale, bool subtract) const {
        const size_t n = p_.n;
        const double* u = p_.u.data();
        const double* c1 = p_.c1.data();
        const double* c2 = p_.c2.data();
        const cplx* x = in.data();
        const cplx* y = in.data() + n;
        const cplx g = in[static_cast<Eigen::Index>(2 * n)];
        const double s = scale / half_;
        cplx sum = 0.0;
        cplx* ox = out.data();
        cplx* oy = out.data() + n;
        const cplx* px = prev.data();
        const cplx* py = prev.data() + n;
        const cplx ig = kI * g;
        for (size_t i = 0; i < n; ++i) {
            const cplx xi = x[i];
            const cplx yi = y[i];
            sum += c1[i] * xi + c2[i] * yi;
            cplx hx = (u[i] - center_) * xi - ig * c1[i];
            cplx hy = (u[i] - center_) * yi - ig * c2[i];
            ox[i] = s * hx - (subtract ? px[i] : cplx(0.0));
            oy[i] = s * hy - (subtract ? py[i] : cplx(0.0));
        }
        const cplx hg = kI * sum - center_ * g;
        const cplx pg = subtract ? prev[static_cast<Eigen::Index>(2 * n)] : cplx(0.0);
        out[static_cast<Eigen::Index>(2 * n)] = s * hg - pg;
    }

    const Discrete& p_;
    double center_ = 0.0;
    double half_ = 1.0;
    cplx global_ = 1.0;
    std::vector<cplx> coeff_;
};

double ode_norm(const OdeState& s) {
    double acc = 0.0;
    for (const auto& v : s) {
        acc += std::norm(v);
    }
    return acc;
}

double ode_p(const OdeState& s, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        acc += std::norm(s[n + i]);
    }
    return acc;
}

size_t next_pow2(size_t v) {
    size_t p = 1;
    while (p < v) {
        p <<= 1;
    }
    return p;
}

}  // namespace

void ThreeLevelDot::validate() const {
    if (!(gamma1 >= 0.0) || !(gamma2 >= 0.0) || !std::isfinite(gamma1) || !std::isfinite(gamma2)) {
        throw std::invalid_argument("dot: decay rates must be finite and >= 0");
    }
    if (!(w1 > w2) || !(w2 >= 0.0) || !std::isfinite(w1)) {
        throw std::invalid_argument("dot: need w1 > w2 >= 0");
    }
}

void GaussianMode::validate() const {
    if (!(d > 0.0) || !std::isfinite(d) || !std::isfinite(center)) {
        throw std::invalid_argument("mode: bandwidth must be positive");
    }
    if (!(delay >= 0.0) || !std::isfinite(delay)) {
        throw std::invalid_argument("mode: delay must be finite and >= 0");
    }
}

SpectralGrid SpectralGrid::centered(double center, double half_width, size_t n_k) {
    SpectralGrid g{center - half_width, center + half_width, n_k};
    g.validate();
    return g;
}

SpectralGrid SpectralGrid::default_for(const ThreeLevelDot& dot, const GaussianMode& mode) {
    double hw = std::max(6.0 * mode.d, 20.0 * (dot.gamma1 + dot.gamma2));
    return centered(dot.w1, hw, 1024);
}

void SpectralGrid::validate() const {
    if (!(k_min < k_max) || !std::isfinite(k_min) || !std::isfinite(k_max)) {
        throw std::invalid_argument("grid: need k_min < k_max");
    }
    if (n_k < 64) {
        throw std::invalid_argument("grid: need at least 64 points");
    }
}

Eigen::VectorXd SpectralGrid::k() const {
    return Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(n_k), k_min, k_max);
}

Eigen::VectorXd SpectralGrid::weights() const {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_k), dk());
    w[0] *= 0.5;
    w[w.size() - 1] *= 0.5;
    return w;
}

Vec gaussian_mode(const GaussianMode& mode, const SpectralGrid& grid) {
    mode.validate();
    grid.validate();
    const double reach = 6.0 * mode.d * (1.0 - 1e-12);
    if (grid.k_min > mode.center - reach || grid.k_max < mode.center + reach) {
        throw std::invalid_argument("gaussian_mode: grid too narrow, must span +-6d around the center");
    }
    const double peak = std::pow(2.0 / (kPi * mode.d * mode.d), 0.25);
    Eigen::VectorXd k = grid.k();
    Vec f(k.size());
    for (Eigen::Index i = 0; i < k.size(); ++i) {
        double x = (k[i] - mode.center) / mode.d;
        f[i] = peak * std::exp(-x * x) * std::exp(kI * ((k[i] - mode.center) * mode.delay));
    }
    return f;
}

double AmplitudeState::norm(const Eigen::VectorXd& weights) const {
    double s = std::norm(g3);
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        s += weights[i] * (std::norm(g1[i]) + std::norm(g2[i]));
    }
    return s;
}

double resolution_limit(const ThreeLevelDot& dot, const GaussianMode& mode, const SpectralGrid& grid) {
    double umax = std::max(std::abs(grid.k_min - dot.w1), std::abs(grid.k_max - dot.w1));
    double fastest = std::max({dot.gamma1 + dot.gamma2, mode.d, umax});
    return 2.0 * kPi / (20.0 * fastest);
}

Trajectory integrate_dynamics(const ThreeLevelDot& dot, const GaussianMode& mode, const SpectralGrid& grid,
                              double t_end, const DynamicsOptions& options) {
    dot.validate();
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw std::invalid_argument("integrate_dynamics: t_end must be positive");
    }
    const Vec f = gaussian_mode(mode, grid);
    const double limit = resolution_limit(dot, mode, grid);
    if (options.dt > limit * (1.0 + 1e-12)) {
        throw StepSizeError("integrate_dynamics: dt=" + std::to_string(options.dt) +
                            " exceeds the resolution limit " + std::to_string(limit));
    }
    const double max_dt = options.dt > 0.0 ? options.dt : limit;
    // A uniform grid revives at 2 pi / dk; the run must end before that.
    if (t_end >= 2.0 * kPi / grid.dk()) {
        throw GridAliasingError("integrate_dynamics: t_end reaches the grid revival time " +
                                std::to_string(2.0 * kPi / grid.dk()));
    }
    const double interval = options.sample_interval > 0.0 ? options.sample_interval : t_end / 200.0;
    const auto n_samples = static_cast<size_t>(std::ceil(t_end / interval - 1e-9));
    std::vector<double> times(n_samples + 1);
    for (size_t i = 0; i <= n_samples; ++i) {
        times[i] = std::min(t_end, static_cast<double>(i) * interval);
    }

    const Discrete p = discretize(dot, grid);
    const size_t n = p.n;
    const Eigen::VectorXd w = grid.weights();
    Trajectory tr;
    tr.grid = grid;
    const bool lab = options.frame == Frame::Lab || options.propagator == Propagator::Chebyshev;

    auto record = [&](const OdeState& s, double t) {
        double nrm = ode_norm(s);
        tr.times.push_back(t);
        tr.p.push_back(ode_p(s, n));
        tr.norm.push_back(nrm);
        tr.max_norm_defect = std::max(tr.max_norm_defect, std::abs(nrm - 1.0));
        if (options.keep_states) {
            AmplitudeState a{Vec(static_cast<Eigen::Index>(n)), Vec(static_cast<Eigen::Index>(n)), s[2 * n], t};
            for (size_t i = 0; i < n; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                cplx back = lab ? std::exp(kI * t * p.u[ii]) : cplx(1.0);
                a.g1[ii] = s[i] * back / p.sw[ii];
                a.g2[ii] = s[n + i] * back / p.sw[ii];
            }
            tr.states.push_back(std::move(a));
        }
    };

    OdeState s0(2 * n + 1, cplx(0.0));
    for (size_t i = 0; i < n; ++i) {
        s0[i] = p.sw[static_cast<Eigen::Index>(i)] * f[static_cast<Eigen::Index>(i)];
    }

    if (options.propagator == Propagator::Chebyshev) {
        Vec v = Eigen::Map<const Vec>(s0.data(), static_cast<Eigen::Index>(s0.size()));
        record(s0, 0.0);
        ChebyshevStep full(p, interval);
        OdeState buf(s0.size());
        for (size_t i = 1; i <= n_samples; ++i) {
            double span = times[i] - times[i - 1];
            if (std::abs(span - interval) <= 1e-12 * interval) {
                v = full.apply(v);
            } else {
                v = ChebyshevStep(p, span).apply(v);
            }
            std::copy(v.data(), v.data() + v.size(), buf.begin());
            record(buf, times[i]);
        }
    } else {
        namespace odeint = boost::numeric::odeint;
        auto stepper = odeint::make_dense_output(options.atol, options.rtol, max_dt,
                                                 odeint::runge_kutta_dopri5<OdeState>());
        auto obs = [&](const OdeState& s, double t) { record(s, t); };
        OdeState s = s0;
        if (lab) {
            odeint::integrate_times(stepper, LabRhs{&p}, s, times.begin(), times.end(), max_dt, obs);
        } else {
            odeint::integrate_times(stepper, RotatingRhs{&p, {}}, s, times.begin(), times.end(), max_dt, obs);
        }
    }
    if (tr.max_norm_defect > 1e-4) {
        throw GridAliasingError("integrate_dynamics: norm drift " + std::to_string(tr.max_norm_defect) +
                                " exceeds 1e-4");
    }
    (void)w;
    return tr;
}

std::vector<double> swap_probability(const Trajectory& trajectory) {
    std::vector<double> out = trajectory.p;
    for (auto& v : out) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

ClosedForm printed_closed_form(const ThreeLevelDot& dot, const GaussianMode& mode, const SpectralGrid& grid, double t) {
    dot.validate();
    mode.validate();
    grid.validate();
    if (!(t >= 0.0)) {
        throw std::invalid_argument("printed_closed_form: t must be >= 0");
    }
    using boost::math::quadrature::gauss_kronrod;
    const double a = mode.d * mode.d / 4.0;
    const double b = (dot.gamma1 + dot.gamma2) / 2.0;
    auto kernel = [a, b](double s) { return std::exp(-a * s * s + b * s); };
    auto inner = [&](double tp) {
        if (tp <= 0.0) {
            return 0.0;
        }
        return gauss_kronrod<double, 61>::integrate(kernel, 0.0, tp, 15, 1e-12);
    };
    double p = 0.0;
    double dbl = 0.0;
    if (t > 0.0) {
        auto outer_p = [&](double tp) {
            double v = inner(tp);
            return v * v;
        };
        p = dot.gamma1 * dot.gamma2 * mode.d / std::sqrt(2.0 * kPi) *
            gauss_kronrod<double, 61>::integrate(outer_p, 0.0, t, 15, 1e-12);
        dbl = gauss_kronrod<double, 61>::integrate(inner, 0.0, t, 15, 1e-12);
    }
    // The printed amplitude carries exp(-i t delta'_k) with the outer time;
    // on the shifted grid delta'_k = -(k - w1).
    const double pref = -std::sqrt(dot.gamma1 * dot.gamma2 * mode.d) / std::pow(2.0 * kPi, 0.75);
    Eigen::VectorXd k = grid.k();
    Vec g2(k.size());
    for (Eigen::Index i = 0; i < k.size(); ++i) {
        g2[i] = pref * dbl * std::exp(kI * t * (k[i] - dot.w1));
    }
    return {g2, p};
}

nlohmann::json closed_form_report(const ThreeLevelDot& dot, const GaussianMode& mode, const SpectralGrid& grid,
                                  double t, double p_ode) {
    ClosedForm cf = printed_closed_form(dot, mode, grid, t);
    nlohmann::json params = {{"w1", dot.w1},     {"w2", dot.w2},          {"gamma1", dot.gamma1},
                             {"gamma2", dot.gamma2}, {"d", mode.d},       {"t", t},
                             {"n_k", grid.n_k},  {"k_min", grid.k_min},   {"k_max", grid.k_max}};
    nlohmann::json out = {{"params", params}, {"p_ode", p_ode}};
    if (std::isfinite(cf.p)) {
        out["p_closed"] = cf.p;
        out["abs_diff"] = std::abs(cf.p - p_ode);
    } else {
        out["p_closed"] = nullptr;
        out["abs_diff"] = nullptr;
        out["note"] = "closed-form value overflowed double precision";
    }
    return out;
}

std::vector<double> sweep_axis(double lo, double hi, size_t points, bool log_spacing) {
    if (!(lo > 0.0) || !(hi >= lo) || points == 0) {
        throw std::invalid_argument("sweep: ranges must be positive with at least one point");
    }
    std::vector<double> out(points);
    for (size_t i = 0; i < points; ++i) {
        double f = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
        out[i] = log_spacing ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f;
    }
    return out;
}

SweepRow sweep_point(double d, double gamma, const SweepSpec& spec) {
    ThreeLevelDot dot{spec.w1, spec.w2, gamma, gamma};
    const double delay = spec.delay_pulse ? 4.0 / d : 0.0;
    GaussianMode mode{d, spec.w1, delay};
    SweepRow row{d, gamma, 0.0, false, 0.0, 0, 0.0};
    double t_end = delay + std::max(4.0 / d, 10.0 / (2.0 * gamma));
    for (int ext = 0; ext <= spec.max_extensions; ++ext) {
        const double hw = std::max(6.0 * d, 40.0 * gamma);
        const double dk = std::min({d / 2.0, gamma / 2.0, kPi / t_end});
        const size_t n_k = std::max(spec.min_n_k, next_pow2(static_cast<size_t>(std::ceil(2.0 * hw / dk)) + 1));
        SpectralGrid grid = SpectralGrid::centered(spec.w1, hw, n_k);
        DynamicsOptions opt;
        opt.frame = Frame::Lab;
        opt.propagator = Propagator::Chebyshev;
        Trajectory tr = integrate_dynamics(dot, mode, grid, t_end, opt);
        auto p = swap_probability(tr);
        const double p_end = p.back();
        const double p_90 = p[p.size() * 9 / 10];
        row.p_longtime = p_end;
        row.t_end = t_end;
        row.n_k = n_k;
        row.norm_defect = tr.max_norm_defect;
        if (std::abs(p_end - p_90) <= spec.plateau_tol) {
            row.converged = true;
            break;
        }
        t_end *= 1.5;
    }
    return row;
}

std::vector<SweepRow> sweep_probability_surface(const SweepSpec& spec, size_t workers) {
    auto ds = sweep_axis(spec.d_min, spec.d_max, spec.d_points, spec.log_spacing);
    auto gs = sweep_axis(spec.gamma_min, spec.gamma_max, spec.gamma_points, spec.log_spacing);
    const size_t total = ds.size() * gs.size();
    return parallel_map<SweepRow>(total, workers, [&](size_t idx) {
        return sweep_point(ds[idx / gs.size()], gs[idx % gs.size()], spec);
    });
}

SwapResult register_swap(const StateVector& reg, const std::vector<double>& p_success, RailEncoding encoding) {
    const auto& lay = reg.layout();
    const size_t n = lay.size();
    if (n == 0 || std::any_of(lay.dims().begin(), lay.dims().end(), [](int d) { return d != 2; })) {
        throw DimensionError("register_swap: register must consist of qubit dots");
    }
    if (p_success.size() != n) {
        throw std::invalid_argument("register_swap: one success probability per dot required");
    }
    double herald = 1.0;
    for (double p : p_success) {
        if (!(p > 0.0) || p > 1.0) {
            throw std::invalid_argument("register_swap: success probabilities must lie in (0, 1]");
        }
        herald *= p;
    }
    if (n >= 2 && !is_ghz_class(reg, 1e-6)) {
        throw std::invalid_argument("register_swap: register is not GHZ-class");
    }
    if (encoding == RailEncoding::Paired && n % 2 != 0) {
        throw std::invalid_argument("register_swap: paired rails need an even number of dots");
    }
    const size_t rails = encoding == RailEncoding::Frequency ? 2 * n : n;
    std::vector<std::string> labels;
    for (size_t i = 0; i < n; ++i) {
        if (encoding == RailEncoding::Frequency) {
            labels.push_back("dot" + std::to_string(i) + "_emit");
            labels.push_back("dot" + std::to_string(i) + "_pass");
        } else {
            labels.push_back("rail" + std::to_string(i));
        }
    }
    SubsystemLayout out_lay(std::vector<int>(rails, 2), labels);
    Vec out = Vec::Zero(static_cast<Eigen::Index>(out_lay.total_dim()));
    for (size_t x = 0; x < reg.dim(); ++x) {
        if (reg[x] == cplx(0.0)) {
            continue;
        }
        size_t idx = 0;
        for (size_t i = 0; i < n; ++i) {
            const size_t bit = (x >> (n - 1 - i)) & 1U;
            if (encoding == RailEncoding::Frequency) {
                // |0> emits into the (w1 - w2) rail, |1> passes the w1 photon.
                idx = (idx << 2) | (bit == 0 ? 2U : 1U);
            } else {
                idx = (idx << 1) | (1U - (bit ^ (i & 1U)));
            }
        }
        out[static_cast<Eigen::Index>(idx)] += reg[x];
    }
    // Every dot ends in |1>.
    StateVector dots = StateVector::from_index(lay, reg.dim() - 1);
    return {StateVector::normalized(std::move(out), std::move(out_lay)), herald, dots};
}

}  // namespace ep
