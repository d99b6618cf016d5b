#pragma once

// Single-photon swap on a three-level dot coupled to a waveguide continuum.
//
// Amplitudes: g1(k) photon at k with the dot in |0>, g2(k) photon with the
// dot in |1>, g3 dot excited. The continuum is a uniform grid with trapezoid
// weights. g2 lives on the same detuning grid shifted down by w2, so both
// rails share u = k - w1 and w1, w2 drop out of the dynamics.

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "ep/hilbert.hpp"

namespace ep {

struct StepSizeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct GridAliasingError : ConvergenceError {
    using ConvergenceError::ConvergenceError;
};

struct ThreeLevelDot {
    double w1 = 1000.0;
    double w2 = 500.0;
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    void validate() const;
};

struct GaussianMode {
    double d = 1.0;
    double center = 1000.0;
    // Arrival time of the pulse peak at the dot. 0 centres the envelope on
    // the start of the run, so the earlier half never interacts.
    double delay = 0.0;
    void validate() const;
};

struct SpectralGrid {
    double k_min = 0.0;
    double k_max = 1.0;
    size_t n_k = 1024;

    static SpectralGrid centered(double center, double half_width, size_t n_k);
    // Half-width max(6d, 20(gamma1 + gamma2)) around w1, 1024 points.
    static SpectralGrid default_for(const ThreeLevelDot& dot, const GaussianMode& mode);
    void validate() const;
    double dk() const { return (k_max - k_min) / static_cast<double>(n_k - 1); }
    Eigen::VectorXd k() const;
    // Trapezoid weights; they sum to k_max - k_min.
    Eigen::VectorXd weights() const;
};

// f(k) = (2 / (pi d^2))^{1/4} exp(-(k - center)^2 / d^2) exp(i (k - center) delay)
// sampled on the grid.
Vec gaussian_mode(const GaussianMode& mode, const SpectralGrid& grid);

struct AmplitudeState {
    Vec g1;
    Vec g2;
    cplx g3 = 0.0;
    double t = 0.0;
    // sum_k w_k (|g1|^2 + |g2|^2) + |g3|^2
    double norm(const Eigen::VectorXd& weights) const;
};

enum class Frame { Rotating, Lab };
enum class Propagator { AdaptiveRK, Chebyshev };

struct DynamicsOptions {
    // Largest allowed step; 0 picks the resolution limit.
    double dt = 0.0;
    // Spacing of stored samples; 0 means t_end / 200.
    double sample_interval = 0.0;
    double rtol = 1e-10;
    double atol = 1e-12;
    Frame frame = Frame::Rotating;
    Propagator propagator = Propagator::AdaptiveRK;
    bool keep_states = false;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<double> p;
    std::vector<double> norm;
    // Filled when keep_states is set; amplitudes in the rotating frame.
    std::vector<AmplitudeState> states;
    double max_norm_defect = 0.0;
    SpectralGrid grid;
};

// Largest step that resolves the fastest scale with 20 steps per period.
double resolution_limit(const ThreeLevelDot& dot, const GaussianMode& mode, const SpectralGrid& grid);

Trajectory integrate_dynamics(const ThreeLevelDot& dot, const GaussianMode& mode, const SpectralGrid& grid,
                              double t_end, const DynamicsOptions& options = {});

// P(t) = sum_k w_k |g2(k, t)|^2 at each stored sample.
std::vector<double> swap_probability(const Trajectory& trajectory);

struct ClosedForm {
    Vec g2;
    double p;
};
// The printed double-time-integral expressions for g2(k, t) and P(t),
// evaluated as written with nested Gauss-Kronrod quadrature.
ClosedForm printed_closed_form(const ThreeLevelDot& dot, const GaussianMode& mode, const SpectralGrid& grid, double t);

// {params, p_ode, p_closed, abs_diff}
nlohmann::json closed_form_report(const ThreeLevelDot& dot, const GaussianMode& mode, const SpectralGrid& grid,
                                  double t, double p_ode);

struct SweepSpec {
    double d_min = 0.1;
    double d_max = 10.0;
    size_t d_points = 20;
    double gamma_min = 0.1;
    double gamma_max = 10.0;
    size_t gamma_points = 20;
    bool log_spacing = true;
    double w1 = 1000.0;
    double w2 = 500.0;
    double plateau_tol = 1e-3;
    int max_extensions = 4;
    size_t min_n_k = 1024;
    // Delay every pulse by 4/d so the whole envelope reaches the dot.
    bool delay_pulse = false;
};

struct SweepRow {
    double d = 0.0;
    double gamma = 0.0;
    double p_longtime = 0.0;
    bool converged = false;
    double t_end = 0.0;
    size_t n_k = 0;
    double norm_defect = 0.0;
};

std::vector<double> sweep_axis(double lo, double hi, size_t points, bool log_spacing);
// Long-time P for gamma1 = gamma2 = gamma with plateau detection; the run
// is lengthened by 1.5x up to max_extensions times.
SweepRow sweep_point(double d, double gamma, const SweepSpec& spec);
// Row order: d-major, gamma-minor.
std::vector<SweepRow> sweep_probability_surface(const SweepSpec& spec, size_t workers);

enum class RailEncoding {
    // Two rails per dot: emitted (w1 - w2) photon and passed w1 photon.
    Frequency,
    // One emitted rail per dot; odd dots are flipped so neighbouring dots
    // form one dual-rail photon.
    Paired,
};

struct SwapResult {
    StateVector photons;
    double herald;
    StateVector dots;
};
// Heralded swap of an n-dot register into photonic rails. p_success holds
// one probability per dot.
SwapResult register_swap(const StateVector& reg, const std::vector<double>& p_success, RailEncoding encoding);

}  // namespace ep
