#pragma once

// Cat-code protection: coherent and cat states in a truncated Fock space,
// dispersive rotation, the encode isometry, and photon-loss trajectories
// with parity syndromes and repump recovery.

#include <array>
#include <cstdint>
#include <vector>

#include "ep/hilbert.hpp"

namespace ep {

struct TruncationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CavitySpec {
    cplx alpha{2.0, 0.0};
    int n_max = 30;
    double kappa = 0.0;

    // Smallest truncation accepted for |alpha|.
    static int min_n_max(double abs_alpha);
    // Spec with the minimal admissible truncation.
    static CavitySpec with_alpha(cplx alpha, double kappa = 0.0);
    void validate() const;
    int dim() const { return n_max + 1; }
};

struct DispersiveCoupling {
    double g = 1.0;
    double delta = 1.0;
};

// Fock amplitudes of |alpha>, renormalized after truncation.
Vec coherent_amplitudes(cplx alpha, int n_max);
StateVector coherent(cplx alpha, int n_max);
// N(|alpha> + sign |-alpha>), sign = +1 or -1.
Vec cat_amplitudes(cplx alpha, int sign, int n_max);
StateVector cat(cplx alpha, int sign, int n_max);

Mat lowering(int n_max);
Mat number_operator(int n_max);
// Projector onto even (sign=+1) or odd (sign=-1) photon number.
Mat parity_projector(int n_max, int sign);
double mean_photons(const Vec& fock);

// Layout [qubit, cavity]; H = (g^2/delta)|0><0| (x) a^dagger a for time t.
StateVector dispersive_rotation(const StateVector& state, const DispersiveCoupling& coupling, double t);

// Unitary on [2, 2, N] with |0 0 vac> -> |0 0 C+_alpha> and
// |1 1 vac> -> |0 1 C+_{i alpha}>, completed by Gram-Schmidt.
Mat encode_unitary(cplx alpha, int n_max);
SubsystemLayout encode_layout(int n_max);
StateVector encode(const StateVector& state, const CavitySpec& cavity);
StateVector decode(const StateVector& state, const CavitySpec& cavity);

// Qubit-labelled cavity register a|0>|c_01>..|c_0k> + b|1>|c_11>..|c_1k>,
// stored per branch with normalized cavity kets. An unlabelled register
// holds a single branch with no qubit.
class CavityRegister {
  public:
    struct Branch {
        cplx weight;
        std::vector<Vec> cavities;
    };

    CavityRegister(std::vector<Branch> branches, int n_max, bool labelled);

    // a|0>|C+_alpha>^k + b|1>|C+_{i alpha}>^k, normalized.
    static CavityRegister chain(cplx alpha, size_t k, int n_max, cplx a = 1.0, cplx b = 1.0);
    // Unlabelled product of the given cavity kets.
    static CavityRegister product(const std::vector<Vec>& cavities, int n_max);
    // Layout [2, N, ..., N] (labelled) or [N, ..., N].
    static CavityRegister from_state_vector(const StateVector& state, double tol = 1e-9);
    StateVector to_state_vector() const;

    bool labelled() const { return labelled_; }
    int n_max() const { return n_max_; }
    size_t n_cavities() const { return branches_.front().cavities.size(); }
    size_t n_branches() const { return branches_.size(); }
    const Branch& branch(size_t b) const { return branches_.at(b); }
    double norm2() const;
    void normalize();

    // <this|other>; registers must share shape.
    cplx overlap(const CavityRegister& other) const;
    double mean_photons(size_t j) const;
    // Total jump rate weight sum_b |w_b|^2 <n_j>_b (unnormalized).
    double photon_weight(size_t j) const;

    // Unnormalized operations: the caller renormalizes.
    void apply_lowering(size_t j);
    // exp(-kappa t a^dagger a / 2) on cavity j.
    void apply_drift(size_t j, double kappa_t);
    // Applies op to cavity j in every branch (norm folded into the weight).
    void apply_cavity_op(size_t j, const Mat& op);
    void append_cavity(const std::array<Vec, 2>& per_branch);
    void set_weights(cplx w0, cplx w1);

    double parity_probability(size_t j, int sign) const;
    void project_parity(size_t j, int sign);

  private:
    void check_index(size_t j) const;

    std::vector<Branch> branches_;
    int n_max_;
    bool labelled_;
};

// Logical fidelity |<ref|reg>|^2 with both sides normalized.
double logical_fidelity(const CavityRegister& reg, const CavityRegister& ref);

// Adds one cavity to a chain by merging a fresh Bell pair into the label
// qubit, encoding the pair and releasing it. The label keeps its relative
// phase. `fresh_bell` is a two-dot state a|00> + b|11>.
CavityRegister extend_chain(const CavityRegister& chain, const StateVector& fresh_bell, const CavitySpec& cavity);
StateVector extend_chain(const StateVector& chain, const StateVector& fresh_bell, const CavitySpec& cavity);

// Moves an n-dot register w0|0..0> + w1|1..1> into a label qubit and n-1
// cavities via successive encodes on neighbouring dot pairs.
CavityRegister protect_register(const StateVector& dots, const CavitySpec& cavity);

struct DecodeResult {
    StateVector dots;
    // Weight of the code-space component that was kept.
    double success;
};
// Projects each cavity back onto the code words and returns the n-dot state.
DecodeResult decode_register(const CavityRegister& reg, const CavitySpec& cavity);

struct ParityResult {
    int outcome;
    CavityRegister state;
    double probability;
};
// Projective parity measurement of cavity j; u in [0,1) selects the outcome.
ParityResult parity_measure(const CavityRegister& reg, size_t j, double u);
struct StateParityResult {
    int outcome;
    StateVector state;
    double probability;
};
// Same measurement on a state vector; `subsystem` is the cavity position.
StateParityResult parity_measure(const StateVector& state, size_t subsystem, double u);

// Maps each -1 cavity back to the code: the decayed odd-cat pair that loss
// produces from C+_{alpha e^{-kappa tau/2}} and C+_{i alpha e^{-kappa tau/2}}
// is sent to C+_alpha and C+_{i alpha} by a Lowdin-orthonormalized unitary.
// `kappa_tau` holds kappa times the time since each cavity was last restored.
CavityRegister repump_correct(const CavityRegister& reg, const std::vector<int>& syndrome, cplx alpha,
                              const std::vector<double>& kappa_tau);
// The single-cavity recovery unitary used by repump_correct.
Mat repump_unitary(cplx alpha, double kappa_tau, int n_max);

struct TrajectoryOptions {
    double duration = 0.0;
    // Parity rounds every interval; 0 disables measurement.
    double syndrome_interval = 0.0;
    bool correct = true;
};

struct TrajectoryRecord {
    uint64_t seed = 0;
    std::vector<std::vector<double>> jump_times;
    // Raw measured parities per cavity per round.
    std::vector<std::vector<int>> parity_outcomes;
    // Parity change since the previous round (raw outcome in the corrected
    // arm, whose reference resets to +1 after each repump).
    std::vector<std::vector<int>> syndromes;
    // Jumps between consecutive rounds per cavity.
    std::vector<std::vector<int>> jumps_per_round;
    CavityRegister final_state;
};

// Waiting-time quantum trajectory with jump operators sqrt(kappa_j) a_j and
// no-jump drift exp(-kappa_j t a^dagger a / 2). Repump targets use each
// spec's alpha.
TrajectoryRecord loss_trajectory(const CavityRegister& initial, const std::vector<CavitySpec>& specs,
                                 const TrajectoryOptions& options, uint64_t seed);

}  // namespace ep
