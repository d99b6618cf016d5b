#pragma once

// Quantum-dot register: exchange (Heisenberg) and ZZ (Ising) couplings,
// single-dot pulses, and the timed schedule that grows GHZ states.
//
// Conventions:
//   R_phi(theta) = exp(-i theta/2 (cos(phi) X + sin(phi) Y))
//   Rz(theta)    = exp(-i theta/2 Z)
//   Heisenberg   = J (XX + YY + ZZ) = J (2 SWAP - I)
//   Ising        = J Z(x)Z

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ep/hilbert.hpp"

namespace ep {

enum class CouplingKind { Heisenberg, Ising };

struct DotPair {
    size_t a = 0;
    size_t b = 1;
};

struct CouplingSpec {
    CouplingKind kind = CouplingKind::Ising;
    double strength = 1.0;
    DotPair pair;
};

struct ZCorrection {
    size_t dot = 0;
    double angle = 0.0;
};

struct PulseSpec {
    size_t target = 0;
    double angle = kPi;
    double phase = 0.0;
    // Rz rotations applied before the pulse.
    std::vector<ZCorrection> z_corrections;
};

// Simultaneous coupling of disjoint pairs for `duration`.
struct InteractionStep {
    CouplingKind kind = CouplingKind::Ising;
    double strength = 1.0;
    std::vector<DotPair> pairs;
    double duration = 0.0;
};

struct PhaseStep {
    std::vector<ZCorrection> rotations;
};

// Projects `target` onto |+> and drops it from the register.
struct ReleaseStep {
    size_t target = 0;
};

using Step = std::variant<InteractionStep, PulseSpec, PhaseStep, ReleaseStep>;

struct Schedule {
    size_t n_dots = 0;
    std::vector<Step> steps;

    // Throws std::invalid_argument on the first violated invariant.
    void validate() const;
};

struct TimingReport {
    size_t n = 0;
    size_t ising_steps = 0;
    size_t heisenberg_steps = 0;
    double total = 0.0;
};

Mat pauli_x();
Mat pauli_y();
Mat pauli_z();
Mat pulse_unitary(double angle, double phase);
Mat z_rotation(double angle);
// 4x4 two-dot coupling matrix.
Mat pair_hamiltonian(CouplingKind kind, double strength);

SubsystemLayout dot_layout(size_t n);
StateVector plus_register(size_t n);
StateVector ghz_state(size_t n);

LinearMap hamiltonian(const CouplingSpec& spec, const SubsystemLayout& layout);

struct BellResult {
    StateVector intermediate;
    StateVector state;
    double duration;
};
// Two dots from |++>: Ising for pi/(4 J2), then the pi/2 pulse on dot 1.
BellResult build_bell(double j2);

struct MergeSpec {
    size_t contact_a = 0;
    size_t contact_b = 2;
    // Receives the pi pulse and joins contact_b in the Heisenberg step.
    size_t partner = 3;
    double j1 = 1.0;
    double j2 = 1.0;
    double delta = kPi / 2;
};

struct MergeTrace {
    StateVector after_ising;
    StateVector after_pulse;
    StateVector state;
};
MergeTrace merge_blocks(const StateVector& state, const MergeSpec& spec);
// Steps equivalent to merge_blocks.
std::vector<Step> merge_steps(const MergeSpec& spec);

Schedule plan_ghz(size_t n, double j1, double j2);
TimingReport timing(const Schedule& schedule);
// Closed-form total time for n dots.
TimingReport timing_formula(size_t n, double j1, double j2);
StateVector execute(const Schedule& schedule, const StateVector& initial);

struct CanonicalForm {
    std::vector<size_t> x_flips;
    // Per-dot Rz angles applied after the flips.
    std::vector<double> z_angles;
    StateVector state;
    double fidelity;
};
// Maps a two-branch state a|x> + b|~x> onto (|0..0> + |1..1>)/sqrt(2) using
// X flips and Z rotations. `fidelity` is the overlap of the corrected
// state with the canonical GHZ state.
CanonicalForm canonicalize(const StateVector& state);
// Schmidt spectrum (1/sqrt2, 1/sqrt2) across every bipartition.
bool is_ghz_class(const StateVector& state, double tol = 1e-8);

nlohmann::json to_json(const Schedule& schedule);
Schedule schedule_from_json(const nlohmann::json& j);

}  // namespace ep
