#pragma once

// Dual-rail to polarization conversion with heralding.
//
// A logical photon is a rail pair with one excitation: |10> or |01>.
// The output photon is a two-level polarization qubit with basis {H, V}.

#include "ep/hilbert.hpp"

namespace ep {

struct ConversionSpec {
    double eta_bbo = 1.0;
    double detector_efficiency = 1.0;
    void validate() const;
};

struct ConversionResult {
    StateVector polarization;
    double herald;
};

// Weight outside the one-excitation-per-pair subspace.
double dual_rail_leakage(const StateVector& rails);

// One rail pair [2, 2] -> one polarization qubit [2]. Runs the
// downconversion, routing and detection stages on explicit mode spaces.
ConversionResult convert_one(const StateVector& rails, const ConversionSpec& spec);

// 2n rails -> n polarization qubits, pairs (0,1), (2,3), ...
ConversionResult convert_register(const StateVector& rails, const ConversionSpec& spec);

// (|H...H> + |V...V>) / sqrt(2) on n photons.
StateVector polarization_ghz(size_t n);

}  // namespace ep
