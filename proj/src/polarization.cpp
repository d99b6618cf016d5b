#include "ep/polarization.hpp"

#include <cmath>
#include <string>

namespace ep {

namespace {

// Mode occupation per spatial mode: 0 empty, 1 H photon, 2 V photon.
constexpr int kEmpty = 0;
constexpr int kH = 1;
constexpr int kV = 2;

SubsystemLayout rail_layout(size_t n) {
    std::vector<std::string> labels;
    for (size_t i = 0; i < n; ++i) {
        labels.push_back("rail" + std::to_string(i));
    }
    return SubsystemLayout(std::vector<int>(n, 2), labels);
}

SubsystemLayout photon_layout(size_t n) {
    std::vector<std::string> labels;
    for (size_t i = 0; i < n; ++i) {
        labels.push_back("photon" + std::to_string(i));
    }
    return SubsystemLayout(std::vector<int>(n, 2), labels);
}

// Downconversion: |10> -> |H,V,0>, |01> -> |0,H,V> over three modes.
Mat bbo_stage() {
    const SubsystemLayout out({3, 3, 3});
    Mat m = Mat::Zero(27, 4);
    m(static_cast<Eigen::Index>(index_of(out, {kH, kV, kEmpty})), 2) = 1.0;
    m(static_cast<Eigen::Index>(index_of(out, {kEmpty, kH, kV})), 1) = 1.0;
    return m;
}

// Beam-splitter routing: the partner photon of each pair is sent to the
// herald detector, which leaves |H,0> or |0,V> in two output modes.
Mat routing_stage() {
    const SubsystemLayout in({3, 3, 3});
    const SubsystemLayout out({3, 3, 2});
    Mat m = Mat::Zero(18, 27);
    m(static_cast<Eigen::Index>(index_of(out, {kH, kEmpty, 1})),
      static_cast<Eigen::Index>(index_of(in, {kH, kV, kEmpty}))) = 1.0;
    m(static_cast<Eigen::Index>(index_of(out, {kEmpty, kV, 1})),
      static_cast<Eigen::Index>(index_of(in, {kEmpty, kH, kV}))) = 1.0;
    return m;
}

// Frequency erasure merges the two output modes into one polarization qubit.
Mat merge_stage() {
    const SubsystemLayout in({3, 3});
    Mat m = Mat::Zero(2, 9);
    m(0, static_cast<Eigen::Index>(index_of(in, {kH, kEmpty}))) = 1.0;
    m(1, static_cast<Eigen::Index>(index_of(in, {kEmpty, kV}))) = 1.0;
    return m;
}

}  // namespace

void ConversionSpec::validate() const {
    if (!(eta_bbo > 0.0 && eta_bbo <= 1.0)) {
        throw std::invalid_argument("conversion: eta_bbo must lie in (0, 1]");
    }
    if (!(detector_efficiency > 0.0 && detector_efficiency <= 1.0)) {
        throw std::invalid_argument("conversion: detector_efficiency must lie in (0, 1]");
    }
}

double dual_rail_leakage(const StateVector& rails) {
    const auto& lay = rails.layout();
    if (lay.size() % 2 != 0) {
        throw DimensionError("dual rail: rail count must be even");
    }
    for (int d : lay.dims()) {
        if (d != 2) {
            throw DimensionError("dual rail: rails must be two-level");
        }
    }
    const size_t n = lay.size();
    double leak = 0.0;
    for (size_t x = 0; x < rails.dim(); ++x) {
        for (size_t p = 0; p < n; p += 2) {
            size_t a = (x >> (n - 1 - p)) & 1U;
            size_t b = (x >> (n - 2 - p)) & 1U;
            if (a == b) {
                leak += std::norm(rails[x]);
                break;
            }
        }
    }
    return leak;
}

ConversionResult convert_one(const StateVector& rails, const ConversionSpec& spec) {
    spec.validate();
    if (rails.layout().dims() != std::vector<int>{2, 2}) {
        throw DimensionError("convert_one: input must be one rail pair [2, 2]");
    }
    if (dual_rail_leakage(rails) > 1e-9) {
        throw std::invalid_argument("convert_one: input leaves the dual-rail subspace");
    }
    Vec modes = bbo_stage() * rails.amplitudes();
    StateVector routed(routing_stage() * modes, SubsystemLayout({3, 3, 2}));
    Mat click = Mat::Zero(2, 2);
    click(1, 1) = 1.0;
    Projection heralded = partial_project(routed, 2, LinearMap(click, SubsystemLayout({2})));
    StateVector two_modes = remove_subsystem(heralded.state, 2, Vec::Unit(2, 1));
    StateVector photon(merge_stage() * two_modes.amplitudes(), photon_layout(1));
    // On the dual-rail subspace the herald click is certain in the ideal chain;
    // losses enter only through the element efficiencies.
    if (std::abs(heralded.probability - 1.0) > 1e-9) {
        throw ConvergenceError("convert_one: herald click probability departs from 1");
    }
    return {photon, spec.eta_bbo * spec.detector_efficiency};
}

ConversionResult convert_register(const StateVector& rails, const ConversionSpec& spec) {
    spec.validate();
    const size_t n_rails = rails.layout().size();
    if (n_rails % 2 != 0) {
        throw DimensionError("convert_register: odd rail count " + std::to_string(n_rails));
    }
    if (n_rails == 0) {
        throw DimensionError("convert_register: empty register");
    }
    if (dual_rail_leakage(rails) > 1e-9) {
        throw std::invalid_argument("convert_register: input leaves the dual-rail subspace");
    }
    const size_t n = n_rails / 2;
    // Per-photon map from the two dual-rail basis states.
    Mat m1 = Mat::Zero(2, 4);
    double herald_one = 1.0;
    for (size_t col : {size_t{1}, size_t{2}}) {
        ConversionResult r = convert_one(StateVector::from_index(rail_layout(2), col), spec);
        m1.col(static_cast<Eigen::Index>(col)) = r.polarization.amplitudes();
        herald_one = r.herald;
    }
    const size_t out_dim = size_t{1} << n;
    Vec out = Vec::Zero(static_cast<Eigen::Index>(out_dim));
    for (size_t x = 0; x < rails.dim(); ++x) {
        const cplx a = rails[x];
        if (a == cplx(0.0)) {
            continue;
        }
        for (size_t y = 0; y < out_dim; ++y) {
            cplx w = a;
            for (size_t p = 0; p < n && w != cplx(0.0); ++p) {
                const size_t pair = (x >> (2 * (n - 1 - p))) & 3U;
                const size_t pol = (y >> (n - 1 - p)) & 1U;
                w *= m1(static_cast<Eigen::Index>(pol), static_cast<Eigen::Index>(pair));
            }
            out[static_cast<Eigen::Index>(y)] += w;
        }
    }
    return {StateVector::normalized(std::move(out), photon_layout(n)), std::pow(herald_one, static_cast<double>(n))};
}

StateVector polarization_ghz(size_t n) {
    if (n == 0) {
        throw DimensionError("polarization_ghz: n must be >= 1");
    }
    Vec v = Vec::Zero(static_cast<Eigen::Index>(size_t{1} << n));
    v[0] = 1.0 / std::sqrt(2.0);
    v[v.size() - 1] = 1.0 / std::sqrt(2.0);
    return StateVector(std::move(v), photon_layout(n));
}

}  // namespace ep
