#pragma once

// Dense replay of a dot schedule with oracle exponentials, independent of
// the library's evolve/apply_local path. Release steps are not supported.

#include <stdexcept>

#include "ep/spin_register.hpp"
#include "oracles.hpp"

namespace oracle {

inline Vec replay(const ep::Schedule& s, Vec v) {
    const size_t n = s.n_dots;
    auto rz = [](double a) {
        Mat m = Mat::Zero(2, 2);
        m(0, 0) = std::exp(cplx(0, -a / 2));
        m(1, 1) = std::exp(cplx(0, a / 2));
        return m;
    };
    for (const ep::Step& st : s.steps) {
        if (const auto* it = std::get_if<ep::InteractionStep>(&st)) {
            Mat h = Mat::Zero(v.size(), v.size());
            for (const ep::DotPair& p : it->pairs) {
                h += it->strength * two_qubit(pz(), p.a, pz(), p.b, n);
                if (it->kind == ep::CouplingKind::Heisenberg) {
                    h += it->strength * two_qubit(px(), p.a, px(), p.b, n);
                    h += it->strength * two_qubit(py(), p.a, py(), p.b, n);
                }
            }
            v = expm(h, it->duration) * v;
        } else if (const auto* pu = std::get_if<ep::PulseSpec>(&st)) {
            for (const auto& z : pu->z_corrections) {
                v = on_qubit(rz(z.angle), z.dot, n) * v;
            }
            Mat gen = std::cos(pu->phase) * px() + std::sin(pu->phase) * py();
            v = on_qubit(expm(gen, pu->angle / 2), pu->target, n) * v;
        } else if (const auto* ph = std::get_if<ep::PhaseStep>(&st)) {
            for (const auto& z : ph->rotations) {
                v = on_qubit(rz(z.angle), z.dot, n) * v;
            }
        } else {
            throw std::logic_error("replay: release steps are not supported");
        }
    }
    return v;
}

}  // namespace oracle
