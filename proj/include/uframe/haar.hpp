#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hs_core.hpp"
#include "parallel.hpp"

namespace uframe {

/// Haar-random U(d) element: QR of a complex Ginibre matrix with the
/// phases of diag(R) moved into Q.
inline CMatrix haar_unitary(Eigen::Index d, Rng &rng) {
    if (d < 1) {
        throw DimensionError("haar_unitary: dimension must be positive");
    }
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    CMatrix g(d, d);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        g.data()[i] = Complex(re, im);
    }
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
    const CMatrix &r = qr.matrixQR();
    for (Eigen::Index j = 0; j < d; ++j) {
        const Complex rjj = r(j, j);
        const double mag = std::abs(rjj);
        q.col(j) *= mag > 0.0 ? rjj / mag : Complex(1.0);
    }
    return q;
}

/// n Haar unitaries, reproducible from the seed for any thread count.
inline std::vector<CMatrix> haar_unitaries(Eigen::Index d, std::size_t n,
                                           std::uint64_t seed) {
    std::vector<CMatrix> out(n);
    for_each_chunk(n, seed, [&](const ChunkRange &chunk, Rng &rng) {
        for (std::size_t k = chunk.begin; k < chunk.end; ++k) {
            out[k] = haar_unitary(d, rng);
        }
    });
    return out;
}

/// U|0>, a Haar-random pure state.
inline CVector haar_state(Eigen::Index d, Rng &rng) {
    return haar_unitary(d, rng).col(0);
}

} // namespace uframe
