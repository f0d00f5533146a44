// Shared test utilities: seeded random states, Haar-ish random unitaries,
// and independent dense-matrix embedding used as an oracle against the
// strided kernels in the library.

#pragma once

#include <complex>
#include <random>
#include <vector>

#include "persim/hilbert.hpp"

namespace persim::test {

inline cplx random_cplx(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    return {gauss(rng), gauss(rng)};
}

// Gram-Schmidt on a random Gaussian matrix.
inline Matrix random_unitary(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::vector<cplx>> cols(n, std::vector<cplx>(n));
    for (auto& col : cols)
        for (auto& v : col) v = random_cplx(rng);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t prev = 0; prev < c; ++prev) {
            cplx overlap{};
            for (std::size_t r = 0; r < n; ++r) overlap += std::conj(cols[prev][r]) * cols[c][r];
            for (std::size_t r = 0; r < n; ++r) cols[c][r] -= overlap * cols[prev][r];
        }
        double norm2 = 0.0;
        for (const auto& v : cols[c]) norm2 += std::norm(v);
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& v : cols[c]) v *= inv;
    }
    Matrix m(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) m(r, c) = cols[c][r];
    return m;
}

inline StateVector random_state(const RegisterLayout& layout, std::mt19937_64& rng) {
    std::vector<cplx> amps(layout.total_dimension());
    for (auto& a : amps) a = random_cplx(rng);
    return normalized_state(layout, std::move(amps));
}

// Projector set from grouped columns of a random unitary; degenerate when a
// group has more than one column.
inline ProjectorSet random_projectors(const std::vector<std::string>& targets, std::size_t dim,
                                      const std::vector<std::size_t>& group_sizes,
                                      std::mt19937_64& rng) {
    Matrix u = random_unitary(dim, rng);
    std::vector<ProjectorSet::Outcome> outcomes;
    std::size_t col = 0;
    for (std::size_t g = 0; g < group_sizes.size(); ++g) {
        Matrix p(dim, dim);
        for (std::size_t k = 0; k < group_sizes[g]; ++k, ++col) {
            for (std::size_t r = 0; r < dim; ++r)
                for (std::size_t c = 0; c < dim; ++c) p(r, c) += u(r, col) * std::conj(u(c, col));
        }
        outcomes.push_back({"g" + std::to_string(g), std::move(p)});
    }
    return ProjectorSet(targets, std::move(outcomes));
}

// Dense embedding of `m` acting on `targets`, built with explicit Kronecker
// products and index permutations; quadratic in the global dimension, used
// only as an independent oracle at small sizes.
inline Matrix dense_embedding(const RegisterLayout& layout, const std::vector<std::string>& targets,
                              const Matrix& m) {
    const std::size_t n = layout.total_dimension();
    const EmbedMap map = make_embed_map(layout, targets);
    Matrix full(n, n);
    for (std::size_t rest : map.rest_offsets) {
        for (std::size_t r = 0; r < map.target_offsets.size(); ++r)
            for (std::size_t c = 0; c < map.target_offsets.size(); ++c)
                full(rest + map.target_offsets[r], rest + map.target_offsets[c]) = m(r, c);
    }
    return full;
}

inline std::vector<cplx> dense_apply(const Matrix& m, std::span<const cplx> v) {
    std::vector<cplx> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        cplx acc{};
        for (std::size_t c = 0; c < m.cols(); ++c) acc += m(r, c) * v[c];
        out[r] = acc;
    }
    return out;
}

} // namespace persim::test
