#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ancl/errors.hpp"

namespace ancl {

/// Symmetric n x n matrix of co-membership probabilities in [0, 1] with a
/// unit diagonal (a series always co-clusters with itself).
struct AffinityMatrix {
    std::size_t n = 0;
    std::vector<double> values;  // row-major

    AffinityMatrix() = default;
    explicit AffinityMatrix(std::size_t size) : n(size), values(size * size, 0.0) {
        for (std::size_t i = 0; i < n; ++i) at(i, i) = 1.0;
    }

    double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }

    /// Sets A[i][j] = A[j][i] = v.
    void set_pair(std::size_t i, std::size_t j, double v) {
        at(i, j) = v;
        at(j, i) = v;
    }

    void validate() const {
        if (values.size() != n * n) throw DataError("affinity matrix: storage size mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            if (at(i, i) != 1.0) throw DataError("affinity matrix: diagonal must be 1");
            for (std::size_t j = 0; j < i; ++j) {
                const double v = at(i, j);
                if (!(v >= 0.0 && v <= 1.0) || !std::isfinite(v)) {
                    throw DataError("affinity matrix: entries must lie in [0, 1]");
                }
                if (v != at(j, i)) throw DataError("affinity matrix: must be exactly symmetric");
            }
        }
    }
};

}  // namespace ancl
