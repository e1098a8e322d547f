#pragma once

#include <cmath>
#include <vector>

#include "spraymet/dual.hpp"

namespace spraymet::detail {

// Row-major k x k inverse by Gauss-Jordan with partial pivoting on the
// real parts. Works over the dual tower, where Eigen does not apply.
template <class T>
std::vector<T> invert_matrix(std::vector<T> m, int k) {
    std::vector<T> inv(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), T(0.0));
    for (int i = 0; i < k; ++i)
        inv[static_cast<std::size_t>(i * k + i)] = T(1.0);
    for (int col = 0; col < k; ++col) {
        int pivot = col;
        double best = std::abs(real_part(m[static_cast<std::size_t>(col * k + col)]));
        for (int row = col + 1; row < k; ++row) {
            double cand = std::abs(real_part(m[static_cast<std::size_t>(row * k + col)]));
            if (cand > best) {
                best = cand;
                pivot = row;
            }
        }
        if (!(best > 1e-300))
            throw DegenerateMetricError("singular matrix in metric inversion", {});
        if (pivot != col)
            for (int c = 0; c < k; ++c) {
                std::swap(m[static_cast<std::size_t>(pivot * k + c)], m[static_cast<std::size_t>(col * k + c)]);
                std::swap(inv[static_cast<std::size_t>(pivot * k + c)], inv[static_cast<std::size_t>(col * k + c)]);
            }
        T diag = m[static_cast<std::size_t>(col * k + col)];
        for (int c = 0; c < k; ++c) {
            m[static_cast<std::size_t>(col * k + c)] = m[static_cast<std::size_t>(col * k + c)] / diag;
            inv[static_cast<std::size_t>(col * k + c)] = inv[static_cast<std::size_t>(col * k + c)] / diag;
        }
        for (int row = 0; row < k; ++row) {
            if (row == col)
                continue;
            T factor = m[static_cast<std::size_t>(row * k + col)];
            for (int c = 0; c < k; ++c) {
                m[static_cast<std::size_t>(row * k + c)] =
                    m[static_cast<std::size_t>(row * k + c)] - factor * m[static_cast<std::size_t>(col * k + c)];
                inv[static_cast<std::size_t>(row * k + c)] =
                    inv[static_cast<std::size_t>(row * k + c)] - factor * inv[static_cast<std::size_t>(col * k + c)];
            }
        }
    }
    return inv;
}

} // namespace spraymet::detail
