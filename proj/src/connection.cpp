#include "spraymet/connection.hpp"

#include <atomic>
#include <vector>

#include "derived_fields.hpp"

namespace spraymet {

namespace {

std::atomic<bool> g_sign_fault{false};

// N as a dense row-major matrix, honoring the test fault.
std::vector<double> connection_matrix(const Spray& spray, std::span<const double> coords) {
    int n = spray.dimension();
    std::vector<double> m(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    double sign = g_sign_fault.load(std::memory_order_relaxed) ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m[static_cast<std::size_t>(i * n + j)] =
                sign * detail::derive1<double>(spray.coefficient(i), coords, n + j);
    return m;
}

} // namespace

namespace testing {
void set_connection_sign_fault(bool enabled) noexcept {
    g_sign_fault.store(enabled, std::memory_order_relaxed);
}
bool connection_sign_fault() noexcept { return g_sign_fault.load(std::memory_order_relaxed); }
} // namespace testing

double spray_apply(const Spray& spray, const ScalarField& f, const FiberPoint& p) {
    std::vector<double> coords = p.coords();
    return detail::spray_derivative<double>(spray, f, std::span<const double>(coords));
}

TensorValue connection_coefficients(const Spray& spray, const FiberPoint& p) {
    int n = spray.dimension();
    std::vector<double> coords = p.coords();
    std::vector<double> m = connection_matrix(spray, std::span<const double>(coords));
    TensorValue value(Valence::Mix11, n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            value.at(i, j) = m[static_cast<std::size_t>(i * n + j)];
    return value;
}

double horizontal_derivative(const ScalarField& f, const Spray& spray, const FiberPoint& p, int i) {
    int n = spray.dimension();
    if (i < 0 || i >= n)
        throw ConfigError("horizontal derivative index out of range");
    std::vector<double> coords = p.coords();
    std::span<const double> span(coords);
    std::vector<double> m = connection_matrix(spray, span);
    double out = detail::derive1<double>(f, span, i);
    for (int k = 0; k < n; ++k)
        out -= m[static_cast<std::size_t>(k * n + i)] * detail::derive1<double>(f, span, n + k);
    return out;
}

TensorValue dynamical_covariant_derivative(const TensorField& field, const Spray& spray,
                                           const FiberPoint& p) {
    int n = field.dimension();
    if (n != spray.dimension())
        throw ConfigError("tensor field and spray dimensions differ");
    std::vector<double> coords = p.coords();
    std::span<const double> span(coords);

    TensorValue out(field.valence(), n, p);
    switch (field.valence()) {
    case Valence::Scalar:
        out.scalar() = detail::spray_derivative<double>(spray, field.component(0), span);
        return out;
    case Valence::Cov1: {
        std::vector<double> m = connection_matrix(spray, span);
        std::vector<double> w(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k)
            w[static_cast<std::size_t>(k)] = field.component(k).value(span);
        for (int i = 0; i < n; ++i) {
            double v = detail::spray_derivative<double>(spray, field.component(i), span);
            for (int k = 0; k < n; ++k)
                v -= m[static_cast<std::size_t>(k * n + i)] * w[static_cast<std::size_t>(k)];
            out.at(i) = v;
        }
        return out;
    }
    case Valence::Cov2: {
        std::vector<double> m = connection_matrix(spray, span);
        std::vector<double> t(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                t[static_cast<std::size_t>(i * n + j)] = field.component(i, j).value(span);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double v = detail::spray_derivative<double>(spray, field.component(i, j), span);
                for (int k = 0; k < n; ++k) {
                    v -= m[static_cast<std::size_t>(k * n + i)] * t[static_cast<std::size_t>(k * n + j)];
                    v -= m[static_cast<std::size_t>(k * n + j)] * t[static_cast<std::size_t>(i * n + k)];
                }
                out.at(i, j) = v;
            }
        return out;
    }
    case Valence::Mix11: {
        std::vector<double> m = connection_matrix(spray, span);
        std::vector<double> t(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                t[static_cast<std::size_t>(i * n + j)] = field.component(i, j).value(span);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double v = detail::spray_derivative<double>(spray, field.component(i, j), span);
                for (int k = 0; k < n; ++k) {
                    v += m[static_cast<std::size_t>(i * n + k)] * t[static_cast<std::size_t>(k * n + j)];
                    v -= m[static_cast<std::size_t>(k * n + j)] * t[static_cast<std::size_t>(i * n + k)];
                }
                out.at(i, j) = v;
            }
        return out;
    }
    case Valence::Con2:
        break;
    }
    throw ConfigError("dynamical covariant derivative supports scalar, (0,1), (0,2) and (1,1) fields");
}

} // namespace spraymet
