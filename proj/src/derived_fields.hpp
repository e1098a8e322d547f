#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "spraymet/field.hpp"
#include "spraymet/geometry.hpp"

#include "linalg.hpp"

namespace spraymet::detail {

// Shared guard: a derived field consuming `internal` derivative orders
// per evaluation refuses dual inputs that would push past total order 3.
template <class T>
void require_depth(int internal, const char* what) {
    if (dual_depth_v<T> + internal > 3)
        throw DepthBudgetError(std::string(what) + " consumes " + std::to_string(internal) +
                               " derivative orders internally; evaluating it at dual depth " +
                               std::to_string(dual_depth_v<T>) + " exceeds the budget of 3");
}

// Directional derivative of df/d(coord), with the direction itself a
// function of the evaluation point (exactly what S(df/dy^i) needs).
template <class T>
T derive_dir_partial(const ScalarField& f, std::span<const T> coords, std::span<const T> dir, int coord) {
    if constexpr (dual_depth_v<T> >= 2) {
        throw DepthBudgetError("derivative nesting beyond total order 3 requested from " + f.describe());
    } else {
        std::vector<Dual<Dual<T>>> z(coords.size());
        for (std::size_t c = 0; c < coords.size(); ++c) {
            z[c].a.a = coords[c];
            z[c].a.b = dir[c];
        }
        z[static_cast<std::size_t>(coord)].b.a = T(1.0);
        return f.value(std::span<const Dual<Dual<T>>>(z)).b.b;
    }
}

// Spray direction (y, -2G) at the evaluation point, dual-typed.
template <class T>
std::vector<T> spray_direction(const Spray& spray, std::span<const T> coords) {
    int n = spray.dimension();
    std::vector<T> dir(coords.size(), T(0.0));
    for (int h = 0; h < n; ++h) {
        dir[static_cast<std::size_t>(h)] = coords[static_cast<std::size_t>(n + h)];
        dir[static_cast<std::size_t>(n + h)] = -2.0 * spray.coefficient(h).value(coords);
    }
    return dir;
}

// S(f) as a dual-typed expression: y^h df/dx^h - 2 G^h df/dy^h.
template <class T>
T spray_derivative(const Spray& spray, const ScalarField& f, std::span<const T> coords) {
    std::vector<T> dir = spray_direction(spray, coords);
    return derive_directional<T>(f, coords, std::span<const T>(dir));
}

// Metric tensor g_ij of an energy E = F^2 at dual depth T (row-major).
template <class T>
std::vector<T> metric_from_energy(const ScalarField& energy, std::span<const T> coords) {
    int n = energy.dimension();
    std::vector<T> g(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), T(0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            T v = 0.5 * derive2<T>(energy, coords, n + i, n + j);
            g[static_cast<std::size_t>(i * n + j)] = v;
            g[static_cast<std::size_t>(j * n + i)] = v;
        }
    return g;
}

// d f / d coords[coord] as a field.
class DerivativeField final : public FieldBase<DerivativeField> {
public:
    DerivativeField(FieldPtr f, int coord)
        : FieldBase<DerivativeField>(f->dimension()), f_(std::move(f)), coord_(coord) {}

    int intrinsic_depth() const noexcept override { return f_->intrinsic_depth() + 1; }
    std::string describe() const override {
        return "derivative (coordinate " + std::to_string(coord_) + ") of " + f_->describe();
    }

    template <class T>
    T eval(std::span<const T> coords) const {
        require_depth<T>(intrinsic_depth(), "derivative field");
        return derive1<T>(*f_, coords, coord_);
    }

private:
    FieldPtr f_;
    int coord_;
};

// d^2 f / dy^i dy^j as a field (the Hessian slot used by the angular
// invariance residual).
class FiberHessianField final : public FieldBase<FiberHessianField> {
public:
    FiberHessianField(FieldPtr f, int i, int j)
        : FieldBase<FiberHessianField>(f->dimension()), f_(std::move(f)), i_(i), j_(j) {}

    int intrinsic_depth() const noexcept override { return f_->intrinsic_depth() + 2; }
    std::string describe() const override {
        return "fiber Hessian (" + std::to_string(i_ + 1) + "," + std::to_string(j_ + 1) + ") of " + f_->describe();
    }

    template <class T>
    T eval(std::span<const T> coords) const {
        require_depth<T>(intrinsic_depth(), "fiber Hessian field");
        int n = dimension();
        return derive2<T>(*f_, coords, n + i_, n + j_);
    }

private:
    FieldPtr f_;
    int i_, j_;
};

// g_ij = 1/2 d^2 E / dy^i dy^j as a field.
class MetricComponentField final : public FieldBase<MetricComponentField> {
public:
    MetricComponentField(FieldPtr energy, int i, int j, std::string label)
        : FieldBase<MetricComponentField>(energy->dimension()), energy_(std::move(energy)), i_(i), j_(j),
          label_(std::move(label)) {}

    int intrinsic_depth() const noexcept override { return energy_->intrinsic_depth() + 2; }
    std::string describe() const override {
        return "metric component g_" + std::to_string(i_ + 1) + std::to_string(j_ + 1) + " of " + label_;
    }

    template <class T>
    T eval(std::span<const T> coords) const {
        require_depth<T>(intrinsic_depth(), "metric component field");
        int n = dimension();
        return 0.5 * derive2<T>(*energy_, coords, n + i_, n + j_);
    }

private:
    FieldPtr energy_;
    int i_, j_;
    std::string label_;
};

// (g_ij - l_i l_j) / F: the angular metric over F, computed through the
// energy path; algebraically equal to the fiber Hessian of F but with a
// different rounding profile, which is what the cross-check wants.
class AngularRatioField final : public FieldBase<AngularRatioField> {
public:
    AngularRatioField(FieldPtr f, FieldPtr energy, int i, int j)
        : FieldBase<AngularRatioField>(f->dimension()), f_(std::move(f)), energy_(std::move(energy)), i_(i),
          j_(j) {}

    int intrinsic_depth() const noexcept override {
        return std::max(f_->intrinsic_depth(), energy_->intrinsic_depth()) + 2;
    }
    std::string describe() const override {
        return "angular ratio h_" + std::to_string(i_ + 1) + std::to_string(j_ + 1) + "/F of " + f_->describe();
    }

    template <class T>
    T eval(std::span<const T> coords) const {
        require_depth<T>(intrinsic_depth(), "angular ratio field");
        int n = dimension();
        T g = 0.5 * derive2<T>(*energy_, coords, n + i_, n + j_);
        T li = derive1<T>(*f_, coords, n + i_);
        T lj = derive1<T>(*f_, coords, n + j_);
        T f = f_->value(coords);
        if (!(real_part(f) > 0.0))
            throw DomainError("Finsler function not positive");
        return (g - li * lj) / f;
    }

private:
    FieldPtr f_;
    FieldPtr energy_;
    int i_, j_;
};

// Geodesic coefficient G^i = 1/4 g^{ik} (d^2E/dy^k dx^h y^h - dE/dx^k).
class GeodesicCoefficientField final : public FieldBase<GeodesicCoefficientField> {
public:
    GeodesicCoefficientField(FieldPtr energy, int i, std::string label)
        : FieldBase<GeodesicCoefficientField>(energy->dimension()), energy_(std::move(energy)), i_(i),
          label_(std::move(label)) {}

    int intrinsic_depth() const noexcept override { return energy_->intrinsic_depth() + 2; }
    std::string describe() const override {
        return "geodesic coefficient G" + std::to_string(i_ + 1) + " of " + label_;
    }

    template <class T>
    T eval(std::span<const T> coords) const {
        require_depth<T>(intrinsic_depth(), "geodesic coefficient field");
        int n = dimension();
        std::vector<T> g = metric_from_energy<T>(*energy_, coords);
        std::vector<T> ginv = invert_matrix<T>(std::move(g), n);
        T acc(0.0);
        for (int k = 0; k < n; ++k) {
            T s(0.0);
            for (int h = 0; h < n; ++h)
                s = s + derive2<T>(*energy_, coords, n + k, h) * coords[static_cast<std::size_t>(n + h)];
            T rhs = 0.25 * (s - derive1<T>(*energy_, coords, k));
            acc = acc + ginv[static_cast<std::size_t>(i_ * n + k)] * rhs;
        }
        return acc;
    }

private:
    FieldPtr energy_;
    int i_;
    std::string label_;
};

// Geodesic coefficient of F~ plus the gyroscopic term in one pass:
//   G^i = g~^{ik} [ 1/4 (d^2E/dy^k dx^h y^h - dE/dx^k) - (F~/2) w_kl y^l ]
// with w a basic 2-form; sharing the inverse keeps this at depth 2.
class GyroCoefficientField final : public FieldBase<GyroCoefficientField> {
public:
    GyroCoefficientField(FieldPtr f, FieldPtr energy, std::vector<FieldPtr> omega, int i, std::string label)
        : FieldBase<GyroCoefficientField>(energy->dimension()), f_(std::move(f)), energy_(std::move(energy)),
          omega_(std::move(omega)), i_(i), label_(std::move(label)) {}

    int intrinsic_depth() const noexcept override { return energy_->intrinsic_depth() + 2; }
    std::string describe() const override {
        return "gyroscopic coefficient G" + std::to_string(i_ + 1) + " of " + label_;
    }

    template <class T>
    T eval(std::span<const T> coords) const {
        require_depth<T>(intrinsic_depth(), "gyroscopic coefficient field");
        int n = dimension();
        std::vector<T> g = metric_from_energy<T>(*energy_, coords);
        std::vector<T> ginv = invert_matrix<T>(std::move(g), n);
        T f = f_->value(coords);
        T acc(0.0);
        for (int k = 0; k < n; ++k) {
            T s(0.0);
            for (int h = 0; h < n; ++h)
                s = s + derive2<T>(*energy_, coords, n + k, h) * coords[static_cast<std::size_t>(n + h)];
            T rhs = 0.25 * (s - derive1<T>(*energy_, coords, k));
            T gyro(0.0);
            for (int l = 0; l < n; ++l)
                gyro = gyro + omega_[static_cast<std::size_t>(k * n + l)]->value(coords) *
                                  coords[static_cast<std::size_t>(n + l)];
            rhs = rhs - 0.5 * f * gyro;
            acc = acc + ginv[static_cast<std::size_t>(i_ * n + k)] * rhs;
        }
        return acc;
    }

private:
    FieldPtr f_;
    FieldPtr energy_;
    std::vector<FieldPtr> omega_; // row-major n*n, functions of x only
    int i_;
    std::string label_;
};

// delta f / delta x^j = df/dx^j - N^k_j df/dy^k as a field. Does not
// see the connection-sign test fault; detectors built on it stay honest
// references.
class HorizontalDerivativeField final : public FieldBase<HorizontalDerivativeField> {
public:
    HorizontalDerivativeField(Spray spray, FieldPtr f, int j)
        : FieldBase<HorizontalDerivativeField>(f->dimension()), spray_(std::move(spray)), f_(std::move(f)),
          j_(j) {}

    int intrinsic_depth() const noexcept override {
        return std::max(f_->intrinsic_depth(), spray_.coefficient_depth()) + 1;
    }
    std::string describe() const override {
        return "horizontal derivative (coordinate " + std::to_string(j_ + 1) + ") of " + f_->describe();
    }

    template <class T>
    T eval(std::span<const T> coords) const {
        require_depth<T>(intrinsic_depth(), "horizontal derivative field");
        int n = dimension();
        T out = derive1<T>(*f_, coords, j_);
        for (int k = 0; k < n; ++k) {
            T nkj = derive1<T>(spray_.coefficient(k), coords, n + j_);
            out = out - nkj * derive1<T>(*f_, coords, n + k);
        }
        return out;
    }

private:
    Spray spray_;
    FieldPtr f_;
    int j_;
};

// G^i - P y^i: the coefficient of the projectively deformed spray.
class DeformedCoefficientField final : public FieldBase<DeformedCoefficientField> {
public:
    DeformedCoefficientField(FieldPtr base, FieldPtr factor, int i)
        : FieldBase<DeformedCoefficientField>(base->dimension()), base_(std::move(base)),
          factor_(std::move(factor)), i_(i) {}

    int intrinsic_depth() const noexcept override {
        return std::max(base_->intrinsic_depth(), factor_->intrinsic_depth());
    }
    std::string describe() const override { return "projective deformation of " + base_->describe(); }

    template <class T>
    T eval(std::span<const T> coords) const {
        require_depth<T>(intrinsic_depth(), "deformed coefficient field");
        int n = dimension();
        return base_->value(coords) - factor_->value(coords) * coords[static_cast<std::size_t>(n + i_)];
    }

private:
    FieldPtr base_;
    FieldPtr factor_;
    int i_;
};

// P = S(F~) / (2 F~): the projective factor of S relative to F~.
class ProjectiveFactorField final : public FieldBase<ProjectiveFactorField> {
public:
    ProjectiveFactorField(Spray spray, FieldPtr f)
        : FieldBase<ProjectiveFactorField>(f->dimension()), spray_(std::move(spray)), f_(std::move(f)) {}

    int intrinsic_depth() const noexcept override {
        return std::max(f_->intrinsic_depth() + 1, spray_.coefficient_depth());
    }
    std::string describe() const override { return "projective factor of a spray relative to " + f_->describe(); }

    template <class T>
    T eval(std::span<const T> coords) const {
        require_depth<T>(intrinsic_depth(), "projective factor field");
        T f = f_->value(coords);
        if (!(real_part(f) > 0.0))
            throw DomainError("Finsler function not positive while recovering the projective factor");
        return spray_derivative<T>(spray_, *f_, coords) / (2.0 * f);
    }

private:
    Spray spray_;
    FieldPtr f_;
};

// Euler-Lagrange component (delta_S f)_i = S(df/dy^i) - df/dx^i.
class EulerLagrangeField final : public FieldBase<EulerLagrangeField> {
public:
    EulerLagrangeField(Spray spray, FieldPtr f, int i)
        : FieldBase<EulerLagrangeField>(f->dimension()), spray_(std::move(spray)), f_(std::move(f)), i_(i) {}

    int intrinsic_depth() const noexcept override {
        return std::max(f_->intrinsic_depth() + 2, spray_.coefficient_depth());
    }
    std::string describe() const override {
        return "Euler-Lagrange component " + std::to_string(i_ + 1) + " of " + f_->describe();
    }

    template <class T>
    T eval(std::span<const T> coords) const {
        require_depth<T>(intrinsic_depth(), "Euler-Lagrange field");
        int n = dimension();
        std::vector<T> dir = spray_direction<T>(spray_, coords);
        T s = derive_dir_partial<T>(*f_, coords, std::span<const T>(dir), n + i_);
        return s - derive1<T>(*f_, coords, i_);
    }

private:
    Spray spray_;
    FieldPtr f_;
    int i_;
};

// H^i_j = (F/F~) g^{ik} h~_{kj} with g from F and h~ the angular metric
// of F~; geodesically invariant when S is geodesic for F and angular
// invariance holds for F~.
class HTensorComponentField final : public FieldBase<HTensorComponentField> {
public:
    HTensorComponentField(FieldPtr f, FieldPtr energy, FieldPtr f_tilde, int i, int j)
        : FieldBase<HTensorComponentField>(f->dimension()), f_(std::move(f)), energy_(std::move(energy)),
          f_tilde_(std::move(f_tilde)), i_(i), j_(j) {}

    int intrinsic_depth() const noexcept override {
        return std::max(energy_->intrinsic_depth(), f_tilde_->intrinsic_depth()) + 2;
    }
    std::string describe() const override {
        return "H tensor component (" + std::to_string(i_ + 1) + "," + std::to_string(j_ + 1) + ")";
    }

    template <class T>
    T eval(std::span<const T> coords) const {
        require_depth<T>(intrinsic_depth(), "H tensor component field");
        int n = dimension();
        std::vector<T> g = metric_from_energy<T>(*energy_, coords);
        std::vector<T> ginv = invert_matrix<T>(std::move(g), n);
        T f = f_->value(coords);
        T ft = f_tilde_->value(coords);
        if (!(real_part(f) > 0.0) || !(real_part(ft) > 0.0))
            throw DomainError("Finsler function not positive in H tensor evaluation");
        T acc(0.0);
        for (int k = 0; k < n; ++k) {
            T h_kj = ft * derive2<T>(*f_tilde_, coords, n + k, n + j_);
            acc = acc + ginv[static_cast<std::size_t>(i_ * n + k)] * h_kj;
        }
        return (f / ft) * acc;
    }

private:
    FieldPtr f_;       // F
    FieldPtr energy_;  // F^2
    FieldPtr f_tilde_; // F~
    int i_, j_;
};

} // namespace spraymet::detail
