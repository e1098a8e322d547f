#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "spraymet/dual.hpp"
#include "spraymet/errors.hpp"

namespace spraymet {

// Multi-index of partial derivatives on TM coordinates (x1..xn, y1..yn).
// Orders are stored per packed coordinate: slot i is x_{i+1} for i < n,
// y_{i-n+1} for i >= n. All indices in the C++ API are 0-based.
class MultiIndex {
public:
    explicit MultiIndex(int dimension);

    static MultiIndex base(int dimension, int i, int order = 1);
    static MultiIndex fiber(int dimension, int i, int order = 1);

    MultiIndex& d_base(int i, int order = 1);
    MultiIndex& d_fiber(int i, int order = 1);

    int dimension() const noexcept { return dim_; }
    int total_order() const noexcept;
    const std::vector<int>& orders() const noexcept { return orders_; }

    // Flattened list of packed coordinate slots, one entry per
    // derivative, ascending; size == total_order().
    std::vector<int> coordinate_list() const;

    std::string to_string() const;

private:
    int dim_;
    std::vector<int> orders_; // size 2*dim_
};

// A smooth scalar function on (an open subset of) the slit tangent
// bundle, evaluated on packed coordinates (x1..xn, y1..yn). The four
// value() overloads are the same function over the dual-number tower;
// that is what makes exact nested differentiation possible.
//
// intrinsic_depth() reports how many derivative orders the field burns
// internally per evaluation (0 for closed-form expressions, 2 for
// geodesic coefficients, ...). External differentiation of total order
// k is admissible iff k + intrinsic_depth() <= 3; beyond that every
// entry point throws DepthBudgetError.
class ScalarField {
public:
    explicit ScalarField(int dimension);
    virtual ~ScalarField() = default;

    int dimension() const noexcept { return dim_; }
    int coord_count() const noexcept { return 2 * dim_; }

    virtual double value(std::span<const double> coords) const = 0;
    virtual Dual1 value(std::span<const Dual1> coords) const = 0;
    virtual Dual2 value(std::span<const Dual2> coords) const = 0;
    virtual Dual3 value(std::span<const Dual3> coords) const = 0;

    virtual int intrinsic_depth() const noexcept { return 0; }
    int max_derivative_order() const noexcept { return 3 - intrinsic_depth(); }

    virtual std::string describe() const = 0;

protected:
    void check_coords(std::size_t count) const;

private:
    int dim_;
};

using FieldPtr = std::shared_ptr<const ScalarField>;

// CRTP helper: derive from FieldBase<D> and provide
//   template <class T> T eval(std::span<const T> coords) const;
// to get all four virtual overloads.
template <class Derived>
class FieldBase : public ScalarField {
public:
    using ScalarField::ScalarField;

    double value(std::span<const double> coords) const final {
        check_coords(coords.size());
        return self().template eval<double>(coords);
    }
    Dual1 value(std::span<const Dual1> coords) const final {
        check_coords(coords.size());
        return self().template eval<Dual1>(coords);
    }
    Dual2 value(std::span<const Dual2> coords) const final {
        check_coords(coords.size());
        return self().template eval<Dual2>(coords);
    }
    Dual3 value(std::span<const Dual3> coords) const final {
        check_coords(coords.size());
        return self().template eval<Dual3>(coords);
    }

private:
    const Derived& self() const { return static_cast<const Derived&>(*this); }
};

namespace detail {

// First partial d f / d coords[coord], one dual level above T.
template <class T>
T derive1(const ScalarField& f, std::span<const T> coords, int coord) {
    if constexpr (dual_depth_v<T> >= 3) {
        throw DepthBudgetError("derivative nesting beyond total order 3 requested from " + f.describe());
    } else {
        std::vector<Dual<T>> z(coords.size());
        for (std::size_t i = 0; i < coords.size(); ++i)
            z[i].a = coords[i];
        z[static_cast<std::size_t>(coord)].b = T(1.0);
        return f.value(std::span<const Dual<T>>(z)).b;
    }
}

// Directional derivative sum_c dir[c] * df/dc in a single dual pass.
template <class T>
T derive_directional(const ScalarField& f, std::span<const T> coords, std::span<const T> dir) {
    if constexpr (dual_depth_v<T> >= 3) {
        throw DepthBudgetError("derivative nesting beyond total order 3 requested from " + f.describe());
    } else {
        std::vector<Dual<T>> z(coords.size());
        for (std::size_t i = 0; i < coords.size(); ++i) {
            z[i].a = coords[i];
            z[i].b = dir[i];
        }
        return f.value(std::span<const Dual<T>>(z)).b;
    }
}

// Mixed second partial, two dual levels above T.
template <class T>
T derive2(const ScalarField& f, std::span<const T> coords, int c1, int c2) {
    if constexpr (dual_depth_v<T> >= 2) {
        throw DepthBudgetError("derivative nesting beyond total order 3 requested from " + f.describe());
    } else {
        std::vector<Dual<Dual<T>>> z(coords.size());
        for (std::size_t i = 0; i < coords.size(); ++i)
            z[i].a.a = coords[i];
        z[static_cast<std::size_t>(c1)].b.a = T(1.0);
        z[static_cast<std::size_t>(c2)].a.b = T(1.0);
        return f.value(std::span<const Dual<Dual<T>>>(z)).b.b;
    }
}

inline double derive3(const ScalarField& f, std::span<const double> coords, int c1, int c2, int c3) {
    std::vector<Dual3> z(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i)
        z[i].a.a.a = coords[i];
    z[static_cast<std::size_t>(c1)].b.a.a = 1.0;
    z[static_cast<std::size_t>(c2)].a.b.a = 1.0;
    z[static_cast<std::size_t>(c3)].a.a.b = 1.0;
    return f.value(std::span<const Dual3>(z)).b.b.b;
}

} // namespace detail

// Exact evaluation of f and its partials at packed coordinates.
double eval_value(const ScalarField& f, std::span<const double> coords);
double eval_derivative(const ScalarField& f, std::span<const double> coords, const MultiIndex& index);

struct FdOptions {
    // Base step before per-coordinate scaling; 0 selects a default by
    // total derivative order. Steps are snapped to powers of two.
    double base_step = 0.0;
};

// Finite-difference oracle: 5-point central stencil plus one Richardson
// extrapolation per level, nested for mixed partials. Independent of
// the dual-number path; used to cross-check it.
double fd_derivative(const ScalarField& f, std::span<const double> coords, const MultiIndex& index,
                     const FdOptions& options = {});

} // namespace spraymet
