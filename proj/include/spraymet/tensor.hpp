#pragma once

#include <vector>

#include "spraymet/geometry.hpp"

namespace spraymet {

// Index character of a tensor on TM in this library's small universe.
enum class Valence {
    Scalar,
    Cov1, // omega_i
    Cov2, // T_ij
    Con2, // T^ij
    Mix11 // T^i_j (row = upper, column = lower)
};

int component_count(Valence valence, int dimension);
bool is_matrix_valence(Valence valence);

// Dense component values at one point, row-major for matrix valences.
class TensorValue {
public:
    TensorValue(Valence valence, int dimension, FiberPoint point);

    Valence valence() const noexcept { return valence_; }
    int dimension() const noexcept { return dim_; }
    const FiberPoint& point() const noexcept { return point_; }

    double& scalar();
    double scalar() const;
    double& at(int i);
    double at(int i) const;
    double& at(int i, int j);
    double at(int i, int j) const;

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    double max_abs() const;
    double trace() const; // matrix valences only

    TensorValue operator-(const TensorValue& other) const;

private:
    Valence valence_;
    int dim_;
    FiberPoint point_;
    std::vector<double> data_;
};

// A tensor whose components are scalar fields on TM with a shared
// valence. Components are stored row-major like TensorValue.
class TensorField {
public:
    static TensorField scalar(FieldPtr component);
    static TensorField covector(int dimension, std::vector<FieldPtr> components);
    static TensorField cov2(int dimension, std::vector<FieldPtr> components);
    static TensorField mix11(int dimension, std::vector<FieldPtr> components);

    Valence valence() const noexcept { return valence_; }
    int dimension() const noexcept { return dim_; }

    const ScalarField& component(int i) const;
    const ScalarField& component(int i, int j) const;
    FieldPtr component_ptr(int flat) const { return components_.at(static_cast<std::size_t>(flat)); }

    int max_intrinsic_depth() const;

    TensorValue evaluate(const FiberPoint& p) const;

private:
    TensorField(Valence valence, int dimension, std::vector<FieldPtr> components);

    Valence valence_;
    int dim_;
    std::vector<FieldPtr> components_;
};

} // namespace spraymet
