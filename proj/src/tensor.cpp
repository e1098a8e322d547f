#include "spraymet/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace spraymet {

int component_count(Valence valence, int dimension) {
    switch (valence) {
    case Valence::Scalar:
        return 1;
    case Valence::Cov1:
        return dimension;
    default:
        return dimension * dimension;
    }
}

bool is_matrix_valence(Valence valence) {
    return valence == Valence::Cov2 || valence == Valence::Con2 || valence == Valence::Mix11;
}

TensorValue::TensorValue(Valence valence, int dimension, FiberPoint point)
    : valence_(valence), dim_(dimension), point_(std::move(point)) {
    if (point_.dimension() != dimension)
        throw ConfigError("tensor value dimension does not match its point");
    data_.assign(static_cast<std::size_t>(component_count(valence, dimension)), 0.0);
}

double& TensorValue::scalar() {
    if (valence_ != Valence::Scalar)
        throw Error("scalar access on a non-scalar tensor value");
    return data_[0];
}

double TensorValue::scalar() const {
    return const_cast<TensorValue*>(this)->scalar();
}

double& TensorValue::at(int i) {
    if (valence_ != Valence::Cov1)
        throw Error("1-index access on a tensor value that is not a covector");
    return data_.at(static_cast<std::size_t>(i));
}

double TensorValue::at(int i) const {
    return const_cast<TensorValue*>(this)->at(i);
}

double& TensorValue::at(int i, int j) {
    if (!is_matrix_valence(valence_))
        throw Error("2-index access on a tensor value without two indices");
    if (i < 0 || i >= dim_ || j < 0 || j >= dim_)
        throw Error("tensor component index out of range");
    return data_[static_cast<std::size_t>(i * dim_ + j)];
}

double TensorValue::at(int i, int j) const {
    return const_cast<TensorValue*>(this)->at(i, j);
}

double TensorValue::max_abs() const {
    double m = 0.0;
    for (double v : data_)
        m = std::max(m, std::abs(v));
    return m;
}

double TensorValue::trace() const {
    if (!is_matrix_valence(valence_))
        throw Error("trace of a tensor value without two indices");
    double t = 0.0;
    for (int i = 0; i < dim_; ++i)
        t += data_[static_cast<std::size_t>(i * dim_ + i)];
    return t;
}

TensorValue TensorValue::operator-(const TensorValue& other) const {
    if (valence_ != other.valence_ || dim_ != other.dim_)
        throw Error("subtracting tensor values of different shape");
    TensorValue out(*this);
    for (std::size_t k = 0; k < data_.size(); ++k)
        out.data_[k] -= other.data_[k];
    return out;
}

TensorField::TensorField(Valence valence, int dimension, std::vector<FieldPtr> components)
    : valence_(valence), dim_(dimension), components_(std::move(components)) {
    if (dimension < 1)
        throw ConfigError("tensor field dimension must be positive");
    if (components_.size() != static_cast<std::size_t>(component_count(valence, dimension)))
        throw ConfigError("tensor field component count does not match its valence");
    for (const FieldPtr& c : components_) {
        if (!c)
            throw ConfigError("null tensor field component");
        if (c->dimension() != dimension)
            throw ConfigError("tensor field component dimension mismatch");
    }
}

TensorField TensorField::scalar(FieldPtr component) {
    if (!component)
        throw ConfigError("null tensor field component");
    int n = component->dimension();
    return TensorField(Valence::Scalar, n, {std::move(component)});
}

TensorField TensorField::covector(int dimension, std::vector<FieldPtr> components) {
    return TensorField(Valence::Cov1, dimension, std::move(components));
}

TensorField TensorField::cov2(int dimension, std::vector<FieldPtr> components) {
    return TensorField(Valence::Cov2, dimension, std::move(components));
}

TensorField TensorField::mix11(int dimension, std::vector<FieldPtr> components) {
    return TensorField(Valence::Mix11, dimension, std::move(components));
}

const ScalarField& TensorField::component(int i) const {
    return *components_.at(static_cast<std::size_t>(i));
}

const ScalarField& TensorField::component(int i, int j) const {
    if (!is_matrix_valence(valence_))
        throw Error("2-index access on a tensor field without two indices");
    if (i < 0 || i >= dim_ || j < 0 || j >= dim_)
        throw Error("tensor field component index out of range");
    return *components_[static_cast<std::size_t>(i * dim_ + j)];
}

int TensorField::max_intrinsic_depth() const {
    int depth = 0;
    for (const FieldPtr& c : components_)
        depth = std::max(depth, c->intrinsic_depth());
    return depth;
}

TensorValue TensorField::evaluate(const FiberPoint& p) const {
    TensorValue out(valence_, dim_, p);
    std::vector<double> coords = p.coords();
    for (std::size_t k = 0; k < components_.size(); ++k)
        out.data()[k] = components_[k]->value(coords);
    return out;
}

} // namespace spraymet
