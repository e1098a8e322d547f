#include "spraymet/field.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace spraymet {

MultiIndex::MultiIndex(int dimension) : dim_(dimension) {
    if (dimension < 1)
        throw ConfigError("multi-index dimension must be positive");
    orders_.assign(static_cast<std::size_t>(2 * dimension), 0);
}

MultiIndex MultiIndex::base(int dimension, int i, int order) {
    return MultiIndex(dimension).d_base(i, order);
}

MultiIndex MultiIndex::fiber(int dimension, int i, int order) {
    return MultiIndex(dimension).d_fiber(i, order);
}

MultiIndex& MultiIndex::d_base(int i, int order) {
    if (i < 0 || i >= dim_)
        throw ConfigError("base coordinate index out of range");
    if (order < 0)
        throw ConfigError("derivative order must be non-negative");
    orders_[static_cast<std::size_t>(i)] += order;
    return *this;
}

MultiIndex& MultiIndex::d_fiber(int i, int order) {
    if (i < 0 || i >= dim_)
        throw ConfigError("fiber coordinate index out of range");
    if (order < 0)
        throw ConfigError("derivative order must be non-negative");
    orders_[static_cast<std::size_t>(dim_ + i)] += order;
    return *this;
}

int MultiIndex::total_order() const noexcept {
    return std::accumulate(orders_.begin(), orders_.end(), 0);
}

std::vector<int> MultiIndex::coordinate_list() const {
    std::vector<int> flat;
    flat.reserve(static_cast<std::size_t>(total_order()));
    for (int c = 0; c < 2 * dim_; ++c)
        for (int k = 0; k < orders_[static_cast<std::size_t>(c)]; ++k)
            flat.push_back(c);
    return flat;
}

std::string MultiIndex::to_string() const {
    std::ostringstream out;
    out << "d";
    for (int c = 0; c < 2 * dim_; ++c) {
        int k = orders_[static_cast<std::size_t>(c)];
        if (k == 0)
            continue;
        out << (c < dim_ ? "/dx" : "/dy") << (c < dim_ ? c + 1 : c - dim_ + 1);
        if (k > 1)
            out << "^" << k;
    }
    return out.str();
}

ScalarField::ScalarField(int dimension) : dim_(dimension) {
    if (dimension < 1)
        throw ConfigError("field dimension must be positive");
}

void ScalarField::check_coords(std::size_t count) const {
    if (count != static_cast<std::size_t>(coord_count()))
        throw Error("coordinate pack of size " + std::to_string(count) + " passed to " + describe() +
                    " (expected " + std::to_string(coord_count()) + ")");
}

double eval_value(const ScalarField& f, std::span<const double> coords) {
    return f.value(coords);
}

double eval_derivative(const ScalarField& f, std::span<const double> coords, const MultiIndex& index) {
    if (index.dimension() != f.dimension())
        throw ConfigError("multi-index dimension does not match field dimension");
    int order = index.total_order();
    if (order + f.intrinsic_depth() > 3)
        throw DepthBudgetError("derivative of total order " + std::to_string(order) + " of " + f.describe() +
                               " exceeds the depth budget (intrinsic depth " +
                               std::to_string(f.intrinsic_depth()) + ", cap 3)");
    std::vector<int> flat = index.coordinate_list();
    switch (order) {
    case 0:
        return f.value(coords);
    case 1:
        return detail::derive1<double>(f, coords, flat[0]);
    case 2:
        return detail::derive2<double>(f, coords, flat[0], flat[1]);
    case 3:
        return detail::derive3(f, coords, flat[0], flat[1], flat[2]);
    default:
        throw DepthBudgetError("derivative of total order " + std::to_string(order) +
                               " requested; orders above 3 are unsupported");
    }
}

namespace {

// Snap to the nearest power of two so that x +/- h are exact floats.
double snap_step(double h) {
    return std::exp2(std::nearbyint(std::log2(h)));
}

double default_base_step(int order) {
    switch (order) {
    case 1:
        return 1e-3;
    case 2:
        return 4e-3;
    default:
        return 1.2e-2;
    }
}

// 5-point central first derivative in coordinate `coord` of a callable
// g : double -> double representing f restricted to that line.
double central5(const std::function<double(double)>& g, double t0, double h) {
    return (8.0 * (g(t0 + h) - g(t0 - h)) - (g(t0 + 2.0 * h) - g(t0 - 2.0 * h))) / (12.0 * h);
}

double fd_recurse(const ScalarField& f, std::vector<double>& coords, std::span<const int> flat,
                  std::span<const double> steps) {
    if (flat.empty())
        return f.value(coords);
    int coord = flat.front();
    std::span<const int> rest = flat.subspan(1);
    double h = steps[static_cast<std::size_t>(coord)];
    double saved = coords[static_cast<std::size_t>(coord)];
    auto g = [&](double t) {
        coords[static_cast<std::size_t>(coord)] = t;
        double v = fd_recurse(f, coords, rest, steps);
        coords[static_cast<std::size_t>(coord)] = saved;
        return v;
    };
    // One Richardson step on the O(h^4) stencil.
    double d_h = central5(g, saved, h);
    double d_2h = central5(g, saved, 2.0 * h);
    return d_h + (d_h - d_2h) / 15.0;
}

} // namespace

double fd_derivative(const ScalarField& f, std::span<const double> coords, const MultiIndex& index,
                     const FdOptions& options) {
    if (index.dimension() != f.dimension())
        throw ConfigError("multi-index dimension does not match field dimension");
    std::vector<int> flat = index.coordinate_list();
    if (flat.empty())
        return f.value(coords);
    double base_step = options.base_step > 0.0 ? options.base_step : default_base_step(index.total_order());
    // Steps are fixed per coordinate from the original point so nested
    // stencils see a smooth function of the outer shifts.
    std::vector<double> steps(coords.size());
    for (std::size_t c = 0; c < coords.size(); ++c)
        steps[c] = snap_step(base_step * std::max(1.0, std::abs(coords[c])));
    std::vector<double> work(coords.begin(), coords.end());
    return fd_recurse(f, work, flat, steps);
}

} // namespace spraymet
