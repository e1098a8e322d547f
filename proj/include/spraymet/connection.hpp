#pragma once

#include "spraymet/tensor.hpp"

namespace spraymet {

// Applies the spray as a derivation: S(f) = y^i df/dx^i - 2 G^i df/dy^i.
double spray_apply(const Spray& spray, const ScalarField& f, const FiberPoint& p);

// Nonlinear connection N^i_j = dG^i/dy^j at p, valence (1,1).
TensorValue connection_coefficients(const Spray& spray, const FiberPoint& p);

// Horizontal derivative df/dx^i - N^j_i df/dy^j at p (0-based i).
double horizontal_derivative(const ScalarField& f, const Spray& spray, const FiberPoint& p, int i);

// Dynamical covariant derivative per valence:
//   scalar  S(f)
//   (0,1)   S(w_i)    - N^k_i w_k
//   (0,2)   S(T_ij)   - N^k_i T_kj - N^k_j T_ik
//   (1,1)   S(T^i_j)  + N^i_k T^k_j - N^k_j T^i_k
// (2,0) values have no field form here and are rejected.
TensorValue dynamical_covariant_derivative(const TensorField& field, const Spray& spray,
                                           const FiberPoint& p);

namespace testing {
// Flips the sign of every N^i_j produced by this module. The fault is
// observable: FM fixtures with nonvanishing connection must fail under
// it, which proves the checkers actually read N.
void set_connection_sign_fault(bool enabled) noexcept;
bool connection_sign_fault() noexcept;
} // namespace testing

} // namespace spraymet
