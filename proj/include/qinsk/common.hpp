// ============================================================================
// qinsk/common.hpp - shared aliases and small helpers
//
// The library works in d = 1 or 2 space dimensions at runtime.  Points,
// normals and gradients are stored as fixed-size 2-vectors; the unused
// component is kept at exactly 0.0 in 1D so that generic d-loops and full
// 2-vector arithmetic agree.
// ============================================================================
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <sstream>
#include <stdexcept>
#include <string>

namespace qinsk {

using Vec = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

inline constexpr const char* version_string = "qinsk 1.0.0";

// Build an error message from stream-able pieces.
template <class... Args>
std::string msg(Args&&... args)
{
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}

} // namespace qinsk
