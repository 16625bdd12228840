#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace uenn {

using Index = Eigen::Index;

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using MatX = Mat<double>;
using MatXc = Mat<std::complex<double>>;
using VecX = Eigen::VectorXd;

template <class Scalar>
using RealOf = typename Eigen::NumTraits<Scalar>::Real;

template <class Scalar>
inline constexpr bool is_complex_v = Eigen::NumTraits<Scalar>::IsComplex != 0;

/// Column norms below this are treated as zero when normalizing.
inline constexpr double kNormEps = 1e-12;

/// A precondition or shape contract was violated by the caller.
class contract_violation : public std::invalid_argument {
 public:
  explicit contract_violation(const std::string& what) : std::invalid_argument(what) {}
};

class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

/// A computation produced non-finite values (diverged optimization, bad
/// inputs slipping through) and cannot continue.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw contract_violation(what);
}

inline void require_shape(bool ok, const std::string& where, Index expected, Index actual) {
  if (!ok)
    throw contract_violation(where + ": expected dimension " + std::to_string(expected) +
                             ", got " + std::to_string(actual));
}

}  // namespace uenn
