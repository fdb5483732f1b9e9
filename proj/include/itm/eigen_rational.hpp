#pragma once

#include <Eigen/Core>

#include "itm/rational.hpp"

namespace Eigen {

template <>
struct NumTraits<itm::Rational> : GenericNumTraits<itm::Rational> {
    typedef itm::Rational Real;
    typedef itm::Rational NonInteger;
    typedef itm::Rational Nested;
    enum {
        IsInteger = 0,
        IsSigned = 1,
        IsComplex = 0,
        RequireInitialization = 1,
        ReadCost = 2,
        AddCost = 8,
        MulCost = 8
    };
    static inline Real epsilon() { return Real(0); }
    static inline Real dummy_precision() { return Real(0); }
    static inline int digits10() { return 0; }
};

}  // namespace Eigen

namespace itm {

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using RVector = Vec<Rational>;
using RMatrix = Mat<Rational>;
using Count = long long;
using CountVector = Vec<Count>;

inline RVector to_rvector(const std::vector<Rational>& v)
{
    RVector out(static_cast<Eigen::Index>(v.size()));
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = v[static_cast<std::size_t>(i)];
    return out;
}

inline std::vector<Rational> to_std(const RVector& v)
{
    std::vector<Rational> out;
    out.reserve(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

// Exact dot product of an integer vector with a rational vector.
template <class Derived>
Rational dot_exact(const Eigen::MatrixBase<Derived>& c, const RVector& w)
{
    Rational s(0);
    for (Eigen::Index i = 0; i < c.size(); ++i)
        if (c(i) != 0) s += Rational(static_cast<long long>(c(i))) * w(i);
    return s;
}

inline Rational max_abs(const RVector& v)
{
    Rational m(0);
    for (Eigen::Index i = 0; i < v.size(); ++i) m = max(m, v(i).abs());
    return m;
}

}  // namespace itm
