#pragma once

#include <cmath>
#include <vector>

#include "splitlab/objectives.hpp"

namespace testing_support {

using splitlab::ParamVec;
using splitlab::QuadraticClient;
using splitlab::QuadraticFamily;

inline ParamVec vec(std::initializer_list<double> v) {
    ParamVec x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) x[i++] = e;
    return x;
}

/// Scalar clients f_i(x) = a_i/2 (x - c_i)^2.
inline QuadraticFamily scalar_family(const std::vector<double>& centers, const std::vector<double>& curv,
                                     double sigma = 0.0, double x0 = 0.0) {
    std::vector<QuadraticClient> cl;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        cl.push_back({Eigen::MatrixXd::Constant(1, 1, curv[i]), vec({centers[i]}), sigma});
    }
    return QuadraticFamily(std::move(cl), vec({x0}));
}

inline double rel_err(double got, double want) {
    if (want == 0.0) return std::abs(got);
    return std::abs(got - want) / std::abs(want);
}

inline double rel_err(const ParamVec& got, const ParamVec& want) {
    const double n = want.norm();
    return n == 0.0 ? (got - want).norm() : (got - want).norm() / n;
}

}  // namespace testing_support
