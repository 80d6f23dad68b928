#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace steerdial {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Probabilities are clamped at this floor before any explicit log.
inline constexpr Scalar kProbFloor = 1e-12;

// Numerically stable softmax of an arbitrary dense expression.
template <typename Derived>
Vector softmax(const Eigen::MatrixBase<Derived>& logits) {
    const Scalar m = logits.maxCoeff();
    Vector p = (logits.array() - m).exp();
    p /= p.sum();
    return p;
}

// log softmax(logits), evaluated without forming intermediate probabilities.
template <typename Derived>
Vector log_softmax(const Eigen::MatrixBase<Derived>& logits) {
    const Scalar m = logits.maxCoeff();
    Vector shifted = logits.array() - m;
    const Scalar lse = std::log(shifted.array().exp().sum());
    return shifted.array() - lse;
}

template <typename Derived>
Vector sigmoid(const Eigen::MatrixBase<Derived>& x) {
    return x.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
}

inline Scalar clamped_log(Scalar p) { return std::log(p < kProbFloor ? kProbFloor : p); }

// Index of the largest coefficient; ties resolve to the lowest index.
template <typename Derived>
Index argmax_lowest(const Eigen::MatrixBase<Derived>& v) {
    Index best = 0;
    for (Index i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

template <typename Derived>
bool is_distribution(const Eigen::MatrixBase<Derived>& p, Scalar tol = 1e-6) {
    if (p.size() == 0) return false;
    if ((p.array() < Scalar(0)).any()) return false;
    return std::abs(p.sum() - Scalar(1)) <= tol;
}

}  // namespace steerdial
