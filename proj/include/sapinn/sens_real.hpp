#pragma once

#include <algorithm>
#include <array>
#include <cassert>

namespace sapinn {

/// Maximum number of jet entries a single residual evaluation may read
/// (value and parameter-tangent seeds together).
inline constexpr int kMaxResidualSeeds = 32;

/// Real number carrying its gradient with respect to a small set of seeded
/// inputs. `n == 0` marks a constant and skips the gradient entirely.
struct GradReal {
    double val = 0.0;
    int n = 0;
    std::array<double, kMaxResidualSeeds> grad;

    GradReal() = default;
    GradReal(double v) : val(v) {}  // NOLINT: constants convert implicitly

    static GradReal seed(double v, int index, int size) {
        assert(index < size && size <= kMaxResidualSeeds);
        GradReal r(v);
        r.n = size;
        std::fill_n(r.grad.begin(), size, 0.0);
        r.grad[static_cast<std::size_t>(index)] = 1.0;
        return r;
    }
};

namespace detail {

// out = a*ga + b*gb on the union of active gradients.
inline void combine(GradReal& out, double a, const GradReal& x, double b, const GradReal& y) {
    const int n = std::max(x.n, y.n);
    out.n = n;
    if (n == 0) return;
    if (x.n == 0) {
        for (int i = 0; i < n; ++i) out.grad[static_cast<std::size_t>(i)] = b * y.grad[static_cast<std::size_t>(i)];
    } else if (y.n == 0) {
        for (int i = 0; i < n; ++i) out.grad[static_cast<std::size_t>(i)] = a * x.grad[static_cast<std::size_t>(i)];
    } else {
        assert(x.n == y.n);
        for (int i = 0; i < n; ++i) {
            out.grad[static_cast<std::size_t>(i)] =
                a * x.grad[static_cast<std::size_t>(i)] + b * y.grad[static_cast<std::size_t>(i)];
        }
    }
}

}  // namespace detail

inline GradReal operator+(const GradReal& x, const GradReal& y) {
    GradReal r(x.val + y.val);
    detail::combine(r, 1.0, x, 1.0, y);
    return r;
}
inline GradReal operator-(const GradReal& x, const GradReal& y) {
    GradReal r(x.val - y.val);
    detail::combine(r, 1.0, x, -1.0, y);
    return r;
}
inline GradReal operator-(const GradReal& x) {
    GradReal r(-x.val);
    detail::combine(r, -1.0, x, 0.0, GradReal{});
    return r;
}
inline GradReal operator*(const GradReal& x, const GradReal& y) {
    GradReal r(x.val * y.val);
    detail::combine(r, y.val, x, x.val, y);
    return r;
}
inline GradReal operator/(const GradReal& x, const GradReal& y) {
    const double q = x.val / y.val;
    GradReal r(q);
    detail::combine(r, 1.0 / y.val, x, -q / y.val, y);
    return r;
}

/// Value and first derivative along one parameter direction, each carrying
/// gradients with respect to the seeded jet entries.
struct SensReal {
    GradReal x;   // value
    GradReal dx;  // derivative along the parameter direction

    SensReal() = default;
    SensReal(double v) : x(v) {}  // NOLINT: constants convert implicitly
    SensReal(GradReal value, GradReal tangent) : x(value), dx(tangent) {}

    double value() const { return x.val; }
    double tangent() const { return dx.val; }
};

inline SensReal operator+(const SensReal& a, const SensReal& b) { return {a.x + b.x, a.dx + b.dx}; }
inline SensReal operator-(const SensReal& a, const SensReal& b) { return {a.x - b.x, a.dx - b.dx}; }
inline SensReal operator-(const SensReal& a) { return {-a.x, -a.dx}; }
inline SensReal operator*(const SensReal& a, const SensReal& b) { return {a.x * b.x, a.x * b.dx + a.dx * b.x}; }
inline SensReal operator/(const SensReal& a, const SensReal& b) {
    const GradReal q = a.x / b.x;
    return {q, (a.dx - q * b.dx) / b.x};
}

/// Clamp to [lo, hi]; the derivative vanishes outside the interval.
inline SensReal clamp(const SensReal& a, double lo, double hi) {
    if (a.x.val < lo) return SensReal(lo);
    if (a.x.val > hi) return SensReal(hi);
    return a;
}

}  // namespace sapinn
