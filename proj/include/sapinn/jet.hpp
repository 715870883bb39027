#pragma once

#include "sapinn/partial.hpp"

#include <array>
#include <vector>

namespace sapinn {

/// Truncated Taylor jet of one scalar field at one point, laid out by a JetPlan.
/// Small arithmetic used to build closed-form output envelopes.
class Jet {
public:
    Jet(const JetPlan& plan, double value);

    static Jet constant(const JetPlan& plan, double value) { return Jet(plan, value); }
    /// The input coordinate `slot` itself: derivative 1 along the slot.
    static Jet variable(const JetPlan& plan, int slot, double value);

    const JetPlan& plan() const { return *plan_; }
    double operator[](int component) const { return c_[static_cast<std::size_t>(component)]; }
    double& operator[](int component) { return c_[static_cast<std::size_t>(component)]; }
    double value() const { return c_[0]; }

    /// f(*this) given f and its first three derivatives at value().
    Jet apply(const std::array<double, 4>& f) const;

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator+=(double s);
    Jet& operator*=(double s);

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a += -s; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator*(const Jet& a, const Jet& b);
    friend Jet operator/(const Jet& a, const Jet& b);

private:
    const JetPlan* plan_;
    std::vector<double> c_;
};

Jet exp(const Jet& a);
Jet reciprocal(const Jet& a);

}  // namespace sapinn
