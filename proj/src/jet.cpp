#include "sapinn/jet.hpp"

#include <cmath>
#include <stdexcept>

namespace sapinn {

Jet::Jet(const JetPlan& plan, double value) : plan_(&plan), c_(static_cast<std::size_t>(plan.size()), 0.0) {
    c_[0] = value;
}

Jet Jet::variable(const JetPlan& plan, int slot, double value) {
    Jet j(plan, value);
    if (auto i = plan.find(Partial{slot})) j[*i] = 1.0;
    return j;
}

Jet Jet::apply(const std::array<double, 4>& f) const {
    Jet a(*plan_, f[0]);
    const auto& z = c_;
    for (const auto& e : plan_->first_order()) a[e.component] = f[1] * z[static_cast<std::size_t>(e.component)];
    for (const auto& e : plan_->second_order()) {
        a[e.component] = f[2] * z[static_cast<std::size_t>(e.a)] * z[static_cast<std::size_t>(e.b)] +
                         f[1] * z[static_cast<std::size_t>(e.component)];
    }
    for (const auto& e : plan_->third_order()) {
        const auto Z = [&](int i) { return z[static_cast<std::size_t>(i)]; };
        a[e.component] = f[3] * Z(e.a) * Z(e.b) * Z(e.c) +
                         f[2] * (Z(e.ab) * Z(e.c) + Z(e.ac) * Z(e.b) + Z(e.bc) * Z(e.a)) + f[1] * Z(e.component);
    }
    return a;
}

Jet& Jet::operator+=(const Jet& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

Jet& Jet::operator+=(double s) {
    c_[0] += s;
    return *this;
}

Jet& Jet::operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
    Jet out(a.plan(), 0.0);
    for (int c = 0; c < a.plan().size(); ++c) {
        double s = 0.0;
        for (const auto& t : a.plan().product_terms(c)) s += a[t.left] * b[t.right];
        out[c] = s;
    }
    return out;
}

Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

Jet exp(const Jet& a) {
    const double e = std::exp(a.value());
    return a.apply({e, e, e, e});
}

Jet reciprocal(const Jet& a) {
    const double v = a.value();
    if (v == 0.0) throw std::domain_error("jet reciprocal of zero");
    const double r = 1.0 / v;
    return a.apply({r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r});
}

}  // namespace sapinn
