#include "sapinn/partial.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace sapinn {

namespace {

void check_slot(int slot) {
    if (slot < 0 || slot > 255) {
        throw std::invalid_argument("partial: slot index out of range: " + std::to_string(slot));
    }
}

}  // namespace

Partial::Partial(std::initializer_list<int> slots)
    : Partial(std::span<const int>(slots.begin(), slots.size())) {}

Partial::Partial(std::span<const int> slots) {
    if (slots.size() > static_cast<std::size_t>(kMaxJetOrder)) {
        throw std::invalid_argument("partial: order " + std::to_string(slots.size()) +
                                    " exceeds supported nesting depth " + std::to_string(kMaxJetOrder));
    }
    std::array<int, kMaxJetOrder> sorted{};
    std::size_t n = 0;
    for (int s : slots) {
        check_slot(s);
        sorted[n++] = s;
    }
    std::sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n));
    order_ = static_cast<std::uint8_t>(n);
    for (std::size_t i = 0; i < n; ++i) slots_[i] = static_cast<std::uint8_t>(sorted[i]);
}

int Partial::count(int slot) const {
    int c = 0;
    for (int i = 0; i < order_; ++i) c += slots_[static_cast<std::size_t>(i)] == slot ? 1 : 0;
    return c;
}

int Partial::max_slot() const { return order_ == 0 ? -1 : slots_[static_cast<std::size_t>(order_ - 1)]; }

Partial Partial::with(int slot) const {
    std::array<int, kMaxJetOrder + 1> s{};
    for (int i = 0; i < order_; ++i) s[static_cast<std::size_t>(i)] = slots_[static_cast<std::size_t>(i)];
    s[order_] = slot;
    return Partial(std::span<const int>(s.data(), static_cast<std::size_t>(order_ + 1)));
}

Partial Partial::without(int position) const {
    std::array<int, kMaxJetOrder> s{};
    int n = 0;
    for (int i = 0; i < order_; ++i) {
        if (i != position) s[static_cast<std::size_t>(n++)] = slots_[static_cast<std::size_t>(i)];
    }
    return Partial(std::span<const int>(s.data(), static_cast<std::size_t>(n)));
}

std::string Partial::to_string() const {
    std::string out = "d(";
    for (int i = 0; i < order_; ++i) {
        if (i) out += ",";
        out += std::to_string(slots_[static_cast<std::size_t>(i)]);
    }
    return out + ")";
}

DerivativeRequest DerivativeRequest::of_terms(int input_dim, std::vector<Partial> terms) {
    DerivativeRequest r;
    r.input_dim = input_dim;
    r.mixed_terms = std::move(terms);
    return r;
}

std::vector<Partial> DerivativeRequest::terms() const {
    std::set<Partial> out;
    for (std::size_t i = 0; i < input_indices.size(); ++i) {
        const int order = i < max_orders.size() ? max_orders[i] : 1;
        Partial p;
        for (int k = 0; k < order; ++k) {
            p = p.with(input_indices[i]);
            out.insert(p);
        }
    }
    for (const auto& p : mixed_terms) {
        if (p.order() > 0) out.insert(p);
    }
    return {out.begin(), out.end()};
}

void DerivativeRequest::validate() const {
    if (input_dim <= 0) throw std::invalid_argument("derivative request: input_dim must be positive");
    if (max_orders.size() > input_indices.size()) {
        throw std::invalid_argument("derivative request: more orders than input indices");
    }
    for (std::size_t i = 0; i < input_indices.size(); ++i) {
        if (input_indices[i] < 0 || input_indices[i] >= input_dim) {
            throw std::invalid_argument("derivative request: unknown input index " +
                                        std::to_string(input_indices[i]));
        }
        if (i < max_orders.size() && (max_orders[i] < 0 || max_orders[i] > kMaxJetOrder)) {
            throw std::invalid_argument("derivative request: order " + std::to_string(max_orders[i]) +
                                        " exceeds supported nesting depth");
        }
    }
    for (const auto& p : mixed_terms) {
        if (p.max_slot() >= input_dim) {
            throw std::invalid_argument("derivative request: unknown input index in " + p.to_string());
        }
    }
}

JetPlan::JetPlan(const DerivativeRequest& request) {
    request.validate();
    const auto terms = request.terms();
    build(request.input_dim, terms);
}

JetPlan::JetPlan(int input_dim, std::span<const Partial> terms) {
    for (const auto& p : terms) {
        if (p.max_slot() >= input_dim) {
            throw std::invalid_argument("jet plan: unknown input index in " + p.to_string());
        }
    }
    build(input_dim, terms);
}

void JetPlan::build(int input_dim, std::span<const Partial> terms) {
    input_dim_ = input_dim;
    std::set<Partial> closed{Partial{}};
    for (const auto& p : terms) {
        // Every sub-multiset of p.
        const int n = p.order();
        for (int mask = 0; mask < (1 << n); ++mask) {
            std::array<int, kMaxJetOrder> s{};
            int m = 0;
            for (int i = 0; i < n; ++i) {
                if (mask & (1 << i)) s[static_cast<std::size_t>(m++)] = p.slot(i);
            }
            closed.insert(Partial(std::span<const int>(s.data(), static_cast<std::size_t>(m))));
        }
    }
    components_.assign(closed.begin(), closed.end());  // ordered by order first

    first_.clear();
    second_.clear();
    third_.clear();
    for (int c = 0; c < size(); ++c) {
        const Partial& p = components_[static_cast<std::size_t>(c)];
        switch (p.order()) {
        case 1:
            first_.push_back({c, p.slot(0)});
            break;
        case 2:
            second_.push_back({c, index(Partial{p.slot(0)}), index(Partial{p.slot(1)})});
            break;
        case 3:
            third_.push_back({c, index(Partial{p.slot(0)}), index(Partial{p.slot(1)}), index(Partial{p.slot(2)}),
                              index(Partial{p.slot(0), p.slot(1)}), index(Partial{p.slot(0), p.slot(2)}),
                              index(Partial{p.slot(1), p.slot(2)})});
            break;
        default:
            break;
        }
    }

    product_terms_.clear();
    product_offsets_.assign(1, 0);
    for (const auto& p : components_) {
        const int n = p.order();
        for (int mask = 0; mask < (1 << n); ++mask) {
            std::array<int, kMaxJetOrder> in{}, out{};
            int ni = 0, no = 0;
            for (int i = 0; i < n; ++i) {
                if (mask & (1 << i)) {
                    in[static_cast<std::size_t>(ni++)] = p.slot(i);
                } else {
                    out[static_cast<std::size_t>(no++)] = p.slot(i);
                }
            }
            product_terms_.push_back({index(Partial(std::span<const int>(in.data(), static_cast<std::size_t>(ni)))),
                                      index(Partial(std::span<const int>(out.data(), static_cast<std::size_t>(no))))});
        }
        product_offsets_.push_back(static_cast<int>(product_terms_.size()));
    }
}

std::optional<int> JetPlan::find(const Partial& partial) const {
    auto it = std::lower_bound(components_.begin(), components_.end(), partial);
    if (it == components_.end() || *it != partial) return std::nullopt;
    return static_cast<int>(it - components_.begin());
}

int JetPlan::index(const Partial& partial) const {
    if (auto i = find(partial)) return *i;
    throw std::out_of_range("jet plan does not carry " + partial.to_string());
}

std::span<const JetPlan::ProductTerm> JetPlan::product_terms(int index) const {
    const auto begin = static_cast<std::size_t>(product_offsets_[static_cast<std::size_t>(index)]);
    const auto end = static_cast<std::size_t>(product_offsets_[static_cast<std::size_t>(index) + 1]);
    return {product_terms_.data() + begin, end - begin};
}

}  // namespace sapinn
