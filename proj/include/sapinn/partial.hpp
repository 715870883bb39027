#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sapinn {

/// Highest mixed input order a jet can carry. Weight differentiation adds one
/// more order on top of this through the reverse pass.
inline constexpr int kMaxJetOrder = 3;

/// A mixed partial derivative, stored as the sorted multiset of input slots it
/// differentiates with respect to. The empty multiset is the value itself.
///
/// Sorting makes every permutation of a signature the same object, so mixed
/// partials are symmetric by construction.
class Partial {
public:
    Partial() = default;
    Partial(std::initializer_list<int> slots);
    explicit Partial(std::span<const int> slots);

    int order() const { return order_; }
    int slot(int position) const { return slots_[static_cast<std::size_t>(position)]; }
    int count(int slot) const;
    int max_slot() const;

    /// Signature with one more differentiation along `slot`.
    Partial with(int slot) const;
    /// Signature with the entry at `position` removed.
    Partial without(int position) const;

    std::string to_string() const;

    friend auto operator<=>(const Partial&, const Partial&) = default;
    friend bool operator==(const Partial&, const Partial&) = default;

private:
    std::uint8_t order_ = 0;
    std::array<std::uint8_t, kMaxJetOrder> slots_{};
};

/// Which input derivatives a caller wants from a network evaluation.
///
/// `input_indices[i]` is requested up to pure order `max_orders[i]`; anything
/// mixed must be listed in `mixed_terms`.
struct DerivativeRequest {
    int input_dim = 0;
    std::vector<int> input_indices;
    std::vector<int> max_orders;
    std::vector<Partial> mixed_terms;

    static DerivativeRequest of_terms(int input_dim, std::vector<Partial> terms);

    /// Every requested signature, value excluded, sorted and unique.
    std::vector<Partial> terms() const;

    /// Throws std::invalid_argument on an unknown slot or an order above kMaxJetOrder.
    void validate() const;
};

/// Compiled form of a request: the request closed under taking sub-signatures,
/// with the index tables the forward and reverse sweeps need.
///
/// Component 0 is always the value. Components are ordered by derivative order
/// so that every sub-signature precedes the signatures built from it.
class JetPlan {
public:
    struct FirstOrder {
        int component;
        int slot;
    };
    struct SecondOrder {
        int component;
        int a, b;
    };
    struct ThirdOrder {
        int component;
        int a, b, c;
        int ab, ac, bc;
    };
    /// One term of the Leibniz expansion D^α(fg) = Σ D^β f · D^(α-β) g.
    struct ProductTerm {
        int left;
        int right;
    };

    JetPlan() = default;
    explicit JetPlan(const DerivativeRequest& request);
    JetPlan(int input_dim, std::span<const Partial> terms);

    int input_dim() const { return input_dim_; }
    int size() const { return static_cast<int>(components_.size()); }
    const Partial& component(int index) const { return components_[static_cast<std::size_t>(index)]; }
    const std::vector<Partial>& components() const { return components_; }

    std::optional<int> find(const Partial& partial) const;
    /// Throws std::out_of_range when the plan does not carry `partial`.
    int index(const Partial& partial) const;

    const std::vector<FirstOrder>& first_order() const { return first_; }
    const std::vector<SecondOrder>& second_order() const { return second_; }
    const std::vector<ThirdOrder>& third_order() const { return third_; }

    /// Leibniz terms for component `index`, position subsets enumerated so
    /// binomial multiplicities appear as repeated terms.
    std::span<const ProductTerm> product_terms(int index) const;

private:
    void build(int input_dim, std::span<const Partial> terms);

    int input_dim_ = 0;
    std::vector<Partial> components_;
    std::vector<FirstOrder> first_;
    std::vector<SecondOrder> second_;
    std::vector<ThirdOrder> third_;
    std::vector<ProductTerm> product_terms_;
    std::vector<int> product_offsets_;
};

}  // namespace sapinn
