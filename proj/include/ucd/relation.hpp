#pragma once

// Labeled binary relations G ⊆ A×B, the Galois connection between input and
// output subsets, and the C3-exclusion check.
//
// Subsets of either side are bitmasks over the position of the label in the
// relation's ordered label list, so at most 64 labels per side are supported.
// That ordering is the canonical one for every set-valued result.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ucd {

using Mask = std::uint64_t;

class RelationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline int popcount(Mask m) { return std::popcount(m); }
inline bool is_subset(Mask a, Mask b) { return (a & ~b) == 0; }
inline Mask full_mask(std::size_t n) { return n >= 64 ? ~Mask{0} : (Mask{1} << n) - 1; }

inline std::vector<int> mask_indices(Mask m) {
    std::vector<int> out;
    for (int i = 0; m != 0; ++i, m >>= 1)
        if (m & 1) out.push_back(i);
    return out;
}

class Relation {
public:
    Relation() = default;

    Relation(std::vector<std::string> inputs, std::vector<std::string> outputs,
             const std::vector<std::pair<std::string, std::string>>& pairs = {})
        : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
        index_labels(inputs_, input_index_, "input");
        index_labels(outputs_, output_index_, "output");
        children_.assign(inputs_.size(), 0);
        parents_.assign(outputs_.size(), 0);
        for (const auto& [a, b] : pairs) add(input_index(a), output_index(b));
    }

    const std::vector<std::string>& inputs() const { return inputs_; }
    const std::vector<std::string>& outputs() const { return outputs_; }
    std::size_t num_inputs() const { return inputs_.size(); }
    std::size_t num_outputs() const { return outputs_.size(); }
    Mask all_inputs() const { return full_mask(inputs_.size()); }
    Mask all_outputs() const { return full_mask(outputs_.size()); }

    int input_index(const std::string& a) const {
        auto it = input_index_.find(a);
        if (it == input_index_.end()) throw RelationError("unknown input label '" + a + "'");
        return it->second;
    }
    int output_index(const std::string& b) const {
        auto it = output_index_.find(b);
        if (it == output_index_.end()) throw RelationError("unknown output label '" + b + "'");
        return it->second;
    }
    bool has_input(const std::string& a) const { return input_index_.count(a) != 0; }
    bool has_output(const std::string& b) const { return output_index_.count(b) != 0; }

    void add(int a, int b) {
        children_[a] |= Mask{1} << b;
        parents_[b] |= Mask{1} << a;
    }
    bool related(int a, int b) const { return (children_[a] >> b) & 1; }
    Mask children_mask(int a) const { return children_[a]; }
    Mask parents_mask(int b) const { return parents_[b]; }

    // The Galois maps c and p; c(∅) = B and p(∅) = A.
    Mask common_children(Mask alpha) const {
        Mask out = all_outputs();
        for (int a : mask_indices(alpha)) out &= children_[a];
        return out;
    }
    Mask common_parents(Mask beta) const {
        Mask out = all_inputs();
        for (int b : mask_indices(beta)) out &= parents_[b];
        return out;
    }
    Mask closure_inputs(Mask alpha) const { return common_parents(common_children(alpha)); }
    Mask closure_outputs(Mask beta) const { return common_children(common_parents(beta)); }

    // Union of parents over β.
    Mask all_parents(Mask beta) const {
        Mask out = 0;
        for (int b : mask_indices(beta)) out |= parents_[b];
        return out;
    }

    Mask input_mask(const std::vector<std::string>& labels) const {
        Mask m = 0;
        for (const auto& l : labels) m |= Mask{1} << input_index(l);
        return m;
    }
    Mask output_mask(const std::vector<std::string>& labels) const {
        Mask m = 0;
        for (const auto& l : labels) m |= Mask{1} << output_index(l);
        return m;
    }
    std::vector<std::string> input_labels(Mask m) const { return pick(inputs_, m); }
    std::vector<std::string> output_labels(Mask m) const { return pick(outputs_, m); }

    std::vector<std::pair<std::string, std::string>> pairs() const {
        std::vector<std::pair<std::string, std::string>> out;
        for (std::size_t a = 0; a < inputs_.size(); ++a)
            for (int b : mask_indices(children_[a])) out.emplace_back(inputs_[a], outputs_[b]);
        return out;
    }
    std::size_t size() const {
        std::size_t n = 0;
        for (Mask m : children_) n += popcount(m);
        return n;
    }

    // Same labels in the same order and the same pairs.
    friend bool operator==(const Relation& x, const Relation& y) {
        return x.inputs_ == y.inputs_ && x.outputs_ == y.outputs_ && x.children_ == y.children_;
    }

    // Pair inclusion, for relations over identical label lists.
    bool subset_of(const Relation& other) const {
        if (inputs_ != other.inputs_ || outputs_ != other.outputs_)
            throw RelationError("subset_of: relations have different labels");
        for (std::size_t a = 0; a < inputs_.size(); ++a)
            if (!is_subset(children_[a], other.children_[a])) return false;
        return true;
    }

private:
    static void index_labels(const std::vector<std::string>& labels, std::map<std::string, int>& index,
                             const char* side) {
        if (labels.size() > 64) throw RelationError(std::string("more than 64 ") + side + " labels");
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i].empty()) throw RelationError(std::string("empty ") + side + " label");
            if (!index.emplace(labels[i], static_cast<int>(i)).second)
                throw RelationError(std::string("duplicate ") + side + " label '" + labels[i] + "'");
        }
    }
    static std::vector<std::string> pick(const std::vector<std::string>& labels, Mask m) {
        std::vector<std::string> out;
        for (int i : mask_indices(m)) out.push_back(labels[i]);
        return out;
    }

    std::vector<std::string> inputs_, outputs_;
    std::map<std::string, int> input_index_, output_index_;
    std::vector<Mask> children_, parents_;
};

// Label-level accessors.

inline std::vector<std::string> children(const Relation& g, const std::string& a) {
    return g.output_labels(g.children_mask(g.input_index(a)));
}
inline std::vector<std::string> parents(const Relation& g, const std::string& b) {
    return g.input_labels(g.parents_mask(g.output_index(b)));
}
inline std::vector<std::string> common_children(const Relation& g, const std::vector<std::string>& alpha) {
    return g.output_labels(g.common_children(g.input_mask(alpha)));
}
inline std::vector<std::string> common_parents(const Relation& g, const std::vector<std::string>& beta) {
    return g.input_labels(g.common_parents(g.output_mask(beta)));
}
inline std::vector<std::string> closure_inputs(const Relation& g, const std::vector<std::string>& alpha) {
    return g.input_labels(g.closure_inputs(g.input_mask(alpha)));
}
inline std::vector<std::string> closure_outputs(const Relation& g, const std::vector<std::string>& beta) {
    return g.output_labels(g.closure_outputs(g.output_mask(beta)));
}

// Induced subrelation on A' × B', keeping the parent's label order.
inline Relation restrict_to(const Relation& g, const std::vector<std::string>& inputs,
                            const std::vector<std::string>& outputs) {
    Mask am = g.input_mask(inputs), bm = g.output_mask(outputs);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& [a, b] : g.pairs())
        if (((am >> g.input_index(a)) & 1) && ((bm >> g.output_index(b)) & 1)) pairs.emplace_back(a, b);
    return Relation(g.input_labels(am), g.output_labels(bm), pairs);
}

struct C3Witness {
    std::string a1, a2, a3, b1, b2, b3;
    friend bool operator==(const C3Witness&, const C3Witness&) = default;
};

struct C3Result {
    std::optional<C3Witness> witness;
    bool satisfied() const { return !witness.has_value(); }
};

namespace detail {

inline bool is_c3_pattern(const Relation& g, int a1, int a2, int a3, int b1, int b2, int b3) {
    return g.related(a1, b1) && g.related(a1, b2) && !g.related(a1, b3) &&
           g.related(a2, b1) && g.related(a2, b2) && g.related(a2, b3) &&
           !g.related(a3, b1) && g.related(a3, b2) && g.related(a3, b3);
}

inline C3Witness make_witness(const Relation& g, int a1, int a2, int a3, int b1, int b2, int b3) {
    const auto& in = g.inputs();
    const auto& out = g.outputs();
    return {in[a1], in[a2], in[a3], out[b1], out[b2], out[b3]};
}

}  // namespace detail

// Scan of all ordered 3×3 restrictions; returns the first match in
// lexicographic order of (a1, a2, a3, b1, b2, b3) positions.
inline C3Result check_c3ep_scan(const Relation& g) {
    const int n = static_cast<int>(g.num_inputs()), m = static_cast<int>(g.num_outputs());
    for (int a1 = 0; a1 < n; ++a1)
        for (int a2 = 0; a2 < n; ++a2) {
            if (a2 == a1 || popcount(g.children_mask(a2)) < 3) continue;
            for (int a3 = 0; a3 < n; ++a3) {
                if (a3 == a1 || a3 == a2) continue;
                for (int b1 = 0; b1 < m; ++b1)
                    for (int b2 = 0; b2 < m; ++b2)
                        for (int b3 = 0; b3 < m; ++b3) {
                            if (b1 == b2 || b2 == b3 || b1 == b3) continue;
                            if (detail::is_c3_pattern(g, a1, a2, a3, b1, b2, b3))
                                return {detail::make_witness(g, a1, a2, a3, b1, b2, b3)};
                        }
            }
        }
    return {};
}

// For all b1, b2, b3 the sets X = p{b1,b2} and Y = p{b2,b3} must be disjoint
// or nested. A failure yields a1 ∈ X∖Y, a2 ∈ X∩Y, a3 ∈ Y∖X.
inline C3Result check_c3ep_triple(const Relation& g) {
    const int m = static_cast<int>(g.num_outputs());
    for (int b1 = 0; b1 < m; ++b1)
        for (int b2 = 0; b2 < m; ++b2)
            for (int b3 = 0; b3 < m; ++b3) {
                Mask x = g.parents_mask(b1) & g.parents_mask(b2);
                Mask y = g.parents_mask(b2) & g.parents_mask(b3);
                if ((x & y) == 0 || is_subset(x, y) || is_subset(y, x)) continue;
                int a1 = std::countr_zero(x & ~y), a2 = std::countr_zero(x & y), a3 = std::countr_zero(y & ~x);
                return {detail::make_witness(g, a1, a2, a3, b1, b2, b3)};
            }
    return {};
}

// Runs both characterizations and insists they agree.
inline C3Result check_c3ep(const Relation& g) {
    C3Result scan = check_c3ep_scan(g);
    C3Result triple = check_c3ep_triple(g);
    if (scan.satisfied() != triple.satisfied())
        throw std::logic_error("C3 scan and triple-intersection test disagree");
    if (triple.witness) {
        const auto& w = *triple.witness;
        int a[3] = {g.input_index(w.a1), g.input_index(w.a2), g.input_index(w.a3)};
        int b[3] = {g.output_index(w.b1), g.output_index(w.b2), g.output_index(w.b3)};
        if (!detail::is_c3_pattern(g, a[0], a[1], a[2], b[0], b[1], b[2]))
            throw std::logic_error("triple-intersection witness is not a C3 pattern");
    }
    return scan;
}

}  // namespace ucd
