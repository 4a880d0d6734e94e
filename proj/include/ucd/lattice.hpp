#pragma once

// Circuit shapes (finite posets with input/output attachment maps) and the
// concept lattice Λ(G) of a relation, which is the canonical shape whose
// connectivity is G.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "relation.hpp"

namespace ucd {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Nodes are indexed 0..n-1 and that index order must be a linear extension
// of the partial order. The order itself is given by its covering pairs.
struct CircuitShape {
    std::vector<std::string> inputs, outputs;
    std::vector<std::string> node_names;
    std::vector<std::pair<int, int>> covers;  // (v, w) with v ⋖ w
    std::vector<int> lambda;                  // per input position
    std::vector<int> mu;                      // per output position

    std::size_t num_nodes() const { return node_names.size(); }

    // Validates the data and computes the order relation. Must be called after
    // the fields are filled in.
    void finalize() {
        const int n = static_cast<int>(num_nodes());
        if (lambda.size() != inputs.size() || mu.size() != outputs.size())
            throw ShapeError("lambda/mu must be total on the input/output labels");
        for (int v : lambda)
            if (v < 0 || v >= n) throw ShapeError("lambda maps to an unknown node");
        for (int v : mu)
            if (v < 0 || v >= n) throw ShapeError("mu maps to an unknown node");
        std::sort(covers.begin(), covers.end());
        if (std::adjacent_find(covers.begin(), covers.end()) != covers.end())
            throw ShapeError("duplicate cover");
        below_.assign(n, std::vector<bool>(n, false));
        for (int v = 0; v < n; ++v) below_[v][v] = true;
        for (auto [v, w] : covers) {
            if (v < 0 || w < 0 || v >= n || w >= n) throw ShapeError("cover refers to an unknown node");
            if (v >= w) throw ShapeError("node order is not a linear extension of the covers");
        }
        // below_[v][w]: v ≤ w. Process w in increasing order; all lower covers
        // of w have smaller index.
        for (int w = 0; w < n; ++w)
            for (auto [v, x] : covers)
                if (x == w)
                    for (int u = 0; u < n; ++u)
                        if (below_[u][v]) below_[u][w] = true;
        for (auto [v, w] : covers)
            for (auto [v2, x] : covers)
                if (v2 == v && x != w && below_[x][w])
                    throw ShapeError("covers are not transitively reduced");
        check_unique_names();
    }

    bool le(int v, int w) const { return below_[v][w]; }
    bool lt(int v, int w) const { return v != w && below_[v][w]; }

    std::vector<int> lower_covers(int v) const {
        std::vector<int> out;
        for (auto [u, w] : covers)
            if (w == v) out.push_back(u);
        return out;
    }
    std::vector<int> upper_covers(int v) const {
        std::vector<int> out;
        for (auto [u, w] : covers)
            if (u == v) out.push_back(w);
        return out;
    }
    std::vector<int> inputs_at(int v) const {
        std::vector<int> out;
        for (std::size_t a = 0; a < lambda.size(); ++a)
            if (lambda[a] == v) out.push_back(static_cast<int>(a));
        return out;
    }
    std::vector<int> outputs_at(int v) const {
        std::vector<int> out;
        for (std::size_t b = 0; b < mu.size(); ++b)
            if (mu[b] == v) out.push_back(static_cast<int>(b));
        return out;
    }
    int input_position(const std::string& a) const { return position(inputs, a, "input"); }
    int output_position(const std::string& b) const { return position(outputs, b, "output"); }

private:
    static int position(const std::vector<std::string>& labels, const std::string& l, const char* side) {
        auto it = std::find(labels.begin(), labels.end(), l);
        if (it == labels.end()) throw ShapeError(std::string("unknown ") + side + " label '" + l + "'");
        return static_cast<int>(it - labels.begin());
    }
    void check_unique_names() const {
        auto names = node_names;
        std::sort(names.begin(), names.end());
        if (std::adjacent_find(names.begin(), names.end()) != names.end())
            throw ShapeError("duplicate node name");
    }

    std::vector<std::vector<bool>> below_;
};

// (a, b) is in the connectivity iff λ(a) ≤ μ(b).
inline Relation connectivity(const CircuitShape& s) {
    Relation g(s.inputs, s.outputs);
    for (std::size_t a = 0; a < s.inputs.size(); ++a)
        for (std::size_t b = 0; b < s.outputs.size(); ++b)
            if (s.le(s.lambda[a], s.mu[b])) g.add(static_cast<int>(a), static_cast<int>(b));
    return g;
}

// Number of cover chains λ(a) = p1 ⋖ … ⋖ pn = μ(b).
inline std::uint64_t count_paths(const CircuitShape& s, const std::string& a, const std::string& b) {
    int from = s.lambda[s.input_position(a)], to = s.mu[s.output_position(b)];
    std::vector<std::uint64_t> ways(s.num_nodes(), 0);
    ways[from] = 1;
    for (int w = from + 1; w <= to; ++w)
        for (int u : s.lower_covers(w)) ways[w] += ways[u];
    return from <= to ? ways[to] : 0;
}

struct ConceptNode {
    Mask alpha = 0, beta = 0;
    friend bool operator==(const ConceptNode&, const ConceptNode&) = default;
};

namespace detail {

// Canonical order on input subsets: by size, then lexicographically on the
// sorted index list.
inline bool canonical_less(Mask x, Mask y) {
    if (popcount(x) != popcount(y)) return popcount(x) < popcount(y);
    return mask_indices(x) < mask_indices(y);
}

inline std::string brace(const std::vector<std::string>& labels) {
    std::string s = "{";
    for (std::size_t i = 0; i < labels.size(); ++i) s += (i ? "," : "") + labels[i];
    return s + "}";
}

}  // namespace detail

// Fixed points of α ↦ pc(α), via the intersection closure of
// {A} ∪ {Pa(b) | b ∈ B}.
inline std::vector<Mask> enumerate_closed_input_sets(const Relation& g) {
    std::vector<Mask> closed{g.all_inputs()};
    for (std::size_t b = 0; b < g.num_outputs(); ++b) {
        Mask pb = g.parents_mask(static_cast<int>(b));
        const std::size_t n = closed.size();
        for (std::size_t i = 0; i < n; ++i) {
            Mask x = closed[i] & pb;
            if (std::find(closed.begin(), closed.end(), x) == closed.end()) closed.push_back(x);
        }
    }
    std::sort(closed.begin(), closed.end(), detail::canonical_less);
    return closed;
}

class ConceptLattice {
public:
    explicit ConceptLattice(Relation g) : relation_(std::move(g)) {
        for (Mask alpha : enumerate_closed_input_sets(relation_))
            nodes_.push_back({alpha, relation_.common_children(alpha)});
        const int n = static_cast<int>(nodes_.size());
        shape_.inputs = relation_.inputs();
        shape_.outputs = relation_.outputs();
        for (const auto& v : nodes_) shape_.node_names.push_back(detail::brace(relation_.input_labels(v.alpha)));
        for (int v = 0; v < n; ++v)
            for (int w = 0; w < n; ++w) {
                if (!strictly_contained(nodes_[v].alpha, nodes_[w].alpha)) continue;
                bool cover = true;
                for (int x = 0; x < n && cover; ++x)
                    if (strictly_contained(nodes_[v].alpha, nodes_[x].alpha) &&
                        strictly_contained(nodes_[x].alpha, nodes_[w].alpha))
                        cover = false;
                if (cover) shape_.covers.emplace_back(v, w);
            }
        for (std::size_t a = 0; a < relation_.num_inputs(); ++a)
            shape_.lambda.push_back(node_of_alpha(relation_.closure_inputs(Mask{1} << a)));
        for (std::size_t b = 0; b < relation_.num_outputs(); ++b)
            shape_.mu.push_back(node_of_alpha(relation_.common_parents(Mask{1} << b)));
        shape_.finalize();
    }

    const Relation& relation() const { return relation_; }
    const std::vector<ConceptNode>& nodes() const { return nodes_; }
    const ConceptNode& node(int v) const { return nodes_[v]; }
    const CircuitShape& shape() const { return shape_; }
    std::size_t size() const { return nodes_.size(); }

    int bottom() const { return 0; }
    int top() const { return static_cast<int>(nodes_.size()) - 1; }

    int node_of_alpha(Mask alpha) const {
        for (std::size_t v = 0; v < nodes_.size(); ++v)
            if (nodes_[v].alpha == alpha) return static_cast<int>(v);
        throw std::logic_error("input set is not closed");
    }
    int lambda(const std::string& a) const { return shape_.lambda[relation_.input_index(a)]; }
    int mu(const std::string& b) const { return shape_.mu[relation_.output_index(b)]; }

    int meet(const std::vector<int>& s) const {
        Mask alpha = relation_.all_inputs();
        for (int v : s) alpha &= nodes_[v].alpha;
        return node_of_alpha(alpha);
    }
    int join(const std::vector<int>& s) const {
        Mask beta = relation_.all_outputs();
        for (int v : s) beta &= nodes_[v].beta;
        return node_of_alpha(relation_.common_parents(beta));
    }

    std::string describe(int v) const {
        return "<" + detail::brace(relation_.input_labels(nodes_[v].alpha)) + "," +
               detail::brace(relation_.output_labels(nodes_[v].beta)) + ">";
    }

private:
    static bool strictly_contained(Mask x, Mask y) { return x != y && is_subset(x, y); }

    Relation relation_;
    std::vector<ConceptNode> nodes_;
    CircuitShape shape_;
};

inline ConceptLattice build_concept_lattice(const Relation& g) { return ConceptLattice(g); }

struct LatticeC3Result {
    bool satisfied = true;
    // A pair with more than one path, if any.
    std::optional<std::pair<std::string, std::string>> multipath;
    std::uint64_t paths = 0;
    // A node with two upper covers whose β sets overlap, if any.
    std::optional<int> overlap_node;
};

// Unique-path test and the disjoint-cover test on Λ(G); both are checked
// against the relation-level test.
inline LatticeC3Result check_c3ep_lattice(const Relation& g) {
    ConceptLattice lat(g);
    const auto& s = lat.shape();
    LatticeC3Result r;
    for (const auto& a : g.inputs())
        for (const auto& b : g.outputs()) {
            std::uint64_t k = count_paths(s, a, b);
            if (k > 1 && !r.multipath) {
                r.multipath = {a, b};
                r.paths = k;
            }
        }
    for (int v = 0; v < static_cast<int>(lat.size()) && !r.overlap_node; ++v) {
        if (lat.node(v).alpha == 0) continue;
        auto up = s.upper_covers(v);
        for (std::size_t i = 0; i < up.size(); ++i)
            for (std::size_t j = i + 1; j < up.size(); ++j)
                if (lat.node(up[i]).beta & lat.node(up[j]).beta) r.overlap_node = v;
    }
    r.satisfied = !r.multipath.has_value();
    if (r.satisfied != !r.overlap_node.has_value())
        throw std::logic_error("unique-path and disjoint-cover tests disagree");
    if (r.satisfied != check_c3ep(g).satisfied())
        throw std::logic_error("lattice and relation C3 tests disagree");
    return r;
}

// For every node v with α_v ≠ ∅ and distinct upper covers w, w':
// Pa(β_w) ∩ Pa(β_w') = α_v.
inline bool overlap_lemma_check(const Relation& g) {
    if (!check_c3ep(g).satisfied())
        throw std::invalid_argument("overlap_lemma_check requires a relation without C3 restrictions");
    ConceptLattice lat(g);
    for (int v = 0; v < static_cast<int>(lat.size()); ++v) {
        if (lat.node(v).alpha == 0) continue;
        auto up = lat.shape().upper_covers(v);
        for (std::size_t i = 0; i < up.size(); ++i)
            for (std::size_t j = i + 1; j < up.size(); ++j) {
                Mask x = g.all_parents(lat.node(up[i]).beta) & g.all_parents(lat.node(up[j]).beta);
                if (x != lat.node(v).alpha) return false;
            }
    }
    return true;
}

// Longest chain from a minimal element, used as the DOT rank.
inline std::vector<int> node_heights(const CircuitShape& s) {
    std::vector<int> h(s.num_nodes(), 0);
    for (int w = 0; w < static_cast<int>(s.num_nodes()); ++w)
        for (int u : s.lower_covers(w)) h[w] = std::max(h[w], h[u] + 1);
    return h;
}

namespace detail {

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

inline std::string to_dot(const CircuitShape& s, const std::function<std::string(int)>& label) {
    std::ostringstream os;
    os << "digraph shape {\n  rankdir=BT;\n  node [shape=box];\n";
    for (std::size_t v = 0; v < s.num_nodes(); ++v)
        os << "  n" << v << " [label=\"" << dot_escape(label(static_cast<int>(v))) << "\"];\n";
    auto h = node_heights(s);
    for (int r = 0; r <= (h.empty() ? -1 : *std::max_element(h.begin(), h.end())); ++r) {
        os << "  { rank=same;";
        for (std::size_t v = 0; v < s.num_nodes(); ++v)
            if (h[v] == r) os << " n" << v << ";";
        os << " }\n";
    }
    for (auto [v, w] : s.covers) os << "  n" << v << " -> n" << w << ";\n";
    for (std::size_t a = 0; a < s.inputs.size(); ++a) {
        os << "  in" << a << " [shape=point];\n";
        os << "  in" << a << " -> n" << s.lambda[a] << " [label=\"" << dot_escape(s.inputs[a]) << "\"];\n";
    }
    for (std::size_t b = 0; b < s.outputs.size(); ++b) {
        os << "  out" << b << " [shape=point];\n";
        os << "  n" << s.mu[b] << " -> out" << b << " [label=\"" << dot_escape(s.outputs[b]) << "\"];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace detail

inline std::string to_dot(const CircuitShape& s) {
    return detail::to_dot(s, [&](int v) { return s.node_names[v]; });
}

inline std::string to_dot(const ConceptLattice& lat) {
    return detail::to_dot(lat.shape(), [&](int v) { return lat.describe(v); });
}

}  // namespace ucd
