#pragma once

// Named unitaries and circuits: CNOT, SWAP, the two-CNOT unitary U3 with
// causal structure C3, a qubit-routing circuit on Λ(C3), the counterexample
// U3 ⊗ V for relations containing C3, and the sector obstruction it carries.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "causal.hpp"
#include "decomposer.hpp"
#include "lattice.hpp"
#include "operator_algebra.hpp"
#include "relation.hpp"

namespace ucd {

inline TensorSpace qubits(const std::vector<std::string>& labels) {
    std::vector<Leg> legs;
    for (const auto& l : labels) legs.push_back({l, 2});
    return TensorSpace(legs);
}

// Permutation matrix sending basis state x to f(x).
template <class F>
Matrix basis_permutation(long dim, F f) {
    Matrix m = Matrix::Zero(dim, dim);
    for (long x = 0; x < dim; ++x) m(f(x), x) = 1.0;
    return m;
}

// Output qubit k carries input qubit source[k]; qubit 0 is most significant.
inline Matrix qubit_permutation(const std::vector<int>& source) {
    const int n = static_cast<int>(source.size());
    return basis_permutation(1L << n, [&](long x) {
        long y = 0;
        for (int k = 0; k < n; ++k) y |= ((x >> (n - 1 - source[k])) & 1L) << (n - 1 - k);
        return y;
    });
}

// Control a1, target a2.
inline UnitaryChannel cnot() {
    Matrix m = basis_permutation(4, [](long x) { return (x & 2) ? x ^ 1 : x; });
    return {m, qubits({"a1", "a2"}), qubits({"b1", "b2"})};
}

inline UnitaryChannel swap_channel() {
    return {qubit_permutation({1, 0}), qubits({"a1", "a2"}), qubits({"b1", "b2"})};
}

inline UnitaryChannel identity_channel(const std::vector<std::string>& inputs, const std::vector<std::string>& outputs,
                                       const std::vector<int>& dims) {
    std::vector<Leg> in, out;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        in.push_back({inputs.at(i), dims[i]});
        out.push_back({outputs.at(i), dims[i]});
    }
    const long d = product(dims);
    return {Matrix::Identity(d, d), TensorSpace(in), TensorSpace(out)};
}

// (x1, x2, x3) ↦ (x1 ⊕ x2, x2, x3 ⊕ x2).
inline UnitaryChannel u3() {
    Matrix m = basis_permutation(8, [](long x) {
        const long x2 = (x >> 1) & 1;
        return x ^ (x2 << 2) ^ x2;
    });
    return {m, qubits({"a1", "a2", "a3"}), qubits({"b1", "b2", "b3"})};
}

inline Relation c3_relation() {
    return Relation({"a1", "a2", "a3"}, {"b1", "b2", "b3"},
                    {{"a1", "b1"}, {"a1", "b2"}, {"a2", "b1"}, {"a2", "b2"}, {"a2", "b3"}, {"a3", "b2"}, {"a3", "b3"}});
}

// CNOT(2→1) on a1 a2, then CNOT(2→3) on the carried qubit 2 and a3. Its
// shape has the path a1 → b3, so the connectivity is not contained in C3.
inline std::pair<Circuit, UnitaryChannel> two_cnot_circuit() {
    Circuit c;
    c.shape.inputs = {"a1", "a2", "a3"};
    c.shape.outputs = {"b1", "b2", "b3"};
    c.shape.node_names = {"cnot21", "cnot23"};
    c.shape.covers = {{0, 1}};
    c.shape.lambda = {0, 0, 1};
    c.shape.mu = {0, 1, 1};
    c.shape.finalize();
    c.input_dims = {2, 2, 2};
    c.output_dims = {2, 2, 2};
    c.wire_dims[{0, 1}] = 2;
    // Node 0: in [a1, a2] → out [wire (qubit 2), b1]. Node 1: in [a3, wire] → out [b2, b3].
    Matrix g0 = basis_permutation(4, [](long x) {
        const long x1 = (x >> 1) & 1, x2 = x & 1;
        return (x2 << 1) | (x1 ^ x2);
    });
    Matrix g1 = basis_permutation(4, [](long x) {
        const long x3 = (x >> 1) & 1, x2 = x & 1;
        return (x2 << 1) | (x3 ^ x2);
    });
    c.gates = {g0, g1};
    UnitaryChannel u = compose(c);
    return {std::move(c), std::move(u)};
}

// Seven qubits routed through Λ(C3) by identity-like gates: a1 = (y1→b1,
// y2→b2), a2 = (x1→b1, x2→b2, x3→b3), a3 = (z2→b2, z3→b3); outputs
// b1 = (y1, x1), b2 = (y2, x2, z2), b3 = (x3, z3). The causal structure is C3.
inline std::pair<Circuit, UnitaryChannel> loose_wires_c3() {
    ConceptLattice lat(c3_relation());
    Circuit c;
    c.shape = lat.shape();
    c.input_dims = {4, 8, 4};
    c.output_dims = {4, 8, 4};
    c.gates.assign(lat.size(), Matrix());
    const int p = lat.lambda("a2"), q = lat.lambda("a1"), r = lat.lambda("a3"), s = lat.mu("b2");
    c.wire_dims[{p, q}] = 4;  // x1 x2
    c.wire_dims[{p, r}] = 2;  // x3
    c.wire_dims[{q, s}] = 4;  // y2 x2
    c.wire_dims[{r, s}] = 2;  // z2
    c.gates[p] = qubit_permutation({0, 1, 2});
    // q: in [a1 (y1 y2), wire (x1 x2)] → out [wire (y2 x2), b1 (y1 x1)].
    c.gates[q] = qubit_permutation({1, 3, 0, 2});
    // r: in [a3 (z2 z3), wire (x3)] → out [wire (z2), b3 (x3 z3)].
    c.gates[r] = qubit_permutation({0, 2, 1});
    c.gates[s] = qubit_permutation({0, 1, 2});
    UnitaryChannel u = compose(c);
    return {std::move(c), std::move(u)};
}

// ---------------------------------------------------------------------------
// Regrouping legs into super-legs.

struct Grouping {
    // (new label, member labels in order); an empty member list is a
    // one-dimensional leg.
    std::vector<std::pair<std::string, std::vector<std::string>>> inputs, outputs;
};

namespace detail {

inline std::pair<std::vector<int>, TensorSpace> group_space(
    const TensorSpace& fine, const std::vector<std::pair<std::string, std::vector<std::string>>>& groups) {
    std::vector<int> order;
    std::vector<Leg> legs;
    for (const auto& [label, members] : groups) {
        int d = 1;
        for (const auto& m : members) {
            const int i = fine.index_of(m);
            if (std::find(order.begin(), order.end(), i) != order.end())
                throw std::invalid_argument("leg '" + m + "' is in two groups");
            order.push_back(i);
            d *= fine.leg(i).dim;
        }
        legs.push_back({label, d});
    }
    if (order.size() != fine.size()) throw std::invalid_argument("grouping does not cover every leg");
    return {order, TensorSpace(legs)};
}

}  // namespace detail

inline UnitaryChannel apply_grouping(const UnitaryChannel& fine, const Grouping& g) {
    auto [in_order, in] = detail::group_space(fine.in_space, g.inputs);
    auto [out_order, out] = detail::group_space(fine.out_space, g.outputs);
    Matrix m = reorder_cols(reorder_rows(fine.matrix, fine.out_space.dims(), out_order), fine.in_space.dims(), in_order);
    return {m, in, out};
}

// ---------------------------------------------------------------------------
// U3 ⊗ V for a relation G containing C3.

inline std::string bar(const std::string& label) { return "~" + label; }

struct Counterexample {
    UnitaryChannel fine;     // legs ~a1 ~a2 ~a3 (U3) followed by V's legs
    UnitaryChannel grouped;  // legs of G; witness legs are (~x, x)
    Grouping grouping;
    C3Witness witness;
    Relation structure;  // causal structure of `grouped`
    int attempts = 0;    // random companions tried
    bool hint_used = false;
    bool structure_from_components = false;  // too large for the direct test
};

namespace detail {

inline bool same_relation(const Relation& r, const Relation& g) {
    return relabel_order(r, g.inputs(), g.outputs()) == g;
}

}  // namespace detail

// V is the hint when its causal structure equals G, otherwise the first of
// 32 seeded random circuits on Λ(G) whose causal structure equals G.
inline Counterexample build_counterexample(const Relation& g, std::uint64_t seed = 0,
                                           const std::optional<UnitaryChannel>& hint = std::nullopt,
                                           const DimSpec& dims = {}) {
    const auto c3 = check_c3ep(g);
    if (!c3.witness) throw std::invalid_argument("relation has no C3 restriction");
    const C3Witness w = *c3.witness;
    Counterexample ce;
    ce.witness = w;
    std::optional<UnitaryChannel> v;
    if (hint && detail::same_relation(causal_structure(*hint), g)) {
        v = reorder_channel(*hint, g.inputs(), g.outputs());
        ce.hint_used = true;
    }
    for (int k = 0; !v && k < 32; ++k) {
        ++ce.attempts;
        auto candidate = random_circuit_unitary(g, dims, seed + static_cast<std::uint64_t>(k)).second;
        if (detail::same_relation(causal_structure(candidate), g)) v = candidate;
    }
    if (!v) throw NumericalError("no companion unitary with causal structure G after 32 attempts");

    UnitaryChannel bar_u3 = u3();
    bar_u3.in_space = qubits({bar(w.a1), bar(w.a2), bar(w.a3)});
    bar_u3.out_space = qubits({bar(w.b1), bar(w.b2), bar(w.b3)});
    ce.fine = tensor(bar_u3, *v);
    for (const auto& a : g.inputs()) {
        const bool in_witness = a == w.a1 || a == w.a2 || a == w.a3;
        ce.grouping.inputs.push_back({a, in_witness ? std::vector<std::string>{bar(a), a} : std::vector<std::string>{a}});
    }
    for (const auto& b : g.outputs()) {
        const bool in_witness = b == w.b1 || b == w.b2 || b == w.b3;
        ce.grouping.outputs.push_back({b, in_witness ? std::vector<std::string>{bar(b), b} : std::vector<std::string>{b}});
    }
    ce.grouped = apply_grouping(ce.fine, ce.grouping);
    if (ce.grouped.dim() <= max_ambient_dim) {
        ce.structure = causal_structure(ce.grouped);
    } else {
        // Causal structures of tensor products are disjoint unions, and a
        // grouped leg influences a grouped leg iff some members do.
        ce.structure_from_components = true;
        ce.structure = g;
        const Relation s3 = causal_structure(bar_u3);
        for (const auto& [a, b] : s3.pairs()) ce.structure.add(g.input_index(a.substr(1)), g.output_index(b.substr(1)));
    }
    if (!detail::same_relation(ce.structure, g))
        throw NumericalError("counterexample does not have causal structure G");
    return ce;
}

// ---------------------------------------------------------------------------
// Sector obstruction at the bottom node of the four-party regrouping.

struct Parties {
    std::vector<std::string> p1, p2, p4, p3;  // input members
    std::vector<std::string> q1, q2, q4, q3;  // output members
};

struct ObstructionWitness {
    UnitaryChannel regrouped;  // legs P1 P2 P4 P3 → Q1 Q2 Q4 Q3
    Relation constraint;       // C3'
    std::string node;          // the bottom node of Λ(C3')
    SectorDecomposition sectors;
    std::string reason;
};

inline Relation c3_prime_relation() {
    return Relation({"P1", "P2", "P4", "P3"}, {"Q1", "Q2", "Q4", "Q3"},
                    {{"P1", "Q1"}, {"P1", "Q2"}, {"P1", "Q4"}, {"P2", "Q1"}, {"P2", "Q2"}, {"P2", "Q4"},
                     {"P2", "Q3"}, {"P4", "Q1"}, {"P4", "Q2"}, {"P4", "Q4"}, {"P4", "Q3"}, {"P3", "Q2"},
                     {"P3", "Q4"}, {"P3", "Q3"}});
}

// The bottom node ⟨{P2,P4}, all⟩ of Λ(C3') has two upper covers; their
// exclusive outputs Q1 and Q3 have commuting Heisenberg images supported on
// (P2 P4) ⊗ P1 and (P2 P4) ⊗ P3. A unitary gate at that node would need
// these to factorize the local system; the lemma returns sectors instead.
inline ObstructionWitness obstruction_witness(const UnitaryChannel& fine, const Parties& parties,
                                              std::uint64_t seed = 0) {
    Grouping grouping;
    grouping.inputs = {{"P1", parties.p1}, {"P2", parties.p2}, {"P4", parties.p4}, {"P3", parties.p3}};
    grouping.outputs = {{"Q1", parties.q1}, {"Q2", parties.q2}, {"Q4", parties.q4}, {"Q3", parties.q3}};
    ObstructionWitness ow{apply_grouping(fine, grouping), c3_prime_relation(), {}, {}, {}};
    check_ambient(ow.regrouped.dim());
    const Relation& g = ow.constraint;
    const ConceptLattice lat(g);
    const auto& shape = lat.shape();
    int v = 0;
    while (v < static_cast<int>(lat.size()) && (lat.node(v).alpha == 0 || shape.upper_covers(v).size() < 2)) ++v;
    if (v == static_cast<int>(lat.size())) throw std::logic_error("no interaction node in the constraint's lattice");
    ow.node = lat.describe(v);
    const auto up = shape.upper_covers(v);
    const Mask beta1 = lat.node(up[0]).beta, beta2 = lat.node(up[1]).beta;
    const Mask excl[2] = {beta1 & ~beta2, beta2 & ~beta1};

    std::vector<int> a_legs;
    for (int a : mask_indices(lat.node(v).alpha)) a_legs.push_back(a);
    std::vector<std::vector<int>> x_legs;
    std::vector<MatrixSubalgebra> bs;
    for (int k = 0; k < 2; ++k) {
        x_legs.push_back(mask_indices(g.all_parents(lat.node(up[k]).beta) & ~lat.node(v).alpha));
        bs.push_back(heisenberg_image(ow.regrouped, g.output_labels(excl[k])));
    }
    auto result = algebraic_lemma(ow.regrouped.in_space, a_legs, x_legs, bs, seed);
    auto* ob = std::get_if<SectorObstruction>(&result);
    if (!ob) throw NumericalError("the interaction node factorized; expected a sector obstruction");
    if (ob->sectors.count() < 2) throw NumericalError("obstruction has a single sector");
    ow.sectors = ob->sectors;
    ow.reason = ob->reason;
    return ow;
}

// Parties for U3 itself, or any channel on G's labels: the witness legs
// play the roles of Ā1 Ā2 Ā3, the remaining legs form Â4.
inline ObstructionWitness obstruction_witness(const UnitaryChannel& u, const Relation& g, std::uint64_t seed = 0) {
    const auto c3 = check_c3ep(g);
    if (!c3.witness) throw std::invalid_argument("relation has no C3 restriction");
    const auto& w = *c3.witness;
    Parties p{{w.a1}, {w.a2}, {}, {w.a3}, {w.b1}, {w.b2}, {}, {w.b3}};
    for (const auto& a : g.inputs())
        if (a != w.a1 && a != w.a2 && a != w.a3) p.p4.push_back(a);
    for (const auto& b : g.outputs())
        if (b != w.b1 && b != w.b2 && b != w.b3) p.q4.push_back(b);
    return obstruction_witness(u, p, seed);
}

// P1 = (Ā1 A1), P2 = Ā2, P4 = A2 and all other inputs of V, P3 = (Ā3 A3).
inline ObstructionWitness obstruction_witness(const Counterexample& ce, std::uint64_t seed = 0) {
    const auto& w = ce.witness;
    Parties p{{bar(w.a1), w.a1}, {bar(w.a2)}, {w.a2}, {bar(w.a3), w.a3},
              {bar(w.b1), w.b1}, {bar(w.b2)}, {w.b2}, {bar(w.b3), w.b3}};
    for (const auto& [label, members] : ce.grouping.inputs)
        if (label != w.a1 && label != w.a2 && label != w.a3) p.p4.push_back(label);
    for (const auto& [label, members] : ce.grouping.outputs)
        if (label != w.b1 && label != w.b2 && label != w.b3) p.q4.push_back(label);
    return obstruction_witness(ce.fine, p, seed);
}

}  // namespace ucd
