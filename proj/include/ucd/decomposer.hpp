#pragma once

// Unitary circuits on circuit shapes: composition, verification, seeded
// random instances, and synthesis of a circuit on Λ(G) from a unitary whose
// causal structure is contained in a C3-free relation G.
//
// Gate leg order at node v: inputs attached at v (in label-list order), then
// incoming wires by source node index; outgoing wires by target node index,
// then outputs attached at v. Flat indices are row-major, first leg most
// significant.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "causal.hpp"
#include "lattice.hpp"
#include "linalg.hpp"
#include "operator_algebra.hpp"
#include "relation.hpp"

namespace ucd {

inline constexpr const char* gate_leg_order =
    "gate legs: inputs at the node in label-list order, then incoming wires by source node index; "
    "outgoing wires by target node index, then outputs at the node in label-list order; "
    "row-major, first leg most significant";

struct LiveLeg {
    std::string key;
    int dim = 1;
    friend bool operator==(const LiveLeg&, const LiveLeg&) = default;
};

inline std::string input_key(const std::string& a) { return "in:" + a; }
inline std::string output_key(const std::string& b) { return "out:" + b; }
inline std::string wire_key(int v, int w) { return "w:" + std::to_string(v) + "->" + std::to_string(w); }

struct Circuit {
    CircuitShape shape;
    std::vector<int> input_dims, output_dims;  // per shape input/output position
    std::map<std::pair<int, int>, int> wire_dims;
    std::vector<Matrix> gates;  // per node

    int wire_dim(int v, int w) const {
        auto it = wire_dims.find({v, w});
        if (it == wire_dims.end()) throw ShapeError("no dimension for wire " + wire_key(v, w));
        return it->second;
    }
    std::vector<LiveLeg> gate_inputs(int v) const {
        std::vector<LiveLeg> out;
        for (int a : shape.inputs_at(v)) out.push_back({input_key(shape.inputs[a]), input_dims[a]});
        for (int u : shape.lower_covers(v)) out.push_back({wire_key(u, v), wire_dim(u, v)});
        return out;
    }
    std::vector<LiveLeg> gate_outputs(int v) const {
        std::vector<LiveLeg> out;
        for (int w : shape.upper_covers(v)) out.push_back({wire_key(v, w), wire_dim(v, w)});
        for (int b : shape.outputs_at(v)) out.push_back({output_key(shape.outputs[b]), output_dims[b]});
        return out;
    }
    long input_dim() const { return product(input_dims); }
    long output_dim() const { return product(output_dims); }
    TensorSpace in_space() const { return space(shape.inputs, input_dims); }
    TensorSpace out_space() const { return space(shape.outputs, output_dims); }

private:
    static TensorSpace space(const std::vector<std::string>& labels, const std::vector<int>& dims) {
        std::vector<Leg> legs;
        for (std::size_t i = 0; i < labels.size(); ++i) legs.push_back({labels[i], dims[i]});
        return TensorSpace(legs);
    }
};

inline long legs_dim(const std::vector<LiveLeg>& legs) {
    long d = 1;
    for (const auto& l : legs) d *= l.dim;
    return d;
}

inline std::vector<int> legs_dims(const std::vector<LiveLeg>& legs) {
    std::vector<int> d;
    for (const auto& l : legs) d.push_back(l.dim);
    return d;
}

// Dimension consistency: every gate square with the sizes its legs demand.
inline void check_circuit(const Circuit& c) {
    const auto& s = c.shape;
    if (c.input_dims.size() != s.inputs.size() || c.output_dims.size() != s.outputs.size())
        throw ShapeError("leg dimensions do not match the shape's labels");
    if (c.gates.size() != s.num_nodes()) throw ShapeError("one gate per node is required");
    for (auto [v, w] : s.covers)
        if (c.wire_dim(v, w) < 1) throw ShapeError("wire " + wire_key(v, w) + " has dimension < 1");
    for (int v = 0; v < static_cast<int>(s.num_nodes()); ++v) {
        const long din = legs_dim(c.gate_inputs(v)), dout = legs_dim(c.gate_outputs(v));
        if (din != dout)
            throw ShapeError("gate at node " + s.node_names[v] + " maps dimension " + std::to_string(din) + " to " +
                             std::to_string(dout));
        if (c.gates[v].rows() != dout || c.gates[v].cols() != din)
            throw ShapeError("gate at node " + s.node_names[v] + " has size " + std::to_string(c.gates[v].rows()) +
                             "x" + std::to_string(c.gates[v].cols()) + ", expected " + std::to_string(din));
    }
    if (c.input_dim() != c.output_dim()) throw ShapeError("total input and output dimensions differ");
}

struct PartialComposition {
    Matrix map;                 // from the circuit's inputs to the live legs
    std::vector<LiveLeg> legs;  // live legs after the included gates
};

// Applies the gates of the included nodes (a downward-closed set) in index
// order, leaving every other leg untouched.
inline PartialComposition compose_partial(const Circuit& c, const std::vector<bool>& include) {
    std::vector<LiveLeg> legs;
    for (std::size_t a = 0; a < c.shape.inputs.size(); ++a) legs.push_back({input_key(c.shape.inputs[a]), c.input_dims[a]});
    const long d = c.input_dim();
    Matrix x = Matrix::Identity(d, d);
    for (int v = 0; v < static_cast<int>(c.shape.num_nodes()); ++v) {
        if (!include[v]) continue;
        auto gin = c.gate_inputs(v);
        std::vector<int> pos;
        for (const auto& g : gin) {
            auto it = std::find(legs.begin(), legs.end(), g);
            if (it == legs.end()) throw ShapeError("gate at node " + c.shape.node_names[v] + " needs leg " + g.key);
            pos.push_back(static_cast<int>(it - legs.begin()));
        }
        std::vector<int> rest = complement(legs.size(), pos);
        std::vector<int> order = rest;
        order.insert(order.end(), pos.begin(), pos.end());
        x = reorder_rows(x, legs_dims(legs), order);
        // Gate legs are now the fastest digits: (1 ⊗ G) x = G · x viewed as
        // din × (rest · columns).
        const long din = legs_dim(gin);
        Eigen::Map<Matrix> view(x.data(), din, x.size() / din);
        view = c.gates[v] * view;
        std::vector<LiveLeg> next;
        for (int r : rest) next.push_back(legs[r]);
        for (const auto& g : c.gate_outputs(v)) next.push_back(g);
        legs = std::move(next);
    }
    return {x, legs};
}

inline UnitaryChannel compose(const Circuit& c) {
    check_circuit(c);
    auto pc = compose_partial(c, std::vector<bool>(c.shape.num_nodes(), true));
    std::vector<int> order;
    for (const auto& b : c.shape.outputs) {
        auto it = std::find_if(pc.legs.begin(), pc.legs.end(), [&](const LiveLeg& l) { return l.key == output_key(b); });
        order.push_back(static_cast<int>(it - pc.legs.begin()));
    }
    if (order.size() != pc.legs.size()) throw ShapeError("composition left dangling wires");
    return {reorder_rows(pc.map, legs_dims(pc.legs), order), c.in_space(), c.out_space()};
}

// Same pairs over the given label lists.
inline Relation relabel_order(const Relation& r, const std::vector<std::string>& inputs,
                              const std::vector<std::string>& outputs) {
    return Relation(inputs, outputs, r.pairs());
}

// Connectivity counting only wires and legs of dimension > 1; these carry
// the only paths along which influence is possible.
inline Relation effective_connectivity(const Circuit& c) {
    const auto& s = c.shape;
    const int n = static_cast<int>(s.num_nodes());
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (int v = n - 1; v >= 0; --v) {
        reach[v][v] = true;
        for (int w : s.upper_covers(v))
            if (c.wire_dim(v, w) > 1)
                for (int x = 0; x < n; ++x)
                    if (reach[w][x]) reach[v][x] = true;
    }
    Relation g(s.inputs, s.outputs);
    for (std::size_t a = 0; a < s.inputs.size(); ++a)
        for (std::size_t b = 0; b < s.outputs.size(); ++b)
            if (c.input_dims[a] > 1 && c.output_dims[b] > 1 && reach[s.lambda[a]][s.mu[b]])
                g.add(static_cast<int>(a), static_cast<int>(b));
    return g;
}

// ---------------------------------------------------------------------------
// Dimensions and random circuits.

struct DimSpec {
    int leg = 2;   // default input/output leg dimension
    int wire = 2;  // default dimension of live wires
};

// Fills in leg and wire dimensions so that every gate is square. Wires that
// no input reaches or that reach no output, and legs with no path, get
// dimension 1. Where the defaults do not balance, the first input leg at the
// node is raised; an excess goes to the first output leg, else to the first
// outgoing wire.
inline Circuit derive_dimensions(const CircuitShape& s, const DimSpec& spec = {}) {
    const int n = static_cast<int>(s.num_nodes());
    std::vector<bool> fed(n, false), drains(n, false);
    for (int v : s.lambda) fed[v] = true;
    for (int v = 0; v < n; ++v)
        for (int u : s.lower_covers(v))
            if (fed[u]) fed[v] = true;
    for (int v : s.mu) drains[v] = true;
    for (int v = n - 1; v >= 0; --v)
        for (int w : s.upper_covers(v))
            if (drains[w]) drains[v] = true;

    Circuit c;
    c.shape = s;
    c.input_dims.assign(s.inputs.size(), 1);
    c.output_dims.assign(s.outputs.size(), 1);
    c.gates.assign(n, Matrix());
    for (std::size_t a = 0; a < s.inputs.size(); ++a)
        if (drains[s.lambda[a]]) c.input_dims[a] = spec.leg;
    for (std::size_t b = 0; b < s.outputs.size(); ++b)
        if (fed[s.mu[b]]) c.output_dims[b] = spec.leg;
    for (auto [v, w] : s.covers) c.wire_dims[{v, w}] = fed[v] && drains[w] ? spec.wire : 1;

    for (int v = 0; v < n; ++v) {
        std::vector<int*> ins, outs;
        for (int a : s.inputs_at(v))
            if (c.input_dims[a] > 1) ins.push_back(&c.input_dims[a]);
        for (int b : s.outputs_at(v))
            if (c.output_dims[b] > 1) outs.push_back(&c.output_dims[b]);
        for (int w : s.upper_covers(v))
            if (c.wire_dims[{v, w}] > 1) outs.push_back(&c.wire_dims[{v, w}]);
        long win = 1;
        for (int u : s.lower_covers(v)) win *= c.wire_dims[{u, v}];
        for (int iter = 0; iter < 8; ++iter) {
            long din = win, dout = 1;
            for (int* p : ins) din *= *p;
            for (int* p : outs) dout *= *p;
            if (din == dout) break;
            if (din % dout == 0) {
                if (outs.empty()) throw ShapeError("node " + s.node_names[v] + " has inputs but nowhere to send them");
                *outs.front() *= static_cast<int>(din / dout);
            } else if (!ins.empty()) {
                *ins.front() *= static_cast<int>(dout / std::gcd(din, dout));
            } else {
                long k = dout / std::gcd(din, dout);
                for (int* p : outs) {
                    const long g = std::gcd<long>(*p, k);
                    *p /= static_cast<int>(g);
                    k /= g;
                }
                if (k != 1) throw ShapeError("cannot balance dimensions at node " + s.node_names[v]);
            }
        }
        long din = win, dout = 1;
        for (int* p : ins) din *= *p;
        for (int* p : outs) dout *= *p;
        if (din != dout) throw ShapeError("cannot balance dimensions at node " + s.node_names[v]);
    }
    return c;
}

inline void fill_random_gates(Circuit& c, std::uint64_t seed) {
    Rng rng(seed);
    for (int v = 0; v < static_cast<int>(c.shape.num_nodes()); ++v)
        c.gates[v] = haar_unitary(legs_dim(c.gate_inputs(v)), rng);
}

// Haar-random gates on Λ(G); the composition has causal structure ⊆ G.
inline std::pair<Circuit, UnitaryChannel> random_circuit_unitary(const Relation& g, const DimSpec& spec = {},
                                                                 std::uint64_t seed = 0) {
    ConceptLattice lat(g);
    Circuit c = derive_dimensions(lat.shape(), spec);
    check_ambient(c.input_dim());
    fill_random_gates(c, seed);
    UnitaryChannel u = compose(c);
    return {std::move(c), std::move(u)};
}

// ---------------------------------------------------------------------------
// Reports.

struct NodeDiagnostics {
    int node = 0;
    std::string name;
    long local_dim = 1;
    std::vector<std::string> local_legs;
    std::vector<std::pair<std::string, int>> targets;  // realized target legs
    double support_residual = 0.0;    // trivial action outside the local and X legs
    double inclusion_residual = 0.0;  // wire algebra inside the conjugated output algebra
    double alignment_residual = 0.0;  // output factor matched to its leg
};

struct Success {};
struct RefusedC3EP {
    C3Witness witness;
};
struct RefusedCausal {
    std::string a, b;
};
struct Obstruction {
    SectorDecomposition sectors;
    int node = 0;
    std::string reason;
};
struct VerificationFailed {
    std::vector<std::string> failures;
};

using DecompositionStatus = std::variant<Success, RefusedC3EP, RefusedCausal, Obstruction, VerificationFailed>;

inline std::string status_name(const DecompositionStatus& s) {
    static const char* names[] = {"Success", "RefusedC3EP", "RefusedCausal", "Obstruction", "VerificationFailed"};
    return names[s.index()];
}

struct DecompositionReport {
    DecompositionStatus status = Success{};
    double recomposition_residual = std::numeric_limits<double>::quiet_NaN();
    double gate_unitarity_residual = 0.0;
    bool connectivity_ok = false;
    bool faithful = false;  // connectivity equals the causal structure
    std::optional<Relation> connectivity;
    std::optional<Relation> causal;
    std::vector<NodeDiagnostics> nodes;

    bool success() const { return std::holds_alternative<Success>(status); }
};

struct VerifyOptions {
    double tol = 1e-8;
    bool pad_connectivity = false;
};

// Gate unitarity, recomposition up to global phase, connectivity ⊆ G, and
// whether the connectivity equals the causal structure of U.
inline DecompositionReport verify_decomposition(const UnitaryChannel& u, const Circuit& c, const Relation& g,
                                                const VerifyOptions& opt = {}) {
    DecompositionReport r;
    std::vector<std::string> failures;
    try {
        check_circuit(c);
    } catch (const ShapeError& e) {
        r.status = VerificationFailed{{e.what()}};
        return r;
    }
    for (std::size_t v = 0; v < c.gates.size(); ++v)
        r.gate_unitarity_residual = std::max(r.gate_unitarity_residual, unitarity_residual(c.gates[v]));
    if (r.gate_unitarity_residual > tol::unitary) failures.push_back("a gate is not unitary");

    const UnitaryChannel composed = compose(c);
    const UnitaryChannel target = reorder_channel(u, c.shape.inputs, c.shape.outputs);
    if (!(composed.in_space == target.in_space) || !(composed.out_space == target.out_space)) {
        failures.push_back("circuit legs do not match the unitary's legs");
    } else {
        r.recomposition_residual = phase_residual(composed.matrix, target.matrix);
        if (!(r.recomposition_residual < opt.tol)) failures.push_back("recomposition residual above tolerance");
    }

    Relation conn = opt.pad_connectivity ? connectivity(c.shape) : effective_connectivity(c);
    Relation in_g = relabel_order(conn, g.inputs(), g.outputs());
    r.connectivity_ok = in_g.subset_of(g);
    if (!r.connectivity_ok) failures.push_back("connectivity is not contained in the relation");
    r.connectivity = in_g;
    if (failures.empty() || r.recomposition_residual < opt.tol) {
        r.causal = relabel_order(causal_structure(target), g.inputs(), g.outputs());
        r.faithful = *r.causal == in_g;
    }
    if (!failures.empty()) r.status = VerificationFailed{failures};
    return r;
}

// ---------------------------------------------------------------------------
// Synthesis.

struct DecomposeOptions {
    double tol = 1e-8;
    std::uint64_t seed = 0;
    bool pad_connectivity = false;
};

struct Decomposition {
    std::optional<Circuit> circuit;
    DecompositionReport report;
};

namespace detail {

inline int leg_position(const std::vector<LiveLeg>& legs, const std::string& key) {
    for (std::size_t i = 0; i < legs.size(); ++i)
        if (legs[i].key == key) return static_cast<int>(i);
    throw NumericalError("leg " + key + " is not live");
}

struct Target {
    std::string key;
    Mask beta = 0;
    std::vector<int> x;  // live positions of the untouched inputs it may act on
    int output = -1;     // output position for output targets
};

// Images of the output matrix units under the gate, on the target's Z leg.
inline std::vector<std::vector<Matrix>> leg_images(const std::vector<Matrix>& blocks, const Matrix& frame_to_leg,
                                                   const std::vector<int>& dims, const std::vector<int>& keep,
                                                   const std::vector<int>& zdims, int k) {
    const long dk = product(permuted(dims, keep));
    const double rest = static_cast<double>(product(dims) / dk);
    const double zrest = static_cast<double>(product(zdims) / zdims[k]);
    std::vector<std::vector<Matrix>> f(blocks.size(), std::vector<Matrix>(blocks.size()));
    for (std::size_t i = 0; i < blocks.size(); ++i)
        for (std::size_t j = 0; j < blocks.size(); ++j) {
            Matrix y = partial_trace(blocks[i] * blocks[j].adjoint(), dims, keep) / rest;
            Matrix z = frame_to_leg * y * frame_to_leg.adjoint();
            f[i][j] = partial_trace(z, zdims, {k}) / zrest;
        }
    return f;
}

}  // namespace detail

inline Decomposition decompose(const UnitaryChannel& channel, const Relation& g, const DecomposeOptions& opt = {}) {
    Decomposition out;
    auto& report = out.report;
    {
        auto ins = channel.input_labels(), outs = channel.output_labels();
        auto gi = g.inputs(), go = g.outputs();
        std::sort(ins.begin(), ins.end());
        std::sort(outs.begin(), outs.end());
        std::sort(gi.begin(), gi.end());
        std::sort(go.begin(), go.end());
        if (ins != gi || outs != go) throw std::invalid_argument("the unitary's labels do not match the relation");
    }
    const UnitaryChannel u = reorder_channel(channel, g.inputs(), g.outputs());
    if (auto c3 = check_c3ep(g); c3.witness) {
        report.status = RefusedC3EP{*c3.witness};
        return out;
    }
    check_ambient(u.dim());
    const Relation cs = causal_structure(u);
    for (const auto& [a, b] : cs.pairs())
        if (!g.related(g.input_index(a), g.output_index(b))) {
            report.status = RefusedCausal{a, b};
            return out;
        }

    const ConceptLattice lat(g);
    const CircuitShape& shape = lat.shape();
    const int n = static_cast<int>(lat.size());
    Circuit c;
    c.shape = shape;
    c.input_dims = u.in_space.dims();
    c.output_dims = u.out_space.dims();
    c.gates.assign(n, Matrix());
    const auto out_dims = u.out_space.dims();
    const Matrix udag = u.matrix.adjoint();
    Rng rng(opt.seed);

    for (int v = 0; v < n; ++v) {
        NodeDiagnostics diag;
        diag.node = v;
        diag.name = lat.describe(v);
        std::vector<bool> below(n);
        for (int x = 0; x < n; ++x) below[x] = shape.lt(x, v);
        const PartialComposition pc = compose_partial(c, below);
        const Matrix frame = pc.map * udag;  // output space → live legs
        const auto live_dims = legs_dims(pc.legs);

        std::vector<int> local;
        for (int a : shape.inputs_at(v)) local.push_back(detail::leg_position(pc.legs, input_key(g.inputs()[a])));
        for (int x : shape.lower_covers(v)) local.push_back(detail::leg_position(pc.legs, wire_key(x, v)));
        for (int p : local) diag.local_legs.push_back(pc.legs[p].key);

        std::vector<detail::Target> targets;
        const Mask alpha_v = lat.node(v).alpha;
        for (int w : shape.upper_covers(v)) {
            detail::Target t{wire_key(v, w), lat.node(w).beta, {}, -1};
            for (int a : mask_indices(g.all_parents(t.beta) & ~alpha_v))
                t.x.push_back(detail::leg_position(pc.legs, input_key(g.inputs()[a])));
            targets.push_back(t);
        }
        for (int b : shape.outputs_at(v)) targets.push_back({output_key(g.outputs()[b]), Mask{1} << b, {}, b});

        long dl = 1;
        for (int p : local) dl *= live_dims[p];
        diag.local_dim = dl;
        std::vector<int> zdims;
        Matrix gate;

        if (dl == 1) {
            for (const auto& t : targets) {
                if (t.output >= 0 && out_dims[t.output] != 1)
                    throw NumericalError("node " + diag.name + " has no local system but must emit " + t.key);
                zdims.push_back(1);
            }
            gate = Matrix::Identity(1, 1);
        } else {
            std::vector<int> reduced = local;
            std::vector<std::vector<int>> x_legs;
            for (const auto& t : targets) {
                std::vector<int> xs;
                for (int p : t.x) {
                    xs.push_back(static_cast<int>(reduced.size()));
                    reduced.push_back(p);
                }
                x_legs.push_back(xs);
            }
            const auto rest = complement(pc.legs.size(), reduced);
            const double drest = static_cast<double>(product(live_dims) / product(permuted(live_dims, reduced)));
            std::vector<Leg> rlegs;
            for (int p : reduced) rlegs.push_back({pc.legs[p].key, pc.legs[p].dim});
            const TensorSpace ambient(rlegs);

            std::vector<MatrixSubalgebra> bs;
            for (const auto& t : targets) {
                auto full = conjugated_leg_basis(frame, out_dims, mask_indices(t.beta));
                diag.support_residual = std::max(diag.support_residual, support_defect(full, live_dims, rest, rng));
                MatrixSubalgebra b{ambient, {}};
                for (const auto& x : full) b.basis.push_back(partial_trace(x, live_dims, reduced) / std::sqrt(drest));
                bs.push_back(std::move(b));
            }
            if (diag.support_residual > opt.tol)
                throw NumericalError("node " + diag.name + ": a conjugated output algebra acts outside its legs "
                                     "(residual " + std::to_string(diag.support_residual) + ")");
            std::vector<int> a_legs(local.size());
            std::iota(a_legs.begin(), a_legs.end(), 0);
            LemmaResult lemma;
            try {
                lemma = algebraic_lemma(ambient, a_legs, x_legs, bs, rng());
            } catch (const AssumptionError& e) {
                throw NumericalError("node " + diag.name + ": " + e.what());
            }
            if (auto* ob = std::get_if<SectorObstruction>(&lemma)) {
                report.status = Obstruction{ob->sectors, v, ob->reason};
                report.nodes.push_back(diag);
                return out;
            }
            const auto& fact = std::get<LemmaFactorization>(lemma);
            zdims = fact.dims;
            gate = fact.iso.matrix;

            // Match each output factor to its leg's own matrix units.
            for (std::size_t k = 0; k < targets.size(); ++k) {
                const auto& t = targets[k];
                if (t.output < 0) continue;
                if (zdims[k] != out_dims[t.output])
                    throw NumericalError("node " + diag.name + ": output " + t.key + " realized with dimension " +
                                         std::to_string(zdims[k]));
                auto blocks = detail::column_blocks(frame, out_dims, {t.output});
                auto f = detail::leg_images(blocks, gate, live_dims, local, zdims, static_cast<int>(k));
                Matrix w = unitary_from_isomorphism(f, 1e-8);
                gate = embed(w.adjoint(), zdims, {static_cast<int>(k)}) * gate;
                auto check = detail::leg_images(blocks, gate, live_dims, local, zdims, static_cast<int>(k));
                for (std::size_t i = 0; i < check.size(); ++i)
                    for (std::size_t j = 0; j < check.size(); ++j)
                        diag.alignment_residual =
                            std::max(diag.alignment_residual,
                                     (check[i][j] - matrix_unit(zdims[k], static_cast<int>(i), static_cast<int>(j)))
                                         .norm());
            }
            // Each wire algebra lies in the conjugated algebra of its cover.
            for (std::size_t k = 0; k < targets.size(); ++k) {
                Matrix z = ginibre(zdims[k], zdims[k], rng);
                Matrix pulled = gate.adjoint() * embed(z, zdims, {static_cast<int>(k)}) * gate;
                diag.inclusion_residual = std::max(
                    diag.inclusion_residual, bs[k].membership_residual(embed(pulled, ambient.dims(), a_legs)));
            }
            if (diag.inclusion_residual > opt.tol || diag.alignment_residual > opt.tol)
                throw NumericalError("node " + diag.name + ": induction check failed (inclusion " +
                                     std::to_string(diag.inclusion_residual) + ", alignment " +
                                     std::to_string(diag.alignment_residual) + ")");
        }
        for (std::size_t k = 0; k < targets.size(); ++k) {
            diag.targets.emplace_back(targets[k].key, zdims[k]);
            if (targets[k].output < 0) c.wire_dims[{v, shape.upper_covers(v)[k]}] = zdims[k];
        }
        c.gates[v] = gate;
        report.nodes.push_back(diag);
    }

    // Residual automorphisms of the output legs, absorbed at μ(b).
    const Matrix composed = compose(c).matrix;
    const Matrix w_all = u.matrix * composed.adjoint();
    for (std::size_t b = 0; b < g.num_outputs(); ++b) {
        const int bi = static_cast<int>(b);
        auto blocks = detail::column_blocks(w_all, out_dims, {bi});
        const double rest = static_cast<double>(u.dim() / out_dims[b]);
        std::vector<std::vector<Matrix>> f(blocks.size(), std::vector<Matrix>(blocks.size()));
        for (std::size_t i = 0; i < blocks.size(); ++i)
            for (std::size_t j = 0; j < blocks.size(); ++j)
                f[i][j] = partial_trace(blocks[i] * blocks[j].adjoint(), out_dims, {bi}) / rest;
        Matrix wb = unitary_from_isomorphism(f, 1e-8);
        const int v = shape.mu[b];
        auto gout = c.gate_outputs(v);
        const int pos = detail::leg_position(gout, output_key(g.outputs()[b]));
        c.gates[v] = embed(wb, legs_dims(gout), {pos}) * c.gates[v];
    }
    for (auto& gate : c.gates) gate = normalize_phase_largest(gate);

    auto nodes = std::move(report.nodes);
    report = verify_decomposition(u, c, g, {opt.tol, opt.pad_connectivity});
    report.nodes = std::move(nodes);
    out.circuit = std::move(c);
    return out;
}

}  // namespace ucd
