import itertools

import numpy as np
import pytest

from conftest import direct_state, random_realizable_graph
from hdcluster.encoding import EncodingSpec, digit_table
from hdcluster.errors import CompilationError, ValidationError
from hdcluster.graph import (
    GraphState,
    check_two_photon_realizable,
    clock_matrix,
    compile_graph,
    dft_matrix,
    identity_term,
    kron_all,
    layout,
    make_graph,
    resolve_frame,
    shift_matrix,
    simulate_cluster,
    stabilizer_expectations,
    stabilizers,
    term_expectation,
    vertex_axes,
)


def _dense_stabilizer(g, k, frame, order):
    """``H^dag S_k H`` on framed vertices, built from explicit matrices."""
    d = g.d
    X, Z, F = shift_matrix(d), clock_matrix(d), dft_matrix(d)
    nb = g.neighbors(k)
    mats = []
    for v in order:
        m = X if v == k else np.linalg.matrix_power(Z, nb.get(v, 0))
        if v in frame:
            m = F.conj().T @ m @ F
        mats.append(m)
    return kron_all(mats)


def test_realizability_examples(g8):
    r = check_two_photon_realizable(g8)
    assert r.ok and r.matching == ((1, 8), (2, 7), (3, 6), (4, 5))
    tri = make_graph(2, [(1, 2), (2, 3), (1, 3)], [1, 2], [3])
    assert not check_two_photon_realizable(tri)
    star = make_graph(2, [(1, 2), (1, 3), (1, 4)], [1], [2, 3, 4])
    verdict = check_two_photon_realizable(star)
    assert not verdict and verdict.violations


def test_realizability_rejects_heavy_cross_edge():
    g = make_graph(3, [(1, 2, 2)], [1], [2])
    assert not check_two_photon_realizable(g)


def test_realizability_invariant_under_relabeling():
    rng = np.random.default_rng(5)
    for _ in range(50):
        g = random_realizable_graph(rng)
        assert check_two_photon_realizable(g)
        a, b = g.photon_vertices("A"), g.photon_vertices("B")
        mapping = dict(zip(a, rng.permutation(a).tolist())) | dict(zip(b, rng.permutation(b).tolist()))
        relabeled = make_graph(
            g.d, [(mapping[u], mapping[v], w) for u, v, w in g.edges], a, b
        )
        assert check_two_photon_realizable(relabeled)


def test_graph_validation():
    with pytest.raises(ValidationError):
        make_graph(2, [(1, 1)], [1], [2])
    with pytest.raises(ValidationError):
        make_graph(2, [(1, 2, 2)], [1], [2])
    with pytest.raises(ValidationError):
        GraphState(2, 2, frozenset({(1, 2, 1)}), {1: "A"})


def test_comb8_compilation(g8, spec8):
    circ = compile_graph(g8, spec8)
    q = digit_table(spec8)
    expected = np.where((q[:, 1] == 1) & (q[:, 2] == 1), np.pi, 0.0)
    assert np.allclose(circ.phases_A, expected)
    # framed qubits 1 and 4 are toggled by their non-framed neighbours 2 and 3
    toggled = q.copy()
    toggled[:, 0] ^= q[:, 1]
    toggled[:, 3] ^= q[:, 2]
    assert np.array_equal(circ.perm_A, toggled @ [8, 4, 2, 1])
    assert np.allclose(circ.phases_B, 0) and np.array_equal(circ.perm_B, np.arange(16))
    assert circ.pairing == ((1, 8), (2, 7), (3, 6), (4, 5))


def test_edgeless_intra_graph_compiles_to_nothing():
    g = make_graph(3, [(1, 3), (2, 4)], [1, 2], [3, 4])
    circ = compile_graph(g, EncodingSpec(3, 2))
    assert np.allclose(circ.phases_A, 0) and np.allclose(circ.phases_B, 0)
    assert np.array_equal(circ.perm_A, np.arange(9))
    assert np.array_equal(circ.perm_B, np.arange(9))


def test_qudit_chain_phases(g5, spec5):
    circ = compile_graph(g5, spec5)
    expected = np.array([(i * j) % 5 * 2 * np.pi / 5 for i in range(5) for j in range(5)])
    assert np.allclose(circ.phases_A, expected)


def test_unrealizable_compilation_carries_certificate():
    star = make_graph(2, [(1, 2), (1, 3), (1, 4), (3, 4)], [1, 3], [2, 4])
    with pytest.raises(CompilationError) as exc:
        compile_graph(star, EncodingSpec(2, 2))
    assert exc.value.certificate is not None
    with pytest.raises(CompilationError):
        compile_graph(make_graph(2, [(1, 2)], [1], [2]), EncodingSpec(2, 2))


def test_explicit_frame_must_split_pairs():
    g = make_graph(2, [(1, 2)], [1], [2], frame={1, 2})
    with pytest.raises(CompilationError):
        resolve_frame(g)


def test_two_vertex_stabilizers():
    g = make_graph(2, [(1, 2)], [1], [2])
    s1, s2 = stabilizers(g, frame=())
    assert (s1.x, s1.z) == ((1, 0), (0, 1))
    assert (s2.x, s2.z) == ((0, 1), (1, 0))
    state = simulate_cluster(g, EncodingSpec(2, 1))
    assert np.allclose(stabilizer_expectations(state, g), [1, 1], atol=1e-10)


def test_paper_states_are_stabilized(g8, spec8, g5, spec5):
    for g, spec in ((g8, spec8), (g5, spec5)):
        values = stabilizer_expectations(simulate_cluster(g, spec), g)
        assert len(values) == g.n_vertices
        assert np.max(np.abs(np.array(values) - 1)) < 1e-10


def test_fuzz_two_routes_agree():
    """Compiled circuit and vertex-by-vertex construction give the same state."""
    rng = np.random.default_rng(2024)
    worst_overlap = worst_stab = 0.0
    for _ in range(200):
        g = random_realizable_graph(rng)
        spec = EncodingSpec(g.d, g.n_vertices // 2)
        sim = simulate_cluster(g, spec)
        ref = direct_state(g)
        worst_overlap = max(worst_overlap, abs(abs(np.vdot(ref, sim.amp)) - 1))
        frame = resolve_frame(g)
        order = [*layout(g)[0], *layout(g)[1]]
        vec = sim.amp.reshape(-1)
        for k in g.vertices if vec.size <= 729 else ():
            dense = _dense_stabilizer(g, k, frame, order)
            worst_stab = max(worst_stab, abs(np.vdot(vec, dense @ vec) - 1))
        worst_stab = max(
            worst_stab, *(abs(v - 1) for v in stabilizer_expectations(sim, g))
        )
    assert worst_overlap < 1e-10
    assert worst_stab < 1e-10


def test_stabilizer_group_closure():
    rng = np.random.default_rng(11)
    for _ in range(20):
        g = random_realizable_graph(rng)
        spec = EncodingSpec(g.d, g.n_vertices // 2)
        state = simulate_cluster(g, spec)
        axes = vertex_axes(g)
        gens = stabilizers(g)
        for _ in range(5):
            t = identity_term(g.d, g.n_vertices)
            for s in gens:
                t = t * s ** int(rng.integers(0, g.d))
            assert abs(term_expectation(state, t, axes) - 1) < 1e-10


def test_term_algebra_matches_dense_matrices():
    rng = np.random.default_rng(3)
    g = random_realizable_graph(rng, d=3, n_per_photon=2)
    order = list(g.vertices)
    a, b = stabilizers(g, frame={1, 3})[:2]
    prod = a * b ** 2
    assert np.allclose(prod.matrix(order), a.matrix(order) @ np.linalg.matrix_power(b.matrix(order), 2))
    for t in (a, b, prod):
        dense = t.matrix(order)
        assert np.allclose(dense @ dense.conj().T, np.eye(dense.shape[0]))


def test_graph_json_roundtrip(g8):
    back = GraphState.from_json(g8.to_json())
    assert back == g8


def test_frame_choice_for_comb_without_explicit_flags(g8):
    bare = make_graph(2, list((u, v) for u, v, _ in g8.edges), [1, 2, 3, 4], [5, 6, 7, 8])
    frame = resolve_frame(bare)
    assert all((a in frame) != (b in frame) for a, b in zip(*layout(bare)))
    spec = EncodingSpec(2, 4)
    assert np.allclose(stabilizer_expectations(simulate_cluster(bare, spec), bare), 1, atol=1e-10)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_dense_frame_edges_are_supported(d):
    # both ends of an intra edge framed forces the dense fallback
    g = make_graph(d, [(1, 3), (2, 4), (1, 2)], [1, 2], [3, 4], frame={1, 2})
    circ = compile_graph(g, EncodingSpec(d, 2))
    assert circ.dense_A is not None
    sim = simulate_cluster(g, EncodingSpec(d, 2))
    assert abs(abs(np.vdot(direct_state(g), sim.amp)) - 1) < 1e-10


def test_all_weights_small_graph_exhaustive():
    spec = EncodingSpec(3, 2)
    for w_a, w_b in itertools.product((0, 1, 2), repeat=2):
        edges = [(1, 3), (2, 4)]
        if w_a:
            edges.append((1, 2, w_a))
        if w_b:
            edges.append((3, 4, w_b))
        g = make_graph(3, edges, [1, 2], [3, 4])
        sim = simulate_cluster(g, spec)
        assert abs(abs(np.vdot(direct_state(g), sim.amp)) - 1) < 1e-10
