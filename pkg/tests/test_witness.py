import numpy as np
import pytest

from conftest import WITNESS5_STRINGS, WITNESS8_IDENTITY_WEIGHT, WITNESS8_STRINGS, parse_strings
from hdcluster.encoding import EncodingSpec
from hdcluster.errors import InsufficientDataError, UnsupportedGraphError, ValidationError
from hdcluster.graph import dft_matrix, kron_all, layout, make_graph, simulate_cluster, stabilizers
from hdcluster.state import CoincidenceTable, TwoPhotonState
from hdcluster.witness import (
    analytic_tables,
    mub_settings,
    noise_threshold,
    sampled_tables,
    term_values_from_probs,
    witness_exact,
    witness_from_counts,
    witness_mixed,
    witness_on_mixture,
    witness_terms,
)

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


@pytest.fixture(scope="module")
def ideal8(g8, spec8):
    return simulate_cluster(g8, spec8)


@pytest.fixture(scope="module")
def ideal5(g5, spec5):
    return simulate_cluster(g5, spec5)


def _random_state(spec, seed):
    rng = np.random.default_rng(seed)
    amp = rng.standard_normal((spec.M, spec.M)) + 1j * rng.standard_normal((spec.M, spec.M))
    return TwoPhotonState(amp / np.linalg.norm(amp), spec)


def test_eight_qubit_strings_match_reference_list(g8):
    terms = witness_terms(g8)
    assert len(terms) == 32
    identities = [t for t in terms if t.term.is_identity()]
    assert len(identities) == WITNESS8_IDENTITY_WEIGHT
    reference = parse_strings(WITNESS8_STRINGS, 8, 2)
    assert len(reference) == 30
    ours = [t.term for t in terms if not t.term.is_identity()]
    assert sorted(t.key() for t in ours) == sorted(reference)
    assert all(abs(t.phase - 1) < 1e-12 for t in ours)
    assert "X1 X8" in {t.label for t in terms}


def test_qudit_strings_match_reference_list_up_to_inverse(g5):
    terms = [t.term for t in witness_terms(g5)]
    assert len(terms) == 50
    reference = parse_strings(WITNESS5_STRINGS, 4, 5)
    assert len(reference) == 24
    inverse = {(tuple(-a % 5 for a in x), tuple(-b % 5 for b in z)) for x, z in reference}
    keys = [t.key() for t in terms if not t.is_identity()]
    assert len(keys) == 48
    assert set(keys) == set(reference) | inverse
    assert ((0, 0, 1, 1), (0, 1, 0, 0)) in set(keys)  # I1 Z2 X3 X4


def test_exact_values_on_ideal_states(g8, ideal8, g5, ideal5):
    for g, state in ((g8, ideal8), (g5, ideal5)):
        rep = witness_exact(state, g)
        assert rep.value == pytest.approx(-1.0, abs=1e-12)
        assert rep.imag_residue < 1e-9
        assert rep.std_dev == 0.0 and rep.setting_used == "exact"


def test_mixed_state_and_threshold(g8, g5):
    assert witness_mixed(g8) == pytest.approx(2.75)
    assert witness_mixed(g5) == pytest.approx(1.4)
    assert witness_on_mixture(g8, 0.0) == pytest.approx(-1.0)
    assert witness_on_mixture(g8, 1.0) == pytest.approx(2.75)
    assert noise_threshold(g8) == pytest.approx(1 / 3.75)
    assert witness_on_mixture(g8, noise_threshold(g8)) == pytest.approx(0.0, abs=1e-12)
    ps = np.linspace(0, 1, 21)
    assert np.all(np.diff([witness_on_mixture(g8, p) for p in ps]) > 0)
    with pytest.raises(ValidationError):
        witness_on_mixture(g8, 1.2)


def test_mixed_value_by_term_linearity(g8):
    # Tr(P)/D vanishes for every non-identity string
    terms = witness_terms(g8)
    w = 3 + sum(t.weight for t in terms if t.term.is_identity())
    assert w == pytest.approx(witness_mixed(g8))


def test_non_bipartite_labels_rejected():
    g = make_graph(2, [(1, 3), (2, 4), (1, 2)], [1, 2], [3, 4])
    with pytest.raises(UnsupportedGraphError):
        witness_terms(g)
    with pytest.raises(UnsupportedGraphError):
        mub_settings(g)


def test_qubit_reduction_matches_textbook_formula(g8, spec8):
    """``3 - 2 (prod_odd (S+1)/2 + prod_even (S+1)/2)`` with dense operators."""
    a_order, b_order = layout(g8)
    order = a_order + b_order
    gens = [s.matrix(order) for s in stabilizers(g8)]
    eye = np.eye(256)
    odd = even = eye
    for k, s in enumerate(gens, start=1):
        if k % 2:
            odd = odd @ (s + eye) / 2
        else:
            even = even @ (s + eye) / 2
    w_op = 3 * eye - 2 * (odd + even)
    for seed in range(5):
        st = _random_state(spec8, seed)
        vec = st.amp.reshape(-1)
        dense = np.vdot(vec, w_op @ vec)
        assert witness_exact(st, g8).value == pytest.approx(dense.real, abs=1e-12)


def test_bound_and_hermiticity_on_random_states(g8, spec8, g5, spec5):
    for g, spec in ((g8, spec8), (g5, spec5)):
        for seed in range(10):
            rep = witness_exact(_random_state(spec, seed), g)
            assert rep.value >= -1 - 1e-12
            assert rep.imag_residue < 1e-9


def test_setting_unitaries(g5, g8):
    s1, s2 = mub_settings(g5)
    F, I5 = dft_matrix(5), np.eye(5)
    assert {s1.label, s2.label} == {"setting1", "setting2"}
    pair = {s1.u_A.matrix.tobytes(), s2.u_A.matrix.tobytes()}
    # one setting interferes rows of the 5x5 grid, the other columns
    assert pair == {np.kron(F, I5).tobytes(), np.kron(I5, F).tobytes()}
    for s in mub_settings(g8):
        n_h = sum(1 for v in layout(g8)[0] if v in s.x_vertices)
        assert n_h == 2
        expected = kron_all([H if v in s.x_vertices else np.eye(2) for v in layout(g8)[0]])
        assert np.allclose(s.u_A.matrix, expected)


def test_single_edge_settings():
    g = make_graph(2, [(1, 2)], [1], [2])
    frame = {2}
    s1, s2 = mub_settings(g.with_frame(frame))
    # undoing the frame recovers X on vertex 1 only, then on vertex 2 only
    assert {frozenset(s.x_vertices ^ frame) for s in (s1, s2)} == {frozenset({1}), frozenset({2})}
    assert np.allclose(s1.u_A.matrix, H) and np.allclose(s1.u_B.matrix, H)
    assert np.allclose(s2.u_A.matrix, np.eye(2)) and np.allclose(s2.u_B.matrix, np.eye(2))


def test_measurement_route_matches_operator_route(g8, ideal8, g5, ideal5, spec8):
    for g, state in ((g8, ideal8), (g5, ideal5), (g8, _random_state(spec8, 3))):
        terms, values = term_values_from_probs(state, g)
        exact = witness_exact(state, g)
        assert np.allclose(values, [e for _, e, _ in exact.per_term], atol=1e-12)


def test_infinite_count_limit(g8, ideal8, g5, ideal5):
    for g, state in ((g8, ideal8), (g5, ideal5)):
        rep = witness_from_counts(analytic_tables(state, g, scale=1e9), g, n_boot=0)
        assert rep.value == pytest.approx(-1.0, abs=1e-3)
    rep = witness_from_counts(analytic_tables(ideal8, g8, scale=1e8), g8, n_boot=0)
    assert rep.value == pytest.approx(witness_exact(ideal8, g8).value, abs=1e-3)


def test_ideal_counts_have_no_spread(g8, ideal8):
    # every recorded event is a +1 eigenvector of every string
    rep = witness_from_counts(sampled_tables(ideal8, g8, 0.0, 1e4, seed=1), g8, n_boot=200)
    assert rep.value == pytest.approx(-1.0, abs=1e-12)
    assert rep.std_dev < 1e-12


@pytest.mark.parametrize("noise", [0.1, 0.2])
def test_bootstrap_calibration(g8, ideal8, noise):
    values, boots = [], []
    for seed in range(100):
        tables = sampled_tables(ideal8, g8, p=noise, mean_total=1e4, seed=2 * seed)
        rep = witness_from_counts(tables, g8, n_boot=300, seed=seed)
        values.append(rep.value)
        boots.append(rep.std_dev)
    values = np.array(values)
    emp = values.std(ddof=1)
    expected = witness_on_mixture(g8, noise)
    assert abs(values.mean() - expected) < 4 * emp / np.sqrt(len(values))
    assert 0.5 < np.mean(boots) / emp < 2.0


def test_noisy_counts_turn_witness_positive(g8, ideal8):
    rep = witness_from_counts(sampled_tables(ideal8, g8, 0.35, 1e5, seed=4), g8, n_boot=200)
    assert rep.value > 0
    assert rep.value == pytest.approx(witness_on_mixture(g8, 0.35), abs=5 * rep.std_dev)


def test_empty_table_rejected(g8):
    empty = CoincidenceTable(np.zeros((16, 16), dtype=int), 0)
    with pytest.raises(InsufficientDataError):
        witness_from_counts([empty, empty], g8)


def test_report_serialization(g5, ideal5):
    rep = witness_exact(ideal5, g5)
    assert rep.to_dict()["value"] == pytest.approx(-1.0)
    assert rep.terms_csv().count("\n") == len(rep.per_term) + 1
