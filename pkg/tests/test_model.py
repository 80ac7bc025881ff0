import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polygm import (
    CandidateBasis,
    DimensionError,
    EnergyModel,
    MultiIndex,
    NotPositiveDefiniteError,
    eval_energy,
    eval_local_energy,
    eval_monomial,
    gaussian_model,
    load_model,
    model_from_dict,
    model_to_dict,
    monomial_matrix,
    precision_from_model,
    save_model,
)


# ---------------------------------------------------------------- MultiIndex


def test_multiindex_merges_and_sorts_pairs():
    k = MultiIndex(((3, 1), (0, 2), (3, 1)))
    assert k.pairs == ((0, 2), (3, 2))
    assert k.order == 4
    assert k.variables == (0, 3)
    assert k.arity == 2


def test_multiindex_from_vars_counts_repeats():
    k = MultiIndex.from_vars((1, 1, 4))
    assert k.pairs == ((1, 2), (4, 1))
    assert k.multiplicity(1) == 2
    assert k.multiplicity(4) == 1
    assert k.multiplicity(2) == 0


def test_multiindex_rejects_constant_and_bad_input():
    with pytest.raises(ValueError):
        MultiIndex(())
    with pytest.raises(ValueError):
        MultiIndex(((0, 0),))
    with pytest.raises(DimensionError):
        MultiIndex(((-1, 1),))


def test_multiindex_without_drops_variable():
    k = MultiIndex(((0, 2), (1, 1)))
    assert k.without(0) == MultiIndex(((1, 1),))
    assert k.without(1) == MultiIndex(((0, 2),))
    assert MultiIndex.single(0, 2).without(0) is None


def test_multiindex_ordering_is_lexicographic_in_pairs():
    ks = [
        MultiIndex.single(1, 2),
        MultiIndex.single(0, 1),
        MultiIndex(((0, 1), (1, 1))),
        MultiIndex.single(0, 2),
    ]
    assert sorted(ks) == [
        MultiIndex.single(0, 1),
        MultiIndex(((0, 1), (1, 1))),
        MultiIndex.single(0, 2),
        MultiIndex.single(1, 2),
    ]


@settings(max_examples=200, deadline=None)
@given(
    st.lists(
        st.tuples(st.integers(0, 6), st.integers(1, 5)),
        min_size=1,
        max_size=6,
    )
)
def test_multiindex_canonical_form_is_idempotent(pairs):
    k = MultiIndex(tuple(pairs))
    again = MultiIndex(k.pairs)
    assert again == k
    assert list(k.variables) == sorted(set(v for v, _ in pairs))
    assert k.order == sum(m for _, m in pairs)


# ------------------------------------------------------------- evaluation


def test_eval_monomial_point_and_matrix():
    k = MultiIndex(((0, 2), (1, 1)))
    assert eval_monomial(k, np.array([2.0, 3.0])) == 12.0
    x = np.array([[2.0, 3.0], [1.0, -1.0]])
    np.testing.assert_allclose(eval_monomial(k, x), [12.0, -1.0])


def test_eval_monomial_checks_dimensions():
    with pytest.raises(DimensionError):
        eval_monomial(MultiIndex.single(3), np.array([1.0, 2.0]))


def test_monomial_matrix_columns_follow_term_order():
    terms = (MultiIndex.single(0), MultiIndex.single(1, 2))
    x = np.array([[2.0, 3.0]])
    np.testing.assert_allclose(monomial_matrix(terms, x), [[2.0, 9.0]])


def test_eval_energy_matches_hand_expansion(quartic_model):
    x = np.array([[0.7], [-1.3]])
    expected = -(x[:, 0] ** 2 + 0.5 * x[:, 0] ** 3 + 2.0 * x[:, 0] ** 4)
    np.testing.assert_allclose(eval_energy(quartic_model, x), expected)


def test_eval_local_energy_uses_only_node_terms(two_node_gaussian):
    view = two_node_gaussian.local_view(0)
    x = np.array([1.5, -2.0])
    # node 0 sees 0.5*x0^2 and 0.25*x0*x1
    assert eval_local_energy(view, x) == pytest.approx(
        -(0.5 * 1.5**2 + 0.25 * 1.5 * -2.0)
    )


# ------------------------------------------------------------- EnergyModel


def test_energy_model_drops_zero_terms_and_infers_order():
    model = EnergyModel(
        p=2,
        terms={MultiIndex.single(0, 2): 1.0, MultiIndex.single(1, 4): 0.0},
    )
    assert MultiIndex.single(1, 4) not in model.terms
    assert model.s == 2


def test_energy_model_validates_coefficients_and_range():
    with pytest.raises(DimensionError):
        EnergyModel(p=1, terms={MultiIndex.single(1, 2): 1.0})
    with pytest.raises(ValueError):
        EnergyModel(p=1, terms={MultiIndex.single(0, 2): np.nan})
    with pytest.raises(ValueError):
        EnergyModel(p=1, terms={MultiIndex.single(0, 4): 1.0}, s=2)


def test_terms_of_and_interaction_terms(two_node_gaussian):
    cross = MultiIndex(((0, 1), (1, 1)))
    assert cross in two_node_gaussian.terms_of(0)
    assert cross in two_node_gaussian.terms_of(1)
    assert two_node_gaussian.interaction_terms() == (cross,)


def test_local_view_theta_alignment(two_node_gaussian):
    view = two_node_gaussian.local_view(1)
    assert view.terms[MultiIndex.single(1, 2)] == 0.5
    assert view.terms[MultiIndex(((0, 1), (1, 1)))] == 0.25
    assert view.max_self_power() == 2


# ---------------------------------------------------------------- Gaussian


def test_gaussian_model_round_trips_precision():
    prec = np.array([[2.0, 0.3, 0.0], [0.3, 1.5, -0.2], [0.0, -0.2, 1.0]])
    model = gaussian_model(prec)
    back, mean = precision_from_model(model)
    np.testing.assert_allclose(back, prec)
    np.testing.assert_allclose(mean, 0.0)


def test_gaussian_model_with_mean_adds_linear_terms():
    prec = np.array([[1.0, 0.0], [0.0, 2.0]])
    model = gaussian_model(prec, mean=np.array([1.0, -0.5]))
    back, mean = precision_from_model(model)
    np.testing.assert_allclose(back, prec)
    np.testing.assert_allclose(mean, [1.0, -0.5])


def test_gaussian_model_rejects_indefinite_input():
    with pytest.raises(NotPositiveDefiniteError):
        gaussian_model(np.array([[1.0, 2.0], [2.0, 1.0]]))


# ----------------------------------------------------------- CandidateBasis


def test_full_basis_enumerates_expected_terms():
    basis = CandidateBasis.full(p=2, s=2)
    expected = {
        MultiIndex.single(0),
        MultiIndex.single(0, 2),
        MultiIndex.single(1),
        MultiIndex.single(1, 2),
        MultiIndex(((0, 1), (1, 1))),
    }
    assert set(basis.terms) == expected
    assert basis.terms == tuple(sorted(basis.terms))


def test_full_basis_counts_for_higher_order():
    # p=1, s=4: x, x^2, x^3, x^4
    assert len(CandidateBasis.full(p=1, s=4).terms) == 4
    # p=3, s=2: 3 linear + 3 square + 3 pairs
    assert len(CandidateBasis.full(p=3, s=2).terms) == 9


def test_full_basis_arity_cap():
    b2 = CandidateBasis.full(p=4, s=4, max_arity=2)
    assert max(k.arity for k in b2.terms) == 2
    b4 = CandidateBasis.full(p=4, s=4, max_arity=4)
    assert max(k.arity for k in b4.terms) == 4
    assert set(b2.terms) < set(b4.terms)


def test_local_terms_all_touch_the_node():
    basis = CandidateBasis.full(p=3, s=3, max_arity=2)
    for node in range(3):
        local = basis.local_terms(node)
        assert local
        assert all(k.contains(node) for k in local)
        assert local == tuple(sorted(local))


def test_theta_vector_aligns_model_with_basis(two_node_gaussian):
    basis = CandidateBasis.full(p=2, s=2)
    vec = basis.theta_vector(two_node_gaussian)
    terms = dict(zip(basis.terms, vec))
    assert terms[MultiIndex.single(0, 2)] == 0.5
    assert terms[MultiIndex(((0, 1), (1, 1)))] == 0.25
    assert terms[MultiIndex.single(0)] == 0.0


def test_from_support_restricts_to_model_terms(quartic_model):
    basis = CandidateBasis.from_support(quartic_model)
    assert set(basis.terms) == set(quartic_model.terms)


# ------------------------------------------------------------ serialization


def test_model_json_round_trip(tmp_path, quartic_model):
    path = tmp_path / "model.json"
    save_model(quartic_model, path)
    loaded = load_model(path)
    assert loaded == quartic_model
    # file is plain JSON with explicit term entries
    payload = json.loads(path.read_text())
    assert {"p", "s", "terms"} <= set(payload)


def test_model_dict_round_trip_preserves_multiplicities():
    model = EnergyModel(
        p=3,
        terms={
            MultiIndex(((0, 2), (1, 1), (2, 1))): 0.2,
            MultiIndex.single(2, 4): 0.5,
        },
    )
    assert model_from_dict(model_to_dict(model)) == model
