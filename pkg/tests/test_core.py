import numpy as np
import pytest

from senstir.core import (
    DataError,
    Dataset,
    DimensionMismatch,
    LengthMismatch,
    NegativeRelevance,
    NonFiniteFeature,
    NonFiniteScore,
    Query,
    Ranking,
    ideal_ranking,
    ranking_from_scores,
    validate_query,
)


def test_ranking_ranks_are_inverse_of_order():
    r = Ranking([2, 0, 1])
    assert r.ranks.tolist() == [2, 3, 1]
    assert Ranking.from_ranks(r.ranks) == r


@pytest.mark.parametrize("order", [[0, 0, 1], [1, 2], []])
def test_ranking_rejects_non_permutations(order):
    with pytest.raises(DataError):
        Ranking(order)


def test_ranking_hash_and_eq():
    assert {Ranking([1, 0]), Ranking([1, 0])} == {Ranking([1, 0])}
    assert Ranking([0, 1]) != Ranking([1, 0])


def test_ranking_from_scores_breaks_ties_by_index():
    assert ranking_from_scores([1.0, 3.0, 1.0, 3.0]).order.tolist() == [1, 3, 0, 2]


def test_ranking_from_scores_rejects_nan():
    with pytest.raises(NonFiniteScore):
        ranking_from_scores([0.0, np.nan])


def test_ideal_ranking_sorts_by_relevance():
    q = Query("q", np.zeros((4, 1)), [1, 3, 0, 3])
    assert ideal_ranking(q).order.tolist() == [1, 3, 0, 2]


def test_validate_query_errors():
    with pytest.raises(NonFiniteFeature):
        validate_query(Query("q", [[np.inf]], [1.0]))
    with pytest.raises(NegativeRelevance):
        validate_query(Query("q", [[0.0]], [-1.0]))
    with pytest.raises(LengthMismatch):
        validate_query(Query("q", [[0.0], [1.0]], [1.0]))
    with pytest.raises(DataError):
        validate_query(Query("q", [[0.0]], [1.0], [2]))


def test_query_from_items_checks_dims_and_groups():
    q = Query.from_items("a", [{"features": [1, 2], "rel": 1, "group": 0},
                               {"features": [3, 4], "rel": 0, "group": 1}])
    assert q.n == 2 and q.p == 2 and q.groups.tolist() == [0, 1]
    with pytest.raises(DimensionMismatch):
        Query.from_items("a", [{"features": [1], "rel": 1}, {"features": [1, 2], "rel": 0}])
    with pytest.raises(DataError):
        Query.from_items("a", [{"features": [1], "rel": 1, "group": 0}, {"features": [2], "rel": 0}])


def test_dataset_checks_dims():
    q1 = Query("a", np.zeros((2, 2)), [0, 1])
    q2 = Query("b", np.zeros((2, 3)), [0, 1])
    with pytest.raises(DimensionMismatch):
        Dataset.of([q1, q2])
    with pytest.raises(DataError):
        Dataset.of([])
    d = Dataset.of([q1])
    assert len(d) == 1 and d[0] is q1
    assert d.map_features(lambda x: x + 1)[0].features.sum() == 4
