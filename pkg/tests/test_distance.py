import pytest

from modules.distance import (
    bounded_edit_distance,
    budget,
    edit_distance,
    length_compatible,
    passes_threshold,
    threshold,
)


class TestEditDistance:
    @pytest.mark.parametrize("a, b, expected", [
        ([], [], 0),
        (["a"], [], 1),
        ([], ["a", "b"], 2),
        (["a", "b", "c"], ["a", "b", "c"], 0),
        (["a", "b", "c"], ["a", "x", "c"], 1),
        (["k", "i", "t", "t", "e", "n"], ["s", "i", "t", "t", "i", "n", "g"], 3),
        (["a", "b"], ["b", "a"], 2),
    ])
    def test_known_values(self, a, b, expected):
        assert edit_distance(a, b) == expected
        assert edit_distance(b, a) == expected

    def test_tokens_not_characters(self):
        assert edit_distance(["hello", "world"], ["hello", "word"]) == 1

    def test_bounded_agrees_with_oracle(self, rng):
        vocab = list("abcd")
        for _ in range(300):
            a = [vocab[k] for k in rng.integers(4, size=rng.integers(0, 9))]
            b = [vocab[k] for k in rng.integers(4, size=rng.integers(0, 9))]
            exact = edit_distance(a, b)
            for tau in range(0, 6):
                bounded = bounded_edit_distance(a, b, tau)
                assert bounded == (exact if exact <= tau else None)

    def test_length_gap_short_circuits(self):
        assert bounded_edit_distance(["a"] * 10, ["a"], 3) is None

    def test_negative_budget(self):
        assert bounded_edit_distance(["a"], ["a"], -1) is None


class TestThreshold:
    def test_uses_shorter_length(self):
        assert threshold(10, 20, 0.3) == pytest.approx(3.0)
        assert budget(10, 20, 0.3) == 3
        assert budget(9, 20, 0.3) == 2

    def test_gamma_zero_means_identical(self):
        assert passes_threshold(["a", "b"], ["a", "b"], 0.0)
        assert not passes_threshold(["a", "b"], ["a", "c"], 0.0)

    def test_rule(self):
        ten = [str(k) for k in range(10)]
        three_changed = ["x", "y", "z"] + ten[3:]
        four_changed = ["w", "x", "y", "z"] + ten[4:]
        assert passes_threshold(ten, three_changed, 0.3)
        assert not passes_threshold(ten, four_changed, 0.3)

    def test_length_compatible(self):
        assert length_compatible(10, 13, 0.3)
        assert not length_compatible(10, 14, 0.3)
