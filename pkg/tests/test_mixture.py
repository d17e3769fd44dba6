from collections import Counter

import numpy as np
import pytest

from modules.errors import DataError, UsageError
from modules.mixture import (
    MixtureSource,
    draw_mixture,
    language_token,
    parse_language_token,
    prepend_language_token,
    temperature_probabilities,
    temperature_sample,
)


def source(src_lang, tgt_lang, size):
    examples = [(f"s-{tgt_lang} {src_lang}{k}", f"t-{tgt_lang} {src_lang}{k}") for k in range(size)]
    return MixtureSource(src_lang, tgt_lang, examples)


class TestTemperatureSampling:
    def test_temperature_one_is_proportional(self):
        probabilities = temperature_probabilities({"a": 30, "b": 70, "c": 900}, 1.0)
        assert probabilities["a"] == pytest.approx(0.03, abs=1e-12)
        assert probabilities["b"] == pytest.approx(0.07, abs=1e-12)
        assert probabilities["c"] == pytest.approx(0.9, abs=1e-12)

    def test_equal_sizes_split_evenly(self):
        plan = temperature_sample({"a": 100, "b": 100}, 5.0, 100)
        assert plan.counts == {"a": 50, "b": 50}

    def test_high_resource_ratio(self):
        probabilities = temperature_probabilities({"hi": 47e6, "lo": 4.5e6}, 5.0)
        assert probabilities["hi"] / probabilities["lo"] == pytest.approx((47e6 / 4.5e6) ** 0.2, rel=1e-9)
        assert probabilities["hi"] / probabilities["lo"] == pytest.approx(1.599, abs=1e-3)

    @pytest.mark.parametrize("total", [0, 1, 7, 333, 1_000])
    def test_counts_sum_to_total(self, total):
        plan = temperature_sample({"a": 900, "b": 90, "c": 10, "d": 1}, 3.0, total)
        assert sum(plan.counts.values()) == total
        assert all(plan.counts[k] <= n for k, n in {"a": 900, "b": 90, "c": 10, "d": 1}.items())

    def test_clamped_key_surplus_is_redistributed(self):
        plan = temperature_sample({"a": 1_000, "b": 10}, 100.0, 500)
        assert plan.counts == {"a": 490, "b": 10}

    def test_random_tie_break_keeps_total(self):
        plan = temperature_sample({"a": 5, "b": 5, "c": 5}, 1.0, 4, rng=np.random.default_rng(0))
        assert sum(plan.counts.values()) == 4
        assert sorted(plan.counts.values()) == [1, 1, 2]

    def test_total_above_availability(self):
        with pytest.raises(DataError):
            temperature_sample({"a": 3, "b": 4}, 5.0, 8)

    def test_temperature_below_one(self):
        with pytest.raises(UsageError):
            temperature_sample({"a": 3}, 0.5, 1)

    def test_plan_as_dict(self):
        plan = temperature_sample({("de", "fr"): 10}, 5.0, 10)
        data = plan.as_dict()
        assert data["counts"] == {"('de', 'fr')": 10}
        assert data["probabilities"]["('de', 'fr')"] == pytest.approx(1.0)


class TestLanguageTokens:
    def test_prepend(self):
        assert language_token("de") == "<2de>"
        assert prepend_language_token("hello", "de") == "<2de> hello"

    @pytest.mark.parametrize("line, expected", [
        ("<2de> hello", "de"),
        ("<2pt-br> olá", "pt-br"),
        ("hello <2de>", None),
        ("<2DE> hello", None),
        ("", None),
    ])
    def test_parse(self, line, expected):
        assert parse_language_token(line) == expected

    def test_invalid_code(self):
        with pytest.raises(UsageError):
            language_token("D E")


class TestDrawMixture:
    @pytest.fixture
    def sources(self):
        return [source("de", "fr", 600), source("fr", "de", 600), source("en", "de", 300), source("en", "fr", 50)]

    def test_every_line_tagged_with_its_target(self, sources):
        plan, lines = draw_mixture(sources, 5.0, total=1_000, rng=np.random.default_rng(1))
        assert len(lines) == 1_000 == sum(plan.counts.values())
        for tagged, target in lines:
            token = parse_language_token(tagged)
            assert token is not None
            assert tagged.split(" ")[1] == f"s-{token}"
            assert target.split(" ")[0] == f"t-{token}"

    def test_pair_key_counts_match_plan(self, sources):
        plan, lines = draw_mixture(sources, 5.0, total=400, key="pair", rng=np.random.default_rng(2))
        assert set(plan.counts) == {"de-fr", "fr-de", "en-de", "en-fr"}
        per_target = Counter(parse_language_token(tagged) for tagged, _ in lines)
        assert per_target["fr"] == plan.counts["de-fr"] + plan.counts["en-fr"]
        assert per_target["de"] == plan.counts["fr-de"] + plan.counts["en-de"]

    def test_target_key_balances_languages(self, sources):
        plan, lines = draw_mixture(sources, 5.0, total=400, key="target", rng=np.random.default_rng(2))
        assert set(plan.counts) == {"de", "fr"}
        assert Counter(parse_language_token(tagged) for tagged, _ in lines) == Counter(plan.counts)

    def test_all_lines_by_default(self, sources):
        _, lines = draw_mixture(sources, 5.0, rng=np.random.default_rng(3))
        assert len(lines) == 1_550
        assert len(set(lines)) == 1_550

    def test_same_rng_same_lines(self, sources):
        first = draw_mixture(sources, 5.0, total=200, rng=np.random.default_rng(9))[1]
        second = draw_mixture(sources, 5.0, total=200, rng=np.random.default_rng(9))[1]
        assert first == second
