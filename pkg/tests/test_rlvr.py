"""Tag parsing, rule-based rewards, and group-relative advantages."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vowelprompt import StructuralError, group_advantages, parse_output, reward

LABELS = ("angry", "happy", "sad", "neutral", "excited")

WELL_FORMED = "<think>the tone rises sharply</think><answer>happy</answer>"


def oracle_well_formed(text: str) -> bool:
    """Independent format oracle: each tag exactly once, strictly in order."""
    tags = ("<think>", "</think>", "<answer>", "</answer>")
    if any(text.count(t) != 1 for t in tags):
        return False
    pos = [text.find(t) for t in tags]
    return pos == sorted(pos) and len(set(pos)) == 4


class TestParseOutput:
    def test_well_formed(self):
        p = parse_output(WELL_FORMED)
        assert p.well_formed
        assert p.think == "the tone rises sharply"
        assert p.answer == "happy"

    def test_surrounding_text_allowed(self):
        p = parse_output("Sure! " + WELL_FORMED + " Hope that helps.")
        assert p.well_formed

    def test_answer_only(self):
        p = parse_output("<answer>sad</answer>")
        assert not p.well_formed
        assert p.answer == "sad"
        assert p.think is None

    def test_unclosed_think(self):
        p = parse_output("<think>hmm<answer>sad</answer>")
        assert not p.well_formed
        assert p.answer == "sad"

    def test_duplicated_tags(self):
        assert not parse_output(WELL_FORMED + WELL_FORMED).well_formed

    def test_interleaved_tags(self):
        p = parse_output("<think><answer>x</think></answer>")
        assert not p.well_formed

    def test_answer_before_think(self):
        p = parse_output("<answer>sad</answer><think>hm</think>")
        assert not p.well_formed
        assert p.answer == "sad"

    def test_inner_whitespace_trimmed(self):
        p = parse_output("<think>  a  </think><answer>\n happy \n</answer>")
        assert p.answer == "happy"
        assert p.think == "a"

    def test_empty_string(self):
        p = parse_output("")
        assert p == parse_output("")
        assert not p.well_formed and p.answer is None


class TestReward:
    def test_truth_table(self):
        # (well-formed correct, malformed correct, well-formed wrong, neither)
        cases = [
            (WELL_FORMED, "happy", (1, 1)),
            ("<answer>happy</answer>", "happy", (1, 0)),
            ("<think>x</think><answer>sad</answer>", "happy", (0, 1)),
            ("happy", "happy", (0, 0)),
        ]
        totals = []
        for text, gold, expected in cases:
            r = reward(text, gold, LABELS)
            assert (r.r_acc, r.r_format) == expected
            totals.append(r.total)
        assert totals == [2, 1, 1, 0]

    def test_case_insensitive_by_default(self):
        assert reward("<answer>HAPPY</answer>", "happy", LABELS).r_acc == 1
        assert reward("<answer> Happy </answer>", "happy", LABELS).r_acc == 1

    def test_strict_case(self):
        assert reward("<answer>HAPPY</answer>", "happy", LABELS, strict_case=True).r_acc == 0
        assert reward("<answer>happy</answer>", "happy", LABELS, strict_case=True).r_acc == 1

    def test_think_content_never_affects_accuracy(self):
        for think in ("", "sad sad sad", "ignore: happy", "<br>"):
            r = reward(f"<think>{think}</think><answer>happy</answer>", "happy", LABELS)
            assert r.r_acc == 1

    def test_gold_outside_label_set(self):
        with pytest.raises(StructuralError, match="outside the label set"):
            reward(WELL_FORMED, "bored", LABELS)

    def test_wrong_label_in_answer_still_scores_format(self):
        r = reward("<think>x</think><answer>bogus</answer>", "happy", LABELS)
        assert (r.r_acc, r.r_format) == (0, 1)

    @given(st.text(max_size=200))
    @settings(max_examples=300)
    def test_never_crashes_and_matches_oracle(self, text):
        p = parse_output(text)
        assert p.well_formed == oracle_well_formed(text)
        r = reward(text, "happy", LABELS)
        assert r.r_acc in (0, 1) and r.r_format in (0, 1)

    @given(
        st.lists(
            st.sampled_from(
                ["<think>", "</think>", "<answer>", "</answer>", "happy", " ", "x<", ">"]
            ),
            max_size=12,
        )
    )
    @settings(max_examples=300)
    def test_tag_soup_matches_oracle(self, parts):
        text = "".join(parts)
        assert parse_output(text).well_formed == oracle_well_formed(text)


class TestGroupAdvantages:
    def test_fixture(self):
        adv = group_advantages([2.0, 1.0, 0.0, 1.0])
        assert adv == pytest.approx([1.4142, 0.0, -1.4142, 0.0], abs=1e-4)

    def test_degenerate_group_zeros(self):
        assert group_advantages([1.0, 1.0, 1.0]) == [0.0, 0.0, 0.0]

    def test_pair(self):
        assert group_advantages([0.0, 2.0]) == pytest.approx([-1.0, 1.0])

    def test_too_short(self):
        with pytest.raises(ValueError, match="at least 2"):
            group_advantages([1.0])
        with pytest.raises(ValueError, match="at least 2"):
            group_advantages([])

    def test_standardized_moments(self):
        rng = random.Random(21)
        for _ in range(50):
            n = rng.randint(2, 16)
            rewards = [rng.choice([0.0, 1.0, 2.0]) for _ in range(n)]
            adv = group_advantages(rewards)
            assert abs(sum(adv) / n) < 1e-9
            std = math.sqrt(sum(a * a for a in adv) / n)
            if max(rewards) - min(rewards) > 1e-12:
                assert abs(std - 1.0) < 1e-9
            else:
                assert adv == [0.0] * n

    def test_order_equivariance(self):
        rewards = [2.0, 0.0, 1.0, 1.0, 2.0]
        adv = group_advantages(rewards)
        rev = group_advantages(rewards[::-1])
        assert rev == adv[::-1]
