import json
import random
from functools import lru_cache

import pytest

from prak.decoder import AlignEntry, Alignment
from prak.errors import PrakError
from prak.evaluation import EvalReport, edit_align, score


# ---------------------------------------------------------------------------
# edit distance against a brute-force oracle


@lru_cache(maxsize=None)
def oracle_cost(a: tuple, b: tuple) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        oracle_cost(a[1:], b[1:]) + (0 if a[0] == b[0] else 1),
        oracle_cost(a[1:], b) + 1,
        oracle_cost(a, b[1:]) + 1,
    )


def script_cost(ops):
    return sum(1 for op, _, _ in ops if op != "match")


def check_script_is_valid(ref, hyp, ops):
    """The ops must consume both sequences exactly once, in order."""
    i = j = 0
    for op, ri, hj in ops:
        if op in ("match", "sub"):
            assert (ri, hj) == (i, j)
            if op == "match":
                assert ref[ri] == hyp[hj]
            else:
                assert ref[ri] != hyp[hj]
            i, j = i + 1, j + 1
        elif op == "del":
            assert (ri, hj) == (i, -1)
            i += 1
        else:
            assert (ri, hj) == (-1, j)
            j += 1
    assert (i, j) == (len(ref), len(hyp))


def test_edit_align_is_optimal_on_random_pairs():
    rng = random.Random(13)
    for _ in range(300):
        ref = [rng.choice("abc") for _ in range(rng.randint(0, 6))]
        hyp = [rng.choice("abc") for _ in range(rng.randint(0, 6))]
        ops = edit_align(ref, hyp)
        check_script_is_valid(ref, hyp, ops)
        assert script_cost(ops) == oracle_cost(tuple(ref), tuple(hyp))


def test_edit_align_trivial_cases():
    assert edit_align([], []) == []
    assert edit_align(["a", "b"], ["a", "b"]) == [("match", 0, 0), ("match", 1, 1)]
    assert edit_align(["a", "b", "c"], []) == [
        ("del", 0, -1), ("del", 1, -1), ("del", 2, -1)]
    assert edit_align([], ["x", "y"]) == [("ins", -1, 0), ("ins", -1, 1)]


def test_edit_align_prefers_substitutions_over_indels():
    # "ab" vs "ba" costs 2 either way; the documented tie order picks subs
    assert edit_align(["a", "b"], ["b", "a"]) == [("sub", 0, 0), ("sub", 1, 1)]


def test_edit_align_single_ops():
    assert edit_align(["a", "b", "c"], ["a", "x", "c"]) == [
        ("match", 0, 0), ("sub", 1, 1), ("match", 2, 2)]
    assert edit_align(["a", "b", "c"], ["a", "c"]) == [
        ("match", 0, 0), ("del", 1, -1), ("match", 2, 1)]
    assert edit_align(["a", "c"], ["a", "b", "c"]) == [
        ("match", 0, 0), ("ins", -1, 1), ("match", 1, 2)]


# ---------------------------------------------------------------------------
# scoring fixture: 100 phones with planted errors
#
# Codes cycle with period 10 so every entry is locally unique and the edit
# script is forced; all percentages below come out as exact decimals.

CYCLE = ["a", "e", "b", "d", "k", "s", "m", "l", "o", "t"]


def fixture_pair():
    ref_codes = [CYCLE[i % 10] for i in range(100)]
    ref = [AlignEntry(c, 10 * i, 10 * i + 10) for i, c in enumerate(ref_codes)]
    hyp = []
    for i, code in enumerate(ref_codes):
        if i == 70:
            continue  # one deletion
        shift = 15 if i in (30, 31, 32) else 0
        c = "č" if i in (5, 50) else code  # two substitutions
        hyp.append(AlignEntry(c, 10 * i + shift, 10 * i + 10 + shift))
        if i == 80:
            hyp.append(AlignEntry("š", 10 * i + 10, 10 * i + 12))  # one insertion
    ref_a = Alignment(entries=tuple(ref), num_frames=1000)
    hyp_a = Alignment(entries=tuple(hyp), num_frames=1000)
    return ref_a, hyp_a


def test_fixture_percentages_are_exact(inv):
    ref_a, hyp_a = fixture_pair()
    report = score(ref_a, hyp_a, inv)
    assert report.ref_phones == 100
    assert (report.substitutions, report.deletions, report.insertions) == (2, 1, 1)
    assert report.matches == 97
    assert report.shifted_near == 3
    assert report.shifted_far == 0
    assert report.mismatch_pct == 4.0
    assert report.near_pct == 3.0
    assert report.far_pct == 0.0
    assert report.combined_pct == 7.0


def test_fixture_table_prints_two_decimals(inv):
    ref_a, hyp_a = fixture_pair()
    table = score(ref_a, hyp_a, inv).as_table()
    lines = table.splitlines()
    assert len(lines) == 4
    assert lines[0].startswith("phone mismatch %") and lines[0].endswith("4.00")
    assert lines[1].startswith("center shift > 0.1 s %") and lines[1].endswith("3.00")
    assert lines[2].startswith("center shift > 0.2 s %") and lines[2].endswith("0.00")
    assert lines[3].startswith("combined error %") and lines[3].endswith("7.00")


def test_fixture_json_round_trips(inv):
    ref_a, hyp_a = fixture_pair()
    blob = json.loads(score(ref_a, hyp_a, inv).as_json())
    assert blob["ref_phones"] == 100
    assert blob["mismatch_pct"] == 4.0
    assert blob["shift_over_0.1s_pct"] == 3.0
    assert blob["shift_over_0.2s_pct"] == 0.0
    assert blob["combined_pct"] == 7.0


def test_identical_alignments_score_zero(inv):
    ref_a, _ = fixture_pair()
    report = score(ref_a, ref_a, inv)
    assert report.matches == 100
    assert report.combined_pct == 0.0
    assert report.shifted_near == 0


# ---------------------------------------------------------------------------
# shift thresholds and silence handling


def pair_with_offset(frames):
    ref = Alignment(entries=(AlignEntry("a", 100, 110),), num_frames=400)
    hyp = Alignment(entries=(AlignEntry("a", 100 + frames, 110 + frames),),
                    num_frames=400)
    return ref, hyp


def test_shift_thresholds_are_strict(inv):
    # 9 frames = 0.09 s: inside the near band; 11 frames: over 0.1 s;
    # 21 frames: over both thresholds
    for frames, near, far in ((9, 0, 0), (11, 1, 0), (21, 1, 1)):
        ref, hyp = pair_with_offset(frames)
        report = score(ref, hyp, inv)
        assert (report.shifted_near, report.shifted_far) == (near, far), frames
        assert report.matches == 1


def test_silence_is_skipped_by_default(inv):
    ref = Alignment(entries=(AlignEntry("_", 0, 50), AlignEntry("a", 50, 60),
                             AlignEntry("_", 60, 100)), num_frames=100)
    hyp = Alignment(entries=(AlignEntry("a", 50, 60),), num_frames=100)
    report = score(ref, hyp, inv)
    assert report.ref_phones == 1
    assert report.combined_pct == 0.0
    with_sil = score(ref, hyp, inv, include_silence=True)
    assert with_sil.ref_phones == 3
    assert with_sil.deletions == 2


def test_empty_reference_is_an_error(inv):
    empty = Alignment(entries=(AlignEntry("_", 0, 10),), num_frames=10)
    hyp = Alignment(entries=(AlignEntry("a", 0, 10),), num_frames=10)
    with pytest.raises(PrakError, match="no phones"):
        score(empty, hyp, inv)


def test_merged_with_adds_counts(inv):
    ref_a, hyp_a = fixture_pair()
    one = score(ref_a, hyp_a, inv)
    two = one.merged_with(one)
    assert two.ref_phones == 200
    assert two.substitutions == 4
    assert two.shifted_near == 6
    assert two.mismatch_pct == 4.0
    assert two.combined_pct == 7.0


def test_report_counts_are_consistent(inv):
    ref_a, hyp_a = fixture_pair()
    r = score(ref_a, hyp_a, inv)
    assert r.matches + r.substitutions + r.deletions == r.ref_phones
