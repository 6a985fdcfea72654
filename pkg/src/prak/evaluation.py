"""Alignment quality scoring against a reference annotation.

Two alignments are compared as phone sequences first (edit distance, so
differing variant choices and silence insertions are charged fairly), then
matched phones are compared by the time of their interval centers.  All
rates are percentages of the reference phone count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .decoder import Alignment
from .errors import PrakError
from .phones import PhoneInventory

SHIFT_NEAR = 0.1   # seconds
SHIFT_FAR = 0.2


def edit_align(ref: list[str], hyp: list[str]) -> list[tuple[str, int, int]]:
    """Minimum-cost edit script between two label sequences.

    Returns ops ("match"|"sub", ref_i, hyp_j), ("del", ref_i, -1),
    ("ins", -1, hyp_j) in reference order.  Costs are 1 for sub/del/ins.
    Where several scripts tie, matches win over substitutions, then
    deletions, then insertions, so the script is deterministic.
    """
    n, m = len(ref), len(hyp)
    cost = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        cost[i][0] = i
    for j in range(1, m + 1):
        cost[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            same = ref[i - 1] == hyp[j - 1]
            cost[i][j] = min(
                cost[i - 1][j - 1] + (0 if same else 1),
                cost[i - 1][j] + 1,
                cost[i][j - 1] + 1,
            )
    ops: list[tuple[str, int, int]] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and cost[i][j] == cost[i - 1][j - 1]:
            ops.append(("match", i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and cost[i][j] == cost[i - 1][j - 1] + 1:
            ops.append(("sub", i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and cost[i][j] == cost[i - 1][j] + 1:
            ops.append(("del", i - 1, -1))
            i -= 1
        else:
            ops.append(("ins", -1, j - 1))
            j -= 1
    ops.reverse()
    return ops


@dataclass
class EvalReport:
    ref_phones: int
    insertions: int
    deletions: int
    substitutions: int
    matches: int
    shifted_near: int   # matched phones with center shift > SHIFT_NEAR
    shifted_far: int    # ... > SHIFT_FAR

    @property
    def mismatch_pct(self) -> float:
        return 100.0 * (self.insertions + self.deletions + self.substitutions) / self.ref_phones

    @property
    def near_pct(self) -> float:
        return 100.0 * self.shifted_near / self.ref_phones

    @property
    def far_pct(self) -> float:
        return 100.0 * self.shifted_far / self.ref_phones

    @property
    def combined_pct(self) -> float:
        return self.mismatch_pct + self.near_pct

    def merged_with(self, other: "EvalReport") -> "EvalReport":
        return EvalReport(*(getattr(self, f) + getattr(other, f)
                            for f in ("ref_phones", "insertions", "deletions",
                                      "substitutions", "matches",
                                      "shifted_near", "shifted_far")))

    def as_dict(self) -> dict:
        return {
            "ref_phones": self.ref_phones,
            "insertions": self.insertions,
            "deletions": self.deletions,
            "substitutions": self.substitutions,
            "matches": self.matches,
            "mismatch_pct": self.mismatch_pct,
            "shift_over_0.1s_pct": self.near_pct,
            "shift_over_0.2s_pct": self.far_pct,
            "combined_pct": self.combined_pct,
        }

    def as_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def as_table(self) -> str:
        rows = [
            ("phone mismatch %", self.mismatch_pct),
            ("center shift > 0.1 s %", self.near_pct),
            ("center shift > 0.2 s %", self.far_pct),
            ("combined error %", self.combined_pct),
        ]
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{name:<{width}}  {value:6.2f}" for name, value in rows)


def score(ref: Alignment, hyp: Alignment, inventory: PhoneInventory,
          include_silence: bool = False) -> EvalReport:
    """Compare a hypothesis alignment against a reference one."""
    def usable(a: Alignment):
        sil = inventory.silence
        return [e for e in a.entries if include_silence or e.code != sil]

    ref_entries = usable(ref)
    hyp_entries = usable(hyp)
    if not ref_entries:
        raise PrakError("reference alignment has no phones to score against")
    ops = edit_align([e.code for e in ref_entries], [e.code for e in hyp_entries])

    ins = dels = subs = matches = near = far = 0
    for op, i, j in ops:
        if op == "match":
            matches += 1
            rc = (ref_entries[i].start_s + ref_entries[i].end_s) / 2.0
            hc = (hyp_entries[j].start_s + hyp_entries[j].end_s) / 2.0
            shift = abs(rc - hc)
            if shift > SHIFT_NEAR:
                near += 1
            if shift > SHIFT_FAR:
                far += 1
        elif op == "sub":
            subs += 1
        elif op == "del":
            dels += 1
        else:
            ins += 1
    return EvalReport(
        ref_phones=len(ref_entries),
        insertions=ins,
        deletions=dels,
        substitutions=subs,
        matches=matches,
        shifted_near=near,
        shifted_far=far,
    )
