"""Time alignment: pronunciation sausage -> best phone segmentation.

The sausage is compiled into a left-to-right state graph, one emitting
state per phone occurrence (or a short chain when a minimum duration is
enforced, with the self-loop on the chain's last state).  Empty
alternatives become epsilon edges and are contracted away at build time, so
Viterbi only ever sees emitting states.  Transition weights are uniform;
all discrimination comes from the frame posteriors, optionally divided by
phone priors raised to alpha so that frequent phones (silence above all) do
not crowd out rare ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DecodeError
from .features import FRAME_SHIFT_S
from .g2p import PronSausage
from .phones import PhoneInventory

PRIOR_FLOOR = 1e-5


@dataclass(frozen=True)
class AlignEntry:
    code: str
    start_frame: int
    end_frame: int  # exclusive
    slot: int = -1
    alt: int = -1

    @property
    def start_s(self) -> float:
        return self.start_frame * FRAME_SHIFT_S

    @property
    def end_s(self) -> float:
        return self.end_frame * FRAME_SHIFT_S


@dataclass(frozen=True)
class WordSpan:
    word: str
    start_frame: int
    end_frame: int

    @property
    def start_s(self) -> float:
        return self.start_frame * FRAME_SHIFT_S

    @property
    def end_s(self) -> float:
        return self.end_frame * FRAME_SHIFT_S


@dataclass(frozen=True)
class Alignment:
    entries: tuple[AlignEntry, ...]
    words: tuple[WordSpan, ...] = ()
    num_frames: int = 0

    def frame_labels(self, inventory: PhoneInventory) -> np.ndarray:
        labels = np.zeros(self.num_frames, dtype=np.int32)
        for e in self.entries:
            labels[e.start_frame:e.end_frame] = inventory.index(e.code)
        return labels


@dataclass
class PhonePrior:
    counts: np.ndarray  # float64 frame counts per inventory position

    @classmethod
    def uniform(cls, size: int) -> "PhonePrior":
        return cls(counts=np.ones(size, dtype=np.float64))

    def probs(self) -> np.ndarray:
        total = self.counts.sum()
        if total <= 0:
            raise DecodeError("phone prior has no mass")
        return np.maximum(self.counts / total, PRIOR_FLOOR)


@dataclass
class AlignGraph:
    """Emitting states plus contracted transitions.

    ``preds[s]`` lists the states that can precede s at the next frame,
    including s itself when it carries a self-loop.
    """
    codes: list[str]
    phone_idx: np.ndarray
    slot_idx: np.ndarray
    alt_idx: np.ndarray
    occ_idx: np.ndarray  # phone occurrence id, shared along a duration chain
    preds: list[list[int]]
    starts: list[int]
    ends: list[int]
    min_frames: int
    sausage: PronSausage


def build_graph(sausage: PronSausage, inventory: PhoneInventory,
                min_duration: int = 1) -> AlignGraph:
    """Compile a sausage into the Viterbi graph."""
    if min_duration < 1:
        raise DecodeError("minimum phone duration must be at least 1 frame")

    codes: list[str] = []
    phone_idx: list[int] = []
    slot_idx: list[int] = []
    alt_idx: list[int] = []
    occ_idx: list[int] = []
    self_loop: list[bool] = []
    # frontier: set of emitting states whose successors we are about to add;
    # starts with the virtual entry, represented as state -1
    frontier = [-1]
    succ: dict[int, list[int]] = {-1: []}

    def add_state(code, slot, alt, occ, loop):
        codes.append(code)
        phone_idx.append(inventory.index(code))
        slot_idx.append(slot)
        alt_idx.append(alt)
        occ_idx.append(occ)
        self_loop.append(loop)
        s = len(codes) - 1
        succ[s] = []
        return s

    min_frames = 0
    occ = 0
    for si, slot in enumerate(sausage.slots):
        next_frontier: list[int] = []
        shortest = None
        for ai, alt in enumerate(slot.alternatives):
            if alt == "":
                next_frontier.extend(f for f in frontier if f not in next_frontier)
                shortest = 0 if shortest is None else min(shortest, 0)
                continue
            entry_states = frontier
            for code in alt:
                for d in range(min_duration):
                    s = add_state(code, si, ai, occ, loop=(d == min_duration - 1))
                    for f in entry_states:
                        succ[f].append(s)
                    entry_states = [s]
                occ += 1
            next_frontier.append(entry_states[0])
            alt_len = len(alt) * min_duration
            shortest = alt_len if shortest is None else min(shortest, alt_len)
        if not next_frontier:
            raise DecodeError(f"slot {si} has no usable alternatives")
        frontier = next_frontier
        min_frames += shortest or 0
    ends = [f for f in frontier if f >= 0]

    n = len(codes)
    preds: list[list[int]] = [[] for _ in range(n)]
    for s in range(n):
        if self_loop[s]:
            preds[s].append(s)
    for src, dsts in succ.items():
        if src < 0:
            continue
        for d in dsts:
            preds[d].append(src)
    starts = succ[-1]

    if n and not ends:
        raise DecodeError("alignment graph has no final state")
    return AlignGraph(
        codes=codes,
        phone_idx=np.array(phone_idx, dtype=np.int32),
        slot_idx=np.array(slot_idx, dtype=np.int32),
        alt_idx=np.array(alt_idx, dtype=np.int32),
        occ_idx=np.array(occ_idx, dtype=np.int32),
        preds=preds,
        starts=sorted(set(starts)),
        ends=sorted(set(ends)),
        min_frames=max(min_frames, 1),
        sausage=sausage,
    )


def viterbi(post: np.ndarray, graph: AlignGraph, priors: PhonePrior | None = None,
            alpha: float = 1.0) -> tuple[Alignment, float]:
    """Best path through the graph for a (T, phones) posterior matrix.

    The per-frame score of a state with phone p is
    log post[t, p] - alpha * log prior[p]; transitions are free.  Returns
    the alignment and the total path score.  Ties break towards the lowest
    state index, so equal-score inputs align the same way everywhere.
    """
    post = np.asarray(post, dtype=np.float64)
    t_total = post.shape[0]
    n = len(graph.codes)
    if t_total == 0:
        raise DecodeError("cannot align zero frames of audio")
    if n == 0:
        raise DecodeError("alignment graph has no emitting states")
    if post.ndim != 2 or post.shape[1] <= int(graph.phone_idx.max()):
        raise DecodeError("posterior matrix does not cover the phone inventory")
    if graph.min_frames > t_total:
        raise DecodeError(
            f"text too long for audio: shortest pronunciation needs "
            f"{graph.min_frames} frames, audio has {t_total}")

    logpost = np.log(np.maximum(post, 1e-300))
    if priors is not None and alpha != 0.0:
        adj = logpost[:, graph.phone_idx] - alpha * np.log(priors.probs())[graph.phone_idx]
    else:
        adj = logpost[:, graph.phone_idx]

    neg = -np.inf
    score = np.full(n, neg)
    for s in graph.starts:
        score[s] = adj[0, s]
    back = np.zeros((t_total, n), dtype=np.int32)
    back[0] = -1

    # dense predecessor matrix: trans[s, p] = 0 where p can precede s
    trans = np.full((n, n), neg)
    for s, plist in enumerate(graph.preds):
        trans[s, plist] = 0.0

    for t in range(1, t_total):
        cand = score[None, :] + trans
        best_pred = np.argmax(cand, axis=1)
        score = cand[np.arange(n), best_pred] + adj[t]
        back[t] = best_pred

    ends = np.array(graph.ends, dtype=np.int64)
    final_scores = score[ends]
    if not np.isfinite(final_scores.max()):
        raise DecodeError("no alignment path fits the audio length")
    best_end = int(ends[int(np.argmax(final_scores))])
    total = float(final_scores.max())

    states = np.zeros(t_total, dtype=np.int32)
    states[-1] = best_end
    for t in range(t_total - 1, 0, -1):
        states[t - 1] = back[t, states[t]]
    return _alignment_from_states(states, graph), total


def _alignment_from_states(states: np.ndarray, graph: AlignGraph) -> Alignment:
    """Collapse the per-frame state path into phone intervals and word spans.

    Frames are grouped by phone occurrence id, so the two states of a
    minimum-duration chain fall into one interval while a genuinely repeated
    phone inside one alternative stays two.
    """
    t_total = len(states)
    occs = graph.occ_idx[states]
    entries: list[AlignEntry] = []
    run_start = 0
    for t in range(1, t_total + 1):
        if t == t_total or occs[t] != occs[t - 1]:
            s = int(states[t - 1])
            entries.append(AlignEntry(
                code=graph.codes[s],
                start_frame=run_start,
                end_frame=t,
                slot=int(graph.slot_idx[s]),
                alt=int(graph.alt_idx[s]),
            ))
            run_start = t
    words = _word_spans(entries, graph.sausage)
    return Alignment(entries=tuple(entries), words=words, num_frames=t_total)


def _word_spans(entries, sausage: PronSausage):
    if not sausage.words:
        return ()
    spans: list[WordSpan] = []
    for e in entries:
        origin = sausage.slots[e.slot].origin
        label = sausage.words[origin] if origin is not None else ""
        if spans and e.slot == spans[-1][1]:
            spans[-1] = (WordSpan(label, spans[-1][0].start_frame, e.end_frame), e.slot)
        else:
            spans.append((WordSpan(label, e.start_frame, e.end_frame), e.slot))
    return tuple(s for s, _ in spans)


def bootstrap_alignment(phones, num_frames: int, inventory: PhoneInventory) -> Alignment:
    """Flat-start alignment: 30 ms per phone, centered between equal silences.

    With N phones and T frames, each phone gets 3 frames and the rest is
    split evenly into leading and trailing silence (the odd frame goes to
    the trail).  When 3N exceeds T the phones are squeezed proportionally;
    more phones than frames is an error.
    """
    phones = list(phones)
    n = len(phones)
    if num_frames < 1:
        raise DecodeError("cannot bootstrap zero frames of audio")
    if n == 0:
        sil_only = AlignEntry(inventory.silence, 0, num_frames)
        return Alignment(entries=(sil_only,), words=(), num_frames=num_frames)
    if n > num_frames:
        raise DecodeError(
            f"cannot bootstrap: {n} phones need at least {n} frames, have {num_frames}")
    sil = inventory.silence
    entries: list[AlignEntry] = []
    if 3 * n <= num_frames:
        lead = (num_frames - 3 * n) // 2
        bounds = [lead + 3 * i for i in range(n + 1)]
        if lead:
            entries.append(AlignEntry(sil, 0, lead))
        for i, code in enumerate(phones):
            entries.append(AlignEntry(code, bounds[i], bounds[i + 1]))
        if bounds[-1] < num_frames:
            entries.append(AlignEntry(sil, bounds[-1], num_frames))
    else:
        bounds = [round(i * num_frames / n) for i in range(n + 1)]
        for i, code in enumerate(phones):
            if bounds[i + 1] <= bounds[i]:
                raise DecodeError(
                    f"cannot bootstrap: proportional squeeze leaves phone {i} empty")
            entries.append(AlignEntry(phones[i], bounds[i], bounds[i + 1]))
    return Alignment(entries=tuple(entries), words=(), num_frames=num_frames)
