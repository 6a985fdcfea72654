"""Czech pronunciation generation.

Two stages.  ``base_transcribe`` turns one spelling into one phone string by
the deterministic reading rules (digraphs, diphthongs, ě resolution, i/í
palatalization).  A cascade of small finite-state transducers then rewrites
whole utterances into pronunciation variants: voicing assimilation, palatal
place assimilation, velar nasals, and the optional insertions (glottal stop,
intervocalic j).

Czech assimilation is regressive, a sound changes because of what FOLLOWS
it, so the transducers run right to left: the machine consumes phones from
the end of the utterance towards the start, and each step may emit several
alternative rewrites for the consumed phone.  Word boundaries matter twice:
some rules reset there, and a boundary where the speaker may or may not
pause yields both assimilated and pause forms.  The result is kept as a
"sausage": a sequence of slots, each holding alternative phone strings, with
optional-silence slots between words.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import G2pError
from .phones import PhoneInventory
from .textnorm import CleanText, ExceptionRuleSet, apply_exceptions


@dataclass(frozen=True)
class Slot:
    """One sausage position: alternatives are phone-code strings, "" = skip."""
    alternatives: tuple[str, ...]
    origin: int | None = None  # index of the source word, None for boundaries


@dataclass(frozen=True)
class PronSausage:
    slots: tuple[Slot, ...]
    words: tuple[str, ...] = ()

    def canonical_path(self) -> str:
        return "".join(s.alternatives[0] for s in self.slots)

    def path_count(self) -> int:
        n = 1
        for s in self.slots:
            n *= len(s.alternatives)
        return n

    def word_slots(self) -> list[Slot]:
        return [s for s in self.slots if s.origin is not None]


# ---------------------------------------------------------------------------
# letter-to-phone base rules

_LETTER_MAP = {
    "a": "a", "á": "á", "b": "b", "c": "c", "č": "č", "d": "d", "ď": "ď",
    "e": "e", "é": "é", "f": "f", "g": "g", "h": "h", "i": "i", "í": "í",
    "j": "j", "k": "k", "l": "l", "m": "m", "n": "n", "ň": "ň", "o": "o",
    "ó": "ó", "p": "p", "r": "r", "ř": "ř", "s": "s", "š": "š", "t": "t",
    "ť": "ť", "u": "u", "ú": "ú", "ů": "ú", "v": "v", "w": "v", "y": "i",
    "ý": "í", "z": "z", "ž": "ž",
}

_DIPHTHONG = {"o": "O", "a": "A", "e": "E"}
_PALATAL = {"d": "ď", "t": "ť", "n": "ň"}


def base_transcribe(word: str) -> str:
    """One spelling -> one phone-code string by Czech reading rules.

    Handles: ch digraph, ou/au/eu diphthongs, ě after b/p/v/f/m/d/t/n,
    palatalization of d/t/n before i/í, y as plain i, and the q/w/x/ů
    spelling conventions.  Anything else unmappable raises.
    """
    out: list[str] = []
    i = 0
    while i < len(word):
        ch = word[i]
        nxt = word[i + 1] if i + 1 < len(word) else ""
        if ch == "c" and nxt == "h":
            out.append("x")
            i += 2
        elif ch in _DIPHTHONG and nxt == "u":
            out.append(_DIPHTHONG[ch])
            i += 2
        elif ch == "ě":
            prev = out[-1] if out else ""
            if prev in ("b", "p", "v", "f"):
                out += ["j", "e"]
            elif prev == "m":
                out += ["ň", "e"]
            elif prev in _PALATAL:
                out[-1] = _PALATAL[prev]
                out.append("e")
            else:
                out.append("e")  # bare ě is not valid Czech; read it as e
            i += 1
        elif ch in ("i", "í"):
            if out and out[-1] in _PALATAL:
                out[-1] = _PALATAL[out[-1]]
            out.append(ch)
            i += 1
        elif ch == "y":
            out.append("i")
            i += 1
        elif ch == "ý":
            out.append("í")
            i += 1
        elif ch == "q":
            out += ["k", "v"]
            i += 2 if nxt == "u" else 1
        elif ch == "x":
            out += ["k", "s"]
            i += 1
        else:
            code = _LETTER_MAP.get(ch)
            if code is None:
                raise G2pError(f"cannot transcribe letter {ch!r} in word {word!r}")
            out.append(code)
            i += 1
    return "".join(out)


# ---------------------------------------------------------------------------
# backward transducers

class BackwardFst:
    """A right-to-left rewrite machine.

    ``step(state, code)`` consumes one phone (the machine moves leftwards)
    and returns an ordered list of (next state, emission) branches; the
    emission is the rewrite of the consumed phone, written left-to-right,
    and may be empty (held back) or several codes (resolved later plus the
    held one).  The first branch must be the least modified reading so that
    canonical paths stay first.

    ``at_word_start`` runs when the machine falls off the left edge of a
    word: it may emit a prefix (inserted phones, held material) and fixes
    the exit state.  ``cross_boundary`` maps a word's exit state to the
    entry state for the word on its left; the default forgets everything.
    """

    name = "fst"
    initial: object = None

    def step(self, state, code: str) -> list[tuple[object, str]]:
        raise NotImplementedError

    def cross_boundary(self, state) -> object:
        return self.initial

    def at_word_start(self, state) -> list[tuple[str, object]]:
        return [("", state)]


def _uniq(items: Iterable) -> list:
    seen = set()
    out = []
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def transduce_word(fst: BackwardFst, text: str, entry) -> list[tuple[str, object]]:
    """All rewrites of one word given the entry state at its right edge.

    Returns ordered unique (emission, exit state) pairs; the exit state is
    what the word to the left will see after ``cross_boundary``.
    """
    paths: list[tuple[object, str]] = [(entry, "")]
    for code in reversed(text):
        nxt = []
        for state, suffix in paths:
            for new_state, emit in fst.step(state, code):
                nxt.append((new_state, emit + suffix))
        paths = nxt
    final = []
    for state, emitted in paths:
        for prefix, exit_state in fst.at_word_start(state):
            final.append((prefix + emitted, exit_state))
    return _uniq(final)


def apply_fst_layer(fst: BackwardFst, word_alts: list[list[str]]) -> list[list[str]]:
    """Run one transducer over a whole utterance of per-word alternatives."""
    entry_states = [fst.initial]
    out: list[list[str]] = [[] for _ in word_alts]
    for wi in range(len(word_alts) - 1, -1, -1):
        emissions: list[str] = []
        exits: list[object] = []
        for alt in word_alts[wi]:
            for st in entry_states:
                for text, ex in transduce_word(fst, alt, st):
                    if text not in emissions:
                        emissions.append(text)
                    exits.append(ex)
        out[wi] = emissions
        entry_states = _uniq(fst.cross_boundary(ex) for ex in _uniq(exits))
    return out


class SoftEFst(BackwardFst):
    """Resolves a soft-ě marker against the consonant on its left.

    The normal pipeline resolves ě in ``base_transcribe`` already, so on
    pipeline input this layer is an identity; it exists so phone strings
    carrying a raw "ě" marker (hand-written pronunciations) go through the
    same cascade.
    """

    name = "soft-e"
    IDLE, PENDING = "idle", "pending"
    initial = IDLE

    def __init__(self, inventory: PhoneInventory):
        self.inv = inventory

    def step(self, state, code):
        if state == self.PENDING:
            if code in ("b", "p", "v", "f"):
                return [(self.IDLE, code + "je")]
            if code == "m":
                return [(self.IDLE, "mňe")]
            if code in _PALATAL:
                return [(self.IDLE, _PALATAL[code] + "e")]
            if code == "ě":
                return [(self.PENDING, "e")]
            return [(self.IDLE, code + "e")]
        if code == "ě":
            return [(self.PENDING, "")]
        return [(self.IDLE, code)]

    def at_word_start(self, state):
        if state == self.PENDING:
            return [("e", self.IDLE)]
        return [("", state)]


class VoicingFst(BackwardFst):
    """Regressive voicing assimilation, final devoicing, boundary variants.

    States encode what the already-consumed right context demands:

    - ``pause``: utterance end; voiced obstruents devoice.
    - ``vls`` / ``vcd``: a voiceless/voiced obstruent trigger follows;
      obstruents flip to match.
    - ``son``: a sonorant or vowel follows; written voicing survives.
    - ``bson`` / ``bvcd``: same demands across a word boundary, where the
      speaker may pause instead, so obstruents emit both readings.
    - ``pr`` / ``pr2``: an ř was consumed and its voicing waits for the
      phone on its left (ř assimilates but never triggers); ``pr2`` is the
      boundary flavour that may emit both forms.

    The labiodental v assimilates like any obstruent but triggers nothing:
    the state passes through it unchanged.
    """

    name = "voicing"
    PAUSE, SON, VLS, VCD, BSON, BVCD, PR, PR2 = (
        "pause", "son", "vls", "vcd", "bson", "bvcd", "pr", "pr2")
    initial = PAUSE

    def __init__(self, inventory: PhoneInventory):
        self.inv = inventory
        self.partner = {p.code: p.partner for p in inventory if p.partner is not None}
        self.r_hacek = "ř" if "ř" in inventory and "Ř" in inventory else None
        self.vee = "v" if "v" in inventory else None

    def _resolved_r(self, left_voiceless: bool) -> str:
        return "Ř" if left_voiceless else "ř"

    def _after(self, code: str) -> str:
        """State seen by the phone left of ``code`` in neutral context."""
        p = self.inv.get(code)
        if p.is_vowel_like or p.klass == "sonorant":
            return self.SON
        if p.klass == "silence":
            return self.PAUSE
        if code == self.vee or code == self.r_hacek or code == "Ř":
            return self.SON
        return self.VLS if p.voicing == "voiceless" else self.VCD

    def step(self, state, code):
        p = self.inv.get(code)

        if state in (self.PR, self.PR2):
            # resolve the pending ř by this phone's voicing, then treat
            # this phone as sitting before a sonorant (ř triggers nothing)
            voiceless = (p.is_obstruent and p.voicing == "voiceless") or p.klass == "glottal-stop"
            if state == self.PR and code == self.r_hacek:
                return [(self.PR, "ř")]
            after = self._after(code)
            if state == self.PR2 and not voiceless:
                return [(after, code + "ř"), (after, code + "Ř")]
            return [(after, code + self._resolved_r(voiceless))]

        if p.klass == "silence":
            return [(self.PAUSE, code)]
        if p.is_vowel_like or p.klass == "sonorant":
            return [(self.SON, code)]

        if code == self.r_hacek or code == "Ř":
            if state in (self.VLS, self.PAUSE):
                return [(self.SON, "Ř")]
            if state == self.VCD:
                return [(self.SON, "ř")]
            if state in (self.BSON, self.BVCD):
                return [(self.PR2, "")]
            return [(self.PR, "")]

        if code == self.vee:
            # assimilates, does not trigger: pass the state through
            if state in (self.VLS, self.PAUSE):
                return [(state, "f")]
            if state in (self.BSON, self.BVCD):
                return [(state, "v"), (state, "f")]
            return [(state, "v")]

        # plain obstruents and the glottal stop
        mate = self.partner.get(code)
        voiced_form = code if p.voicing == "voiced" else mate
        voiceless_form = code if p.voicing == "voiceless" else mate
        if state in (self.VLS, self.PAUSE):
            return [(self.VLS, voiceless_form or code)]
        if state == self.VCD:
            return [(self.VCD, voiced_form or code)]
        if state in (self.BSON, self.BVCD):
            first = code  # written form stays canonical
            second = mate
            if second is None:
                return [(self.VLS if p.voicing != "voiced" else self.VCD, first)]
            first_state = self.VLS if p.voicing == "voiceless" else self.VCD
            second_state = self.VCD if p.voicing == "voiceless" else self.VLS
            return [(first_state, first), (second_state, second)]
        # state == SON: written voicing survives and becomes the trigger
        if p.klass == "glottal-stop":
            return [(self.VLS, code)]
        return [(self.VLS if p.voicing == "voiceless" else self.VCD, code)]

    def cross_boundary(self, state):
        if state == self.VLS:
            return self.VLS
        if state == self.VCD:
            return self.BVCD
        return self.BSON

    def at_word_start(self, state):
        if state == self.PR:
            return [("ř", self.SON)]
        if state == self.PR2:
            return [("ř", self.SON), ("Ř", self.SON)]
        return [("", state)]


class PlaceFst(BackwardFst):
    """Optional palatal place assimilation of d/t/n before ď/ť/ň."""

    name = "place"
    NEUT, PAL = "neut", "pal"
    initial = NEUT

    def __init__(self, inventory: PhoneInventory):
        self.inv = inventory
        self.palatals = frozenset(c for c in ("ď", "ť", "ň") if c in inventory)

    def step(self, state, code):
        if state == self.PAL and code in _PALATAL and _PALATAL[code] in self.palatals:
            return [(self.NEUT, code), (self.PAL, _PALATAL[code])]
        return [(self.PAL if code in self.palatals else self.NEUT, code)]


class VelarFst(BackwardFst):
    """Obligatory n -> ŋ before a velar stop, within a word."""

    name = "velar"
    NEUT, VEL = "neut", "vel"
    initial = NEUT

    def __init__(self, inventory: PhoneInventory):
        self.inv = inventory
        self.triggers = frozenset(
            p.code for p in inventory if "velar-trigger" in p.flags)
        self.enabled = "n" in inventory and "N" in inventory

    def step(self, state, code):
        if code in self.triggers:
            return [(self.VEL, code)]
        if state == self.VEL and code == "n" and self.enabled:
            return [(self.NEUT, "N")]
        return [(self.NEUT, code)]


class InsertionFst(BackwardFst):
    """Optional glottal stop before initial vowels, optional j in i-hiatus."""

    name = "insertion"
    NEUT, VOW = "neut", "vow"
    initial = NEUT

    def __init__(self, inventory: PhoneInventory):
        self.inv = inventory
        self.glottal = inventory.glottal_stop

    def step(self, state, code):
        p = self.inv.get(code)
        after = self.VOW if p.is_vowel_like else self.NEUT
        if state == self.VOW and code in ("i", "í") and "j" in self.inv:
            return [(after, code), (after, code + "j")]
        return [(after, code)]

    def at_word_start(self, state):
        if state == self.VOW and self.glottal is not None:
            return [("", self.NEUT), (self.glottal, self.NEUT)]
        return [("", self.NEUT)]


def default_fst_chain(inventory: PhoneInventory) -> list[BackwardFst]:
    return [
        SoftEFst(inventory),
        VoicingFst(inventory),
        PlaceFst(inventory),
        VelarFst(inventory),
        InsertionFst(inventory),
    ]


# ---------------------------------------------------------------------------
# utterance assembly

def apply_backward_fsts(
    word_alts: Sequence[Sequence[str]],
    inventory: PhoneInventory,
    words: Sequence[str] = (),
    chain: Sequence[BackwardFst] | None = None,
) -> PronSausage:
    """Run the transducer cascade and build the variant sausage.

    ``word_alts`` holds, per word, the alternative phone strings feeding the
    cascade (several when exception rules produced spelling variants).
    Boundary slots with an optional silence are placed before, between and
    after the words.
    """
    alts = [list(a) for a in word_alts]
    for fst in chain if chain is not None else default_fst_chain(inventory):
        alts = apply_fst_layer(fst, alts)
    boundary = Slot(alternatives=("", inventory.silence), origin=None)
    slots: list[Slot] = [boundary]
    for wi, wa in enumerate(alts):
        if not wa:
            raise G2pError(f"word {wi} lost all pronunciations in the rewrite cascade")
        slots.append(Slot(alternatives=tuple(wa), origin=wi))
        slots.append(boundary)
    return PronSausage(slots=tuple(slots), words=tuple(words))


def pron_generate(
    clean: CleanText,
    inventory: PhoneInventory | None = None,
    rules: ExceptionRuleSet | None = None,
    chain: Sequence[BackwardFst] | None = None,
) -> PronSausage:
    """Clean words -> pronunciation sausage (the whole G2P pipeline)."""
    inv = inventory if inventory is not None else PhoneInventory.default()
    ruleset = rules if rules is not None else ExceptionRuleSet.empty()
    word_alts: list[list[str]] = []
    for word in clean.words:
        variants = []
        for spelling in apply_exceptions(word, ruleset):
            phones = base_transcribe(spelling)
            for code in phones:
                if code not in inv:
                    raise G2pError(
                        f"word {word!r}: phone {code!r} is not in the inventory")
            if phones and phones not in variants:
                variants.append(phones)
        if not variants:
            raise G2pError(f"word {word!r} has no pronunciation")
        word_alts.append(variants)
    return apply_backward_fsts(word_alts, inv, words=clean.words, chain=chain)


# ---------------------------------------------------------------------------
# rendering

def render_pron(sausage: PronSausage, inventory: PhoneInventory, sampa: bool = False) -> str:
    """Human-readable listing: one line per slot, variants joined by " / "."""
    show = inventory.to_sampa if sampa else inventory.to_ipa
    lines = []
    for slot in sausage.slots:
        if slot.origin is None:
            optional = [a for a in slot.alternatives if a]
            lines.append("[" + " / ".join(show(a) for a in optional) + "]")
        else:
            lines.append(" / ".join(show(a) for a in slot.alternatives))
    return "\n".join(lines)


def dump_sausage(sausage: PronSausage) -> str:
    """Machine-readable dump: one slot per line, alternatives tab-separated,
    the empty alternative written as ∅, phone codes kept internal."""
    lines = []
    for slot in sausage.slots:
        cells = [a if a else "∅" for a in slot.alternatives]
        lines.append("\t".join(cells))
    return "\n".join(lines)
