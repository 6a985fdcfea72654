"""Czech phone inventory.

Phones are identified by one-character internal codes (Czech letters where
possible, so transcriptions stay readable while slicing like plain strings).
The full table lives in a TSV data file and carries SAMPA and IPA renderings
plus the articulatory attributes the pronunciation rules key on.  The
inventory order is significant: it defines the output layout of the acoustic
model, so a model file records a digest of the table it was trained with.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import PhoneError

KLASSES = ("vowel", "diphthong", "obstruent", "sonorant", "glottal-stop", "silence")
VOICINGS = ("voiced", "voiceless", "n/a")
KNOWN_FLAGS = ("palatal-candidate", "velar-trigger", "nasal")


@dataclass(frozen=True)
class Phone:
    code: str
    sampa: str
    ipa: str
    klass: str
    voicing: str
    partner: str | None = None
    flags: frozenset[str] = field(default_factory=frozenset)

    @property
    def is_vowel_like(self) -> bool:
        return self.klass in ("vowel", "diphthong")

    @property
    def is_obstruent(self) -> bool:
        return self.klass == "obstruent"


class PhoneInventory:
    """Ordered phone table with lookups by code and by SAMPA symbol."""

    def __init__(self, phones: list[Phone]):
        self._phones = tuple(phones)
        self._by_code = {p.code: p for p in phones}
        self._index = {p.code: i for i, p in enumerate(phones)}
        self._by_sampa = {p.sampa: p for p in phones}
        self._validate()

    def _validate(self) -> None:
        if not self._phones:
            raise PhoneError("inventory is empty")
        if len(self._by_code) != len(self._phones):
            raise PhoneError("duplicate phone codes in inventory")
        silences = [p for p in self._phones if p.klass == "silence"]
        if len(silences) != 1:
            raise PhoneError("inventory must contain exactly one silence phone")
        for p in self._phones:
            if len(p.code) != 1:
                raise PhoneError(f"phone code {p.code!r} is not a single character")
            if p.klass not in KLASSES:
                raise PhoneError(f"phone {p.code!r}: unknown class {p.klass!r}")
            if p.voicing not in VOICINGS:
                raise PhoneError(f"phone {p.code!r}: unknown voicing {p.voicing!r}")
            for f in p.flags:
                if f not in KNOWN_FLAGS:
                    raise PhoneError(f"phone {p.code!r}: unknown flag {f!r}")
            if p.partner is not None:
                q = self._by_code.get(p.partner)
                if q is None:
                    raise PhoneError(f"phone {p.code!r}: partner {p.partner!r} not in inventory")
                if q.partner != p.code:
                    raise PhoneError(f"voicing partnership {p.code!r}/{q.code!r} is not symmetric")
                if q.klass != p.klass or q.flags != p.flags:
                    raise PhoneError(
                        f"partners {p.code!r}/{q.code!r} must differ only in voicing"
                    )
                if {p.voicing, q.voicing} != {"voiced", "voiceless"}:
                    raise PhoneError(
                        f"partners {p.code!r}/{q.code!r} must pair voiced with voiceless"
                    )

    @classmethod
    def from_file(cls, path: str | Path) -> "PhoneInventory":
        phones = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 7:
                raise PhoneError(f"{path}:{lineno}: expected 7 tab-separated columns")
            code, sampa, ipa, klass, voicing, partner, flags = cols
            phones.append(Phone(
                code=code,
                sampa=sampa,
                ipa=ipa,
                klass=klass,
                voicing=voicing,
                partner=None if partner == "-" else partner,
                flags=frozenset() if flags == "-" else frozenset(flags.split(",")),
            ))
        return cls(phones)

    @classmethod
    def default(cls) -> "PhoneInventory":
        global _DEFAULT
        if _DEFAULT is None:
            with resources.as_file(resources.files("prak.data") / "phones.tsv") as p:
                _DEFAULT = cls.from_file(p)
        return _DEFAULT

    def __len__(self) -> int:
        return len(self._phones)

    def __iter__(self):
        return iter(self._phones)

    def __contains__(self, code: str) -> bool:
        return code in self._by_code

    def get(self, code: str) -> Phone:
        try:
            return self._by_code[code]
        except KeyError:
            raise PhoneError(f"unknown phone code {code!r}") from None

    def index(self, code: str) -> int:
        try:
            return self._index[code]
        except KeyError:
            raise PhoneError(f"unknown phone code {code!r}") from None

    def by_sampa(self, sampa: str) -> Phone:
        try:
            return self._by_sampa[sampa]
        except KeyError:
            raise PhoneError(f"no phone with SAMPA symbol {sampa!r}") from None

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(p.code for p in self._phones)

    @property
    def silence(self) -> str:
        return next(p.code for p in self._phones if p.klass == "silence")

    @property
    def glottal_stop(self) -> str | None:
        for p in self._phones:
            if p.klass == "glottal-stop":
                return p.code
        return None

    def voicing_partner(self, code: str) -> str | None:
        return self.get(code).partner

    def to_sampa(self, seq: str) -> str:
        """Render a phone-code string as concatenated SAMPA symbols."""
        return "".join(self._render(seq, "sampa"))

    def to_ipa(self, seq: str) -> str:
        """Render a phone-code string as readable IPA."""
        return "".join(self._render(seq, "ipa"))

    def _render(self, seq: str, attr: str) -> list[str]:
        out = []
        for pos, code in enumerate(seq):
            p = self._by_code.get(code)
            if p is None:
                raise PhoneError(f"unknown phone code {code!r} at position {pos} in {seq!r}")
            out.append(getattr(p, attr))
        return out

    def digest(self) -> bytes:
        """SHA-256 over the ordered table; model files store this."""
        h = hashlib.sha256()
        for p in self._phones:
            flags = ",".join(sorted(p.flags)) or "-"
            row = "\t".join([p.code, p.sampa, p.ipa, p.klass, p.voicing, p.partner or "-", flags])
            h.update(row.encode("utf-8"))
            h.update(b"\n")
        return h.digest()


_DEFAULT: PhoneInventory | None = None
