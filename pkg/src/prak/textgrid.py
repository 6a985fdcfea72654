"""Praat TextGrid reading and writing.

The writer produces the long ("ooTextFile") format, UTF-8 without BOM,
six-decimal times, which every Praat since 4.x opens.  Writing is
canonical: parsing a written file and writing it again reproduces the bytes
exactly, so diffs on TextGrids are meaningful.

The parser accepts both the long and the short format, UTF-8 with or
without BOM, and UTF-16 with BOM (Praat's default save encoding for many
locales), with LF or CRLF endings.  Only interval tiers are supported;
point tiers are a hard error rather than a silent drop.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import TextGridError

TIME_EPS = 1e-6  # tolerance for tier/grid boundary agreement when parsing


@dataclass
class Interval:
    xmin: float
    xmax: float
    text: str


@dataclass
class Tier:
    name: str
    intervals: list[Interval] = field(default_factory=list)

    @property
    def xmin(self) -> float:
        return self.intervals[0].xmin

    @property
    def xmax(self) -> float:
        return self.intervals[-1].xmax


@dataclass
class TextGrid:
    xmin: float
    xmax: float
    tiers: list[Tier] = field(default_factory=list)

    def tier(self, name: str) -> Tier:
        for t in self.tiers:
            if t.name == name:
                return t
        raise TextGridError(f"no tier named {name!r}")


def _validate(grid: TextGrid) -> None:
    if grid.xmax <= grid.xmin:
        raise TextGridError("TextGrid end time must be after its start time")
    if not grid.tiers:
        raise TextGridError("TextGrid has no tiers")
    for tier in grid.tiers:
        if not tier.intervals:
            raise TextGridError(f"tier {tier.name!r} has no intervals")
        prev = None
        for iv in tier.intervals:
            if iv.xmax <= iv.xmin:
                raise TextGridError(
                    f"tier {tier.name!r}: interval [{iv.xmin}, {iv.xmax}] is empty or reversed")
            if prev is not None and abs(iv.xmin - prev.xmax) > TIME_EPS:
                raise TextGridError(
                    f"tier {tier.name!r}: gap or overlap at {prev.xmax} vs {iv.xmin}")
            prev = iv
        if abs(tier.intervals[0].xmin - grid.xmin) > TIME_EPS \
                or abs(tier.intervals[-1].xmax - grid.xmax) > TIME_EPS:
            raise TextGridError(
                f"tier {tier.name!r} does not span the whole TextGrid")


def _quote(text: str) -> str:
    return '"' + text.replace('"', '""') + '"'


def write_textgrid(grid: TextGrid, path: str | Path) -> None:
    """Write the long format; validates tiling before touching the file."""
    _validate(grid)
    out = []
    out.append('File type = "ooTextFile"')
    out.append('Object class = "TextGrid"')
    out.append("")
    out.append(f"xmin = {grid.xmin:.6f}")
    out.append(f"xmax = {grid.xmax:.6f}")
    out.append("tiers? <exists>")
    out.append(f"size = {len(grid.tiers)}")
    out.append("item []:")
    for ti, tier in enumerate(grid.tiers, 1):
        out.append(f"    item [{ti}]:")
        out.append('        class = "IntervalTier"')
        out.append(f"        name = {_quote(tier.name)}")
        out.append(f"        xmin = {grid.xmin:.6f}")
        out.append(f"        xmax = {grid.xmax:.6f}")
        out.append(f"        intervals: size = {len(tier.intervals)}")
        for ii, iv in enumerate(tier.intervals, 1):
            out.append(f"        intervals [{ii}]:")
            out.append(f"            xmin = {iv.xmin:.6f}")
            out.append(f"            xmax = {iv.xmax:.6f}")
            out.append(f"            text = {_quote(iv.text)}")
    data = "\n".join(out) + "\n"
    Path(path).write_bytes(data.encode("utf-8"))


def _decode(raw: bytes, path) -> str:
    if raw.startswith(b"\xff\xfe") or raw.startswith(b"\xfe\xff"):
        return raw.decode("utf-16")
    if raw.startswith(b"\xef\xbb\xbf"):
        raw = raw[3:]
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise TextGridError(f"{path}: undecodable bytes at offset {e.start}") from None


class _Cursor:
    """Line cursor over a TextGrid file with position-aware errors."""

    def __init__(self, lines: list[str], path):
        self.lines = lines
        self.pos = 0
        self.path = path

    def fail(self, msg: str):
        # pos already sits past the consumed line, so it is its 1-based number
        raise TextGridError(f"{self.path}:{self.pos}: {msg}")

    def next_line(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        raise TextGridError(f"{self.path}: file ends too early")

    def peek(self) -> str:
        save = self.pos
        try:
            return self.next_line()
        finally:
            self.pos = save

    def number(self, key: str | None = None) -> float:
        line = self.next_line()
        if key is not None and not line.startswith(key):
            self.fail(f"expected {key!r}, got {line!r}")
        m = re.search(r"=\s*(\S+)\s*$", line) if key is not None else None
        token = m.group(1) if m else line.split()[-1]
        try:
            return float(token)
        except ValueError:
            self.fail(f"expected a number, got {token!r}")

    def integer(self, key: str | None = None) -> int:
        return int(self.number(key))

    def string(self, key: str | None = None) -> str:
        line = self.next_line()
        if key is not None and not line.startswith(key):
            self.fail(f"expected {key!r}, got {line!r}")
        start = line.find('"')
        if start < 0:
            self.fail(f"expected a quoted string in {line!r}")
        chunk = line[start + 1:]
        parts = []
        while True:
            out = []
            i = 0
            closed = False
            while i < len(chunk):
                if chunk[i] == '"':
                    if i + 1 < len(chunk) and chunk[i + 1] == '"':
                        out.append('"')
                        i += 2
                        continue
                    closed = True
                    break
                out.append(chunk[i])
                i += 1
            parts.append("".join(out))
            if closed:
                return "".join(parts)
            # the label continues on the next raw line
            if self.pos >= len(self.lines):
                self.fail("unterminated quoted string")
            chunk = self.lines[self.pos]
            self.pos += 1
            parts.append("\n")


def parse_textgrid(path: str | Path) -> TextGrid:
    raw = Path(path).read_bytes()
    text = _decode(raw, path)
    lines = text.splitlines()
    cur = _Cursor(lines, path)

    header = cur.next_line()
    if "ooTextFile" not in header:
        raise TextGridError(f"{path}: not a Praat text file")
    obj = cur.next_line()
    if "TextGrid" not in obj:
        raise TextGridError(f"{path}: not a TextGrid (object class {obj!r})")

    long_format = cur.peek().replace(" ", "").startswith("xmin=")
    if long_format:
        grid = _parse_long(cur)
    else:
        grid = _parse_short(cur)
    _validate(grid)
    return grid


def _parse_long(cur: _Cursor) -> TextGrid:
    xmin = cur.number("xmin")
    xmax = cur.number("xmax")
    if "<exists>" not in cur.next_line():
        raise TextGridError(f"{cur.path}: TextGrid without tiers")
    size = cur.integer("size")
    line = cur.next_line()  # item []:
    if not line.startswith("item"):
        cur.fail(f"expected the tier list, got {line!r}")
    tiers = []
    for _ in range(size):
        line = cur.next_line()  # item [k]:
        if not line.startswith("item"):
            cur.fail(f"expected a tier item, got {line!r}")
        klass = cur.string("class")
        if klass != "IntervalTier":
            cur.fail(f"unsupported tier class {klass!r} (only IntervalTier)")
        name = cur.string("name")
        cur.number("xmin")
        cur.number("xmax")
        count = cur.integer("intervals: size")
        intervals = []
        for _ in range(count):
            line = cur.next_line()  # intervals [k]:
            if not line.startswith("intervals"):
                cur.fail(f"expected an interval item, got {line!r}")
            ivmin = cur.number("xmin")
            ivmax = cur.number("xmax")
            text = cur.string("text")
            intervals.append(Interval(ivmin, ivmax, text))
        tiers.append(Tier(name=name, intervals=intervals))
    return TextGrid(xmin=xmin, xmax=xmax, tiers=tiers)


def _parse_short(cur: _Cursor) -> TextGrid:
    xmin = cur.number()
    xmax = cur.number()
    if "<exists>" not in cur.next_line():
        raise TextGridError(f"{cur.path}: TextGrid without tiers")
    size = cur.integer()
    tiers = []
    for _ in range(size):
        klass = cur.string()
        if klass != "IntervalTier":
            cur.fail(f"unsupported tier class {klass!r} (only IntervalTier)")
        name = cur.string()
        cur.number()
        cur.number()
        count = cur.integer()
        intervals = []
        for _ in range(count):
            ivmin = cur.number()
            ivmax = cur.number()
            text = cur.string()
            intervals.append(Interval(ivmin, ivmax, text))
        tiers.append(Tier(name=name, intervals=intervals))
    return TextGrid(xmin=xmin, xmax=xmax, tiers=tiers)


def grid_from_alignment(alignment, inventory, xmax: float | None = None) -> TextGrid:
    """Word and phone tiers from an alignment; phones labeled in SAMPA,
    silence intervals left blank."""
    from .features import FRAME_SHIFT_S

    total = xmax if xmax is not None else alignment.num_frames * FRAME_SHIFT_S
    sil = inventory.silence

    def label(code: str) -> str:
        return "" if code == sil else inventory.to_sampa(code)

    phone_iv = [Interval(e.start_s, e.end_s, label(e.code)) for e in alignment.entries]
    word_iv = [Interval(w.start_s, w.end_s, w.word) for w in alignment.words]
    return TextGrid(xmin=0.0, xmax=total, tiers=[
        Tier(name="word", intervals=_pad(word_iv, total)),
        Tier(name="phone", intervals=_pad(phone_iv, total)),
    ])


def _pad(intervals: list[Interval], total: float) -> list[Interval]:
    """Stretch the last interval (or add an empty one) to reach the end time."""
    if not intervals:
        return [Interval(0.0, total, "")]
    if total - intervals[-1].xmax > TIME_EPS:
        if intervals[-1].text == "":
            intervals[-1] = Interval(intervals[-1].xmin, total, "")
        else:
            intervals.append(Interval(intervals[-1].xmax, total, ""))
    else:
        intervals[-1] = Interval(intervals[-1].xmin, total, intervals[-1].text)
    return intervals
