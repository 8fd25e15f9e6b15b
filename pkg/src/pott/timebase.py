"""TAI/UTC conversion, OWLT envelopes and time-beacon readings."""

from __future__ import annotations

import bisect
import csv
import enum
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import TableGap, WindowNotCovered
from .receipt import TaiTimestamp

# 1958-01-01 -> 1970-01-01 is 4383 days (12 years, 3 of them leap years).
SECONDS_1958_TO_1970 = 4383 * 86400


class PlanetaryDomain(enum.Enum):
    EARTH = "Earth"
    MARS = "Mars"


@dataclass(frozen=True)
class LeapSecondTable:
    """Ordered ``(effective_utc_unix_seconds, tai_minus_utc_seconds)`` entries.

    ``expires`` (Unix seconds) bounds the instants the table vouches for;
    None means open-ended.
    """

    entries: tuple[tuple[int, int], ...]
    expires: int | None = None

    def __post_init__(self):
        entries = tuple((int(a), int(b)) for a, b in self.entries)
        object.__setattr__(self, "entries", entries)
        for (e0, o0), (e1, o1) in zip(entries, entries[1:]):
            if not (e1 > e0 and o1 > o0):
                raise ValueError("leap-second entries must be strictly increasing in both columns")
        if any(o < 0 for _, o in entries):
            raise ValueError("TAI-UTC offsets must be non-negative")

    @classmethod
    def parse(cls, text: str) -> LeapSecondTable:
        entries = []
        expires = None
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "expires":
                expires = int(parts[1])
                continue
            if len(parts) != 2:
                raise ValueError(f"bad leap-second line: {raw!r}")
            entries.append((int(parts[0]), int(parts[1])))
        return cls(tuple(entries), expires)

    @classmethod
    def load(cls, path: str | Path) -> LeapSecondTable:
        return cls.parse(Path(path).read_text())

    @classmethod
    def bundled(cls) -> LeapSecondTable:
        """The snapshot shipped with the package (offset 37 s since 2017-01-01)."""
        text = resources.files("pott").joinpath("data/leap_seconds.txt").read_text()
        return cls.parse(text)

    def offset_at_utc(self, unix: int, extrapolate: bool = False) -> int:
        if not self.entries:
            raise TableGap("leap-second table is empty")
        if self.expires is not None and unix >= self.expires and not extrapolate:
            raise TableGap(f"instant {unix} is past the table expiry {self.expires}")
        idx = bisect.bisect_right([e for e, _ in self.entries], unix) - 1
        if idx < 0:
            if not extrapolate:
                raise TableGap(f"instant {unix} precedes the first table entry")
            idx = 0
        return self.entries[idx][1]


def tai_to_unix_utc(t: TaiTimestamp | int, table: LeapSecondTable, extrapolate: bool = False) -> int:
    """Convert TAI seconds since 1958 to Unix UTC seconds (fraction truncated).

    During an inserted leap second two consecutive TAI seconds map to the
    same Unix second, so the mapping is monotone but not injective there.
    """
    seconds = t.seconds if isinstance(t, TaiTimestamp) else int(t)
    tai_unix = seconds - SECONDS_1958_TO_1970
    if not table.entries:
        raise TableGap("leap-second table is empty")
    chosen = None
    for eff, off in table.entries:
        if tai_unix - off >= eff:
            chosen = off
        else:
            break
    if chosen is None:
        if not extrapolate:
            raise TableGap(f"TAI {seconds} precedes the first table entry")
        chosen = table.entries[0][1]
    unix = tai_unix - chosen
    if table.expires is not None and unix >= table.expires and not extrapolate:
        raise TableGap(f"instant {unix} is past the table expiry {table.expires}")
    return unix


def unix_utc_to_tai(unix: int, table: LeapSecondTable, extrapolate: bool = False) -> TaiTimestamp:
    return TaiTimestamp(unix + table.offset_at_utc(unix, extrapolate) + SECONDS_1958_TO_1970)


@dataclass(frozen=True)
class OwltWindow:
    start_tai: int
    end_tai: int
    min_owlt: int
    max_owlt: int

    def covers(self, t: int | Fraction) -> bool:
        return self.start_tai <= t < self.end_tai


@dataclass(frozen=True)
class OwltEnvelope:
    """Piecewise-constant one-way light time bounds over ``[start, end)`` windows."""

    windows: tuple[OwltWindow, ...]

    def __post_init__(self):
        ws = tuple(sorted(self.windows, key=lambda w: w.start_tai))
        for w in ws:
            if w.end_tai <= w.start_tai or w.min_owlt > w.max_owlt or w.min_owlt < 0:
                raise ValueError(f"malformed OWLT window {w}")
        for a, b in zip(ws, ws[1:]):
            if b.start_tai < a.end_tai:
                raise ValueError("OWLT windows overlap")
        object.__setattr__(self, "windows", ws)

    def window_at(self, t: TaiTimestamp | int) -> OwltWindow:
        value = t.as_seconds() if isinstance(t, TaiTimestamp) else t
        for w in self.windows:
            if w.covers(value):
                return w
        raise WindowNotCovered(f"no OWLT window covers TAI {value}")

    @classmethod
    def single(cls, min_owlt: int, max_owlt: int, start_tai: int = 0, end_tai: int = 2**64) -> OwltEnvelope:
        return cls((OwltWindow(start_tai, end_tai, min_owlt, max_owlt),))

    @classmethod
    def parse_csv(cls, text: str) -> OwltEnvelope:
        rows = csv.DictReader(io.StringIO(text))
        windows = []
        for row in rows:
            windows.append(OwltWindow(
                int(row["start_tai"]), int(row["end_tai"]), int(row["min_owlt"]), int(row["max_owlt"])
            ))
        return cls(tuple(windows))

    @classmethod
    def load(cls, path: str | Path) -> OwltEnvelope:
        return cls.parse_csv(Path(path).read_text())

    def to_csv(self) -> str:
        lines = ["start_tai,end_tai,min_owlt,max_owlt"]
        lines += [f"{w.start_tai},{w.end_tai},{w.min_owlt},{w.max_owlt}" for w in self.windows]
        return "\n".join(lines) + "\n"


def within_owlt_envelope(
    t_send: TaiTimestamp,
    t_recv: TaiTimestamp,
    env: OwltEnvelope,
    slack_seconds: int | float | Fraction = 0,
) -> bool:
    """Inclusive check ``min - slack <= t_recv - t_send <= max + slack``.

    The window is selected by ``t_send``; raises WindowNotCovered if none applies.
    """
    w = env.window_at(t_send)
    transit = Fraction(t_recv.as_seconds()) - Fraction(t_send.as_seconds())
    slack = Fraction(slack_seconds) if not isinstance(slack_seconds, float) else Fraction(str(slack_seconds))
    return w.min_owlt - slack <= transit <= w.max_owlt + slack


@dataclass(frozen=True)
class BeaconReading:
    beacon_id: str
    domain: PlanetaryDomain
    tai: TaiTimestamp
    sigma_t_seconds: float

    def __post_init__(self):
        if self.sigma_t_seconds < 0:
            raise ValueError("sigma_t must be non-negative")

    def to_json(self) -> dict:
        return {
            "beacon_id": self.beacon_id,
            "domain": self.domain.value,
            "tai": self.tai.seconds,
            "tai_frac": self.tai.frac,
            "sigma_t_seconds": self.sigma_t_seconds,
        }

    @classmethod
    def from_json(cls, obj: dict) -> BeaconReading:
        return cls(
            obj["beacon_id"],
            PlanetaryDomain(obj["domain"]),
            TaiTimestamp(int(obj["tai"]), obj.get("tai_frac")),
            obj["sigma_t_seconds"],
        )


def dump_beacons(beacons: Iterable[BeaconReading]) -> str:
    return json.dumps([b.to_json() for b in beacons], indent=2, sort_keys=True) + "\n"


def load_beacons(path: str | Path) -> list[BeaconReading]:
    return [BeaconReading.from_json(o) for o in json.loads(Path(path).read_text())]


def default_slack(beacons: Sequence[BeaconReading]) -> float:
    """Twice the largest beacon uncertainty; zero without beacons."""
    return 2 * max((b.sigma_t_seconds for b in beacons), default=0)
