"""Ordered cut-based selections with cutflow bookkeeping."""

from __future__ import annotations

import csv
import io
import math
import operator
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import DomainError
from .quantities import check_quantity, evaluate_quantity

COMPARATORS = {
    "<": operator.lt, "<=": operator.le, "≤": operator.le,
    ">": operator.gt, ">=": operator.ge, "≥": operator.ge,
    "==": operator.eq,
}
_CANONICAL = {"≤": "<=", "≥": ">="}


@dataclass(frozen=True)
class Cut:
    name: str
    quantity: str
    comparator: str
    threshold: float

    def __post_init__(self):
        if self.comparator not in COMPARATORS:
            raise DomainError(f"cut {self.name!r}: unknown comparator {self.comparator!r}")
        object.__setattr__(self, "comparator", _CANONICAL.get(self.comparator, self.comparator))
        check_quantity(self.quantity)
        if not isinstance(self.threshold, (int, float)) or math.isnan(self.threshold):
            raise DomainError(f"cut {self.name!r}: threshold must be a number")

    def passes(self, value) -> bool:
        # absent quantities fail every cut
        if value is None:
            return False
        return bool(COMPARATORS[self.comparator](value, self.threshold))

    def __str__(self):
        return f"{self.name} {self.quantity} {self.comparator} {self.threshold:g}"


@dataclass(frozen=True)
class SelectionSpec:
    cuts: tuple[Cut, ...] = ()

    def __post_init__(self):
        cuts = tuple(c if isinstance(c, Cut) else Cut(*c) for c in self.cuts)
        names = [c.name for c in cuts]
        if len(set(names)) != len(names):
            raise DomainError("cut names must be unique")
        object.__setattr__(self, "cuts", cuts)

    def __len__(self):
        return len(self.cuts)

    def to_text(self) -> str:
        return "".join(f"{c}\n" for c in self.cuts)


def parse_selection(text: str) -> SelectionSpec:
    """Read ``name quantity comparator threshold`` lines; ``#`` comments."""
    cuts = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise DomainError(f"selection line {lineno}: expected 'name quantity comparator threshold'")
        name, qid, op, thr = parts
        try:
            value = float(thr)
        except ValueError:
            raise DomainError(f"selection line {lineno}: bad threshold {thr!r}") from None
        cuts.append(Cut(name, qid, op, value))
    return SelectionSpec(tuple(cuts))


def load_selection(path) -> SelectionSpec:
    return parse_selection(Path(path).read_text())


W_SELECTION = SelectionSpec((
    Cut("one_muon", "reco_muon_count", "==", 1),
    Cut("muon_pt", "leading_muon_pt", ">", 25.0),
    Cut("met", "met_pt", ">", 30.0),
    Cut("isolation", "leading_muon_reliso", "<", 0.1),
))


@dataclass(frozen=True)
class CutflowRow:
    name: str
    events_in: int
    events_passed: int
    weighted_in: float
    weighted_passed: float

    @property
    def efficiency(self) -> float:
        return self.events_passed / self.events_in if self.events_in else 0.0


@dataclass
class Cutflow:
    rows: list[CutflowRow] = field(default_factory=list)
    n_events: int = 0
    total_weight: float = 0.0

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def events_passed(self) -> int:
        return self.rows[-1].events_passed if self.rows else self.n_events

    @property
    def weighted_passed(self) -> float:
        return self.rows[-1].weighted_passed if self.rows else self.total_weight

    def telescopes(self) -> bool:
        if not self.rows:
            return True
        if self.rows[0].events_in != self.n_events or self.rows[0].weighted_in != self.total_weight:
            return False
        return all(a.events_passed == b.events_in and a.weighted_passed == b.weighted_in
                   for a, b in zip(self.rows, self.rows[1:]))

    def to_text(self) -> str:
        lines = [f"{'cut':<16} {'in':>9} {'passed':>9} {'eff':>7} {'w_in':>14} {'w_passed':>14}"]
        for r in self.rows:
            lines.append(f"{r.name:<16} {r.events_in:>9d} {r.events_passed:>9d} {r.efficiency:>7.4f} "
                         f"{r.weighted_in:>14.6g} {r.weighted_passed:>14.6g}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "events_in", "events_passed", "weighted_in", "weighted_passed"])
        for r in self.rows:
            w.writerow([r.name, r.events_in, r.events_passed, repr(r.weighted_in), repr(r.weighted_passed)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"n_events": self.n_events, "total_weight": self.total_weight,
                "rows": [asdict(r) for r in self.rows]}


def _event_weights(events, weights):
    from ..toygen import WeightedSample

    if isinstance(events, WeightedSample):
        base = events.weights
        events = list(events.events)
        if weights is not None:
            base = base * np.asarray(weights, dtype=float)
        return events, base
    events = list(events)
    if weights is None:
        return events, np.ones(len(events))
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(events),):
        raise DomainError("weights must have one entry per event")
    return events, w


def apply_selection(events, spec: SelectionSpec, weights: Sequence[float] | None = None):
    """Apply the cuts in order.

    Returns ``(mask, cutflow)``: a boolean array marking events passing
    every cut, and per-cut counts where cut ``k`` sees exactly the events
    that passed cuts ``0 .. k-1``.  Weighted sums are compensated.
    """
    events, w = _event_weights(events, weights)
    n = len(events)
    alive = np.ones(n, dtype=bool)
    wl = w.tolist()
    total = math.fsum(wl)
    rows = []
    w_in = total
    for cut in spec.cuts:
        idx = np.nonzero(alive)[0]
        n_in = len(idx)
        for i in idx:
            if not cut.passes(evaluate_quantity(events[i], cut.quantity)):
                alive[i] = False
        w_passed = math.fsum(wl[i] for i in np.nonzero(alive)[0])
        rows.append(CutflowRow(cut.name, n_in, int(alive.sum()), w_in, w_passed))
        w_in = w_passed
    return alive, Cutflow(rows, n, total)
