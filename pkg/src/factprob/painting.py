"""The parceled painting and its games.

A painting is a ``width x height`` grid of squares.  Each square carries its
location ``(k, h)`` (1-based, origin at the lower-left corner), an opaque
colour-form identity, four edge tokens and an approximate-colour label.  Two
adjacent squares share the token of their common edge; every other token is
unique, which is what makes border-only reconstruction possible.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, SolverError
from .rng import make_rng
from .views import ProbabilityLaw, TrialTrace

SIDES = ("N", "E", "S", "W")
OPPOSITE = {"N": "S", "S": "N", "E": "W", "W": "E"}
STEP = {"N": (0, 1), "S": (0, -1), "E": (1, 0), "W": (-1, 0)}


@dataclass(frozen=True)
class Square:
    loc: tuple[int, int]
    borders: Mapping[str, str] = field(hash=False)
    ac: int
    colour_form: str

    def to_json(self) -> dict:
        return {
            "loc": list(self.loc),
            "colour_form": self.colour_form,
            "borders": {s: self.borders[s] for s in SIDES},
            "ac": self.ac,
        }


@dataclass(frozen=True)
class Painting:
    squares: tuple[Square, ...]
    q: int
    width: int = 10
    height: int = 10

    def __post_init__(self):
        object.__setattr__(self, "squares", tuple(self.squares))
        self.validate()

    def validate(self):
        n = self.width * self.height
        if len(self.squares) != n:
            raise ConfigError(f"expected {n} squares, got {len(self.squares)}", "squares")
        locs = {s.loc for s in self.squares}
        want = {(k, h) for k in range(1, self.width + 1) for h in range(1, self.height + 1)}
        if locs != want:
            raise ConfigError("locations do not tile the grid exactly once", "squares")
        if len({s.colour_form for s in self.squares}) != n:
            raise ConfigError("colour-form identities are not unique", "squares")
        labels = {s.ac for s in self.squares}
        if labels != set(range(1, self.q + 1)):
            raise ConfigError(f"labels {sorted(labels)} do not cover 1..{self.q}", "q")
        if n > 1 and not self.q < n:
            raise ConfigError(f"q={self.q} must be smaller than {n}", "q")
        self._check_borders()

    def _check_borders(self):
        by_loc = self.by_loc()
        uses = Counter(t for s in self.squares for t in s.borders.values())
        for s in self.squares:
            if set(s.borders) != set(SIDES):
                raise ConfigError(f"square {s.loc} lacks a side", "borders")
            for side, token in s.borders.items():
                dx, dy = STEP[side]
                nb = by_loc.get((s.loc[0] + dx, s.loc[1] + dy))
                if nb is None:
                    if uses[token] != 1:
                        raise ConfigError(f"boundary token {token!r} reused", "borders")
                elif nb.borders[OPPOSITE[side]] != token or uses[token] != 2:
                    raise ConfigError(f"edge {s.loc}:{side} does not match uniquely", "borders")

    def by_loc(self) -> dict[tuple[int, int], Square]:
        return {s.loc: s for s in self.squares}

    def colour_counts(self) -> dict[int, int]:
        c = Counter(s.ac for s in self.squares)
        return {j: c[j] for j in range(1, self.q + 1)}

    def layout(self) -> dict[tuple[int, int], str]:
        """Location -> colour-form identity; the reference a reconstruction must match."""
        return {s.loc: s.colour_form for s in self.squares}

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "q": self.q,
            "squares": [s.to_json() for s in sorted(self.squares, key=lambda s: (s.loc[1], s.loc[0]))],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Painting":
        try:
            squares = tuple(
                Square(tuple(sq["loc"]), dict(sq["borders"]), int(sq["ac"]), str(sq["colour_form"]))
                for sq in data["squares"]
            )
            return cls(squares, int(data["q"]), int(data.get("width", 10)), int(data.get("height", 10)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed painting: {exc}") from exc

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "Painting":
        return cls.from_json(json.loads(Path(path).read_text()))


def generate_painting(seed, colour_counts: Mapping[int, int], width=10, height=10) -> Painting:
    """Synthetic painting with the given label histogram; deterministic in ``seed``."""
    counts = {int(j): int(c) for j, c in colour_counts.items()}
    n = width * height
    if sorted(counts) != list(range(1, len(counts) + 1)):
        raise ConfigError("labels must be 1..q", "colour_counts")
    if any(c < 1 for c in counts.values()):
        raise ConfigError("every colour count must be >= 1", "colour_counts")
    if sum(counts.values()) != n:
        raise ConfigError(f"colour counts sum to {sum(counts.values())}, not {n}", "colour_counts")
    rng = make_rng(seed, "painting")

    labels = np.repeat(np.array(sorted(counts)), [counts[j] for j in sorted(counts)])
    rng.shuffle(labels)

    n_edges = 2 * n + width + height
    raw = rng.choice(16**8, size=n_edges, replace=False)
    tokens = iter(f"{int(t):08x}" for t in raw)
    # vert[(k, h)]: edge between (k, h) and (k+1, h); horiz[(k, h)]: between (k, h) and (k, h+1)
    vert = {(k, h): next(tokens) for k in range(width + 1) for h in range(1, height + 1)}
    horiz = {(k, h): next(tokens) for k in range(1, width + 1) for h in range(height + 1)}
    forms = rng.permutation(n)

    squares = []
    for i, (h, k) in enumerate((h, k) for h in range(1, height + 1) for k in range(1, width + 1)):
        borders = {
            "N": horiz[(k, h)],
            "S": horiz[(k, h - 1)],
            "E": vert[(k, h)],
            "W": vert[(k - 1, h)],
        }
        squares.append(Square((k, h), borders, int(labels[i]), f"F{int(forms[i]):03d}"))
    return Painting(tuple(squares), len(counts), width, height)


def factual_law(p: Painting) -> ProbabilityLaw:
    n = len(p.squares)
    return ProbabilityLaw(
        tuple(range(1, p.q + 1)), {j: Fraction(c, n) for j, c in p.colour_counts().items()}
    )


@dataclass
class ReconstructionReport:
    extractions: int
    misplacement_attempts: int
    completed_replicas: int
    extraction_order: list = field(default_factory=list, repr=False)
    grids: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "extractions": self.extractions,
            "misplacement_attempts": self.misplacement_attempts,
            "completed_replicas": self.completed_replicas,
        }


def reconstruct_by_coordinates(p: Painting, seed) -> ReconstructionReport:
    rng = make_rng(seed, "coords")
    order = [p.squares[i] for i in rng.permutation(len(p.squares))]
    grid = {}
    for sq in order:
        # the location label alone decides the place; a clash would mean a broken painting
        if sq.loc in grid:
            raise SolverError(f"two squares claim location {sq.loc}")
        grid[sq.loc] = sq.colour_form
    done = int(grid == p.layout())
    return ReconstructionReport(len(order), 0, done, [s.colour_form for s in order], [grid])


class _Board:
    """One replica under construction, made of rigid fragments.

    Pieces are known only by colour-form and edge tokens.  Each fragment keeps
    its own relative coordinates; ``open`` indexes every unmatched edge token
    of the board, so a drawn piece finds its slot with a dictionary lookup.
    """

    def __init__(self):
        self.frags: dict[int, dict[tuple[int, int], str]] = {}
        self.where: dict[str, tuple[int, tuple[int, int]]] = {}
        self.open: dict[str, tuple[int, tuple[int, int], str]] = {}
        self._next = 0

    def has(self, form):
        return form in self.where

    def place(self, form, borders, pieces):
        """Insert one piece; returns True when it joined an existing fragment."""
        hits = [tok for tok in borders.values() if tok in self.open]
        if hits:
            fid, pos, side = self.open[hits[0]]
            dx, dy = STEP[side]
            mypos = (pos[0] + dx, pos[1] + dy)
        else:
            fid, mypos = self._next, (0, 0)
            self._next += 1
            self.frags[fid] = {}
        frag = self.frags[fid]
        frag[mypos] = form
        self.where[form] = (fid, mypos)
        touched = [form]
        # further hits bridge to other fragments: translate them onto this one
        for tok in hits[1:]:
            entry = self.open.get(tok)
            # entries of fragments merged earlier in this loop are stale until re-indexed
            if entry is None or entry[0] == fid or entry[0] not in self.frags:
                continue
            ofid, opos, _ = entry
            my_side = next(s for s in SIDES if borders[s] == tok)
            dx, dy = STEP[my_side]
            shift = (mypos[0] + dx - opos[0], mypos[1] + dy - opos[1])
            for p, f in self.frags.pop(ofid).items():
                npos = (p[0] + shift[0], p[1] + shift[1])
                frag[npos] = f
                self.where[f] = (fid, npos)
                touched.append(f)
        for f in touched:
            _, p = self.where[f]
            for side in SIDES:
                t = pieces[f][side]
                if f != form and t not in self.open:
                    continue
                dx, dy = STEP[side]
                if (p[0] + dx, p[1] + dy) in frag:
                    self.open.pop(t, None)
                else:
                    self.open[t] = (fid, p, side)
        return bool(hits)

    def layout(self):
        if len(self.frags) != 1:
            return None
        (frag,) = self.frags.values()
        x0 = min(x for x, _ in frag)
        y0 = min(y for _, y in frag)
        return {(x - x0 + 1, y - y0 + 1): f for (x, y), f in frag.items()}


def reconstruct_by_borders(p: Painting, replicas: int, seed) -> ReconstructionReport:
    """Border-only puzzle over ``replicas`` mixed copies of ``p``.

    Each draw goes to the lowest-index board that lacks its colour-form and
    has an open edge it matches; failing that, it starts a new fragment on the
    lowest-index board lacking it.  Every open edge of a board that was tried
    and rejected counts as one misplacement attempt.
    """
    if replicas < 1:
        raise ConfigError("need at least one replica", "replicas")
    # refuse paintings whose borders do not determine the picture
    try:
        p._check_borders()
    except ConfigError as exc:
        raise SolverError(f"borders do not determine the painting ({exc})") from exc
    pool = [s.colour_form for s in p.squares] * replicas
    rng = make_rng(seed, "borders")
    return solve_borders(p, [pool[i] for i in rng.permutation(len(pool))], replicas)


def solve_borders(p: Painting, order: Sequence[str], replicas: int) -> ReconstructionReport:
    """Greedy border matching for an explicit draw ``order`` of colour-forms."""
    pieces = {s.colour_form: dict(s.borders) for s in p.squares}
    if sorted(order) != sorted([s.colour_form for s in p.squares] * replicas):
        raise ConfigError("draw order must hold every piece exactly once per replica", "order")
    boards = [_Board() for _ in range(replicas)]
    misplaced = 0
    for form in order:
        borders = pieces[form]
        target = None
        for b in boards:
            if b.has(form):
                continue
            if any(t in b.open for t in borders.values()):
                target = b
                break
            misplaced += len(b.open)
        if target is None:
            target = next((b for b in boards if not b.has(form)), None)
            if target is None:
                raise SolverError(f"no board can take piece {form}")
        target.place(form, borders, pieces)

    ref = p.layout()
    grids = [b.layout() for b in boards]
    if any(g is None for g in grids):
        raise SolverError("a replica stayed fragmented after all extractions")
    done = sum(g == ref for g in grids)
    if done != replicas:
        raise SolverError(f"only {done} of {replicas} replicas match the painting")
    return ReconstructionReport(len(order), misplaced, done, order, grids)


def probability_game(p: Painting, n: int, seed) -> TrialTrace:
    """``n`` draws with replacement from the ballot box.

    Only the label is meant to be read; ``cells`` keeps the drawn square's
    index for cross-checks.
    """
    if n < 1:
        raise ConfigError("N must be >= 1", "N")
    rng = make_rng(seed, "game")
    idx = rng.integers(0, len(p.squares), size=n)
    ac = np.array([s.ac for s in p.squares])
    return TrialTrace(ac[idx], cells=idx)
