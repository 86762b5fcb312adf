"""Back-and-forth pebble games between two membership structures.

Two finite universes of hereditarily finite objects face each other.
The spoiler places one of m pebbles on an object of either structure;
the duplicator answers with an object of the other structure, trying to
keep the placed pairs a partial isomorphism for equality and membership
(the constants, empty set and one, count as permanently pebbled).  The
duplicator here is not a search: it carries a concrete strategy that
decomposes the spoiler's object into a form and a molecule, transports
the molecule to the other side so the atom pattern against the other
placed molecules matches, and answers with the form applied there.

`verify_duplicator` drives that strategy through every spoiler sequence
up to a depth and checks the partial-isomorphism condition after each
answer; `solve_game` ignores forms entirely and decides by backward
induction whether the spoiler can force a violation.  The two must
agree on whether the duplicator survives to the given depth (surviving
a bounded game is weaker than winning, so that is the word used).
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field

from .hf import ObjId, Universe
from .symmetry import (
    BudgetExceeded,
    Form,
    Molecule,
    SymmetricFragment,
    form_apply,
    form_key,
    form_of,
)

DEFAULT_NODE_BUDGET = 50_000_000


class PebbleError(Exception):
    """Ill-formed structures, positions, or game parameters."""


class NoExtension(PebbleError):
    """The duplicator found no molecule with the required atom pattern,
    or the transported object is missing; the structure is too small."""


def _node_budget(budget: int | None) -> int:
    if budget is not None:
        return budget
    return int(os.environ.get("CPS_BUDGET", DEFAULT_NODE_BUDGET))


# -- structures ----------------------------------------------------------------

@dataclass
class GameStructure:
    """A finite family of objects closed under elements, with constants.

    `k` is the molecule width used by the duplicator's form strategy;
    `r` records the rank cutoff when the board came from a fragment.
    Strict construction checks transitivity and both constants; pass
    strict=False only to build deliberately broken boards for tests.
    """

    universe: Universe
    objects: tuple[ObjId, ...]
    k: int
    r: int | None = None
    strict: bool = True

    def __post_init__(self):
        self.objects = tuple(self.objects)
        self._index = {x: i for i, x in enumerate(self.objects)}
        if len(self._index) != len(self.objects):
            raise PebbleError("duplicate objects in a game structure")
        if self.k < 1:
            raise PebbleError("molecule width k must be at least 1")
        if self.strict:
            u = self.universe
            if u.empty not in self._index or u.one not in self._index:
                raise PebbleError("game structures must contain 0 and 1")
            for x in self.objects:
                for e in u.elements(x):
                    if e not in self._index:
                        raise PebbleError(
                            f"not element-closed: {u.format_literal(e)} missing"
                        )

    @classmethod
    def from_fragment(cls, frag: SymmetricFragment) -> "GameStructure":
        return cls(frag.universe, frag.objects, frag.k, frag.r)

    def __len__(self) -> int:
        return len(self.objects)

    def __contains__(self, x: ObjId) -> bool:
        return x in self._index

    def index(self, x: ObjId) -> int:
        return self._index[x]

    def literal(self, x: ObjId) -> str:
        return self.universe.format_literal(x)


def pin_pairs(a: GameStructure, b: GameStructure) -> tuple[tuple[ObjId, ObjId], ...]:
    """The permanently pebbled constant pairs (0, 0) and (1, 1)."""
    return (
        (a.universe.empty, b.universe.empty),
        (a.universe.one, b.universe.one),
    )


@dataclass(frozen=True)
class Position:
    """Where the m pebbles sit: one partial placement per structure."""

    a: tuple[ObjId | None, ...]
    b: tuple[ObjId | None, ...]

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise PebbleError("both sides must track the same pebbles")
        for i, (x, y) in enumerate(zip(self.a, self.b)):
            if (x is None) != (y is None):
                raise PebbleError(f"pebble {i} placed on one side only")

    @classmethod
    def empty(cls, m: int) -> "Position":
        return cls((None,) * m, (None,) * m)

    @property
    def m(self) -> int:
        return len(self.a)

    def place(self, pebble: int, x: ObjId, y: ObjId) -> "Position":
        if not 0 <= pebble < self.m:
            raise PebbleError(f"no pebble {pebble}")
        aa = list(self.a)
        bb = list(self.b)
        aa[pebble], bb[pebble] = x, y
        return Position(tuple(aa), tuple(bb))

    def pairs(self) -> tuple[tuple[ObjId, ObjId], ...]:
        return tuple(
            (x, y) for x, y in zip(self.a, self.b) if x is not None
        )


def partial_iso(a: GameStructure, b: GameStructure, pairs) -> str | None:
    """None when the pairs respect equality and membership both ways,
    otherwise a description of the first violated biconditional."""
    ua, ub = a.universe, b.universe
    ps = list(pairs)
    for i, (x1, y1) in enumerate(ps):
        for x2, y2 in ps[i:]:
            if (x1 == x2) != (y1 == y2):
                return (
                    f"equality broken: {ua.format_literal(x1)} vs {ua.format_literal(x2)} "
                    f"against {ub.format_literal(y1)} vs {ub.format_literal(y2)}"
                )
            if ua.contains(x2, x1) != ub.contains(y2, y1):
                return (
                    f"membership broken: {ua.format_literal(x1)} in {ua.format_literal(x2)} "
                    f"against {ub.format_literal(y1)} in {ub.format_literal(y2)}"
                )
            if ua.contains(x1, x2) != ub.contains(y1, y2):
                return (
                    f"membership broken: {ua.format_literal(x2)} in {ua.format_literal(x1)} "
                    f"against {ub.format_literal(y2)} in {ub.format_literal(y1)}"
                )
    return None


# -- the duplicator's strategy ---------------------------------------------------

@dataclass(frozen=True)
class PebblePair:
    """One placed pebble: a shared form with a molecule on each side."""

    phi: Form
    sigma_a: Molecule
    sigma_b: Molecule

    def key(self):
        return (form_key(self.phi), self.sigma_a, self.sigma_b)


@dataclass(frozen=True)
class DuplicatorState:
    """Per-pebble strategy data; None marks an unplaced pebble."""

    entries: tuple[PebblePair | None, ...]

    @classmethod
    def fresh(cls, m: int) -> "DuplicatorState":
        return cls((None,) * m)

    def key(self):
        # pebble identity is irrelevant to the strategy, so sort
        unplaced = ((-1,), (), ())
        return tuple(sorted((unplaced if e is None else e.key()) for e in self.entries))

    def objects(self, a: GameStructure, b: GameStructure):
        """The placed (A-object, B-object) pairs, in pebble order."""
        out = []
        for e in self.entries:
            if e is None:
                out.append(None)
            else:
                out.append(
                    (
                        form_apply(a.universe, e.phi, e.sigma_a),
                        form_apply(b.universe, e.phi, e.sigma_b),
                    )
                )
        return out


def _patterns_match(lead_a, rows_a, lead_b, rows_b) -> bool:
    """The atom-equality pattern of lead_b against rows_b copies that of
    lead_a against rows_a (the rows themselves already agree)."""
    k = len(lead_a)
    for ra, rb in zip(rows_a, rows_b):
        for p in range(k):
            ap = lead_a[p]
            bp = lead_b[p]
            for q in range(k):
                if (ap == ra[q]) != (bp == rb[q]):
                    return False
    return True


def duplicator_respond(
    a: GameStructure,
    b: GameStructure,
    state: DuplicatorState,
    side: int,
    pebble: int,
    x0: ObjId,
) -> tuple[DuplicatorState, ObjId]:
    """Answer a spoiler move: pebble `pebble` placed on x0 in A (side 0)
    or B (side 1).  Returns the updated state and the answer object.

    The spoiler's object is decomposed into form and molecule; the lex
    smallest molecule on the other side whose pattern against the other
    placed molecules matches is used to transport the form across.
    """
    home, other = (a, b) if side == 0 else (b, a)
    if x0 not in home:
        raise PebbleError(f"object not on the board: {home.literal(x0)}")
    if not 0 <= pebble < len(state.entries):
        raise PebbleError(f"no pebble {pebble}")
    phi0, sigma0 = form_of(home.universe, x0, home.k)
    rows_home = []
    rows_other = []
    for j, e in enumerate(state.entries):
        if e is None or j == pebble:
            continue
        rows_home.append(e.sigma_a if side == 0 else e.sigma_b)
        rows_other.append(e.sigma_b if side == 0 else e.sigma_a)
    answer = None
    for tau0 in itertools.permutations(range(other.universe.n_atoms), home.k):
        if _patterns_match(sigma0, rows_home, tau0, rows_other):
            answer = tau0
            break
    if answer is None:
        raise NoExtension(
            f"no {home.k}-molecule over {other.universe.n_atoms} atoms matches "
            f"the pattern of {home.literal(x0)}"
        )
    y0 = form_apply(other.universe, phi0, answer)
    if y0 not in other:
        raise NoExtension(
            f"transported object {other.literal(y0)} is not on the board"
        )
    entry = (
        PebblePair(phi0, sigma0, answer)
        if side == 0
        else PebblePair(phi0, answer, sigma0)
    )
    entries = list(state.entries)
    entries[pebble] = entry
    return DuplicatorState(tuple(entries)), y0


# -- exhaustive strategy verification ---------------------------------------------

@dataclass
class Move:
    side: str  # "A" or "B"
    pebble: int
    spoiler: ObjId
    response: ObjId | None
    note: str = ""


@dataclass
class GameReport:
    survived: bool
    m: int
    depth: int
    nodes: int
    counterexample: list[Move] = field(default_factory=list)

    def describe(self, a: GameStructure, b: GameStructure) -> list[str]:
        word = "survives" if self.survived else "does not survive"
        out = [
            f"duplicator {word} to depth {self.depth} with {self.m} pebbles "
            f"({self.nodes} spoiler moves examined)"
        ]
        for mv in self.counterexample:
            home, other = (a, b) if mv.side == "A" else (b, a)
            reply = "-" if mv.response is None else other.literal(mv.response)
            out.append(
                f"spoiler {mv.side} pebble {mv.pebble} {home.literal(mv.spoiler)}"
                f" -> {reply}" + (f"  [{mv.note}]" if mv.note else "")
            )
        return out


def _compatible(a: GameStructure, b: GameStructure):
    if a.k != b.k:
        raise PebbleError(f"molecule widths differ: {a.k} vs {b.k}")
    if a.r is not None and b.r is not None and a.r != b.r:
        raise PebbleError(f"rank cutoffs differ: {a.r} vs {b.r}")


def verify_duplicator(
    a: GameStructure,
    b: GameStructure,
    m: int,
    depth: int,
    node_budget: int | None = None,
) -> GameReport:
    """Drive the form strategy through every spoiler sequence of length
    <= depth (both sides, every object, every pebble), checking the
    partial-isomorphism condition after each answer.  Returns success or
    the first counterexample trace found."""
    _compatible(a, b)
    if m < 1 or depth < 0:
        raise PebbleError("need at least one pebble and a non-negative depth")
    cap = _node_budget(node_budget)
    pins = pin_pairs(a, b)
    nodes = 0
    seen: set = set()

    def walk(state: DuplicatorState, pairs, depth_left: int):
        nonlocal nodes
        if depth_left == 0:
            return None
        key = (state.key(), depth_left)
        if key in seen:
            return None
        seen.add(key)
        for side, home in ((0, a), (1, b)):
            for i in range(m):
                for x0 in home.objects:
                    nodes += 1
                    if nodes > cap:
                        raise BudgetExceeded(
                            f"verification exceeded {cap} spoiler moves"
                        )
                    try:
                        new_state, y0 = duplicator_respond(a, b, state, side, i, x0)
                    except NoExtension as err:
                        return [Move("AB"[side], i, x0, None, str(err))]
                    new_pairs = list(pairs)
                    new_pairs[i] = (x0, y0) if side == 0 else (y0, x0)
                    reason = partial_iso(
                        a, b, pins + tuple(p for p in new_pairs if p is not None)
                    )
                    move = Move("AB"[side], i, x0, y0, reason or "")
                    if reason is not None:
                        return [move]
                    tail = walk(new_state, new_pairs, depth_left - 1)
                    if tail is not None:
                        return [move] + tail
        return None

    trace = walk(DuplicatorState.fresh(m), [None] * m, depth)
    if trace is None:
        return GameReport(True, m, depth, nodes)
    return GameReport(False, m, depth, nodes, trace)


# -- form-free game solving --------------------------------------------------------

@dataclass
class SolveResult:
    spoiler_wins: bool
    m: int
    depth: int
    nodes: int

    @property
    def duplicator_survives(self) -> bool:
        return not self.spoiler_wins


class _Board:
    """Bitmask membership tables for one structure."""

    def __init__(self, s: GameStructure):
        self.size = len(s.objects)
        self.full = (1 << self.size) - 1
        u = s.universe
        self.elem = [0] * self.size  # bits of the members of object i
        self.cont = [0] * self.size  # bits of the objects containing i
        for i, x in enumerate(s.objects):
            for e in u.elements(x):
                j = s.index(e)
                self.elem[i] |= 1 << j
                self.cont[j] |= 1 << i
        self.empty = s.index(u.empty)
        self.one = s.index(u.one) if u.one in s else None


def _response_mask(home: _Board, other: _Board, x0: int, pairs) -> int:
    """Bits of the other side's objects compatible with all constraints.

    Each constraint pair (h, o) demands the three biconditionals of the
    partial-isomorphism condition between (x0, h) and (answer, o).
    """
    mask = other.full
    for h, o in pairs:
        bit = 1 << o
        if x0 == h:
            mask &= bit
        else:
            mask &= ~bit
        mask &= other.elem[o] if home.elem[h] >> x0 & 1 else ~other.elem[o]
        mask &= other.cont[o] if home.cont[h] >> x0 & 1 else ~other.cont[o]
        if not mask:
            return 0
    return mask


def solve_game(
    a: GameStructure,
    b: GameStructure,
    m: int,
    depth: int,
    node_budget: int | None = None,
) -> SolveResult:
    """Backward induction on positions (the placed pairs, pebble order
    forgotten): can the spoiler force a violated biconditional within
    the given number of moves?  Ignores the form strategy entirely.

    Dropping a placed pair only widens the duplicator's options, so the
    spoiler overwrites a pebble only when all m are placed.
    """
    _compatible(a, b)
    if m < 1 or depth < 0:
        raise PebbleError("need at least one pebble and a non-negative depth")
    cap = _node_budget(node_budget)
    board_a, board_b = _Board(a), _Board(b)
    if board_a.one is None or board_b.one is None:
        raise PebbleError("game structures must contain 0 and 1")
    pins_ab = ((board_a.empty, board_b.empty), (board_a.one, board_b.one))
    pins_ba = tuple((y, x) for x, y in pins_ab)
    sides = (
        (board_a, board_b, pins_ab, False),
        (board_b, board_a, pins_ba, True),
    )
    memo: dict = {}
    nodes = 0

    def wins(pairs: tuple, depth_left: int) -> bool:
        nonlocal nodes
        if depth_left == 0:
            return False
        key = (pairs, depth_left)
        got = memo.get(key)
        if got is not None:
            return got
        victims = range(len(pairs)) if len(pairs) == m else (None,)
        result = False
        for home, other, pins, flipped in sides:
            if result:
                break
            for victim in victims:
                if result:
                    break
                kept = (
                    pairs
                    if victim is None
                    else pairs[:victim] + pairs[victim + 1:]
                )
                constraints = pins + tuple(
                    ((y, x) if flipped else (x, y)) for x, y in kept
                )
                for x0 in range(home.size):
                    nodes += 1
                    if nodes > cap:
                        raise BudgetExceeded(
                            f"game solving exceeded {cap} nodes"
                        )
                    mask = _response_mask(home, other, x0, constraints)
                    if mask == 0:
                        result = True
                        break
                    if depth_left == 1:
                        continue
                    survived = False
                    rest = mask
                    while rest:
                        low = rest & -rest
                        rest ^= low
                        y0 = low.bit_length() - 1
                        pair = (y0, x0) if flipped else (x0, y0)
                        nxt = tuple(sorted(kept + (pair,)))
                        if not wins(nxt, depth_left - 1):
                            survived = True
                            break
                    if not survived:
                        result = True
                        break
        memo[key] = result
        return result

    spoiler = wins((), depth)
    return SolveResult(spoiler, m, depth, nodes)


# -- interactive sessions -----------------------------------------------------------

class GameSession:
    """Holds one game in progress for the line-oriented player."""

    def __init__(self, a: GameStructure, b: GameStructure, m: int):
        _compatible(a, b)
        if m < 1:
            raise PebbleError("need at least one pebble")
        self.a = a
        self.b = b
        self.m = m
        self.state = DuplicatorState.fresh(m)
        self.position = Position.empty(m)
        self.moves: list[Move] = []

    def spoiler_move(self, side: str, pebble: int, literal: str) -> Move:
        """Apply one spoiler move given as a side letter, pebble index,
        and object literal; answers with the strategy's response."""
        if side not in ("A", "B"):
            raise PebbleError("side must be A or B")
        idx = 0 if side == "A" else 1
        home = self.a if idx == 0 else self.b
        try:
            x0 = home.universe.parse_literal(literal)
        except Exception as err:
            raise PebbleError(f"bad object literal: {err}") from err
        if x0 not in home:
            raise PebbleError(f"object not on the board: {literal}")
        new_state, y0 = duplicator_respond(self.a, self.b, self.state, idx, pebble, x0)
        self.state = new_state
        if idx == 0:
            self.position = self.position.place(pebble, x0, y0)
        else:
            self.position = self.position.place(pebble, y0, x0)
        reason = partial_iso(
            self.a,
            self.b,
            pin_pairs(self.a, self.b) + self.position.pairs(),
        )
        move = Move(side, pebble, x0, y0, reason or "")
        self.moves.append(move)
        return move

    def board_lines(self) -> list[str]:
        out = []
        for i, (x, y) in enumerate(zip(self.position.a, self.position.b)):
            if x is None:
                out.append(f"pebble {i}: -")
            else:
                out.append(
                    f"pebble {i}: A {self.a.literal(x)}  |  B {self.b.literal(y)}"
                )
        return out
