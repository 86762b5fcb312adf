"""Support sets, k-forms, and rank-bounded symmetric fragments.

The execution modules treat hereditarily finite objects as opaque
values; this module studies how the symmetric group on the atoms acts
on them.  A set X of atoms supports an object y when every permutation
fixing X pointwise fixes y.  An object is k-symmetric when every member
of its transitive closure (itself included) has a support of at most k
atoms.  Such objects decompose as ``form_apply(phi, sigma)`` for a
k-form ``phi`` and a k-molecule ``sigma`` (an injective atom tuple);
the collection of all k-symmetric objects up to a rank cutoff is a
finite membership structure consumed by the pebble-game and logic
layers.

Everything is deterministic: atom subsets are scanned smallest-first
and lexicographically within a size, orbit enumeration follows the
canonical object order, and the builders enforce an object-count budget
(the CPS_BUDGET environment variable overrides the default) because
fragment sizes grow doubly exponentially in the rank cutoff.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass

from .hf import AtomId, ObjId, Perm, Universe, transposition

DEFAULT_BUDGET = 200_000

# k-molecule: k pairwise distinct atom indices.
Molecule = tuple[AtomId, ...]


class SymmetryError(Exception):
    """Malformed molecules, configurations, forms, or fragment data."""


class NoSmallSupport(SymmetryError):
    """No support of size < n/2 exists, so the minimal one is undefined."""

    def __init__(self, obj: ObjId, n: int):
        super().__init__(f"object {obj} has no support smaller than {n}/2 atoms")
        self.obj = obj


class NotKSymmetric(SymmetryError):
    """A transitive member of the object has no support of size <= k."""

    def __init__(self, witness: ObjId, k: int):
        super().__init__(f"transitive member {witness} has no support of size <= {k}")
        self.witness = witness


class NotEnoughAtoms(SymmetryError):
    """The universe has fewer atoms than the construction needs."""


class BudgetExceeded(SymmetryError):
    """An enumeration would overrun the configured object-count budget."""


class InputDependence(SymmetryError):
    """In/Eq tables differed between two atom counts; carries the witness."""

    def __init__(self, witness):
        super().__init__(f"In/Eq tables differ between sample sizes at {witness}")
        self.witness = witness


def resolve_budget(budget: int | None) -> int:
    if budget is not None:
        return budget
    return int(os.environ.get("CPS_BUDGET", DEFAULT_BUDGET))


# -- supports ---------------------------------------------------------------

def is_support(u: Universe, support, obj: ObjId) -> bool:
    """True iff every permutation fixing `support` pointwise fixes obj.

    Transpositions of two atoms outside the support set generate the
    whole pointwise stabilizer, so checking them is exact.
    """
    inside = set(support)
    outside = [a for a in range(u.n_atoms) if a not in inside]
    for a, b in itertools.combinations(outside, 2):
        t = transposition(u.n_atoms, a, b)
        if u.apply_perm(t, obj) != obj:
            return False
    return True


def min_support(u: Universe, obj: ObjId) -> frozenset[AtomId]:
    """The unique minimal support, defined when a support of size < n/2 exists.

    Scans subsets by increasing size, lexicographically within a size.
    The first support found is already the intersection of all supports
    of size < n/2: any two such supports leave an atom outside their
    union, so their intersection is again a support, which forces every
    small support to contain the smallest one.
    """
    memo = u.caches.setdefault("min_support", {})
    if obj in memo:
        got = memo[obj]
        if got is None:
            raise NoSmallSupport(obj, u.n_atoms)
        return got
    n = u.n_atoms
    found = None
    for size in range((n + 1) // 2):  # all sizes < n/2
        for cand in itertools.combinations(range(n), size):
            if is_support(u, cand, obj):
                found = frozenset(cand)
                break
        if found is not None:
            break
    if found is not None and not is_support(u, found, obj):
        raise SymmetryError("support intersection failed verification")
    memo[obj] = found
    if found is None:
        raise NoSmallSupport(obj, n)
    return found


def support_within(u: Universe, obj: ObjId, k: int) -> frozenset[AtomId] | None:
    """Smallest (then lexicographically first) support of size <= k, or None.

    Unlike min_support this stays defined when k >= n/2; the result is
    then a deterministic choice among possibly incomparable supports.
    """
    memo = u.caches.setdefault(("support_within", k), {})
    if obj in memo:
        return memo[obj]
    found = None
    for size in range(min(k, u.n_atoms) + 1):
        for cand in itertools.combinations(range(u.n_atoms), size):
            if is_support(u, cand, obj):
                found = frozenset(cand)
                break
        if found is not None:
            break
    memo[obj] = found
    return found


@dataclass
class SupportReport:
    """Per-object minimal supports of a run's active objects."""

    universe: Universe
    n: int
    k: int
    bound: int
    binomial_ok: bool  # C(n, k+1) > n^k at this n
    supports: dict[ObjId, frozenset[AtomId] | None]
    violations: list[tuple[ObjId, int | None]]
    undetermined: list[ObjId]

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        u = self.universe
        cmp = ">" if self.binomial_ok else "<="
        out = [
            f"support-theorem n={self.n} k={self.k} bound={self.bound} "
            f"active={len(self.supports)}",
            f"binomial C({self.n},{self.k + 1}) {cmp} {self.n}^{self.k}: "
            f"{math.comb(self.n, self.k + 1)} vs {self.n ** self.k}"
            f" ({'hypothesis met' if self.binomial_ok else 'hypothesis not met'})",
        ]
        for obj in sorted(self.supports, key=u.sort_key):
            supp = self.supports[obj]
            shown = (
                "undefined" if supp is None
                else "{" + ",".join(f"a{i}" for i in sorted(supp)) + "}"
            )
            size = "-" if supp is None else str(len(supp))
            out.append(f"object {u.format_literal(obj)} supp={shown} size={size}")
        if self.violations:
            for obj, size in self.violations:
                shown = "undefined" if size is None else str(size)
                out.append(
                    f"violation {u.format_literal(obj)} support size {shown} > {self.k}"
                )
        else:
            out.append("violations: none")
        return out


def check_support_theorem(trace, k: int) -> SupportReport:
    """Minimal supports of every active object of a monitored run.

    Report-only: objects with supports larger than k (or with no small
    support at all, which for k < n/2 is also a violation) are listed,
    along with whether C(n, k+1) > n^k holds at this atom count.
    """
    state = trace.final_state
    u = state.universe
    n = u.n_atoms
    supports: dict[ObjId, frozenset[AtomId] | None] = {}
    violations: list[tuple[ObjId, int | None]] = []
    undetermined: list[ObjId] = []
    for obj in sorted(trace.active_union(), key=u.sort_key):
        try:
            supp = min_support(u, obj)
        except NoSmallSupport:
            supports[obj] = None
            if 2 * k < n:
                violations.append((obj, None))  # no support of size <= k either
            else:
                undetermined.append(obj)
            continue
        supports[obj] = supp
        if len(supp) > k:
            violations.append((obj, len(supp)))
    return SupportReport(
        universe=u,
        n=n,
        k=k,
        bound=trace.bound,
        binomial_ok=math.comb(n, k + 1) > n ** k,
        supports=supports,
        violations=violations,
        undetermined=undetermined,
    )


def smallest_n_binomial(k: int, limit: int = 1_000_000) -> int:
    """Smallest n with C(n, k+1) > n^k, by upward scan."""
    for n in range(1, limit):
        if math.comb(n, k + 1) > n ** k:
            return n
    raise SymmetryError(f"no n below {limit} satisfies C(n,{k + 1}) > n^{k}")


# -- molecules and configurations -------------------------------------------

def check_molecule(u: Universe, mol) -> Molecule:
    mol = tuple(mol)
    if len(set(mol)) != len(mol):
        raise SymmetryError(f"molecule atoms must be distinct: {mol}")
    for a in mol:
        if not 0 <= a < u.n_atoms:
            raise SymmetryError(f"atom index {a} out of range for n={u.n_atoms}")
    return mol


def padded_molecule(u: Universe, support, k: int) -> Molecule:
    """The support in atom order, padded with the smallest outside atoms."""
    supp = sorted(support)
    if len(supp) > k:
        raise SymmetryError(f"support {supp} larger than k={k}")
    pad = [a for a in range(u.n_atoms) if a not in set(supp)]
    need = k - len(supp)
    if need > len(pad):
        raise NotEnoughAtoms(f"cannot pad a molecule to length {k} over {u.n_atoms} atoms")
    return tuple(supp + pad[:need])


@dataclass(frozen=True)
class Config:
    """Equality pattern of ell k-molecules: a partition of the ell x k grid.

    Cells (i, p) and (j, q) share a block iff molecule i at position p
    names the same atom as molecule j at position q.  Within one
    molecule the atoms are distinct, so a block never holds two cells
    of the same row.  Blocks are canonical: sorted internally and by
    their smallest cell.
    """

    ell: int
    k: int
    blocks: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self):
        grid = {(i, p) for i in range(self.ell) for p in range(self.k)}
        seen: set[tuple[int, int]] = set()
        for block in self.blocks:
            if not block:
                raise SymmetryError("empty block in configuration")
            rows = [i for i, _ in block]
            if len(set(rows)) != len(rows):
                raise SymmetryError("block repeats a row; molecules are injective")
            for cell in block:
                if cell in seen:
                    raise SymmetryError(f"cell {cell} in two blocks")
                seen.add(cell)
        if seen != grid:
            raise SymmetryError("blocks do not cover the grid exactly")
        canon = tuple(tuple(sorted(b)) for b in self.blocks)
        if tuple(sorted(canon, key=lambda b: b[0])) != self.blocks:
            raise SymmetryError("blocks not in canonical order; use make_config")

    @property
    def classes(self) -> int:
        return len(self.blocks)

    def related(self, cell_a: tuple[int, int], cell_b: tuple[int, int]) -> bool:
        for block in self.blocks:
            if cell_a in block:
                return cell_b in block
        raise SymmetryError(f"cell {cell_a} outside the grid")


def make_config(ell: int, k: int, blocks) -> Config:
    canon = sorted((tuple(sorted(tuple(c) for c in b)) for b in blocks),
                   key=lambda b: b[0])
    return Config(ell, k, tuple(canon))


def conf(molecules) -> Config:
    """The configuration induced by atom equality across the molecules."""
    mols = [tuple(m) for m in molecules]
    if not mols:
        raise SymmetryError("conf needs at least one molecule")
    k = len(mols[0])
    groups: dict[int, list[tuple[int, int]]] = {}
    for i, m in enumerate(mols):
        if len(m) != k:
            raise SymmetryError("molecules must share one length")
        if len(set(m)) != k:
            raise SymmetryError(f"molecule atoms must be distinct: {m}")
        for p, atom in enumerate(m):
            groups.setdefault(atom, []).append((i, p))
    return make_config(len(mols), k, groups.values())


def realize_config(config: Config, u: Universe) -> tuple[Molecule, ...]:
    """Molecules over the smallest atoms inducing exactly this configuration."""
    if config.classes > u.n_atoms:
        raise NotEnoughAtoms(
            f"{config.classes} classes need {config.classes} atoms, have {u.n_atoms}"
        )
    atom_of_cell: dict[tuple[int, int], int] = {}
    for idx, block in enumerate(config.blocks):
        for cell in block:
            atom_of_cell[cell] = idx
    return tuple(
        tuple(atom_of_cell[(i, p)] for p in range(config.k))
        for i in range(config.ell)
    )


def all_configs2(k: int) -> tuple[Config, ...]:
    """All configurations of two k-molecules: partial injective matchings
    between the two rows, singletons elsewhere."""
    out = []
    for picked in itertools.chain.from_iterable(
        itertools.combinations(range(k), s) for s in range(k + 1)
    ):
        for images in itertools.permutations(range(k), len(picked)):
            matched = dict(zip(picked, images))
            blocks = []
            for p in range(k):
                if p in matched:
                    blocks.append(((0, p), (1, matched[p])))
                else:
                    blocks.append(((0, p),))
            blocks.extend(
                ((1, q),) for q in range(k) if q not in set(matched.values())
            )
            out.append(make_config(2, k, blocks))
    return tuple(sorted(set(out), key=lambda c: c.blocks))


# -- forms -------------------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    """Form denoting sigma(pos) for the molecule it is applied to."""

    pos: int


@dataclass(frozen=True, eq=False)
class Node:
    """Form denoting a set: one (child form, two-row configuration) pair
    per class of members, canonically ordered and duplicate-free.

    Nodes sit in memo tables keyed by form, so the structural key and
    hash are computed once at construction (children reuse theirs).
    """

    pairs: tuple[tuple["Form", Config], ...]

    def __post_init__(self):
        key = (1, tuple((form_key(f), c.blocks) for f, c in self.pairs))
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return isinstance(other, Node) and self._key == other._key


Form = Leaf | Node


def form_key(phi: Form):
    if isinstance(phi, Leaf):
        return (0, phi.pos)
    return phi._key


EMPTY_FORM = Node(())


def mk_node(pairs) -> Node:
    canon = sorted(set(pairs), key=lambda fc: (form_key(fc[0]), fc[1].blocks))
    return Node(tuple(canon))


def form_rank(phi: Form) -> int:
    """Mirrors object rank: leaves and the empty node are rank 0."""
    if isinstance(phi, Leaf) or not phi.pairs:
        return 0
    return 1 + max(form_rank(f) for f, _ in phi.pairs)


def format_config(config: Config) -> str:
    blocks = ",".join(
        "[" + ",".join(f"({i},{p})" for i, p in block) + "]"
        for block in config.blocks
    )
    return f"[{blocks}]"


def format_form(phi: Form) -> str:
    if isinstance(phi, Leaf):
        return f"c{phi.pos}"
    if not phi.pairs:
        return "{}"
    inner = ", ".join(
        f"({format_form(f)}, {format_config(c)})" for f, c in phi.pairs
    )
    return "{" + inner + "}"


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, ch: str):
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            raise SymmetryError(f"expected {ch!r} at offset {self.pos}")
        self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def number(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            raise SymmetryError(f"expected a number at offset {start}")
        return int(self.text[start:self.pos])


def _parse_cell(cur: _Cursor) -> tuple[int, int]:
    cur.expect("(")
    i = cur.number()
    cur.expect(",")
    p = cur.number()
    cur.expect(")")
    return (i, p)


def _parse_config(cur: _Cursor) -> Config:
    cur.expect("[")
    blocks = []
    while True:
        cur.expect("[")
        cells = [_parse_cell(cur)]
        while cur.peek() == ",":
            cur.expect(",")
            cells.append(_parse_cell(cur))
        cur.expect("]")
        blocks.append(cells)
        if cur.peek() == ",":
            cur.expect(",")
            continue
        break
    cur.expect("]")
    return make_config(
        max(i for b in blocks for i, _ in b) + 1,
        max(p for b in blocks for _, p in b) + 1,
        blocks,
    )


def _parse_form(cur: _Cursor) -> Form:
    ch = cur.peek()
    if ch == "c":
        cur.expect("c")
        return Leaf(cur.number())
    cur.expect("{")
    if cur.peek() == "}":
        cur.expect("}")
        return EMPTY_FORM
    pairs = []
    while True:
        cur.expect("(")
        f = _parse_form(cur)
        cur.expect(",")
        c = _parse_config(cur)
        cur.expect(")")
        pairs.append((f, c))
        if cur.peek() == ",":
            cur.expect(",")
            continue
        break
    cur.expect("}")
    return mk_node(pairs)


def parse_form(text: str) -> Form:
    cur = _Cursor(text)
    phi = _parse_form(cur)
    cur.skip_ws()
    if cur.pos != len(text):
        raise SymmetryError(f"trailing junk in form literal at offset {cur.pos}")
    return phi


# -- applying and extracting forms -------------------------------------------

def _config_matches(tau, sigma, config: Config) -> bool:
    """conf((tau, sigma)) == config, without building the partition."""
    rows = (tau, sigma)
    seen = set()
    for block in config.blocks:
        i0, p0 = block[0]
        atom = rows[i0][p0]
        for i, p in block[1:]:
            if rows[i][p] != atom:
                return False
        if atom in seen:
            return False
        seen.add(atom)
    return True


def form_apply(u: Universe, phi: Form, sigma) -> ObjId:
    """Evaluate the form at a molecule: a leaf picks an atom of sigma, a
    node unions each child over every molecule inducing its configuration."""
    sigma = check_molecule(u, sigma)
    return _apply(u, phi, sigma, u.caches.setdefault("form_apply", {}))


def _apply(u: Universe, phi: Form, sigma: Molecule, memo) -> ObjId:
    key = (phi, sigma)
    got = memo.get(key)
    if got is not None:
        return got
    if isinstance(phi, Leaf):
        if not 0 <= phi.pos < len(sigma):
            raise SymmetryError(f"leaf position {phi.pos} outside molecule {sigma}")
        val = u.atom(sigma[phi.pos])
    else:
        k = len(sigma)
        elems = []
        for child, config in phi.pairs:
            if config.ell != 2 or config.k != k:
                raise SymmetryError("node configuration is not over two k-molecules")
            for tau in itertools.permutations(range(u.n_atoms), k):
                if _config_matches(tau, sigma, config):
                    elems.append(_apply(u, child, tau, memo))
        val = u.mk_set(elems)
    memo[key] = val
    return val


def form_of(u: Universe, x: ObjId, k: int) -> tuple[Form, Molecule]:
    """Decompose a k-symmetric object as (form, molecule).

    The molecule lists a smallest support in atom order, padded to
    length k with the smallest atoms outside it; children recurse the
    same way and record their configuration against the parent.
    """
    memo = u.caches.setdefault(("form_of", k), {})

    def go(y: ObjId) -> tuple[Form, Molecule]:
        got = memo.get(y)
        if got is not None:
            return got
        if u.is_atom(y):
            # An atom anchors its own molecule; a vacuous support (every
            # transposition avoiding it is trivial at tiny n) would not
            # contain the atom and leaves no position to point at.
            if k < 1:
                raise NotKSymmetric(y, k)
            a = u.atom_index(y)
            sigma = padded_molecule(u, (a,), k)
            phi: Form = Leaf(sigma.index(a))
        else:
            supp = support_within(u, y, k)
            if supp is None:
                raise NotKSymmetric(y, k)
            sigma = padded_molecule(u, supp, k)
            pairs = []
            for e in u.elements(y):
                child, child_sigma = go(e)
                pairs.append((child, conf((child_sigma, sigma))))
            phi = mk_node(pairs)
        memo[y] = (phi, sigma)
        return phi, sigma

    return go(x)


# -- fragments ----------------------------------------------------------------

def bulk_images(u: Universe, perm: Perm, objects) -> dict[ObjId, ObjId]:
    """Permutation images for a whole element-closed object family.

    One bottom-up pass in rank order, so each image is a single mk_set
    over already-mapped children; avoids the per-object memo table.
    """
    img: dict[ObjId, ObjId] = {}
    for x in sorted(objects, key=lambda o: (u.rank(o), u.sort_key(o))):
        if u.is_atom(x):
            img[x] = perm[u.atom_index(x)]
        else:
            img[x] = u.mk_set(img[c] for c in u.elements(x))
    return img


def _stabilizer_orbits(u: Universe, fixed, objects) -> list[list[ObjId]]:
    """Orbits of the given objects under permutations fixing `fixed` pointwise.

    The family must be closed under those permutations.  Transpositions
    outside the fixed set generate the stabilizer, so orbits are the
    connected components of their image maps.
    """
    outside = [a for a in range(u.n_atoms) if a not in set(fixed)]
    maps = [
        bulk_images(u, transposition(u.n_atoms, a, b), objects)
        for a, b in itertools.combinations(outside, 2)
    ]
    seen: set[ObjId] = set()
    orbits: list[list[ObjId]] = []
    for start in objects:
        if start in seen:
            continue
        orbit = [start]
        seen.add(start)
        queue = [start]
        while queue:
            x = queue.pop()
            for m in maps:
                y = m[x]
                if y not in seen:
                    seen.add(y)
                    orbit.append(y)
                    queue.append(y)
        orbits.append(sorted(orbit, key=u.sort_key))
    return orbits


@dataclass
class SymmetricFragment:
    """All k-symmetric objects of rank <= r over n atoms, with membership."""

    universe: Universe
    n: int
    k: int
    r: int
    objects: tuple[ObjId, ...]

    def __post_init__(self):
        self._index = {x: i for i, x in enumerate(self.objects)}

    def __len__(self) -> int:
        return len(self.objects)

    def __contains__(self, x: ObjId) -> bool:
        return x in self._index

    def index(self, x: ObjId) -> int:
        return self._index[x]

    def membership_edges(self):
        """(i, j) pairs with objects[i] an element of objects[j]."""
        for j, x in enumerate(self.objects):
            for e in self.universe.elements(x):
                yield self._index[e], j

    def is_transitive(self) -> bool:
        return all(
            e in self._index
            for x in self.objects
            for e in self.universe.elements(x)
        )

    def is_orbit_closed(self) -> bool:
        """Closure under the transposition generators implies the full group."""
        u = self.universe
        for a, b in itertools.combinations(range(self.n), 2):
            img = bulk_images(u, transposition(self.n, a, b), self.objects)
            if any(y not in self._index for y in img.values()):
                return False
        return True

    def export_text(self) -> str:
        u = self.universe
        out = [f"fragment n={self.n} k={self.k} r={self.r}"]
        out.append(f"constant empty {self._index[u.empty]}")
        if u.one in self._index:  # rank-0 fragments stop below {0}
            out.append(f"constant one {self._index[u.one]}")
        for i, x in enumerate(self.objects):
            out.append(f"object {i} {u.format_literal(x)}")
        for i, j in self.membership_edges():
            out.append(f"edge {i} {j}")
        return "\n".join(out) + "\n"


def parse_fragment(text: str) -> SymmetricFragment:
    header = None
    consts: dict[str, int] = {}
    literals: list[tuple[int, str]] = []
    edges: list[tuple[int, int]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "fragment":
            fields = dict(p.split("=", 1) for p in parts[1:])
            header = (int(fields["n"]), int(fields["k"]), int(fields["r"]))
        elif parts[0] == "constant":
            consts[parts[1]] = int(parts[2])
        elif parts[0] == "object":
            literals.append((int(parts[1]), " ".join(parts[2:])))
        elif parts[0] == "edge":
            edges.append((int(parts[1]), int(parts[2])))
        else:
            raise SymmetryError(f"unrecognized fragment line: {line}")
    if header is None:
        raise SymmetryError("missing fragment header line")
    n, k, r = header
    if sorted(i for i, _ in literals) != list(range(len(literals))):
        raise SymmetryError("object indices must cover 0..count-1 exactly")
    u = Universe(n)
    objects = [u.empty] * len(literals)
    for i, lit in literals:
        objects[i] = u.parse_literal(lit)
    frag = SymmetricFragment(u, n, k, r, tuple(objects))
    for name, idx in consts.items():
        expect = u.empty if name == "empty" else u.one
        if objects[idx] != expect:
            raise SymmetryError(f"constant {name} points at the wrong object")
    declared = set(edges)
    actual = set(frag.membership_edges())
    if declared != actual:
        raise SymmetryError("edge list disagrees with the object literals")
    return frag


def build_fragment(
    n: int,
    k: int,
    r: int,
    budget: int | None = None,
    universe: Universe | None = None,
) -> SymmetricFragment:
    """All k-symmetric objects of rank <= r over n atoms.

    Level 0 is atoms plus the empty set; each later level adds every
    subset of the accumulated objects that has a support of at most k
    atoms (members are k-symmetric by induction).  A subset supported
    by X is exactly a union of orbits of the pointwise stabilizer of X,
    so the level enumerates orbit unions per candidate X instead of the
    full powerset; the object-count budget caps the enumeration.
    """
    if n < 0 or k < 0 or r < 0:
        raise SymmetryError("fragment parameters must be non-negative")
    cap = resolve_budget(budget)
    u = universe if universe is not None else Universe(n)
    acc: set[ObjId] = set(u.atoms())
    acc.add(u.empty)
    ordered = sorted(acc, key=u.sort_key)
    for _level in range(r):
        new: set[ObjId] = set()
        for size in range(min(k, n) + 1):
            for fixed in itertools.combinations(range(n), size):
                orbits = _stabilizer_orbits(u, fixed, ordered)
                if len(orbits) >= 60 or (1 << len(orbits)) > 4 * cap:
                    raise BudgetExceeded(
                        f"2^{len(orbits)} candidate unions for stabilizer of "
                        f"{fixed} exceed the budget of {cap} objects"
                    )
                for mask in range(1, 1 << len(orbits)):
                    elems: list[ObjId] = []
                    m = mask
                    idx = 0
                    while m:
                        if m & 1:
                            elems.extend(orbits[idx])
                        m >>= 1
                        idx += 1
                    new.add(u.mk_set(elems))
                    if len(acc) + len(new) > cap:
                        raise BudgetExceeded(
                            f"fragment ({n},{k},{r}) exceeds the budget of {cap} objects"
                        )
        acc |= new
        ordered = sorted(acc, key=u.sort_key)
    return SymmetricFragment(u, n, k, r, tuple(ordered))


# -- In/Eq tables --------------------------------------------------------------

def all_forms(k: int, r: int, budget: int | None = None) -> tuple[Form, ...]:
    """Every k-form of rank <= r, budget-capped (counts explode with r)."""
    cap = resolve_budget(budget)
    forms: list[Form] = [Leaf(p) for p in range(k)]
    forms.append(EMPTY_FORM)
    lower = list(forms)
    configs = all_configs2(k)
    for _level in range(r):
        pairs = [(f, c) for f in lower for c in configs]
        if len(pairs) >= 60 or (1 << len(pairs)) > 4 * cap:
            raise BudgetExceeded(
                f"2^{len(pairs)} candidate nodes exceed the budget of {cap} forms"
            )
        fresh: set[Form] = set()
        for m in range(1, 1 << len(pairs)):
            chosen = [pairs[i] for i in range(len(pairs)) if m >> i & 1]
            node = mk_node(chosen)
            if node not in lower:
                fresh.add(node)
            if len(lower) + len(fresh) > cap:
                raise BudgetExceeded(
                    f"forms of rank <= {r} exceed the budget of {cap}"
                )
        lower.extend(sorted(fresh, key=form_key))
    return tuple(sorted(set(lower), key=form_key))


@dataclass
class InEqTables:
    """Membership and equality between applied forms, abstracted over atoms.

    in_rel[(psi, phi, E)] says whether psi * tau lands in phi * sigma
    whenever (tau, sigma) induce E; eq_rel likewise for equality.  Built
    at the smaller sample size and verified identical at the larger one.
    """

    k: int
    n1: int
    n2: int
    forms: tuple[Form, ...]
    configs: tuple[Config, ...]
    in_rel: dict[tuple[Form, Form, Config], bool]
    eq_rel: dict[tuple[Form, Form, Config], bool]


def in_eq_relations(
    k: int,
    n1: int,
    n2: int,
    r: int = 1,
    forms: tuple[Form, ...] | None = None,
    budget: int | None = None,
) -> InEqTables:
    """Build In/Eq over forms of rank <= r at two atom counts and compare.

    Each configuration is realized concretely over the smaller universe
    and again over the larger; any disagreement raises InputDependence,
    since the tables are supposed to be independent of the atom count.
    """
    if not 0 < n1 < n2:
        raise SymmetryError("need sample sizes 0 < n1 < n2")
    if n1 < 2 * k:
        raise SymmetryError(f"two k-molecules need n1 >= {2 * k}")
    if forms is None:
        forms = all_forms(k, r, budget)
    configs = all_configs2(k)
    u1, u2 = Universe(n1), Universe(n2)
    in_rel: dict[tuple[Form, Form, Config], bool] = {}
    eq_rel: dict[tuple[Form, Form, Config], bool] = {}
    for config in configs:
        tau1, sigma1 = realize_config(config, u1)
        tau2, sigma2 = realize_config(config, u2)
        for psi in forms:
            y1 = form_apply(u1, psi, tau1)
            y2 = form_apply(u2, psi, tau2)
            for phi in forms:
                x1 = form_apply(u1, phi, sigma1)
                x2 = form_apply(u2, phi, sigma2)
                got = (u1.contains(x1, y1), y1 == x1)
                again = (u2.contains(x2, y2), y2 == x2)
                if got != again:
                    raise InputDependence((psi, phi, config, got, again))
                in_rel[(psi, phi, config)] = got[0]
                eq_rel[(psi, phi, config)] = got[1]
    return InEqTables(k, n1, n2, tuple(forms), configs, in_rel, eq_rel)
