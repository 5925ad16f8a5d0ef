"""Exact finite-group computations on groups of truncated tree automorphisms.

Elements are deduplicated by their leaf permutation (``TreeAut.leaves``);
at depth ``n <= 8`` this is a ``bytes`` object of length ``2**n`` and right
multiplication by a generator is a single ``bytes.translate`` call.
"""

from __future__ import annotations

import hashlib
import random
import time
from dataclasses import dataclass, field

from . import omega as om
from .omega import OmegaSeq
from .treeauto import _PADS, TreeAut, identity


class CapExceeded(Exception):
    """A resource cap was hit before an exact computation finished."""

    def __init__(self, resource: str, partial: int):
        super().__init__(f"{resource} cap exceeded after {partial} elements")
        self.resource = resource
        self.partial = partial


@dataclass(frozen=True)
class Budget:
    max_elements: int = 2**20
    max_bytes: int = 2 * 2**30
    max_millis: int | None = None

    def __post_init__(self):
        for name in ("max_elements", "max_bytes", "max_millis"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be positive")


class _Meter:
    def __init__(self, budget: Budget, depth: int):
        self.budget = budget
        # bytes object, hash-set slot and frontier slot per element
        self.per_element = 2**depth + 120
        self.start = time.monotonic()

    def check(self, count: int) -> None:
        b = self.budget
        if count > b.max_elements:
            raise CapExceeded("max_elements", count)
        if count * self.per_element > b.max_bytes:
            raise CapExceeded("max_bytes", count)
        if b.max_millis is not None and (time.monotonic() - self.start) * 1000 > b.max_millis:
            raise CapExceeded("max_millis", count)


# -- key arithmetic ------------------------------------------------------
# A key is the leaf tuple/bytes of an element.  mul(p, q) applies p then q.


def _table(key):
    if isinstance(key, bytes):
        return key + _PADS[(len(key) - 1).bit_length()]
    return key


def _mul(p, q_table):
    if isinstance(p, bytes):
        return p.translate(q_table)
    return tuple(q_table[i] for i in p)


def _inv(key):
    inv = [0] * len(key)
    for i, j in enumerate(key):
        inv[j] = i
    return bytes(inv) if isinstance(key, bytes) else tuple(inv)


def _conj(key, g_inv, g_table):
    # g^-1 * key * g
    return _mul(g_inv, _table(_mul(key, g_table)))


def _check_shared_depth(elements) -> int:
    depths = {g.depth for g in elements}
    if len(depths) != 1:
        raise ValueError(f"elements must share a depth, got {sorted(depths)}")
    return depths.pop()


def _closure(start_keys, tables, seen, meter):
    """Extend ``seen`` to its closure under right multiplication by ``tables``."""
    frontier = list(start_keys)
    while frontier:
        new = []
        for x in frontier:
            for t in tables:
                y = _mul(x, t)
                if y not in seen:
                    seen.add(y)
                    new.append(y)
        frontier = new
        meter.check(len(seen))
    return seen


def enumerate_group(gens, budget: Budget = Budget()) -> set:
    """Leaf keys of all elements of the group generated by ``gens``."""
    n = _check_shared_depth(gens)
    start = identity(n).leaves
    return _closure([start], [g.table for g in gens], {start}, _Meter(budget, n))


@dataclass
class GroupSnapshot:
    """The finite quotient acting on the depth-``n`` tree, given by labelled generators.

    The element set is filled on the first call of :meth:`enumerate`;
    truncated snapshots are cached per level.
    """

    depth: int
    generators: dict
    omega: OmegaSeq | None = None
    elements: set | None = None
    _truncations: dict = field(default_factory=dict, repr=False)

    @classmethod
    def grigorchuk(cls, omega: OmegaSeq, n: int) -> "GroupSnapshot":
        om.require_nonconstant(omega)
        return cls(n, {x: om.generator(omega, x, n) for x in om.LETTERS}, omega)

    @property
    def gens(self) -> list:
        return list(self.generators.values())

    @property
    def labels(self) -> list:
        return list(self.generators)

    @property
    def order(self) -> int | None:
        return None if self.elements is None else len(self.elements)

    def enumerate(self, budget: Budget = Budget()) -> set:
        if self.elements is None:
            self.elements = enumerate_group(self.gens, budget)
        return self.elements

    def element(self, key) -> TreeAut:
        return TreeAut(self.depth, key)

    def truncated(self, k: int) -> "GroupSnapshot":
        if k == self.depth:
            return self
        snap = self._truncations.get(k)
        if snap is None:
            snap = GroupSnapshot(k, {x: g.truncate(k) for x, g in self.generators.items()}, self.omega)
            self._truncations[k] = snap
        return snap

    def word(self, word: str) -> TreeAut:
        result = identity(self.depth)
        for ch in word:
            if ch != "e":
                result = result * self.generators[ch]
        return result


def dump_elements(snapshot: GroupSnapshot, path) -> None:
    """Write the element set: a header line, then sorted hex canonical keys."""
    if snapshot.elements is None:
        raise ValueError("snapshot is not enumerated")
    keys = sorted(TreeAut(snapshot.depth, k).canonical_key().hex() for k in snapshot.elements)
    with open(path, "w") as fh:
        fh.write(f"# omega={snapshot.omega} depth={snapshot.depth} count={len(keys)}\n")
        fh.writelines(k + "\n" for k in keys)


def load_elements(path):
    """Read a dump back; returns ``(header fields, list of TreeAut)``."""
    with open(path) as fh:
        header = fh.readline()
        fields = dict(item.split("=", 1) for item in header.lstrip("# ").split())
        depth = int(fields["depth"])
        elements = [TreeAut.from_canonical_key(depth, bytes.fromhex(line.strip())) for line in fh if line.strip()]
    if int(fields["count"]) != len(elements):
        raise ValueError(f"{path}: header says {fields['count']} elements, found {len(elements)}")
    return fields, elements


def order_of(f: TreeAut) -> int:
    return f.order()


def _conjugation_tables(gens):
    return [(g.inverse().leaves, g.table) for g in gens]


def conjugacy_class(x: TreeAut, gens, budget: Budget = Budget(), *, parents: bool = False):
    """Orbit of ``x`` under conjugation by ``gens`` (the conjugacy class in ``<gens>``).

    Returns a set of leaf keys, or with ``parents=True`` a dict mapping each
    key to ``(previous key, generator index)`` (``None`` for ``x`` itself).
    """
    n = _check_shared_depth([x, *gens])
    meter = _Meter(budget, n)
    conj = _conjugation_tables(gens)
    seen = {x.leaves: None}
    frontier = [x.leaves]
    while frontier:
        new = []
        for key in frontier:
            for i, (g_inv, g_table) in enumerate(conj):
                y = _conj(key, g_inv, g_table)
                if y not in seen:
                    seen[y] = (key, i)
                    new.append(y)
        frontier = new
        meter.check(len(seen))
    return seen if parents else set(seen)


def _witness_word(parents, key, labels) -> list:
    word = []
    while parents[key] is not None:
        key, i = parents[key]
        word.append(labels[i])
    word.reverse()
    return word


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class ConjugacyVerdict:
    """``answer`` is ``yes``, ``no`` or ``inconclusive``; ``rung`` names the deciding test."""

    answer: str
    rung: str
    evidence: dict

    def to_json(self):
        return {"answer": self.answer, "rung": self.rung, "evidence": self.evidence}


def are_conjugate(
    x: TreeAut,
    y: TreeAut,
    group: GroupSnapshot,
    *,
    k_max: int = 4,
    budget: Budget = Budget(),
    orbit: bool = True,
) -> ConjugacyVerdict:
    """Decide conjugacy of ``x`` and ``y`` in ``group`` by a ladder of sound tests.

    Every rung is a conjugacy invariant of the quotient, so a "no" from an
    early rung is final.  The orbit rung answers exactly when the class of
    ``x`` fits in the budget.
    """
    if x == y:
        return ConjugacyVerdict("yes", "equal", {"witness": []})
    ox, oy = x.order(), y.order()
    if ox != oy:
        return ConjugacyVerdict("no", "order", {"orders": [ox, oy]})
    lx, ly = x.stabilizer_level(), y.stabilizer_level()
    if lx != ly:
        return ConjugacyVerdict("no", "level", {"levels": [lx, ly]})
    # conjugacy type in the full automorphism group of the truncated tree
    sx, sy = x.shape(), y.shape()
    if sx != sy:
        return ConjugacyVerdict("no", "shape", {"shapes": [_digest(sx), _digest(sy)]})
    caps = []
    for k in range(1, min(k_max, group.depth - 1) + 1):
        xt, yt = x.truncate(k), y.truncate(k)
        if xt == yt:
            continue
        sub = group.truncated(k)
        try:
            cls = conjugacy_class(xt, sub.gens, budget)
        except CapExceeded as exc:
            caps.append({"level": k, "resource": exc.resource})
            continue
        if yt.leaves not in cls:
            return ConjugacyVerdict("no", "truncation", {"level": k, "class_size": len(cls)})
    if not orbit:
        return ConjugacyVerdict("inconclusive", "skipped-orbit", {"caps": caps})
    try:
        parents = conjugacy_class(x, group.gens, budget, parents=True)
    except CapExceeded as exc:
        return ConjugacyVerdict("inconclusive", "orbit", {"caps": caps + [{"level": group.depth, "resource": exc.resource, "partial": exc.partial}]})
    if y.leaves in parents:
        word = _witness_word(parents, y.leaves, group.labels)
        g = group.word("".join(word))
        if x.conjugate(g) != y:
            raise AssertionError("orbit witness failed re-verification")
        return ConjugacyVerdict("yes", "orbit", {"witness": word})
    return ConjugacyVerdict("no", "orbit", {"class_size": len(parents)})


def normal_closure(S, gens, budget: Budget = Budget()) -> set:
    """Leaf keys of the smallest normal subgroup of ``<gens>`` containing ``S``."""
    n = _check_shared_depth([*S, *gens])
    meter = _Meter(budget, n)
    conj = _conjugation_tables(gens)
    start = identity(n).leaves
    subgroup = {start}
    sub_tables: list = []
    pending = [s.leaves for s in S]
    while pending:
        s = pending.pop()
        if s in subgroup:
            continue
        t = _table(s)
        sub_tables.append(t)
        # old elements are closed under the old generators; they only need
        # the new one, new elements need all of them
        fresh = []
        for x in list(subgroup):
            y = _mul(x, t)
            if y not in subgroup:
                subgroup.add(y)
                fresh.append(y)
        _closure(fresh, sub_tables, subgroup, meter)
        for g_inv, g_table in conj:
            pending.append(_conj(s, g_inv, g_table))
    return subgroup


def commutator(x: TreeAut, y: TreeAut) -> TreeAut:
    return x.inverse() * y.inverse() * x * y


def derived_subgroup(gens, budget: Budget = Budget()) -> set:
    comms = [commutator(g, h) for i, g in enumerate(gens) for h in gens[i + 1:]]
    return normal_closure(comms, gens, budget)


def _key_order(key) -> int:
    ident = bytes(range(len(key))) if isinstance(key, bytes) else tuple(range(len(key)))
    order = 1
    while key != ident:
        key = _mul(key, _table(key))
        order *= 2
    return order


def exponent(group: GroupSnapshot, budget: Budget = Budget(), *, samples: int = 0, rng=None):
    """``(exponent, exact)``: max element order over the enumerated group.

    When the group does not fit ``budget`` and ``samples > 0``, falls back to
    the maximum order over random words, flagged ``exact=False``.
    """
    try:
        elements = group.enumerate(budget)
    except CapExceeded:
        if samples <= 0:
            raise
        rng = rng or random.Random(0)
        best = 1
        gens = group.gens
        for _ in range(samples):
            w = identity(group.depth)
            for _ in range(4 * group.depth + 8):
                w = w * rng.choice(gens)
            best = max(best, w.order())
        return best, False
    return max(_key_order(k) for k in elements), True


@dataclass
class SemiAbelianWitness:
    x: TreeAut
    y: TreeAut
    direction: str
    power: int

    def verify(self) -> bool:
        q = self.power
        lhs = self.x**q == self.y**q
        rhs = (self.x * self.y.inverse()) ** q
        return lhs != rhs.is_identity()

    def to_json(self):
        return {"x": self.x.serialize(), "y": self.y.serialize(), "direction": self.direction, "power": self.power}


@dataclass
class SemiAbelianSearch:
    witness: SemiAbelianWitness | None
    exhaustive: bool
    pairs_tried: int
    exponent: int


def semi_abelian_witness(
    group: GroupSnapshot,
    budget: Budget = Budget(),
    *,
    max_pairs: int = 10**6,
    trials: int = 10**7,
    rng=None,
):
    """Search ``x, y`` violating ``x^q = y^q <=> (x y^-1)^q = 1`` for ``q = exponent/2``.

    Exhaustive when ``|G|**2 <= max_pairs``, otherwise up to ``trials``
    random pairs.  The returned search holds ``witness=None`` when nothing was found.
    """
    e, _ = exponent(group, budget)
    q = max(e // 2, 1)
    keys = sorted(group.elements)
    ident = identity(group.depth).leaves
    power = {}
    for k in keys:
        p = k
        for _ in range(q.bit_length() - 1):
            p = _mul(p, _table(p))
        power[k] = p
    inverse_tables = {k: _table(_inv(k)) for k in keys}

    def violation(x, y):
        lhs = power[x] == power[y]
        rhs = power[_mul(x, inverse_tables[y])] == ident
        if lhs and not rhs:
            return "forward"
        if rhs and not lhs:
            return "backward"
        return None

    def found(x, y, direction, tried):
        w = SemiAbelianWitness(group.element(x), group.element(y), direction, q)
        if not w.verify():
            raise AssertionError("semi-abelian witness failed re-verification")
        return SemiAbelianSearch(w, exhaustive, tried, e)

    exhaustive = len(keys) ** 2 <= max_pairs
    tried = 0
    if exhaustive:
        for x in keys:
            for y in keys:
                tried += 1
                direction = violation(x, y)
                if direction:
                    return found(x, y, direction, tried)
        return SemiAbelianSearch(None, True, tried, e)
    rng = rng or random.Random(0)
    for _ in range(trials):
        tried += 1
        x, y = rng.choice(keys), rng.choice(keys)
        direction = violation(x, y)
        if direction:
            return found(x, y, direction, tried)
    return SemiAbelianSearch(None, False, tried, e)
