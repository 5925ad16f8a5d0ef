"""Automorphisms of the binary rooted tree truncated at a finite depth.

A vertex is a string over ``{'0', '1'}``. Internally a level-``k`` vertex is
the integer whose binary expansion (first letter most significant) is the
word, so lexicographic order on a level coincides with numeric order.

An automorphism of depth ``n`` is stored as its action on the ``2**n`` leaves
(one-line form).  The leaf action determines the portrait and vice versa, so
equality, hashing and composition all run on the leaf permutation.
Composition for ``n <= 8`` uses :meth:`bytes.translate`, which performs the
table lookup in C.

Products are read left to right: ``f * g`` first applies ``f`` then ``g``,
i.e. ``v ** (f * g) == (v ** f) ** g``.
"""

from __future__ import annotations

import random
from collections.abc import Iterable, Sequence

Vertex = str

_BYTE_DEPTH = 8
_PADS = {n: bytes(range(2**n, 256)) for n in range(_BYTE_DEPTH + 1)}


class DepthError(ValueError):
    """Raised for invalid depths, depth mismatches and out-of-range vertices."""


def _check_depth(n: int) -> None:
    if not isinstance(n, int) or n < 1:
        raise DepthError(f"depth must be a positive integer, got {n!r}")


def _pack(n: int, perm: Sequence[int]):
    return bytes(perm) if n <= _BYTE_DEPTH else tuple(perm)


_IDENTITY_LEAVES: dict = {}


def _identity_leaves(n: int):
    leaves = _IDENTITY_LEAVES.get(n)
    if leaves is None:
        leaves = _IDENTITY_LEAVES[n] = _pack(n, range(2**n))
    return leaves


def vertex_index(v: Vertex) -> int:
    if any(ch not in "01" for ch in v):
        raise DepthError(f"vertex {v!r} is not a word over {{0,1}}")
    return int(v, 2) if v else 0


def vertex_word(index: int, length: int) -> Vertex:
    return format(index, f"0{length}b") if length else ""


class TreeAut:
    """An automorphism of the binary tree truncated at level ``depth``."""

    __slots__ = ("depth", "leaves", "_table", "_portrait", "_key")

    def __init__(self, depth: int, leaves):
        self.depth = depth
        self.leaves = leaves
        self._table = None
        self._portrait = None
        self._key = None

    # -- construction ---------------------------------------------------

    @classmethod
    def from_leaves(cls, depth: int, perm: Iterable[int]) -> "TreeAut":
        """Build from a one-line leaf permutation, checking it preserves the tree."""
        _check_depth(depth)
        perm = list(perm)
        size = 2**depth
        if len(perm) != size or sorted(perm) != list(range(size)):
            raise ValueError("leaf map is not a permutation of the level")
        f = cls(depth, _pack(depth, perm))
        # a leaf permutation comes from a tree automorphism iff its induced
        # portrait reproduces it
        if cls.from_portrait(depth, f.portrait).leaves != f.leaves:
            raise ValueError("leaf permutation does not preserve the tree structure")
        return f

    @classmethod
    def from_portrait(cls, depth: int, labels: Iterable[int]) -> "TreeAut":
        """Build from ``2**depth - 1`` labels (0 = identity, 1 = swap) in breadth-first order."""
        _check_depth(depth)
        labels = [1 if x else 0 for x in labels]
        if len(labels) != 2**depth - 1:
            raise ValueError(f"portrait of depth {depth} needs {2**depth - 1} labels")
        # children of v go to 2*img(v) + (x ^ label(v)), one level at a time
        perm = [0]
        pos = 0
        for k in range(depth):
            row = labels[pos:pos + (1 << k)]
            pos += 1 << k
            nxt = []
            for image, label in zip(perm, row):
                base = image << 1
                nxt.append(base | label)
                nxt.append(base | (label ^ 1))
            perm = nxt
        f = cls(depth, _pack(depth, perm))
        f._portrait = tuple(labels)
        return f

    @classmethod
    def from_sections(cls, sections: Sequence["TreeAut"]) -> "TreeAut":
        """Inverse of :func:`psi`: trivial labels above level ``k``, given sections below.

        The ``2**k`` sections must share a depth ``m``; the result has depth ``k + m``.
        """
        count = len(sections)
        k = count.bit_length() - 1
        if count < 1 or 2**k != count:
            raise ValueError("number of sections must be a power of 2")
        m = sections[0].depth
        if any(s.depth != m for s in sections):
            raise DepthError("sections must share a depth")
        perm = []
        for v, s in enumerate(sections):
            base = v << m
            perm.extend(base | x for x in s.leaves)
        return cls(k + m, _pack(k + m, perm))

    @classmethod
    def random(cls, depth: int, rng: random.Random) -> "TreeAut":
        size = 2**depth - 1
        bits = rng.getrandbits(size)
        return cls.from_portrait(depth, [(bits >> i) & 1 for i in range(size)])

    def extend_trivially(self, depth: int) -> "TreeAut":
        """Same labels on the top levels, identity labels below (depth >= self.depth)."""
        if depth < self.depth:
            raise DepthError("extension depth below current depth")
        return TreeAut.from_portrait(depth, self.portrait + (0,) * (2**depth - 2**self.depth))

    # -- basic protocol -------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, TreeAut):
            return NotImplemented
        return self.depth == other.depth and self.leaves == other.leaves

    def __hash__(self):
        return hash((self.depth, self.leaves))

    def __repr__(self):
        return f"TreeAut({self.serialize()!r})"

    @property
    def table(self):
        """Translation table for right multiplication (``x.translate(g.table)`` is ``x * g``)."""
        if self._table is None:
            if self.depth <= _BYTE_DEPTH:
                self._table = self.leaves + _PADS[self.depth]
            else:
                self._table = self.leaves
        return self._table

    def __mul__(self, other: "TreeAut") -> "TreeAut":
        if not isinstance(other, TreeAut):
            return NotImplemented
        if self.depth != other.depth:
            raise DepthError(f"cannot compose depth {self.depth} with depth {other.depth}")
        if self.depth <= _BYTE_DEPTH:
            return TreeAut(self.depth, self.leaves.translate(other.table))
        g = other.leaves
        return TreeAut(self.depth, tuple(g[i] for i in self.leaves))

    def __pow__(self, e: int) -> "TreeAut":
        if e < 0:
            return self.inverse() ** (-e)
        result = identity(self.depth)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> "TreeAut":
        inv = [0] * (2**self.depth)
        for i, j in enumerate(self.leaves):
            inv[j] = i
        return TreeAut(self.depth, _pack(self.depth, inv))

    def conjugate(self, g: "TreeAut") -> "TreeAut":
        """``self ** g == g**-1 * self * g``."""
        return g.inverse() * self * g

    def is_identity(self) -> bool:
        return self.leaves == _identity_leaves(self.depth)

    # -- tree structure -------------------------------------------------

    @property
    def portrait(self) -> tuple:
        if self._portrait is None:
            n = self.depth
            labels = []
            for k in range(n):
                shift = n - k - 1
                for v in range(1 << k):
                    labels.append((self.leaves[v << (n - k)] >> shift) & 1)
            self._portrait = tuple(labels)
        return self._portrait

    def label(self, v: Vertex) -> int:
        k = len(v)
        if k >= self.depth:
            raise DepthError(f"vertex {v!r} carries no label at depth {self.depth}")
        return self.portrait[(1 << k) - 1 + vertex_index(v)]

    def apply(self, v: Vertex) -> Vertex:
        k = len(v)
        if k > self.depth:
            raise DepthError(f"vertex {v!r} is below the leaves of a depth-{self.depth} tree")
        if k == 0:
            return ""
        shift = self.depth - k
        return vertex_word(self.leaves[vertex_index(v) << shift] >> shift, k)

    def __rpow__(self, v: Vertex) -> Vertex:
        return self.apply(v)

    def section(self, v: Vertex) -> "TreeAut":
        k = len(v)
        if k >= self.depth:
            raise DepthError(f"no section at vertex {v!r} for depth {self.depth}")
        return self._section_at(k, vertex_index(v))

    def _section_at(self, k: int, index: int) -> "TreeAut":
        m = self.depth - k
        base = index << m
        mask = (1 << m) - 1
        leaves = self.leaves
        return TreeAut(m, _pack(m, [leaves[base + j] & mask for j in range(1 << m)]))

    def stabilizer_level(self) -> int:
        """Largest ``k`` such that every vertex of level ``<= k`` is fixed."""
        moved = max((i ^ j).bit_length() for i, j in enumerate(self.leaves))
        return self.depth - moved

    def truncate(self, k: int) -> "TreeAut":
        if not 1 <= k <= self.depth:
            raise DepthError(f"truncation depth {k} outside 1..{self.depth}")
        if k == self.depth:
            return self
        shift = self.depth - k
        leaves = self.leaves
        return TreeAut(k, _pack(k, [leaves[j << shift] >> shift for j in range(1 << k)]))

    # -- encodings ------------------------------------------------------

    def canonical_key(self) -> bytes:
        """Leaf permutation packed as ``2**n`` fields of ``n`` bits (MSB first)."""
        if self._key is None:
            n = self.depth
            value = 0
            for j in self.leaves:
                value = (value << n) | j
            nbits = n * 2**n
            self._key = value.to_bytes((nbits + 7) // 8, "big")
        return self._key

    @classmethod
    def from_canonical_key(cls, depth: int, key: bytes) -> "TreeAut":
        value = int.from_bytes(key, "big")
        mask = (1 << depth) - 1
        size = 2**depth
        perm = [(value >> (depth * (size - 1 - i))) & mask for i in range(size)]
        return cls.from_leaves(depth, perm)

    def serialize(self) -> str:
        """``"n:hex"`` with the portrait bits, root first, left-padded to whole bytes."""
        nbits = 2**self.depth - 1
        value = 0
        for bit in self.portrait:
            value = (value << 1) | bit
        return f"{self.depth}:{value.to_bytes((nbits + 7) // 8, 'big').hex()}"

    @classmethod
    def deserialize(cls, text: str) -> "TreeAut":
        head, _, body = text.partition(":")
        try:
            n = int(head)
            value = int(body, 16)
        except ValueError:
            raise ValueError(f"malformed portrait string {text!r}") from None
        _check_depth(n)
        nbits = 2**n - 1
        if len(body) != 2 * ((nbits + 7) // 8) or value >> nbits:
            raise ValueError(f"portrait string {text!r} does not fit depth {n}")
        return cls.from_portrait(n, [(value >> (nbits - 1 - i)) & 1 for i in range(nbits)])

    # -- orders and conjugacy shape -------------------------------------

    def order(self) -> int:
        """Least ``2**k`` with ``self ** 2**k`` trivial (all tree automorphisms here are 2-elements)."""
        order = 1
        x = self
        while not x.is_identity():
            x = x * x
            order *= 2
        return order

    def shape(self) -> str:
        """Complete invariant of conjugacy in the full automorphism group of the truncated tree."""
        return _shape(self.depth, tuple(self.leaves))


_SHAPES: dict = {}


def _shape(n: int, leaves: tuple) -> str:
    # Conjugacy in C2 wr W: (f0, f1) ~ (f1, f0) ~ (f0^h0, f1^h1), and
    # (f0, f1)s ~ (g0, g1)s iff f0 f1 ~ g0 g1 in W.
    if n == 0:
        return "."
    cached = _SHAPES.get((n, leaves))
    if cached is not None:
        return cached
    half = 1 << (n - 1)
    mask = half - 1
    s0 = tuple(x & mask for x in leaves[:half])
    s1 = tuple(x & mask for x in leaves[half:])
    if leaves[0] >> (n - 1):
        result = "S" + _shape(n - 1, tuple(s1[j] for j in s0))
    else:
        t0, t1 = _shape(n - 1, s0), _shape(n - 1, s1)
        if t1 < t0:
            t0, t1 = t1, t0
        result = f"F{t0}{t1}" if t0 == t1 == "." else f"F({t0},{t1})"
    if len(_SHAPES) < 1_000_000:
        _SHAPES[(n, leaves)] = result
    return result


def identity(n: int) -> TreeAut:
    _check_depth(n)
    f = TreeAut(n, _identity_leaves(n))
    f._portrait = (0,) * (2**n - 1)
    return f


def rooted_swap(n: int) -> TreeAut:
    _check_depth(n)
    half = 2 ** (n - 1)
    return TreeAut(n, _pack(n, [(i + half) % (2 * half) for i in range(2**n)]))


def compose(f: TreeAut, g: TreeAut) -> TreeAut:
    return f * g


def inverse(f: TreeAut) -> TreeAut:
    return f.inverse()


def apply(f: TreeAut, v: Vertex) -> Vertex:
    return f.apply(v)


def section(f: TreeAut, v: Vertex) -> TreeAut:
    return f.section(v)


def psi(f: TreeAut, k: int) -> list[TreeAut]:
    """Sections at the ``2**k`` level-``k`` vertices, lexicographically ordered."""
    if not 0 <= k < f.depth:
        raise DepthError(f"level {k} outside 0..{f.depth - 1}")
    if f.stabilizer_level() < k:
        raise ValueError(f"automorphism does not stabilize level {k}")
    return [f._section_at(k, v) for v in range(1 << k)]


def stabilizer_level(f: TreeAut) -> int:
    return f.stabilizer_level()


def truncate(f: TreeAut, k: int) -> TreeAut:
    return f.truncate(k)


def canonical_key(f: TreeAut) -> bytes:
    return f.canonical_key()
