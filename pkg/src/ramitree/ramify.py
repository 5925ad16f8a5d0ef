"""Ramification structures for the quotients ``G(n)``: tuples, checks, reports.

Each tuple family is written in *role* letters ``a, b, c, d`` and is turned
into concrete words by a letter map that permutes ``b, c, d``.  The listed
final entry of every family is only cyclically equivalent to the inverse of
the product of the first three, so each tuple also carries the canonical
final entry ``(g1 g2 g3)**-1``; both are checked to generate the same cyclic
subgroup.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import omega as om
from .engine import Budget, CapExceeded, GroupSnapshot, are_conjugate, conjugacy_class
from .omega import OmegaSeq
from .treeauto import TreeAut, identity

# role words for (T1, T2) and generation witnesses: each witness is
# (target letter, tokens); tokens are entry refs g1..g4 (g1' = inverse)
# or letters derived earlier in the same table
FAMILIES = {
    "standard": (
        ("a", "b", "cab", "adab"),
        ("ac", "c", "dac", "adac"),
        (("a", "g1"), ("b", "g2"), ("c", "g3 b a"), ("d", "a g4 b a")),
        (("a", "g1 g2"), ("c", "g2"), ("d", "g3 c a"), ("b", "c d")),
    ),
    "i0-fallback": (
        ("a", "d", "cad", "abad"),
        ("ac", "c", "bac", "abac"),
        (("a", "g1"), ("d", "g2"), ("c", "g3 d a"), ("b", "a g4 d a")),
        (("a", "g1 g2"), ("c", "g2"), ("b", "g3 c a"), ("d", "b c")),
    ),
    "sigma-constant": (
        ("a", "b", "c", "ad"),
        ("ab", "d", "abad", "acabad"),
        (("a", "g1"), ("b", "g2"), ("c", "g3"), ("d", "a g4")),
        (("a", "g1' g3 g2"), ("b", "a g1"), ("d", "g2"), ("c", "b d")),
    ),
}
IDENTITY_MAP = {"a": "a", "b": "b", "c": "c", "d": "d"}


def relabel(word: str, letter_map: dict) -> str:
    return "".join(letter_map.get(ch, ch) for ch in word)


def _relabel_tokens(tokens: str, letter_map: dict) -> str:
    return " ".join(t if t.startswith("g") else letter_map[t] for t in tokens.split())


@dataclass
class GenTuple:
    name: str
    family: str
    words: tuple
    values: tuple
    canonical_final: TreeAut
    witnesses: tuple = ()

    def __post_init__(self):
        for word, value in zip(self.words, self.values):
            if value.is_identity():
                raise ValueError(f"tuple {self.name} entry {word!r} is the identity")

    @classmethod
    def from_words(cls, omega: OmegaSeq, n: int, words, *, name="T", family="custom", witnesses=()):
        values = tuple(om.evaluate_word(omega, w, n) for w in words)
        head = identity(n)
        for v in values[:-1]:
            head = head * v
        return cls(name, family, tuple(words), values, head.inverse(), tuple(witnesses))

    @property
    def entries(self) -> list:
        """Entries with the canonical final element in last position."""
        return [*self.values[:-1], self.canonical_final]

    def to_json(self):
        return {
            "name": self.name,
            "words": list(self.words),
            "portraits": [v.serialize() for v in self.values],
            "canonical_final": self.canonical_final.serialize(),
        }


def candidate_letter_maps(omega: OmegaSeq):
    """Letter maps in the order they are tried: the preferred one first, then all others."""
    preferred = dict(IDENTITY_MAP)
    if om.classify(omega).sigma_constant:
        tail_symbol = om.shift(omega, 1)[1]
        b = om.d_generator_letter(omega)
        d = om.LETTER_KILLED_BY[tail_symbol]
        (c,) = set("bcd") - {b, d}
        preferred = {"a": "a", "b": b, "c": c, "d": d}
    maps = [preferred]
    for perm in itertools.permutations("bcd"):
        m = {"a": "a", **dict(zip("bcd", perm))}
        if m not in maps:
            maps.append(m)
    return maps


def preferred_family(omega: OmegaSeq) -> str:
    om.require_nonconstant(omega)
    if om.classify(omega).sigma_constant:
        return "sigma-constant"
    return "i0-fallback" if om.index_first(omega, 0) == 1 else "standard"


def candidates(omega: OmegaSeq):
    """(family, letter map) pairs in retry order."""
    first = preferred_family(omega)
    maps = candidate_letter_maps(omega)
    order = [first] + [f for f in FAMILIES if f != first]
    out = [(first, maps[0])]
    for family in order:
        for m in maps:
            if (family, m) not in out:
                out.append((family, m))
    return out


def build_tuples(omega: OmegaSeq, n: int, family: str | None = None, letter_map: dict | None = None):
    om.require_nonconstant(omega)
    if n < 2:
        raise ValueError("tuples need depth n >= 2")
    if family is None:
        family = preferred_family(omega)
    if letter_map is None:
        letter_map = candidate_letter_maps(omega)[0] if family == preferred_family(omega) else IDENTITY_MAP
    t1, t2, w1, w2 = FAMILIES[family]
    out = []
    for name, words, wit in (("T1", t1, w1), ("T2", t2, w2)):
        words = tuple(relabel(w, letter_map) for w in words)
        wit = tuple((letter_map[x], _relabel_tokens(toks, letter_map)) for x, toks in wit)
        out.append(GenTuple.from_words(omega, n, words, name=name, family=family, witnesses=wit))
    return tuple(out)


def _evaluate_tokens(tokens: str, T: GenTuple, env: dict, n: int) -> TreeAut:
    result = identity(n)
    for tok in tokens.split():
        if tok.startswith("g"):
            inverse = tok.endswith("'")
            v = T.values[int(tok.strip("g'")) - 1]
            result = result * (v.inverse() if inverse else v)
        elif tok in env:
            result = result * env[tok]
        else:
            raise KeyError(f"witness token {tok!r} used before it is derived")
    return result


def _is_power(x: TreeAut, y: TreeAut) -> bool:
    p = identity(x.depth)
    for _ in range(x.order()):
        if p == y:
            return True
        p = p * x
    return False


def check_spherical(T: GenTuple, omega: OmegaSeq, n: int) -> dict:
    """Product-one and generation evidence for ``T`` as a system of generators of ``G(n)``."""
    listed = identity(n)
    for v in T.values:
        listed = listed * v
    full = identity(n)
    for v in T.entries:
        full = full * v
    final = T.values[-1]
    cyclic = _is_power(final, T.canonical_final) and _is_power(T.canonical_final, final)
    env = {}
    witnesses = []
    for letter, tokens in T.witnesses:
        value = _evaluate_tokens(tokens, T, env, n)
        ok = value == om.generator(omega, letter, n)
        env[letter] = value
        witnesses.append({"letter": letter, "expression": tokens, "ok": ok})
    generated = set(env) == set(om.LETTERS) and all(w["ok"] for w in witnesses)
    failing = [f"{w['letter']} = {w['expression']}" for w in witnesses if not w["ok"]]
    if not cyclic:
        failing.append("<listed final> != <canonical final>")
    return {
        "tuple": T.name,
        "product_one": full.is_identity(),
        "literal_product_is_identity": listed.is_identity(),
        "literal_product_is_final_squared": listed == final * final,
        "final_cyclic_match": cyclic,
        "witnesses": witnesses,
        "generates": generated,
        "failing": failing,
        "ok": full.is_identity() and cyclic and generated,
    }


def involution_of(x: TreeAut) -> TreeAut:
    if x.is_identity():
        raise ValueError("the identity has no involution")
    return x ** (x.order() // 2)


def _cyclic_classes(x: TreeAut, gens, budget: Budget) -> set:
    # union of the classes of all nontrivial powers of x
    out = set()
    p = x
    while not p.is_identity():
        if p.leaves not in out:
            out |= conjugacy_class(p, gens, budget)
        p = p * x
    return out


@dataclass
class DisjointnessResult:
    pairs: list
    verdict: str
    mode: str
    details: dict = field(default_factory=dict)


def _aggregate(pairs) -> str:
    verdicts = {p["verdict"] for p in pairs}
    if "overlap" in verdicts:
        return "OVERLAP"
    if "inconclusive" in verdicts:
        return "INCONCLUSIVE"
    return "DISJOINT"


def check_disjoint_exact(T1: GenTuple, T2: GenTuple, group: GroupSnapshot, budget: Budget = Budget()) -> DisjointnessResult:
    """Exact comparison of Sigma(T1) and Sigma(T2) in the fully enumerated group.

    Raises :class:`CapExceeded` when the group does not fit the budget.
    """
    elements = group.enumerate(budget)
    gens = group.gens
    c1 = [_cyclic_classes(x, gens, budget) for x in T1.entries]
    c2 = [_cyclic_classes(y, gens, budget) for y in T2.entries]
    pairs = []
    for i, wx in enumerate(T1.words):
        for j, wy in enumerate(T2.words):
            common = c1[i] & c2[j]
            evidence = {"kind": "exact"}
            if common:
                evidence["common"] = group.element(min(common)).serialize()
            pairs.append({"x": wx, "y": wy, "verdict": "overlap" if common else "disjoint", "evidence": evidence})
    sigma1 = set().union(*c1)
    sigma2 = set().union(*c2)
    details = {"group_order": len(elements), "sigma_sizes": [len(sigma1) + 1, len(sigma2) + 1]}
    return DisjointnessResult(pairs, _aggregate(pairs), "exact", details)


def _certified_pair(args):
    wx, wy, u, v, group, k_max, budget = args
    verdict = are_conjugate(u, v, group, k_max=k_max, budget=budget)
    if verdict.answer == "no":
        kind = "orbit" if verdict.rung == "orbit" else "certificate"
        result = "disjoint"
    elif verdict.answer == "yes":
        kind = "orbit" if verdict.rung == "orbit" else "exact"
        result = "overlap"
    else:
        kind = "inconclusive"
        result = "inconclusive"
    evidence = {"kind": kind, "test": verdict.rung, **verdict.evidence}
    return {"x": wx, "y": wy, "verdict": result, "evidence": evidence}


def check_disjoint_certified(
    T1: GenTuple,
    T2: GenTuple,
    group: GroupSnapshot,
    *,
    k_max: int = 4,
    budget: Budget = Budget(),
    threads: int = 1,
) -> DisjointnessResult:
    """Pairwise non-conjugacy of the entry involutions, via the conjugacy ladder."""
    inv1 = [involution_of(x) for x in T1.entries]
    inv2 = [involution_of(y) for y in T2.entries]
    jobs = [
        (wx, wy, inv1[i], inv2[j], group, k_max, budget)
        for i, wx in enumerate(T1.words)
        for j, wy in enumerate(T2.words)
    ]
    # warm the truncation cache so worker threads only read it
    for k in range(1, min(k_max, group.depth - 1) + 1):
        group.truncated(k)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = list(pool.map(_certified_pair, jobs))
    else:
        pairs = [_certified_pair(job) for job in jobs]
    return DisjointnessResult(pairs, _aggregate(pairs), "certified")


def _claim(verdict: str, n: int, m: int) -> str:
    if n < m:
        return "below-threshold"
    return {"PASS": "confirmed", "FAIL": "red-alarm", "INCONCLUSIVE": "unresolved"}[verdict]


def _attempt(omega, n, family, letter_map, mode, k_max, budget, threads, group):
    T1, T2 = build_tuples(omega, n, family, letter_map)
    spherical = [check_spherical(T1, omega, n), check_spherical(T2, omega, n)]
    caps = []
    if mode == "exact":
        result = check_disjoint_exact(T1, T2, group, budget)
    else:
        result = check_disjoint_certified(T1, T2, group, k_max=k_max, budget=budget, threads=threads)
    for p in result.pairs:
        for cap in p["evidence"].get("caps", []):
            caps.append({"stage": "certified", "pair": [p["x"], p["y"]], **cap})
    if not all(s["ok"] for s in spherical) or result.verdict == "OVERLAP":
        verdict = "FAIL"
    elif result.verdict == "INCONCLUSIVE":
        verdict = "INCONCLUSIVE"
    else:
        verdict = "PASS"
    return T1, T2, spherical, result, caps, verdict


def verify_theorem(
    omega: OmegaSeq,
    n: int,
    mode: str = "auto",
    *,
    k_max: int = 4,
    budget: Budget = Budget(),
    threads: int = 1,
    retry: bool = True,
    timings: bool = False,
) -> dict:
    """Build the tuples for ``G(n)``, check them and return the report as a dict.

    Falls back through the other tuple families and letter maps when the
    preferred choice does not pass.  Raises :class:`CapExceeded` only in
    ``exact`` mode.
    """
    if mode not in ("auto", "exact", "certified"):
        raise ValueError(f"unknown mode {mode!r}")
    om.require_nonconstant(omega)
    if n < 2:
        raise ValueError("verification needs depth n >= 2")
    start = time.monotonic()
    m = om.threshold_M(omega)
    group = GroupSnapshot.grigorchuk(omega, n)
    enumeration_caps = []
    if mode == "auto":
        try:
            group.enumerate(budget)
            mode = "exact"
        except CapExceeded as exc:
            enumeration_caps.append({"stage": "enumerate", "resource": exc.resource, "partial": exc.partial})
            mode = "certified"
    tried = candidates(omega) if retry else candidates(omega)[:1]
    attempts = []
    first = None
    chosen = None
    for family, letter_map in tried:
        outcome = _attempt(omega, n, family, letter_map, mode, k_max, budget, threads, group)
        attempts.append({"family": family, "letter_map": "".join(letter_map[x] for x in "bcd"), "verdict": outcome[-1]})
        if first is None:
            first = (family, letter_map, outcome)
        if outcome[-1] == "PASS":
            chosen = (family, letter_map, outcome)
            break
    if chosen is None:
        chosen = first
    family, letter_map, (T1, T2, spherical, result, caps, verdict) = chosen
    report = {
        "omega": str(omega),
        "depth": n,
        "threshold_m": m,
        "threshold_case": om.threshold_case(omega),
        "family": family,
        "letter_map": "".join(letter_map[x] for x in "bcd"),
        "mode": result.mode,
        "tuples": [T1.to_json(), T2.to_json()],
        "spherical": spherical,
        "pairs": result.pairs,
        "disjointness": result.verdict,
        "verdict": verdict,
        "theorem_claim": _claim(verdict, n, m),
        "attempts": attempts,
        "caps_hit": enumeration_caps + caps,
        "elapsed_ms": round((time.monotonic() - start) * 1000) if timings else None,
    }
    if result.details:
        report["exact"] = result.details
    return report
