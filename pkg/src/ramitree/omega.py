"""Defining sequences of Grigorchuk groups and the generators they induce.

A sequence is eventually periodic over ``{0, 1, 2}`` and written
``PRE(PERIOD)``; positions are 1-based throughout, so ``omega[1]`` is the
first symbol.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache

from .treeauto import TreeAut, _check_depth, identity, rooted_swap

INFINITE = math.inf
LETTERS = "abcd"
DIRECTED = "bcd"
# symbol whose occurrence kills the label of each directed generator
KILLED_BY = {"b": 2, "c": 1, "d": 0}
LETTER_KILLED_BY = {2: "b", 1: "c", 0: "d"}

_PATTERN = re.compile(r"^([012]*)\(([012]+)\)$")


class OmegaError(ValueError):
    """Malformed or excluded defining sequence."""


@dataclass(frozen=True)
class OmegaSeq:
    preperiod: str
    period: str

    def __post_init__(self):
        if not self.period:
            raise OmegaError("period must be nonempty")
        if any(ch not in "012" for ch in self.preperiod + self.period):
            raise OmegaError("symbols must be in {0,1,2}")

    def __str__(self):
        return f"{self.preperiod}({self.period})"

    def __getitem__(self, i: int) -> int:
        if i < 1:
            raise IndexError("sequence positions start at 1")
        if i <= len(self.preperiod):
            return int(self.preperiod[i - 1])
        return int(self.period[(i - len(self.preperiod) - 1) % len(self.period)])

    def prefix(self, length: int) -> list[int]:
        return [self[i] for i in range(1, length + 1)]

    @property
    def is_constant(self) -> bool:
        return len(set(self.preperiod + self.period)) == 1

    def canonical(self) -> "OmegaSeq":
        return canonicalize(self.preperiod, self.period)


def canonicalize(preperiod: str, period: str) -> OmegaSeq:
    p = len(period)
    for q in range(1, p + 1):
        if p % q == 0 and period[:q] * (p // q) == period:
            period = period[:q]
            break
    while preperiod and preperiod[-1] == period[-1]:
        preperiod = preperiod[:-1]
        period = period[-1] + period[:-1]
    return OmegaSeq(preperiod, period)


def parse_omega(text: str) -> OmegaSeq:
    """Parse ``PRE(PERIOD)``, e.g. ``"(012)"``, ``"2(0)"``, ``"01(222)"``."""
    text = text.strip()
    if not text:
        raise OmegaError("empty sequence string")
    m = _PATTERN.match(text)
    if m is None:
        if "()" in text:
            raise OmegaError(f"empty period in {text!r}")
        raise OmegaError(f"cannot parse sequence {text!r}; expected PRE(PERIOD) over 0,1,2")
    return canonicalize(m.group(1), m.group(2))


def require_nonconstant(omega: OmegaSeq) -> None:
    if omega.is_constant:
        raise OmegaError(f"constant sequence excluded: {omega}")


def shift(omega: OmegaSeq, k: int) -> OmegaSeq:
    if k < 0:
        raise ValueError("shift must be non-negative")
    pre, per = omega.preperiod, omega.period
    if k <= len(pre):
        return canonicalize(pre[k:], per)
    r = (k - len(pre)) % len(per)
    return canonicalize("", per[r:] + per[:r])


def index_first(omega: OmegaSeq, k: int) -> float:
    """First position of symbol ``k`` (1-based), or ``INFINITE``."""
    if k not in (0, 1, 2):
        raise ValueError(f"symbol must be 0, 1 or 2, got {k!r}")
    s = str(k)
    pos = omega.preperiod.find(s)
    if pos >= 0:
        return pos + 1
    pos = omega.period.find(s)
    if pos >= 0:
        return len(omega.preperiod) + pos + 1
    return INFINITE


def m_of(omega: OmegaSeq) -> int:
    """Length of the maximal constant prefix."""
    require_nonconstant(omega)
    first = omega[1]
    n = 1
    while omega[n + 1] == first:
        n += 1
    return n


def is_constant_from(omega: OmegaSeq, k: int, symbol: int) -> bool:
    """Whether ``shift(omega, k)`` is the constant sequence ``symbol symbol ...``."""
    tail = shift(omega, k)
    return tail.preperiod == "" and tail.period == str(symbol)


@dataclass(frozen=True)
class Classification:
    is_constant: bool
    is_eventually_constant: bool
    in_omega0: bool
    missing_from_period: tuple
    sigma_constant: bool

    def as_dict(self):
        return {
            "is_constant": self.is_constant,
            "is_eventually_constant": self.is_eventually_constant,
            "in_Omega0": self.in_omega0,
            "missing_from_period": list(self.missing_from_period),
            "sigma_constant": self.sigma_constant,
        }


def classify(omega: OmegaSeq) -> Classification:
    present = set(omega.period)
    return Classification(
        is_constant=omega.is_constant,
        is_eventually_constant=len(present) == 1,
        in_omega0=present == {"0", "1", "2"},
        missing_from_period=tuple(k for k in (0, 1, 2) if str(k) not in present),
        sigma_constant=shift(omega, 1).is_constant,
    )


def threshold_case(omega: OmegaSeq) -> str:
    """``"N"``, ``"N~"`` or ``"sigma-constant"``, the theorem case the sequence falls in."""
    require_nonconstant(omega)
    tail = shift(omega, 1)
    if tail.is_constant:
        return "sigma-constant"
    missing = sum(index_first(tail, k) == INFINITE for k in (0, 1, 2))
    if missing == 0:
        return "N"
    if missing == 1:
        return "N~"
    raise AssertionError(f"{omega}: two symbols missing from a non-constant shift")


def threshold_M(omega: OmegaSeq) -> int:
    case = threshold_case(omega)
    if case == "sigma-constant":
        return 4
    tail = shift(omega, 1)
    finite = [index_first(tail, k) for k in (0, 1, 2) if index_first(tail, k) != INFINITE]
    return int(max(finite)) + 4


def d_generator_letter(omega: OmegaSeq) -> str:
    require_nonconstant(omega)
    return LETTER_KILLED_BY[omega[1]]


def c_generator_letter(omega: OmegaSeq) -> str:
    # the d-generator of the shifted group is killed by omega_{m+1}
    return LETTER_KILLED_BY[omega[m_of(omega) + 1]]


@lru_cache(maxsize=4096)
def generator(omega: OmegaSeq, letter: str, n: int) -> TreeAut:
    """Image of ``a``, ``b_omega``, ``c_omega`` or ``d_omega`` in the depth-``n`` quotient."""
    require_nonconstant(omega)
    if letter == "a":
        return rooted_swap(n)
    if letter not in KILLED_BY:
        raise ValueError(f"unknown generator letter {letter!r}")
    _check_depth(n)
    killer = KILLED_BY[letter]
    labels = [0] * (2**n - 1)
    # vertex u_m 0 = '1'*m + '0' sits at level m+1
    for m in range(n - 1):
        if omega[m + 1] != killer:
            index = ((1 << m) - 1) << 1
            labels[(1 << (m + 1)) - 1 + index] = 1
    return TreeAut.from_portrait(n, labels)


def evaluate_word(omega: OmegaSeq, word: str, n: int) -> TreeAut:
    """Product of generator letters read left to right; ``"e"`` or ``""`` is the identity."""
    result = identity(n)
    for ch in word:
        if ch == "e":
            continue
        result = result * generator(omega, ch, n)
    return result


@dataclass(frozen=True)
class OrderPrediction:
    """``value`` is ``2**k`` when finite; ``status`` is ``finite``, ``infinite`` or ``lemma-not-applicable``."""

    status: str
    value: int | None = None

    def __str__(self):
        return str(self.value) if self.status == "finite" else self.status

    def to_json(self):
        return self.value if self.status == "finite" else self.status


_BASIC = {"ab": 2, "ac": 1, "ad": 0}
PRODUCT_WORDS = ("adab", "adac", "acab")
PREDICTABLE_WORDS = tuple(_BASIC) + PRODUCT_WORDS
# relevant basic words over the shifted sequence, indexed by omega_1
_PRODUCT_TABLE = {
    "adab": {0: ("ad",), 1: ("ad", "ab"), 2: ("ab",)},
    "adac": {0: ("ad",), 1: ("ac",), 2: ("ad", "ac")},
    "acab": {0: ("ac", "ab"), 1: ("ac",), 2: ("ab",)},
}


def _basic_exponent(omega: OmegaSeq, word: str):
    k = _BASIC[word]
    i = index_first(omega, k)
    if i == INFINITE:
        return None
    eps = 0 if is_constant_from(omega, int(i), k) else 1
    return int(i) + eps


def predicted_order(omega: OmegaSeq, word: str) -> OrderPrediction:
    """Order of ``word`` in the infinite group as given by the closed-form order formula."""
    require_nonconstant(omega)
    if word in _BASIC:
        t = _basic_exponent(omega, word)
        return OrderPrediction("infinite") if t is None else OrderPrediction("finite", 2**t)
    if word not in _PRODUCT_TABLE:
        raise ValueError(f"no order formula for word {word!r}")
    tail = shift(omega, 1)
    if tail.is_constant or any(index_first(tail, k) == INFINITE for k in (0, 1, 2)):
        return OrderPrediction("lemma-not-applicable")
    orders = [2 ** _basic_exponent(tail, w) for w in _PRODUCT_TABLE[word][omega[1]]]
    return OrderPrediction("finite", max(orders))


def saturation_depth(omega: OmegaSeq, word: str) -> float:
    """Smallest depth from which the quotient order of ``word`` equals its predicted order.

    Returns ``INFINITE`` when no finite prediction exists.
    """
    if word in _BASIC:
        k = _BASIC[word]
        i = index_first(omega, k)
        if i == INFINITE:
            return INFINITE
        i = int(i)
        if is_constant_from(omega, i, k):
            # top power has sections a at level i-1
            return i
        # top power has sections over shift(omega, i); their first label
        # lies at the first position of a symbol other than k
        tail = shift(omega, i)
        j = min(index_first(tail, s) for s in (0, 1, 2) if s != k)
        return i + int(j) + 1
    if predicted_order(omega, word).status != "finite":
        return INFINITE
    tail = shift(omega, 1)
    return 1 + max(saturation_depth(tail, w) for w in _PRODUCT_TABLE[word][omega[1]])
