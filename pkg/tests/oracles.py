"""Independent reference constructions used by several test modules."""

from ramitree.treeauto import TreeAut

KILLER = {"b": 2, "c": 1, "d": 0}


def directed_oracle(symbols, killer, n):
    """Portrait built vertex by vertex: label 1 at '1'*m + '0' iff symbols[m] != killer."""
    labels = []
    for k in range(n):
        for v in range(2**k):
            word = format(v, f"0{k}b") if k else ""
            m = k - 1
            hit = k >= 1 and word == "1" * m + "0" and symbols[m] != killer
            labels.append(1 if hit else 0)
    return TreeAut.from_portrait(n, labels)


def level_filter(n, k):
    """``(table, target)`` such that ``key.translate(table) == target`` iff ``key`` fixes level ``k``."""
    shift = n - k
    table = bytes((x >> shift) & 0xFF for x in range(256))
    target = bytes(i >> shift for i in range(2**n))
    return table, target
