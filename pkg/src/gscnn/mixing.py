"""Degree-mixing sets for tensor-product activations.

For an output degree ``l`` and bandlimit ``L`` the graph ``G^l_L`` has nodes
``0..L-1`` and an undirected edge ``(l1, l2)`` whenever
``|l1 - l2| <= l <= l1 + l2``. Three subsets of its edges are provided:

* ``full``: every edge, including loops ``(l1, l1)``;
* ``mst``: a minimum spanning forest under the CG-contraction cost, plus all
  loops;
* ``rmst``: a logarithmic subset of the ``mst`` edges kept at dyadic
  positions around the node ``l``, plus the loop ``(l, l)``.

Pairs are stored undirected with ``l1 <= l2`` and sorted lexicographically.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "MixingSet",
    "edge_weight",
    "full_set",
    "mst_set",
    "rmst_set",
    "mixing_set",
    "spanning_components",
    "KINDS",
]

KINDS = ("full", "mst", "rmst")

Pair = tuple[int, int]


def edge_weight(l1: int, l2: int, l: int) -> int:
    """Number of nonzero terms in ``C^{l1 l2 l}`` contracted against ``f^{l1} (x) f^{l2}``.

    Counts ``(m1, m2)`` with ``|m1| <= l1``, ``|m2| <= l2`` and
    ``|m1 + m2| <= l``; in closed form ``(2a+1)(2b+1) - T(T+1)`` with
    ``a <= b`` the input degrees and ``T = l1 + l2 - l``.
    """
    if min(l1, l2, l) < 0 or not abs(l1 - l2) <= l <= l1 + l2:
        raise ValueError(f"triangle condition violated for {(l1, l2, l)}")
    t = l1 + l2 - l
    return (2 * l1 + 1) * (2 * l2 + 1) - t * (t + 1)


def _check_degree(L: int, l: int):
    if L < 1:
        raise ValueError("bandlimit must be positive")
    if not 0 <= l < L:
        raise ValueError(f"degree {l} outside [0, {L})")


@lru_cache(maxsize=None)
def _full(L: int, l: int) -> tuple[Pair, ...]:
    return tuple((a, b) for a in range(L) for b in range(a, L) if b - a <= l <= a + b)


def full_set(L: int, l: int) -> list[Pair]:
    """All undirected pairs ``(l1 <= l2)`` satisfying the triangle condition."""
    _check_degree(L, l)
    return list(_full(L, l))


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def spanning_components(L: int, edges) -> list[int]:
    """Component label (smallest member) of every node ``0..L-1``."""
    uf = _UnionFind(L)
    for a, b in edges:
        uf.union(a, b)
    return [uf.find(x) for x in range(L)]


def _sorted_edges(L: int, l: int) -> np.ndarray:
    """Non-loop edges of ``G^l_L`` as rows ``(l1, l2)`` in Kruskal order."""
    a, b = np.triu_indices(L, k=1)
    keep = (b - a <= l) & (l <= a + b)
    a, b = a[keep], b[keep]
    t = a + b - l
    w = (2 * a + 1) * (2 * b + 1) - t * (t + 1)
    order = np.lexsort((b, a, w))
    return np.stack([a[order], b[order]], axis=1)


@lru_cache(maxsize=None)
def _mst_tree(L: int, l: int) -> tuple[Pair, ...]:
    """Kruskal spanning forest over non-loop edges, ties broken by ``(l1, l2)``."""
    edges = _sorted_edges(L, l)
    uf = _UnionFind(L)
    tree = []
    # G^l_L is connected for l >= 1, so at most L - 1 edges are accepted
    for a, b in edges.tolist():
        if uf.union(a, b):
            tree.append((a, b))
            if len(tree) == L - 1:
                break
    return tuple(sorted(tree))


def mst_set(L: int, l: int) -> list[Pair]:
    """Minimum spanning forest of ``G^l_L`` unioned with its loop edges."""
    _check_degree(L, l)
    loops = [(a, a) for a in range(L) if l <= 2 * a]
    return sorted(set(_mst_tree(L, l)) | set(loops))


def _branch_orders(L: int, l: int) -> list[list[Pair]]:
    """Edges of the MST tree rooted at ``l``, one depth-first list per root branch."""
    adj: dict[int, list[int]] = {}
    for a, b in _mst_tree(L, l):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    branches = []
    for child in sorted(adj.get(l, [])):
        order: list[Pair] = []
        stack = [(l, child)]
        while stack:
            parent, node = stack.pop()
            order.append((min(parent, node), max(parent, node)))
            for nxt in sorted((n for n in adj[node] if n != parent), reverse=True):
                stack.append((node, nxt))
        branches.append(order)
    return branches


def rmst_set(L: int, l: int) -> list[Pair]:
    """Reduced MST: edges at positions ``1, 2, 4, 8, ...`` along each branch from ``l``.

    The MST is rooted at node ``l`` (the loop ``(l, l)`` sits at distance 0).
    Each branch leaving the root is linearized depth-first with children
    visited in increasing order; for the path-shaped trees seen in practice
    this is simply the walk outward along the path.
    """
    _check_degree(L, l)
    keep = {(l, l)}
    for order in _branch_orders(L, l):
        k = 1
        while k <= len(order):
            keep.add(order[k - 1])
            k *= 2
    return sorted(keep)


_BUILDERS = {"full": full_set, "mst": mst_set, "rmst": rmst_set}


@dataclass(frozen=True)
class MixingSet:
    """Per-degree mixing pairs for a bandlimit ``L``.

    Attributes
    ----------
    L : int
    pairs : tuple of tuple of (int, int)
        ``pairs[l]`` lists the undirected pairs coupled into degree ``l``.
    kind : str
        Provenance label (``full``, ``mst``, ``rmst`` or ``custom``).
    """

    L: int
    pairs: tuple[tuple[Pair, ...], ...]
    kind: str = "custom"

    def __post_init__(self):
        pairs = tuple(tuple((int(a), int(b)) for a, b in p) for p in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        self.validate()

    def validate(self) -> None:
        """Raise ``ValueError`` on out-of-range, non-triangle or duplicate pairs."""
        if len(self.pairs) != self.L:
            raise ValueError(f"expected {self.L} degrees, got {len(self.pairs)}")
        for l, P in enumerate(self.pairs):
            seen = set()
            for a, b in P:
                if not (0 <= a <= b < self.L):
                    raise ValueError(f"pair {(a, b)} at degree {l} is not an ordered pair below L={self.L}")
                if not b - a <= l <= a + b:
                    raise ValueError(f"pair {(a, b)} violates the triangle condition at degree {l}")
                if (a, b) in seen:
                    raise ValueError(f"duplicate pair {(a, b)} at degree {l}")
                seen.add((a, b))

    def __getitem__(self, l: int) -> tuple[Pair, ...]:
        return self.pairs[l]

    def __len__(self):
        return self.L

    def sizes(self) -> list[int]:
        return [len(p) for p in self.pairs]

    def union(self, other: "MixingSet") -> "MixingSet":
        """Per-degree union; ``self``'s pairs come first, new pairs appended in order."""
        if other.L != self.L:
            raise ValueError("bandlimit mismatch")
        out = []
        for a, b in zip(self.pairs, other.pairs):
            out.append(a + tuple(p for p in b if p not in set(a)))
        return MixingSet(self.L, tuple(out))

    def distinct_pairs(self) -> list[Pair]:
        """All input pairs used at any degree, sorted."""
        return sorted({p for P in self.pairs for p in P})


def mixing_set(L: int, kind: str = "full") -> MixingSet:
    """Mixing set of the given kind for every degree ``l < L``."""
    try:
        build = _BUILDERS[kind]
    except KeyError:
        raise ValueError(f"unknown mixing-set kind {kind!r}; expected one of {KINDS}") from None
    return MixingSet(L, tuple(tuple(build(L, l)) for l in range(L)), kind)
