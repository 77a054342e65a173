"""Signed graphs and their Laplacian operators.

A signed graph is a pair of nonnegative symmetric weight matrices on a shared
vertex set: attractive relations in ``w_plus``, repulsive ones in ``w_minus``.
This module builds every Laplacian the clustering pipelines consume:

======  ==============================================================
kind    operator
======  ==============================================================
``SR``  signed ratio Laplacian  ``Dbar - W+ + W-``  (= ``L+ + Q-``)
``SN``  its symmetric normalization ``Dbar^-1/2 SR Dbar^-1/2``
``BR``  balance ratio Laplacian  ``D+ - W+ + W-``
``BN``  symmetrized balance normalized form ``Dbar^-1/2 BR Dbar^-1/2``
        (similar to ``Dbar^-1 BR``, hence the same spectrum)
``AM``  arithmetic mean of normalizations  ``Lsym+ + Qsym-``
======  ==============================================================

Degree-zero vertices get a zero row in every normalized operator (their
``D^-1/2`` entry is defined as 0).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .csr import SparseSymMatrix
from .errors import EdgeListParseError

SIGNED_KINDS = ("BR", "BN", "SR", "SN", "AM")


@dataclass(frozen=True)
class SignedGraph:
    """Pair of nonnegative symmetric weight matrices on one vertex set."""

    w_plus: SparseSymMatrix
    w_minus: SparseSymMatrix

    def __post_init__(self):
        if self.w_plus.n != self.w_minus.n:
            raise ValueError("w_plus and w_minus must have the same order")
        for name, w in (("w_plus", self.w_plus), ("w_minus", self.w_minus)):
            if w.values.size and w.values.min() < 0.0:
                raise ValueError(f"{name} has negative weights")
            if np.any(w.diagonal_vector() != 0.0):
                raise ValueError(f"{name} has nonzero diagonal entries (self loops)")

    @property
    def n(self):
        return self.w_plus.n


@dataclass(frozen=True)
class DegreeVectors:
    d_plus: np.ndarray
    d_minus: np.ndarray
    d_bar: np.ndarray


@dataclass(frozen=True)
class ShiftConfig:
    """Diagonal shifts making the normalized Laplacian pair positive definite."""

    eps1: float = 1e-6
    eps2: float = 1e-6

    def __post_init__(self):
        if self.eps1 < 0.0 or self.eps2 < 0.0:
            raise ValueError("shifts must be nonnegative")
        if self.eps1 + self.eps2 >= 1.0:
            raise ValueError("eps1 + eps2 must be below 1")

    def require_positive(self):
        if self.eps1 <= 0.0 or self.eps2 <= 0.0:
            raise ValueError("the geometric-mean path needs strictly positive shifts")


def degrees(g):
    """Per-vertex degree sums; ``d_bar`` is computed as ``d_plus + d_minus``."""
    d_plus = g.w_plus.row_sums()
    d_minus = g.w_minus.row_sums()
    return DegreeVectors(d_plus=d_plus, d_minus=d_minus, d_bar=d_plus + d_minus)


def _inv_sqrt_degrees(d):
    # degree-0 convention: the scaling entry is 0, zeroing the operator row
    pos = d > 0.0
    return np.where(pos, 1.0 / np.sqrt(np.where(pos, d, 1.0)), 0.0)


def laplacian(w, normalized=False):
    """Graph Laplacian ``D - W`` or its symmetric normalization."""
    d = w.row_sums()
    lap = SparseSymMatrix.diagonal(d) - w
    if not normalized:
        return lap
    return lap.scale_symmetric(_inv_sqrt_degrees(d))


def signless_laplacian(w, normalized=False):
    """Signless Laplacian ``D + W``; its smallest eigenvalue vanishes exactly
    on bipartite components."""
    d = w.row_sums()
    q = SparseSymMatrix.diagonal(d) + w
    if not normalized:
        return q
    return q.scale_symmetric(_inv_sqrt_degrees(d))


def signed_laplacian(g, kind):
    """One of the signed operators listed in the module docstring."""
    if kind not in SIGNED_KINDS:
        raise ValueError(f"kind must be one of {SIGNED_KINDS}, got {kind!r}")
    if kind == "AM":
        return laplacian(g.w_plus, normalized=True) + signless_laplacian(
            g.w_minus, normalized=True
        )
    deg = degrees(g)
    if kind in ("SR", "SN"):
        ratio = SparseSymMatrix.diagonal(deg.d_bar) - g.w_plus + g.w_minus
    else:
        ratio = SparseSymMatrix.diagonal(deg.d_plus) - g.w_plus + g.w_minus
    if kind in ("SR", "BR"):
        return ratio
    return ratio.scale_symmetric(_inv_sqrt_degrees(deg.d_bar))


def shifted_pair(g, shift):
    """The SPD operator pair ``(Lsym+ + eps1 I, Qsym- + eps2 I)``."""
    shift.require_positive()
    a = laplacian(g.w_plus, normalized=True).add_diagonal(shift.eps1)
    b = signless_laplacian(g.w_minus, normalized=True).add_diagonal(shift.eps2)
    return a, b


def load_edge_list(path, n=None):
    """Read a signed graph from a text edge list.

    Each non-comment line is ``i j w`` with 0-based vertex indices; positive
    weights go to the positive graph, negative ones (by magnitude) to the
    negative graph.  Duplicate undirected edges are summed; self loops are
    dropped (a single warning reports how many).
    """
    pos = ([], [], [])
    neg = ([], [], [])
    max_idx = -1
    dropped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise EdgeListParseError(
                    f"expected 'i j w', got {len(parts)} fields", line_no
                )
            try:
                i, j = int(parts[0]), int(parts[1])
                w = float(parts[2])
            except ValueError as exc:
                raise EdgeListParseError(str(exc), line_no) from None
            if i < 0 or j < 0:
                raise EdgeListParseError("negative vertex index", line_no)
            if i == j:
                dropped += 1
                continue
            max_idx = max(max_idx, i, j)
            if w == 0.0:
                continue
            target = pos if w > 0.0 else neg
            target[0].append(i)
            target[1].append(j)
            target[2].append(abs(w))
    if dropped:
        warnings.warn(f"dropped {dropped} self loop(s) from {path}", stacklevel=2)
    if n is None:
        n = max_idx + 1
    elif max_idx >= n:
        raise ValueError(f"vertex index {max_idx} exceeds declared order {n}")
    if n <= 0:
        raise ValueError("edge list is empty and no vertex count was given")
    return SignedGraph(
        w_plus=SparseSymMatrix.from_undirected_edges(n, *pos),
        w_minus=SparseSymMatrix.from_undirected_edges(n, *neg),
    )
