"""Signed stochastic block model: sampling, expectations, and the condition
calculus that predicts which operators put the cluster indicators at the
bottom of the spectrum.

The model has ``k`` equally sized clusters.  Within a cluster each unordered
vertex pair independently receives a positive edge with probability
``p_in_plus`` and a negative edge with probability ``p_in_minus``; across
clusters the probabilities are ``p_out_plus`` and ``p_out_minus``.  A pair may
carry both a positive and a negative edge.  Expectation matrices are
block-constant including the diagonal (rank ``k``), while samples have zero
diagonal.
"""

import math
from dataclasses import dataclass

import numpy as np

from .csr import SparseSymMatrix
from .densela import dense_geometric_mean
from .graphs import SignedGraph


@dataclass(frozen=True)
class SbmParams:
    k: int
    cluster_size: int
    p_in_plus: float
    p_out_plus: float
    p_in_minus: float
    p_out_minus: float

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least two clusters")
        if self.cluster_size < 1:
            raise ValueError("cluster_size must be positive")
        for name in ("p_in_plus", "p_out_plus", "p_in_minus", "p_out_minus"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} is not a probability")

    @property
    def n(self):
        return self.k * self.cluster_size


# -- sampling ------------------------------------------------------------


def _distinct_indices(rng, n_pairs, m):
    """m distinct integers from range(n_pairs), uniformly, memory-bounded."""
    if m == 0:
        return np.empty(0, dtype=np.int64)
    if m >= n_pairs:
        return np.arange(n_pairs, dtype=np.int64)
    if n_pairs <= 1_000_000:
        return rng.permutation(n_pairs)[:m].astype(np.int64)
    pool = np.empty(0, dtype=np.int64)
    while pool.size < m:
        extra = rng.integers(0, n_pairs, size=int(1.2 * (m - pool.size)) + 16)
        pool = np.unique(np.concatenate([pool, extra]))
    return pool[rng.permutation(pool.size)[:m]]


def _decode_triangular(t, c):
    """Map flat indices of the strict upper triangle of a c x c block to (i, j)."""
    tf = t.astype(np.float64)
    i = np.floor((2 * c - 1 - np.sqrt((2 * c - 1) ** 2 - 8 * tf)) / 2).astype(np.int64)
    # guard against sqrt rounding at block boundaries
    for _ in range(2):
        base = i * (2 * c - i - 1) // 2
        i = np.where(t < base, i - 1, i)
        base = i * (2 * c - i - 1) // 2
        i = np.where(t >= base + (c - i - 1), i + 1, i)
    base = i * (2 * c - i - 1) // 2
    j = t - base + i + 1
    return i, j


def _sample_sign(rng, params, p_in, p_out):
    k, c = params.k, params.cluster_size
    rows, cols = [], []
    n_intra = c * (c - 1) // 2
    for a in range(k):
        m = rng.binomial(n_intra, p_in) if n_intra else 0
        t = _distinct_indices(rng, n_intra, int(m))
        i, j = _decode_triangular(t, c)
        rows.append(i + a * c)
        cols.append(j + a * c)
    for a in range(k):
        for b in range(a + 1, k):
            m = rng.binomial(c * c, p_out)
            t = _distinct_indices(rng, c * c, int(m))
            rows.append(t // c + a * c)
            cols.append(t % c + b * c)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    return SparseSymMatrix.from_undirected_edges(
        params.n, rows, cols, np.ones(rows.size)
    )


def sample(params, seed):
    """Draw a signed graph from the block model; deterministic given the seed."""
    rng = np.random.default_rng(seed)
    w_plus = _sample_sign(rng, params, params.p_in_plus, params.p_out_plus)
    w_minus = _sample_sign(rng, params, params.p_in_minus, params.p_out_minus)
    return SignedGraph(w_plus=w_plus, w_minus=w_minus)


def two_cluster_benchmark_graph(n, avg_degree, seed):
    """Two perfect clusters at a target average degree.

    Positive edges only inside the two clusters, negative only across, with
    probabilities chosen so the expected positive and negative degrees are
    each ``avg_degree / 2``.  Returns ``(graph, params)``.
    """
    if n % 2:
        raise ValueError("n must be even")
    c = n // 2
    params = SbmParams(
        k=2,
        cluster_size=c,
        p_in_plus=min(1.0, (avg_degree / 2.0) / max(c - 1, 1)),
        p_out_plus=0.0,
        p_in_minus=0.0,
        p_out_minus=min(1.0, (avg_degree / 2.0) / c),
    )
    return sample(params, seed), params


# -- expectations --------------------------------------------------------


def expected_graph(params):
    """Dense block-constant expectation matrices ``(W+, W-)`` (diagonal included)."""
    from .densela import ORACLE_CAP

    if params.n > ORACLE_CAP:
        raise ValueError(f"expected matrices limited to order {ORACLE_CAP}")
    block = np.repeat(np.arange(params.k), params.cluster_size)
    same = block[:, None] == block[None, :]
    w_plus = np.where(same, params.p_in_plus, params.p_out_plus)
    w_minus = np.where(same, params.p_in_minus, params.p_out_minus)
    return w_plus, w_minus


def indicator_basis(params):
    """The k cluster indicator vectors: the all-ones vector, then for each of
    the first ``k - 1`` clusters the vector with ``k - 1`` on that cluster and
    ``-1`` elsewhere.

    Together they span the space of block-constant vectors (the planted
    eigenvectors of every expected operator).  The all-ones vector is
    orthogonal to the rest; the remaining vectors are mutually orthogonal
    only for ``k = 2`` (their pairwise inner product is ``-k |C|``), so
    subspace comparisons should orthonormalize first.
    """
    n, k, c = params.n, params.k, params.cluster_size
    chi = np.full((n, k), -1.0)
    chi[:, 0] = 1.0
    for i in range(1, k):
        chi[(i - 1) * c:i * c, i] = k - 1.0
    return chi


@dataclass(frozen=True)
class OperatorSpectrum:
    """Closed-form expected spectrum: one eigenvalue per indicator vector and
    the common value on the orthogonal complement."""

    chi_values: np.ndarray
    bulk: float

    @property
    def ordering_margin(self):
        """``bulk - max(chi_values)``: positive iff the indicators occupy the
        bottom of the spectrum, with this gap."""
        return float(self.bulk - np.max(self.chi_values))


@dataclass(frozen=True)
class ExpectedSpectrum:
    lambda1_plus: float
    lambdai_plus: float
    lambda1_minus: float
    lambdai_minus: float
    d_plus: float
    d_minus: float
    operators: dict

    def __getitem__(self, kind):
        spec = self.operators[kind]
        if spec is None:
            raise ValueError(f"operator {kind!r} is degenerate for these parameters")
        return spec


def expected_spectrum(params, shift=None):
    """Closed-form eigenvalues of every expected operator.

    Normalized operators are ``None`` (degenerate) when the degree they
    normalize by vanishes.  With a shift configuration, ``"GM_shifted"``
    carries the spectrum of the geometric mean of the shifted pair.
    """
    k, c = params.k, params.cluster_size
    lam1p = c * (params.p_in_plus + (k - 1) * params.p_out_plus)
    lamip = c * (params.p_in_plus - params.p_out_plus)
    lam1m = c * (params.p_in_minus + (k - 1) * params.p_out_minus)
    lamim = c * (params.p_in_minus - params.p_out_minus)
    dp, dm = lam1p, lam1m
    dbar = dp + dm

    lam_p = np.array([lam1p] + [lamip] * (k - 1))
    lam_m = np.array([lam1m] + [lamim] * (k - 1))

    ops = {
        "BR": OperatorSpectrum(dp - lam_p + lam_m, dp),
        "SR": OperatorSpectrum(dbar - lam_p + lam_m, dbar),
        "BN": None,
        "SN": None,
        "AM": None,
        "GM": None,
        "GM_shifted": None,
    }
    if dbar > 0.0:
        ops["BN"] = OperatorSpectrum((dp - lam_p + lam_m) / dbar, dp / dbar)
        ops["SN"] = OperatorSpectrum((dbar - lam_p + lam_m) / dbar, 1.0)
    if dp > 0.0 and dm > 0.0:
        g_plus = 1.0 - lam_p / dp
        g_minus = 1.0 + lam_m / dm
        ops["AM"] = OperatorSpectrum(g_plus + g_minus, 2.0)
        ops["GM"] = OperatorSpectrum(np.sqrt(g_plus * g_minus), 1.0)
        if shift is not None:
            ops["GM_shifted"] = OperatorSpectrum(
                np.sqrt((g_plus + shift.eps1) * (g_minus + shift.eps2)),
                math.sqrt((1.0 + shift.eps1) * (1.0 + shift.eps2)),
            )
    return ExpectedSpectrum(
        lambda1_plus=lam1p,
        lambdai_plus=lamip,
        lambda1_minus=lam1m,
        lambdai_minus=lamim,
        d_plus=dp,
        d_minus=dm,
        operators=ops,
    )


def expected_operator_dense(params, kind, shift=None):
    """Dense expected operator, built from the expectation matrices themselves.

    This path is independent of the closed-form spectrum and of the sparse
    builders, which makes it the oracle side of the ordering checks.
    """
    w_plus, w_minus = expected_graph(params)
    n = params.n
    dp = w_plus.sum(axis=1)
    dm = w_minus.sum(axis=1)
    dbar = dp + dm

    def inv_sqrt(d):
        pos = d > 0.0
        return np.where(pos, 1.0 / np.sqrt(np.where(pos, d, 1.0)), 0.0)

    if kind == "SR":
        return np.diag(dbar) - w_plus + w_minus
    if kind == "BR":
        return np.diag(dp) - w_plus + w_minus
    if kind == "SN":
        s = inv_sqrt(dbar)
        return s[:, None] * (np.diag(dbar) - w_plus + w_minus) * s[None, :]
    if kind == "BN":
        s = inv_sqrt(dbar)
        return s[:, None] * (np.diag(dp) - w_plus + w_minus) * s[None, :]
    lsym = np.eye(n) - inv_sqrt(dp)[:, None] * w_plus * inv_sqrt(dp)[None, :]
    lsym[dp == 0.0, :] = 0.0
    lsym[:, dp == 0.0] = 0.0
    qsym = np.eye(n) + inv_sqrt(dm)[:, None] * w_minus * inv_sqrt(dm)[None, :]
    qsym[dm == 0.0, :] = 0.0
    qsym[:, dm == 0.0] = 0.0
    if kind == "AM":
        return lsym + qsym
    if kind == "GM":
        if shift is None:
            raise ValueError("the dense geometric mean needs a shift configuration")
        shift.require_positive()
        a = lsym + shift.eps1 * np.eye(n)
        b = qsym + shift.eps2 * np.eye(n)
        return dense_geometric_mean(a, b)
    raise ValueError(f"unknown operator kind {kind!r}")


# -- conditions ----------------------------------------------------------


@dataclass(frozen=True)
class ConditionSet:
    """Strict-inequality conditions with their margins (right minus left side).

    A condition whose defining ratios are undefined (zero expected degree) is
    ``None`` and listed in ``degenerate``.
    """

    e_plus: bool
    e_minus: bool
    e_bal: bool
    e_vol: bool
    e_conf: bool
    e_g: bool
    e_g_shifted: bool
    margins: dict
    degenerate: frozenset


def conditions(params, shift=None):
    """Evaluate the block-model inequalities governing eigenvalue ordering.

    ``e_bal and e_vol`` predicts the indicator vectors at the bottom of the
    arithmetic-mean style operators; ``e_g`` does the same for the geometric
    mean, and ``e_g_shifted`` for the geometric mean of the shifted pair
    (requiring also ``eps1 + eps2 < 1``).
    """
    k = params.k
    pip, pop = params.p_in_plus, params.p_out_plus
    pim, pom = params.p_in_minus, params.p_out_minus

    margins = {
        "e_plus": pip - pop,
        "e_minus": pom - pim,
        "e_bal": (pip + pom) - (pim + pop),
        "e_vol": (pip + (k - 1) * pop) - (pim + (k - 1) * pom),
    }
    degenerate = set()
    den_p = pip + (k - 1) * pop
    den_m = pim + (k - 1) * pom
    if den_p == 0.0 or den_m == 0.0:
        degenerate.update(("e_conf", "e_g", "e_g_shifted"))
        margins["e_conf"] = margins["e_g"] = margins["e_g_shifted"] = float("nan")
    else:
        g_plus = k * pop / den_p
        g_minus = 1.0 + (pim - pom) / den_m
        margins["e_conf"] = 1.0 - g_plus * (k * pim / den_m)
        margins["e_g"] = 1.0 - g_plus * g_minus
        if shift is None:
            degenerate.add("e_g_shifted")
            margins["e_g_shifted"] = float("nan")
        else:
            spec = expected_spectrum(params, shift)["GM_shifted"]
            # margin kept in product (squared-eigenvalue) units: same sign
            margins["e_g_shifted"] = float(
                spec.bulk ** 2 - np.max(spec.chi_values ** 2)
            )

    def holds(name):
        if name in degenerate:
            return None
        return bool(margins[name] > 0.0)

    e_g_shifted = holds("e_g_shifted")
    if e_g_shifted is not None and shift is not None:
        e_g_shifted = e_g_shifted and (shift.eps1 + shift.eps2 < 1.0)

    return ConditionSet(
        e_plus=holds("e_plus"),
        e_minus=holds("e_minus"),
        e_bal=holds("e_bal"),
        e_vol=holds("e_vol"),
        e_conf=holds("e_conf"),
        e_g=holds("e_g"),
        e_g_shifted=e_g_shifted,
        margins=margins,
        degenerate=frozenset(degenerate),
    )


def corollary_bound(k):
    """Upper bound on how often the arithmetic-mean ordering survives when
    both graphs are informative: ``1/6 + 2/(3(k-1)) + 1/(k-1)^2``."""
    if k < 2:
        raise ValueError("the bound needs k >= 2")
    return 1.0 / 6.0 + 2.0 / (3.0 * (k - 1)) + 1.0 / (k - 1) ** 2


CONDITIONINGS = ("all", "e_bal", "e_plus_or_e_minus", "e_plus_and_e_minus")
TARGETS = ("e_g", "e_bal_and_e_vol")


@dataclass(frozen=True)
class RegionFraction:
    fraction: float
    numerator: int
    denominator: int


def region_fraction(k, steps, conditioning, target):
    """Fraction of the probability cube where ``target`` holds given
    ``conditioning``, on a ``steps^4`` grid of cell centers.

    All inequalities are strict; grid points where a ratio condition is
    undefined are excluded from numerator and denominator alike.
    """
    if steps < 2:
        raise ValueError("steps must be at least 2")
    if conditioning not in CONDITIONINGS:
        raise ValueError(f"conditioning must be one of {CONDITIONINGS}")
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}")

    centers = (np.arange(steps) + 0.5) / steps
    pop, pim, pom = np.meshgrid(centers, centers, centers, indexing="ij")
    num = 0
    den = 0
    for pip in centers:
        e_plus = pop < pip
        e_minus = pim < pom
        e_bal = pim + pop < pip + pom
        e_vol = pim + (k - 1) * pom < pip + (k - 1) * pop
        den_p = pip + (k - 1) * pop
        den_m = pim + (k - 1) * pom
        valid = (den_p > 0.0) & (den_m > 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            e_g = (k * pop / den_p) * (1.0 + (pim - pom) / den_m) < 1.0
        e_g &= valid

        if conditioning == "all":
            cond = valid
        elif conditioning == "e_bal":
            cond = e_bal & valid
        elif conditioning == "e_plus_or_e_minus":
            cond = (e_plus | e_minus) & valid
        else:
            cond = e_plus & e_minus & valid

        hit = e_g if target == "e_g" else (e_bal & e_vol)
        den += int(np.count_nonzero(cond))
        num += int(np.count_nonzero(cond & hit))
    if den == 0:
        raise ValueError("conditioning event is empty on this grid")
    return RegionFraction(fraction=num / den, numerator=num, denominator=den)
