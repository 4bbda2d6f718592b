"""Empirical processes, quantile partitions and dyadic chaining grids.

The smoothing scheme replaces the orthant indicator 1{X <= t} by a ramp
bump attached to the quantile cell of t, and the chaining scheme refines
each cell dyadically.  All refined grid positions are quantile evaluations
at exact rationals ((j-1) 2^k + l) / (m 2^k); computing the rational as an
integer pair before a single float division makes nesting, endpoint and
floor-halving identities exact in floating point, not just approximately
true.

Boundary cells get the explicit patches: a psi function is constant 0 when
some coordinate sits at the lower edge of the first cell, constant 1 when
some coordinate passes the upper edge of the last cell, and a coordinate
whose upper refined point is the top quantile F^{-1}(1) = +inf contributes
a constant factor 1 so the chain inequalities survive infinite corners.
A lower corner at -inf keeps the literal convention (factor 0).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractError,
    DomainError,
    ParameterError,
    ShapeError,
    SizeError,
)
from .holder import HolderBump, MarginalCdf
from .processes import SamplePath
from .rng import substream

__all__ = [
    "EvalGrid",
    "PartitionGrid",
    "ChainGrid",
    "PsiFn",
    "SmoothedProcess",
    "empirical_cdf",
    "empirical_process",
    "build_partition",
    "build_chain_grid",
    "boundary_augmented_grid",
    "cell_of",
    "chain_indices",
    "choose_K",
    "make_psi",
    "telescoping_decomposition",
    "smoothed_empirical_process",
    "sup_distance",
]


def _as_data(path) -> np.ndarray:
    if isinstance(path, SamplePath):
        return path.data
    arr = np.asarray(path, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ShapeError(f"path data must be (n, d), got shape {arr.shape}")
    return arr


def empirical_cdf(path, t):
    """Fraction of path rows componentwise <= t.

    t may be a single point (d,) or a batch (N, d); returns a float or an
    array of floats in [0, 1].
    """
    data = _as_data(path)
    if data.shape[0] == 0:
        raise SizeError("empty path")
    pts = np.asarray(t, dtype=float)
    scalar = pts.ndim <= 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != data.shape[1]:
        raise ShapeError(
            f"point dim {pts.shape[-1]} does not match data dim {data.shape[1]}"
        )
    if data.shape[1] == 1:
        xs = np.sort(data[:, 0])
        out = np.searchsorted(xs, pts[:, 0], side="right") / xs.size
    else:
        n = data.shape[0]
        out = np.empty(pts.shape[0])
        for k in range(0, pts.shape[0], 512):
            blk = pts[k : k + 512]
            out[k : k + 512] = (
                (data[None, :, :] <= blk[:, None, :]).all(axis=2).sum(axis=1) / n
            )
    return float(out[0]) if scalar else out


def empirical_process(path, joint_cdf, points):
    """U_n(t) = sqrt(n) (F_n(t) - F(t)) over the given points."""
    data = _as_data(path)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    fn = np.atleast_1d(empirical_cdf(data, pts))
    fv = np.atleast_1d(np.asarray(joint_cdf.cdf(pts), dtype=float))
    if not np.isfinite(fv).all():
        raise ContractError("joint CDF produced non-finite values")
    return math.sqrt(data.shape[0]) * (fn - fv)


@dataclass(frozen=True)
class EvalGrid:
    """A bag of evaluation points with a label describing its construction."""

    points: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            raise SizeError("evaluation grid is empty")
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


# ------------------------- quantile partition -------------------------


@dataclass(frozen=True)
class PartitionGrid:
    """Marginal quantile corners t_{i,j} = F_i^{-1}(j/m), j = 0..m.

    corners[i] has length m + 2; the extra trailing entry repeats t_{i,m}
    (notational closure used by the cell geometry).  Corners are strictly
    increasing up to index m for continuous marginals; the top corner is
    +inf whenever the marginal support is unbounded above or the law is
    uniform on [0, 1] (F^{-1}(1) = sup{x : F(x) <= 1} = +inf by the sup
    convention).
    """

    m: int
    marginals: tuple
    corners: tuple  # tuple of float arrays, one per coordinate

    @property
    def d(self) -> int:
        return len(self.marginals)

    @property
    def h(self) -> float:
        return 1.0 / self.m

    def corner_mesh(self, finite_only: bool = True) -> np.ndarray:
        """All d-dim corner combinations (finite ones by default)."""
        axes = []
        for i in range(self.d):
            vals = np.asarray(self.corners[i][: self.m + 1])
            axes.append(vals[np.isfinite(vals)] if finite_only else vals)
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)


def build_partition(marginals, m: int) -> PartitionGrid:
    """Quantile partition with m cells per coordinate.

    Marginals must be continuous (analytic or interpolated); the step
    empirical kind is rejected because the quantile corners would not be
    strictly increasing.
    """
    if m < 2:
        raise ParameterError(f"m must be >= 2, got {m}")
    margs = tuple(marginals)
    corners = []
    for i, marg in enumerate(margs):
        if not isinstance(marg, MarginalCdf):
            raise ParameterError(f"marginal {i} is not a MarginalCdf handle")
        if not marg.continuous:
            raise ParameterError(
                f"marginal {i} ({marg.kind}) is not continuous; partition rejected"
            )
        # exact rationals j/m: single int/int division per corner
        rs = np.array([j / m for j in range(m + 1)])
        col = np.asarray(marg.inverse(rs), dtype=float)
        fin = col[np.isfinite(col)]
        if fin.size >= 2 and not np.all(np.diff(fin) > 0):
            raise ParameterError(f"marginal {i} quantiles are not strictly increasing")
        corners.append(np.concatenate((col, [col[-1]])))
    return PartitionGrid(m=m, marginals=margs, corners=tuple(corners))


def cell_of(grid: PartitionGrid, t):
    """Cell index vector j with t in [t_{j-1}, t_j), or None if outside."""
    pt = np.atleast_1d(np.asarray(t, dtype=float))
    if pt.size != grid.d:
        raise ShapeError(f"point dim {pt.size} does not match partition dim {grid.d}")
    out = np.empty(grid.d, dtype=int)
    for i in range(grid.d):
        c = grid.corners[i][: grid.m + 1]
        j = int(np.searchsorted(c, pt[i], side="right"))
        if j < 1 or j > grid.m:
            return None
        out[i] = j
    return out


def boundary_augmented_grid(grid: PartitionGrid, n_random: int, seed: int) -> EvalGrid:
    """Corner mesh, one-ulp left limits of each corner, plus random points.

    The random block is uniform over the [0.001, 0.999] quantile box and
    comes from a dedicated substream, so the grid is reproducible.
    """
    mesh = grid.corner_mesh(finite_only=True)
    left = np.nextafter(mesh, -np.inf)
    blocks = [mesh, left]
    if n_random > 0:
        rng = substream(seed, "eval-grid")
        lo = np.array([grid.marginals[i].inverse(0.001) for i in range(grid.d)])
        hi = np.array([grid.marginals[i].inverse(0.999) for i in range(grid.d)])
        blocks.append(rng.uniform(lo, hi, size=(n_random, grid.d)))
    return EvalGrid(points=np.concatenate(blocks, axis=0), kind="boundary-augmented")


# ------------------------- smoothed process -------------------------


class SmoothedProcess:
    """Cellwise ramp smoothing of the empirical CDF.

    The cell function of cell j is the bump with corners
    (t_{j-2}, t_{j-1}) when j >= (2, ..., 2) and the zero function
    otherwise.  Cell means E phi_j(X_0) come from the supplied CDF model:
    analytic for product laws with analytic marginals, Monte Carlo (and
    flagged estimated) otherwise.
    """

    def __init__(self, grid: PartitionGrid, cdf_model, alpha: float = 1.0):
        self.grid = grid
        self.cdf_model = cdf_model
        self.alpha = float(alpha)
        self.estimated = bool(getattr(cdf_model, "estimated", True))
        self._mean_cache: dict = {}

    def cell_bump(self, j) -> HolderBump | None:
        """Bump of cell j; None encodes the zero function (j not >= 2)."""
        j = np.asarray(j, dtype=int)
        if np.any(j < 1) or np.any(j > self.grid.m):
            raise DomainError(f"cell index {j.tolist()} outside 1..{self.grid.m}")
        if np.any(j < 2):
            return None
        lo = np.array([self.grid.corners[i][j[i] - 2] for i in range(self.grid.d)])
        hi = np.array([self.grid.corners[i][j[i] - 1] for i in range(self.grid.d)])
        return HolderBump(lower=lo, upper=hi, alpha=self.alpha)

    def cell_mean(self, j) -> float:
        key = tuple(int(v) for v in np.atleast_1d(j))
        if key not in self._mean_cache:
            bump = self.cell_bump(j)
            if bump is None:
                val = 0.0
            else:
                val = self.cdf_model.bump_mean(bump)
                if val is None:
                    raise ContractError(
                        "CDF model has no analytic bump mean; use a Monte Carlo model"
                    )
            self._mean_cache[key] = float(val)
        return self._mean_cache[key]

    def cell_fn_mean(self, data, j) -> float:
        """(1/n) sum_i phi_j(X_i)."""
        bump = self.cell_bump(j)
        if bump is None:
            return 0.0
        return float(np.mean(bump(_as_data(data))))

    def on_grid(self, path, points) -> np.ndarray:
        """U_n^{(m)} on many points; 0 outside the cell cover.

        Points below the first corner (or at literal +inf) lie in no cell;
        there the defining sum over cells is empty, so the smoothed process
        is 0 exactly.  The single-point operation raises instead, matching
        its stricter contract.
        """
        data = _as_data(path)
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        root_n = math.sqrt(data.shape[0])
        out = np.zeros(pts.shape[0])
        cells: dict = {}
        for idx in range(pts.shape[0]):
            j = cell_of(self.grid, pts[idx])
            if j is None:
                continue
            key = tuple(int(v) for v in j)
            if key not in cells:
                cells[key] = root_n * (
                    self.cell_fn_mean(data, j) - self.cell_mean(j)
                )
            out[idx] = cells[key]
        return out


def smoothed_empirical_process(path, smoothed: SmoothedProcess, t) -> float:
    """U_n^{(m)}(t) at a single point; raises DomainError outside all cells."""
    data = _as_data(path)
    j = cell_of(smoothed.grid, t)
    if j is None:
        raise DomainError(f"point {np.asarray(t).tolist()} lies outside all cells")
    return math.sqrt(data.shape[0]) * (
        smoothed.cell_fn_mean(data, j) - smoothed.cell_mean(j)
    )


# ------------------------- dyadic chaining -------------------------


def choose_K(n: int, h: float, d: int, epsilon: float) -> int:
    """Chaining depth floor(log2(2^4 d sqrt(n) h / epsilon)), clamped at 0."""
    if n < 1 or d < 1:
        raise SizeError("need n >= 1 and d >= 1")
    if not (0.0 < h <= 1.0):
        raise ParameterError(f"h must lie in (0, 1], got {h}")
    if epsilon <= 0.0:
        raise ParameterError(f"epsilon must be > 0, got {epsilon}")
    arg = 16.0 * d * math.sqrt(n) * h / epsilon
    if arg < 1.0:
        warnings.warn("chaining depth argument below 1; clamping K to 0")
        return 0
    return int(math.floor(math.log2(arg)))


@dataclass(frozen=True)
class ChainGrid:
    """Dyadic refinement of a quantile partition down to depth K.

    Refined points are s^{(k)}_{i,j,l} = F_i^{-1}(((j-1) 2^k + l)/(m 2^k));
    the integer-pair construction keeps the nesting identities exact.
    """

    base: PartitionGrid
    K: int

    def __post_init__(self):
        if self.K < 0:
            raise ParameterError("chaining depth K must be >= 0")

    @property
    def m(self) -> int:
        return self.base.m

    @property
    def d(self) -> int:
        return self.base.d

    def refined(self, i: int, j: int, k: int, l: int) -> float:
        """s^{(k)}_{i,j,l} for l in [-1, 2^k + 1] (top cell clamps l = 2^k+1)."""
        if not (0 <= k <= self.K):
            raise ParameterError(f"depth {k} outside [0, {self.K}]")
        if not (1 <= j <= self.m):
            raise DomainError(f"cell index {j} outside 1..{self.m}")
        two_k = 1 << k
        if not (-1 <= l <= two_k + 1):
            raise ParameterError(f"refinement index {l} outside [-1, {two_k + 1}]")
        num = (j - 1) * two_k + l
        den = self.m * two_k
        if num > den:  # only j = m, l = 2^k + 1: convention s := s at l = 2^k
            num = den
        if num < 0:
            raise DomainError("refined point below the first quantile")
        return float(self.base.marginals[i].inverse(num / den))

    def level_points(self, i: int, j: int, k: int) -> np.ndarray:
        """Array of s^{(k)}_{i,j,l} for l = 0..2^k."""
        return np.array([self.refined(i, j, k, l) for l in range((1 << k) + 1)])


def build_chain_grid(grid: PartitionGrid, K: int) -> ChainGrid:
    return ChainGrid(base=grid, K=K)


def chain_indices(chain: ChainGrid, j, t, k: int) -> np.ndarray:
    """Componentwise l_i(k, t) = max{l : s^{(k)}_{i,j_i,l} <= t_i}.

    t must lie in cell j, which pins every l_i into {0, ..., 2^k - 1}.
    """
    jv = np.atleast_1d(np.asarray(j, dtype=int))
    pt = np.atleast_1d(np.asarray(t, dtype=float))
    if jv.size != chain.d or pt.size != chain.d:
        raise ShapeError("cell index and point must match the grid dimension")
    out = np.empty(chain.d, dtype=int)
    for i in range(chain.d):
        pts = chain.level_points(i, int(jv[i]), k)
        if not (pts[0] <= pt[i]):
            raise DomainError(f"coordinate {i} below its cell")
        l = int(np.searchsorted(pts, pt[i], side="right")) - 1
        if l >= (1 << k):
            raise DomainError(f"coordinate {i} at or above its cell top")
        out[i] = l
    return out


@dataclass(frozen=True)
class PsiFn:
    """Chaining surrogate: constant 0, constant 1, or a patched bump.

    For the bump kind, coordinate modes select the factor: 0 a plain ramp
    over (a_i, b_i), 1 the constant 1 (upper corner at +inf).  A lower
    corner at -inf collapses the whole function to the constant 0 at build
    time, so the stored object never mixes that case.
    """

    kind: str  # "zero" | "one" | "bump"
    lower: np.ndarray = field(default=None)
    upper: np.ndarray = field(default=None)
    modes: np.ndarray = field(default=None)  # 0 ramp, 1 const-one

    def __call__(self, x) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "zero":
            return np.zeros(pts.shape[0])
        if self.kind == "one":
            return np.ones(pts.shape[0])
        vals = np.ones(pts.shape[0])
        for i in range(self.lower.size):
            if self.modes[i] == 1:
                continue
            a, b = self.lower[i], self.upper[i]
            vals *= np.clip(-(pts[:, i] - b) / (b - a), 0.0, 1.0)
        return vals

    def norm_bound(self, alpha: float) -> float:
        """Analytic Hoelder norm bound (exact for the constant kinds)."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "one":
            return 1.0
        ramps = self.modes == 0
        if not ramps.any():
            return 1.0
        gaps = (self.upper - self.lower)[ramps]
        return self.lower.size * float(np.max(gaps ** (-alpha))) + 1.0


def make_psi(chain: ChainGrid, j, k: int, l) -> PsiFn:
    """psi^{(k)}_l on cell j with the explicit boundary patches.

    Order of the patch rules matters: the zero case (some j_i = 1 with
    l_i = 0) wins over the one case (some j_i = m with l_i = 2^k + 1);
    otherwise the function is the bump over (s_{l-1}, s_l) with infinite
    upper corners contributing constant factors 1.
    """
    jv = np.atleast_1d(np.asarray(j, dtype=int))
    lv = np.atleast_1d(np.asarray(l, dtype=int))
    if jv.size != chain.d or lv.size != chain.d:
        raise ShapeError("cell and refinement indices must match the dimension")
    two_k = 1 << k
    if np.any(lv < 0) or np.any(lv > two_k + 1):
        raise ParameterError(f"refinement indices {lv.tolist()} outside [0, {two_k + 1}]")
    if np.any((jv == 1) & (lv == 0)):
        return PsiFn(kind="zero")
    if np.any((jv == chain.m) & (lv == two_k + 1)):
        return PsiFn(kind="one")
    lo = np.empty(chain.d)
    hi = np.empty(chain.d)
    modes = np.zeros(chain.d, dtype=int)
    for i in range(chain.d):
        a = chain.refined(i, int(jv[i]), k, int(lv[i]) - 1)
        b = chain.refined(i, int(jv[i]), k, int(lv[i]))
        if np.isinf(b):
            modes[i] = 1  # top-quantile corner: factor pinned at 1
        elif np.isinf(a):
            return PsiFn(kind="zero")  # literal convention for -inf corners
        elif not (a < b):
            raise ParameterError(f"degenerate refined corners in coordinate {i}")
        lo[i], hi[i] = a, b
    return PsiFn(kind="bump", lower=lo, upper=hi, modes=modes)


def telescoping_decomposition(path, chain: ChainGrid, t, K: int | None = None):
    """Chain terms and remainder of the smoothing error at t.

    Returns a dict with keys ``terms`` (list, k = 1..K), ``remainder``,
    ``lhs`` and ``cell``; terms[k-1] + ... + remainder reproduces
    (1/n) sum_i (1{X_i <= t} - F_n^{(m)}(t)) up to accumulation round-off.
    """
    data = _as_data(path)
    if K is None:
        K = chain.K
    if not (0 <= K <= chain.K):
        raise ParameterError(f"depth {K} outside [0, {chain.K}]")
    j = cell_of(chain.base, t)
    if j is None:
        raise DomainError(f"point {np.asarray(t).tolist()} lies outside all cells")
    pt = np.atleast_1d(np.asarray(t, dtype=float))
    psi_prev = make_psi(chain, j, 0, np.zeros(chain.d, dtype=int))
    prev_vals = psi_prev(data)
    terms = []
    for k in range(1, K + 1):
        lk = chain_indices(chain, j, pt, k)
        vals = make_psi(chain, j, k, lk)(data)
        terms.append(float(np.mean(vals - prev_vals)))
        prev_vals = vals
    indicator = np.all(data <= pt[None, :], axis=1).astype(float)
    remainder = float(np.mean(indicator - prev_vals))
    base_vals = make_psi(chain, j, 0, np.zeros(chain.d, dtype=int))(data)
    lhs = float(np.mean(indicator - base_vals))
    return {"terms": terms, "remainder": remainder, "lhs": lhs, "cell": j.tolist()}


def sup_distance(a, b) -> float:
    """max |a - b| over matching arrays."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.size == 0:
        raise SizeError("empty arrays")
    return float(np.max(np.abs(x - y)))
