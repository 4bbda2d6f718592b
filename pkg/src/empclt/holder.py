"""Ramp bumps, Hoelder norms, CDF handles and the control function.

Points live in the extended box [-inf, inf]^d and are represented as plain
float arrays; +-inf entries are legal corner values.  The central object is
the product ramp bump: a piecewise linear surrogate squeezed between the
indicators of two lower-left orthants,

    1{x <= a}  <=  bump(x)  <=  1{x <= b},

whose Hoelder norm is controlled analytically by the corner gaps.  The
product formula is implemented literally: a coordinate whose corner pair is
not finite contributes ramp(0) = 0, so such bumps vanish identically.  The
chaining code patches boundary cells explicitly instead of bending the
formula here.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import (
    CornerError,
    ParameterError,
    ShapeError,
    SingularityError,
)

__all__ = [
    "ramp",
    "HolderBump",
    "bump_eval",
    "bump_holder_norm",
    "MarginalCdf",
    "UniformCdf",
    "GaussianCdf",
    "EmpiricalCdf",
    "InterpolatedCdf",
    "ProductCdf",
    "MonteCarloCdf",
    "ControlFunction",
    "control_psi",
    "generalized_inverse",
    "modulus_of_continuity",
    "theta_holder_constant",
    "holder_norm_estimate",
]


def ramp(x):
    """One-dimensional ramp: 1 for x <= -1, -x on (-1, 0], 0 for x > 0.

    Accepts scalars or arrays, handles +-inf, and clips nothing else:
    ramp(-0.5) = 0.5, ramp(-inf) = 1, ramp(inf) = 0.
    """
    return np.clip(-np.asarray(x, dtype=float), 0.0, 1.0)


def _as_corner(v, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be a 1-d corner vector, got shape {arr.shape}")
    if np.isnan(arr).any():
        raise CornerError(f"{name} contains NaN")
    return arr


@dataclass(frozen=True)
class HolderBump:
    """Product ramp bump with corners ``lower`` < ``upper`` (componentwise).

    alpha is the Hoelder exponent used for norm bookkeeping; it does not
    change the function values.
    """

    lower: np.ndarray
    upper: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        lo = _as_corner(self.lower, "lower")
        hi = _as_corner(self.upper, "upper")
        if lo.shape != hi.shape:
            raise ShapeError(f"corner shapes differ: {lo.shape} vs {hi.shape}")
        if not (0.0 < self.alpha <= 1.0):
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not np.all(lo < hi):
            raise CornerError("corners must satisfy lower < upper strictly")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def __call__(self, x):
        return bump_eval(self, x)


def bump_eval(bump: HolderBump, x):
    """Evaluate the product ramp bump at one or many points.

    Parameters
    ----------
    bump : HolderBump
    x : array_like
        Shape (d,) or (n, d); +-inf entries allowed.

    Returns
    -------
    float or ndarray
        Values in [0, 1].  Coordinates whose corner pair is not finite
        contribute a factor ramp(0) = 0, hence the whole bump vanishes.
    """
    lo, hi = bump.lower, bump.upper
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != bump.dim:
        raise ShapeError(f"points have dim {pts.shape[-1]}, bump has dim {bump.dim}")
    finite = np.isfinite(lo) & np.isfinite(hi)
    # width 1 placeholder avoids inf/inf warnings on masked coordinates
    width = np.where(finite, hi - lo, 1.0)
    b = np.where(finite, hi, 0.0)
    arg = np.where(finite, (pts - b) / width, 0.0)
    # +-inf sample coordinates: (inf - b)/w keeps the right sign
    inf_pts = ~np.isfinite(pts)
    if inf_pts.any():
        arg = np.where(inf_pts & finite, np.where(pts > 0, np.inf, -np.inf), arg)
    vals = ramp(arg).prod(axis=-1)
    return float(vals[0]) if scalar else vals


def bump_holder_norm(bump: HolderBump) -> float:
    """Analytic upper bound on the alpha-Hoelder norm of a bump.

    Equals d * max_j (b_j - a_j)^(-alpha) + 1, the max running over finite
    corner pairs only; with no finite pair the bump is constant and the
    bound degenerates to 1.
    """
    lo, hi = bump.lower, bump.upper
    finite = np.isfinite(lo) & np.isfinite(hi)
    if not finite.any():
        return 1.0
    gaps = (hi - lo)[finite]
    return bump.dim * float(np.max(gaps ** (-bump.alpha))) + 1.0


# ------------------------- marginal CDF handles -------------------------


class MarginalCdf:
    """One-dimensional CDF handle over the extended reals.

    Concrete kinds: analytic uniform, analytic gaussian, empirical step
    function, and a continuous interpolation of an empirical sample.
    Subclasses provide cdf/inverse/modulus; ``inverse`` is the generalized
    inverse sup{x : F(x) <= y}, so inverse(1.0) = +inf for every kind.
    """

    kind = "abstract"
    continuous = False

    def cdf(self, x):
        raise NotImplementedError

    def inverse(self, y):
        raise NotImplementedError

    def modulus(self, delta: float) -> float:
        raise NotImplementedError

    def ramp_mean(self, a: float, b: float):
        """E ramp((X - b)/(b - a)) for finite a < b; None if not analytic."""
        return None

    def _check_y(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ParameterError("inverse argument must lie in [0, 1]")
        return arr


class UniformCdf(MarginalCdf):
    """Uniform law on [lo, hi] (default the unit interval)."""

    kind = "uniform"
    continuous = True

    def __init__(self, lo: float = 0.0, hi: float = 1.0):
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ParameterError(f"need finite lo < hi, got ({lo}, {hi})")
        self.lo = float(lo)
        self.hi = float(hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore"):
            out = np.clip((x - self.lo) / self.width, 0.0, 1.0)
        # clip maps -inf,+inf correctly; nan never expected here
        return out if out.ndim else float(out)

    def inverse(self, y):
        arr = self._check_y(y)
        out = np.where(arr >= 1.0, np.inf, self.lo + arr * self.width)
        return out if out.ndim else float(out)

    def modulus(self, delta: float) -> float:
        if delta < 0:
            raise ParameterError("delta must be >= 0")
        return min(delta / self.width, 1.0)

    def ramp_mean(self, a: float, b: float) -> float:
        lo, hi, w = self.lo, self.hi, self.width
        head = np.clip((a - lo) / w, 0.0, 1.0)
        x0, x1 = max(a, lo), min(b, hi)
        if x1 <= x0:
            return float(head)
        tri = ((b - x0) ** 2 - (b - x1) ** 2) / (2.0 * (b - a) * w)
        return float(head + tri)


class GaussianCdf(MarginalCdf):
    """Gaussian law, standard by default."""

    kind = "gaussian"
    continuous = True

    def __init__(self, mean: float = 0.0, sd: float = 1.0):
        if not (np.isfinite(mean) and np.isfinite(sd) and sd > 0):
            raise ParameterError(f"need finite mean and sd > 0, got ({mean}, {sd})")
        self.mean = float(mean)
        self.sd = float(sd)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        finite = np.isfinite(x)
        out[finite] = ndtr((x[finite] - self.mean) / self.sd)
        out[~finite] = np.where(x[~finite] > 0, 1.0, 0.0)
        return out if out.ndim else float(out)

    def inverse(self, y):
        arr = self._check_y(y)
        with np.errstate(divide="ignore"):
            out = self.mean + self.sd * ndtri(arr)
        # ndtri(0) = -inf and ndtri(1) = +inf already match the sup rule
        return out if out.ndim else float(out)

    def modulus(self, delta: float) -> float:
        if delta < 0:
            raise ParameterError("delta must be >= 0")
        if not np.isfinite(delta):
            return 1.0
        return float(2.0 * ndtr(delta / (2.0 * self.sd)) - 1.0)

    def ramp_mean(self, a: float, b: float) -> float:
        az = (a - self.mean) / self.sd
        bz = (b - self.mean) / self.sd
        pdf = lambda t: np.exp(-0.5 * t * t) / np.sqrt(2.0 * np.pi)
        head = ndtr(az)
        tri = (bz * (ndtr(bz) - ndtr(az)) - pdf(az) + pdf(bz)) / (bz - az)
        return float(head + tri)


class EmpiricalCdf(MarginalCdf):
    """Step CDF of a stored sample (not continuous)."""

    kind = "empirical"
    continuous = False

    def __init__(self, sample):
        xs = np.sort(np.asarray(sample, dtype=float).ravel())
        if xs.size == 0:
            raise ParameterError("empirical CDF needs a non-empty sample")
        if not np.isfinite(xs).all():
            raise ParameterError("sample must be finite")
        self.sample = xs

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.searchsorted(self.sample, x, side="right") / self.sample.size
        return out if out.ndim else float(out)

    def inverse(self, y):
        arr = self._check_y(y)
        n = self.sample.size
        idx = np.floor(np.atleast_1d(arr) * n).astype(int)
        out = np.where(idx >= n, np.inf, self.sample[np.minimum(idx, n - 1)])
        return out if np.ndim(arr) else float(out[0])

    def modulus(self, delta: float) -> float:
        if delta < 0:
            raise ParameterError("delta must be >= 0")
        if delta == 0.0:
            return 0.0
        xs = self.sample
        low = np.searchsorted(xs, xs - delta, side="right")
        counts = np.searchsorted(xs, xs, side="right") - low
        return float(counts.max()) / xs.size


class InterpolatedCdf(MarginalCdf):
    """Continuous piecewise-linear CDF fitted to a sample.

    Hazen plotting positions on the sorted sample, extended by half a mean
    spacing on each side so F runs continuously from 0 to 1.  Strictly
    increasing on its support, hence usable wherever continuity of the
    marginal is required but no analytic form exists.
    """

    kind = "interp-empirical"
    continuous = True

    def __init__(self, sample):
        xs = np.sort(np.asarray(sample, dtype=float).ravel())
        if xs.size < 2:
            raise ParameterError("interpolated CDF needs at least 2 points")
        if not np.isfinite(xs).all():
            raise ParameterError("sample must be finite")
        xs = np.unique(xs)
        if xs.size < 2:
            raise ParameterError("sample is degenerate (all values tied)")
        n = xs.size
        pad = max((xs[-1] - xs[0]) / (2.0 * n), 1e-12 * max(1.0, abs(xs[0])))
        self.knots_x = np.concatenate(([xs[0] - pad], xs, [xs[-1] + pad]))
        probs = (np.arange(1, n + 1) - 0.5) / n
        self.knots_p = np.concatenate(([0.0], probs, [1.0]))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.knots_x, self.knots_p, left=0.0, right=1.0)
        return out if out.ndim else float(out)

    def inverse(self, y):
        arr = self._check_y(y)
        flat = np.atleast_1d(arr)
        out = np.interp(flat, self.knots_p, self.knots_x)
        out = np.where(flat >= 1.0, np.inf, out)
        return out if np.ndim(arr) else float(out[0])

    def modulus(self, delta: float) -> float:
        if delta < 0:
            raise ParameterError("delta must be >= 0")
        if delta == 0.0:
            return 0.0
        kx, kp = self.knots_x, self.knots_p
        # g(t) = F(t) - F(t - delta) is piecewise linear; its max sits where
        # either endpoint of the window hits a knot
        cand = np.concatenate((kx, kx + delta))
        vals = np.interp(cand, kx, kp, left=0.0, right=1.0) - np.interp(
            cand - delta, kx, kp, left=0.0, right=1.0
        )
        return float(vals.max())


# ------------------------- joint CDF handles -------------------------


class ProductCdf:
    """Joint CDF of independent marginals.

    modulus() is the subadditive bound min(sum_i w_{F_i}(delta), 1), which
    dominates every marginal modulus and is therefore a valid control input
    even when independence is only approximate; bump_mean() however does
    assume independence and should only feed i.i.d. scenarios.
    """

    estimated = False

    def __init__(self, marginals):
        self.marginals = tuple(marginals)
        if not self.marginals:
            raise ParameterError("need at least one marginal")
        self.dim = len(self.marginals)

    def cdf(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.dim:
            raise ShapeError(f"points must have {self.dim} columns")
        out = np.ones(pts.shape[0])
        for i, marg in enumerate(self.marginals):
            out *= marg.cdf(pts[:, i])
        return out if np.ndim(points) > 1 else float(out[0])

    def modulus(self, delta: float) -> float:
        return min(sum(m.modulus(delta) for m in self.marginals), 1.0)

    def modulus_inverse(self, y: float) -> float:
        """inf{delta > 0 : modulus(delta) >= y} for y in (0, 1]."""
        if not (0.0 < y <= 1.0):
            raise ParameterError(f"y must lie in (0, 1], got {y}")
        if all(isinstance(m, UniformCdf) for m in self.marginals):
            rate = sum(1.0 / m.width for m in self.marginals)
            return y / rate
        if self.dim == 1 and isinstance(self.marginals[0], GaussianCdf):
            m = self.marginals[0]
            return 2.0 * m.sd * float(ndtri((y + 1.0) / 2.0))
        return _bisect_modulus_inverse(self.modulus, y)

    def bump_mean(self, bump: HolderBump):
        """E bump(X) under the product law; None when not analytic."""
        if bump.dim != self.dim:
            raise ShapeError("bump dimension mismatch")
        lo, hi = bump.lower, bump.upper
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            return 0.0  # literal product formula: vanishing bump
        total = 1.0
        for i, marg in enumerate(self.marginals):
            factor = marg.ramp_mean(float(lo[i]), float(hi[i]))
            if factor is None:
                return None
            total *= factor
        return total


class MonteCarloCdf:
    """Joint CDF backed by a stored reference sample; flagged estimated."""

    estimated = True

    def __init__(self, sample):
        pts = np.asarray(sample, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise ShapeError("reference sample must be (n, d) with n >= 2")
        self.sample = pts
        self.dim = pts.shape[1]

    def cdf(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ref = self.sample
        out = np.empty(pts.shape[0])
        for k in range(0, pts.shape[0], 256):
            block = pts[k : k + 256]
            out[k : k + 256] = (
                (ref[None, :, :] <= block[:, None, :]).all(axis=2).mean(axis=1)
            )
        return out if np.ndim(points) > 1 else float(out[0])

    def bump_mean(self, fn) -> float:
        return float(np.mean(fn(self.sample)))


def _bisect_modulus_inverse(w, y: float, tol: float = 1e-13) -> float:
    if w(0.0) >= y:
        return 0.0
    hi = 1.0
    for _ in range(200):
        if w(hi) >= y:
            break
        hi *= 2.0
    else:
        raise ParameterError("modulus never reaches the requested level")
    lo = 0.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if w(mid) >= y:
            hi = mid
        else:
            lo = mid
    return lo  # lower end: conservative (larger control value)


# ------------------------- control function -------------------------


@dataclass(frozen=True)
class ControlFunction:
    """Pairs a Hoelder exponent with a joint-modulus handle.

    ``handle`` must expose modulus_inverse(y); ProductCdf qualifies, as does
    a single MarginalCdf wrapped via ``ControlFunction.for_marginals``.
    """

    alpha: float
    dim: int
    handle: object = field(repr=False)

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")

    @classmethod
    def for_marginals(cls, marginals, alpha: float) -> "ControlFunction":
        prod = ProductCdf(marginals)
        return cls(alpha=alpha, dim=prod.dim, handle=prod)


def control_psi(cf: ControlFunction, z: float) -> float:
    """Control value d * (w_F^{-1}(1/z))^(-alpha) + 1 at level z >= 1.

    Raises SingularityError when the modulus inverse degenerates to 0,
    which happens exactly when F has a jump of size >= 1/z.
    """
    if not (z >= 1.0):
        raise ParameterError(f"z must be >= 1, got {z}")
    delta = cf.handle.modulus_inverse(1.0 / z)
    if delta <= 0.0:
        raise SingularityError("modulus inverse is 0 (jump CDF); no control value")
    return cf.dim * delta ** (-cf.alpha) + 1.0


# ------------------------- free operations -------------------------


def generalized_inverse(cdf: MarginalCdf, y):
    """sup{x in [-inf, inf] : F(x) <= y} for y in [0, 1]."""
    return cdf.inverse(y)


def modulus_of_continuity(handle, delta: float) -> float:
    """Level-delta modulus of a marginal or joint CDF handle."""
    return handle.modulus(delta)


def theta_holder_constant(cdf_handle, theta: float, xs, ys) -> float:
    """Estimate sup |F(x) - F(y)| / ||x - y||^theta over probe pairs.

    Coincident pairs are skipped (a warning reports how many); at least one
    usable pair is required.
    """
    if not (0.0 < theta <= 1.0):
        raise ParameterError(f"theta must lie in (0, 1], got {theta}")
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    if xs.shape != ys.shape:
        raise ShapeError("probe arrays must have identical shape")
    dist = np.linalg.norm(xs - ys, axis=1)
    keep = dist > 0.0
    skipped = int((~keep).sum())
    if skipped:
        warnings.warn(f"skipped {skipped} coincident probe pair(s)")
    if not keep.any():
        raise ParameterError("no usable probe pairs (all coincident)")
    fx = np.asarray(cdf_handle.cdf(xs[keep] if xs.shape[1] > 1 else xs[keep, 0]))
    fy = np.asarray(cdf_handle.cdf(ys[keep] if ys.shape[1] > 1 else ys[keep, 0]))
    return float(np.max(np.abs(fx - fy) / dist[keep] ** theta))


def holder_norm_estimate(
    fn,
    lower,
    upper,
    alpha: float,
    grid: int = 64,
    mc_pairs: int = 20000,
    rng=None,
) -> float:
    """Grid lower estimate of the alpha-Hoelder norm of ``fn`` on a box.

    Probes a lattice with ``grid`` points per axis in d <= 2 and Monte
    Carlo point pairs in higher dimension.  The estimate never exceeds the
    true norm, so it is the right tool for "estimate <= analytic bound"
    verifications.
    """
    lo = np.atleast_1d(np.asarray(lower, dtype=float))
    hi = np.atleast_1d(np.asarray(upper, dtype=float))
    if lo.shape != hi.shape or not np.all(lo < hi):
        raise CornerError("need lower < upper box corners")
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    d = lo.size
    if d <= 2:
        axes = [np.linspace(lo[i], hi[i], grid) for i in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
    else:
        if rng is None:
            rng = np.random.default_rng(0)
        pts = rng.uniform(lo, hi, size=(mc_pairs, d))
    vals = np.asarray(fn(pts), dtype=float)
    sup = float(np.max(np.abs(vals)))
    semi = 0.0
    n = pts.shape[0]
    step = max(1, 2_000_000 // max(n, 1))
    for start in range(0, n, step):
        block = slice(start, min(start + step, n))
        diff = np.abs(vals[block, None] - vals[None, :])
        dist = np.linalg.norm(pts[block, None, :] - pts[None, :, :], axis=-1)
        mask = dist > 0.0
        if mask.any():
            semi = max(semi, float(np.max(diff[mask] / dist[mask] ** alpha)))
    return sup + semi
