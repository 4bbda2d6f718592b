"""Truncated linear processes with pluggable innovation laws.

X_t = sum_{j=0}^{J} a_j xi_{t-j} with d x q coefficient matrices a_j and
i.i.d. innovation vectors xi_t.  Paths are reproducible bit for bit from
(spec, n, seed); coupled paths share the innovation stream above a swap
point and use an independent stream at indices <= swap point, which is the
construction behind physical-dependence measurement.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import beta as beta_fn
from scipy.special import gamma as gamma_fn
from scipy.special import zeta

from .errors import MomentError, ParameterError, ShapeError, SizeError
from .rng import substream

__all__ = [
    "InnovationLaw",
    "CoefficientModel",
    "ProcessSpec",
    "SamplePath",
    "CoupledPath",
    "generate_innovations",
    "simulate_linear",
    "simulate_coupled",
    "time_delay_embed",
    "default_truncation_lag",
]

INNOVATION_KINDS = ("standard-normal", "uniform", "rademacher", "student-t", "pareto")
COEFFICIENT_KINDS = ("explicit", "geometric", "polynomial")

_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class InnovationLaw:
    """Innovation distribution, zero mean whenever the mean exists.

    kinds:
      standard-normal          N(0, 1)
      uniform                  uniform on (-sqrt(3), sqrt(3)), unit variance
      rademacher               +-1 with equal probability
      student-t                t with nu degrees of freedom (param nu > 0)
      pareto                   classic Pareto, tail index a > 0, centered by
                               its mean a/(a-1) when a > 1
    """

    kind: str
    param: float = float("nan")

    def __post_init__(self):
        if self.kind not in INNOVATION_KINDS:
            raise ParameterError(f"unknown innovation kind {self.kind!r}")
        if self.kind in ("student-t", "pareto"):
            if not (np.isfinite(self.param) and self.param > 0):
                raise ParameterError(f"{self.kind} needs a positive parameter")

    def sample(self, rng: np.random.Generator, size):
        if self.kind == "standard-normal":
            return rng.standard_normal(size)
        if self.kind == "uniform":
            return rng.uniform(-_SQRT3, _SQRT3, size)
        if self.kind == "rademacher":
            return 2.0 * rng.integers(0, 2, size=size).astype(float) - 1.0
        if self.kind == "student-t":
            return rng.standard_t(self.param, size)
        # classic Pareto on [1, inf): 1 + Lomax(a)
        draws = 1.0 + rng.pareto(self.param, size)
        if self.param > 1.0:
            draws -= self.param / (self.param - 1.0)
        return draws

    def has_abs_moment(self, s: float) -> bool:
        """Whether E|xi|^s is finite."""
        if s <= 0:
            raise ParameterError("moment order must be positive")
        if self.kind in ("standard-normal", "uniform", "rademacher"):
            return True
        return s < self.param  # heavy tails: finite iff s below the index

    def abs_moment(self, s: float) -> float:
        """Analytic (or quadrature) value of E|xi|^s."""
        if not self.has_abs_moment(s):
            raise MomentError(f"E|xi|^{s} diverges for {self.kind}({self.param})")
        if self.kind == "standard-normal":
            return 2.0 ** (s / 2.0) * gamma_fn((s + 1.0) / 2.0) / math.sqrt(math.pi)
        if self.kind == "uniform":
            return _SQRT3**s / (s + 1.0)
        if self.kind == "rademacher":
            return 1.0
        if self.kind == "student-t":
            nu = self.param
            return nu ** (s / 2.0) * beta_fn((s + 1.0) / 2.0, (nu - s) / 2.0) / beta_fn(
                0.5, nu / 2.0
            )
        a = self.param
        mu = a / (a - 1.0) if a > 1.0 else 0.0
        val, _ = quad(lambda x: abs(x - mu) ** s * a * x ** (-a - 1.0), 1.0, np.inf)
        return val

    def diff_norm(self, s: float, reps: int = 200_000, seed: int = 0) -> float:
        """||xi - xi'||_s for an independent copy xi'.

        Exact for rademacher and for s = 2 with finite variance; Monte
        Carlo otherwise.
        """
        if not self.has_abs_moment(s):
            raise MomentError(f"||xi - xi'||_{s} diverges for {self.kind}")
        if self.kind == "rademacher":
            return 2.0 ** ((s - 1.0) / s)
        if s == 2.0:
            return math.sqrt(2.0 * self.variance())
        rng = substream(seed, "diff-norm")
        x = self.sample(rng, reps)
        y = self.sample(rng, reps)
        return float(np.mean(np.abs(x - y) ** s) ** (1.0 / s))

    def variance(self) -> float:
        if self.kind in ("standard-normal", "uniform", "rademacher"):
            return 1.0
        if self.kind == "student-t":
            if self.param <= 2.0:
                raise MomentError("t variance needs nu > 2")
            return self.param / (self.param - 2.0)
        a = self.param
        if a <= 2.0:
            raise MomentError("pareto variance needs tail index > 2")
        return a / ((a - 1.0) ** 2 * (a - 2.0))

    def to_config(self) -> dict:
        cfg = {"kind": self.kind}
        if self.kind == "student-t":
            cfg["nu"] = self.param
        elif self.kind == "pareto":
            cfg["tail_index"] = self.param
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "InnovationLaw":
        kind = cfg.get("kind")
        if kind == "student-t":
            return cls(kind, float(cfg["nu"]))
        if kind == "pareto":
            return cls(kind, float(cfg["tail_index"]))
        return cls(kind)


def default_truncation_lag(kind, rho=None, b=None, tol=1e-8, max_lag=4096):
    """Smallest J with (untruncated) tail below tol times the head sum.

    Polynomial decay can demand astronomically large J at small b; the lag
    is capped at max_lag with a warning so simulations stay feasible.
    """
    if kind == "geometric":
        total = 1.0 / (1.0 - rho)
        lag = 0
        while rho ** (lag + 1) / (1.0 - rho) >= tol * (total - rho ** (lag + 1) / (1.0 - rho)):
            lag += 1
            if lag >= max_lag:
                warnings.warn(f"truncation lag capped at {max_lag}")
                return max_lag
        return lag
    if kind == "polynomial":
        total = float(zeta(b + 1.0, 1.0))
        lag = 0
        while True:
            tail = float(zeta(b + 1.0, lag + 2.0))
            if tail < tol * (total - tail):
                return lag
            lag += 1
            if lag >= max_lag:
                warnings.warn(f"truncation lag capped at {max_lag}")
                return max_lag
    raise ParameterError(f"no default lag rule for kind {kind!r}")


@dataclass(frozen=True)
class CoefficientModel:
    """Coefficient matrices a_0, ..., a_J of the linear filter.

    kinds:
      explicit     matrices given directly, shape (J+1, d, q)
      geometric    a_j = scale * rho^j, rho in (0, 1)
      polynomial   a_j = scale * (1+j)^(-b-1), b > 0, so the tail sum from
                   lag i decays like i^(-b)
    """

    kind: str
    lag: int
    matrices: np.ndarray = None  # explicit only
    rho: float = float("nan")
    b: float = float("nan")
    scale: np.ndarray = None  # geometric/polynomial, shape (d, q)

    def __post_init__(self):
        if self.kind not in COEFFICIENT_KINDS:
            raise ParameterError(f"unknown coefficient kind {self.kind!r}")
        if self.lag < 0:
            raise ParameterError("truncation lag must be >= 0")
        if self.kind == "explicit":
            mats = np.asarray(self.matrices, dtype=float)
            if mats.ndim != 3 or mats.shape[0] != self.lag + 1:
                raise ShapeError("explicit matrices must have shape (J+1, d, q)")
            object.__setattr__(self, "matrices", mats)
        else:
            if self.kind == "geometric" and not (0.0 < self.rho < 1.0):
                raise ParameterError(f"rho must lie in (0, 1), got {self.rho}")
            if self.kind == "polynomial" and not (np.isfinite(self.b) and self.b > 0):
                raise ParameterError(f"b must be > 0, got {self.b}")
            scale = np.atleast_2d(np.asarray(self.scale, dtype=float))
            object.__setattr__(self, "scale", scale)

    @property
    def d(self) -> int:
        return self.matrices.shape[1] if self.kind == "explicit" else self.scale.shape[0]

    @property
    def q(self) -> int:
        return self.matrices.shape[2] if self.kind == "explicit" else self.scale.shape[1]

    def _weight(self, j: int) -> float:
        if self.kind == "geometric":
            return self.rho**j
        return (1.0 + j) ** (-self.b - 1.0)

    def matrix(self, j: int) -> np.ndarray:
        if not (0 <= j <= self.lag):
            raise ParameterError(f"lag index {j} outside [0, {self.lag}]")
        if self.kind == "explicit":
            return self.matrices[j]
        return self.scale * self._weight(j)

    def stacked(self) -> np.ndarray:
        """(J+1, d, q) array of all coefficient matrices."""
        if self.kind == "explicit":
            return self.matrices
        w = np.array([self._weight(j) for j in range(self.lag + 1)])
        return w[:, None, None] * self.scale[None, :, :]

    def operator_norms(self) -> np.ndarray:
        """Spectral norms |a_j| for j = 0..J."""
        return np.linalg.norm(self.stacked(), ord=2, axis=(1, 2))

    def scale_norm(self) -> float:
        if self.kind == "explicit":
            raise ParameterError("scale norm undefined for explicit coefficients")
        return float(np.linalg.norm(self.scale, ord=2))

    def tail_sum(self, lag: int) -> float:
        """sum_{j >= lag} |a_j| of the *untruncated* model.

        Closed form for geometric and polynomial decay; a finite sum over
        the stored matrices for explicit coefficients.  Always an upper
        bound for the truncated filter actually simulated.
        """
        if lag < 0:
            raise ParameterError("lag must be >= 0")
        if self.kind == "geometric":
            return self.scale_norm() * self.rho**lag / (1.0 - self.rho)
        if self.kind == "polynomial":
            return self.scale_norm() * float(zeta(self.b + 1.0, lag + 1.0))
        norms = self.operator_norms()
        return float(norms[min(lag, norms.size) :].sum())

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "J": self.lag}
        if self.kind == "explicit":
            cfg["matrices"] = self.matrices.tolist()
        else:
            cfg["scale"] = self.scale.tolist()
            if self.kind == "geometric":
                cfg["rho"] = self.rho
            else:
                cfg["b"] = self.b
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "CoefficientModel":
        kind = cfg.get("kind")
        if kind == "explicit":
            mats = np.asarray(cfg["matrices"], dtype=float)
            return cls(kind="explicit", lag=mats.shape[0] - 1, matrices=mats)
        scale = np.asarray(cfg.get("scale", 1.0), dtype=float)
        lag = cfg.get("J")
        if kind == "geometric":
            rho = float(cfg["rho"])
            if lag is None:
                lag = default_truncation_lag("geometric", rho=rho)
            return cls(kind=kind, lag=int(lag), rho=rho, scale=scale)
        if kind == "polynomial":
            b = float(cfg["b"])
            if lag is None:
                lag = default_truncation_lag("polynomial", b=b)
            return cls(kind=kind, lag=int(lag), b=b, scale=scale)
        raise ParameterError(f"unknown coefficient kind {kind!r}")


@dataclass(frozen=True)
class ProcessSpec:
    """Everything needed to regenerate a path: law, coefficients, sizes."""

    innovation: InnovationLaw
    coefficients: CoefficientModel
    burn_in: int = -1  # -1: use J

    def __post_init__(self):
        burn = self.coefficients.lag if self.burn_in < 0 else self.burn_in
        if burn < self.coefficients.lag:
            raise ParameterError(
                f"burn_in {burn} smaller than truncation lag {self.coefficients.lag}"
            )
        object.__setattr__(self, "burn_in", burn)

    @property
    def d(self) -> int:
        return self.coefficients.d

    @property
    def q(self) -> int:
        return self.coefficients.q

    @property
    def lag(self) -> int:
        return self.coefficients.lag

    def to_config(self) -> dict:
        return {
            "innovation": self.innovation.to_config(),
            "coefficients": self.coefficients.to_config(),
            "burn_in": self.burn_in,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "ProcessSpec":
        return cls(
            innovation=InnovationLaw.from_config(cfg["innovation"]),
            coefficients=CoefficientModel.from_config(cfg["coefficients"]),
            burn_in=int(cfg.get("burn_in", -1)),
        )

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_config(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    # convenience builders used all over the tests and scenarios

    @classmethod
    def iid(cls, kind: str = "standard-normal", d: int = 1, param=float("nan")):
        mats = np.eye(d)[None, :, :] if d > 1 else np.ones((1, 1, 1))
        return cls(
            innovation=InnovationLaw(kind, param),
            coefficients=CoefficientModel(kind="explicit", lag=0, matrices=mats),
        )

    @classmethod
    def geometric(cls, rho: float, kind: str = "standard-normal", scale=1.0,
                  lag: int | None = None, param=float("nan")):
        if lag is None:
            lag = default_truncation_lag("geometric", rho=rho)
        coeffs = CoefficientModel(kind="geometric", lag=lag, rho=rho, scale=scale)
        return cls(innovation=InnovationLaw(kind, param), coefficients=coeffs)

    @classmethod
    def polynomial(cls, b: float, kind: str = "standard-normal", scale=1.0,
                   lag: int | None = None, param=float("nan")):
        if lag is None:
            lag = default_truncation_lag("polynomial", b=b)
        coeffs = CoefficientModel(kind="polynomial", lag=lag, b=b, scale=scale)
        return cls(innovation=InnovationLaw(kind, param), coefficients=coeffs)


@dataclass(frozen=True)
class SamplePath:
    """Simulated path: data[r] is X_{r+1}, shape (n, d)."""

    data: np.ndarray
    seed: int
    fingerprint: str

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def write_csv(self, path):
        header = ",".join(f"x{i + 1}" for i in range(self.d))
        np.savetxt(path, self.data, delimiter=",", header=header,
                   comments="", fmt="%.17g", newline="\n")


@dataclass(frozen=True)
class CoupledPath:
    """Primary/shadow pair; innovations at time indices <= swap differ."""

    primary: SamplePath
    shadow: SamplePath
    swap: int


def generate_innovations(law: InnovationLaw, count: int, seed: int, q: int = 1):
    """i.i.d. innovation draws; shape (count,) for q = 1, else (count, q)."""
    if count < 1:
        raise SizeError("count must be >= 1")
    if q < 1:
        raise SizeError("q must be >= 1")
    rng = substream(seed, "innov")
    size = count if q == 1 else (count, q)
    return law.sample(rng, size)


def _filter_path(draws: np.ndarray, coeffs: CoefficientModel, n: int, burn: int):
    """Apply the truncated filter; draws has shape (burn + n, q)."""
    d, q = coeffs.d, coeffs.q
    if d == 1 and q == 1:
        taps = coeffs.stacked()[:, 0, 0]
        full = np.convolve(draws[:, 0], taps)
        return full[burn : burn + n][:, None]
    out = np.zeros((n, d))
    stacked = coeffs.stacked()
    for j in range(coeffs.lag + 1):
        seg = draws[burn - j : burn - j + n]
        out += seg @ stacked[j].T
    return out


def simulate_linear(spec: ProcessSpec, n: int, seed: int) -> SamplePath:
    """Simulate X_1, ..., X_n; identical output for identical (spec, n, seed)."""
    if n < 1:
        raise SizeError("n must be >= 1")
    rng = substream(seed, "innov")
    draws = np.atleast_2d(
        spec.innovation.sample(rng, (spec.burn_in + n, spec.q))
    ).reshape(spec.burn_in + n, spec.q)
    data = _filter_path(draws, spec.coefficients, n, spec.burn_in)
    return SamplePath(data=data, seed=int(seed), fingerprint=spec.fingerprint())


def simulate_coupled(spec: ProcessSpec, n: int, swap: int, seed: int) -> CoupledPath:
    """Primary path plus a shadow sharing innovations at times > ``swap``.

    Time index t of innovation xi_t runs over [1 - burn_in, n]; the shadow
    replaces all xi_t with t <= swap by draws from an independent stream.
    With swap = 0 this is the classical physical-dependence coupling: the
    emitted X_i and shadow X_i agree exactly once i > J.
    """
    if n < 1:
        raise SizeError("n must be >= 1")
    if not (0 <= swap <= n):
        raise ParameterError(f"swap point must lie in [0, {n}], got {swap}")
    rng = substream(seed, "innov")
    total = spec.burn_in + n
    draws = np.atleast_2d(
        spec.innovation.sample(rng, (total, spec.q))
    ).reshape(total, spec.q)
    rng_shadow = substream(seed, "innov-shadow")
    shadow_draws = draws.copy()
    cut = swap + spec.burn_in  # draw index k holds time t = k - burn_in + 1
    if cut > 0:
        shadow_draws[:cut] = np.atleast_2d(
            spec.innovation.sample(rng_shadow, (cut, spec.q))
        ).reshape(cut, spec.q)
    primary = _filter_path(draws, spec.coefficients, n, spec.burn_in)
    shadow = _filter_path(shadow_draws, spec.coefficients, n, spec.burn_in)
    fp = spec.fingerprint()
    return CoupledPath(
        primary=SamplePath(data=primary, seed=int(seed), fingerprint=fp),
        shadow=SamplePath(data=shadow, seed=int(seed), fingerprint=fp),
        swap=int(swap),
    )


def time_delay_embed(path: SamplePath, dim: int) -> SamplePath:
    """Embed a scalar path into R^dim via sliding windows.

    Row i of the result is (X_{i+1}, ..., X_{i+dim}); the output has
    n - dim + 1 rows.
    """
    if path.d != 1:
        raise ShapeError("time-delay embedding expects a scalar path")
    if dim < 1:
        raise ParameterError("embedding dimension must be >= 1")
    if path.n < dim:
        raise SizeError(f"path too short ({path.n}) for dimension {dim}")
    windows = np.lib.stride_tricks.sliding_window_view(path.data[:, 0], dim)
    return SamplePath(data=windows.copy(), seed=path.seed, fingerprint=path.fingerprint)
