"""Dyadic grids on [0, 1], sampled paths, and left-point Stieltjes sums.

Everything downstream (quadratic variation estimators, pathwise integrals,
the integral-equation solver) works on the dyadic grids T_n = {k 2^-n}.
Grid points are exact binary floats up to ``MAX_LEVEL``, so grid-membership
tests and refinement are exact rather than tolerance-based.

All container types are immutable after construction and every operation
here is a pure function; sums are evaluated in a fixed order (numpy
pairwise reduction / cumsum), so repeated runs are bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: Largest supported grid level (2^20 + 1 points per path).
MAX_LEVEL = 20

#: Default working level used by the CLI and preset constructions.
DEFAULT_LEVEL = 12


def _check_level(n):
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise DomainError(f"level must be an integer, got {n!r}")
    if n < 0 or n > MAX_LEVEL:
        raise DomainError(f"level must be in [0, {MAX_LEVEL}], got {n}")
    return int(n)


def grid_points(n):
    """All points of T_n as exact binary floats."""
    n = _check_level(n)
    return np.arange(2**n + 1, dtype=np.float64) * 2.0 ** (-n)


def grid_index(t, n):
    """The index k with t = k 2^-n, or DomainError if t is off-grid."""
    n = _check_level(n)
    k = float(t) * 2**n
    if not (0.0 <= k <= 2**n) or k != int(k):
        raise DomainError(f"{t!r} is not a point of the level-{n} dyadic grid")
    return int(k)


def successor(s, n):
    """The successor of s in T_n: min{u in T_n : u > s}, and 1 for s = 1."""
    k = grid_index(s, n)
    if k == 2**n:
        return 1.0
    return (k + 1) * 2.0 ** (-n)


@dataclass(frozen=True)
class DyadicGrid:
    """The partition T_n = {k 2^-n : k = 0, ..., 2^n} of [0, 1]."""

    level: int

    def __post_init__(self):
        _check_level(self.level)

    @property
    def npoints(self):
        return 2**self.level + 1

    def points(self):
        return grid_points(self.level)

    def index(self, t):
        return grid_index(t, self.level)

    def successor(self, s):
        return successor(s, self.level)


def _freeze(values):
    arr = np.asarray(values, dtype=np.float64).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampledPath:
    """A function on [0, 1] known at the points of a dyadic grid.

    Between grid points the path is understood as piecewise linear, which
    is exact for truncated wedge-basis series (their partial sums are
    piecewise linear at the synthesis level).
    """

    level: int
    values: np.ndarray

    def __post_init__(self):
        _check_level(self.level)
        arr = _freeze(self.values)
        if arr.ndim != 1 or arr.shape[0] != 2**self.level + 1:
            raise DomainError(
                f"level-{self.level} path needs {2**self.level + 1} values, "
                f"got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DomainError("path values must be finite")
        object.__setattr__(self, "values", arr)

    @property
    def grid(self):
        return DyadicGrid(self.level)

    def times(self):
        return grid_points(self.level)

    def value_at(self, t):
        """Evaluate at t in [0, 1] (linear interpolation off the grid)."""
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < 0.0) or np.any(t > 1.0):
            raise DomainError("evaluation point outside [0, 1]")
        out = np.interp(t, self.times(), self.values)
        return float(out) if out.ndim == 0 else out

    def restrict(self, m):
        """Restriction to the coarser level m; exact at shared points."""
        m = _check_level(m)
        if m > self.level:
            raise DomainError(
                f"cannot restrict a level-{self.level} path to finer level {m}"
            )
        if m == self.level:
            return self
        stride = 2 ** (self.level - m)
        return SampledPath(m, self.values[::stride])

    # -- serialization ---------------------------------------------------

    def to_csv(self, path):
        """Write "t,value" rows with 17 significant digits."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(csv_text(self))

    @classmethod
    def from_csv(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines or lines[0].lower() != "t,value":
            raise DomainError(f"{path}: expected header 't,value'")
        try:
            values = [float(ln.split(",")[1]) for ln in lines[1:]]
        except (IndexError, ValueError) as exc:
            raise DomainError(f"{path}: malformed CSV row") from exc
        return cls(_level_from_count(len(values)), values)

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"level": self.level, "values": self.values.tolist()}, fh)

    @classmethod
    def from_json(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        try:
            return cls(int(doc["level"]), doc["values"])
        except (KeyError, TypeError) as exc:
            raise DomainError(f"{path}: expected {{'level': n, 'values': [...]}}") from exc

    @classmethod
    def from_file(cls, path):
        """Dispatch on extension: .json or CSV otherwise."""
        if str(path).endswith(".json"):
            return cls.from_json(path)
        return cls.from_csv(path)

    @classmethod
    def from_function(cls, fn, level):
        """Sample a callable at the level's grid points."""
        t = grid_points(level)
        return cls(level, np.asarray(fn(t), dtype=np.float64))


def csv_text(path):
    """CSV serialization of a path ("t,value", 17 significant digits)."""
    t = path.times()
    rows = ["t,value"]
    rows.extend(f"{ti:.17g},{vi:.17g}" for ti, vi in zip(t, path.values))
    return "\n".join(rows) + "\n"


def _level_from_count(count):
    n = count - 1
    level = n.bit_length() - 1
    if n <= 0 or 2**level != n or level > MAX_LEVEL:
        raise DomainError(f"{count} rows is not 2^n + 1 for a supported level")
    return level


def restrict(path, m):
    """Module-level alias for :meth:`SampledPath.restrict`."""
    return path.restrict(m)


@dataclass(frozen=True, eq=False)
class BVDriver:
    """A continuous bounded-variation integrator, held as a sampled path.

    ``total_variation`` is the sum of absolute increments at the path's
    own level, cached at construction.
    """

    path: SampledPath
    total_variation: float = None

    def __post_init__(self):
        tv = float(np.sum(np.abs(np.diff(self.path.values))))
        object.__setattr__(self, "total_variation", tv)

    @property
    def level(self):
        return self.path.level

    @classmethod
    def from_function(cls, fn, level):
        return cls(SampledPath.from_function(fn, level))

    @classmethod
    def identity(cls, level):
        """The driver A(t) = t."""
        return cls(SampledPath(level, grid_points(level)))

    def restrict(self, m):
        return BVDriver(self.path.restrict(m))


def stieltjes_integral(integrand, driver, t):
    """Left-point Riemann-Stieltjes sum  sum_{s < t} g(s) (A(s') - A(s)).

    ``integrand`` and ``driver`` must share one grid level and t must lie
    on that grid.  The left-endpoint (non-anticipative) convention matches
    the pathwise Ito integral, so both integral types share this kernel.
    """
    if integrand.level != driver.level:
        raise DomainError(
            f"integrand level {integrand.level} != driver level {driver.level}"
        )
    j = grid_index(t, integrand.level)
    if j == 0:
        return 0.0
    dA = np.diff(driver.path.values[: j + 1])
    return float(np.sum(integrand.values[:j] * dA))


@dataclass(frozen=True, eq=False)
class QVCurve:
    """Partial sums of squared increments t -> <x>_t^n at one grid level.

    The estimator convention attributes the squared increment over
    [s, s'] to the point s (sum over s <= t), so the value at t = 0 is the
    first increment's square and the values are non-decreasing.  Curves
    built from an analytic limit function carry the function's own values
    instead; both kinds serve as drivers for Stieltjes sums.
    """

    level: int
    values: np.ndarray

    def __post_init__(self):
        _check_level(self.level)
        arr = _freeze(self.values)
        if arr.ndim != 1 or arr.shape[0] != 2**self.level + 1:
            raise DomainError(
                f"level-{self.level} curve needs {2**self.level + 1} values"
            )
        if np.any(np.diff(arr) < -1e-12 * max(1.0, abs(float(arr[-1])))):
            raise DomainError("quadratic-variation curve must be non-decreasing")
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_path(cls, path, n):
        """Estimator curve of ``path`` along the level-n grid."""
        n = _check_level(n)
        if n > path.level:
            raise DomainError(f"level {n} exceeds path level {path.level}")
        coarse = path.restrict(n).values
        sq = np.diff(coarse) ** 2
        partial = np.cumsum(sq)
        # s = 1 contributes a zero increment (its successor is itself).
        values = np.concatenate([partial, partial[-1:]])
        return cls(n, values)

    @classmethod
    def from_function(cls, fn, level):
        """Analytic curve: sample a known limit t -> <x>_t."""
        t = grid_points(level)
        return cls(level, np.asarray(fn(t), dtype=np.float64))

    def value_at(self, t):
        """Grid read: the partial sum at the largest grid point <= t."""
        j = int(np.floor(float(t) * 2**self.level))
        j = min(max(j, 0), 2**self.level)
        return float(self.values[j])

    def restrict(self, m):
        m = _check_level(m)
        if m > self.level:
            raise DomainError(f"cannot restrict to finer level {m}")
        if m == self.level:
            return self
        stride = 2 ** (self.level - m)
        return QVCurve(m, self.values[::stride])

    def masses(self):
        """Per-point quadratic-variation mass: m_0 = Q_0, m_k = Q_k - Q_{k-1}.

        For an estimator curve m_k is exactly the squared increment
        attributed to grid point k under the sum-over-s<=t convention.
        """
        return np.concatenate([self.values[:1], np.diff(self.values)])

    def increments(self):
        """Plain function increments, for use as a Stieltjes driver."""
        return np.diff(self.values)
