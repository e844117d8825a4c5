"""Closed-form thresholds, branching-process thresholds and loss bounds.

Every root is found by bisection on [0, 1]; all target functions are
monotone there, so no general-purpose solver is needed.
"""

from __future__ import annotations

import io
from collections.abc import Callable, Iterable
from dataclasses import dataclass

import numpy as np

UNBOOSTED_FUSION = 0.5
BOOSTED_FUSION = 0.78125
B103_THRESHOLD = 0.546694


class AnalyticError(ValueError):
    pass


class Bound(float):
    """A bound value; values above 1 mean no probability can reach it."""

    @property
    def impossible(self) -> bool:
        return float(self) > 1.0

    def __repr__(self) -> str:
        tag = " (impossible)" if self.impossible else ""
        return f"Bound({float(self)!r}){tag}"


def _bisect(f: Callable[[float], float], precision: float, lo: float = 0.0,
            hi: float = 1.0) -> float:
    """Root of an increasing function with f(lo) < 0 <= f(hi)."""
    if precision <= 0:
        raise AnalyticError("precision must be positive")
    flo, fhi = f(lo), f(hi)
    if not (flo < 0 <= fhi):
        raise AnalyticError(f"root not bracketed: f({lo})={flo}, f({hi})={fhi}")
    while hi - lo > precision:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bethe_lower_bound(n: int) -> float:
    if n < 2:
        raise AnalyticError("n must be >= 2")
    return 1.0 / (n - 1)


def multinode_lower_bound(n: int, m: int) -> float:
    if n < 2 or m < 2:
        raise AnalyticError("n and m must be >= 2")
    return 1.0 / ((n - 1) * (m - 1))


def inf_mod103b_threshold(precision: float = 1e-9) -> float:
    """Root of lambda + 2 lambda^3 = 1."""
    if not 0 < precision <= 1e-3:
        raise AnalyticError("precision must be in (0, 1e-3]")
    return _bisect(lambda x: x + 2 * x**3 - 1, precision)


def periodic_tree_threshold(n: int, g: int) -> float:
    if n < 3:
        raise AnalyticError("n must be >= 3")
    if g < 1:
        raise AnalyticError("g must be >= 1")
    return (n - 2) ** (-1.0 / (g + 1)) * (n - 1) ** (-g / (g + 1))


# --------------------------------------------------------------------------
# branching processes


@dataclass(frozen=True)
class BranchingSpec:
    """Mean-offspring matrix M(lam): M[i, j] = expected class-j children of a class-i node."""

    matrix: Callable[[float], np.ndarray]
    classes: tuple[str, ...]

    def at(self, lam: float) -> np.ndarray:
        m = np.asarray(self.matrix(lam), dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(self.classes):
            raise AnalyticError("offspring matrix must be square with one row per class")
        if (m < 0).any():
            raise AnalyticError("offspring matrix has negative entries")
        return m


def spectral_radius(m: np.ndarray, tol: float = 1e-12, max_iter: int = 200_000) -> float:
    """Perron root of a nonnegative matrix by power iteration.

    Iterates with I + M, which is primitive whenever M is irreducible, so
    periodic (cyclic) offspring matrices converge as well.
    """
    k = m.shape[0]
    if not m.any():
        return 0.0
    shifted = m + np.eye(k)
    v = np.ones(k) / k
    rho = 0.0
    for _ in range(max_iter):
        w = shifted @ v
        new = w.sum() / v.sum()
        v = w / w.sum()
        if abs(new - rho) <= tol * max(new, 1.0):
            rho = new
            break
        rho = new
    return rho - 1.0


def branching_threshold(spec: BranchingSpec, precision: float = 1e-9) -> float:
    """Smallest lambda at which the mean progeny diverges (spectral radius 1)."""
    return _bisect(lambda lam: spectral_radius(spec.at(lam)) - 1.0, precision)


def inf_mod103b_spec() -> BranchingSpec:
    # black-to-black, black-to-(through red) and red-to-black offspring rates
    return BranchingSpec(lambda x: np.array([[x, x * x], [2 * x, 0.0]]), ("green", "blue"))


def bethe_spec(n: int) -> BranchingSpec:
    if n < 2:
        raise AnalyticError("n must be >= 2")
    return BranchingSpec(lambda x: np.array([[(n - 1) * x]]), ("node",))


def periodic_tree_spec(n: int, g: int) -> BranchingSpec:
    """Unmeasured generation (n-2 children) followed by g black generations."""
    if n < 3 or g < 1:
        raise AnalyticError("need n >= 3 and g >= 1")

    def matrix(x: float) -> np.ndarray:
        m = np.zeros((g + 1, g + 1))
        m[0, 1] = (n - 2) * x
        for i in range(1, g):
            m[i, i + 1] = (n - 1) * x
        m[g, 0] = (n - 1) * x
        return m

    return BranchingSpec(matrix, ("unmeasured",) + tuple(f"black{i}" for i in range(1, g + 1)))


# --------------------------------------------------------------------------
# photon loss


@dataclass(frozen=True)
class LossModel:
    eta0: float
    n: int

    def __post_init__(self) -> None:
        if not 0 < self.eta0 <= 1:
            raise AnalyticError("eta0 must be in (0, 1]")
        if self.n < 2:
            raise AnalyticError("n must be >= 2")

    @property
    def photon_transmissivity(self) -> float:
        return self.eta0**self.n

    @property
    def bond_factor(self) -> float:
        return self.eta0 ** (2 * self.n)


def loss_lambda_lower_bound(model: LossModel) -> Bound:
    return Bound(1.0 / ((model.n - 1) * model.bond_factor))


def loss_eta_lower_bound(n: int, lam: float) -> Bound:
    if n < 2:
        raise AnalyticError("n must be >= 2")
    if not 0 < lam <= 1:
        raise AnalyticError("lambda must be in (0, 1]")
    return Bound((1.0 / (lam * (n - 1))) ** (1.0 / (2 * n)))


def optimal_n(lam: float | None = None, n_range: Iterable[int] = range(2, 21), *,
              eta0: float | None = None) -> tuple[int, Bound]:
    """Best microcluster size: minimises the eta0 bound at fixed lambda, or the
    lambda bound at fixed eta0.  Ties go to the smaller n."""
    if (lam is None) == (eta0 is None):
        raise AnalyticError("give exactly one of lambda and eta0")
    ns = sorted(set(int(n) for n in n_range))
    if not ns:
        raise AnalyticError("empty n range")
    if lam is not None:
        values = [loss_eta_lower_bound(n, lam) for n in ns]
    else:
        values = [loss_lambda_lower_bound(LossModel(eta0, n)) for n in ns]
    best = min(range(len(ns)), key=lambda i: (float(values[i]), ns[i]))
    if all(v.impossible for v in values):
        raise AnalyticError("every n in the range gives an impossible bound")
    return ns[best], values[best]


def lambda_bound_csv(eta0: float, n_range: Iterable[int]) -> str:
    buf = io.StringIO()
    buf.write("n,lambda_lb\n")
    for n in n_range:
        buf.write(f"{n},{float(loss_lambda_lower_bound(LossModel(eta0, n))):.9g}\n")
    return buf.getvalue()


def eta_bound_csv(lam: float, n_range: Iterable[int]) -> str:
    buf = io.StringIO()
    buf.write("n,eta0c_lb\n")
    for n in n_range:
        buf.write(f"{n},{float(loss_eta_lower_bound(n, lam)):.9g}\n")
    return buf.getvalue()
