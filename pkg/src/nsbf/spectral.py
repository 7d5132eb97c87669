"""Dirichlet eigenvalue solver on [0, b].

Eigenvalues are the squares of the positive zeros of the characteristic
function s(omega, b), the sine-type solution evaluated at the right
endpoint.  The solver scans an omega grid for sign changes, refines each
bracket by bisection plus one secant polish, and indexes the results from
1 in increasing order.  An asymptotic eigenvalue formula (b = pi only)
supplies the scan-range hint.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    RangeExhaustedError,
    UnsupportedIntervalError,
    ZeroOmegaError,
)
from .solution import SolutionModel, sine_solution

__all__ = [
    "EigProblem",
    "EigResult",
    "char_function",
    "find_eigenvalues",
    "asymptotic_eigenvalue",
]

logger = logging.getLogger(__name__)

#: bisection terminates at a bracket width of 1e-13 * max(1, omega)
BRACKET_TOL = 1e-13
#: warn when consecutive omega spacings deviate this much from pi/b
SPACING_WARN_FRACTION = 0.25


@dataclass(frozen=True)
class EigProblem:
    """A Dirichlet eigenvalue problem over a scan range in omega.

    omega_lo/omega_hi default to the scan step and an asymptotic-spacing
    estimate for the requested count; when omega_hi is left None the scan
    auto-extends until enough eigenvalues are found.
    """

    model: SolutionModel
    omega_lo: float | None = None
    omega_hi: float | None = None
    h_scan: float | None = None
    representation: str = "improved"
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.boundary != "dirichlet":
            raise ConfigError(
                f"only Dirichlet boundary conditions are supported, got "
                f"{self.boundary!r}"
            )
        if self.model.is_complex:
            raise ConfigError(
                "eigenvalue problems require a real-valued potential"
            )
        b = self.model.grid.b
        h = self.h_scan if self.h_scan is not None else math.pi / (4.0 * b)
        if h > math.pi / (2.0 * b):
            raise ConfigError(
                f"h_scan={h:.6g} exceeds half the asymptotic root spacing "
                f"pi/(2b)={math.pi / (2 * b):.6g}"
            )
        object.__setattr__(self, "h_scan", h)
        lo = self.omega_lo if self.omega_lo is not None else h
        if not lo > 0:
            raise ConfigError(f"omega_lo must be positive, got {lo}")
        object.__setattr__(self, "omega_lo", lo)
        if self.omega_hi is not None and self.omega_hi <= lo:
            raise ConfigError("omega_hi must exceed omega_lo")


@dataclass(frozen=True)
class EigResult:
    """One computed eigenvalue with refinement diagnostics."""

    index: int
    omega: float
    lam: float
    residual: float
    bracket_width: float


def char_function(
    model: SolutionModel, omega: float, representation: str = "improved"
) -> float:
    """s(omega, b): the Dirichlet shooting function, real for real q."""
    if omega == 0:
        raise ZeroOmegaError("the characteristic function divides by omega")
    return sine_solution(model, float(omega), model.grid.M, representation)


def asymptotic_eigenvalue(n: int, Qb: float, b: float) -> float:
    """Large-index eigenvalue estimate (n + Qb/(2 pi n))^2, b = pi only."""
    if n < 1:
        raise ValueError(f"index must be >= 1, got {n}")
    if abs(b - math.pi) > 1e-12:
        raise UnsupportedIntervalError(
            f"the asymptotic formula is stated for b = pi, got b={b}"
        )
    return (n + Qb / (2.0 * math.pi * n)) ** 2


def _scan_values(problem: EigProblem, omegas: np.ndarray, threads: int):
    f = lambda w: char_function(problem.model, w, problem.representation)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.fromiter(pool.map(f, omegas), dtype=float, count=len(omegas))
    return np.fromiter((f(w) for w in omegas), dtype=float, count=len(omegas))


def _refine(problem: EigProblem, lo: float, hi: float, s_lo: float, s_hi: float):
    """Bisection to width BRACKET_TOL * max(1, omega), then a secant polish."""
    f = lambda w: char_function(problem.model, w, problem.representation)
    while hi - lo > BRACKET_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        s_mid = f(mid)
        if s_mid == 0.0:
            lo = hi = mid
            s_lo = s_hi = s_mid
            break
        if (s_mid < 0) == (s_lo < 0):
            lo, s_lo = mid, s_mid
        else:
            hi, s_hi = mid, s_mid
    width = hi - lo
    omega = 0.5 * (lo + hi)
    if s_hi != s_lo:
        secant = hi - s_hi * (hi - lo) / (s_hi - s_lo)
        if lo <= secant <= hi:
            omega = secant
    return omega, abs(f(omega)), width


def find_eigenvalues(
    problem: EigProblem, count: int, threads: int = 1
) -> list[EigResult]:
    """The lowest ``count`` Dirichlet eigenvalues lam_n = omega_n^2.

    Scans [omega_lo, omega_hi] with step h_scan for sign changes of the
    characteristic function and refines each bracket.  With omega_hi
    unset, the range grows automatically (guided by the asymptotic
    spacing pi/b) until ``count`` roots are found.

    Raises
    ------
    RangeExhaustedError
        If the scan range is exhausted first.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    model = problem.model
    b = model.grid.b
    h = problem.h_scan
    auto = problem.omega_hi is None
    hi_target = (
        problem.omega_hi
        if not auto
        else problem.omega_lo + (count + 2) * math.pi / b
    )

    brackets: list[tuple[float, float, float, float]] = []
    lo_edge = problem.omega_lo
    first_cell = True
    while True:
        n_cells = max(1, int(math.ceil((hi_target - lo_edge) / h)))
        omegas = lo_edge + h * np.arange(n_cells + 1)
        values = _scan_values(problem, omegas, threads)
        for i in range(n_cells):
            s0, s1 = values[i], values[i + 1]
            if s0 == 0.0:
                brackets.append((omegas[i], omegas[i], s0, s0))
            elif (s0 < 0) != (s1 < 0):
                if first_cell and i == 0:
                    logger.warning(
                        "characteristic function changes sign in the first "
                        "scan cell; an eigenvalue below omega_lo=%g (or a "
                        "zero eigenvalue, out of scope) may be missed",
                        problem.omega_lo,
                    )
                brackets.append((omegas[i], omegas[i + 1], s0, s1))
            if len(brackets) >= count:
                break
        first_cell = False
        if len(brackets) >= count:
            break
        if not auto:
            raise RangeExhaustedError(
                f"found {len(brackets)} sign changes in "
                f"[{problem.omega_lo:.6g}, {hi_target:.6g}], need {count}"
            )
        if hi_target > problem.omega_lo + 10.0 * (count + 2) * math.pi / b:
            raise RangeExhaustedError(
                f"auto-extended scan reached omega={hi_target:.6g} with only "
                f"{len(brackets)} of {count} eigenvalues"
            )
        lo_edge = omegas[-1]
        hi_target = lo_edge + max(5, count - len(brackets) + 2) * math.pi / b

    results = []
    for k, (lo, hi, s_lo, s_hi) in enumerate(brackets[:count], start=1):
        if lo == hi:
            results.append(EigResult(k, lo, lo * lo, 0.0, 0.0))
            continue
        omega, residual, width = _refine(problem, lo, hi, s_lo, s_hi)
        results.append(EigResult(k, omega, omega * omega, residual, width))

    spacing = math.pi / b
    for a, c in zip(results, results[1:]):
        gap = c.omega - a.omega
        if abs(gap - spacing) > SPACING_WARN_FRACTION * spacing:
            logger.warning(
                "omega spacing between eigenvalues %d and %d is %.6g, "
                "deviating >25%% from the asymptotic pi/b=%.6g; h_scan may "
                "be too coarse (missed root?)",
                a.index, c.index, gap, spacing,
            )
    return results
