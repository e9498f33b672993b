"""Iterative solvers with fully instrumented traces.

Every runner records the iterates, step norms, first-order witnesses with
their explicit iterate index, and the vanishing sequence value paired with
each witness, so the certificate checks never have to guess an index
convention.  Runs are strictly sequential; distinct runs are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .geometry import as_point
from .setmap import MissingOracleError, OperatorEntry, ProxOracle


@dataclass(frozen=True)
class StopRule:
    """Step-size stopping with an iteration cap and a divergence guard."""

    step_tol: float = 1e-10
    max_iter: int = 100_000
    divergence_guard: float = 1e12

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.step_tol <= 0 or self.divergence_guard <= 0:
            raise ValueError("thresholds must be positive")


@dataclass
class IterateTrace:
    """Per-iteration record of a solver run.

    ``witness_indices[i]`` is the iterate index that ``witness_points[i]``
    belongs to; ``xi_values[i]`` is the vanishing-sequence value paired with
    that witness.  ``witness_side`` records whether witnesses are attached to
    the upcoming iterate ("next") or the current one ("current").
    """

    algorithm: str
    params: dict
    iterates: List[np.ndarray]
    step_norms: List[float]
    stop: StopRule
    termination: str  # "tolerance" | "max_iter" | "divergence"
    f_values: Optional[List[float]] = None
    witness_indices: List[int] = field(default_factory=list)
    witness_points: List[np.ndarray] = field(default_factory=list)
    xi_values: List[float] = field(default_factory=list)
    witness_side: Optional[str] = None  # "next" | "current"
    witness_map: Optional[str] = None  # "forward" | "subgrad"
    fejer_ledger: Optional[List[float]] = None
    xbar: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.step_norms) != len(self.iterates) - 1:
            raise ValueError("step_norms must be one shorter than iterates")
        if not (len(self.witness_indices) == len(self.witness_points) == len(self.xi_values)):
            raise ValueError("witness bookkeeping lists must run in parallel")
        if self.f_values is not None and len(self.f_values) != len(self.iterates):
            raise ValueError("f_values must align with iterates")

    def __len__(self) -> int:
        return len(self.iterates)

    @property
    def dim(self) -> int:
        return self.iterates[0].size

    @property
    def witnesses(self) -> List[tuple]:
        return list(zip(self.witness_indices, self.witness_points))

    def witness_norms(self) -> np.ndarray:
        return np.array([float(np.linalg.norm(w)) for w in self.witness_points])

    @property
    def diverged(self) -> bool:
        return self.termination == "divergence"


def _terminate(k: int, delta: float, x_next: np.ndarray, stop: StopRule) -> Optional[str]:
    if float(np.linalg.norm(x_next)) > stop.divergence_guard:
        return "divergence"
    if delta <= stop.step_tol:
        return "tolerance"
    if k + 1 >= stop.max_iter:
        return "max_iter"
    return None


def _f_values(entry: OperatorEntry, iterates: List[np.ndarray]) -> Optional[List[float]]:
    if entry.f is None:
        return None
    return [float(entry.f(x)) for x in iterates]


def resolvent(p: ProxOracle, gamma: float, y) -> np.ndarray:
    """Evaluate ``J_{γA}(y)``; gamma must lie in the oracle's declared range."""
    return p.resolve(gamma, y)


def run_ppa(entry: OperatorEntry, gamma: float, x0, stop: StopRule = StopRule()) -> IterateTrace:
    """Proximal point iteration ``x_{k+1} = J_{γA}(x_k)``.

    The witness at index k+1 is ``(x_k - x_{k+1}) / γ``, which lies in
    ``A(x_{k+1})`` by the resolvent identity; its paired vanishing value is
    the step norm just taken.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if entry.prox is None:
        raise MissingOracleError(f"entry {entry.name!r} has no prox oracle")
    x = as_point(x0, entry.dim_in)
    iterates = [x]
    steps: List[float] = []
    w_idx: List[int] = []
    w_pts: List[np.ndarray] = []
    xis: List[float] = []
    termination = "max_iter"
    for k in range(stop.max_iter):
        xn = entry.prox.resolve(gamma, x)
        delta = float(np.linalg.norm(xn - x))
        iterates.append(xn)
        steps.append(delta)
        w_idx.append(k + 1)
        w_pts.append((x - xn) / gamma)
        xis.append(delta)
        x = xn
        reason = _terminate(k, delta, xn, stop)
        if reason:
            termination = reason
            break
    return IterateTrace(
        algorithm="ppa",
        params={"gamma": gamma},
        iterates=iterates,
        step_norms=steps,
        stop=stop,
        termination=termination,
        f_values=_f_values(entry, iterates),
        witness_indices=w_idx,
        witness_points=w_pts,
        xi_values=xis,
        witness_side="next",
        witness_map="forward",
    )


def run_gdm(entry: OperatorEntry, step: float, x0, stop: StopRule = StopRule()) -> IterateTrace:
    """Fixed-step gradient descent with gradient witnesses at the current point."""
    if step <= 0:
        raise ValueError("step must be positive")
    if entry.grad is None:
        raise MissingOracleError(f"entry {entry.name!r} has no gradient oracle")
    x = as_point(x0, entry.dim_in)
    iterates = [x]
    steps: List[float] = []
    w_idx: List[int] = []
    w_pts: List[np.ndarray] = []
    xis: List[float] = []
    termination = "max_iter"
    for k in range(stop.max_iter):
        g = as_point(entry.grad(x), entry.dim_in)
        xn = x - step * g
        delta = float(np.linalg.norm(xn - x))
        iterates.append(xn)
        steps.append(delta)
        w_idx.append(k)
        w_pts.append(g)
        xis.append(delta)
        x = xn
        reason = _terminate(k, delta, xn, stop)
        if reason:
            termination = reason
            break
    return IterateTrace(
        algorithm="gdm",
        params={"step": step},
        iterates=iterates,
        step_norms=steps,
        stop=stop,
        termination=termination,
        f_values=_f_values(entry, iterates),
        witness_indices=w_idx,
        witness_points=w_pts,
        xi_values=xis,
        witness_side="current",
        witness_map="subgrad",
    )


def _qpower_subproblem(entry: OperatorEntry, gamma: float, q: float, center: np.ndarray) -> np.ndarray:
    """Minimize ``f(x) + γ ||x - c||**q``: closed form for quadratics with
    q = 2, bracketed scalar minimization in 1-d otherwise."""
    if entry.quad_form is not None and q == 2.0:
        Q, b = entry.quad_form
        Q = np.atleast_2d(Q)
        b = np.atleast_1d(b)
        return np.linalg.solve(Q + 2.0 * gamma * np.eye(Q.shape[0]), b + 2.0 * gamma * center)
    if entry.dim_in != 1:
        raise ValueError("power-penalty subproblems beyond quadratics are 1-d only")
    if entry.f is None:
        raise MissingOracleError(f"entry {entry.name!r} has no scalar function")
    c = float(center[0])
    if entry.inf_f is not None:
        span = ((entry.f(center) - entry.inf_f) / gamma) ** (1.0 / q) + 1e-6
    else:
        span = 10.0 * (1.0 + abs(c))
    res = minimize_scalar(
        lambda t: entry.f(np.array([t])) + gamma * abs(t - c) ** q,
        bounds=(c - span, c + span),
        method="bounded",
        options={"xatol": 1e-12},
    )
    t = float(res.x)
    if entry.grad is not None:
        t = _polish_stationarity(entry, gamma, q, c, t, span)
    return np.array([t])


def _polish_stationarity(entry, gamma: float, q: float, c: float, t: float, span: float) -> float:
    """Sharpen the bounded minimizer by bracketing the stationarity equation
    ``f'(t) + γ q |t - c|**(q-1) sign(t - c) = 0``; falls back to the
    unpolished point when no sign change brackets it."""

    def slope(u: float) -> float:
        pen = gamma * q * abs(u - c) ** (q - 1.0) * math.copysign(1.0, u - c) if u != c else 0.0
        return float(entry.grad(np.array([u]))[0]) + pen

    h = 1e-9 * (1.0 + abs(c))
    while h <= span:
        a, b = t - h, t + h
        fa, fb = slope(a), slope(b)
        if fa == 0.0:
            return a
        if fb == 0.0:
            return b
        if fa * fb < 0.0:
            return float(brentq(slope, a, b, xtol=1e-15, rtol=1e-15))
        h *= 8.0
    return t


def run_qpower_prox(
    entry: OperatorEntry, gamma: float, q: float, x0, stop: StopRule = StopRule()
) -> IterateTrace:
    """Power-penalty proximal iteration with exponent q > 1.

    The stationarity witness at index k+1 is
    ``-γ q ||Δ||**(q-2) (x_{k+1} - x_k)``, of norm ``γ q Δ**(q-1)``; a zero
    step gives the zero witness.
    """
    if q <= 1:
        raise ValueError("q must exceed 1")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x = as_point(x0, entry.dim_in)
    iterates = [x]
    steps: List[float] = []
    w_idx: List[int] = []
    w_pts: List[np.ndarray] = []
    xis: List[float] = []
    termination = "max_iter"
    for k in range(stop.max_iter):
        xn = _qpower_subproblem(entry, gamma, q, x)
        delta = float(np.linalg.norm(xn - x))
        w = -gamma * q * delta ** (q - 2.0) * (xn - x) if delta > 0 else np.zeros_like(x)
        iterates.append(xn)
        steps.append(delta)
        w_idx.append(k + 1)
        w_pts.append(w)
        xis.append(delta)
        x = xn
        reason = _terminate(k, delta, xn, stop)
        if reason:
            termination = reason
            break
    return IterateTrace(
        algorithm="qpower",
        params={"gamma": gamma, "q": q},
        iterates=iterates,
        step_norms=steps,
        stop=stop,
        termination=termination,
        f_values=_f_values(entry, iterates),
        witness_indices=w_idx,
        witness_points=w_pts,
        xi_values=xis,
        witness_side="next",
        witness_map="subgrad",
    )


def run_dca(entry: OperatorEntry, gamma: float, x0, stop: StopRule = StopRule()) -> IterateTrace:
    """Difference-of-convex iteration ``x_{k+1} = J_{γ∂g}(x_k + γ∇h(x_k))``.

    The witness at index k+1 is
    ``∇h(x_k) - ∇h(x_{k+1}) - (x_{k+1} - x_k)/γ``, a first-order residual of
    the combined objective at the new iterate.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if entry.dc is None:
        raise MissingOracleError(f"entry {entry.name!r} has no dc split (g prox, grad h)")
    g_prox, h_grad = entry.dc.g_prox, entry.dc.h_grad
    x = as_point(x0, entry.dim_in)
    iterates = [x]
    steps: List[float] = []
    w_idx: List[int] = []
    w_pts: List[np.ndarray] = []
    xis: List[float] = []
    termination = "max_iter"
    for k in range(stop.max_iter):
        hx = as_point(h_grad(x), entry.dim_in)
        xn = g_prox.resolve(gamma, x + gamma * hx)
        delta = float(np.linalg.norm(xn - x))
        r = hx - as_point(h_grad(xn), entry.dim_in) - (xn - x) / gamma
        iterates.append(xn)
        steps.append(delta)
        w_idx.append(k + 1)
        w_pts.append(r)
        xis.append(delta)
        x = xn
        reason = _terminate(k, delta, xn, stop)
        if reason:
            termination = reason
            break
    return IterateTrace(
        algorithm="dca",
        params={"gamma": gamma},
        iterates=iterates,
        step_norms=steps,
        stop=stop,
        termination=termination,
        f_values=_f_values(entry, iterates),
        witness_indices=w_idx,
        witness_points=w_pts,
        xi_values=xis,
        witness_side="next",
        witness_map="subgrad",
    )


def run_shifted_ppa(
    entry: OperatorEntry,
    kappa: float,
    gamma: float,
    x0,
    stop: StopRule = StopRule(),
    step_condition: str = "derived",
    xbar=None,
) -> IterateTrace:
    """Proximal point iteration under a shifted-monotonicity assumption.

    The per-step ledger records
    ``||x_{k+1} - xbar||^2 - ||x_k - xbar||^2 + (1 - 2 kappa / gamma) Δ_k^2``,
    which is nonpositive exactly when the contraction argument goes through.
    ``step_condition="derived"`` enforces ``gamma > 2 kappa`` (the range under
    which the ledger inequality is valid); ``"reciprocal"`` instead admits the
    reciprocal bound ``gamma < 1 / (2 kappa)`` and still records the ledger,
    so divergence inside that range shows up in the diagnostics.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if step_condition == "derived":
        if gamma <= 2.0 * kappa:
            raise ValueError("derived step condition requires gamma > 2 * kappa")
    elif step_condition == "reciprocal":
        if gamma >= 1.0 / (2.0 * kappa):
            raise ValueError("reciprocal step condition requires gamma < 1 / (2 * kappa)")
    else:
        raise ValueError(f"unknown step_condition {step_condition!r}")
    if entry.prox is None:
        raise MissingOracleError(f"entry {entry.name!r} has no prox oracle")
    x = as_point(x0, entry.dim_in)
    xb = entry.solution_set.project(x) if xbar is None else as_point(xbar, entry.dim_in)
    coeff = 1.0 - 2.0 * kappa / gamma
    iterates = [x]
    steps: List[float] = []
    w_idx: List[int] = []
    w_pts: List[np.ndarray] = []
    xis: List[float] = []
    ledger: List[float] = []
    termination = "max_iter"
    for k in range(stop.max_iter):
        xn = entry.prox.resolve(gamma, x)
        delta = float(np.linalg.norm(xn - x))
        ledger.append(
            float(np.linalg.norm(xn - xb) ** 2 - np.linalg.norm(x - xb) ** 2 + coeff * delta ** 2)
        )
        iterates.append(xn)
        steps.append(delta)
        w_idx.append(k + 1)
        w_pts.append((x - xn) / gamma)
        xis.append(delta)
        x = xn
        reason = _terminate(k, delta, xn, stop)
        if reason:
            termination = reason
            break
    return IterateTrace(
        algorithm="shifted-ppa",
        params={"gamma": gamma, "kappa": kappa, "step_condition": step_condition},
        iterates=iterates,
        step_norms=steps,
        stop=stop,
        termination=termination,
        f_values=_f_values(entry, iterates),
        witness_indices=w_idx,
        witness_points=w_pts,
        xi_values=xis,
        witness_side="next",
        witness_map="forward",
        fejer_ledger=ledger,
        xbar=xb,
    )


def make_synthetic_trace(
    iterates: List,
    witnesses: List[tuple],
    xi_values: List[float],
    f_values: Optional[List[float]] = None,
    stop: StopRule = StopRule(step_tol=1e-2),
    algorithm: str = "synthetic",
) -> IterateTrace:
    """Assemble a trace from raw sequences, mainly for tests and examples."""
    pts = [as_point(x) for x in iterates]
    steps = [float(np.linalg.norm(b - a)) for a, b in zip(pts[:-1], pts[1:])]
    return IterateTrace(
        algorithm=algorithm,
        params={},
        iterates=pts,
        step_norms=steps,
        stop=stop,
        termination="max_iter",
        f_values=f_values,
        witness_indices=[int(k) for k, _ in witnesses],
        witness_points=[as_point(w) for _, w in witnesses],
        xi_values=[float(v) for v in xi_values],
    )
