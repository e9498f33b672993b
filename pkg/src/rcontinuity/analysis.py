"""Numerical estimation of regularity: modulus curves, power-law fits,
closed-graph probing, Lojasiewicz-exponent fitting, desingularization
(PLK-style) checks, full-rank inverse-Lipschitz certification, and a
calmness estimator for comparison.

All estimators are deterministic for fixed seeds.  Per-sample evaluations are
independent and reduced in sample order, so serial and parallel execution
would agree bit for bit; the implementation here is serial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .geometry import Window, as_point, excess, sample_window, unit_directions
from .setmap import MissingOracleError, OperatorEntry, SetValuedMap, WindowRequiredError


@dataclass(frozen=True)
class ModulusCurve:
    """Estimated continuity modulus over a radius grid.

    ``rho_hat[i]`` bounds the excess of windowed values over the base value
    for displacements up to ``radii[i]``; a running maximum keeps the curve
    nondecreasing.  ``divergent`` marks curves that met unbounded excess.
    """

    map_name: str
    base_point: np.ndarray
    window: Optional[Window]
    radii: np.ndarray
    rho_hat: np.ndarray
    sample_counts: List[int]
    seed: int
    scheme: str
    divergent: bool = False

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.rho_hat, dtype=float)
        if r.ndim != 1 or v.shape != r.shape:
            raise ValueError("radii and rho_hat must be matching 1-d arrays")
        if r.size == 0 or r[0] <= 0 or np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing and positive")
        if np.any(v < 0):
            raise ValueError("modulus values must be nonnegative")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "rho_hat", v)

    def rho_at(self, r: float) -> Optional[float]:
        """Piecewise-linear interpolation of the curve.

        Below the first grid radius the first value is used (a conservative
        bound for a nondecreasing modulus); beyond the last radius the curve
        is not extrapolated and ``None`` is returned.
        """
        if r < 0:
            raise ValueError("radius must be nonnegative")
        if r > self.radii[-1]:
            return None
        if r <= self.radii[0]:
            return float(self.rho_hat[0])
        return float(np.interp(r, self.radii, self.rho_hat))


@dataclass(frozen=True)
class HolderFit:
    """Power-law fit ``rho(r) ~ L * r**theta`` of a modulus curve."""

    L_hat: Optional[float]
    theta_hat: Optional[float]
    residual: float
    degenerate: bool

    def to_json_dict(self) -> dict:
        return {
            "L_hat": self.L_hat,
            "theta_hat": self.theta_hat,
            "residual": self.residual,
            "degenerate": self.degenerate,
        }


def estimate_modulus(
    m: SetValuedMap,
    xbar,
    k: Optional[Window],
    radii: Sequence[float],
    samples_per_radius: int = 64,
    seed: int = 0,
    scheme: str = "grid",
) -> ModulusCurve:
    """Sampled excess envelope of ``x -> A(x) ∩ K`` against the base value.

    The base value is evaluated unwindowed when the map permits it, otherwise
    with a window ten times larger than ``k``.  For every radius, sample
    points fill the ball around the base point and the worst excess is
    recorded; a running maximum enforces monotonicity in the radius.
    """
    xb = as_point(xbar, m.dim_in)
    radii = np.asarray(list(radii), dtype=float)
    if radii.size == 0 or radii[0] <= 0 or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    if samples_per_radius < 1:
        raise ValueError("samples_per_radius must be >= 1")
    if m.window_required:
        if k is None:
            raise WindowRequiredError(
                f"map {m.name!r} requires a window for modulus estimation"
            )
        reference = m.eval(xb, k.scaled(10.0))
    else:
        reference = m.eval(xb, None)
    if reference.is_empty:
        raise ValueError(f"map {m.name!r} is empty at the base point")

    offsets = sample_window(Window.ball(np.zeros(m.dim_in), 1.0), scheme, samples_per_radius, seed).points
    rho: List[float] = []
    counts: List[int] = []
    divergent = False
    running = 0.0
    for r in radii:
        worst = 0.0
        for u in offsets:
            vals = m.eval(xb + r * u, k)
            e = excess(vals, reference)
            if math.isinf(e):
                divergent = True
            worst = max(worst, e)
        running = max(running, worst)
        rho.append(running)
        counts.append(len(offsets))
    return ModulusCurve(
        map_name=m.name,
        base_point=xb,
        window=k,
        radii=radii,
        rho_hat=np.asarray(rho),
        sample_counts=counts,
        seed=seed,
        scheme=scheme,
        divergent=divergent,
    )


def fit_holder(curve: ModulusCurve) -> HolderFit:
    """Log-log least squares fit of a modulus curve.

    Zero entries carry no log-log information and are excluded; fewer than
    three positive entries makes the fit degenerate.  Divergent curves are
    refused outright.
    """
    if curve.divergent:
        raise ValueError("unbounded excess: the curve cannot be fitted")
    mask = curve.rho_hat > 0
    if int(mask.sum()) < 3:
        return HolderFit(L_hat=None, theta_hat=None, residual=0.0, degenerate=True)
    logs = np.log(curve.radii[mask])
    logv = np.log(curve.rho_hat[mask])
    slope, intercept = np.polyfit(logs, logv, 1)
    pred = slope * logs + intercept
    residual = float(np.sqrt(np.mean((pred - logv) ** 2)))
    return HolderFit(L_hat=float(np.exp(intercept)), theta_hat=float(slope), residual=residual, degenerate=False)


@dataclass(frozen=True)
class GraphTestResult:
    """Outcome of the sequential closed-graph probe."""

    verdict: str  # "pass" | "fail" | "inconclusive"
    witness: Optional[np.ndarray]
    chains_converged: int
    chains_total: int

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def closed_graph_test(
    m: SetValuedMap,
    xbar,
    k: Window,
    n_sequences: int = 8,
    tol: float = 1e-6,
    seed: int = 0,
    depth: int = 60,
    start_radius: float = 0.5,
    max_chains_per_sequence: int = 8,
) -> GraphTestResult:
    """Probe whether limits of convergent selections stay inside the base value.

    Sequences approach the base point along seeded directions with
    geometrically shrinking radii.  Selections are built by nearest-neighbor
    chaining; a chain counts as convergent when its gaps vanish with a
    geometric-type ratio and the projected remaining motion is below the
    acceptance slack.  Failure reports the violating limit; no convergent
    chain at all is inconclusive rather than a failure.
    """
    xb = as_point(xbar, m.dim_in)
    limit_tol = 0.1 * tol
    dirs = unit_directions(n_sequences, m.dim_in, seed)
    chains_total = 0
    chains_converged = 0
    for d in dirs:
        values_along = []
        for j in range(depth + 1):
            xj = xb + d * (start_radius * 2.0 ** (-j))
            values_along.append(m.eval(xj, k))
        starts = [] if values_along[0].is_empty else list(values_along[0].points[:max_chains_per_sequence])
        for y0 in starts:
            chains_total += 1
            chain = [np.asarray(y0, dtype=float)]
            broken = False
            for vals in values_along[1:]:
                if vals.is_empty:
                    broken = True
                    break
                idx = int(np.argmin(np.linalg.norm(vals.points - chain[-1], axis=1)))
                chain.append(vals.points[idx])
            if broken:
                continue
            gaps = np.linalg.norm(np.diff(np.asarray(chain), axis=0), axis=1)
            if not _chain_converged(gaps, limit_tol):
                continue
            chains_converged += 1
            limit = chain[-1]
            if m.member_dist(xb, limit, k) > tol:
                return GraphTestResult("fail", limit, chains_converged, chains_total)
    if chains_converged == 0:
        return GraphTestResult("inconclusive", None, 0, chains_total)
    return GraphTestResult("pass", None, chains_converged, chains_total)


def _chain_converged(gaps: np.ndarray, limit_tol: float) -> bool:
    """Accept chains whose tail gaps decay at a sub-unit ratio with a small
    projected remainder, plus exactly stationary chains."""
    if gaps.size == 0:
        return True
    if float(gaps[-1]) == 0.0:
        return True
    tail = gaps[-6:]
    ratios = []
    for a, b in zip(tail[:-1], tail[1:]):
        if a > 0:
            ratios.append(b / a)
    if not ratios:
        return True
    rate = float(np.median(ratios))
    if rate >= 0.97:
        return False
    remaining = float(gaps[-1]) * rate / (1.0 - rate)
    return remaining <= limit_tol


@dataclass(frozen=True)
class LojFit:
    """Envelope fit of ``d(x, S)**theta <= c * |f(x)|`` on a window."""

    theta_hat: Optional[float]
    c_hat: Optional[float]
    window: Window
    failed: bool
    level_exponents: List[float]
    max_ratio_points: List[Tuple[float, float]]  # (x-coordinate norm, ratio) diagnostics

    def to_json_dict(self) -> dict:
        return {
            "theta_hat": self.theta_hat,
            "c_hat": self.c_hat,
            "failed": self.failed,
            "level_exponents": self.level_exponents,
            "window": self.window.to_dict(),
        }


def lojasiewicz_fit(
    entry: OperatorEntry,
    k: Window,
    grid_count: int = 2001,
    levels: int = 3,
    exponent_cap: float = 100.0,
) -> LojFit:
    """Fit the distance-to-zero-set power inequality for a scalar function.

    The exponent is estimated on shrinking bands around the zero set over
    refining grids; blow-up past ``exponent_cap`` at any level sets the
    failure flag (no finite exponent works).  On success the scale is the
    exact envelope maximum of ``d**theta / |f|`` over the full grid.
    """
    if entry.f is None:
        raise MissingOracleError(f"entry {entry.name!r} has no scalar function")
    region = entry.solution_set
    if not any(k.contains(p) for p in region.reference_points()):
        raise ValueError("the solution set does not meet the window")

    def grid_eval(n: int):
        pts = sample_window(k, "grid", n, seed=0).points
        d = np.array([region.distance(p) for p in pts])
        f = np.array([entry.f(p) for p in pts])
        return pts, d, f

    pts0, d0, f0 = grid_eval(grid_count)
    mask0 = (f0 != 0.0) & (d0 > 0.0)
    if not mask0.any():
        raise ValueError("the function vanishes on the whole grid")
    d_max = float(d0[mask0].max())

    level_exponents: List[float] = []
    for level in range(levels):
        pts, d, f = grid_eval(grid_count * (2 ** level))
        band = d_max * 4.0 ** (-level)
        mask = (f != 0.0) & (d > 0.0) & (d <= band)
        if int(mask.sum()) < 5:
            continue
        slope = float(np.polyfit(np.log(d[mask]), np.log(np.abs(f[mask])), 1)[0])
        level_exponents.append(slope)
    if not level_exponents or any(not np.isfinite(t) or t > exponent_cap for t in level_exponents):
        return LojFit(None, None, k, True, level_exponents, [])

    theta = level_exponents[-1]
    ratios = d0[mask0] ** theta / np.abs(f0[mask0])
    order = np.argsort(ratios)[::-1][:3]
    diag = [(float(np.linalg.norm(pts0[mask0][i])), float(ratios[i])) for i in order]
    return LojFit(float(theta), float(ratios.max()), k, False, level_exponents, diag)


@dataclass(frozen=True)
class PlkConfig:
    """Power-law desingularization parameters ``phi(t) = M * t**(1 - q)``.

    The constructor enforces the shape constraints (positive scale, exponent
    in [0, 1), positive band height and neighborhood radius), so the
    desingularizing function is valid by construction.
    """

    M: float
    q_exp: float
    eta: float
    neighborhood_radius: float

    def __post_init__(self):
        if self.M <= 0:
            raise ValueError("M must be positive")
        if not 0.0 <= self.q_exp < 1.0:
            raise ValueError("q_exp must lie in [0, 1)")
        if self.eta <= 0 or self.neighborhood_radius <= 0:
            raise ValueError("eta and neighborhood_radius must be positive")

    def phi_prime(self, t: float) -> float:
        return self.M * (1.0 - self.q_exp) * t ** (-self.q_exp)


@dataclass(frozen=True)
class PlkResult:
    verdict: str  # "pass" | "fail" | "inconclusive"
    violations: List[np.ndarray]
    checked: int
    min_product: Optional[float]

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "checked": self.checked,
            "min_product": self.min_product,
            "violations": [[float(v) for v in p] for p in self.violations[:10]],
        }


def check_plk_exponent(
    entry: OperatorEntry,
    xbar,
    cfg: PlkConfig,
    grid_count: int = 257,
    seed: int = 0,
) -> PlkResult:
    """Test ``phi'(f(x) - f(xbar)) * d(0, subgrad f(x)) >= 1`` on the band.

    The grid covers the neighborhood ball and keeps only points with
    ``f(xbar) < f(x) < f(xbar) + eta`` (strictly).  An empty band yields an
    inconclusive verdict, never a pass.
    """
    if entry.f is None:
        raise MissingOracleError(f"entry {entry.name!r} has no scalar function")
    if entry.subgrad is None and entry.subgrad_witness is None:
        raise MissingOracleError(f"entry {entry.name!r} has no subgradient oracle")
    xb = as_point(xbar, entry.dim_in)
    fbar = entry.f(xb)
    pts = sample_window(Window.ball(xb, cfg.neighborhood_radius), "grid", grid_count, seed).points
    zero = np.zeros(entry.dim_out)
    violations: List[np.ndarray] = []
    checked = 0
    min_product = None
    for p in pts:
        fx = entry.f(p)
        if not (fbar < fx < fbar + cfg.eta):
            continue
        checked += 1
        if entry.subgrad is not None:
            slope = entry.subgrad.member_dist(p, zero)
        else:
            slope = float(np.linalg.norm(entry.subgrad_witness(p)))
        product = cfg.phi_prime(fx - fbar) * slope
        if min_product is None or product < min_product:
            min_product = product
        if product < 1.0 - 1e-12:
            violations.append(p)
    if checked == 0:
        return PlkResult("inconclusive", [], 0, None)
    return PlkResult("fail" if violations else "pass", violations, checked, min_product)


@dataclass(frozen=True)
class InverseLipschitzResult:
    c_hat: float
    verdict: str  # "full-rank" | "rank-deficient"
    bound_violations: List[np.ndarray]
    checked: int

    @property
    def full_rank(self) -> bool:
        return self.verdict == "full-rank"

    def to_json_dict(self) -> dict:
        return {
            "c_hat": self.c_hat,
            "verdict": self.verdict,
            "checked": self.checked,
            "bound_violations": [[float(v) for v in p] for p in self.bound_violations[:10]],
        }


def certify_inverse_lipschitz(
    entry: OperatorEntry,
    k: Window,
    s_samples: int = 25,
    test_samples: int = 50,
    tol: float = 1e-8,
    seed: int = 0,
    tube_radius: float = 0.1,
) -> InverseLipschitzResult:
    """Smallest-singular-value certificate for the inverse of a smooth map.

    ``c_hat`` is the minimum singular value of the Jacobian over samples of
    the solution set inside the window.  With full rank, the linearized bound
    ``d(x, S) <= (1 + tol) * ||F(x)|| / c_hat`` is spot-checked on points near
    the solution set, where ``F`` is the entry's forward map (the map whose
    zero set is the solution set and whose Jacobian is registered).
    """
    if entry.jac is None:
        raise MissingOracleError(f"entry {entry.name!r} lacks a Jacobian oracle")
    if entry.dim_out < entry.dim_in:
        raise ValueError("the range dimension must be at least the domain dimension")
    region = entry.solution_set
    anchors = [p for p in region.sample(s_samples, seed).points if k.contains(p)]
    if not anchors:
        raise ValueError("no solution-set samples inside the window")
    c_hat = math.inf
    for u in anchors:
        svals = np.linalg.svd(np.atleast_2d(entry.jac(u)), compute_uv=False)
        c_hat = min(c_hat, float(svals[-1]))
    if c_hat <= tol:
        return InverseLipschitzResult(c_hat, "rank-deficient", [], 0)

    def fvec(x: np.ndarray) -> np.ndarray:
        vals = entry.forward.eval(x)
        if len(vals) != 1:
            raise ValueError("the certificate needs a single-valued forward map")
        return vals.points[0]

    violations: List[np.ndarray] = []
    checked = 0
    per_anchor = max(1, test_samples // len(anchors))
    for i, u in enumerate(anchors):
        offs = sample_window(Window.ball(np.zeros(entry.dim_in), tube_radius), "halton", per_anchor, seed + i).points
        for o in offs:
            x = u + o
            checked += 1
            if region.distance(x) > (1.0 + tol) * float(np.linalg.norm(fvec(x))) / c_hat:
                violations.append(x)
    return InverseLipschitzResult(c_hat, "full-rank", violations, checked)


@dataclass(frozen=True)
class CalmnessResult:
    kappa_hat: float
    vacuous: bool


def calmness_estimate(
    m: SetValuedMap,
    xbar,
    ybar,
    u_radius: float,
    v_radius: float,
    samples: int = 128,
    seed: int = 0,
    scheme: str = "grid",
) -> CalmnessResult:
    """Worst sampled ratio ``d(y, A(xbar)) / ||x - xbar||`` over a local tube.

    Only output values inside the ball of radius ``v_radius`` around ``ybar``
    count, which is exactly the weakness of the calm estimate: if every
    sampled value set misses that ball, the result is flagged vacuous.
    """
    xb = as_point(xbar, m.dim_in)
    yb = as_point(ybar, m.dim_out)
    vwin = Window.ball(yb, v_radius)
    if m.member_dist(xb, yb, vwin) > 1e-9:
        raise ValueError("the base output is not a value of the map at the base point")
    if m.window_required:
        reference = m.eval(xb, vwin.scaled(10.0))
    else:
        reference = m.eval(xb, None)
    xs = sample_window(Window.ball(xb, u_radius), scheme, samples, seed).points
    kappa = 0.0
    any_nonempty = False
    for x in xs:
        dx = float(np.linalg.norm(x - xb))
        vals = m.eval(x, vwin)
        if vals.is_empty:
            continue
        if dx > 0.0:
            any_nonempty = True
        for y in vals:
            dy = float(np.min(np.linalg.norm(reference.points - y, axis=1))) if len(reference) else math.inf
            if dx == 0.0:
                continue  # 0/0 convention: contributes nothing
            kappa = max(kappa, dy / dx)
    return CalmnessResult(kappa_hat=kappa, vacuous=not any_nonempty)
