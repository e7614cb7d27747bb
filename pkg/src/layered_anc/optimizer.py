"""Rate-optimal scaling vectors.

:func:`optimize_network` walks the layers in order and, for each one, picks
the scaling factors that maximize the product of ``1 + SNR`` over the next
layer's nodes. :func:`brute_force_optimize` is an exhaustive nested grid over
the whole feasible region and serves as the global reference.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize as sopt

from .network import LayeredNetwork, ScalingVector
from .propagation import (FEASIBILITY_RTOL, LayerState, check_feasibility,
                          initial_state, rate_from_snr, snr_destination, step)

log = logging.getLogger(__name__)

TIE_RTOL = 1e-12
BRUTE_MAX_RELAYS = 6
MAX_CORNER_DIM = 12
_CHUNK_ROWS = 400_000


@dataclass(frozen=True)
class SolverConfig:
    restarts: int = 16
    grid_points_per_dim: int = 201
    tol: float = 1e-10
    max_iter: int = 500
    allow_negative_beta: bool = True
    seed: int = 0
    fd_step: float = 1e-6

    def __post_init__(self):
        if self.restarts < 1 or self.grid_points_per_dim < 2:
            raise ValueError("restarts must be >= 1 and grid_points_per_dim >= 2")
        if not (self.tol > 0 and self.max_iter > 0 and self.fd_step > 0):
            raise ValueError("tol, max_iter and fd_step must be positive")


def signed_search(network: LayeredNetwork, config: SolverConfig) -> bool:
    """Whether negative scaling factors are searched.

    Flipping signs cannot raise ``h_s**2`` when every gain is non-negative,
    so such networks are searched on ``[0, beta_max]`` only.
    """
    return config.allow_negative_beta and not network.all_gains_nonnegative


@dataclass
class LayerDiagnostics:
    layer: int
    objective: float
    iterations: int = 0
    restarts: int = 0
    at_bound: tuple[bool, ...] = ()
    evaluations: int = 0


@dataclass
class OptimizationResult:
    beta_opt: ScalingVector
    snr: float
    rate: float
    per_layer_diagnostics: list[LayerDiagnostics] = field(default_factory=list)
    method: str = "layered"

    def to_dict(self) -> dict:
        return {"method": self.method,
                "beta_opt": [list(b) for b in self.beta_opt.beta],
                "snr": self.snr, "rate": self.rate,
                "per_layer_diagnostics": [asdict(d) for d in self.per_layer_diagnostics]}

    def csv_rows(self) -> list[dict]:
        return [{"layer": l, "node": j + 1, "beta": b, "snr": self.snr, "rate": self.rate}
                for l, layer in enumerate(self.beta_opt.beta, start=1)
                for j, b in enumerate(layer)]


class InfeasibleScalingError(ValueError):
    pass


# --- per-layer subproblem ----------------------------------------------------

def _prefix_state(network: LayeredNetwork, prefix: Sequence[Sequence[float]]) -> LayerState:
    state = initial_state(network)
    for b in prefix:
        state = step(network, state, np.asarray(b, dtype=float)[None, :])
    return state


def _log_objective(network: LayeredNetwork, state: LayerState, betas: np.ndarray) -> np.ndarray:
    """``sum log(1 + SNR)`` over the next layer for each row of ``betas``."""
    nxt = step(network, state.repeat(len(betas)), betas)
    return np.log1p(nxt.snr(network)).sum(axis=1)


def layer_subproblem_objective(network: LayeredNetwork, prefix: Sequence[Sequence[float]],
                               beta_l: Sequence[float]) -> float:
    """Product of ``1 + SNR`` over the nodes following layer ``len(prefix) + 1``.

    ``prefix`` holds the fixed scaling vectors of the earlier layers.
    """
    state = _prefix_state(network, prefix)
    beta_l = np.asarray(beta_l, dtype=float)
    bmax = state.beta_max(network)[0]
    over = np.flatnonzero(beta_l ** 2 > bmax ** 2 * (1 + FEASIBILITY_RTOL))
    if over.size:
        nodes = [(state.layer, int(j) + 1) for j in over]
        raise InfeasibleScalingError(f"scaling exceeds its bound at {nodes}")
    return float(np.exp(_log_objective(network, state, beta_l[None, :])[0]))


@dataclass
class LayerSolution:
    beta: np.ndarray
    objective: float
    diagnostics: LayerDiagnostics


def _fd_gradient(f: Callable[[np.ndarray], np.ndarray], X: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradients of a batched scalar function at rows of ``X``."""
    K, n = X.shape
    E = np.eye(n) * h
    pts = np.concatenate([X[:, None, :] + E[None], X[:, None, :] - E[None]], axis=1)
    vals = f(pts.reshape(-1, n)).reshape(K, 2 * n)
    return (vals[:, :n] - vals[:, n:]) / (2 * h)


def _projected_ascent(f, X, lo, config: SolverConfig):
    """Lock-step projected gradient ascent with Armijo backtracking on ``[lo, 1]^n``."""
    K = len(X)
    fx = f(X)
    t = np.ones(K)
    active = np.ones(K, dtype=bool)
    iters = 0
    for _ in range(config.max_iter):
        if not active.any():
            break
        iters += 1
        idx = np.flatnonzero(active)
        g = _fd_gradient(f, X[idx], config.fd_step)
        gnorm = np.linalg.norm(g, axis=1)
        step_len = t[idx] / np.maximum(gnorm, 1e-300)
        accepted = np.zeros(len(idx), dtype=bool)
        newX, newf = X[idx].copy(), fx[idx].copy()
        pending = gnorm > 0
        for _ in range(60):
            if not pending.any():
                break
            p = np.flatnonzero(pending)
            cand = np.clip(X[idx[p]] + step_len[p, None] * g[p], lo, 1.0)
            fc = f(cand)
            gain = np.einsum("kn,kn->k", g[p], cand - X[idx[p]])
            ok = fc >= fx[idx[p]] + 1e-4 * gain
            ok &= gain > 0
            hit = p[ok]
            newX[hit], newf[hit] = cand[ok], fc[ok]
            accepted[hit] = True
            pending[hit] = False
            step_len[p[~ok]] *= 0.5
        moved = np.abs(newf - fx[idx])
        X[idx], fx[idx] = newX, newf
        t[idx] = np.where(accepted, np.minimum(2 * step_len * gnorm, 1e6), t[idx])
        # log objective, so an absolute change is a relative change of the product
        done = ~accepted | (moved < config.tol)
        active[idx[done]] = False
    return X, fx, iters


def _refine(f, x, lo, sweeps=3):
    """Coordinate-wise bounded 1-D maximization starting from ``x``."""
    x = x.copy()
    fx = f(x[None])[0]
    for _ in range(sweeps):
        improved = False
        for i in range(len(x)):
            def neg(v, i=i):
                y = x.copy()
                y[i] = v
                return -f(y[None])[0]
            res = sopt.minimize_scalar(neg, bounds=(lo, 1.0), method="bounded",
                                       options={"xatol": 1e-12})
            if -res.fun > fx:
                x[i], fx, improved = res.x, -res.fun, True
        if not improved:
            break
    return x, fx


def _tie_order(betas: np.ndarray) -> np.ndarray:
    """Rows sorted by transmit-power proxy ``sum beta^2``, then lexicographically."""
    return np.lexsort([*betas.T[::-1], (betas ** 2).sum(axis=1)])


def _pick_beta(vals: np.ndarray, betas: np.ndarray) -> int:
    """Best row; near-ties go to the lower transmit power, then lexicographic."""
    best = vals.max()
    tied = np.flatnonzero(vals >= best - TIE_RTOL * max(1.0, abs(best)))
    return int(tied[_tie_order(betas[tied])[0]])


def _pick(cands: np.ndarray, vals: np.ndarray, bmax: np.ndarray) -> int:
    return _pick_beta(vals, cands * bmax)


def optimize_layer(network: LayeredNetwork, prefix: Sequence[Sequence[float]],
                   layer: int | None = None,
                   config: SolverConfig = SolverConfig()) -> LayerSolution:
    """Maximize the next layer's ``prod(1 + SNR)`` over the layer-``l`` box.

    Candidates are the box corners, a multi-start projected gradient ascent
    (finite-difference gradients) and a coordinate-wise refinement of the
    best point found.
    """
    layer = len(prefix) + 1 if layer is None else layer
    if layer != len(prefix) + 1:
        raise ValueError(f"prefix covers {len(prefix)} layers; cannot solve layer {layer}")
    state = _prefix_state(network, prefix)
    bmax = state.beta_max(network)[0]
    n = len(bmax)
    lo = -1.0 if signed_search(network, config) else 0.0
    active = bmax > 0

    def f(U):
        return _log_objective(network, state, U * bmax)

    cands, vals = [], []
    if n <= MAX_CORNER_DIM:
        corners = np.array(list(itertools.product((lo, 1.0), repeat=n))) * active
        cands.append(corners)
        vals.append(f(corners))

    rng = np.random.default_rng([config.seed, layer])
    starts = [cands[0][np.argmax(vals[0])]] if cands else [np.ones(n) * active]
    starts += list(rng.uniform(lo, 1.0, size=(config.restarts - 1, n)) * active)
    X, fx, iters = _projected_ascent(f, np.array(starts), lo, config)
    cands.append(X)
    vals.append(fx)

    allc, allv = np.concatenate(cands), np.concatenate(vals)
    xr, fr = _refine(f, allc[np.argmax(allv)] * active, lo)
    allc = np.concatenate([allc, (xr * active)[None]])
    allv = np.concatenate([allv, [fr]])

    k = _pick(allc, allv, bmax)
    u = allc[k]
    diag = LayerDiagnostics(layer, float(np.exp(allv[k])), iters, config.restarts,
                            tuple(bool(abs(v) >= 1 - 1e-9) for v in u), len(allv))
    return LayerSolution(u * bmax, diag.objective, diag)


def optimize_network(network: LayeredNetwork, config: SolverConfig = SolverConfig(),
                     log_base: float = 2.0) -> OptimizationResult:
    """Layer-by-layer optimization, each layer's bounds taken from the fixed prefix."""
    prefix, diags = [], []
    for l in range(1, network.num_relay_layers + 1):
        sol = optimize_layer(network, prefix, l, config)
        prefix.append(sol.beta)
        diags.append(sol.diagnostics)
    beta = ScalingVector.from_arrays(prefix)
    report = check_feasibility(network, beta)
    if not report.feasible:  # pragma: no cover - would indicate a solver bug
        raise InfeasibleScalingError(f"solver produced infeasible beta at {report.violations}")
    snr = snr_destination(network, beta)
    return OptimizationResult(beta, snr, float(rate_from_snr(snr, log_base)), diags)


# --- brute force -------------------------------------------------------------

class BruteForceSizeError(ValueError):
    pass


def _unit_grid(lo: float, points: int) -> np.ndarray:
    return np.linspace(lo, 1.0, points)


def _last_axis_grid_max(A, c, d, e, m, bound, units):
    """Grid maximum of ``(A + c b)^2 / (d + e b + m b^2)`` over ``b = bound * units``.

    The ratio has at most two critical points: the zero of ``A + c b`` (a
    minimum) and ``b* = (A e - 2 c d) / (c e - 2 A m)``. It is monotone
    between them, so the grid maximum sits at an end point or next to
    ``b*``. Returns per-row maxima and the grid index attaining each.
    """
    G = len(units)
    lo, span = bound * units[0], bound * (units[-1] - units[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = ((A * e - 2 * c * d) / (c * e - 2 * A * m) - lo) / span * (G - 1)
    np.nan_to_num(pos, copy=False, nan=0.0, posinf=0.0, neginf=0.0)
    base = np.clip(pos, 0, G - 2).astype(np.intp)
    cand = np.stack([np.zeros_like(base), base, base + 1, np.full_like(base, G - 1)])
    b = bound * units[cand]
    vals = (A + c * b) ** 2 / (d + b * (e + m * b))
    top = vals.max(axis=0)
    tied = vals >= top - TIE_RTOL * np.maximum(1.0, np.abs(top))
    # ties go to the smaller b^2, then the smaller b, as the full scan would
    sq = np.where(tied, b * b, np.inf)
    low = sq == sq.min(axis=0)
    choice = np.argmin(np.where(low, b, np.inf), axis=0)
    pick = lambda a: np.take_along_axis(a, choice[None], 0)[0]
    return pick(vals), pick(cand)


@dataclass
class _Best:
    snr: float = -np.inf
    beta: np.ndarray | None = None
    evaluations: int = 0

    def offer(self, snr: float, beta: np.ndarray):
        beta = np.asarray(beta, dtype=float)
        tol = TIE_RTOL * max(1.0, abs(snr), abs(self.snr) if self.beta is not None else 0.0)
        if self.beta is not None and abs(snr - self.snr) <= tol:
            if _tie_order(np.stack([beta, self.beta]))[0] != 0:
                return
            snr = max(snr, self.snr)
        elif snr < self.snr:
            return
        self.snr, self.beta = float(snr), beta


def _last_layer_forms(network: LayeredNetwork, state: LayerState):
    """Linear and quadratic forms of the destination in the last layer's scaling.

    ``h_s = c . beta`` and ``sum h_lj^2 = beta' S beta``; a node's own noise
    is orthogonal to every other origin, hence the identity term.
    """
    g = network.gain_matrices[-1][:, 0] * network.connected_mask[-1]
    c = state.signal * g
    gram = np.einsum("bjo,bko->bjk", state.noise, state.noise)
    gram += np.eye(len(g))
    return c, gram * np.outer(g, g)


def brute_force_optimize(network: LayeredNetwork, config: SolverConfig = SolverConfig(),
                         log_base: float = 2.0, *, reduce_last: bool = True) -> OptimizationResult:
    """Exhaustive nested grid over the feasible region.

    Each layer's grid is rebuilt from the bounds implied by every grid point
    of the earlier layers. With ``reduce_last`` the final coordinate is
    maximized over its grid in closed form (same answer as scanning it).
    """
    if network.num_relays > BRUTE_MAX_RELAYS:
        raise BruteForceSizeError(
            f"brute force is limited to {BRUTE_MAX_RELAYS} relays, got {network.num_relays}")
    G = config.grid_points_per_dim
    units = _unit_grid(-1.0 if signed_search(network, config) else 0.0, G)
    L = network.num_relay_layers
    k_snr = network.source_power / network.noise_variance
    best = _Best()

    def search(state: LayerState, prefix: np.ndarray):
        l = state.layer
        bmax = state.beta_max(network)
        n = bmax.shape[1]
        free = n - 1 if (l == L and reduce_last) else n
        combos = np.array(list(itertools.product(units, repeat=free)),
                          dtype=float).reshape(len(units) ** free, free)
        per_row = len(combos)
        chunk = max(1, _CHUNK_ROWS // per_row)
        for s in range(0, len(prefix), chunk):
            rows = slice(s, s + chunk)
            sub = state.take(rows)
            B = sub.signal.shape[0]
            bm = bmax[rows]
            betas = bm[:, None, :free] * combos[None]
            if free == n and l < L:
                flat = betas.reshape(B * per_row, n)
                pre = np.concatenate([np.repeat(prefix[rows], per_row, axis=0), flat], axis=1)
                search(step(network, sub.repeat(per_row), flat), pre)
                continue
            if free == n:
                nxt = step(network, sub.repeat(per_row), betas.reshape(B * per_row, n))
                snr = (k_snr * nxt.signal[:, 0] ** 2 / (1 + nxt.noise_energy[:, 0]))
                snr = snr.reshape(B, per_row)
                last = None
            else:
                # last layer: SNR = k (c . beta)^2 / (1 + beta' S beta), shapes (B, P)
                cvec, S = _last_layer_forms(network, sub)
                A = np.einsum("bpf,bf->bp", betas, cvec[:, :free])
                d = 1 + np.einsum("bpf,bpf->bp",
                                  np.einsum("bpf,bfg->bpg", betas, S[:, :free, :free]), betas)
                e = 2 * np.einsum("bpf,bf->bp", betas, S[:, :free, free])
                c = np.broadcast_to(cvec[:, free, None], A.shape)
                m = np.broadcast_to(S[:, free, free, None], A.shape)
                bound = np.broadcast_to(bm[:, -1, None], A.shape)
                val, k = _last_axis_grid_max(A, c, d, e, m, bound, units)
                snr = k_snr * val
                last = bound * units[k]
            best.evaluations += snr.size * (1 if last is None else G)
            top = snr.max()
            ii, pp = np.nonzero(snr >= top - TIE_RTOL * max(1.0, abs(top)))
            cand = [prefix[s + ii], betas[ii, pp]]
            if last is not None:
                cand.append(last[ii, pp][:, None])
            full = np.concatenate(cand, axis=1)
            r = _pick_beta(snr[ii, pp], full)
            best.offer(snr[ii[r], pp[r]], full[r])

    search(initial_state(network), np.zeros((1, 0)))
    sizes = np.cumsum((0,) + network.layer_sizes)
    beta = ScalingVector.from_arrays(best.beta[a:b] for a, b in zip(sizes[:-1], sizes[1:]))
    snr = snr_destination(network, beta)
    diags = _diagnostics_at(network, beta)
    diags[-1].evaluations = best.evaluations
    return OptimizationResult(beta, snr, float(rate_from_snr(snr, log_base)), diags,
                              method="brute")


def _diagnostics_at(network: LayeredNetwork, beta: ScalingVector) -> list[LayerDiagnostics]:
    state = initial_state(network)
    out = []
    for l, b in enumerate(beta.arrays(), start=1):
        bmax = state.beta_max(network)[0]
        obj = float(np.exp(_log_objective(network, state, b[None])[0]))
        at = tuple(bool(m > 0 and abs(x) >= m * (1 - 1e-9)) for x, m in zip(b, bmax))
        out.append(LayerDiagnostics(l, obj, at_bound=at))
        state = step(network, state, b[None])
    return out


# --- stationarity ------------------------------------------------------------

class StepSizeError(ArithmeticError):
    pass


def numeric_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def numeric_hessian(f: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    """Second-order central differences, symmetrized."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    H = np.zeros((n, n))
    f0 = f(x)
    E = np.eye(n) * h
    for i in range(n):
        H[i, i] = (f(x + E[i]) - 2 * f0 + f(x - E[i])) / h ** 2
        for j in range(i + 1, n):
            H[i, j] = H[j, i] = (f(x + E[i] + E[j]) - f(x + E[i] - E[j])
                                 - f(x - E[i] + E[j]) + f(x - E[i] - E[j])) / (4 * h * h)
    return H


@dataclass
class StationarityReport:
    beta: np.ndarray
    snr: float
    gradient: np.ndarray
    hessian: np.ndarray
    eigenvalues: np.ndarray
    determinant: float
    classification: str

    @property
    def gradient_norm(self) -> float:
        return float(np.linalg.norm(self.gradient))

    def to_dict(self) -> dict:
        return {"beta": self.beta.tolist(), "snr": self.snr,
                "gradient": self.gradient.tolist(), "gradient_norm": self.gradient_norm,
                "hessian": self.hessian.tolist(), "eigenvalues": self.eigenvalues.tolist(),
                "determinant": self.determinant, "classification": self.classification}


def snr_function(network: LayeredNetwork) -> Callable[[np.ndarray], float]:
    """Destination SNR as a function of the flat scaling vector."""
    sizes = np.cumsum((0,) + network.layer_sizes)

    def f(x):
        x = np.asarray(x, dtype=float)
        return snr_destination(network, ScalingVector.from_arrays(
            x[a:b] for a, b in zip(sizes[:-1], sizes[1:])))
    return f


def stationarity_check(network: LayeredNetwork, beta, *, step_size: float = 1e-5,
                       gtol: float = 1e-6, htol: float = 1e-6) -> StationarityReport:
    """Finite-difference gradient and Hessian of the destination SNR at ``beta``.

    The point is classified as ``max``, ``min``, ``saddle`` or ``degenerate``
    when the gradient norm is below ``gtol``, otherwise ``nonstationary``.
    ``htol`` is relative to the largest Hessian eigenvalue magnitude.
    """
    if network.num_relays > 3:
        raise ValueError("stationarity analysis is limited to 3 relays")
    x = (beta.flat() if isinstance(beta, ScalingVector) else np.asarray(beta, dtype=float))
    h = step_size * max(1.0, float(np.abs(x).max(initial=0.0)))
    if h <= np.finfo(float).tiny or np.any(x + h == x):
        raise StepSizeError(f"step {h:g} underflows at beta={x}")
    f = snr_function(network)
    g = numeric_gradient(f, x, h)
    H = numeric_hessian(f, x, np.sqrt(h))
    eig = np.linalg.eigvalsh(H)
    scale = max(np.abs(eig).max(), 1e-300)
    if np.linalg.norm(g) >= gtol:
        kind = "nonstationary"
    elif np.any(np.abs(eig) < htol * scale):
        kind = "degenerate"
    elif np.all(eig < 0):
        kind = "max"
    elif np.all(eig > 0):
        kind = "min"
    else:
        kind = "saddle"
    return StationarityReport(x, f(x), g, H, eig, float(np.linalg.det(H)), kind)


# --- two-relay diamond ---------------------------------------------------------

@dataclass(frozen=True)
class DiamondGains:
    h_s1: float
    h_s2: float
    h_1t: float
    h_2t: float

    @classmethod
    def of(cls, network: LayeredNetwork) -> "DiamondGains":
        if network.layer_sizes != (2,):
            raise ValueError("not a two-relay diamond network")
        s, t = (0, 1), network.destination
        return cls(network.gain(s, (1, 1)), network.gain(s, (1, 2)),
                   network.gain((1, 1), t), network.gain((1, 2), t))

    @property
    def weights(self) -> np.ndarray:
        """Coefficients of the source term: ``h_s = w . beta``."""
        return np.array([self.h_s1 * self.h_1t, self.h_s2 * self.h_2t])

    def null_line_point(self, beta2: float) -> np.ndarray:
        """Point with ``h_s = 0`` for the given second relay scaling."""
        w = self.weights
        return np.array([-w[1] / w[0] * beta2, beta2])

    def critical_residuals(self, beta: np.ndarray) -> np.ndarray:
        """Zero exactly where both partial derivatives vanish with ``h_s != 0``.

        ``w_i (1 + sum_k h_kt^2 beta_k^2) - (w . beta) h_it^2 beta_i`` for
        ``i = 1, 2``; this is the pair of interior-maximum conditions
        rearranged to avoid division.
        """
        w = self.weights
        d = np.array([self.h_1t ** 2, self.h_2t ** 2])
        q = 1 + d @ (beta ** 2)
        return w * q - (w @ beta) * d * beta


@dataclass
class DiamondAnalysis:
    line_points: list[StationarityReport]
    slope_sign_ok: bool
    interior_roots: list[np.ndarray]
    min_residual: float


def diamond_analysis(network: LayeredNetwork, beta_bounds: Sequence[float] | None = None,
                     samples: int = 9, starts: int = 15, seed: int = 0) -> DiamondAnalysis:
    """Stationary-point structure of a diamond's destination SNR.

    Samples the ``h_s = 0`` line and checks first- and second-order
    behaviour there, checks that the slope along the source weights flips
    sign across that line, and searches ``|beta_i| <= bound_i`` for roots of
    the interior-maximum conditions from a grid of starting points.
    """
    dg = DiamondGains.of(network)
    if beta_bounds is None:
        from .propagation import full_power_beta
        beta_bounds = full_power_beta(network).flat()
    bounds = np.asarray(beta_bounds, dtype=float)
    f = snr_function(network)
    w = dg.weights

    reports = []
    slope_ok = True
    rng = np.random.default_rng(seed)
    for b2 in np.linspace(-bounds[1], bounds[1], samples):
        p = dg.null_line_point(b2)
        reports.append(stationarity_check(network, p))
        for _ in range(4):
            delta = rng.normal(size=2) * 1e-4
            side = np.sign(w @ delta)
            g = numeric_gradient(f, p + delta, 1e-7)
            slope_ok &= bool(np.all(np.sign(g) == side * np.sign(w)))

    roots = []
    min_res = np.inf
    grid = np.linspace(-1, 1, starts)
    for u1, u2 in itertools.product(grid, grid):
        x0 = np.array([u1, u2]) * bounds
        sol = sopt.root(dg.critical_residuals, x0, method="hybr")
        res = float(np.linalg.norm(dg.critical_residuals(sol.x)))
        inside = np.all(np.abs(sol.x) <= bounds * (1 + 1e-9))
        if inside:
            min_res = min(min_res, res)
        if sol.success and res < 1e-10 and inside:
            roots.append(sol.x)
    return DiamondAnalysis(reports, slope_ok, roots, min_res)
