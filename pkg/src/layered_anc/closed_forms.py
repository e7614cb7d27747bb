"""Closed-form results for linear chains and equal-gain layered (ECGAL) networks."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .network import LayeredNetwork, fully_connected, linear_chain
from .propagation import rate_from_snr


@dataclass(frozen=True)
class LinearChainSpec:
    """Chain ``s -> 1 -> ... -> L -> t``; ``gains[l]`` is the hop into node ``l+1``."""

    gains: tuple[float, ...]
    source_power: float
    relay_powers: tuple[float, ...]
    noise_variance: float

    def __post_init__(self):
        object.__setattr__(self, "gains", tuple(float(g) for g in self.gains))
        object.__setattr__(self, "relay_powers", tuple(float(p) for p in self.relay_powers))
        if len(self.gains) < 2 or len(self.relay_powers) != len(self.gains) - 1:
            raise ValueError("need L+1 gains and L relay powers with L >= 1")
        if min(self.relay_powers) <= 0 or self.source_power <= 0 or self.noise_variance <= 0:
            raise ValueError("powers and noise variance must be positive")

    @property
    def L(self) -> int:
        return len(self.relay_powers)

    @classmethod
    def equal(cls, L: int, h: float, P: float, noise_variance: float) -> "LinearChainSpec":
        return cls((h,) * (L + 1), P, (P,) * L, noise_variance)

    def network(self) -> LayeredNetwork:
        return linear_chain(self.gains, self.source_power, self.relay_powers,
                            self.noise_variance)


def linear_beta_max_recursion(spec: LinearChainSpec) -> np.ndarray:
    """Maximum scaling of every relay, each earlier relay already at its maximum."""
    h, s2 = spec.gains, spec.noise_variance
    betas = []
    for l in range(1, spec.L + 1):
        sig = h[0] * math.prod(betas[i] * h[i + 1] for i in range(l - 1))
        noise = sum(math.prod(betas[j] * h[j + 1] for j in range(i, l - 1)) ** 2
                    for i in range(l - 1))
        betas.append(math.sqrt(spec.relay_powers[l - 1]
                               / (spec.source_power * sig ** 2 + s2 * (1 + noise))))
    return np.array(betas)


def linear_snr(spec: LinearChainSpec, beta: Sequence[float], node: int) -> float:
    """Received SNR at chain node ``node`` (``L + 1`` is the destination)."""
    if not 1 <= node <= spec.L + 1:
        raise ValueError(f"node must be in 1..{spec.L + 1}")
    h = spec.gains
    bh = [beta[i] * h[i + 1] for i in range(node - 1)]
    num = (h[0] * math.prod(bh)) ** 2
    den = 1 + sum(math.prod(bh[i:]) ** 2 for i in range(node - 1))
    return spec.source_power / spec.noise_variance * num / den


def linear_equal_closed_form(L: int, h: float, P: float, noise_variance: float) -> float:
    """Best destination SNR of an equal-gain, equal-power chain (source power ``P``).

    ``gamma * r**L * (1 - r) / (1 - r**(L+1))`` with ``gamma = h^2 P / sigma^2``
    and ``r = (beta h)^2 = h^2 P / (h^2 P + sigma^2)``.
    """
    gamma = h * h * P / noise_variance
    if gamma <= 0:
        raise ValueError("h^2 P / sigma^2 must be positive")
    r = h * h * P / (h * h * P + noise_variance)
    if r == 1.0:
        ratio = 1.0 / (L + 1)
    else:
        ratio = -math.expm1(math.log(r)) / -math.expm1((L + 1) * math.log(r))
    return gamma * ratio * r ** L


def chain_rate_envelope(L: int, h: float, P: float, noise_variance: float) -> float:
    """Asymptotic rate envelope ``gamma^2 / (2 L (1 + gamma))`` for long equal chains."""
    gamma = h * h * P / noise_variance
    return gamma ** 2 / (2 * L * (1 + gamma))


@dataclass(frozen=True)
class EcgalSpec:
    """``L`` layers of ``N`` relays, full connectivity, one gain ``h`` on every link."""

    N: int
    L: int
    h: float
    P: float
    source_power: float
    noise_variance: float

    def __post_init__(self):
        if self.N < 1 or self.L < 1:
            raise ValueError("N and L must be >= 1")
        if self.P <= 0 or self.source_power <= 0 or self.noise_variance <= 0:
            raise ValueError("powers and noise variance must be positive")

    @property
    def x(self) -> float:
        return self.N * self.h ** 2 * self.P / self.noise_variance

    @classmethod
    def from_x(cls, N: int, L: int, x: float, source_power: float) -> "EcgalSpec":
        """Unit gain and noise, relay power ``x / N``."""
        return cls(N, L, 1.0, x / N, source_power, 1.0)


def ecgal_build(spec: EcgalSpec) -> LayeredNetwork:
    return fully_connected((spec.N,) * spec.L, spec.h, spec.P, spec.source_power,
                           spec.noise_variance)


def ecgal_symmetric_beta_max(spec: EcgalSpec) -> np.ndarray:
    """Common per-layer maximum scaling, earlier layers at their maxima."""
    N, h, s2 = spec.N, spec.h, spec.noise_variance
    betas: list[float] = []
    for l in range(1, spec.L + 1):
        amp = [N * b * h for b in betas]
        sig = (h * math.prod(amp)) ** 2 * spec.source_power / s2
        noise = N * sum((betas[i] * h * math.prod(amp[i + 1:])) ** 2 for i in range(l - 1))
        betas.append(math.sqrt(spec.P / s2 / (sig + noise + 1)))
    return np.array(betas)


def ecgal_opt_snr(spec: EcgalSpec, beta: Sequence[float] | None = None) -> float:
    """Destination SNR with every relay of layer ``l`` at ``beta[l-1]``.

    Defaults to the per-layer maxima, which is the optimum for these networks.
    """
    b2 = np.asarray(ecgal_symmetric_beta_max(spec) if beta is None else beta, float) ** 2
    N, h, L = spec.N, spec.h, spec.L
    nh2 = (N * h) ** 2
    # tail[l] = prod_{i >= l} beta_i^2 (0-based)
    tail = np.cumprod(b2[::-1])[::-1]
    num = nh2 ** L * tail[0]
    den = 1 + N * h * h * sum(nh2 ** (L - l) * tail[l - 1] for l in range(1, L + 1))
    return h * h * spec.source_power / spec.noise_variance * num / den


def mac_cutset_bound(N: int, x: float, log_base: float = 2.0) -> float:
    """Cut-set bound across the last cut, ``0.5 log(1 + N x)``."""
    return float(rate_from_snr(N * x, log_base))


def case1_leading_order(spec: EcgalSpec) -> float:
    """Small source power approximation, leading order in ``N``."""
    s2 = spec.noise_variance
    return (spec.N ** 2 * spec.source_power / s2) * spec.x / (1 + spec.L / spec.N)


def case2_leading_order(spec: EcgalSpec) -> float:
    """Large source power approximation, leading order in ``N``."""
    return spec.N * spec.x / (1 + spec.L / spec.N)


def leading_order_deviation(approx: float, spec: EcgalSpec) -> float:
    """Relative deviation of an approximation from the exact optimal SNR."""
    exact = ecgal_opt_snr(spec)
    return abs(approx - exact) / exact


def first_cut_snr_bound(spec: EcgalSpec) -> float:
    """SNR of the source broadcast to layer 1 with ideal combining; no relay scheme beats it."""
    return spec.N * spec.h ** 2 * spec.source_power / spec.noise_variance


@dataclass(frozen=True)
class GapRow:
    L: int
    x: float
    C: float
    R: float

    @property
    def gap(self) -> float:
        return self.C - self.R


def gap_sweep(N: int, layers: Iterable[int], xs: Iterable[float],
              source_power: float = 1e6, log_base: float = 2.0) -> list[GapRow]:
    """Cut-set bound vs ANC rate over ``x`` for each layer count (L outer, x inner)."""
    xs = list(xs)
    rows = []
    for L in layers:
        for x in xs:
            spec = EcgalSpec.from_x(N, L, x, source_power)
            R = float(rate_from_snr(ecgal_opt_snr(spec), log_base))
            rows.append(GapRow(L, float(x), mac_cutset_bound(N, x, log_base), R))
    return rows


def gap_csv(rows: Sequence[GapRow], unit: str = "bits") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["L", "x", f"C_{unit}", f"R_{unit}", f"gap_{unit}"])
    for r in rows:
        w.writerow([r.L, repr(r.x), repr(r.C), repr(r.R), repr(r.gap)])
    return buf.getvalue()
