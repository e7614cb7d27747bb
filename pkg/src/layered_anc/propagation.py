"""Signal and noise propagation through an amplify-and-forward layered network.

Every node's received signal is ``a * x_s + sum_o b_o * z_o + z_own``. The
coefficients are pushed forward one layer at a time; the batched helpers
(:class:`LayerState`, :func:`initial_state`, :func:`step`) carry a leading
batch axis so that optimizers can evaluate many candidate scaling vectors
in one call.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .network import LayeredNetwork, Node, ScalingVector, enumerate_paths

FEASIBILITY_RTOL = 1e-9


@dataclass(frozen=True)
class LayerState:
    """Received-signal coefficients for every node of one layer, batched.

    ``signal`` has shape ``(B, n_l)``; ``noise`` has shape ``(B, n_l, R)``
    where ``R`` counts the relays of all earlier layers (noise origins), in
    :meth:`LayeredNetwork.relays` order. A node's own noise is implicit.
    """

    layer: int
    signal: np.ndarray
    noise: np.ndarray

    @property
    def noise_energy(self) -> np.ndarray:
        return np.einsum("bno,bno->bn", self.noise, self.noise)

    def received_power(self, network: LayeredNetwork) -> np.ndarray:
        return (self.signal ** 2 * network.source_power
                + network.noise_variance * (1.0 + self.noise_energy))

    def snr(self, network: LayeredNetwork) -> np.ndarray:
        return (network.source_power * self.signal ** 2
                / (network.noise_variance * (1.0 + self.noise_energy)))

    def beta_max(self, network: LayeredNetwork) -> np.ndarray:
        p = network.power_arrays[self.layer - 1]
        bmax = np.sqrt(p / self.received_power(network))
        return np.where(network.connected_mask[self.layer - 1], bmax, 0.0)

    def take(self, index) -> "LayerState":
        return LayerState(self.layer, self.signal[index], self.noise[index])

    def repeat(self, times: int) -> "LayerState":
        return LayerState(self.layer, np.repeat(self.signal, times, axis=0),
                          np.repeat(self.noise, times, axis=0))


def initial_state(network: LayeredNetwork, batch: int = 1) -> LayerState:
    """State at layer 1: only the source signal and the node's own noise."""
    g0 = network.gain_matrices[0][0]
    return LayerState(1, np.tile(g0, (batch, 1)),
                      np.zeros((batch, len(g0), 0)))


def step(network: LayeredNetwork, state: LayerState, beta: np.ndarray) -> LayerState:
    """Propagate from layer ``l`` to ``l+1`` given layer-``l`` scaling ``(B, n_l)``."""
    l = state.layer
    beta = np.asarray(beta, dtype=float) * network.connected_mask[l - 1]
    g = network.gain_matrices[l]
    signal = (state.signal * beta) @ g
    upstream = np.einsum("bjo,bj,jk->bko", state.noise, beta, g)
    own = beta[:, None, :] * g.T[None, :, :]
    return LayerState(l + 1, signal, np.concatenate([upstream, own], axis=2))


def propagate_batch(network: LayeredNetwork, betas: Sequence[np.ndarray],
                    upto: int | None = None) -> list[LayerState]:
    """States of layers ``1..upto`` (default: destination) for batched betas.

    ``betas[l-1]`` has shape ``(B, n_l)``; only the layers before ``upto``
    are used.
    """
    upto = network.num_relay_layers + 1 if upto is None else upto
    batch = np.asarray(betas[0]).shape[0] if betas else 1
    states = [initial_state(network, batch)]
    for l in range(1, upto):
        states.append(step(network, states[-1], betas[l - 1]))
    return states


def _betas(network: LayeredNetwork, beta: ScalingVector) -> list[np.ndarray]:
    beta.check_shape(network)
    return [b[None, :] for b in beta.arrays()]


def effective_beta(network: LayeredNetwork, beta: ScalingVector) -> ScalingVector:
    """``beta`` with disconnected relays forced to zero."""
    beta.check_shape(network)
    return ScalingVector.from_arrays(
        b * m for b, m in zip(beta.arrays(), network.connected_mask))


@dataclass(frozen=True)
class PropagationState:
    """Per-node source coefficient and noise coefficients keyed by origin relay."""

    signal_coeff: dict[Node, float]
    noise_coeffs: dict[Node, dict[Node, float]]

    def destination_gains(self, network: LayeredNetwork) -> tuple[float, dict[Node, float]]:
        t = network.destination
        return self.signal_coeff[t], dict(self.noise_coeffs[t])


def forward_propagate(network: LayeredNetwork, beta: ScalingVector) -> PropagationState:
    """Coefficients at every relay and at the destination, in polynomial time."""
    states = propagate_batch(network, _betas(network, beta))
    origins = network.relays()
    signal, noise = {}, {}
    for st in states:
        for j in range(st.signal.shape[1]):
            node = (st.layer, j + 1)
            signal[node] = float(st.signal[0, j])
            noise[node] = {origins[o]: float(st.noise[0, j, o])
                           for o in range(st.noise.shape[2])}
    return PropagationState(signal, noise)


def modified_gains_by_paths(network: LayeredNetwork,
                            beta: ScalingVector) -> tuple[float, dict[Node, float]]:
    """Destination gains by explicit summation over every path (exponential time).

    Returns ``(h_s, {relay: h_lj})``. Used as an independent reference for
    :func:`forward_propagate`.
    """
    beta = effective_beta(network, beta)
    t = network.destination

    def path_product(start, path):
        prod, prev = 1.0, start
        for node in path:
            prod *= network.gain(prev, node) * beta[node]
            prev = node
        return prod * network.gain(prev, t)

    h_s = sum(path_product((0, 1), p) for p in enumerate_paths(network))
    h_relay = {}
    for node in network.relays():
        total = 0.0
        for p in enumerate_paths(network, node):
            # the path starts at ``node`` itself: its own beta, then onwards
            total += beta[node] * path_product(node, p[1:])
        h_relay[node] = total
    return h_s, h_relay


def destination_gains(network: LayeredNetwork,
                      beta: ScalingVector) -> tuple[float, np.ndarray]:
    """``(h_s, h_lj array in relay order)`` via forward propagation."""
    dest = propagate_batch(network, _betas(network, beta))[-1]
    return float(dest.signal[0, 0]), dest.noise[0, 0].copy()


def received_power(network: LayeredNetwork, beta: ScalingVector, layer: int,
                   node: int) -> float:
    """Received power at relay ``(layer, node)``; betas of later layers are ignored."""
    st = propagate_batch(network, _betas(network, beta), upto=layer)[-1]
    return float(st.received_power(network)[0, node - 1])


def beta_max(network: LayeredNetwork, beta_prefix: ScalingVector | Sequence[Sequence[float]],
             layer: int) -> np.ndarray:
    """Largest feasible scaling per node of ``layer`` given the earlier layers.

    ``beta_prefix`` may be a full :class:`ScalingVector` (entries from
    ``layer`` on are ignored) or a list holding just layers ``1..layer-1``.
    """
    arrays = (beta_prefix.arrays() if isinstance(beta_prefix, ScalingVector)
              else [np.asarray(b, dtype=float) for b in beta_prefix])
    if len(arrays) < layer - 1:
        raise ValueError(f"prefix covers {len(arrays)} layers, need {layer - 1}")
    st = propagate_batch(network, [a[None, :] for a in arrays[:layer - 1]],
                         upto=layer)[-1]
    return st.beta_max(network)[0]


def full_power_beta(network: LayeredNetwork) -> ScalingVector:
    """Every relay at its maximum scaling, layer by layer (the full-power choice)."""
    state = initial_state(network)
    layers = []
    for _ in range(network.num_relay_layers):
        b = state.beta_max(network)
        layers.append(b[0])
        state = step(network, state, b)
    return ScalingVector.from_arrays(layers)


def snr_destination(network: LayeredNetwork, beta: ScalingVector) -> float:
    h_s, h_relay = destination_gains(network, beta)
    return (network.source_power / network.noise_variance
            * h_s ** 2 / (1.0 + float(h_relay @ h_relay)))


def rate_from_snr(snr, log_base: float = 2.0):
    """Gaussian-input rate ``0.5 * log(1 + snr)``; bits by default."""
    return 0.5 * np.log1p(snr) / math.log(log_base)


def anc_rate(network: LayeredNetwork, beta: ScalingVector, log_base: float = 2.0) -> float:
    return float(rate_from_snr(snr_destination(network, beta), log_base))


@dataclass
class SnrReport:
    received_power: dict[Node, float]
    beta_max: dict[Node, float]
    transmit_power: dict[Node, float]
    snr_dest: float
    rate: float
    feasible: bool
    violations: list[Node] = field(default_factory=list)

    def rows(self, beta: ScalingVector) -> list[dict]:
        return [{"layer": l, "node": j, "beta": beta[(l, j)],
                 "beta_max": self.beta_max[(l, j)],
                 "received_power": self.received_power[(l, j)],
                 "transmit_power": self.transmit_power[(l, j)],
                 "violation": (l, j) in self.violations}
                for (l, j) in self.received_power]

    def to_csv(self, beta: ScalingVector) -> str:
        buf = io.StringIO()
        rows = self.rows(beta)
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()


def check_feasibility(network: LayeredNetwork, beta: ScalingVector,
                      log_base: float = 2.0) -> SnrReport:
    """Received powers, bounds and transmit powers for ``beta``; flags violations."""
    states = propagate_batch(network, _betas(network, beta), upto=network.num_relay_layers)
    eff = effective_beta(network, beta)
    pr, bmax, tx, bad = {}, {}, {}, []
    for st in states:
        l = st.layer
        power = st.received_power(network)[0]
        bm = st.beta_max(network)[0]
        for j in range(len(power)):
            node = (l, j + 1)
            b = eff[node]
            pr[node], bmax[node] = float(power[j]), float(bm[j])
            tx[node] = b * b * float(power[j])
            if b * b > bm[j] ** 2 * (1 + FEASIBILITY_RTOL):
                bad.append(node)
    snr = snr_destination(network, beta)
    return SnrReport(pr, bmax, tx, snr, float(rate_from_snr(snr, log_base)),
                     not bad, bad)
