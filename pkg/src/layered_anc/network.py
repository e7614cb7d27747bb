"""Layered directed relay networks and scaling vectors.

Nodes are addressed as ``(layer, index)`` with 1-based indices. The source is
``(0, 1)``, relays live in layers ``1..L`` and the destination is ``(L+1, 1)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

Node = tuple[int, int]
Edge = tuple[Node, Node]

SOURCE: Node = (0, 1)

FILE_FIELDS = ("layers", "edges", "source_power", "relay_powers", "noise_variance")
OPTIONAL_FILE_FIELDS = ("beta", "comment")


class NetworkError(ValueError):
    """Structurally malformed network description."""


@dataclass(frozen=True)
class LayeredNetwork:
    """Directed relay network with relays arranged in ``len(layer_sizes)`` layers.

    ``gains`` maps a directed edge ``((l, j), (m, k))`` to its real amplitude
    gain. Edges between non-adjacent layers can be represented so that
    :func:`validate` can report them, but every computation refuses them.
    """

    layer_sizes: tuple[int, ...]
    gains: Mapping[Edge, float]
    source_power: float
    relay_powers: tuple[tuple[float, ...], ...]
    noise_variance: float

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.layer_sizes)
        if not sizes:
            raise NetworkError("at least one relay layer is required")
        if any(n < 1 for n in sizes):
            raise NetworkError(f"layer sizes must be >= 1, got {sizes}")
        object.__setattr__(self, "layer_sizes", sizes)

        powers = tuple(tuple(float(p) for p in layer) for layer in self.relay_powers)
        if len(powers) != len(sizes):
            raise NetworkError(
                f"relay_powers has {len(powers)} layers, expected {len(sizes)}")
        for l, (layer, n) in enumerate(zip(powers, sizes), start=1):
            if len(layer) != n:
                raise NetworkError(
                    f"relay_powers layer {l} has {len(layer)} entries, expected {n}")
        object.__setattr__(self, "relay_powers", powers)

        gains = {}
        for (u, v), g in dict(self.gains).items():
            u, v = (int(u[0]), int(u[1])), (int(v[0]), int(v[1]))
            self._check_node(u)
            self._check_node(v)
            gains[(u, v)] = float(g)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "source_power", float(self.source_power))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    def _check_node(self, node: Node):
        l, j = node
        if not 0 <= l <= self.num_relay_layers + 1:
            raise NetworkError(f"node {node}: layer {l} out of range")
        if not 1 <= j <= self.layer_size(l):
            raise NetworkError(f"node {node}: index {j} out of range for layer {l}")

    @property
    def num_relay_layers(self) -> int:
        return len(self.layer_sizes)

    @property
    def destination(self) -> Node:
        return (self.num_relay_layers + 1, 1)

    @property
    def num_relays(self) -> int:
        return sum(self.layer_sizes)

    def layer_size(self, l: int) -> int:
        """Number of nodes in layer ``l`` (1 for the source and destination)."""
        if l == 0 or l == self.num_relay_layers + 1:
            return 1
        return self.layer_sizes[l - 1]

    def relays(self) -> list[Node]:
        return [(l, j) for l, n in enumerate(self.layer_sizes, start=1)
                for j in range(1, n + 1)]

    def gain(self, u: Node, v: Node) -> float:
        return self.gains.get((u, v), 0.0)

    def relay_power(self, node: Node) -> float:
        l, j = node
        return self.relay_powers[l - 1][j - 1]

    @cached_property
    def gain_matrices(self) -> tuple[np.ndarray, ...]:
        """Dense ``(n_l, n_{l+1})`` gain matrices for ``l = 0..L``.

        Raises :class:`NetworkError` if any edge skips or reverses a layer.
        """
        bad = [e for e in self.gains if e[1][0] != e[0][0] + 1]
        if bad:
            raise NetworkError(f"layering violation on edges {sorted(bad)}")
        mats = [np.zeros((self.layer_size(l), self.layer_size(l + 1)))
                for l in range(self.num_relay_layers + 1)]
        for ((l, j), (_, k)), g in self.gains.items():
            mats[l][j - 1, k - 1] = g
        for m in mats:
            m.setflags(write=False)
        return tuple(mats)

    @cached_property
    def power_arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(np.array(p) for p in self.relay_powers)

    @cached_property
    def connected_mask(self) -> tuple[np.ndarray, ...]:
        """Per-layer boolean arrays, True for relays on some source-destination path."""
        mats = [m != 0 for m in self.gain_matrices]
        fwd = [np.ones(1, dtype=bool)]
        for m in mats[:-1]:
            fwd.append((fwd[-1][:, None] & m).any(axis=0))
        bwd = [np.ones(1, dtype=bool)]
        for m in reversed(mats[1:]):
            bwd.append((m & bwd[-1][None, :]).any(axis=1))
        bwd = bwd[::-1]
        return tuple(f & b for f, b in zip(fwd[1:], bwd[:-1]))

    @property
    def all_gains_nonnegative(self) -> bool:
        return all(g >= 0 for g in self.gains.values())

    def permuted(self, layer: int, perm: Sequence[int]) -> "LayeredNetwork":
        """Relabel nodes of ``layer``: new node ``i+1`` is old node ``perm[i]+1``."""
        inv = {old + 1: new + 1 for new, old in enumerate(perm)}

        def remap(node):
            return (node[0], inv[node[1]]) if node[0] == layer else node

        powers = list(self.relay_powers)
        powers[layer - 1] = tuple(self.relay_powers[layer - 1][p] for p in perm)
        return LayeredNetwork(
            self.layer_sizes,
            {(remap(u), remap(v)): g for (u, v), g in self.gains.items()},
            self.source_power, tuple(powers), self.noise_variance)


@dataclass(frozen=True)
class ScalingVector:
    """Per-relay amplification factors, ``beta[l-1][j-1]`` for relay ``(l, j)``."""

    beta: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "beta", tuple(tuple(float(b) for b in layer) for layer in self.beta))

    @classmethod
    def zeros(cls, layer_sizes: Sequence[int]) -> "ScalingVector":
        return cls(tuple((0.0,) * n for n in layer_sizes))

    @classmethod
    def from_arrays(cls, arrays: Iterable[Sequence[float]]) -> "ScalingVector":
        return cls(tuple(tuple(np.asarray(a, dtype=float).tolist()) for a in arrays))

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return tuple(len(layer) for layer in self.beta)

    def __getitem__(self, node: Node) -> float:
        l, j = node
        return self.beta[l - 1][j - 1]

    def layer(self, l: int) -> np.ndarray:
        return np.array(self.beta[l - 1])

    def arrays(self) -> list[np.ndarray]:
        return [np.array(layer) for layer in self.beta]

    def flat(self) -> np.ndarray:
        return np.concatenate(self.arrays())

    def check_shape(self, network: LayeredNetwork):
        if self.layer_sizes != network.layer_sizes:
            raise NetworkError(
                f"scaling vector shape {self.layer_sizes} does not match "
                f"layer sizes {network.layer_sizes}")


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    disconnected: list[Node] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def validate(network: LayeredNetwork) -> ValidationReport:
    """Check layering, connectivity, powers and gains of ``network``."""
    report = ValidationReport()
    for (u, v), g in sorted(network.gains.items()):
        if v[0] != u[0] + 1:
            report.errors.append(f"layering violation: edge {u}->{v}")
        if not math.isfinite(g):
            report.errors.append(f"non-finite gain on edge {u}->{v}")
    if not (network.source_power > 0 and math.isfinite(network.source_power)):
        report.errors.append(f"non-positive source power {network.source_power}")
    if not (network.noise_variance > 0 and math.isfinite(network.noise_variance)):
        report.errors.append(f"non-positive noise variance {network.noise_variance}")
    for node in network.relays():
        p = network.relay_power(node)
        if not (p > 0 and math.isfinite(p)):
            report.errors.append(f"non-positive relay power {p} at {node}")
    if report.errors:
        return report

    for l, mask in enumerate(network.connected_mask, start=1):
        for j in np.flatnonzero(~mask):
            node = (l, int(j) + 1)
            report.disconnected.append(node)
            report.warnings.append(f"disconnected({node[0]},{node[1]})")
    if not any(network.gain_matrices[0].ravel()):
        report.warnings.append("source has no outgoing edges")
    return report


def enumerate_paths(network: LayeredNetwork, start: Node = SOURCE,
                    end: Node | None = None) -> list[tuple[Node, ...]]:
    """All directed paths from ``start`` to ``end`` (default: the destination).

    Each path is returned as the tuple of intermediate relays, excluding
    ``start`` itself when it is the source and always excluding ``end``;
    a relay start node is included, matching the noise-origin path sets.
    Edges with zero gain are not part of the graph.
    """
    end = network.destination if end is None else end
    succ: dict[Node, list[Node]] = {}
    for (u, v), g in sorted(network.gains.items()):
        if g != 0 and v[0] == u[0] + 1:
            succ.setdefault(u, []).append(v)

    paths = []

    def walk(node, trail):
        if node == end:
            paths.append(tuple(trail))
            return
        for nxt in succ.get(node, ()):
            walk(nxt, trail + ([nxt] if nxt != end else []))

    walk(start, [] if start == SOURCE else [start])
    return paths


def random_network(rng: np.random.Generator, layer_sizes: Sequence[int], *,
                   gain_range=(0.1, 2.0), power_range=(0.5, 20.0),
                   source_power=None, noise_variance=None,
                   density: float = 1.0) -> LayeredNetwork:
    """Random layered network with gains drawn uniformly from ``gain_range``.

    With ``density < 1`` each edge is kept independently with that
    probability; every layer keeps at least one edge into its successor.
    """
    sizes = [1, *layer_sizes, 1]
    gains = {}
    for l in range(len(sizes) - 1):
        keep = rng.random((sizes[l], sizes[l + 1])) < density
        if not keep.any():
            keep[rng.integers(sizes[l]), rng.integers(sizes[l + 1])] = True
        vals = rng.uniform(*gain_range, size=(sizes[l], sizes[l + 1]))
        for j, k in zip(*np.nonzero(keep)):
            gains[((l, int(j) + 1), (l + 1, int(k) + 1))] = float(vals[j, k])
    powers = tuple(tuple(rng.uniform(*power_range, size=n).tolist()) for n in layer_sizes)
    ps = rng.uniform(*power_range) if source_power is None else source_power
    s2 = rng.uniform(0.05, 2.0) if noise_variance is None else noise_variance
    return LayeredNetwork(tuple(layer_sizes), gains, ps, powers, s2)


# --- file format -------------------------------------------------------------

def network_to_dict(network: LayeredNetwork, beta: ScalingVector | None = None,
                    comment: str | None = None) -> dict:
    edges = []
    for ((l, j), (m, k)), g in sorted(network.gains.items()):
        if m != l + 1:
            raise NetworkError(f"cannot serialize non-layered edge {(l, j)}->{(m, k)}")
        edges.append([l, j, k, g])
    out = {
        "layers": list(network.layer_sizes),
        "edges": edges,
        "source_power": network.source_power,
        "relay_powers": [list(p) for p in network.relay_powers],
        "noise_variance": network.noise_variance,
    }
    if beta is not None:
        out["beta"] = [list(b) for b in beta.beta]
    if comment:
        out["comment"] = comment
    return out


def network_from_dict(data: Mapping) -> tuple[LayeredNetwork, ScalingVector | None]:
    """Parse the key-value network description; unknown fields are rejected."""
    if not isinstance(data, Mapping):
        raise NetworkError("network description must be an object")
    unknown = set(data) - set(FILE_FIELDS) - set(OPTIONAL_FILE_FIELDS)
    if unknown:
        raise NetworkError(f"unknown fields: {sorted(unknown)}")
    missing = [f for f in FILE_FIELDS if f not in data]
    if missing:
        raise NetworkError(f"missing fields: {missing}")

    layers = data["layers"]
    if not isinstance(layers, list) or not all(isinstance(n, int) for n in layers):
        raise NetworkError("'layers' must be a list of integers")
    num_layers = len(layers)
    gains = {}
    for row in data["edges"]:
        if not isinstance(row, (list, tuple)) or len(row) != 4:
            raise NetworkError(f"edge row must be [l, j, k, gain], got {row!r}")
        l, j, k, g = row
        if not all(isinstance(x, int) for x in (l, j, k)):
            raise NetworkError(f"edge indices must be integers, got {row!r}")
        if not 0 <= l <= num_layers:
            raise NetworkError(f"edge {row!r}: layer {l} out of range")
        key = ((l, j), (l + 1, k))
        if key in gains:
            raise NetworkError(f"duplicate edge {row!r}")
        gains[key] = float(g)
    network = LayeredNetwork(
        tuple(layers), gains, data["source_power"],
        tuple(tuple(p) for p in data["relay_powers"]), data["noise_variance"])
    beta = None
    if data.get("beta") is not None:
        beta = ScalingVector(tuple(tuple(b) for b in data["beta"]))
        beta.check_shape(network)
    return network, beta


def load_network(path: str | Path) -> tuple[LayeredNetwork, ScalingVector | None]:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise NetworkError(f"{path}: {exc}") from exc
    return network_from_dict(data)


def dump_network(network: LayeredNetwork, path: str | Path, *,
                 beta: ScalingVector | None = None, comment: str | None = None):
    with open(path, "w") as f:
        json.dump(network_to_dict(network, beta, comment), f, indent=2)
        f.write("\n")


# --- standard topologies -----------------------------------------------------

def diamond(h_s1=1.0, h_s2=0.1, h_1t=1.0, h_2t=1.0, *, source_power=10.0,
            relay_powers=(10.0, 10.0), noise_variance=0.1) -> LayeredNetwork:
    """Two parallel relays between source and destination."""
    gains = {((0, 1), (1, 1)): h_s1, ((0, 1), (1, 2)): h_s2,
             ((1, 1), (2, 1)): h_1t, ((1, 2), (2, 1)): h_2t}
    return LayeredNetwork((2,), gains, source_power, (tuple(relay_powers),),
                          noise_variance)


def linear_chain(gains: Sequence[float], source_power: float,
                 relay_powers: Sequence[float], noise_variance: float) -> LayeredNetwork:
    """Chain of ``len(gains) - 1`` single-relay layers; ``gains[l]`` feeds layer ``l+1``."""
    L = len(gains) - 1
    if L < 1 or len(relay_powers) != L:
        raise NetworkError("a chain needs L+1 gains and L relay powers, L >= 1")
    edges = {((l, 1), (l + 1, 1)): g for l, g in enumerate(gains)}
    return LayeredNetwork((1,) * L, edges, source_power,
                          tuple((p,) for p in relay_powers), noise_variance)


def fully_connected(layer_sizes: Sequence[int], gain: float, relay_power: float,
                    source_power: float, noise_variance: float) -> LayeredNetwork:
    """Full bipartite connectivity between adjacent layers with one common gain."""
    sizes = [1, *layer_sizes, 1]
    edges = {((l, j), (l + 1, k)): gain
             for l in range(len(sizes) - 1)
             for j in range(1, sizes[l] + 1)
             for k in range(1, sizes[l + 1] + 1)}
    return LayeredNetwork(tuple(layer_sizes), edges, source_power,
                          tuple((relay_power,) * n for n in layer_sizes), noise_variance)
