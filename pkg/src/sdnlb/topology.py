"""Data-plane topology model, all-pairs shortest paths, and server features.

A topology is an undirected graph of switches plus host nodes (one user host
and any number of server hosts), each host hanging off exactly one switch.
Shortest paths are computed over the switch graph only, minimizing hop count
with accumulated delay as the tie-break; hosts are collapsed onto their
attached switch.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

_INF_HOPS = 10**9


class TopologyError(ValueError):
    """A topology document or graph violates an invariant."""


class NodeKind(str, Enum):
    SWITCH = "switch"
    SERVER_HOST = "server_host"
    USER_HOST = "user_host"


def natural_key(node_id: str) -> tuple:
    """Sort key ordering embedded integers numerically (h2 before h10)."""
    parts = re.split(r"(\d+)", node_id)
    return tuple((0, int(p)) if p.isdigit() else (1, p) for p in parts if p)


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    level: int | None = None
    label: str | None = None

    def __post_init__(self):
        if not self.id:
            raise TopologyError("node id must be a non-empty string")
        if self.level is not None and self.level < 1:
            raise TopologyError(f"node '{self.id}': level must be >= 1")

    @property
    def display(self) -> str:
        return self.label if self.label is not None else self.id


@dataclass(frozen=True)
class Link:
    """Undirected link; endpoints are stored in natural id order."""

    a: str
    b: str
    delay_ms: float
    capacity_mbps: float

    def __post_init__(self):
        if self.a == self.b:
            raise TopologyError(f"link endpoints must differ (got '{self.a}' twice)")
        if self.delay_ms < 0:
            raise TopologyError(f"link {self.a}-{self.b}: delay_ms must be >= 0")
        if self.capacity_mbps <= 0:
            raise TopologyError(f"link {self.a}-{self.b}: capacity_mbps must be > 0")
        if natural_key(self.b) < natural_key(self.a):
            a, b = self.a, self.b
            object.__setattr__(self, "a", b)
            object.__setattr__(self, "b", a)

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b)


@dataclass(frozen=True)
class Topology:
    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    user_switch: str

    def __post_init__(self):
        object.__setattr__(
            self, "nodes", tuple(sorted(self.nodes, key=lambda n: natural_key(n.id)))
        )
        object.__setattr__(
            self, "links", tuple(sorted(self.links, key=lambda l: (natural_key(l.a), natural_key(l.b))))
        )
        self._validate()

    def _validate(self) -> None:
        ids = [n.id for n in self.nodes]
        seen: set[str] = set()
        for i in ids:
            if i in seen:
                raise TopologyError(f"duplicate node id '{i}'")
            seen.add(i)

        by_id = {n.id: n for n in self.nodes}
        pairs: set[tuple[str, str]] = set()
        incident: dict[str, list[Link]] = {i: [] for i in ids}
        for link in self.links:
            for end in (link.a, link.b):
                if end not in by_id:
                    raise TopologyError(f"link {link.a}-{link.b} references unknown node id '{end}'")
            if link.key in pairs:
                raise TopologyError(f"duplicate link between '{link.a}' and '{link.b}'")
            pairs.add(link.key)
            incident[link.a].append(link)
            incident[link.b].append(link)

        if self.user_switch not in by_id:
            raise TopologyError(f"user_switch '{self.user_switch}' is not a node")
        if by_id[self.user_switch].kind is not NodeKind.SWITCH:
            raise TopologyError(f"user_switch '{self.user_switch}' must be a switch")

        user_hosts = [n for n in self.nodes if n.kind is NodeKind.USER_HOST]
        if len(user_hosts) != 1:
            raise TopologyError(f"expected exactly one user_host, found {len(user_hosts)}")

        for node in self.nodes:
            if node.kind is NodeKind.SWITCH:
                continue
            links = incident[node.id]
            if len(links) != 1:
                raise TopologyError(
                    f"host '{node.id}' must have exactly one link (has {len(links)})"
                )
            other = links[0].b if links[0].a == node.id else links[0].a
            if by_id[other].kind is not NodeKind.SWITCH:
                raise TopologyError(f"host '{node.id}' must attach to a switch, not '{other}'")

        if (
            user_hosts
            and self._attachment_of(user_hosts[0].id, incident) != self.user_switch
        ):
            raise TopologyError(
                f"user host '{user_hosts[0].id}' is not attached to user_switch '{self.user_switch}'"
            )

        unreachable = self._unreachable_from(self.user_switch)
        if unreachable:
            raise TopologyError(f"graph is disconnected: node '{unreachable[0]}' unreachable")

    def _attachment_of(self, host_id: str, incident: dict[str, list[Link]]) -> str:
        link = incident[host_id][0]
        return link.b if link.a == host_id else link.a

    def _unreachable_from(self, start: str) -> list[str]:
        adj: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for link in self.links:
            adj[link.a].append(link.b)
            adj[link.b].append(link.a)
        seen = {start}
        stack = [start]
        while stack:
            cur = stack.pop()
            for nxt in adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return sorted((n.id for n in self.nodes if n.id not in seen), key=natural_key)

    # -- convenience accessors -------------------------------------------

    @cached_property
    def node_map(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def switch_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes if n.kind is NodeKind.SWITCH)

    @cached_property
    def server_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes if n.kind is NodeKind.SERVER_HOST)

    @cached_property
    def user_host_id(self) -> str:
        return next(n.id for n in self.nodes if n.kind is NodeKind.USER_HOST)

    @property
    def n_servers(self) -> int:
        return len(self.server_ids)

    @cached_property
    def _incident(self) -> dict[str, list[Link]]:
        inc: dict[str, list[Link]] = {n.id: [] for n in self.nodes}
        for link in self.links:
            inc[link.a].append(link)
            inc[link.b].append(link)
        return inc

    def attached_switch(self, host_id: str) -> str:
        node = self.node_map[host_id]
        if node.kind is NodeKind.SWITCH:
            raise TopologyError(f"'{host_id}' is a switch, not a host")
        return self._attachment_of(host_id, self._incident)

    def link_between(self, a: str, b: str) -> Link | None:
        for link in self._incident[a]:
            if link.key == tuple(sorted((a, b), key=natural_key)):
                return link
        return None

    def switch_adjacency(self) -> np.ndarray:
        """Binary adjacency matrix over switch_ids order."""
        ids = self.switch_ids
        index = {s: i for i, s in enumerate(ids)}
        adj = np.zeros((len(ids), len(ids)))
        for link in self.links:
            if link.a in index and link.b in index:
                i, j = index[link.a], index[link.b]
                adj[i, j] = adj[j, i] = 1.0
        return adj

    def document(self) -> dict:
        """Serialize to the topology document schema (round-trip safe)."""
        nodes = []
        for n in self.nodes:
            entry: dict = {"id": n.id, "kind": n.kind.value}
            if n.level is not None:
                entry["level"] = n.level
            if n.label is not None:
                entry["label"] = n.label
            nodes.append(entry)
        links = [
            {"a": l.a, "b": l.b, "delay_ms": l.delay_ms, "capacity_mbps": l.capacity_mbps}
            for l in self.links
        ]
        return {"nodes": nodes, "links": links, "user_switch": self.user_switch}

    def fingerprint(self) -> str:
        """Stable content hash of the serialized document."""
        payload = json.dumps(self.document(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()


# -- document ingestion ---------------------------------------------------


def load_topology(document: dict) -> Topology:
    """Build a validated Topology from a parsed topology document.

    Raises TopologyError naming the offending element on any schema or
    invariant violation.
    """
    if not isinstance(document, dict):
        raise TopologyError("topology document must be a mapping")
    for key in ("nodes", "links", "user_switch"):
        if key not in document:
            raise TopologyError(f"topology document missing required key '{key}'")

    nodes = []
    for raw in document["nodes"]:
        if not isinstance(raw, dict) or "id" not in raw or "kind" not in raw:
            raise TopologyError(f"node entry {raw!r} must carry 'id' and 'kind'")
        try:
            kind = NodeKind(raw["kind"])
        except ValueError:
            raise TopologyError(
                f"node '{raw['id']}': unknown kind '{raw['kind']}'"
            ) from None
        level = raw.get("level")
        if level is not None and (not isinstance(level, int) or isinstance(level, bool)):
            raise TopologyError(f"node '{raw['id']}': level must be an integer")
        nodes.append(Node(id=str(raw["id"]), kind=kind, level=level, label=raw.get("label")))

    links = []
    for raw in document["links"]:
        if not isinstance(raw, dict) or not {"a", "b", "delay_ms", "capacity_mbps"} <= raw.keys():
            raise TopologyError(
                f"link entry {raw!r} must carry 'a', 'b', 'delay_ms', 'capacity_mbps'"
            )
        links.append(
            Link(
                a=str(raw["a"]),
                b=str(raw["b"]),
                delay_ms=float(raw["delay_ms"]),
                capacity_mbps=float(raw["capacity_mbps"]),
            )
        )

    return Topology(nodes=tuple(nodes), links=tuple(links), user_switch=str(document["user_switch"]))


# -- reference 4-level evaluation topology --------------------------------


@dataclass(frozen=True)
class DelayProfile:
    """Per-tier link delays: one entry per inter-level tier, plus the
    host attachment delay. Defaults give user-to-level path delays of
    12, 22 and 30.33 ms."""

    tier_ms: tuple[float, float, float] = (12.0, 10.0, 8.33)
    host_ms: float = 0.0

    def __post_init__(self):
        if len(self.tier_ms) != 3:
            raise TopologyError("delay profile needs exactly 3 inter-level tiers")
        if any(d < 0 for d in self.tier_ms) or self.host_ms < 0:
            raise TopologyError("delays must be non-negative")


DEFAULT_DELAY_PROFILE = DelayProfile()
DEFAULT_CAPACITY_MBPS = 100.0


def build_paper_topology(
    delay_profile: DelayProfile = DEFAULT_DELAY_PROFILE,
    capacity_mbps: float = DEFAULT_CAPACITY_MBPS,
) -> Topology:
    """Build the bundled 4-level reference topology.

    Level 1 holds the user switch s1 with user host h1. Levels 2-4 hold two
    switches each: one with a single server host and one with two, so each
    level contributes three servers (h2..h10, nine in total). Every switch
    is linked to all switches in the next level and to none in its own.
    """
    if capacity_mbps <= 0:
        raise TopologyError("capacity_mbps must be > 0")

    nodes = [
        Node("s1", NodeKind.SWITCH, level=1),
        Node("h1", NodeKind.USER_HOST, level=1, label="10.0.0.1"),
    ]
    links = []

    def host_link(host: str, switch: str) -> Link:
        return Link(host, switch, delay_profile.host_ms, capacity_mbps)

    links.append(host_link("h1", "s1"))

    # per level: (single-server switch, two-server switch)
    level_switches = {1: ["s1"]}
    host_n = 2
    switch_n = 2
    for level in (2, 3, 4):
        single = f"s{switch_n}"
        double = f"s{switch_n + 1}"
        switch_n += 2
        level_switches[level] = [single, double]
        nodes.append(Node(single, NodeKind.SWITCH, level=level))
        nodes.append(Node(double, NodeKind.SWITCH, level=level))
        for switch, count in ((single, 1), (double, 2)):
            for _ in range(count):
                host = f"h{host_n}"
                nodes.append(
                    Node(host, NodeKind.SERVER_HOST, level=level, label=f"10.0.0.{host_n}")
                )
                links.append(host_link(host, switch))
                host_n += 1

    for level in (1, 2, 3):
        tier_delay = delay_profile.tier_ms[level - 1]
        for upper in level_switches[level]:
            for lower in level_switches[level + 1]:
                links.append(Link(upper, lower, tier_delay, capacity_mbps))

    return Topology(nodes=tuple(nodes), links=tuple(links), user_switch="s1")


# -- all-pairs shortest paths ---------------------------------------------


@dataclass(frozen=True, eq=False)
class PathMatrix:
    """Floyd-Warshall result over the switch graph.

    hops is the primary metric; delay_ms accumulates the link delays of the
    chosen path; next_hop[i, j] is the switch index following i on the path
    to j (-1 on the diagonal).
    """

    switch_ids: tuple[str, ...]
    hops: np.ndarray
    delay_ms: np.ndarray
    next_hop: np.ndarray
    index: dict[str, int] = field(repr=False, default_factory=dict)

    def hops_between(self, a: str, b: str) -> int:
        return int(self.hops[self.index[a], self.index[b]])

    def delay_between(self, a: str, b: str) -> float:
        return float(self.delay_ms[self.index[a], self.index[b]])

    def path(self, a: str, b: str) -> tuple[str, ...]:
        """Switch sequence from a to b inclusive, following next_hop."""
        i, j = self.index[a], self.index[b]
        seq = [a]
        steps = 0
        while i != j:
            i = int(self.next_hop[i, j])
            if i < 0 or steps > len(self.switch_ids):
                raise TopologyError(f"no recorded path from '{a}' to '{b}'")
            seq.append(self.switch_ids[i])
            steps += 1
        return tuple(seq)


def all_pairs_shortest_paths(topology: Topology) -> PathMatrix:
    """Hop-minimal all-pairs shortest paths over the switch graph.

    Ties on hop count prefer the smaller accumulated delay; remaining ties
    keep the path routed through the earliest switch in natural id order
    (intermediate switches are tried in that order), so the result is a
    total, deterministic choice.
    """
    ids = topology.switch_ids
    n = len(ids)
    index = {s: i for i, s in enumerate(ids)}

    hops = np.full((n, n), _INF_HOPS, dtype=np.int64)
    delay = np.full((n, n), np.inf)
    next_hop = np.full((n, n), -1, dtype=np.int64)
    np.fill_diagonal(hops, 0)
    np.fill_diagonal(delay, 0.0)

    for link in topology.links:
        if link.a in index and link.b in index:
            i, j = index[link.a], index[link.b]
            hops[i, j] = hops[j, i] = 1
            delay[i, j] = delay[j, i] = link.delay_ms
            next_hop[i, j] = j
            next_hop[j, i] = i

    for m in range(n):
        alt_hops = hops[:, m][:, None] + hops[m, :][None, :]
        alt_delay = delay[:, m][:, None] + delay[m, :][None, :]
        better = (alt_hops < hops) | ((alt_hops == hops) & (alt_delay < delay))
        hops = np.where(better, alt_hops, hops)
        delay = np.where(better, alt_delay, delay)
        next_hop = np.where(better, next_hop[:, m][:, None], next_hop)

    if n and hops.max() >= _INF_HOPS:
        raise TopologyError("switch graph is disconnected")

    return PathMatrix(switch_ids=ids, hops=hops, delay_ms=delay, next_hop=next_hop, index=index)


# -- clustering features ---------------------------------------------------


@dataclass(frozen=True)
class FeatureSet:
    """Per-server 2-D feature points: (hops, delay_ms) from the user switch
    to the server's attached switch. Order is natural server-id order."""

    points: tuple[tuple[float, float], ...]
    server_ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.points) != len(self.server_ids):
            raise TopologyError("points and server_ids must be parallel")
        if not self.points:
            raise TopologyError("feature set must contain at least one server")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)


def server_features(topology: Topology, paths: PathMatrix) -> FeatureSet:
    points = []
    for server in topology.server_ids:
        switch = topology.attached_switch(server)
        points.append(
            (
                float(paths.hops_between(topology.user_switch, switch)),
                paths.delay_between(topology.user_switch, switch),
            )
        )
    return FeatureSet(points=tuple(points), server_ids=topology.server_ids)
