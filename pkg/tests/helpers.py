"""Shared generators and oracles for the test suite."""

from __future__ import annotations

import random
from collections import deque

import numpy as np

from sdnlb.simulator import Flow
from sdnlb.topology import Link, Node, NodeKind, Topology, all_pairs_shortest_paths


def random_connected_topology(
    seed: int,
    max_switches: int = 12,
    max_servers: int = 4,
    unit_delays: bool = False,
) -> Topology:
    """Random connected topology: spanning tree plus extra links, one user
    host on s1, and 1..max_servers server hosts on random switches."""
    rnd = random.Random(seed)
    n = rnd.randint(2, max_switches)
    switches = [f"s{i}" for i in range(1, n + 1)]
    nodes = [Node(s, NodeKind.SWITCH) for s in switches]

    def delay() -> float:
        return 1.0 if unit_delays else round(rnd.uniform(0.5, 20.0), 3)

    pairs = set()
    links = []
    for i in range(1, n):
        j = rnd.randrange(i)
        pairs.add((min(i, j), max(i, j)))
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in pairs and rnd.random() < 0.25:
                pairs.add((i, j))
    for i, j in sorted(pairs):
        links.append(Link(switches[i], switches[j], delay(), rnd.choice([50.0, 100.0, 200.0])))

    nodes.append(Node("u1", NodeKind.USER_HOST))
    links.append(Link("u1", switches[0], 0.0, 100.0))
    for v in range(1, rnd.randint(1, max_servers) + 1):
        host = f"v{v}"
        nodes.append(Node(host, NodeKind.SERVER_HOST))
        links.append(Link(host, rnd.choice(switches), 0.0, 100.0))

    return Topology(nodes=tuple(nodes), links=tuple(links), user_switch=switches[0])


def bfs_hop_matrix(topology: Topology) -> np.ndarray:
    """Independent hop-count oracle: breadth-first search from every switch."""
    ids = topology.switch_ids
    index = {s: i for i, s in enumerate(ids)}
    adjacency = [[] for _ in ids]
    for link in topology.links:
        if link.a in index and link.b in index:
            adjacency[index[link.a]].append(index[link.b])
            adjacency[index[link.b]].append(index[link.a])
    n = len(ids)
    matrix = np.full((n, n), -1, dtype=np.int64)
    for src in range(n):
        matrix[src, src] = 0
        queue = deque([src])
        while queue:
            cur = queue.popleft()
            for nxt in adjacency[cur]:
                if matrix[src, nxt] < 0:
                    matrix[src, nxt] = matrix[src, cur] + 1
                    queue.append(nxt)
    return matrix


def random_flow_instance(seed: int) -> tuple[Topology, list[Flow], float]:
    """Small random topology plus up to 8 flows along shortest paths."""
    rnd = random.Random(seed)
    topology = random_connected_topology(seed * 7 + 1, max_switches=5, max_servers=2)
    paths = all_pairs_shortest_paths(topology)
    ids = topology.switch_ids
    flows = []
    for _ in range(rnd.randint(1, 8)):
        a, b = rnd.sample(ids, 2)
        flows.append(
            Flow(src="u1", dst=b, path=paths.path(a, b), rtt_ms=2.0 * paths.delay_between(a, b))
        )
    window = rnd.choice([8192.0, 65536.0, 262144.0])
    return topology, flows, window
