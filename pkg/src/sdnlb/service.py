"""Northbound-style REST service over the clustering pipeline.

Staged in-memory state: a topology must be uploaded before clusters can be
computed, and pools exist only once a model does. Identical repeated GETs
are no-ops (cluster results are cached by their parameters), so only
PUT/POST calls mutate state. One lock serializes all state transitions.

Endpoints:
    PUT  /topology                      upload a topology document
    GET  /clusters?k=&method=&seed=     compute or fetch the cluster model
    GET  /pools                         pool export (controller LB shape)
    POST /requests                      dispatch {"target": "auto"|index, "count": N}
    GET  /stats                         per-server counters + load summary
"""

from __future__ import annotations

import json
import threading
from fractions import Fraction
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from . import allocator, clustering
from .allocator import EqualPerCluster, SingleCluster, dispatch_sequence
from .clustering import ClusteringConfig, ClusteringError
from .topology import TopologyError, all_pairs_shortest_paths, load_topology, natural_key, server_features

_METHODS = ("kmeans", "spectral")


class ServiceError(Exception):
    def __init__(self, status: int, error: str, detail: str):
        super().__init__(detail)
        self.status = status
        self.error = error
        self.detail = detail

    def body(self) -> dict:
        return {"error": self.error, "detail": self.detail}


class LoadBalancerService:
    """In-memory pipeline state plus the handlers behind each endpoint."""

    def __init__(self):
        self._lock = threading.Lock()
        self._reset()

    def _reset(self) -> None:
        self.topology = None
        self.features = None
        self.model = None
        self.pools = None
        self.counters: dict[str, int] = {}
        self._model_key = None
        self._cluster_cache: dict[tuple, dict] = {}

    # -- endpoint handlers -------------------------------------------------

    def put_topology(self, document: dict) -> dict:
        with self._lock:
            try:
                topology = load_topology(document)
            except TopologyError as exc:
                raise ServiceError(422, "invalid topology", str(exc)) from exc
            self._reset()
            self.topology = topology
            self.counters = {s: 0 for s in topology.server_ids}
            return {
                "nodes": len(topology.nodes),
                "links": len(topology.links),
                "servers": topology.n_servers,
            }

    def get_clusters(self, k: int, method: str = "kmeans", seed: int = 0) -> dict:
        with self._lock:
            if self.topology is None:
                raise ServiceError(409, "no topology", "upload a topology with PUT /topology first")
            if k < 1:
                raise ServiceError(400, "invalid k", f"k must be >= 1, got {k}")
            if method not in _METHODS:
                raise ServiceError(400, "invalid method", f"method must be one of {_METHODS}")
            key = (self.topology.fingerprint(), k, method, seed)
            if key == self._model_key:
                return self._cluster_cache[key][0]

            if key in self._cluster_cache:
                document, model, features = self._cluster_cache[key]
            else:
                config = ClusteringConfig(k=k, rng_seed=seed)
                paths = all_pairs_shortest_paths(self.topology)
                features = server_features(self.topology, paths)
                try:
                    if method == "kmeans":
                        model = clustering.kmeans_cluster(features, config)
                    else:
                        model = clustering.spectral_cluster(self.topology, config)
                except ClusteringError as exc:
                    raise ServiceError(422, "clustering failed", str(exc)) from exc
                document = clustering.cluster_model_document(model, features)
                document = {"requested_k": k, "method": method, "seed": seed, **document}
                self._cluster_cache[key] = (document, model, features)

            self.features = features
            self.model = model
            self.pools = allocator.build_pools(model, features)
            self._model_key = key
            return document

    def get_pools(self) -> dict:
        with self._lock:
            if self.pools is None:
                raise ServiceError(409, "no pools", "compute clusters with GET /clusters first")
            labels = {
                n.id: n.display for n in self.topology.nodes
            }
            return allocator.pool_export(self.pools, labels)

    def post_requests(self, target, count) -> dict:
        with self._lock:
            if self.pools is None:
                raise ServiceError(409, "no pools", "compute clusters with GET /clusters first")
            if not isinstance(count, int) or isinstance(count, bool) or count < 0:
                raise ServiceError(400, "invalid count", f"count must be a non-negative integer, got {count!r}")
            if target == "auto":
                split = EqualPerCluster()
            elif isinstance(target, int) and not isinstance(target, bool):
                if not any(p.cluster_index == target for p in self.pools.pools):
                    raise ServiceError(400, "unknown cluster", f"no pool for cluster index {target}")
                split = SingleCluster(target)
            else:
                raise ServiceError(400, "invalid target", f"target must be 'auto' or a cluster index, got {target!r}")
            assignments = dispatch_sequence(self.pools, count, split)
            for server in assignments:
                self.counters[server] += 1
            counts: dict[str, int] = {}
            for server in assignments:
                counts[server] = counts.get(server, 0) + 1
            return {"assignments": assignments, "counts": counts, "total": len(assignments)}

    def get_stats(self) -> dict:
        with self._lock:
            if self.topology is None:
                raise ServiceError(409, "no topology", "upload a topology with PUT /topology first")
            counters = {s: self.counters[s] for s in sorted(self.counters, key=natural_key)}
            total = sum(counters.values())
            body: dict = {"counters": counters, "total_requests": total}
            if self.pools is not None:
                per_cluster = {}
                for pool in self.pools.pools:
                    per_cluster[str(pool.cluster_index)] = sum(counters[s] for s in pool.members)
                k = len(self.pools.pools)
                n = len(counters)
                summary = allocator.LoadSummary(
                    n_servers=n,
                    k=k,
                    requests=total,
                    avg_servers_per_cluster=Fraction(n, k),
                    capacity_multiplier_pct=100 * k,
                    avg_load_largest_cluster=allocator.avg_load_largest_cluster(total, k, n),
                )
                body["per_cluster_requests"] = per_cluster
                body["load_summary"] = {
                    "n_servers": summary.n_servers,
                    "k": summary.k,
                    "requests": summary.requests,
                    "avg_servers_per_cluster": float(summary.avg_servers_per_cluster),
                    "capacity_multiplier_pct": summary.capacity_multiplier_pct,
                    "avg_load_largest_cluster": float(summary.avg_load_largest_cluster),
                }
            else:
                body["per_cluster_requests"] = None
                body["load_summary"] = None
            return body


# -- HTTP wiring -------------------------------------------------------------


class _Handler(BaseHTTPRequestHandler):
    server_version = "sdnlb/0.1"

    @property
    def service(self) -> LoadBalancerService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass  # keep test output quiet

    def _send(self, status: int, body: dict) -> None:
        payload = json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b""
        try:
            return json.loads(raw) if raw else {}
        except json.JSONDecodeError as exc:
            raise ServiceError(422, "invalid json", str(exc)) from exc

    def _dispatch(self, fn) -> None:
        try:
            self._send(200, fn())
        except ServiceError as exc:
            self._send(exc.status, exc.body())
        except Exception as exc:  # never leak a traceback through the socket
            self._send(500, {"error": "internal error", "detail": str(exc)})

    def do_PUT(self):
        if urlparse(self.path).path == "/topology":
            self._dispatch(lambda: self.service.put_topology(self._read_json()))
        else:
            self._send(404, {"error": "not found", "detail": self.path})

    def do_GET(self):
        parsed = urlparse(self.path)
        if parsed.path == "/clusters":
            query = parse_qs(parsed.query)

            def run():
                try:
                    k = int(query.get("k", ["3"])[0])
                    seed = int(query.get("seed", ["0"])[0])
                except ValueError as exc:
                    raise ServiceError(400, "invalid parameter", str(exc)) from exc
                method = query.get("method", ["kmeans"])[0]
                return self.service.get_clusters(k=k, method=method, seed=seed)

            self._dispatch(run)
        elif parsed.path == "/pools":
            self._dispatch(self.service.get_pools)
        elif parsed.path == "/stats":
            self._dispatch(self.service.get_stats)
        else:
            self._send(404, {"error": "not found", "detail": self.path})

    def do_POST(self):
        if urlparse(self.path).path == "/requests":
            def run():
                body = self._read_json()
                if not isinstance(body, dict) or {"target", "count"} - body.keys():
                    raise ServiceError(400, "invalid body", "body must carry 'target' and 'count'")
                return self.service.post_requests(body["target"], body["count"])

            self._dispatch(run)
        else:
            self._send(404, {"error": "not found", "detail": self.path})


def make_server(host: str = "127.0.0.1", port: int = 0,
                service: LoadBalancerService | None = None) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; port 0 binds an ephemeral port."""
    server = ThreadingHTTPServer((host, port), _Handler)
    server.service = service or LoadBalancerService()  # type: ignore[attr-defined]
    return server


def serve(host: str, port: int) -> None:
    server = make_server(host, port)
    address = server.server_address
    print(f"sdnlb service listening on http://{address[0]}:{address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
