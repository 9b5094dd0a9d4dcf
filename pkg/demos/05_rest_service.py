"""Drive the REST service end to end on an ephemeral port.

The service stages its state: upload a topology, compute clusters (which
also builds the pools), then dispatch requests and read the counters back.
"""

import json
import threading
import urllib.request

from sdnlb import build_paper_topology
from sdnlb.service import make_server

server = make_server(port=0)
port = server.server_address[1]
threading.Thread(target=server.serve_forever, daemon=True).start()
base = f"http://127.0.0.1:{port}"
print(f"service listening on {base}\n")


def call(method, path, body=None):
    data = json.dumps(body).encode() if body is not None else None
    request = urllib.request.Request(f"{base}{path}", data=data, method=method)
    if data:
        request.add_header("Content-Type", "application/json")
    with urllib.request.urlopen(request) as response:
        return json.loads(response.read())


print("PUT /topology ->", call("PUT", "/topology", build_paper_topology().document()))

clusters = call("GET", "/clusters?k=3&method=kmeans&seed=0")
print("\nGET /clusters -> k =", clusters["k"], "sse =", clusters["sse"])
for centroid in clusters["centroids"]:
    print("  ", centroid)

pools = call("GET", "/pools")
print("\nGET /pools ->")
for pool in pools["pools"]:
    print("  ", pool["pool_id"], [m["server_id"] for m in pool["members"]])

posted = call("POST", "/requests", {"target": "auto", "count": 30})
print("\nPOST /requests (auto, 30) ->", posted["counts"])

stats = call("GET", "/stats")
print("\nGET /stats ->")
print("  counters:", stats["counters"])
print("  per cluster:", stats["per_cluster_requests"])
print("  load summary:", stats["load_summary"])

server.shutdown()
server.server_close()
