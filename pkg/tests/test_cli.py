import json
import threading

import pytest
import requests

from sdnlb.cli import main
from sdnlb.service import make_server
from sdnlb.topology import build_paper_topology

PRINTED_LOAD_ROW = ["3.33", "1.875", "1.428", "1.25", "1.2", "1.25", "1.428", "1.875", "3.33"]


def truncated(cell: str, printed: str) -> str:
    from fractions import Fraction

    from sdnlb.allocator import truncate_fraction

    return truncate_fraction(Fraction(cell), len(printed.partition(".")[2]))


@pytest.fixture(scope="module")
def outputs(tmp_path_factory):
    out = tmp_path_factory.mktemp("repro")
    assert main(["paper-repro", "--out", str(out)]) == 0
    return out


class TestPaperRepro:
    def test_exit_zero_and_files_exist(self, outputs):
        for name in ("table1.csv", "clusters.csv", "experiments.csv"):
            assert (outputs / name).is_file()

    def test_table_row3_matches_printed_values(self, outputs):
        rows = (outputs / "table1.csv").read_text().splitlines()
        cells = rows[3].split(",")[1:]
        assert [truncated(c, p) for c, p in zip(cells, PRINTED_LOAD_ROW)] == PRINTED_LOAD_ROW

    def test_clusters_centroid_hops_column(self, outputs):
        rows = (outputs / "clusters.csv").read_text().splitlines()
        kmeans = [r.split(",") for r in rows[1:] if r.startswith("kmeans,")]
        assert [float(r[2]) for r in kmeans] == [1.0, 2.0, 3.0]

    def test_seed_does_not_change_clusters(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["paper-repro", "--seed", "1", "--out", str(out1)]) == 0
        assert main(["paper-repro", "--seed", "2", "--out", str(out2)]) == 0
        assert (out1 / "clusters.csv").read_bytes() == (out2 / "clusters.csv").read_bytes()

    def test_byte_identical_reruns(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["paper-repro", "--out", str(out1)]) == 0
        assert main(["paper-repro", "--out", str(out2)]) == 0
        for name in ("table1.csv", "clusters.csv", "experiments.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestExperiment:
    def test_single_server_row(self, tmp_path):
        out = tmp_path / "report.csv"
        code = main(
            [
                "experiment",
                "--state",
                "single-server",
                "--target",
                "h3",
                "--requests",
                "30",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        rows = {r.split(",")[0]: r.split(",") for r in out.read_text().splitlines()[1:]}
        assert rows["h3"][2] == "30"
        assert rows["h2"][2] == "0"

    def test_zero_requests_zero_report(self, tmp_path):
        out = tmp_path / "report.csv"
        main(["experiment", "--state", "big-cluster", "--requests", "0", "--out", str(out)])
        for row in out.read_text().splitlines()[1:]:
            assert row.split(",")[2] == "0"
            assert float(row.split(",")[3]) == 0.0

    def test_clustered_lists_nine_servers_three_clusters(self, tmp_path):
        out = tmp_path / "report.csv"
        main(
            [
                "experiment",
                "--state",
                "clustered",
                "--k",
                "3",
                "--requests-per-cluster",
                "10",
                "--out",
                str(out),
            ]
        )
        rows = [r.split(",") for r in out.read_text().splitlines()[1:]]
        servers = [r for r in rows if r[1] == "server"]
        assert len(servers) == 9
        assert len({r[5] for r in servers}) == 3

    def test_single_server_requires_target(self):
        with pytest.raises(SystemExit):
            main(["experiment", "--state", "single-server"])

    def test_invalid_topology_file_exits_nonzero(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"nodes": []}')
        assert main(["cluster", "--topology", str(bad)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_custom_topology_file(self, tmp_path):
        doc = build_paper_topology().document()
        topo_path = tmp_path / "topo.json"
        topo_path.write_text(json.dumps(doc))
        out = tmp_path / "report.csv"
        code = main(
            [
                "experiment",
                "--topology",
                str(topo_path),
                "--state",
                "big-cluster",
                "--requests",
                "9",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        rows = out.read_text().splitlines()
        assert len(rows) == 11


class TestOtherCommands:
    def test_cluster_json(self, capsys):
        assert main(["cluster", "--k", "3"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["k"] == 3
        assert len(doc["servers"]) == 9

    def test_cluster_spectral(self, capsys):
        assert main(["cluster", "--k", "3", "--method", "spectral"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["method"] == "spectral"
        assert sorted(doc["priority_order"]) == [0, 1, 2]

    def test_table1_csv(self, capsys):
        assert main(["table1"]) == 0
        rows = capsys.readouterr().out.splitlines()
        assert rows[0] == "k,1,2,3,4,5,6,7,8,9"
        assert rows[2].endswith("900%")

    def test_serve_command_binds_and_answers(self):
        # drive the same server object the serve command uses
        server = make_server(port=0)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{server.server_address[1]}"
        try:
            put = requests.put(f"{base}/topology", json=build_paper_topology().document())
            assert put.status_code == 200
        finally:
            server.shutdown()
            server.server_close()
