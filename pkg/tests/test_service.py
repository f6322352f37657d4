"""HTTP surface tests using the in-process test client."""
import numpy as np
import pytest
from fastapi.testclient import TestClient

from relu_approx.arithmetic import build_tooth
from relu_approx.network import Network, net_eval
from relu_approx.service import app

client = TestClient(app)


def test_health():
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert body["service"] == "relu-approx"


class TestBuildEndpoints:
    def test_square_by_level(self):
        resp = client.post("/build/square", json={"m": 3})
        assert resp.status_code == 200
        body = resp.json()
        assert body["guarantee_ok"] is True
        assert body["report"]["metrics"]["depth"] == 5
        assert body["report"]["measured_error"] <= 2.0**-8
        net = Network.from_json_dict(body["network"])
        assert net_eval(net, 0.5) == 0.25

    def test_square_by_eps_without_network(self):
        resp = client.post("/build/square", json={"eps": 0.01, "include_network": False})
        assert resp.status_code == 200
        body = resp.json()
        assert body["network"] is None
        assert body["report"]["params"]["m"] == 3

    def test_square_requires_exactly_one_parameter(self):
        assert client.post("/build/square", json={}).status_code == 422
        assert client.post("/build/square", json={"m": 2, "eps": 0.1}).status_code == 422

    def test_multiplier(self):
        resp = client.post(
            "/build/multiplier", json={"bound": 2.0, "eps": 0.05, "grid": 51}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["guarantee_ok"] is True
        assert body["report"]["extra"]["max_error_on_zero_lines"] == 0.0

    def test_sobolev(self):
        resp = client.post(
            "/build/sobolev", json={"d": 1, "n": 2, "eps": 0.3, "target": "sine"}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["guarantee_ok"] is True
        assert body["network"] is None  # omitted by default
        assert "skeleton_hash" in body["report"]["extra"]

    def test_lipschitz_returns_plan(self):
        resp = client.post(
            "/build/lipschitz", json={"eps": 0.05, "target": "minmax"}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["guarantee_ok"] is True
        plan = body["plan"]
        assert plan["m"] >= 1 and plan["T"] >= 1
        assert len(plan["assignment"]) == plan["T"]

    def test_unknown_target_rejected(self):
        resp = client.post(
            "/build/lipschitz", json={"eps": 0.05, "target": "nonsense"}
        )
        assert resp.status_code == 422


class TestConvertAnalyze:
    def test_convert_to_pwl_and_back(self):
        tooth = build_tooth().to_json_dict()
        act = {"pwl": {"domain": [-1.0, 1.0], "x": [-1.0, 0.0, 1.0], "y": [1.0, 0.0, 1.0]}}
        resp = client.post(
            "/convert",
            json={"network": tooth, "to": "pwl", "activation": act, "box": [[0.0, 1.0]]},
        )
        assert resp.status_code == 200
        converted = resp.json()
        assert converted["metrics"]["hidden_units"] <= 2 * converted["source_metrics"]["hidden_units"]
        back = client.post(
            "/convert", json={"network": converted["network"], "to": "relu"}
        )
        assert back.status_code == 200
        net = Network.from_json_dict(back.json()["network"])
        orig = Network.from_json_dict(tooth)
        xs = np.linspace(0, 1, 101)
        np.testing.assert_allclose(net.eval_batch(xs), orig.eval_batch(xs), atol=1e-9)

    def test_convert_missing_box(self):
        tooth = build_tooth().to_json_dict()
        act = {"pwl": {"domain": [-1.0, 1.0], "x": [-1.0, 0.0, 1.0], "y": [1.0, 0.0, 1.0]}}
        resp = client.post(
            "/convert", json={"network": tooth, "to": "pwl", "activation": act}
        )
        assert resp.status_code == 422

    def test_analyze_pieces_and_error(self):
        tooth = build_tooth().to_json_dict()
        resp = client.post(
            "/analyze",
            json={"network": tooth, "pieces": True, "error_vs": "minmax", "grid": 1001},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["validation"] == []
        assert body["metrics"]["depth"] == 3
        assert body["pieces"]["pieces"] == 2
        assert body["pieces"]["ok"] is True
        # tooth = 2 * min(x, 1-x)
        assert body["measured_error"] == pytest.approx(0.5, abs=1e-9)


class TestScalingEndpoint:
    def test_square_sweep(self):
        resp = client.post(
            "/scaling", json={"builder": "square", "eps_list": [0.1, 0.01]}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["rows"]) == 2
        assert body["csv"].splitlines()[0].startswith("builder,epsilon")

    def test_bad_builder_rejected_by_schema(self):
        resp = client.post(
            "/scaling", json={"builder": "bogus", "eps_list": [0.1]}
        )
        assert resp.status_code == 422
