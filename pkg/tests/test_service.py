import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from cnncompare import formats, pipeline
from cnncompare.analytics import AccuracyReport, class_accuracy_stats
from cnncompare.config import ServiceConfig
from cnncompare.service import create_app


@pytest.fixture(scope="module")
def client(toy_workspace):
    config = ServiceConfig(
        registry_path=str(toy_workspace["registry"]),
        dataset_root=str(toy_workspace["dataset"]),
        store_root=str(toy_workspace["store"]),
        hierarchy_path=str(toy_workspace["hierarchy"]),
    )
    app = create_app(config)
    with TestClient(app) as c:
        c.compare_state = app.state.compare
        yield c


def wait_for_task(client, task_id, timeout=120.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        body = client.get(f"/tasks/{task_id}").json()
        if body["status"] in ("done", "failed"):
            return body
        time.sleep(0.1)
    raise TimeoutError(f"task {task_id} did not finish")


def run_task(client, spec):
    created = client.post("/tasks", json=spec)
    assert created.status_code == 201, created.text
    task_id = created.json()["task_id"]
    body = wait_for_task(client, task_id)
    assert body["status"] == "done", body
    return task_id


class TestOverview:
    def test_list_models_summaries(self, client):
        body = client.get("/models").json()
        assert len(body["models"]) == 2
        for summary in body["models"]:
            assert summary["param_count"] > 0
            assert 0.0 <= summary["overall_accuracy"] <= 1.0
            assert len(summary["per_root"]) == 3

    def test_per_root_matches_analytics_oracle(self, client):
        state = client.compare_state
        body = client.get("/models").json()
        from cnncompare.analytics import accuracy_report

        for summary in body["models"]:
            conf, meta = state.confidence_rows(summary["model_id"])
            report = accuracy_report(meta["img_classes"], conf, state.hierarchy)
            assert summary["per_root"] == report.per_root
            assert summary["overall_accuracy"] == report.overall

    def test_projection_point_count(self, client):
        body = client.get("/models/toy_a/projection").json()
        assert len(body["coords"]) == len(body["class_ids"]) == 10
        assert body["root_index"] is not None

    def test_projection_bit_equal_to_artifact(self, client):
        state = client.compare_state
        body = client.get("/models/toy_a/projection").json()
        key = pipeline.projection_key("toy_a", state.ds, 42, 30.0)
        stored = formats.json_from_bytes(state.store.get(key))
        assert body == stored

    def test_unknown_model_404(self, client):
        resp = client.get("/models/ghost/projection")
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_model"

    def test_model_accuracy_endpoint(self, client):
        state = client.compare_state
        body = client.get("/models/toy_a/accuracy").json()
        assert body["per_leaf"] == state.accuracy("toy_a")["per_leaf"]
        assert body["class_labels"]["0"] == "red"
        assert client.get("/models/ghost/accuracy").status_code == 404

    def test_class_stats_delegates_to_analytics(self, client):
        state = client.compare_state
        body = client.get("/stats/classes", params={"k": 3}).json()
        reports = [AccuracyReport.from_dict(state.accuracy(m)) for m in ("toy_a", "toy_b")]
        expected = class_accuracy_stats(reports, k=3).to_dict()
        for section in ("diverging", "coherent_top", "coherent_bottom"):
            assert body[section] == expected[section]

    def test_class_stats_default_k(self, client):
        body = client.get("/stats/classes").json()
        assert len(body["diverging"]) == 6

    def test_examples_cover_all_five_methods(self, client):
        body = client.get("/examples", params={"model_id": "toy_a"}).json()
        assert set(body["methods"]) == {
            "grad_cam", "bbmp", "grad_cam_pp", "smooth_grad_cam_pp", "score_cam",
        }
        for token in body["methods"].values():
            resp = client.get(f"/artifacts/{token}")
            assert resp.headers["content-type"] == "image/png"

    def test_hierarchy_and_manifest_endpoints(self, client):
        hier = client.get("/hierarchy").json()
        assert hier["root_labels"] == ["warm", "cool", "mixed"]
        manifest = client.get("/dataset/manifest").json()
        assert len(manifest["images"]) == 500


class TestColdStore:
    def test_overview_requires_precompute(self, toy_workspace, tmp_path):
        config = ServiceConfig(
            registry_path=str(toy_workspace["registry"]),
            dataset_root=str(toy_workspace["dataset"]),
            store_root=str(tmp_path / "cold-store"),
            hierarchy_path=str(toy_workspace["hierarchy"]),
        )
        with TestClient(create_app(config)) as cold:
            resp = cold.get("/models")
            assert resp.status_code == 409
            assert resp.json()["code"] == "not_precomputed"
            stats = cold.get("/stats/classes")
            assert stats.status_code == 409
            assert stats.json()["code"] == "insufficient_models"


class TestTasks:
    def test_single_model_task_with_cih(self, client):
        task_id = run_task(client, {
            "model_ids": ["toy_a"],
            "class_ids": [3],
            "method": "grad_cam",
            "max_images_per_class": 4,
        })
        rows = client.get(f"/tasks/{task_id}/results").json()["rows"]
        assert len(rows) == 4
        for row in rows:
            assert row["cih_ref"] is not None
            cih = client.get(f"/artifacts/{row['cih_ref']}").json()
            assert len(cih["bins"]) == 3
            att = client.get(f"/artifacts/{row['attention_ref']}")
            assert att.content[:4] == b"ATTN"
            overlay = client.get(f"/artifacts/{row['overlay_ref']}")
            assert overlay.headers["content-type"] == "image/png"

    def test_multi_model_task_no_cih(self, client, toy_workspace):
        state = client.compare_state
        image_ref = state.manifest.refs_for_class(2)[0]
        task_id = run_task(client, {
            "model_ids": ["toy_a", "toy_b"],
            "class_ids": [2],
            "method": "grad_cam",
            "image_ref": image_ref,
        })
        rows = client.get(f"/tasks/{task_id}/results").json()["rows"]
        assert len(rows) == 2
        assert all(r["cih_ref"] is None for r in rows)

    def test_seven_model_single_class_spec_validates(self):
        # validation is independent of weights being loadable
        from types import SimpleNamespace

        from cnncompare.service import TaskCreate, _validate_task

        records = {f"model_{i}": None for i in range(7)}
        manifest = SimpleNamespace(
            class_labels={124: "crustacean"},
            images=[SimpleNamespace(image_ref="124_x/a.png", class_index=124)],
        )
        state = SimpleNamespace(records=records, manifest=manifest)
        _validate_task(TaskCreate(
            model_ids=list(records), class_ids=[124], method="grad_cam",
        ), state)

    def test_single_model_smooth_task_accepted(self, client):
        task_id = run_task(client, {
            "model_ids": ["toy_a"],
            "class_ids": [1],
            "method": "smooth_grad_cam_pp",
            "max_images_per_class": 1,
        })
        rows = client.get(f"/tasks/{task_id}/results").json()["rows"]
        assert len(rows) == 1
        assert rows[0]["cih_ref"] is not None

    def test_custom_method_params_key_distinct_artifacts(self, client):
        base = {
            "model_ids": ["toy_a"],
            "class_ids": [1],
            "method": "smooth_grad_cam_pp",
            "max_images_per_class": 1,
        }
        default_task = run_task(client, base)
        custom_task = run_task(client, {**base, "params": {"n_samples": 4, "sigma": 0.05}})
        row_default = client.get(f"/tasks/{default_task}/results").json()["rows"][0]
        row_custom = client.get(f"/tasks/{custom_task}/results").json()["rows"][0]
        assert row_default["attention_ref"] != row_custom["attention_ref"]
        for row in (row_default, row_custom):
            resp = client.get(f"/artifacts/{row['attention_ref']}")
            assert resp.content[:4] == b"ATTN"

    def test_fourteen_models_rejected(self, client):
        resp = client.post("/tasks", json={
            "model_ids": [f"m{i}" for i in range(14)],
            "class_ids": [0],
            "method": "grad_cam",
        })
        assert resp.status_code == 422
        body = resp.json()
        assert body["code"] == "validation_error"
        assert any("1..13" in p for p in body["detail"])

    def test_multi_model_multi_class_rejected(self, client):
        resp = client.post("/tasks", json={
            "model_ids": ["toy_a", "toy_b"],
            "class_ids": [0, 1],
            "method": "grad_cam",
        })
        assert resp.status_code == 422

    def test_unknown_method_rejected(self, client):
        resp = client.post("/tasks", json={
            "model_ids": ["toy_a"], "class_ids": [0], "method": "cam",
        })
        assert resp.status_code == 422

    def test_unknown_task_404(self, client):
        assert client.get("/tasks/nope").status_code == 404

    def test_rows_reproducible_from_artifacts(self, client):
        state = client.compare_state
        task_id = run_task(client, {
            "model_ids": ["toy_b"],
            "class_ids": [5],
            "method": "grad_cam",
            "max_images_per_class": 5,
        })
        rows = client.get(f"/tasks/{task_id}/results").json()["rows"]
        rng = np.random.default_rng(0)
        for row in (rows[i] for i in rng.integers(0, len(rows), size=10)):
            conf, meta = state.confidence_rows(row["model_id"])
            vec = conf[meta["image_refs"].index(row["image_ref"])]
            predicted = int(np.argmax(vec))
            acc = state.accuracy(row["model_id"])
            assert row["predicted_class"] == predicted
            assert row["confidence"] == float(vec[predicted])
            assert row["overall_accuracy"] == acc["overall"]
            assert row["class_accuracy"] == acc["per_leaf"][row["ground_truth_class"]]


@pytest.fixture(scope="module")
def table_task(client):
    return run_task(client, {
        "model_ids": ["toy_a", "toy_b"],
        "class_ids": [7],
        "method": "grad_cam",
        "max_images_per_class": 6,
    })


class TestResultsTable:
    def test_sort_desc_monotone(self, client, table_task):
        rows = client.get(f"/tasks/{table_task}/results",
                          params={"sort_by": "confidence", "order": "desc"}).json()["rows"]
        values = [r["confidence"] for r in rows]
        assert values == sorted(values, reverse=True)

    def test_sort_stability_repeatable(self, client, table_task):
        a = client.get(f"/tasks/{table_task}/results",
                       params={"sort_by": "class_accuracy", "order": "desc"}).json()["rows"]
        b = client.get(f"/tasks/{table_task}/results",
                       params={"sort_by": "class_accuracy", "order": "desc"}).json()["rows"]
        assert a == b

    def test_ties_break_by_model_then_image(self, client, table_task):
        rows = client.get(f"/tasks/{table_task}/results",
                          params={"sort_by": "overall_accuracy", "order": "desc",
                                  "page_size": 100}).json()["rows"]
        groups = {}
        for r in rows:
            groups.setdefault(r["overall_accuracy"], []).append((r["model_id"], r["image_ref"]))
        for members in groups.values():
            assert members == sorted(members)

    def test_empty_filter_returns_all(self, client, table_task):
        body = client.get(f"/tasks/{table_task}/results", params={"page_size": 100}).json()
        assert body["total"] == 12

    def test_substring_filter(self, client, table_task):
        body = client.get(f"/tasks/{table_task}/results",
                          params={"filter": "toy_a", "page_size": 100}).json()
        assert body["total"] == 6
        assert all(r["model_id"] == "toy_a" for r in body["rows"])

    def test_unknown_column_rejected(self, client, table_task):
        resp = client.get(f"/tasks/{table_task}/results", params={"sort_by": "wall_time"})
        assert resp.status_code == 400
        assert resp.json()["code"] == "unknown_column"

    def test_pagination_default_20(self, client, table_task):
        body = client.get(f"/tasks/{table_task}/results").json()
        assert body["page_size"] == 20


@pytest.fixture(scope="module")
def sim_task(client):
    state = client.compare_state
    image_ref = state.manifest.refs_for_class(1)[2]
    return run_task(client, {
        "model_ids": ["toy_a", "toy_b"],
        "class_ids": [1],
        "method": "grad_cam",
        "image_ref": image_ref,
    })


class TestSimilarity:
    def test_two_by_two_symmetric_unit_diagonal(self, client, sim_task):
        body = client.get(f"/tasks/{sim_task}/similarity").json()
        values = np.asarray(body["values"])
        assert values.shape == (2, 2)
        assert np.array_equal(values, values.T)
        assert np.allclose(np.diag(values), 1.0, atol=1e-9)
        assert body["labels"] == ["toy_a", "toy_b"]

    def test_default_measure_is_l1(self, client, sim_task):
        body = client.get(f"/tasks/{sim_task}/similarity").json()
        assert body["measure"] == "l1"

    def test_values_match_saliency_oracle(self, client, sim_task):
        from cnncompare.explain import params_digest
        from cnncompare.saliency import similarity_matrix

        state = client.compare_state
        body = client.get(f"/tasks/{sim_task}/similarity", params={"measure": "ssim"}).json()
        spec = state.task(sim_task).spec
        digest = params_digest(pipeline.default_params("grad_cam"))
        maps = []
        for model_id in spec.model_ids:
            att = state.store.get(pipeline.attention_key(
                model_id, state.ds, "grad_cam", digest, spec.image_ref))
            maps.append(formats.matrix_from_bytes(att, formats.MAGIC_ATTENTION))
        expected = similarity_matrix(maps, "ssim", labels=spec.model_ids)
        assert np.allclose(np.asarray(body["values"]), expected.values, atol=1e-9)

    def test_heatmap_artifact_served(self, client, sim_task):
        body = client.get(f"/tasks/{sim_task}/similarity").json()
        png = client.get(f"/artifacts/{body['heatmap_ref']}")
        assert png.headers["content-type"] == "image/png"

    def test_single_model_task_wrong_kind(self, client):
        task_id = run_task(client, {
            "model_ids": ["toy_a"], "class_ids": [0], "method": "grad_cam",
            "max_images_per_class": 1,
        })
        resp = client.get(f"/tasks/{task_id}/similarity")
        assert resp.status_code == 409
        assert resp.json()["code"] == "wrong_task_kind"


class TestThreshold:
    def test_threshold_update_reuses_attention(self, client):
        state = client.compare_state
        task_id = run_task(client, {
            "model_ids": ["toy_a"], "class_ids": [4], "method": "grad_cam",
            "max_images_per_class": 2, "threshold": 0.5,
        })
        misses_before = state.store.stats.misses
        resp = client.patch(f"/tasks/{task_id}/threshold", json={"threshold": 0.3})
        assert resp.status_code == 200
        rows = resp.json()["rows"]
        assert all("t0.3" in r["contour_ref"] for r in rows)
        # attention keys untouched: only derived artifacts were produced
        for row in rows:
            att_resp = client.get(f"/artifacts/{row['attention_ref']}")
            assert att_resp.status_code == 200

        misses_between = state.store.stats.misses
        resp2 = client.patch(f"/tasks/{task_id}/threshold", json={"threshold": 0.3})
        assert resp2.status_code == 200
        assert state.store.stats.misses == misses_between  # pure cache hits
        assert misses_between > misses_before

    def test_threshold_zero_gives_full_levels(self, client):
        task_id = run_task(client, {
            "model_ids": ["toy_a"], "class_ids": [6], "method": "grad_cam",
            "max_images_per_class": 1, "threshold": 0.0,
        })
        row = client.get(f"/tasks/{task_id}/results").json()["rows"][0]
        contours = client.get(f"/artifacts/{row['contour_ref']}").json()
        assert [lv["level"] for lv in contours["levels"]] == [0.2, 0.4, 0.6, 0.8]

    def test_invalid_threshold_rejected(self, client):
        task_id = run_task(client, {
            "model_ids": ["toy_a"], "class_ids": [6], "method": "grad_cam",
            "max_images_per_class": 1,
        })
        resp = client.patch(f"/tasks/{task_id}/threshold", json={"threshold": 1.5})
        assert resp.status_code == 422


class TestIdempotence:
    def test_rerun_task_byte_identical_rows(self, client):
        spec = {
            "model_ids": ["toy_a", "toy_b"],
            "class_ids": [9],
            "method": "grad_cam_pp",
            "max_images_per_class": 3,
        }
        first = run_task(client, spec)
        second = run_task(client, spec)
        rows1 = client.get(f"/tasks/{first}/results", params={"page_size": 100}).json()["rows"]
        rows2 = client.get(f"/tasks/{second}/results", params={"page_size": 100}).json()["rows"]
        assert json.dumps(rows1, sort_keys=True) == json.dumps(rows2, sort_keys=True)

    def test_warm_overview_latency_under_200ms(self, client):
        client.get("/models")  # warm any lazy state
        start = time.perf_counter()
        resp = client.get("/models")
        elapsed = time.perf_counter() - start
        assert resp.status_code == 200
        assert elapsed < 0.2
