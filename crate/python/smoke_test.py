"""Exercises the loglens_py extension end to end.

Build and install first:  pip install --no-build-isolation -e crates/py
"""

import math

import loglens_py as ll


def check_parsing():
    bodies = [f"session {i} opened for user u{i % 3}" for i in range(20)]
    bodies += [f"disk {i} reports {i * 7} bad sectors" for i in range(10)]
    batch = ll.LogBatch.from_bodies(bodies).cleaned()
    assert len(batch) == 30
    for algorithm in ("drain", "iplom", "ael"):
        result = ll.parse_batch(batch, algorithm=algorithm, threads=2)
        assert len(result) == 30
        assert len(set(result.line_template_ids)) == 2, (algorithm, result.templates)
        assert result.reconstruct(0) == batch.bodies[0].split()
        assert result.to_bytes() == ll.parse_batch(batch, algorithm=algorithm).to_bytes()


def check_loading():
    text = "INFO 1117843200 node up\nWARN 1117843260 node slow\nnot a record\n"
    batch = ll.LogBatch.from_text(
        text,
        line_pattern=r"^(?P<severity_text>[A-Z]+) (?P<timestamp>\d+) (?P<body>.*)$",
        timestamp_format="epoch",
    )
    assert batch.bodies == ["node up", "node slow", "not a record"]
    assert batch.timestamps[0].startswith("2005-06-04T00:00:00")
    assert batch.timestamps[2] is None


def check_detectors():
    rows = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [10.0, 10.0]]
    assert ll.lof(rows, k=2)["flags"] == [False, False, False, False, True]
    scores = ll.isolation_forest(rows, n_trees=100, subsample=4, seed=3)["scores"]
    assert max(range(5), key=scores.__getitem__) == 4
    km = ll.kmeans([[0.0], [1.0], [10.0], [11.0]], k=2, seed=1)
    assert math.isclose(km["inertia"], 1.0)
    db = ll.dbscan([[0.0], [0.5], [1.0], [9.0]], eps=0.6, min_pts=2)
    assert db["labels"][3] == -1 and db["clusters"] == 1
    assert math.isclose(ll.divergence([1.0, 0.0], [0.5, 0.5], kind="kl"), math.log(2))
    assert ll.divergence([0.3, 0.7], [0.3, 0.7]) == 0.0


def check_sequences():
    train = [[1, 2, 3, 4]] * 20
    model = ll.NgramModel.fit(train, order=2)
    out = model.detect([[1, 2, 3, 4], [1, 2, 9, 4]], k=1)
    assert out["flags"] == [False, True]
    again = ll.NgramModel.from_text(model.to_text())
    assert again.detect([[1, 2, 9, 4]], k=1)["flags"] == [True]
    m = ll.confusion([True, False, True], [True, False, False])
    assert (m["tp"], m["fp"], m["fn"], m["tn"]) == (1, 1, 0, 1)
    assert ll.auroc([0.9, 0.1, 0.8], [True, False, False]) == 1.0


def check_jobs(tmp):
    log = tmp / "app.log"
    log.write_text("".join(f"worker {i % 4} finished task {i}\n" for i in range(40)))
    yaml = f"application: summarize\nloader: {{path: {log}}}\nparser: {{algorithm: drain}}\n"
    assert ll.validate_job(yaml) == []
    report = ll.run_job_yaml(yaml)
    assert report["sections"]["results"]["records"] == "40"
    bad = ll.validate_job("application: cluster\nloader: {path: x.log}\nanalysis: {kind: kmeans, k: 0}\n")
    assert bad, "k = 0 must be rejected"


if __name__ == "__main__":
    import pathlib
    import tempfile

    check_parsing()
    check_loading()
    check_detectors()
    check_sequences()
    with tempfile.TemporaryDirectory() as d:
        check_jobs(pathlib.Path(d))
    print(f"loglens_py {ll.__version__}: smoke test passed")
