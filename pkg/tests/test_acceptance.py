"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line."""

import contextlib
import json
import math
import random
import statistics
import time

import jsonschema
import pytest

from conftest import ACCEPTANCE_LINES
from pydevstone.benchmark import devstone_metric, run_replications
from pydevstone.burn import burn, calibrate_burn
from pydevstone.cli import main
from pydevstone.devstone import DevstoneConfig, DevstoneType, expected_counts
from pydevstone.report import REPORT_SCHEMA, dumps_json, load_json, report_to_dict
from pydevstone.stats import ci95
from pydevstone.verify import grid, verify_grid

LI, HI, HO, HMOD = DevstoneType.LI, DevstoneType.HI, DevstoneType.HO, DevstoneType.HMOD

# 0.975 quantiles of Student's t: closed forms for df 1 and 2, a printed table value for df 9
T_DF1 = 1.0 / math.tan(math.pi / 40)
T_DF2 = (2 * 0.975 - 1) / math.sqrt(2 * 0.975 * 0.025)
T_DF9 = 2.262157


@contextlib.contextmanager
def criterion(n, what):
    try:
        yield
    except BaseException as exc:
        line = f"[FAIL] criterion {n}: {what} ({type(exc).__name__}: {exc})".splitlines()[0]
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    line = f"[PASS] criterion {n}: {what}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture(scope="session")
def metric_run(tmp_path_factory):
    path = tmp_path_factory.mktemp("metric") / "r.json"
    start = time.perf_counter()
    code = main(["metric", "--reps", "1", "--out", str(path)])
    elapsed = time.perf_counter() - start
    return code, path, elapsed


def _report_models(path):
    doc = json.loads(path.read_text(encoding="utf-8"))
    return doc, {(m["type"], m["depth"], m["width"]): m for m in doc["models"]}


def test_criterion_1_structural_counts():
    with criterion(1, "structural counts equal the closed forms on the full grid"):
        start = time.perf_counter()
        checks = verify_grid(grid(), structure_only=True)
        elapsed = time.perf_counter() - start
        assert len(checks) == 3 * 100 + 6 * 7
        assert [c.config.label for c in checks if not c.ok] == []
        assert elapsed < 10.0, f"{elapsed:.2f} s"


def test_criterion_2_event_counts():
    with criterion(2, "lambda count equals n_events on the full grid"):
        start = time.perf_counter()
        checks = verify_grid(grid())
        elapsed = time.perf_counter() - start
        assert all("n_events" in c.observed for c in checks)
        assert [c.config.label for c in checks if not c.ok] == []
        assert elapsed < 60.0, f"{elapsed:.2f} s"


def test_criterion_3_benchmark_set_scale(metric_run):
    with criterion(3, "one replication of the 12-model set completes with exact event counts"):
        code, path, elapsed = metric_run
        assert code == 0
        _, models = _report_models(path)
        assert len(models) == 12
        assert models[("HI", 200, 200)]["events"] == 3_960_101
        assert models[("HO", 200, 200)]["events"] == 3_960_101
        assert models[("LI", 200, 200)]["events"] == 39_602
        # HMOD(20,20) summed level by level by hand: 1 + sum over i of
        # (1 + (i-1)*19) * 190 + 19 * (20 + (i-1)*19) for i = 1..19
        assert models[("HMOD", 20, 20)]["events"] == 689_872
        for (kind, d, w), m in models.items():
            assert m["events"] == expected_counts(DevstoneConfig(DevstoneType(kind), d, w)).n_events
        print(f"full set, one replication: {elapsed:.1f} s wall clock (not gated)")


def test_criterion_4_metric_arithmetic():
    with criterion(4, "DEVStone metric arithmetic"):
        assert devstone_metric([2.831]) == pytest.approx(21.20, abs=0.01)
        assert devstone_metric([60.0]) == 1.0
        assert devstone_metric([30.0]) == 2.0
        rng = random.Random(20240)
        for _ in range(1000):
            means = [rng.uniform(1e-4, 50.0) for _ in range(12)]
            total = math.fsum(means)
            assert devstone_metric(means) * total == pytest.approx(60.0, rel=1e-9)


def test_criterion_5_statistics_oracle():
    with criterion(5, "ci95 matches closed-form references to 6 significant figures"):
        datasets = [
            ([1.0, 2.0], T_DF1),
            ([1.0, 2.0, 3.0], T_DF2),
            ([2.81, 2.83, 2.84, 2.79, 2.85, 2.82, 2.83, 2.80, 2.86, 2.81], T_DF9),
        ]
        for samples, t in datasets:
            n = len(samples)
            expected = t * statistics.stdev(samples) / math.sqrt(n)
            assert ci95(samples) == pytest.approx(expected, rel=5e-6)
        assert ci95([1.234] * 30) == 0.0


def test_criterion_6_determinism(capsys):
    with criterion(6, "verify output and per-config stats are reproducible"):
        capsys.readouterr()
        assert main(["verify"]) == 0
        first = capsys.readouterr().out.encode()
        assert main(["verify"]) == 0
        second = capsys.readouterr().out.encode()
        assert first == second
        for config in (
            DevstoneConfig(LI, 8, 8),
            DevstoneConfig(HI, 8, 8),
            DevstoneConfig(HO, 8, 8),
            DevstoneConfig(HMOD, 4, 5),
        ):
            # run_replications raises if any replication's stats differ from the first
            timing = run_replications(config, 30)
            assert len(timing.samples) == 30


def test_criterion_7_qualitative_orderings(metric_run):
    with criterion(7, "LI faster than HI; wide slower than deep (machine-dependent, 5% margin)"):
        _, path, _ = metric_run
        _, models = _report_models(path)

        def t(kind, d, w):
            return models[(kind, d, w)]["mean_s"]

        margin = 1.05
        assert t("LI", 200, 40) < t("HI", 200, 40) * margin
        assert t("LI", 40, 200) < t("HI", 40, 200) * margin
        for kind, deep, wide in (("HI", (200, 40), (40, 200)),
                                 ("HO", (200, 40), (40, 200)),
                                 ("HMOD", (20, 4), (4, 20))):
            assert t(kind, *deep) < t(kind, *wide) * margin, kind


def test_criterion_8_delay_calibration():
    with criterion(8, "burn(10 ms) lands in [8, 20] ms; delayed LI run honours its delays"):
        calibrate_burn()
        start = time.perf_counter()
        burn(10)
        elapsed_ms = (time.perf_counter() - start) * 1e3
        assert 8.0 <= elapsed_ms <= 20.0, f"{elapsed_ms:.2f} ms"

        timing = run_replications(DevstoneConfig(LI, 2, 3, ext_delay=1), 1)
        n_external = timing.stats.n_external
        assert n_external > 0
        assert timing.samples[0] * 1e3 >= 0.8 * n_external * 1.0


def test_criterion_9_report_schema(metric_run):
    with criterion(9, "metric JSON validates, round-trips, breakdown sums to 100"):
        code, path, _ = metric_run
        assert code == 0
        doc, _ = _report_models(path)
        jsonschema.validate(doc, REPORT_SCHEMA)
        report = load_json(path)
        assert report_to_dict(report) == doc
        assert json.loads(dumps_json(report)) == doc
        assert sum(doc["breakdown_pct"].values()) == pytest.approx(100.0, abs=0.01)
        assert doc["devstones_per_minute"] == pytest.approx(60.0 / doc["total_mean_s"], rel=1e-9)
