"""Suite orchestration: offline/online runs, shadow manifests, augmentation,
and report rendering."""

import csv
import json
import os

import numpy as np
import pytest

from drivebench import expert, harness, metrics, roadgen, simcore
from drivebench.errors import AgentError, InvalidDatasetError
from drivebench.harness import ReportRow, SuiteConfig
from drivebench.image_ops import load_gray, save_gray, save_png
from drivebench.perturb import default_catalog


def _make_dataset(root, n=4, h=24, w=32, classes=4, seed=0):
    rng = np.random.default_rng(seed)
    os.makedirs(root / "images")
    os.makedirs(root / "labels")
    for i in range(n):
        img = rng.integers(0, 256, (h, w, 3)).astype(np.uint8)
        lab = rng.integers(0, classes, (h, w)).astype(np.uint8)
        save_png(root / "images" / f"im{i}.png", img)
        save_gray(root / "labels" / f"im{i}.png", lab)
    return root


def _straight(length=50.0):
    n = int(length / 2) + 1
    wp = np.stack([np.linspace(0, length, n), np.zeros(n)], axis=1)
    return roadgen.Road(waypoints=wp, lane_width=4.0)


# ---------------------------------------------------------------------------
# config and dataset validation
# ---------------------------------------------------------------------------

def test_suite_config_validation():
    with pytest.raises(ValueError):
        SuiteConfig(perturbations=("fog",), timeout_s=0.0)
    with pytest.raises(ValueError):
        SuiteConfig(perturbations=())          # empty without nominal_only
    with pytest.raises(ValueError):
        SuiteConfig(perturbations=("fog",), levels=(0, 1))
    with pytest.raises(ValueError):
        SuiteConfig(perturbations=("fog",), levels=())
    SuiteConfig(perturbations=(), nominal_only=True)  # allowed


def test_load_dataset_happy_path(tmp_path):
    _make_dataset(tmp_path / "ds", n=3)
    items = harness.load_dataset(tmp_path / "ds")
    assert [name for name, _, _ in items] == ["im0.png", "im1.png", "im2.png"]
    assert items[0][1].shape == (24, 32, 3)
    assert items[0][2].shape == (24, 32)


def test_load_dataset_rejects_missing_pieces(tmp_path):
    with pytest.raises(InvalidDatasetError):
        harness.load_dataset(tmp_path / "nope")
    root = _make_dataset(tmp_path / "ds", n=2)
    os.remove(root / "labels" / "im1.png")
    with pytest.raises(InvalidDatasetError):
        harness.load_dataset(root)


def test_load_dataset_rejects_shape_mismatch(tmp_path):
    root = _make_dataset(tmp_path / "ds", n=1)
    save_gray(root / "labels" / "im0.png", np.zeros((10, 10), dtype=np.uint8))
    with pytest.raises(InvalidDatasetError):
        harness.load_dataset(root)


def test_load_dataset_rejects_empty(tmp_path):
    os.makedirs(tmp_path / "ds" / "images")
    os.makedirs(tmp_path / "ds" / "labels")
    with pytest.raises(InvalidDatasetError):
        harness.load_dataset(tmp_path / "ds")


# ---------------------------------------------------------------------------
# offline suite
# ---------------------------------------------------------------------------

def test_offline_echo_nominal_is_perfect(tmp_path):
    items = harness.embed_labels(
        harness.load_dataset(_make_dataset(tmp_path / "ds", n=4)))
    cfg = SuiteConfig(perturbations=("greyscale",), levels=(5,))
    rows, log = harness.run_offline(items, harness.builtin_seg_agent("echo"),
                                    cfg)
    assert rows[0].kind == "nominal"
    assert rows[0].avg == pytest.approx(1.0)
    assert rows[0].std == 0.0
    # greyscale level 5 averages the channels, destroying the embedded ids
    assert rows[1].kind == "greyscale"
    assert rows[1].avg < 0.5


def test_offline_oracle_agent_scores_one_everywhere(tmp_path):
    items = harness.load_dataset(_make_dataset(tmp_path / "ds", n=3))
    cfg = SuiteConfig(perturbations=("gaussian_noise", "fog"), levels=(1, 3, 5))
    rows, _ = harness.run_offline(items, harness.builtin_seg_agent("oracle"),
                                  cfg)
    assert [r.kind for r in rows] == ["nominal", "gaussian_noise", "fog"]
    for r in rows:
        assert r.avg == pytest.approx(1.0)
        assert r.std == pytest.approx(0.0)
        assert r.max == pytest.approx(1.0) and r.min == pytest.approx(1.0)


def test_offline_rows_recomputable_from_log(tmp_path):
    items = harness.embed_labels(
        harness.load_dataset(_make_dataset(tmp_path / "ds", n=4)))
    cfg = SuiteConfig(perturbations=("pixelate",), levels=(1, 2, 3))
    rows, log = harness.run_offline(items, harness.builtin_seg_agent("echo"),
                                    cfg, out_dir=tmp_path / "out")
    with open(tmp_path / "out" / "offline_log.csv", newline="") as fh:
        recs = list(csv.DictReader(fh))
    per_level = []
    for lv in (1, 2, 3):
        vals = [float(r["miou"]) for r in recs
                if r["kind"] == "pixelate" and int(r["level"]) == lv]
        assert len(vals) == 4
        per_level.append(np.mean(vals))
    assert rows[1].avg == pytest.approx(np.mean(per_level), abs=1e-6)
    assert rows[1].std == pytest.approx(np.std(per_level), abs=1e-6)
    assert rows[1].max == pytest.approx(np.max(per_level), abs=1e-6)
    assert rows[1].min == pytest.approx(np.min(per_level), abs=1e-6)


def test_offline_never_perturbs_labels(tmp_path):
    root = _make_dataset(tmp_path / "ds", n=2)
    before = [(root / "labels" / f"im{i}.png").read_bytes() for i in range(2)]
    items = harness.load_dataset(root)
    cfg = SuiteConfig(perturbations=("snow",), levels=(5,))
    harness.run_offline(items, harness.builtin_seg_agent("oracle"), cfg)
    after = [(root / "labels" / f"im{i}.png").read_bytes() for i in range(2)]
    assert before == after


def test_offline_agent_errors_are_logged_and_skipped(tmp_path):
    items = harness.load_dataset(_make_dataset(tmp_path / "ds", n=3))

    class Flaky:
        def __init__(self):
            self.calls = 0

        def segment(self, image):
            self.calls += 1
            if self.calls == 2:
                raise AgentError("no answer")
            return np.zeros(image.shape[:2], dtype=np.uint8)

    cfg = SuiteConfig(perturbations=(), nominal_only=True)
    rows, log = harness.run_offline(items, Flaky(), cfg)
    errors = [e for e in log if isinstance(e[3], str) and
              e[3].startswith("error:")]
    assert len(errors) == 1
    scored = [e for e in log if not isinstance(e[3], str)]
    assert len(scored) == 2          # the failing image is excluded, not 0
    assert rows[0].avg == pytest.approx(np.mean([e[3] for e in scored]))


def test_over_budget_kinds_skipped_unless_opted_in(tmp_path):
    items = harness.embed_labels(
        harness.load_dataset(_make_dataset(tmp_path / "ds", n=1)))
    cfg = SuiteConfig(perturbations=("zoom_blur", "fog"), levels=(1,))
    rows, _ = harness.run_offline(items, harness.builtin_seg_agent("echo"), cfg)
    assert [r.kind for r in rows] == ["nominal", "fog"]
    cfg2 = SuiteConfig(perturbations=("zoom_blur",), levels=(1,),
                       include_over_budget=True)
    rows2, _ = harness.run_offline(items, harness.builtin_seg_agent("echo"),
                                   cfg2)
    assert [r.kind for r in rows2] == ["nominal", "zoom_blur"]


def test_unknown_kind_raises(tmp_path):
    items = harness.load_dataset(_make_dataset(tmp_path / "ds", n=1))
    cfg = SuiteConfig(perturbations=("vortex",), levels=(1,))
    with pytest.raises(Exception):
        harness.run_offline(items, harness.builtin_seg_agent("oracle"), cfg)


# ---------------------------------------------------------------------------
# online suite
# ---------------------------------------------------------------------------

def test_episode_batch_strict_vs_lenient():
    roads = [_straight(40.0), _straight(40.0)]

    class FirstEpisodeExplodes(simcore.BaseAgent):
        needs_pixels = False

        def __init__(self):
            self.inner = expert.ExpertAgent()
            self.exploded = False

        def act(self, image, state, road):
            if not self.exploded:
                self.exploded = True
                raise AgentError("boom")
            return self.inner.act(image, state, road)

    strict = SuiteConfig(perturbations=("fog",), timeout_s=30.0, strict=True)
    stats = harness._episode_batch(roads, FirstEpisodeExplodes(), None,
                                   strict, simcore.WEATHER_PRESETS["nominal"],
                                   None, "t")
    assert stats["agent_errors"] == 1
    assert stats["success_frac"] == pytest.approx(0.5)   # 1 success / 2 roads

    lenient = SuiteConfig(perturbations=("fog",), timeout_s=30.0, strict=False)
    stats = harness._episode_batch(roads, FirstEpisodeExplodes(), None,
                                   lenient, simcore.WEATHER_PRESETS["nominal"],
                                   None, "t")
    assert stats["success_frac"] == pytest.approx(1.0)   # 1 success / 1 scored


def test_online_suite_shape_and_counts(tmp_path):
    cfg = SuiteConfig(perturbations=("greyscale",), levels=(1, 5),
                      agent="builtin:constant", timeout_s=5.0,
                      road_seeds=(11, 12))
    agent = simcore.ConstantAgent(0.0, 0.0)   # stationary: every episode OT
    rows = harness.run_online(cfg, agent=agent, out_dir=tmp_path / "out")
    assert [r.kind for r in rows] == ["nominal", "greyscale"]
    for r in rows:
        assert len(r.trend) == 5
        assert r.avg == pytest.approx(0.0)
        assert r.out_of_road == 0 and r.agent_errors == 0
        assert np.isnan(r.time_s)            # no successful episodes
    # nominal batch is replicated across the 5 trend slots
    assert rows[0].out_of_time == 5 * 2
    # two levels requested, trend padded with the last value
    assert rows[1].out_of_time == 2 * 2
    eps = sorted(os.listdir(tmp_path / "out" / "episodes"))
    assert "nominal_road0.jsonl" in eps
    assert "greyscale_l5_road1.jsonl" in eps
    assert (tmp_path / "out" / "report.csv").exists()


def test_online_requires_resolvable_agent():
    cfg = SuiteConfig(perturbations=("fog",), agent="tcp:localhost:9")
    with pytest.raises(ValueError):
        harness.run_online(cfg)


# ---------------------------------------------------------------------------
# shadow manifests
# ---------------------------------------------------------------------------

def test_run_shadow_writes_replayable_manifest(tmp_path):
    cfg = SuiteConfig(perturbations=("greyscale",), levels=(3,),
                      road_seeds=(1000,), timeout_s=4.0, seed=9)
    count = harness.run_shadow(cfg, tmp_path / "shadow")
    with open(tmp_path / "shadow" / "manifest.json") as fh:
        manifest = json.load(fh)
    assert manifest["samples"] == count
    assert manifest["road_seeds"] == [1000]
    assert manifest["perturbations"] == ["greyscale"]
    pngs = list((tmp_path / "shadow" / "samples").glob("*.png"))
    assert len(pngs) == count

    back = harness.shadow_config_from_manifest(
        tmp_path / "shadow" / "manifest.json")
    assert back.perturbations == cfg.perturbations
    assert back.levels == cfg.levels
    assert back.road_seeds == cfg.road_seeds
    assert back.seed == cfg.seed and back.timeout_s == cfg.timeout_s


# ---------------------------------------------------------------------------
# augmentation export
# ---------------------------------------------------------------------------

def test_export_augmented_counts_and_label_bytes(tmp_path):
    root = _make_dataset(tmp_path / "ds", n=4)
    out = tmp_path / "aug"
    n = harness.export_augmented(root, ["fog", "greyscale", "pixelate"],
                                 "max_intensity", out)
    assert n == 4 * (3 + 1)
    names = sorted(os.listdir(out / "images"))
    assert "im0__nominal.png" in names
    assert "im0__fog_l5.png" in names
    assert sorted(os.listdir(out / "labels")) == names
    src = (root / "labels" / "im2.png").read_bytes()
    assert (out / "labels" / "im2__fog_l5.png").read_bytes() == src

    n_all = harness.export_augmented(root, ["fog", "greyscale", "pixelate"],
                                     "all_levels", tmp_path / "aug2")
    assert n_all == 4 * (5 * 3 + 1)


def test_export_augmented_rejects_bad_inputs(tmp_path):
    root = _make_dataset(tmp_path / "ds", n=1)
    with pytest.raises(ValueError):
        harness.export_augmented(root, ["fog"], "everything", tmp_path / "o")
    with pytest.raises(Exception):
        harness.export_augmented(root, ["vortex"], "max_intensity",
                                 tmp_path / "o")


# ---------------------------------------------------------------------------
# report rendering
# ---------------------------------------------------------------------------

def _offline_rows():
    return [ReportRow(kind="nominal", avg=1.0, std=0.0, max=1.0, min=1.0),
            ReportRow(kind="fog", avg=0.51234, std=0.1, max=0.7, min=0.3)]


def _online_rows():
    return [ReportRow(kind="fog", avg=50.0, std=25.0,
                      trend=(1.0, 0.75, 0.5, 0.25, 0.0), out_of_road=3,
                      out_of_time=2, agent_errors=0, time_s=21.5,
                      jitter_pct=1.234)]


def test_offline_csv_schema():
    text = harness.report_csv_text(_offline_rows(), "offline")
    lines = text.splitlines()
    assert lines[0] == "kind,avg_iou,std_iou,max_iou,min_iou"
    assert lines[2] == "fog,0.5123,0.1000,0.7000,0.3000"


def test_online_csv_schema():
    text = harness.report_csv_text(_online_rows(), "online")
    lines = text.splitlines()
    assert lines[0].startswith("kind,avg_success_pct,std_success_pct,l1")
    assert lines[1] == ("fog,50.00,25.00,1.00,0.75,0.50,0.25,0.00,"
                        "3,2,0,21.50,1.234")


def test_markdown_trend_glyphs():
    md = harness.report_md_text(_online_rows(), "online")
    assert "█▆▄▂ " in md
    assert md.startswith("| Perturbation |")


def test_write_report_round_trip(tmp_path):
    harness.write_report(_offline_rows(), tmp_path, "offline")
    csv_text = (tmp_path / "report.csv").read_bytes().decode()
    assert csv_text == harness.report_csv_text(_offline_rows(), "offline")
    assert (tmp_path / "report.md").exists()
