"""Evaluation bench: shared scoring path, groups, hypervolumes, reports."""

import io

import numpy as np
import pytest

from heliogen.bench import test_set_eval as eval_test_set
from heliogen.bench import (
    GROUP_LABELS,
    BenchError,
    EvalGroup,
    HvRow,
    baseline_eval,
    evaluate_depthmap,
    evaluate_inferences,
    hypervolume_report,
    inference_eval,
    reconstruction_eval,
    summarize,
    timing_report,
    write_fronts_csv,
    write_hypervolumes_csv,
    write_scatter_csv,
    write_timings_csv,
)
from heliogen.codec import DepthMap, rasterize_scene
from heliogen.config import (
    AnnealConfig,
    GeometryConfig,
    LatentSearchConfig,
    PipelineConfig,
    RasterConfig,
    SkyConfig,
)
from heliogen.latent import infer_latent
from heliogen.nn.vae import VaeModel
from heliogen.optimizer import PerfPoint
from heliogen.pipeline import generate_dataset
from heliogen.scene import (
    baseline_flat_roof,
    baseline_tilted_roof,
    boundary_condition_from_id,
)
from heliogen.solar import SkyModel

GEOM = GeometryConfig()
RASTER = RasterConfig()
DESK = PipelineConfig(
    sky=SkyConfig(day_step=30, hour_step=3.0),
    anneal=AnnealConfig(steps=40, mesh_resolution=6),
    latent=LatentSearchConfig(iterations=12, restarts=2, convergence_window=12),
)


@pytest.fixture(scope="module")
def sky():
    return SkyModel.from_config(DESK.sky)


@pytest.fixture(scope="module")
def dataset(sky):
    return generate_dataset([0, 85, 170, 256, 341], DESK, rng_seed=7, sky=sky)


@pytest.fixture(scope="module")
def model():
    return VaeModel(latent_dim=16, image_size=16, seed=11)


def zero_depth():
    return DepthMap(np.zeros((16, 16), dtype=np.float32), RASTER.world_extent)


def flat_depth():
    return rasterize_scene(None, baseline_flat_roof(100.0, GEOM), RASTER, GEOM)


# ------------------------------------------------------ evaluate_depthmap


def test_flat_slab_hits_target_volume(sky):
    p = evaluate_depthmap(flat_depth(), None, sky, RASTER, GEOM)
    assert p.volume == pytest.approx(100.0, rel=1e-5)
    assert p.vol_dev_sq < 1e-9
    assert np.isfinite(p.avg_radiation) and p.avg_radiation > 0.0


def test_zero_depth_is_degenerate_not_dropped(sky):
    p = evaluate_depthmap(zero_depth(), None, sky, RASTER, GEOM)
    assert np.isnan(p.avg_radiation)
    assert p.volume == 0.0
    assert p.vol_dev_sq == 10000.0


def test_evaluation_is_deterministic(sky):
    a = evaluate_depthmap(flat_depth(), None, sky, RASTER, GEOM)
    b = evaluate_depthmap(flat_depth(), None, sky, RASTER, GEOM)
    assert (a.avg_radiation, a.volume, a.vol_dev_sq) == (
        b.avg_radiation, b.volume, b.vol_dev_sq
    )


def test_backends_agree_to_roundoff(sky):
    a = evaluate_depthmap(flat_depth(), None, sky, RASTER, GEOM, backend="numba")
    b = evaluate_depthmap(flat_depth(), None, sky, RASTER, GEOM, backend="numpy")
    assert a.avg_radiation == pytest.approx(b.avg_radiation, rel=1e-9)
    assert a.volume == b.volume


# -------------------------------------------------------------- EvalGroup


def test_unknown_group_label_rejected():
    with pytest.raises(BenchError):
        EvalGroup("mystery", 0, ())


def test_front_points_skip_degenerates_keep_payloads():
    items = (
        (zero_depth(), PerfPoint.measure(5.0, 100.0, 100.0)),
        (zero_depth(), PerfPoint.measure(float("nan"), 0.0, 100.0)),
        (zero_depth(), PerfPoint.measure(4.0, 110.0, 100.0)),
    )
    pts = EvalGroup("test_set", 0, items).front_points()
    assert [p.payload for p in pts] == [0, 2]
    assert pts[0].o1 == -5.0 and pts[1].o2 == 100.0


# -------------------------------------------------------------- summarize


def test_summary_moments_over_finite_points():
    items = (
        (zero_depth(), PerfPoint.measure(2.0, 101.0, 100.0)),
        (zero_depth(), PerfPoint.measure(4.0, 100.0, 100.0)),
        (zero_depth(), PerfPoint.measure(float("nan"), 0.0, 100.0)),
    )
    s = summarize(EvalGroup("inference", 3, items))
    assert s.count == 3 and s.degenerate == 1
    assert s.mean_radiation == pytest.approx(3.0)
    assert s.std_radiation == pytest.approx(1.0)       # population std
    assert s.mean_vol_dev_sq == pytest.approx(0.5)
    assert s.std_vol_dev_sq == pytest.approx(0.5)
    assert s.label == "inference" and s.bc_id == 3


def test_summary_of_all_degenerate_group_raises():
    items = ((zero_depth(), PerfPoint.measure(float("nan"), 0.0, 100.0)),)
    with pytest.raises(BenchError):
        summarize(EvalGroup("random_uniform", 0, items))


# ------------------------------------------------------------ the groups


def test_test_set_uses_the_shared_path(sky, dataset):
    groups = eval_test_set(dataset, sky, RASTER, GEOM)
    test_ids = sorted({r.bc_id for r in dataset.test_records})
    assert [g.bc_id for g in groups] == test_ids
    for g in groups:
        assert g.label == "test_set"
        records = [r for r in dataset.test_records if r.bc_id == g.bc_id]
        assert len(g.items) == len(records)
        bc = boundary_condition_from_id(g.bc_id, GEOM.positions_per_side)
        for (depth, perf), rec in zip(g.items, records):
            assert depth is rec.depth
            direct = evaluate_depthmap(rec.depth, bc, sky, RASTER, GEOM)
            assert perf.avg_radiation == direct.avg_radiation
            assert perf.vol_dev_sq == direct.vol_dev_sq


def test_reconstruction_counts_and_determinism(sky, dataset, model):
    a = reconstruction_eval(model, dataset, sky, samples_per_record=3,
                            raster=RASTER, geom=GEOM)
    b = reconstruction_eval(model, dataset, sky, samples_per_record=3,
                            raster=RASTER, geom=GEOM)
    test_ids = sorted({r.bc_id for r in dataset.test_records})
    assert [g.bc_id for g in a] == test_ids
    for ga, gb in zip(a, b):
        assert ga.label == "reconstruction"
        n_records = len([r for r in dataset.test_records if r.bc_id == ga.bc_id])
        assert len(ga.items) == 3 * n_records
        for (da, pa), (db, pb) in zip(ga.items, gb.items):
            assert np.array_equal(da.pixels, db.pixels)
            assert (pa.avg_radiation, pa.vol_dev_sq) == (
                pb.avg_radiation, pb.vol_dev_sq
            )


def test_reconstruction_seed_changes_samples(sky, dataset, model):
    a = reconstruction_eval(model, dataset, sky, samples_per_record=2,
                            rng_seed=0, raster=RASTER, geom=GEOM)
    b = reconstruction_eval(model, dataset, sky, samples_per_record=2,
                            rng_seed=1, raster=RASTER, geom=GEOM)
    assert not np.array_equal(a[0].items[0][0].pixels, b[0].items[0][0].pixels)


def test_reconstruction_needs_samples(dataset, model):
    with pytest.raises(BenchError):
        reconstruction_eval(model, dataset, samples_per_record=0)


def test_inference_groups_scored_through_shared_path(sky, model):
    groups = inference_eval(model, [85, 0], DESK.latent, sky,
                            raster=RASTER, geom=GEOM)
    assert [g.bc_id for g in groups] == [0, 85]
    for g in groups:
        assert g.label == "inference"
        assert len(g.items) == DESK.latent.restarts
        bc = boundary_condition_from_id(g.bc_id, GEOM.positions_per_side)
        for depth, perf in g.items:
            direct = evaluate_depthmap(depth, bc, sky, RASTER, GEOM)
            assert perf.avg_radiation == direct.avg_radiation
            assert perf.vol_dev_sq == direct.vol_dev_sq


def test_inference_matches_standalone_search(sky, model):
    group = inference_eval(model, [85], DESK.latent, sky,
                           rng_seed=0, raster=RASTER, geom=GEOM)[0]
    solo = infer_latent(model, 85, DESK.latent, rng_seed=(0, 85),
                        raster=RASTER, geom=GEOM)
    for (depth, _), r in zip(group.items, solo):
        assert np.array_equal(depth.pixels, r.depth.pixels)


def test_evaluate_inferences_attaches_perf(sky, model):
    results = infer_latent(model, 0, DESK.latent, raster=RASTER, geom=GEOM)
    scored = evaluate_inferences(results, None, sky, RASTER, GEOM)
    for before, after in zip(results, scored):
        assert before.perf is None
        assert after.perf is not None
        assert np.array_equal(before.depth.pixels, after.depth.pixels)
        direct = evaluate_depthmap(before.depth, None, sky, RASTER, GEOM)
        assert after.perf.avg_radiation == direct.avg_radiation


def test_baseline_groups_shape(sky):
    groups = baseline_eval(0, sky, n_random=4, raster=RASTER, geom=GEOM)
    assert [g.label for g in groups] == [
        "baseline_flat", "baseline_tilted", "random_uniform", "random_gaussian"
    ]
    assert [len(g.items) for g in groups] == [1, 1, 4, 4]
    with pytest.raises(BenchError):
        baseline_eval(0, sky, n_random=0)


def test_tilted_roof_outgains_flat_in_winter(sky):
    flat = evaluate_depthmap(flat_depth(), None, sky, RASTER, GEOM)
    tilt_h = baseline_tilted_roof(42.0, GEOM)
    tilt = evaluate_depthmap(
        rasterize_scene(None, tilt_h, RASTER, GEOM), None, sky, RASTER, GEOM
    )
    assert tilt.avg_radiation > flat.avg_radiation


def test_flat_slab_beats_random_baselines_on_volume(sky):
    groups = {g.label: summarize(g)
              for g in baseline_eval(0, sky, n_random=6, raster=RASTER, geom=GEOM)}
    flat_vdq = groups["baseline_flat"].mean_vol_dev_sq
    assert flat_vdq < 1e-9
    assert flat_vdq < groups["random_uniform"].mean_vol_dev_sq
    assert flat_vdq < groups["random_gaussian"].mean_vol_dev_sq


# ------------------------------------------------------------ hypervolume


def _hv_groups(bc_id=0):
    def grp(label, rad, vol):
        p = PerfPoint.measure(rad, vol, 100.0)
        return EvalGroup(label, bc_id, ((zero_depth(), p),))

    return [
        grp("test_set", 5.0, 100.0),       # (-5, 0)
        grp("reconstruction", 4.0, 110.0),  # (-4, 100)
        grp("inference", 3.0, 120.0),       # (-3, 400)
    ]


def test_hypervolume_hand_oracle():
    rows = hypervolume_report(_hv_groups())
    assert len(rows) == 1
    r = rows[0]
    # ref = (max(-5,-4,-3)+0.1, max(0,100,400)*1.1) = (-2.9, 440)
    assert r.ref_neg_radiation == pytest.approx(-2.9)
    assert r.ref_vol_dev_sq == pytest.approx(440.0)
    assert r.hv_test == pytest.approx((5.0 - 2.9) * 440.0)
    assert r.hv_reconstruction == pytest.approx((4.0 - 2.9) * (440.0 - 100.0))
    assert r.hv_inference == pytest.approx((3.0 - 2.9) * (440.0 - 400.0))
    assert r.hv_test > r.hv_reconstruction > r.hv_inference


def test_hypervolume_rows_sorted_by_bc():
    rows = hypervolume_report(_hv_groups(5) + _hv_groups(2))
    assert [r.bc_id for r in rows] == [2, 5]


def test_hypervolume_requires_all_three_groups():
    groups = [g for g in _hv_groups() if g.label != "reconstruction"]
    with pytest.raises(BenchError, match="missing"):
        hypervolume_report(groups)


def test_hypervolume_rejects_all_degenerate_group():
    groups = _hv_groups()
    nan_item = ((zero_depth(), PerfPoint.measure(float("nan"), 0.0, 100.0)),)
    groups[1] = EvalGroup("reconstruction", 0, nan_item)
    with pytest.raises(BenchError, match="degenerate"):
        hypervolume_report(groups)


# ----------------------------------------------------------------- timing


def test_timing_needs_three_conditions(model):
    with pytest.raises(BenchError):
        timing_report(model, [0, 1], DESK)


def test_timing_report_fields(model, sky):
    rep = timing_report(model, [170, 0, 85], DESK, sky)
    assert rep.bc_ids == (0, 85, 170)
    assert len(rep.sa_seconds) == 3 and len(rep.inference_seconds) == 3
    assert rep.sa_steps == DESK.anneal.steps
    assert rep.restarts == DESK.latent.restarts
    assert rep.sa_mean > 0.0 and rep.inference_mean > 0.0
    assert rep.ratio == pytest.approx(rep.sa_mean / rep.inference_mean)
    assert rep.hardware


# -------------------------------------------------------------------- CSV


def test_scatter_csv_layout_and_determinism(sky, dataset):
    groups = eval_test_set(dataset, sky, RASTER, GEOM)
    a, b = io.StringIO(), io.StringIO()
    write_scatter_csv(groups, a)
    write_scatter_csv(groups, b)
    assert a.getvalue() == b.getvalue()
    lines = a.getvalue().splitlines()
    assert lines[0] == "group,bc_id,radiation,vol_dev_sq"
    assert len(lines) == 1 + sum(len(g.items) for g in groups)
    assert all(line.startswith("test_set,") for line in lines[1:])


def test_fronts_csv_reports_radiation_not_objective():
    group = EvalGroup(
        "inference", 9,
        ((zero_depth(), PerfPoint.measure(5.0, 100.0, 100.0)),
         (zero_depth(), PerfPoint.measure(4.0, 150.0, 100.0))),
    )
    fh = io.StringIO()
    write_fronts_csv([group], fh)
    lines = fh.getvalue().splitlines()
    # only the dominating point survives; radiation is positive again
    assert lines == ["group,bc_id,radiation,vol_dev_sq", "inference,9,5.0,0.0"]


def test_hypervolumes_csv_round_trip():
    rows = hypervolume_report(_hv_groups())
    fh = io.StringIO()
    write_hypervolumes_csv(rows, fh)
    lines = fh.getvalue().splitlines()
    assert len(lines) == 2
    header = ("bc_id,hv_test,hv_reconstruction,hv_inference,"
              "ref_neg_radiation,ref_vol_dev_sq")
    assert lines[0] == header
    cells = lines[1].split(",")
    assert cells[0] == "0"
    assert float(cells[1]) == rows[0].hv_test


def test_timings_csv_layout(model, sky):
    rep = timing_report(model, [0, 85, 170], DESK, sky)
    fh = io.StringIO()
    write_timings_csv(rep, fh)
    lines = fh.getvalue().splitlines()
    assert lines[0] == ("sa_mean_s,inference_mean_s,ratio,sa_steps,restarts,"
                        "bc_count,hardware")
    cells = lines[1].split(",")
    assert int(cells[3]) == DESK.anneal.steps
    assert int(cells[5]) == 3
    assert lines[1].endswith(f'"{rep.hardware}"')


def test_group_labels_are_canonical():
    assert GROUP_LABELS == (
        "test_set", "reconstruction", "inference", "baseline_flat",
        "baseline_tilted", "random_uniform", "random_gaussian",
    )
