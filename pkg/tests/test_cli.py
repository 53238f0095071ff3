"""CLI behavior: flags, exit codes, artifacts, reproducibility."""

import numpy as np
import pytest

from heliogen.cli import main
from heliogen.codec import read_dataset
from heliogen.nn import load_model

DESK_YAML = """\
sky:
  day_step: 45
  hour_step: 4.0
anneal:
  steps: 25
  mesh_resolution: 6
train:
  epochs: 3
  batch_size: 8
latent:
  iterations: 10
  restarts: 2
  convergence_window: 10
"""


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "desk.yaml").write_text(DESK_YAML)
    return d


def run(workdir, *argv):
    return main(["--quiet", "--config", str(workdir / "desk.yaml"), *argv])


@pytest.fixture(scope="module")
def dataset_file(workdir):
    out = workdir / "d.pdgd"
    assert run(workdir, "generate-dataset", "--bcs", "5", "--seed", "7",
               "--out", str(out)) == 0
    return out


@pytest.fixture(scope="module")
def model_file(workdir, dataset_file):
    out = workdir / "m.pdgm"
    assert run(workdir, "train", "--dataset", str(dataset_file),
               "--out", str(out)) == 0
    return out


# ------------------------------------------------------------- exit codes


def test_unknown_subcommand_exits_2(workdir):
    with pytest.raises(SystemExit) as e:
        run(workdir, "mystery")
    assert e.value.code == 2


def test_infer_requires_model_flag(workdir):
    with pytest.raises(SystemExit) as e:
        run(workdir, "infer", "--bc-id", "3", "--out", "x")
    assert e.value.code == 2


def test_missing_input_file_exits_3(workdir, tmp_path):
    code = run(workdir, "train", "--dataset", str(tmp_path / "nope.pdgd"),
               "--out", str(tmp_path / "m.pdgm"))
    assert code == 3


def test_numeric_misconfiguration_exits_4(workdir, model_file, tmp_path):
    code = run(workdir, "infer", "--model", str(model_file), "--bc-id", "85",
               "--restarts", "0", "--out", str(tmp_path / "r.pdgd"))
    assert code == 4


def test_lambda_without_guide_exits_2(workdir, model_file, tmp_path):
    code = run(workdir, "infer", "--model", str(model_file), "--bc-id", "85",
               "--lambda", "5", "--out", str(tmp_path / "r.pdgd"))
    assert code == 2


def test_bad_config_file_exits_2(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("anneal:\n  not_a_knob: 3\n")
    code = main(["--quiet", "--config", str(bad), "sky", "dump"])
    assert code == 2


def test_thread_cap_must_be_positive(workdir):
    code = main(["--quiet", "--config", str(workdir / "desk.yaml"),
                 "--threads", "0", "sky", "dump"])
    assert code == 2


# -------------------------------------------------------- generate-dataset


def test_generate_dataset_example_counts(dataset_file):
    ds = read_dataset(str(dataset_file))
    assert len(ds.records) == 50          # 5 bcs x 10 selections
    assert len({r.bc_id for r in ds.records}) == 5


def test_generate_dataset_is_byte_reproducible(workdir, dataset_file):
    again = workdir / "d2.pdgd"
    assert run(workdir, "generate-dataset", "--bcs", "5", "--seed", "7",
               "--out", str(again)) == 0
    assert again.read_bytes() == dataset_file.read_bytes()


def test_steps_flag_overrides_config(workdir, tmp_path):
    out = tmp_path / "short.pdgd"
    trace_dir = tmp_path / "traces"
    assert run(workdir, "generate-dataset", "--bcs", "2", "--steps", "12",
               "--seed", "1", "--out", str(out),
               "--trace-dir", str(trace_dir)) == 0
    traces = sorted(trace_dir.iterdir())
    assert [t.name for t in traces] == ["trace_0000.csv", "trace_0341.csv"]
    # header + start row + one row per step
    assert len(traces[0].read_text().splitlines()) == 2 + 12


# ------------------------------------------------------------------ train


def test_train_writes_loadable_checkpoint_and_log(workdir, model_file,
                                                  dataset_file, tmp_path):
    model = load_model(str(model_file))
    assert model.latent_dim == 16 and model.image_size == 16
    log_path = tmp_path / "losses.csv"
    out2 = tmp_path / "m2.pdgm"
    assert run(workdir, "train", "--dataset", str(dataset_file),
               "--out", str(out2), "--log", str(log_path)) == 0
    lines = log_path.read_text().splitlines()
    assert lines[0] == "epoch,train_loss,train_recon,train_kl,val_loss"
    assert len(lines) == 1 + 3
    assert out2.read_bytes() == model_file.read_bytes()


# ------------------------------------------------------------------ infer


def test_infer_writes_sorted_results(workdir, model_file, tmp_path):
    out = tmp_path / "r.pdgd"
    assert run(workdir, "infer", "--model", str(model_file), "--bc-id", "85",
               "--restarts", "3", "--seed", "5", "--out", str(out)) == 0
    ds = read_dataset(str(out))
    assert len(ds.records) == 3
    assert all(r.bc_id == 85 for r in ds.records)
    assert all(r.volume > 0.0 for r in ds.records)

    again = tmp_path / "r2.pdgd"
    assert run(workdir, "infer", "--model", str(model_file), "--bc-id", "85",
               "--restarts", "3", "--seed", "5", "--out", str(again)) == 0
    assert again.read_bytes() == out.read_bytes()


def test_infer_accepts_guide_csv(workdir, model_file, tmp_path):
    guide = tmp_path / "guide.csv"
    rows = np.full((5, 5), 6.0)
    np.savetxt(guide, rows, delimiter=",")
    out = tmp_path / "g.pdgd"
    assert run(workdir, "infer", "--model", str(model_file), "--bc-id", "85",
               "--guide", str(guide), "--lambda", "10", "--out", str(out)) == 0
    assert len(read_dataset(str(out)).records) == 2


def test_infer_rejects_out_of_range_guide(workdir, model_file, tmp_path):
    guide = tmp_path / "bad.csv"
    np.savetxt(guide, np.full((5, 5), 11.0), delimiter=",")
    code = run(workdir, "infer", "--model", str(model_file), "--bc-id", "85",
               "--guide", str(guide), "--lambda", "1",
               "--out", str(tmp_path / "x.pdgd"))
    assert code == 4


# --------------------------------------------------------------- evaluate


def test_evaluate_emits_all_reports(workdir, model_file, dataset_file,
                                    tmp_path):
    out_dir = tmp_path / "eval"
    assert run(workdir, "evaluate", "--model", str(model_file),
               "--dataset", str(dataset_file), "--out-dir", str(out_dir),
               "--samples", "2", "--random-baselines", "2") == 0
    scatter = (out_dir / "scatter.csv").read_text().splitlines()
    assert scatter[0] == "group,bc_id,radiation,vol_dev_sq"
    labels = {line.split(",")[0] for line in scatter[1:]}
    assert labels == {"test_set", "reconstruction", "inference",
                      "baseline_flat", "baseline_tilted", "random_uniform",
                      "random_gaussian"}
    fronts = (out_dir / "fronts.csv").read_text().splitlines()
    assert fronts[0] == "group,bc_id,radiation,vol_dev_sq"
    hv = (out_dir / "hypervolumes.csv").read_text().splitlines()
    assert len(hv) == 2               # one test bc at this scale
    timings = (out_dir / "timings.csv").read_text().splitlines()
    assert timings[0].startswith("sa_mean_s,inference_mean_s,ratio")


def test_evaluate_scatter_reproducible(workdir, model_file, dataset_file,
                                       tmp_path):
    a, b = tmp_path / "e1", tmp_path / "e2"
    for out_dir in (a, b):
        assert run(workdir, "evaluate", "--model", str(model_file),
                   "--dataset", str(dataset_file), "--out-dir", str(out_dir),
                   "--samples", "2", "--random-baselines", "2") == 0
    for name in ("scatter.csv", "fronts.csv", "hypervolumes.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


# -------------------------------------------------------------------- sky


def test_sky_dump_to_stdout(workdir, capsys):
    assert run(workdir, "sky", "dump") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "day,hour,east,north,up,weight"
    assert len(lines) > 1
    day, hour, e, n, u, w = lines[1].split(",")
    assert float(u) > 0.0             # sun above the horizon
    assert abs(float(e)**2 + float(n)**2 + float(u)**2 - 1.0) < 1e-9


def test_sky_dump_to_file_matches_stdout(workdir, tmp_path, capsys):
    assert run(workdir, "sky", "dump") == 0
    stdout = capsys.readouterr().out
    path = tmp_path / "sky.csv"
    assert run(workdir, "sky", "dump", "--out", str(path)) == 0
    assert path.read_text() == stdout
