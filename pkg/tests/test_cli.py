import os

import numpy as np
import pytest

from softkge.cli import load_config_file, main


def run(argv):
    return main(argv)


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("kg")
    code = run([
        "synth", "--out", str(out), "--entities", "60", "--relations", "2",
        "--dim", "8", "--triples-per-relation", "104", "--seed", "3",
    ])
    assert code == 0
    return out


def trained_dir(tmp_path, synth_dir, extra=()):
    out = tmp_path / "run"
    code = run([
        "train", "--data", str(synth_dir), "--out", str(out),
        "--dim", "8", "--batch-size", "64", "--max-epochs", "6",
        "--eval-every", "3", "--patience", "0", "--seed", "0", *extra,
    ])
    assert code == 0
    return out


def test_synth_outputs(synth_dir):
    for name in ("train.tsv", "valid.tsv", "test.tsv", "entities.tsv",
                 "relations.tsv", "resolved_config.txt"):
        assert (synth_dir / name).exists()
    assert (synth_dir / "planted" / "manifest.txt").exists()
    snapshot = (synth_dir / "resolved_config.txt").read_text()
    assert snapshot.startswith("command=synth\n")
    assert "entities=60" in snapshot
    assert "triples-per-relation=104" in snapshot


def test_train_writes_checkpoint_log_and_snapshot(tmp_path, synth_dir):
    out = trained_dir(tmp_path, synth_dir)
    assert (out / "checkpoint" / "entities.f32").exists()
    log = (out / "train_log.tsv").read_text().splitlines()
    assert log[0] == "epoch\tmean_loss\tval_mr_filtered\tval_hit10_filtered"
    assert len(log) == 7
    # eval epochs carry metrics, others leave the columns blank
    assert log[3].count("\t") == 3 and log[3].split("\t")[2] != ""
    assert log[1].split("\t")[2] == ""
    snapshot = (out / "resolved_config.txt").read_text()
    assert "loss=soft_margin" in snapshot
    assert "learning-rate=0.1" in snapshot


def test_train_rerun_is_bit_identical(tmp_path, synth_dir):
    a = trained_dir(tmp_path / "a", synth_dir)
    b = trained_dir(tmp_path / "b", synth_dir)
    assert (a / "train_log.tsv").read_bytes() == (b / "train_log.tsv").read_bytes()
    ea = (a / "checkpoint" / "entities.f32").read_bytes()
    eb = (b / "checkpoint" / "entities.f32").read_bytes()
    assert ea == eb


def test_eval_command(tmp_path, synth_dir):
    run_dir = trained_dir(tmp_path, synth_dir)
    out = tmp_path / "eval"
    code = run([
        "eval", "--data", str(synth_dir), "--out", str(out),
        "--checkpoint", str(run_dir / "checkpoint"), "--ks", "1,3,10",
    ])
    assert code == 0
    report = (out / "report.txt").read_text()
    assert report.startswith("split=test\n")
    assert "hit10_filtered=" in report
    ranks = (out / "ranks.tsv").read_text().splitlines()
    n_obs = int(report.split("observations=")[1].splitlines()[0])
    assert len(ranks) == 1 + n_obs


def test_eval_on_planted_checkpoint_is_perfect(tmp_path, synth_dir):
    out = tmp_path / "eval_planted"
    code = run([
        "eval", "--data", str(synth_dir), "--out", str(out),
        "--checkpoint", str(synth_dir / "planted"),
    ])
    assert code == 0
    report = (out / "report.txt").read_text()
    assert "mr_filtered=1.0" in report
    assert "hit1_filtered=1.0" in report


def test_recommend_command(tmp_path, synth_dir):
    run_dir = trained_dir(tmp_path, synth_dir)
    out = tmp_path / "rec"
    code = run([
        "recommend", "--data", str(synth_dir), "--out", str(out),
        "--checkpoint", str(run_dir / "checkpoint"),
        "--sources", "e0,e1", "--relation", "r0", "--k", "5",
    ])
    assert code == 0
    lines = (out / "report.tsv").read_text().splitlines()
    assert lines[0] == "source\tn_recommendations\tranks"
    assert len(lines) == 3
    long_lines = (out / "recommendations_long.tsv").read_text().splitlines()
    assert long_lines[0] == "source\ttarget\tscore\trank"


def test_grid_command(tmp_path, synth_dir):
    out = tmp_path / "grid"
    code = run([
        "grid", "--data", str(synth_dir), "--out", str(out),
        "--loss", "mrl", "--dim", "8", "--batch-size", "64",
        "--max-epochs", "4", "--eval-every", "2", "--patience", "0",
        "--grid-dims", "4,8", "--grid-gammas", "0.5,1.0",
    ])
    assert code == 0
    rows = (out / "grid_report.tsv").read_text().splitlines()
    assert rows[0].startswith("rank\tkind\t")
    assert len(rows) == 5
    assert rows[1].startswith("1\tmrl\t")


def test_config_file_resolution_and_flag_override(tmp_path, synth_dir):
    cfg = tmp_path / "train.cfg"
    cfg.write_text(
        "# comment line\n"
        f"data={synth_dir}\n"
        "dim=8\nbatch-size=64\nmax-epochs=2\neval-every=2\npatience=0\n"
        f"out={tmp_path / 'from_file'}\n"
    )
    code = run(["train", "--config", str(cfg), "--max-epochs", "3"])
    assert code == 0
    snapshot = (tmp_path / "from_file" / "resolved_config.txt").read_text()
    # the flag wins over the file value
    assert "max-epochs=3" in snapshot
    assert "dim=8" in snapshot


def test_config_file_unknown_key_is_usage_error(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus-key=1\n")
    assert run(["train", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 1


def test_config_file_malformed_line_reports_position(tmp_path):
    from softkge.cli import CliError

    cfg = tmp_path / "bad.cfg"
    cfg.write_text("dim=8\nnot a pair\n")
    with pytest.raises(CliError) as err:
        load_config_file(cfg)
    assert ":2:" in str(err.value)


def test_missing_required_flag_is_usage_error(synth_dir):
    # train without --out
    assert run(["train", "--data", str(synth_dir)]) == 1


def test_unreadable_data_is_a_data_error(tmp_path):
    assert run([
        "train", "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "o"),
    ]) == 2


def test_malformed_tsv_is_a_data_error(tmp_path):
    for name in ("train", "valid", "test"):
        (tmp_path / f"{name}.tsv").write_text("a\tr\tb\n")
    (tmp_path / "train.tsv").write_text("a\tr\tb\nbroken line\n")
    assert run([
        "train", "--data", str(tmp_path), "--out", str(tmp_path / "o"),
    ]) == 2


def test_unknown_flag_exits_with_usage_code():
    with pytest.raises(SystemExit) as exc:
        run(["train", "--bogus", "1"])
    assert exc.value.code == 1


def test_numerical_failure_exit_code(tmp_path, synth_dir):
    # a huge learning rate blows the embeddings up into inf scores
    out = tmp_path / "blow"
    code = run([
        "train", "--data", str(synth_dir), "--out", str(out),
        "--dim", "8", "--batch-size", "64", "--max-epochs", "3",
        "--eval-every", "3", "--patience", "0",
        "--learning-rate", "1e200", "--optimizer", "sgd",
        "--normalize-entities", "false",
    ])
    assert code == 3
