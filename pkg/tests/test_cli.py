import json

import pytest

from suffixbeam.attention import AttentionConfig, AttentionModel
from suffixbeam.cli import main
from suffixbeam.encoding import build_vocabulary
from suffixbeam.eventlog import parse_xes
from suffixbeam.petri import parse_pnml
from suffixbeam.predictor import NGramModel


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Default synthetic benchmark plus a trained n-gram, generated once."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["synthgen", "--out", str(root)]) == 0
    assert main(["train", "--log", str(root / "train.xes"), "--model-out", str(root / "ngram.json")]) == 0
    return {
        "root": root,
        "train": str(root / "train.xes"),
        "test": str(root / "test.xes"),
        "net": str(root / "exceptional.pnml"),
        "model": str(root / "ngram.json"),
    }


def run(capsys, argv):
    capsys.readouterr()  # drain fixture noise
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# argument plumbing


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("suffixbeam ")


@pytest.mark.parametrize(
    "argv",
    [[], ["predict"], ["split", "--log", "x.xes"], ["synthgen", "--bogus-flag"]],
)
def test_usage_problems_exit_1(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1


def test_missing_log_file(capsys):
    code, _, err = run(capsys, ["split", "--log", "nowhere.xes", "--k", "3"])
    assert code == 1
    assert "event log not found: nowhere.xes" in err


def test_corrupt_model_is_bad_input(capsys, tmp_path):
    bad = tmp_path / "bad.npz"
    bad.write_bytes(b"not a zip archive")
    code, _, err = run(capsys, ["predict", "--model", str(bad), "--prefix", "Start"])
    assert code == 1
    assert "error" in err


def test_unexpected_failures_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, ["predict", "--model", str(tmp_path), "--prefix", "Start"])
    assert code == 2
    assert "runtime error" in err


# ---------------------------------------------------------------------------
# synthgen


def test_synthgen_outputs(workspace, capsys):
    train = parse_xes(workspace["train"])
    test = parse_xes(workspace["test"])
    net = parse_pnml(workspace["net"])
    assert len(train.traces) == 1000
    assert len(test.traces) == 200
    assert len(net.places) == 14
    assert len(net.transitions) == 14


def test_out_falls_back_to_env_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SUFFIXBEAM_OUT", str(tmp_path / "nested"))
    code, out, _ = run(
        capsys, ["synthgen", "--n-normal", "8", "--n-exceptional", "4", "--seed", "5"]
    )
    assert code == 0
    assert (tmp_path / "nested" / "train.xes").exists()
    assert len(parse_xes(tmp_path / "nested" / "train.xes").traces) == 12
    assert "wrote 12 training traces" in out


# ---------------------------------------------------------------------------
# split / train


def test_split_reports_and_writes_holdout(workspace, tmp_path, capsys):
    code, out, _ = run(
        capsys,
        ["split", "--log", workspace["train"], "--k", "3", "--out", str(tmp_path)],
    )
    assert code == 0
    assert "held out 174 traces (2 variants) at k=3" in out
    held = parse_xes(tmp_path / "heldout.xes")
    assert len(held.traces) == 174


def test_train_ngram(workspace, tmp_path, capsys):
    target = tmp_path / "m.json"
    code, out, _ = run(
        capsys,
        ["train", "--log", workspace["train"], "--order", "2", "--model-out", str(target)],
    )
    assert code == 0
    assert "trained order-2 n-gram on 4396 prefixes" in out
    model = NGramModel.load(target)
    assert len(model.vocab.labels) == 10  # nine activities plus the end marker


def test_train_default_filename(workspace, tmp_path, capsys):
    code, out, _ = run(capsys, ["train", "--log", workspace["train"], "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "ngram.json").exists()


# ---------------------------------------------------------------------------
# predict


def test_predict_baseline_stops_short(workspace, capsys):
    code, out, _ = run(
        capsys,
        [
            "predict", "--model", workspace["model"],
            "--prefix", "Start,B2a,B2b,B2c", "--algorithm", "baseline",
        ],
    )
    assert code == 0
    assert "suffix: (empty)" in out
    assert "score: 0.615252  forced_termination: False" in out


def test_predict_modulated_recovers_the_repair_tail(workspace, capsys):
    code, out, _ = run(
        capsys,
        [
            "predict", "--model", workspace["model"], "--net", workspace["net"],
            "--prefix", "Start,B2a,B2b,B2c", "--algorithm", "modulated", "--w", "0.85",
        ],
    )
    assert code == 0
    assert "suffix: Unexpected,Repairing" in out
    assert "score: 0.804532" in out


def test_predict_checked(workspace, capsys):
    code, out, _ = run(
        capsys,
        [
            "predict", "--model", workspace["model"], "--net", workspace["net"],
            "--prefix", "Start,B2a,B2b,B2c", "--algorithm", "checked",
        ],
    )
    assert code == 0
    assert "suffix: Unexpected,Repairing" in out
    assert "score: 0.384081" in out


def test_predict_requires_net_for_modulation(workspace, capsys):
    code, _, err = run(
        capsys, ["predict", "--model", workspace["model"], "--prefix", "Start"]
    )
    assert code == 1
    assert "--net is required for --algorithm modulated" in err


def test_predict_rejects_empty_prefix(workspace, capsys):
    code, _, err = run(
        capsys,
        ["predict", "--model", workspace["model"], "--prefix", " , ", "--algorithm", "baseline"],
    )
    assert code == 1
    assert "prefix is empty" in err


def test_predict_loads_npz_as_attention_model(workspace, tmp_path, capsys):
    vocab = build_vocabulary(parse_xes(workspace["train"]))
    model = AttentionModel(
        vocab,
        AttentionConfig(l_max=7, d_model=4, n_heads=2, n_layers=1, d_ff=8, dropout=0.0, seed=3),
    )
    path = tmp_path / "untrained.npz"
    model.save(path)
    code, out, _ = run(
        capsys,
        ["predict", "--model", str(path), "--prefix", "Start", "--algorithm", "baseline"],
    )
    assert code == 0
    assert out.startswith("suffix:")


# ---------------------------------------------------------------------------
# evaluate / sweep


def test_evaluate_exact_report(workspace, capsys):
    code, out, _ = run(
        capsys,
        [
            "evaluate", "--log", workspace["test"], "--model", workspace["model"],
            "--net", workspace["net"], "--k", "3", "--w", "0.85",
        ],
    )
    assert code == 0
    assert "k=3 w=0.85: mean similarity 0.95333 over 200 cases (0 forced terminations)" in out


def test_evaluate_without_net_is_the_baseline(workspace, capsys):
    code, out, _ = run(
        capsys,
        [
            "evaluate", "--log", workspace["test"], "--model", workspace["model"],
            "--k", "3", "--w", "0.0",
        ],
    )
    assert code == 0
    assert "k=3 w=0.00: mean similarity 0.45333 over 200 cases" in out


def test_sweep_reallife_writes_reports(workspace, tmp_path, capsys):
    code, out, _ = run(
        capsys,
        [
            "sweep", "--mode", "reallife", "--log", workspace["train"],
            "--net", workspace["net"], "--name", "repair", "--ks", "4",
            "--w-grid", "0.0,0.85", "--out", str(tmp_path),
        ],
    )
    assert code == 0
    assert "prefix lengths evaluated: 4" in out
    assert "best w:" in out
    sweep_lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert sweep_lines[0] == "dataset,k,w,mean_similarity,n_cases,forced_terminations"
    assert len(sweep_lines) == 1 + 2 * 2  # (k=4 + micro) x two w values
    table_lines = (tmp_path / "comparison.csv").read_text().splitlines()
    assert table_lines[0] == "dataset,k,baseline,modulated,diff"
    assert table_lines[-1].startswith("repair,micro,")


def test_sweep_reallife_needs_log_and_net(capsys):
    code, _, err = run(capsys, ["sweep", "--mode", "reallife"])
    assert code == 1
    assert "--log and --net are required" in err


def test_sweep_synthetic_small_grid(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        ["sweep", "--mode", "synthetic", "--ks", "3", "--w-grid", "0.0,0.9", "--out", str(tmp_path)],
    )
    assert code == 0
    assert "prefix lengths evaluated: 3" in out
    assert "micro similarity at w=0.00: 0.45333" in out
    assert "best w: 0.90 (micro 0.95333)" in out
    assert (tmp_path / "sweep.csv").exists()
    assert (tmp_path / "comparison.csv").exists()


@pytest.mark.parametrize(
    "flag,value,fragment",
    [
        ("--w-grid", "0.5,1.5", "outside [0, 1]"),
        ("--w-grid", " , ", "empty w grid"),
        ("--ks", "3,0", "positive integers"),
    ],
)
def test_sweep_grid_validation(flag, value, fragment, capsys):
    code, _, err = run(capsys, ["sweep", "--mode", "synthetic", flag, value])
    assert code == 1
    assert fragment in err


# ---------------------------------------------------------------------------
# config files and CSV logs


def test_config_file_fills_defaults_but_flags_win(workspace, tmp_path, capsys):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"order": 5, "model-out": str(tmp_path / "a.json")}))
    code, out, _ = run(capsys, ["train", "--log", workspace["train"], "--config", str(conf)])
    assert code == 0
    assert "order-5" in out
    assert (tmp_path / "a.json").exists()

    code, out, _ = run(
        capsys,
        ["train", "--log", workspace["train"], "--config", str(conf), "--order", "2",
         "--model-out", str(tmp_path / "b.json")],
    )
    assert code == 0
    assert "order-2" in out  # explicit flag beats the file


def test_config_file_rejects_unknown_keys(workspace, tmp_path, capsys):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(capsys, ["train", "--log", workspace["train"], "--config", str(conf)])
    assert code == 1
    assert "unknown option 'bogus'" in err


def test_config_file_must_be_an_object(workspace, tmp_path, capsys):
    conf = tmp_path / "conf.json"
    conf.write_text("[1, 2]")
    code, _, err = run(capsys, ["train", "--log", workspace["train"], "--config", str(conf)])
    assert code == 1
    assert "must hold a JSON object" in err


def test_csv_logs_with_custom_columns(tmp_path, capsys):
    log = tmp_path / "tiny.csv"
    log.write_text(
        "case,act,ts\n"
        "c1,A,2024-01-01T00:00:00\n"
        "c1,B,2024-01-01T00:01:00\n"
        "c1,C,2024-01-01T00:02:00\n"
        "c2,A,2024-01-02T00:00:00\n"
        "c2,B,2024-01-02T00:01:00\n"
    )
    code, out, _ = run(
        capsys,
        ["train", "--log", str(log), "--csv-columns", "case,act,ts",
         "--model-out", str(tmp_path / "m.json")],
    )
    assert code == 0
    assert (tmp_path / "m.json").exists()
