import csv
import json

import numpy as np
import pytest

from depadjust.cli import EXIT_CODES, main
from depadjust.synth import gen_monks2_like


@pytest.fixture
def real_csv(tmp_path):
    rng = np.random.default_rng(0)
    n = 60
    x = rng.random(n)
    rows = ["x,y,z,g"]
    for i in range(n):
        xs = "" if i % 13 == 0 else f"{x[i]:.6f}"
        rows.append(f"{xs},{(2 * x[i] - 1) ** 2:.6f},{rng.random():.6f},{'ab'[i % 2]}")
    p = tmp_path / "real.csv"
    p.write_text("\n".join(rows) + "\n")
    return str(p)


@pytest.fixture
def monks_csv(tmp_path):
    cols = gen_monks2_like(120, seed=1, noise_features=2)
    p = tmp_path / "monks.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(cols))
        w.writerows(zip(*cols.values()))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestQuantify:
    def test_text(self, capsys, real_csv):
        code, out, err = run(capsys, "quantify", "--input", real_csv, "--x", "x", "--y", "y", "--measure", "r2",
                             "--adjust", "std")
        assert code == 0 and err == ""
        assert "standardized" in out and "n_used       55" in out

    def test_json_roundtrip(self, capsys, real_csv):
        argv = ["quantify", "--input", real_csv, "--x", "x", "--y", "y", "--measure", "mic", "--adjust", "alpha",
                "--alpha", "0.1", "--permutations", "30", "--seed", "4", "--json"]
        code, out, _ = run(capsys, *argv)
        assert code == 0
        doc = json.loads(out)
        cfg = doc["config"]
        again = ["quantify", "--input", cfg["input"], "--x", cfg["x"], "--y", cfg["y"], "--measure", cfg["measure"],
                 "--adjust", cfg["adjust"], "--alpha", str(cfg["alpha"]), "--permutations",
                 str(cfg["permutations"]), "--seed", str(cfg["seed"]), "--json"]
        _, out2, _ = run(capsys, *again)
        assert json.loads(out2)["score"] == doc["score"]
        assert doc["score"]["null"]["permutations"] == 30

    def test_categorical_rejected(self, capsys, real_csv):
        code, out, err = run(capsys, "quantify", "--input", real_csv, "--x", "g", "--y", "y")
        assert code == EXIT_CODES["incompatible-type"]
        assert out == "" and "'g'" in err

    def test_unknown_column(self, capsys, real_csv):
        code, _, err = run(capsys, "quantify", "--input", real_csv, "--x", "nope", "--y", "y")
        assert code == EXIT_CODES["unknown-column"]
        assert err.startswith("error:")

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "quantify", "--input", str(tmp_path / "no.csv"), "--x", "a", "--y", "b")
        assert code == 1 and "error" in err


class TestRank:
    def test_csv_report(self, capsys, real_csv):
        code, out, err = run(capsys, "rank", "--input", real_csv, "--target", "y", "--measure", "mic",
                             "--adjust", "quant", "--permutations", "20")
        assert code == 0
        lines = out.splitlines()
        assert "# seed=0" in lines
        header = lines.index("rank,variable,score,raw,n_used")
        assert lines[header + 1].split(",")[1] == "x"
        assert "skipped g" in err

    def test_no_eligible_pairs(self, capsys, real_csv):
        code, out, err = run(capsys, "rank", "--input", real_csv, "--target", "y", "--min-n", "1000")
        assert code == EXIT_CODES["no-eligible-pairs"] != 0
        assert out == "" and "no-eligible-pairs" in err

    def test_json_out_file(self, capsys, real_csv, tmp_path):
        dest = tmp_path / "rank.json"
        code, out, _ = run(capsys, "rank", "--input", real_csv, "--target", "y", "--json", "--out", str(dest))
        assert code == 0 and out == ""
        doc = json.loads(dest.read_text())
        assert doc["ranked"][0]["rank"] == 1
        assert doc["scorer"] == "r2"


class TestSimulate:
    def test_gini_inflation(self, capsys, tmp_path):
        dest = tmp_path / "g.csv"
        code, out, _ = run(capsys, "simulate", "gini-inflation", "--trials", "200", "--seed", "3", "--out", str(dest))
        assert code == 0
        p = float(out)
        assert 0.5 < p < 0.9
        assert "# seed=3" in dest.read_text()

    def test_noise_sweep_tidy(self, capsys, tmp_path):
        dest = tmp_path / "s.csv"
        code, _, _ = run(capsys, "simulate", "noise-sweep", "--shapes", "linear,quadratic", "--ns", "20",
                         "--noise", "0,1", "--measures", "r2,mic:quant", "--permutations", "5", "--trials", "5",
                         "--out", str(dest))
        assert code == 0
        body = [l for l in dest.read_text().splitlines() if not l.startswith("#")]
        rows = list(csv.DictReader(body))
        assert len(rows) == 2 * 2 * 2
        assert set(rows[0]) == {"shape", "n", "noise", "measure", "mean", "stderr", "trials"}

    def test_selection_bias(self, capsys):
        code, out, _ = run(capsys, "simulate", "selection-bias", "--ns", "10,40", "--trials", "100")
        assert code == 0
        assert "candidate,wins,probability,prob_stderr,mean_score,score_stderr" in out

    def test_mic_baseline(self, capsys):
        code, out, _ = run(capsys, "simulate", "mic-baseline", "--ns", "20", "--trials", "20")
        assert code == 0 and out.startswith("n=20 mean_mic=")


class TestForest:
    def test_train_eval(self, capsys, monks_csv, tmp_path):
        model = str(tmp_path / "m.json")
        code, _, _ = run(capsys, "forest", "train", "--input", monks_csv, "--target", "class", "--trees", "10",
                         "--criterion", "agini", "--alpha", "0.1", "--model", model)
        assert code == 0
        assert json.loads(open(model).read())["criterion"] == {"alpha": 0.1, "kind": "agini"}
        code, out, _ = run(capsys, "forest", "eval", "--input", monks_csv, "--target", "class", "--model", model)
        assert code == 0 and float(out.split()[1]) > 0.5

    def test_cv(self, capsys, monks_csv):
        code, out, _ = run(capsys, "forest", "eval", "--input", monks_csv, "--target", "class", "--trees", "5",
                           "--cv-reps", "2")
        assert code == 0 and "mean of 2 replications" in out

    def test_tune(self, capsys, monks_csv):
        code, out, _ = run(capsys, "forest", "tune-alpha", "--input", monks_csv, "--target", "class", "--trees",
                           "3", "--cv-reps", "1", "--grid", "0.05,0.4")
        assert code == 0
        assert out.splitlines()[-1].startswith("best_alpha ")

    def test_degenerate_target(self, capsys, tmp_path):
        p = tmp_path / "one.csv"
        p.write_text("a,t\nx,k\ny,k\n")
        code, _, err = run(capsys, "forest", "eval", "--input", str(p), "--target", "t")
        assert code == EXIT_CODES["degenerate-target"]


def test_deterministic_bytes(capsys, real_csv):
    argv = ["rank", "--input", real_csv, "--target", "y", "--measure", "mic", "--adjust", "alpha", "--alpha",
            "0.05", "--permutations", "15", "--seed", "9"]
    assert run(capsys, *argv) == run(capsys, *argv)


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["quantify"])
    assert exc.value.code == 2
