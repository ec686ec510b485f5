"""Command-line interface.

    depadjust quantify --input data.csv --x A --y B --measure mic --adjust quant
    depadjust rank --input data.csv --target Y --measure r2 --adjust alpha --alpha 0.1
    depadjust simulate gini-inflation --n 100 --trials 10000 --seed 7
    depadjust forest eval --input data.csv --target class --criterion agini --alpha 0.05

Data goes to stdout (or ``--out``), diagnostics to stderr. Every output
echoes its configuration and seed; identical flags give identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .adjust import score
from .dataset import DEFAULT_MISSING, load_csv
from .errors import EstimationError
from .experiments import (
    Scorer,
    SelectionTrialConfig,
    gini_inflation_experiment,
    noise_sweep,
    rank_against_target,
    selection_experiment,
)
from .forest import (
    DEFAULT_ALPHA_GRID,
    Forest,
    ForestConfig,
    _key,
    _missing,
    SplitCriterion,
    TrainingData,
    auc,
    cross_validate,
    encode_columns,
    train_forest,
    tune_alpha,
)
from .measures import PairedSample
from .mic import mic
from .nulls import DEFAULT_PERMUTATIONS
from .synth import RelationSpec, gen_relationship
from . import rng as _rng

EXIT_CODES = {
    "no-eligible-pairs": 3,
    "unknown-column": 4,
    "incompatible-type": 5,
    "degenerate-target": 6,
}
EXIT_GENERIC = 1

_ADJUST = {"raw": "raw", "quant": "quantification", "std": "standardized", "alpha": "ranking_alpha"}


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _names(text: str | None) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()] if text else []


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


class _Output:
    """Writes to ``--out`` when given, else stdout."""

    def __init__(self, path):
        self.path = path
        self.buffer = io.StringIO()

    def write(self, text):
        self.buffer.write(text)

    def close(self):
        text = self.buffer.getvalue()
        if self.path:
            with open(self.path, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _write_csv(out, meta: dict, rows: list[dict]):
    for key, value in meta.items():
        out.write(f"# {key}={value}\n")
    if not rows:
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(rows[0]))
    for row in rows:
        writer.writerow([_fmt(v) for v in row.values()])


def _load(args):
    overrides = {name: "categorical" for name in _names(getattr(args, "categorical", None))}
    overrides.update({name: "real" for name in _names(getattr(args, "real", None))})
    markers = tuple(args.missing.split(",")) if args.missing is not None else DEFAULT_MISSING
    if args.missing is not None and "" not in markers:
        markers = markers + ("",)
    return load_csv(args.input, markers, overrides, args.delimiter)


# --------------------------------------------------------------------------
# quantify / rank


def cmd_quantify(args) -> int:
    data = _load(args)
    for name in (args.x, args.y):
        data.column(name)
        if args.measure in ("r2", "mic") and data.kinds[name] != "real":
            raise EstimationError("incompatible-type", f"column {name!r} is categorical")
    sample = PairedSample.from_values(data.columns[args.x], data.columns[args.y])
    result = score(
        sample,
        args.measure,
        _ADJUST[args.adjust],
        alpha=args.alpha,
        permutations=args.permutations,
        seed=args.seed,
    )
    config = {
        "command": "quantify",
        "input": args.input,
        "x": args.x,
        "y": args.y,
        "measure": args.measure,
        "adjust": args.adjust,
        "alpha": args.alpha,
        "permutations": args.permutations,
        "seed": args.seed,
    }
    report = {"config": config, "n": sample.n, "score": result.to_dict()}
    if args.json:
        print(json.dumps(report, sort_keys=True, indent=2))
        return 0
    print(f"measure      {args.measure}")
    print(f"scheme       {result.scheme}")
    print(f"n_used       {sample.n}")
    print(f"raw          {_fmt(result.raw)}")
    print(f"adjusted     {_fmt(result.adjusted)}")
    if result.null is not None:
        print(f"null_kind    {result.null.kind}")
        print(f"null_mean    {_fmt(result.null.mean)}")
        print(f"null_sd      {_fmt(result.null.sd)}")
        if result.null.kind == "empirical_permutation":
            print(f"permutations {result.null.permutations}")
    print(f"seed         {args.seed}")
    return 0


def cmd_rank(args) -> int:
    data = _load(args)
    if args.target not in data.columns:
        raise EstimationError("unknown-column", args.target)
    scorer = Scorer(args.measure, _ADJUST[args.adjust], args.alpha, args.permutations)
    report = rank_against_target(
        data.columns, args.target, scorer, args.min_n, args.seed, args.top_k, data.kinds
    )
    meta = {
        "command": "rank",
        "input": args.input,
        "target": args.target,
        "scorer": scorer.label,
        "min_n": args.min_n,
        "top_k": args.top_k,
        "permutations": args.permutations,
        "seed": args.seed,
        "mean_n_top_k": _fmt(report.mean_n_top),
    }
    rows = [
        {"rank": i + 1, "variable": r.variable, "score": r.score, "raw": r.raw, "n_used": r.n_used}
        for i, r in enumerate(report.ranked)
    ]
    out = _Output(args.out)
    if args.json:
        doc = dict(meta, ranked=rows, skipped=[{"variable": v, "reason": why} for v, why in report.skipped])
        out.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        _write_csv(out, meta, rows)
    out.close()
    for name, why in report.skipped:
        print(f"skipped {name}: {why}", file=sys.stderr)
    return 0


# --------------------------------------------------------------------------
# simulate


def sim_noise_sweep(args) -> int:
    scorers = [Scorer.parse(s, args.permutations) for s in _names(args.measures)]
    rows = noise_sweep(_names(args.shapes), _ints(args.ns), _floats(args.noise), scorers, args.trials, args.seed)
    meta = {
        "command": "simulate noise-sweep",
        "shapes": args.shapes,
        "ns": args.ns,
        "noise": args.noise,
        "measures": args.measures,
        "permutations": args.permutations,
        "trials": args.trials,
        "seed": args.seed,
    }
    out = _Output(args.out)
    _write_csv(out, meta, rows)
    out.close()
    return 0


def sim_selection_bias(args) -> int:
    scorer = Scorer(args.measure, _ADJUST[args.adjust], args.alpha, args.permutations)
    ns = _ints(args.ns)
    candidates = [(RelationSpec(args.shape, n, args.noise), f"n={n}") for n in ns]
    result = selection_experiment(SelectionTrialConfig(candidates, scorer, args.trials, args.seed))
    meta = {
        "command": "simulate selection-bias",
        "shape": args.shape,
        "noise": args.noise,
        "ns": args.ns,
        "scorer": scorer.label,
        "permutations": args.permutations,
        "trials": args.trials,
        "seed": args.seed,
    }
    out = _Output(args.out)
    _write_csv(out, meta, result.rows())
    out.close()
    return 0


def sim_gini_inflation(args) -> int:
    p = gini_inflation_experiment(
        args.n, args.trials, args.seed, args.x1_categories, args.x2_categories, args.y_categories
    )
    if args.out:
        out = _Output(args.out)
        meta = {
            "command": "simulate gini-inflation",
            "n": args.n,
            "trials": args.trials,
            "x1_categories": args.x1_categories,
            "x2_categories": args.x2_categories,
            "y_categories": args.y_categories,
            "seed": args.seed,
        }
        _write_csv(out, meta, [{"probability": p}])
        out.close()
    print(_fmt(p))
    return 0


def sim_mic_baseline(args) -> int:
    ns = _ints(args.ns)
    rows = []
    for n in ns:
        spec = RelationSpec("independent", n, 0.0, args.seed)
        for t in range(args.trials):
            rng = _rng.substream(args.seed, t, _rng.TRIAL)
            rows.append({"n": n, "trial": t, "mic": mic(gen_relationship(spec, rng=rng))})
    meta = {"command": "simulate mic-baseline", "ns": args.ns, "trials": args.trials, "seed": args.seed}
    if args.out:
        out = _Output(args.out)
        _write_csv(out, meta, rows)
        out.close()
    for n in ns:
        values = [r["mic"] for r in rows if r["n"] == n]
        print(f"n={n} mean_mic={_fmt(float(np.mean(values)))}")
    return 0


# --------------------------------------------------------------------------
# forest


def _forest_inputs(args):
    data = _load(args)
    if args.target not in data.columns:
        raise EstimationError("unknown-column", args.target)
    kinds = {k: v for k, v in data.kinds.items() if k != args.target}
    training = TrainingData.from_columns(data.columns, args.target, kinds)
    config = ForestConfig(args.trees, args.mtry, args.subsample, None, args.stop_rule)
    criterion = SplitCriterion(args.criterion, args.alpha if args.criterion == "agini" else None)
    return data, training, config, criterion


def forest_train(args) -> int:
    _, training, config, criterion = _forest_inputs(args)
    forest = train_forest(training, config, criterion, args.seed)
    with open(args.model, "w") as fh:
        fh.write(forest.to_json())
    print(f"trained {len(forest.trees)} trees ({criterion}) -> {args.model}")
    return 0


def forest_eval(args) -> int:
    if args.model:
        data = _load(args)
        with open(args.model) as fh:
            forest = Forest.from_json(fh.read())
        columns = encode_columns(forest.features, data.columns)
        index = {c: i for i, c in enumerate(forest.classes)}
        target = [None if _missing(v) else index.get(_key(v)) for v in data.column(args.target)]
        keep = np.array([t is not None for t in target])
        probs = forest.predict_proba([c[keep] for c in columns])
        value = auc(probs, np.array([t for t in target if t is not None]))
        print(f"auc {_fmt(value)}")
        return 0
    _, training, config, criterion = _forest_inputs(args)
    values = cross_validate(training, config, criterion, args.cv_reps, args.folds, args.seed)
    meta = {
        "command": "forest eval",
        "input": args.input,
        "target": args.target,
        "criterion": str(criterion),
        "trees": config.n_trees,
        "mtry": config.mtry,
        "subsample": config.subsample,
        "stop_rule": config.stop_rule,
        "cv_reps": args.cv_reps,
        "folds": args.folds,
        "seed": args.seed,
    }
    if args.out:
        out = _Output(args.out)
        _write_csv(out, meta, [{"replication": i, "auc": v} for i, v in enumerate(values)])
        out.close()
    print(f"auc {_fmt(float(np.mean(values)))} (mean of {len(values)} replications)")
    return 0


def forest_tune_alpha(args) -> int:
    _, training, config, _ = _forest_inputs(args)
    grid = _floats(args.grid)
    best, results = tune_alpha(training, config, grid, args.folds, args.seed, reps=args.cv_reps)
    for a in sorted(results):
        print(f"alpha={a:g} auc={_fmt(results[a])}")
    print(f"best_alpha {best:g}")
    return 0


# --------------------------------------------------------------------------
# parser


def _add_input(p):
    p.add_argument("--input", required=True, help="CSV file with a header row")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--missing", default=None, help="comma-separated missing markers (default: '', ?, NA)")
    p.add_argument("--categorical", default=None, help="columns forced categorical")
    p.add_argument("--real", default=None, help="columns forced real")


def _add_forest(p, model_required=False):
    _add_input(p)
    p.add_argument("--target", required=True)
    p.add_argument("--criterion", choices=("gini", "sgini", "agini"), default="gini")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--trees", type=int, default=500)
    p.add_argument("--mtry", type=int, default=None)
    p.add_argument("--subsample", type=float, default=0.5)
    p.add_argument("--stop-rule", choices=("raw_gain", "adjusted"), default="raw_gain")
    p.add_argument("--cv-reps", type=int, default=50)
    p.add_argument("--folds", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", required=model_required, default=None)
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="depadjust", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quantify", help="score one pair of columns")
    _add_input(p)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--measure", choices=("r2", "mic", "gini", "mi"), default="r2")
    p.add_argument("--adjust", choices=tuple(_ADJUST), default="raw")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--permutations", type=int, default=DEFAULT_PERMUTATIONS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_quantify)

    p = sub.add_parser("rank", help="rank columns by dependency with a target")
    _add_input(p)
    p.add_argument("--target", required=True)
    p.add_argument("--measure", choices=("r2", "mic", "gini", "mi"), default="r2")
    p.add_argument("--adjust", choices=tuple(_ADJUST), default="raw")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--min-n", type=int, default=10)
    p.add_argument("--top-k", type=int, default=1)
    p.add_argument("--permutations", type=int, default=DEFAULT_PERMUTATIONS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rank)

    sim = sub.add_parser("simulate", help="bias experiments on synthetic data")
    simsub = sim.add_subparsers(dest="experiment", required=True)

    p = simsub.add_parser("noise-sweep")
    p.add_argument("--shapes", default="linear")
    p.add_argument("--ns", default="30")
    p.add_argument("--noise", default="0,0.2,0.4,0.6,0.8,1")
    p.add_argument("--measures", default="r2,r2:quant", help="e.g. mic,mic:quant,r2:alpha=0.05")
    p.add_argument("--permutations", type=int, default=30)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=sim_noise_sweep)

    p = simsub.add_parser("selection-bias")
    p.add_argument("--shape", default="independent")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--ns", default="20,40,60,80,100")
    p.add_argument("--measure", choices=("r2", "mic"), default="r2")
    p.add_argument("--adjust", choices=tuple(_ADJUST), default="raw")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--permutations", type=int, default=30)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=sim_selection_bias)

    p = simsub.add_parser("gini-inflation")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--x1-categories", type=int, default=2)
    p.add_argument("--x2-categories", type=int, default=3)
    p.add_argument("--y-categories", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=sim_gini_inflation)

    p = simsub.add_parser("mic-baseline")
    p.add_argument("--ns", default="20,80")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=sim_mic_baseline)

    forest = sub.add_parser("forest", help="random forests with adjusted split criteria")
    fsub = forest.add_subparsers(dest="action", required=True)
    p = fsub.add_parser("train")
    _add_forest(p, model_required=True)
    p.set_defaults(func=forest_train)
    p = fsub.add_parser("eval")
    _add_forest(p)
    p.set_defaults(func=forest_eval)
    p = fsub.add_parser("tune-alpha")
    _add_forest(p)
    p.add_argument("--grid", default=",".join(str(a) for a in DEFAULT_ALPHA_GRID))
    p.set_defaults(func=forest_tune_alpha)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EstimationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.code, EXIT_GENERIC)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GENERIC


if __name__ == "__main__":
    sys.exit(main())
