"""Command-line interface: ``mfpls {simulate,fit,predict,cv,tree,report}``.

Validation problems exit with status 2 and print ``{"error": code, "message": ...}``
to stderr; unexpected failures exit with status 1.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import io, serialize
from .basis import BSplineBasis, Domain, TensorBSplineBasis
from .classify import DiscriminantModel, classification_metrics, fit_plsda, mspe, score
from .cv import cross_validate
from .data import smooth
from .errors import MfplsError, ValidationError
from .pls import MfplsModel, default_h_max, mfpls_fit, predict
from .rng import substream
from .sim import (SETTING1_SNRS, SETTING3_SNRS, Setting1Config, Setting2Config, Setting3Config,
                  canonical_method, generate, method_label, run_experiment)
from .tree import GroupStructure, TreeConfig, estimate_depth, grow, predict_tree, render

METRIC_LABELS = {"mspe": "MSPE", "auc": "AUC", "sensitivity": "Sensitivity", "specificity": "Specificity",
                 "accuracy": "Accuracy"}
TABLE_METRICS = {1: ("mspe",), 2: ("auc", "sensitivity", "specificity"), 3: ("auc",)}
DEFAULT_METHODS = {1: "mfpls", 2: "mfpls,tmfpls_h1,tmfpls_hcv", 3: "mfpls,mfpls_dim1,mfpls_dim2"}


# ---------------------------------------------------------------- argument helpers

def parse_components(text: str):
    """``"3"`` -> 3; ``"cv"`` -> ("cv", 10); ``"cv:20"`` -> ("cv", 20)."""
    text = str(text).strip().lower()
    if text == "cv" or text.startswith("cv:"):
        try:
            k = int(text[3:]) if text != "cv" else 10
        except ValueError:
            raise ValidationError(f"bad fold count in {text!r}") from None
        if k < 2:
            raise ValidationError("cross-validation needs at least 2 folds")
        return ("cv", k)
    try:
        h = int(text)
    except ValueError:
        raise ValidationError(f"bad components spec {text!r}") from None
    if h < 1:
        raise ValidationError("number of components must be >= 1")
    return h


def parse_basis_sizes(text: Optional[str], d: int) -> List[tuple]:
    """``"20,2x2"`` -> [(20,), (2, 2)]; a single entry applies to every dimension."""
    if text is None:
        return [(20,)] * d
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        try:
            sizes = tuple(int(s) for s in tok.split("x"))
        except ValueError:
            raise ValidationError(f"bad basis size {tok!r}") from None
        if len(sizes) not in (1, 2) or min(sizes) < 1:
            raise ValidationError(f"bad basis size {tok!r}")
        out.append(sizes)
    if len(out) == 1:
        out = out * d
    if len(out) != d:
        raise ValidationError(f"{len(out)} basis sizes given for {d} dimensions")
    return out


def _floats_list(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"bad number list {text!r}") from None


def build_bases(raw, sizes: Sequence[tuple], order_1d: int = 3, order_2d: int = 2) -> tuple:
    bases = []
    for grid, size in zip(raw.grids, sizes):
        if len(size) == 1:
            bases.append(BSplineBasis.uniform(size[0], order_1d, (float(grid.min()), float(grid.max()))))
        else:
            dom = Domain.rectangle((grid[:, 0].min(), grid[:, 0].max()), (grid[:, 1].min(), grid[:, 1].max()))
            bases.append(TensorBSplineBasis.uniform(size[0], size[1], order_2d, dom))
    return tuple(bases)


def load_dataset(args):
    if not args.x:
        raise ValidationError("at least one --x file is required")
    sizes = parse_basis_sizes(args.basis_size, len(args.x))
    raw = io.read_observations(args.x, [len(s) for s in sizes])
    return raw, sizes


def _split(n: int, frac: float, seed: int):
    if not 0.0 < frac <= 1.0:
        raise ValidationError("--train-frac must lie in (0, 1]")
    if frac == 1.0:
        idx = np.arange(n)
        return idx, idx[:0]
    perm = substream(seed, 2).permutation(n)
    cut = int(np.floor(frac * n))
    return np.sort(perm[:cut]), np.sort(perm[cut:])


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _metrics(task: str, y, pred) -> dict:
    if task == "regression":
        return {"mspe": mspe(y, pred), "n": int(len(y))}
    out = classification_metrics(y, gamma=pred)
    out["n"] = int(len(y))
    return out


# ---------------------------------------------------------------- commands

def cmd_fit(args) -> int:
    raw, sizes = load_dataset(args)
    y, task = io.read_response(args.y)
    bases = build_bases(raw, sizes)
    sample = smooth(raw, bases)
    if y.size != sample.n:
        raise ValidationError("response length differs from the number of observations")
    train, test = _split(sample.n, args.train_frac, args.seed)
    tr = sample.rows(train)
    comps = parse_components(args.components)
    out = _out_dir(args)
    payload = {"task": task, "seed": args.seed}
    if task == "regression":
        if isinstance(comps, tuple):
            report = cross_validate(tr, y[train], k_folds=comps[1], criterion="mse", seed=args.seed)
            if report.chosen_h < 1:
                raise ValidationError("cross-validation found no usable number of components")
            payload["cv"] = report.to_dict()
            h = report.chosen_h
        else:
            h = comps
        model = mfpls_fit(tr, y[train], h_max=h)
        beta = model.beta
        pred = lambda s: predict(model, s)
    else:
        if isinstance(comps, tuple):
            model = fit_plsda(tr, y[train], None, k_folds=comps[1], seed=args.seed)
        else:
            model = fit_plsda(tr, y[train], comps)
        beta = model.beta
        pred = lambda s: score(model, s)
    payload["n_components"] = model.n_components
    payload["train"] = _metrics(task, y[train], pred(tr))
    if test.size:
        payload["test"] = _metrics(task, y[test], pred(sample.rows(test)))
    serialize.save(model, out / "model.json")
    io.write_json(out / "metrics.json", payload)
    io.write_beta(out / "beta.csv", beta, raw.grids)
    print(json.dumps(payload["train"], sort_keys=True))
    return 0


def _load_model_sample(args):
    model = serialize.load(args.model)
    if not args.x:
        raise ValidationError("at least one --x file is required")
    bases = model.bases
    raw = io.read_observations(args.x, [b.domain.ndim for b in bases])
    return model, smooth(raw, bases)


def cmd_predict(args) -> int:
    model, sample = _load_model_sample(args)
    out = _out_dir(args)
    if isinstance(model, MfplsModel):
        values = predict(model, sample)
        io.write_predictions(out / "predictions.csv", values=values)
        task = "regression"
    elif isinstance(model, DiscriminantModel):
        values = score(model, sample)
        io.write_predictions(out / "predictions.csv", gamma=values, predicted=(values <= 0).astype(int))
        task = "classification"
    else:
        classes, leaf = predict_tree(model, sample)
        io.write_rows(out / "predictions.csv", ["id", "leaf_score", "predicted_class"],
                      [[i, io.fmt(s), int(c)] for i, (s, c) in enumerate(zip(leaf, classes))])
        task = "tree"
    if args.y:
        y, _ = io.read_response(args.y)
        if y.size != sample.n:
            raise ValidationError("response length differs from the number of observations")
        if task == "tree":
            metrics = classification_metrics(y, scores=leaf, predicted=classes)
            metrics["n"] = int(y.size)
        else:
            metrics = _metrics(task, y, values)
        io.write_json(out / "metrics.json", metrics)
        print(json.dumps(metrics, sort_keys=True))
    return 0


def cmd_cv(args) -> int:
    raw, sizes = load_dataset(args)
    y, task = io.read_response(args.y)
    sample = smooth(raw, build_bases(raw, sizes))
    comps = parse_components(args.components)
    folds = comps[1] if isinstance(comps, tuple) else 10
    h_max = comps if isinstance(comps, int) else default_h_max(sample.n - sample.n // folds, sample.sizes)
    report = cross_validate(sample, y, range(1, h_max + 1), k_folds=folds,
                            criterion="mse" if task == "regression" else "auc", seed=args.seed)
    io.write_json(_out_dir(args) / "cv.json", report.to_dict())
    print(f"chosen h = {report.chosen_h} ({report.criterion})")
    return 0


def cmd_tree(args) -> int:
    raw, sizes = load_dataset(args)
    y, task = io.read_response(args.y)
    if task != "classification":
        raise ValidationError("tree needs a class response (header 'class' or 'label')")
    sample = smooth(raw, build_bases(raw, sizes))
    groups = GroupStructure.parse(args.groups) if args.groups else GroupStructure.default(sample.d)
    groups.validate(sample.d)
    comps = parse_components(args.components)
    config = TreeConfig(
        purity_threshold=args.purity,
        max_depth=args.max_depth,
        n_components=None if isinstance(comps, tuple) else comps,
        cv_folds=comps[1] if isinstance(comps, tuple) else 10,
        seed=args.seed,
    )
    train, test = _split(sample.n, args.train_frac, args.seed)
    tr = sample.rows(train)
    depth = estimate_depth(tr, y[train], groups, config)
    tree = grow(tr, y[train], groups, replace(config, max_depth=depth))
    out = _out_dir(args)
    payload = {"depth": depth, "seed": args.seed, "groups": [groups.label(k) for k in range(len(groups))]}
    for name, idx in (("train", train), ("test", test)):
        if idx.size:
            classes, leaf = predict_tree(tree, sample.rows(idx))
            payload[name] = classification_metrics(y[idx], scores=leaf, predicted=classes)
            payload[name]["n"] = int(idx.size)
    text = render(tree)
    serialize.save(tree, out / "tree.json")
    (out / "tree.txt").write_text(text, encoding="utf-8")
    io.write_json(out / "metrics.json", payload)
    sys.stdout.write(text)
    return 0


def _configs(args) -> list:
    setting = args.setting
    if setting == 1:
        snrs = _floats_list(args.snr) or list(SETTING1_SNRS)
        base = Setting1Config()
        configs = [replace(base, snr=s) for s in snrs]
    elif setting == 2:
        scen = [int(s) for s in (_floats_list(args.scenario) or [1, 2])]
        configs = [Setting2Config(scenario=s) for s in scen]
    elif setting == 3:
        snrs = _floats_list(args.snr) or list(SETTING3_SNRS)
        configs = [Setting3Config(snr=s) for s in snrs]
    else:
        raise ValidationError("--setting must be 1, 2 or 3")
    overrides = {}
    if args.train_frac is not None:
        overrides["train_fraction"] = args.train_frac
    if args.n is not None:
        overrides["n"] = args.n
    if args.basis_size is not None:
        sizes = parse_basis_sizes(args.basis_size, 2 if setting == 3 else 1)
        overrides["n_basis"] = sizes[0][0]
        if setting == 3:
            if len(sizes[1]) != 2:
                raise ValidationError("the image basis size needs the form AxB")
            overrides["image_basis"] = sizes[1]
    if setting in (2, 3) and args.max_depth is not None:
        overrides["tree_max_depth"] = args.max_depth
    return [replace(c, **overrides) for c in configs]


SUMMARY_HEADER = ["setting", "snr/scenario", "method", "metric", "mean", "std", "replications", "seed"]


def format_table(rows: Sequence[dict]) -> str:
    """Aligned text table: one row per (level, method), ``mean(std)`` cells."""
    if not rows:
        return "(no results)\n"
    setting = int(rows[0]["setting"])
    level_name = "Scenario" if setting == 2 else "SNR"
    metrics = TABLE_METRICS[setting]
    cells = {}
    order = []
    for r in rows:
        key = (r["snr/scenario"], r["method"])
        if key not in cells:
            cells[key] = {}
            order.append(key)
        cells[key][r["metric"]] = f"{float(r['mean']):.2f}({float(r['std']):.2f})"
    header = [level_name, "Method"] + [METRIC_LABELS[m] for m in metrics]
    body = []
    for level, method in order:
        lv = f"{float(level):g}" if setting != 2 else str(int(float(level)))
        body.append([lv, method_label(method)] + [cells[(level, method)].get(m, "-") for m in metrics])
    widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
    line = lambda row: "  ".join(str(x).ljust(w) for x, w in zip(row, widths)).rstrip()
    out = [f"Setting {setting} ({rows[0]['replications']} replications, seed {rows[0]['seed']})", line(header),
           line(["-" * w for w in widths])]
    out.extend(line(r) for r in body)
    return "\n".join(out) + "\n"


def cmd_simulate(args) -> int:
    methods = [canonical_method(m) for m in (args.methods or DEFAULT_METHODS.get(args.setting, "mfpls")).split(",")]
    configs = _configs(args)
    if args.reps < 1:
        raise ValidationError("--reps must be >= 1")
    out = _out_dir(args)
    summary, details, timings, errors = [], [], [], []
    for config in configs:
        result = run_experiment(config, methods, args.reps, args.seed, jobs=args.jobs)
        summary.extend(result.summary())
        errors.extend({"level": config.level, **e} for e in result.errors())
        for rec in result.records:
            details.append({k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in rec.items()
                            if k not in ("time", "beta", "beta_dims")} | {"level": config.level})
            timings.append([config.setting, config.level, rec["rep"], rec["method"], f"{rec['time']:.6f}"])
            if "beta" in rec:
                name = f"beta_s{config.setting}_{config.level:g}_{rec['method']}.csv"
                grids = [result.grids[j] for j in rec["beta_dims"]]
                io.write_beta(out / name, rec["beta"], grids, rec["beta_dims"])
    io.write_rows(out / "results.csv", SUMMARY_HEADER,
                  [[r[h] if h not in ("mean", "std") else io.fmt(r[h]) for h in SUMMARY_HEADER] for r in summary])
    io.write_json(out / "results.json", {
        "setting": args.setting,
        "seed": args.seed,
        "replications": args.reps,
        "methods": methods,
        "configs": [asdict(c) for c in configs],
        "summary": summary,
        "replicates": details,
        "errors": errors,
    })
    table = format_table(summary)
    (out / "table.txt").write_text(table, encoding="utf-8")
    if args.timings:
        io.write_rows(out / "timings.csv", ["setting", "snr/scenario", "rep", "method", "seconds"], timings)
    sys.stdout.write(table)
    return 0


def read_summary(path) -> List[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(SUMMARY_HEADER) - set(rows[0]):
        raise ValidationError(f"{path} is not a results table")
    return rows


def cmd_report(args) -> int:
    path = Path(args.results)
    if path.is_dir():
        path = path / "results.csv"
    if not path.is_file():
        raise ValidationError(f"file not found: {path}")
    table = format_table(read_summary(path))
    if args.out:
        (_out_dir(args) / "table.txt").write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return 0


# ---------------------------------------------------------------- parser

def read_config_file(path) -> List[str]:
    """``key = value`` lines (``#`` comments) turned into ``--key value`` arguments."""
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"config file not found: {p}")
    argv = []
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{p}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if flag == "--x":
            argv.append(flag)
            argv.extend(value.split())
        elif value.lower() in ("true", "yes") and flag in ("--timings",):
            argv.append(flag)
        else:
            argv.extend([flag, value])
    return argv


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mfpls", description="PLS regression, classification and trees for multivariate functional data.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, data=True):
        p.add_argument("--config", help="key = value file; flags on the command line take precedence")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out")
        if data:
            p.add_argument("--x", nargs="+", help="one CSV per dimension")
            p.add_argument("--y", help="single-column response CSV")
            p.add_argument("--basis-size", help="per-dimension basis sizes, e.g. 20,2x2 (AxB marks an image)")
            p.add_argument("--components", default="cv:10", help="fixed h, or cv:K for K-fold selection")
            p.add_argument("--train-frac", type=float, default=1.0)

    p = sub.add_parser("fit", help="fit an MFPLS regression or discriminant model")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="apply a saved model or tree")
    p.add_argument("--config")
    p.add_argument("--model", required=True)
    p.add_argument("--x", nargs="+")
    p.add_argument("--y")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", help="cross-validate the number of components")
    common(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("tree", help="grow a TMFPLS tree with estimated depth")
    common(p)
    p.set_defaults(components="1")
    p.add_argument("--groups", help="1-based groups, e.g. '1;2;1,2'")
    p.add_argument("--purity", type=float, default=0.01)
    p.add_argument("--max-depth", type=int, default=10)
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("simulate", help="run a simulation setting and print the results table")
    common(p, data=False)
    p.add_argument("--setting", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--scenario", help="scenario list for setting 2, e.g. 1,2")
    p.add_argument("--snr", help="SNR list for settings 1 and 3")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--methods", help="comma list: mfpls, mfpls_dim1, tmfpls_h1, tmfpls_hcv")
    p.add_argument("--n", type=int, help="sample size override")
    p.add_argument("--basis-size")
    p.add_argument("--train-frac", type=float)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--timings", action="store_true", help="also write wall-clock times to timings.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="render a results.csv as an aligned table")
    p.add_argument("--config")
    p.add_argument("--results", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def _expand_config(argv: List[str]) -> List[str]:
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise ValidationError("--config needs a path")
    rest = argv[:i] + argv[i + 2:]
    # subcommand first, then file values, then explicit flags (last one wins)
    return rest[:1] + read_config_file(argv[i + 1]) + rest[1:]


def _fail(code: str, message: str, status: int) -> int:
    sys.stderr.write(json.dumps({"error": code, "message": message}, sort_keys=True) + "\n")
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_expand_config(argv))
        return args.func(args)
    except MfplsError as exc:
        return _fail(exc.code, str(exc), 2)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        return _fail("validation_error", f"{type(exc).__name__}: {exc}", 2)
    except Exception as exc:  # noqa: BLE001 - reported as an internal failure
        return _fail("internal_error", f"{type(exc).__name__}: {exc}", 1)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
