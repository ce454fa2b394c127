"""Command-line front end.

Every command works inside a run directory (``--out``, default ``run``)::

    run/config.json            resolved configuration
    run/network/*.csv          items, nodes, inventory
    run/orders.csv
    run/labels.csv
    run/features.csv
    run/models/<kind>.json     one per model kind, plus selection.json
    run/eval/                  report.json and plotting tables
    run/route/                 outcomes.csv and summary.json
    run/report.md

Failures print one JSON object on stderr and exit with status 2 (1 for
unexpected internal errors).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from splitshort import __version__
from splitshort.config import RunConfig, default_config
from splitshort.errors import ConfigError, FormatError, ShapeError, SplitShortError
from splitshort.evaluation import (
    ENSEMBLE,
    MODEL_KINDS,
    EvalReport,
    accuracy,
    curve_point_at,
    log_loss,
    nested_cv,
    select_hyperparameters,
    single_item_partition,
)
from splitshort.features import CATALOG, binned_split_rates, extract_features
from splitshort.formats import (
    dumps_features,
    dumps_labels,
    dumps_orders,
    dumps_outcomes,
    dumps_table,
    fmt_float,
    load_json,
    load_network,
    loads_features,
    loads_labels,
    loads_orders,
    network_files,
    read_text,
    save_json,
    save_text,
)
from splitshort.generator import generate_network, generate_orders
from splitshort.models import extract_rules, load_model, save_model, train_ensemble
from splitshort.optimizer import candidate_nodes, label_orders
from splitshort.router import simulate_stream

log = logging.getLogger("splitshort")

REPORT_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.97, 0.99)


class RunPaths:
    def __init__(self, root):
        self.root = os.fspath(root)

    def __getattr__(self, name):
        table = {
            "config": "config.json", "network": "network", "orders": "orders.csv", "labels": "labels.csv",
            "features": "features.csv", "models": "models", "eval": "eval", "route": "route",
            "report": "report.md",
        }
        if name not in table:
            raise AttributeError(name)
        return os.path.join(self.root, table[name])


def _resolve_config(args) -> RunConfig:
    if getattr(args, "config", None):
        cfg = RunConfig.load(args.config)
    else:
        run_cfg = os.path.join(args.out, "config.json")
        cfg = RunConfig.load(run_cfg) if os.path.exists(run_cfg) else default_config()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _multi_item_rows(vectors, labels, criterion):
    if len(vectors) != len(labels) or any(v.order_id != l.order_id for v, l in zip(vectors, labels)):
        raise ShapeError("features and labels are not aligned by order_id")
    nl = CATALOG.index("num_lines")
    tq = CATALOG.index("total_quantity")
    keep = []
    for i, v in enumerate(vectors):
        single = v.values[nl] == 1 and (criterion == "one_line" or v.values[tq] == 1)
        if not single:
            keep.append(i)
    return keep


def _xy(vectors, labels, rows):
    X = np.array([vectors[i].values for i in rows], dtype=np.float64).reshape(len(rows), len(CATALOG))
    y = np.array([labels[i].y for i in rows], dtype=np.int64)
    return X, y


# -- commands ----------------------------------------------------------------

def cmd_generate(cfg: RunConfig, out) -> dict:
    paths = RunPaths(out)
    os.makedirs(paths.root, exist_ok=True)
    network = generate_network(cfg.generator)
    orders = generate_orders(cfg.generator, network, cfg.optimizer)
    os.makedirs(paths.network, exist_ok=True)
    for name, text in network_files(network).items():
        save_text(text, os.path.join(paths.network, name))
    save_text(dumps_orders(orders), paths.orders)
    save_text(cfg.dumps(), paths.config)
    return {"nodes": len(network.nodes), "items": len(network.catalog), "orders": len(orders)}


def _load_inputs(paths, network=None, orders=None):
    net = load_network(network or paths.network)
    opath = orders or paths.orders
    return net, loads_orders(read_text(opath), path=opath)


def cmd_label(cfg: RunConfig, out, network=None, orders=None) -> dict:
    paths = RunPaths(out)
    net, orders = _load_inputs(paths, network, orders)
    labels = label_orders(orders, net, cfg.optimizer)
    save_text(dumps_labels(labels), paths.labels)
    _, _, summary = single_item_partition(orders, labels, cfg.train.single_item_criterion)
    return summary.to_dict()


def cmd_featurize(cfg: RunConfig, out, network=None, orders=None) -> dict:
    paths = RunPaths(out)
    net, orders = _load_inputs(paths, network, orders)
    vectors = [extract_features(o, net, candidate_nodes(o, net, cfg.optimizer), cfg.optimizer.w_clearance)
               for o in orders]
    save_text(dumps_features(vectors), paths.features)
    return {"orders": len(vectors), "features": len(CATALOG), "catalog_version": CATALOG.version}


def _load_xy(cfg, paths, features=None, labels=None):
    fpath = features or paths.features
    lpath = labels or paths.labels
    vectors = loads_features(read_text(fpath), path=fpath)
    labs = loads_labels(read_text(lpath), path=lpath)
    rows = _multi_item_rows(vectors, labs, cfg.train.single_item_criterion)
    return vectors, labs, rows


def cmd_train(cfg: RunConfig, out, features=None, labels=None) -> dict:
    """Pick each kind's grid point by k-fold CV on all multi-item rows, then refit."""
    paths = RunPaths(out)
    vectors, labs, rows = _load_xy(cfg, paths, features, labels)
    X, y = _xy(vectors, labs, rows)
    os.makedirs(paths.models, exist_ok=True)
    trained, selection = {}, {}
    base = [k for k in cfg.cv.model_kinds if k != ENSEMBLE]
    for ki, k in enumerate(base):
        kind = MODEL_KINDS[k]
        rng = np.random.default_rng([cfg.seed, 7919, ki])
        best, _ = select_hyperparameters(kind, X, y, cfg.cv.grid, cfg.cv.n_inner_folds, rng,
                                         cfg.cv.selection_metric)
        model = kind.fit_point(X, y, cfg.cv.grid, best)
        trained[k] = model
        selection[k] = kind.grid_values(cfg.cv.grid)[best]
        log.info("trained %s with %s", k, selection[k])
    if ENSEMBLE in cfg.cv.model_kinds:
        trained[ENSEMBLE] = train_ensemble([trained[m] for m in cfg.cv.ensemble_members])
        selection[ENSEMBLE] = {"members": list(cfg.cv.ensemble_members)}
    for k, m in trained.items():
        save_model(m, os.path.join(paths.models, f"{k}.json"))
        p = m.predict_proba(X)
        selection[k] = {"hyperparameters": selection[k], "train_accuracy": accuracy(p, y),
                        "train_log_loss": log_loss(p, y)}
    save_json({"n_train": int(len(y)), "selection": selection}, os.path.join(paths.models, "selection.json"))
    return {"n_train": int(len(y)), "models": sorted(trained)}


def cmd_evaluate(cfg: RunConfig, out, features=None, labels=None, progress=None) -> dict:
    paths = RunPaths(out)
    vectors, labs, rows = _load_xy(cfg, paths, features, labels)
    X, y = _xy(vectors, labs, rows)
    n_total = len(vectors)
    partition = {
        "n_total": n_total, "n_single": n_total - len(rows), "n_multi": len(rows),
        "n_multi_split": int(y.sum()),
        "single_share": (n_total - len(rows)) / n_total if n_total else 0.0,
        "multi_split_share": int(y.sum()) / n_total if n_total else 0.0,
        "multi_no_split_share": (len(rows) - int(y.sum())) / n_total if n_total else 0.0,
        "criterion": cfg.train.single_item_criterion,
        "evaluation_possible": bool(len(set(y.tolist())) == 2),
    }
    if not partition["evaluation_possible"]:
        raise ShapeError("the multi-item subset needs both labels for evaluation")
    report = nested_cv(X, cfg.cv, y=y, progress=progress)
    os.makedirs(paths.eval, exist_ok=True)
    save_text(report.to_json(), os.path.join(paths.eval, "report.json"))
    save_json(partition, os.path.join(paths.eval, "partition.json"))
    save_text(dumps_table("metrics", ("model", "accuracy_mean", "accuracy_std", "log_loss_mean", "log_loss_std"),
                          ((k, fmt_float(a), fmt_float(b), fmt_float(c), fmt_float(d))
                           for k, a, b, c, d in report.metrics_table())),
              os.path.join(paths.eval, "metrics.csv"))
    save_text(dumps_table("curves", ("model", "threshold", "coverage", "accuracy_on_covered"),
                          ((k, fmt_float(pt.threshold), fmt_float(pt.coverage),
                            "" if pt.accuracy is None else fmt_float(pt.accuracy))
                           for k, m in report.models.items() for pt in m.curve)),
              os.path.join(paths.eval, "curves.csv"))
    save_text(dumps_table("importances", ("model", "rank", "feature", "importance"),
                          ((k, r + 1, name, fmt_float(v))
                           for k, m in report.models.items() for r, (name, v) in enumerate(m.importances))),
              os.path.join(paths.eval, "importances.csv"))
    multi_v = [vectors[i] for i in rows]
    multi_l = [labs[i] for i in rows]
    bin_rows = []
    for name in cfg.train.binned_features:
        for b, br in enumerate(binned_split_rates(multi_v, multi_l, name, cfg.train.n_bins)):
            bin_rows.append((name, b, fmt_float(br.lower), fmt_float(br.upper), br.count,
                             "" if br.split_fraction is None else fmt_float(br.split_fraction)))
    save_text(dumps_table("binned-rates", ("feature", "bin", "lower", "upper", "count", "split_fraction"), bin_rows),
              os.path.join(paths.eval, "binned_rates.csv"))
    return {k: {"accuracy": f"{a:.4f}±{b:.4f}", "log_loss": f"{c:.4f}±{d:.4f}"}
            for k, a, b, c, d in report.metrics_table()}


def cmd_route(cfg: RunConfig, out, network=None, orders=None, model=None, ground_truth=True) -> dict:
    paths = RunPaths(out)
    net, orders = _load_inputs(paths, network, orders)
    mpath = model or cfg.router.model_path or os.path.join(paths.models, f"{ENSEMBLE}.json")
    m = load_model(mpath)
    outcomes, summary = simulate_stream(orders, net, m, cfg.router, cfg.optimizer, with_ground_truth=ground_truth)
    os.makedirs(paths.route, exist_ok=True)
    save_text(dumps_outcomes(outcomes), os.path.join(paths.route, "outcomes.csv"))
    # wall time varies run to run, so it is logged rather than written
    log.info("routed %d orders in %.2fs", summary.n_orders, summary.wall_time_s)
    doc = summary.to_dict(include_timing=False)
    doc["threshold"] = cfg.router.threshold
    doc["model"] = os.path.basename(mpath)
    save_json(doc, os.path.join(paths.route, "summary.json"))
    return {k: doc[k] for k in ("route_counts", "multi_item_shortcut_coverage", "shortcut_error_rate",
                                "total_regret", "decide_cost_units", "counterfactual_cost_units")}


def _md_table(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def cmd_report(cfg: RunConfig, out, max_rules: int = 20) -> dict:
    paths = RunPaths(out)
    rp = os.path.join(paths.eval, "report.json")
    report = EvalReport.from_dict(load_json(rp))
    parts = ["# Split-shortcut run report\n\n"]
    ppath = os.path.join(paths.eval, "partition.json")
    if os.path.exists(ppath):
        p = load_json(ppath)
        parts.append("## Order partition\n\n")
        parts.append(_md_table(("orders", "single-item", "multi-item split", "multi-item not split"), [(
            p["n_total"], f"{p['single_share']:.2%}", f"{p['multi_split_share']:.2%}",
            f"{p['multi_no_split_share']:.2%}")]))
    cv = report.config
    parts.append(f"\n## Cross-validated metrics ({cv['n_repeats']} x {cv['n_outer_folds']}-fold, "
                 f"{report.n_examples} multi-item orders)\n\n")
    parts.append(_md_table(("model", "accuracy", "log loss"), [
        (k, f"{a:.4f} ± {b:.4f}", f"{c:.4f} ± {d:.4f}") for k, a, b, c, d in report.metrics_table()]))
    parts.append("\n## Confidence threshold vs coverage and accuracy on covered orders\n\n")
    kinds = list(report.models)
    rows = []
    for t in REPORT_THRESHOLDS:
        row = [f"{t:.3f}"]
        for k in kinds:
            try:
                pt = curve_point_at(report.models[k].curve, t)
            except KeyError:
                row.append("n/a")
                continue
            acc = "n/a" if pt.accuracy is None else f"{pt.accuracy:.4f}"
            row.append(f"{pt.coverage:.3f} / {acc}")
        rows.append(row)
    parts.append(_md_table(["threshold"] + [f"{k} (coverage / accuracy)" for k in kinds], rows))
    parts.append("\n## Feature importances (mean over folds, top 10)\n\n")
    for k in kinds:
        top = ", ".join(f"{n} {v:.3f}" for n, v in report.models[k].importances[:10])
        parts.append(f"- **{k}**: {top}\n")
    bpath = os.path.join(paths.eval, "binned_rates.csv")
    if os.path.exists(bpath):
        from splitshort.formats import loads_table
        _, brows = loads_table(read_text(bpath), "binned-rates", path=bpath)
        parts.append("\n## Split rate by feature bin\n")
        by_feature: dict[str, list] = {}
        for _, f in brows:
            by_feature.setdefault(f[0], []).append(f)
        for name, fr in by_feature.items():
            parts.append(f"\n### {name}\n\n")
            parts.append(_md_table(("bin", "range", "orders", "split share"), [
                (f[1], f"[{float(f[2]):.4g}, {float(f[3]):.4g}]", f[4],
                 "n/a" if f[5] == "" else f"{float(f[5]):.3f}") for f in fr]))
    tpath = os.path.join(paths.models, "DecisionTree.json")
    if os.path.exists(tpath):
        rules = sorted(extract_rules(load_model(tpath)), key=lambda r: -r.support)
        parts.append(f"\n## Decision tree rules (top {min(max_rules, len(rules))} of {len(rules)} by support)\n\n")
        parts.extend(f"- {r}\n" for r in rules[:max_rules])
    spath = os.path.join(paths.route, "summary.json")
    if os.path.exists(spath):
        s = load_json(spath)
        parts.append(f"\n## Routing at threshold {s['threshold']}\n\n")
        parts.append(_md_table(("route", "orders"), sorted(s["route_counts"].items())))
        parts.append(f"\nmulti-item shortcut coverage: {s['multi_item_shortcut_coverage']}; "
                     f"shortcut error rate: {s['shortcut_error_rate']}; total regret: {s['total_regret']}; "
                     f"cost units: {s['decide_cost_units']} vs {s['counterfactual_cost_units']} always solving\n")
    save_text("".join(parts), paths.report)
    return {"report": paths.report}


def cmd_pipeline(cfg: RunConfig, out, progress=None) -> dict:
    res = {"generate": cmd_generate(cfg, out), "label": cmd_label(cfg, out), "featurize": cmd_featurize(cfg, out),
           "train": cmd_train(cfg, out), "evaluate": cmd_evaluate(cfg, out, progress=progress),
           "route": cmd_route(cfg, out)}
    res["report"] = cmd_report(cfg, out)
    return res


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run configuration (JSON); default: RUN/config.json "
                                                         "if present, else the packaged default")
    common.add_argument("--seed", type=int, metavar="N", help="override the configured seed")
    common.add_argument("--out", metavar="DIR", default="run", help="run directory (default: run)")
    common.add_argument("--threads", type=int, metavar="N", default=1,
                        help="worker threads (computation is single-threaded; values above 1 are accepted "
                             "and ignored)")
    common.add_argument("--quiet", action="store_true", help="suppress progress and result output")

    parser = argparse.ArgumentParser(prog="splitshort", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="synthesize a network and an order stream")
    for name, help_ in (("label", "solve every order exactly and write split labels"),
                        ("featurize", "write one feature vector per order")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--network", metavar="DIR")
        p.add_argument("--orders", metavar="PATH")
    for name, help_ in (("train", "fit every model kind on the multi-item orders"),
                        ("evaluate", "repeated nested cross-validation")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--features", metavar="PATH")
        p.add_argument("--labels", metavar="PATH")
    p = sub.add_parser("route", parents=[common], help="route the order stream through a trained model")
    p.add_argument("--network", metavar="DIR")
    p.add_argument("--orders", metavar="PATH")
    p.add_argument("--model", metavar="PATH")
    p.add_argument("--threshold", type=float, help="override router.threshold")
    p.add_argument("--no-ground-truth", action="store_true", help="skip exact solves used for regret")
    sub.add_parser("report", parents=[common], help="write RUN/report.md from the run artifacts")
    sub.add_parser("pipeline", parents=[common], help="generate, label, featurize, train, evaluate, route, report")
    return parser


def _dispatch(args, cfg):
    progress = None if args.quiet else (lambda msg: log.info("%s", msg))
    c = args.command
    if c == "generate":
        return cmd_generate(cfg, args.out)
    if c == "label":
        return cmd_label(cfg, args.out, args.network, args.orders)
    if c == "featurize":
        return cmd_featurize(cfg, args.out, args.network, args.orders)
    if c == "train":
        return cmd_train(cfg, args.out, args.features, args.labels)
    if c == "evaluate":
        return cmd_evaluate(cfg, args.out, args.features, args.labels, progress=progress)
    if c == "route":
        if args.threshold is not None:
            import dataclasses

            from splitshort.router import RouterConfig
            cfg = dataclasses.replace(cfg, router=RouterConfig(args.threshold, cfg.router.model_path,
                                                               cfg.router.trivial_bypass))
        return cmd_route(cfg, args.out, args.network, args.orders, args.model, not args.no_ground_truth)
    if c == "report":
        return cmd_report(cfg, args.out)
    if c == "pipeline":
        return cmd_pipeline(cfg, args.out, progress=progress)
    raise ConfigError("command", f"unknown command {c!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(asctime)s %(message)s", stream=sys.stderr)
    t0 = time.perf_counter()
    try:
        if args.threads < 1:
            raise ConfigError("threads", "must be >= 1")
        cfg = _resolve_config(args)
        result = _dispatch(args, cfg)
    except SplitShortError as exc:
        print(json.dumps(exc.to_record(), sort_keys=True), file=sys.stderr)
        return 2
    except OSError as exc:
        rec = FormatError(exc.strerror or str(exc), path=exc.filename).to_record()
        rec["code"] = "IO_ERROR"
        print(json.dumps(rec, sort_keys=True), file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort single-line error contract
        print(json.dumps({"code": "INTERNAL_ERROR", "message": f"{type(exc).__name__}: {exc}"}), file=sys.stderr)
        return 1
    if not args.quiet:
        print(json.dumps(result, sort_keys=True, default=str))
        log.info("%s finished in %.1fs", args.command, time.perf_counter() - t0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
