"""Command-line interface.

Subcommands: table1, sweep, triptych, ensemble, train, attack.  Options
resolve in three layers: built-in defaults, then a flat key=value config
file (--config), then command-line flags.  The resolved configuration is
printed at startup so every run records its own provenance.  Exit codes:
0 success, 1 a verification check failed, 2 bad input or missing data.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import experiments
from .dataio import DataError
from .experiments import ExperimentConfig
from .svm import evaluate, load_model, save_model, train

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2


def _parse_rho_arg(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ValueError(f"bad rho list {text!r}") from exc


def _parse_config_file(path) -> dict:
    """Flat key=value lines; '#' starts a comment; keys match the
    experiment-config field names (plus 'pair' as a d1,d2 shorthand)."""
    updates = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (tok.strip() for tok in line.split("=", 1))
        updates.update(_coerce(key, value, where=f"{path}:{lineno}"))
    return updates


def _coerce(key: str, value: str, where: str) -> dict:
    if key == "pair":
        d1, d2 = (int(tok) for tok in value.split(","))
        return {"d1": d1, "d2": d2}
    if key == "rho_list":
        return {"rho_list": _parse_rho_arg(value)}
    if key in ("d1", "d2", "levels", "seed", "epochs"):
        return {key: int(value)}
    if key in ("epsilon", "rho", "reg_lambda"):
        return {key: float(value)}
    if key in ("data_dir", "out_dir"):
        return {key: value}
    raise ValueError(f"{where}: unknown config key {key!r}")


def _resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        cfg = replace(cfg, **_parse_config_file(args.config))
    updates = {}
    if args.data_dir is not None:
        updates["data_dir"] = args.data_dir
    if args.pair is not None:
        d1, d2 = (int(tok) for tok in args.pair.split(","))
        updates.update(d1=d1, d2=d2)
    if args.epsilon is not None:
        updates["epsilon"] = args.epsilon
    if args.rho is not None:
        rhos = _parse_rho_arg(args.rho)
        updates["rho"] = rhos[0]
        if len(rhos) > 1 or args.command == "sweep":
            updates["rho_list"] = rhos
    if args.levels is not None:
        updates["levels"] = args.levels
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["out_dir"] = args.out
    if getattr(args, "reg_lambda", None) is not None:
        updates["reg_lambda"] = args.reg_lambda
    if getattr(args, "epochs", None) is not None:
        updates["epochs"] = args.epochs
    return replace(cfg, **updates)


def _print_config(cfg: ExperimentConfig):
    pairs = [f"{f.name}={getattr(cfg, f.name)!r}" for f in fields(cfg)]
    print("config: " + " ".join(pairs))


def _cmd_table1(cfg: ExperimentConfig) -> int:
    result = experiments.run_table1(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "table1.csv"
    result.to_csv(csv_path)
    print(result.format_text())
    experiments.write_manifest(
        out, "table1", cfg, {"csv": str(csv_path), "accuracy": result.accuracy}
    )
    return EXIT_OK


def _cmd_sweep(cfg: ExperimentConfig) -> int:
    rows = experiments.run_rho_sweep(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "rho_sweep.csv"
    experiments.write_sweep_csv(rows, csv_path)
    for r in rows:
        print(
            f"rho={r.rho:<6g} K={r.k:<5d} clean={100 * r.clean:6.2f}% "
            f"semi={100 * r.semi_white:6.2f}% white={100 * r.white:6.2f}%"
        )
    experiments.write_manifest(out, "sweep", cfg, {"csv": str(csv_path)})
    return EXIT_OK


def _cmd_triptych(cfg: ExperimentConfig, index: int | None) -> int:
    result = experiments.emit_triptych(cfg, index=index)
    print(f"sample index {result.index}, true label {result.true_label}")
    for name in ("clean", "attacked", "defended"):
        print(f"{name}: {result.paths[name]} predicted {result.predictions[name]}")
    experiments.write_manifest(
        cfg.out_dir,
        "triptych",
        cfg,
        {"index": result.index, "predictions": result.predictions, "paths": result.paths},
    )
    return EXIT_OK


def _cmd_ensemble(cfg: ExperimentConfig, quick: bool) -> int:
    report = experiments.run_ensemble_suite(seed=cfg.seed, quick=quick, out_dir=cfg.out_dir)
    print(report.format_text())
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_train(cfg: ExperimentConfig, use_fe: bool) -> int:
    pair = experiments.load_mnist_pair(cfg)
    tc = cfg.train_config()
    if use_fe:
        fe = experiments.build_frontend(pair, cfg.rho, cfg.levels)
        model = train(
            experiments.featurize(fe, pair.train_x), pair.train_y, pair.d1, pair.d2, tc
        )
        model.meta["front_end"] = {"rho": cfg.rho, "levels": cfg.levels}
        acc = evaluate(
            model, experiments.featurize(fe, pair.test_x), pair.test_y
        ).accuracy
    else:
        model = train(pair.train_x, pair.train_y, pair.d1, pair.d2, tc)
        acc = evaluate(model, pair.test_x, pair.test_y).accuracy
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / "model.json"
    save_model(model, model_path)
    print(f"test accuracy {100 * acc:.2f}%  model: {model_path}")
    experiments.write_manifest(
        out, "train", cfg, {"model": str(model_path), "accuracy": acc, "front_end": use_fe}
    )
    return EXIT_OK


def _cmd_attack(cfg: ExperimentConfig, model_path: str, kind: str) -> int:
    model = load_model(model_path)
    pair = experiments.load_mnist_pair(
        replace(cfg, d1=model.d1, d2=model.d2)
    )
    x, y = pair.test_x, pair.test_y
    fe_meta = model.meta.get("front_end")
    if fe_meta is None:
        if kind != "baseline":
            print("model has no front end; projection equals identity", file=sys.stderr)
        e = cfg.epsilon * np.sign(model.w)[None, :]
        xadv = x + experiments._directed_batch(e, y, model.d1, model.d2)
        acc = evaluate(model, xadv, y).accuracy
        mean_delta = cfg.epsilon * float(np.abs(model.w).sum())
    else:
        fe = experiments.build_frontend(pair, fe_meta["rho"], fe_meta["levels"])
        if kind == "white":
            p = experiments._batched_proj(fe, model.w, x)
            e = cfg.epsilon * np.sign(p)
            mean_delta = cfg.epsilon * float(np.abs(p).sum(-1).mean())
        else:
            p = experiments._batched_proj(fe, model.w, x)
            e = cfg.epsilon * np.sign(model.w)[None, :]
            mean_delta = cfg.epsilon * float(
                np.abs(np.einsum("n,bn->b", np.sign(model.w), p)).mean()
            )
        xadv = x + experiments._directed_batch(e, y, model.d1, model.d2)
        acc = evaluate(model, experiments.featurize(fe, xadv), y).accuracy
    print(f"{kind} attack eps={cfg.epsilon}: accuracy {100 * acc:.2f}%, "
          f"mean distortion {mean_delta:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsefront",
        description="Sparsifying front-end defense: experiments and checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--data-dir", help="directory holding the IDX files")
        p.add_argument("--pair", help="digit pair, e.g. 3,7")
        p.add_argument("--epsilon", type=float, help="attack budget on [-1,1] pixels")
        p.add_argument("--rho", help="sparsity fraction(s), e.g. 0.02 or 0.01,0.02")
        p.add_argument("--levels", type=int, help="wavelet decomposition levels")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--reg-lambda", type=float, dest="reg_lambda",
                       help="SVM regularization")
        p.add_argument("--epochs", type=int, help="SVM training epochs")

    common(sub.add_parser("table1", help="accuracy grid at one rho"))
    common(sub.add_parser("sweep", help="accuracy versus rho"))
    p_tri = sub.add_parser("triptych", help="clean/attacked/defended graymaps")
    common(p_tri)
    p_tri.add_argument("--index", type=int, help="test-sample index (default: auto)")
    p_ens = sub.add_parser("ensemble", help="Monte-Carlo verification suite")
    common(p_ens)
    p_ens.add_argument("--quick", action="store_true", help="reduced trial counts")
    p_train = sub.add_parser("train", help="train and save a model")
    common(p_train)
    p_train.add_argument("--front-end", action="store_true",
                         help="train behind the sparsifying front end")
    p_att = sub.add_parser("attack", help="attack a saved model")
    common(p_att)
    p_att.add_argument("--model", required=True, help="model JSON path")
    p_att.add_argument("--kind", default="semi_white",
                       choices=["baseline", "semi_white", "white"])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        _print_config(cfg)
        if args.command == "table1":
            return _cmd_table1(cfg)
        if args.command == "sweep":
            return _cmd_sweep(cfg)
        if args.command == "triptych":
            return _cmd_triptych(cfg, args.index)
        if args.command == "ensemble":
            return _cmd_ensemble(cfg, args.quick)
        if args.command == "train":
            return _cmd_train(cfg, args.front_end)
        if args.command == "attack":
            return _cmd_attack(cfg, args.model, args.kind)
        raise ValueError(f"unknown command {args.command!r}")
    except (DataError, OSError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
