"""Experiment orchestration: accuracy grid on an MNIST digit pair, the
sparsity sweep, image triptychs, and the ensemble verification suite.

The defended pipeline classifies the front end's sparse coefficient
vector directly: score = w . sparse_k(analyze(x)) + b, with w trained on
sparsified training coefficients.  Both attacks transform that deployed
weight vector through the closed forms of the attacks module (the
semi-white adversary applies sign(w) as a pixel pattern; the white
adversary projects w onto each sample's retained subspace first).
Perturbations are oriented by the true test label, which upper-bounds
the induced classification error.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import ensemble
from .attacks import directed_perturbation, attack_baseline
from .basis import Cdf97Basis
from .dataio import DataError, PairDataset, load_idx, make_pair_dataset
from .frontend import FrontEndConfig, apply_front_end, sparse_k
from .svm import LinearModel, TrainConfig, evaluate, train

__all__ = [
    "ExperimentConfig",
    "Table1Result",
    "SweepRow",
    "TriptychResult",
    "EnsembleSuiteReport",
    "load_mnist_pair",
    "build_frontend",
    "featurize",
    "run_table1",
    "run_rho_sweep",
    "emit_triptych",
    "run_ensemble_suite",
    "write_pgm",
    "write_manifest",
]

IMAGE_BASENAMES = ("train-images-idx3-ubyte", "t10k-images-idx3-ubyte")
LABEL_BASENAMES = ("train-labels-idx1-ubyte", "t10k-labels-idx1-ubyte")


@dataclass(frozen=True)
class ExperimentConfig:
    d1: int = 3
    d2: int = 7
    epsilon: float = 0.25
    rho: float = 0.02
    rho_list: tuple[float, ...] = (0.01, 0.02, 0.03, 0.05, 0.10, 0.20, 0.50)
    levels: int = 5
    seed: int = 0
    reg_lambda: float = 1e-4
    epochs: int = 50
    data_dir: str = "data"
    out_dir: str = "out"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.d1 == self.d2:
            raise ValueError("digit pair must be distinct")
        for r in (self.rho, *self.rho_list):
            if not 0 < r <= 1:
                raise ValueError(f"rho={r} outside (0, 1]")

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            reg_lambda=self.reg_lambda, epochs=self.epochs, seed=self.seed
        )


def _find_file(data_dir: Path, basename: str) -> Path:
    for name in (basename + ".gz", basename):
        p = data_dir / name
        if p.exists():
            return p
    raise DataError(f"missing {basename}[.gz] under {data_dir}")


def load_mnist_pair(cfg: ExperimentConfig) -> PairDataset:
    """Load both source IDX splits from cfg.data_dir and build the pooled,
    re-split binary task for (d1, d2)."""
    d = Path(cfg.data_dir)
    raw_train = load_idx(_find_file(d, IMAGE_BASENAMES[0]), _find_file(d, LABEL_BASENAMES[0]))
    raw_test = load_idx(_find_file(d, IMAGE_BASENAMES[1]), _find_file(d, LABEL_BASENAMES[1]))
    return make_pair_dataset(raw_train, raw_test, cfg.d1, cfg.d2, seed=cfg.seed)


def build_frontend(pair: PairDataset, rho: float, levels: int) -> FrontEndConfig:
    basis = Cdf97Basis((pair.rows, pair.cols), levels=levels)
    return FrontEndConfig.from_rho(basis, rho)


def featurize(cfg: FrontEndConfig, x: np.ndarray) -> np.ndarray:
    """Defended pipeline's feature map: per-sample sparsified analysis
    coefficients."""
    return sparse_k(cfg.basis.analyze(np.asarray(x, dtype=float)), cfg.K)


def _batched_proj(cfg: FrontEndConfig, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """proj(w, x_i) for every row x_i: mask w's analysis coefficients by
    each sample's retained support, then synthesize."""
    cw = cfg.basis.analyze(np.asarray(w, dtype=float))
    cx = cfg.basis.analyze(np.asarray(x, dtype=float))
    masks = sparse_k(cx, cfg.K) != 0.0
    return cfg.basis.synthesize(np.where(masks, cw[None, :], 0.0))


def _directed_batch(e: np.ndarray, y: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """Orient perturbations (one row each, or a single shared row) against
    the true labels."""
    signs = np.where(np.asarray(y) == d1, 1.0, -1.0)[:, None]
    return signs * e


@dataclass(frozen=True)
class Table1Result:
    d1: int
    d2: int
    epsilon: float
    rho: float
    k: int
    # accuracy[attack][column], attack in none/semi_white/white,
    # column in no_fe/fe
    accuracy: dict
    runtime_sec: float

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["attack", "no_front_end", "front_end"])
            for attack in ("none", "semi_white", "white"):
                row = self.accuracy[attack]
                writer.writerow([attack, repr(row["no_fe"]), repr(row["fe"])])

    def format_text(self) -> str:
        lines = [
            f"digits {self.d1} vs {self.d2}, eps={self.epsilon}, rho={self.rho} (K={self.k})",
            f"{'attack':<12}{'no front end':>14}{'front end':>12}",
        ]
        for attack in ("none", "semi_white", "white"):
            row = self.accuracy[attack]
            lines.append(
                f"{attack:<12}{100 * row['no_fe']:>13.2f}%{100 * row['fe']:>11.2f}%"
            )
        lines.append(f"runtime: {self.runtime_sec:.1f}s")
        return "\n".join(lines)


def _attacked_accuracy_no_fe(
    model: LinearModel, x: np.ndarray, y: np.ndarray, epsilon: float
) -> float:
    e = attack_baseline(model.w, epsilon).e
    xadv = x + _directed_batch(e[None, :], y, model.d1, model.d2)
    return evaluate(model, xadv, y).accuracy


def _attacked_accuracy_fe(
    cfg: FrontEndConfig,
    model: LinearModel,
    x: np.ndarray,
    y: np.ndarray,
    epsilon: float,
    white: bool,
) -> float:
    if white:
        p = _batched_proj(cfg, model.w, x)
        e = epsilon * np.sign(p)
    else:
        e = epsilon * np.sign(model.w)[None, :]
    xadv = x + _directed_batch(e, y, model.d1, model.d2)
    return evaluate(model, featurize(cfg, xadv), y).accuracy


def run_table1(cfg: ExperimentConfig, pair: PairDataset | None = None) -> Table1Result:
    """Accuracy grid {no attack, semi-white, white} x {no front end,
    front end at cfg.rho}.  Without a front end the white-box attack
    coincides with the semi-white one (the projection is the identity),
    so that column repeats."""
    t0 = time.perf_counter()
    if pair is None:
        pair = load_mnist_pair(cfg)
    fe = build_frontend(pair, cfg.rho, cfg.levels)
    tc = cfg.train_config()

    plain = train(pair.train_x, pair.train_y, pair.d1, pair.d2, tc)
    fe_model = train(featurize(fe, pair.train_x), pair.train_y, pair.d1, pair.d2, tc)

    x, y = pair.test_x, pair.test_y
    clean_no_fe = evaluate(plain, x, y).accuracy
    clean_fe = evaluate(fe_model, featurize(fe, x), y).accuracy
    attacked_no_fe = _attacked_accuracy_no_fe(plain, x, y, cfg.epsilon)
    semi_fe = _attacked_accuracy_fe(fe, fe_model, x, y, cfg.epsilon, white=False)
    white_fe = _attacked_accuracy_fe(fe, fe_model, x, y, cfg.epsilon, white=True)

    accuracy = {
        "none": {"no_fe": clean_no_fe, "fe": clean_fe},
        "semi_white": {"no_fe": attacked_no_fe, "fe": semi_fe},
        "white": {"no_fe": attacked_no_fe, "fe": white_fe},
    }
    return Table1Result(
        d1=pair.d1,
        d2=pair.d2,
        epsilon=cfg.epsilon,
        rho=cfg.rho,
        k=fe.K,
        accuracy=accuracy,
        runtime_sec=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class SweepRow:
    rho: float
    k: int
    clean: float
    semi_white: float
    white: float


def run_rho_sweep(cfg: ExperimentConfig, pair: PairDataset | None = None) -> list[SweepRow]:
    """Retrain behind the front end for each rho in cfg.rho_list and
    evaluate clean and attacked accuracies."""
    if not cfg.rho_list:
        raise ValueError("rho list is empty")
    if pair is None:
        pair = load_mnist_pair(cfg)
    tc = cfg.train_config()
    rows = []
    for rho in cfg.rho_list:
        fe = build_frontend(pair, rho, cfg.levels)
        fe_model = train(
            featurize(fe, pair.train_x), pair.train_y, pair.d1, pair.d2, tc
        )
        x, y = pair.test_x, pair.test_y
        rows.append(
            SweepRow(
                rho=rho,
                k=fe.K,
                clean=evaluate(fe_model, featurize(fe, x), y).accuracy,
                semi_white=_attacked_accuracy_fe(fe, fe_model, x, y, cfg.epsilon, False),
                white=_attacked_accuracy_fe(fe, fe_model, x, y, cfg.epsilon, True),
            )
        )
    return rows


def write_sweep_csv(rows: list[SweepRow], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho", "k", "clean", "semi_white", "white"])
        for r in rows:
            writer.writerow([repr(r.rho), r.k, repr(r.clean), repr(r.semi_white), repr(r.white)])


def write_pgm(path, image: np.ndarray, rows: int, cols: int):
    """Write one [-1, 1] image as a binary portable graymap (P5)."""
    v = np.asarray(image, dtype=float).reshape(rows, cols)
    pixels = np.clip(np.round((v + 1.0) * 127.5), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


@dataclass(frozen=True)
class TriptychResult:
    index: int
    true_label: int
    predictions: dict
    paths: dict


def emit_triptych(
    cfg: ExperimentConfig,
    index: int | None = None,
    pair: PairDataset | None = None,
) -> TriptychResult:
    """Write three graymaps for one test sample: clean, attacked with the
    undefended model's sign perturbation, and the front end's
    reconstruction of that same attacked image.

    Predictions come from the undefended model for the first two panels
    and from the defended pipeline for the third.  When no index is
    given, picks the first sample the attack flips on the undefended
    model while the defended pipeline still gets it right.
    """
    if pair is None:
        pair = load_mnist_pair(cfg)
    fe = build_frontend(pair, cfg.rho, cfg.levels)
    tc = cfg.train_config()
    plain = train(pair.train_x, pair.train_y, pair.d1, pair.d2, tc)
    fe_model = train(featurize(fe, pair.train_x), pair.train_y, pair.d1, pair.d2, tc)

    x, y = pair.test_x, pair.test_y
    e_plain = attack_baseline(plain.w, cfg.epsilon)
    if index is None:
        pred_clean = plain.predict(x)
        xadv_all = x + _directed_batch(e_plain.e[None, :], y, pair.d1, pair.d2)
        pred_adv = plain.predict(xadv_all)
        pred_def = fe_model.predict(featurize(fe, xadv_all))
        candidates = np.flatnonzero(
            (y == pair.d2) & (pred_clean == y) & (pred_adv != y) & (pred_def == y)
        )
        if candidates.size:
            index = int(candidates[0])
        else:
            index = int(np.flatnonzero(y == pair.d2)[0])
    if not 0 <= index < x.shape[0]:
        raise IndexError(f"sample index {index} out of range 0..{x.shape[0] - 1}")

    xi, yi = x[index], int(y[index])
    attacked = xi + directed_perturbation(e_plain, yi, pair.d1, pair.d2)
    defended = apply_front_end(fe, attacked)

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "clean": out / "clean.pgm",
        "attacked": out / "attacked.pgm",
        "defended": out / "defended.pgm",
    }
    write_pgm(paths["clean"], xi, pair.rows, pair.cols)
    write_pgm(paths["attacked"], attacked, pair.rows, pair.cols)
    write_pgm(paths["defended"], defended, pair.rows, pair.cols)
    predictions = {
        "clean": int(plain.predict(xi[None, :])[0]),
        "attacked": int(plain.predict(attacked[None, :])[0]),
        "defended": int(fe_model.predict(featurize(fe, attacked[None, :]))[0]),
    }
    return TriptychResult(
        index=index,
        true_label=yi,
        predictions=predictions,
        paths={k: str(v) for k, v in paths.items()},
    )


@dataclass(frozen=True)
class EnsembleSuiteReport:
    theorem1: ensemble.EnsembleStats
    theorem1_mu: float
    theorem1_ok: bool
    concentration: ensemble.ConcentrationCheck
    lemma1: list
    lemma2_random: ensemble.Lemma2Bulk
    lemma2_identity: ensemble.Lemma2Bulk
    clt: ensemble.CltCheck
    clt_identity: ensemble.CltCheck
    scaling_rows: list
    k_fit: ensemble.KScalingFit
    semiwhite_ratios_ok: bool

    @property
    def passed(self) -> bool:
        return (
            self.theorem1_ok
            and self.concentration.passed
            and all(c.passed for c in self.lemma1)
            and self.lemma2_random.passed
            and self.lemma2_identity.passed
            and self.lemma2_identity.tight_fraction == 1.0
            and self.clt.passed
            and self.clt_identity.passed
            and self.k_fit.passed
            and self.semiwhite_ratios_ok
        )

    def format_text(self) -> str:
        t1 = self.theorem1
        mu = self.theorem1_mu
        lines = [
            f"theorem1  mean(D_SW/K)={t1.mean_delta:.5f} vs mu={mu:.5f} "
            f"(3se={3 * t1.std_err:.5f}) {'ok' if self.theorem1_ok else 'FAIL'}",
            f"chebyshev freq={self.concentration.freq:.5f} <= "
            f"{self.concentration.chebyshev:.5f}+{self.concentration.freq_tol:.5f} "
            f"{'ok' if self.concentration.passed else 'FAIL'}",
        ]
        for c in self.lemma1:
            lines.append(
                f"lemma1 N={c.n} K={c.k} mean={c.mean_z:.4f} target={c.mean_target:.4f} "
                f"var={c.var_z:.4f} bound={c.var_bound:.4f} "
                f"{'ok' if c.passed else 'FAIL'}"
            )
        lines.append(
            f"lemma2 random max_excess={self.lemma2_random.max_excess:.2e} "
            f"{'ok' if self.lemma2_random.passed else 'FAIL'}"
        )
        lines.append(
            f"lemma2 identity tight={self.lemma2_identity.tight_fraction:.4f} "
            f"{'ok' if self.lemma2_identity.tight_fraction == 1.0 else 'FAIL'}"
        )
        for c, tag in ((self.clt, "random"), (self.clt_identity, "identity")):
            flag = "ok" if c.passed else "FAIL"
            hyp = "" if c.hypothesis_ok else " (hypothesis violated, not armed)"
            lines.append(
                f"clt {tag} N={c.n} ks={c.ks_stat:.4f} crit={c.ks_critical:.4f} {flag}{hyp}"
            )
        lines.append(
            f"white-vs-K fit N={self.k_fit.n} r2={self.k_fit.r2:.5f} "
            f"violations={self.k_fit.bound_violations} "
            f"{'ok' if self.k_fit.passed else 'FAIL'}"
        )
        for r in self.scaling_rows:
            lines.append(
                f"sweep N={r.n} K={r.k} mean_dw={r.mean_delta_w:.3f} "
                f"bound={r.mean_bound:.3f} sw_ratio={r.semiwhite_ratio:.3f} "
                f"l1_hyp={r.l1_hypothesis}"
            )
        lines.append("suite: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def run_ensemble_suite(seed: int = 0, quick: bool = False, out_dir=None) -> EnsembleSuiteReport:
    """Run every ensemble check at its default scale (reduced when quick)."""
    wm = ensemble.WeightModel()
    t1_trials = 2000 if quick else 10000
    l1_trials = 4000 if quick else 20000
    l2_trials = 20000 if quick else 100000
    clt_trials = 5000
    sweep_trials = 500 if quick else 2000

    stats = ensemble.simulate_semiwhite(
        256, 64, wm, basis_seed=seed, trials=t1_trials, keep_deltas=True
    )
    theorem1_ok = abs(stats.mean_delta - wm.mu) <= 3 * stats.std_err
    conc = ensemble.concentration_check(stats, wm, 64)
    lemma1 = [
        ensemble.check_lemma1(256, 32, wm, trials=l1_trials, seed=seed + 1),
        ensemble.check_lemma1(512, 64, wm, trials=l1_trials, seed=seed + 2),
    ]
    l2r = ensemble.lemma2_bulk(64, 16, trials=l2_trials, seed=seed + 3)
    l2i = ensemble.lemma2_bulk(64, 16, trials=l2_trials, seed=seed + 4, basis_kind="identity")
    clt = ensemble.check_clt(1024, wm, basis_seed=seed + 5, trials=clt_trials)
    clt_id = ensemble.check_clt(
        1024, wm, basis_seed=seed + 6, trials=clt_trials, basis_kind="identity"
    )
    rows = ensemble.sweep_white_scaling(
        [64, 128, 256, 512], rho=0.125, wm=wm, trials=sweep_trials, seed=seed + 7
    )
    ratios_ok = all(0.9 <= r.semiwhite_ratio <= 1.1 for r in rows)
    fit = ensemble.fit_white_vs_k(
        256, [8, 16, 32, 64], wm, trials=sweep_trials, seed=seed + 8
    )
    report = EnsembleSuiteReport(
        theorem1=ensemble.EnsembleStats(
            trials=stats.trials, mean_delta=stats.mean_delta, var_delta=stats.var_delta
        ),
        theorem1_mu=wm.mu,
        theorem1_ok=theorem1_ok,
        concentration=conc,
        lemma1=lemma1,
        lemma2_random=l2r,
        lemma2_identity=l2i,
        clt=clt,
        clt_identity=clt_id,
        scaling_rows=rows,
        k_fit=fit,
        semiwhite_ratios_ok=ratios_ok,
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        ensemble.write_scaling_csv(rows, out / "white_scaling.csv")
        (out / "ensemble_report.txt").write_text(report.format_text() + "\n")
    return report


def write_manifest(out_dir, command: str, cfg: ExperimentConfig, outputs: dict):
    """JSON record of what ran: command, full config, outputs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"command": command, "config": asdict(cfg), "outputs": outputs}
    with open(out / "manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
