"""Command-line entry point: ``jetqcnn <command> ...``.

Exit codes: 0 success, 1 usage/config/input error, 2 empty result.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dea, learn, toydata
from .circuits import CircuitSpec, build_qcnn, parse_conv, parse_encoding
from .config import ExperimentConfig, load_config
from .errors import ConfigurationError, ParseError
from .jetprep import images as jimages
from .jetprep import io as jio
from .jetprep import pca as jpca
from .losses import parse_loss

log = logging.getLogger("jetqcnn")


class EmptyResult(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config(args) -> ExperimentConfig:
    return load_config(args.config) if args.config else ExperimentConfig()


def _pick(flag, cfg: ExperimentConfig, key: str, default=None):
    if flag is not None:
        return flag
    return cfg.get(key, default)


def _write(path: Path, text: str) -> None:
    path.write_text(text)


# ----------------------------------------------------------------- commands

def cmd_prep(args) -> int:
    cfg = _config(args)
    src = _pick(args.input, cfg, "data.jets")
    if src is None:
        raise ConfigurationError("no input jets file (positional argument or data.jets)")
    with open(src) as fh:
        jets, skipped = jio.parse_jets(fh)
    imgs, labels, report = jimages.preprocess(jets, args.mb, args.eb, args.size, args.size,
                                              jobs=args.jobs)
    summary = f"{report.summary()}, jets with < 3 constituents: {skipped}"
    print(summary)
    if report.kept == 0:
        raise EmptyResult("no images produced")
    out = _out_dir(args)
    with open(out / "images.jimg", "wb") as fh:
        jio.write_images(fh, imgs, labels)
    _write(out / "prep_report.txt", summary + "\n" + "".join(m + "\n" for m in report.messages))
    for i in range(min(args.pgm, len(imgs))):
        jimages.write_pgm(out / f"image_{i:04d}.pgm", imgs[i])
    return 0


def cmd_pca(args) -> int:
    cfg = _config(args)
    src = _pick(args.input, cfg, "data.images")
    if src is None:
        raise ConfigurationError("no image container (positional argument or data.images)")
    with open(src, "rb") as fh:
        imgs, labels = jio.read_images(fh)
    if len(imgs) == 0:
        raise EmptyResult("image container is empty")
    seed = _pick(args.seed, cfg, "data.split_seed", 0)
    fraction = _pick(args.fraction, cfg, "data.fraction", 0.8)
    flat = imgs.reshape(len(imgs), -1)
    if not 1 <= args.components <= flat.shape[1]:
        raise ConfigurationError(
            f"--components must be in [1, {flat.shape[1]}] for {imgs.shape[1]}x{imgs.shape[2]} images")
    tr, te = jpca.split_train_test(labels, fraction, seed)
    model = jpca.fit_feature_range(jpca.pca_fit(flat[tr], args.components), flat[tr])
    Ftr, _ = jpca.features(model, flat[tr])
    Fte, clamped = jpca.features(model, flat[te]) if te.size else (np.zeros((0, args.components)), 0)
    out = _out_dir(args)
    _write(out / "pca_model.json", model.to_json())
    with open(out / "features.csv", "w", newline="") as fh:
        jio.write_features(fh, {"train": (Ftr, labels[tr]), "test": (Fte, labels[te])})
    print(f"PCA fitted on {tr.size} training images; {te.size} test images; "
          f"{clamped} test feature values clamped")
    return 0


def _load_dataset(path) -> learn.Dataset:
    with open(path) as fh:
        splits = jio.read_features(fh)
    if "train" not in splits:
        raise ConfigurationError(f"{path} has no training rows")
    Xtr, ytr = splits["train"]
    Xte, yte = splits.get("test", (np.zeros((0, Xtr.shape[1])), np.zeros(0, dtype=int)))
    return learn.Dataset(Xtr, ytr, Xte, yte)


def _descriptor(args, cfg: ExperimentConfig, kind: str | None) -> learn.ModelDescriptor:
    kind = kind or _pick(args.model, cfg, "model.kind", "qcnn")
    if kind not in ("qcnn", "cnn"):
        raise ConfigurationError(f"unknown model kind {kind!r}; allowed: qcnn, cnn")
    circuit_file = _pick(args.circuit_file, cfg, "model.circuit_file")
    if kind == "qcnn":
        conv = parse_conv(_pick(args.circuit, cfg, "model.circuit", "SO4")).value
        enc = parse_encoding(_pick(args.encoding, cfg, "model.encoding", "HEE1")).value
        text = None
        name = args.name
        if circuit_file:
            text = Path(circuit_file).read_text()
            CircuitSpec.from_text(text)
            name = name or Path(circuit_file).stem
        return learn.ModelDescriptor("qcnn", conv, enc, circuit_text=text, name=name)
    dense = _pick(args.dense, cfg, "model.dense", 2)
    filters = _pick(args.filters, cfg, "model.filters", 4)
    return learn.ModelDescriptor("cnn", dense=dense, filters=filters, name=args.name)


def _train_config(args, cfg: ExperimentConfig) -> learn.TrainConfig:
    return learn.TrainConfig(
        epochs=_pick(args.epochs, cfg, "train.epochs", 30),
        batch_size=_pick(args.batch, cfg, "train.batch", 32),
        learning_rate=_pick(args.lr, cfg, "train.lr", 0.001),
        seed=_pick(args.seed, cfg, "train.seed", 0),
        loss=parse_loss(_pick(args.loss, cfg, "train.loss", "mse")),
        runs=_pick(args.runs, cfg, "train.runs", 10),
    )


def _features_path(args, cfg):
    path = _pick(args.features, cfg, "data.features")
    if path is None:
        raise ConfigurationError("no features file (--features or data.features)")
    return path


def cmd_train(args, kind: str | None = None) -> int:
    cfg = _config(args)
    desc = _descriptor(args, cfg, kind)
    tcfg = _train_config(args, cfg)
    data = _load_dataset(_features_path(args, cfg))
    if tcfg.batch_size > len(data.y_train):
        raise ConfigurationError(f"batch size {tcfg.batch_size} exceeds {len(data.y_train)} training samples")
    rows = learn.run_grid([(desc, tcfg)], data, jobs=args.jobs, timed=args.timing)
    out = _out_dir(args)
    for r, runlog in enumerate(rows[0].logs):
        _write(out / f"run_{r:03d}.csv", runlog.to_csv())
        _write(out / f"run_{r:03d}.json", runlog.meta_json())
    _write(out / "grid.csv", learn.grid_csv(rows))
    row = rows[0]
    print(f"{row.circuit} {row.loss} {row.encoding} batch={row.batch} runs={row.runs}: "
          f"test accuracy {100 * row.mean_acc:.2f} +- {100 * row.stderr:.2f} %")
    return 0


def cmd_grid(args) -> int:
    cfg = _config(args)
    data = _load_dataset(_features_path(args, cfg))
    base = _train_config(args, cfg)
    cells = learn.table1_cells(base) if args.table == 1 else learn.table2_cells(base)
    if args.only_qcnn:
        cells = [c for c in cells if c[0].kind == "qcnn"]
    rows = learn.run_grid(cells, data, jobs=args.jobs, timed=args.timing)
    out = _out_dir(args)
    _write(out / "grid.csv", learn.grid_csv(rows))
    print(learn.grid_csv(rows), end="")
    return 0


def cmd_dea(args) -> int:
    cfg = _config(args)
    tol = _pick(args.tolerance, cfg, "dea.tolerance", dea.DEFAULT_TOL)
    if not tol > 0:
        raise ConfigurationError(f"tolerance must be positive, got {tol}")
    n_points = _pick(args.points, cfg, "dea.points", 5)
    if n_points < 1:
        raise ConfigurationError("need at least one scan point")
    seed = _pick(args.seed, cfg, "dea.seed", 0)
    circuit_file = _pick(args.circuit_file, cfg, "model.circuit_file")
    if circuit_file:
        spec = CircuitSpec.from_text(Path(circuit_file).read_text())
    else:
        if _pick(None, cfg, "model.kind", "qcnn") != "qcnn":
            raise ConfigurationError("DEA needs a QCNN model section")
        spec = build_qcnn(parse_conv(_pick(args.circuit, cfg, "model.circuit", "SU4")),
                          parse_encoding(_pick(args.encoding, cfg, "model.encoding", "HEE1")))
    points = dea.sample_points(spec, n_points, seed)
    report = dea.redundancy_scan(spec, points, tol)
    pruned = dea.prune(spec, report, points[0][0])
    out = _out_dir(args)
    _write(out / "dea_report.json", report.to_json())
    _write(out / "circuit.txt", spec.to_text())
    _write(out / "pruned_circuit.txt", pruned.to_text())
    print(f"{len(report.kept)} kept, {len(report.redundant_slots)} redundant, "
          f"rank {report.achieved_rank} / {report.state_space_dim}")
    return 0


def _unique_labels(paths: list[Path]) -> list[str]:
    labels = [p.stem for p in paths]
    if len(set(labels)) < len(labels):
        labels = [f"{p.parent.name}/{p.stem}" for p in paths]
    return labels


def cmd_compare(args) -> int:
    paths = [Path(p) for p in args.logs]
    if len(paths) < 2:
        raise ConfigurationError("compare needs at least two run logs")
    labels = _unique_labels(paths)
    series = []
    for p in paths:
        rows = learn.read_runlog_csv(p.read_text())
        series.append({int(r["epoch"]): r["test_acc"] for r in rows})
    lengths = {len(s) for s in series}
    if len(lengths) > 1:
        log.warning("run logs have different epoch counts %s; padding with blanks", sorted(lengths))
    epochs = sorted(set().union(*series))
    lines = [",".join(["epoch"] + labels)]
    for e in epochs:
        lines.append(",".join([str(e)] + [s.get(e, "") for s in series]))
    out = _out_dir(args)
    _write(out / "compare.csv", "\n".join(lines) + "\n")
    width = max(len(lb) for lb in labels + ["Circuit structure"])
    print(f"{'Circuit structure':<{width}}  params  Acc (%)")
    for lb, p, s in zip(labels, paths, series):
        meta = p.with_suffix(".json")
        n_params = "?"
        if meta.exists():
            n_params = str(json.loads(meta.read_text())["n_params"])
        last = s[max(s)]
        acc = f"{100 * float(last):.2f}" if last not in ("", "nan") else "nan"
        print(f"{lb:<{width}}  {n_params:>6}  {acc}")
    return 0


def cmd_synth(args) -> int:
    out = _out_dir(args)
    seed = args.seed or 0
    if args.what == "jets":
        jets = toydata.toy_jets(args.n, seed)
        _write(out / "jets.jsonl", "".join(jio.format_jet(j) + "\n" for j in jets))
    else:
        d = toydata.separable_blobs(args.n, args.separation, seed)
        with open(out / "features.csv", "w", newline="") as fh:
            jio.write_features(fh, {"train": (d.X_train, d.y_train), "test": (d.X_test, d.y_test)})
    return 0


# ------------------------------------------------------------------- parser

def _common(p):
    p.add_argument("--config", help="flat section.key = value config file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1, help="worker cap")


def _model_args(p):
    p.add_argument("--features")
    p.add_argument("--model", choices=["qcnn", "cnn"], default=None)
    p.add_argument("--circuit", help="SO4 or SU4")
    p.add_argument("--encoding", help="TPE, HEE1, HEE2 or CHE")
    p.add_argument("--circuit-file", help="circuit text file, e.g. a pruned circuit")
    p.add_argument("--dense", type=int)
    p.add_argument("--filters", type=int)
    p.add_argument("--name", help="label for the grid row")
    p.add_argument("--loss", help="hinge, mse or crossentropy")
    p.add_argument("--batch", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--runs", type=int)
    p.add_argument("--timing", action="store_true",
                   help="record real wall-clock seconds (logs are then not byte-reproducible)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jetqcnn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prep", help="jets (JSON lines) -> JIMG image container")
    _common(p)
    p.add_argument("input", nargs="?")
    p.add_argument("--size", type=int, default=jimages.IMAGE_SIZE)
    p.add_argument("--mb", type=float, default=1.0, help="jet mass after rescaling")
    p.add_argument("--eb", type=float, default=10.0, help="jet energy after boosting")
    p.add_argument("--pgm", type=int, default=0, help="dump the first N images as PGM")
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("pca", help="JIMG container -> PCA model + feature CSV")
    _common(p)
    p.add_argument("input", nargs="?")
    p.add_argument("--components", type=int, default=jpca.N_COMPONENTS)
    p.add_argument("--fraction", type=float, default=None)
    p.set_defaults(func=cmd_pca)

    for name, kind in (("train", None), ("train-qcnn", "qcnn"), ("train-cnn", "cnn")):
        p = sub.add_parser(name, help="train a model over seeded runs")
        _common(p)
        _model_args(p)
        p.set_defaults(func=lambda a, k=kind: cmd_train(a, k))

    p = sub.add_parser("grid", help="desk-scale Table 1 or Table 2 grid")
    _common(p)
    _model_args(p)
    p.add_argument("--table", type=int, choices=[1, 2], default=1)
    p.add_argument("--only-qcnn", action="store_true")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("dea", help="dimensional expressivity scan + pruned circuit")
    _common(p)
    p.add_argument("--circuit")
    p.add_argument("--encoding")
    p.add_argument("--circuit-file")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--points", type=int)
    p.set_defaults(func=cmd_dea)

    p = sub.add_parser("compare", help="merge run logs into one per-epoch table")
    _common(p)
    p.add_argument("logs", nargs="*")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="write synthetic jets or blob features")
    _common(p)
    p.add_argument("what", choices=["jets", "blobs"])
    p.add_argument("-n", type=int, default=2000)
    p.add_argument("--separation", type=float, default=6.0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except EmptyResult as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigurationError, ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
