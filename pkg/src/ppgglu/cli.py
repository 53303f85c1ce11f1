"""``ppgglu`` command line.

Exit codes: 0 success, 2 input/config error, 3 runtime/numeric error.
"""
import argparse
import csv
import logging
import sys
import traceback
from pathlib import Path

import numpy as np

from . import prng
from .config import RunConfig
from .dataset import label_histogram, load_dataset, split, synth_generate, write_dataset
from .errors import InputError, InvalidConfig, MalformedCsv, NumericError, PpgGluError
from .evaluation import ceg_csv, ceg_summary, ceg_svg, compute_metrics, folds_text, metrics_csv, render_report
from .model import build, save
from .preprocess import augment_gaussian, preprocess
from .training import cross_validate, stack, train

log = logging.getLogger("ppgglu")

HISTOGRAM_EDGES = (98, 138)


def _say(args, *lines):
    if not args.quiet:
        for line in lines:
            print(line)


def _config(args):
    overrides = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidConfig(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    for key in ("seed", "out", "dataset", "k", "parallel_folds", "synth_count"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = str(value)
    return RunConfig.from_sources(args.config, overrides)


def _out_dir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(cfg):
    if not cfg.dataset:
        raise InvalidConfig("no dataset given (pass a DATASET directory or set 'dataset = DIR' in the config)")
    return load_dataset(cfg.dataset)


def _write(path, data):
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": "\n"})) as fh:
        fh.write(data)


# ---------------------------------------------------------------------------
# commands

def cmd_preprocess(args):
    cfg = _config(args)
    ds = _load(cfg)
    pre = cfg.preprocess()
    windows = []
    for r in ds.records:
        try:
            windows.append(preprocess(r, pre))
        except InputError as exc:
            raise type(exc)(f"record {r.record_id}: {exc}") from None
    out = _out_dir(cfg)
    with open(out / "windows.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record_id", "glucose_mgdl"] + [f"v{i:03d}" for i in range(pre.window_len)])
        for win in windows:
            w.writerow([win.record_id, repr(win.glucose_mgdl)] + [repr(float(v)) for v in win.values])
    hist = label_histogram(ds, HISTOGRAM_EDGES)
    _say(args, f"{len(windows)} windows -> {out / 'windows.csv'}", "glucose label histogram (mg/dL):",
         *(f"  {label:>10}: {count}" for label, count in hist))
    return 0


def cmd_train(args):
    cfg = _config(args)
    ds = _load(cfg)
    pre = cfg.preprocess()
    windows = [preprocess(r, pre) for r in ds.records]
    idx = split(len(windows), cfg.fractions(), prng.derive_seed(cfg.seed, prng.STREAM_SPLIT))
    tcfg = cfg.train()
    train_w = [windows[i] for i in idx.train]
    if tcfg.aug_copies:
        train_w = augment_gaussian(train_w, tcfg.aug_copies, tcfg.aug_sigmas,
                                   prng.derive_seed(cfg.seed, prng.STREAM_AUGMENT))
    val_w = [windows[i] for i in idx.val]
    test_w = [windows[i] for i in idx.test]
    model, history = train(build(cfg.model()), train_w, val_w, tcfg)
    Xt, yt = stack(test_w)
    pred = model.predict(Xt)
    metrics = compute_metrics(yt, pred)
    ceg = ceg_summary(yt, pred)

    out = _out_dir(cfg)
    save(model, out / "model.bin")
    history.write_csv(out / "history.csv")
    _write(out / "metrics.csv", metrics_csv(metrics))
    _write(out / "ceg.csv", ceg_csv(ceg))
    _write(out / "ceg.svg", ceg_svg(ceg))
    with open(out / "predictions.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record_id", "ref_mgdl", "pred_mgdl"])
        for win, p in zip(test_w, pred):
            w.writerow([win.record_id, repr(win.glucose_mgdl), repr(float(p))])
    report = render_report(metrics, ceg, None, "text")
    _write(out / "report.txt", report)
    _say(args, f"trained {len(history)} epochs (best {history.best_epoch + 1}); "
               f"train/val/test = {len(train_w)}/{len(val_w)}/{len(test_w)}",
         report.decode("utf-8").rstrip())
    return 0


def cmd_crossval(args):
    cfg = _config(args)
    ds = _load(cfg)
    out = _out_dir(cfg)
    results = cross_validate(ds, cfg.model(), cfg.train(), cfg.k, cfg.preprocess(), cfg.seed,
                             out_dir=out, parallel=cfg.parallel_folds)
    table = folds_text(results)
    _write(out / "folds.txt", table)
    _say(args, table.rstrip())
    return 0


def _read_predictions(path):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise MalformedCsv(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"ref_mgdl", "pred_mgdl"} <= set(reader.fieldnames):
            raise MalformedCsv(f"{path}: header must contain ref_mgdl,pred_mgdl")
        refs, preds = [], []
        for rowno, row in enumerate(reader, 2):
            try:
                refs.append(float(row["ref_mgdl"]))
                preds.append(float(row["pred_mgdl"]))
            except (TypeError, ValueError):
                raise MalformedCsv(f"{path}: row {rowno}: ref_mgdl and pred_mgdl must be numbers") from None
    if not refs:
        raise MalformedCsv(f"{path}: no data rows")
    return np.array(refs), np.array(preds)


def cmd_ceg(args):
    cfg = _config(args)
    refs, preds = _read_predictions(args.predictions)
    s = ceg_summary(refs, preds)
    out = _out_dir(cfg)
    _write(out / "ceg.csv", ceg_csv(s))
    _write(out / "ceg.svg", ceg_svg(s))
    _say(args, render_report(None, s, None, "text").decode("utf-8").rstrip())
    return 0


def cmd_synth(args):
    cfg = _config(args)
    v = cfg.values
    try:
        count, fs, dur = int(v["synth_count"]), float(v["synth_fs"]), float(v["synth_duration_s"])
    except ValueError:
        raise InvalidConfig("synth_count, synth_fs and synth_duration_s must be numbers") from None
    ds = synth_generate(count, cfg.seed, fs, dur)
    out = Path(cfg.out)
    write_dataset(ds, out)
    _say(args, f"wrote {count} synthetic records to {out}")
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    # SUPPRESS keeps a subcommand's unset flag from clobbering one given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--seed", type=int, help="global seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--quiet", action="store_true", help="print nothing on success")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")

    p = argparse.ArgumentParser(prog="ppgglu", description="PPG glucose estimation pipeline",
                                parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("preprocess", parents=[common], help="filter/resample/normalize a dataset into windows.csv")
    sp.add_argument("dataset", nargs="?", help="dataset directory")
    sp.set_defaults(func=cmd_preprocess)

    sp = sub.add_parser("train", parents=[common], help="split, train, evaluate on the test set")
    sp.add_argument("dataset", nargs="?")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("crossval", parents=[common], help="k-fold cross-validation")
    sp.add_argument("dataset", nargs="?")
    sp.add_argument("--k", type=int, help="number of folds (default 10)")
    sp.add_argument("--parallel-folds", dest="parallel_folds", type=int, metavar="N")
    sp.set_defaults(func=cmd_crossval)

    sp = sub.add_parser("ceg", parents=[common], help="Clarke Error Grid of a ref_mgdl,pred_mgdl csv")
    sp.add_argument("predictions")
    sp.set_defaults(func=cmd_ceg)

    sp = sub.add_parser("synth", parents=[common], help="write a synthetic dataset")
    sp.add_argument("--count", dest="synth_count", type=int)
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("config", None), ("seed", None), ("out", None), ("quiet", False), ("set", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PpgGluError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
