"""Mini-batch training with early stopping, and k-fold cross-validation."""
import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from math import floor
from pathlib import Path

import numpy as np

from . import prng
from .dataset import kfold, shuffle
from .errors import EmptySplit, FoldFailure, InvalidConfig, NonFiniteLoss, PpgGluError
from .evaluation import compute_metrics_basic
from .model import ModelConfig, build, save
from .optim import Adam
from .preprocess import PreprocessConfig, augment_gaussian, preprocess
from .tensor import Tape, Tensor, mse_loss

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs_max: int = 500
    batch_size: int = 16
    patience: int = 50
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    aug_copies: int = 3
    aug_sigmas: tuple = (0.01, 0.03, 0.05)
    # start the linear head at the mean training label instead of 0 mg/dL
    warm_start_bias: bool = True
    seed: int = 0

    def validate(self):
        if self.epochs_max < 1 or self.batch_size < 2 or self.patience < 1:
            raise InvalidConfig("need epochs_max >= 1, batch_size >= 2, patience >= 1")
        if self.lr < 0:
            raise InvalidConfig("lr must be non-negative")
        if self.aug_copies != len(self.aug_sigmas):
            raise InvalidConfig(f"aug_copies={self.aug_copies} but {len(self.aug_sigmas)} aug_sigmas")
        return self


@dataclass
class TrainHistory:
    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False

    def __len__(self):
        return len(self.train_mse)

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_mse", "val_mse"])
            for i, (tr, va) in enumerate(zip(self.train_mse, self.val_mse), 1):
                w.writerow([i, repr(tr), repr(va)])


@dataclass(frozen=True)
class FoldResult:
    fold_index: int
    mae: float
    rmse: float
    model_path: str = ""
    refs: tuple = ()
    preds: tuple = ()
    record_ids: tuple = ()


def stack(windows):
    X = np.stack([w.values for w in windows])
    y = np.array([w.glucose_mgdl for w in windows], dtype=np.float64)
    return X, y


def evaluate_mse(model, X, y):
    pred = model.predict(X)
    return float(np.mean((pred - y) ** 2))


def _batches(n, batch_size, seed, epoch):
    perm = shuffle(n, prng.derive_seed(seed, prng.STREAM_BATCH, epoch))
    chunks = [perm[i:i + batch_size] for i in range(0, n, batch_size)]
    if len(chunks) > 1 and len(chunks[-1]) < 2:
        # batch norm needs two samples; fold a lone leftover into the previous batch
        last = chunks.pop()
        chunks[-1] = chunks[-1] + last
    return chunks


class EarlyStopping:
    """Tracks the best validation loss; ``update`` returns True when training should stop."""

    def __init__(self, patience):
        self.patience = patience
        self.best = np.inf
        self.best_epoch = -1
        self.bad_epochs = 0

    def update(self, epoch, loss):
        if loss < self.best:
            self.best, self.best_epoch, self.bad_epochs = loss, epoch, 0
            return False
        self.bad_epochs += 1
        return self.bad_epochs >= self.patience


def train(model, train_windows, val_windows, cfg=TrainConfig(), stop_below=None):
    """Fit ``model`` in place and return it with its history.

    ``stop_below`` ends training as soon as an epoch's mean training MSE is at
    or under that value (used for capacity checks).
    """
    cfg.validate()
    if not train_windows or not val_windows:
        raise EmptySplit(f"train ({len(train_windows)}) and validation ({len(val_windows)}) must be non-empty")
    X, y = stack(train_windows)
    Xv, yv = stack(val_windows)
    if len(X) < 2:
        raise EmptySplit("training needs at least two windows (batch norm)")
    if cfg.warm_start_bias:
        model.params["head.b"].data[:] = y.mean()
    opt = Adam(model.parameters(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    history = TrainHistory()
    stopper = EarlyStopping(cfg.patience)
    best_state = model.state()
    for epoch in range(cfg.epochs_max):
        total = 0.0
        for bi, idx in enumerate(_batches(len(X), cfg.batch_size, cfg.seed, epoch)):
            with Tape() as tape:
                loss = mse_loss(model.forward(X[idx], "train"), Tensor(y[idx]))
            value = loss.item()
            if not np.isfinite(value):
                raise NonFiniteLoss(f"non-finite training loss at epoch {epoch + 1}, batch {bi + 1}",
                                    epoch=epoch + 1, batch=bi + 1)
            tape.backward(loss)
            opt.step()
            total += value * len(idx)
        history.train_mse.append(total / len(X))
        val = evaluate_mse(model, Xv, yv)
        if not np.isfinite(val):
            raise NonFiniteLoss(f"non-finite validation loss at epoch {epoch + 1}", epoch=epoch + 1)
        history.val_mse.append(val)
        stop = stopper.update(epoch, val)
        if stopper.best_epoch == epoch:
            best_state = model.state()
        log.debug("epoch %d train_mse %.4f val_mse %.4f", epoch + 1, history.train_mse[-1], val)
        if stop:
            history.stopped_early = True
            break
        if stop_below is not None and history.train_mse[-1] <= stop_below:
            break
    history.best_epoch = stopper.best_epoch
    model.load_state(best_state)
    return model, history


# ---------------------------------------------------------------------------
# cross-validation

def _fold(i, windows, plan, model_cfg, train_cfg, seed, out_dir):
    pool = plan.pool(i)
    order = shuffle(len(pool), prng.derive_seed(seed, prng.STREAM_SPLIT, i + 1))
    pool = [pool[j] for j in order]
    n_train = floor(0.85 * len(pool) + 1e-9)
    train_w = [windows[j] for j in pool[:n_train]]
    val_w = [windows[j] for j in pool[n_train:]]
    test_w = [windows[j] for j in plan.test(i)]
    if train_cfg.aug_copies:
        train_w = augment_gaussian(train_w, train_cfg.aug_copies, train_cfg.aug_sigmas,
                                   prng.derive_seed(seed, prng.STREAM_AUGMENT, i))
    model = build(replace(model_cfg, seed=model_cfg.seed + i))
    model, history = train(model, train_w, val_w, replace(train_cfg, seed=train_cfg.seed + i))
    Xt, yt = stack(test_w)
    pred = model.predict(Xt)
    m = compute_metrics_basic(yt, pred)
    path = ""
    if out_dir is not None:
        fold_dir = Path(out_dir) / f"fold{i + 1:02d}"
        fold_dir.mkdir(parents=True, exist_ok=True)
        path = str(fold_dir / "model.bin")
        save(model, path)
        history.write_csv(fold_dir / "history.csv")
    return FoldResult(i + 1, m["mae"], m["rmse"], path, tuple(yt), tuple(pred),
                      tuple(w.record_id for w in test_w))


def _fold_guarded(args):
    i = args[0]
    try:
        return _fold(*args)
    except PpgGluError as exc:
        raise FoldFailure(i + 1, exc) from exc


def cross_validate(dataset, model_cfg=ModelConfig(), train_cfg=TrainConfig(), k=10,
                   pre_cfg=PreprocessConfig(), seed=0, out_dir=None, parallel=1):
    """Train and test one fresh model per fold; results ordered by fold."""
    windows = [preprocess(r, pre_cfg) for r in dataset.records]
    plan = kfold(len(windows), k, prng.derive_seed(seed, prng.STREAM_SPLIT))
    jobs = [(i, windows, plan, model_cfg, train_cfg, seed, out_dir) for i in range(k)]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as ex:
            results = list(ex.map(_fold_guarded, jobs))
    else:
        results = [_fold_guarded(j) for j in jobs]
    if out_dir is not None:
        write_folds_csv(results, Path(out_dir) / "folds.csv")
    return results


def write_folds_csv(results, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fold", "mae", "rmse"])
        for r in results:
            w.writerow([r.fold_index, repr(r.mae), repr(r.rmse)])


def read_folds_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [FoldResult(int(r["fold"]), float(r["mae"]), float(r["rmse"])) for r in rows]
