"""Flat ``key = value`` run configuration.

Config files are UTF-8 text, one ``key = value`` per line, ``#`` starts a
comment. Lists are comma separated. Unknown keys are rejected. Every key and
its default is listed in :data:`DEFAULTS`.

All randomness comes from the single ``seed`` key; each consumer draws from
its own stream via :func:`ppgglu.prng.derive_seed` (split, init, augment,
batch order), so changing one stage does not perturb the others.
"""
from dataclasses import replace

from . import prng
from .errors import InvalidConfig
from .model import ModelConfig
from .preprocess import FilterSpec, PreprocessConfig
from .training import TrainConfig

DEFAULTS = {
    "dataset": "",
    "out": "ppgglu_out",
    "seed": "0",
    # preprocessing
    "low_hz": "0.5",
    "high_hz": "8.0",
    "filter_order": "4",
    "fs_out": "30",
    "window_len": "300",
    # split
    "train_frac": "0.70",
    "val_frac": "0.15",
    "test_frac": "0.15",
    "k": "10",
    "parallel_folds": "1",
    # model
    "cnn_a_kernel": "5",
    "cnn_a_filters": "32",
    "cnn_b_kernel": "11",
    "cnn_b_filters": "32",
    "gru_layers": "64,32",
    "branch_fc": "64,32,16",
    # training
    "epochs_max": "500",
    "batch_size": "16",
    "patience": "50",
    "lr": "0.001",
    "beta1": "0.9",
    "beta2": "0.999",
    "eps": "1e-8",
    "aug_copies": "3",
    "aug_sigmas": "0.01,0.03,0.05",
    "warm_start_bias": "true",
    # synthetic data
    "synth_count": "67",
    "synth_fs": "2175",
    "synth_duration_s": "10",
}


def parse_text(text, source="<config>"):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise InvalidConfig(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in DEFAULTS:
            raise InvalidConfig(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def load_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_text(fh.read(), str(path))
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from None


class RunConfig:
    """Merged view: defaults < config file < command-line overrides."""

    def __init__(self, values=None):
        merged = dict(DEFAULTS)
        for k, v in (values or {}).items():
            if k not in DEFAULTS:
                raise InvalidConfig(f"unknown key {k!r}")
            merged[k] = str(v)
        self.values = merged
        # parse eagerly so bad values fail before any work starts
        self.preprocess()
        self.model()
        self.train()
        self.fractions()
        self.k
        self.parallel_folds

    @classmethod
    def from_sources(cls, path=None, overrides=None):
        values = load_file(path) if path else {}
        values.update(overrides or {})
        return cls(values)

    def _get(self, key, conv):
        try:
            return conv(self.values[key])
        except ValueError:
            raise InvalidConfig(f"bad value for {key}: {self.values[key]!r}") from None

    def _floats(self, key):
        return self._get(key, lambda s: tuple(float(v) for v in s.split(",") if v.strip()))

    def _bool(self, key):
        v = self.values[key].lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise InvalidConfig(f"bad boolean for {key}: {self.values[key]!r}")

    @property
    def seed(self):
        return self._get("seed", int)

    @property
    def dataset(self):
        return self.values["dataset"]

    @property
    def out(self):
        return self.values["out"]

    @property
    def k(self):
        return self._get("k", int)

    @property
    def parallel_folds(self):
        return self._get("parallel_folds", int)

    def fractions(self):
        return (self._get("train_frac", float), self._get("val_frac", float), self._get("test_frac", float))

    def preprocess(self):
        spec = FilterSpec(self._get("low_hz", float), self._get("high_hz", float), self._get("filter_order", int))
        return PreprocessConfig(spec, self._get("fs_out", float), self._get("window_len", int))

    def model(self):
        keys = ("window_len", "cnn_a_kernel", "cnn_a_filters", "cnn_b_kernel", "cnn_b_filters",
                "gru_layers", "branch_fc")
        cfg = ModelConfig.from_mapping({k: self.values[k] for k in keys})
        return replace(cfg, seed=prng.derive_seed(self.seed, prng.STREAM_INIT))

    def train(self):
        return TrainConfig(
            epochs_max=self._get("epochs_max", int),
            batch_size=self._get("batch_size", int),
            patience=self._get("patience", int),
            lr=self._get("lr", float),
            beta1=self._get("beta1", float),
            beta2=self._get("beta2", float),
            eps=self._get("eps", float),
            aug_copies=self._get("aug_copies", int),
            aug_sigmas=self._floats("aug_sigmas"),
            warm_start_bias=self._bool("warm_start_bias"),
            seed=prng.derive_seed(self.seed, prng.STREAM_BATCH),
        ).validate()

    def to_text(self):
        return "".join(f"{k} = {v}\n" for k, v in self.values.items())
