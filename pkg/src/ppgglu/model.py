"""Three-branch CNN/CNN/GRU regressor.

::

    window (B, L)
     |-- A: conv1d(k=5)  -> BN -> ReLU -> maxpool2 -> flatten -> FC 64-32-16
     |-- B: conv1d(k=11) -> BN -> ReLU -> maxpool2 -> flatten -> FC 64-32-16
     '-- C: GRU(64) -> GRU(32) -> last state            -> FC 64-32-16
    concat(48) -> dense -> glucose (mg/dL)

Every FC layer in a branch is followed by ReLU; the head is linear.
"""
import hashlib
import struct
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import prng
from .errors import ChecksumMismatch, FormatVersionMismatch, InputError, InvalidConfig, ShapeMismatch
from .tensor import (
    BatchNormState,
    Tensor,
    batchnorm1d,
    concat,
    conv1d,
    dense,
    flatten,
    gru_sequence,
    maxpool1d,
    relu,
    reshape,
    take_last,
)

MAGIC = b"PPGGLU"
VERSION = b"01"


def _ints(text):
    return tuple(int(v) for v in str(text).split(",") if v.strip())


@dataclass(frozen=True)
class ModelConfig:
    window_len: int = 300
    cnn_a_kernel: int = 5
    cnn_a_filters: int = 32
    cnn_b_kernel: int = 11
    cnn_b_filters: int = 32
    gru_layers: tuple = (64, 32)
    branch_fc: tuple = (64, 32, 16)
    head: int = 1
    seed: int = 0

    def validate(self):
        if self.cnn_a_kernel % 2 == 0 or self.cnn_b_kernel % 2 == 0:
            raise InvalidConfig("convolution kernels must have odd length")
        sizes = [self.window_len, self.cnn_a_kernel, self.cnn_a_filters, self.cnn_b_kernel,
                 self.cnn_b_filters, *self.gru_layers, *self.branch_fc]
        if min(sizes) < 1 or not self.gru_layers or not self.branch_fc:
            raise InvalidConfig("all layer sizes must be >= 1")
        if self.window_len < 2:
            raise InvalidConfig("window_len must be at least 2 for pooling")
        if self.head != 1:
            raise InvalidConfig("the regression head has exactly one unit")
        return self

    def to_text(self):
        lines = []
        for k, v in asdict(self).items():
            if isinstance(v, tuple):
                v = ",".join(str(i) for i in v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, mapping):
        kwargs = {}
        known = {f.name: f for f in fields(cls)}
        for key, value in mapping.items():
            if key not in known:
                raise InvalidConfig(f"unknown model key {key!r}")
            try:
                kwargs[key] = _ints(value) if key in ("gru_layers", "branch_fc") else int(value)
            except ValueError:
                raise InvalidConfig(f"bad value for {key}: {value!r}") from None
        return cls(**kwargs).validate()

    @classmethod
    def from_text(cls, text):
        mapping = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                key, _, value = line.partition("=")
                mapping[key.strip()] = value.strip()
        return cls.from_mapping(mapping)


class HybridModel:
    def __init__(self, config):
        self.config = config
        self.params = {}
        self.bn = {}

    # -- construction -------------------------------------------------------

    def _add(self, name, array):
        self.params[name] = Tensor(array, requires_grad=True, name=name)

    def parameters(self):
        return list(self.params.values())

    def parameter_count(self):
        return sum(p.size for p in self.params.values())

    def buffers(self):
        """Batch-norm running statistics, in declaration order."""
        out = []
        for name, st in self.bn.items():
            out += [(f"{name}.running_mean", st, "mean"), (f"{name}.running_var", st, "var")]
        return out

    # -- forward ------------------------------------------------------------

    def _fc_stack(self, branch, h):
        for i in range(len(self.config.branch_fc)):
            p = self.params
            h = relu(dense(h, p[f"{branch}.fc{i}.W"], p[f"{branch}.fc{i}.b"]))
        return h

    def _cnn_branch(self, branch, x, mode):
        p = self.params
        h = conv1d(x, p[f"{branch}.conv.K"], p[f"{branch}.conv.b"])
        h = batchnorm1d(h, p[f"{branch}.bn.gamma"], p[f"{branch}.bn.beta"], self.bn[f"{branch}.bn"], mode)
        h = maxpool1d(relu(h))
        return self._fc_stack(branch, flatten(h))

    def _gru_branch(self, x):
        p = self.params
        h = x
        for i in range(len(self.config.gru_layers)):
            h = gru_sequence(h, p[f"c.gru{i}.W"], p[f"c.gru{i}.U"], p[f"c.gru{i}.b"])
        return self._fc_stack("c", take_last(h))

    def forward(self, windows, mode="eval"):
        """Predictions in mg/dL, shape (batch,), as a Tensor."""
        x = np.ascontiguousarray(windows, dtype=np.float64)
        if x.ndim == 1:
            x = x[None]
        if x.ndim != 2 or x.shape[1] != self.config.window_len:
            raise ShapeMismatch(f"expected windows of length {self.config.window_len}, got {x.shape}")
        B, L = x.shape
        xc = Tensor(x.reshape(B, 1, L))
        a = self._cnn_branch("a", xc, mode)
        b = self._cnn_branch("b", xc, mode)
        c = self._gru_branch(Tensor(x.reshape(B, L, 1)))
        out = dense(concat([a, b, c], axis=1), self.params["head.W"], self.params["head.b"])
        return reshape(out, (B,))

    def predict(self, windows, batch_size=256):
        x = np.asarray(windows, dtype=np.float64)
        if x.ndim == 1:
            x = x[None]
        parts = [self.forward(x[i:i + batch_size], "eval").data for i in range(0, len(x), batch_size)]
        return np.concatenate(parts) if parts else np.zeros(0)

    # -- state --------------------------------------------------------------

    def state(self):
        return ({k: v.data.copy() for k, v in self.params.items()},
                {k: s.copy() for k, s in self.bn.items()})

    def load_state(self, state):
        params, bn = state
        for k, v in params.items():
            self.params[k].data = v.copy()
        for k, s in bn.items():
            self.bn[k] = s.copy()


def _glorot(rng, fan_in, fan_out, shape):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def build(config=ModelConfig()):
    cfg = config.validate()
    rng = np.random.default_rng(prng.derive_seed(cfg.seed, prng.STREAM_INIT))
    m = HybridModel(cfg)
    L = cfg.window_len
    for branch, k, filters in (("a", cfg.cnn_a_kernel, cfg.cnn_a_filters),
                               ("b", cfg.cnn_b_kernel, cfg.cnn_b_filters)):
        m._add(f"{branch}.conv.K", _glorot(rng, k, filters * k, (filters, 1, k)))
        m._add(f"{branch}.conv.b", np.zeros(filters))
        m._add(f"{branch}.bn.gamma", np.ones(filters))
        m._add(f"{branch}.bn.beta", np.zeros(filters))
        m.bn[f"{branch}.bn"] = BatchNormState(filters)
        _add_fc(m, rng, branch, filters * (L // 2), cfg.branch_fc)
    nin = 1
    for i, H in enumerate(cfg.gru_layers):
        m._add(f"c.gru{i}.W", np.concatenate([_glorot(rng, nin, H, (nin, H)) for _ in range(3)], axis=1))
        m._add(f"c.gru{i}.U", np.concatenate([_glorot(rng, H, H, (H, H)) for _ in range(3)], axis=1))
        m._add(f"c.gru{i}.b", np.zeros(3 * H))
        nin = H
    _add_fc(m, rng, "c", nin, cfg.branch_fc)
    width = 3 * cfg.branch_fc[-1]
    m._add("head.W", _glorot(rng, width, cfg.head, (width, cfg.head)))
    m._add("head.b", np.zeros(cfg.head))
    return m


def _add_fc(m, rng, branch, nin, widths):
    for i, w in enumerate(widths):
        m._add(f"{branch}.fc{i}.W", _glorot(rng, nin, w, (nin, w)))
        m._add(f"{branch}.fc{i}.b", np.zeros(w))
        nin = w


def flatten_lengths(config):
    """Per-branch feature lengths entering the FC stacks (A, B, C)."""
    half = config.window_len // 2
    return (config.cnn_a_filters * half, config.cnn_b_filters * half, config.gru_layers[-1])


# ---------------------------------------------------------------------------
# model file
#
#   b"PPGGLU" b"01" | u64 LE config length | config text (UTF-8, key = value)
#   | parameters, then batch-norm running mean/var, each as LE float64 in
#     declaration order | u64 LE checksum (first 8 bytes of BLAKE2b over all
#     preceding bytes, as little-endian)

def _arrays_in_order(model):
    out = [p.data for p in model.params.values()]
    for _, st, attr in model.buffers():
        out.append(getattr(st, attr))
    return out


def to_bytes(model):
    cfg = model.config.to_text().encode("utf-8")
    body = bytearray(MAGIC + VERSION)
    body += struct.pack("<Q", len(cfg)) + cfg
    for a in _arrays_in_order(model):
        body += np.ascontiguousarray(a, dtype="<f8").tobytes()
    digest = hashlib.blake2b(bytes(body), digest_size=8).digest()
    return bytes(body) + digest


def from_bytes(blob):
    if len(blob) < 8 or blob[:6] != MAGIC:
        raise FormatVersionMismatch("not a model file (bad magic)")
    if blob[6:8] != VERSION:
        raise FormatVersionMismatch(f"model file version {blob[6:8]!r}, expected {VERSION!r}")
    if len(blob) < 24:
        raise ChecksumMismatch("model file truncated")
    body, digest = blob[:-8], blob[-8:]
    if hashlib.blake2b(body, digest_size=8).digest() != digest:
        raise ChecksumMismatch("model file checksum mismatch (corrupt or truncated)")
    (n,) = struct.unpack("<Q", body[8:16])
    try:
        cfg = ModelConfig.from_text(body[16:16 + n].decode("utf-8"))
    except (UnicodeDecodeError, InputError) as exc:
        raise ChecksumMismatch(f"unreadable config block: {exc}") from None
    model = build(cfg)
    pos = 16 + n
    targets = [(p, "data") for p in model.params.values()] + [(st, attr) for _, st, attr in model.buffers()]
    for obj, attr in targets:
        cur = getattr(obj, attr)
        nbytes = cur.size * 8
        if pos + nbytes > len(body):
            raise ChecksumMismatch("model file shorter than its config implies")
        arr = np.frombuffer(body[pos:pos + nbytes], dtype="<f8").astype(np.float64).reshape(cur.shape)
        setattr(obj, attr, arr)
        pos += nbytes
    if pos != len(body):
        raise ChecksumMismatch("trailing bytes in model file")
    return model


def save(model, path):
    with open(path, "wb") as fh:
        fh.write(to_bytes(model))


def load(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
