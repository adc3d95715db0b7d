"""Sequential layer stack with exact reverse-mode gradients.

The stack is deliberately minimal: Dense, 3x3 stride-1 same-padding Conv2d,
2x2 max pooling, nearest-neighbour 2x upsampling, Flatten, and activation
layers whose smooth-max parameters can themselves be trained.  Shapes are
validated once at network build time; forward/backward only check the input.

Trainable scalars live in a flat ParamStore (unique name per scalar), which
is what the optimizer and the finite-difference checker iterate over.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import activations as act
from .activations import AsauParams, BaselineKind
from .rng import SplitMix64
from .tensor import Tensor

CKPT_MAGIC = "ASAUKIT-CKPT v1"


# ---------------------------------------------------------------------------
# parameter registry
# ---------------------------------------------------------------------------


class ParamStore:
    """Flat registry of named trainable scalars and their gradients."""

    def __init__(self):
        self.names: list[str] = []
        self._name_set: set[str] = set()
        self._chunks: list[np.ndarray] = []
        self._clamp_chunks: list[np.ndarray] = []
        self.values: np.ndarray = np.zeros(0)
        self.grads: np.ndarray = np.zeros(0)
        self.clamp_min: np.ndarray = np.zeros(0)
        self._finalized = False

    def register(self, name: str, init, clamp_min: float = -np.inf) -> slice:
        """Add one named slot group; returns its slice into the flat arrays."""
        if self._finalized:
            raise RuntimeError("cannot register parameters after finalize")
        init = np.atleast_1d(np.asarray(init, dtype=np.float64)).reshape(-1)
        start = sum(c.size for c in self._chunks)
        if init.size == 1:
            new_names = [name]
        else:
            new_names = [f"{name}[{i}]" for i in range(init.size)]
        for n in new_names:
            if n in self._name_set:
                raise ValueError(f"duplicate parameter name {n!r}")
        self.names.extend(new_names)
        self._name_set.update(new_names)
        self._chunks.append(init)
        self._clamp_chunks.append(np.full(init.size, clamp_min))
        return slice(start, start + init.size)

    def finalize(self) -> None:
        self.values = (np.concatenate(self._chunks)
                       if self._chunks else np.zeros(0))
        self.grads = np.zeros_like(self.values)
        self.clamp_min = (np.concatenate(self._clamp_chunks)
                          if self._clamp_chunks else np.zeros(0))
        self._chunks = []
        self._clamp_chunks = []
        self._finalized = True

    def zero_grads(self) -> None:
        self.grads[:] = 0.0

    def apply_clamps(self) -> None:
        np.maximum(self.values, self.clamp_min, out=self.values)

    def snapshot(self) -> np.ndarray:
        return self.values.copy()

    def load(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if values.size != self.values.size:
            raise ValueError(f"expected {self.values.size} values, got {values.size}")
        self.values[:] = values

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def __len__(self):
        return len(self.names)


def _glorot_uniform(rng: SplitMix64, n: int, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return np.array([rng.uniform(-limit, limit) for _ in range(n)])


# ---------------------------------------------------------------------------
# activation specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BaselineSpec:
    """Fixed reference activation; prelu/leaky slopes may be trainable."""

    kind: BaselineKind
    trainable_slope: bool = False

    def label(self) -> str:
        return self.kind.name


@dataclass(frozen=True)
class AsauSpec:
    """Smooth-max activation with a trainable-component mask.

    `trainable` flags (a, b, alpha, beta) in that order; the default trains
    only the smoothing pair.  Granularity is per_layer (four scalars) or
    per_channel (four scalars per feature channel).
    """

    params: AsauParams = field(default_factory=AsauParams)
    trainable: tuple[bool, bool, bool, bool] = (False, False, True, True)
    granularity: str = "per_layer"

    def __post_init__(self):
        if self.granularity not in ("per_layer", "per_channel"):
            raise ValueError(f"unknown granularity {self.granularity!r}")
        if len(self.trainable) != 4:
            raise ValueError("trainable mask must have four flags (a, b, alpha, beta)")

    def label(self) -> str:
        return "asau"


ActivationSpec = BaselineSpec | AsauSpec

# alpha/beta are kept away from zero during training so the unit stays in
# its smooth-approximation regime
PARAM_CLAMP_MIN = 1e-3


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------


class Layer:
    def build(self, index: int, in_shape: tuple, store: ParamStore,
              rng: SplitMix64 | None) -> tuple:
        raise NotImplementedError

    def forward(self, x: np.ndarray, store: ParamStore):
        raise NotImplementedError

    def backward(self, ctx, gy: np.ndarray, store: ParamStore) -> np.ndarray:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError


def _shape_error(index: int, layer: str, expected, got) -> ValueError:
    return ValueError(f"layer {index} ({layer}): expected input shape {expected}, got {got}")


class Dense(Layer):
    def __init__(self, in_dim: int, out_dim: int):
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.w_sl = self.b_sl = None

    def build(self, index, in_shape, store, rng):
        if in_shape != (self.in_dim,):
            raise _shape_error(index, "dense", (self.in_dim,), in_shape)
        n = self.in_dim * self.out_dim
        if rng is None:
            w0 = np.zeros(n)
        else:
            w0 = _glorot_uniform(rng, n, self.in_dim, self.out_dim)
        self.w_sl = store.register(f"layer{index}.dense.w", w0)
        self.b_sl = store.register(f"layer{index}.dense.b", np.zeros(self.out_dim))
        return (self.out_dim,)

    def _w(self, store):
        return store.values[self.w_sl].reshape(self.in_dim, self.out_dim)

    def forward(self, x, store):
        y = x @ self._w(store) + store.values[self.b_sl]
        return y, x

    def backward(self, ctx, gy, store):
        x = ctx
        store.grads[self.w_sl] += (x.T @ gy).reshape(-1)
        store.grads[self.b_sl] += gy.sum(axis=0)
        return gy @ self._w(store).T

    def descriptor(self):
        return {"kind": "dense", "in_dim": self.in_dim, "out_dim": self.out_dim}


class Conv2d(Layer):
    """3x3 convolution, stride 1, zero padding 1: spatial dims preserved."""

    def __init__(self, in_ch: int, out_ch: int):
        self.in_ch = int(in_ch)
        self.out_ch = int(out_ch)
        self.w_sl = self.b_sl = None

    def build(self, index, in_shape, store, rng):
        if len(in_shape) != 3 or in_shape[0] != self.in_ch:
            raise _shape_error(index, "conv2d", (self.in_ch, "H", "W"), in_shape)
        n = self.out_ch * self.in_ch * 9
        if rng is None:
            w0 = np.zeros(n)
        else:
            w0 = _glorot_uniform(rng, n, self.in_ch * 9, self.out_ch * 9)
        self.w_sl = store.register(f"layer{index}.conv.w", w0)
        self.b_sl = store.register(f"layer{index}.conv.b", np.zeros(self.out_ch))
        return (self.out_ch,) + in_shape[1:]

    def _cols(self, x):
        # im2col: (N, C, H, W) -> (N, C*9, H*W)
        n, c, h, w = x.shape
        xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
        win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(2, 3))
        return np.ascontiguousarray(win.transpose(0, 1, 4, 5, 2, 3)).reshape(n, c * 9, h * w)

    def forward(self, x, store):
        n, c, h, w = x.shape
        cols = self._cols(x)
        wmat = store.values[self.w_sl].reshape(self.out_ch, self.in_ch * 9)
        y = np.matmul(wmat, cols) + store.values[self.b_sl][None, :, None]
        return y.reshape(n, self.out_ch, h, w), (cols, x.shape)

    def backward(self, ctx, gy, store):
        cols, xshape = ctx
        n, c, h, w = xshape
        gyf = gy.reshape(n, self.out_ch, h * w)
        wmat = store.values[self.w_sl].reshape(self.out_ch, self.in_ch * 9)
        store.grads[self.w_sl] += np.einsum("nop,nkp->ok", gyf, cols).reshape(-1)
        store.grads[self.b_sl] += gyf.sum(axis=(0, 2))
        gcols = np.einsum("ok,nop->nkp", wmat, gyf)
        gwin = gcols.reshape(n, c, 3, 3, h, w)
        gxp = np.zeros((n, c, h + 2, w + 2))
        for di in range(3):
            for dj in range(3):
                gxp[:, :, di:di + h, dj:dj + w] += gwin[:, :, di, dj]
        return gxp[:, :, 1:h + 1, 1:w + 1]

    def descriptor(self):
        return {"kind": "conv2d", "in_ch": self.in_ch, "out_ch": self.out_ch}


class MaxPool2x2(Layer):
    def build(self, index, in_shape, store, rng):
        if len(in_shape) != 3:
            raise _shape_error(index, "maxpool2x2", ("C", "H", "W"), in_shape)
        c, h, w = in_shape
        if h % 2 or w % 2:
            raise ValueError(f"layer {index} (maxpool2x2): spatial dims must be even, got {in_shape}")
        return (c, h // 2, w // 2)

    def forward(self, x, store):
        n, c, h, w = x.shape
        win = (x.reshape(n, c, h // 2, 2, w // 2, 2)
               .transpose(0, 1, 2, 4, 3, 5)
               .reshape(n, c, h // 2, w // 2, 4))
        # argmax takes the first maximum, i.e. row-major order inside the window
        idx = win.argmax(axis=-1)
        y = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
        ties = int(((win == y[..., None]).sum(axis=-1) > 1).sum())
        return y, (idx, x.shape, ties)

    def backward(self, ctx, gy, store):
        idx, xshape, _ = ctx
        n, c, h, w = xshape
        gwin = np.zeros((n, c, h // 2, w // 2, 4))
        np.put_along_axis(gwin, idx[..., None], gy[..., None], axis=-1)
        return (gwin.reshape(n, c, h // 2, w // 2, 2, 2)
                .transpose(0, 1, 2, 4, 3, 5)
                .reshape(n, c, h, w))

    def descriptor(self):
        return {"kind": "maxpool2x2"}


class Flatten(Layer):
    def build(self, index, in_shape, store, rng):
        return (int(np.prod(in_shape)),)

    def forward(self, x, store):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, ctx, gy, store):
        return gy.reshape(ctx)

    def descriptor(self):
        return {"kind": "flatten"}


class Upsample2x(Layer):
    """Nearest-neighbour doubling of both spatial dims."""

    def build(self, index, in_shape, store, rng):
        if len(in_shape) != 3:
            raise _shape_error(index, "upsample2x", ("C", "H", "W"), in_shape)
        c, h, w = in_shape
        return (c, 2 * h, 2 * w)

    def forward(self, x, store):
        return x.repeat(2, axis=2).repeat(2, axis=3), x.shape

    def backward(self, ctx, gy, store):
        n, c, h, w = ctx
        return gy.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5))

    def descriptor(self):
        return {"kind": "upsample2x"}


class Activation(Layer):
    """Elementwise activation; smooth-max parameters may be registered as trainable."""

    def __init__(self, spec: ActivationSpec):
        self.spec = spec
        self.slots: dict[str, slice] = {}
        self._channels = 1

    def build(self, index, in_shape, store, rng):
        self._bshape = None
        if isinstance(self.spec, AsauSpec) and self.spec.granularity == "per_channel":
            self._channels = in_shape[0]
            # broadcastable against (N, C, ...) batches
            self._bshape = (1, self._channels) + (1,) * (len(in_shape) - 1)
        prefix = f"layer{index}.{self.spec.label()}"
        if isinstance(self.spec, AsauSpec):
            p = self.spec.params
            for flag, name, value in zip(self.spec.trainable, "a b alpha beta".split(),
                                         (p.a, p.b, p.alpha, p.beta)):
                if flag:
                    clamp = PARAM_CLAMP_MIN if name in ("alpha", "beta") else -np.inf
                    init = np.full(self._channels if self._bshape else 1, value)
                    self.slots[name] = store.register(f"{prefix}.{name}", init, clamp)
        elif self.spec.trainable_slope:
            self.slots["slope"] = store.register(f"{prefix}.slope", [self.spec.kind.slope])
        return in_shape

    def _asau_args(self, store):
        p = self.spec.params
        out = []
        for name, value in zip("a b alpha beta".split(), (p.a, p.b, p.alpha, p.beta)):
            if name in self.slots:
                v = store.values[self.slots[name]]
                out.append(v.reshape(self._bshape) if self._bshape else v[0])
            else:
                out.append(value)
        return out

    def _kind(self, store):
        kind = self.spec.kind
        if "slope" in self.slots:
            kind = BaselineKind(kind.name, float(store.values[self.slots["slope"]][0]))
        return kind

    def forward(self, x, store):
        if isinstance(self.spec, AsauSpec):
            a, b, alpha, beta = self._asau_args(store)
            return act.asau_kernel(x, a, b, alpha, beta), x
        return act.baseline_kernel(self._kind(store), x), x

    def backward(self, ctx, gy, store):
        x = ctx
        if isinstance(self.spec, AsauSpec):
            a, b, alpha, beta = self._asau_args(store)
            d_x, d_a, d_b, d_alpha, d_beta = act.asau_grad_kernel(x, a, b, alpha, beta)
            partials = {"a": d_a, "b": d_b, "alpha": d_alpha, "beta": d_beta}
            for name, sl in self.slots.items():
                contrib = gy * partials[name]
                if self._bshape:
                    axes = tuple(i for i in range(x.ndim) if i != 1)
                    store.grads[sl] += contrib.sum(axis=axes)
                else:
                    store.grads[sl] += contrib.sum()
            return gy * d_x
        kind = self._kind(store)
        if "slope" in self.slots:
            store.grads[self.slots["slope"]] += (gy * np.where(x < 0, x, 0.0)).sum()
        return gy * act.baseline_derivative_kernel(kind, x)

    def descriptor(self):
        if isinstance(self.spec, AsauSpec):
            p = self.spec.params
            return {"kind": "activation", "family": "asau",
                    "a": p.a, "b": p.b, "alpha": p.alpha, "beta": p.beta,
                    "trainable": list(self.spec.trainable),
                    "granularity": self.spec.granularity}
        return {"kind": "activation", "family": "baseline",
                "baseline": self.spec.kind.name, "slope": self.spec.kind.slope,
                "trainable_slope": self.spec.trainable_slope}


def layer_from_descriptor(d: dict) -> Layer:
    kind = d["kind"]
    if kind == "dense":
        return Dense(d["in_dim"], d["out_dim"])
    if kind == "conv2d":
        return Conv2d(d["in_ch"], d["out_ch"])
    if kind == "maxpool2x2":
        return MaxPool2x2()
    if kind == "flatten":
        return Flatten()
    if kind == "upsample2x":
        return Upsample2x()
    if kind == "activation":
        if d["family"] == "asau":
            spec = AsauSpec(AsauParams(d["a"], d["b"], d["alpha"], d["beta"]),
                            tuple(bool(f) for f in d["trainable"]), d["granularity"])
        else:
            spec = BaselineSpec(BaselineKind(d["baseline"], d["slope"]),
                                bool(d["trainable_slope"]))
        return Activation(spec)
    raise ValueError(f"unknown layer descriptor kind {kind!r}")


# ---------------------------------------------------------------------------
# network
# ---------------------------------------------------------------------------


@dataclass
class Cache:
    """Per-layer saved activations from one forward pass."""

    owner: "Network"
    serial: int
    entries: list
    pool_ties: dict[int, int]


class Network:
    """Ordered layer stack over a shared ParamStore.

    Not safe for overlapped forward/backward on one instance; use separate
    instances for concurrent training runs.
    """

    def __init__(self, layers: list[Layer], input_shape: tuple,
                 rng: SplitMix64 | None = None):
        if not layers:
            raise ValueError("network must contain at least one layer")
        self.layers = list(layers)
        self.input_shape = tuple(int(d) for d in input_shape)
        self.store = ParamStore()
        self.layer_param_ranges: list[tuple[int, int]] = []
        shape = self.input_shape
        for i, layer in enumerate(self.layers):
            n_before = sum(c.size for c in self.store._chunks)
            shape = layer.build(i, shape, self.store, rng)
            n_after = sum(c.size for c in self.store._chunks)
            self.layer_param_ranges.append((n_before, n_after))
        self.output_shape = shape
        self.store.finalize()
        self._serial = 0

    def _check_input(self, x: Tensor):
        if x.shape[1:] != self.input_shape:
            raise ValueError(
                f"input shape {x.shape} does not match network input {('N',) + self.input_shape}")

    def forward(self, x: Tensor) -> tuple[Tensor, Cache]:
        self._check_input(x)
        self._serial += 1
        a = x.array()
        entries = []
        ties = {}
        for i, layer in enumerate(self.layers):
            a, ctx = layer.forward(a, self.store)
            entries.append(ctx)
            if isinstance(layer, MaxPool2x2):
                ties[i] = ctx[2]
        return Tensor.from_array(a), Cache(self, self._serial, entries, ties)

    def predict(self, x: Tensor) -> Tensor:
        """Read-only forward; no cache, safe for concurrent callers."""
        self._check_input(x)
        a = x.array()
        for layer in self.layers:
            a, _ = layer.forward(a, self.store)
        return Tensor.from_array(a)

    def backward(self, cache: Cache, out_grad: Tensor) -> Tensor:
        if cache.owner is not self or cache.serial != self._serial:
            raise ValueError("stale or mismatched cache: backward must follow its own forward")
        g = out_grad.array()
        if g.shape[1:] != self.output_shape:
            raise ValueError(
                f"output grad shape {g.shape} does not match network output "
                f"{('N',) + self.output_shape}")
        self.store.zero_grads()
        for layer, ctx in zip(reversed(self.layers), reversed(cache.entries)):
            g = layer.backward(ctx, g, self.store)
        return Tensor.from_array(g)

    def descriptor(self) -> dict:
        return {"input_shape": list(self.input_shape),
                "layers": [layer.descriptor() for layer in self.layers]}


# ---------------------------------------------------------------------------
# finite-difference checking
# ---------------------------------------------------------------------------


@dataclass
class GradCheckEntry:
    name: str
    analytic: float
    numeric: float
    rel_err: float
    excluded: bool = False


@dataclass
class GradCheckReport:
    entries: list[GradCheckEntry]
    pooling_ties: int

    def failures(self, tol: float) -> list[GradCheckEntry]:
        return [e for e in self.entries if not e.excluded and e.rel_err >= tol]

    def passed(self, tol: float) -> bool:
        return not self.failures(tol)

    def worst(self, n: int = 5) -> list[GradCheckEntry]:
        return self.entries[:n]


def numeric_grad_check(net: Network, x: Tensor, loss_fn, h: float) -> GradCheckReport:
    """Compare analytic parameter gradients against central differences.

    loss_fn maps the network output Tensor to (scalar loss, output grad
    Tensor).  rel_err is |a - n| / max(|a|, |n|, 1e-8), sorted descending.
    Parameters upstream of a pooling tie are excluded from the verdict: the
    tie-break makes the loss non-differentiable there.
    """
    if h <= 0:
        raise ValueError(f"finite-difference step must be positive, got {h}")
    out, cache = net.forward(x)
    _, out_grad = loss_fn(out)
    net.backward(cache, out_grad)
    analytic = net.store.grads.copy()

    excluded = np.zeros(len(net.store), dtype=bool)
    total_ties = sum(cache.pool_ties.values())
    for pool_idx, ties in cache.pool_ties.items():
        if ties:
            cutoff = net.layer_param_ranges[pool_idx][0]
            excluded[:cutoff] = True

    values = net.store.values
    entries = []
    for i, name in enumerate(net.store.names):
        v = values[i]
        values[i] = v + h
        lp, _ = loss_fn(net.predict(x))
        values[i] = v - h
        lm, _ = loss_fn(net.predict(x))
        values[i] = v
        numeric = (lp - lm) / (2.0 * h)
        rel = abs(analytic[i] - numeric) / max(abs(analytic[i]), abs(numeric), 1e-8)
        entries.append(GradCheckEntry(name, float(analytic[i]), float(numeric),
                                      float(rel), bool(excluded[i])))
    entries.sort(key=lambda e: e.rel_err, reverse=True)
    return GradCheckReport(entries, total_ties)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(net: Network, path) -> None:
    """Versioned text format: magic line, structure descriptor, one scalar per line."""
    with open(path, "w", newline="") as f:
        f.write(CKPT_MAGIC + "\n")
        f.write("structure " + json.dumps(net.descriptor(), sort_keys=True) + "\n")
        for name, value in zip(net.store.names, net.store.values):
            f.write("param %s %.17g\n" % (name, value))


def load_checkpoint(path) -> Network:
    with open(path) as f:
        magic = f.readline().rstrip("\n")
        if magic != CKPT_MAGIC:
            raise ValueError(f"bad checkpoint magic {magic!r}, expected {CKPT_MAGIC!r}")
        line = f.readline().rstrip("\n")
        if not line.startswith("structure "):
            raise ValueError("checkpoint missing structure descriptor")
        desc = json.loads(line[len("structure "):])
        values = {}
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            tag, name, value = line.split(" ")
            if tag != "param":
                raise ValueError(f"unexpected checkpoint line {line!r}")
            values[name] = float(value)
    layers = [layer_from_descriptor(d) for d in desc["layers"]]
    net = Network(layers, tuple(desc["input_shape"]), rng=None)
    if set(values) != set(net.store.names):
        raise ValueError("checkpoint parameters do not match network structure")
    net.store.load(np.array([values[n] for n in net.store.names]))
    return net
