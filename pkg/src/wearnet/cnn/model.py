"""Layer-by-layer model descriptions, architecture presets and parameters."""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import FormatError, ShapeError
from . import layers as L

CONV, MAXPOOL, AVGPOOL, RELU, FC, SOFTMAX = "conv", "maxpool", "avgpool", "relu", "fc", "softmax"
_KINDS = (CONV, MAXPOOL, AVGPOOL, RELU, FC, SOFTMAX)


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    kh: int = 0
    kw: int = 0
    out: int = 0
    padding: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")

    @property
    def trainable(self) -> bool:
        return self.kind in (CONV, FC, SOFTMAX)

    def __str__(self):
        if self.kind == CONV:
            pad = f", pad {self.padding}" if self.padding else ""
            return f"Conv({self.kh}x{self.kw}x{self.out}{pad})"
        if self.kind in (MAXPOOL, AVGPOOL):
            return f"{'Maxpool' if self.kind == MAXPOOL else 'Avgpool'}({self.kh}x{self.kw})"
        if self.kind == RELU:
            return "ReLU"
        if self.kind == FC:
            return f"FC({self.out})"
        return f"FC({self.out}) + softmax"


def Conv(kh, kw, out, padding=0):
    return LayerSpec(CONV, kh, kw, out, padding)


def MaxPool(ph, pw):
    return LayerSpec(MAXPOOL, ph, pw)


def AvgPool(ph, pw):
    return LayerSpec(AVGPOOL, ph, pw)


def ReLU():
    return LayerSpec(RELU)


def Dense(n):
    return LayerSpec(FC, out=n)


def SoftmaxOutput(x):
    return LayerSpec(SOFTMAX, out=x)


@dataclass(frozen=True)
class ModelSpec:
    name: str
    input_size: tuple[int, int, int]
    layers: tuple[LayerSpec, ...]
    preset: str = ""

    def __post_init__(self):
        object.__setattr__(self, "input_size", tuple(int(v) for v in self.input_size))
        object.__setattr__(self, "layers", tuple(self.layers))
        kinds = [l.kind for l in self.layers]
        if kinds.count(SOFTMAX) != 1 or kinds[-1] != SOFTMAX:
            raise ValueError("a model needs exactly one softmax output layer, placed last")
        self.shape_trace()

    @property
    def n_classes(self) -> int:
        return self.layers[-1].out

    def shape_trace(self) -> list[tuple[int, ...]]:
        """Activation shape (excluding batch) after the input and each layer."""
        shape = self.input_size
        trace = [shape]
        for layer in self.layers:
            if layer.kind == CONV:
                if len(shape) != 3:
                    raise ShapeError(f"{self.name}: convolution after flattening")
                c, h, w = shape
                shape = (layer.out,
                         L.conv_output_size(h, layer.kh, 1, layer.padding),
                         L.conv_output_size(w, layer.kw, 1, layer.padding))
                if shape[1] < 1 or shape[2] < 1:
                    raise ShapeError(f"{self.name}: {layer} leaves no spatial extent")
            elif layer.kind in (MAXPOOL, AVGPOOL):
                c, h, w = shape
                if h % layer.kh or w % layer.kw:
                    raise ShapeError(f"{self.name}: {layer} cannot tile {h}x{w}")
                shape = (c, h // layer.kh, w // layer.kw)
            elif layer.kind in (FC, SOFTMAX):
                shape = (layer.out,)
            trace.append(shape)
        return trace

    def param_shapes(self) -> list[tuple[int, ...]]:
        shapes = []
        trace = self.shape_trace()
        for layer, before in zip(self.layers, trace):
            if layer.kind == CONV:
                shapes += [(layer.out, before[0], layer.kh, layer.kw), (layer.out,)]
            elif layer.kind in (FC, SOFTMAX):
                shapes += [(int(np.prod(before)), layer.out), (layer.out,)]
        return shapes

    def n_params(self) -> int:
        return sum(int(np.prod(s)) for s in self.param_shapes())

    def describe(self) -> str:
        rows = [f"{self.name}  input {self.input_size}"]
        for layer, shape in zip(self.layers, self.shape_trace()[1:]):
            rows.append(f"  {str(layer):<28} -> {shape}")
        rows.append(f"  parameters: {self.n_params():,}")
        return "\n".join(rows)

    def to_dict(self) -> dict:
        return {"name": self.name, "preset": self.preset, "input_size": list(self.input_size),
                "layers": [asdict(l) for l in self.layers]}

    @classmethod
    def from_dict(cls, d) -> "ModelSpec":
        return cls(d["name"], tuple(d["input_size"]), tuple(LayerSpec(**l) for l in d["layers"]),
                   d.get("preset", ""))


# -- presets -----------------------------------------------------------------

def model_name(fc_i: int, fc_j: int = 0, prefix: str = "CNN") -> str:
    return f"{prefix}-{fc_i}" if not fc_j else f"{prefix}-{fc_i}-{fc_j}"


def _head(fc_i, fc_j, n_classes):
    head = [Dense(fc_i), ReLU()]
    if fc_j:
        head += [Dense(fc_j), ReLU()]
    return head + [SoftmaxOutput(n_classes)]


def _same(k, same):
    return k // 2 if same else 0


def alexnet_mod(fc_i: int = 2560, fc_j: int = 0, n_classes: int = 7, M: int = 64,
                width_div: int = 1, same_padding: bool = False) -> ModelSpec:
    """The five-conv, four-maxpool AlexNet adaptation with one or two hidden FC layers.

    With ``same_padding=False`` a 64x64 input traces
    64 -> 60 -> 30 -> 28 -> 14 -> 12 -> 6 -> 4 -> 2 -> 1.  Smaller inputs need
    ``same_padding=True``; ``width_div`` divides every conv width.
    """
    w = lambda c: max(1, c // width_div)
    s = same_padding
    body = [
        Conv(5, 5, w(96), _same(5, s)), ReLU(), MaxPool(2, 2),
        Conv(3, 3, w(256), _same(3, s)), ReLU(), MaxPool(2, 2),
        Conv(3, 3, w(384), _same(3, s)), ReLU(), MaxPool(2, 2),
        Conv(3, 3, w(384), _same(3, s)), ReLU(),
        Conv(3, 3, w(256), _same(3, s)), ReLU(), MaxPool(2, 2),
    ]
    return ModelSpec(model_name(fc_i, fc_j), (1, M, M), tuple(body + _head(fc_i, fc_j, n_classes)),
                     "alexnet-mod")


def lenet5(n_classes: int = 10, M: int = 32) -> ModelSpec:
    """Classic LeNet-5: two 5x5 convs with average pooling, FC 120 and 84."""
    body = [
        Conv(5, 5, 6), ReLU(), AvgPool(2, 2),
        Conv(5, 5, 16), ReLU(), AvgPool(2, 2),
        Dense(120), ReLU(), Dense(84), ReLU(), SoftmaxOutput(n_classes),
    ]
    return ModelSpec("LeNet5", (1, M, M), tuple(body), "lenet5")


def lenet5_wen(fc_i: int = 2560, fc_j: int = 512, n_classes: int = 7, M: int = 64,
               width_div: int = 1, same_padding: bool = False) -> ModelSpec:
    """Four-conv LeNet-5 variant used as the comparison baseline."""
    w = lambda c: max(1, c // width_div)
    s = same_padding
    body = [
        Conv(5, 5, w(32), _same(5, s)), ReLU(), MaxPool(2, 2),
        Conv(3, 3, w(64), _same(3, s)), ReLU(), MaxPool(2, 2),
        Conv(3, 3, w(128), _same(3, s)), ReLU(), MaxPool(2, 2),
        Conv(3, 3, w(256), _same(3, s)), ReLU(), MaxPool(2, 2),
    ]
    return ModelSpec(model_name(fc_i, fc_j, "LeNet5"), (1, M, M),
                     tuple(body + _head(fc_i, fc_j, n_classes)), "lenet5-wen")


PRESETS = {"alexnet-mod": alexnet_mod, "lenet5": lenet5, "lenet5-wen": lenet5_wen}


def build_preset(preset: str, fc_i: int = 2560, fc_j: int = 0, n_classes: int = 7, M: int = 64,
                 width_div: int = 1, same_padding: bool | None = None) -> ModelSpec:
    """Instantiate a preset; ``same_padding=None`` picks valid padding when it fits."""
    if preset == "lenet5":
        return lenet5(n_classes, M)
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    factory = PRESETS[preset]
    if same_padding is None:
        try:
            return factory(fc_i, fc_j, n_classes, M, width_div, False)
        except ShapeError:
            same_padding = True
    return factory(fc_i, fc_j, n_classes, M, width_div, same_padding)


# -- parameters --------------------------------------------------------------

def init_params(spec: ModelSpec, seed: int) -> list[np.ndarray]:
    """He-uniform weights (bound ``sqrt(6 / fan_in)``), zero biases, in layer order."""
    rng = np.random.default_rng(seed)
    params = []
    for shape in spec.param_shapes():
        if len(shape) == 1:
            params.append(np.zeros(shape))
        else:
            fan_in = int(np.prod(shape[1:])) if len(shape) == 4 else shape[0]
            bound = np.sqrt(6.0 / fan_in)
            params.append(rng.uniform(-bound, bound, size=shape))
    return params


class Model:
    """A ModelSpec bound to its parameter arrays."""

    def __init__(self, spec: ModelSpec, params=None, seed: int = 0):
        self.spec = spec
        self.params = init_params(spec, seed) if params is None else [np.asarray(p, np.float64) for p in params]
        expected = spec.param_shapes()
        if [p.shape for p in self.params] != expected:
            raise ShapeError(f"parameter shapes {[p.shape for p in self.params]} != {expected}")

    def forward(self, x, params=None):
        """Logits for ``x`` (N, 1, M, M) plus the caches needed by :meth:`backward`."""
        params = self.params if params is None else params
        caches = []
        pi = 0
        for layer in self.spec.layers:
            if layer.kind == CONV:
                x, cache = L.conv2d_forward(x, params[pi], params[pi + 1], 1, layer.padding)
                pi += 2
            elif layer.kind in (FC, SOFTMAX):
                x, cache = L.fc_forward(x, params[pi], params[pi + 1])
                pi += 2
            elif layer.kind == MAXPOOL:
                x, cache = L.maxpool_forward(x, layer.kh, layer.kw)
            elif layer.kind == AVGPOOL:
                x, cache = L.avgpool_forward(x, layer.kh, layer.kw)
            else:
                x, cache = L.relu_forward(x)
            caches.append(cache)
        return x, caches

    def backward(self, dlogits, caches):
        """Parameter gradients, in the same order as ``params``."""
        grads = []
        d = dlogits
        for layer, cache in zip(reversed(self.spec.layers), reversed(caches)):
            if layer.kind == CONV:
                d, dw, db = L.conv2d_backward(d, cache)
                grads += [db, dw]
            elif layer.kind in (FC, SOFTMAX):
                d, dw, db = L.fc_backward(d, cache)
                grads += [db, dw]
            elif layer.kind == MAXPOOL:
                d = L.maxpool_backward(d, cache)
            elif layer.kind == AVGPOOL:
                d = L.avgpool_backward(d, cache)
            else:
                d = L.relu_backward(d, cache)
        grads.reverse()
        return grads

    def loss_and_grads(self, x, labels):
        logits, caches = self.forward(x)
        loss, dlogits = L.softmax_cross_entropy(logits, labels)
        return loss, self.backward(dlogits, caches)

    def predict_proba(self, x, batch_size: int = 256):
        out = [L.softmax(self.forward(x[i:i + batch_size])[0]) for i in range(0, len(x), batch_size)]
        return np.concatenate(out) if out else np.empty((0, self.spec.n_classes))

    def predict(self, x, batch_size: int = 256):
        return self.predict_proba(x, batch_size).argmax(axis=1)


# -- checkpoint --------------------------------------------------------------
# layout: magic(8) | version u32 | spec_len u32 | spec JSON (utf-8) | float64 LE params

CHECKPOINT_MAGIC = b"WEARNET\x00"
CHECKPOINT_VERSION = 1


def checkpoint_bytes(model: Model) -> bytes:
    spec = json.dumps(model.spec.to_dict(), sort_keys=True, separators=(",", ":")).encode()
    body = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in model.params)
    return CHECKPOINT_MAGIC + struct.pack("<II", CHECKPOINT_VERSION, len(spec)) + spec + body


def model_from_bytes(data: bytes) -> Model:
    if data[:8] != CHECKPOINT_MAGIC:
        raise FormatError("not a wearnet checkpoint")
    version, spec_len = struct.unpack_from("<II", data, 8)
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    start = 16 + spec_len
    try:
        spec = ModelSpec.from_dict(json.loads(data[16:start].decode()))
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"corrupt model description: {exc}") from None
    shapes = spec.param_shapes()
    expected = 8 * sum(int(np.prod(s)) for s in shapes)
    if len(data) - start != expected:
        raise FormatError(f"checkpoint holds {len(data) - start} parameter bytes, expected {expected}")
    flat = np.frombuffer(data, dtype="<f8", offset=start).astype(np.float64)
    params, pos = [], 0
    for s in shapes:
        n = int(np.prod(s))
        params.append(flat[pos:pos + n].reshape(s).copy())
        pos += n
    return Model(spec, params)


def save_checkpoint(model: Model, path):
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(model))


def load_checkpoint(path) -> Model:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())
