"""Multiply-accumulate and parameter counting for architecture specs.

Counting convention: one MAC is one FLOP-unit; convolutions (shortcut
projections included) and the classifier carry MACs, batch norm counts
its 2C affine parameters but no MACs, and ReLU / pooling / softmax /
elementwise additions count zero. Per-image figures assume batch 1.
Counts are pure shape arithmetic on the declarative spec; no weights are
allocated.
"""

import io
from dataclasses import dataclass

from .errors import ShapeMismatch


@dataclass(frozen=True)
class ConvLayer:
    name: str
    in_ch: int
    out_ch: int
    kernel: int
    stride: int = 1
    padding: int = 0
    bias: bool = False


@dataclass(frozen=True)
class BatchNormLayer:
    name: str
    channels: int


@dataclass(frozen=True)
class LinearLayer:
    name: str
    in_features: int
    out_features: int
    bias: bool = True


@dataclass(frozen=True)
class PoolLayer:
    name: str
    kind: str                 # "max" | "gap"
    kernel: int = 0
    stride: int = 1
    padding: int = 0


@dataclass(frozen=True)
class ActivationLayer:
    name: str
    kind: str                 # "relu" | "softmax" | "add"


@dataclass(frozen=True)
class ReducerLayer:
    name: str
    spec: object              # transforms.ReducerSpec


@dataclass(frozen=True)
class Row:
    name: str
    out_shape: tuple
    macs: int
    params: int


@dataclass
class ComplexityReport:
    name: str
    rows: list

    @property
    def total_macs(self):
        return sum(r.macs for r in self.rows)

    @property
    def total_params(self):
        return sum(r.params for r in self.rows)

    @property
    def gflops(self):
        return self.total_macs / 1e9


def count_layer(layer, in_shape):
    """(MACs, params, out_shape) of one layer for a given input shape."""
    if isinstance(layer, ConvLayer):
        c, h, w = in_shape
        if c != layer.in_ch:
            raise ShapeMismatch(f"{layer.name}: input has {c} channels, "
                                f"layer expects {layer.in_ch}")
        ho = (h + 2 * layer.padding - layer.kernel) // layer.stride + 1
        wo = (w + 2 * layer.padding - layer.kernel) // layer.stride + 1
        if ho <= 0 or wo <= 0:
            raise ShapeMismatch(f"{layer.name}: kernel does not fit {h}x{w}")
        k2 = layer.kernel * layer.kernel
        macs = layer.out_ch * layer.in_ch * k2 * ho * wo
        params = layer.out_ch * layer.in_ch * k2 + (layer.out_ch if layer.bias else 0)
        return macs, params, (layer.out_ch, ho, wo)
    if isinstance(layer, BatchNormLayer):
        if in_shape[0] != layer.channels:
            raise ShapeMismatch(f"{layer.name}: channel mismatch")
        return 0, 2 * layer.channels, in_shape
    if isinstance(layer, LinearLayer):
        if in_shape != (layer.in_features,):
            raise ShapeMismatch(f"{layer.name}: expected ({layer.in_features},), "
                                f"got {in_shape}")
        macs = layer.in_features * layer.out_features
        params = macs + (layer.out_features if layer.bias else 0)
        return macs, params, (layer.out_features,)
    if isinstance(layer, PoolLayer):
        c, h, w = in_shape
        if layer.kind == "gap":
            return 0, 0, (c,)
        ho = (h + 2 * layer.padding - layer.kernel) // layer.stride + 1
        wo = (w + 2 * layer.padding - layer.kernel) // layer.stride + 1
        return 0, 0, (c, ho, wo)
    if isinstance(layer, ActivationLayer):
        return 0, 0, in_shape
    if isinstance(layer, ReducerLayer):
        spec = layer.spec
        c, h, w = in_shape
        if c != spec.n:
            raise ShapeMismatch(f"{layer.name}: reducer expects {spec.n} channels")
        area = h * w
        if spec.kind == "fbs":
            return 0, 0, (spec.m, h, w)
        if spec.kind == "lp":
            return spec.m * spec.n * area, spec.m * spec.n, (spec.m, h, w)
        if spec.kind == "la":
            # Hadamard scores plus the attention-weighted sum
            return 2 * spec.n * area, spec.n, (spec.m, h, w)
        return spec.m * spec.n * area, spec.m * spec.n + spec.m, (spec.m, h, w)
    raise TypeError(f"unknown layer type {type(layer).__name__}")


def _iter_block(name, spec):
    yield ConvLayer(f"{name}.conv1", spec.in_channels, spec.mid_channels, 1,
                    stride=spec.stride), "main"
    yield BatchNormLayer(f"{name}.bn1", spec.mid_channels), "main"
    yield ActivationLayer(f"{name}.relu1", "relu"), "main"
    yield ConvLayer(f"{name}.conv2", spec.mid_channels, spec.mid_channels, 3,
                    padding=1), "main"
    yield BatchNormLayer(f"{name}.bn2", spec.mid_channels), "main"
    yield ActivationLayer(f"{name}.relu2", "relu"), "main"
    yield ConvLayer(f"{name}.conv3", spec.mid_channels, spec.out_channels, 1), "main"
    yield BatchNormLayer(f"{name}.bn3", spec.out_channels), "main"
    if spec.projection:
        yield ConvLayer(f"{name}.proj", spec.in_channels, spec.out_channels, 1,
                        stride=spec.stride), "shortcut"
        yield BatchNormLayer(f"{name}.bnp", spec.out_channels), "shortcut"
    yield ActivationLayer(f"{name}.add", "add"), "main"
    yield ActivationLayer(f"{name}.relu3", "relu"), "main"


def default_input_shape(arch):
    if arch.input_kind == "rgb":
        return (3, 224, 224)
    return (arch.input_channels, 28, 28)


def count_network(arch, input_shape=None):
    """Traverse an ArchitectureSpec once, accumulating per-layer counts."""
    shape = input_shape or default_input_shape(arch)
    rows = []

    def emit(layer, in_shape):
        macs, params, out = count_layer(layer, in_shape)
        rows.append(Row(layer.name, out, macs, params))
        return out

    if arch.input_kind == "rgb":
        shape = emit(ConvLayer("stem.conv", 3, 64, 7, stride=2, padding=3), shape)
        shape = emit(BatchNormLayer("stem.bn", 64), shape)
        shape = emit(ActivationLayer("stem.relu", "relu"), shape)
        shape = emit(PoolLayer("stem.pool", "max", 3, stride=2, padding=1), shape)
    else:
        shape = emit(BatchNormLayer("input_bn", arch.input_channels), shape)
        if arch.reducer is not None:
            shape = emit(ReducerLayer("reducer", arch.reducer), shape)
    for s in sorted(arch.stages):
        for i, spec in enumerate(arch.stages[s], start=1):
            block_in = shape
            shortcut_shape = block_in
            for layer, path in _iter_block(f"stage{s}.block{i}", spec):
                if path == "shortcut":
                    shortcut_shape = emit(layer, shortcut_shape)
                else:
                    shape = emit(layer, shape)
            if spec.projection and shortcut_shape != shape:
                raise ShapeMismatch(
                    f"stage{s}.block{i}: shortcut emits {shortcut_shape}, "
                    f"main path emits {shape}")
    shape = emit(PoolLayer("gap", "gap"), shape)
    emit(LinearLayer("classifier", arch.feature_width, arch.classifier_width),
         shape)
    return ComplexityReport(arch.name, rows)


def _params_m(params):
    return f"{params / 1e6:.1f}M"


def emit_table(reports):
    """Render reports as the comparison table; returns (text, csv) strings."""
    if not reports:
        raise ValueError("no reports to tabulate")
    widest = max(len(r.name) for r in reports)
    widest = max(widest, len("Approach"))
    text = io.StringIO()
    header = f"{'Approach':<{widest}} | GFLOPs | Params"
    text.write(header + "\n")
    text.write("-" * len(header) + "\n")
    csv = io.StringIO()
    csv.write("approach,gflops,params\n")
    for r in reports:
        text.write(f"{r.name:<{widest}} | {r.gflops:6.2f} | {_params_m(r.total_params)}\n")
        csv.write(f"{r.name},{r.total_macs / 1e9!r},{r.total_params}\n")
    return text.getvalue(), csv.getvalue()
