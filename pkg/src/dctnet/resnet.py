"""ResNet-50 family: canonical RGB network, DCT-input variants with
learned channel reduction, and stage-skipping configurations.

Stage naming follows the five-stage convention: stage 1 is the 7x7 stem
plus max pool, stages 2-5 are the bottleneck stacks of 3/4/6/3 blocks with
widths 64/128/256/512. DCT variants drop the stem (and possibly more
stages) and enter with a 28x28x192 coefficient tensor for a 224 crop; the
first block of the entry stage runs at stride 1 to compensate for the
eight-fold smaller input, and a stage-2 entry additionally keeps
stage 3 at stride 1 as well so downstream resolutions stay canonical.

Downsampling stride sits on the first 1x1 convolution of a bottleneck;
this placement reproduces the reference complexity figures exactly.
"""

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from . import nn
from .errors import BadStage, ChannelMismatch, GeometryMismatch
from .jpeg.zigzag import ZIGZAG_ORDER
from .transforms import ReducerSpec

PLANES = {2: 64, 3: 128, 4: 256, 5: 512}
BLOCKS = {2: 3, 3: 4, 4: 6, 5: 3}
EXPANSION = 4
CANONICAL_FIRST_STRIDE = {2: 1, 3: 2, 4: 2, 5: 2}

# Widened stages for the 192-channel (no-reducer) variant: bottleneck
# widths doubled, stage outputs kept canonical so stages 4-5 are
# untouched. Calibrated to the reported complexity of that variant.
WIDENED_MIDS = {2: 128, 3: 256}
WIDENED_OUTS = {2: 256, 3: 512}


@dataclass(frozen=True)
class BottleneckSpec:
    in_channels: int
    mid_channels: int
    out_channels: int
    stride: int
    projection: bool


@dataclass
class ArchitectureSpec:
    name: str
    input_kind: str                      # "rgb" | "dct"
    input_channels: int
    entry_stage: int
    reducer: ReducerSpec | None
    stages: dict                         # stage index -> [BottleneckSpec]
    classifier_width: int = 1000

    @property
    def feature_width(self):
        last = max(self.stages)
        return self.stages[last][-1].out_channels


def stride_policy(entry_stage):
    """First-block stride per stage for a DCT network entering at `entry_stage`."""
    if entry_stage not in (2, 3, 4, 5):
        raise BadStage(f"entry stage must be 2..5, got {entry_stage}")
    policy = {s: CANONICAL_FIRST_STRIDE[s] for s in range(entry_stage, 6)}
    policy[entry_stage] = 1
    if entry_stage == 2:
        policy[3] = 1     # keep stage 3 at 28x28 for a stage-2 entry
    return policy


def _stage(stage, in_ch, mid, out, first_stride):
    specs = []
    for b in range(BLOCKS[stage]):
        stride = first_stride if b == 0 else 1
        cin = in_ch if b == 0 else out
        projection = stride != 1 or cin != out
        specs.append(BottleneckSpec(cin, mid, out, stride, projection))
    return specs


def build_rgb_resnet50(classes=1000, name="RGB (3x1)"):
    """Canonical ResNet-50: 7x7/2 stem, 3x3/2 max pool, stages (3,4,6,3)."""
    stages = {}
    in_ch = 64
    for s in range(2, 6):
        out = PLANES[s] * EXPANSION
        stages[s] = _stage(s, in_ch, PLANES[s], out, CANONICAL_FIRST_STRIDE[s])
        in_ch = out
    return ArchitectureSpec(name, "rgb", 3, 2, None, stages, classes)


def build_dct_network(reducer, entry_stage=2, classes=1000, name=None):
    """DCT-input variant: input batch norm, optional reducer, stages entry..5.

    With no reducer (or an FBS reducer) the widened stages 2-3 of the
    192-channel variant are used; a learned reducer must emit the
    canonical width of its entry stage (64/128/256/512).
    """
    policy = stride_policy(entry_stage)
    stages = {}
    if reducer is None or reducer.kind == "fbs":
        if entry_stage != 2:
            raise BadStage("the 192-channel and FBS variants enter at stage 2")
        in_ch = 192 if reducer is None else reducer.m
        for s in (2, 3):
            stages[s] = _stage(s, in_ch, WIDENED_MIDS[s], WIDENED_OUTS[s],
                               policy[s])
            in_ch = WIDENED_OUTS[s]
        for s in (4, 5):
            out = PLANES[s] * EXPANSION
            stages[s] = _stage(s, in_ch, PLANES[s], out, policy[s])
            in_ch = out
        input_ch = 192
        if name is None:
            name = "DCT (3x64)" if reducer is None else f"DCT + FBS (3x{reducer.k})"
    else:
        want = PLANES[entry_stage]
        if reducer.m != want:
            raise ChannelMismatch(
                f"reducer emits {reducer.m} channels; stage {entry_stage} "
                f"expects {want}")
        in_ch = reducer.m
        for s in range(entry_stage, 6):
            out = PLANES[s] * EXPANSION
            stages[s] = _stage(s, in_ch, PLANES[s], out, policy[s])
            in_ch = out
        input_ch = reducer.n
        if name is None:
            name = f"DCT + {reducer.kind.upper()} (1x{reducer.m})"
    return ArchitectureSpec(name, "dct", input_ch, entry_stage, reducer,
                            stages, classes)


def assemble_dct_input(y, cb, cr):
    """Stack three DctBlockGrids into a [192, H, W] float32 tensor.

    Channels are ordered Y0..Y63, Cb0..Cb63, Cr0..Cr63 by zig-zag
    frequency index; 4:2:0 chroma grids are upsampled x2 by block
    duplication.
    """
    ydim = (y.height_blocks, y.width_blocks)
    planes = []
    for g in (y, cb, cr):
        gdim = (g.height_blocks, g.width_blocks)
        # blocks are raster-ordered; channel z is raster index ZIGZAG_ORDER[z]
        chans = g.blocks[:, :, ZIGZAG_ORDER].transpose(2, 0, 1).astype(np.float32)
        if gdim != ydim:
            if (gdim[0] * 2, gdim[1] * 2) != ydim:
                raise GeometryMismatch(
                    f"chroma grid {gdim} is neither equal to nor half of "
                    f"luma grid {ydim}")
            chans = np.repeat(np.repeat(chans, 2, axis=1), 2, axis=2)
        planes.append(chans)
    return np.concatenate(planes, axis=0)


# --- parameterized network ---

class Bottleneck:
    def __init__(self, spec, rng, dtype=np.float32):
        self.spec = spec
        cin, mid, out = spec.in_channels, spec.mid_channels, spec.out_channels
        self.conv1 = nn.Parameter(nn.he_normal(rng, (mid, cin, 1, 1), cin, dtype))
        self.bn1 = _bn_state(mid, dtype)
        self.conv2 = nn.Parameter(nn.he_normal(rng, (mid, mid, 3, 3), mid * 9, dtype))
        self.bn2 = _bn_state(mid, dtype)
        self.conv3 = nn.Parameter(nn.he_normal(rng, (out, mid, 1, 1), mid, dtype))
        self.bn3 = _bn_state(out, dtype)
        if spec.projection:
            self.proj = nn.Parameter(nn.he_normal(rng, (out, cin, 1, 1), cin, dtype))
            self.bnp = _bn_state(out, dtype)
        else:
            self.proj = None

    def forward(self, x, train):
        s = self.spec.stride
        h = ag.relu(_bn(nn.conv2d(x, self.conv1, stride=s), self.bn1, train))
        h = ag.relu(_bn(nn.conv2d(h, self.conv2, stride=1, padding=1), self.bn2, train))
        h = _bn(nn.conv2d(h, self.conv3), self.bn3, train)
        shortcut = x if self.proj is None else \
            _bn(nn.conv2d(x, self.proj, stride=s), self.bnp, train)
        return ag.relu(ag.add(h, shortcut))

    def state(self, prefix):
        items = [(f"{prefix}.conv1.weight", self.conv1)]
        items += _bn_items(f"{prefix}.bn1", self.bn1)
        items += [(f"{prefix}.conv2.weight", self.conv2)]
        items += _bn_items(f"{prefix}.bn2", self.bn2)
        items += [(f"{prefix}.conv3.weight", self.conv3)]
        items += _bn_items(f"{prefix}.bn3", self.bn3)
        if self.proj is not None:
            items += [(f"{prefix}.proj.weight", self.proj)]
            items += _bn_items(f"{prefix}.bnp", self.bnp)
        return items


def _bn_state(channels, dtype=np.float32):
    return {
        "gamma": nn.Parameter(np.ones(channels, dtype)),
        "beta": nn.Parameter(np.zeros(channels, dtype)),
        "mean": np.zeros(channels, dtype),
        "var": np.ones(channels, dtype),
    }


def _bn(x, state, train):
    return nn.batch_norm2d(x, state["gamma"], state["beta"],
                           state["mean"], state["var"], train)


def _bn_items(prefix, state):
    return [(f"{prefix}.gamma", state["gamma"]),
            (f"{prefix}.beta", state["beta"]),
            (f"{prefix}.running_mean", state["mean"]),
            (f"{prefix}.running_var", state["var"])]


class Network:
    """A built (parameterized) ArchitectureSpec."""

    def __init__(self, arch, seed=0, dtype=np.float32):
        self.arch = arch
        rng = np.random.default_rng(seed)
        if arch.input_kind == "rgb":
            self.stem_conv = nn.Parameter(
                nn.he_normal(rng, (64, 3, 7, 7), 3 * 49, dtype))
            self.stem_bn = _bn_state(64, dtype)
            self.input_bn = None
        else:
            self.stem_conv = None
            self.input_bn = _bn_state(arch.input_channels, dtype)
            if arch.reducer is not None and not arch.reducer.params:
                arch.reducer.init_params(rng, dtype)
        self.stages = {
            s: [Bottleneck(spec, rng, dtype) for spec in arch.stages[s]]
            for s in sorted(arch.stages)
        }
        self.fc_w = nn.Parameter(nn.he_normal(
            rng, (arch.classifier_width, arch.feature_width),
            arch.feature_width, dtype))
        self.fc_b = nn.Parameter(np.zeros(arch.classifier_width, dtype))

    def forward(self, x, train=False):
        x = ag.as_tensor(x)
        if x.ndim != 4 or x.shape[1] != self.arch.input_channels:
            raise GeometryMismatch(
                f"expected [N,{self.arch.input_channels},H,W], got {x.shape}")
        if self.arch.input_kind == "rgb":
            h = ag.relu(_bn(nn.conv2d(x, self.stem_conv, stride=2, padding=3),
                            self.stem_bn, train))
            h = nn.max_pool2d(h, 3, stride=2, padding=1)
        else:
            h = _bn(x, self.input_bn, train)
            if self.arch.reducer is not None:
                h = self.arch.reducer.apply(h)
        for s in sorted(self.stages):
            for block in self.stages[s]:
                h = block.forward(h, train)
        pooled = nn.global_avg_pool(h)
        return nn.linear(pooled, self.fc_w, self.fc_b)

    def state(self):
        """Ordered (name, Parameter-or-array) pairs, definition order."""
        items = []
        if self.stem_conv is not None:
            items.append(("stem.conv.weight", self.stem_conv))
            items += _bn_items("stem.bn", self.stem_bn)
        if self.input_bn is not None:
            items += _bn_items("input_bn", self.input_bn)
        if self.arch.reducer is not None:
            for pname, p in sorted(self.arch.reducer.params.items()):
                items.append((f"reducer.{pname}", p))
        for s in sorted(self.stages):
            for b, block in enumerate(self.stages[s], start=1):
                items += block.state(f"stage{s}.block{b}")
        items.append(("classifier.weight", self.fc_w))
        items.append(("classifier.bias", self.fc_b))
        return items

    def parameters(self):
        return [v for _, v in self.state() if isinstance(v, nn.Parameter)]
