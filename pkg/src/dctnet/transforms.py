"""Input-channel reduction operators for the 192-channel DCT tensor.

Four operators: FBS keeps the k lowest zig-zag frequencies per component
(parameter-free); LP is a per-location linear projection over all input
channels; LA is a per-group softmax attention over adjacent channels;
CCPP is a 1x1 pointwise recombination with bias and rectification.

All operate on tensors shaped [..., C, H, W]; batched inputs work the
same way. Channel layout is (component, zig-zag frequency index):
channels 0..63 are Y, 64..127 Cb, 128..191 Cr.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from .errors import GroupingError, KOutOfRange, ShapeMismatch
from .nn import Parameter, he_normal


@dataclass
class ReducerSpec:
    """Configuration of one channel reducer.

    kind: fbs | lp | la | ccpp. `n` is the input channel count, `m` the
    output count; for FBS, m = 3k. Parameters are allocated by `init_params`.
    """
    kind: str
    n: int
    m: int
    k: int = 0                      # FBS only
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("fbs", "lp", "la", "ccpp"):
            raise ValueError(f"unknown reducer kind {self.kind!r}")
        if self.kind == "fbs":
            if not 1 <= self.k <= 64:
                raise KOutOfRange(f"FBS k={self.k} outside [1, 64]")
            if self.m != 3 * self.k:
                raise ValueError("FBS output channels must equal 3k")
        if self.kind == "la" and self.n % self.m != 0:
            raise GroupingError(f"LA needs m | n, got n={self.n}, m={self.m}")

    def init_params(self, rng, dtype=np.float32):
        if self.kind == "lp":
            self.params = {"weight": Parameter(
                he_normal(rng, (self.m, self.n), self.n, dtype))}
        elif self.kind == "la":
            group = self.n // self.m
            self.params = {"weight": Parameter(
                he_normal(rng, (self.m, group), group, dtype))}
        elif self.kind == "ccpp":
            self.params = {"weight": Parameter(
                he_normal(rng, (self.m, self.n), self.n, dtype)),
                "bias": Parameter(np.zeros(self.m, dtype))}
        else:
            self.params = {}
        return self

    def parameters(self):
        return list(self.params.values())

    def apply(self, x):
        if self.kind == "fbs":
            return fbs_select(x, self.k, components=self.n // 64)
        if self.kind == "lp":
            return lp_project(x, self.params["weight"])
        if self.kind == "la":
            return local_attention(x, self.params["weight"])
        return ccpp(x, self.params["weight"], self.params["bias"])


def fbs_select(x, k, components=3):
    """Keep zig-zag frequency indices 0..k-1 of each color component."""
    if not 1 <= k <= 64:
        raise KOutOfRange(f"k={k} outside [1, 64]")
    x = ag.as_tensor(x)
    if x.shape[-3] != components * 64:
        raise ShapeMismatch(f"expected {components * 64} channels, "
                            f"got {x.shape[-3]}")
    idx = np.concatenate([np.arange(k) + 64 * c for c in range(components)])
    return ag.take_channels(x, idx, axis=-3)


def lp_project(x, weight):
    """Per-location linear map of n input channels to m outputs, no bias."""
    return ag.channel_matmul(x, weight.tensor if isinstance(weight, Parameter)
                             else weight)


def local_attention(x, weight):
    """Softmax-weighted combination of groups of adjacent channels.

    The n channels are split into m groups of n/m; per group i and spatial
    location, scores s_i = W[i] * r_i (Hadamard), a_i = softmax(s_i) over
    the group, y_i = sum_j a_i[j] r_i[j]. Normalization is per spatial
    location.
    """
    x = ag.as_tensor(x)
    w = weight.tensor if isinstance(weight, Parameter) else ag.as_tensor(weight)
    m, group = w.shape
    n = x.shape[-3]
    if n % m != 0 or n // m != group:
        raise GroupingError(f"weight {w.shape} does not tile {n} channels")
    h, wd = x.shape[-2:]
    lead = x.shape[:-3]
    r = ag.reshape(x, lead + (m, group, h, wd))
    scores = ag.mul(r, ag.reshape(w, (m, group, 1, 1)))
    attn = ag.softmax(scores, axis=-3)
    return ag.tsum(ag.mul(attn, r), axis=-3)


def ccpp(x, weight, bias):
    """Cross channel parametric pooling: y = max(0, W.x + b) per location."""
    w = weight.tensor if isinstance(weight, Parameter) else ag.as_tensor(weight)
    b = bias.tensor if isinstance(bias, Parameter) else ag.as_tensor(bias)
    mixed = ag.channel_matmul(x, w)
    biased = ag.add(mixed, ag.reshape(b, (b.shape[0], 1, 1)))
    return ag.relu(biased)
