"""Full model assembly: stem -> MSAP groups -> DM transitions -> classifier.

Group g (0-based) runs at scales * width * 2^g channels; transitions
between groups double channels and halve time (stride-2 decompose conv).
The variant string "<msap_mode>,<denoise>" selects the ablation cell:
msap_mode in {base, connected, purified}, denoise in
{no-denoise, drsn, drsn-m}. "drsn" attaches a shrinkage block after every
MSAP block; "drsn-m" shrinks only between groups plus once after the
last group.
"""

from dataclasses import dataclass, asdict

import numpy as np

from .blocks import DmBlock, MsapBlock, MSAP_MODES
from .container import ManifestMismatchError, read_container, write_container
from .layers import Conv1d, GlobalAvgPool, Linear, ReLU, ShapeError

DENOISE_MODES = ("no-denoise", "drsn", "drsn-m")


@dataclass
class ModelConfig:
    in_channels: int
    num_classes: int
    window_len: int
    scales: int = 4
    width: int = 8
    groups: int = 3
    blocks_per_group: int = 1
    variant: str = "purified,drsn-m"
    eca_gamma: int = 2
    eca_b: int = 1
    eca_rounding: str = "floor-odd"
    seed: int = 0

    @property
    def msap_mode(self):
        return self.variant.split(",")[0]

    @property
    def denoise(self):
        return self.variant.split(",")[1]

    def validate(self):
        checks = [
            ("in_channels", self.in_channels >= 1, ">= 1"),
            ("num_classes", self.num_classes >= 2, ">= 2"),
            ("window_len", self.window_len >= 1, ">= 1"),
            ("scales", self.scales >= 2, ">= 2"),
            ("width", self.width >= 1, ">= 1"),
            ("groups", self.groups >= 1, ">= 1"),
            ("blocks_per_group", self.blocks_per_group >= 1, ">= 1"),
            ("eca_gamma", self.eca_gamma >= 1, ">= 1"),
            ("eca_rounding", self.eca_rounding in ("floor-odd", "nearest-odd-up"),
             "one of floor-odd, nearest-odd-up"),
        ]
        for name, ok, rule in checks:
            if not ok:
                raise ValueError(f"config field {name} must be {rule}, "
                                 f"got {getattr(self, name)!r}")
        parts = self.variant.split(",")
        if len(parts) != 2 or parts[0] not in MSAP_MODES or parts[1] not in DENOISE_MODES:
            raise ValueError(
                f"config field variant must be '<mode>,<denoise>' with mode in "
                f"{MSAP_MODES} and denoise in {DENOISE_MODES}, got {self.variant!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)


class Model:
    """An MSAP-DM network; immutable during inference, exclusive during
    training (backward mutates gradient buffers)."""

    def __init__(self, config, dtype=np.float32):
        config.validate()
        self.config = config
        self.dtype = dtype
        rng = np.random.default_rng(config.seed)
        c = config
        eca = dict(eca_gamma=c.eca_gamma, eca_b=c.eca_b,
                   eca_rounding=c.eca_rounding)
        base_ch = c.scales * c.width
        self.stem = Conv1d(c.in_channels, base_ch, 3, padding=1, rng=rng, dtype=dtype)
        self.stem_relu = ReLU()
        self.body = []  # ordered (name, layer)
        ch = base_ch
        for g in range(c.groups):
            w_g = c.width * (2 ** g)
            for b in range(c.blocks_per_group):
                self.body.append((
                    f"groups.{g}.msap.{b}",
                    MsapBlock(ch, ch, c.scales, w_g, mode=c.msap_mode,
                              rng=rng, dtype=dtype, **eca)))
                if c.denoise == "drsn":
                    self.body.append((
                        f"groups.{g}.dm.{b}",
                        DmBlock(ch, ch, stride=1, denoise=True,
                                rng=rng, dtype=dtype, **eca)))
            if g < c.groups - 1:
                self.body.append((
                    f"transitions.{g}",
                    DmBlock(ch, 2 * ch, stride=2,
                            denoise=(c.denoise != "no-denoise"),
                            rng=rng, dtype=dtype, **eca)))
                ch *= 2
        if c.denoise == "drsn-m":
            self.body.append((
                "final_dm", DmBlock(ch, ch, stride=1, denoise=True,
                                    rng=rng, dtype=dtype, **eca)))
        self.pool = GlobalAvgPool()
        self.classifier = Linear(ch, c.num_classes, rng=rng, dtype=dtype)
        self.out_channels = ch

    # -- inference / training ------------------------------------------

    def forward(self, x):
        c = self.config
        if x.ndim != 3 or x.shape[1] != c.in_channels or x.shape[2] != c.window_len:
            raise ShapeError(
                f"model expects input (batch, {c.in_channels}, {c.window_len}), "
                f"got {x.shape}")
        h = self.stem_relu.forward(self.stem.forward(x))
        for _, layer in self.body:
            h = layer.forward(h)
        h = self.pool.forward(h)
        self._pooled_shape = h.shape
        return self.classifier.forward(h[:, :, 0])

    def backward(self, g_logits):
        g = self.classifier.backward(g_logits)[:, :, None]
        g = self.pool.backward(g)
        for _, layer in reversed(self.body):
            g = layer.backward(g)
        return self.stem.backward(self.stem_relu.backward(g))

    def predict(self, x):
        """Class ids; argmax ties resolve to the lowest index."""
        return np.argmax(self.forward(x), axis=1)

    # -- introspection -------------------------------------------------

    def parameters(self):
        out = [("stem." + n, p) for n, p in self.stem.parameters()]
        for name, layer in self.body:
            out += [(f"{name}.{n}", p) for n, p in layer.parameters()]
        out += [("classifier." + n, p) for n, p in self.classifier.parameters()]
        return out

    def zero_grad(self):
        for _, p in self.parameters():
            p.grad[...] = 0

    def branch_signature(self):
        sig = self.stem_relu.branch_signature()
        for _, layer in self.body:
            sig += layer.branch_signature()
        return sig

    def param_count(self):
        return sum(p.value.size for _, p in self.parameters())

    def num_eca_instances(self):
        n = 0
        for _, layer in self.body:
            if isinstance(layer, MsapBlock):
                n += len(layer.scale_attn)
            elif isinstance(layer, DmBlock) and layer.gate is not None:
                n += 1
        return n

    def num_dm_instances(self):
        return sum(1 for _, layer in self.body
                   if isinstance(layer, DmBlock) and layer.denoise)


def build(config, dtype=np.float32):
    return Model(config, dtype=dtype)


def param_count(model):
    return model.param_count()


def save_weights(model, path):
    if model.dtype != np.float32:
        raise ValueError("only float32 models are serializable")
    meta = {"kind": "weights", "config": model.config.to_dict()}
    write_container(path, meta, [(n, p.value) for n, p in model.parameters()])


def load_weights(path):
    meta, tensors = read_container(path)
    if meta.get("kind") != "weights":
        raise ManifestMismatchError(
            f"{path}: container kind {meta.get('kind')!r} is not 'weights'")
    model = Model(ModelConfig.from_dict(meta["config"]))
    for name, p in model.parameters():
        if name not in tensors:
            raise ManifestMismatchError(f"{path}: missing tensor {name}")
        if tensors[name].shape != p.value.shape:
            raise ManifestMismatchError(
                f"{path}: tensor {name} has shape {tensors[name].shape}, "
                f"expected {p.value.shape}")
        p.value[...] = tensors[name]
    return model
