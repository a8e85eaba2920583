"""Multiply-accumulate cost model for macro-space architectures.

Standard convolution costs K*K*C_in*H*W*C_out, depthwise-separable
convolution costs C_in*H*W*(K*K + C_out), pooling costs nothing. H and W
are output feature-map dimensions. All totals are exact Python integers;
only the normalized fraction is a float.
"""

from __future__ import annotations

from dataclasses import dataclass

from .search_space import MACRO_LAYERS, MACRO_OPS, MacroArch

CONV_OPS = {"conv3x3": 3, "conv5x5": 5}
SEP_CONV_OPS = {"sep_conv3x3": 3, "sep_conv5x5": 5}
POOL_OPS = ("avg_pool", "max_pool")

DEFAULT_CHANNELS = 32
DEFAULT_INPUT_SIZE = 32
INPUT_CHANNELS = 3  # RGB input feeds the first layer


@dataclass(frozen=True)
class LayerGeometry:
    op: str
    kernel: int
    c_in: int
    c_out: int
    height: int
    width: int

    def __post_init__(self) -> None:
        for name in ("kernel", "c_in", "c_out", "height", "width"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.op in POOL_OPS and self.c_in != self.c_out:
            raise ValueError("pooling keeps the channel count unchanged")


@dataclass(frozen=True)
class MacReport:
    total_mac: int
    per_layer: tuple[tuple[int, int], ...]  # (layer index, mac count)
    normalized: float  # total / most expensive architecture of the space


def conv_mac(g: LayerGeometry) -> int:
    """MACs of a standard convolution: K*K*C_in*H*W*C_out."""
    if g.op not in CONV_OPS:
        raise ValueError(f"{g.op!r} is not a standard convolution")
    return g.kernel * g.kernel * g.c_in * g.height * g.width * g.c_out


def sep_conv_mac(g: LayerGeometry) -> int:
    """MACs of a depthwise-separable convolution: C_in*H*W*(K*K + C_out)."""
    if g.op not in SEP_CONV_OPS:
        raise ValueError(f"{g.op!r} is not a separable convolution")
    return g.c_in * g.height * g.width * (g.kernel * g.kernel + g.c_out)


def layer_geometry(op: str, layer: int, channels: int = DEFAULT_CHANNELS,
                   input_size: int = DEFAULT_INPUT_SIZE) -> LayerGeometry:
    """Geometry of one macro layer.

    Layers 0..3 run at full resolution, 4..7 at half, 8..11 at quarter
    (stride-2 reductions at layers 4 and 8, same padding otherwise). The
    first layer reads the image, later layers the constant body width.
    """
    if not 0 <= layer < MACRO_LAYERS:
        raise ValueError(f"layer must be in 0..{MACRO_LAYERS - 1}")
    size = input_size >> (layer // 4)
    c_in = INPUT_CHANNELS if layer == 0 else channels
    if op in POOL_OPS:
        # pooling cannot change the channel count
        return LayerGeometry(op=op, kernel=1, c_in=c_in, c_out=c_in,
                             height=size, width=size)
    kernel = CONV_OPS.get(op) or SEP_CONV_OPS.get(op)
    if kernel is None:
        raise ValueError(f"unknown operation {op!r}")
    return LayerGeometry(op=op, kernel=kernel, c_in=c_in, c_out=channels,
                         height=size, width=size)


def op_mac(op: str, layer: int, channels: int = DEFAULT_CHANNELS,
           input_size: int = DEFAULT_INPUT_SIZE) -> int:
    """MACs of one operation placed at one macro layer; pooling is free."""
    g = layer_geometry(op, layer, channels, input_size)
    if op in CONV_OPS:
        return conv_mac(g)
    if op in SEP_CONV_OPS:
        return sep_conv_mac(g)
    return 0


def max_layer_mac(layer: int, channels: int = DEFAULT_CHANNELS,
                  input_size: int = DEFAULT_INPUT_SIZE) -> int:
    """Cost of the most expensive op available at this layer."""
    return max(op_mac(op, layer, channels, input_size) for op in MACRO_OPS)


def max_space_mac(channels: int = DEFAULT_CHANNELS,
                  input_size: int = DEFAULT_INPUT_SIZE) -> int:
    """Total MACs when every layer picks its most expensive op."""
    return sum(max_layer_mac(layer, channels, input_size)
               for layer in range(MACRO_LAYERS))


def macro_mac(arch: MacroArch, channels: int = DEFAULT_CHANNELS,
              input_size: int = DEFAULT_INPUT_SIZE) -> MacReport:
    """Per-layer and total MACs of a macro architecture.

    Skip connections and the final classifier are not counted. The
    normalized figure divides by the cost of the all-most-expensive-op
    architecture, so it lies in [0, 1] across the whole space.
    """
    per_layer = tuple(
        (layer, op_mac(op, layer, channels, input_size))
        for layer, op in enumerate(arch.ops))
    total = sum(mac for _, mac in per_layer)
    return MacReport(total_mac=total, per_layer=per_layer,
                     normalized=total / max_space_mac(channels, input_size))
