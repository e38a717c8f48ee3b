"""Model configuration and the default per-layer filter schedule."""

from dataclasses import asdict, dataclass, field
from typing import NamedTuple

from teanet.errors import ConfigError

VARIANTS = ("full", "te_only", "conv_only", "te_no_tcb", "te_no_autoencoder")
BLOCKS = ("tcb", "cb1", "cb2", "cb3", "cb4")
MIN_TEA_LAYERS, MAX_TEA_LAYERS = 2, 7


class FilterTriple(NamedTuple):
    """Filter counts of one convolutional block.

    ``pointwise`` feeds the k=1 path, ``expand`` the k=9 layer of the
    expand-and-squeeze path and ``squeeze`` the k=3 layer of the
    squeeze-and-expand path.  The second layer of each two-layer path mirrors
    the pointwise width (squeeze output) or the expand width (expand output).
    """

    pointwise: int
    expand: int
    squeeze: int

    @property
    def squeeze_out(self):
        return self.pointwise

    @property
    def expand_out(self):
        return self.expand

    @property
    def out_channels(self):
        return self.pointwise + self.squeeze_out + self.expand_out

    def scaled(self, divisor):
        return FilterTriple(*(scale_width(v, divisor) for v in self))


def scale_width(filters, divisor):
    return max(1, round(filters / divisor))


def _row(*values):
    return tuple(FilterTriple(*values[i:i + 3]) for i in range(0, 15, 3))


# One row per TEA layer; columns are TCB, CB1, CB2, CB3, CB4.
DEFAULT_SCHEDULE = (
    _row(64, 64, 16, 16, 32, 64, 16, 32, 32, 16, 32, 96, 16, 96, 96),
    _row(32, 32, 16, 16, 32, 64, 16, 96, 96, 16, 96, 96, 16, 64, 64),
    _row(64, 64, 32, 16, 32, 64, 16, 96, 96, 16, 16, 32, 16, 64, 64),
    _row(64, 64, 16, 16, 32, 96, 16, 16, 32, 16, 32, 64, 16, 96, 96),
    _row(64, 64, 96, 64, 16, 16, 16, 32, 32, 16, 64, 64, 64, 96, 96),
    _row(64, 64, 96, 64, 16, 16, 16, 32, 32, 16, 64, 64, 64, 96, 96),
    _row(64, 64, 96, 64, 16, 16, 16, 32, 32, 16, 64, 64, 64, 96, 96),
)


def parse_schedule(rows):
    """Turn rows of 15 integers (or of five triples) into a schedule tuple."""
    out = []
    for i, row in enumerate(rows):
        flat = []
        for v in row:
            flat.extend(v if isinstance(v, (list, tuple)) else [v])
        if len(flat) != 15:
            raise ConfigError(f"schedule row {i + 1} needs 15 filter counts, got {len(flat)}")
        if any(not isinstance(v, int) or isinstance(v, bool) or v <= 0 for v in flat):
            raise ConfigError(f"schedule row {i + 1} must hold positive integers")
        out.append(_row(*flat))
    return tuple(out)


@dataclass
class TeanetConfig:
    tea_layers: int = 3
    variant: str = "full"
    dropout: float = 0.3
    seed: int = 0
    width_divisor: int = 1
    bn_momentum: float = 0.99
    bn_eps: float = 1e-3
    schedule: tuple = field(default=DEFAULT_SCHEDULE, repr=False)

    def __post_init__(self):
        if not isinstance(self.tea_layers, int) or not (
                MIN_TEA_LAYERS <= self.tea_layers <= MAX_TEA_LAYERS):
            raise ConfigError(
                f"tea_layers must be in [{MIN_TEA_LAYERS}, {MAX_TEA_LAYERS}], got {self.tea_layers}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if not isinstance(self.width_divisor, int) or self.width_divisor < 1:
            raise ConfigError(f"width_divisor must be a positive integer, got {self.width_divisor}")
        if not isinstance(self.schedule, tuple) or not all(
                isinstance(r, tuple) and len(r) == 5 for r in self.schedule):
            self.schedule = parse_schedule(self.schedule)
        if len(self.schedule) < self.tea_layers:
            raise ConfigError(
                f"schedule has {len(self.schedule)} rows but tea_layers={self.tea_layers}")

    def width(self, filters):
        return scale_width(filters, self.width_divisor)

    def triple(self, layer_index, block):
        """Scaled filter triple for ``block`` of TEA layer ``layer_index`` (1-based)."""
        return self.schedule[layer_index - 1][BLOCKS.index(block)].scaled(self.width_divisor)

    def to_dict(self):
        d = asdict(self)
        d["schedule"] = [[v for t in row for v in t] for row in self.schedule]
        return d

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        data = dict(data)
        if "schedule" in data:
            data["schedule"] = parse_schedule(data["schedule"])
        return cls(**data)
