"""Architecture-scoring back-ends.

Real runs of this kind of search would train each candidate network and
profile it on hardware. Here that step is a pluggable seam with two
implementations: an analytic surrogate landscape (deterministic, with
optional hash-seeded noise) and a lookup table fed from a measured-results
file. Both are pure functions of (architecture, seed), so searches are
reproducible and evaluation order never matters.
"""

from __future__ import annotations

import hashlib
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import cost_model
from .rewards import EvaluationResult
from .search_space import AlexNetArch, Architecture, CondenseNetArch, MacroArch, arch_to_compact

LOOKUP_FIXTURE = "condensenet_table.csv"
SURROGATE_FIXTURE = "surrogate_defaults.cfg"
LOOKUP_HEADER = ("stage1", "stage2", "stage3", "growth1", "growth2", "growth3",
                 "error_pct", "energy_j")


class UnknownArchitectureError(KeyError):
    """Raised when a lookup table has no row for the requested architecture."""


class Evaluator(ABC):
    descriptor: str

    @abstractmethod
    def evaluate(self, arch: Architecture) -> EvaluationResult:
        """Score one architecture. Deterministic for a fixed evaluator."""


# ---------------------------------------------------------------------------
# Surrogate landscape


@dataclass(frozen=True)
class SurrogateConfig:
    """Constants of the analytic landscape for one space.

    Accuracy saturates with capacity, ``a_max * (1 - exp(-capacity / kappa))``;
    energy and peak power grow linearly in total and per-layer capacity.
    ``sigma`` adds hash-seeded accuracy noise, mimicking noisy validation.
    """

    space: str
    a_max: float
    kappa: float
    e0: float
    e1: float
    p0: float
    p1: float
    sigma: float = 0.0
    seed: int = 0
    capacity_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        for name in ("a_max", "kappa", "e0", "e1", "p0", "p1", "capacity_weight"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def _capacities(arch: Architecture) -> tuple[float, float, float | None]:
    """(total capacity, largest per-unit capacity, normalized MAC or None)."""
    if isinstance(arch, AlexNetArch):
        sizes = [flt * h * w for flt, h, w in arch.layers]
        return float(sum(sizes)), float(max(sizes)), None
    if isinstance(arch, CondenseNetArch):
        sizes = [s * g for s, g in zip(arch.stages, arch.growths)]
        return float(sum(sizes)), float(max(sizes)), None
    if isinstance(arch, MacroArch):
        report = cost_model.macro_mac(arch)
        shares = [mac / cost_model.max_layer_mac(layer)
                  for layer, mac in report.per_layer]
        return report.normalized, max(shares), report.normalized
    raise ValueError(f"unsupported architecture type: {type(arch).__name__}")


def _hash_noise(seed: int, arch_key: str, sigma: float) -> float:
    """Gaussian perturbation seeded by the architecture itself.

    Hashing the architecture (not the draw order) keeps results identical
    no matter when or how often an architecture is evaluated.
    """
    if sigma == 0.0:
        return 0.0
    digest = hashlib.sha256(f"{seed}|{arch_key}".encode()).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "big")))
    return float(rng.normal(0.0, sigma))


class SurrogateEvaluator(Evaluator):
    def __init__(self, config: SurrogateConfig):
        self.config = config
        self.descriptor = f"surrogate({config.space})"

    def evaluate(self, arch: Architecture) -> EvaluationResult:
        cfg = self.config
        capacity, peak_capacity, mac_norm = _capacities(arch)
        capacity *= cfg.capacity_weight
        accuracy = cfg.a_max * (1.0 - math.exp(-capacity / cfg.kappa))
        accuracy += _hash_noise(cfg.seed, arch_to_compact(arch), cfg.sigma)
        accuracy = min(max(accuracy, 0.0), 1.0)
        return EvaluationResult(
            accuracy=accuracy,
            energy_joules=cfg.e0 + cfg.e1 * capacity,
            peak_power_watts=cfg.p0 + cfg.p1 * peak_capacity,
            mac_normalized=mac_norm,
        )


def _parse_flat_config(text: str, source: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{source}, line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def load_surrogate_config(space: str, path: str | Path | None = None,
                          seed: int = 0) -> SurrogateConfig:
    """Surrogate constants for a space, from a config file or the shipped fixture.

    The file is flat key-value with keys like ``condensenet.kappa``; a
    ``version`` key tags the constant set.
    """
    if path is None:
        text = resources.files("archsearch.data").joinpath(SURROGATE_FIXTURE).read_text()
        source = SURROGATE_FIXTURE
    else:
        text = Path(path).read_text()
        source = str(path)
    values = _parse_flat_config(text, source)
    if "version" not in values:
        raise ValueError(f"{source}: missing version key")

    def get(name: str) -> float:
        key = f"{space}.{name}"
        if key not in values:
            raise ValueError(f"{source}: missing key {key}")
        return float(values[key])

    return SurrogateConfig(
        space=space, a_max=get("a_max"), kappa=get("kappa"),
        e0=get("e0"), e1=get("e1"), p0=get("p0"), p1=get("p1"),
        sigma=get("sigma"), seed=seed,
        capacity_weight=float(values.get(f"{space}.capacity_weight", "1.0")),
    )


def make_surrogate(space: str, seed: int = 0, sigma: float | None = None,
                   config_path: str | Path | None = None) -> SurrogateEvaluator:
    cfg = load_surrogate_config(space, config_path, seed=seed)
    if sigma is not None:
        cfg = replace(cfg, sigma=sigma)
    return SurrogateEvaluator(cfg)


# ---------------------------------------------------------------------------
# Lookup table


@dataclass(frozen=True)
class LookupRow:
    error_pct: float
    energy_j: float


class LookupTable:
    """Measured (error %, energy) rows keyed by condensenet architecture."""

    def __init__(self, rows: dict[CondenseNetArch, LookupRow], source: str):
        self.rows = rows
        self.source = source

    def __len__(self) -> int:
        return len(self.rows)

    def __contains__(self, arch: Architecture) -> bool:
        return arch in self.rows

    def get(self, arch: Architecture) -> LookupRow:
        if arch not in self.rows:
            raise UnknownArchitectureError(
                f"no table row for {arch_to_compact(arch)} in {self.source}")
        return self.rows[arch]


def load_lookup(path: str | Path) -> LookupTable:
    """Parse a lookup file: a header line, then one comma-separated row per
    architecture (stages, growths, error %, energy)."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file, expected a header line")
    header = tuple(tok.strip() for tok in lines[0].split(","))
    if header != LOOKUP_HEADER:
        raise ValueError(f"{path}, line 1: expected header {','.join(LOOKUP_HEADER)}")

    rows: dict[CondenseNetArch, LookupRow] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = [tok.strip() for tok in raw.split(",")]
        if len(parts) != 8:
            raise ValueError(f"{path}, line {lineno}: expected 8 fields, got {len(parts)}")
        try:
            stages = tuple(int(v) for v in parts[0:3])
            growths = tuple(int(v) for v in parts[3:6])
            row = LookupRow(error_pct=float(parts[6]), energy_j=float(parts[7]))
        except ValueError as exc:
            raise ValueError(f"{path}, line {lineno}: {exc}") from None
        if not 0.0 <= row.error_pct <= 100.0:
            raise ValueError(f"{path}, line {lineno}: error must be in [0, 100]")
        arch = CondenseNetArch(stages=stages, growths=growths)
        if arch in rows:
            raise ValueError(f"{path}, line {lineno}: duplicate architecture {parts[0:6]}")
        rows[arch] = row
    return LookupTable(rows, source=str(path))


def lookup_evaluate(table: LookupTable, arch: Architecture) -> EvaluationResult:
    """Table row as an evaluation: accuracy = 1 - error/100, energy as stored."""
    row = table.get(arch)
    return EvaluationResult(accuracy=1.0 - row.error_pct / 100.0,
                            energy_joules=row.energy_j)


class LookupEvaluator(Evaluator):
    """Table-backed evaluator, optionally falling back for unknown rows."""

    def __init__(self, table: LookupTable, fallback: Evaluator | None = None):
        self.table = table
        self.fallback = fallback
        self.descriptor = f"lookup({Path(table.source).name})"
        if fallback is not None:
            self.descriptor += f"+{fallback.descriptor}"

    def evaluate(self, arch: Architecture) -> EvaluationResult:
        try:
            return lookup_evaluate(self.table, arch)
        except UnknownArchitectureError:
            if self.fallback is None:
                raise
            return self.fallback.evaluate(arch)


def fixture_lookup_path() -> Path:
    """Path of the shipped condensenet results table."""
    return Path(str(resources.files("archsearch.data").joinpath(LOOKUP_FIXTURE)))
