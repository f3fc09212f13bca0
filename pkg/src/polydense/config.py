"""Experiment configuration: a TOML file mapped onto nested dataclasses."""

from dataclasses import asdict, dataclass, field, fields, is_dataclass
from typing import get_type_hints

import tomli
import tomli_w

from .errors import ConfigError
from .fleet import FLEET

EXPERIMENTS = ("conjugate", "kernel", "approx", "flt", "seq")
WEIGHT_KINDS = ("power", "log_penalty")


@dataclass
class WeightConfig:
    kind: str = "power"
    a: float = 2.0
    coeff: float = 1.0

    def as_spec(self):
        if self.kind == "power":
            return {"kind": "power", "a": self.a}
        return {"kind": self.kind, "a": self.a, "coeff": self.coeff}


@dataclass
class GridConfig:
    radius: float = 5.0
    points_per_axis: int = 2048


@dataclass
class ConjugateConfig:
    functions: list = field(default_factory=lambda: ["square", "exp", "ylog", "pow15"])
    x_min: float = 0.1
    x_max: float = 20.0
    points: int = 200
    oracle_points: int = 50
    step: float = 1e-4


@dataclass
class KernelConfig:
    dims: list = field(default_factory=lambda: [1, 2])
    n_max: int = 20
    samples: int = 10000
    radius: float = 5.0
    ch_order: int = 4
    grid_points: int = 100000


@dataclass
class ApproxConfig:
    f: str = "bump"
    stage1_f: str = "cosh"
    nus: list = field(default_factory=lambda: [1, 2, 3, 4, 5, 6, 7, 8])
    nu: float = 2.0
    lambdas: list = field(default_factory=lambda: [10.0, 100.0, 1000.0])
    lam: float = 2.0
    n_min: int = 0
    n_max: int = 30
    eps: float = 0.6
    pipeline_nmax: int = 80


@dataclass
class FltConfig:
    R: float = 8.0
    Y: float = 8.0
    points: int = 201
    m_values: list = field(default_factory=lambda: [0, 1, 2])
    functionals: list = field(default_factory=lambda: [
        [[1.0, 0, 0.0]],
        [[1.0, 1, 0.0]],
        [[1.0, 0, 1.0], [1.0, 0, -1.0]],
    ])


@dataclass
class SeqConfig:
    kind: str = "geometric"
    depth: int = 3
    functions: list = field(default_factory=lambda: ["gaussian", "sin_gaussian", "bump"])


@dataclass
class ExperimentConfig:
    experiments: list = field(default_factory=lambda: list(EXPERIMENTS))
    output_dir: str = "out"
    seed: int = 0
    dim: int = 1
    m: int = 1
    p: int = 1
    record_timings: bool = False
    weight: WeightConfig = field(default_factory=WeightConfig)
    functions: list = field(default_factory=lambda: ["gaussian", "cosh", "sin_gaussian", "bump", "polynomial"])
    grid: GridConfig = field(default_factory=GridConfig)
    conjugate: ConjugateConfig = field(default_factory=ConjugateConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    approx: ApproxConfig = field(default_factory=ApproxConfig)
    flt: FltConfig = field(default_factory=FltConfig)
    seq: SeqConfig = field(default_factory=SeqConfig)

    def to_dict(self):
        return asdict(self)

    def dumps(self):
        return tomli_w.dumps(self.to_dict())


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a table")
    hints = get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown key '{where}'")
    kwargs = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        where = f"{path}.{f.name}" if path else f.name
        val = data[f.name]
        typ = hints[f.name]
        if is_dataclass(typ):
            kwargs[f.name] = _build(typ, val, where)
        elif typ is bool:
            if not isinstance(val, bool):
                raise ConfigError(f"'{where}' must be a boolean")
            kwargs[f.name] = val
        elif typ is int:
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigError(f"'{where}' must be an integer")
            kwargs[f.name] = val
        elif typ is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"'{where}' must be a number")
            kwargs[f.name] = float(val)
        elif typ is str:
            if not isinstance(val, str):
                raise ConfigError(f"'{where}' must be a string")
            kwargs[f.name] = val
        elif typ is list:
            if not isinstance(val, list):
                raise ConfigError(f"'{where}' must be an array")
            kwargs[f.name] = val
        else:
            kwargs[f.name] = val
    return cls(**kwargs)


def validate(cfg):
    """Range and name checks; raises ConfigError naming the offending key."""
    for e in cfg.experiments:
        if e not in EXPERIMENTS:
            raise ConfigError(f"'experiments': unknown experiment {e!r}")
    if cfg.weight.kind not in WEIGHT_KINDS:
        raise ConfigError(f"'weight.kind': unknown weight family {cfg.weight.kind!r}")
    if cfg.weight.a <= 1:
        raise ConfigError("'weight.a' must exceed 1")
    if cfg.dim not in (1, 2):
        raise ConfigError("'dim' must be 1 or 2")
    if not 0 <= cfg.p <= 4 or not 1 <= cfg.m <= 4:
        raise ConfigError("'m' must lie in 1..4 and 'p' in 0..4")
    for key, names in (("functions", cfg.functions), ("seq.functions", cfg.seq.functions)):
        for name in names:
            if name not in FLEET:
                raise ConfigError(f"'{key}': unknown fleet function {name!r}")
    for key, name in (("approx.f", cfg.approx.f), ("approx.stage1_f", cfg.approx.stage1_f)):
        if name not in FLEET:
            raise ConfigError(f"'{key}': unknown fleet function {name!r}")
    if cfg.grid.radius <= 0:
        raise ConfigError("'grid.radius' must be positive")
    if cfg.grid.points_per_axis < 3:
        raise ConfigError("'grid.points_per_axis' must be at least 3")
    if not 0 < cfg.conjugate.x_min < cfg.conjugate.x_max:
        raise ConfigError("'conjugate.x_min' and 'conjugate.x_max' must satisfy 0 < x_min < x_max")
    if cfg.kernel.ch_order > 8:
        raise ConfigError("'kernel.ch_order' must not exceed 8")
    if any(lam <= 1 for lam in cfg.approx.lambdas) or cfg.approx.lam <= 1:
        raise ConfigError("'approx.lambdas' and 'approx.lam' must exceed 1")
    if cfg.approx.eps <= 0:
        raise ConfigError("'approx.eps' must be positive")
    if not 0 <= cfg.approx.n_min <= cfg.approx.n_max:
        raise ConfigError("'approx.n_min' must not exceed 'approx.n_max'")
    if cfg.seq.kind not in ("geometric", "power"):
        raise ConfigError(f"'seq.kind': unknown sequence weights {cfg.seq.kind!r}")
    for i, fl in enumerate(cfg.flt.functionals):
        for t in fl:
            if not (isinstance(t, list) and len(t) == 3 and isinstance(t[1], int) and t[1] >= 0):
                raise ConfigError(f"'flt.functionals[{i}]': terms must be [c, k, a] with integer k >= 0")
    return cfg


def from_dict(data):
    return validate(_build(ExperimentConfig, data, ""))


def loads(text):
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from None
    return from_dict(data)


def load(path):
    with open(path, "rb") as fh:
        try:
            data = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: TOML parse error: {exc}") from None
    return from_dict(data)
