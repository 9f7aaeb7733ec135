"""Experiment configuration.

A config is a tree of small dataclasses with a single canonical JSON form
(sorted keys, two-space indent). Files may omit any key; missing keys take
the defaults below and unknown keys are rejected.
"""

import json
import re
from dataclasses import asdict, dataclass, field, fields, replace
from typing import List, Optional, Union

from ..balance import scheme_name
from ..errors import ConfigurationError
from ..loss import BOUNDARY_MODES, FORMULATIONS
from ..problems import make_problem

ANSATZ_PATTERN = re.compile(r"^(bubble|sin(\d+))$")
OPTIMIZERS = {"adam": "adam", "lbfgs": "lbfgs", "adam+lbfgs": "adam_then_lbfgs"}
SCHEMES = {"gauss": "gauss", "mc": "monte_carlo", "monte_carlo": "monte_carlo"}


@dataclass(frozen=True)
class RFFSettings:
    m: int = 64
    sigma: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class NetworkSettings:
    depth: int = 4
    width: int = 35
    activation: str = "sine"
    rff: Optional[RFFSettings] = None
    ansatz: Optional[str] = None  # bubble | sin<k>


@dataclass(frozen=True)
class SamplerSettings:
    """``n_G`` fixes the Gauss rule; Monte-Carlo runs draw ``interior`` and
    ``boundary`` points (defaulting to the Gauss counts) and still use the
    ``n_G`` rule for error indicators."""

    scheme: str = "gauss"
    n_G: int = 64
    interior: Optional[int] = None
    boundary: Optional[int] = None
    seed: int = 0


@dataclass(frozen=True)
class LossSettings:
    formulation: str = "ritz"
    boundary: str = "augmented"
    w_I: Union[float, str] = 1.0  # "auto": 1 / int|f| for p-Laplace problems
    w_B: float = 1.0
    w_C: float = 1.0
    p: float = 2.0


@dataclass(frozen=True)
class OptimizerSettings:
    kind: str = "adam"
    lr: float = 1e-3
    T: int = 100_000
    T_A: Optional[int] = None
    alpha: float = 1.0


@dataclass(frozen=True)
class LandscapeSettings:
    n_alpha: int = 51
    n_beta: int = 51
    range: float = 1.0
    direction_seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "ex1:k=1"
    network: NetworkSettings = field(default_factory=NetworkSettings)
    sampler: SamplerSettings = field(default_factory=SamplerSettings)
    loss: LossSettings = field(default_factory=LossSettings)
    balance: str = "constant"
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    indicator: Optional[str] = None  # EP | ER; default follows the formulation
    indicator_period: int = 100
    test_grid: Optional[int] = None  # 101 in 2D, 51 in 3D
    landscape: LandscapeSettings = field(default_factory=LandscapeSettings)

    def __post_init__(self):
        object.__setattr__(self, "seeds", [int(s) for s in self.seeds])
        validate(self)

    # -- derived settings -------------------------------------------------
    @property
    def augmented(self):
        return self.loss.boundary == "augmented" or self.balance == "augmented"

    @property
    def boundary_mode(self):
        return "augmented" if self.augmented else self.loss.boundary

    @property
    def indicator_kind(self):
        if self.indicator is not None:
            return self.indicator
        return "EP" if self.loss.formulation == "pinn" else "ER"

    def grid_resolution(self, dim):
        if self.test_grid is not None:
            return self.test_grid
        return 101 if dim == 2 else 51

    # -- serialization ----------------------------------------------------
    def to_dict(self):
        return asdict(self)

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data):
        return _build(cls, data, "config")

    @classmethod
    def loads(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    def dump(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    def with_value(self, path, value):
        """Copy with one dotted-path entry replaced, e.g. ``"loss.w_B"``."""
        data = self.to_dict()
        node = data
        keys = path.split(".")
        for key in keys[:-1]:
            if key == "rff" and key in node and node[key] is None:
                node[key] = asdict(RFFSettings())
            if not isinstance(node.get(key), dict):
                raise ConfigurationError(f"unknown config path {path!r}")
            node = node[key]
        if keys[-1] not in node:
            raise ConfigurationError(f"unknown config path {path!r}")
        node[keys[-1]] = value
        return ExperimentConfig.from_dict(data)


_NESTED = {"network": NetworkSettings, "sampler": SamplerSettings, "loss": LossSettings,
           "optimizer": OptimizerSettings, "landscape": LandscapeSettings}


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{where} must be a mapping")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigurationError(f"unknown keys in {where}: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if cls is ExperimentConfig and key in _NESTED:
            value = _build(_NESTED[key], value, key)
        elif cls is NetworkSettings and key == "rff" and value is not None:
            value = _build(RFFSettings, value, "network.rff")
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"bad {where}: {exc}") from exc


def _positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigurationError(f"{name} must be a positive integer")


def validate(cfg):
    """Referential and range checks across the whole config."""
    problem = make_problem(cfg.problem)
    net, smp, loss, opt = cfg.network, cfg.sampler, cfg.loss, cfg.optimizer
    _positive_int(net.depth, "network.depth")
    _positive_int(net.width, "network.width")
    if net.activation not in ("sine", "tanh"):
        raise ConfigurationError(f"unknown activation {net.activation!r}")
    if net.ansatz is not None and not ANSATZ_PATTERN.match(net.ansatz):
        raise ConfigurationError(f"unknown ansatz {net.ansatz!r} (bubble or sin<k>)")
    if smp.scheme not in SCHEMES:
        raise ConfigurationError(f"unknown sampling scheme {smp.scheme!r}")
    _positive_int(smp.n_G, "sampler.n_G")
    for name in ("interior", "boundary"):
        if getattr(smp, name) is not None:
            _positive_int(getattr(smp, name), f"sampler.{name}")
    if loss.formulation not in FORMULATIONS:
        raise ConfigurationError(f"unknown formulation {loss.formulation!r}")
    if loss.boundary not in BOUNDARY_MODES:
        raise ConfigurationError(f"unknown boundary mode {loss.boundary!r}")
    if isinstance(loss.w_I, str) and loss.w_I != "auto":
        raise ConfigurationError("loss.w_I must be a number or 'auto'")
    balance = scheme_name(cfg.balance)
    if loss.boundary == "hard":
        if net.ansatz is None:
            raise ConfigurationError("hard boundary mode needs network.ansatz")
        if balance != "constant":
            raise ConfigurationError("balancing needs a boundary term; use a soft or augmented mode")
    if balance == "self_adaptive" and loss.boundary == "augmented":
        raise ConfigurationError("self-adaptive weights apply to the soft boundary penalty")
    if opt.kind not in OPTIMIZERS:
        raise ConfigurationError(f"unknown optimizer {opt.kind!r}")
    if isinstance(opt.T, bool) or not isinstance(opt.T, int) or opt.T < 0:
        raise ConfigurationError("optimizer.T must be a nonnegative integer")
    if opt.kind == "adam+lbfgs" and not (opt.T_A is not None and 0 < opt.T_A < opt.T):
        raise ConfigurationError("adam+lbfgs needs 0 < T_A < T")
    if cfg.indicator not in (None, "EP", "ER"):
        raise ConfigurationError(f"unknown indicator {cfg.indicator!r}")
    _positive_int(cfg.indicator_period, "indicator_period")
    if cfg.test_grid is not None and (not isinstance(cfg.test_grid, int) or cfg.test_grid < 2):
        raise ConfigurationError("test_grid must be an integer >= 2")
    if not cfg.seeds:
        raise ConfigurationError("at least one seed is required")
    if len(set(cfg.seeds)) != len(cfg.seeds):
        raise ConfigurationError("seeds must be distinct")
    if problem.kind == "eigen" and loss.formulation == "pinn" and cfg.indicator == "EP":
        raise ConfigurationError("eigenvalue runs have no residual indicator")
    _positive_int(cfg.landscape.n_alpha, "landscape.n_alpha")
    _positive_int(cfg.landscape.n_beta, "landscape.n_beta")


# -- sweep axes ------------------------------------------------------------------

AXIS_ALIASES = {
    "wB": "loss.w_B", "wI": "loss.w_I", "wC": "loss.w_C", "p": "loss.p",
    "formulation": "loss.formulation", "boundary": "loss.boundary",
    "nG": "sampler.n_G", "scheme": "sampler.scheme",
    "width": "network.width", "depth": "network.depth",
    "activation": "network.activation", "ansatz": "network.ansatz",
    "rff_m": "network.rff.m", "rff_sigma": "network.rff.sigma",
    "optimizer": "optimizer.kind", "lr": "optimizer.lr",
    "T": "optimizer.T", "T_A": "optimizer.T_A",
    "balance": "balance", "problem": "problem",
}


def _scalar(text):
    text = text.strip()
    if text.lower() in ("none", "null"):
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_axis(text):
    """``"wB=1,10,100"`` to ``("wB", "loss.w_B", [1, 10, 100])``."""
    name, sep, values = text.partition("=")
    name = name.strip()
    if not sep or not name or not values.strip():
        raise ConfigurationError(f"axis must look like name=v1,v2,...: {text!r}")
    path = AXIS_ALIASES.get(name, name)
    parsed = [_scalar(v) for v in values.split(",")]
    if len(set(map(repr, parsed))) != len(parsed):
        raise ConfigurationError(f"repeated value on axis {name!r}")
    return name, path, parsed


def apply_overrides(cfg, settings):
    """Apply ``[(path, value), ...]`` in order; ``balance=augmented`` implies the augmented mode."""
    for path, value in settings:
        cfg = cfg.with_value(path, value)
    return cfg


def with_seeds(cfg, seeds):
    return replace(cfg, seeds=list(seeds))


def with_epochs(cfg, T):
    opt = cfg.optimizer
    T_A = opt.T_A
    if opt.kind == "adam+lbfgs" and T_A is not None and T_A >= T:
        raise ConfigurationError("epoch override leaves no L-BFGS phase")
    return replace(cfg, optimizer=replace(opt, T=int(T)))
