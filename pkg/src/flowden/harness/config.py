"""Run and grid configuration, persisted as canonical JSON with every field explicit."""
from __future__ import annotations

import itertools
import json
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..data.fourier import FourierManifoldSpec, ModeSet, make_fourier_dataset, sample_fourier_images
from ..data.io import read_dataset
from ..data.synthetic import sample_gaussian_data, sample_mixture2d
from ..errors import ConfigError
from ..models import ModelSpec
from ..objectives import T_HI, T_LO, ParamClass, WeightingScheme
from ..oracle import GaussianDataSpec

OUTPUT_ROOT_ENV = "FLOWDEN_OUTPUT_ROOT"


def output_root(default="runs"):
    return os.environ.get(OUTPUT_ROOT_ENV, default)


@dataclass(frozen=True)
class DataConfig:
    """``kind`` selects which of the remaining fields matter.

    ``n_train`` of 0 means fresh samples every batch (gaussian/mixture only).
    """

    kind: str = "gaussian"
    n_train: int = 0
    n_test: int = 1000
    tau: float = 1.5
    d: int = 2
    fourier: dict = field(default_factory=lambda: FourierManifoldSpec().to_dict())
    centers: list = field(default_factory=lambda: [[-2.0, 0.0], [2.0, 0.0]])
    weights: list = field(default_factory=lambda: [0.5, 0.5])
    std: float = 0.5
    path: str = ""

    def __post_init__(self):
        if self.kind not in ("gaussian", "fourier", "mixture", "file"):
            raise ConfigError(f"unknown dataset kind {self.kind!r}")
        if self.kind == "fourier" and self.n_train < 1:
            raise ConfigError("fourier datasets need n_train >= 1")
        if self.kind == "file" and not self.path:
            raise ConfigError("file dataset needs a path")


@dataclass(frozen=True)
class RunConfig:
    data: DataConfig
    model: ModelSpec
    weighting: str = "w_vel"
    param_class: str = "c_vel"
    lr: float = 1e-3
    lr_schedule: str = "constant"
    batch_size: int = 128
    iterations: int = 1000
    t_lo: float = T_LO
    t_hi: float = T_HI
    seed: int = 0
    ema_decay: float = 0.999
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    log_every: int = 100
    output_dir: str = ""

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigError("iterations must be nonnegative")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ConfigError(f"unknown lr schedule {self.lr_schedule!r}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if not 0.0 <= self.t_lo < self.t_hi <= 1.0:
            raise ConfigError("need 0 <= t_lo < t_hi <= 1")
        # parse eagerly so bad strings fail at construction
        WeightingScheme.parse(self.weighting)
        ParamClass.parse(self.param_class)

    @property
    def weighting_scheme(self):
        return WeightingScheme.parse(self.weighting)

    @property
    def cls(self):
        return ParamClass.parse(self.param_class)

    @property
    def name(self):
        return f"{self.model.label.replace('/', '')}_{self.weighting.replace(':', '')}_{self.param_class}_n{self.data.n_train}_s{self.seed}"

    def to_dict(self):
        d = asdict(self)
        d["model"] = self.model.to_dict()
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["data"] = DataConfig(**d["data"])
        d["model"] = ModelSpec.from_dict(d["model"])
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def lr_at(self, it):
        if self.lr_schedule == "cosine" and self.iterations > 0:
            return self.lr * 0.5 * (1.0 + np.cos(np.pi * it / self.iterations))
        return self.lr

    def replace(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class EvalConfig:
    grid: tuple = (0.1, 0.3, 0.6, 0.9, 0.95)
    n_eval: int = 1000
    eval_seed: int = 1234
    n_generate: int = 256
    sample_steps: int = 50
    sample_method: str = "euler"
    sample_seed: int = 4321
    use_ema: bool = True
    eval_train: bool = False

    def to_dict(self):
        d = asdict(self)
        d["grid"] = list(self.grid)
        return d


@dataclass(frozen=True)
class GridSpec:
    """Cross product of the listed axes on top of ``base``.

    Cells that share a model spec and seed start from bit-identical parameters.
    """

    base: RunConfig
    weightings: tuple = ("w_vel",)
    classes: tuple = ("c_vel",)
    models: tuple = ()
    n_train: tuple = ()
    seeds: tuple = (0,)
    eval: EvalConfig = EvalConfig()

    def cells(self):
        models = self.models or (self.base.model,)
        sizes = self.n_train or (self.base.data.n_train,)
        out = []
        for model, n, w, c, s in itertools.product(models, sizes, self.weightings, self.classes, self.seeds):
            data = replace(self.base.data, n_train=int(n))
            out.append(self.base.replace(model=model, data=data, weighting=w, param_class=c, seed=int(s)))
        return out

    def to_dict(self):
        return {
            "base": self.base.to_dict(),
            "weightings": list(self.weightings),
            "classes": list(self.classes),
            "models": [m.to_dict() for m in self.models],
            "n_train": list(self.n_train),
            "seeds": list(self.seeds),
            "eval": self.eval.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        ev = dict(d.get("eval", {}))
        if "grid" in ev:
            ev["grid"] = tuple(ev["grid"])
        return cls(
            base=RunConfig.from_dict(d["base"]),
            weightings=tuple(d.get("weightings", ("w_vel",))),
            classes=tuple(d.get("classes", ("c_vel",))),
            models=tuple(ModelSpec.from_dict(m) for m in d.get("models", [])),
            n_train=tuple(d.get("n_train", [])),
            seeds=tuple(d.get("seeds", (0,))),
            eval=EvalConfig(**ev),
        )


class Dataset:
    """Materialized data source for one run."""

    def __init__(self, cfg: DataConfig):
        self.cfg = cfg
        self.mode_set = None
        self.fourier = None
        self.train = None
        if cfg.kind == "gaussian":
            self.gauss = GaussianDataSpec(cfg.tau, cfg.d)
            self.shape = (cfg.d,)
            if cfg.n_train:
                self.train = sample_gaussian_data(self.gauss, cfg.n_train, np.random.default_rng([7, 0]))
            self.test = sample_gaussian_data(self.gauss, cfg.n_test, np.random.default_rng([7, 1]))
        elif cfg.kind == "mixture":
            self.shape = (len(cfg.centers[0]),)
            if cfg.n_train:
                self.train = self._mixture(cfg.n_train, np.random.default_rng([7, 0]))
            self.test = self._mixture(cfg.n_test, np.random.default_rng([7, 1]))
        elif cfg.kind == "fourier":
            self.fourier = FourierManifoldSpec.from_dict(cfg.fourier)
            self.train, self.mode_set = make_fourier_dataset(self.fourier, cfg.n_train)
            test_rng = np.random.default_rng([self.fourier.dataset_seed, 1])
            self.test = sample_fourier_images(self.fourier, self.mode_set, cfg.n_test, test_rng)
            self.shape = (self.fourier.N, self.fourier.N)
        else:
            images, header = read_dataset(cfg.path)
            self.train = images
            self.test = images
            self.shape = images.shape[1:]
            if "fourier" in header:
                self.fourier = FourierManifoldSpec.from_dict(header["fourier"])
                self.mode_set = ModeSet.from_dict(header["mode_set"])

    def _mixture(self, n, rng):
        return sample_mixture2d(self.cfg.centers, self.cfg.weights, self.cfg.std, n, rng)[0]

    def sample_batch(self, rng, b):
        if self.train is not None:
            return self.train[rng.integers(0, self.train.shape[0], size=b)]
        if self.cfg.kind == "gaussian":
            return sample_gaussian_data(self.gauss, b, rng)
        return self._mixture(b, rng)
