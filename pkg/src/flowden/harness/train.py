"""Single-run training loop."""
from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteError
from ..models import init_params, model_forward
from ..nn import ParamStore, Tape, adam_step, ema_update, load_checkpoint, save_checkpoint
from ..objectives import ParamClass, denoiser_from_output, interpolate, sample_time, unified_loss
from .config import Dataset, RunConfig

log = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.dnlb"


@dataclass
class TrainResult:
    config: RunConfig
    store: ParamStore
    log: list = field(default_factory=list)  # (iteration, loss)
    status: str = "ok"
    failure: str = ""
    failed_step: int | None = None
    data: Dataset | None = None

    @property
    def ok(self):
        return self.status == "ok"

    def params(self, use_ema=True):
        if use_ema and self.store.ema is not None:
            return self.store.ema
        return self.store.params


def initial_store(cfg: RunConfig):
    """Parameters depend only on the model spec and the seed."""
    return ParamStore(params=init_params(cfg.model, np.random.default_rng(cfg.seed)))


def train(cfg: RunConfig, data: Dataset | None = None, out_dir=None):
    """Train one model. Divergence is caught and reported in the result, never raised."""
    data = data or Dataset(cfg.data)
    store = initial_store(cfg)
    store.init_ema()
    rng = np.random.default_rng([cfg.seed, 1])
    weighting, cls = cfg.weighting_scheme, cfg.cls
    result = TrainResult(config=cfg, store=store, data=data)
    running = []

    for it in range(cfg.iterations):
        x1 = data.sample_batch(rng, cfg.batch_size)
        x0 = rng.standard_normal(x1.shape)
        t = sample_time(rng, cfg.t_lo, cfg.t_hi, size=cfg.batch_size)
        batch = interpolate(x0, x1, t)
        try:
            # overflow is expected on divergence and surfaces as NonFiniteError
            with np.errstate(over="ignore", invalid="ignore"):
                tape = Tape()
                leaves = {k: tape.watch(v) for k, v in store.params.items()}
                loss = unified_loss(batch, lambda xt, tt: model_forward(cfg.model, leaves, xt, tt), cls, weighting)
                grads = tape.backward(loss)
            tape.clear()
            adam_step(store, {k: grads[leaves[k].id] for k in leaves if leaves[k].id in grads},
                      cfg.lr_at(it), cfg.beta1, cfg.beta2, cfg.eps)
        except NonFiniteError as exc:
            result.status = "diverged"
            result.failed_step = it
            result.failure = f"step {it}: {exc}"
            log.warning("%s diverged: %s", cfg.name, result.failure)
            break
        ema_update(store, cfg.ema_decay)
        running.append(float(loss.data))
        if (it + 1) % cfg.log_every == 0 or it + 1 == cfg.iterations:
            result.log.append((it + 1, float(np.mean(running))))
            running = []

    if out_dir is not None:
        write_run(result, out_dir)
    return result


def write_run(result: TrainResult, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    meta = {"config": result.config.to_dict(), "status": result.status, "failure": result.failure}
    save_checkpoint(os.path.join(out_dir, CHECKPOINT_NAME), result.store, meta)
    with open(os.path.join(out_dir, "config.json"), "w") as f:
        f.write(result.config.to_json())
    with open(os.path.join(out_dir, "train_log.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iteration", "loss"])
        for it, loss in result.log:
            w.writerow([it, repr(loss)])


def load_run(path):
    """Checkpoint file or run directory -> ``(config, store)``."""
    if os.path.isdir(path):
        path = os.path.join(path, CHECKPOINT_NAME)
    store, meta = load_checkpoint(path)
    return RunConfig.from_dict(meta["config"]), store


def network_fn(spec, params, chunk=256):
    """Untaped ``(x, t) -> N(x, t)`` evaluated in chunks."""

    def fn(x, t):
        x = np.asarray(x, dtype=np.float64)
        tt = np.broadcast_to(np.asarray(t, dtype=np.float64), (x.shape[0],))
        outs = [model_forward(spec, params, x[s:s + chunk], tt[s:s + chunk]) for s in range(0, x.shape[0], chunk)]
        return np.concatenate(outs, axis=0)

    return fn


def denoiser_fn(spec, params, cls: ParamClass):
    net = network_fn(spec, params)

    def fn(x, t):
        tt = np.broadcast_to(np.asarray(t, dtype=np.float64), (np.shape(x)[0],))
        return np.asarray(denoiser_from_output(cls, net(x, tt), x, tt))

    return fn
