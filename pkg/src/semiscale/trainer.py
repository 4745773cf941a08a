"""Dice metrics, the decoupled-weight-decay Adam optimiser and the training loop."""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .layers import ScaleSpace, clamp_condition
from .network import Network, NetworkConfig, OptimizerConfig, build_network

__all__ = [
    "dice_coefficient",
    "soft_dice_loss",
    "learning_rate",
    "AdamState",
    "adam_decoupled_step",
    "TrainState",
    "train",
    "evaluate",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_MAGIC",
]

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"SEMISCALE-CKPT\x01\n"


def dice_coefficient(prediction, target, threshold: float = 0.5) -> float:
    """``2 |P & T| / (|P| + |T|)`` of the thresholded prediction; 1 if both are empty."""
    p = np.asarray(prediction)
    t = np.asarray(target)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {t.shape}")
    pb = p >= threshold
    tb = t >= 0.5
    denom = pb.sum() + tb.sum()
    if denom == 0:
        return 1.0
    return float(2.0 * np.logical_and(pb, tb).sum() / denom)


def soft_dice_loss(prediction, target, eps: float = 1.0):
    """``1 - (2 sum p t + eps) / (sum p + sum t + eps)`` and its gradient in ``p``."""
    p = np.asarray(prediction, dtype=float)
    t = np.asarray(target, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {t.shape}")
    inter = 2.0 * np.sum(p * t) + eps
    denom = np.sum(p) + np.sum(t) + eps
    loss = 1.0 - inter / denom
    grad = -(2.0 * t * denom - inter) / denom**2
    return float(loss), grad


def learning_rate(opt: OptimizerConfig, batch: int) -> float:
    """Linear decay from ``lr_init`` to ``lr_final`` over ``warmdown_batches``, then constant."""
    if opt.warmdown_batches <= 0 or batch >= opt.warmdown_batches:
        return opt.lr_final
    frac = batch / opt.warmdown_batches
    return opt.lr_init + frac * (opt.lr_final - opt.lr_init)


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0


def adam_decoupled_step(params: dict, grads: dict, state: AdamState, lr: float, betas=(0.9, 0.999),
                        eps: float = 1e-8, weight_decay: float = 0.0) -> AdamState:
    """One in-place Adam update with weight decay applied separately to the parameters.

    ``p <- p (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps)``.
    """
    b1, b2 = betas
    state.step += 1
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for name, p in params.items():
        g = grads[name]
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        if weight_decay:
            p *= 1.0 - lr * weight_decay
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return state


@dataclass
class TrainState:
    network: Network
    adam: AdamState = field(default_factory=AdamState)
    batch: int = 0
    best_dice: float = -1.0
    best_batch: int = 0
    best_params: dict | None = None
    losses: list = field(default_factory=list)
    log_rows: list = field(default_factory=list)
    stopped: str = ""

    def log_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["batch", "lr", "train_loss", "test_dice"])
        for row in self.log_rows:
            w.writerow([row[0], f"{row[1]:.6g}", f"{row[2]:.6f}", f"{row[3]:.6f}"])
        return buf.getvalue()


def _as_input(images):
    x = np.asarray(images, dtype=float)
    return x[:, None] if x.ndim == 3 else x


def evaluate(network: Network, images, masks, batch_size: int = 32) -> float:
    """Dice over the whole set (pixels pooled) at threshold 0.5."""
    pred = network.predict(_as_input(images), batch_size=batch_size)
    return dice_coefficient(pred[:, 0], np.asarray(masks))


def train(config: NetworkConfig, dataset, test_set, max_batches=None, patience=None, eval_every=None,
          network: Network | None = None, time_limit=None, log_path=None, target_dice=None) -> TrainState:
    """Train a PDE-CNN with soft Dice loss.

    ``dataset`` and ``test_set`` are ``(images, masks)`` pairs.  Batches of
    ``config.batch_size`` are drawn with replacement from a generator
    seeded by ``config.seed``.  Test Dice is evaluated every
    ``eval_every`` batches (and after the last one); the best parameters
    are kept and training stops after ``patience`` batches without
    improvement, at ``max_batches``, when ``time_limit`` seconds pass or
    once an evaluation reaches ``target_dice``.
    """
    images, masks = dataset
    x_all = _as_input(images)
    y_all = np.asarray(masks, dtype=float)
    if len(x_all) == 0:
        raise ValueError("empty training set")
    if len(x_all) != len(y_all):
        raise ValueError("images and masks differ in length")
    max_batches = config.max_batches if max_batches is None else max_batches
    patience = config.patience if patience is None else patience
    eval_every = config.eval_every if eval_every is None else eval_every
    net = build_network(config) if network is None else network
    state = TrainState(net)
    opt = config.optimizer
    rng = np.random.default_rng(config.seed + 1)
    params = dict(net.named_parameters())
    metric_keys = [f"{name}.H" for name, sub in net.blocks if isinstance(sub, ScaleSpace)]
    t0 = time.perf_counter()

    def do_eval():
        dice = evaluate(net, *test_set)
        lr_now = learning_rate(opt, max(state.batch - 1, 0))
        recent = float(np.mean(state.losses[-eval_every:])) if state.losses else float("nan")
        state.log_rows.append((state.batch, lr_now, recent, dice))
        if dice > state.best_dice:
            state.best_dice, state.best_batch = dice, state.batch
            state.best_params = net.state_dict()
        log.info("batch %d loss %.4f test dice %.4f", state.batch, recent, dice)

    while state.batch < max_batches:
        idx = rng.integers(0, len(x_all), size=config.batch_size)
        pred = net.forward(x_all[idx], training=True)
        loss, g = soft_dice_loss(pred[:, 0], y_all[idx])
        net.backward(g[:, None])
        grads = dict(net.named_gradients())
        lr = learning_rate(opt, state.batch)
        adam_decoupled_step(params, grads, state.adam, lr, opt.betas, opt.eps, opt.weight_decay)
        for key in metric_keys:
            params[key][...] = clamp_condition(params[key])
        state.losses.append(loss)
        state.batch += 1
        if state.batch % eval_every == 0:
            do_eval()
            if target_dice is not None and state.best_dice >= target_dice:
                state.stopped = "target"
                break
            if state.batch - state.best_batch >= patience:
                state.stopped = "patience"
                break
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            state.stopped = "time"
            break
    if not state.log_rows or state.log_rows[-1][0] != state.batch:
        do_eval()
    state.stopped = state.stopped or "max_batches"
    if log_path is not None:
        with open(log_path, "w", newline="") as fh:
            fh.write(state.log_csv())
    return state


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(path, state: TrainState, use_best: bool = True):
    """Magic header followed by an ``npz`` payload of parameters, buffers and metadata."""
    net = state.network
    weights = state.best_params if (use_best and state.best_params is not None) else net.state_dict()
    payload = {f"w:{k}": v for k, v in weights.items()}
    payload["meta:config"] = np.frombuffer(net.config.to_json().encode(), dtype=np.uint8)
    payload["meta:scalars"] = np.array([state.batch, state.best_dice, state.best_batch], dtype=float)
    payload["meta:losses"] = np.asarray(state.losses, dtype=float)
    buf = io.BytesIO()
    np.savez(buf, **payload)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(buf.getvalue())


def load_checkpoint(path) -> TrainState:
    with open(path, "rb") as fh:
        head = fh.read(len(CHECKPOINT_MAGIC))
        if head != CHECKPOINT_MAGIC:
            raise ValueError(f"{path} is not a checkpoint (bad header)")
        data = np.load(io.BytesIO(fh.read()))
    config = NetworkConfig.from_dict(json.loads(bytes(data["meta:config"]).decode()))
    net = build_network(config)
    weights = {k[2:]: data[k] for k in data.files if k.startswith("w:")}
    net.load_state_dict(weights)
    batch, best, best_batch = data["meta:scalars"]
    return TrainState(net, batch=int(batch), best_dice=float(best), best_batch=int(best_batch),
                      best_params=weights, losses=list(data["meta:losses"]))
