"""Training loop and evaluation for the synthetic routing task."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteError, TrainingError
from ..numerics import Tape, leaves, map_leaves, track
from . import model
from .config import RunConfig
from .data import QUERY_TYPES, make_dataset

log = logging.getLogger(__name__)


class Optimizer:
    """AdamW or plain gradient descent, both with decoupled weight decay."""

    def __init__(self, cfg, total_steps: int):
        self.cfg = cfg
        self.total_steps = max(1, total_steps)
        self.step_count = 0
        self.m = {}
        self.v = {}

    def rate(self) -> float:
        c = self.cfg
        if c.schedule == "constant":
            return c.lr
        frac = min(1.0, self.step_count / self.total_steps)
        return c.lr_min + 0.5 * (c.lr - c.lr_min) * (1.0 + math.cos(math.pi * frac))

    def step(self, params, grads: dict):
        c = self.cfg
        lr = self.rate()
        self.step_count += 1
        t = self.step_count

        def update(path, w):
            g = grads[path]
            if c.name == "gd":
                delta = g
            else:
                m = self.m.get(path, 0.0) * c.beta1 + (1 - c.beta1) * g
                v = self.v.get(path, 0.0) * c.beta2 + (1 - c.beta2) * g * g
                self.m[path], self.v[path] = m, v
                delta = (m / (1 - c.beta1 ** t)) / (np.sqrt(v / (1 - c.beta2 ** t)) + c.eps)
            return w - lr * (delta + c.weight_decay * w)

        return map_leaves(update, params)


@dataclass
class Evaluation:
    accuracy: float
    gate_by_query_type: dict = field(default_factory=dict)


@dataclass
class TrainReport:
    losses: list
    accuracy: float
    masked_accuracy: float
    gate_by_query_type: dict
    relevant_gate: dict
    abstract_rows: int | None
    config: dict

    @property
    def accuracy_drop(self) -> float:
        return self.accuracy - self.masked_accuracy

    def to_dict(self):
        return {
            "losses": [float(x) for x in self.losses],
            "accuracy": self.accuracy,
            "masked_accuracy": self.masked_accuracy,
            "accuracy_drop": self.accuracy_drop,
            "gate_by_query_type": self.gate_by_query_type,
            "relevant_gate": self.relevant_gate,
            "abstract_rows": self.abstract_rows,
            "config": self.config,
        }


def batch_gradients(params, batch, config: RunConfig):
    """Mean loss and mean gradients over a batch, one tape per sample."""
    total = {path: np.zeros_like(v) for path, v in leaves(params).items()}
    loss_sum = 0.0
    for sample in batch:
        tape = Tape()
        tracked = track(tape, params)
        out = model.loss(tracked, sample, config)
        tape.backward(out)
        loss_sum += float(out.value)
        for path, node in leaves(tracked).items():
            total[path] += tape.grad(node)
    n = len(batch)
    return loss_sum / n, {k: g / n for k, g in total.items()}


def evaluate(params, samples, config: RunConfig, mask_relevant: bool = False) -> Evaluation:
    """Accuracy and mean fusion weights per query type.

    ``mask_relevant`` switches off, per sample, the modality that holds the answer.
    """
    base = config.modalities.as_tuple()
    correct = 0
    gates = {name: [] for name in QUERY_TYPES}
    for s in samples:
        active = base
        if mask_relevant:
            active = tuple(a and i != s.query_type for i, a in enumerate(base))
        fwd = model.forward(params, s, config, active)
        correct += int(np.argmax(fwd.logits) == s.label)
        gates[QUERY_TYPES[s.query_type]].append(np.asarray(fwd.omega).reshape(-1))
    by_type = {
        name: [float(x) for x in np.mean(ws, axis=0)] if ws else None
        for name, ws in gates.items()
    }
    return Evaluation(correct / len(samples), by_type)


def train_toy(config: RunConfig, params=None, train=None, test=None) -> tuple[TrainReport, object]:
    """Fit the toy model; deterministic for a given config (including its seed)."""
    config.validate()
    params = model.init_params(config) if params is None else params
    train = make_dataset(config, config.data.train, "train") if train is None else train
    test = make_dataset(config, config.data.test, "test") if test is None else test
    oc = config.optimizer
    steps_per_epoch = math.ceil(len(train) / oc.batch_size)
    opt = Optimizer(oc, oc.epochs * steps_per_epoch)
    rng = np.random.default_rng([config.seed, 5])
    losses = []
    for epoch in range(oc.epochs):
        order = rng.permutation(len(train))
        epoch_loss = 0.0
        for start in range(0, len(train), oc.batch_size):
            batch = [train[i] for i in order[start:start + oc.batch_size]]
            try:
                loss_value, grads = batch_gradients(params, batch, config)
            except NonFiniteError as exc:
                raise TrainingError(f"non-finite values during training: {exc}", epoch) from exc
            if not math.isfinite(loss_value):
                raise TrainingError("loss is not finite", epoch)
            epoch_loss += loss_value * len(batch)
            params = opt.step(params, grads)
        losses.append(epoch_loss / len(train))
        log.debug("epoch %d loss %.5f", epoch, losses[-1])

    full = evaluate(params, test, config)
    masked = evaluate(params, test, config, mask_relevant=True)
    relevant = {
        name: (full.gate_by_query_type[name][i] if full.gate_by_query_type[name] else None)
        for i, name in enumerate(QUERY_TYPES)
    }
    abstract_rows = None
    if config.modules.cma:
        abstract_rows = int(np.shape(model.forward(params, test[0], config).abstract)[0])
    report = TrainReport(losses, full.accuracy, masked.accuracy, full.gate_by_query_type,
                         relevant, abstract_rows, config.to_dict())
    return report, params
