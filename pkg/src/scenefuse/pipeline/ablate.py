"""Ablation grid over modality toggles, module toggles and abstract-token counts."""
from __future__ import annotations

import logging
from dataclasses import dataclass

from .config import TOKEN_COUNTS, RunConfig
from .train import train_toy

log = logging.getLogger(__name__)

MODALITY_ROWS = (
    ("image-only", (False, False, False)),
    ("L", (True, False, False)),
    ("L+T", (True, False, True)),
    ("L+T+O", (True, True, True)),
)
MODULE_ROWS = (
    ("baseline", (False, False)),
    ("TMM", (True, False)),
    ("TMM+CMA", (True, True)),
)


@dataclass
class AblationRow:
    group: str
    name: str
    accuracy: float
    masked_accuracy: float
    mean_relevant_gate: float | None
    abstract_rows: int | None
    final_loss: float | None

    def to_dict(self):
        return dict(self.__dict__)


def grid(config: RunConfig, groups=("modalities", "modules", "tokens")):
    """``(group, name, config)`` for every ablation cell."""
    base = config.replace(**{"optimizer.epochs": config.ablate.epochs})
    if "modalities" in groups:
        for name, (lidar, occ, desc) in MODALITY_ROWS:
            yield "modalities", name, base.replace(**{
                "modalities.lidar": lidar, "modalities.occ": occ, "modalities.desc": desc})
    if "modules" in groups:
        for name, (tmm, cma) in MODULE_ROWS:
            yield "modules", name, base.replace(**{"modules.tmm": tmm, "modules.cma": cma})
    if "tokens" in groups:
        for k in TOKEN_COUNTS:
            yield "tokens", f"K={k}", base.replace(**{"cma.num_tokens": k, "modules.cma": True})


def run_ablation(config: RunConfig, groups=("modalities", "modules", "tokens")) -> list[AblationRow]:
    rows = []
    for group, name, cfg in grid(config, groups):
        log.info("ablation %s / %s", group, name)
        report, _ = train_toy(cfg)
        gates = [g for g in report.relevant_gate.values() if g is not None]
        active = cfg.modalities.as_tuple()
        gate = None
        if cfg.modules.tmm and any(active) and gates:
            gate = sum(gates) / len(gates)
        rows.append(AblationRow(group, name, report.accuracy, report.masked_accuracy, gate,
                                report.abstract_rows, report.losses[-1] if report.losses else None))
    return rows
