"""Versioned JSON persistence for trained models and training histories."""

from __future__ import annotations

import csv
import json
import os
from typing import Union

import numpy as np

from ..errors import ParseError
from .boosting import GbtEnsemble
from .config import TrainConfig
from .linear import LinearModel
from .mlp import ARCH_CUSTOM, ARCH_DNN, ARCH_WNN, MlpModel, TrainHistory
from .tree import RegressionTree

FORMAT_VERSION = 1

_MLP_ARCHS = (ARCH_WNN, ARCH_DNN, ARCH_CUSTOM)


def _arch_of(model) -> str:
    if isinstance(model, LinearModel):
        return "lr"
    if isinstance(model, MlpModel):
        return model.arch
    if isinstance(model, RegressionTree):
        return "cart"
    if isinstance(model, GbtEnsemble):
        return "gbt"
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


def save_model(
    model,
    dest: Union[str, os.PathLike],
    config: TrainConfig | None = None,
) -> None:
    """Write a model as deterministic JSON (sorted keys, fixed indent)."""
    payload = {
        "format_version": FORMAT_VERSION,
        "arch": _arch_of(model),
        "columns": list(model.columns) if model.columns is not None else None,
        "parameters": model.to_dict(),
        "config": config.to_dict() if config is not None else None,
        "seed": getattr(model, "seed", None),
    }
    with open(dest, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(source: Union[str, os.PathLike]):
    with open(source, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"unsupported model format version in {source}")
    arch = payload["arch"]
    columns = tuple(payload["columns"]) if payload.get("columns") is not None else None
    params = payload["parameters"]
    if arch == "lr":
        return LinearModel.from_dict(params, columns=columns)
    if arch in _MLP_ARCHS:
        return MlpModel.from_dict(params, columns=columns)
    if arch == "cart":
        return RegressionTree.from_dict(params, columns=columns)
    if arch == "gbt":
        return GbtEnsemble.from_dict(params, columns=columns)
    raise ParseError(f"unknown model arch {arch!r} in {source}")


HISTORY_HEADER = "epoch,train_mse,val_mse"


def write_history_csv(history: TrainHistory, dest: Union[str, os.PathLike]) -> None:
    """Per-epoch loss curve; the epoch column is 1-based for plotting."""
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HISTORY_HEADER.split(","))
        for i, (tr, va) in enumerate(zip(history.train_mse, history.val_mse)):
            writer.writerow([i + 1, repr(tr), repr(va)])


def read_history_csv(source: Union[str, os.PathLike]) -> TrainHistory:
    with open(source, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != HISTORY_HEADER.split(","):
            raise ParseError(f"unexpected history header in {source}")
        history = TrainHistory()
        for row in reader:
            if not row:
                continue
            history.train_mse.append(float(row[1]))
            history.val_mse.append(float(row[2]))
    if history.val_mse:
        history.best_epoch = int(np.argmin(history.val_mse))
    return history
