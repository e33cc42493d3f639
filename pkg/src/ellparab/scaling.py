"""Diagonal scaling matrices Delta_1(r) = diag(1, r, ..., r^{m-1}) and Delta_2(r) = r^m Delta_1(r)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np


@dataclass(frozen=True)
class ScalingMatrix:
    kind: Literal["Delta1", "Delta2"]
    m: int
    r: float

    def diagonal(self) -> np.ndarray:
        d = float(self.r) ** np.arange(self.m)
        return d * float(self.r) ** self.m if self.kind == "Delta2" else d

    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal())


def delta(kind: Literal["Delta1", "Delta2"], m: int, r: float) -> np.ndarray:
    if r <= 0:
        raise ValueError(f"scaling radius must be positive, got {r}")
    if kind not in ("Delta1", "Delta2"):
        raise ValueError(f"unknown scaling kind {kind!r}")
    return ScalingMatrix(kind, m, r).matrix()


def delta1(m: int, r: float) -> np.ndarray:
    return delta("Delta1", m, r)


def delta2(m: int, r: float) -> np.ndarray:
    return delta("Delta2", m, r)
