# ============================================================================
# BOWEN BALL FAMILIES
# File: src/dynamics/balls.py
# Purpose: Cover items and cover families shared by counting and pressure
# ============================================================================

from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.special import logsumexp

from src.dynamics.word_tree import BoundMode
from src.systems.spaces import Point


@dataclass(frozen=True)
class CoverItem:
    """Bowen ball B_n(center, radius) with an optional fractional weight."""

    center: Point
    n: int
    radius: float
    weight: float = 1.0
    birkhoff: float = 0.0  # S_n phi at the center (or the pool-relative ball sup)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"ball length must be >= 0, got {self.n}")
        if self.radius <= 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        if not 0 < self.weight < np.inf:
            raise ValueError(f"ball weight must be finite and positive, got {self.weight}")

    def cost_exponent(self, alpha: float) -> float:
        return -alpha * self.n + self.birkhoff


@dataclass
class CoverFamily:
    items: List[CoverItem] = field(default_factory=list)
    mode: BoundMode = BoundMode.EXACT

    def __len__(self) -> int:
        return len(self.items)

    def log_cost(self, alpha: float) -> float:
        """log of sum_i c_i exp(-alpha n_i + S_{n_i} phi(x_i)); -inf when empty."""
        if not self.items:
            return -np.inf
        exponents = np.array([item.cost_exponent(alpha) for item in self.items])
        weights = np.array([item.weight for item in self.items])
        return float(logsumexp(exponents, b=weights))

    def cost(self, alpha: float) -> float:
        return float(np.exp(self.log_cost(alpha)))
