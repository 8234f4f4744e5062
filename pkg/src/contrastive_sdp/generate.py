"""Planted-target dataset generator.

Draws a hidden target representation, then rejection-samples contrastive
tuples until every kept sample clears a raw score threshold gamma0 under
the target. Because the score is quadratic in the representation,
rescaling the target by 1/sqrt(gamma0) turns the raw threshold into a
unit margin, which is the normalization the learning bounds assume.

All randomness flows through a single numpy PCG64 generator seeded from
the config. Stream order: target entries first (row-major), then per
sample the anchor, the positive, and negatives in order; rejected draws
consume stream positions. Identical configs therefore reproduce
bit-identical datasets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import ContrastiveSample, Dataset, g_value
from .errors import GenerationFailure, InvalidInput

# consecutive per-pair misses (times k) before the anchor/positive pair is
# abandoned and redrawn; only relevant for k >= 2
_PAIR_DRAW_FACTOR = 100


@dataclass
class GenConfig:
    """Configuration of one synthetic dataset.

    kappa bounds example norms: the l2 norm when constraint == "trace",
    the sup norm when constraint == "l1", matching the norm pairing of the
    corresponding generalization bound. gamma0 is the raw acceptance
    threshold on scores under the unscaled target; defaults to
    0.2 * kappa^2. max_rejections defaults to 1000 * n.
    """

    d: int
    d_prime: int
    n: int
    k: int = 1
    kappa: float = 1.0
    gamma0: float | None = None
    constraint: str = "trace"
    seed: int = 0
    max_rejections: int | None = None

    def __post_init__(self):
        if self.d < 1:
            raise InvalidInput("d must be at least 1")
        if not 1 <= self.d_prime <= self.d:
            raise InvalidInput("d_prime must satisfy 1 <= d_prime <= d")
        if self.n < 1:
            raise InvalidInput("n must be at least 1")
        if self.k < 1:
            raise InvalidInput("k must be at least 1")
        if self.kappa <= 0:
            raise InvalidInput("kappa must be positive")
        if self.gamma0 is not None and self.gamma0 <= 0:
            raise InvalidInput("gamma0 must be positive")
        if self.constraint not in ("trace", "l1"):
            raise InvalidInput(f'constraint must be "trace" or "l1", got {self.constraint!r}')
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidInput("seed must fit in an unsigned 64-bit integer")
        if self.max_rejections is not None and self.max_rejections < 0:
            raise InvalidInput("max_rejections must be nonnegative")

    @property
    def resolved_gamma0(self) -> float:
        return self.gamma0 if self.gamma0 is not None else 0.2 * self.kappa**2

    @property
    def resolved_max_rejections(self) -> int:
        return (
            self.max_rejections
            if self.max_rejections is not None
            else 1000 * self.n
        )


def _draw_target(rng, d_prime: int, d: int) -> np.ndarray:
    w = rng.standard_normal((d_prime, d))
    return w / np.linalg.norm(w)


def plant_target(cfg: GenConfig) -> np.ndarray:
    """Deterministic unit-Frobenius target matrix, shape (d_prime, d)."""
    return _draw_target(np.random.default_rng(cfg.seed), cfg.d_prime, cfg.d)


def _draw_vector(rng, d: int, kappa: float, norm: str) -> np.ndarray:
    if norm == "l2":
        # uniform on the l2 ball: direction times radius ~ kappa * u^(1/d)
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        return kappa * rng.uniform() ** (1.0 / d) * v
    return rng.uniform(-kappa, kappa, size=d)


def generate_dataset(cfg: GenConfig):
    """Build a planted dataset.

    Returns (dataset, w_scaled, effective_radius) where w_scaled is the
    target divided by sqrt(gamma0), so every emitted sample has margin at
    least 1 under it, and effective_radius is ||w_scaled|| in the norm the
    configured constraint pairs with (Frobenius for the trace ball,
    entrywise l1 for the l1 ball). A feasible-set radius of
    effective_radius**2 therefore contains w_scaled^T w_scaled.

    Raises GenerationFailure once rejected draws exceed the budget.
    """
    rng = np.random.default_rng(cfg.seed)
    w_star = _draw_target(rng, cfg.d_prime, cfg.d)
    gamma0 = cfg.resolved_gamma0
    budget = cfg.resolved_max_rejections
    norm = "l2" if cfg.constraint == "trace" else "linf"

    samples = []
    rejections = 0
    accepted = 0
    total = 0

    def fail():
        rate = accepted / total if total else 0.0
        raise GenerationFailure(
            f"rejection budget exhausted after {rejections} rejections "
            f"({accepted}/{total} tuples accepted, gamma0={gamma0:g})",
            acceptance_rate=rate,
        )

    if cfg.k == 1:
        while len(samples) < cfg.n:
            x = _draw_vector(rng, cfg.d, cfg.kappa, norm)
            y = _draw_vector(rng, cfg.d, cfg.kappa, norm)
            z = _draw_vector(rng, cfg.d, cfg.kappa, norm)
            total += 1
            g = g_value(w_star, x, y, z)
            if abs(g) >= gamma0:
                accepted += 1
                label = 1 if g > 0 else -1
                samples.append(ContrastiveSample(x, y, z[None, :], label))
            else:
                rejections += 1
                if rejections > budget:
                    fail()
    else:
        pair_cap = _PAIR_DRAW_FACTOR * cfg.k
        while len(samples) < cfg.n:
            x = _draw_vector(rng, cfg.d, cfg.kappa, norm)
            y = _draw_vector(rng, cfg.d, cfg.kappa, norm)
            negatives = []
            pair_draws = 0
            while len(negatives) < cfg.k and pair_draws < pair_cap:
                z = _draw_vector(rng, cfg.d, cfg.kappa, norm)
                pair_draws += 1
                total += 1
                if g_value(w_star, x, y, z) >= gamma0:
                    accepted += 1
                    negatives.append(z)
                else:
                    rejections += 1
                    if rejections > budget:
                        fail()
            if len(negatives) < cfg.k:
                continue  # hopeless anchor/positive pair; redraw it
            samples.append(ContrastiveSample(x, y, np.stack(negatives), 1))

    w_scaled = w_star / math.sqrt(gamma0)
    if cfg.constraint == "trace":
        effective_radius = float(np.linalg.norm(w_scaled))
    else:
        effective_radius = float(np.abs(w_scaled).sum())
    metadata = {
        "seed": int(cfg.seed),
        "kappa": cfg.kappa,
        "gamma0": gamma0,
        "constraint": cfg.constraint,
        "d_prime": cfg.d_prime,
        "effective_radius": effective_radius,
        "example_distribution": f"uniform-{norm}-ball",
    }
    ds = Dataset(dim=cfg.d, k=cfg.k, samples=samples, metadata=metadata)
    return ds, w_scaled, effective_radius
