"""Full-batch gradient descent over toy models, with gradient validation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DivergenceError, GradientCheckError, InvalidInput
from .losses import PreferenceSet, dpo_grad, dpo_loss, sft_grad, sft_loss
from .models import ToyModel
from .worlds import ToyWorld


class Objective(enum.Enum):
    SFT = "sft"
    DPO = "dpo"


@dataclass(frozen=True)
class BoundsConfig:
    beta: float = 0.2
    gamma_threshold: float = 0.1
    learning_rate: float = 0.1
    steps: int = 5000
    rng_seed: int = 42
    validate_gradients: bool = True
    asymmetric_eq2: bool = False
    trials: int = 10_000

    def __post_init__(self):
        if self.beta <= 0:
            raise InvalidInput("beta must be positive")
        if self.learning_rate <= 0:
            raise InvalidInput("learning rate must be positive")
        if self.gamma_threshold <= 0:
            raise InvalidInput("gamma threshold must be positive")

    def with_overrides(self, **kwargs) -> "BoundsConfig":
        return replace(self, **kwargs)


@dataclass
class TrainResult:
    model: ToyModel
    losses: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")


def _loss_and_grad(model: ToyModel, objective: Objective, data, config: BoundsConfig):
    if objective is Objective.SFT:
        if not isinstance(data, ToyWorld):
            raise InvalidInput("supervised training expects a world")
        return sft_loss(model, data), sft_grad(model, data)
    if not isinstance(data, PreferenceSet):
        raise InvalidInput("preference training expects a preference set")
    return (
        dpo_loss(model, data, config.beta, config.asymmetric_eq2),
        dpo_grad(model, data, config.beta, config.asymmetric_eq2),
    )


def check_gradients(
    model: ToyModel,
    objective: Objective,
    data,
    config: BoundsConfig,
    fraction: float = 0.1,
    step: float = 1e-5,
    tolerance: float = 1e-4,
) -> float:
    """Compare analytic gradients with central finite differences.

    A sampled ``fraction`` of the coordinates is probed; raises when the worst
    relative error exceeds ``tolerance``. Returns the worst error observed.
    """
    _, grad = _loss_and_grad(model, objective, data, config)
    rng = np.random.default_rng(config.rng_seed)
    size = model.logits.size
    count = max(1, int(np.ceil(fraction * size)))
    coords = rng.choice(size, size=count, replace=False)
    worst = 0.0
    flat = model.logits.reshape(-1)
    for coord in coords:
        original = flat[coord]
        flat[coord] = original + step
        plus, _ = _loss_and_grad(model, objective, data, config)
        flat[coord] = original - step
        minus, _ = _loss_and_grad(model, objective, data, config)
        flat[coord] = original
        numeric = (plus - minus) / (2.0 * step)
        analytic = grad.reshape(-1)[coord]
        scale = max(abs(analytic), abs(numeric), 1e-6)
        worst = max(worst, abs(analytic - numeric) / scale)
    if worst > tolerance:
        raise GradientCheckError(
            f"analytic gradient mismatch: relative error {worst:.3e} > {tolerance:.1e}"
        )
    return worst


def train(
    model: ToyModel, objective: Objective, data, config: BoundsConfig
) -> TrainResult:
    """Plain full-batch descent: theta <- theta - lr * grad, ``steps`` times.

    Divergence (three consecutive loss increases) aborts with the last stable
    model attached to the error.
    """
    current = model.clone()
    if config.validate_gradients:
        check_gradients(current.clone(), objective, data, config)
    losses: list[float] = []
    stable = current.clone()
    rises = 0
    for _ in range(config.steps):
        loss, grad = _loss_and_grad(current, objective, data, config)
        if losses and loss > losses[-1]:
            rises += 1
            if rises >= 3:
                raise DivergenceError(
                    f"loss increased {rises} consecutive steps ({losses[-1]:.6f} -> {loss:.6f})",
                    last_stable_model=stable,
                )
        else:
            rises = 0
            stable = current.clone()
        losses.append(loss)
        current.logits = current.logits - config.learning_rate * grad
    final_loss, _ = _loss_and_grad(current, objective, data, config)
    losses.append(final_loss)
    return TrainResult(current, losses)


def estimate_smoothness(
    model: ToyModel, objective: Objective, data, config: BoundsConfig, probes: int = 8
) -> float:
    """Line-probe estimate of the gradient's Lipschitz constant.

    Samples local curvature (short-interval gradient secants) at the start
    point, at randomly displaced points, and along a short probing descent,
    so the estimate reflects the regions training actually visits.
    """
    rng = np.random.default_rng(config.rng_seed)
    step = 1e-3

    points = [model.logits.copy()]
    for _ in range(probes // 2):
        direction = rng.normal(size=model.logits.shape)
        direction /= np.linalg.norm(direction)
        for radius in (0.5, 2.0, 5.0):
            points.append(model.logits + radius * direction)
    probe = model.clone()
    for _ in range(probes):
        _, grad = _loss_and_grad(probe, objective, data, config)
        norm = float(np.linalg.norm(grad))
        if norm < 1e-12:
            break
        probe.logits = probe.logits - (1.0 / max(norm, 1e-9)) * grad
        points.append(probe.logits.copy())

    worst = 1e-12
    scratch = model.clone()
    for logits in points:
        scratch.logits = logits
        _, here = _loss_and_grad(scratch, objective, data, config)
        for _ in range(3):
            direction = rng.normal(size=logits.shape)
            direction /= np.linalg.norm(direction)
            scratch.logits = logits + step * direction
            _, there = _loss_and_grad(scratch, objective, data, config)
            worst = max(worst, float(np.linalg.norm(there - here)) / step)
            scratch.logits = logits
    return worst
