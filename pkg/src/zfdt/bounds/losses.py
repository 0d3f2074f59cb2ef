"""Exact losses over enumerable worlds, with analytic gradients.

Everything here is a full summation over the joint table; there is no
sampling noise, so the error quantities are exact up to float arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInput
from .models import Conditioning, ToyModel
from .worlds import ToyWorld

LOG_FLOOR = 1e-12


def mutual_information(world: ToyWorld) -> float:
    """I(y; c | x) by direct summation over the joint table."""
    p_y_given_xc = world.p_y_given_xc()
    p_y_given_x = world.p_y_given_x()
    total = 0.0
    for x in range(world.nx):
        for c in range(world.nc):
            for y in range(world.ny):
                mass = world.joint[x, c, y]
                if mass <= 0:
                    continue
                total += mass * (
                    np.log(p_y_given_xc[x, c, y]) - np.log(p_y_given_x[x, y])
                )
    return max(float(total), 0.0)


def _context_marginal(world: ToyWorld, conditioning: Conditioning) -> np.ndarray:
    """P(context, y) laid out to match the model's logit table."""
    if conditioning is Conditioning.X_ONLY:
        return world.p_xy()
    return world.joint.reshape(world.nx * world.nc, world.ny)


@dataclass(frozen=True)
class LossDetail:
    loss: float
    clamped: bool  # True when a zero-probability target hit the log floor


def sft_loss_detail(model: ToyModel, world: ToyWorld) -> LossDetail:
    """Expected negative log-likelihood under the true joint."""
    weights = _context_marginal(world, model.conditioning_mode)
    probs = model.probs()
    clamped = bool((probs[weights > 0] < LOG_FLOOR).any())
    log_probs = np.log(np.maximum(probs, LOG_FLOOR))
    return LossDetail(float(-(weights * log_probs).sum()), clamped)


def sft_loss(model: ToyModel, world: ToyWorld, conditioning: Conditioning | None = None) -> float:
    if conditioning is not None and conditioning is not model.conditioning_mode:
        raise InvalidInput("model conditioning does not match the requested mode")
    return sft_loss_detail(model, world).loss


def sft_grad(model: ToyModel, world: ToyWorld) -> np.ndarray:
    """d/d(logits) of the expected NLL: P(ctx) * p_model - P(ctx, y)."""
    weights = _context_marginal(world, model.conditioning_mode)
    context_mass = weights.sum(axis=1, keepdims=True)
    return context_mass * model.probs() - weights


@dataclass(frozen=True)
class PreferencePair:
    x: int
    c: int
    y_w: int
    y_l: int
    weight_w: float = 0.5  # evaluation weight of the preferred answer
    weight_l: float = 0.5

    def __post_init__(self):
        if self.y_w == self.y_l:
            raise InvalidInput("preference pair must have distinct answers")


@dataclass
class PreferenceSet:
    pairs: tuple[PreferencePair, ...]
    reference: ToyModel  # frozen x_and_c reference the pairs were scored by
    deltas: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.pairs:
            raise InvalidInput("preference set is empty")
        if self.reference.conditioning_mode is not Conditioning.X_AND_C:
            raise InvalidInput("reference must condition on retrieval")
        computed = self.compute_deltas()
        if not self.deltas:
            self.deltas = computed
        elif any(abs(a - b) > 1e-9 for a, b in zip(self.deltas, computed)):
            raise InvalidInput("stored preference strengths disagree with the reference")

    def compute_deltas(self) -> tuple[float, ...]:
        """Delta per pair: reference log-ratio of preferred over rejected."""
        log_ref = self.reference.log_probs()
        out = []
        for pair in self.pairs:
            k = self.reference.context_index(pair.x, pair.c)
            out.append(float(log_ref[k, pair.y_w] - log_ref[k, pair.y_l]))
        return tuple(out)

    def mean_delta(self) -> float:
        return float(np.mean(self.deltas))


def pair_margins(model: ToyModel, prefs: PreferenceSet) -> np.ndarray:
    """Per-pair policy-vs-reference log-ratio margin (winner minus loser)."""
    log_model = model.log_probs()
    log_ref = prefs.reference.log_probs()
    margins = []
    for pair in prefs.pairs:
        k = model.context_index(pair.x, pair.c)
        margins.append(
            (log_model[k, pair.y_w] - log_ref[k, pair.y_w])
            - (log_model[k, pair.y_l] - log_ref[k, pair.y_l])
        )
    return np.asarray(margins)


def dpo_loss(
    model: ToyModel, prefs: PreferenceSet, beta: float, asymmetric_eq2: bool = False
) -> float:
    """Mean over pairs of -log sigmoid of the scaled preference margin.

    The default scales both log-ratio terms by beta (the standard objective);
    ``asymmetric_eq2`` reproduces the variant that scales only the preferred
    term, kept for comparison.
    """
    if model.conditioning_mode is not Conditioning.X_AND_C:
        raise InvalidInput("preference training conditions on retrieval")
    log_model = model.log_probs()
    log_ref = prefs.reference.log_probs()
    total = 0.0
    for pair in prefs.pairs:
        k = model.context_index(pair.x, pair.c)
        ratio_w = log_model[k, pair.y_w] - log_ref[k, pair.y_w]
        ratio_l = log_model[k, pair.y_l] - log_ref[k, pair.y_l]
        u = beta * ratio_w - (1.0 if asymmetric_eq2 else beta) * ratio_l
        total += float(np.logaddexp(0.0, -u))  # -log(sigmoid(u))
    return total / len(prefs.pairs)


def dpo_grad(
    model: ToyModel, prefs: PreferenceSet, beta: float, asymmetric_eq2: bool = False
) -> np.ndarray:
    grad = np.zeros_like(model.logits)
    log_model = model.log_probs()
    log_ref = prefs.reference.log_probs()
    probs = model.probs()
    n = len(prefs.pairs)
    for pair in prefs.pairs:
        k = model.context_index(pair.x, pair.c)
        ratio_w = log_model[k, pair.y_w] - log_ref[k, pair.y_w]
        ratio_l = log_model[k, pair.y_l] - log_ref[k, pair.y_l]
        beta_l = 1.0 if asymmetric_eq2 else beta
        u = beta * ratio_w - beta_l * ratio_l
        coeff = -1.0 / (1.0 + np.exp(u))  # d(-log sigmoid(u))/du = -sigmoid(-u)
        du = -(beta - beta_l) * probs[k]
        du[pair.y_w] += beta
        du[pair.y_l] -= beta_l
        grad[k] += coeff * du / n
    return grad
