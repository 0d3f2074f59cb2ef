"""Categorical conditional models: a logit table per conditioning context."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInput
from .worlds import ToyWorld

#: Logit assigned to an impossible answer; exp(-1e3) underflows to exactly 0.
LOG_ZERO = -1e3


class Conditioning(enum.Enum):
    X_ONLY = "x_only"
    X_AND_C = "x_and_c"


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


@dataclass
class ToyModel:
    logits: np.ndarray  # (n_contexts, ny)
    conditioning_mode: Conditioning
    nx: int
    nc: int

    def __post_init__(self):
        expected = self.nx if self.conditioning_mode is Conditioning.X_ONLY else self.nx * self.nc
        if self.logits.shape[0] != expected:
            raise InvalidInput("logit table does not match the conditioning mode")

    @property
    def ny(self) -> int:
        return self.logits.shape[1]

    def context_index(self, x: int, c: int | None = None) -> int:
        if self.conditioning_mode is Conditioning.X_ONLY:
            return x
        if c is None:
            raise InvalidInput("x_and_c conditioning requires a retrieval context")
        return x * self.nc + c

    def probs(self) -> np.ndarray:
        return softmax(self.logits)

    def log_probs(self) -> np.ndarray:
        return log_softmax(self.logits)

    def prob(self, x: int, y: int, c: int | None = None) -> float:
        return float(self.probs()[self.context_index(x, c), y])

    def clone(self) -> "ToyModel":
        return ToyModel(self.logits.copy(), self.conditioning_mode, self.nx, self.nc)

    @classmethod
    def uniform(cls, world: ToyWorld, conditioning: Conditioning) -> "ToyModel":
        n_ctx = world.nx if conditioning is Conditioning.X_ONLY else world.nx * world.nc
        return cls(np.zeros((n_ctx, world.ny)), conditioning, world.nx, world.nc)

    @classmethod
    def from_conditional(cls, world: ToyWorld, conditioning: Conditioning) -> "ToyModel":
        """Model whose rows equal the world's exact conditional distribution.

        This is the optimum of the expected negative log-likelihood; answers
        with zero conditional probability get the LOG_ZERO logit, so their
        softmax probability underflows to exactly 0. Contexts with no joint
        mass fall back to uniform rows.
        """
        if conditioning is Conditioning.X_ONLY:
            conditional = world.p_y_given_x()
        else:
            conditional = world.p_y_given_xc().reshape(world.nx * world.nc, world.ny)
        logits = np.full(conditional.shape, LOG_ZERO)
        for row in range(conditional.shape[0]):
            mass = conditional[row].sum()
            if mass <= 0:
                logits[row] = 0.0
                continue
            positive = conditional[row] > 0
            logits[row, positive] = np.log(conditional[row, positive])
        return cls(logits, conditioning, world.nx, world.nc)


def implicit_reward(model: ToyModel, ref: ToyModel, x: int, y: int, beta: float, c: int | None = None) -> float:
    """beta times the policy/reference log-probability ratio at one answer."""
    if model.conditioning_mode is not ref.conditioning_mode or model.ny != ref.ny:
        raise InvalidInput("models must share answer space and conditioning")
    k = model.context_index(x, c)
    return float(beta * (model.log_probs()[k, y] - ref.log_probs()[k, y]))
