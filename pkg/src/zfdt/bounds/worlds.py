"""Exactly enumerable toy worlds: joint tables over (context, retrieval, answer).

A world is a full probability table P(x, c, y) plus a per-context relevant
fact set F_x. Constructors cover the cases the verification lab needs:
independent retrieval (zero information), a one-bit channel, random worlds
with probability floors (interior optima train fast), tied-answer worlds for
preference construction, and retrieval-miss worlds with known miss rate
epsilon and off-fact mass delta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInput


@dataclass(frozen=True)
class ToyWorld:
    joint: np.ndarray  # shape (nx, nc, ny), sums to 1
    fact_map: tuple[frozenset[int], ...]  # relevant answers per x
    retrieval_coverage: float = 1.0  # 1 - epsilon of the construction
    reliance: float = 0.0  # delta of the construction
    absent_context: int | None = None  # context index meaning "retrieval missed"
    matched_contexts: tuple[int, ...] | None = None  # context delivered per x on a hit

    def __post_init__(self):
        if self.joint.ndim != 3:
            raise InvalidInput("joint must have shape (nx, nc, ny)")
        if abs(float(self.joint.sum()) - 1.0) > 1e-12:
            raise InvalidInput("joint table must sum to 1")
        if (self.joint < 0).any():
            raise InvalidInput("joint table must be nonnegative")
        if len(self.fact_map) != self.joint.shape[0]:
            raise InvalidInput("fact_map must cover every x")
        if any(not facts for facts in self.fact_map):
            raise InvalidInput("every F_x must be non-empty")

    @property
    def nx(self) -> int:
        return self.joint.shape[0]

    @property
    def nc(self) -> int:
        return self.joint.shape[1]

    @property
    def ny(self) -> int:
        return self.joint.shape[2]

    def p_x(self) -> np.ndarray:
        return self.joint.sum(axis=(1, 2))

    def p_xy(self) -> np.ndarray:
        """Marginal P(x, y) over retrieval contexts."""
        return self.joint.sum(axis=1)

    def p_y_given_x(self) -> np.ndarray:
        p_x = self.p_x()
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.p_xy() / p_x[:, None]
        return np.nan_to_num(out)

    def p_y_given_xc(self) -> np.ndarray:
        p_xc = self.joint.sum(axis=2)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.joint / p_xc[:, :, None]
        return np.nan_to_num(out)


def _full_facts(nx: int, ny: int) -> tuple[frozenset[int], ...]:
    return tuple(frozenset(range(ny)) for _ in range(nx))


def independent_world(nx: int = 2, nc: int = 2, ny: int = 3, seed: int = 0) -> ToyWorld:
    """c carries no information about y given x: I(y; c | x) = 0."""
    rng = np.random.default_rng(seed)
    p_x = rng.dirichlet(np.ones(nx))
    p_c_given_x = rng.dirichlet(np.ones(nc), size=nx)
    p_y_given_x = rng.dirichlet(np.ones(ny), size=nx)
    joint = p_x[:, None, None] * p_c_given_x[:, :, None] * p_y_given_x[:, None, :]
    joint /= joint.sum()
    return ToyWorld(joint, _full_facts(nx, ny))


def one_bit_channel_world() -> ToyWorld:
    """c reveals y exactly; y is uniform over two answers given x.

    The information carried by c is exactly ln 2 nats.
    """
    joint = np.zeros((1, 2, 2))
    joint[0, 0, 0] = 0.5
    joint[0, 1, 1] = 0.5
    return ToyWorld(joint, (frozenset({0, 1}),))


def random_world(
    seed: int,
    nx: int = 2,
    nc: int = 3,
    ny: int = 4,
    min_sharpness: float = 0.3,
    max_sharpness: float = 0.9,
) -> ToyWorld:
    """Random world whose conditionals mix a one-hot with uniform noise.

    The mixing keeps every conditional probability strictly positive, so the
    cross-entropy optima are interior and gradient descent converges fast.
    """
    rng = np.random.default_rng(seed)
    p_x = rng.dirichlet(np.ones(nx) * 5.0)
    p_c_given_x = rng.dirichlet(np.ones(nc) * 5.0, size=nx)
    joint = np.zeros((nx, nc, ny))
    for x in range(nx):
        for c in range(nc):
            sharpness = rng.uniform(min_sharpness, max_sharpness)
            target = rng.integers(ny)
            conditional = np.full(ny, (1.0 - sharpness) / ny)
            conditional[target] += sharpness
            joint[x, c] = p_x[x] * p_c_given_x[x, c] * conditional
    joint /= joint.sum()
    return ToyWorld(joint, _full_facts(nx, ny))


def tied_preference_world(
    seed: int, nx: int = 2, nc: int = 3, ny: int = 4, top_mass: float = 0.8
) -> ToyWorld:
    """Every (x, c) conditional has two exactly tied dominant answers.

    Training a model on this world by symmetric full-batch descent keeps the
    two dominant answers at exactly equal probability, which gives preference
    pairs with zero reference preference strength.
    """
    rng = np.random.default_rng(seed)
    p_x = rng.dirichlet(np.ones(nx) * 5.0)
    p_c_given_x = rng.dirichlet(np.ones(nc) * 5.0, size=nx)
    joint = np.zeros((nx, nc, ny))
    for x in range(nx):
        for c in range(nc):
            pair = rng.choice(ny, size=2, replace=False)
            conditional = np.full(ny, (1.0 - top_mass) / (ny - 2))
            conditional[pair[0]] = top_mass / 2.0
            conditional[pair[1]] = top_mass / 2.0
            joint[x, c] = p_x[x] * p_c_given_x[x, c] * conditional
    joint /= joint.sum()
    return ToyWorld(joint, _full_facts(nx, ny))


def hallucination_world(
    epsilon: float,
    delta: float,
    nx: int = 3,
    ny: int = 8,
    facts_per_x: int = 2,
    seed: int = 0,
) -> ToyWorld:
    """Retrieval world with miss rate epsilon and off-fact reliance delta.

    Context 0 means the retriever missed F_x; context ``x + 1`` is the matched
    retrieval for x. On a hit the answer lands outside F_x with probability
    exactly delta; on a miss the answer is uniform over all of Y.
    """
    if not (0.0 <= epsilon <= 1.0 and 0.0 <= delta <= 1.0):
        raise InvalidInput("epsilon and delta must lie in [0, 1]")
    if facts_per_x >= ny:
        raise InvalidInput("need at least one non-fact answer")
    rng = np.random.default_rng(seed)
    nc = nx + 1
    facts = []
    for x in range(nx):
        chosen = rng.choice(ny, size=facts_per_x, replace=False)
        facts.append(frozenset(int(v) for v in chosen))
    joint = np.zeros((nx, nc, ny))
    for x in range(nx):
        fact_idx = sorted(facts[x])
        off_idx = [y for y in range(ny) if y not in facts[x]]
        hit = np.zeros(ny)
        hit[fact_idx] = (1.0 - delta) / len(fact_idx)
        hit[off_idx] = delta / len(off_idx)
        miss = np.full(ny, 1.0 / ny)
        joint[x, x + 1] = (1.0 / nx) * (1.0 - epsilon) * hit
        joint[x, 0] = (1.0 / nx) * epsilon * miss
    joint /= joint.sum()  # exact 1 up to float drift by construction
    return ToyWorld(
        joint,
        tuple(facts),
        retrieval_coverage=1.0 - epsilon,
        reliance=delta,
        absent_context=0,
        matched_contexts=tuple(x + 1 for x in range(nx)),
    )
