"""Projective read-out of one label with Born-rule sampling.

Random draws use numpy's ``PCG64`` bit generator seeded through
``SeedSequence``. Batched trials draw all uniforms from a single stream
seeded with the run seed, so a (state, seed, trials) triple fully determines
the counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import CompositeState, Label, marginal_distribution

RNG_ALGORITHM = "PCG64"
# outcomes at or below this probability are dropped from tables
PROB_EPS = 1e-14


@dataclass(frozen=True)
class OutcomeRecord:
    label: Label
    value: int
    probability: float
    post_state: CompositeState


def outcome_table(state: CompositeState, label: Label | str) -> list[OutcomeRecord]:
    """Every outcome of measuring ``label`` with its probability and collapsed state."""
    i = state.index(label)
    probs = marginal_distribution(state, label)
    records = []
    for value, p in probs.items():
        if p <= PROB_EPS:
            continue
        proj = {key: a for key, a in state.items() if key[i] == value}
        records.append(OutcomeRecord(state.labels[i], value, p, state.replace(proj, normalize=True)))
    return records


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _pick(records: list[OutcomeRecord], u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum([r.probability for r in records])
    # guards against u landing past a cdf that sums to 1 - 1e-16
    return np.minimum(np.searchsorted(cdf / cdf[-1], u, side="right"), len(records) - 1)


def sample_outcome(state: CompositeState, label: Label | str, rng_seed: int) -> OutcomeRecord:
    """Draw one outcome; the same seed always returns the same record."""
    records = outcome_table(state, label)
    u = make_rng(rng_seed).random()
    return records[int(_pick(records, np.array([u]))[0])]


def sample_counts(state: CompositeState, label: Label | str, trials: int, seed: int) -> dict[int, int]:
    """Counts per outcome value over ``trials`` draws from one seeded stream."""
    if trials < 1:
        raise ValueError("trials must be positive")
    records = outcome_table(state, label)
    idx = _pick(records, make_rng(seed).random(trials))
    counts = np.bincount(idx, minlength=len(records))
    return {r.value: int(c) for r, c in zip(records, counts)}
