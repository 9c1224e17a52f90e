"""Per-outcome conservation reports.

A :class:`ConservationLedger` compares the total-L distribution of a set of
labels before an interaction chain with the same distribution conditional on
each outcome of a final measurement. Statistical conservation only asks the
outcome-weighted mixture to match; the ledger checks every branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .interactions import ShiftPrepare, apply_chain
from .lattice import (
    AMP_TOL,
    GRAND_PREPARER,
    PREPARER,
    SYSTEM,
    CompositeState,
    Label,
    ModeWavefunction,
    basis_state,
    label_name,
    marginal_distribution,
    max_abs_difference,
    reduce,
    tensor,
    total_L_distribution,
)
from .measurement import outcome_table


@dataclass(frozen=True)
class LedgerEntry:
    value: int
    probability: float
    distribution: dict[int, float]
    deviation: float


@dataclass(frozen=True)
class ConservationLedger:
    scope: tuple[str, ...]
    measured: str
    baseline: dict[int, float]
    per_outcome: list[LedgerEntry] = field(default_factory=list)

    @property
    def max_deviation(self) -> float:
        return max((e.deviation for e in self.per_outcome), default=0.0)

    def conserved(self, tol: float = AMP_TOL) -> bool:
        return self.max_deviation <= tol

    def statistical_mixture(self) -> dict[int, float]:
        """Outcome-weighted average of the conditional distributions."""
        out: dict[int, float] = {}
        for e in self.per_outcome:
            for t, p in e.distribution.items():
                out[t] = out.get(t, 0.0) + e.probability * p
        return dict(sorted(out.items()))


def build_ledger(
    initial: CompositeState,
    chain: Sequence,
    measure: Label | str,
    scope: Iterable[Label | str],
    wrap: str = "warn",
    evolved: CompositeState | None = None,
) -> ConservationLedger:
    """Run ``chain`` on ``initial``, measure ``measure`` and audit ``scope`` per outcome.

    ``evolved`` may be passed to skip re-running a chain already applied.
    """
    scope = tuple(label_name(s) for s in scope)
    baseline = total_L_distribution(initial, scope)
    if evolved is None:
        evolved = apply_chain(initial, chain, wrap)
    entries = []
    for rec in outcome_table(evolved, measure):
        dist = total_L_distribution(rec.post_state, scope)
        entries.append(LedgerEntry(rec.value, rec.probability, dist, max_abs_difference(dist, baseline)))
    return ConservationLedger(scope, label_name(measure), baseline, entries)


# ---------------------------------------------------------------------------
# preparer / grand-preparer chain


@dataclass(frozen=True)
class ChainReport:
    measured_value: int
    preparer_dist_at_prep: dict[int, float]
    preparer_dist_post_measure: dict[int, float]
    grandpreparer_dist_at_prep: dict[int, float]
    grandpreparer_dist_post_measure: dict[int, float]

    DISTRIBUTIONS = (
        "preparer_dist_at_prep",
        "preparer_dist_post_measure",
        "grandpreparer_dist_at_prep",
        "grandpreparer_dist_post_measure",
    )

    def deviation_from(self, other: ChainReport) -> float:
        return max(max_abs_difference(getattr(self, f), getattr(other, f)) for f in self.DISTRIBUTIONS)


def chain_report(
    phi_g: ModeWavefunction,
    phi_p: ModeWavefunction,
    psi: ModeWavefunction,
    l0: int,
    wrap: str = "warn",
) -> ChainReport:
    """Simulate grand-preparer -> preparer -> system and postselect the system on ``l0``."""
    d = phi_g.dim
    if phi_p.dim != d or psi.dim != d:
        raise ValueError("grand-preparer, preparer and profile must share one lattice size")
    start = tensor([(GRAND_PREPARER, phi_g), (PREPARER, basis_state(d, 0)), (SYSTEM, basis_state(d, 0))])
    prepared = ShiftPrepare(GRAND_PREPARER, PREPARER, phi_p).apply(start, wrap)
    evolved = ShiftPrepare(PREPARER, SYSTEM, psi).apply(prepared, wrap)
    value = reduce(l0, d)
    hit = [r for r in outcome_table(evolved, SYSTEM) if r.value == value]
    if not hit:
        raise ValueError(f"system outcome {l0} has zero probability")
    post = hit[0].post_state
    return ChainReport(
        measured_value=int(l0),
        preparer_dist_at_prep=marginal_distribution(prepared, PREPARER),
        preparer_dist_post_measure=marginal_distribution(post, PREPARER),
        grandpreparer_dist_at_prep=marginal_distribution(prepared, GRAND_PREPARER),
        grandpreparer_dist_post_measure=marginal_distribution(post, GRAND_PREPARER),
    )


def table1_oracle(phi_g: ModeWavefunction, phi_p: ModeWavefunction, l0: int) -> ChainReport:
    """Closed-form preparer and grand-preparer distributions.

    Evaluated directly from the amplitudes with plain integer arithmetic;
    no states are built.
    """
    pp = {l: abs(a) ** 2 for l, a in phi_p.as_dict().items()}
    pg = {k: abs(a) ** 2 for k, a in phi_g.as_dict().items()}
    grand: dict[int, float] = {}
    # P(L_g = k) = sum_l |phi_g(k + l)|^2 |phi_p(l)|^2, enumerated over k + l in supp(phi_g)
    for kk, wg in pg.items():
        for l, wp in pp.items():
            grand[kk - l] = grand.get(kk - l, 0.0) + wg * wp
    grand = dict(sorted(grand.items()))
    return ChainReport(
        measured_value=int(l0),
        preparer_dist_at_prep=dict(sorted(pp.items())),
        preparer_dist_post_measure={l - l0: w for l, w in sorted(pp.items())},
        grandpreparer_dist_at_prep=grand,
        grandpreparer_dist_post_measure=dict(grand),
    )


# ---------------------------------------------------------------------------
# residual entanglement and meter checks


def branch_mean_offsets(state: CompositeState, sys: Label | str, frame: Label | str) -> dict[int, float]:
    """Mean angular momentum of ``frame`` conditioned on each value of ``sys``."""
    i, j = state.index(sys), state.index(frame)
    weight: dict[int, float] = {}
    moment: dict[int, float] = {}
    for key, a in state.items():
        p = abs(a) ** 2
        weight[key[i]] = weight.get(key[i], 0.0) + p
        moment[key[i]] = moment.get(key[i], 0.0) + p * key[j]
    return {m: moment[m] / w for m, w in sorted(weight.items()) if w > 1e-14}


def offset_differences(means: dict[int, float]) -> dict[tuple[int, int], float]:
    """``mean[m2] - mean[m1]`` for every pair ``m1 < m2``."""
    ms = sorted(means)
    return {(a, b): means[b] - means[a] for n, a in enumerate(ms) for b in ms[n + 1:]}


def meter_untouched_check(before: CompositeState, after: CompositeState, meter: Label | str):
    """Compare the meter's angular momentum before and after.

    The meter is every label sharing ``meter``'s role. Its pointer contributes
    zero by construction; any other meter label (e.g. the device body) must
    keep its distribution. Returns ``(ok, deviation)``.
    """
    role = before.label(meter).role
    if after.label(meter).role is not role:
        raise ValueError("meter label changed role")
    # pointers carry no L, so only the other meter labels can register a change;
    # a pointer-only meter is untouched exactly rather than up to norm rounding
    body = [lab.name for lab in before.labels if lab.role is role and not lab.pointer]
    if not body:
        return True, 0.0
    dev = max_abs_difference(total_L_distribution(before, body), total_L_distribution(after, body))
    for name in body:
        dev = max(dev, max_abs_difference(marginal_distribution(before, name), marginal_distribution(after, name)))
    return dev <= AMP_TOL, dev

