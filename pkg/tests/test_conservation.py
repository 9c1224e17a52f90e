import numpy as np
import pytest

from circleqm.conservation import (
    branch_mean_offsets,
    build_ledger,
    chain_report,
    meter_untouched_check,
    offset_differences,
    table1_oracle,
)
from circleqm.interactions import PointerCouple, ShiftPrepare, Swap
from circleqm.lattice import (
    GRAND_PREPARER,
    METER,
    PREPARER,
    SYSTEM,
    Label,
    Role,
    basis_state,
    reduce,
    superposition,
    tensor,
    uniform_state,
    uniform_width,
)

from conftest import fits, random_fitting_pair, random_profile

BODY = Label("MB", Role.METER)


def two_party(phi, d):
    return tensor([(PREPARER, phi), (SYSTEM, basis_state(d, 0)), (METER, basis_state(d, 0))])


def read_chain(psi):
    return [ShiftPrepare(PREPARER, SYSTEM, psi), PointerCouple(SYSTEM, METER)]


class TestLedger:
    def test_two_level_zero_deviation(self):
        d = 7
        psi = superposition(d, {-1: 1, 1: 1})
        led = build_ledger(two_party(basis_state(d, 0), d), read_chain(psi), METER, [PREPARER, SYSTEM])
        assert led.baseline == pytest.approx({0: 1})
        assert [e.value for e in led.per_outcome] == [-1, 1]
        assert [e.probability for e in led.per_outcome] == pytest.approx([0.5, 0.5])
        assert led.max_deviation == 0 and led.conserved()

    def test_system_alone_jumps(self):
        d = 7
        psi = superposition(d, {-1: 1, 1: 1})
        led = build_ledger(two_party(basis_state(d, 0), d), read_chain(psi), METER, [SYSTEM])
        assert led.baseline == pytest.approx({0: 1})
        assert led.max_deviation == pytest.approx(1)
        assert not led.conserved()

    def test_rest_profile(self):
        d = 5
        led = build_ledger(two_party(uniform_width(d, 3), d), read_chain(basis_state(d, 0)), SYSTEM, [PREPARER, SYSTEM])
        assert len(led.per_outcome) == 1 and led.max_deviation <= 1e-12

    def test_statistical_mixture_matches_baseline(self, rng):
        d = 14
        phi, psi = random_fitting_pair(rng, d)
        led = build_ledger(two_party(phi, d), read_chain(psi), SYSTEM, [PREPARER, SYSTEM])
        mix = led.statistical_mixture()
        keys = set(mix) | set(led.baseline)
        assert max(abs(mix.get(k, 0) - led.baseline.get(k, 0)) for k in keys) <= 1e-10

    def test_random_profiles_conserved_per_outcome(self, rng):
        for d in (8, 13, 20):
            phi, psi = random_fitting_pair(rng, d)
            led = build_ledger(two_party(phi, d), read_chain(psi), METER, [PREPARER, SYSTEM], wrap="error")
            assert led.max_deviation <= 1e-10

    def test_evolved_shortcut(self):
        d = 7
        psi = superposition(d, {0: 1, 2: 1})
        start = two_party(basis_state(d, 1), d)
        evolved = read_chain(psi)[0].apply(start)
        a = build_ledger(start, read_chain(psi)[:1], SYSTEM, ["P", "S"])
        b = build_ledger(start, [], SYSTEM, ["P", "S"], evolved=evolved)
        assert a == b

    def test_swap_needs_grand_preparer_in_scope(self):
        d = 9
        start = tensor([(GRAND_PREPARER, basis_state(d, 0)), (PREPARER, basis_state(d, 0)), (SYSTEM, basis_state(d, 0))])
        chain = [ShiftPrepare(GRAND_PREPARER, PREPARER, superposition(d, {1: np.sqrt(0.7), 2: np.sqrt(0.3)})), Swap(PREPARER, SYSTEM)]
        narrow = build_ledger(start, chain, SYSTEM, [PREPARER, SYSTEM])
        wide = build_ledger(start, chain, SYSTEM, [GRAND_PREPARER, PREPARER, SYSTEM])
        assert narrow.max_deviation == pytest.approx(1)
        assert wide.max_deviation <= 1e-12


class TestTable1:
    def test_small_example(self):
        d = 8
        rep = table1_oracle(basis_state(d, 0), uniform_state(d, 0, 1), 1)
        assert rep.preparer_dist_post_measure == pytest.approx({-1: 0.5, 0: 0.5})
        assert rep.preparer_dist_at_prep == pytest.approx({0: 0.5, 1: 0.5})
        assert rep.grandpreparer_dist_at_prep == pytest.approx({-1: 0.5, 0: 0.5})

    def test_chain_matches_oracle(self, rng):
        d = 16
        phi_g = uniform_state(d, -3, 3)
        phi_p = uniform_state(d, -1, 1)
        psi = superposition(d, {0: 1, 1: 1})
        sim = chain_report(phi_g, phi_p, psi, 1, wrap="error")
        assert sim.deviation_from(table1_oracle(phi_g, phi_p, 1)) <= 1e-10

    def test_random_chains(self, rng):
        checked = 0
        while checked < 10:
            d = int(rng.integers(10, 25))
            wg, wp, ws = (int(x) for x in rng.integers(1, 4, size=3))
            sg, sp, ss = range(-wg, wg), range(-wp, wp), range(0, ws)
            if not fits((sg, 1), (sp, -1), (ss, -1), dim=d):
                continue
            phi_g = random_profile(rng, d, sg[0], sg[-1])
            phi_p = random_profile(rng, d, sp[0], sp[-1])
            psi = random_profile(rng, d, ss[0], ss[-1])
            l0 = int(rng.choice(list(ss)))
            sim = chain_report(phi_g, phi_p, psi, l0, wrap="error")
            assert sim.deviation_from(table1_oracle(phi_g, phi_p, l0)) <= 1e-10
            checked += 1

    def test_grand_preparer_blind_to_system(self, rng):
        d = 16
        phi_g = random_profile(rng, d, -3, 2)
        phi_p = random_profile(rng, d, -1, 1)
        ref = None
        for psi in (superposition(d, {0: 1, 1: 1}), random_profile(rng, d, -2, 2), basis_state(d, 1)):
            for l0 in psi.support():
                got = chain_report(phi_g, phi_p, psi, l0, wrap="error").grandpreparer_dist_post_measure
                ref = ref or got
                assert max(abs(got.get(k, 0) - ref.get(k, 0)) for k in set(got) | set(ref)) <= 1e-12

    def test_zero_probability_outcome(self):
        d = 8
        with pytest.raises(ValueError, match="zero probability"):
            chain_report(basis_state(d, 0), basis_state(d, 0), basis_state(d, 1), 2)


class TestBranchOffsets:
    def test_example(self):
        d = 8
        evolved = ShiftPrepare(PREPARER, SYSTEM, uniform_state(d, 0, 1)).apply(
            tensor([(PREPARER, basis_state(d, 0)), (SYSTEM, basis_state(d, 0))])
        )
        means = branch_mean_offsets(evolved, SYSTEM, PREPARER)
        assert means == pytest.approx({0: 0, 1: -1})
        assert offset_differences(means) == pytest.approx({(0, 1): -1})

    def test_differences_are_negative_gaps(self, rng):
        d = 20
        phi, psi = random_fitting_pair(rng, d)
        evolved = ShiftPrepare(PREPARER, SYSTEM, psi).apply(tensor([(PREPARER, phi), (SYSTEM, basis_state(d, 0))]), "error")
        for (m1, m2), diff in offset_differences(branch_mean_offsets(evolved, SYSTEM, PREPARER)).items():
            assert diff == pytest.approx(-(m2 - m1), abs=1e-10)


class TestMeterCheck:
    def start(self, d=7):
        return tensor([
            (SYSTEM, superposition(d, {1: 1, 2: 1})),
            (METER, basis_state(d, 0)),
            (BODY, basis_state(d, 0)),
        ])

    def test_pointer_couple_untouched(self):
        before = self.start()
        ok, dev = meter_untouched_check(before, PointerCouple(SYSTEM, METER).apply(before), METER)
        assert ok and dev == 0

    def test_identity(self):
        before = self.start()
        assert meter_untouched_check(before, before, METER) == (True, 0)

    def test_kicked_body_rejected(self):
        before = self.start()
        after = PointerCouple(SYSTEM, METER).apply(before)
        j = after.index(BODY)
        kicked = after.replace({
            tuple(reduce(v + 1, 7) if i == j else v for i, v in enumerate(key)): a
            for key, a in after.items()
        })
        ok, dev = meter_untouched_check(before, kicked, METER)
        assert not ok and dev == pytest.approx(1)
