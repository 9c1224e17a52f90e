"""Angular-momentum-conserving interactions and exhaustive checks on them.

Three interaction kinds are provided:

* :class:`ShiftPrepare` -- ``|l>_src |0>_tgt -> sum_m psi(m) |l - m>_src |m>_tgt``.
  The source gives up exactly what the target gains.
* :class:`PointerCouple` -- ``|m>_src |q=0>_meter -> |m>_src |q=m>_meter``.
  The pointer is a record register and carries no angular momentum.
* :class:`Swap` -- exchanges the states of two equal-size modes.

Each kind exposes ``labels``, ``pointers``, ``fiducial`` (values the inputs
must hold for the physical action to be defined) and ``basis_action``. The
verifiers only rely on those four attributes, so any object providing them
can be checked.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .lattice import (
    AMP_TOL,
    CompositeState,
    Label,
    ModeWavefunction,
    check_wrap,
    label_name,
    marginal_distribution,
    reduce,
    residue_order,
)

MAX_ENUMERATION = 10_000


class PointerOverflowError(ValueError):
    """Meter register too small to record every source value."""


class EnumerationCapError(ValueError):
    """Verifier domain exceeds the enumeration cap."""


def _require_value(state: CompositeState, label: str, value: int, role: str) -> None:
    p = marginal_distribution(state, label).get(value, 0.0)
    if p < 1 - AMP_TOL:
        raise ValueError(f"{role} {label!r} must be in |{value}> (probability {p:.12g})")


def _require_normalized(profile: ModeWavefunction) -> None:
    if abs(profile.norm() - 1) > AMP_TOL:
        raise ValueError(f"profile norm {profile.norm()!r} differs from 1")


@dataclass(frozen=True)
class ShiftPrepare:
    source: str
    target: str
    profile: ModeWavefunction

    pointers = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "source", label_name(self.source))
        object.__setattr__(self, "target", label_name(self.target))
        if self.source == self.target:
            raise ValueError("source and target must differ")

    @property
    def labels(self) -> tuple[str, str]:
        return (self.source, self.target)

    @property
    def fiducial(self) -> dict[str, int]:
        return {self.target: 0}

    def basis_action(self, values: Sequence[int], dims: Sequence[int]) -> dict[tuple, complex]:
        # off the |0> fiber this is the canonical extension |l>|n> -> sum psi(m)|l-m>|m+n>;
        # it conserves total L but is not unitary there (see unitary_matrix)
        l, n = values
        d = dims[0]
        out: dict[tuple, complex] = {}
        for m, c in self.profile.as_dict().items():
            key = (reduce(l - m, d), reduce(m + n, d))
            out[key] = out.get(key, 0j) + c
        return out

    def apply(self, state: CompositeState, wrap: str = "warn") -> CompositeState:
        i, j = state.index(self.source), state.index(self.target)
        d = state.dims[i]
        if state.dims[j] != d or self.profile.dim != d:
            raise ValueError(
                f"dimension mismatch: {self.source}={d}, {self.target}={state.dims[j]}, "
                f"profile={self.profile.dim}"
            )
        if state.labels[i].pointer or state.labels[j].pointer:
            raise ValueError("shift preparation acts on circle modes, not pointers")
        _require_normalized(self.profile)
        _require_value(state, self.target, 0, "target")
        terms = self.profile.as_dict()
        out: dict[tuple, complex] = {}
        for key, a in state.items():
            if key[j] != 0:
                continue
            for m, c in terms.items():
                new = list(key)
                new[i] = check_wrap(key[i] - m, d, wrap, f"{self.source} momentum")
                new[j] = m
                new = tuple(new)
                out[new] = out.get(new, 0j) + a * c
        return state.replace(out, normalize=True)


@dataclass(frozen=True)
class PointerCouple:
    source: str
    meter: str

    def __post_init__(self):
        object.__setattr__(self, "source", label_name(self.source))
        object.__setattr__(self, "meter", label_name(self.meter))

    @property
    def labels(self) -> tuple[str, str]:
        return (self.source, self.meter)

    @property
    def pointers(self) -> frozenset:
        return frozenset({self.meter})

    @property
    def fiducial(self) -> dict[str, int]:
        return {self.meter: 0}

    def basis_action(self, values: Sequence[int], dims: Sequence[int]) -> dict[tuple, complex]:
        m, q = values
        return {(m, reduce(q + m, dims[1])): 1.0 + 0j}

    def apply(self, state: CompositeState, wrap: str = "warn") -> CompositeState:
        i, k = state.index(self.source), state.index(self.meter)
        if not state.labels[k].pointer:
            raise ValueError(f"{self.meter!r} is not a pointer register")
        if state.dims[k] < state.dims[i]:
            raise PointerOverflowError(
                f"meter size {state.dims[k]} cannot record source of size {state.dims[i]}"
            )
        _require_value(state, self.meter, 0, "meter pointer")
        out: dict[tuple, complex] = {}
        for key, a in state.items():
            if key[k] != 0:
                continue
            new = list(key)
            new[k] = key[i]
            out[tuple(new)] = a
        return state.replace(out, normalize=True)


@dataclass(frozen=True)
class Swap:
    a: str
    b: str

    pointers = frozenset()
    fiducial = {}

    def __post_init__(self):
        object.__setattr__(self, "a", label_name(self.a))
        object.__setattr__(self, "b", label_name(self.b))
        if self.a == self.b:
            raise ValueError("swap needs two distinct labels")

    @property
    def labels(self) -> tuple[str, str]:
        return (self.a, self.b)

    def basis_action(self, values: Sequence[int], dims: Sequence[int]) -> dict[tuple, complex]:
        x, y = values
        return {(y, x): 1.0 + 0j}

    def apply(self, state: CompositeState, wrap: str = "warn") -> CompositeState:
        i, j = state.index(self.a), state.index(self.b)
        if state.dims[i] != state.dims[j]:
            raise ValueError(f"cannot swap modes of size {state.dims[i]} and {state.dims[j]}")
        if state.labels[i].pointer != state.labels[j].pointer:
            raise ValueError("cannot swap a pointer register with a circle mode")
        out = {}
        for key, amp in state.items():
            new = list(key)
            new[i], new[j] = key[j], key[i]
            out[tuple(new)] = amp
        return state.replace(out)


Interaction = ShiftPrepare | PointerCouple | Swap


def shift_prepare(state, source, target, profile, wrap="warn") -> CompositeState:
    return ShiftPrepare(source, target, profile).apply(state, wrap)


def pointer_couple(state, source, meter) -> CompositeState:
    return PointerCouple(source, meter).apply(state)


def swap_states(state, a, b) -> CompositeState:
    return Swap(a, b).apply(state)


def apply_chain(state: CompositeState, chain: Sequence, wrap: str = "warn") -> CompositeState:
    for step in chain:
        state = step.apply(state, wrap)
    return state


# ---------------------------------------------------------------------------
# verifiers


def _domain(kind, dims: Mapping, cap: int):
    names = tuple(kind.labels)
    dims = {label_name(k): int(v) for k, v in dims.items()}
    try:
        ds = tuple(dims[n] for n in names)
    except KeyError as exc:
        raise ValueError(f"no dimension given for label {exc.args[0]!r}") from None
    if int(np.prod(ds)) > cap:
        raise EnumerationCapError(f"domain of size {int(np.prod(ds))} exceeds cap {cap}")
    basis = list(itertools.product(*(residue_order(d) for d in ds)))
    return names, ds, basis


def _pos(values: Sequence[int], ds: Sequence[int]) -> int:
    # residue-order position, consistent with _domain's enumeration
    return int(np.ravel_multi_index(tuple(v % d for v, d in zip(values, ds)), ds))


def unitary_matrix(kind, dims: Mapping, cap: int = MAX_ENUMERATION) -> np.ndarray:
    """Full-space matrix of ``kind`` in residue order.

    For :class:`ShiftPrepare` the fiber columns are the physical action and
    the rest of each total-L sector is completed to an orthonormal basis (QR),
    so the result is unitary and L-conserving whenever the profile is
    normalized. The other kinds are permutations already.
    """
    names, ds, basis = _domain(kind, dims, cap)
    n = len(basis)
    mat = np.zeros((n, n), dtype=complex)
    if not isinstance(kind, ShiftPrepare):
        for col, vals in enumerate(basis):
            for out, amp in kind.basis_action(vals, ds).items():
                mat[_pos(out, ds), col] += amp
        return mat
    d = ds[0]
    for total in range(d):
        sector = [(reduce(total - b, d), b) for b in residue_order(d)]
        v = np.array([kind.profile.amplitude(b) for _, b in sector])
        nv = np.linalg.norm(v)
        q, _ = np.linalg.qr(np.column_stack([v / nv if nv else np.eye(d)[:, 0], np.eye(d)]), mode="complete")
        q[:, 0] = v
        rows = [_pos(t, ds) for t in sector]
        for k, t in enumerate(sector):
            mat[rows, _pos(t, ds)] = q[:, k]
    return mat


def verify_unitary(kind, dims: Mapping, domain: str = "fiducial", cap: int = MAX_ENUMERATION):
    """Check that ``kind`` maps its input domain to orthonormal columns.

    ``domain="fiducial"`` uses only inputs with the fiducial labels at their
    required values (the physically defined action); ``"full"`` checks the
    completed matrix from :func:`unitary_matrix`. Returns ``(ok, deviation)``
    with ``deviation = max |C^dagger C - I|``.
    """
    names, ds, basis = _domain(kind, dims, cap)
    if domain == "full":
        cols = unitary_matrix(kind, dims, cap)
    elif domain == "fiducial":
        fid = {names.index(label_name(k)): v for k, v in kind.fiducial.items()}
        inputs = [vals for vals in basis if all(vals[i] == v for i, v in fid.items())]
        cols = np.zeros((len(basis), len(inputs)), dtype=complex)
        for c, vals in enumerate(inputs):
            for out, amp in kind.basis_action(vals, ds).items():
                cols[_pos(out, ds), c] += amp
    else:
        raise ValueError(f"unknown domain {domain!r}")
    gram = cols.conj().T @ cols
    dev = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    return dev <= AMP_TOL, dev


def verify_conserves_total_L(kind, dims: Mapping, cap: int = MAX_ENUMERATION):
    """Check that every basis input only reaches outputs with the same total L.

    Pointer labels count as zero. Inputs are scanned in residue order (all
    zeros first); returns ``(True, None)`` or ``(False, witness)`` where the
    witness maps label names to the first violating input.
    """
    names, ds, basis = _domain(kind, dims, cap)
    pointers = {label_name(p) for p in getattr(kind, "pointers", ())}
    circle = [i for i, n in enumerate(names) if n not in pointers]
    mods = {ds[i] for i in circle}
    if len(mods) > 1:
        raise ValueError(f"circle labels have different sizes {sorted(mods)}")
    mod = mods.pop() if mods else 1

    def total(vals):
        return sum(vals[i] for i in circle) % mod

    for vals in basis:
        t = total(vals)
        for out, amp in kind.basis_action(vals, ds).items():
            if abs(amp) > AMP_TOL and total(out) != t:
                return False, dict(zip(names, vals))
    return True, None
