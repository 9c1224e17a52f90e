"""Wavefunctions on a cyclic angular-momentum lattice and their tensor composites.

Quantum numbers ``l`` live in the signed window ``[-(D // 2), D - D // 2 - 1]``;
arithmetic on them is modulo ``D``. Dense arrays index the window in ascending
order, so array index ``i`` holds quantum number ``i - D // 2``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

AMP_TOL = 1e-10
ENTROPY_TOL = 1e-9
# amplitudes at or below this magnitude are not stored
AMP_EPS = 1e-15


class WrapWarning(UserWarning):
    """A shift pushed a quantum number out of the canonical window."""


class WrapError(ValueError):
    """Raised instead of WrapWarning when the wrap policy is ``"error"``."""


class Role(enum.Enum):
    SYSTEM = "system"
    PREPARER = "preparer"
    GRAND_PREPARER = "grand_preparer"
    METER = "meter"


@dataclass(frozen=True)
class Label:
    """Named subsystem.

    A ``pointer`` label is a meter read-out register; its values are not
    angular momentum and contribute zero to every total.
    """

    name: str
    role: Role
    pointer: bool = False

    def __str__(self) -> str:
        return self.name


SYSTEM = Label("S", Role.SYSTEM)
PREPARER = Label("P", Role.PREPARER)
GRAND_PREPARER = Label("G", Role.GRAND_PREPARER)
METER = Label("M", Role.METER, pointer=True)

STANDARD_LABELS = {lab.name: lab for lab in (SYSTEM, PREPARER, GRAND_PREPARER, METER)}


def label_name(label: Label | str) -> str:
    return label.name if isinstance(label, Label) else str(label)


def as_label(label: Label | str) -> Label:
    if isinstance(label, Label):
        return label
    try:
        return STANDARD_LABELS[label]
    except KeyError:
        raise ValueError(f"unknown label {label!r}; pass a Label to define a new one") from None


# ---------------------------------------------------------------------------
# window arithmetic


def window_min(dim: int) -> int:
    return -(dim // 2)


def window(dim: int) -> range:
    lo = window_min(dim)
    return range(lo, lo + dim)


def in_window(l: int, dim: int) -> bool:
    lo = window_min(dim)
    return lo <= l < lo + dim


def reduce(l: int, dim: int) -> int:
    """Map ``l`` to its residue in the canonical window of ``dim``."""
    lo = window_min(dim)
    return (int(l) - lo) % dim + lo


def residue_order(dim: int) -> list[int]:
    """Window values ordered as residues 0, 1, ..., D-1 (0 first)."""
    return [reduce(r, dim) for r in range(dim)]


def _check_dim(dim: int) -> int:
    if int(dim) != dim or dim < 1:
        raise ValueError(f"lattice dimension must be a positive integer, got {dim!r}")
    return int(dim)


def check_wrap(raw: int, dim: int, policy: str, what: str = "quantum number") -> int:
    """Reduce ``raw`` into the window, reporting a wrap per ``policy``."""
    if in_window(raw, dim):
        return raw
    msg = f"{what} {raw} leaves the window {window_min(dim)}..{window_min(dim) + dim - 1} (D={dim})"
    if policy == "error":
        raise WrapError(msg)
    if policy == "warn":
        warnings.warn(msg, WrapWarning, stacklevel=3)
    elif policy != "ignore":
        raise ValueError(f"unknown wrap policy {policy!r}")
    return reduce(raw, dim)


# ---------------------------------------------------------------------------
# single-mode wavefunctions


@dataclass(frozen=True, eq=False)
class ModeWavefunction:
    """Amplitudes of one circle degree of freedom, ascending over the window."""

    dim: int
    amps: np.ndarray

    def __post_init__(self):
        dim = _check_dim(self.dim)
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.shape != (dim,):
            raise ValueError(f"expected {dim} amplitudes, got {amps.shape[0]}")
        amps.setflags(write=False)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "amps", amps)

    @property
    def window(self) -> range:
        return window(self.dim)

    def amplitude(self, l: int) -> complex:
        return complex(self.amps[reduce(l, self.dim) - window_min(self.dim)])

    def __getitem__(self, l: int) -> complex:
        return self.amplitude(l)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalize(self) -> ModeWavefunction:
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return ModeWavefunction(self.dim, self.amps / n)

    def support(self, tol: float = AMP_EPS) -> list[int]:
        return [l for l, a in zip(self.window, self.amps) if abs(a) > tol]

    def as_dict(self, tol: float = AMP_EPS) -> dict[int, complex]:
        return {l: complex(a) for l, a in zip(self.window, self.amps) if abs(a) > tol}

    def probabilities(self) -> dict[int, float]:
        return {l: abs(a) ** 2 for l, a in self.as_dict().items()}

    def shifted(self, m: int) -> ModeWavefunction:
        """Relabel ``l -> l + m`` cyclically."""
        return ModeWavefunction(self.dim, np.roll(self.amps, m))

    def inner(self, other: ModeWavefunction) -> complex:
        """``<self|other>``."""
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return complex(np.vdot(self.amps, other.amps))

    def allclose(self, other: ModeWavefunction, atol: float = AMP_TOL) -> bool:
        return other.dim == self.dim and bool(np.allclose(self.amps, other.amps, rtol=0, atol=atol))

    def __repr__(self) -> str:
        terms = ", ".join(f"{l}: {a:.6g}" for l, a in self.as_dict(1e-12).items())
        return f"ModeWavefunction(dim={self.dim}, {{{terms}}})"


def basis_state(dim: int, l: int) -> ModeWavefunction:
    """Angular-momentum eigenstate ``|l>``; ``l`` is reduced modulo ``dim``."""
    dim = _check_dim(dim)
    amps = np.zeros(dim, dtype=complex)
    amps[reduce(l, dim) - window_min(dim)] = 1.0
    return ModeWavefunction(dim, amps)


def superposition(dim: int, terms: Mapping[int, complex], return_norm: bool = False):
    """Normalized state with the given (unnormalized) amplitudes.

    Terms whose quantum numbers coincide modulo ``dim`` are added. With
    ``return_norm`` the factor ``1 / ||terms||`` that was applied is
    returned alongside the state.
    """
    dim = _check_dim(dim)
    amps = np.zeros(dim, dtype=complex)
    for l, a in terms.items():
        amps[reduce(l, dim) - window_min(dim)] += complex(a)
    n = float(np.linalg.norm(amps))
    if n == 0:
        raise ValueError("superposition needs at least one nonzero amplitude")
    psi = ModeWavefunction(dim, amps / n)
    return (psi, 1.0 / n) if return_norm else psi


def uniform_state(dim: int, lo: int, hi: int) -> ModeWavefunction:
    """Equal-amplitude superposition of ``|lo>, ..., |hi>`` (inclusive)."""
    if hi < lo:
        raise ValueError(f"empty range {lo}..{hi}")
    return superposition(dim, {l: 1.0 for l in range(lo, hi + 1)})


def uniform_width(dim: int, width: int, center: int = 0) -> ModeWavefunction:
    """Uniform superposition over ``width`` consecutive values centred near ``center``."""
    lo = center - (width - 1) // 2
    return uniform_state(dim, lo, lo + width - 1)


# ---------------------------------------------------------------------------
# composites


@dataclass(frozen=True, eq=False)
class CompositeState:
    """Sparse joint amplitudes over labelled subsystems.

    ``amps`` maps tuples of quantum numbers (one per label, in label order) to
    complex amplitudes. Use :meth:`build` to construct from raw data.
    """

    labels: tuple[Label, ...]
    dims: tuple[int, ...]
    amps: Mapping[tuple[int, ...], complex] = field(repr=False)

    @classmethod
    def build(
        cls,
        labels: Sequence[Label | str],
        dims: Sequence[int],
        amps: Mapping[tuple[int, ...], complex] | Iterable[tuple[tuple[int, ...], complex]],
        normalize: bool = False,
    ) -> CompositeState:
        labels = tuple(as_label(x) for x in labels)
        dims = tuple(_check_dim(d) for d in dims)
        if len(labels) != len(dims):
            raise ValueError("one dimension per label required")
        names = [lab.name for lab in labels]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate labels in {names}")
        items = amps.items() if isinstance(amps, Mapping) else amps
        acc: dict[tuple[int, ...], complex] = {}
        for key, a in items:
            key = tuple(int(v) for v in key)
            if len(key) != len(labels):
                raise ValueError(f"tuple {key} does not match labels {names}")
            for v, d, n in zip(key, dims, names):
                if not in_window(v, d):
                    raise ValueError(f"{n}={v} outside window of D={d}")
            acc[key] = acc.get(key, 0j) + complex(a)
        acc = {k: a for k, a in acc.items() if abs(a) > AMP_EPS}
        norm = float(np.sqrt(sum(abs(a) ** 2 for a in acc.values())))
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalize the zero state")
            acc = {k: a / norm for k, a in acc.items()}
        elif abs(norm - 1.0) > AMP_TOL:
            raise ValueError(f"state norm {norm!r} differs from 1")
        return cls(labels, dims, MappingProxyType(dict(sorted(acc.items()))))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(lab.name for lab in self.labels)

    def index(self, label: Label | str) -> int:
        name = label_name(label)
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"label {name!r} not in state {self.names}") from None

    def label(self, label: Label | str) -> Label:
        return self.labels[self.index(label)]

    def dim(self, label: Label | str) -> int:
        return self.dims[self.index(label)]

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(a) ** 2 for a in self.amps.values())))

    def __len__(self) -> int:
        return len(self.amps)

    def items(self):
        return self.amps.items()

    def amplitude(self, **coords: int) -> complex:
        key = tuple(coords[n] for n in self.names)
        return self.amps.get(key, 0j)

    def replace(self, amps, labels=None, dims=None, normalize=False) -> CompositeState:
        return CompositeState.build(
            self.labels if labels is None else labels,
            self.dims if dims is None else dims,
            amps,
            normalize=normalize,
        )

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dims, dtype=complex)
        offsets = np.array([window_min(d) for d in self.dims])
        for key, a in self.amps.items():
            out[tuple(np.array(key) - offsets)] = a
        return out

    @classmethod
    def from_dense(cls, labels, dims, array: np.ndarray, normalize=False) -> CompositeState:
        array = np.asarray(array, dtype=complex)
        offsets = [window_min(d) for d in dims]
        idx = np.argwhere(np.abs(array) > AMP_EPS)
        amps = {tuple(int(i) + o for i, o in zip(row, offsets)): array[tuple(row)] for row in idx}
        return cls.build(labels, dims, amps, normalize=normalize)

    def allclose(self, other: CompositeState, atol: float = AMP_TOL) -> bool:
        if self.names != other.names or self.dims != other.dims:
            return False
        keys = set(self.amps) | set(other.amps)
        return all(abs(self.amps.get(k, 0j) - other.amps.get(k, 0j)) <= atol for k in keys)

    def __repr__(self) -> str:
        return f"CompositeState(labels={self.names}, dims={self.dims}, terms={len(self.amps)})"


def tensor(parts: Sequence[tuple[Label | str, ModeWavefunction]]) -> CompositeState:
    """Product state of labelled single-mode wavefunctions."""
    labels = [as_label(lab) for lab, _ in parts]
    factors = [psi.as_dict() for _, psi in parts]
    amps: dict[tuple[int, ...], complex] = {(): 1.0 + 0j}
    for f in factors:
        amps = {k + (l,): a * b for k, a in amps.items() for l, b in f.items()}
    state = CompositeState.build(labels, [psi.dim for _, psi in parts], amps, normalize=True)
    return state


# ---------------------------------------------------------------------------
# distributions


def marginal_distribution(state: CompositeState, label: Label | str) -> dict[int, float]:
    """Probability of each value of ``label`` (values with no support omitted)."""
    i = state.index(label)
    out: dict[int, float] = {}
    for key, a in state.items():
        out[key[i]] = out.get(key[i], 0.0) + abs(a) ** 2
    return dict(sorted(out.items()))


def _total_modulus(state: CompositeState, idx: list[int]) -> int | None:
    dims = {state.dims[i] for i in idx if not state.labels[i].pointer}
    if len(dims) > 1:
        raise ValueError(f"scope mixes lattice sizes {sorted(dims)}; totals are ambiguous")
    return dims.pop() if dims else None


def total_L_distribution(state: CompositeState, scope: Iterable[Label | str]) -> dict[int, float]:
    """Distribution of the summed angular momentum of the labels in ``scope``.

    Pointer labels contribute zero. Totals are taken modulo the shared lattice
    size and reported in its canonical window.
    """
    idx = sorted({state.index(s) for s in scope})
    if not idx:
        raise ValueError("scope must name at least one label")
    dim = _total_modulus(state, idx)
    circle = [i for i in idx if not state.labels[i].pointer]
    out: dict[int, float] = {}
    for key, a in state.items():
        t = sum(key[i] for i in circle)
        if dim is not None:
            t = reduce(t, dim)
        out[t] = out.get(t, 0.0) + abs(a) ** 2
    return dict(sorted(out.items()))


def max_abs_difference(p: Mapping[int, float], q: Mapping[int, float]) -> float:
    """Largest pointwise gap between two sparse distributions (missing = 0)."""
    keys = set(p) | set(q)
    return max((abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys), default=0.0)


# ---------------------------------------------------------------------------
# reduced states


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Reduced density matrix of one label, indexed ascending over its window."""

    label: Label
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if not np.allclose(m, m.conj().T, rtol=0, atol=AMP_TOL):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > AMP_TOL:
            raise ValueError(f"density matrix trace {np.trace(m).real!r} differs from 1")
        if np.linalg.eigvalsh(m).min() < -AMP_TOL:
            raise ValueError("density matrix has negative eigenvalues")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def element(self, m: int, mp: int) -> complex:
        """``<m| rho |m'>``."""
        lo = window_min(self.dim)
        return complex(self.matrix[reduce(m, self.dim) - lo, reduce(mp, self.dim) - lo])

    def eigenvalues(self) -> np.ndarray:
        return np.clip(np.linalg.eigvalsh(self.matrix), 0.0, None)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def _reduced_matrix(state: CompositeState, keep: Sequence[int]) -> np.ndarray:
    keep = list(keep)
    rest = [i for i in range(len(state.labels)) if i not in keep]
    kdims = [state.dims[i] for i in keep]
    offsets = [window_min(d) for d in kdims]
    size = int(np.prod(kdims))
    columns: dict[tuple[int, ...], np.ndarray] = {}
    for key, a in state.items():
        r = tuple(key[i] for i in rest)
        vec = columns.setdefault(r, np.zeros(size, dtype=complex))
        flat = np.ravel_multi_index(tuple(key[i] - o for i, o in zip(keep, offsets)), kdims)
        vec[flat] += a
    if not columns:
        return np.zeros((size, size), dtype=complex)
    block = np.stack(list(columns.values()), axis=1)
    return block @ block.conj().T


def reduced_density(state: CompositeState, label: Label | str) -> DensityOperator:
    """Partial trace over every label except ``label``."""
    i = state.index(label)
    return DensityOperator(state.labels[i], _reduced_matrix(state, [i]))


def fidelity_to(target: ModeWavefunction, rho: DensityOperator) -> float:
    """``<target| rho |target>``."""
    if target.dim != rho.dim:
        raise ValueError(f"dimension mismatch: target {target.dim}, rho {rho.dim}")
    f = np.vdot(target.amps, rho.matrix @ target.amps)
    if abs(f.imag) > AMP_TOL:
        raise ValueError(f"fidelity has imaginary part {f.imag!r}")
    return float(min(max(f.real, 0.0), 1.0))


def _von_neumann(matrix: np.ndarray) -> float:
    p = np.linalg.eigvalsh(matrix)
    p = p[p > AMP_EPS]
    return float(max(-np.sum(p * np.log2(p)), 0.0))


def entanglement_entropy(state: CompositeState, label: Label | str | Iterable[Label | str]) -> float:
    """Von Neumann entropy (bits) of ``label`` (or a group of labels) versus the rest."""
    if isinstance(label, (Label, str)):
        label = [label]
    keep = sorted({state.index(x) for x in label})
    if not keep:
        raise ValueError("need at least one label")
    return _von_neumann(_reduced_matrix(state, keep))


def mutual_information(state: CompositeState, a: Label | str, b: Label | str) -> float:
    """``S(a) + S(b) - S(ab)`` in bits; zero iff the pair's reduced state is a product."""
    return (
        entanglement_entropy(state, a)
        + entanglement_entropy(state, b)
        - entanglement_entropy(state, [a, b])
    )
