"""Momentum <-> angle basis changes on the cyclic lattice.

The angle ket is ``|theta> = sum_l exp(-i theta l) |l> / sqrt(D)`` on the grid
``theta_j = 2 pi j / D``, so angle amplitudes are

    psi~(theta_j) = sum_l exp(+i theta_j l) psi(l) / sqrt(D).

Both directions are unit-normalized, unlike the continuum kets they stand in
for. Because ``theta_j * D`` is a multiple of ``2 pi`` the kernel only depends
on ``l mod D`` and the choice of window is immaterial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import (
    CompositeState,
    Label,
    ModeWavefunction,
    label_name,
    window_min,
)


@dataclass(frozen=True, eq=False)
class AngleWavefunction:
    """Amplitudes at ``theta_j = 2 pi j / D``, ``j = 0..D-1``."""

    dim: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} amplitudes, got {amps.shape[0]}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.dim) / self.dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


def _to_residue_order(amps: np.ndarray, dim: int, axis: int = 0) -> np.ndarray:
    return np.roll(amps, window_min(dim), axis=axis)


def _from_residue_order(amps: np.ndarray, dim: int, axis: int = 0) -> np.ndarray:
    return np.roll(amps, -window_min(dim), axis=axis)


def to_angle(psi: ModeWavefunction) -> AngleWavefunction:
    # numpy's inverse DFT carries the exp(+2 pi i j r / D) kernel we need
    x = _to_residue_order(psi.amps, psi.dim)
    return AngleWavefunction(psi.dim, np.fft.ifft(x, norm="ortho"))


def to_momentum(phi: AngleWavefunction) -> ModeWavefunction:
    x = np.fft.fft(phi.amps, norm="ortho")
    return ModeWavefunction(phi.dim, _from_residue_order(x, phi.dim))


def rotate(obj, angle: float, labels=None):
    """Apply ``exp(-i angle L)`` to a wavefunction, or to ``labels`` of a composite.

    In the angle representation this moves the distribution forward by
    ``angle``: ``psi~(theta) -> psi~(theta - angle)``.
    """
    if isinstance(obj, ModeWavefunction):
        ls = np.arange(window_min(obj.dim), window_min(obj.dim) + obj.dim)
        return ModeWavefunction(obj.dim, obj.amps * np.exp(-1j * angle * ls))
    if labels is None:
        raise ValueError("labels required when rotating a composite state")
    if isinstance(labels, (Label, str)):
        labels = [labels]
    idx = [obj.index(x) for x in labels]
    amps = {key: a * np.exp(-1j * angle * sum(key[i] for i in idx)) for key, a in obj.items()}
    return obj.replace(amps)


def joint_angle_amplitudes(state: CompositeState, a: Label | str, b: Label | str) -> np.ndarray:
    """Two-mode angle-basis table ``T[j_a, j_b]`` of a state on exactly ``{a, b}``.

    Row ``j_a`` is the angle ``2 pi j_a / D_a`` of ``a``, column ``j_b`` that of ``b``.
    """
    na, nb = label_name(a), label_name(b)
    if na == nb:
        raise ValueError("need two distinct labels")
    if set(state.names) != {na, nb}:
        extra = sorted(set(state.names) - {na, nb})
        if extra:
            raise ValueError(f"state carries extra labels {extra}; measure or trace them out first")
        raise KeyError(f"state {state.names} lacks one of {na!r}, {nb!r}")
    dense = state.to_dense()
    if state.names != (na, nb):
        dense = dense.T
    da, db = dense.shape
    dense = _to_residue_order(_to_residue_order(dense, da, axis=0), db, axis=1)
    return np.fft.ifft2(dense, norm="ortho")


def relative_angle_table(frame_angle: np.ndarray, target_angle: np.ndarray) -> np.ndarray:
    """``frame(theta_f) * target(theta_s - theta_f)`` on the grid, indexed ``[j_f, j_s]``."""
    d = len(target_angle)
    j = np.arange(d)
    shifted = target_angle[(j[None, :] - j[:, None]) % d]
    return frame_angle[:, None] * shifted


def frame_factorization_residual(
    state: CompositeState,
    frame: Label | str,
    sys: Label | str,
    target: ModeWavefunction,
    frame_profile: ModeWavefunction | None = None,
) -> float:
    """How far the joint angle table is from ``Phi~(theta_f) Psi~(theta_s - theta_f)``.

    Without ``frame_profile`` the frame amplitude at each ``theta_f`` is the
    projection of that table row onto the rotated target, so the residual is
    zero exactly when every row is the target carried along with the frame.
    With ``frame_profile`` the expected table is built from it and matched to
    the state up to one global phase, taken from the largest expected entry.
    """
    table = joint_angle_amplitudes(state, frame, sys)
    d = table.shape[1]
    if table.shape[0] != d or target.dim != d:
        raise ValueError("frame, system and target must share one lattice size")
    t = to_angle(target).amps
    if frame_profile is not None:
        expected = relative_angle_table(to_angle(frame_profile).amps, t)
        k = np.unravel_index(np.argmax(np.abs(expected)), expected.shape)
        ratio = table[k] / expected[k] if abs(expected[k]) > 0 else 1.0
        phase = ratio / abs(ratio) if abs(ratio) > 0 else 1.0
        return float(np.max(np.abs(table - phase * expected)))
    j = np.arange(d)
    rows = t[(j[None, :] - j[:, None]) % d] / np.linalg.norm(t)
    coeff = np.einsum("fs,fs->f", rows.conj(), table)
    return float(np.max(np.abs(table - coeff[:, None] * rows)))

