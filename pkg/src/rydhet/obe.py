"""Optical Bloch equations of the three-level ladder |g> -> |e> -> |r>.

Density matrices are vectorised by column stacking, ``vec(rho)[i + 3 j] =
rho[i, j]``, so that ``vec(A X B) = (B^T kron A) vec(X)``. Hamiltonians are
returned divided by hbar (rad/s).

The batched helpers (``*_stack``) operate on arrays of shape ``(n, 3, 3)``
and ``(n, 9, 9)``; the Doppler integrator calls them with thousands of
velocity classes at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .atomsys import DecoherenceRates, LaserField, two_photon_wavevector
from .errors import DegenerateKernelError

G, E, R = 0, 1, 2
_EYE3 = np.eye(3)
_TRACE_IDX = (0, 4, 8)
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class DensityMatrix:
    """3x3 density matrix over the basis (|g>, |e>, |r>)."""

    matrix: np.ndarray

    @property
    def rho_gg(self) -> float:
        return float(self.matrix[G, G].real)

    @property
    def rho_ee(self) -> float:
        return float(self.matrix[E, E].real)

    @property
    def rho_rr(self) -> float:
        return float(self.matrix[R, R].real)

    @property
    def rho_eg(self) -> complex:
        return complex(self.matrix[E, G])

    @property
    def rho_rg(self) -> complex:
        return complex(self.matrix[R, G])

    @property
    def rho_re(self) -> complex:
        return complex(self.matrix[R, E])

    def vec(self) -> np.ndarray:
        return self.matrix.reshape(-1, order="F")

    @classmethod
    def from_vec(cls, vector: np.ndarray) -> "DensityMatrix":
        return cls(np.asarray(vector, dtype=complex).reshape(3, 3, order="F"))

    @classmethod
    def ground(cls) -> "DensityMatrix":
        m = np.zeros((3, 3), dtype=complex)
        m[G, G] = 1.0
        return cls(m)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def trace_error(self) -> float:
        return float(abs(np.trace(self.matrix) - 1.0))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])


@dataclass(frozen=True)
class Liouvillian:
    """Generator ``d vec(rho)/dt = L vec(rho)`` for one velocity class."""

    matrix: np.ndarray
    velocity: float | None = None
    metadata: dict = field(default_factory=dict)

    def trace_residual(self) -> float:
        """Largest |d tr(rho)/dt| over unit basis operators."""
        return float(np.max(np.abs(self.matrix[list(_TRACE_IDX), :].sum(axis=0))))


def hamiltonian_parts(probe: LaserField, coupling: LaserField,
                      probe_phase: float = 0.0, coupling_phase: float = 0.0):
    """Velocity-independent Hamiltonian and the diagonal d H / d v.

    ``H(v) = H0 + v * diag(dH)``.
    """
    h0 = np.zeros((3, 3), dtype=complex)
    op = probe.peak_rabi * np.exp(1j * probe_phase)
    oc = coupling.peak_rabi * np.exp(1j * coupling_phase)
    h0[E, G] = -0.5 * op
    h0[G, E] = -0.5 * np.conj(op)
    h0[R, E] = -0.5 * oc
    h0[E, R] = -0.5 * np.conj(oc)
    h0[E, E] = -probe.detuning
    h0[R, R] = -(probe.detuning + coupling.detuning)
    dk = two_photon_wavevector(probe, coupling)
    dh = np.array([0.0, probe.wavevector, -dk])
    return h0, dh


def build_hamiltonian(probe: LaserField, coupling: LaserField, velocity=0.0,
                      probe_phase: float = 0.0, coupling_phase: float = 0.0) -> np.ndarray:
    """Rotating-frame ladder Hamiltonian over hbar for atoms at ``velocity``.

    ``H = -1/2 [(Op |e><g| + Oc |r><e|) + h.c.]
          - [(Dp - kp v) |e><e| + (Dp + Dc + dk v) |r><r|]``.
    An array ``velocity`` yields a stack of shape ``velocity.shape + (3, 3)``.
    """
    h0, dh = hamiltonian_parts(probe, coupling, probe_phase, coupling_phase)
    v = np.asarray(velocity, dtype=float)
    h = np.broadcast_to(h0, v.shape + (3, 3)).copy()
    h[..., [0, 1, 2], [0, 1, 2]] += v[..., None] * dh
    return h


def _dissipator(jump: np.ndarray) -> np.ndarray:
    cdc = jump.conj().T @ jump
    return (np.kron(jump.conj(), jump)
            - 0.5 * np.kron(_EYE3, cdc)
            - 0.5 * np.kron(cdc.T, _EYE3))


def _ket_bra(i: int, j: int) -> np.ndarray:
    m = np.zeros((3, 3))
    m[i, j] = 1.0
    return m


def dissipator(rates: DecoherenceRates) -> np.ndarray:
    """Lindblad superoperator of all decay channels.

    Jumps |g><e| (gamma_eg), |e><r| (gamma_re), |g><r| (gamma_rg) and pure
    dephasing sqrt(2 gamma_rel)|r><r|, which damps rho_rg and rho_re by an
    extra gamma_rel.
    """
    return (rates.gamma_eg * _dissipator(_ket_bra(G, E))
            + rates.gamma_re * _dissipator(_ket_bra(E, R))
            + rates.gamma_rg * _dissipator(_ket_bra(G, R))
            + 2.0 * rates.gamma_rel * _dissipator(_ket_bra(R, R)))


def commutator_superop(h: np.ndarray) -> np.ndarray:
    """``-i [H, .]`` as a superoperator; accepts a single H or a stack."""
    h = np.asarray(h)
    ht = np.swapaxes(h, -1, -2)
    if h.ndim == 2:
        return -1j * (np.kron(_EYE3, h) - np.kron(ht, _EYE3))
    n = h.shape[:-2]
    left = np.einsum("ab,...ij->...aibj", _EYE3, h).reshape(n + (9, 9))
    right = np.einsum("...ab,ij->...aibj", ht, _EYE3).reshape(n + (9, 9))
    return -1j * (left - right)


def build_liouvillian(h: np.ndarray, rates: DecoherenceRates,
                      velocity: float | None = None, **metadata) -> Liouvillian:
    return Liouvillian(commutator_superop(h) + dissipator(rates), velocity, metadata)


def liouvillian_stack(probe: LaserField, coupling: LaserField, rates: DecoherenceRates,
                      velocities: np.ndarray) -> np.ndarray:
    """Liouvillians for many velocity classes, shape ``(n, 9, 9)``.

    Only the diagonal of H depends on velocity, so ``L(v) = L0 + v * Lv``.
    """
    h0, dh = hamiltonian_parts(probe, coupling)
    l0 = commutator_superop(h0) + dissipator(rates)
    lv = commutator_superop(np.diag(dh).astype(complex))
    v = np.asarray(velocities, dtype=float).reshape(-1)
    return l0[None, :, :] + v[:, None, None] * lv[None, :, :]


def _trace_constrained(stack: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(stack), axis=(-2, -1), keepdims=True)
    a = stack / np.where(scale > 0, scale, 1.0)
    a[..., 0, :] = 0.0
    a[..., 0, list(_TRACE_IDX)] = 1.0
    return a


def steady_state_stack(stack: np.ndarray) -> np.ndarray:
    """Steady states of a stack of Liouvillians, returned as ``(n, 3, 3)``.

    The first row (the d rho_gg / dt equation) is replaced by the trace
    condition and the system is solved by LU with partial pivoting.
    """
    a = _trace_constrained(np.asarray(stack))
    b = np.zeros(a.shape[:-1] + (1,), dtype=complex)
    b[..., 0, 0] = 1.0
    try:
        x = np.linalg.solve(a, b)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise DegenerateKernelError("Liouvillian kernel is not one-dimensional") from exc
    if not np.all(np.isfinite(x)):
        raise DegenerateKernelError("steady-state solve produced non-finite values")
    rho = np.swapaxes(x.reshape(x.shape[:-1] + (3, 3)), -1, -2)
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
    tr = np.trace(rho, axis1=-2, axis2=-1).real
    return rho / tr[..., None, None]


def steady_state(liouvillian: Liouvillian) -> DensityMatrix:
    """Unique trace-one fixed point of ``liouvillian``.

    Raises :class:`DegenerateKernelError` when the kernel is degenerate, e.g.
    when every decay rate vanishes.
    """
    a = _trace_constrained(liouvillian.matrix[None])[0]
    if np.linalg.cond(a) > _COND_LIMIT:
        raise DegenerateKernelError(
            f"trace-constrained Liouvillian is singular (cond > {_COND_LIMIT:g})"
        )
    return DensityMatrix(steady_state_stack(liouvillian.matrix[None])[0])


def time_evolve(rho0: DensityMatrix, liouvillian: Liouvillian, t: float) -> DensityMatrix:
    """``exp(L t) vec(rho0)`` by scaling-and-squaring Pade."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return DensityMatrix(rho0.matrix.copy())
    prop = scipy.linalg.expm(liouvillian.matrix * t)
    return DensityMatrix.from_vec(prop @ rho0.vec())


def two_level_rho_eg(rabi: float, detuning, gamma: float) -> np.ndarray:
    """Closed-form steady-state coherence of the driven |g>-|e> pair.

    ``rho_eg = (O/2)(-d + i G/2) / (d^2 + G^2/4 + O^2/2)``; with the coupling
    beam off, the ladder reduces to this (|r> stays empty).
    """
    d = np.asarray(detuning, dtype=float)
    return 0.5 * rabi * (-d + 0.5j * gamma) / (d * d + 0.25 * gamma * gamma + 0.5 * rabi * rabi)
