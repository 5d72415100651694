"""Truncated Fock space: operators and canonical oscillator states.

Everything lives on the levels 0..cutoff-1 as dense complex matrices.
Units: hbar = k_B = 1. Frequencies and decay rates share one time unit,
so energies come out in units of hbar*kappa when time is measured in
1/kappa.

Every state constructor re-checks that the top two Fock levels carry
negligible population; a truncation that clips real weight raises
CutoffLeak instead of silently renormalising it away.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from typing import Union

import numpy as np
import scipy.linalg

from .errors import CutoffLeak

DEFAULT_CUTOFF = 40

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-9
TOL_UNITARY = 1e-9
TOL_LEAK = 1e-8


@dataclasses.dataclass(frozen=True)
class HilbertDim:
    """Dimension of the truncated oscillator space (levels 0..cutoff-1)."""

    cutoff: int

    def __post_init__(self) -> None:
        if isinstance(self.cutoff, bool) or not isinstance(
            self.cutoff, (int, np.integer)
        ):
            raise TypeError(f"cutoff must be an integer, got {self.cutoff!r}")
        if self.cutoff < 2:
            raise ValueError(f"cutoff must be at least 2, got {self.cutoff}")


DimLike = Union[int, HilbertDim]


def as_dim(dim: DimLike) -> HilbertDim:
    """Coerce an int into a HilbertDim; pass HilbertDim through."""
    if isinstance(dim, HilbertDim):
        return dim
    return HilbertDim(dim)


@dataclasses.dataclass(frozen=True)
class Operator:
    """Square complex matrix tied to a HilbertDim. Entries must be finite.

    The wrapped array is read-only; build a new Operator instead of
    mutating in place.
    """

    dim: HilbertDim
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex, copy=True)
        n = self.dim.cutoff
        if m.shape != (n, n):
            raise ValueError(f"expected shape {(n, n)}, got {m.shape}")
        if not np.isfinite(m).all():
            raise ValueError("operator entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def dagger(self) -> "Operator":
        return Operator(self.dim, self.matrix.conj().T)

    def __matmul__(self, other: "Operator") -> "Operator":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return Operator(self.dim, self.matrix @ other.matrix)


class DensityMatrix:
    """Validated state: Hermitian, unit trace and positive within tolerance.

    Validation happens once at construction; instances are immutable.
    The sorted eigenvalues are cached because most downstream quantities
    (entropy, passive energy, trace distances) are spectral.
    """

    __slots__ = ("op", "_eigs")

    def __init__(self, op, *, _spectrum=None):
        if isinstance(op, np.ndarray):
            op = Operator(HilbertDim(op.shape[0]), op)
        m = op.matrix
        herm = np.abs(m - m.conj().T).max()
        if herm > TOL_HERM:
            raise ValueError(f"not Hermitian: max asymmetry {herm:.3e}")
        tr_err = abs(m.trace() - 1.0)
        if tr_err > TOL_TRACE:
            raise ValueError(f"trace deviates from 1 by {tr_err:.3e}")
        if _spectrum is None:
            eigs = np.linalg.eigvalsh(m)
        else:
            # trusted caller (unitary conjugation of a known diagonal)
            eigs = np.sort(np.asarray(_spectrum, dtype=float))
        if eigs[0] < -TOL_PSD:
            raise ValueError(f"negative eigenvalue {eigs[0]:.3e}")
        self.op = op
        self._eigs = eigs

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def dim(self) -> HilbertDim:
        return self.op.dim

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in ascending order."""
        return self._eigs.copy()

    @property
    def min_eig(self) -> float:
        return float(self._eigs[0])

    @property
    def trace_error(self) -> float:
        return float(abs(self.matrix.trace() - 1.0))

    def __repr__(self) -> str:  # pragma: no cover
        return f"DensityMatrix(cutoff={self.dim.cutoff})"


def real_expectation(rho: DensityMatrix, obs) -> float:
    """Tr[rho * obs] for a Hermitian observable, as a real number."""
    m = obs.matrix if isinstance(obs, Operator) else np.asarray(obs)
    return float(np.einsum("ij,ji->", rho.matrix, m).real)


def _check_top_levels(populations: np.ndarray, dim: HilbertDim, what: str) -> None:
    top = float(np.real(populations[-2:]).sum())
    if top > TOL_LEAK:
        raise CutoffLeak(
            f"{what}: top-two-level population {top:.3e} exceeds "
            f"{TOL_LEAK:g} at cutoff {dim.cutoff}"
        )


def annihilation(dim: DimLike = DEFAULT_CUTOFF) -> Operator:
    """Lowering operator a with sqrt(n) on the first superdiagonal."""
    d = as_dim(dim)
    n = d.cutoff
    m = np.zeros((n, n), dtype=complex)
    m[np.arange(n - 1), np.arange(1, n)] = np.sqrt(np.arange(1, n))
    return Operator(d, m)


def number_operator(dim: DimLike = DEFAULT_CUTOFF) -> Operator:
    d = as_dim(dim)
    return Operator(d, np.diag(np.arange(d.cutoff, dtype=complex)))


def harmonic_hamiltonian(omega: float, dim: DimLike = DEFAULT_CUTOFF) -> Operator:
    """H = omega * a^dag a (the n*omega ladder; zero-point offset dropped)."""
    d = as_dim(dim)
    return Operator(d, np.diag(omega * np.arange(d.cutoff, dtype=complex)))


def squeeze_operator(r: float, dim: DimLike = DEFAULT_CUTOFF) -> Operator:
    """Single-mode squeeze exp[(r/2)(a^2 - a^dag^2)], real phase convention.

    The exponent is real antisymmetric, so the result is real orthogonal up
    to rounding; unitarity is still checked against TOL_UNITARY. Raises
    CutoffLeak when the squeezed vacuum no longer fits under the cutoff.
    """
    d = as_dim(dim)
    s = _squeeze_matrix(float(r), d.cutoff)
    err = np.abs(s.T @ s - np.eye(d.cutoff)).max()
    if err > TOL_UNITARY:
        raise ValueError(f"squeeze operator lost unitarity: {err:.3e}")
    _check_top_levels(s[:, 0] ** 2, d, f"squeeze_operator(r={r})")
    return Operator(d, s)


@functools.lru_cache(maxsize=8)
def _squeeze_matrix(r: float, n: int) -> np.ndarray:
    """Real matrix of the squeeze unitary at cutoff n (cached; treat as read-only)."""
    rungs = np.sqrt(np.arange(1, n))
    a = np.zeros((n, n))
    a[np.arange(n - 1), np.arange(1, n)] = rungs
    gen = 0.5 * r * (a @ a - a.T @ a.T)
    out = scipy.linalg.expm(gen)
    out.setflags(write=False)
    return out


def thermal_populations(nbar: float, dim: DimLike) -> np.ndarray:
    """Renormalised geometric level populations p_n ~ (nbar/(nbar+1))^n.

    Raises CutoffLeak when the clipped geometric tail is non-negligible.
    """
    d = as_dim(dim)
    n = d.cutoff
    if nbar < 0:
        raise ValueError(f"nbar must be nonnegative, got {nbar}")
    if nbar == 0:
        p = np.zeros(n)
        p[0] = 1.0
        return p
    q = nbar / (nbar + 1.0)
    tail = q**n  # mass of the discarded geometric tail
    if tail > TOL_LEAK:
        raise CutoffLeak(
            f"thermal state nbar={nbar}: tail mass {tail:.3e} beyond cutoff {n}"
        )
    p = (1.0 - q) * q ** np.arange(n)
    p /= p.sum()
    _check_top_levels(p, d, f"thermal_state(nbar={nbar})")
    return p


def thermal_state(nbar: float, dim: DimLike = DEFAULT_CUTOFF) -> DensityMatrix:
    """Gibbs state of the harmonic ladder with mean occupation nbar."""
    d = as_dim(dim)
    p = thermal_populations(nbar, d)
    return DensityMatrix(Operator(d, np.diag(p.astype(complex))), _spectrum=p)


def coherent_state(alpha: complex, dim: DimLike = DEFAULT_CUTOFF) -> DensityMatrix:
    """Projector onto the coherent state with amplitude alpha."""
    d = as_dim(dim)
    n = d.cutoff
    c = np.zeros(n, dtype=complex)
    c[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for k in range(1, n):
        c[k] = c[k - 1] * alpha / math.sqrt(k)
    norm = float(np.vdot(c, c).real)
    if 1.0 - norm > TOL_LEAK:
        raise CutoffLeak(
            f"coherent_state(alpha={alpha}): clipped weight {1.0 - norm:.3e}"
        )
    c /= math.sqrt(norm)
    pops = np.abs(c) ** 2
    _check_top_levels(pops, d, f"coherent_state(alpha={alpha})")
    spectrum = np.zeros(n)
    spectrum[0] = 1.0
    return DensityMatrix(Operator(d, np.outer(c, c.conj())), _spectrum=spectrum)


def number_state(level: int, dim: DimLike = DEFAULT_CUTOFF) -> DensityMatrix:
    """Projector onto the Fock level |level>."""
    d = as_dim(dim)
    if not 0 <= level < d.cutoff:
        raise ValueError(f"level {level} outside 0..{d.cutoff - 1}")
    m = np.zeros((d.cutoff, d.cutoff), dtype=complex)
    m[level, level] = 1.0
    spectrum = np.zeros(d.cutoff)
    spectrum[0] = 1.0
    # no leak check: a Fock projector is exact at any cutoff that contains it
    return DensityMatrix(Operator(d, m), _spectrum=spectrum)


def squeezed_thermal_state(
    nbar: float, r: float, dim: DimLike = DEFAULT_CUTOFF
) -> DensityMatrix:
    """S(r) rho_thermal(nbar) S(r)^dag.

    Mean occupation is nbar + (2 nbar + 1) sinh^2(r). The spectrum equals
    the thermal one (unitary conjugation), which the validator reuses.
    """
    d = as_dim(dim)
    p = thermal_populations(nbar, d)
    s = _squeeze_matrix(float(r), d.cutoff)
    m = (s * p) @ s.T  # s @ diag(p) @ s.T without forming the diagonal
    _check_top_levels(np.diag(m), d, f"squeezed_thermal_state(nbar={nbar}, r={r})")
    return DensityMatrix(Operator(d, m.astype(complex)), _spectrum=p)
