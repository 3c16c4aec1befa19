"""Dense linear algebra and quantum-state primitives.

Composite systems use a fixed ordering: for ``dims = (d0, d1, ...)`` the basis
index of the composite maps to a mixed-radix multi-index with subsystem 0 the
most significant digit, which is exactly the convention of ``np.kron``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from functools import reduce
from typing import Sequence

import numpy as np

__all__ = [
    "Tolerances",
    "TOL",
    "configure",
    "StateError",
    "DensityMatrix",
    "Ket",
    "HamiltonianPair",
    "tensor",
    "partial_trace",
    "partial_transpose",
    "hermitian_eig",
    "unitary_of",
    "embed",
    "trace_distance",
    "fidelity",
    "psd_sqrt",
    "sqrt_factor",
    "purify",
    "max_abs",
]


@dataclass
class Tolerances:
    herm: float = 1e-10
    trace: float = 1e-10
    norm: float = 1e-10
    psd: float = 1e-9
    eig: float = 1e-10
    freq: float = 1e-8
    # verdict band: residual <= holds -> zero, >= fails -> nonzero, between -> inconclusive
    holds: float = 1e-9
    fails: float = 1e-6


TOL = Tolerances()


def configure(**overrides: float) -> Tolerances:
    """Update the global tolerances in place and return them."""
    names = {f.name for f in fields(Tolerances)}
    for key, value in overrides.items():
        if key not in names:
            raise KeyError(f"unknown tolerance {key!r}")
        setattr(TOL, key, float(value))
    return TOL


class StateError(ValueError):
    """Raised when a matrix fails the density-matrix invariants."""

    def __init__(self, message: str, residuals: dict[str, float] | None = None):
        super().__init__(message)
        self.residuals = residuals or {}


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def _check_dims(dims: Sequence[int], size: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"invalid subsystem dimensions {dims}")
    if int(np.prod(dims)) != size:
        raise ValueError(f"dims {dims} do not match matrix size {size}")
    return dims


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-one positive semidefinite Hermitian matrix on a composite space.

    The constructor validates Hermiticity, trace and positivity against the
    global tolerances and raises :class:`StateError` with the offending
    residuals otherwise.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StateError(f"density matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise StateError("density matrix has non-finite entries")
        object.__setattr__(self, "dims", _check_dims(self.dims, m.shape[0]))
        object.__setattr__(self, "matrix", _frozen(m))
        res = self.residuals()
        bad = []
        if res["hermiticity"] > TOL.herm:
            bad.append("hermiticity")
        if res["trace"] > TOL.trace:
            bad.append("trace")
        if res["negativity"] > TOL.psd:
            bad.append("positivity")
        if bad:
            raise StateError(f"not a density matrix ({', '.join(bad)})", res)

    def residuals(self) -> dict[str, float]:
        m = self.matrix
        herm = max_abs(m - m.conj().T)
        evals = np.linalg.eigvalsh((m + m.conj().T) / 2)
        return {
            "hermiticity": herm,
            "trace": abs(np.trace(m) - 1.0),
            "negativity": max(0.0, -float(evals[0])),
        }

    @classmethod
    def from_ket(cls, psi: "Ket | np.ndarray", dims: Sequence[int] | None = None) -> "DensityMatrix":
        if isinstance(psi, Ket):
            dims = psi.dims if dims is None else dims
            psi = psi.amplitudes
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), dims if dims is not None else (psi.size,))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def is_pure(self, tol: float | None = None) -> bool:
        return abs(self.purity() - 1.0) <= (TOL.psd if tol is None else tol)


@dataclass(frozen=True)
class Ket:
    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).ravel()
        object.__setattr__(self, "dims", _check_dims(self.dims, a.size))
        nrm = np.linalg.norm(a)
        if abs(nrm - 1.0) > TOL.norm:
            raise StateError(f"ket is not normalised (norm {nrm})", {"norm": abs(nrm - 1.0)})
        object.__setattr__(self, "amplitudes", _frozen(a))

    def dm(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)


@dataclass(frozen=True)
class HamiltonianPair:
    """Local generators ``h_a`` (acting on A) and ``g_b`` (acting on B)."""

    h_a: np.ndarray
    g_b: np.ndarray

    def __post_init__(self):
        for name in ("h_a", "g_b"):
            m = np.asarray(getattr(self, name), dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} must be a square matrix")
            if max_abs(m - m.conj().T) > TOL.herm:
                raise ValueError(f"{name} is not Hermitian")
            object.__setattr__(self, name, _frozen((m + m.conj().T) / 2))

    @classmethod
    def diagonal(cls, h: Sequence[float], g: Sequence[float],
                 basis_a: np.ndarray | None = None,
                 basis_b: np.ndarray | None = None) -> "HamiltonianPair":
        """Pair with spectra ``h``, ``g`` in the given orthonormal column bases."""
        ha = np.diag(np.asarray(h, dtype=float)).astype(complex)
        gb = np.diag(np.asarray(g, dtype=float)).astype(complex)
        if basis_a is not None:
            ha = basis_a @ ha @ basis_a.conj().T
        if basis_b is not None:
            gb = basis_b @ gb @ basis_b.conj().T
        return cls(ha, gb)

    def as_dict(self) -> dict:
        return {"h_a": _matrix_to_pairs(self.h_a), "g_b": _matrix_to_pairs(self.g_b)}


def _matrix_to_pairs(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of matrices or vectors."""
    return reduce(np.kron, [np.asarray(op, dtype=complex) for op in ops])


def _as_matrix(rho) -> tuple[np.ndarray, tuple[int, ...]]:
    if isinstance(rho, DensityMatrix):
        return rho.matrix, rho.dims
    raise TypeError("expected a DensityMatrix")


def partial_trace(rho: DensityMatrix, keep: Sequence[int] | int) -> DensityMatrix:
    """Reduced state on the subsystems listed in ``keep`` (order preserved)."""
    m, dims = _as_matrix(rho)
    keep = sorted({keep} if isinstance(keep, (int, np.integer)) else set(keep))
    n = len(dims)
    if not keep or any(k < 0 or k >= n for k in keep):
        raise IndexError(f"invalid subsystem indices {keep} for {n} parties")
    t = m.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # einsum labels: row i -> letter i, column i -> letter n+i; traced share labels
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = [letters[i] for i in range(n)]
    cols = [letters[i] if i in traced else letters[n + i] for i in range(n)]
    out = [letters[i] for i in keep] + [letters[n + i] for i in keep]
    reduced = np.einsum("".join(rows + cols) + "->" + "".join(out), t)
    kd = tuple(dims[i] for i in keep)
    d = int(np.prod(kd))
    return DensityMatrix(reduced.reshape(d, d), kd)


def partial_transpose(rho: DensityMatrix | np.ndarray, sys: int = 1,
                      dims: Sequence[int] | None = None) -> np.ndarray:
    """Transpose on subsystem ``sys`` only; returns a plain matrix."""
    if isinstance(rho, DensityMatrix):
        m, dims = rho.matrix, rho.dims
    else:
        m, dims = np.asarray(rho), tuple(dims)
    n = len(dims)
    if not 0 <= sys < n:
        raise IndexError(f"invalid subsystem {sys}")
    t = np.asarray(m).reshape(tuple(dims) + tuple(dims))
    axes = list(range(2 * n))
    axes[sys], axes[n + sys] = n + sys, sys
    return t.transpose(axes).reshape(m.shape)


def hermitian_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvector columns of a Hermitian matrix."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    if max_abs(m - m.conj().T) > TOL.herm:
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigh((m + m.conj().T) / 2)


def unitary_of(h: np.ndarray, theta: float) -> np.ndarray:
    """``exp(-i theta h)`` via the eigendecomposition of ``h``."""
    w, v = hermitian_eig(h)
    return (v * np.exp(-1j * theta * w)) @ v.conj().T


def embed(op: np.ndarray, site: int, dims: Sequence[int]) -> np.ndarray:
    """Lift a local operator on subsystem ``site`` to the full space."""
    dims = tuple(dims)
    op = np.asarray(op, dtype=complex)
    if op.shape != (dims[site], dims[site]):
        raise ValueError(f"operator of shape {op.shape} does not act on subsystem {site} of {dims}")
    left = int(np.prod(dims[:site]))
    right = int(np.prod(dims[site + 1:]))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def _same_space(rho: DensityMatrix, sigma: DensityMatrix) -> None:
    if rho.dims != sigma.dims:
        raise ValueError(f"dimension mismatch: {rho.dims} vs {sigma.dims}")


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    _same_space(rho, sigma)
    diff = rho.matrix - sigma.matrix
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Square root of a PSD matrix; tiny negative eigenvalues are clipped."""
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


# eigenvalues at or below this are treated as exact zeros when factoring a state;
# their square roots would otherwise inject ~1e-8 noise into fidelities
FACTOR_CUTOFF = 1e-15


def sqrt_factor(m: np.ndarray) -> np.ndarray:
    """Thin factor ``V`` with ``m = V V^dag``, dropping numerically zero eigenvalues."""
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    keep = w > FACTOR_CUTOFF
    return v[:, keep] * np.sqrt(w[keep])


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Root (Uhlmann) fidelity ``|| sqrt(rho) sqrt(sigma) ||_1``, evaluated as ``|| V_rho^dag V_sigma ||_1``."""
    _same_space(rho, sigma)
    s = np.linalg.svd(sqrt_factor(rho.matrix).conj().T @ sqrt_factor(sigma.matrix), compute_uv=False)
    return float(min(1.0, np.sum(s)))


def purify(rho: DensityMatrix) -> Ket:
    """Purification with the ancilla appended as the last subsystem.

    The ancilla dimension equals the numerical rank of ``rho`` (eigenvalues
    below the PSD tolerance are dropped).
    """
    w, v = np.linalg.eigh(rho.matrix)
    keep = w > TOL.psd
    w, v = w[keep][::-1], v[:, keep][:, ::-1]
    w = w / w.sum()
    r = len(w)
    psi = sum(np.sqrt(w[j]) * np.kron(v[:, j], np.eye(r)[j]) for j in range(r))
    return Ket(psi / np.linalg.norm(psi), rho.dims + (r,))
