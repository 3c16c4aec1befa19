"""Modes of asymmetry and twirling superoperators.

All infinite-time phase averages are evaluated exactly: in the eigenbasis of
the generators an average of ``e^{-i w t}`` times a phase pattern keeps exactly
the matrix elements whose Bohr frequency equals ``w`` (within ``TOL.freq``).

Sign convention: a mode ``rho^(w)`` satisfies
``U(t) rho^(w) U(t)^dag = e^{i w t} rho^(w)`` with ``U(t) = exp(-i t H)``, so
the element ``|i><i'|`` belongs to ``w = E_{i'} - E_i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from .qmat import TOL, DensityMatrix, HamiltonianPair, embed, hermitian_eig, max_abs

__all__ = [
    "ModeDecomposition",
    "ModeCheck",
    "verdict",
    "bohr_frequencies",
    "mode_project",
    "mode_decompose",
    "check_wa_modes",
    "split_twirl",
    "split_frequencies",
    "check_sa_modes",
    "g_twirl",
    "multipartite_wa_check",
]

SIDES = {"A": 0, "B": 1}


def _site(side) -> int:
    if isinstance(side, str):
        try:
            return SIDES[side.upper()]
        except KeyError:
            raise ValueError(f"side must be 'A', 'B' or an index, got {side!r}") from None
    return int(side)


def _unpack(rho, dims=None) -> tuple[np.ndarray, tuple[int, ...]]:
    if isinstance(rho, DensityMatrix):
        return rho.matrix, rho.dims
    if dims is None:
        raise ValueError("dims are required for a bare matrix")
    return np.asarray(rho, dtype=complex), tuple(dims)


def _digits(dims: Sequence[int], site: int) -> np.ndarray:
    """Local index on ``site`` for every composite basis index."""
    dims = tuple(dims)
    stride = int(np.prod(dims[site + 1:]))
    return (np.arange(int(np.prod(dims))) // stride) % dims[site]


def _group(values: np.ndarray) -> list[float]:
    """Distinct values up to ``TOL.freq``, each represented by the cluster mean."""
    out: list[list[float]] = []
    for x in np.sort(np.ravel(values)):
        if out and x - out[-1][-1] <= TOL.freq:
            out[-1].append(float(x))
        else:
            out.append([float(x)])
    return [float(np.mean(c)) for c in out]


def _merge(*freq_lists: Sequence[float]) -> list[float]:
    return _group(np.concatenate([np.asarray(f, dtype=float) for f in freq_lists]))


def verdict(residual: float, encoding: float) -> tuple[bool, bool]:
    """(holds, conclusive) from an anonymity residual and an encoding magnitude."""
    anon_zero = residual <= TOL.holds
    anon_clear = anon_zero or residual >= TOL.fails
    enc_nonzero = encoding >= TOL.fails
    enc_clear = enc_nonzero or encoding <= TOL.holds
    return anon_zero and enc_nonzero, anon_clear and enc_clear


def bohr_frequencies(h: np.ndarray) -> list[float]:
    w, _ = hermitian_eig(h)
    return _group(w[None, :] - w[:, None])


def _local_frame(h: np.ndarray, site: int, dims) -> tuple[np.ndarray, np.ndarray]:
    """Spectrum of ``h`` and the full-space unitary rotating into its eigenbasis."""
    w, v = hermitian_eig(h)
    return w, embed(v, site, dims)


def _mask_apply(m: np.ndarray, frame: np.ndarray, mask: np.ndarray) -> np.ndarray:
    inner = frame.conj().T @ m @ frame
    return frame @ (inner * mask) @ frame.conj().T


def mode_project(rho, h: np.ndarray, side, omega: float, dims=None) -> np.ndarray:
    """Component of ``rho`` at frequency ``omega`` under conjugation by exp(-i t h) on ``side``."""
    m, dims = _unpack(rho, dims)
    site = _site(side)
    w, frame = _local_frame(h, site, dims)
    e = w[_digits(dims, site)]
    mask = np.abs((e[None, :] - e[:, None]) - omega) <= TOL.freq
    return _mask_apply(m, frame, mask)


@dataclass(frozen=True)
class ModeDecomposition:
    generator_spectrum: np.ndarray
    modes: dict[float, np.ndarray]

    def total(self) -> np.ndarray:
        return sum(self.modes.values())

    def completeness_residual(self, rho) -> float:
        m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
        return max_abs(self.total() - m)

    def norms(self) -> dict[float, float]:
        return {w: float(np.linalg.norm(m)) for w, m in self.modes.items()}

    def nonzero(self, tol: float | None = None) -> list[float]:
        tol = TOL.holds if tol is None else tol
        return [w for w, m in self.modes.items() if max_abs(m) > tol]


def mode_decompose(rho, h: np.ndarray, side, dims=None) -> ModeDecomposition:
    m, dims = _unpack(rho, dims)
    w, _ = hermitian_eig(h)
    freqs = bohr_frequencies(h)
    return ModeDecomposition(w, {f: mode_project(m, h, side, f, dims) for f in freqs})


class ModeCheck(NamedTuple):
    holds: bool
    residual: float
    has_nonzero_mode: bool
    conclusive: bool = True
    shift: float = 0.0


def _check_pair_dims(dims, pair: HamiltonianPair) -> None:
    if len(dims) != 2:
        raise ValueError(f"expected a bipartite state, got dims {dims}")
    if pair.h_a.shape[0] != dims[0] or pair.g_b.shape[0] != dims[1]:
        raise ValueError(
            f"generators of size {pair.h_a.shape[0]}/{pair.g_b.shape[0]} do not match dims {dims}")


def _encoding_strength(m, h, site, dims) -> float:
    return max((max_abs(mode_project(m, h, site, f, dims))
                for f in bohr_frequencies(h) if abs(f) > TOL.freq), default=0.0)


def check_wa_modes(rho: DensityMatrix, pair: HamiltonianPair) -> ModeCheck:
    """Weak anonymity as equality of A- and B-side modes at every frequency."""
    m, dims = rho.matrix, rho.dims
    _check_pair_dims(dims, pair)
    freqs = _merge(bohr_frequencies(pair.h_a), bohr_frequencies(pair.g_b))
    residual = max(max_abs(mode_project(m, pair.h_a, 0, f, dims) - mode_project(m, pair.g_b, 1, f, dims))
                   for f in freqs)
    enc = _encoding_strength(m, pair.h_a, 0, dims)
    holds, conclusive = verdict(residual, enc)
    return ModeCheck(holds, residual, enc >= TOL.fails, conclusive)


def _split_phase(pair: HamiltonianPair, dims, shift: float):
    ha, va = hermitian_eig(pair.h_a)
    gb, vb = hermitian_eig(pair.g_b)
    frame = np.kron(va, vb)
    # element (r, c) of X picks up exp(i t (g_{j'} - h_i - shift)) under X -> U X V^dag
    freq = gb[_digits(dims, 1)][None, :] - ha[_digits(dims, 0)][:, None] - shift
    return frame, freq


def split_frequencies(pair: HamiltonianPair, shift: float = 0.0) -> list[float]:
    ha = np.linalg.eigvalsh(pair.h_a)
    gb = np.linalg.eigvalsh(pair.g_b)
    return _group(gb[None, :] - ha[:, None] - shift)


def split_twirl(rho, pair: HamiltonianPair, omega: float, shift: float = 0.0, dims=None) -> np.ndarray:
    """Average of ``e^{-i w t} U_A(t) X V_B(t)^dag`` with ``H_A`` replaced by ``H_A + shift``."""
    m, dims = _unpack(rho, dims)
    _check_pair_dims(dims, pair)
    frame, freq = _split_phase(pair, dims, shift)
    return _mask_apply(m, frame, np.abs(freq - omega) <= TOL.freq)


def check_sa_modes(rho: DensityMatrix, pair: HamiltonianPair, allow_phase: bool = True) -> ModeCheck:
    """Strong anonymity as equality of split-twirled and B-twirled modes.

    With ``allow_phase`` the global phase freedom is realised by shifting
    ``H_A`` by each candidate constant ``g_j - h_i`` (the only shifts that can
    leave a nonzero state invariant); the best shift is reported.
    """
    m, dims = rho.matrix, rho.dims
    _check_pair_dims(dims, pair)
    shifts = [0.0]
    if allow_phase:
        ha = np.linalg.eigvalsh(pair.h_a)
        gb = np.linalg.eigvalsh(pair.g_b)
        shifts = _group(gb[None, :] - ha[:, None])
    b_freqs = bohr_frequencies(pair.g_b)
    best, best_shift = np.inf, 0.0
    for s in shifts:
        freqs = _merge(split_frequencies(pair, s), b_freqs)
        residual = max(max_abs(split_twirl(m, pair, f, s, dims) - mode_project(m, pair.g_b, 1, f, dims))
                       for f in freqs)
        if residual < best:
            best, best_shift = residual, s
    enc = _encoding_strength(m, pair.h_a, 0, dims)
    holds, conclusive = verdict(best, enc)
    return ModeCheck(holds, best, enc >= TOL.fails, conclusive, best_shift)


def g_twirl(rho, pair: HamiltonianPair, dims=None) -> np.ndarray:
    """Phase average of ``rho`` under conjugation by ``U_A(t) (x) V_B(t)^dag``.

    Fixed points are exactly the states with ``[H_A - G_B, rho] = 0``.
    """
    m, dims = _unpack(rho, dims)
    _check_pair_dims(dims, pair)
    ha, va = hermitian_eig(pair.h_a)
    gb, vb = hermitian_eig(pair.g_b)
    k = ha[_digits(dims, 0)] - gb[_digits(dims, 1)]
    mask = np.abs(k[:, None] - k[None, :]) <= TOL.freq
    return _mask_apply(m, np.kron(va, vb), mask)


def multipartite_wa_check(rho: DensityMatrix, generators: Sequence[np.ndarray]) -> ModeCheck:
    """Pairwise mode equality between every two parties, plus a nonzero encoding mode."""
    m, dims = rho.matrix, rho.dims
    n = len(dims)
    if n < 2 or len(generators) != n:
        raise ValueError("need one generator per party and at least two parties")
    for k, g in enumerate(generators):
        if np.shape(g) != (dims[k], dims[k]):
            raise ValueError(f"generator {k} does not match dimension {dims[k]}")
    freqs = _merge(*[bohr_frequencies(g) for g in generators])
    projected = [{f: mode_project(m, g, k, f, dims) for f in freqs} for k, g in enumerate(generators)]
    residual = max((max_abs(projected[a][f] - projected[b][f])
                    for a, b in combinations(range(n), 2) for f in freqs), default=0.0)
    enc = max((max_abs(projected[0][f]) for f in freqs if abs(f) > TOL.freq), default=0.0)
    holds, conclusive = verdict(residual, enc)
    return ModeCheck(holds, residual, enc >= TOL.fails, conclusive)
