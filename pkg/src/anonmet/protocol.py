"""Simulation of the three-party anonymous encoding protocol and its adversaries.

Alice or Bob imprints ``theta`` on their half of a shared state, both halves go
to Charlie, who measures every copy with a fixed product POVM, estimates
``theta`` by grid maximum likelihood and guesses the encoder by a likelihood
ratio. The analytic Helstrom value is reported next to the simulated guess.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .asymmetry import _digits
from .classify import find_wa_pair, is_wa
from .metrology import multicopy_trace_bound, theta_grid
from .qmat import (TOL, DensityMatrix, HamiltonianPair, embed, purify, tensor,
                   trace_distance, unitary_of)

__all__ = [
    "ProtocolTranscript",
    "PathState",
    "AttackResult",
    "Delocalisation",
    "HelstromResult",
    "ic_povm",
    "product_povm",
    "encode",
    "run_protocol",
    "purification_attack",
    "delocalised_measurement",
    "helstrom_guess_probability",
]

MLE_GRID = 1024
# log-likelihood differences below this (relative) count as ties
LIKELIHOOD_TIE = 1e-9
PROB_FLOOR = 1e-300


# --------------------------------------------------------------------------- measurement

def _weyl_orbit(fiducial: np.ndarray) -> list[np.ndarray]:
    d = len(fiducial)
    w = np.exp(2j * np.pi / d)
    x = np.roll(np.eye(d), 1, axis=0)
    z = np.diag(w ** np.arange(d))
    out = []
    for a in range(d):
        for b in range(d):
            v = np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(z, b) @ fiducial
            out.append(np.outer(v, v.conj()) / d)
    return out


def _fiducial(d: int) -> np.ndarray:
    if d == 2:
        beta = math.acos(1 / math.sqrt(3))
        v = np.array([math.cos(beta / 2), np.exp(1j * np.pi / 4) * math.sin(beta / 2)])
    elif d == 3:
        v = np.array([0.0, 1.0, -1.0], dtype=complex)
    else:
        # generic fiducial: distinct moduli and irrational-looking phases make the orbit IC
        k = np.arange(d)
        v = (1.0 + k) * np.exp(1j * np.sqrt(2.0) * k**2)
    return v / np.linalg.norm(v)


def ic_povm(d: int) -> np.ndarray:
    """Informationally complete POVM on one system, shape (d*d, d, d).

    Weyl-Heisenberg orbit of a fiducial vector, scaled by 1/d so the elements
    sum to the identity. For d = 2 and 3 the fiducials give symmetric (SIC)
    POVMs; other dimensions use a generic fiducial.
    """
    if d == 1:
        return np.ones((1, 1, 1), dtype=complex)
    return np.array(_weyl_orbit(_fiducial(d)))


def product_povm(dims) -> np.ndarray:
    """Tensor product of single-system IC POVMs, outcomes in row-major order."""
    elems = [ic_povm(d) for d in dims]
    out = elems[0]
    for e in elems[1:]:
        out = np.einsum("aij,bkl->abikjl", out, e).reshape(
            out.shape[0] * e.shape[0], out.shape[1] * e.shape[1], out.shape[2] * e.shape[2])
    return out


# --------------------------------------------------------------------------- transcript

def _encoder_site(encoder: str) -> int:
    if encoder not in ("A", "B"):
        raise ValueError(f"encoder must be 'A' or 'B', got {encoder!r}")
    return 0 if encoder == "A" else 1


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not (0.0 <= theta < 2 * np.pi):
        raise ValueError(f"theta must lie in [0, 2pi), got {theta}")
    return theta


def encode(rho: DensityMatrix, pair: HamiltonianPair, encoder: str, theta: float) -> DensityMatrix:
    """State after the chosen party applies exp(-i theta H) to their half."""
    site = _encoder_site(encoder)
    h = pair.h_a if site == 0 else pair.g_b
    u = embed(unitary_of(h, theta), site, rho.dims)
    return DensityMatrix(u @ rho.matrix @ u.conj().T, rho.dims)


@dataclass(frozen=True)
class ProtocolTranscript:
    encoder: str
    theta_true: float
    n_copies: int
    seed: int
    theta_estimate: float
    estimate_stderr: float
    charlie_guess: str
    charlie_guess_prob_bound: float
    helstrom_optimal_prob: float
    trace_distance: float = 0.0
    flat_likelihood: bool = False
    log_likelihood_ratio: float = 0.0

    def to_dict(self) -> dict:
        return {
            "schema": "anonmet.transcript/1",
            "encoder": self.encoder,
            "theta_true": self.theta_true,
            "n_copies": self.n_copies,
            "seed": self.seed,
            "theta_estimate": self.theta_estimate,
            "estimate_stderr": self.estimate_stderr if math.isfinite(self.estimate_stderr) else "+inf",
            "charlie_guess": self.charlie_guess,
            "charlie_guess_prob_bound": self.charlie_guess_prob_bound,
            "helstrom_optimal_prob": self.helstrom_optimal_prob,
            "trace_distance": self.trace_distance,
            "flat_likelihood": self.flat_likelihood,
            "log_likelihood_ratio": self.log_likelihood_ratio,
        }


def _copy_uniform(seed: int, copy: int) -> float:
    # one Philox stream per copy: (key=seed, counter=copy) makes copies independent of order
    gen = np.random.Generator(np.random.Philox(key=seed, counter=[copy, 0, 0, 0]))
    return float(gen.random())


def _sample(p: np.ndarray, seed: int, n: int) -> np.ndarray:
    cdf = np.cumsum(p)
    u = np.array([_copy_uniform(seed, k) for k in range(n)]) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(p) - 1)
    return np.bincount(idx, minlength=len(p))


def _outcome_probs(rho: DensityMatrix, h: np.ndarray, site: int, povm: np.ndarray,
                   thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Outcome probabilities and their theta-derivatives on a grid.

    Works in the generator eigenbasis: rho(t)_{rc} = rho_{rc} exp(-i t (e_r - e_c)).
    """
    w, v = np.linalg.eigh(h)
    frame = embed(v, site, rho.dims)
    levels = w[_digits(rho.dims, site)]
    r = frame.conj().T @ rho.matrix @ frame
    e = np.einsum("ic,kij,jr->kcr", frame.conj(), povm, frame)
    gap = levels[:, None] - levels[None, :]
    phases = np.exp(-1j * np.multiply.outer(thetas, gap))
    p = np.real(np.einsum("kcr,rc,trc->tk", e, r, phases))
    dp = np.real(np.einsum("kcr,rc,trc->tk", e, -1j * gap * r, phases))
    return p, dp


def _classical_fisher(p: np.ndarray, dp: np.ndarray) -> float:
    keep = p > 1e-14
    return float(np.sum(dp[keep] ** 2 / p[keep]))


def run_protocol(rho: DensityMatrix, pair: HamiltonianPair, encoder: str, theta_true: float,
                 n_copies: int, seed: int = 0, grid: int = MLE_GRID) -> ProtocolTranscript:
    """Simulate one run: encode, send ``n_copies`` copies, let Charlie estimate and guess.

    Every copy is measured with ``product_povm(rho.dims)``. The likelihood is
    maximised over ``grid`` values of theta under both hypotheses; the
    hypothesis with the larger maximum is Charlie's identity guess, exact ties are
    broken by a seeded coin. The standard error comes from the classical
    Fisher information at the estimate.
    """
    theta_true = _check_theta(theta_true)
    site = _encoder_site(encoder)
    if n_copies < 1:
        raise ValueError(f"n_copies must be at least 1, got {n_copies}")
    seed = int(seed)
    povm = product_povm(rho.dims)
    h_true = pair.h_a if site == 0 else pair.g_b
    p_true, _ = _outcome_probs(rho, h_true, site, povm, np.array([theta_true]))
    p_true = np.clip(p_true[0], 0.0, None)
    counts = _sample(p_true, seed, n_copies)

    thetas = theta_grid(grid)
    loglik, probs = {}, {}
    for label, h, s in (("A", pair.h_a, 0), ("B", pair.g_b, 1)):
        p, dp = _outcome_probs(rho, h, s, povm, thetas)
        probs[label] = (p, dp)
        loglik[label] = np.log(np.clip(p, PROB_FLOOR, None)) @ counts

    best = {k: float(np.max(v)) for k, v in loglik.items()}
    scale = max(1.0, abs(best["A"]), abs(best["B"]))
    llr = best["A"] - best["B"]
    if abs(llr) <= LIKELIHOOD_TIE * scale:
        coin = np.random.Generator(np.random.Philox(key=seed, counter=[n_copies, 1, 0, 0]))
        guess = "A" if coin.random() < 0.5 else "B"
    else:
        guess = "A" if llr > 0 else "B"

    ll = loglik[guess]
    flat = all(float(np.ptp(v)) <= LIKELIHOOD_TIE * scale for v in loglik.values())
    if flat:
        estimate, stderr = 0.0, math.inf
    else:
        i = int(np.argmax(ll))
        estimate = float(thetas[i])
        p, dp = probs[guess]
        fi = _classical_fisher(p[i], dp[i])
        stderr = 1 / math.sqrt(n_copies * fi) if fi > 0 else math.inf

    t = trace_distance(encode(rho, pair, "A", theta_true), encode(rho, pair, "B", theta_true))
    t = min(1.0, t)
    return ProtocolTranscript(
        encoder=encoder,
        theta_true=theta_true,
        n_copies=int(n_copies),
        seed=seed,
        theta_estimate=estimate,
        estimate_stderr=stderr,
        charlie_guess=guess,
        charlie_guess_prob_bound=(1 + multicopy_trace_bound(t, n_copies)) / 2,
        helstrom_optimal_prob=(1 + t) / 2,
        trace_distance=t,
        flat_likelihood=flat,
        log_likelihood_ratio=float(llr),
    )


# --------------------------------------------------------------------------- adversaries

class HelstromResult(NamedTuple):
    probability: float
    exact: bool


def _tensor_power(rho: DensityMatrix, n: int) -> DensityMatrix:
    return DensityMatrix(tensor(*([rho.matrix] * n)), rho.dims * n)


def helstrom_guess_probability(rho1: DensityMatrix, rho2: DensityMatrix, n: int = 1) -> HelstromResult:
    """Optimal probability of telling ``rho1^n`` from ``rho2^n`` with equal priors.

    Exact whenever the n-copy dimension is at most 4096; otherwise the
    multi-copy trace-distance bound is returned and ``exact`` is False.
    """
    if rho1.dims != rho2.dims:
        raise ValueError(f"dimension mismatch: {rho1.dims} vs {rho2.dims}")
    if n < 1:
        raise ValueError("n must be at least 1")
    t1 = min(1.0, trace_distance(rho1, rho2))
    if n == 1:
        return HelstromResult((1 + t1) / 2, True)
    if rho1.dim ** n <= 4096:
        t = min(1.0, trace_distance(_tensor_power(rho1, n), _tensor_power(rho2, n)))
        return HelstromResult((1 + t) / 2, True)
    return HelstromResult((1 + multicopy_trace_bound(t1, n)) / 2, False)


class AttackResult(NamedTuple):
    leak: float
    sa_safe: bool
    applicable: bool
    max_leak: float
    argmax_theta: float


def _pure_leak(psi: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    """T(u psi, v psi) for pure states, as the norm of the component of v psi orthogonal to u psi.

    The global phase drops out; this form avoids the sqrt(1 - overlap^2) cancellation.
    """
    a, b = u @ psi, v @ psi
    return float(np.linalg.norm(b - np.vdot(a, b) * a))


def purification_attack(rho: DensityMatrix, pair: HamiltonianPair | None = None, theta: float = 1.0,
                        grid: int = 256) -> AttackResult:
    """Charlie holds a purification of ``rho`` and tries to tell who encoded.

    ``leak`` is the trace distance between the two encoder hypotheses on the
    purified state at ``theta``; ``max_leak`` is its maximum over the theta
    grid and ``sa_safe`` means that maximum vanishes. The attack is only
    applicable when the pair is a weak-anonymity witness; without a pair one
    is searched for.
    """
    theta = _check_theta(theta)
    if pair is None:
        found = find_wa_pair(rho)
        if not found.found:
            return AttackResult(0.0, False, False, 0.0, 0.0)
        pair = found.pair
    if not is_wa(rho, pair).holds:
        return AttackResult(0.0, False, False, 0.0, 0.0)
    ket = purify(rho)
    dims = ket.dims
    psi = ket.amplitudes

    def leak_at(t: float) -> float:
        u = embed(unitary_of(pair.h_a, t), 0, dims)
        v = embed(unitary_of(pair.g_b, t), 1, dims)
        return _pure_leak(psi, u, v)

    thetas = theta_grid(grid)
    leaks = np.array([leak_at(t) for t in thetas])
    i = int(np.argmax(leaks))
    max_leak = float(leaks[i])
    return AttackResult(leak_at(theta), max_leak <= TOL.holds, True, max_leak, float(thetas[i]))


@dataclass(frozen=True)
class PathState:
    """Path qubit ``a|L> + b|R>`` together with the shared state, on P (x) A (x) B."""

    a: complex
    b: complex
    joint: DensityMatrix = field(repr=False)

    def __post_init__(self):
        norm = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(norm - 1) > TOL.norm:
            raise ValueError(f"path amplitudes are not normalised: |a|^2+|b|^2 = {norm}")

    @classmethod
    def prepare(cls, rho: DensityMatrix, a: complex, b: complex) -> "PathState":
        path = np.array([a, b], dtype=complex)
        joint = DensityMatrix(np.kron(np.outer(path, path.conj()), rho.matrix), (2,) + rho.dims)
        return cls(complex(a), complex(b), joint)

    def path_coherence(self) -> float:
        return float(abs(_path_block(self.joint.matrix)[0, 1]))


def _path_block(m: np.ndarray) -> np.ndarray:
    d = m.shape[0] // 2
    return np.einsum("aibi->ab", m.reshape(2, d, 2, d))


class Delocalisation(NamedTuple):
    coherence_in: float
    coherence_out: float
    factorized: bool


def delocalised_measurement(rho: DensityMatrix, pair: HamiltonianPair, a: complex, b: complex,
                            theta: float) -> Delocalisation:
    """Encode with a path-controlled unitary and compare path coherence before and after.

    W = |L><L| (x) U_A (x) 1 + |R><R| (x) 1 (x) V_B. The path coherence is kept
    exactly when the shared state factors out of the output, which is the
    strong-anonymity condition up to a phase.
    """
    state = PathState.prepare(rho, a, b)
    u = embed(unitary_of(pair.h_a, theta), 0, rho.dims)
    v = embed(unitary_of(pair.g_b, theta), 1, rho.dims)
    ll = np.diag([1.0, 0.0])
    rr = np.diag([0.0, 1.0])
    w = np.kron(ll, u) + np.kron(rr, v)
    out = w @ state.joint.matrix @ w.conj().T
    c_in = state.path_coherence()
    c_out = abs(_path_block(out)[0, 1])
    return Delocalisation(float(c_in), float(c_out), bool(abs(c_in - c_out) <= TOL.holds))
