"""Fisher information, anonymity-limited copy budgets and figures of merit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .asymmetry import _site
from .classify import find_wa_pair
from .qmat import DensityMatrix, HamiltonianPair, embed, hermitian_eig, sqrt_factor

__all__ = [
    "INF_TOKEN",
    "encode_inf",
    "qfi",
    "theta_grid",
    "fidelity_curve",
    "FidelityMin",
    "min_fidelity_over_theta",
    "n_delta",
    "n_delta_from_fidelity",
    "MeritReport",
    "figure_of_merit",
    "StateMerit",
    "state_merit",
    "multicopy_trace_bound",
    "RobustnessReport",
    "robustness_bounds",
]

INF_TOKEN = "+inf"
# 1 - F below this counts as perfect anonymity (identical encodings)
PERFECT_TOL = 1e-12
QFI_CUTOFF = 1e-12


def encode_inf(x: float):
    """JSON-friendly number: infinities become the ``"+inf"`` token."""
    return INF_TOKEN if math.isinf(x) and x > 0 else x


def qfi(rho: DensityMatrix, h: np.ndarray, side="A") -> float:
    """SLD quantum Fisher information of ``rho`` under ``exp(-i t h)`` on one side.

    F = 2 sum_{ij} (l_i - l_j)^2 / (l_i + l_j) |<i|H|j>|^2 over pairs with
    l_i + l_j above a small cutoff.
    """
    lam, vec = np.linalg.eigh(rho.matrix)
    return _qfi_weights(lam, vec, rho.dims, _site(side))(h)


def _qfi_weights(lam: np.ndarray, vec: np.ndarray, dims, site: int):
    lam = np.clip(lam, 0.0, None)
    s = lam[:, None] + lam[None, :]
    keep = s > QFI_CUTOFF
    w = np.zeros_like(s)
    w[keep] = 2 * (lam[:, None] - lam[None, :])[keep] ** 2 / s[keep]

    def f(h: np.ndarray) -> float:
        big = vec.conj().T @ embed(h, site, dims) @ vec
        return float(np.sum(w * np.abs(big) ** 2))

    return f


def theta_grid(points: int = 256) -> np.ndarray:
    if points < 1:
        raise ValueError("theta grid must contain at least one point")
    return np.linspace(0.0, 2 * np.pi, int(points), endpoint=False)


def _anonymity_frame(rho: DensityMatrix, pair: HamiltonianPair):
    """Pieces for F(theta) = || V^dag U_A^dag V_B V ||_1 with rho = V V^dag.

    Unitary invariance of the fidelity turns the pair of rotated states into a
    single sandwich; ``U_A^dag V_B`` is diagonal in the joint generator
    eigenbasis with phases ``exp(i t (h_i - g_j))``.
    """
    return _anonymity_frame_factor(sqrt_factor(rho.matrix), pair)


def _anonymity_frame_factor(f: np.ndarray, pair: HamiltonianPair):
    ha, va = hermitian_eig(pair.h_a)
    gb, vb = hermitian_eig(pair.g_b)
    frame = np.kron(va, vb)
    k = np.subtract.outer(ha, gb).ravel()
    return f.conj().T @ frame, frame.conj().T @ f, k


def fidelity_curve(rho: DensityMatrix, pair: HamiltonianPair, thetas: Sequence[float]) -> np.ndarray:
    """F(rho_H(t), rho_G(t)) for every t in ``thetas``."""
    return _curve(_anonymity_frame(rho, pair), thetas)


def _curve(frame_parts, thetas) -> np.ndarray:
    left, right, k = frame_parts
    phases = np.exp(1j * np.outer(np.asarray(thetas, dtype=float), k))
    x = np.einsum("ik,tk,kj->tij", left, phases, right)
    sv = np.linalg.svd(x, compute_uv=False)
    return np.minimum(1.0, sv.sum(axis=1))


class FidelityMin(NamedTuple):
    value: float
    argmin: float


def min_fidelity_over_theta(rho: DensityMatrix, pair: HamiltonianPair,
                            grid: int | Sequence[float] = 256, refine: bool = True) -> FidelityMin:
    """Worst-case fidelity between the two encoder hypotheses over a theta grid.

    With ``refine`` the coarse argmin is revisited on a grid four times finer
    spanning its two neighbours.
    """
    thetas = theta_grid(grid) if np.isscalar(grid) else np.asarray(grid, dtype=float)
    if thetas.size == 0:
        raise ValueError("empty theta grid")
    f = fidelity_curve(rho, pair, thetas)
    i = int(np.argmin(f))
    best, arg = float(f[i]), float(thetas[i])
    if refine and thetas.size > 1:
        step = 2 * np.pi / thetas.size if np.isscalar(grid) else float(np.min(np.diff(np.sort(thetas))))
        fine = arg + step * np.arange(-4, 5) / 4
        ff = fidelity_curve(rho, pair, fine)
        j = int(np.argmin(ff))
        if ff[j] < best:
            best, arg = float(ff[j]), float(fine[j] % (2 * np.pi))
    if 1.0 - best <= PERFECT_TOL:
        best = 1.0
    return FidelityMin(best, arg)


def n_delta_from_fidelity(fmin: float, delta: float) -> float:
    """Copy budget keeping Charlie's guessing advantage below ``delta``."""
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 1/2), got {delta}")
    if fmin >= 1.0:
        return math.inf
    if fmin <= 0.0:
        return 0.0
    return math.log(1 - (2 * delta) ** 2) / (2 * math.log(fmin))


def n_delta(rho: DensityMatrix, pair: HamiltonianPair, delta: float,
            grid: int | Sequence[float] = 256) -> float:
    return n_delta_from_fidelity(min_fidelity_over_theta(rho, pair, grid).value, delta)


@dataclass(frozen=True)
class MeritReport:
    qfi_a: float
    qfi_b: float
    avg_qfi: float
    min_fidelity: float
    argmin_theta: float
    delta: float
    n_delta: float
    merit: float

    def to_dict(self) -> dict:
        return {
            "schema": "anonmet.merit/1",
            "qfi_a": self.qfi_a,
            "qfi_b": self.qfi_b,
            "avg_qfi": self.avg_qfi,
            "min_fidelity": self.min_fidelity,
            "argmin_theta": self.argmin_theta,
            "delta": self.delta,
            "n_delta": encode_inf(self.n_delta),
            "merit": encode_inf(self.merit),
        }


def _merit_value(avg: float, fmin: float) -> float:
    if avg <= QFI_CUTOFF:
        return 0.0
    if fmin >= 1.0:
        return math.inf
    return avg / (-math.log(fmin)) if fmin > 0 else 0.0


def figure_of_merit(rho: DensityMatrix, pair: HamiltonianPair,
                    grid: int | Sequence[float] = 256, delta: float = 0.1) -> MeritReport:
    """Average QFI per unit of worst-case distinguishability of the encoders.

    Perfect anonymity with nonzero QFI gives ``+inf``; no encoding at all
    (zero average QFI) gives 0.
    """
    fa = qfi(rho, pair.h_a, "A")
    fb = qfi(rho, pair.g_b, "B")
    avg = (fa + fb) / 2
    fm = min_fidelity_over_theta(rho, pair, grid)
    return MeritReport(fa, fb, avg, fm.value, fm.argmin, delta,
                       n_delta_from_fidelity(fm.value, delta), _merit_value(avg, fm.value))


# --------------------------------------------------------------------------- optimisation

DIRECTION_NOTE = (
    "the state merit is ill-posed as an extremum: the maximum is +inf for every "
    "weakly anonymous state and the minimum is 0 (identity generators); both are reported on request"
)


@dataclass(frozen=True)
class StateMerit:
    value: float
    direction: str
    pair: HamiltonianPair | None
    evaluations: int
    note: str = DIRECTION_NOTE
    history: list = field(default_factory=list, compare=False)

    def to_dict(self) -> dict:
        return {
            "schema": "anonmet.state_merit/1",
            "value": encode_inf(self.value),
            "direction": self.direction,
            "evaluations": self.evaluations,
            "restart_values": [encode_inf(v) for v in self.history],
            "note": self.note,
            "witness": self.pair.as_dict() if self.pair is not None else None,
        }


def _herm_from_params(x: np.ndarray, d: int) -> np.ndarray:
    h = np.zeros((d, d), dtype=complex)
    h[np.diag_indices(d)] = x[:d]
    iu = np.triu_indices(d, 1)
    n = len(iu[0])
    h[iu] = x[d:d + n] + 1j * x[d + n:]
    return h + np.triu(h, 1).conj().T


def _params_from_herm(h: np.ndarray) -> np.ndarray:
    d = h.shape[0]
    iu = np.triu_indices(d, 1)
    return np.concatenate([np.real(np.diag(h)), np.real(h[iu]), np.imag(h[iu])])


def _unit(h: np.ndarray) -> np.ndarray | None:
    nrm = np.max(np.abs(np.linalg.eigvalsh(h)))
    return None if nrm < 1e-12 else h / nrm


def state_merit(rho: DensityMatrix, direction: str = "max", restarts: int = 20, steps: int = 200,
                seed: int = 0, grid: int = 64, step_size: float = 0.25,
                use_witness: bool = True) -> StateMerit:
    """Extremise M(rho; H, G) over unit-operator-norm generator pairs.

    Random-restart coordinate search over the real parameters of both
    generators, renormalised after every move. With ``use_witness`` a weak
    anonymity witness (if the bounded search finds one) seeds the first
    restart.
    """
    if direction not in ("max", "min"):
        raise ValueError("direction must be 'max' or 'min'")
    da, db = rho.dims
    sign = 1.0 if direction == "max" else -1.0
    rng = np.random.default_rng(seed)
    evals = 0
    lam, vec = np.linalg.eigh(rho.matrix)
    qfi_a = _qfi_weights(lam, vec, rho.dims, 0)
    qfi_b = _qfi_weights(lam, vec, rho.dims, 1)
    factor = sqrt_factor(rho.matrix)
    thetas = theta_grid(grid)

    def objective(x):
        nonlocal evals
        h = _unit(_herm_from_params(x[:da * da], da))
        g = _unit(_herm_from_params(x[da * da:], db))
        if h is None or g is None:
            return -math.inf, None
        evals += 1
        pair = HamiltonianPair(h, g)
        avg = (qfi_a(h) + qfi_b(g)) / 2
        fmin = float(np.min(_curve(_anonymity_frame_factor(factor, pair), thetas)))
        fmin = 1.0 if 1.0 - fmin <= PERFECT_TOL else fmin
        return sign * _merit_value(avg, fmin), pair

    starts = []
    if use_witness:
        res = find_wa_pair(rho)
        if res.found:
            starts.append(np.concatenate([_params_from_herm(res.pair.h_a), _params_from_herm(res.pair.g_b)]))
    while len(starts) < restarts:
        starts.append(rng.standard_normal(da * da + db * db))

    best_val, best_pair, history = -math.inf, None, []
    for x in starts:
        val, pair = objective(x)
        step = step_size
        k = 0
        while k < steps and not math.isinf(val):
            i = k % x.size
            moved = False
            for delta in (step, -step):
                y = x.copy()
                y[i] += delta
                v, p = objective(y)
                k += 1
                if v > val:
                    x, val, pair, moved = y, v, p, True
                    break
            if not moved and i == x.size - 1:
                step /= 2
        history.append(sign * val)
        if val > best_val:
            best_val, best_pair = val, pair
        if math.isinf(best_val) and best_val > 0:
            break
    value = 0.0
    if best_pair is not None:
        # report the winner on the default refined grid
        avg = (qfi(rho, best_pair.h_a, "A") + qfi(rho, best_pair.g_b, "B")) / 2
        value = _merit_value(avg, min_fidelity_over_theta(rho, best_pair).value)
    return StateMerit(value, direction, best_pair, evals, history=history)


# --------------------------------------------------------------------------- robustness

def multicopy_trace_bound(t: float, n: int) -> float:
    """Upper bound on T(rho1^n, rho2^n) from the single-copy distance ``t``."""
    t = min(max(t, 0.0), 1.0)
    return math.sqrt(max(0.0, 1 - (1 - t) ** (2 * n)))


@dataclass(frozen=True)
class RobustnessReport:
    epsilon: float
    wa_trace_bound: float
    sa_trace_bound: float
    wa_guess_bound: float
    sa_guess_bound: float
    multicopy_bounds: list[tuple[int, float, float]]

    def to_dict(self) -> dict:
        return {
            "schema": "anonmet.robustness/1",
            "epsilon": self.epsilon,
            "wa_trace_bound": self.wa_trace_bound,
            "sa_trace_bound": self.sa_trace_bound,
            "wa_guess_bound": self.wa_guess_bound,
            "sa_guess_bound": self.sa_guess_bound,
            "multicopy_bounds": [{"n": n, "wa_guess_bound": w, "sa_guess_bound": s}
                                 for n, w, s in self.multicopy_bounds],
        }


def robustness_bounds(epsilon: float, n_list: Sequence[int] = (1, 2, 4, 8, 16)) -> RobustnessReport:
    """Guessing-probability bounds for a state within trace distance ``epsilon`` of an anonymous one.

    Single copy: P_WA <= 1/2 + eps and P_SA <= 1/2 + sqrt(eps - eps^2) (both
    capped at 1). Multiple copies push each single-copy trace bound through
    ``multicopy_trace_bound`` and map it to (1 + T)/2.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    t_wa = min(1.0, 2 * epsilon)
    t_sa = min(1.0, 2 * math.sqrt(epsilon - epsilon**2))
    multi = [(int(n), (1 + multicopy_trace_bound(t_wa, n)) / 2, (1 + multicopy_trace_bound(t_sa, n)) / 2)
             for n in n_list]
    return RobustnessReport(epsilon, t_wa, t_sa, (1 + t_wa) / 2, (1 + t_sa) / 2, multi)
