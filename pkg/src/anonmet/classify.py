"""Anonymity verdicts, witness search and the correlation hierarchy.

A state is weakly anonymous (WA) for a pair ``(H_A, G_B)`` when
``[H_A - G_B, rho] = 0`` while ``[H_A, rho] != 0``; it is strongly anonymous
(SA) when additionally ``(H_A - G_B) rho = c rho`` for a constant ``c`` (the
constant absorbs the irrelevant global phase).  A state is *aligned
discordant* / *aligned entangled* when some pair makes it WA / SA.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .asymmetry import verdict
from .qmat import TOL, DensityMatrix, HamiltonianPair, embed, max_abs, partial_trace, partial_transpose
from .states import local_eigenbasis, random_unitary

__all__ = [
    "HamiltonianPair",
    "Verdict",
    "is_wa",
    "is_sa",
    "is_wa_multipartite",
    "is_sa_multipartite",
    "integer_spectra",
    "candidate_bases",
    "SearchResult",
    "find_wa_pair",
    "find_sa_pair",
    "PPTResult",
    "is_entangled_ppt",
    "ClassicalResult",
    "is_classical",
    "schmidt_rank",
    "ClassificationReport",
    "classify",
]


class Verdict(NamedTuple):
    holds: bool
    residual: float
    encoding_residual: float
    conclusive: bool = True
    shift: float = 0.0


def _bipartite(rho: DensityMatrix, pair: HamiltonianPair) -> tuple[np.ndarray, np.ndarray]:
    dims = rho.dims
    if len(dims) != 2:
        raise ValueError(f"expected a bipartite state, got dims {dims}")
    if pair.h_a.shape[0] != dims[0] or pair.g_b.shape[0] != dims[1]:
        raise ValueError(f"generators of size {pair.h_a.shape[0]}/{pair.g_b.shape[0]} "
                         f"do not match dims {dims}")
    ha = embed(pair.h_a, 0, dims)
    return ha, ha - embed(pair.g_b, 1, dims)


def is_wa(rho: DensityMatrix, pair: HamiltonianPair) -> Verdict:
    """Commutator form: anonymity ``[H_A - G_B, rho] = 0``, encoding ``[H_A, rho] != 0``."""
    ha, k = _bipartite(rho, pair)
    m = rho.matrix
    anon = max_abs(k @ m - m @ k)
    enc = max_abs(ha @ m - m @ ha)
    holds, conclusive = verdict(anon, enc)
    return Verdict(holds, anon, enc, conclusive)


def is_sa(rho: DensityMatrix, pair: HamiltonianPair, allow_phase: bool = True) -> Verdict:
    """Algebraic form ``(H_A (x) 1) rho = (1 (x) G_B) rho`` up to a constant shift.

    Differentiating ``U_A(t) rho = e^{i phi(t)} V_B(t) rho`` at ``t = 0`` and
    iterating gives ``(H_A - G_B) rho = c rho``; the best real ``c`` in the
    least-squares sense is ``Tr(rho K rho) / Tr(rho^2)``.
    """
    ha, k = _bipartite(rho, pair)
    m = rho.matrix
    km = k @ m
    c = float(np.real(np.vdot(m, km)) / np.real(np.vdot(m, m))) if allow_phase else 0.0
    residual = max_abs(km - c * m)
    enc = max_abs(ha @ m - m @ ha)
    holds, conclusive = verdict(residual, enc)
    return Verdict(holds, residual, enc, conclusive, c)


def _check_generators(rho: DensityMatrix, generators) -> list[np.ndarray]:
    if len(rho.dims) < 2 or len(generators) != len(rho.dims):
        raise ValueError("need one generator per party and at least two parties")
    return [embed(g, k, rho.dims) for k, g in enumerate(generators)]


def is_wa_multipartite(rho: DensityMatrix, generators: Sequence[np.ndarray]) -> Verdict:
    ops = _check_generators(rho, generators)
    m = rho.matrix
    anon = max(max_abs((a - b) @ m - m @ (a - b)) for a, b in itertools.combinations(ops, 2))
    enc = max_abs(ops[0] @ m - m @ ops[0])
    holds, conclusive = verdict(anon, enc)
    return Verdict(holds, anon, enc, conclusive)


def is_sa_multipartite(rho: DensityMatrix, generators: Sequence[np.ndarray]) -> Verdict:
    """``U_a rho = U_b rho`` (up to phase) for every pair of parties."""
    ops = _check_generators(rho, generators)
    m = rho.matrix
    nrm = np.real(np.vdot(m, m))
    residual = 0.0
    for a, b in itertools.combinations(ops, 2):
        km = (a - b) @ m
        c = np.real(np.vdot(m, km)) / nrm
        residual = max(residual, max_abs(km - c * m))
    enc = max_abs(ops[0] @ m - m @ ops[0])
    holds, conclusive = verdict(residual, enc)
    return Verdict(holds, residual, enc, conclusive)


# --------------------------------------------------------------------------- search

def integer_spectra(d: int, bound: int) -> Iterator[tuple[int, ...]]:
    """Non-constant integer spectra in [0, bound]^d with minimum 0, lexicographic."""
    for h in itertools.product(range(bound + 1), repeat=d):
        if min(h) == 0 and max(h) > 0:
            yield h


def _is_degenerate(w: np.ndarray) -> bool:
    w = np.sort(w)
    return bool(np.any(np.diff(w) <= TOL.freq))


def _schmidt_bases(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(rho.matrix)
    psi = v[:, -1].reshape(rho.dims)
    u, _, vh = np.linalg.svd(psi)
    return u, vh.T


def schmidt_rank(rho: DensityMatrix, tol: float = 1e-8) -> int:
    """Schmidt rank of a pure bipartite state."""
    if not rho.is_pure():
        raise ValueError("Schmidt rank is defined here for pure states only")
    w, v = np.linalg.eigh(rho.matrix)
    s = np.linalg.svd(v[:, -1].reshape(rho.dims), compute_uv=False)
    return int(np.sum(s > tol))


def candidate_bases(rho: DensityMatrix, site: int, n_random: int = 0,
                    seed=None) -> tuple[list[np.ndarray], bool]:
    """Local bases a witness generator may be diagonal in, and a degeneracy flag.

    Any anonymity witness commutes with the marginal, so for a nondegenerate
    marginal its eigenbasis is the only candidate. Degenerate eigenspaces leave
    a gauge freedom; there the canonical basis is tried first, then (for pure
    states) the Schmidt basis, then ``n_random`` random rotations inside the
    degenerate eigenspaces.
    """
    marg = partial_trace(rho, [site]).matrix
    w, u = local_eigenbasis(marg)
    degenerate = _is_degenerate(w)
    bases = [u]
    if degenerate and len(rho.dims) == 2 and rho.is_pure():
        bases.append(_schmidt_bases(rho)[site])
    if degenerate and n_random:
        # independent streams per site so the two sides are not rotated in lockstep
        if isinstance(seed, np.random.Generator):
            rng = seed
        else:
            rng = np.random.default_rng([site] if seed is None else [int(seed), site])
        blocks, start = [], 0
        while start < len(w):
            stop = start + 1
            while stop < len(w) and abs(w[stop] - w[start]) <= TOL.freq:
                stop += 1
            blocks.append((start, stop))
            start = stop
        for _ in range(n_random):
            rot = np.zeros((len(w), len(w)), dtype=complex)
            for a, b in blocks:
                rot[a:b, a:b] = random_unitary(b - a, rng)
            bases.append(u @ rot)
    return bases, degenerate


@dataclass
class SearchResult:
    """Outcome of a witness search.

    ``status`` is ``"found"``, ``"witnessed-no"`` (a theorem or a complete
    search rules a witness out), ``"search-exhausted"`` (nothing in the bounded search
    space) or ``"inconclusive"`` (degenerate marginals or residuals inside the
    verdict band).
    """

    pair: HamiltonianPair | None
    status: str
    verdict: Verdict | None = None
    spectra: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    degenerate: bool = False
    reason: str = ""
    checked: int = 0

    @property
    def found(self) -> bool:
        return self.pair is not None

    def __bool__(self) -> bool:
        return self.found

    def to_dict(self) -> dict:
        out = {
            "found": self.found,
            "status": self.status,
            "reason": self.reason,
            "degenerate_marginal": self.degenerate,
            "candidates_checked": self.checked,
        }
        if self.found:
            out["witness"] = self.pair.as_dict()
            out["spectra"] = {"h_a": list(self.spectra[0]), "g_b": list(self.spectra[1])}
            out["residual"] = self.verdict.residual
            out["encoding_residual"] = self.verdict.encoding_residual
        return out


def _search(rho: DensityMatrix, bound: int, strong: bool, n_random: int, seed) -> SearchResult:
    if len(rho.dims) != 2:
        raise ValueError("witness search needs a bipartite state")
    da, db = rho.dims
    bases_a, deg_a = candidate_bases(rho, 0, n_random, seed)
    bases_b, deg_b = candidate_bases(rho, 1, n_random, seed)
    degenerate = deg_a or deg_b
    # fixed bases are tried in every combination, random ones in matched pairs
    n_a = len(bases_a) - (n_random if deg_a else 0)
    n_b = len(bases_b) - (n_random if deg_b else 0)
    frames = list(itertools.product(bases_a[:n_a], bases_b[:n_b]))
    if degenerate and n_random:
        rand_a = bases_a[n_a:] or [bases_a[0]] * n_random
        rand_b = bases_b[n_b:] or [bases_b[0]] * n_random
        frames += list(zip(rand_a, rand_b))
    specs_a = list(integer_spectra(da, bound))
    specs_b = list(integer_spectra(db, bound))
    m = rho.matrix
    checked = 0
    band_hit = False
    idx_a = np.repeat(np.arange(da), db)
    idx_b = np.tile(np.arange(db), da)
    for ua, ub in frames:
        frame = np.kron(ua, ub)
        r = frame.conj().T @ m @ frame
        scale = np.real(np.vdot(r, r))
        for h in specs_a:
            hv = np.asarray(h, dtype=float)[idx_a]
            enc = max_abs((hv[:, None] - hv[None, :]) * r)
            if enc < 0.1 * TOL.holds:
                continue
            for g in specs_b:
                checked += 1
                k = hv - np.asarray(g, dtype=float)[idx_b]
                if strong:
                    kr = k[:, None] * r
                    c = np.real(np.vdot(r, kr)) / scale
                    res = max_abs(kr - c * r)
                else:
                    res = max_abs((k[:, None] - k[None, :]) * r)
                # max-norms in the rotated frame differ from the reported ones by at most a factor dim
                if res > 100 * TOL.fails:
                    continue
                pair = HamiltonianPair.diagonal(h, g, ua, ub)
                v = is_sa(rho, pair) if strong else is_wa(rho, pair)
                if v.holds:
                    return SearchResult(pair, "found", v, (h, g), degenerate, "", checked)
                band_hit = band_hit or not v.conclusive
    if band_hit:
        return SearchResult(None, "inconclusive", degenerate=degenerate, checked=checked,
                            reason="a candidate fell inside the verdict tolerance band")
    if (da, db) == (2, 2) and not degenerate:
        return SearchResult(None, "witnessed-no", degenerate=False, checked=checked,
                            reason="two-qubit state with nondegenerate marginals matches "
                                   "neither anonymity pattern")
    if degenerate:
        return SearchResult(None, "inconclusive", degenerate=True, checked=checked,
                            reason="degenerate marginal: witness bases are not unique")
    return SearchResult(None, "search-exhausted", degenerate=False, checked=checked,
                        reason=f"no witness with integer spectra in [0, {bound}]")


def find_wa_pair(rho: DensityMatrix, bound: int = 3, n_random: int = 0, seed=None) -> SearchResult:
    """Brute-force search for a weak-anonymity witness.

    Generators are diagonal in the marginal eigenbases with integer spectra in
    ``[0, bound]`` (fixed up to shift); the first lexicographic hit is returned.
    """
    return _search(rho, bound, False, n_random, seed)


def find_sa_pair(rho: DensityMatrix, bound: int = 3, n_random: int = 0, seed=None) -> SearchResult:
    """Brute-force search for a strong-anonymity witness (same search space as WA)."""
    return _search(rho, bound, True, n_random, seed)


# --------------------------------------------------------------------------- correlations

class PPTResult(NamedTuple):
    npt: bool
    min_pt_eigenvalue: float
    conclusive: bool


def is_entangled_ppt(rho: DensityMatrix) -> PPTResult:
    """Peres-Horodecki test; PPT certifies separability only for 2x2 and 2x3."""
    if len(rho.dims) != 2:
        raise ValueError("PPT test needs a bipartite state")
    pt = partial_transpose(rho, 1)
    lam = float(np.linalg.eigvalsh((pt + pt.conj().T) / 2)[0])
    npt = lam < -TOL.psd
    exact = sorted(rho.dims) in ([2, 2], [2, 3]) or min(rho.dims) == 1
    return PPTResult(npt, lam, npt or exact)


class ClassicalResult(NamedTuple):
    cc: bool
    cq: bool
    qc: bool
    conclusive: bool
    cq_residual: float
    qc_residual: float

    @property
    def any(self) -> bool:
        return self.cc or self.cq or self.qc


def _commutator_spread(blocks: list[np.ndarray]) -> float:
    return max((max_abs(x @ y - y @ x) for x, y in itertools.combinations(blocks, 2)), default=0.0)


def is_classical(rho: DensityMatrix) -> ClassicalResult:
    """Zero-discord tests.

    ``rho = sum_kl A_kl (x) |k><l|`` is CQ iff the blocks ``A_kl`` form a
    commuting family (they are then jointly diagonalisable, giving the
    classical basis on A); QC mirrors this on B, and CC holds iff both do.
    This is exact for degenerate marginals too.
    """
    if len(rho.dims) != 2:
        raise ValueError("classicality test needs a bipartite state")
    da, db = rho.dims
    t = rho.matrix.reshape(da, db, da, db)
    a_blocks = [t[:, k, :, l] for k in range(db) for l in range(db)]
    b_blocks = [t[i, :, j, :] for i in range(da) for j in range(da)]
    rq, rc = _commutator_spread(a_blocks), _commutator_spread(b_blocks)
    cq = rq <= TOL.holds
    qc = rc <= TOL.holds
    conclusive = all(r <= TOL.holds or r >= TOL.fails for r in (rq, rc))
    return ClassicalResult(cq and qc, cq, qc, conclusive, rq, rc)


# --------------------------------------------------------------------------- report

@dataclass
class ClassificationReport:
    wa: SearchResult
    sa: SearchResult
    ppt: PPTResult
    classical: ClassicalResult
    search_bound: int
    notes: list[str] = field(default_factory=list)

    @property
    def aligned_discord(self) -> bool:
        return self.wa.found

    @property
    def aligned_entanglement(self) -> bool:
        return self.sa.found

    @property
    def entangled(self) -> bool:
        return self.ppt.npt

    @property
    def inconclusive(self) -> bool:
        return (self.wa.status == "inconclusive" or self.sa.status == "inconclusive"
                or not self.ppt.conclusive or not self.classical.conclusive)

    def to_dict(self) -> dict:
        c = self.classical
        return {
            "schema": "anonmet.classification/1",
            "search_bound": self.search_bound,
            "aligned_discord": self.aligned_discord,
            "aligned_entanglement": self.aligned_entanglement,
            "weak_anonymity": self.wa.to_dict(),
            "strong_anonymity": self.sa.to_dict(),
            "entanglement": {
                "npt": self.ppt.npt,
                "min_pt_eigenvalue": self.ppt.min_pt_eigenvalue,
                "conclusive": self.ppt.conclusive,
            },
            "classical": {
                "cc": c.cc, "cq": c.cq, "qc": c.qc, "conclusive": c.conclusive,
                "cq_residual": c.cq_residual, "qc_residual": c.qc_residual,
            },
            "notes": list(self.notes),
        }


def _werner_param(rho: DensityMatrix) -> float | None:
    meta = rho.meta or {}
    if meta.get("name") != "werner":
        return None
    return float(meta.get("parameters", {}).get("a", 0.0))


def _werner_notes(rho: DensityMatrix) -> list[str]:
    a = _werner_param(rho)
    if a is None:
        return []
    notes = []
    if a > 0.5:
        notes.append("Werner state with a > 1/2: steerable, yet not aligned entangled")
    if a > 1 / np.sqrt(2):
        notes.append("Werner state with a > 1/sqrt(2): Bell nonlocal, yet not aligned entangled")
    return notes


def classify(rho: DensityMatrix, bound: int = 3, n_random: int = 0, seed=None) -> ClassificationReport:
    """Place a bipartite state in the discord / entanglement / alignment hierarchy."""
    ppt = is_entangled_ppt(rho)
    cl = is_classical(rho)
    wa = find_wa_pair(rho, bound, n_random, seed)
    sa = find_sa_pair(rho, bound, n_random, seed)
    pure = rho.is_pure()

    if sa.found and not wa.found:
        v = is_wa(rho, sa.pair)
        wa = SearchResult(sa.pair, "found", v, sa.spectra, sa.degenerate,
                          "strong-anonymity witness is also a weak one", sa.checked)
    if not wa.found:
        if cl.any:
            wa.status, wa.reason = "witnessed-no", "zero-discord states admit no anonymous encoding"
        elif pure and schmidt_rank(rho) == 1:
            wa.status, wa.reason = "witnessed-no", "pure product state"
    if not sa.found:
        if wa.status == "witnessed-no":
            sa.status, sa.reason = "witnessed-no", "not weakly anonymous"
        elif not ppt.npt and ppt.conclusive:
            sa.status, sa.reason = "witnessed-no", "separable states cannot be strongly anonymous"
        elif _werner_param(rho) is not None and 0 < _werner_param(rho) < 1:
            sa.status, sa.reason = "witnessed-no", "Werner states with 0 < a < 1 are never strongly anonymous"
    return ClassificationReport(wa, sa, ppt, cl, bound, _werner_notes(rho))
