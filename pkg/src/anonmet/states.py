"""Named states, state families and random generators."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .qmat import TOL, DensityMatrix, StateError, partial_trace, tensor

__all__ = [
    "basis",
    "bell_psi_plus",
    "bell_psi_minus",
    "werner",
    "maximally_correlated",
    "maximally_correlated_multipartite",
    "sa_degenerate",
    "appendix_d_state",
    "discord_example",
    "cc_example",
    "classical_states",
    "perturbed_bell",
    "local_eigenbasis",
    "in_local_eigenbasis",
    "random_state",
    "random_pure_state",
    "random_hermitian",
    "random_unitary",
    "random_product_state",
    "random_separable_state",
    "CATALOG",
    "catalog",
]


def basis(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_unit_interval(**params: float) -> None:
    for name, value in params.items():
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name}={value} outside [0, 1]")


def bell_psi_plus() -> DensityMatrix:
    """(|00> + |11>)/sqrt(2)."""
    psi = (tensor(basis(2, 0), basis(2, 0)) + tensor(basis(2, 1), basis(2, 1))) / np.sqrt(2)
    return DensityMatrix.from_ket(psi, (2, 2))


def bell_psi_minus() -> DensityMatrix:
    """(|01> - |10>)/sqrt(2), the singlet."""
    psi = (tensor(basis(2, 0), basis(2, 1)) - tensor(basis(2, 1), basis(2, 0))) / np.sqrt(2)
    return DensityMatrix.from_ket(psi, (2, 2))


def werner(a: float) -> DensityMatrix:
    """Singlet mixed with white noise: a |psi-><psi-| + (1 - a)/4 * 1."""
    _check_unit_interval(a=a)
    return DensityMatrix(a * bell_psi_minus().matrix + (1 - a) / 4 * np.eye(4), (2, 2),
                         {"name": "werner", "parameters": {"a": float(a)}})


def _valid_coeffs(coeffs: np.ndarray, what: str) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=complex)
    try:
        DensityMatrix(coeffs, (coeffs.shape[0],))
    except (StateError, ValueError) as exc:
        raise ValueError(f"{what}: coefficients are not a density matrix ({exc})") from exc
    return coeffs


def maximally_correlated(coeffs: np.ndarray) -> DensityMatrix:
    """State sum_ij c_ij |ii><jj| on a d x d system."""
    coeffs = _valid_coeffs(coeffs, "maximally_correlated")
    d = coeffs.shape[0]
    iso = np.zeros((d * d, d), dtype=complex)
    for i in range(d):
        iso[i * d + i, i] = 1.0
    return DensityMatrix(iso @ coeffs @ iso.conj().T, (d, d))


def maximally_correlated_multipartite(coeffs: np.ndarray, n: int) -> DensityMatrix:
    """State sum_ij c_ij |i...i><j...j| on n parties of dimension d."""
    coeffs = _valid_coeffs(coeffs, "maximally_correlated_multipartite")
    d = coeffs.shape[0]
    if n < 2:
        raise ValueError("need at least two parties")
    iso = np.zeros((d**n, d), dtype=complex)
    for i in range(d):
        iso[:, i] = tensor(*[basis(d, i)] * n)
    return DensityMatrix(iso @ coeffs @ iso.conj().T, (d,) * n)


def sa_degenerate(coeffs: np.ndarray, degeneracies: Sequence[int],
                  degeneracies_b: Sequence[int] | None = None) -> DensityMatrix:
    """Maximally correlated state extended by degeneracy labels.

    Level ``i`` owns ``degeneracies[i]`` basis states on A and
    ``degeneracies_b[i]`` on B (default: same as A). The local basis is ordered
    level by level. ``coeffs`` is a density matrix over the allowed product
    labels ``|i lam, i lam'>`` enumerated as ``(i, lam, lam')`` lexicographically.
    With all degeneracies equal to one this is :func:`maximally_correlated`.
    """
    deg_a = [int(x) for x in degeneracies]
    deg_b = deg_a if degeneracies_b is None else [int(x) for x in degeneracies_b]
    if len(deg_a) != len(deg_b) or any(x < 1 for x in deg_a + deg_b):
        raise ValueError("degeneracies must be positive and of equal length on both sides")
    da, db = sum(deg_a), sum(deg_b)
    off_a = np.concatenate([[0], np.cumsum(deg_a)[:-1]])
    off_b = np.concatenate([[0], np.cumsum(deg_b)[:-1]])
    columns = []
    for i in range(len(deg_a)):
        for lam in range(deg_a[i]):
            for lam2 in range(deg_b[i]):
                columns.append(tensor(basis(da, off_a[i] + lam), basis(db, off_b[i] + lam2)))
    iso = np.array(columns).T
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (iso.shape[1],) * 2:
        raise ValueError(f"coeffs must be {iso.shape[1]}x{iso.shape[1]} for degeneracies {deg_a}/{deg_b}")
    coeffs = _valid_coeffs(coeffs, "sa_degenerate")
    return DensityMatrix(iso @ coeffs @ iso.conj().T, (da, db))


def appendix_d_state(a: float = 0.45, b: float = 0.4, m: float = 0.35) -> DensityMatrix:
    """Mixture m*rho1 + (1-m)*rho2 of two two-qubit pure states.

    rho1 is built from sqrt(a)|00> + sqrt(1-a)|11>, rho2 from
    sqrt(b)|01> + sqrt(1-b)|10>. The defaults are entangled yet carry
    coherence in both two-qubit anonymity patterns at once.
    """
    _check_unit_interval(a=a, b=b, m=m)
    z, o = basis(2, 0), basis(2, 1)
    psi1 = np.sqrt(a) * tensor(z, z) + np.sqrt(1 - a) * tensor(o, o)
    psi2 = np.sqrt(b) * tensor(z, o) + np.sqrt(1 - b) * tensor(o, z)
    rho = m * np.outer(psi1, psi1.conj()) + (1 - m) * np.outer(psi2, psi2.conj())
    return DensityMatrix(rho, (2, 2))


def discord_example() -> DensityMatrix:
    """(|00><00| + |++><++|)/2: separable but discordant."""
    z, p = basis(2, 0), np.array([1, 1], dtype=complex) / np.sqrt(2)
    v1, v2 = tensor(z, z), tensor(p, p)
    return DensityMatrix(0.5 * (np.outer(v1, v1.conj()) + np.outer(v2, v2.conj())), (2, 2))


def cc_example() -> DensityMatrix:
    """(|00><00| + |11><11|)/2."""
    return classical_states("CC", np.diag([0.5, 0.5]))


def _proj(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


def _check_basis(u: np.ndarray, d: int) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (d, d) or not np.allclose(u.conj().T @ u, np.eye(d), atol=1e-10):
        raise ValueError("basis must be a unitary matrix whose columns are the basis vectors")
    return u


def _check_probs(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-10:
        raise ValueError("probabilities must be non-negative and sum to one")
    return np.clip(p, 0.0, None)


def classical_states(kind: str, probabilities, basis_a: np.ndarray | None = None,
                     basis_b: np.ndarray | None = None,
                     conditional: Sequence[np.ndarray] | None = None) -> DensityMatrix:
    """Build a CC, CQ or QC state.

    CC
        ``probabilities`` is a dA x dB matrix p_ij; the state is
        sum_ij p_ij |i><i| (x) |j><j| in ``basis_a`` / ``basis_b``.
    CQ
        ``probabilities`` is p_i over ``basis_a``; ``conditional`` lists the
        states rho_{B|i}.
    QC
        Mirror of CQ: p_j over ``basis_b`` with conditional rho_{A|j}.
    """
    kind = kind.upper()
    if kind == "CC":
        p = _check_probs(probabilities)
        if p.ndim != 2:
            raise ValueError("CC probabilities must be a matrix p[i, j]")
        da, db = p.shape
        ua = np.eye(da) if basis_a is None else _check_basis(basis_a, da)
        ub = np.eye(db) if basis_b is None else _check_basis(basis_b, db)
        rho = sum(p[i, j] * np.kron(_proj(ua[:, i]), _proj(ub[:, j]))
                  for i in range(da) for j in range(db))
        return DensityMatrix(rho, (da, db))
    if kind in ("CQ", "QC"):
        p = _check_probs(probabilities)
        if conditional is None or len(conditional) != len(p):
            raise ValueError(f"{kind} needs one conditional state per probability")
        cond = [np.asarray(c, dtype=complex) for c in conditional]
        for c in cond:
            _valid_coeffs(c, kind)
        dc = cond[0].shape[0]
        dp = len(p)
        u = basis_a if kind == "CQ" else basis_b
        u = np.eye(dp) if u is None else _check_basis(u, dp)
        if kind == "CQ":
            rho = sum(p[i] * np.kron(_proj(u[:, i]), cond[i]) for i in range(dp))
            return DensityMatrix(rho, (dp, dc))
        rho = sum(p[j] * np.kron(cond[j], _proj(u[:, j])) for j in range(dp))
        return DensityMatrix(rho, (dc, dp))
    raise ValueError(f"unknown classical kind {kind!r}; expected CC, CQ or QC")


def perturbed_bell(eps: float = 0.05) -> DensityMatrix:
    """(1 - eps)|psi+><psi+| + eps |++><++|: a slightly non-anonymous Bell state."""
    _check_unit_interval(eps=eps)
    p = np.array([1, 1], dtype=complex) / np.sqrt(2)
    return DensityMatrix((1 - eps) * bell_psi_plus().matrix + eps * _proj(tensor(p, p)), (2, 2))


def local_eigenbasis(marginal: np.ndarray, order: str = "descending") -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvector columns of a marginal in a canonical gauge.

    Eigenvalues are sorted (descending by default). Inside each degenerate
    eigenspace the basis is obtained by Gram-Schmidt on the projected
    computational basis vectors, so an eigenspace spanned by computational
    vectors returns those vectors. Each column is then phased so that its
    largest-magnitude component is real and positive.
    """
    w, v = np.linalg.eigh(np.asarray(marginal, dtype=complex))
    idx = np.argsort(-w if order == "descending" else w, kind="stable")
    w, v = w[idx], v[:, idx]
    d = len(w)
    out = np.zeros_like(v)
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and abs(w[stop] - w[start]) <= TOL.freq:
            stop += 1
        block = v[:, start:stop]
        if stop - start > 1:
            proj = block @ block.conj().T
            vecs = []
            for k in range(d):
                x = proj[:, k].copy()
                for y in vecs:
                    x -= np.vdot(y, x) * y
                if np.linalg.norm(x) > 1e-6:
                    vecs.append(x / np.linalg.norm(x))
                if len(vecs) == stop - start:
                    break
            block = np.array(vecs).T
        out[:, start:stop] = block
        start = stop
    for k in range(d):
        j = int(np.argmax(np.abs(out[:, k]) - 1e-12 * np.arange(d)))
        out[:, k] *= np.exp(-1j * np.angle(out[j, k]))
    return w, out


def in_local_eigenbasis(rho: DensityMatrix, order: str = "descending") -> np.ndarray:
    """Matrix of a bipartite state in the product of its marginals' eigenbases."""
    _, ua = local_eigenbasis(partial_trace(rho, [0]).matrix, order)
    _, ub = local_eigenbasis(partial_trace(rho, [1]).matrix, order)
    u = np.kron(ua, ub)
    return u.conj().T @ rho.matrix @ u


def random_unitary(dim: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_pure_state(dims: Sequence[int], seed=None) -> DensityMatrix:
    return random_state(dims, rank=1, seed=seed)


def random_state(dims: Sequence[int], rank: int | None = None, seed=None) -> DensityMatrix:
    """Partial trace of a Gaussian random pure state on system (x) C^rank."""
    rng = _rng(seed)
    dims = tuple(int(x) for x in dims)
    d = int(np.prod(dims))
    rank = d if rank is None else int(rank)
    if not 1 <= rank <= d:
        raise ValueError(f"rank must lie in [1, {d}]")
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho / np.trace(rho).real, dims)


def random_hermitian(dim: int, seed=None) -> np.ndarray:
    """Gaussian (GUE-like) Hermitian matrix."""
    rng = _rng(seed)
    x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (x + x.conj().T) / 2


def random_product_state(dims: Sequence[int], seed=None, pure: bool = False) -> DensityMatrix:
    rng = _rng(seed)
    parts = [random_state((d,), rank=1 if pure else None, seed=rng).matrix for d in dims]
    return DensityMatrix(tensor(*parts), tuple(dims))


def random_separable_state(dims: Sequence[int], n_terms: int = 4, seed=None) -> DensityMatrix:
    """Random convex mixture of product states."""
    rng = _rng(seed)
    p = rng.dirichlet(np.ones(n_terms))
    rho = sum(pk * random_product_state(dims, seed=rng).matrix for pk in p)
    return DensityMatrix(rho, tuple(dims))


def _ghz(n: float = 3, d: float = 2) -> DensityMatrix:
    n, d = int(n), int(d)
    return maximally_correlated_multipartite(np.full((d, d), 1.0 / d), n)


CATALOG: dict[str, Callable[..., DensityMatrix]] = {
    "bell-psi-plus": bell_psi_plus,
    "bell-psi-minus": bell_psi_minus,
    "werner": werner,
    "appendix-d": appendix_d_state,
    "discord-example": discord_example,
    "cc": cc_example,
    "perturbed-bell": perturbed_bell,
    "ghz": _ghz,
}


def catalog(name: str, **params: float) -> DensityMatrix:
    """Look up a named state; ``params`` are forwarded to its constructor."""
    try:
        ctor = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog state {name!r}; choose from {sorted(CATALOG)}") from None
    rho = ctor(**params)
    return DensityMatrix(rho.matrix, rho.dims, {"name": name, "parameters": dict(params)})
