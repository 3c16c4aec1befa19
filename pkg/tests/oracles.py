"""Independent reference computations used to cross-check the package.

Everything here is deliberately naive: explicit index loops, dense time
averages and brute-force parameter scans rather than the eigenbasis masks and
closed forms used in the library.
"""

import itertools

import numpy as np
from scipy.linalg import expm, sqrtm, solve_continuous_lyapunov


def ptrace_loops(m, dims, keep):
    """Partial trace by explicit summation over the traced indices."""
    n = len(dims)
    keep = sorted(keep)
    traced = [k for k in range(n) if k not in keep]
    kd = [dims[k] for k in keep]
    out = np.zeros((int(np.prod(kd)),) * 2, dtype=complex)
    for ki in itertools.product(*[range(d) for d in kd]):
        for kj in itertools.product(*[range(d) for d in kd]):
            total = 0
            for t in itertools.product(*[range(dims[k]) for k in traced]):
                full_i, full_j = [0] * n, [0] * n
                for pos, k in enumerate(keep):
                    full_i[k], full_j[k] = ki[pos], kj[pos]
                for pos, k in enumerate(traced):
                    full_i[k] = full_j[k] = t[pos]
                total += m[np.ravel_multi_index(full_i, dims), np.ravel_multi_index(full_j, dims)]
            out[np.ravel_multi_index(ki, kd), np.ravel_multi_index(kj, kd)] = total
    return out


def ptranspose_loops(m, dims, sys):
    out = np.zeros_like(m)
    for i in itertools.product(*[range(d) for d in dims]):
        for j in itertools.product(*[range(d) for d in dims]):
            ii, jj = list(i), list(j)
            ii[sys], jj[sys] = j[sys], i[sys]
            out[np.ravel_multi_index(ii, dims), np.ravel_multi_index(jj, dims)] = \
                m[np.ravel_multi_index(i, dims), np.ravel_multi_index(j, dims)]
    return out


def local_unitary(h, theta, site, dims):
    ops = [np.eye(d) for d in dims]
    ops[site] = expm(-1j * theta * np.asarray(h))
    out = ops[0]
    for o in ops[1:]:
        out = np.kron(out, o)
    return out


THETA_SCAN = 0.05 * np.arange(126)


def wa_scan(m, h, g, dims=(2, 2), thetas=THETA_SCAN):
    """max over theta of || U_A rho U_A^dag - V_B rho V_B^dag ||."""
    worst = 0.0
    for t in thetas:
        u = local_unitary(h, t, 0, dims)
        v = local_unitary(g, t, 1, dims)
        worst = max(worst, np.abs(u @ m @ u.conj().T - v @ m @ v.conj().T).max())
    return worst


def sa_scan(m, h, g, dims=(2, 2), thetas=THETA_SCAN):
    """max over theta of min over phi of || U_A rho - e^{i phi} V_B rho ||_F."""
    worst = 0.0
    for t in thetas:
        x = local_unitary(h, t, 0, dims) @ m
        y = local_unitary(g, t, 1, dims) @ m
        overlap = np.vdot(y, x)
        phase = overlap / abs(overlap) if abs(overlap) > 1e-300 else 1.0
        worst = max(worst, np.linalg.norm(x - phase * y))
    return worst


def encoding_scan(m, h, dims=(2, 2), thetas=THETA_SCAN):
    worst = 0.0
    for t in thetas:
        u = local_unitary(h, t, 0, dims)
        worst = max(worst, np.abs(u @ m @ u.conj().T - m).max())
    return worst


def mode_by_averaging(m, h, site, dims, omega, samples=64):
    """Discrete time average of exp(-i w t) U(t) rho U(t)^dag.

    Exact for integer generator spectra whose Bohr frequencies stay below
    ``samples`` in magnitude, since the average then runs over full periods.
    """
    acc = np.zeros_like(m, dtype=complex)
    for t in 2 * np.pi * np.arange(samples) / samples:
        u = local_unitary(h, t, site, dims)
        acc += np.exp(-1j * omega * t) * (u @ m @ u.conj().T)
    return acc / samples


def fidelity_sqrtm(r, s):
    sr = sqrtm(r)
    return float(np.real(np.trace(sqrtm(sr @ s @ sr))))


def trace_norm(x):
    return float(np.sum(np.linalg.svd(x, compute_uv=False)))


def qfi_lyapunov(m, big_h):
    """QFI from the SLD equation rho L + L rho = 2 d rho, solved as a Sylvester problem."""
    drho = -1j * (big_h @ m - m @ big_h)
    sld = solve_continuous_lyapunov(m, 2 * drho)
    return float(np.real(np.trace(m @ sld @ sld)))


def kron_power(m, n):
    out = m
    for _ in range(n - 1):
        out = np.kron(out, m)
    return out
