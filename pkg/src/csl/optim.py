"""Shared optimization engines.

Three workhorses: multi-start descent over density operators, a small
log-det barrier solver for the max-information semidefinite program, and
multi-start ascent over pure states.  Desk-scale dimensions (<= 36 total)
keep all of these cheap; no external SDP engine is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .matcore import RANK_TOL, ContractViolation, _as_matrix, eig_hermitian


@dataclass
class OptimizerReport:
    value: float
    argopt: np.ndarray
    iterations: int
    converged: bool
    gap_estimate: float


def _gram_state(x: np.ndarray, d: int) -> np.ndarray:
    """Map 2d^2 reals to a density matrix via sigma = G^dag G / Tr."""
    G = (x[: d * d] + 1j * x[d * d :]).reshape(d, d)
    M = G.conj().T @ G
    tr = np.trace(M).real
    if tr <= 0:
        return np.eye(d) / d
    return M / tr


def _state_to_params(sigma: np.ndarray) -> np.ndarray:
    d = sigma.shape[0]
    w, V = np.linalg.eigh((sigma + sigma.conj().T) / 2)
    w = np.clip(w, 1e-12, None)
    G = (V * np.sqrt(w)) @ V.conj().T
    return np.concatenate([G.real.reshape(-1), G.imag.reshape(-1)])


def minimize_over_states(
    objective,
    dim: int,
    restarts: int = 32,
    tol: float = 1e-7,
    seed: int = 0,
    extra_starts=(),
) -> OptimizerReport:
    """Multi-start local descent of a state functional over D(dim)."""
    rng = np.random.default_rng(seed)
    d = dim

    def fun(x):
        v = objective(_gram_state(x, d))
        return v if math.isfinite(v) else 1e12

    starts = [_state_to_params(np.eye(d) / d)]
    for s in extra_starts:
        starts.append(_state_to_params(_as_matrix(s)))
    while len(starts) < restarts:
        G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        M = G.conj().T @ G
        starts.append(_state_to_params(M / np.trace(M).real))

    results = []
    n_it = 0
    for x0 in starts[:max(restarts, len(starts))]:
        res = scipy.optimize.minimize(fun, x0, method="L-BFGS-B",
                                      options={"maxiter": 500, "ftol": 1e-14, "gtol": 1e-10})
        n_it += res.nit
        results.append((float(res.fun), res.x, bool(res.success)))
    results.sort(key=lambda r: r[0])
    best_val, best_x, best_ok = results[0]
    if best_val >= 1e12:
        return OptimizerReport(math.inf, np.eye(d) / d, n_it, False, math.inf)
    gap = results[1][0] - best_val if len(results) > 1 else 0.0
    sigma = _gram_state(best_x, d)
    return OptimizerReport(best_val, sigma, n_it, best_ok and gap <= tol, max(gap, 0.0))


def maximize_over_pure(
    objective,
    dim: int,
    restarts: int = 32,
    tol: float = 1e-7,
    seed: int = 0,
    extra_starts=(),
) -> OptimizerReport:
    """Multi-start ascent of a pure-state functional over the unit sphere."""
    rng = np.random.default_rng(seed)
    d = dim

    def vec(x):
        v = x[:d] + 1j * x[d:]
        n = np.linalg.norm(v)
        return v / n if n > 0 else np.eye(d, 1).reshape(-1).astype(complex)

    def fun(x):
        v = objective(vec(x))
        return -v if math.isfinite(v) else 1e12

    starts = []
    for s in extra_starts:
        s = np.asarray(s, dtype=complex).reshape(-1)
        starts.append(np.concatenate([s.real, s.imag]))
    while len(starts) < restarts:
        starts.append(rng.standard_normal(2 * d))

    results = []
    n_it = 0
    for x0 in starts:
        res = scipy.optimize.minimize(fun, x0, method="L-BFGS-B",
                                      options={"maxiter": 500, "ftol": 1e-14, "gtol": 1e-10})
        n_it += res.nit
        results.append((float(res.fun), res.x, bool(res.success)))
    results.sort(key=lambda r: r[0])
    best_val, best_x, best_ok = results[0]
    gap = results[1][0] - best_val if len(results) > 1 else 0.0
    return OptimizerReport(-best_val, vec(best_x), n_it, best_ok and gap <= tol, max(gap, 0.0))


# --- max-information SDP ----------------------------------------------------

@dataclass
class ImaxResult:
    value_bits: float
    certificate: np.ndarray  # Y with rho_A (x) Y >= rho_AB
    converged: bool
    residual: float  # min eigenvalue of rho_A (x) Y - rho_AB


def _herm_basis(d: int):
    basis = []
    for i in range(d):
        E = np.zeros((d, d), dtype=complex)
        E[i, i] = 1.0
        basis.append(E)
    for i in range(d):
        for j in range(i + 1, d):
            E = np.zeros((d, d), dtype=complex)
            E[i, j] = E[j, i] = 1 / math.sqrt(2)
            basis.append(E)
            E = np.zeros((d, d), dtype=complex)
            E[i, j] = -1j / math.sqrt(2)
            E[j, i] = 1j / math.sqrt(2)
            basis.append(E)
    return basis


def _vec_to_herm(x: np.ndarray, basis) -> np.ndarray:
    M = np.zeros_like(basis[0])
    for c, E in zip(x, basis):
        M = M + c * E
    return M


def _herm_to_vec(M: np.ndarray, basis) -> np.ndarray:
    return np.array([float(np.trace(E.conj().T @ M).real) for E in basis])


def dominating_trace_min(
    M_A: np.ndarray,
    rho_AB: np.ndarray,
    dims: tuple[int, int],
    tol: float = 1e-7,
) -> ImaxResult:
    """min Tr[Y] over Y >= 0 with M_A (x) Y >= rho_AB, by a log-det barrier.

    Both operators are first compressed onto supp(M_A) (x) supp(rho_B); the
    optimum is supported there, which keeps the barrier nondegenerate.
    """
    dA, dB = dims
    M_A = _as_matrix(M_A)
    rho_AB = _as_matrix(rho_AB)
    if M_A.shape != (dA, dA) or rho_AB.shape != (dA * dB, dA * dB):
        raise ContractViolation("dimension mismatch in dominating_trace_min")

    wA, VA = eig_hermitian(M_A)
    keepA = wA > RANK_TOL * max(wA.max(initial=0.0), 0.0)
    VA = VA[:, keepA]
    mA = wA[keepA]
    rho_B = np.trace(rho_AB.reshape(dA, dB, dA, dB), axis1=0, axis2=2)
    wB, VB = eig_hermitian(rho_B)
    keepB = wB > RANK_TOL * max(wB.max(initial=0.0), 0.0)
    VB = VB[:, keepB]
    rA, rB = VA.shape[1], VB.shape[1]
    W = np.kron(VA, VB)
    rho_c = W.conj().T @ rho_AB @ W  # compressed (rA*rB)

    # Strictly feasible start: Y = 2 t_min I.
    Dm = np.kron(np.diag(1.0 / np.sqrt(mA)), np.eye(rB))
    t_min = float(np.linalg.eigvalsh(Dm @ rho_c @ Dm).max())
    basis = _herm_basis(rB)
    Y = 2.0 * max(t_min, 1e-12) * np.eye(rB, dtype=complex)
    P = np.column_stack([E.reshape(-1) for E in basis])

    def feasible(Yc):
        try:
            np.linalg.cholesky(np.kron(np.diag(mA), Yc) - rho_c)
            np.linalg.cholesky(Yc)
            return True
        except np.linalg.LinAlgError:
            return False

    def fval(Yc, mu):
        K = np.kron(np.diag(mA), Yc) - rho_c
        sK = np.linalg.slogdet(K)[1]
        sY = np.linalg.slogdet(Yc)[1]
        return float(np.trace(Yc).real) - mu * float(sK + sY)

    def grad_hess(Yc, mu):
        K = np.kron(np.diag(mA), Yc) - rho_c
        Kinv = np.linalg.inv(K)
        Yinv = np.linalg.inv(Yc)
        K4 = Kinv.reshape(rA, rB, rA, rB)
        GK = np.einsum("a,abac->bc", mA, K4)
        G = np.eye(rB) - mu * (GK + Yinv)
        G = (G + G.conj().T) / 2
        g = _herm_to_vec(G, basis)
        # Hessian of the barrier in superoperator (row-major vec) form:
        # X -> sum m_a m_a' B_aa' X B_a'a  plus  X -> Yinv X Yinv.
        n = rB * rB
        S = np.zeros((n, n), dtype=complex)
        for a in range(rA):
            for ap in range(rA):
                Bf = K4[a, :, ap, :]
                S += mA[a] * mA[ap] * np.kron(Bf, K4[ap, :, a, :].T)
        S += np.kron(Yinv, Yinv.T)
        H = mu * (P.conj().T @ S @ P).real
        return g, (H + H.T) / 2

    nu = rA * rB + rB  # total barrier parameter
    mu = max(2.0 * max(t_min, 1e-12) * rB / nu, 1e-3)
    mu_final = 1e-11
    converged = True
    while True:
        # Damped Newton centering for the current barrier weight.
        for _ in range(60):
            g, H = grad_hess(Y, mu)
            try:
                dy = np.linalg.solve(H + 1e-14 * np.eye(H.shape[0]), -g)
            except np.linalg.LinAlgError:
                converged = False
                break
            lam2 = float(-g @ dy)
            if lam2 < 2e-10:  # Newton decrement lam^2/2 below 1e-10
                break
            dY = _vec_to_herm(dy, basis)
            f0 = fval(Y, mu)
            t = 1.0
            while t > 1e-14:
                Yt = Y + t * dY
                if feasible(Yt) and fval(Yt, mu) <= f0 + 0.25 * t * float(g @ dy):
                    break
                t *= 0.5
            if t <= 1e-14:
                break
            Y = Y + t * dY
        if mu <= mu_final:
            break
        mu = max(mu * 0.1, mu_final)
    Y_c = Y
    tr = float(np.trace(Y_c).real)
    gap = mu_final * nu  # duality gap bound at the final barrier weight
    if not math.isfinite(tr) or tr <= 0 or not feasible(Y_c):
        converged = False
    Y_full = VB @ Y_c @ VB.conj().T
    full_res = np.kron(M_A, Y_full) - rho_AB
    residual = float(np.linalg.eigvalsh((full_res + full_res.conj().T) / 2).min())
    if residual < -tol:
        converged = False
    return ImaxResult(math.log2(tr), Y_full, converged and gap <= max(tol, 1e-6), residual)


def imax_sdp(rho_ab, dims: tuple[int, int], tol: float = 1e-7) -> ImaxResult:
    """I_max(A:B) as min Tr[Y] with rho_A (x) Y >= rho_AB (Y = t sigma)."""
    rho_AB = _as_matrix(rho_ab)
    dA, dB = dims
    rho_A = np.trace(rho_AB.reshape(dA, dB, dA, dB), axis1=1, axis2=3)
    return dominating_trace_min(rho_A, rho_AB, dims, tol=tol)
