"""Sandwiched Renyi divergence family, its named special cases, and the
hypothesis-testing divergence.

All logarithms are base 2 (values in bits).  Infinite divergence is a value
(math.inf), never an exception.  The second argument of the Q/D functionals
may be any PSD operator (conditional entropies pass I (x) sigma).
"""

from __future__ import annotations

import math

import numpy as np

from .matcore import (
    RANK_TOL,
    ContractViolation,
    _as_matrix,
    eig_hermitian,
    power_on_support,
    support_projector,
)

INF = math.inf

# Trace mass below this counts as orthogonal / off-support.
_PERP_TOL = 1e-14


def _log2(x: float) -> float:
    return math.log2(x) if x > 0 else -INF


def supp_contained(rho, sigma, tol: float = None) -> bool:
    """supp(rho) subseteq supp(sigma), judged via rank_tol spectral cuts."""
    R, S = _as_matrix(rho), _as_matrix(sigma)
    Pi = support_projector(S)
    leak = float(np.trace(R - Pi @ R @ Pi).real)
    return abs(leak) <= (tol if tol is not None else 1e-10)


def perpendicular(rho, sigma) -> bool:
    """Tr[rho sigma] vanishes."""
    R, S = _as_matrix(rho), _as_matrix(sigma)
    return float(np.trace(R @ S).real) <= _PERP_TOL


def q_alpha(rho, sigma, alpha: float) -> float:
    """Q_alpha = Tr (sigma^((1-a)/2a) rho sigma^((1-a)/2a))^a.

    Returns inf when alpha > 1 and rho is not supported inside sigma.
    """
    if not (alpha > 0 and alpha != 1):
        raise ContractViolation(f"q_alpha needs alpha in (0,1) or (1,inf), got {alpha}")
    R, S = _as_matrix(rho), _as_matrix(sigma)
    if alpha > 1 and not supp_contained(R, S):
        return INF
    e = (1.0 - alpha) / (2.0 * alpha)
    Se = power_on_support(S, e)
    X = Se @ R @ Se
    X = (X + X.conj().T) / 2  # exact in theory; kills float asymmetry
    w, _ = eig_hermitian(X)
    w = np.clip(w, 0.0, None)
    return float(np.sum(w**alpha))


def d_alpha_with_branch(rho, sigma, alpha: float) -> tuple[float, str]:
    """Piecewise sandwiched divergence; returns (bits, branch name)."""
    if alpha < 0:
        raise ContractViolation(f"alpha must be >= 0, got {alpha}")
    if alpha == 0:
        return d_min(rho, sigma), "min"
    if alpha == 1:
        return d_umegaki(rho, sigma), "umegaki"
    if math.isinf(alpha):
        return d_max(rho, sigma), "max"
    R, S = _as_matrix(rho), _as_matrix(sigma)
    if alpha < 0.5:
        if perpendicular(R, S):
            return INF, "infinite"
        q = q_alpha(S, R, 1.0 - alpha)
        return (1.0 / (alpha - 1.0)) * _log2(q), "low"
    if alpha < 1.0:
        if perpendicular(R, S) and not supp_contained(R, S):
            return INF, "infinite"
        q = q_alpha(R, S, alpha)
        return (1.0 / (alpha - 1.0)) * _log2(q), "sandwiched"
    # alpha > 1
    if not supp_contained(R, S):
        return INF, "infinite"
    q = q_alpha(R, S, alpha)
    return (1.0 / (alpha - 1.0)) * _log2(q), "sandwiched"


def d_alpha(rho, sigma, alpha: float) -> float:
    return d_alpha_with_branch(rho, sigma, alpha)[0]


def d_min(rho, sigma) -> float:
    """-log Tr[sigma Pi_rho]."""
    R, S = _as_matrix(rho), _as_matrix(sigma)
    Pi = support_projector(R)
    t = float(np.trace(S @ Pi).real)
    if t <= _PERP_TOL:
        return INF
    return -_log2(t)


def d_umegaki(rho, sigma) -> float:
    """Tr[rho log rho] - Tr[rho log sigma]; inf off support."""
    R, S = _as_matrix(rho), _as_matrix(sigma)
    if not supp_contained(R, S):
        return INF
    wr, Vr = eig_hermitian(R)
    cut_r = RANK_TOL * max(wr.max(initial=0.0), 0.0)
    ent = 0.0
    for lam in wr:
        if lam > cut_r:
            ent += lam * math.log2(lam)
    ws, Vs = eig_hermitian(S)
    cut_s = RANK_TOL * max(ws.max(initial=0.0), 0.0)
    cross = 0.0
    for j in range(len(ws)):
        if ws[j] > cut_s:
            wgt = float((Vs[:, j].conj() @ R @ Vs[:, j]).real)
            cross += wgt * math.log2(ws[j])
    return ent - cross


def d_max(rho, sigma) -> float:
    """log of the smallest t with t sigma >= rho."""
    R, S = _as_matrix(rho), _as_matrix(sigma)
    if not supp_contained(R, S):
        return INF
    Sm = power_on_support(S, -0.5)
    w, _ = eig_hermitian(Sm @ R @ Sm)
    lam = float(max(w.max(initial=0.0), 0.0))
    if lam <= 0:
        return -INF
    return _log2(lam)


def q2(rho, sigma) -> float:
    """Collision functional Q_2 = Tr[rho sigma^(-1/2) rho sigma^(-1/2)]."""
    return q_alpha(rho, sigma, 2.0)


def d2(rho, sigma) -> float:
    """Collision relative entropy log2 Q_2."""
    q = q2(rho, sigma)
    return INF if math.isinf(q) else _log2(q)


def chi_squared(p, q) -> float:
    """Classical chi^2 distance sum (p-q)^2 / q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    out = 0.0
    for px, qx in zip(p, q):
        if qx <= 0:
            if px > _PERP_TOL:
                return INF
            continue
        out += (px - qx) ** 2 / qx
    return out


# --- hypothesis-testing divergence -----------------------------------------

def _np_test_value(rho: np.ndarray, sigma: np.ndarray, t: float, eps: float):
    """Neyman-Pearson test at threshold t with fractional weights.

    Builds Lambda from the eigenbasis of rho - t sigma: weight 1 on clearly
    positive eigenvectors, fractional weight on near-zero ones (ordered by
    rho-to-sigma ratio) until Tr[rho Lambda] = 1 - eps.  Returns
    (Tr[sigma Lambda], feasible) or (None, False) when 1 - eps is out of
    reach at this threshold.
    """
    d = rho.shape[0]
    M = rho - t * sigma  # large t amplifies float asymmetry; resymmetrize
    w, V = eig_hermitian((M + M.conj().T) / 2)
    scale = max(np.max(np.abs(w)), 1.0)
    ctol = 1e-9 * scale
    r_diag = np.array([float((V[:, j].conj() @ rho @ V[:, j]).real) for j in range(d)])
    s_diag = np.array([float((V[:, j].conj() @ sigma @ V[:, j]).real) for j in range(d)])
    r_diag = np.clip(r_diag, 0.0, None)
    s_diag = np.clip(s_diag, 0.0, None)
    # Greedy by descending eigenvalue, fractional weight on the boundary
    # vector; near-degenerate eigenvalues break ties by rho-per-sigma ratio.
    ratio = r_diag / np.maximum(s_diag, 1e-300)
    coarse = np.where(np.abs(w) > ctol, w, 0.0)
    order = np.lexsort((-ratio, -coarse))
    need = 1.0 - eps
    cost = 0.0
    for j in order:
        if need <= 1e-15:
            break
        if r_diag[j] <= 0:
            continue
        take = min(r_diag[j], need)
        cost += (take / r_diag[j]) * s_diag[j]
        need -= take
    if need > 1e-12:
        return None, False
    return max(cost, 0.0), True


def d_min_eps(rho, sigma, eps: float) -> float:
    """Exact hypothesis-testing divergence via the Neyman-Pearson family.

    Self-certified: the achieved Tr[sigma Lambda] is checked against the
    concave dual t(1-eps) - Tr[(t rho - sigma)_+] to 1e-8.
    """
    if not (0.0 < eps < 1.0):
        raise ContractViolation(f"eps must be in (0,1), got {eps}")
    R, S = _as_matrix(rho), _as_matrix(sigma)
    if perpendicular(R, S) and not supp_contained(R, S):
        # Lambda = Pi_rho has full rho-mass and no sigma-mass.
        Pi = support_projector(R)
        if float(np.trace(S @ Pi).real) <= _PERP_TOL:
            return INF

    def dual(t: float) -> float:
        w = np.linalg.eigvalsh(t * R - S)
        return t * (1.0 - eps) - float(np.clip(w, 0.0, None).sum())

    # Maximize the concave dual over t >= 0 by golden-section on a bracket.
    hi = 1.0
    while dual(hi * 2) > dual(hi) and hi < 1e12:
        hi *= 2
    lo = 0.0
    phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi * 2
    c, d_ = b - phi * (b - a), a + phi * (b - a)
    fc, fd = dual(c), dual(d_)
    for _ in range(200):
        if fc >= fd:
            b, d_, fd = d_, c, fc
            c = b - phi * (b - a)
            fc = dual(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + phi * (b - a)
            fd = dual(d_)
        if b - a < 1e-13 * max(1.0, b):
            break
    t_star = (a + b) / 2
    dual_val = dual(t_star)

    # Primal from the NP test family (the dual threshold multiplies rho, so
    # the test operator threshold is 1/t).  The dual is flat at its maximum,
    # so t_star only locates the kink of the primal to ~1e-8; a second
    # golden-section on the primal value itself recovers full precision.
    def primal(t: float) -> float:
        val, ok = _np_test_value(R, S, 1.0 / t, eps)
        return val if ok else INF

    pa, pb = t_star * (1.0 - 1e-4), t_star * (1.0 + 1e-4)
    c, d_ = pb - phi * (pb - pa), pa + phi * (pb - pa)
    fc, fd = primal(c), primal(d_)
    for _ in range(120):
        if fc <= fd:
            pb, d_, fd = d_, c, fc
            c = pb - phi * (pb - pa)
            fc = primal(c)
        else:
            pa, c, fc = c, d_, fd
            d_ = pa + phi * (pb - pa)
            fd = primal(d_)
    best = None
    for t in {t_star, a, b, c, d_, (pa + pb) / 2}:
        if t <= 0:
            continue
        val, ok = _np_test_value(R, S, 1.0 / t, eps)
        if ok and (best is None or val < best):
            best = val
    if best is None or math.isinf(best):
        # Threshold degenerate (e.g. t -> 0); fall back to a coarse scan.
        for t in np.geomspace(1e-8, 1e8, 400):
            val, ok = _np_test_value(R, S, t, eps)
            if ok and (best is None or val < best):
                best = val
    if best is None or best <= _PERP_TOL:
        return INF
    gap = best - dual_val
    if gap > 1e-8:
        raise ContractViolation(
            f"hypothesis-testing primal/dual gap {gap:.3e} exceeds 1e-8"
        )
    return -_log2(best)


def binary_entropy(a: float) -> float:
    """h(a) = -a log a - (1-a) log(1-a), base 2."""
    if a <= 0 or a >= 1:
        return 0.0
    return -a * math.log2(a) - (1 - a) * math.log2(1 - a)
