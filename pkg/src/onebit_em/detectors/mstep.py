"""Box-constrained least-squares solvers for the per-subcarrier M-step.

Every solver minimizes ``||r - H s||^2`` over ``s`` in the complex box
``[-(2D-1), 2D-1]^2`` per entry. Inputs may carry leading batch axes (one
problem per subcarrier): ``r`` is (..., N), ``H`` is (..., N, K) and ``s`` is
(..., K). The batch problems never interact, so a batched call returns the
same bits as solving each problem on its own.

The gradient step follows ``s - (H^H H s - H^H r) / L`` with
``L = 2 sigma_max(H)^2``.
"""

from __future__ import annotations

import numpy as np

from ..numerics import largest_singular_values
from ..ofdm import Constellation, project_box

__all__ = [
    "BoxQP",
    "m_step_pg1",
    "m_step_apg",
    "m_step_exact",
    "fista_momentum",
]

MOMENTUM_RULES = ("standard", "printed")


class BoxQP:
    """Batched problem data: Gram matrices, correlations and step constants."""

    def __init__(self, gram, corr, L, D, rsq=None):
        self.gram = np.asarray(gram)
        self.corr = np.asarray(corr)
        L = np.asarray(L, dtype=float)
        # H = 0 gives a zero gradient; any finite step leaves the iterate alone
        self.inv_L = np.where(L > 0, 1.0 / np.where(L > 0, L, 1.0), 0.0)
        self.D = D
        self.rsq = rsq

    @classmethod
    def from_channel(cls, r, H, D, L=None, gram=None):
        r = np.asarray(r, dtype=np.complex128)
        H = np.asarray(H, dtype=np.complex128)
        if H.shape[:-1] != r.shape:
            raise ValueError(f"H shape {H.shape} incompatible with r shape {r.shape}")
        Hh = np.conj(np.swapaxes(H, -1, -2))
        if gram is None:
            gram = Hh @ H
        if L is None:
            L = 2.0 * largest_singular_values(H) ** 2
        corr = np.einsum("...kn,...n->...k", Hh, r)
        rsq = np.sum(np.abs(r) ** 2, axis=-1)
        return cls(gram, corr, L, D, rsq=rsq)

    def subset(self, idx):
        out = BoxQP.__new__(BoxQP)
        out.gram = self.gram[idx]
        out.corr = self.corr[idx]
        out.inv_L = self.inv_L[idx]
        out.D = self.D
        out.rsq = None if self.rsq is None else self.rsq[idx]
        return out

    def grad(self, s):
        return np.einsum("...ij,...j->...i", self.gram, s) - self.corr

    def step(self, w):
        return project_box(w - self.grad(w) * self.inv_L[..., None], self.D)

    def objective_shift(self, s):
        """``||r - H s||^2 - ||r||^2``, per problem."""
        Gs = np.einsum("...ij,...j->...i", self.gram, s)
        return np.real(np.sum(np.conj(s) * Gs, axis=-1)) - 2.0 * np.real(np.sum(np.conj(self.corr) * s, axis=-1))

    def objective(self, s):
        if self.rsq is None:
            raise ValueError("objective needs ||r||^2; build with from_channel")
        return self.rsq + self.objective_shift(s)


def fista_momentum(xi_prev: float, rule: str = "standard") -> float:
    """Next ``xi`` in the momentum sequence.

    ``standard`` is ``(1 + sqrt(1 + 4 xi^2)) / 2``. ``printed`` drops the
    leading 1, i.e. ``sqrt(1 + 4 xi^2) / 2``, which grows only like
    ``sqrt(i)/2``.
    """
    if rule == "standard":
        return 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * xi_prev * xi_prev))
    if rule == "printed":
        return 0.5 * np.sqrt(1.0 + 4.0 * xi_prev * xi_prev)
    raise ValueError(f"unknown momentum rule {rule!r}; expected one of {MOMENTUM_RULES}")


def _coerce(s_prev, D):
    D = D if isinstance(D, Constellation) else Constellation(int(D))
    return np.asarray(s_prev, dtype=np.complex128), D


def _pg1(qp: BoxQP, s):
    return qp.step(s)


def _apg(qp: BoxQP, s, B: int, momentum: str = "standard"):
    if B < 1:
        raise ValueError("B must be >= 1")
    x_prev = x = s
    xi_prev = 1.0
    for _ in range(B):
        xi = fista_momentum(xi_prev, momentum)
        alpha = (xi_prev - 1.0) / xi
        w = x + alpha * (x - x_prev) if alpha != 0.0 else x
        x_prev, x = x, qp.step(w)
        xi_prev = xi
    return x


def _exact(qp: BoxQP, s, tol: float, cap: int, momentum: str = "standard"):
    """Run APG per problem until the step ``||x+ - x|| <= tol * max(1, ||x||)``.

    A small step only counts once the projected-gradient residual at ``x+`` is
    below the same threshold; otherwise the momentum is reset and iteration
    continues. Returns the lowest-objective iterate seen (the start point
    included) and a per-problem convergence mask.
    """
    if cap < 1 or not tol > 0:
        raise ValueError("cap must be >= 1 and tol > 0")
    batch = s.shape[:-1]
    s = s.reshape(-1, s.shape[-1])
    sub = _flatten(qp, s.shape[0])

    x_prev = s.copy()
    x = s.copy()
    best = s.copy()
    best_obj = sub.objective_shift(s)
    xi_prev = np.ones(s.shape[0])
    converged = np.zeros(s.shape[0], dtype=bool)
    active = np.arange(s.shape[0])
    for _ in range(cap):
        if active.size == 0:
            break
        p = sub.subset(active)
        xa, xpa, xia = x[active], x_prev[active], xi_prev[active]
        xi = fista_momentum(xia, momentum)
        alpha = ((xia - 1.0) / xi)[:, None]
        x_new = p.step(xa + alpha * (xa - xpa))
        obj = p.objective_shift(x_new)
        better = obj < best_obj[active]
        best[active[better]] = x_new[better]
        best_obj[active[better]] = obj[better]
        step = np.linalg.norm(x_new - xa, axis=-1)
        small = step <= tol * np.maximum(1.0, np.linalg.norm(xa, axis=-1))
        # momentum can push past a face and get clipped back to the same
        # point; only stop where a plain PG step also stalls, else restart
        resid = np.linalg.norm(p.step(x_new) - x_new, axis=-1)
        done = small & (resid <= tol * np.maximum(1.0, np.linalg.norm(x_new, axis=-1)))
        restart = small & ~done
        x_prev[active] = np.where(restart[:, None], x_new, xa)
        x[active] = x_new
        xi_prev[active] = np.where(restart, 1.0, xi)
        converged[active[done]] = True
        active = active[~done]
    return best.reshape(batch + s.shape[-1:]), converged.reshape(batch)


def _flatten(qp: BoxQP, M: int) -> BoxQP:
    K = qp.gram.shape[-1]
    out = BoxQP.__new__(BoxQP)
    out.gram = qp.gram.reshape(M, K, K)
    out.corr = qp.corr.reshape(M, K)
    out.inv_L = np.asarray(qp.inv_L).reshape(M)
    out.D = qp.D
    out.rsq = None if qp.rsq is None else np.asarray(qp.rsq).reshape(M)
    return out


def m_step_pg1(r, H, s_prev, D, L=None) -> np.ndarray:
    """One projected-gradient step from ``s_prev``."""
    s_prev, D = _coerce(s_prev, D)
    return _pg1(BoxQP.from_channel(r, H, D, L=L), s_prev)


def m_step_apg(r, H, s_prev, D, B: int = 5, L=None, momentum: str = "standard") -> np.ndarray:
    """``B`` accelerated projected-gradient steps warm-started at ``s_prev``.

    The first step has zero momentum, so ``B=1`` is exactly :func:`m_step_pg1`.
    """
    s_prev, D = _coerce(s_prev, D)
    return _apg(BoxQP.from_channel(r, H, D, L=L), s_prev, B, momentum)


def m_step_exact(r, H, s_init, D, tol: float = 1e-8, cap: int = 500, L=None, momentum: str = "standard"):
    """Solve the box-constrained least-squares problem to tolerance.

    Returns
    -------
    s : ndarray
        Solution(s), same shape as ``s_init``.
    converged : ndarray of bool
        False where ``cap`` was hit first; ``s`` is then the best iterate.
    """
    s_init, D = _coerce(s_init, D)
    return _exact(BoxQP.from_channel(r, H, D, L=L), s_init, tol, cap, momentum)
