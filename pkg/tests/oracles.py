"""Reference computations that share no code path with the package under test."""

import math

import numpy as np
from scipy import integrate, optimize


def truncated_mean_quad(z, y, sigma):
    """Mean of N(z, sigma^2) restricted to {r : y r >= 0}, by adaptive quadrature.

    Integrates in t = y r over t >= 0. When the untruncated mean lies outside
    the support the density is rescaled by exp(m^2 / 2 sigma^2) so it peaks at
    1 on the boundary instead of underflowing.
    """
    m = y * z
    if m >= 0:
        lo, hi = max(0.0, m - 40 * sigma), m + 40 * sigma

        def w(t):
            return math.exp(-((t - m) ** 2) / (2 * sigma**2))

        pts = [m] if lo < m < hi else None
    else:
        # t (t - 2m) / (2 sigma^2) reaches 700 at the root below
        lo, hi = 0.0, m + math.sqrt(m * m + 1400 * sigma**2)

        def w(t):
            return math.exp(-t * (t - 2 * m) / (2 * sigma**2))

        pts = None
    kw = dict(epsabs=0.0, epsrel=1e-13, limit=500, points=pts)
    den = integrate.quad(w, lo, hi, **kw)[0]
    num = integrate.quad(lambda t: t * w(t), lo, hi, **kw)[0]
    return y * num / den


def central_difference(f, S, coord, h=1e-5):
    """d f / d x along one real coordinate of the complex grid S.

    ``coord = (w, k, part)`` with ``part`` 0 for the real axis, 1 for imaginary.
    """
    w, k, part = coord
    e = np.zeros_like(S)
    e[w, k] = h if part == 0 else 1j * h
    return (f(S + e) - f(S - e)) / (2 * h)


def box_ls_grid_k2(r, H, amp=1.0, step=1e-3):
    """min ||r - H s||^2 over s in the complex box, K = 2, by grid search.

    The first user's (Re, Im) is swept on a grid of the given resolution; for
    each grid point the second user's problem is a scaled distance to a point
    in the plane, which is separable per axis and solved by clipping.
    """
    h1, h2 = H[:, 0], H[:, 1]
    g = np.arange(-amp, amp + step / 2, step)
    s1 = (g[:, None] + 1j * g[None, :]).ravel()
    n1, n2 = np.vdot(h1, h1).real, np.vdot(h2, h2).real
    c12 = np.vdot(h2, h1)
    a1, a2 = np.vdot(h1, r), np.vdot(h2, r)
    # ||r - h1 s1||^2 and the second user's unconstrained optimum c
    e2 = np.vdot(r, r).real - 2 * np.real(np.conj(s1) * a1) + np.abs(s1) ** 2 * n1
    c = (a2 - c12 * s1) / n2
    s2 = np.clip(c.real, -amp, amp) + 1j * np.clip(c.imag, -amp, amp)
    f = e2 - n2 * np.abs(c) ** 2 + n2 * np.abs(s2 - c) ** 2
    i = int(np.argmin(f))
    return float(f[i]), np.array([s1[i], s2[i]])


def stacked_box_ls(taps, W, r_time, amp):
    """Solve min sum_n ||r_n - sum_k C_{n,k} F^H s_k||^2 over the box with a dense
    bounded least-squares solver, C_{n,k} the circulant tap matrices.

    Returns (objective, S) with S shaped (W, K).
    """
    L, K, N = taps.shape
    n = np.arange(W)
    Fh = np.exp(2j * np.pi * np.outer(n, n) / W) / math.sqrt(W)
    A = np.zeros((N * W, K * W), complex)
    for nn in range(N):
        for k in range(K):
            c = np.zeros(W, complex)
            c[:L] = taps[:, k, nn]
            C = np.array([[c[(t - m) % W] for m in range(W)] for t in range(W)])
            A[nn * W : (nn + 1) * W, k * W : (k + 1) * W] = C @ Fh
    b = r_time.reshape(-1)
    Ar = np.block([[A.real, -A.imag], [A.imag, A.real]])
    br = np.concatenate([b.real, b.imag])
    res = optimize.lsq_linear(Ar, br, bounds=(-amp, amp), method="bvls", tol=1e-14, max_iter=10_000)
    x = res.x[: K * W] + 1j * res.x[K * W :]
    S = x.reshape(K, W).T
    obj = float(np.sum((Ar @ res.x - br) ** 2))
    return obj, S
