"""Pure-numpy splitting loop, used when the compiled extension is unavailable.

One sweep, with ``K`` the (scaled) null-space operator of the quadratic step::

    u <- -K (g - rho (z - w))                         # quadratic step, J u = 0
    z <- soft(x_shift + u + w, lam / rho) - x_shift   # prox on regularized coords
    z <- u + w                                        # elsewhere
    w <- w + u - z

The loop stops with status 0 once ``||u - z|| <= tol_primal`` and
``rho ||z - z_prev|| <= tol_dual``, status 1 at ``max_iter``, and status 2
when the two residuals differ by more than a factor ``balance`` (after
``min_iter`` sweeps) so the caller can rescale ``rho``.
"""
import numpy as np


def soft_threshold(t, k):
    return np.sign(t) * np.maximum(np.abs(t) - k, 0.0)


def admm_l1(K, g, x_shift, mask, thresh, rho, u, z, w,
            max_iter, tol_primal, tol_dual, balance, min_iter):
    mask = mask.astype(bool)
    xs = x_shift[mask]
    it = 0
    primal = dual = 0.0
    status = 1
    while it < max_iter:
        it += 1
        u[:] = -(K @ (g - rho * (z - w)))
        z_prev = z.copy()
        z[:] = u + w
        z[mask] = soft_threshold(xs + z[mask], thresh) - xs
        r = u - z
        w += r
        primal = float(np.linalg.norm(r))
        dual = rho * float(np.linalg.norm(z - z_prev))
        if primal <= tol_primal and dual <= tol_dual:
            status = 0
            break
        if balance > 0.0 and it >= min_iter:
            if primal > balance * dual or dual > balance * primal:
                status = 2
                break
    return it, primal, dual, status
