"""Generic dense active-set QP solver used as an independent reference.

Solves ``min 1/2 w'Pw + q'w  s.t.  G w <= g`` for positive definite ``P`` by
repeatedly solving the equality-constrained KKT system on a working set. It
knows nothing about the structure of the passivation filter.
"""

import numpy as np


def active_set_qp(P, q, G, g, tol=1e-13, max_iter=50):
    P = np.asarray(P, float)
    q = np.asarray(q, float)
    G = np.atleast_2d(np.asarray(G, float))
    g = np.atleast_1d(np.asarray(g, float))
    n = len(q)
    usable = np.linalg.norm(G, axis=1) > 0.0
    work: list[int] = []
    w = np.linalg.solve(P, -q)
    for _ in range(max_iter):
        if work:
            A = G[work]
            K = np.block([[P, A.T], [A, np.zeros((len(work), len(work)))]])
            sol = np.linalg.solve(K, np.concatenate([-q, g[work]]))
            w, lam = sol[:n], sol[n:]
            if np.any(lam < -tol):
                work.pop(int(np.argmin(lam)))
                continue
        else:
            w = np.linalg.solve(P, -q)
        viol = G @ w - g
        viol[~usable] = -np.inf
        viol[work] = -np.inf
        k = int(np.argmax(viol)) if len(viol) else -1
        if k < 0 or viol[k] <= tol * max(1.0, abs(g[k])):
            return w
        work.append(k)
    raise RuntimeError("active set did not converge")


def passivation_oracle(u_nom, y, D, h, alpha, kappa=None):
    """Reference solution of the passivation QP; ``kappa=None`` means input only.

    Returns ``(u, sigma)``.
    """
    u_nom = np.asarray(u_nom, float)
    y = np.asarray(y, float)
    yy = float(y @ y)
    if kappa is None:
        P = 2.0 * np.eye(2)
        q = -2.0 * u_nom
        G = y[None, :]
        w = active_set_qp(P, q, G, [D + alpha * h])
        return w, 0.0
    P = 2.0 * np.diag([1.0, 1.0, kappa])
    q = np.concatenate([-2.0 * u_nom, [0.0]])
    G = np.concatenate([y, [-yy]])[None, :]
    w = active_set_qp(P, q, G, [D + alpha * h])
    return w[:2], float(w[2])
