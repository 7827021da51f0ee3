"""Compiled inner loop of the Lyapunov estimator."""
import numpy as np
from numba import njit


@njit(cache=True)
def _first_at_least(row, u):
    # bisect_left on a nondecreasing row
    i = 0
    while row[i] < u:
        i += 1
    return i


@njit(cache=True)
def chain_log_norm(u, E, cpi, cum, weights, dense, renorm_every):
    """``log ||A_n||`` along one sampled orbit, or NaN if the orbit leaves the table.

    ``u`` holds ``n + 2r`` uniforms in (0, 1]; the first picks the initial symbol
    from ``cpi``, the rest step through rows of ``cum``.
    """
    width = weights.shape[0]
    n = u.shape[0] - width + 1
    base = weights[0] * (cum.shape[0] if width > 1 else 1)
    s = _first_at_least(cpi, u[0])
    code = s
    for t in range(1, width - 1):
        s = _first_at_least(cum[s], u[t])
        code = code * cum.shape[0] + s
    m00, m01, m10, m11 = 1.0, 0.0, 0.0, 1.0
    logscale = 0.0
    for k in range(n):
        t = k + width - 1
        if t > 0:
            s = _first_at_least(cum[s], u[t])
            # rolling base-l code of the current window
            code = (code * cum.shape[0] + s) % base if width > 1 else s
        v = dense[code]
        if v != v:
            return np.nan
        x = E - v
        n00 = x * m00 - m10
        n01 = x * m01 - m11
        m10, m11 = m00, m01
        m00, m01 = n00, n01
        if (k + 1) % renorm_every == 0:
            nrm = max(max(abs(m00), abs(m01)), max(abs(m10), abs(m11)))
            m00 /= nrm
            m01 /= nrm
            m10 /= nrm
            m11 /= nrm
            logscale += np.log(nrm)
    opn = 0.5 * (np.hypot(m00 + m11, m01 - m10) + np.hypot(m00 - m11, m01 + m10))
    return logscale + np.log(opn)
