"""Straight-line reference simulation used to cross-check report summaries.

Deliberately naive and independent: plain Python floats, builtin sum,
direct formulas, net flows applied in one shot per tick instead of
pairwise trades. Imports nothing from the package under test.
"""

import math


def _tick(row, w, h, s, kind, param):
    n = len(w)
    u = [row[i] * h[i] for i in range(n)]
    total = sum(u)
    resid = max(abs(u[i] / (w[i] * total) - 1.0) for i in range(n))
    if kind == "buyhold":
        alpha = 0.0
    elif kind == "full":
        alpha = 1.0
    elif kind == "fractional":
        alpha = param
    elif kind == "threshold":
        alpha = 1.0 if resid > param else 0.0
    else:
        raise ValueError(kind)
    if alpha == 0.0:
        return h, s
    new_u = [(1.0 - alpha) * u[i] + alpha * w[i] * total for i in range(n)]
    s = [s[i] + w[i] * math.log(new_u[i] / u[i]) for i in range(n)]
    h = [new_u[i] / row[i] for i in range(n)]
    return h, s


def simulate_naive(prices, weights, capital, kind, param=None, settle=True):
    """Returns the summary a report should carry for the same inputs.

    ``prices``: list of per-tick price rows (plain floats).
    ``kind``/``param``: policy, one of full | buyhold | fractional | threshold.
    """
    n = len(weights)
    w = list(weights)
    p0 = prices[0]
    h = [w[i] * capital / p0[i] for i in range(n)]
    s = [0.0] * n
    for row in prices[1:]:
        h, s = _tick(row, w, h, s, kind, param)
    if settle:
        h, s = _tick(prices[-1], w, h, s, "full", None)
    p_end = prices[-1]
    total_end = sum(p_end[i] * h[i] for i in range(n))
    return {
        "ln_T_ratio": math.log(total_end / capital),
        "ln_P_ratio": sum(w[i] * math.log(p_end[i] / p0[i]) for i in range(n)),
        "delta_S": sum(s),
        "per_asset_entropy": s,
    }
