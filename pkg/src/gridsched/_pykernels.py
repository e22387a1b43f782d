"""Pure NumPy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` operation for operation so both backends
produce the same pivot sequence and the same floating point results.
"""

import numpy as np

SIMPLEX_OPTIMAL = 0
SIMPLEX_UNBOUNDED = 1
SIMPLEX_ITER_LIMIT = 2

RATIO_TIE = 1e-11
DEGENERATE_STEP = 1e-12


def simplex_iterate(T, x, lo, hi, d, basis, pos, max_iter, bland_after, opt_tol, piv_tol):
    """Bounded-variable primal simplex on a dense tableau, in place.

    ``T`` is B^-1 A for the current basis, ``d`` the reduced costs of a
    maximisation, ``x`` the values of all variables (non-basic ones sit at a
    bound, or at zero when free), ``basis[i]`` the variable basic in row
    ``i`` and ``pos[j]`` the row of variable ``j`` or -1.

    Returns ``(status, iterations, bland_switched)``.
    """
    m, n = T.shape
    iters = 0
    degenerate = 0
    bland = False
    while True:
        nonbasic = pos < 0
        up = nonbasic & (x < hi) & (d > opt_tol)
        down = nonbasic & (x > lo) & (d < -opt_tol)
        eligible = up | down
        if not eligible.any():
            return SIMPLEX_OPTIMAL, iters, bland
        if iters >= max_iter:
            return SIMPLEX_ITER_LIMIT, iters, bland

        if bland:
            j = int(np.argmax(eligible))
        else:
            score = np.where(up, d, np.where(down, -d, 0.0))
            j = int(np.argmax(score))
        direction = 1.0 if up[j] else -1.0

        col = T[:, j].copy()
        alpha = direction * col
        xb = x[basis]
        with np.errstate(invalid="ignore", divide="ignore"):
            lim = np.full(m, np.inf)
            dec = alpha > piv_tol
            inc = alpha < -piv_tol
            lim[dec] = (xb[dec] - lo[basis][dec]) / alpha[dec]
            lim[inc] = (hi[basis][inc] - xb[inc]) / (-alpha[inc])
        lim = np.maximum(lim, 0.0)

        r = -1
        tmin = np.inf
        if m:
            tmin = lim.min()
        if tmin < np.inf:
            cand = lim <= tmin + RATIO_TIE
            if not bland:
                a = np.where(cand, np.abs(alpha), -1.0)
                cand = a == a.max()
            r = int(np.argmin(np.where(cand, basis, np.iinfo(np.int64).max)))
            tmin = lim[r]

        tflip = hi[j] - lo[j]
        if tflip <= tmin:
            t = tflip
            r = -1
        else:
            t = tmin
        if t == np.inf:
            return SIMPLEX_UNBOUNDED, iters, bland

        step = direction * t
        x[basis] = xb - step * col
        if r < 0:
            x[j] = hi[j] if direction > 0 else lo[j]
        else:
            leaving = basis[r]
            x[j] = x[j] + step
            x[leaving] = lo[leaving] if alpha[r] > 0 else hi[leaving]
            prow = T[r] / col[r]
            T -= np.outer(col, prow)
            T[r] = prow
            d -= d[j] * prow
            basis[r] = j
            pos[j] = r
            pos[leaving] = -1

        iters += 1
        if t <= DEGENERATE_STEP:
            degenerate += 1
            if degenerate >= bland_after:
                bland = True
        else:
            degenerate = 0


def _lex_less(choice_a, choice_b):
    """Compare two assignments as sorted (block, service) pair sequences."""
    pa = [(b, k) for b, k in enumerate(choice_a) if k >= 0]
    pb = [(b, k) for b, k in enumerate(choice_b) if k >= 0]
    return pa < pb


def enumerate_best(slots, r, is_urllc, q, n_minislots, obj_tol, demand_tol):
    """Exhaustive search over conflict-free block assignments.

    Every block is either left out or given to one service with positive
    rate, provided none of its mini-slots is taken. Returns
    ``(found, best_objective, best_choice, n_leaves)`` where ``best_choice[b]``
    is the service column of block ``b`` or -1. Ties within ``obj_tol``
    (relative) go to the lexicographically smallest assignment set.
    """
    n, K = r.shape
    slots = [tuple(int(i) for i in row) for row in slots]
    is_urllc = [bool(v) for v in is_urllc]
    rates = [[float(v) for v in row] for row in r]
    q = [float(v) for v in q]
    n_urllc = len(q)

    used = [False] * n_minislots
    delivered = [0.0] * K
    choice = [-1] * n
    best = {"obj": -np.inf, "choice": None, "leaves": 0}

    def leaf(obj):
        best["leaves"] += 1
        for k in range(n_urllc):
            if delivered[k] < q[k] - demand_tol:
                return
        b_obj = best["obj"]
        scale = max(1.0, abs(b_obj)) if b_obj > -np.inf else 1.0
        if obj > b_obj + obj_tol * scale:
            best["obj"], best["choice"] = obj, list(choice)
        elif obj >= b_obj - obj_tol * scale and _lex_less(choice, best["choice"]):
            best["obj"], best["choice"] = obj, list(choice)

    def visit(b, obj):
        if b == n:
            leaf(obj)
            return
        visit(b + 1, obj)
        s = slots[b]
        if used[s[0]] or used[s[1]] or used[s[2]] or used[s[3]]:
            return
        for i in s:
            used[i] = True
        for k in range(K):
            rate = rates[b][k]
            if rate <= 0.0:
                continue
            choice[b] = k
            delivered[k] += rate
            visit(b + 1, obj if is_urllc[k] else obj + rate)
            delivered[k] -= rate
        choice[b] = -1
        for i in s:
            used[i] = False

    visit(0, 0.0)
    if best["choice"] is None:
        return False, 0.0, np.full(n, -1, dtype=np.int64), best["leaves"]
    return True, best["obj"], np.array(best["choice"], dtype=np.int64), best["leaves"]
