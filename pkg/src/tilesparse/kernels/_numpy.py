"""Vectorised numpy counterparts of the numba kernels.

Same signatures and return conventions as ``_numba``.  Sequential algorithms
(coordinate descent) are vectorised across independent problems instead of
across coordinates, so iterates match the loop versions up to rounding.
"""
import numpy as np


def _tournament(n):
    """Round-robin schedule of disjoint index pairs covering all n(n-1)/2 pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(a, tol, max_sweeps):
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    norm = np.sqrt(np.sum(a * a))
    rounds = _tournament(n)
    sweeps = 0
    while True:
        offdiag = a - np.diag(np.diag(a))
        off = np.sqrt(np.sum(offdiag * offdiag))
        if off <= tol * norm or sweeps >= max_sweeps:
            break
        sweeps += 1
        thresh = 0.2 * off / (n * n) if sweeps < 4 else 0.0
        for p, q in rounds:
            apq = a[p, q]
            if sweeps > 4:
                g = 100.0 * np.abs(apq)
                app, aqq = np.abs(a[p, p]), np.abs(a[q, q])
                tiny = (app + g == app) & (aqq + g == aqq) & (apq != 0.0)
                if tiny.any():
                    a[p[tiny], q[tiny]] = 0.0
                    a[q[tiny], p[tiny]] = 0.0
                    apq = np.where(tiny, 0.0, apq)
            live = np.abs(apq) > thresh
            if not live.any():
                continue
            p, q, apq = p[live], q[live], apq[live]
            tau = (a[q, q] - a[p, p]) / (2.0 * apq)
            big = np.abs(tau) > 1e150
            safe = np.where(big, 0.0, tau)
            t = np.where(big, 0.5 / np.where(big, tau, 1.0),
                         np.where(safe >= 0.0, 1.0, -1.0) / (np.abs(safe) + np.sqrt(1.0 + safe * safe)))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            ap = a[:, p].copy()
            aq = a[:, q]
            a[:, p] = c * ap - s * aq
            a[:, q] = s * ap + c * aq
            ap = a[p, :].copy()
            aq = a[q, :]
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp = v[:, p].copy()
            vq = v[:, q]
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweeps, off


def lasso_cd_batch(gram, xty, lam, tol, max_sweeps):
    k, n = xty.shape
    coef = np.zeros((k, n))
    sweeps = np.zeros(n, dtype=np.int64)
    last_change = np.zeros(n)
    active = np.arange(n)
    diag = np.diag(gram)
    it = 0
    while active.size and it < max_sweeps:
        it += 1
        sub = coef[:, active]
        delta = np.zeros(active.size)
        for j in range(k):
            old = sub[j].copy()
            if diag[j] <= 0.0:
                new = np.zeros_like(old)
            else:
                rho = xty[j, active] - gram[j] @ sub + diag[j] * old
                new = np.sign(rho) * np.maximum(np.abs(rho) - lam, 0.0) / diag[j]
            sub[j] = new
            np.maximum(delta, np.abs(new - old), out=delta)
        coef[:, active] = sub
        sweeps[active] = it
        last_change[active] = delta
        active = active[delta >= tol[active]]
    return coef, sweeps, last_change


def svm_dual_cd(x, y, upper, tol, max_epochs):
    n, d = x.shape
    alpha = np.zeros(n)
    w = np.zeros(d)
    qii = np.einsum("ij,ij->i", x, x)
    epochs = 0
    viol = np.inf
    while epochs < max_epochs:
        epochs += 1
        viol = 0.0
        for i in range(n):
            g = y[i] * (w @ x[i]) - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= upper[i]:
                pg = max(g, 0.0)
            else:
                pg = g
            viol = max(viol, abs(pg))
            if pg != 0.0 and qii[i] > 0.0:
                na = min(max(a - g / qii[i], 0.0), upper[i])
                if na != a:
                    w += (na - a) * y[i] * x[i]
                alpha[i] = na
        if viol < tol:
            break
    return alpha, w, epochs, viol


def best_split(x, y, idx, feats, n_classes):
    n = idx.shape[0]
    total = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
    best_f, best_t, best_s = -1, 0.0, -1.0
    nl = np.arange(1, n, dtype=np.float64)
    for f in feats:
        vals = x[idx, f]
        order = np.argsort(vals, kind="mergesort")
        sv = vals[order]
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y[idx[order]]] = 1.0
        left = np.cumsum(onehot, axis=0)[:-1]
        right = total - left
        score = np.sum(left * left, axis=1) / nl + np.sum(right * right, axis=1) / (n - nl)
        valid = sv[:-1] < sv[1:]
        if not valid.any():
            continue
        score = np.where(valid, score, -1.0)
        i = int(np.argmax(score))
        if score[i] > best_s:
            best_s = float(score[i])
            best_f = int(f)
            thr = sv[i] + (sv[i + 1] - sv[i]) / 2.0
            best_t = float(sv[i] if thr >= sv[i + 1] else thr)
    return best_f, best_t, best_s


def tree_apply(feature, threshold, left, right, x):
    n = x.shape[0]
    node = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    internal = feature[node] >= 0
    while internal.any():
        r = rows[internal]
        nd = node[r]
        go_left = x[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        internal = feature[node] >= 0
    return node
