"""Loop kernels compiled with numba."""
import numpy as np

from .._accel import njit


@njit
def jacobi_eigh(a, tol, max_sweeps):
    """Cyclic Jacobi on a copy of the symmetric matrix ``a``.

    Returns (diagonal, eigenvector matrix, sweeps used, final off-norm).
    Rotations run row by row over the strict upper triangle.  Only rows are
    rotated (contiguous access) and mirrored into the columns.
    """
    n = a.shape[0]
    a = a.copy()
    vt = np.eye(n)
    norm = np.sqrt(np.sum(a * a))
    sweeps = 0
    off = 0.0
    while True:
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        off = np.sqrt(off)
        if off <= tol * norm or sweeps >= max_sweeps:
            break
        sweeps += 1
        # early sweeps only rotate the large entries; later ones zero entries
        # too small to move either diagonal element
        thresh = 0.0
        if sweeps < 4:
            thresh = 0.2 * off / (n * n)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                g = 100.0 * abs(apq)
                if sweeps > 4 and abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                if abs(apq) <= thresh:
                    continue
                tau = (aqq - app) / (2.0 * apq)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    sgn = 1.0 if tau >= 0.0 else -1.0
                    t = sgn / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    a[k, p] = a[p, k]
                    a[k, q] = a[q, k]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vpk = vt[p, k]
                    vqk = vt[q, k]
                    vt[p, k] = c * vpk - s * vqk
                    vt[q, k] = s * vpk + c * vqk
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, vt.T.copy(), sweeps, off


@njit
def lasso_cd_batch(gram, xty, lam, tol, max_sweeps):
    """Coordinate descent for min 0.5*||X a - y||^2 + lam*||a||_1, one column of
    ``xty`` per problem, all sharing ``gram = X^T X``."""
    k, n = xty.shape
    coef = np.zeros((k, n))
    sweeps = np.zeros(n, dtype=np.int64)
    last_change = np.zeros(n)
    for col in range(n):
        it = 0
        delta = 0.0
        while it < max_sweeps:
            it += 1
            delta = 0.0
            for j in range(k):
                gjj = gram[j, j]
                old = coef[j, col]
                if gjj <= 0.0:
                    new = 0.0
                else:
                    rho = xty[j, col]
                    for m in range(k):
                        rho -= gram[j, m] * coef[m, col]
                    rho += gjj * old
                    if rho > lam:
                        new = (rho - lam) / gjj
                    elif rho < -lam:
                        new = (rho + lam) / gjj
                    else:
                        new = 0.0
                coef[j, col] = new
                d = abs(new - old)
                if d > delta:
                    delta = d
            if delta < tol[col]:
                break
        sweeps[col] = it
        last_change[col] = delta
    return coef, sweeps, last_change


@njit
def svm_dual_cd(x, y, upper, tol, max_epochs):
    """Dual coordinate descent for the hinge-loss linear SVM without explicit bias.

    Returns (alpha, w, epochs, max projected-gradient violation of the last epoch).
    """
    n, d = x.shape
    alpha = np.zeros(n)
    w = np.zeros(d)
    qii = np.empty(n)
    for i in range(n):
        s = 0.0
        for f in range(d):
            s += x[i, f] * x[i, f]
        qii[i] = s
    epochs = 0
    viol = np.inf
    while epochs < max_epochs:
        epochs += 1
        viol = 0.0
        for i in range(n):
            wx = 0.0
            for f in range(d):
                wx += w[f] * x[i, f]
            g = y[i] * wx - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = g if g < 0.0 else 0.0
            elif a >= upper[i]:
                pg = g if g > 0.0 else 0.0
            else:
                pg = g
            if abs(pg) > viol:
                viol = abs(pg)
            if pg != 0.0 and qii[i] > 0.0:
                na = a - g / qii[i]
                if na < 0.0:
                    na = 0.0
                elif na > upper[i]:
                    na = upper[i]
                step = (na - a) * y[i]
                if step != 0.0:
                    for f in range(d):
                        w[f] += step * x[i, f]
                alpha[i] = na
        if viol < tol:
            break
    return alpha, w, epochs, viol


@njit
def best_split(x, y, idx, feats, n_classes):
    """Best Gini split of rows ``idx`` over candidate columns ``feats``.

    Maximises sum_c nL_c^2/nL + sum_c nR_c^2/nR, which is equivalent to
    minimising the size-weighted child impurity.  Returns (feature,
    threshold, score); feature is -1 when every candidate is constant.
    """
    n = idx.shape[0]
    total = np.zeros(n_classes)
    for i in range(n):
        total[y[idx[i]]] += 1.0
    best_f = -1
    best_t = 0.0
    best_s = -1.0
    vals = np.empty(n)
    labs = np.empty(n, dtype=np.int64)
    left = np.zeros(n_classes)
    for fi in range(feats.shape[0]):
        f = feats[fi]
        for i in range(n):
            vals[i] = x[idx[i], f]
        order = np.argsort(vals, kind="mergesort")
        sv = vals[order]
        for i in range(n):
            labs[i] = y[idx[order[i]]]
        left[:] = 0.0
        sql = 0.0
        sqr = 0.0
        for c in range(n_classes):
            sqr += total[c] * total[c]
        for i in range(n - 1):
            c = labs[i]
            sql += 2.0 * left[c] + 1.0
            sqr -= 2.0 * (total[c] - left[c]) - 1.0
            left[c] += 1.0
            if sv[i] < sv[i + 1]:
                nl = i + 1.0
                s = sql / nl + sqr / (n - nl)
                if s > best_s:
                    best_s = s
                    best_f = f
                    thr = sv[i] + (sv[i + 1] - sv[i]) / 2.0
                    if thr >= sv[i + 1]:
                        thr = sv[i]
                    best_t = thr
    return best_f, best_t, best_s


@njit
def tree_apply(feature, threshold, left, right, x):
    """Leaf index reached by every row of ``x``."""
    n = x.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if x[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out
