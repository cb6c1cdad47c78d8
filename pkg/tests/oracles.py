"""Independent reference implementations used as test oracles.

Everything here is deliberately naive (nested loops, explicit index
arithmetic, O(n^2) scans) and shares no code with the package.
"""

import numpy as np


def conv2d_loops(x, kernel, stride=1):
    """Direct-summation convolution over an already padded NCHW input."""
    n, c, h, w = x.shape
    o, _, kh, kw = kernel.shape
    oh = (h - kh) // stride + 1
    ow = (w - kw) // stride + 1
    out = np.zeros((n, o, oh, ow), dtype=np.float64)
    for ni in range(n):
        for oi in range(o):
            for yi in range(oh):
                for xi in range(ow):
                    acc = 0.0
                    for ci in range(c):
                        for ky in range(kh):
                            for kx in range(kw):
                                acc += x[ni, ci, yi * stride + ky, xi * stride + kx] * kernel[oi, ci, ky, kx]
                    out[ni, oi, yi, xi] = acc
    return out


def reflect_index(i, n):
    """Mirror an out-of-range index into [0, n) excluding the edge sample."""
    while i < 0 or i >= n:
        if i < 0:
            i = -i
        if i >= n:
            i = 2 * (n - 1) - i
    return i


def reflect_pad_loops(img, p):
    """Mirrored-index padding of a 2-D image."""
    h, w = img.shape
    out = np.zeros((h + 2 * p, w + 2 * p), dtype=img.dtype)
    for y in range(h + 2 * p):
        for x in range(w + 2 * p):
            out[y, x] = img[reflect_index(y - p, h), reflect_index(x - p, w)]
    return out


def roc_auc_pairs(scores, labels):
    """All-pairs Mann-Whitney statistic: wins + half ties over pos x neg."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


def otsu_exhaustive(image, bins=256):
    """Scan every histogram cut and recompute the class statistics naively."""
    values = np.asarray(image, dtype=np.float64).ravel()
    lo, hi = values.min(), values.max()
    hist, edges = np.histogram(values, bins=bins, range=(lo, hi))
    best_var, best_cut = -1.0, None
    total = hist.sum()
    centers = (edges[:-1] + edges[1:]) / 2.0
    for cut in range(bins - 1):
        w0 = hist[: cut + 1].sum()
        w1 = hist[cut + 1 :].sum()
        if w0 == 0 or w1 == 0:
            continue
        mu0 = (hist[: cut + 1] * centers[: cut + 1]).sum() / w0
        mu1 = (hist[cut + 1 :] * centers[cut + 1 :]).sum() / w1
        var = (w0 / total) * (w1 / total) * (mu0 - mu1) ** 2
        if var > best_var + 1e-18 * max(1.0, abs(best_var)):
            best_var, best_cut = var, cut
    return edges[best_cut + 1]


def adam_scalar_trajectory(x0, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Hand-executed Adam recurrence on a scalar parameter."""
    x, m, v = float(x0), 0.0, 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        x = x - lr * m_hat / (np.sqrt(v_hat) + eps)
        out.append(x)
    return out


def checkerboard_energy_dft(img):
    """Nyquist band share of AC power, straight from the DFT definition."""
    a = np.asarray(img, dtype=np.float64)
    h, w = a.shape
    p = np.abs(np.fft.fft2(a)) ** 2
    ac = p.sum() - p[0, 0]
    if ac <= 0:
        return 0.0
    rows = sorted({h // 2, (h + 1) // 2} - {0})
    cols = sorted({w // 2, (w + 1) // 2} - {0})
    band = p[rows, :].sum() + p[:, cols].sum() - p[np.ix_(rows, cols)].sum()
    return float(band / ac)
