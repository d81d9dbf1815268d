"""Independent oracles shared by the test modules."""

import numpy as np

from hfdistill.nn import PARAM_NAMES, backward, forward


def central_diff(f, x, h=1e-5):
    """Central finite-difference gradient of scalar ``f`` at array ``x``."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        orig = x[i]
        x[i] = orig + h
        fp = f(x)
        x[i] = orig - h
        fm = f(x)
        x[i] = orig
        g[i] = (fp - fm) / (2 * h)
    return g


def haar_matrices(n):
    """1-D orthonormal Haar analysis rows for even ``n``: (lowpass, highpass)."""
    lo = np.zeros((n // 2, n))
    hi = np.zeros((n // 2, n))
    for k in range(n // 2):
        lo[k, 2 * k] = lo[k, 2 * k + 1] = 1 / np.sqrt(2)
        hi[k, 2 * k], hi[k, 2 * k + 1] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    return lo, hi


def haar_oracle(x):
    """Separable-matrix form of the 2D transform: (ll, lh, hl, hh) for even-shaped ``x``.

    LH differences along width (columns), HL along height (rows).
    """
    rl, rh = haar_matrices(x.shape[0])
    cl, ch = haar_matrices(x.shape[1])
    return rl @ x @ cl.T, rl @ x @ ch.T, rh @ x @ cl.T, rh @ x @ ch.T


def edge_pad(x):
    """Edge replication up to even dims, written with explicit indexing."""
    h, w = x.shape
    rows = list(range(h)) + ([h - 1] if h % 2 else [])
    cols = list(range(w)) + ([w - 1] if w % 2 else [])
    return x[np.ix_(rows, cols)]


def mlp_param_fd(params, x, loss_of_logits, h=1e-5):
    """Finite-difference gradient of ``loss_of_logits(forward(x))`` w.r.t. every parameter."""
    out = {}
    for name in PARAM_NAMES:
        p = getattr(params, name)

        def f(v, name=name, p=p):
            saved = p.copy()
            p[...] = v
            val = loss_of_logits(forward(params, x)[0])
            p[...] = saved
            return val

        out[name] = central_diff(f, p.copy(), h)
    return out


def mlp_analytic(params, x, loss_and_grad):
    logits, cache = forward(params, x)
    _, g = loss_and_grad(logits)
    return backward(params, cache, g).tensors()


def grad_close(analytic, numeric, rel=1e-4, floor=1e-6):
    """Elementwise |a - n| <= max(rel * |n|, floor); returns the worst ratio."""
    worst = 0.0
    for name in analytic:
        a, n = np.asarray(analytic[name]), np.asarray(numeric[name])
        tol = np.maximum(rel * np.abs(n), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / tol)))
    return worst <= 1.0, worst


def band_gap(diff_logits, fact, use_low=False, use_high=True):
    """Smallest |coefficient| of the selected bands of ``diff_logits``, ignoring exact zeros.

    Exact zeros come from edge padding and stay zero under any perturbation,
    so they are not L1 kinks.
    """
    from hfdistill.wavelet import haar_forward, pad_even

    diff = np.asarray(diff_logits, dtype=np.float64)
    padded, _, _ = pad_even(diff.reshape(diff.shape[:-1] + fact.shape))
    ll, lh, hl, hh = haar_forward(padded)
    picked = ([ll] if use_low else []) + ([lh, hl, hh] if use_high else [])
    vals = np.concatenate([np.abs(b).ravel() for b in picked])
    vals = vals[vals != 0]
    return float(vals.min()) if vals.size else np.inf
