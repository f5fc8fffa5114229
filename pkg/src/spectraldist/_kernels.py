"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Every quadrature in the package bottoms out in Chebyshev-series evaluation
over arrays of nodes, so that kernel (and the level-set Newton polish) gets a
compiled implementation. The backend is chosen once at import time from the
environment variable ``SPECTRALDIST_BACKEND``:

* ``auto`` (default) - use numba when importable, else numpy;
* ``numba``          - require numba, raise if missing;
* ``numpy``          - force the pure-numpy path.

Both paths compute in the same arithmetic order (Clenshaw recurrence), so
results agree to the last bit; ``benchmarks/bench_kernels.py`` compares their
speed.
"""

import os

import numpy as np

_BACKEND_ENV = "SPECTRALDIST_BACKEND"

_JIT_OPTIONS = {"cache": True, "nogil": True}


def _clenshaw_np(coeffs, s):
    """Clenshaw evaluation of a Chebyshev series at points ``s`` in [-1, 1]."""
    b1 = np.zeros_like(s)
    b2 = np.zeros_like(s)
    for j in range(coeffs.shape[0] - 1, 0, -1):
        b1, b2 = 2.0 * s * b1 - b2 + coeffs[j], b1
    return s * b1 - b2 + coeffs[0]


def _masked_series_np(coeffs, center, radius, t, out):
    s = (t - center) / radius
    inside = np.abs(s) < 1.0
    out[...] = 0.0
    if np.any(inside):
        out[inside] = _clenshaw_np(coeffs, s[inside])
    return out


def _newton_poly_np(pc, dc, x, y, lo, hi, tol, max_iter):
    y = y.copy()
    for _ in range(max_iter):
        py = np.polynomial.polynomial.polyval(y, pc) - x
        dpy = np.polynomial.polynomial.polyval(y, dc)
        step = py / dpy
        y = np.clip(y - step, lo, hi)
        if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(y))):
            break
    return y


def _select_backend():
    choice = os.environ.get(_BACKEND_ENV, "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"unknown {_BACKEND_ENV}={choice!r}; use auto|numba|numpy")
    if choice == "numpy":
        return "numpy", None
    try:
        import numba
    except ImportError:
        if choice == "numba":
            raise
        return "numpy", None
    return "numba", numba


BACKEND, _numba = _select_backend()

def _plain_series_np(coeffs, s):
    return _clenshaw_np(coeffs, s)


if BACKEND == "numba":
    _njit = _numba.njit

    @_njit(**_JIT_OPTIONS)
    def _plain_series_nb(coeffs, s, out):  # pragma: no cover
        n = coeffs.shape[0]
        for i in range(s.shape[0]):
            si = s[i]
            b1 = 0.0
            b2 = 0.0
            for j in range(n - 1, 0, -1):
                b1, b2 = 2.0 * si * b1 - b2 + coeffs[j], b1
            out[i] = si * b1 - b2 + coeffs[0]
        return out

    @_njit(**_JIT_OPTIONS)
    def _masked_series_nb(coeffs, center, radius, t, out):  # pragma: no cover
        n = coeffs.shape[0]
        for i in range(t.shape[0]):
            s = (t[i] - center) / radius
            if s <= -1.0 or s >= 1.0:
                out[i] = 0.0
                continue
            b1 = 0.0
            b2 = 0.0
            for j in range(n - 1, 0, -1):
                b1, b2 = 2.0 * s * b1 - b2 + coeffs[j], b1
            out[i] = s * b1 - b2 + coeffs[0]
        return out

    @_njit(**_JIT_OPTIONS)
    def _newton_poly_nb(pc, dc, x, y, lo, hi, tol, max_iter):  # pragma: no cover
        y = y.copy()
        npts = y.shape[0]
        nc = pc.shape[0]
        for _ in range(max_iter):
            done = True
            for i in range(npts):
                yi = y[i]
                p = pc[nc - 1]
                for j in range(nc - 2, -1, -1):
                    p = p * yi + pc[j]
                d = dc[nc - 2]
                for j in range(nc - 3, -1, -1):
                    d = d * yi + dc[j]
                step = (p - x[i]) / d
                yi = yi - step
                if yi < lo:
                    yi = lo
                elif yi > hi:
                    yi = hi
                y[i] = yi
                if abs(step) > tol * max(1.0, abs(yi)):
                    done = False
            if done:
                break
        return y


def masked_series_eval(coeffs, center, radius, t):
    """Evaluate a compactly supported Chebyshev series at points ``t``.

    Points with |t - center| >= radius map to exactly 0. Any input shape is
    accepted; the output has the same shape.
    """
    t = np.ascontiguousarray(t, dtype=np.float64)
    flat = t.reshape(-1)
    out = np.empty_like(flat)
    if BACKEND == "numba":
        _masked_series_nb(np.ascontiguousarray(coeffs), float(center),
                          float(radius), flat, out)
    else:
        _masked_series_np(coeffs, center, radius, flat, out)
    return out.reshape(t.shape)


def series_eval(coeffs, s):
    """Plain Clenshaw evaluation at scaled points ``s`` (no support mask).

    Complex coefficient vectors evaluate through two real passes.
    """
    s = np.ascontiguousarray(s, dtype=np.float64)
    flat = s.reshape(-1)
    if np.iscomplexobj(coeffs):
        re = series_eval(np.ascontiguousarray(coeffs.real), flat)
        im = series_eval(np.ascontiguousarray(coeffs.imag), flat)
        return (re + 1j * im).reshape(s.shape)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    if BACKEND == "numba":
        out = np.empty_like(flat)
        _plain_series_nb(coeffs, flat, out)
    else:
        out = _plain_series_np(coeffs, flat)
    return out.reshape(s.shape)


def newton_polish_poly(pcoeffs, x, y0, lo, hi, tol=1e-14, max_iter=60):
    """Vectorized safeguarded Newton for P(y) = x with polynomial P.

    ``pcoeffs`` are power-basis coefficients (low order first); iterates are
    clamped to [lo, hi].
    """
    pc = np.ascontiguousarray(pcoeffs, dtype=np.float64)
    dc = np.polynomial.polynomial.polyder(pc)
    if dc.shape[0] < max(1, pc.shape[0] - 1):
        dc = np.concatenate([dc, np.zeros(max(1, pc.shape[0] - 1) - dc.shape[0])])
    x = np.ascontiguousarray(x, dtype=np.float64)
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    if BACKEND == "numba":
        return _newton_poly_nb(pc, np.ascontiguousarray(dc), x, y0,
                               float(lo), float(hi), float(tol), int(max_iter))
    return _newton_poly_np(pc, dc, x, y0, float(lo), float(hi), float(tol),
                           int(max_iter))
