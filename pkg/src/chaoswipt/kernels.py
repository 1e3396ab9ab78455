"""Hot inner loops, compiled with numba when available.

Every kernel has a numba implementation and a pure-numpy implementation with
identical semantics.  The numba path is used unless numba is missing or the
environment variable ``CHAOSWIPT_DISABLE_NUMBA`` is set to a truthy value
(``1``, ``true``, ``yes``).  ``set_backend`` switches at runtime, which the
benchmark and the equivalence tests use.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

_TRUTHY = {"1", "true", "yes", "on"}


def _env_disables_numba() -> bool:
    return os.environ.get("CHAOSWIPT_DISABLE_NUMBA", "").strip().lower() in _TRUTHY


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _orbits_numpy(seeds, length):
    seeds = np.asarray(seeds, dtype=np.float64)
    out = np.empty((seeds.shape[0], length), dtype=np.float64)
    if length == 0:
        return out
    x = seeds.copy()
    out[:, 0] = x
    for q in range(1, length):
        x = 1.0 - 2.0 * x * x
        out[:, q] = x
    return out


def _correlate_numpy(y, phi, zeta, chip_duration):
    # y: (B, phi + zeta*phi); reference first, then zeta data blocks
    ref = y[:, :phi]
    data = y[:, phi:phi * (zeta + 1)].reshape(y.shape[0], zeta, phi)
    acc = (data * np.conj(ref)[:, None, :]).sum(axis=(1, 2))
    return chip_duration * np.real(acc)


def _lambda_numpy(h, g, phases):
    # h: (B, N, L) Tx->RIS taps, g: (B, N, K) RIS->user taps, phases: (N,)
    rot = np.exp(1j * phases)
    per_path = np.einsum("bnl,bnk,n->blk", h, g, rot)
    lam1 = (np.abs(per_path) ** 2).sum(axis=(1, 2))
    lam2 = (np.abs(np.einsum("bnk,n->bk", g, rot)) ** 2).sum(axis=1)
    return lam1, lam2


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True)
    def _orbits_numba(seeds, length):
        n = seeds.shape[0]
        out = np.empty((n, length), dtype=np.float64)
        for i in range(n):
            if length == 0:
                continue
            x = seeds[i]
            out[i, 0] = x
            for q in range(1, length):
                x = 1.0 - 2.0 * x * x
                out[i, q] = x
        return out

    @njit(cache=True)
    def _correlate_numba(y, phi, zeta, chip_duration):
        n = y.shape[0]
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            acc = 0.0
            for b in range(zeta):
                base = phi * (b + 1)
                for z in range(phi):
                    r = y[i, z]
                    d = y[i, base + z]
                    acc += (d * np.conj(r)).real
            out[i] = chip_duration * acc
        return out

    @njit(cache=True)
    def _lambda_numba(h, g, phases):
        nb, n_el, n_l = h.shape
        n_k = g.shape[2]
        lam1 = np.zeros(nb, dtype=np.float64)
        lam2 = np.zeros(nb, dtype=np.float64)
        rot = np.exp(1j * phases)
        for b in range(nb):
            for k in range(n_k):
                s2 = 0j
                for n in range(n_el):
                    s2 += rot[n] * g[b, n, k]
                lam2[b] += s2.real * s2.real + s2.imag * s2.imag
                for l in range(n_l):
                    s1 = 0j
                    for n in range(n_el):
                        s1 += rot[n] * h[b, n, l] * g[b, n, k]
                    lam1[b] += s1.real * s1.real + s1.imag * s1.imag
        return lam1, lam2


_use_numba = HAS_NUMBA and not _env_disables_numba()


def set_backend(name: str) -> None:
    """Select ``"numba"`` or ``"numpy"`` for subsequent kernel calls."""
    global _use_numba
    if name == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")


def backend() -> str:
    return "numba" if _use_numba else "numpy"


def chebyshev_orbits(seeds, length: int) -> np.ndarray:
    """Iterate ``x -> 1 - 2 x**2`` from each seed; row ``i`` starts with ``seeds[i]``."""
    seeds = np.ascontiguousarray(seeds, dtype=np.float64).reshape(-1)
    if _use_numba:
        return _orbits_numba(seeds, int(length))
    return _orbits_numpy(seeds, int(length))


def correlate_frames(y, phi: int, zeta: int, chip_duration: float = 1.0) -> np.ndarray:
    """Decision metrics for a batch of received frames, shape ``(B, beta + phi)``."""
    y = np.ascontiguousarray(y)
    if y.ndim != 2:
        raise ValueError("expected a 2-D batch of frames")
    if y.shape[1] < phi * (zeta + 1):
        raise ValueError(
            f"frame has {y.shape[1]} chips, need {phi * (zeta + 1)}"
        )
    if _use_numba:
        if not np.iscomplexobj(y):
            y = y.astype(np.float64, copy=False)
        return _correlate_numba(y, int(phi), int(zeta), float(chip_duration))
    return _correlate_numpy(y, int(phi), int(zeta), float(chip_duration))


def lambda_quadratic_forms(h, g, phases=None):
    """Batched channel quadratic forms ``(lambda1, lambda2)``.

    ``h`` is ``(B, N, L)`` (Tx->surface taps of the elements serving one user),
    ``g`` is ``(B, N, K)`` (surface->user taps), ``phases`` the applied shifts.
    """
    h = np.ascontiguousarray(h, dtype=np.complex128)
    g = np.ascontiguousarray(g, dtype=np.complex128)
    if h.ndim != 3 or g.ndim != 3 or h.shape[:2] != g.shape[:2]:
        raise ValueError(f"inconsistent shapes h{h.shape} g{g.shape}")
    if phases is None:
        phases = np.zeros(h.shape[1])
    phases = np.ascontiguousarray(phases, dtype=np.float64)
    if _use_numba:
        return _lambda_numba(h, g, phases)
    return _lambda_numpy(h, g, phases)
