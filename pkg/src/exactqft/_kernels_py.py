"""Pure numpy implementations of the state-vector kernels.

Same signatures and semantics as the compiled ``_kernels`` module; used when
the extension is not built or ``EXACTQFT_PURE_PYTHON`` is set.
"""

from __future__ import annotations

import numpy as np


def _nbits(size: int) -> int:
    return size.bit_length() - 1


def _bit_view(amps: np.ndarray) -> np.ndarray:
    # axis a of the view corresponds to bit position nbits - 1 - a
    nq = _nbits(amps.shape[0])
    return amps.reshape((2,) * nq) if nq else amps


def apply_1q(amps, target, u, controls_pos, controls_val):
    nq = _nbits(amps.shape[0])
    view = _bit_view(amps)
    index = [slice(None)] * nq
    for p, v in zip(controls_pos, controls_val):
        index[nq - 1 - p] = int(v)
    index[nq - 1 - target] = 0
    lo = view[tuple(index)]
    index[nq - 1 - target] = 1
    hi = view[tuple(index)]
    a = lo.copy()
    b = hi.copy()
    lo[...] = u[0][0] * a + u[0][1] * b
    hi[...] = u[1][0] * a + u[1][1] * b


def apply_phase(amps, positions, values, phase):
    nq = _nbits(amps.shape[0])
    if not positions:
        amps *= phase
        return
    view = _bit_view(amps)
    index = [slice(None)] * nq
    for p, v in zip(positions, values):
        index[nq - 1 - p] = int(v)
    view[tuple(index)] *= phase


def permute(amps, out, shifts, widths, table):
    nq = _nbits(amps.shape[0])
    # split the index into contiguous segments, most significant first
    ranges = sorted(zip(shifts, widths), key=lambda sw: -sw[0])
    segments = []
    top = nq
    for s, w in ranges:
        if top > s + w:
            segments.append((s + w, top - s - w, None))
        segments.append((s, w, (s, w)))
        top = s
    if top > 0:
        segments.append((0, top, None))
    dims = [1 << w for _, w, _ in segments]
    order = [next(a for a, seg in enumerate(segments) if seg[2] == (s, w))
             for s, w in zip(shifts, widths)]
    rest = [a for a in range(len(segments)) if a not in order]
    src = np.moveaxis(amps.reshape(dims), order + rest,
                      list(range(len(segments))))
    sub = int(np.prod([dims[a] for a in order]))
    flat = np.ascontiguousarray(src).reshape(sub, -1)
    moved = np.empty_like(flat)
    moved[np.asarray(table)] = flat
    moved_dims = [dims[a] for a in order + rest]
    back = np.moveaxis(moved.reshape(moved_dims),
                       list(range(len(segments))), order + rest)
    out[...] = back.reshape(-1)


def apply_diagonal(amps, positions, table):
    idx = np.arange(amps.shape[0], dtype=np.int64)
    sub = np.zeros_like(idx)
    for a, p in enumerate(positions):
        sub |= ((idx >> p) & 1) << a
    amps *= np.asarray(table)[sub]
