"""Hot contraction kernels with a compiled core and a numpy fallback.

Every heavy operation in the engine reduces to two primitives on complex
tensors:

* ``mode_apply(mat, ten, axis)``: contract ``mat[p, q]`` with axis ``axis``
  of ``ten`` (the ``q`` index), keeping the axis in place.
* ``gram(bra, ket, axis)``: ``g[a', a] = sum_rest conj(bra)[.., a', ..] *
  ket[.., a, ..]`` over all axes except ``axis``.

The compiled extension (``ttnheom._kernels``) wires these straight into BLAS
zgemm without intermediate copies; set ``TTNHEOM_PURE_PYTHON=1`` to force the
numpy implementation.
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly when the extension is built
    from . import _kernels as _ext
except ImportError:  # pragma: no cover
    _ext = None

USING_EXT = _ext is not None and not os.environ.get("TTNHEOM_PURE_PYTHON")


def mode_apply_py(mat: np.ndarray, ten: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(mat, ten, axes=(1, axis))
    return np.moveaxis(out, 0, axis)


def gram_py(bra: np.ndarray, ket: np.ndarray, axis: int) -> np.ndarray:
    b = np.moveaxis(bra, axis, 0).reshape(bra.shape[axis], -1)
    k = np.moveaxis(ket, axis, 0).reshape(ket.shape[axis], -1)
    return b.conj() @ k.T


def _mode_apply_ext(mat, ten, axis):
    mat = np.ascontiguousarray(mat, dtype=np.complex128)
    ten = np.ascontiguousarray(ten, dtype=np.complex128)
    return _ext.mode_apply(mat, ten, axis)


def _gram_ext(bra, ket, axis):
    bra = np.ascontiguousarray(bra, dtype=np.complex128)
    ket = np.ascontiguousarray(ket, dtype=np.complex128)
    return _ext.gram(bra, ket, axis)


if USING_EXT:
    mode_apply = _mode_apply_ext
    gram = _gram_ext
else:
    mode_apply = mode_apply_py
    gram = gram_py


def matricize(ten: np.ndarray, axis: int) -> np.ndarray:
    """Reshape to (rest, axis) with the remaining axes in original order."""
    return np.moveaxis(ten, axis, -1).reshape(-1, ten.shape[axis])


def unmatricize(mat: np.ndarray, shape: tuple[int, ...], axis: int) -> np.ndarray:
    """Inverse of ``matricize`` for a possibly resized last column index."""
    rest = [s for i, s in enumerate(shape) if i != axis]
    out = mat.reshape(*rest, mat.shape[-1])
    return np.moveaxis(out, -1, axis)
