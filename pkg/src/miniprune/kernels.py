"""Kernel backend selection.

The compiled Cython core is picked at import when available; otherwise the
numpy fallback. `use("python")` / `use("compiled")` switches explicitly,
which the backend benchmark relies on.
"""

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - build without the extension
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels

_active = _BACKENDS.get("compiled", _pykernels)


def available_backends():
    return sorted(_BACKENDS)


def active_backend():
    return _active.BACKEND_NAME


def use(name):
    """Select the kernel backend by name ("python" or "compiled")."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = _BACKENDS[name]
    return _active


def half_round(x):
    return _active.half_round(x)


def softmax_fwd(x):
    return _active.softmax_fwd(x)


def softmax_bwd(y, gy):
    return _active.softmax_bwd(y, gy)


def layernorm_fwd(x, gamma, beta, eps):
    return _active.layernorm_fwd(x, gamma, beta, eps)


def layernorm_bwd(x, mean, rstd, gamma, gy):
    return _active.layernorm_bwd(x, mean, rstd, gamma, gy)


def gelu_fwd(x):
    return _active.gelu_fwd(x)


def gelu_bwd(x, gy):
    return _active.gelu_bwd(x, gy)


def cross_entropy_fwd(logits, labels):
    return _active.cross_entropy_fwd(logits, labels)


def adam_update(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
    return _active.adam_update(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2)


def block_sum_prod(a, b, block_rows, block_cols):
    return _active.block_sum_prod(a, b, block_rows, block_cols)


def block_abs_mean(w, block_rows, block_cols):
    return _active.block_abs_mean(w, block_rows, block_cols)


def expand_blocks(m, block_rows, block_cols):
    return _active.expand_blocks(m, block_rows, block_cols)


def scatter_add_rows(out, ids, g):
    return _active.scatter_add_rows(out, ids, g)
