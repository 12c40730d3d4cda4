"""Dense tensors with reverse-mode automatic differentiation.

Values are stored as numpy arrays (float32 by default, float64 in check
mode, see :func:`precision`). Every primitive runs eagerly and, when a
:class:`Trace` is active, appends one record to the tape. Records hold the
forward function plus its inputs, so a trace can both be replayed forward
bit-identically and walked backward to accumulate gradients.

Shape discipline is strict: binary elementwise operations require equal
shapes, with the single exception that one operand may be a scalar (0-d)
tensor. Anything else raises ``DimensionError`` rather than broadcasting.
"""

from __future__ import annotations

import threading
from typing import Sequence

import numpy as np

from .errors import ContractError, DimensionError

_local = threading.local()


def _trace_stack() -> list:
    stack = getattr(_local, "traces", None)
    if stack is None:
        stack = []
        _local.traces = stack
    return stack


def _dtype_stack() -> list:
    stack = getattr(_local, "dtypes", None)
    if stack is None:
        stack = [np.float32]
        _local.dtypes = stack
    return stack


def default_dtype():
    """Dtype used for newly created tensors (float32 unless overridden)."""
    return _dtype_stack()[-1]


class precision:
    """Context manager switching the default dtype, e.g. ``precision(np.float64)``.

    Training and inference run in float32; the float64 mode exists for
    finite-difference gradient checking, where the extra headroom is needed.
    """

    def __init__(self, dtype):
        self.dtype = np.dtype(dtype).type
        if self.dtype not in (np.float32, np.float64):
            raise ContractError(f"unsupported dtype {dtype}")

    def __enter__(self):
        _dtype_stack().append(self.dtype)
        return self

    def __exit__(self, *exc):
        _dtype_stack().pop()
        return False


class Tensor:
    """A dense n-dimensional float array, optionally tracking gradients.

    ``grad`` is populated by :func:`backward`; it is always either ``None``
    or an array with the same shape and dtype as ``data``.
    """

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data, dtype=default_dtype())
        if arr.size == 0:
            raise DimensionError(f"tensors must have positive dimensions, got shape {arr.shape}")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() requires a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"

    # Operator sugar over the module-level primitives.
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


class OpRecord:
    """One executed primitive: forward function, inputs, output, extra args."""

    __slots__ = ("op", "fn", "bwd", "inputs", "out", "args")

    def __init__(self, op, fn, bwd, inputs, out, args=()):
        self.op = op
        self.fn = fn
        self.bwd = bwd
        self.inputs = inputs
        self.out = out
        self.args = args


class Trace:
    """Ordered tape of executed primitives for one forward pass.

    Records appear in execution order, which is already a topological
    order of the dataflow. Use as a context manager::

        with Trace() as trace:
            loss = model(...)
        backward(loss, trace)
    """

    def __init__(self):
        self.ops: list[OpRecord] = []

    def __enter__(self):
        _trace_stack().append(self)
        return self

    def __exit__(self, *exc):
        popped = _trace_stack().pop()
        assert popped is self
        return False

    def __len__(self):
        return len(self.ops)

    def replay(self) -> bool:
        """Re-execute every record; True iff all outputs reproduce bit-identically."""
        for rec in self.ops:
            fresh = rec.fn(*[t.data for t in rec.inputs], *rec.args)
            if not np.array_equal(fresh, rec.out.data):
                return False
        return True

    def tensors(self) -> list[Tensor]:
        """Unique tensors appearing in the tape, in first-seen order."""
        seen: dict[int, Tensor] = {}
        for rec in self.ops:
            for t in rec.inputs:
                seen.setdefault(id(t), t)
            seen.setdefault(id(rec.out), rec.out)
        return list(seen.values())

    def backward(self, loss: Tensor) -> None:
        backward(loss, self)


def active_trace() -> Trace | None:
    stack = _trace_stack()
    return stack[-1] if stack else None


def _record(op, fn, bwd, inputs, out_data, args=()):
    out = Tensor.__new__(Tensor)
    out.data = out_data
    out.requires_grad = any(t.requires_grad for t in inputs)
    out.grad = None
    out.name = None
    trace = active_trace()
    if trace is not None:
        trace.ops.append(OpRecord(op, fn, bwd, inputs, out, args))
    return out


def _add_grad(t: Tensor, g: np.ndarray) -> None:
    # Always copy on first write: g may alias another tensor's grad buffer.
    if t.grad is None:
        t.grad = np.array(g, dtype=t.data.dtype)
    else:
        t.grad += g


def backward(loss: Tensor, trace: Trace) -> None:
    """Populate ``grad`` on every requires_grad tensor reachable in the trace.

    ``loss`` must be a scalar produced inside ``trace``. Existing grads of
    tensors appearing in the trace are overwritten, not accumulated across
    calls. Tensors in the trace that do not contribute to the loss receive
    an exact zero gradient.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward requires a scalar loss, got shape {loss.shape}")
    produced = {id(rec.out) for rec in trace.ops}
    if id(loss) not in produced:
        raise ContractError("loss tensor was not produced inside the given trace")

    tensors = trace.tensors()
    for t in tensors:
        t.grad = None
    loss.grad = np.ones_like(loss.data)

    for rec in reversed(trace.ops):
        g = rec.out.grad
        if g is None:
            continue
        if rec.out.requires_grad:
            rec.bwd(rec, g)
        rec.out.grad = None  # intermediate grads are not needed once propagated

    for t in tensors:
        if t.requires_grad and t.grad is None:
            t.grad = np.zeros_like(t.data)


# ---------------------------------------------------------------------------
# shape checks


def _binary_mode(op, a: Tensor, b: Tensor) -> str:
    """'same' for equal shapes, 'scalar_r'/'scalar_l' when one side is 0-d."""
    if a.data.shape == b.data.shape:
        return "same"
    if b.data.ndim == 0:
        return "scalar_r"
    if a.data.ndim == 0:
        return "scalar_l"
    raise DimensionError(
        f"{op}: shapes {a.data.shape} and {b.data.shape} differ (only scalar operands broadcast)"
    )


# ---------------------------------------------------------------------------
# primitives


def _f_add(a, b):
    return a + b


def _b_add(rec, g):
    a, b = rec.inputs
    if a.requires_grad:
        _add_grad(a, g if a.data.shape == g.shape else np.sum(g, dtype=g.dtype).reshape(()))
    if b.requires_grad:
        _add_grad(b, g if b.data.shape == g.shape else np.sum(g, dtype=g.dtype).reshape(()))


def add(a: Tensor, b: Tensor) -> Tensor:
    _binary_mode("add", a, b)
    return _record("add", _f_add, _b_add, (a, b), _f_add(a.data, b.data))


def _f_sub(a, b):
    return a - b


def _b_sub(rec, g):
    a, b = rec.inputs
    if a.requires_grad:
        _add_grad(a, g if a.data.shape == g.shape else np.sum(g, dtype=g.dtype).reshape(()))
    if b.requires_grad:
        gb = -g
        _add_grad(b, gb if b.data.shape == g.shape else np.sum(gb, dtype=g.dtype).reshape(()))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _binary_mode("sub", a, b)
    return _record("sub", _f_sub, _b_sub, (a, b), _f_sub(a.data, b.data))


def _f_mul(a, b):
    return a * b


def _b_mul(rec, g):
    a, b = rec.inputs
    if a.requires_grad:
        ga = g * b.data
        _add_grad(a, ga if a.data.shape == ga.shape else np.sum(ga, dtype=g.dtype).reshape(()))
    if b.requires_grad:
        gb = g * a.data
        _add_grad(b, gb if b.data.shape == gb.shape else np.sum(gb, dtype=g.dtype).reshape(()))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _binary_mode("mul", a, b)
    return _record("mul", _f_mul, _b_mul, (a, b), _f_mul(a.data, b.data))


def _f_div(a, b):
    return a / b


def _b_div(rec, g):
    a, b = rec.inputs
    if a.requires_grad:
        ga = g / b.data
        _add_grad(a, ga if a.data.shape == ga.shape else np.sum(ga, dtype=g.dtype).reshape(()))
    if b.requires_grad:
        gb = -g * a.data / (b.data * b.data)
        _add_grad(b, gb if b.data.shape == gb.shape else np.sum(gb, dtype=g.dtype).reshape(()))


def div(a: Tensor, b: Tensor) -> Tensor:
    _binary_mode("div", a, b)
    return _record("div", _f_div, _b_div, (a, b), _f_div(a.data, b.data))


def _f_scale(a, alpha):
    return a * a.dtype.type(alpha)


def _b_scale(rec, g):
    (a,) = rec.inputs
    _add_grad(a, g * g.dtype.type(rec.args[0]))


def scale(x: Tensor, alpha: float) -> Tensor:
    """Multiply by a python scalar constant."""
    return _record("scale", _f_scale, _b_scale, (x,), _f_scale(x.data, alpha), (float(alpha),))


def _f_add_const(a, c):
    return a + a.dtype.type(c)


def _b_add_const(rec, g):
    _add_grad(rec.inputs[0], g)


def add_const(x: Tensor, c: float) -> Tensor:
    """Add a python scalar constant."""
    return _record("add_const", _f_add_const, _b_add_const, (x,), _f_add_const(x.data, c), (float(c),))


def _f_tanh(a):
    return np.tanh(a)


def _b_tanh(rec, g):
    y = rec.out.data
    _add_grad(rec.inputs[0], g * (1.0 - y * y))


def tanh(x: Tensor) -> Tensor:
    return _record("tanh", _f_tanh, _b_tanh, (x,), _f_tanh(x.data))


def _f_sigmoid(a):
    # Piecewise form keeps exp() arguments nonpositive, so no overflow.
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def _b_sigmoid(rec, g):
    y = rec.out.data
    _add_grad(rec.inputs[0], g * y * (1.0 - y))


def sigmoid(x: Tensor) -> Tensor:
    return _record("sigmoid", _f_sigmoid, _b_sigmoid, (x,), _f_sigmoid(x.data))


def _f_relu(a):
    return np.maximum(a, 0)


def _b_relu(rec, g):
    a = rec.inputs[0]
    _add_grad(a, g * (a.data > 0))


def relu(x: Tensor) -> Tensor:
    return _record("relu", _f_relu, _b_relu, (x,), _f_relu(x.data))


def _f_sqrt(a):
    return np.sqrt(a)


def _b_sqrt(rec, g):
    y = rec.out.data
    _add_grad(rec.inputs[0], g / (2.0 * y))


def sqrt(x: Tensor) -> Tensor:
    return _record("sqrt", _f_sqrt, _b_sqrt, (x,), _f_sqrt(x.data))


def _f_softmax(a):
    shifted = a - np.max(a)
    e = np.exp(shifted)
    return e / np.sum(e)


def _b_softmax(rec, g):
    y = rec.out.data
    _add_grad(rec.inputs[0], y * (g - np.dot(g, y)))


def softmax(x: Tensor) -> Tensor:
    """Stable softmax over a 1-d tensor; outputs are positive and sum to 1."""
    if x.data.ndim != 1:
        raise DimensionError(f"softmax expects a 1-d tensor, got shape {x.shape}")
    return _record("softmax", _f_softmax, _b_softmax, (x,), _f_softmax(x.data))


def _f_matmul(a, b):
    return np.matmul(a, b)


def _b_matmul(rec, g):
    a, b = rec.inputs
    ad, bd = a.data, b.data
    if ad.ndim == 2 and bd.ndim == 2:
        if a.requires_grad:
            _add_grad(a, np.matmul(g, bd.T))
        if b.requires_grad:
            _add_grad(b, np.matmul(ad.T, g))
    elif ad.ndim == 2 and bd.ndim == 1:
        if a.requires_grad:
            _add_grad(a, np.outer(g, bd))
        if b.requires_grad:
            _add_grad(b, np.matmul(ad.T, g))
    elif ad.ndim == 1 and bd.ndim == 2:
        if a.requires_grad:
            _add_grad(a, np.matmul(bd, g))
        if b.requires_grad:
            _add_grad(b, np.outer(ad, g))
    else:  # 1-d . 1-d
        if a.requires_grad:
            _add_grad(a, g * bd)
        if b.requires_grad:
            _add_grad(b, g * ad)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product for 1-d/2-d operands with numpy semantics."""
    ad, bd = a.data, b.data
    if ad.ndim not in (1, 2) or bd.ndim not in (1, 2):
        raise DimensionError(f"matmul supports 1-d/2-d operands, got {ad.shape} @ {bd.shape}")
    if ad.shape[-1] != (bd.shape[0] if bd.ndim >= 1 else None):
        raise DimensionError(f"matmul: inner dimensions differ for shapes {ad.shape} and {bd.shape}")
    return _record("matmul", _f_matmul, _b_matmul, (a, b), _f_matmul(ad, bd))


def dot(a: Tensor, b: Tensor) -> Tensor:
    """Inner product of two 1-d tensors (scalar output)."""
    if a.data.ndim != 1 or b.data.ndim != 1:
        raise DimensionError(f"dot expects 1-d tensors, got {a.shape} and {b.shape}")
    return matmul(a, b)


def _f_sum_all(a):
    # accumulate in float64 so the reduction is correctly rounded, then
    # return in the working dtype
    return np.sum(a, dtype=np.float64).astype(a.dtype).reshape(())


def _b_sum_all(rec, g):
    a = rec.inputs[0]
    _add_grad(a, np.full_like(a.data, g))


def sum_all(x: Tensor) -> Tensor:
    """Sum of all elements, as a 0-d tensor."""
    return _record("sum_all", _f_sum_all, _b_sum_all, (x,), _f_sum_all(x.data))


def _f_stack(*arrays):
    return np.stack(arrays)


def _b_stack(rec, g):
    for i, t in enumerate(rec.inputs):
        if t.requires_grad:
            _add_grad(t, g[i])


def stack(tensors: Sequence[Tensor]) -> Tensor:
    """Stack same-shape tensors along a new leading axis."""
    if not tensors:
        raise DimensionError("stack requires at least one tensor")
    shape = tensors[0].data.shape
    for t in tensors[1:]:
        if t.data.shape != shape:
            raise DimensionError(f"stack: shapes {shape} and {t.data.shape} differ")
    return _record("stack", _f_stack, _b_stack, tuple(tensors), _f_stack(*[t.data for t in tensors]))


def _f_concat(*arrays):
    return np.concatenate(arrays)


def _b_concat(rec, g):
    offset = 0
    for t in rec.inputs:
        n = t.data.shape[0]
        if t.requires_grad:
            _add_grad(t, g[offset:offset + n])
        offset += n


def concat(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate 1-d tensors."""
    for t in tensors:
        if t.data.ndim != 1:
            raise DimensionError(f"concat expects 1-d tensors, got shape {t.shape}")
    return _record("concat", _f_concat, _b_concat, tuple(tensors), _f_concat(*[t.data for t in tensors]))


def _f_row(a, i):
    return a[i].copy()


def _b_row(rec, g):
    a = rec.inputs[0]
    i = rec.args[0]
    if a.grad is None:
        a.grad = np.zeros_like(a.data)
    a.grad[i] += g


def row(x: Tensor, i: int) -> Tensor:
    """Select row ``i`` of a 2-d tensor as a 1-d tensor."""
    if x.data.ndim != 2:
        raise DimensionError(f"row expects a 2-d tensor, got shape {x.shape}")
    if not 0 <= i < x.data.shape[0]:
        raise DimensionError(f"row index {i} out of range for shape {x.shape}")
    return _record("row", _f_row, _b_row, (x,), _f_row(x.data, i), (i,))


def _f_segment(a, start, stop):
    return a[start:stop].copy()


def _b_segment(rec, g):
    a = rec.inputs[0]
    start, stop = rec.args
    if a.grad is None:
        a.grad = np.zeros_like(a.data)
    a.grad[start:stop] += g


def segment(x: Tensor, start: int, stop: int) -> Tensor:
    """Contiguous slice of a 1-d tensor."""
    if x.data.ndim != 1:
        raise DimensionError(f"segment expects a 1-d tensor, got shape {x.shape}")
    if not (0 <= start < stop <= x.data.shape[0]):
        raise DimensionError(f"segment [{start}:{stop}] out of range for shape {x.shape}")
    return _record("segment", _f_segment, _b_segment, (x,), _f_segment(x.data, start, stop), (start, stop))


def _f_transpose(a):
    return a.T.copy()


def _b_transpose(rec, g):
    _add_grad(rec.inputs[0], g.T)


def transpose(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise DimensionError(f"transpose expects a 2-d tensor, got shape {x.shape}")
    return _record("transpose", _f_transpose, _b_transpose, (x,), _f_transpose(x.data))


def _f_reshape(a, shape):
    return a.reshape(shape).copy()


def _b_reshape(rec, g):
    a = rec.inputs[0]
    _add_grad(a, g.reshape(a.data.shape))


def reshape(x: Tensor, shape: tuple) -> Tensor:
    if int(np.prod(shape)) != x.data.size:
        raise DimensionError(f"cannot reshape {x.shape} to {shape}")
    return _record("reshape", _f_reshape, _b_reshape, (x,), _f_reshape(x.data, tuple(shape)), (tuple(shape),))


def _f_gather_rows(table, ids):
    return table[ids].copy()


def _b_gather_rows(rec, g):
    table = rec.inputs[0]
    ids = rec.args[0]
    if table.grad is None:
        table.grad = np.zeros_like(table.data)
    np.add.at(table.grad, ids, g)


def gather_rows(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Select rows of a 2-d tensor by index (embedding lookup)."""
    if table.data.ndim != 2:
        raise DimensionError(f"gather_rows expects a 2-d table, got shape {table.shape}")
    idx = np.asarray(ids, dtype=np.intp)
    if idx.ndim != 1 or idx.size == 0:
        raise DimensionError("gather_rows expects a nonempty 1-d index sequence")
    if idx.min() < 0 or idx.max() >= table.data.shape[0]:
        raise DimensionError(f"gather_rows: index out of range for table with {table.data.shape[0]} rows")
    return _record("gather_rows", _f_gather_rows, _b_gather_rows, (table,), _f_gather_rows(table.data, idx), (idx,))


_ELEMENTWISE_BINARY = {"add": add, "sub": sub, "mul": mul}
_ELEMENTWISE_UNARY = {"tanh": tanh, "sigmoid": sigmoid, "relu": relu}


def elementwise(kind: str, *operands) -> Tensor:
    """Dispatch an elementwise primitive by name.

    ``kind`` is one of add/sub/mul (two tensors), tanh/sigmoid/relu (one
    tensor), or scale (tensor plus a python float).
    """
    if kind in _ELEMENTWISE_BINARY:
        if len(operands) != 2:
            raise ContractError(f"elementwise {kind!r} takes two operands")
        return _ELEMENTWISE_BINARY[kind](*operands)
    if kind in _ELEMENTWISE_UNARY:
        if len(operands) != 1:
            raise ContractError(f"elementwise {kind!r} takes one operand")
        return _ELEMENTWISE_UNARY[kind](*operands)
    if kind == "scale":
        if len(operands) != 2:
            raise ContractError("elementwise 'scale' takes a tensor and a scalar")
        return scale(operands[0], operands[1])
    raise ContractError(f"unknown elementwise kind {kind!r}")


# ---------------------------------------------------------------------------
# composed vector helpers


def squared_norm(x: Tensor) -> Tensor:
    return sum_all(mul(x, x))


def norm(x: Tensor, eps: float = 1e-12) -> Tensor:
    """Euclidean norm with an epsilon inside the root so the gradient at 0 is finite."""
    return sqrt(add_const(squared_norm(x), eps))


def zeros(shape, requires_grad: bool = False, name: str | None = None) -> Tensor:
    return Tensor(np.zeros(shape, dtype=default_dtype()), requires_grad=requires_grad, name=name)


def constant(values, name: str | None = None) -> Tensor:
    return Tensor(values, requires_grad=False, name=name)


def parameter(values, name: str | None = None) -> Tensor:
    return Tensor(values, requires_grad=True, name=name)
