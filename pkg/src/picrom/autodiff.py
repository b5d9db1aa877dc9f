"""Reverse-mode automatic differentiation on numpy arrays.

Every primitive's vjp is itself expressed through primitives, so gradient
computations build new differentiable graphs and gradients of gradients
(needed when a loss contains the HNN's input gradient) come out exact.
Float64 throughout.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    """A node of the computation graph: a value plus vjp closures to its parents."""

    __slots__ = ("value", "parents", "vjps")

    def __init__(self, value, parents=(), vjps=()):
        self.value = np.asarray(value, dtype=np.float64)
        self.parents = parents
        self.vjps = vjps

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    # arithmetic sugar
    def __add__(self, other):
        return add(self, as_tensor(other))

    __radd__ = __add__

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_tensor(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, as_tensor(other))

    def __rtruediv__(self, other):
        return div(as_tensor(other), self)

    def __matmul__(self, other):
        return matmul(self, as_tensor(other))

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    @property
    def T(self):
        return transpose(self)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, leaf={not self.parents})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _sum_axes(g_shape, target_shape):
    """Axes of g to sum over so a broadcasted result collapses to target_shape."""
    lead = len(g_shape) - len(target_shape)
    axes = list(range(lead))
    for i, dim in enumerate(target_shape):
        if dim == 1 and g_shape[lead + i] != 1:
            axes.append(lead + i)
    return tuple(axes)


def _unbroadcast(g: Tensor, shape) -> Tensor:
    if g.shape == tuple(shape):
        return g
    axes = _sum_axes(g.shape, shape)
    if axes:
        g = tsum(g, axis=axes, keepdims=True)
    return reshape(g, tuple(shape))


def add(a: Tensor, b: Tensor) -> Tensor:
    return Tensor(
        a.value + b.value,
        (a, b),
        (lambda g: _unbroadcast(g, a.shape), lambda g: _unbroadcast(g, b.shape)),
    )


def neg(a: Tensor) -> Tensor:
    return Tensor(-a.value, (a,), (lambda g: neg(g),))


def mul(a: Tensor, b: Tensor) -> Tensor:
    return Tensor(
        a.value * b.value,
        (a, b),
        (lambda g: _unbroadcast(mul(g, b), a.shape), lambda g: _unbroadcast(mul(g, a), b.shape)),
    )


def div(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.value / b.value, (a, b), ())
    out.vjps = (
        lambda g: _unbroadcast(div(g, b), a.shape),
        lambda g: _unbroadcast(neg(mul(g, div(out, b))), b.shape),
    )
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("matmul primitive is 2D only")
    return Tensor(
        a.value @ b.value,
        (a, b),
        (lambda g: matmul(g, transpose(b)), lambda g: matmul(transpose(a), g)),
    )


def transpose(a: Tensor) -> Tensor:
    return Tensor(a.value.T, (a,), (lambda g: transpose(g),))


def reshape(a: Tensor, shape) -> Tensor:
    old = a.shape
    return Tensor(a.value.reshape(shape), (a,), (lambda g: reshape(g, old),))


def broadcast_to(a: Tensor, shape) -> Tensor:
    old = a.shape
    return Tensor(
        np.broadcast_to(a.value, shape), (a,), (lambda g: _unbroadcast(g, old),)
    )


def tsum(a: Tensor, axis=None, keepdims=False) -> Tensor:
    if axis is None:
        axes = tuple(range(a.ndim))
    elif isinstance(axis, int):
        axes = (axis,)
    else:
        axes = tuple(axis)
    kd_shape = tuple(1 if i in axes else d for i, d in enumerate(a.shape))
    in_shape = a.shape

    def vjp(g):
        return broadcast_to(reshape(g, kd_shape), in_shape)

    return Tensor(a.value.sum(axis=axes, keepdims=keepdims), (a,), (vjp,))


def tmean(a: Tensor, axis=None, keepdims=False) -> Tensor:
    if axis is None:
        count = a.value.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([a.shape[i] for i in axes]))
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


def exp(a: Tensor) -> Tensor:
    out = Tensor(np.exp(a.value), (a,), ())
    out.vjps = (lambda g: mul(g, out),)
    return out


def log(a: Tensor) -> Tensor:
    return Tensor(np.log(a.value), (a,), (lambda g: div(g, a),))


def sigmoid(a: Tensor) -> Tensor:
    out = Tensor(1.0 / (1.0 + np.exp(-a.value)), (a,), ())
    out.vjps = (lambda g: mul(g, mul(out, add(Tensor(1.0), neg(out)))),)
    return out


def softplus(a: Tensor) -> Tensor:
    return Tensor(np.logaddexp(0.0, a.value), (a,), (lambda g: mul(g, sigmoid(a)),))


def elu(a: Tensor) -> Tensor:
    pos = (a.value > 0).astype(np.float64)
    value = np.where(a.value > 0, a.value, np.expm1(np.minimum(a.value, 0.0)))
    pos_t = Tensor(pos)
    negmask_t = Tensor(1.0 - pos)

    def vjp(g):
        # derivative: 1 on the positive branch, exp(x) on the negative one;
        # the mask is constant and exp is only evaluated where x <= 0.
        slope = add(pos_t, mul(negmask_t, exp(mul(a, negmask_t))))
        return mul(g, slope)

    return Tensor(value, (a,), (vjp,))


def getitem(a: Tensor, idx) -> Tensor:
    in_shape = a.shape
    return Tensor(a.value[idx], (a,), (lambda g: scatter(g, in_shape, idx),))


def scatter(g: Tensor, shape, idx) -> Tensor:
    """Adjoint of getitem: embed g into zeros of the given shape at idx."""
    out = np.zeros(shape)
    out[idx] = g.value
    return Tensor(out, (g,), (lambda gg: getitem(gg, idx),))


def concatenate(tensors, axis=0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)
    value = np.concatenate([t.value for t in tensors], axis=axis)

    def make_vjp(i):
        sl = [slice(None)] * tensors[i].ndim
        sl[axis] = slice(int(offsets[i]), int(offsets[i + 1]))
        sl = tuple(sl)
        return lambda g: getitem(g, sl)

    return Tensor(value, tuple(tensors), tuple(make_vjp(i) for i in range(len(tensors))))


def einsum2(spec: str, a: Tensor, b: Tensor) -> Tensor:
    """Two-operand einsum whose adjoints are einsums of the rearranged spec.

    Every index of each input must appear in the output or the other input
    (no lone summed index), which holds for all contractions used here.
    """
    inputs, out_sub = spec.split("->")
    sa, sb = inputs.split(",")
    spec_a = f"{out_sub},{sb}->{sa}"
    spec_b = f"{out_sub},{sa}->{sb}"
    return Tensor(
        np.einsum(spec, a.value, b.value),
        (a, b),
        (lambda g: einsum2(spec_a, g, b), lambda g: einsum2(spec_b, g, a)),
    )


def square(a: Tensor) -> Tensor:
    return mul(a, a)


def _topo_order(root: Tensor):
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(output: Tensor, leaves, seed: Tensor | None = None):
    """Gradients of output (summed over its entries) with respect to leaves.

    Returns one Tensor per leaf (zeros for leaves the output does not
    depend on).  The returned gradients are graph nodes themselves, so
    they can be differentiated again.
    """
    if seed is None:
        seed = Tensor(np.ones(output.shape))
    grads: dict[int, Tensor] = {id(output): seed}
    for node in reversed(_topo_order(output)):
        g = grads.get(id(node))
        if g is None:
            continue
        for parent, vjp in zip(node.parents, node.vjps):
            pg = vjp(g)
            prev = grads.get(id(parent))
            grads[id(parent)] = pg if prev is None else add(prev, pg)
    return [grads.get(id(leaf), Tensor(np.zeros(leaf.shape))) for leaf in leaves]


def grad_values(output: Tensor, leaves):
    """Numpy gradient arrays of a scalar-ish output with respect to leaves."""
    return [g.value for g in backward(output, leaves)]
