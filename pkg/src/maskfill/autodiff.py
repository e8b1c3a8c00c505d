"""Minimal reverse-mode automatic differentiation over numpy arrays.

Only the operations the inpainting network needs are provided: 2-D
convolution, max pooling, nearest-neighbor upsampling, channel
concatenation, relu/sigmoid, mean squared error, and the Adam optimizer.
Everything runs on the CPU in float32 (training) or float64 (gradient
checking). No broadcasting beyond what the ops below define.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

_FLOAT_DTYPES = (np.float32, np.float64)


class Tensor:
    """A numpy array plus the bookkeeping needed to replay a backward pass.

    ``grad`` is allocated lazily on first accumulation and always matches
    ``data`` in shape and dtype. Backward contributions are accumulated,
    never overwritten, so reusing a tensor twice in a graph sums both
    paths' gradients.
    """

    def __init__(self, data, dtype=None, requires_grad: bool = False, name: str | None = None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self):
        self.grad = None

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{tag})"

    def backward(self):
        """Run reverse-mode accumulation from this scalar tensor."""
        if self.data.size != 1:
            raise ValueError(f"backward() requires a scalar tensor, got shape {self.data.shape}")
        order = _toposort(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def _accumulate(t: Tensor, g: np.ndarray):
    g = np.asarray(g, dtype=t.data.dtype)
    if g.shape != t.data.shape:
        raise ValueError(f"gradient shape {g.shape} != value shape {t.data.shape}")
    if t.grad is None:
        t.grad = g.copy()
    else:
        t.grad += g


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# ---------------------------------------------------------------------------
# convolution

def _im2col(x: np.ndarray, k: int, stride: int, padding: int):
    """Return (columns, out_h, out_w) with columns shaped (N, out_h*out_w, C*k*k)."""
    n, c, h, w = x.shape
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    out_h = (h + 2 * padding - k) // stride + 1
    out_w = (w + 2 * padding - k) // stride + 1
    win = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    # win: (N, C, out_h, out_w, k, k) -> (N, out_h*out_w, C*k*k)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n, out_h * out_w, c * k * k)
    return np.ascontiguousarray(cols), out_h, out_w


def _col2im(cols: np.ndarray, x_shape, k: int, stride: int, padding: int) -> np.ndarray:
    """Scatter-add columns back to the (padded) input; inverse of _im2col."""
    n, c, h, w = x_shape
    hp, wp = h + 2 * padding, w + 2 * padding
    out_h = (hp - k) // stride + 1
    out_w = (wp - k) // stride + 1
    grad = np.zeros((n, c, hp, wp), dtype=cols.dtype)
    cols = cols.reshape(n, out_h, out_w, c, k, k).transpose(0, 3, 1, 2, 4, 5)
    for i in range(k):
        for j in range(k):
            grad[:, :, i:i + out_h * stride:stride, j:j + out_w * stride:stride] += cols[:, :, :, :, i, j]
    if padding:
        grad = grad[:, :, padding:-padding, padding:-padding]
    return grad


def conv2d(x: Tensor, kernel: Tensor, bias: Tensor | None = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """2-D convolution (cross-correlation) with zero padding.

    x: (N, C_in, H, W); kernel: (C_out, C_in, k, k); bias: (C_out,).
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if x.data.ndim != 4 or kernel.data.ndim != 4:
        raise ValueError("conv2d expects 4-D input and kernel")
    n, c_in, h, w = x.data.shape
    c_out, kc_in, kh, kw = kernel.data.shape
    if kh != kw:
        raise ValueError("only square kernels are supported")
    k = kh
    if kc_in != c_in:
        raise ValueError(f"kernel expects {kc_in} input channels, input has {c_in}")
    if h + 2 * padding < k or w + 2 * padding < k:
        raise ValueError(f"kernel size {k} exceeds padded input {h + 2 * padding}x{w + 2 * padding}")
    if bias is not None and bias.data.shape != (c_out,):
        raise ValueError(f"bias shape {bias.data.shape} != ({c_out},)")

    cols, out_h, out_w = _im2col(x.data, k, stride, padding)
    wmat = kernel.data.reshape(c_out, c_in * k * k)
    out_flat = cols @ wmat.T                        # (N, L, C_out)
    if bias is not None:
        out_flat = out_flat + bias.data
    out_data = out_flat.transpose(0, 2, 1).reshape(n, c_out, out_h, out_w)

    parents = (x, kernel) if bias is None else (x, kernel, bias)
    out = Tensor(out_data)
    out._parents = parents

    def backward(g: np.ndarray):
        g_flat = g.reshape(n, c_out, out_h * out_w).transpose(0, 2, 1)  # (N, L, C_out)
        dw = np.tensordot(g_flat, cols, axes=([0, 1], [0, 1]))          # (C_out, C*k*k)
        _accumulate(kernel, dw.reshape(kernel.data.shape))
        if bias is not None:
            _accumulate(bias, g_flat.sum(axis=(0, 1)))
        dcols = g_flat @ wmat                                           # (N, L, C*k*k)
        _accumulate(x, _col2im(dcols, x.data.shape, k, stride, padding))

    out._backward = backward
    return out


# ---------------------------------------------------------------------------
# pooling / resampling / concat

def maxpool2d(x: Tensor, window: int = 2, stride: int = 2) -> Tensor:
    """Non-overlapping max pooling; ties route the gradient to the first
    (row-major) maximum inside the window."""
    if window != stride:
        raise ValueError("only window == stride pooling is supported")
    n, c, h, w = x.data.shape
    if h % stride or w % stride:
        raise ValueError(f"spatial size {h}x{w} not divisible by stride {stride}")
    oh, ow = h // stride, w // stride
    view = x.data.reshape(n, c, oh, stride, ow, stride).transpose(0, 1, 2, 4, 3, 5)
    flat = view.reshape(n, c, oh, ow, stride * stride)
    arg = flat.argmax(axis=-1)                      # first occurrence on ties
    out_data = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]

    out = Tensor(out_data)
    out._parents = (x,)

    def backward(g: np.ndarray):
        dflat = np.zeros_like(flat)
        np.put_along_axis(dflat, arg[..., None], g[..., None], axis=-1)
        dx = dflat.reshape(n, c, oh, ow, stride, stride).transpose(0, 1, 2, 4, 3, 5).reshape(x.data.shape)
        _accumulate(x, dx)

    out._backward = backward
    return out


def upsample_nearest(x: Tensor, factor: int = 2) -> Tensor:
    """Replicate every pixel into a factor x factor block."""
    if factor < 1:
        raise ValueError(f"upsample factor must be >= 1, got {factor}")
    n, c, h, w = x.data.shape
    out_data = np.repeat(np.repeat(x.data, factor, axis=2), factor, axis=3)

    out = Tensor(out_data)
    out._parents = (x,)

    def backward(g: np.ndarray):
        dx = g.reshape(n, c, h, factor, w, factor).sum(axis=(3, 5))
        _accumulate(x, dx)

    out._backward = backward
    return out


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate along the channel axis; batch and spatial dims must agree."""
    na, ca, ha, wa = a.data.shape
    nb, cb, hb, wb = b.data.shape
    if (na, ha, wa) != (nb, hb, wb):
        raise ValueError(f"batch/spatial mismatch: {a.data.shape} vs {b.data.shape}")
    out = Tensor(np.concatenate([a.data, b.data], axis=1))
    out._parents = (a, b)

    def backward(g: np.ndarray):
        _accumulate(a, g[:, :ca])
        _accumulate(b, g[:, ca:])

    out._backward = backward
    return out


# ---------------------------------------------------------------------------
# activations and loss

def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out = Tensor(np.where(mask, x.data, 0))
    out._parents = (x,)
    out._backward = lambda g: _accumulate(x, g * mask)
    return out


def sigmoid(x: Tensor) -> Tensor:
    """Numerically stable logistic; output clipped strictly inside (0, 1)."""
    xd = x.data
    s = np.where(xd >= 0, 1.0 / (1.0 + np.exp(-np.abs(xd))),
                 np.exp(-np.abs(xd)) / (1.0 + np.exp(-np.abs(xd))))
    one = np.ones((), dtype=xd.dtype)
    s = np.clip(s, np.nextafter(0, 1, dtype=xd.dtype), np.nextafter(one, 0))
    s = s.astype(xd.dtype, copy=False)
    out = Tensor(s)
    out._parents = (x,)
    out._backward = lambda g: _accumulate(x, g * s * (1.0 - s))
    return out


def mse(pred: Tensor, target, weight: np.ndarray | None = None) -> Tensor:
    """Mean squared error over all elements.

    ``weight`` (optional, same shape) restricts the mean to weighted
    elements: sum(w * (p - t)^2) / sum(w). Used for masked-only loss.
    """
    tgt = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=pred.data.dtype)
    if tgt.shape != pred.data.shape:
        raise ValueError(f"mse shape mismatch: {pred.data.shape} vs {tgt.shape}")
    diff = pred.data - tgt
    if weight is None:
        denom = diff.size
        val = np.mean(diff * diff, dtype=pred.data.dtype)
        scale = None
    else:
        if weight.shape != pred.data.shape:
            raise ValueError(f"weight shape {weight.shape} != {pred.data.shape}")
        denom = float(weight.sum())
        if denom <= 0:
            raise ValueError("mse weight sums to zero")
        val = np.asarray((weight * diff * diff).sum() / denom, dtype=pred.data.dtype)
        scale = weight
    out = Tensor(np.asarray(val, dtype=pred.data.dtype))
    out._parents = (pred,)

    def backward(g: np.ndarray):
        grad = (2.0 / denom) * diff * float(g)
        if scale is not None:
            grad = grad * scale
        _accumulate(pred, grad)

    out._backward = backward
    return out


# ---------------------------------------------------------------------------
# Adam

class AdamState:
    """Per-parameter Adam moments and the shared hyperparameters."""

    def __init__(self, shape, dtype=np.float32, lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.m = np.zeros(shape, dtype=dtype)
        self.v = np.zeros(shape, dtype=dtype)
        self.t = 0
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState, name: str = "param") -> np.ndarray:
    """One Adam update with bias correction; returns the updated parameter."""
    if param.shape != grad.shape or param.shape != state.m.shape:
        raise ValueError(f"adam_step shape mismatch for {name}: "
                         f"param {param.shape}, grad {grad.shape}, state {state.m.shape}")
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError(f"non-finite gradient for parameter {name!r}")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    return param - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)


class Adam:
    """Adam over a list of named parameter tensors."""

    def __init__(self, params: list[Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.params = params
        self.states = [AdamState(p.data.shape, p.data.dtype, lr, beta1, beta2, epsilon)
                       for p in params]

    def step(self):
        for p, st in zip(self.params, self.states):
            grad = p.grad if p.grad is not None else np.zeros_like(p.data)
            p.data = adam_step(p.data, grad, st, name=p.name or "param").astype(p.data.dtype)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()


# ---------------------------------------------------------------------------
# gradient checking

def grad_check(fn, inputs: list[Tensor], h: float = 1e-5) -> float:
    """Compare reverse-mode gradients of ``fn(inputs)`` to central differences.

    ``fn`` must rebuild its graph from the given tensors on every call and
    return a scalar Tensor. Inputs should be float64. Returns the max
    relative error with denominator max(|analytic|, |numeric|, 1e-8).
    """
    for t in inputs:
        t.zero_grad()
    out = fn(inputs)
    if out.data.size != 1:
        raise ValueError("grad_check requires a scalar-valued computation")
    out.backward()
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in inputs]

    max_err = 0.0
    for t, a in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = fn(inputs).item()
            flat[i] = orig - h
            fm = fn(inputs).item()
            flat[i] = orig
            numeric = (fp - fm) / (2.0 * h)
            ana = a.reshape(-1)[i]
            denom = max(abs(ana), abs(numeric), 1e-8)
            max_err = max(max_err, abs(ana - numeric) / denom)
    return max_err
