"""Reverse-mode layers on plain numpy arrays.

Each layer caches whatever its backward pass needs during forward and leaves
parameter gradients in ``self.grads`` after backward. Convolutions run via
im2col/col2im; the transposed convolution is implemented as the exact adjoint
of a convolution with the same geometry, which is what makes the mirrored
encoder/decoder shape bookkeeping come out right. All gradients here are
hand-derived and the test suite checks every layer against central finite
differences.
"""

from __future__ import annotations

import numpy as np


def _pair(v) -> tuple[int, int]:
    return (v, v) if np.isscalar(v) else (int(v[0]), int(v[1]))


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    out = (size + 2 * pad - kernel) // stride + 1
    if out < 1:
        raise ValueError(f"conv reduces size {size} below 1 "
                         f"(kernel={kernel}, stride={stride}, pad={pad})")
    return out


def tconv_output_size(size: int, kernel: int, stride: int, pad: int,
                      out_pad: int) -> int:
    if not 0 <= out_pad < stride:
        raise ValueError(f"output padding {out_pad} must be in [0, {stride})")
    return (size - 1) * stride - 2 * pad + kernel + out_pad


def xavier_uniform(shape: tuple[int, ...], fan_in: int, fan_out: int,
                   rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _gather_indices(channels: int, kh: int, kw: int, sh: int, sw: int,
                    oh: int, ow: int):
    """Index arrays mapping a padded image to its im2col matrix."""
    i0 = np.tile(np.repeat(np.arange(kh), kw), channels)
    j0 = np.tile(np.arange(kw), kh * channels)
    i1 = sh * np.repeat(np.arange(oh), ow)
    j1 = sw * np.tile(np.arange(ow), oh)
    i = i0[:, None] + i1[None, :]
    j = j0[:, None] + j1[None, :]
    k = np.repeat(np.arange(channels), kh * kw)[:, None]
    return k, i, j


def im2col(x_padded: np.ndarray, kernel, stride, out_hw) -> np.ndarray:
    """(B, C, Hp, Wp) -> (B, C*kh*kw, oh*ow)."""
    kh, kw = kernel
    sh, sw = stride
    oh, ow = out_hw
    k, i, j = _gather_indices(x_padded.shape[1], kh, kw, sh, sw, oh, ow)
    return x_padded[:, k, i, j]


def col2im(cols: np.ndarray, image_shape, kernel, stride, pad,
           out_hw) -> np.ndarray:
    """Adjoint of im2col: scatter-add columns back into (B, C, H, W)."""
    b, c, h, w = image_shape
    kh, kw = kernel
    sh, sw = stride
    ph, pw = pad
    oh, ow = out_hw
    k, i, j = _gather_indices(c, kh, kw, sh, sw, oh, ow)
    padded = np.zeros((b, c, h + 2 * ph, w + 2 * pw))
    np.add.at(padded, (slice(None), k, i, j), cols)
    if ph or pw:
        return padded[:, :, ph:ph + h, pw:pw + w]
    return padded


class Layer:
    """Common bookkeeping: trainable tensors, their gradients, extra buffers."""

    param_names: tuple[str, ...] = ()
    buffer_names: tuple[str, ...] = ()

    def __init__(self):
        self.grads: dict[str, np.ndarray] = {}

    def params(self) -> dict[str, np.ndarray]:
        return {n: getattr(self, n) for n in self.param_names}

    def buffers(self) -> dict[str, np.ndarray]:
        return {n: getattr(self, n) for n in self.buffer_names}

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Conv2d(Layer):
    param_names = ("w", "b")

    def __init__(self, cin: int, cout: int, kernel=4, stride=2, pad=(1, 1),
                 rng: np.random.Generator | None = None):
        super().__init__()
        self.cin, self.cout = cin, cout
        self.kernel, self.stride, self.pad = _pair(kernel), _pair(stride), _pair(pad)
        kh, kw = self.kernel
        fan_in, fan_out = cin * kh * kw, cout * kh * kw
        rng = rng or np.random.default_rng(0)
        self.w = xavier_uniform((cout, cin * kh * kw), fan_in, fan_out, rng)
        self.b = np.zeros(cout)

    def output_hw(self, h: int, w: int) -> tuple[int, int]:
        return (conv_output_size(h, self.kernel[0], self.stride[0], self.pad[0]),
                conv_output_size(w, self.kernel[1], self.stride[1], self.pad[1]))

    def forward(self, x, train):
        if x.shape[1] != self.cin:
            raise ValueError(f"expected {self.cin} input channels, got {x.shape[1]}")
        b, _, h, w = x.shape
        oh, ow = self.output_hw(h, w)
        ph, pw = self.pad
        xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
        cols = im2col(xp, self.kernel, self.stride, (oh, ow))
        y = np.matmul(self.w, cols) + self.b[:, None]
        self._cache = (cols, x.shape, (oh, ow))
        return y.reshape(b, self.cout, oh, ow)

    def backward(self, dy):
        cols, x_shape, out_hw = self._cache
        b = dy.shape[0]
        dyf = dy.reshape(b, self.cout, -1)
        self.grads = {
            "w": np.einsum("bop,bkp->ok", dyf, cols),
            "b": dyf.sum(axis=(0, 2)),
        }
        dcols = np.matmul(self.w.T, dyf)
        return col2im(dcols, x_shape, self.kernel, self.stride, self.pad, out_hw)


class ConvTranspose2d(Layer):
    """Adjoint of Conv2d with identical geometry; out_pad resolves the
    one-sample ambiguity of inverting a strided convolution."""

    param_names = ("w", "b")

    def __init__(self, cin: int, cout: int, kernel=4, stride=2, pad=(1, 1),
                 out_pad=(0, 0), rng: np.random.Generator | None = None):
        super().__init__()
        self.cin, self.cout = cin, cout
        self.kernel, self.stride = _pair(kernel), _pair(stride)
        self.pad, self.out_pad = _pair(pad), _pair(out_pad)
        kh, kw = self.kernel
        fan_in, fan_out = cin * kh * kw, cout * kh * kw
        rng = rng or np.random.default_rng(0)
        self.w = xavier_uniform((cin, cout * kh * kw), fan_in, fan_out, rng)
        self.b = np.zeros(cout)

    def output_hw(self, h: int, w: int) -> tuple[int, int]:
        return (tconv_output_size(h, self.kernel[0], self.stride[0],
                                  self.pad[0], self.out_pad[0]),
                tconv_output_size(w, self.kernel[1], self.stride[1],
                                  self.pad[1], self.out_pad[1]))

    def forward(self, x, train):
        if x.shape[1] != self.cin:
            raise ValueError(f"expected {self.cin} input channels, got {x.shape[1]}")
        b, _, hi, wi = x.shape
        ho, wo = self.output_hw(hi, wi)
        # the virtual forward conv (ho, wo) -> (hi, wi) must be consistent
        kh, kw = self.kernel
        sh, sw = self.stride
        assert conv_output_size(ho, kh, sh, self.pad[0]) == hi
        assert conv_output_size(wo, kw, sw, self.pad[1]) == wi
        x_flat = x.reshape(b, self.cin, hi * wi)
        cols = np.matmul(self.w.T, x_flat)  # (B, cout*kh*kw, hi*wi)
        y = col2im(cols, (b, self.cout, ho, wo), self.kernel, self.stride,
                   self.pad, (hi, wi))
        self._cache = (x_flat, (hi, wi), (ho, wo))
        return y + self.b[None, :, None, None]

    def backward(self, dy):
        x_flat, in_hw, out_hw = self._cache
        ph, pw = self.pad
        dyp = np.pad(dy, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
        dcols = im2col(dyp, self.kernel, self.stride, in_hw)
        self.grads = {
            "w": np.einsum("bip,bkp->ik", x_flat, dcols),
            "b": dy.sum(axis=(0, 2, 3)),
        }
        dx = np.matmul(self.w, dcols)
        return dx.reshape(dy.shape[0], self.cin, *in_hw)


class Dense(Layer):
    param_names = ("w", "b")

    def __init__(self, n_in: int, n_out: int,
                 rng: np.random.Generator | None = None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.w = xavier_uniform((n_out, n_in), n_in, n_out, rng)
        self.b = np.zeros(n_out)

    def forward(self, x, train):
        self._x = x
        return x @ self.w.T + self.b

    def backward(self, dy):
        self.grads = {"w": dy.T @ self._x, "b": dy.sum(axis=0)}
        return dy @ self.w


class BatchNorm(Layer):
    """Per-channel batch normalization for (B, C) or (B, C, H, W) inputs.

    Train mode normalizes with batch statistics and updates running stats by
    EMA (momentum 0.1, unbiased variance for the running estimate, matching
    the usual convention); eval mode is an affine map using running stats.
    """

    param_names = ("gamma", "beta")
    buffer_names = ("running_mean", "running_var")

    def __init__(self, num_features: int, momentum: float = 0.1,
                 eps: float = 1e-5):
        super().__init__()
        self.num_features = num_features
        self.momentum = momentum
        self.eps = eps
        self.gamma = np.ones(num_features)
        self.beta = np.zeros(num_features)
        self.running_mean = np.zeros(num_features)
        self.running_var = np.ones(num_features)

    def _bshape(self, ndim: int) -> tuple[int, ...]:
        return (1, self.num_features) + (1,) * (ndim - 2)

    def forward(self, x, train):
        if x.shape[1] != self.num_features:
            raise ValueError(f"expected {self.num_features} channels, got {x.shape[1]}")
        axes = (0,) + tuple(range(2, x.ndim))
        shape = self._bshape(x.ndim)
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            n = x.size // self.num_features
            self.running_mean = ((1 - self.momentum) * self.running_mean
                                 + self.momentum * mean)
            unbiased = var * n / max(n - 1, 1)
            self.running_var = ((1 - self.momentum) * self.running_var
                                + self.momentum * unbiased)
            ivar = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean.reshape(shape)) * ivar.reshape(shape)
            self._cache = ("train", xhat, ivar, axes, shape, n)
        else:
            ivar = 1.0 / np.sqrt(self.running_var + self.eps)
            xhat = (x - self.running_mean.reshape(shape)) * ivar.reshape(shape)
            self._cache = ("eval", xhat, ivar, axes, shape, None)
        return self.gamma.reshape(shape) * xhat + self.beta.reshape(shape)

    def backward(self, dy):
        mode, xhat, ivar, axes, shape, n = self._cache
        self.grads = {
            "gamma": (dy * xhat).sum(axis=axes),
            "beta": dy.sum(axis=axes),
        }
        dxhat = dy * self.gamma.reshape(shape)
        if mode == "eval":
            return dxhat * ivar.reshape(shape)
        sum_dxhat = dxhat.sum(axis=axes).reshape(shape)
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=axes).reshape(shape)
        return (ivar.reshape(shape) / n) * (
            n * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)


class LeakyReLU(Layer):
    def __init__(self, slope: float = 0.2):
        super().__init__()
        self.slope = slope

    def forward(self, x, train):
        self._pos = x > 0
        return np.where(self._pos, x, self.slope * x)

    def backward(self, dy):
        return np.where(self._pos, dy, self.slope * dy)


class ReLU(Layer):
    def forward(self, x, train):
        self._pos = x > 0
        return np.where(self._pos, x, 0.0)

    def backward(self, dy):
        return np.where(self._pos, dy, 0.0)


class MaxPool2d(Layer):
    """2x2 stride-2 max pooling, ceil mode (odd edges padded with -inf)."""

    def forward(self, x, train):
        b, c, h, w = x.shape
        hp, wp = -(-h // 2) * 2, -(-w // 2) * 2
        xp = np.full((b, c, hp, wp), -np.inf)
        xp[:, :, :h, :w] = x
        oh, ow = hp // 2, wp // 2
        windows = (xp.reshape(b, c, oh, 2, ow, 2)
                   .transpose(0, 1, 2, 4, 3, 5)
                   .reshape(b, c, oh, ow, 4))
        self._arg = windows.argmax(axis=-1)
        self._shape = (b, c, h, w, hp, wp)
        return np.take_along_axis(windows, self._arg[..., None], axis=-1)[..., 0]

    def backward(self, dy):
        b, c, h, w, hp, wp = self._shape
        oh, ow = hp // 2, wp // 2
        flat = np.zeros((b, c, oh, ow, 4))
        np.put_along_axis(flat, self._arg[..., None], dy[..., None], axis=-1)
        dxp = (flat.reshape(b, c, oh, ow, 2, 2)
               .transpose(0, 1, 2, 4, 3, 5)
               .reshape(b, c, hp, wp))
        return dxp[:, :, :h, :w]


class Dropout(Layer):
    """Inverted dropout with an externally supplied counter-based generator.

    The owner calls set_rng() before each training forward so masks are a
    pure function of (run seed, step, layer id) — required for reproducible
    training runs.
    """

    def __init__(self, rate: float = 0.25):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate {rate} outside [0, 1)")
        self.rate = rate
        self._rng: np.random.Generator | None = None

    def set_rng(self, rng: np.random.Generator) -> None:
        self._rng = rng

    def forward(self, x, train):
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        if self._rng is None:
            raise RuntimeError("dropout needs set_rng() before a training forward")
        keep = 1.0 - self.rate
        self._mask = (self._rng.random(x.shape) < keep) / keep
        self._rng = None  # one mask per supplied key
        return x * self._mask

    def backward(self, dy):
        if self._mask is None:
            return dy
        return dy * self._mask


class Chain(Layer):
    """Sequential composition used for the per-block conv/act/norm stacks."""

    def __init__(self, *layers: Layer):
        super().__init__()
        self.layers = list(layers)

    def forward(self, x, train):
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, dy):
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy
