"""Layers with hand-derived backward passes.

Every layer is a fixed building block of the two autoencoder stacks in
this package. ``forward(x, training)`` caches whatever the analytic
backward pass needs; ``backward(grad)`` consumes the cache, accumulates
parameter gradients, and returns the gradient with respect to the input.
All in-memory compute is float64.

Convolutions are stride-1, valid (no padding): a k=3 conv shortens the
time axis by 2 and a k=3 transpose conv extends it by 2.
"""

import numpy as np

from .. import kernels
from ..errors import ConfigError, NumericError, ShapeError


class Parameter:
    """Trainable array plus its accumulated gradient."""

    __slots__ = ("name", "data", "grad")

    def __init__(self, name, data):
        self.name = name
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.data.shape})"


def _kaiming_uniform(rng, shape, fan_in):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _bias_uniform(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Layer:
    """Base class: a differentiable block with optional parameters."""

    def forward(self, x, training=False):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def parameters(self):
        return []

    def buffers(self):
        """Persistent non-trainable state as (name, array) pairs."""
        return []

    def set_buffer(self, name, value):
        raise KeyError(f"{type(self).__name__} has no buffer {name!r}")

    def _take_cache(self):
        cache = getattr(self, "_cache", None)
        if cache is None:
            raise RuntimeError(
                f"{type(self).__name__}.backward called before forward"
            )
        self._cache = None
        return cache


class Conv1d(Layer):
    """Stride-1 valid 1D convolution; weight shape (out, in, k)."""

    def __init__(self, in_channels, out_channels, kernel_size=3, rng=None):
        if kernel_size < 1:
            raise ConfigError(f"kernel_size must be >= 1, got {kernel_size}")
        rng = rng if rng is not None else np.random.default_rng()
        fan_in = in_channels * kernel_size
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        shape = (out_channels, in_channels, kernel_size)
        self.weight = Parameter("weight", _kaiming_uniform(rng, shape, fan_in))
        self.bias = Parameter("bias", _bias_uniform(rng, (out_channels,), fan_in))
        self._cache = None

    def forward(self, x, training=False):
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ShapeError(
                f"Conv1d expected (batch, {self.in_channels}, time), got {x.shape}"
            )
        if x.shape[2] < self.kernel_size:
            raise ShapeError(
                f"Conv1d needs time >= kernel_size ({self.kernel_size}), "
                f"got {x.shape[2]}"
            )
        self._cache = x
        out = kernels.correlate_valid(x, self.weight.data)
        out += self.bias.data[None, :, None]
        return out

    def backward(self, grad):
        x = self._take_cache()
        self.weight.grad += kernels.weight_grad(grad, x)
        self.bias.grad += grad.sum(axis=(0, 2))
        return kernels.scatter_full(grad, self.weight.data)

    def parameters(self):
        return [self.weight, self.bias]


class ConvTranspose1d(Layer):
    """Stride-1 transpose of the valid conv; weight shape (in, out, k)."""

    def __init__(self, in_channels, out_channels, kernel_size=3, rng=None):
        if kernel_size < 1:
            raise ConfigError(f"kernel_size must be >= 1, got {kernel_size}")
        rng = rng if rng is not None else np.random.default_rng()
        fan_in = in_channels * kernel_size
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        shape = (in_channels, out_channels, kernel_size)
        self.weight = Parameter("weight", _kaiming_uniform(rng, shape, fan_in))
        self.bias = Parameter("bias", _bias_uniform(rng, (out_channels,), fan_in))
        self._cache = None

    def forward(self, x, training=False):
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ShapeError(
                f"ConvTranspose1d expected (batch, {self.in_channels}, time), "
                f"got {x.shape}"
            )
        self._cache = x
        out = kernels.scatter_full(x, self.weight.data)
        out += self.bias.data[None, :, None]
        return out

    def backward(self, grad):
        x = self._take_cache()
        self.weight.grad += kernels.weight_grad(x, grad)
        self.bias.grad += grad.sum(axis=(0, 2))
        return kernels.correlate_valid(grad, self.weight.data)

    def parameters(self):
        return [self.weight, self.bias]


class BatchNorm1d(Layer):
    """Per-channel batch normalization over (batch, channel, time)."""

    def __init__(self, num_channels, eps=1e-5, momentum=0.1):
        self.num_channels = num_channels
        self.eps = eps
        self.momentum = momentum
        self.gamma = Parameter("gamma", np.ones(num_channels))
        self.beta = Parameter("beta", np.zeros(num_channels))
        self.running_mean = np.zeros(num_channels)
        self.running_var = np.ones(num_channels)
        self._cache = None

    def forward(self, x, training=False):
        if x.ndim != 3 or x.shape[1] != self.num_channels:
            raise ShapeError(
                f"BatchNorm1d expected (batch, {self.num_channels}, time), "
                f"got {x.shape}"
            )
        if training:
            n = x.shape[0] * x.shape[2]
            if n < 2:
                raise ShapeError(
                    "BatchNorm1d train mode needs batch*time > 1 per channel"
                )
            mean = x.mean(axis=(0, 2))
            var = x.var(axis=(0, 2))
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
            m = self.momentum
            self.running_mean = (1.0 - m) * self.running_mean + m * mean
            self.running_var = (1.0 - m) * self.running_var + m * var
            self._cache = (xhat, inv_std, True)
        else:
            inv_std = 1.0 / np.sqrt(self.running_var + self.eps)
            xhat = (x - self.running_mean[None, :, None]) * inv_std[None, :, None]
            self._cache = (xhat, inv_std, False)
        return self.gamma.data[None, :, None] * xhat + self.beta.data[None, :, None]

    def backward(self, grad):
        xhat, inv_std, was_training = self._take_cache()
        self.beta.grad += grad.sum(axis=(0, 2))
        self.gamma.grad += (grad * xhat).sum(axis=(0, 2))
        dxhat = grad * self.gamma.data[None, :, None]
        if not was_training:
            return dxhat * inv_std[None, :, None]
        # Train mode: the batch statistics depend on x, so the gradient
        # carries correction terms for the mean and variance paths.
        n = xhat.shape[0] * xhat.shape[2]
        sum_dxhat = dxhat.sum(axis=(0, 2), keepdims=True)
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=(0, 2), keepdims=True)
        return (inv_std[None, :, None] / n) * (
            n * dxhat - sum_dxhat - xhat * sum_dxhat_xhat
        )

    def parameters(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return [("running_mean", self.running_mean), ("running_var", self.running_var)]

    def set_buffer(self, name, value):
        if name == "running_mean":
            self.running_mean = np.asarray(value, dtype=np.float64).copy()
        elif name == "running_var":
            self.running_var = np.asarray(value, dtype=np.float64).copy()
        else:
            raise KeyError(f"BatchNorm1d has no buffer {name!r}")


class Linear(Layer):
    """Affine map on the last axis; weight shape (out_dim, in_dim)."""

    def __init__(self, in_dim, out_dim, rng=None):
        rng = rng if rng is not None else np.random.default_rng()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Parameter(
            "weight", _kaiming_uniform(rng, (out_dim, in_dim), in_dim)
        )
        self.bias = Parameter("bias", _bias_uniform(rng, (out_dim,), in_dim))
        self._cache = None

    def forward(self, x, training=False):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(
                f"Linear expected (batch, {self.in_dim}), got {x.shape}"
            )
        self._cache = x
        return x @ self.weight.data.T + self.bias.data[None, :]

    def backward(self, grad):
        x = self._take_cache()
        self.weight.grad += grad.T @ x
        self.bias.grad += grad.sum(axis=0)
        return grad @ self.weight.data

    def parameters(self):
        return [self.weight, self.bias]


class Dropout(Layer):
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p)."""

    def __init__(self, p, rng=None):
        if not 0.0 <= p < 1.0:
            raise ConfigError(f"dropout p must be in [0, 1), got {p}")
        self.p = p
        self.rng = rng if rng is not None else np.random.default_rng()
        self._cache = None

    def forward(self, x, training=False):
        if training and self.p > 0.0:
            keep = self.rng.random(x.shape) >= self.p
            scale = 1.0 / (1.0 - self.p)
            self._cache = (keep, scale)
            return x * keep * scale
        self._cache = (None, 1.0)
        return x

    def backward(self, grad):
        keep, scale = self._take_cache()
        if keep is None:
            return grad
        return grad * keep * scale


class LeakyReLU(Layer):
    """max(x, slope*x) with a fixed slope."""

    def __init__(self, slope=0.01):
        self.slope = slope
        self._cache = None

    def forward(self, x, training=False):
        pos = x > 0
        self._cache = pos
        return np.where(pos, x, self.slope * x)

    def backward(self, grad):
        pos = self._take_cache()
        return np.where(pos, grad, self.slope * grad)


class PReLU(Layer):
    """Leaky ReLU whose single shared slope is learned."""

    def __init__(self, init_slope=0.25):
        self.slope = Parameter("slope", np.array([init_slope]))
        self._cache = None

    def forward(self, x, training=False):
        self._cache = x
        return np.where(x > 0, x, self.slope.data[0] * x)

    def backward(self, grad):
        x = self._take_cache()
        neg = x <= 0
        self.slope.grad += np.array([(grad * np.where(neg, x, 0.0)).sum()])
        return np.where(neg, self.slope.data[0] * grad, grad)

    def parameters(self):
        return [self.slope]


class ReLU(Layer):
    def forward(self, x, training=False):
        pos = x > 0
        self._cache = pos
        return x * pos

    def backward(self, grad):
        pos = self._take_cache()
        return grad * pos


class Sequential(Layer):
    """Fixed stack of layers executed in order.

    Inputs and every layer output are checked finite; NaN or Inf raises
    NumericError naming the offending layer.
    """

    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, x, training=False):
        x = np.asarray(x, dtype=np.float64)
        if not np.isfinite(x).all():
            raise NumericError("non-finite values in Sequential input")
        for i, layer in enumerate(self.layers):
            x = layer.forward(x, training=training)
            if not np.isfinite(x).all():
                raise NumericError(
                    f"non-finite values after layer {i} ({type(layer).__name__})"
                )
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameters(self):
        out = []
        for layer in self.layers:
            out.extend(layer.parameters())
        return out

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def param_count(self):
        return sum(p.data.size for p in self.parameters())

    def named_arrays(self):
        """All persistent arrays (trainable + buffers) in declaration order."""
        out = []
        for i, layer in enumerate(self.layers):
            for p in layer.parameters():
                out.append((f"{i}.{p.name}", p.data))
            for bname, arr in layer.buffers():
                out.append((f"{i}.{bname}", arr))
        return out

    def load_arrays(self, arrays):
        """Restore arrays saved by named_arrays; names and shapes must match."""
        arrays = dict(arrays)
        for i, layer in enumerate(self.layers):
            for p in layer.parameters():
                key = f"{i}.{p.name}"
                if key not in arrays:
                    raise ShapeError(f"checkpoint missing array {key!r}")
                value = np.asarray(arrays.pop(key), dtype=np.float64)
                if value.shape != p.data.shape:
                    raise ShapeError(
                        f"checkpoint array {key!r} has shape {value.shape}, "
                        f"expected {p.data.shape}"
                    )
                p.data[...] = value
            for bname, arr in layer.buffers():
                key = f"{i}.{bname}"
                if key not in arrays:
                    raise ShapeError(f"checkpoint missing array {key!r}")
                value = np.asarray(arrays.pop(key), dtype=np.float64)
                if value.shape != arr.shape:
                    raise ShapeError(
                        f"checkpoint array {key!r} has shape {value.shape}, "
                        f"expected {arr.shape}"
                    )
                layer.set_buffer(bname, value)
        if arrays:
            extra = sorted(arrays)
            raise ShapeError(f"checkpoint has unexpected arrays: {extra}")
