"""Minimal CNN stack in plain numpy: conv/activation/upsample layers with
hand-written backward passes, an encoder-decoder with skip links, and ADAM.

Everything operates on single (channels, height, width) tensors — the
fitting problem here is always one image, so there is no batch axis.
Layers cache what their backward pass needs; a training step is
``forward -> backward -> AdamState.step -> zero_grad``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Parameter",
    "Conv2d",
    "Norm2d",
    "LeakyReLU",
    "Sigmoid",
    "NearestUpsample2x",
    "NetConfig",
    "SkipNet",
    "AdamState",
    "init_network",
]

_DTYPES = {"float32": np.float32, "float64": np.float64}


class Parameter:
    """A weight array plus its gradient accumulator."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = value
        self.grad = np.zeros_like(value)


class Conv2d:
    """2-D convolution via im2col + GEMM.

    3x3 kernels use reflection padding (border row/col mirrored without
    repeating the edge), so spatial size is preserved at stride 1 and
    halved at stride 2.  1x1 kernels skip padding entirely.
    """

    def __init__(self, cin, cout, ksize, rng, dtype, stride=1):
        if ksize not in (1, 3):
            raise ValueError("only 1x1 and 3x3 kernels are used here")
        if ksize == 1 and stride != 1:
            raise ValueError("1x1 convolutions are stride-1 only")
        self.cin, self.cout, self.k, self.stride = cin, cout, ksize, stride
        fan_in = cin * ksize * ksize
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(cout, fan_in)).astype(dtype)
        self.w = Parameter(w)
        self.b = Parameter(np.zeros(cout, dtype=dtype))
        self._cols = None
        self._xshape = None

    def params(self):
        return [self.w, self.b]

    def _im2col(self, xp, ho, wo):
        k, s = self.k, self.stride
        win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(1, 2))
        win = win[:, ::s, ::s]  # (cin, ho, wo, k, k)
        cols = win.transpose(0, 3, 4, 1, 2).reshape(self.cin * k * k, ho * wo)
        return np.ascontiguousarray(cols)

    def forward(self, x):
        self._xshape = x.shape
        _, h, w = x.shape
        if self.k == 1:
            self._cols = x.reshape(self.cin, h * w)
            ho, wo = h, w
        else:
            if h < 2 or w < 2:
                raise ValueError("3x3 reflection padding needs dims >= 2")
            xp = np.pad(x, ((0, 0), (1, 1), (1, 1)), mode="reflect")
            ho, wo = h // self.stride, w // self.stride
            self._cols = self._im2col(xp, ho, wo)
        y = self.w.value @ self._cols + self.b.value[:, None]
        return y.reshape(self.cout, ho, wo)

    def backward(self, gy):
        cout, ho, wo = gy.shape
        g = gy.reshape(cout, ho * wo)
        self.w.grad += g @ self._cols.T
        self.b.grad += g.sum(axis=1)
        dcols = self.w.value.T @ g
        _, h, w = self._xshape
        if self.k == 1:
            return dcols.reshape(self._xshape)
        k, s = self.k, self.stride
        dcols = dcols.reshape(self.cin, k, k, ho, wo)
        dxp = np.zeros((self.cin, h + 2, w + 2), dtype=gy.dtype)
        for ki in range(k):
            for kj in range(k):
                dxp[:, ki:ki + s * ho:s, kj:kj + s * wo:s] += dcols[:, ki, kj]
        # fold the padded borders back onto their reflection sources
        dx = dxp[:, 1:-1, 1:-1].copy()
        dx[:, 1, :] += dxp[:, 0, 1:-1]
        dx[:, -2, :] += dxp[:, -1, 1:-1]
        dx[:, :, 1] += dxp[:, 1:-1, 0]
        dx[:, :, -2] += dxp[:, 1:-1, -1]
        dx[:, 1, 1] += dxp[:, 0, 0]
        dx[:, 1, -2] += dxp[:, 0, -1]
        dx[:, -2, 1] += dxp[:, -1, 0]
        dx[:, -2, -2] += dxp[:, -1, -1]
        return dx


class Norm2d:
    """Per-channel normalization over spatial positions with affine scale.

    Statistics are recomputed from the live input every forward (there
    is no train/eval split in a single-image fit), which is what keeps
    ADAM at lr 0.01 from blowing the activations up.
    """

    def __init__(self, channels, dtype, eps=1e-5):
        self.eps = eps
        self.gamma = Parameter(np.ones(channels, dtype=dtype))
        self.beta = Parameter(np.zeros(channels, dtype=dtype))
        self._xhat = None
        self._inv = None

    def params(self):
        return [self.gamma, self.beta]

    def forward(self, x):
        mu = x.mean(axis=(1, 2), keepdims=True)
        var = x.var(axis=(1, 2), keepdims=True)
        self._inv = 1.0 / np.sqrt(var + self.eps)
        self._xhat = (x - mu) * self._inv
        return self.gamma.value[:, None, None] * self._xhat \
            + self.beta.value[:, None, None]

    def backward(self, gy):
        xhat, inv = self._xhat, self._inv
        self.gamma.grad += (gy * xhat).sum(axis=(1, 2))
        self.beta.grad += gy.sum(axis=(1, 2))
        gxhat = gy * self.gamma.value[:, None, None]
        m1 = gxhat.mean(axis=(1, 2), keepdims=True)
        m2 = (gxhat * xhat).mean(axis=(1, 2), keepdims=True)
        return inv * (gxhat - m1 - xhat * m2)


class LeakyReLU:
    def __init__(self, slope=0.1):
        self.slope = slope
        self._mask = None

    def params(self):
        return []

    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, self.slope * x)

    def backward(self, gy):
        return np.where(self._mask, gy, self.slope * gy)


class Sigmoid:
    def __init__(self):
        self._y = None

    def params(self):
        return []

    def forward(self, x):
        e = np.exp(-np.abs(x))
        self._y = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
        return self._y

    def backward(self, gy):
        return gy * self._y * (1.0 - self._y)


class NearestUpsample2x:
    def params(self):
        return []

    def forward(self, x):
        return x.repeat(2, axis=1).repeat(2, axis=2)

    def backward(self, gy):
        return (gy[:, 0::2, 0::2] + gy[:, 0::2, 1::2]
                + gy[:, 1::2, 0::2] + gy[:, 1::2, 1::2])


@dataclass(frozen=True)
class NetConfig:
    """Architecture and seeding for the encoder-decoder.

    The net is structural: ``depth`` stride-2 levels of ``channels``
    filters, a ``skip_channels``-wide 1x1 tap feeding each decoder
    level, nearest-neighbor upsampling, leaky-rectifier activations and
    a sigmoid head.  ``in_noise`` sets the channel count of the frozen
    noise input z.
    """

    depth: int = 3
    channels: int = 32
    skip_channels: int = 4
    in_noise: int = 16
    leaky_slope: float = 0.1
    upsample: str = "nearest"
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if min(self.channels, self.skip_channels, self.in_noise) < 1:
            raise ValueError("channel counts must be >= 1")
        if self.upsample != "nearest":
            raise ValueError("only nearest upsampling is implemented")
        if self.dtype not in _DTYPES:
            raise ValueError(f"dtype must be one of {sorted(_DTYPES)}")


class SkipNet:
    """Encoder-decoder with per-level skip taps.

    Level l of the encoder is [conv3x3 stride 2, norm, lrelu, conv3x3,
    norm, lrelu]; its *input* also feeds a [conv1x1 -> skip_channels,
    norm, lrelu] tap.  The decoder mirrors: upsample, concat the tap
    output, [conv3x3, norm, lrelu, conv1x1, norm, lrelu].  A 1x1 head
    plus sigmoid maps to ``out_channels``.

    Spatial dims must be divisible by 2^depth with the deepest feature
    map at least 2x2 (3x3 reflection padding needs two rows).
    """

    def __init__(self, cfg: NetConfig, out_channels: int = 3):
        self.cfg = cfg
        self.out_channels = out_channels
        dtype = _DTYPES[cfg.dtype]
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        c, s = cfg.channels, cfg.skip_channels
        slope = cfg.leaky_slope
        self.enc = []
        self.taps = []
        cin = cfg.in_noise
        for _ in range(cfg.depth):
            self.taps.append([Conv2d(cin, s, 1, rng, dtype),
                              Norm2d(s, dtype), LeakyReLU(slope)])
            self.enc.append([
                Conv2d(cin, c, 3, rng, dtype, stride=2),
                Norm2d(c, dtype), LeakyReLU(slope),
                Conv2d(c, c, 3, rng, dtype),
                Norm2d(c, dtype), LeakyReLU(slope),
            ])
            cin = c
        self.dec = []
        for _ in range(cfg.depth):
            self.dec.append([
                NearestUpsample2x(),
                Conv2d(c + s, c, 3, rng, dtype),
                Norm2d(c, dtype), LeakyReLU(slope),
                Conv2d(c, c, 1, rng, dtype),
                Norm2d(c, dtype), LeakyReLU(slope),
            ])
        self.head = [Conv2d(c, out_channels, 1, rng, dtype), Sigmoid()]

    def _layers(self):
        for group in (*self.taps, *self.enc, *self.dec, self.head):
            yield from group

    def parameters(self):
        out = []
        for layer in self._layers():
            out.extend(layer.params())
        return out

    def n_parameters(self):
        return sum(p.value.size for p in self.parameters())

    def zero_grad(self):
        for p in self.parameters():
            p.grad[...] = 0.0

    def forward(self, z):
        d = self.cfg.depth
        if (z.shape[1] % (1 << d) or z.shape[2] % (1 << d)
                or min(z.shape[1], z.shape[2]) < (2 << d)):
            raise ValueError(
                f"spatial dims {z.shape[1:]} must be divisible by 2^{d} "
                f"and at least {2 << d}")
        x = z
        skips = []
        for tap, enc in zip(self.taps, self.enc):
            t = x
            for layer in tap:
                t = layer.forward(t)
            skips.append(t)
            for layer in enc:
                x = layer.forward(x)
        self._split = []
        for lvl in range(d - 1, -1, -1):
            up, *rest = self.dec[lvl]
            x = up.forward(x)
            self._split.append(x.shape[0])
            x = np.concatenate([x, skips[lvl]], axis=0)
            for layer in rest:
                x = layer.forward(x)
        for layer in self.head:
            x = layer.forward(x)
        return x

    def backward(self, gout):
        d = self.cfg.depth
        g = gout
        for layer in reversed(self.head):
            g = layer.backward(g)
        tap_grads = [None] * d
        # decoder stages ran lvl = d-1 .. 0, so backward visits 0 .. d-1
        for lvl in range(d):
            up, *rest = self.dec[lvl]
            for layer in reversed(rest):
                g = layer.backward(g)
            n_main = self._split[d - 1 - lvl]
            g_main, g_skip = g[:n_main], g[n_main:]
            for layer in reversed(self.taps[lvl]):
                g_skip = layer.backward(g_skip)
            tap_grads[lvl] = g_skip
            g = up.backward(g_main)
        for lvl in range(d - 1, -1, -1):
            for layer in reversed(self.enc[lvl]):
                g = layer.backward(g)
            g = g + tap_grads[lvl]
        return g


class AdamState:
    """ADAM with bias correction over a fixed parameter list."""

    def __init__(self, params, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.value -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def init_network(cfg: NetConfig, height: int, width: int, out_channels: int = 3):
    """Build a seeded SkipNet plus its frozen iid-normal input z.

    Weight init and z use independent streams spawned from cfg.seed, so
    identical configs reproduce identical first forwards bit-for-bit.
    """
    if (height % (1 << cfg.depth) or width % (1 << cfg.depth)
            or min(height, width) < (2 << cfg.depth)):
        raise ValueError(
            f"{height}x{width} must be divisible by 2^{cfg.depth} "
            f"and at least {2 << cfg.depth}")
    z_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[1])
    net = SkipNet(cfg, out_channels=out_channels)
    z = z_rng.standard_normal((cfg.in_noise, height, width)).astype(_DTYPES[cfg.dtype])
    return net, z
