"""Adam with bias correction and a one-cycle learning-rate schedule."""

import numpy as np

from ..errors import ConfigError


class Adam:
    """Standard Adam. The learning rate may vary per step via step(lr=...)."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self, lr=None):
        lr = self.lr if lr is None else lr
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / bc1
            v_hat = v / bc2
            p.data -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


class OneCycleSchedule:
    """Cosine one-cycle: warm up to peak_lr, then anneal below the start.

    lr(0) = peak_lr / div_initial, lr rises along a half cosine to exactly
    peak_lr at the warmup step, then falls along a half cosine to
    peak_lr / div_final at total_steps. The warmup step is
    round(warmup_frac * total_steps), clamped so both phases are nonempty,
    which makes the maximum over integer steps equal peak_lr exactly.
    """

    def __init__(self, total_steps, peak_lr, warmup_frac=0.3, div_initial=25.0,
                 div_final=1e4):
        if total_steps < 2:
            raise ConfigError(f"total_steps must be >= 2, got {total_steps}")
        if peak_lr <= 0:
            raise ConfigError(f"peak_lr must be positive, got {peak_lr}")
        if not 0.0 < warmup_frac < 1.0:
            raise ConfigError(f"warmup_frac must be in (0, 1), got {warmup_frac}")
        if div_initial <= 1.0 or div_final <= 1.0:
            raise ConfigError("lr divisors must exceed 1 so endpoints sit below peak")
        self.total_steps = int(total_steps)
        self.peak_lr = float(peak_lr)
        self.warmup_frac = float(warmup_frac)
        self.div_initial = float(div_initial)
        self.div_final = float(div_final)
        self.warmup_steps = min(
            max(int(round(warmup_frac * total_steps)), 1), self.total_steps - 1
        )

    def lr(self, step):
        if not 0 <= step <= self.total_steps:
            raise ConfigError(
                f"step {step} outside schedule range [0, {self.total_steps}]"
            )
        initial = self.peak_lr / self.div_initial
        final = self.peak_lr / self.div_final
        if step <= self.warmup_steps:
            t = step / self.warmup_steps
            return float(
                initial + (self.peak_lr - initial) * 0.5 * (1.0 - np.cos(np.pi * t))
            )
        t = (step - self.warmup_steps) / (self.total_steps - self.warmup_steps)
        return float(
            final + (self.peak_lr - final) * 0.5 * (1.0 + np.cos(np.pi * t))
        )
