"""Exponential-kernel memory: parameters, recursive Volterra quadrature,
and the discrete positivity check.

The kernel is beta(t) = gamma exp(-delta t).  On a uniform time grid the
convolution I(t_n) = int_{t_start}^{t_n} beta(t_n - s) g(s) ds obeys the
exact one-step recursion I_n = e^{-delta k} I_{n-1} + (increment over the
last interval); the increment uses piecewise-linear reconstruction of g
with exact exponential weights, which is second-order accurate in k and
exact for histories that are piecewise linear in time.
"""

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class KernelParams:
    """Oldroyd constants.  mu = 2 kappa / lam, gamma = 2 (nu - kappa/lam)/lam,
    delta = 1/lam."""

    lam: float
    kappa: float
    nu: float
    mu: float
    gamma: float
    delta: float

    @classmethod
    def from_constants(cls, mu, gamma, delta):
        """Build from (mu, gamma, delta) directly; gamma = 0 is allowed here
        (the memory-free limit used in degenerate-equivalence runs)."""
        if mu <= 0 or delta <= 0 or gamma < 0:
            raise ValueError("need mu > 0, delta > 0, gamma >= 0")
        lam = 1.0 / delta
        kappa = 0.5 * mu * lam
        nu = 0.5 * gamma * lam + kappa / lam
        return cls(lam, kappa, nu, mu, gamma, delta)


def derive_params(lam, kappa, nu):
    """Kernel constants from the material parameters; gamma must be positive."""
    if lam <= 0 or kappa <= 0:
        raise ValueError("need lam > 0 and kappa > 0")
    gamma = 2.0 * (nu - kappa / lam) / lam
    if gamma <= 0:
        raise ValueError(
            f"nu <= kappa/lam gives gamma = {gamma:.6g} <= 0; "
            "the model leaves the Oldroyd class"
        )
    return KernelParams(lam, kappa, nu, 2.0 * kappa / lam, gamma, 1.0 / lam)


def kernel_eval(params, t):
    """beta(t) = gamma exp(-delta t) for t >= 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("kernel argument must be nonnegative")
    out = params.gamma * np.exp(-params.delta * t)
    return out if out.ndim else float(out)


def _linear_weights(x):
    """Weights (w0, w1)/k of the exponentially weighted linear reconstruction:
    int_0^k e^{-delta (k - s)} [(1 - s/k) g0 + (s/k) g1] ds = k (w0 g0 + w1 g1),
    with x = delta k.  Series branch avoids cancellation for small x.
    """
    if x < 0.01:
        w1 = 0.5 - x / 6.0 + x**2 / 24.0 - x**3 / 120.0 + x**4 / 720.0
        w0 = 0.5 - x / 3.0 + x**2 / 8.0 - x**3 / 30.0 + x**4 / 144.0
    else:
        em = math.expm1(-x)
        w1 = (x + em) / x**2
        w0 = (-em - x * math.exp(-x)) / x**2
    return w0, w1


def _rect_weight(x):
    """Right-rectangle weight / k: int_0^k e^{-delta (k-s)} ds / k."""
    if x < 1e-12:
        return 1.0
    return -math.expm1(-x) / x


@dataclass(frozen=True)
class MemoryState:
    """Running state of the recursive memory quadrature.

    value approximates int_{t_start}^{time} beta(time - s) g(s) ds, where
    g(s) is the supplied history (typically A u(s)); prev holds g at the
    current time level.  gamma = 0 keeps value identically zero.
    """

    params: KernelParams
    k: float
    t_start: float
    time: float
    value: np.ndarray
    prev: np.ndarray
    order: int = 2

    def implicit_weight(self):
        """Coefficient of g(t_{n+1}) inside the next increment (goes to the
        system matrix when the new time level is treated implicitly)."""
        x = self.params.delta * self.k
        if self.order == 2:
            return self.params.gamma * self.k * _linear_weights(x)[1]
        return self.params.gamma * self.k * _rect_weight(x)

    def explicit_part(self):
        """Known part of I at the next time level:
        I_{n+1} = explicit_part() + implicit_weight() * g_{n+1}."""
        x = self.params.delta * self.k
        decay = math.exp(-x)
        out = decay * self.value
        if self.order == 2:
            w0 = _linear_weights(x)[0]
            out = out + self.params.gamma * self.k * w0 * self.prev
        return out


def init_memory(params, k, t_start, g_start, order=2):
    if k <= 0:
        raise ValueError("step size must be positive")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    g_start = np.asarray(g_start, dtype=float)
    return MemoryState(params, float(k), float(t_start), float(t_start),
                       np.zeros_like(g_start), g_start.copy(), order)


def _apply(A, u):
    if A is None:
        return np.asarray(u, dtype=float)
    if callable(A):
        return np.asarray(A(u), dtype=float)
    return np.asarray(A @ u, dtype=float)


def advance_memory(state, A, u_new, dt=None):
    """Advance one uniform step: the new history value is A u_new.

    A may be a matrix, a callable, or None (u_new used as the history value
    directly).  Passing dt different from the state's step is rejected;
    the recursion weights are constants of the uniform grid.
    """
    if dt is not None and not math.isclose(dt, state.k, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(f"non-uniform step {dt} != {state.k}; uniform steps only")
    g_new = _apply(A, u_new)
    x = state.params.delta * state.k
    decay = math.exp(-x)
    gamma = state.params.gamma
    if state.order == 2:
        w0, w1 = _linear_weights(x)
        value = decay * state.value + gamma * state.k * (w0 * state.prev + w1 * g_new)
    else:
        value = decay * state.value + gamma * state.k * _rect_weight(x) * g_new
    return replace(state, time=state.time + state.k, value=value, prev=g_new)


def direct_convolution(params, k, history, order=2):
    """O(n^2) reference quadrature of the convolution at the final grid time.

    history has shape (n+1,) or (n+1, m): values of g on the uniform grid.
    Uses the same per-interval reconstruction as the recursion, so the two
    agree to roundoff.
    """
    g = np.asarray(history, dtype=float)
    n = g.shape[0] - 1
    x = params.delta * k
    if order == 2:
        w0, w1 = _linear_weights(x)
    total = np.zeros_like(g[0], dtype=float)
    for j in range(1, n + 1):
        decay = math.exp(-params.delta * k * (n - j))
        if order == 2:
            inc = k * (w0 * g[j - 1] + w1 * g[j])
        else:
            inc = k * _rect_weight(x) * g[j]
        total = total + decay * inc
    return params.gamma * total


def positivity_quadrature(phi, alpha, k):
    """Composite-trapezoid value of
    int_0^{t*} ( int_0^t exp(-alpha (t-s)) phi(s) ds ) phi(t) dt
    for a uniformly sampled history phi (shape (n+1,) scalar series or
    (n+1, m) field series; fields are paired in the Euclidean dot product).

    The nested trapezoid rule inherits the kernel's positive definiteness:
    the result is nonnegative up to roundoff for any history.
    """
    if alpha <= 0 or k <= 0:
        raise ValueError("alpha and k must be positive")
    phi = np.asarray(phi, dtype=float)
    series = phi[:, None] if phi.ndim == 1 else phi
    decay = math.exp(-alpha * k)
    inner = np.zeros(series.shape[1])
    total = 0.0
    n = series.shape[0] - 1
    for i in range(1, n + 1):
        inner = decay * inner + 0.5 * k * (decay * series[i - 1] + series[i])
        w_outer = 0.5 * k if i == n else k
        total += w_outer * float(inner @ series[i])
    return total
