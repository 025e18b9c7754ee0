"""Special functions and quadrature primitives.

Provides the Macdonald function K0 (and K1 for error estimates),
Gauss-Legendre rules, product quadrature for logarithmic kernels and a
principal-value integrator for semi-infinite integrals with an interior
simple pole.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate

EULER_GAMMA = 0.5772156649015328606

_K0_UNDERFLOW_X = 750.0
_CF2_MAXIT = 1000
_CF2_EPS = 1.0e-16


def _k0_series(x):
    """Ascending series for K0, accurate for 0 < x <= 2.

    K0(x) = -(ln(x/2) + gamma) I0(x) + sum_{k>=1} (x^2/4)^k / (k!)^2 * H_k
    with H_k the k-th harmonic number.
    """
    x = np.asarray(x, dtype=float)
    q = 0.25 * x * x
    i0 = np.ones_like(x)
    acc = np.zeros_like(x)
    term = np.ones_like(x)
    hk = 0.0
    for k in range(1, 40):
        term = term * q / (k * k)
        hk += 1.0 / k
        i0 += term
        acc += term * hk
        if np.all(term * max(hk, 1.0) < 1e-18 * (i0 + 1.0)):
            break
    return -(np.log(0.5 * x) + EULER_GAMMA) * i0 + acc


def _k0_k1_cf2(x):
    """Steed continued fraction for K0, K1 at x >= 2 (vectorized).

    Evaluates CF2 of the modified Bessel equation; accurate to machine
    precision on the whole branch.
    """
    x = np.asarray(x, dtype=float)
    a1 = 0.25
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _CF2_MAXIT):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels) < _CF2_EPS * np.abs(s)):
            break
    h = a1 * h
    k0 = np.sqrt(np.pi / (2.0 * x)) * np.exp(-x) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def macdonald_k0(x):
    """Macdonald function K0(x) for real x > 0.

    Ascending series below x = 2, Steed continued fraction above;
    absolute error below 1e-12 on [1e-8, 700].  Underflows to 0 for
    very large arguments.  Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("macdonald_k0 requires x > 0")
    out = np.zeros_like(arr)
    small = arr < 2.0
    large = (arr >= 2.0) & (arr < _K0_UNDERFLOW_X)
    if np.any(small):
        out[small] = _k0_series(arr[small])
    if np.any(large):
        out[large] = _k0_k1_cf2(arr[large])[0]
    if np.ndim(x) == 0:
        return float(out)
    return out


def macdonald_k1(x):
    """Macdonald function K1(x) for real x > 0 (internal error estimates)."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("macdonald_k1 requires x > 0")
    out = np.zeros_like(arr)
    small = arr < 2.0
    large = (arr >= 2.0) & (arr < _K0_UNDERFLOW_X)
    if np.any(small):
        # K1 from the Wronskian I0'K0 - I0 K0' ... cheaper: central difference
        # of the series is not accurate enough, use the standard series.
        xs = arr[small]
        q = 0.25 * xs * xs
        i1 = 0.5 * xs
        term = 0.5 * xs
        acc = 0.25 * xs  # k = 0 term of the correction sum: (H_0 + H_1)/2 * x/2
        hk = 0.0
        hk1 = 1.0
        for k in range(1, 40):
            term = term * q / (k * (k + 1.0))
            hk += 1.0 / k
            hk1 += 1.0 / (k + 1.0)
            i1 += term
            acc += 0.5 * (hk + hk1) * term
        out[small] = (np.log(0.5 * xs) + EULER_GAMMA) * i1 + 1.0 / xs - acc
    if np.any(large):
        out[large] = _k0_k1_cf2(arr[large])[1]
    if np.ndim(x) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of a quadrature rule on a fixed interval."""

    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple[float, float] = (-1.0, 1.0)

    def integrate(self, f: Callable) -> float:
        return float(np.dot(self.weights, f(self.nodes)))

    def mapped(self, a: float, b: float) -> "QuadratureRule":
        """Affine image of the rule on [a, b]."""
        lo, hi = self.domain
        scale = (b - a) / (hi - lo)
        nodes = a + (self.nodes - lo) * scale
        return QuadratureRule(nodes, self.weights * scale, (a, b))


@lru_cache(maxsize=64)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(n: int) -> QuadratureRule:
    """Standard n-point Gauss-Legendre rule on [-1, 1]."""
    if n < 1:
        raise ValueError("gauss_legendre requires n >= 1")
    x, w = _leggauss(n)
    return QuadratureRule(x.copy(), w.copy())


def _log_moments(a: float, b: float, s0: float, n: int) -> np.ndarray:
    """Moments m_k = int_a^b (s - s0)^k ln|s - s0| ds for k < n.

    Antiderivative of v^k ln|v| is v^{k+1} (ln|v| - 1/(k+1)) / (k+1),
    continuous through v = 0, so an interior singular point needs no split.
    """
    va, vb = a - s0, b - s0

    def anti(v, k):
        if v == 0.0:
            return 0.0
        return v ** (k + 1) * (np.log(abs(v)) - 1.0 / (k + 1)) / (k + 1)

    return np.array([anti(vb, k) - anti(va, k) for k in range(n)])


def log_product_rule(panel: tuple[float, float], s0: float, n: int = 12) -> QuadratureRule:
    """Product rule for int_a^b f(s) ln|s - s0| ds with f smooth.

    Weights are exact for polynomials f of degree < n at the n-point
    Gauss-Legendre nodes of the panel.  The singular point s0 must lie
    on the (closed) panel.
    """
    a, b = panel
    if not a <= s0 <= b:
        raise ValueError("log_product_rule: target point outside panel")
    base = gauss_legendre(n).mapped(a, b)
    # Solve the Vandermonde system in the scaled variable (s - s0)/L.
    L = max(b - s0, s0 - a, 1e-300)
    u = (base.nodes - s0) / L
    V = np.vander(u, n, increasing=True).T
    m = _log_moments(a, b, s0, n) / L ** np.arange(n)
    w = np.linalg.solve(V, m)
    return QuadratureRule(base.nodes, w, (a, b))


def _abs_moments(a: float, b: float, s0: float, n: int) -> np.ndarray:
    """Moments m_k = int_a^b (s - s0)^k |s - s0| ds for k < n."""
    va, vb = a - s0, b - s0

    def anti(v, k):
        return abs(v) * v ** (k + 1) / (k + 2)

    return np.array([anti(vb, k) - anti(va, k) for k in range(n)])


def abs_product_rule(panel: tuple[float, float], s0: float, n: int = 12) -> QuadratureRule:
    """Product rule for int_a^b f(s) |s - s0| ds with f smooth.

    Companion of `log_product_rule` for kernels with a kink on the
    diagonal; same nodes, exact for polynomial f of degree < n.
    """
    a, b = panel
    if not a <= s0 <= b:
        raise ValueError("abs_product_rule: target point outside panel")
    base = gauss_legendre(n).mapped(a, b)
    L = max(b - s0, s0 - a, 1e-300)
    u = (base.nodes - s0) / L
    V = np.vander(u, n, increasing=True).T
    m = _abs_moments(a, b, s0, n) / L ** np.arange(1, n + 1)
    w = np.linalg.solve(V, m) * L
    return QuadratureRule(base.nodes, w, (a, b))


@dataclass(frozen=True)
class PVIntegrand:
    """Numerator f and interior pole t0 of P int_0^inf f(t)/(t - t0) dt."""

    f: Callable[[float], complex]
    t0: float
    decay_rate: float = 1.0


def pv_semiinfinite(integrand: PVIntegrand, tol: float = 1e-10,
                    tail_bound_tol: float = 1e-10) -> complex:
    """Principal value of int_0^inf f(t)/(t - t0) dt by singularity subtraction.

    Over the symmetric window (0, 2 t0) the subtracted integrand
    (f(t) - f(t0))/(t - t0) is regular and the analytic PV of the
    subtracted constant vanishes.  The remainder is integrated as a
    regular integral out to a truncation point certified by the decay
    rate of f.
    """
    t0 = integrand.t0
    if t0 <= 0.0:
        raise ValueError("pv_semiinfinite: singular point must be interior to (0, inf)")
    f = integrand.f
    f0 = f(t0)

    def subtracted(t):
        if abs(t - t0) < 1e-13 * t0:
            h = 1e-7 * t0
            return (f(t0 + h) - f(t0 - h)) / (2.0 * h)
        return (f(t) - f0) / (t - t0)

    def quad_c(g, a, b, **kw):
        gr = integrate.quad(lambda t: np.real(g(t)), a, b, **kw)[0]
        gi = integrate.quad(lambda t: np.imag(g(t)), a, b, **kw)[0]
        return gr + 1j * gi

    window = quad_c(subtracted, 0.0, 2.0 * t0, points=[t0], limit=200, epsabs=tol, epsrel=tol)

    gamma = integrand.decay_rate
    T = 2.0 * t0
    tail = 0.0 + 0.0j
    for _ in range(60):
        T_next = T + max(10.0 / gamma if gamma > 0 else 4.0 * t0, t0)
        tail += quad_c(lambda t: f(t) / (t - t0), T, T_next, limit=200,
                       epsabs=tol, epsrel=tol)
        T = T_next
        bound = abs(f(T)) / (max(gamma, 1e-300) * (T - t0))
        if bound < tail_bound_tol or abs(f(T)) == 0.0:
            break
    else:
        raise RuntimeError("pv_semiinfinite: tail bound unachievable")

    val = window + tail
    if not np.iscomplexobj(f0) and abs(np.imag(val)) == 0.0:
        return float(np.real(val))
    return complex(val)
