"""Log-domain modified Bessel functions of the first kind.

Three branches cover the orders and arguments the vMF normalizer needs:

- power series summed in log space for ``x < max(nu, SERIES_LIMIT)``;
- Debye's uniform asymptotic expansion for larger ``x`` when ``nu >= 1``;
- the large-argument (Hankel) expansion for larger ``x`` when ``nu < 1``.
"""

from __future__ import annotations

import math
import numpy as np
from ncse.utils import DomainError

SERIES_LIMIT = 20.0
# Terms past k ~ x shrink by at least a factor 4 each.
SERIES_TAIL = 60


def _log_series(nu: float, x: float) -> float:
    half = math.log(x / 2.0)
    k = np.arange(int(x) + SERIES_TAIL, dtype=np.float64)
    steps = 2.0 * half - np.log(k[:-1] + 1.0) - np.log(k[:-1] + nu + 1.0)
    log_terms = nu * half - math.lgamma(nu + 1.0)
    log_terms += np.concatenate(([0.0], np.cumsum(steps)))
    top = float(log_terms.max())
    return top + math.log(float(np.exp(log_terms - top).sum()))


def _debye_polynomials(t: float) -> tuple[float, float, float, float]:
    t2 = t * t
    u1 = t * (3.0 - 5.0 * t2) / 24.0
    u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0
    u3 = (
        t
        * t2
        * (30375.0 - 369603.0 * t2 + 765765.0 * t2**2 - 425425.0 * t2**3)
        / 414720.0
    )
    u4 = (
        t2
        * t2
        * (
            4465125.0
            - 94121676.0 * t2
            + 349922430.0 * t2**2
            - 446185740.0 * t2**3
            + 185910725.0 * t2**4
        )
        / 39813120.0
    )
    return u1, u2, u3, u4


def _log_debye(nu: float, x: float) -> float:
    z = x / nu
    root = math.sqrt(1.0 + z * z)
    eta = root + math.log(z / (1.0 + root))
    u1, u2, u3, u4 = _debye_polynomials(1.0 / root)
    correction = 1.0 + u1 / nu + u2 / nu**2 + u3 / nu**3 + u4 / nu**4
    return (
        nu * eta
        - 0.5 * math.log(2.0 * math.pi * nu)
        - 0.5 * math.log(root)
        + math.log(correction)
    )


def _log_large_argument(nu: float, x: float) -> float:
    mu = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    for k in range(1, 40):
        step = -(mu - (2.0 * k - 1.0) ** 2) / (8.0 * k * x)
        if abs(step) >= 1.0:
            break
        term *= step
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(total)


def log_bessel_i(nu: float, x: float) -> float:
    """Return log I_nu(x) for nu >= 0, x >= 0."""
    if nu < 0 or x < 0:
        msg = f"log_bessel_i needs nu >= 0 and x >= 0! [{nu}, {x}]"
        raise DomainError(msg)
    if x == 0:
        return 0.0 if nu == 0 else -math.inf
    if x < max(nu, SERIES_LIMIT):
        return _log_series(nu, x)
    if nu >= 1:
        return _log_debye(nu, x)
    return _log_large_argument(nu, x)
