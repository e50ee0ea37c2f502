"""Elementary conformal maps of the disk, strip and upper half-plane.

All functions accept scalars or numpy arrays and use principal branches of
``log`` and ``sqrt``. Domain checks are strict: boundary points raise.
"""

import numpy as np

__all__ = [
    "DomainError",
    "strip_map",
    "strip_map_inv",
    "strip_map_derivative",
    "cayley",
    "cayley_inv",
    "hyperbolic_automorphism",
    "automorphism_shift",
    "JuliaDisk",
    "julia_ratio",
    "julia_contains",
    "julia_disk_circle",
    "koebe",
    "koebe_inv",
    "pick",
]


class DomainError(ValueError):
    """Input outside the open domain of a map."""


def _scalar_or_array(x):
    return x.item() if isinstance(x, np.ndarray) and x.ndim == 0 else x


def _check_disk(z):
    z = np.asarray(z, dtype=complex)
    if np.any(~(np.abs(z) < 1)):
        raise DomainError("point not in the open unit disk")
    return z


def strip_map(z):
    """Map the unit disk onto the strip ``|Im| < pi/2`` by ``log((1+z)/(1-z))``."""
    z = _check_disk(z)
    # log1p keeps full relative accuracy near z = 0
    return _scalar_or_array(np.log1p(z) - np.log1p(-z))


def strip_map_inv(zeta):
    """Inverse of :func:`strip_map`, ``tanh(zeta/2)``."""
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(~(np.abs(zeta.imag) < np.pi / 2)):
        raise DomainError("point not in the strip |Im| < pi/2")
    return _scalar_or_array(np.tanh(zeta / 2))


def strip_map_derivative(z):
    z = _check_disk(z)
    return _scalar_or_array(2.0 / (1.0 - z * z))


def cayley(w):
    """``i(1+w)/(1-w)``, the disk onto the upper half-plane."""
    w = np.asarray(w, dtype=complex)
    if np.any(w == 1):
        raise DomainError("pole of the Cayley map at w = 1")
    if np.any(~(np.abs(w) < 1)):
        raise DomainError("point not in the open unit disk")
    return _scalar_or_array(1j * (1 + w) / (1 - w))


def cayley_inv(omega):
    """Inverse Cayley map ``(omega - i)/(omega + i)``."""
    omega = np.asarray(omega, dtype=complex)
    if np.any(~(omega.imag > 0)):
        raise DomainError("point not in the open upper half-plane")
    return _scalar_or_array((omega - 1j) / (omega + 1j))


def automorphism_shift(T):
    """The real parameter ``c(T) = (e^T - 1)/(e^T + 1) = tanh(T/2)``."""
    return np.tanh(np.asarray(T, dtype=float) / 2)


def hyperbolic_automorphism(T, z):
    """Disk automorphism fixing -1 and 1 that translates the strip by ``T``.

    ``strip_map(hyperbolic_automorphism(T, z)) == strip_map(z) + T``.
    """
    if np.any(np.asarray(T) < 0):
        raise DomainError("T must be nonnegative")
    z = _check_disk(z)
    c = automorphism_shift(T)
    return _scalar_or_array((z + c) / (1 + c * z))


class JuliaDisk:
    """Horodisk ``|w - sigma|^2/(1-|w|^2) <= factor * |base - sigma|^2/(1-|base|^2)``.

    This is the set into which a self-map with regular boundary fixed point
    ``sigma`` and angular derivative bounded by ``factor`` must send ``base``.
    """

    def __init__(self, sigma, factor, base):
        sigma = complex(sigma)
        if abs(abs(sigma) - 1) > 1e-14:
            raise DomainError("sigma must be unimodular")
        if not factor > 0:
            raise DomainError("factor must be positive")
        if not abs(base) < 1:
            raise DomainError("base point must lie in the open disk")
        self.sigma = sigma
        self.factor = float(factor)
        self.base = complex(base)

    @property
    def level(self):
        return self.factor * julia_ratio(self.sigma, self.base)

    def __repr__(self):
        return f"JuliaDisk(sigma={self.sigma!r}, factor={self.factor!r}, base={self.base!r})"


def julia_ratio(sigma, w):
    w = _check_disk(w)
    return _scalar_or_array(np.abs(w - sigma) ** 2 / (1 - np.abs(w) ** 2))


def julia_contains(disk, w, rtol=0.0):
    """Whether ``w`` lies in the closed horodisk ``disk``.

    ``rtol`` relaxes the comparison relative to the disk level, for points
    that attain equality only up to rounding.
    """
    ratio = np.asarray(julia_ratio(disk.sigma, w))
    level = disk.level
    return _scalar_or_array(ratio <= level * (1 + rtol))


def julia_disk_circle(disk):
    """Euclidean center and radius of the horodisk.

    A horodisk at ``sigma`` with level ``k`` is the disk of radius
    ``k/(1+k)`` centered at ``sigma/(1+k)``.
    """
    k = disk.level
    return disk.sigma / (1 + k), k / (1 + k)


def koebe(z):
    """Koebe function ``z/(1-z)^2``."""
    z = _check_disk(z)
    return _scalar_or_array(z / (1 - z) ** 2)


def koebe_inv(v):
    """Branch of the inverse Koebe function with values in the unit disk.

    Solves ``v w^2 - (2v + 1) w + v = 0``; the two roots have product 1, and
    for ``v`` off the slit ``(-inf, -1/4]`` exactly one lies inside the disk.
    """
    v = np.asarray(v, dtype=complex)
    s = np.sqrt(4 * v + 1)
    p = 2 * v + 1
    with np.errstate(divide="ignore", invalid="ignore"):
        r_plus = 2 * v / (p + s)
        r_minus = 2 * v / (p - s)
    w = np.where(np.abs(r_plus) <= np.abs(r_minus), r_plus, r_minus)
    w = np.where(v == 0, 0.0, w)
    if np.any(~(np.abs(w) < 1)):
        raise DomainError("value on the omitted slit of the Koebe function")
    return _scalar_or_array(w)


def pick(alpha, z):
    """Pick function ``koebe_inv(alpha * koebe(z))``, 0 < alpha <= 1.

    Maps the disk onto the disk minus a radial slit ending at -1.
    """
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1]")
    return koebe_inv(alpha * np.asarray(koebe(z)))
