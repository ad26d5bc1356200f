"""Elliptic-function kernel: roots of the Weierstrass cubic, complete
   elliptic integrals by the arithmetic-geometric mean, the real-argument
   Weierstrass p-function and its average over the real oscillation.

   Everything here is restricted to real invariants g2, g3 with three
   real roots e1 >= e2 >= e3 of 4t^3 - g2*t - g3."""
import math, logging
from collections import namedtuple
import numpy as np
from scipy import integrate
from .util import NumericalStop
logger = logging.getLogger(__name__)

POLE_GUARD = 1e-6       # fraction of the real period
SERIES_RADIUS = 0.25    # |tau|*scale below which the Laurent series is summed
SERIES_TERMS = 60
AGM_MAXITER = 64


class EllipticDomainError(ValueError):
    pass


class UnsupportedRegimeError(NumericalStop, ValueError):
    """The cubic has a complex pair of roots; the oscillatory ansatz
       needs three real ones."""
    reason = 'regime-exit'


class PoleProximityError(NumericalStop):
    reason = 'pole'

    def __init__(self, message, distance):
        NumericalStop.__init__(self, message, distance=distance)
        self.distance = distance


CubicRoots = namedtuple('CubicRoots', 'real roots')
CubicRoots.__doc__ = """Roots of 4t^3 - g2*t - g3. When real is True, roots
are three floats sorted descending; otherwise (real root, z, conj(z))."""


def _cubic(t, g2, g3):
    return 4.0*t**3 - g2*t - g3


def _polish(t, g2, g3):
    """Newton-polish a root, keeping the iterate only while the residual
       decreases (double roots have a vanishing derivative)."""
    best = abs(_cubic(t, g2, g3))
    for _ in range(3):
        deriv = 12.0*t*t - g2
        if deriv == 0.0:
            break
        cand = t - _cubic(t, g2, g3)/deriv
        res = abs(_cubic(cand, g2, g3))
        if res >= best:
            break
        t, best = cand, res
    return t


def solve_depressed_cubic(g2, g3):
    """Roots of the Weierstrass cubic 4t^3 - g2*t - g3.

       The three-real-roots case uses the trigonometric form and returns
       the roots sorted descending; a negative discriminant
       g2^3 - 27*g3^2 is reported as CubicRoots(real=False, ...)."""
    g2, g3 = float(g2), float(g3)
    if g2 == 0.0 and g3 == 0.0:
        return CubicRoots(True, (0.0, 0.0, 0.0))
    disc = g2**3 - 27.0*g3**2
    tol = 1e-13*max(abs(g2)**3, 27.0*g3**2)
    if disc < -tol or g2 <= 0.0:
        zs = np.roots([4.0, 0.0, -g2, -g3])
        idx = int(np.argmin(np.abs(zs.imag)))
        pair = sorted((complex(zs[i]) for i in range(3) if i != idx),
                      key=lambda z: z.imag, reverse=True)
        real = _polish(float(zs[idx].real), g2, g3)
        return CubicRoots(False, (real,) + tuple(pair))
    r = math.sqrt(g2/12.0)
    arg = 3.0*math.sqrt(3.0)*g3/g2**1.5
    phi = math.acos(min(1.0, max(-1.0, arg)))/3.0
    roots = [2.0*r*math.cos(phi - 2.0*math.pi*k/3.0) for k in range(3)]
    roots = sorted((_polish(t, g2, g3) for t in roots), reverse=True)
    return CubicRoots(True, tuple(roots))


def _check_ksq(ksq, upper_open):
    if not (ksq >= 0.0) or ksq > 1.0 or (upper_open and ksq == 1.0):
        raise EllipticDomainError('modulus squared %r outside %s' %
                                  (ksq, '[0, 1)' if upper_open else '[0, 1]'))


def complete_K(ksq):
    """K(k) = int_0^1 dz / sqrt((1-z^2)(1-k^2 z^2)), by the AGM"""
    ksq = float(ksq)
    _check_ksq(ksq, True)
    a, b = 1.0, math.sqrt(1.0 - ksq)
    for _ in range(AGM_MAXITER):
        if abs(a - b) <= 1e-15*a:
            break
        a, b = 0.5*(a + b), math.sqrt(a*b)
    return math.pi/(2.0*a)


def complete_E(ksq):
    """E(k) = int_0^1 sqrt((1-k^2 z^2)/(1-z^2)) dz, by the AGM with the
       Legendre sum of squared half-differences."""
    ksq = float(ksq)
    _check_ksq(ksq, False)
    if ksq == 1.0:
        return 1.0
    a, b = 1.0, math.sqrt(1.0 - ksq)
    total, weight = 0.5*ksq, 0.5
    for _ in range(AGM_MAXITER):
        if abs(a - b) <= 1e-15*a:
            break
        c = 0.5*(a - b)
        a, b = 0.5*(a + b), math.sqrt(a*b)
        weight *= 2.0
        total += weight*c*c
    return math.pi/(2.0*a)*(1.0 - total)


class WeierstrassData(object):
    """Invariants, ordered real roots, modulus and complete integrals of
       a Weierstrass cubic in the three-real-roots regime."""
    def __init__(self, g2, g3, e1, e2, e3):
        self.g2, self.g3 = g2, g3
        self.e1, self.e2, self.e3 = e1, e2, e3
        spread = e1 - e3
        if spread > 0.0:
            self.ksq = min(1.0, max(0.0, (e2 - e3)/spread))
        else:
            self.ksq = 0.0  # triple root
        self.bigK = complete_K(self.ksq) if self.ksq < 1.0 else math.inf
        self.bigE = complete_E(self.ksq)

    @staticmethod
    def from_invariants(g2, g3):
        cubic = solve_depressed_cubic(g2, g3)
        if not cubic.real:
            raise UnsupportedRegimeError(
                'complex roots for g2=%r g3=%r' % (g2, g3), g2=g2, g3=g3)
        return WeierstrassData(float(g2), float(g3), *cubic.roots)

    @property
    def roots(self):
        return (self.e1, self.e2, self.e3)

    @property
    def scale(self):
        return max(1.0, abs(self.g2), abs(self.g3))

    @property
    def half_period(self):
        """Real half-period omega = K/sqrt(e1 - e3)"""
        spread = self.e1 - self.e3
        if spread <= 0.0 or math.isinf(self.bigK):
            return math.inf
        return self.bigK/math.sqrt(spread)

    def __repr__(self):
        return ('WeierstrassData(g2=%r, g3=%r, e=(%r, %r, %r), ksq=%r)' %
                (self.g2, self.g3, self.e1, self.e2, self.e3, self.ksq))


def weierstrass_data(g2, g3):
    return WeierstrassData.from_invariants(g2, g3)


def real_half_period(g2, g3):
    return weierstrass_data(g2, g3).half_period


def _laurent_coefficients(g2, g3, count):
    """c_2..c_count of p(z) = z^-2 + sum c_k z^(2k-2)"""
    c = [0.0]*(count + 1)
    c[2] = g2/20.0
    if count >= 3:
        c[3] = g3/28.0
    for k in range(4, count + 1):
        acc = sum(c[m]*c[k - m] for m in range(2, k - 1))
        c[k] = 3.0*acc/((2*k + 1)*(k - 3))
    return c


def _laurent(z, g2, g3):
    c = _laurent_coefficients(g2, g3, SERIES_TERMS)
    p, dp = 1.0/(z*z), -2.0/z**3
    for k in range(2, SERIES_TERMS + 1):
        term = c[k]*z**(2*k - 2)
        p += term
        dp += (2*k - 2)*c[k]*z**(2*k - 3)
        if abs(term) < 1e-17*abs(p):
            break
    return p, dp


def _wp_pair(tau, g2, g3):
    data = weierstrass_data(g2, g3)
    scale = max(abs(g2)**0.25, abs(g3)**(1.0/6.0))
    omega = data.half_period
    t, sign = float(tau), 1.0
    if math.isinf(omega):
        if t < 0.0:
            t, sign = -t, -1.0
        guard = POLE_GUARD/scale if scale > 0.0 else 0.0
    else:
        period = 2.0*omega
        t = math.fmod(t, period)
        if t < 0.0:
            t += period
        if t > omega:
            t, sign = period - t, -1.0
        guard = POLE_GUARD*period
    if t <= guard:
        raise PoleProximityError('tau=%r within %r of a lattice point' %
                                 (tau, t), t)
    if scale == 0.0:
        return 1.0/(t*t), sign*(-2.0/t**3)
    halvings = 0
    z = t
    while z*scale > SERIES_RADIUS:
        z *= 0.5
        halvings += 1
    p, dp = _laurent(z, g2, g3)
    for _ in range(halvings):
        ddp = 6.0*p*p - 0.5*g2
        q = ddp/(2.0*dp)
        dq = (12.0*p*dp*dp - ddp*ddp)/(2.0*dp*dp)
        p, dp = -2.0*p + q*q, -dp + q*dq
    logger.debug('wp(%r) via %d duplications: %r', tau, halvings, p)
    return p, sign*dp


def weierstrass_p(tau, g2, g3):
    """p(tau; g2, g3) for real tau, by the Laurent series at a reduced
       argument followed by repeated duplication."""
    return _wp_pair(tau, g2, g3)[0]


def weierstrass_p_prime(tau, g2, g3):
    return _wp_pair(tau, g2, g3)[1]


def mean_wp(g2, g3):
    """m = 2*e1 + 2*(e3 - e1)*E/K, the average of 2p over its bounded
       real oscillation e3 <= p <= e2. The sign of the PI modulation
       right-hand side is applied by the caller."""
    data = weierstrass_data(g2, g3)
    e1, e3 = data.e1, data.e3
    if e1 == e3:
        return 2.0*e1
    ratio = 0.0 if math.isinf(data.bigK) else data.bigE/data.bigK
    return 2.0*e1 + 2.0*(e3 - e1)*ratio


def wp_cycle_moments(g2, g3):
    """(mean of 2p, mean of (2p)^2, real period) over the bounded real
       oscillation, by adaptive quadrature in the angle
       p = e3 + (e2 - e3)*sin(phi)^2, which removes the endpoint
       singularities of dt = dp/sqrt(4p^3 - g2*p - g3)."""
    data = weierstrass_data(g2, g3)
    e1, e2, e3 = data.roots
    width = e2 - e3
    if width <= 0.0:
        # small oscillations about the centre p = e3
        period = math.pi/math.sqrt(e1 - e3) if e1 > e3 else math.inf
        return 2.0*e3, 4.0*e3*e3, period
    if e1 == e2:
        raise EllipticDomainError('separatrix: e1 == e2 has no finite period')

    def wp(phi):
        return e3 + width*math.sin(phi)**2

    def weight(phi):
        return 1.0/math.sqrt(e1 - wp(phi))

    opts = dict(epsabs=0.0, epsrel=1e-13, limit=200)
    den = integrate.quad(weight, 0.0, 0.5*math.pi, **opts)[0]
    first = integrate.quad(lambda f: wp(f)*weight(f), 0.0, 0.5*math.pi,
                           **opts)[0]
    second = integrate.quad(lambda f: wp(f)**2*weight(f), 0.0, 0.5*math.pi,
                            **opts)[0]
    # dt = dp/(2*sqrt((e1-p)(p-e2)(p-e3))) = dphi/sqrt(e1-p); two sweeps
    period = 2.0*den
    return 2.0*first/den, 4.0*second/den, period


def mean_wp_quadrature(g2, g3):
    """Quadrature counterpart of mean_wp"""
    return wp_cycle_moments(g2, g3)[0]
