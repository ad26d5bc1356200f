"""Slow (Whitham) dynamics of the elliptic ansatz.

   PI: the coefficient F1 of det A1 drifts as D_X F1 = -2*ybar, where
   ybar is the average of y = 2p(x; -X, -F1/4) over its real
   oscillation.

   PVI: at frozen (X, F6) the constraint a*p^2 + b(y)*p + c(y) = 0 in
   (p = y', y) is a genus-one curve. Averages over its real oval are
   taken with the uniformizing differential dy/sqrt(b^2 - 4ac), i.e. in
   the time of the flow y_tt = D'(y)/2, D = b^2 - 4ac, and feed the
   modulation equation for F6 (curve convention throughout)."""
import math, logging, functools
from collections import namedtuple
import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate
from .util import NumericalStop, poly_scale, write_csv
from . import elliptic
from .painleve import OdeState, march, sing_guard
from .laxpair import ux_from_state
logger = logging.getLogger(__name__)

ROOT_TOL = 1e-10
COLLAPSE_WIDTH = 1e-10
PIN_TOL = 1e-6
IMAG_TOL = 1e-7
DEGENERACY_TOL = 1e-8
X_GUARD = 1e-3
QUAD_OPTS = dict(epsabs=0.0, epsrel=1e-12, limit=200)
FD_STEP = np.finfo(float).eps**(1.0/3.0)

ModulationState = namedtuple('ModulationState', 'bigX F')
CycleAverages = namedtuple('CycleAverages', 'ybar y2bar period lower upper '
                                            'degenerate')
BranchPoints = namedtuple('BranchPoints', 'roots ovals')


class NoCycleError(NumericalStop, ValueError):
    reason = 'no-cycle'


class ImplicitDegeneracyError(NumericalStop):
    reason = 'implicit-degeneracy'


class SingularXError(NumericalStop):
    reason = 'singular-x'


@functools.lru_cache(maxsize=None)
def pi_mean_sign():
    """+1 when mean_wp agrees with the quadrature of 2p over a period, -1
       when it agrees with its negation. Fixed once per process."""
    closed = elliptic.mean_wp(4.0, 0.0)
    quad = elliptic.mean_wp_quadrature(4.0, 0.0)
    if abs(closed - quad) <= 1e-8*abs(quad):
        return 1.0
    if abs(closed + quad) <= 1e-8*abs(quad):
        logger.warning('closed-form mean has the opposite sign')
        return -1.0
    raise AssertionError('closed-form mean %r disagrees with quadrature %r'
                         % (closed, quad))


def pi_invariants(state):
    """(g2, g3) = (-X, -F1/4) of the frozen PI oscillation"""
    return -state.bigX, -0.25*state.F


def pi_modulation_rhs(state):
    g2, g3 = pi_invariants(state)
    return -2.0*pi_mean_sign()*elliptic.mean_wp(g2, g3)


class PIModulationSystem(object):
    kind = 'pi-whitham'

    def __init__(self, rhs=None):
        self.rhs = rhs or pi_modulation_rhs

    def derivative(self, X, vec):
        return np.array([self.rhs(ModulationState(X, vec[0]))])

    def check(self, X, vec):
        if not np.all(np.isfinite(vec)):
            return 'regime-exit'
        g2, g3 = pi_invariants(ModulationState(X, vec[0]))
        cubic = elliptic.solve_depressed_cubic(g2, g3)
        if not cubic.real or cubic.roots[0] == cubic.roots[2]:
            return 'regime-exit'
        return None

    def averages(self, X, F):
        g2, g3 = pi_invariants(ModulationState(X, F))
        return elliptic.wp_cycle_moments(g2, g3)


class ModulationTrajectory(object):
    """Accepted (X, F) points of a modulation solve, with the cycle
       averages at each of them"""
    def __init__(self, system, result):
        self.system = system
        self.Xs = result.xs
        self.Fs = result.vecs[:, 0]
        self.stop_reason = result.stop_reason
        self.message = result.message
        self._solution = result.solution()
        records = getattr(system, 'records', None)
        if records is not None and len(records) == len(self.Xs):
            self.rows = list(records)
        else:
            self.rows = [self._averages(X, F) for X, F in zip(self.Xs,
                                                                self.Fs)]

    def _averages(self, X, F):
        try:
            return tuple(self.system.averages(X, F))
        except (NumericalStop, ValueError) as err:
            logger.debug('no averages at X=%r F=%r: %s', X, F, err)
            return (math.nan, math.nan, math.nan)

    def __len__(self):
        return len(self.Xs)

    @property
    def final(self):
        return ModulationState(self.Xs[-1], self.Fs[-1])

    def F_at(self, X):
        if self._solution is None:
            return self.Fs[0]
        return float(self._solution(X)[0])

    def to_csv(self, f):
        n = len(self.Xs)
        write_csv(f, ['X', 'F', 'ybar', 'y2bar', 'period', 'stop_reason'],
                  ((X, F) + tuple(row[:3]) +
                   ((self.stop_reason if i == n - 1 else ''),)
                   for i, (X, F, row) in enumerate(zip(self.Xs, self.Fs,
                                                       self.rows))))


def solve_pi_whitham(initial, X_end, rtol=1e-10, atol=1e-12, rhs=None,
                     method='DOP853'):
    """Integrate D_X F1 = -2*ybar from initial (a ModulationState).
       rhs replaces the right-hand side (used to test the plumbing)."""
    system = PIModulationSystem(rhs)
    result = march(system, initial.bigX, [initial.F], X_end, rtol=rtol,
                   atol=atol, method=method)
    return ModulationTrajectory(system, result)


class QuarticCurve(object):
    """a*p^2 + b(y)*p + c(y) = 0, the genus-one constraint at frozen
       (X, F6), F6 in curve convention"""
    def __init__(self, X, F6, params):
        if X == 0.0 or X == 1.0:
            raise ValueError('X must avoid 0 and 1')
        self.X, self.F6, self.params = X, F6, params
        th0, th1, thx = params.thetas
        k1, k2 = params.k1, params.k2
        s = k1 + k2
        C = (X + 1.0)*s + X*thx + th1
        S = (C*C - 1.0 - 2.0*X*th0*s + 4.0*k1*k2*(X*X + X + 1.0)
             + 4.0*X*(X + 1.0)*(1.0 - k2)*thx + 4.0*(X + 1.0)*F6)
        self.a = X*X*(X - 1.0)**2
        self.b = Polynomial([0.0, 2.0*X*(X - 1.0), -2.0*X*(X - 1.0)])
        self.c = Polynomial([
            -X*X*th0*th0,
            2.0*X*(2.0*k1*k2*(X + 1.0) + 2.0*X*thx*(1.0 - k2) + 2.0*F6
                   - th0*C),
            -S,
            2.0*(s*C - 1.0 + 2.0*X*thx*(1.0 - k2) + 2.0*F6),
            1.0 - (k1 - k2)**2])
        self.discriminant = (self.b**2 - 4.0*self.a*self.c).trim()

    def __call__(self, y, p):
        return self.a*p*p + self.b(y)*p + self.c(y)

    def slopes(self, y):
        """Both sheets p(y) over a point where the discriminant is >= 0"""
        root = math.sqrt(max(0.0, self.discriminant(y)))
        b = self.b(y)
        return (-b - root)/(2.0*self.a), (-b + root)/(2.0*self.a)

    def __repr__(self):
        return 'QuarticCurve(X=%r, F6=%r, %r)' % (self.X, self.F6,
                                                  self.params)


def build_curve(X, F6, params):
    return QuarticCurve(X, F6, params)


def _polish_root(poly, deriv, r):
    best = abs(poly(r))
    for _ in range(4):
        d = deriv(r)
        if d == 0.0:
            break
        cand = r - poly(r)/d
        val = abs(poly(cand))
        if val >= best:
            break
        r, best = cand, val
    return r


def branch_points(curve):
    """Real roots of the discriminant, ascending, and the bounded
       intervals between consecutive roots on which it is positive"""
    disc = curve.discriminant
    coefs = disc.coef
    if not np.all(np.isfinite(coefs)):
        raise NoCycleError('non-finite discriminant at X=%r F6=%r' %
                           (curve.X, curve.F6), X=curve.X, F6=curve.F6)
    deriv = disc.deriv()
    roots = []
    for z in disc.roots():
        if abs(z.imag) > IMAG_TOL*max(1.0, abs(z.real)):
            continue
        r = _polish_root(disc, deriv, float(z.real))
        if abs(disc(r)) > ROOT_TOL*poly_scale(coefs, r):
            logger.warning('branch point %r keeps residual %r', r, disc(r))
        roots.append(r)
    roots.sort()
    ovals = [(lo, hi) for lo, hi in zip(roots, roots[1:])
             if hi > lo and disc(0.5*(lo + hi)) > 0.0]
    if not ovals:
        raise NoCycleError('no real oval at X=%r F6=%r' %
                           (curve.X, curve.F6), X=curve.X, F6=curve.F6)
    logger.debug('branch points %r, ovals %r', roots, ovals)
    return BranchPoints(roots, ovals)


def select_oval(bp, y_hint=None):
    """The oval containing y_hint, else the nearest one to it, else the
       rightmost"""
    if y_hint is None:
        return bp.ovals[-1]
    for lo, hi in bp.ovals:
        if lo <= y_hint <= hi:
            return (lo, hi)
    return min(bp.ovals, key=lambda o: min(abs(o[0] - y_hint),
                                           abs(o[1] - y_hint)))


def select_cycle(bp, y_hint=None):
    """select_oval, except that a hint sitting on a branch point outside
       every oval pins the cycle to that point, returned as (r, r)"""
    if y_hint is not None and not any(lo <= y_hint <= hi
                                      for lo, hi in bp.ovals):
        for r in bp.roots:
            if abs(r - y_hint) <= PIN_TOL*max(1.0, abs(r)):
                return (r, r)
    return select_oval(bp, y_hint)


def rescale_hint(y_hint, X_from, X_to):
    """Carry a hint from X_from to X_to at fixed y/X"""
    if y_hint is None or X_from is None:
        return y_hint
    return y_hint*X_to/X_from


class _OvalMeasure(object):
    """y = lo + (hi - lo)*sin(phi)^2 on [0, pi/2] with the weight
       2/sqrt(-q(y)), q = D/((y - lo)(y - hi)), so that weight*dphi is
       dy/sqrt(D)"""
    def __init__(self, curve, lo, hi):
        self.curve, self.lo, self.hi = curve, lo, hi
        self.width = hi - lo
        q, _ = divmod(curve.discriminant,
                      Polynomial([lo*hi, -(lo + hi), 1.0]))
        self.q = q

    def y(self, phi):
        return self.lo + self.width*math.sin(phi)**2

    def weight(self, phi):
        return 2.0/math.sqrt(max(-self.q(self.y(phi)), 1e-300))

    def sqrt_disc(self, phi):
        """sqrt(D) at y(phi) without cancellation at the endpoints"""
        s, c = math.sin(phi), math.cos(phi)
        return self.width*s*c*math.sqrt(max(-self.q(self.y(phi)), 0.0))

    def integral(self, func):
        return integrate.quad(lambda phi: func(phi)*self.weight(phi),
                              0.0, 0.5*math.pi, **QUAD_OPTS)[0]


def cycle_averages(curve, oval=None, y_hint=None):
    """ybar, y2bar and the period over the selected cycle. A cycle
       pinned to a branch point r gives r, r^2 and an infinite period."""
    if oval is None:
        oval = select_cycle(branch_points(curve), y_hint)
    lo, hi = oval
    if lo == hi:
        return CycleAverages(hi, hi*hi, math.inf, lo, hi, True)
    measure = _OvalMeasure(curve, lo, hi)
    if measure.width < COLLAPSE_WIDTH:
        q = -measure.q(hi)
        period = 2.0*math.pi/math.sqrt(q) if q > 0.0 else math.inf
        logger.info('oval [%r, %r] collapsed', lo, hi)
        return CycleAverages(hi, hi*hi, period, lo, hi, True)
    half = measure.integral(lambda phi: 1.0)
    ybar = measure.integral(measure.y)/half
    y2bar = measure.integral(lambda phi: measure.y(phi)**2)/half
    # the variance can round below zero on very thin ovals
    y2bar = max(y2bar, ybar*ybar)
    return CycleAverages(ybar, y2bar, 2.0*half, lo, hi, False)


def cycle_average(curve, func, oval=None, y_hint=None):
    """Average of func(y, p) over the cycle, both sheets p-/p+ weighted
       equally. On a pinned cycle the sheets meet at p = -b/(2a)."""
    if oval is None:
        oval = select_cycle(branch_points(curve), y_hint)
    a = curve.a
    if oval[0] == oval[1]:
        y = oval[0]
        return func(y, -curve.b(y)/(2.0*a))
    measure = _OvalMeasure(curve, *oval)

    def sheets(phi):
        y = measure.y(phi)
        b, root = curve.b(y), measure.sqrt_disc(phi)
        return 0.5*(func(y, (-b - root)/(2.0*a)) +
                    func(y, (-b + root)/(2.0*a)))

    return measure.integral(sheets)/measure.integral(lambda phi: 1.0)


def modulation_equation(X, F6, ybar, y2bar, dybar, params):
    """The modulation equation for F6 with D_X ybar supplied"""
    k1, k2 = params.k1, params.k2
    th0, th1, thx = params.thetas
    dk = k2 - k1
    S = (0.5*dk*(X*(dk - thx) + th0 + thx + 1.0)
         - X*(2.0*k1*k2 + thx) - k2*(k1 + k2 + th1) - F6)
    bracket = (th0*dk + 2.0*X*(2.0*k1*k2 + thx) + 2.0*k2*(k1 + k2 + th1)
               + 2.0*F6)
    return (0.5*(k1 - k2)*dybar
            + dk*(dk + 1.0)/(2.0*X*(X - 1.0))*y2bar
            + ybar/(X*(X - 1.0))*S
            + bracket/(2.0*(X - 1.0))
            - k2*thx - 2.0*k1*k2)


def _ybar(X, F6, params, y_hint):
    curve = build_curve(X, F6, params)
    return cycle_averages(curve, y_hint=y_hint)


def pvi_modulation_rhs(state, params, form='implicit', y_hint=None):
    """D_X F6 at (X, F6). form='implicit' resolves the implicit dependence
       of the modulation equation on D_X ybar by central differences of
       ybar in X and F6; form='residue' averages u_x over the cycle."""
    X, F = state
    if not (math.isfinite(X) and math.isfinite(F)):
        raise NoCycleError('non-finite state X=%r F6=%r' % (X, F), X=X, F6=F)
    if form == 'residue':
        if params.thetainf == 0.0:
            return -params.thetax - 2.0*params.k1*params.k2
        curve = build_curve(X, F, params)
        oval = select_cycle(branch_points(curve), y_hint)
        if oval[0] == oval[1] and abs(oval[0] - X) <= sing_guard(X):
            # u_x carries the factor y - x
            ubar = 0.0
        else:
            ubar = cycle_average(
                curve, lambda y, p: ux_from_state(OdeState(X, y, p), params,
                                                  guard=False), oval=oval)
        return (params.k1 - params.k2)*ubar - params.thetax - \
            2.0*params.k1*params.k2
    if form != 'implicit':
        raise ValueError('unknown modulation form %r' % form)
    avg = _ybar(X, F, params, y_hint)
    hint = avg.ybar
    hX = FD_STEP*max(1.0, abs(X))
    hF = FD_STEP*max(1.0, abs(F))
    dX = (_ybar(X + hX, F, params, rescale_hint(hint, X, X + hX)).ybar -
          _ybar(X - hX, F, params, rescale_hint(hint, X, X - hX)).ybar)/(2.0*hX)
    dF = (_ybar(X, F + hF, params, hint).ybar -
          _ybar(X, F - hF, params, hint).ybar)/(2.0*hF)
    coef = 0.5*(params.k1 - params.k2)
    rest = modulation_equation(X, F, avg.ybar, avg.y2bar, 0.0, params)
    denom = 1.0 - coef*dF
    if abs(denom) < DEGENERACY_TOL:
        raise ImplicitDegeneracyError('1 - (k1-k2)/2 * dybar/dF6 = %r' % denom,
                                      X=X, F6=F)
    return (coef*dX + rest)/denom


class PVIModulationSystem(object):
    """The F6 modulation as a first-order system. The cycle is tracked
       through a hint on y, carried between accepted steps at fixed y/X,
       and the cycle averages are recorded at every accepted step."""
    kind = 'pvi-whitham'

    def __init__(self, params, form='implicit', x_guard=X_GUARD, y_hint=None):
        self.params = params
        self.form = form
        self.x_guard = x_guard
        self.y_hint = y_hint
        self.hint_X = None
        self.records = []

    def singular_x(self, X):
        """X inside the guard band around 0 and 1, or on the other side of
           one of them from the last accepted X"""
        if min(abs(X), abs(X - 1.0)) < self.x_guard*max(1.0, abs(X)):
            return True
        last = self.hint_X
        return last is not None and (
            np.sign(X) != np.sign(last) or
            np.sign(X - 1.0) != np.sign(last - 1.0))

    def hint_at(self, X):
        return rescale_hint(self.y_hint, self.hint_X, X)

    def derivative(self, X, vec):
        if self.singular_x(X):
            raise SingularXError('X=%r reaches 0 or 1 from %r'
                                 % (X, self.hint_X), X=X)
        return np.array([pvi_modulation_rhs(ModulationState(X, vec[0]),
                                            self.params, self.form,
                                            self.hint_at(X))])

    def check(self, X, vec):
        reason = self._check(X, vec)
        if reason is not None:
            self.records.append((math.nan, math.nan, math.nan))
        return reason

    def _check(self, X, vec):
        if not np.all(np.isfinite(vec)):
            return 'no-cycle'
        if self.singular_x(X):
            return 'singular-x'
        curve = build_curve(X, vec[0], self.params)
        try:
            bp = branch_points(curve)
        except NoCycleError:
            return 'no-cycle'
        lo, hi = select_cycle(bp, self.hint_at(X))
        if lo != hi and hi - lo < COLLAPSE_WIDTH:
            return 'oval-collapse'
        try:
            avg = cycle_averages(curve, oval=(lo, hi))
            row = (avg.ybar, avg.y2bar, avg.period)
        except (NumericalStop, ValueError) as err:
            logger.debug('no averages at X=%r: %s', X, err)
            row = (math.nan, math.nan, math.nan)
        self.records.append(row)
        self.y_hint = 0.5*(lo + hi)
        self.hint_X = X
        return None


def solve_pvi_whitham(initial, params, X_end, rtol=1e-8, atol=1e-10,
                      form='implicit', x_guard=X_GUARD, y_hint=None,
                      method='DOP853', max_step=np.inf):
    """Integrate the F6 modulation from initial. y_hint picks the cycle;
       a hint on a branch point outside every oval pins it there."""
    system = PVIModulationSystem(params, form, x_guard, y_hint)
    result = march(system, initial.bigX, [initial.F], X_end, rtol=rtol,
                   atol=atol, method=method, max_step=max_step)
    return ModulationTrajectory(system, result)
