"""Right-hand sides and adaptive integration for the first Painleve
   equation, in the normalization y'' = 3y^2 + X (not the common
   6y^2 + x), and for the sixth Painleve equation.

   Trajectories are stepped with an embedded Runge-Kutta pair from
   scipy.integrate and keep the per-step dense output, so callers can
   evaluate the solution at arbitrary x inside the integrated range."""
import math, logging
from collections import namedtuple
import numpy as np
from scipy.integrate import DOP853, RK45, OdeSolution
from .util import NumericalStop, write_csv
logger = logging.getLogger(__name__)

POLE_THRESHOLD = 1e8
SING_GUARD_REL = 1e-8
METHODS = {'DOP853': DOP853, 'RK45': RK45}

OdeState = namedtuple('OdeState', 'x y dy')


def sing_guard(x):
    return SING_GUARD_REL*max(1.0, abs(x))


class SingularityError(NumericalStop):
    reason = 'singularity'

    def __init__(self, message, distance):
        NumericalStop.__init__(self, message, distance=distance)
        self.distance = distance


class ThetaParams(object):
    """The PVI monodromy exponents and everything derived from them:
       k1 + k2 = -(theta0 + theta1 + thetax), k1 - k2 = thetainf and
       the coefficients alpha, beta, gamma, delta of the equation."""
    def __init__(self, theta0, theta1, thetax, thetainf):
        self.theta0 = float(theta0)
        self.theta1 = float(theta1)
        self.thetax = float(thetax)
        self.thetainf = float(thetainf)
        ksum = -(self.theta0 + self.theta1 + self.thetax)
        self.k1 = 0.5*(ksum + self.thetainf)
        self.k2 = 0.5*(ksum - self.thetainf)
        self.alpha = 0.5*(self.thetainf - 1.0)**2
        self.beta = -0.5*self.theta0**2
        self.gamma = 0.5*self.theta1**2
        self.delta = 0.5*(1.0 - self.thetax**2)

    @staticmethod
    def from_k(theta0, theta1, thetax, k1, k2, tol=1e-12):
        """Build from the diagonal of A-infinity. k1 + k2 must match
           the theta's to tol."""
        ksum = -(theta0 + theta1 + thetax)
        if abs(k1 + k2 - ksum) > tol*max(1.0, abs(ksum)):
            raise ValueError('k1 + k2 = %r but -(theta0+theta1+thetax) = %r'
                             % (k1 + k2, ksum))
        return ThetaParams(theta0, theta1, thetax, k1 - k2)

    @property
    def thetas(self):
        return (self.theta0, self.theta1, self.thetax)

    def as_dict(self):
        return dict((name, getattr(self, name)) for name in
                    ('theta0', 'theta1', 'thetax', 'thetainf', 'k1', 'k2',
                     'alpha', 'beta', 'gamma', 'delta'))

    def __repr__(self):
        return 'ThetaParams(%r, %r, %r, %r)' % (self.theta0, self.theta1,
                                                self.thetax, self.thetainf)


def pi_rhs(state, bigX):
    return 3.0*state.y**2 + bigX


def pi_first_integral(state, bigX):
    """F1 = y'^2 - 2y^3 - 2yX, conserved when X is frozen"""
    return state.dy**2 - 2.0*state.y**3 - 2.0*state.y*bigX


def pvi_distance(x, y):
    """Distance of (x, y) to the fixed singular set of PVI"""
    return min(abs(x), abs(x - 1.0), abs(y), abs(y - 1.0), abs(y - x))


def pvi_rhs(state, params):
    x, y, dy = state
    dist = pvi_distance(x, y)
    if dist < sing_guard(x):
        raise SingularityError('PVI singular at x=%r y=%r' % (x, y), dist)
    ym1, yx = y - 1.0, y - x
    xm1 = x - 1.0
    return (0.5*(1.0/y + 1.0/ym1 + 1.0/yx)*dy*dy
            - (1.0/x + 1.0/xm1 + 1.0/yx)*dy
            + y*ym1*yx/(x*x*xm1*xm1)*(params.alpha
                                      + params.beta*x/(y*y)
                                      + params.gamma*xm1/(ym1*ym1)
                                      + params.delta*x*xm1/(yx*yx)))


class PISystem(object):
    """y'' = 3y^2 + X as a first-order system. X follows x unless it is
       frozen at a constant."""
    kind = 'pi'

    def __init__(self, frozen_X=None):
        self.frozen_X = frozen_X

    def bigX(self, x):
        return x if self.frozen_X is None else self.frozen_X

    def initial_vector(self, state):
        return np.array([state.y, state.dy], float)

    def derivative(self, x, vec):
        state = OdeState(x, vec[0], vec[1])
        return np.array([vec[1], pi_rhs(state, self.bigX(x))])

    def check(self, x, vec):
        if not np.all(np.isfinite(vec)) or abs(vec[0]) >= POLE_THRESHOLD:
            return 'pole'
        return None


class PVISystem(object):
    kind = 'pvi'

    def __init__(self, params):
        self.params = params

    def initial_vector(self, state):
        return np.array([state.y, state.dy], float)

    def derivative(self, x, vec):
        y, dy = vec[0], vec[1]
        return np.array([dy, pvi_rhs(OdeState(x, y, dy), self.params)])

    def check(self, x, vec):
        if not np.all(np.isfinite(vec)) or abs(vec[0]) >= POLE_THRESHOLD:
            return 'pole'
        if pvi_distance(x, vec[0]) < sing_guard(x):
            return 'singularity'
        return None


class March(object):
    """Raw result of stepping a system: accepted points, the dense
       output of every step and the reason the loop ended."""
    def __init__(self, xs, vecs, interpolants, stop_reason, message=None):
        self.xs = np.asarray(xs, float)
        self.vecs = np.asarray(vecs, float)
        self.interpolants = interpolants
        self.stop_reason = stop_reason
        self.message = message

    def solution(self):
        if not self.interpolants:
            return None
        return OdeSolution(self.xs, self.interpolants)


def march(system, x0, vec0, x_end, rtol=1e-10, atol=1e-12, method='DOP853',
          max_step=np.inf):
    """Step system from (x0, vec0) towards x_end, stopping early when
       system.check() returns a tag or a NumericalStop is raised while
       evaluating the right-hand side."""
    try:
        solver_cls = METHODS[method]
    except KeyError:
        raise ValueError('unknown method %r' % method)
    vec0 = np.asarray(vec0, float)
    xs, vecs, interps = [x0], [vec0.copy()], []
    reason = system.check(x0, vec0)
    if reason is not None:
        return March(xs, vecs, interps, reason, 'initial state rejected')
    if x_end == x0:
        return March(xs, vecs, interps, 'completed')
    try:
        solver = solver_cls(system.derivative, x0, vec0, x_end, rtol=rtol,
                            atol=atol, max_step=max_step)
    except NumericalStop as err:
        return March(xs, vecs, interps, err.reason, str(err))
    message = None
    while solver.status == 'running':
        try:
            message = solver.step()
        except NumericalStop as err:
            reason, message = err.reason, str(err)
            break
        if solver.status == 'failed':
            reason = 'step-underflow'
            break
        xs.append(solver.t)
        vecs.append(solver.y.copy())
        interps.append(solver.dense_output())
        logger.debug('step to x=%r h=%r', solver.t, solver.step_size)
        reason = system.check(solver.t, solver.y)
        if reason is not None:
            break
    if reason is None:
        reason = 'completed'
    logger.info('march %s from %r to %r: %s after %d steps', system.kind,
                x0, xs[-1], reason, len(xs) - 1)
    return March(xs, vecs, interps, reason, message)


class Trajectory(object):
    """Accepted integrator states plus dense output along them"""
    def __init__(self, system, result):
        self.system = system
        self.xs = result.xs
        self.vecs = result.vecs
        self.stop_reason = result.stop_reason
        self.message = result.message
        self._solution = result.solution()

    def __len__(self):
        return len(self.xs)

    @property
    def completed(self):
        return self.stop_reason == 'completed'

    @property
    def x_range(self):
        return (min(self.xs[0], self.xs[-1]), max(self.xs[0], self.xs[-1]))

    def states(self):
        return [OdeState(x, v[0], v[1]) for x, v in zip(self.xs, self.vecs)]

    @property
    def final(self):
        return OdeState(self.xs[-1], self.vecs[-1][0], self.vecs[-1][1])

    def __call__(self, x):
        """Full state vector at x from the dense output"""
        lo, hi = self.x_range
        if not lo <= x <= hi:
            raise ValueError('x=%r outside integrated range [%r, %r]' %
                             (x, lo, hi))
        if self._solution is None:
            return self.vecs[0].copy()
        return self._solution(x)

    def state_at(self, x):
        vec = self(x)
        return OdeState(x, vec[0], vec[1])

    def to_csv(self, f):
        write_csv(f, ['x', 'y', 'dy'],
                  ((x, v[0], v[1]) for x, v in zip(self.xs, self.vecs)))


def integrate(system, initial, x_end, rtol=1e-10, atol=1e-12,
              method='DOP853', max_step=np.inf):
    """Integrate system from the OdeState initial to x_end"""
    vec0 = system.initial_vector(initial)
    if not (math.isfinite(initial.x) and np.all(np.isfinite(vec0))):
        raise ValueError('non-finite initial state %r' % (initial,))
    result = march(system, initial.x, vec0, x_end, rtol=rtol, atol=atol,
                   method=method, max_step=max_step)
    return Trajectory(system, result)
