"""Lax matrices of PI and PVI built from trajectory data.

   For PVI the residue matrices A^0, A^1, A^x are reconstructed from a
   point (x, y, y') through u = a11(y), the hatted u = -a22(y) and the
   three quadratic expressions for u0, u1, ux; the gauge entries omega_i
   carry the free constant k of a12(z) = k(z - y)/(z(z-1)(z-x)).

   The determinant det A6 = R(z)^-2 * (k1*k2*z^4 + F6*z^3 + ...) with
   R(t) = t(t-1)(t-x) gives the slow coefficient F6. Two conventions for
   F6 circulate: the z^3 coefficient of the determinant itself (returned
   by extract_F6) and the form in which the genus-one curve and the
   modulation equation are written, which differs by x*thetax*(1-k2).
   curve_f6 converts the former into the latter."""
import logging
import numpy as np
from .util import NumericalStop, scale_of, write_json
from .painleve import (OdeState, PVISystem, pi_first_integral, pvi_distance,
                       sing_guard)
logger = logging.getLogger(__name__)

AUX_TOL = 1e-9
MATRIX_TOL = 1e-10
FIT_TOL = 1e-8
FIT_SAMPLES = 9
FD_STEP = np.finfo(float).eps**(1.0/3.0)


class SingularConfigurationError(ValueError):
    pass


class UnsupportedParameterError(ValueError):
    pass


class GaugeDegenerateError(ArithmeticError):
    pass


class InconsistentMatricesError(NumericalStop):
    reason = 'inconsistent-matrices'


def _r(t, x):
    return t*(t - 1.0)*(t - x)


def _check_point(x, y, guard=True):
    if guard and pvi_distance(x, y) < sing_guard(x):
        raise SingularConfigurationError(
            'y=%r too close to {0, 1, x=%r} (or x to {0, 1})' % (y, x))


def u_from_slope(state, params, guard=True):
    """u = a11(y) from the slope relation
       y' = R(y)/(x(x-1)) * (2u - theta0/y - theta1/(y-1) - (thetax-1)/(y-x))"""
    x, y, dy = state
    _check_point(x, y, guard)
    return 0.5*(x*(x - 1.0)*dy/_r(y, x) + params.theta0/y
                + params.theta1/(y - 1.0) + (params.thetax - 1.0)/(y - x))


def slope_from_u(x, y, u, params):
    _check_point(x, y)
    return _r(y, x)/(x*(x - 1.0))*(2.0*u - params.theta0/y
                                   - params.theta1/(y - 1.0)
                                   - (params.thetax - 1.0)/(y - x))


def _quadratic(R, uhat, linear, const):
    """value and magnitude of R*uhat^2 + linear*uhat + const"""
    terms = (R*uhat*uhat, linear*uhat, const)
    return sum(terms), sum(abs(t) for t in terms)


def residue_ux(x, y, uhat, params):
    """u_x as a function of the hatted u, returned with its magnitude"""
    th1, thx, thinf = params.theta1, params.thetax, params.thetainf
    k1, k2 = params.k1, params.k2
    s_inf, mag = _quadratic(
        _r(y, x), uhat,
        th1*(y - x) + x*(thx + thinf)*(y - 1.0) - 2.0*k2*(y - 1.0)*(y - x),
        k2*k2*(y - 1.0) - k2*(th1 + x*thx) - x*k1*k2)
    pref = (y - x)/(x*(x - 1.0)*thinf)
    return pref*s_inf, abs(pref)*mag


def uhat_from_u(x, y, u, params):
    return (u - params.theta0/y - params.theta1/(y - 1.0)
            - params.thetax/(y - x))


def ux_from_state(state, params, guard=True):
    """u_x at a point (x, y, y') of the curve"""
    if params.thetainf == 0.0:
        raise UnsupportedParameterError('thetainf = 0')
    x, y = state.x, state.y
    uhat = uhat_from_u(x, y, u_from_slope(state, params, guard), params)
    return residue_ux(x, y, uhat, params)[0]


class PViAuxiliary(object):
    """u, the hatted u, the residue parameters u_i and gauge entries
       omega_i of the PVI Lax matrix at one point (x, y, y')."""
    def __init__(self, x, y, u, uhat, u0, u1, ux, w0, w1, wx, kgauge,
                 params, scale):
        self.x, self.y = x, y
        self.u, self.uhat = u, uhat
        self.u0, self.u1, self.ux = u0, u1, ux
        self.w0, self.w1, self.wx = w0, w1, wx
        self.kgauge = kgauge
        self.params = params
        self.scale = scale

    @property
    def us(self):
        return (self.u0, self.u1, self.ux)

    @property
    def omegas(self):
        return (self.w0, self.w1, self.wx)

    def residuals(self):
        """Relative residuals of the four linear/bilinear constraints"""
        p, x = self.params, self.x
        us, ws, thetas = self.us, self.omegas, p.thetas
        sum_u = (abs(sum(us) - p.k2))/max(self.scale, abs(p.k2))
        wu = [w*u for w, u in zip(ws, us)]
        sum_wu = abs(sum(wu))/max(sum(abs(v) for v in wu), 1e-300)
        inv = [(u + th)/w for u, th, w in zip(us, thetas, ws)]
        inv_scale = sum((abs(u + th) + self.scale)/abs(w)
                        for u, th, w in zip(us, thetas, ws))
        sum_inv = abs(sum(inv))/inv_scale
        gauge = [(x + 1.0)*wu[0], x*wu[1], wu[2]]
        sum_gauge = (abs(sum(gauge) - self.kgauge) /
                     (sum(abs(v) for v in gauge) + abs(self.kgauge)))
        return {'sum_u': sum_u, 'sum_wu': sum_wu, 'sum_inverse': sum_inv,
                'gauge': sum_gauge}

    def check(self, tol=AUX_TOL):
        res = self.residuals()
        bad = dict((k, v) for k, v in res.items() if not v <= tol)
        if bad:
            logger.warning('auxiliary constraints violated at x=%r y=%r: %r',
                           self.x, self.y, bad)
            raise InconsistentMatricesError('auxiliary constraints violated',
                                            **bad)
        return res


def build_auxiliary(state, params, kgauge=1.0, check=True):
    x, y, dy = state
    if params.thetainf == 0.0:
        raise UnsupportedParameterError('thetainf = 0: u_i are undefined')
    u = u_from_slope(state, params)
    uhat = uhat_from_u(x, y, u, params)
    th1, thx, thinf = params.theta1, params.thetax, params.thetainf
    k1, k2 = params.k1, params.k2
    R = _r(y, x)
    lin = -2.0*k2*(y - 1.0)*(y - x)

    s1, m1 = _quadratic(R, uhat, th1*(y - x) + x*thx*(y - 1.0) + lin,
                        k2*k2*(y - x - 1.0) - k2*(th1 + x*thx))
    pref0 = y/(x*thinf)
    u0 = pref0*s1

    s1b, m1b = _quadratic(R, uhat,
                          (th1 + thinf)*(y - x) + x*thx*(y - 1.0) + lin,
                          k2*k2*(y - x) - k2*(th1 + x*thx) - k1*k2)
    pref1 = -(y - 1.0)/((x - 1.0)*thinf)
    u1 = pref1*s1b

    ux, mx = residue_ux(x, y, uhat, params)
    scale = scale_of(abs(pref0)*m1, abs(pref1)*m1b, mx, k2)

    for name, val in (('u0', u0), ('u1', u1), ('ux', ux)):
        if abs(val) <= 1e-14*scale:
            raise GaugeDegenerateError('%s vanishes at x=%r y=%r' %
                                       (name, x, y))
    w0 = kgauge*y/(x*u0)
    w1 = -kgauge*(y - 1.0)/((x - 1.0)*u1)
    wx = kgauge*(y - x)/(x*(x - 1.0)*ux)
    aux = PViAuxiliary(x, y, u, uhat, u0, u1, ux, w0, w1, wx, kgauge,
                       params, scale)
    if check:
        aux.check()
    return aux


def _residue_matrix(u, theta, w):
    return np.array([[u + theta, -w*u], [(u + theta)/w, -u]])


class LaxMatrices(object):
    """A6(z) = A0/z + A1/(z-1) + Ax/(z-x), L6(z) = -Ax/(z-x)"""
    def __init__(self, A0, A1, Ax, Ainf, x, params):
        self.A0, self.A1, self.Ax, self.Ainf = A0, A1, Ax, Ainf
        self.x = x
        self.params = params

    def A6(self, z):
        return self.A0/z + self.A1/(z - 1.0) + self.Ax/(z - self.x)

    def L6(self, z):
        return -self.Ax/(z - self.x)

    def dL6_dz(self, z):
        return self.Ax/(z - self.x)**2

    def det_A6(self, z):
        a = self.A6(z)
        return a[0, 0]*a[1, 1] - a[0, 1]*a[1, 0]

    @property
    def scale(self):
        return scale_of(*[float(np.abs(m).max())
                          for m in (self.A0, self.A1, self.Ax)])

    def check(self, tol=MATRIX_TOL, scale=None):
        scale = max(self.scale, scale or 0.0)
        total = self.A0 + self.A1 + self.Ax + self.Ainf
        errs = {'sum': float(np.abs(total).max())/scale}
        for name, m, theta in (('0', self.A0, self.params.theta0),
                               ('1', self.A1, self.params.theta1),
                               ('x', self.Ax, self.params.thetax)):
            errs['trace' + name] = abs(np.trace(m) - theta)/scale
            errs['det' + name] = abs(np.linalg.det(m))/scale**2
        bad = dict((k, v) for k, v in errs.items() if not v <= tol)
        if bad:
            logger.warning('Lax matrix invariants violated at x=%r: %r',
                           self.x, bad)
            raise InconsistentMatricesError('matrix invariants violated',
                                            **bad)
        return errs


def assemble_A6_L6(aux, params, x=None, check=True):
    x = aux.x if x is None else x
    mats = LaxMatrices(_residue_matrix(aux.u0, params.theta0, aux.w0),
                       _residue_matrix(aux.u1, params.theta1, aux.w1),
                       _residue_matrix(aux.ux, params.thetax, aux.wx),
                       np.diag([params.k1, params.k2]), x, params)
    if check:
        mats.check(scale=aux.scale)
    return mats


def matrices_from_state(state, params, kgauge=1.0):
    aux = build_auxiliary(state, params, kgauge)
    return assemble_A6_L6(aux, params, state.x)


def fit_det_polynomial(matrices, samples=FIT_SAMPLES):
    """Least-squares fit of the quartic R(z)^2 * det A6(z) on a circle of
       radius 3*max(1, |x|). Returns (coefficients lowest degree first,
       max fit residual, sample magnitude)."""
    x = matrices.x
    rho = 3.0*max(1.0, abs(x))
    w = np.exp(2j*np.pi*(np.arange(samples) + 0.5)/samples)
    z = rho*w
    vals = np.array([matrices.det_A6(zj)*_r(zj, x)**2 for zj in z])
    vander = np.vander(w, 5, increasing=True)
    d, _, _, _ = np.linalg.lstsq(vander, vals, rcond=None)
    residual = float(np.abs(vander.dot(d) - vals).max())
    coefs = d/rho**np.arange(5)
    logger.debug('det fit at x=%r: residual %r', x, residual)
    return coefs, residual, float(np.abs(vals).max())


def extract_F6(matrices, samples=FIT_SAMPLES):
    """z^3 coefficient of R(z)^2 det A6(z) (determinant convention)"""
    coefs, residual, scale = fit_det_polynomial(matrices, samples)
    if residual > FIT_TOL*scale:
        raise InconsistentMatricesError('quartic fit residual %r' % residual,
                                        residual=residual)
    p = matrices.params
    rho = 3.0*max(1.0, abs(matrices.x))
    lead = coefs[4].real
    if abs(lead - p.k1*p.k2) > FIT_TOL*max(abs(p.k1*p.k2), scale/rho**4):
        raise InconsistentMatricesError(
            'leading coefficient %r, expected k1*k2 = %r' % (lead, p.k1*p.k2))
    return float(coefs[3].real)


def f6_closed_form(aux, params, x, curve=False):
    """F6 from the residue parameters. curve=True gives the form in
       which the genus-one curve is written (carrying -x*thetax where the
       determinant carries -k2*x*thetax)."""
    k1, k2 = params.k1, params.k2
    xterm = params.thetax if curve else k2*params.thetax
    return ((k1 - k2)*(aux.u1 + x*aux.ux) - x*(2.0*k1*k2) - x*xterm
            - 2.0*k1*k2 - k2*params.theta1)


def convention_gap(x, params):
    """Determinant-convention F6 minus curve-convention F6; zero when
       thetax = 0"""
    return x*params.thetax*(1.0 - params.k2)


def curve_f6(F6_det, x, params):
    """Determinant-convention F6 to curve convention"""
    return F6_det - convention_gap(x, params)


def curve_terms(state, params, F6):
    """Monomials of the genus-one constraint in (y', y); F6 in curve
       convention."""
    x, y, p = state
    th0, th1, thx = params.thetas
    k1, k2 = params.k1, params.k2
    s = k1 + k2
    C = (x + 1.0)*s + x*thx + th1
    S = (C*C - 1.0 - 2.0*x*th0*s + 4.0*k1*k2*(x*x + x + 1.0)
         + 4.0*x*(x + 1.0)*(1.0 - k2)*thx + 4.0*(x + 1.0)*F6)
    return [x*x*(x - 1.0)**2*p*p,
            -2.0*p*x*(x - 1.0)*y*(y - 1.0),
            y**4*(1.0 - (k1 - k2)**2),
            2.0*y**3*(s*C - 1.0 + 2.0*x*thx*(1.0 - k2) + 2.0*F6),
            -y*y*S,
            2.0*y*x*(2.0*k1*k2*(x + 1.0) + 2.0*x*thx*(1.0 - k2) + 2.0*F6
                     - th0*C),
            -x*x*th0*th0]


def curve_residual(state, params, F6, convention='det', relative=False):
    """Residual of the genus-one constraint at (x, y, y'). F6 is taken in
       the determinant convention unless convention='curve'."""
    if convention == 'det':
        F6 = curve_f6(F6, state.x, params)
    elif convention != 'curve':
        raise ValueError('unknown F6 convention %r' % convention)
    terms = curve_terms(state, params, F6)
    res = sum(terms)
    if relative:
        return res/max(sum(abs(t) for t in terms), 1e-300)
    return res


def gauge_log_derivative(state, params):
    """d log k / dx keeping the Lax pair isomonodromic"""
    x, y = state.x, state.y
    return (params.thetainf - 1.0)*(y - x)/(x*(x - 1.0))


class GaugedPVISystem(PVISystem):
    """PVI with the gauge constant k carried as a third component"""
    kind = 'pvi-gauge'

    def __init__(self, params, kgauge=1.0):
        PVISystem.__init__(self, params)
        self.kgauge = kgauge

    def initial_vector(self, state):
        return np.array([state.y, state.dy, self.kgauge], float)

    def derivative(self, x, vec):
        y, dy, k = vec
        head = PVISystem.derivative(self, x, vec[:2])
        dk = k*gauge_log_derivative(OdeState(x, y, dy), self.params)
        return np.array([head[0], head[1], dk])


class ResidualReport(object):
    """Per-(x, z) residual norms of a compatibility check"""
    def __init__(self, h, records):
        self.h = h
        self.records = records

    @property
    def max_residual(self):
        return max([r['residual_norm'] for r in self.records] or [0.0])

    def to_json(self, f):
        write_json(f, {'h': self.h, 'max_residual': self.max_residual,
                       'records': self.records})


def circle_samples(radius, count=8, offset=0.5):
    return radius*np.exp(2j*np.pi*(np.arange(count) + offset)/count)


def _interior_samples(trajectory, count, h):
    lo, hi = trajectory.x_range
    lo, hi = lo + 2*h, hi - 2*h
    if hi <= lo:
        raise ValueError('trajectory too short for step %r' % h)
    return list(np.linspace(lo, hi, count))


def zero_curvature_residual_pvi(trajectory, params, z_samples=None,
                                x_samples=None, h=None):
    """Residual of D_x A6 - D_z L6 + [A6, L6] along a gauged PVI
       trajectory, with D_x A6 by central differences of the dense
       output."""
    if trajectory.vecs.shape[1] != 3:
        raise ValueError('trajectory does not carry the gauge constant')
    if x_samples is None:
        step = h or FD_STEP*max(1.0, abs(trajectory.xs[-1]))
        x_samples = _interior_samples(trajectory, 5, step)
    records = []
    for x in x_samples:
        hx = h or FD_STEP*max(1.0, abs(x))

        def mats_at(xe):
            y, dy, k = trajectory(xe)
            return matrices_from_state(OdeState(xe, y, dy), params, k)

        mid, plus, minus = mats_at(x), mats_at(x + hx), mats_at(x - hx)
        y = trajectory(x)[0]
        local = pvi_distance(x, y)
        if hx > 0.1*local:
            logger.warning('finite-difference step %r coarse against local '
                           'scale %r at x=%r; expect order degradation',
                           hx, local, x)
        zs = z_samples
        if zs is None:
            zs = circle_samples(3.0*max(1.0, abs(x)))
        for z in zs:
            a = mid.A6(z)
            l = mid.L6(z)
            dadx = (plus.A6(z) - minus.A6(z))/(2.0*hx)
            m = dadx - mid.dL6_dz(z) + a.dot(l) - l.dot(a)
            records.append({'x': float(x), 'z_re': float(np.real(z)),
                            'z_im': float(np.imag(z)),
                            'residual_norm': float(np.abs(m).max())})
    report = ResidualReport(h, records)
    logger.info('PVI zero-curvature residual: max %r over %d samples',
                report.max_residual, len(records))
    return report


def pi_lax_matrices(state, bigX, z):
    """(L1, A1) of PI at spectral parameter z"""
    y, dy = state.y, state.dy
    L = np.array([[0.0, 1.0], [y - z, 0.0]], dtype=np.result_type(z, float))
    A = np.array([[-dy, 2.0*y + 4.0*z],
                  [-bigX - y*y + 2.0*y*z - 4.0*z*z, dy]],
                 dtype=np.result_type(z, float))
    return L, A


def det_A1_check(state, bigX, z_samples):
    """Max relative residual of det A1(z) = 16z^3 + 4Xz - F1"""
    F1 = pi_first_integral(state, bigX)
    worst = 0.0
    for z in z_samples:
        _, A = pi_lax_matrices(state, bigX, z)
        det = A[0, 0]*A[1, 1] - A[0, 1]*A[1, 0]
        expected = 16.0*z**3 + 4.0*bigX*z - F1
        scale = scale_of(16.0*abs(z)**3, 4.0*abs(bigX*z), state.dy**2,
                         2.0*abs(state.y)**3, 2.0*abs(state.y*bigX))
        worst = max(worst, abs(det - expected)/scale)
    return worst


def zero_curvature_residual_pi(trajectory, x_samples=None, z_samples=None,
                               h=None):
    """Residual of eps*D_z L1 - D_x A1 + [L1, A1] along a PI trajectory,
       eps = 1 when X follows x and 0 when X is frozen."""
    system = trajectory.system
    eps = 0.0 if system.frozen_X is not None else 1.0
    if x_samples is None:
        step = h or FD_STEP*max(1.0, abs(trajectory.xs[-1]))
        x_samples = _interior_samples(trajectory, 5, step)
    if z_samples is None:
        z_samples = circle_samples(2.0)
    dLdz = np.array([[0.0, 0.0], [-1.0, 0.0]])
    records = []
    for x in x_samples:
        hx = h or FD_STEP*max(1.0, abs(x))
        mid = trajectory.state_at(x)
        plus = trajectory.state_at(x + hx)
        minus = trajectory.state_at(x - hx)
        for z in z_samples:
            L, A = pi_lax_matrices(mid, system.bigX(x), z)
            dadx = (pi_lax_matrices(plus, system.bigX(x + hx), z)[1] -
                    pi_lax_matrices(minus, system.bigX(x - hx), z)[1])/(2*hx)
            m = eps*dLdz - dadx + L.dot(A) - A.dot(L)
            records.append({'x': float(x), 'z_re': float(np.real(z)),
                            'z_im': float(np.imag(z)),
                            'residual_norm': float(np.abs(m).max())})
    return ResidualReport(h, records)
