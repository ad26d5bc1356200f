import io, json, math, unittest
import numpy as np
import mpmath
from . import repeatable, logexception
import painlevewhitham.laxpair as laxpair
import painlevewhitham.painleve as painleve
from painlevewhitham.painleve import (OdeState, ThetaParams, PISystem,
                                      integrate)
from painlevewhitham.laxpair import GaugedPVISystem, circle_samples
from painlevewhitham.whitham import build_curve
from painlevewhitham.util import scale_of, poly_scale, loglog_slope
logexception.attach(laxpair.logger, painleve.logger)

STEPS = [0.04, 0.02, 0.01, 0.005, 0.0025]


def random_params(rng):
    thinf = rng.choice([-1, 1])*rng.uniform(0.3, 2.0)
    return ThetaParams(rng.uniform(-1, 1), rng.uniform(-1, 1),
                       rng.uniform(-1, 1), thinf)


def random_point(rng):
    while True:
        x = rng.choice([rng.uniform(-3, -0.5), rng.uniform(0.2, 0.8),
                        rng.uniform(1.5, 4)])
        y = rng.uniform(-3, 5)
        if painleve.pvi_distance(x, y) > 0.2:
            return OdeState(x, y, rng.uniform(-2, 2))


def mp_u(state, params):
    with mpmath.workdps(40):
        x, y, dy = [mpmath.mpf(v) for v in state]
        return float((x*(x - 1)*dy/(y*(y - 1)*(y - x)) + params.theta0/y
                      + params.theta1/(y - 1)
                      + (params.thetax - 1)/(y - x))/2)


class SlopeRoundTrip(unittest.TestCase):
    """u from the slope and back, and against the high-precision form"""
    count = 10
    def runTest(self):
        rng = repeatable.rng(self, 400)
        for _ in range(100):
            params, state = random_params(rng), random_point(rng)
            u = laxpair.u_from_slope(state, params)
            back = laxpair.slope_from_u(state.x, state.y, u, params)
            self.assertLess(abs(back - state.dy), 1e-12*max(1, abs(state.dy)))
            self.assertLess(abs(u - mp_u(state, params)), 1e-12*max(1, abs(u)))


class SlopeExamples(unittest.TestCase):
    def runTest(self):
        params = ThetaParams(0.0, 0.0, 1.0, 0.5)
        self.assertEqual(laxpair.u_from_slope(OdeState(2.0, 3.0, 0.0), params),
                         0.0)
        self.assertRaises(laxpair.SingularConfigurationError,
                          lambda: laxpair.u_from_slope(OdeState(2.0, 2.0, 1.0),
                                                       params))
        self.assertRaises(laxpair.SingularConfigurationError,
                          lambda: laxpair.u_from_slope(OdeState(2.0, 1.0, 1.0),
                                                       params))


class AuxiliaryInvariants(unittest.TestCase):
    """sum u = k2, sum w u = 0, sum (u + theta)/w = 0 and the gauge
       relation at random points"""
    count = 10
    def runTest(self):
        rng = repeatable.rng(self, 500)
        for _ in range(100):
            params, state = random_params(rng), random_point(rng)
            aux = laxpair.build_auxiliary(state, params)
            for name, value in aux.residuals().items():
                self.assertLessEqual(value, 1e-9, msg='%s at %r %r' %
                                     (name, state, params))
            self.assertLess(abs(sum(aux.us) - params.k2), 1e-9*aux.scale)


class AuxiliaryExample(unittest.TestCase):
    """theta = (0, 0, 0, 2), x = 2, y = 4, u = 0 by hand"""
    def runTest(self):
        params = ThetaParams(0.0, 0.0, 0.0, 2.0)
        # u = 0 needs y' = R(y)/(x(x-1)(y-x)) = 6
        aux = laxpair.build_auxiliary(OdeState(2.0, 4.0, 6.0), params)
        self.assertAlmostEqual(aux.u, 0.0, delta=1e-14)
        for got, want in zip(aux.us, (1.0, -4.5, 2.5)):
            self.assertAlmostEqual(got, want, delta=1e-13)
        for got, want in zip(aux.omegas, (2.0, 2.0/3.0, 0.4)):
            self.assertAlmostEqual(got, want, delta=1e-13)


class GaugeScaling(unittest.TestCase):
    """Doubling k doubles the omegas and leaves the u_i and F6 alone"""
    count = 5
    def runTest(self):
        rng = repeatable.rng(self, 600)
        params, state = random_params(rng), random_point(rng)
        one = laxpair.build_auxiliary(state, params, 1.0)
        two = laxpair.build_auxiliary(state, params, 2.0)
        self.assertEqual(one.us, two.us)
        for w1, w2 in zip(one.omegas, two.omegas):
            self.assertAlmostEqual(w2, 2*w1, delta=1e-14*abs(w1))
        F_one = laxpair.extract_F6(laxpair.assemble_A6_L6(one, params))
        F_two = laxpair.extract_F6(laxpair.assemble_A6_L6(two, params))
        self.assertAlmostEqual(F_one, F_two, delta=1e-9*max(1, abs(F_one)))


class AuxiliaryErrors(unittest.TestCase):
    def runTest(self):
        state = OdeState(2.0, 3.5, 0.1)
        self.assertRaises(laxpair.UnsupportedParameterError,
                          lambda: laxpair.build_auxiliary(
                              state, ThetaParams(0.3, 0.2, 0.1, 0.0)))
        self.assertRaises(laxpair.SingularConfigurationError,
                          lambda: laxpair.build_auxiliary(
                              OdeState(2.0, 2.0, 0.1),
                              ThetaParams(0.3, 0.2, 0.1, 0.5)))
        # u = 0 at y = 3 makes u0 vanish
        self.assertRaises(laxpair.GaugeDegenerateError,
                          lambda: laxpair.build_auxiliary(
                              OdeState(2.0, 3.0, 3.0),
                              ThetaParams(0.0, 0.0, 0.0, 2.0)))


class MatrixStructure(unittest.TestCase):
    """a12 vanishes at z = y, a11(y) = u, traces and the sum rule"""
    count = 5
    def runTest(self):
        rng = repeatable.rng(self, 700)
        for _ in range(20):
            params, state = random_params(rng), random_point(rng)
            aux = laxpair.build_auxiliary(state, params)
            mats = laxpair.assemble_A6_L6(aux, params)
            scale = max(mats.scale, aux.scale)
            at_y = mats.A6(state.y)
            self.assertLess(abs(at_y[0, 1]), 1e-10*scale*max(1, abs(aux.w0)))
            self.assertLess(abs(at_y[0, 0] - aux.u), 1e-10*scale)
            total = mats.A0 + mats.A1 + mats.Ax
            self.assertLess(np.abs(total + mats.Ainf).max(), 1e-10*scale)
            x = state.x
            for z in (2.5j, -1.7 + 0.4j, 7.0):
                want = (params.theta0/z + params.theta1/(z - 1)
                        + params.thetax/(z - x))
                self.assertLess(abs(np.trace(mats.A6(z)) - want), 1e-10*scale)
                self.assertLess(np.abs(mats.L6(z) + mats.Ax/(z - x)).max(),
                                1e-15*scale)


class F6CrossOracle(unittest.TestCase):
    """Quartic fit of R^2 det A6 against the closed form, and the two
       F6 conventions"""
    count = 10
    def runTest(self):
        rng = repeatable.rng(self, 800)
        for _ in range(100):
            params, state = random_params(rng), random_point(rng)
            x = state.x
            aux = laxpair.build_auxiliary(state, params)
            mats = laxpair.assemble_A6_L6(aux, params)
            coefs, _, _ = laxpair.fit_det_polynomial(mats)
            self.assertLess(abs(coefs[4] - params.k1*params.k2),
                            1e-8*max(1, abs(params.k1*params.k2)))
            fitted = laxpair.extract_F6(mats)
            closed = laxpair.f6_closed_form(aux, params, x)
            tol = 1e-8*scale_of(closed, (params.k1 - params.k2) *
                                (abs(aux.u1) + abs(x*aux.ux)))
            self.assertLess(abs(fitted - closed), tol,
                            msg='%r %r' % (state, params))
            in_curve = laxpair.f6_closed_form(aux, params, x, curve=True)
            self.assertAlmostEqual(in_curve - closed,
                                   -x*params.thetax*(1 - params.k2),
                                   delta=1e-12*scale_of(closed, in_curve))
            self.assertAlmostEqual(laxpair.curve_f6(closed, x, params),
                                   in_curve,
                                   delta=1e-12*scale_of(closed, in_curve))
        flat = ThetaParams(0.3, -0.3, 0.0, 2.0)
        self.assertEqual(laxpair.convention_gap(7.0, flat), 0.0)


class CurveVanishes(unittest.TestCase):
    """The genus-one constraint holds pointwise on Lax-consistent data"""
    count = 10
    def runTest(self):
        rng = repeatable.rng(self, 900)
        for _ in range(10):
            params, state = random_params(rng), random_point(rng)
            F6 = laxpair.extract_F6(laxpair.matrices_from_state(state, params))
            res = laxpair.curve_residual(state, params, F6, relative=True)
            self.assertLess(abs(res), 1e-8, msg='%r %r' % (state, params))
            same = laxpair.curve_residual(
                state, params, laxpair.curve_f6(F6, state.x, params),
                convention='curve', relative=True)
            self.assertAlmostEqual(res, same, delta=1e-12)


class CurveLinearInF6(unittest.TestCase):
    """d(residual)/dF6 = 4 R(y)"""
    count = 5
    def runTest(self):
        rng = repeatable.rng(self, 1000)
        params, state = random_params(rng), random_point(rng)
        F6 = rng.uniform(-3, 3)
        eps = 1e-3*max(1, abs(F6))
        diff = (laxpair.curve_residual(state, params, F6 + eps) -
                laxpair.curve_residual(state, params, F6))
        x, y = state.x, state.y
        want = 4*y*(y - 1)*(y - x)*eps
        self.assertLess(abs(diff - want), 1e-6*abs(want))
        self.assertRaises(ValueError,
                          lambda: laxpair.curve_residual(
                              state, params, F6, convention='other'))


class CurveDropout(unittest.TestCase):
    """theta0 = 0 and y' = 2y(y-1)/(x(x-1)) leave the pure-y part c(y)"""
    def runTest(self):
        params = ThetaParams(0.0, 0.4, -0.2, 1.3)
        x, F6 = 2.5, 0.7
        curve = build_curve(x, F6, params)
        self.assertEqual(curve.c(0.0), 0.0)
        for y in (-1.0, 0.5, 3.2):
            state = OdeState(x, y, 2*y*(y - 1)/(x*(x - 1)))
            res = laxpair.curve_residual(state, params, F6,
                                          convention='curve')
            self.assertLess(abs(res - curve.c(y)),
                            1e-10*poly_scale(curve.c.coef, y))


class GaugeEvolution(unittest.TestCase):
    def runTest(self):
        params = ThetaParams(0.3, 0.2, 0.1, 0.5)
        state = OdeState(2.0, 3.5, 0.1)
        self.assertAlmostEqual(laxpair.gauge_log_derivative(state, params),
                               -0.5*1.5/2.0, delta=1e-15)
        system = GaugedPVISystem(params, 2.0)
        vec = system.initial_vector(state)
        self.assertEqual(list(vec), [3.5, 0.1, 2.0])
        d = system.derivative(2.0, vec)
        self.assertAlmostEqual(d[1], painleve.pvi_rhs(state, params), delta=1e-14)
        self.assertAlmostEqual(d[2], 2.0*(-0.375), delta=1e-14)


class WrongSignPVI(GaugedPVISystem):
    """PVI with the second derivative negated"""
    def derivative(self, x, vec):
        d = GaugedPVISystem.derivative(self, x, vec)
        d[1] = -d[1]
        return d


class PVIZeroCurvature(unittest.TestCase):
    """Compatibility residual along a gauged PVI trajectory is second
       order in the finite-difference step; a wrong-sign equation is not
       compatible"""
    params = ThetaParams(0.3, 0.2, 0.1, 0.5)
    initial = OdeState(2.0, 3.5, 0.1)

    def residual(self, system, h, zs):
        traj = integrate(system, self.initial, 2.5, rtol=1e-12, atol=1e-14)
        self.assertTrue(traj.completed)
        return laxpair.zero_curvature_residual_pvi(
            traj, self.params, z_samples=zs, x_samples=[2.25], h=h)

    def runTest(self):
        zs = circle_samples(6.75)
        res = [self.residual(GaugedPVISystem(self.params), h, zs).max_residual
               for h in STEPS]
        slope = loglog_slope(STEPS, res)
        self.assertAlmostEqual(slope, 2.0, delta=0.1)
        far = self.residual(GaugedPVISystem(self.params), STEPS[-1],
                            circle_samples(10.0, 16))
        self.assertLess(far.max_residual, 1e-4)
        right = self.residual(GaugedPVISystem(self.params), 0.01, zs)
        wrong = self.residual(WrongSignPVI(self.params), 0.01, zs)
        self.assertGreater(wrong.max_residual, 100*right.max_residual)
        self.assertGreater(wrong.max_residual, 1e-3)
        f = io.StringIO()
        right.to_json(f)
        data = json.loads(f.getvalue())
        self.assertEqual(set(data), set(['h', 'max_residual', 'records']))
        self.assertEqual(set(data['records'][0]),
                         set(['x', 'z_re', 'z_im', 'residual_norm']))
        self.assertEqual(len(data['records']), 8)


class PVIZeroCurvatureUngauged(unittest.TestCase):
    def runTest(self):
        params = ThetaParams(0.3, 0.2, 0.1, 0.5)
        traj = integrate(painleve.PVISystem(params), OdeState(2.0, 3.5, 0.1),
                         2.5)
        self.assertRaises(ValueError,
                          lambda: laxpair.zero_curvature_residual_pvi(traj,
                                                                      params))


class DetA1(unittest.TestCase):
    """det A1 = 16z^3 + 4Xz - F1"""
    count = 10
    def runTest(self):
        rng = repeatable.rng(self, 1100)
        for _ in range(100):
            state = OdeState(0.0, rng.uniform(-3, 3), rng.uniform(-3, 3))
            X = rng.uniform(-10, 10)
            zs = [rng.uniform(-3, 3), complex(*rng.uniform(-3, 3, 2)), 0.0]
            self.assertLessEqual(laxpair.det_A1_check(state, X, zs), 1e-10)
        state = OdeState(0.0, 1.5, -0.5)
        _, A = laxpair.pi_lax_matrices(state, 2.0, 0.0)
        det = A[0, 0]*A[1, 1] - A[0, 1]*A[1, 0]
        self.assertAlmostEqual(det, -painleve.pi_first_integral(state, 2.0),
                               delta=1e-13)
        _, A = laxpair.pi_lax_matrices(OdeState(0.0, 0.0, 0.0), 2.0, 1.5)
        det = A[0, 0]*A[1, 1] - A[0, 1]*A[1, 0]
        self.assertAlmostEqual(det, 16*1.5**3 + 4*2.0*1.5, delta=1e-12)


class PIZeroCurvature(unittest.TestCase):
    """eps*D_z L - D_x A + [L, A] along PI trajectories"""
    def runTest(self):
        y0 = -math.sqrt(10.0/3.0) + 0.3
        traj = integrate(PISystem(), OdeState(-10.0, y0, 0.0), -8.0,
                         rtol=1e-12, atol=1e-14)
        self.assertTrue(traj.completed)
        res = [laxpair.zero_curvature_residual_pi(traj, x_samples=[-9.0],
                                                  h=h).max_residual
               for h in STEPS]
        self.assertAlmostEqual(loglog_slope(STEPS, res), 2.0, delta=0.1)
        frozen = integrate(PISystem(frozen_X=-4.0), OdeState(0.0, -1.5, 0.3),
                           2.0, rtol=1e-12, atol=1e-14)
        report = laxpair.zero_curvature_residual_pi(frozen, x_samples=[1.0],
                                                    h=0.001)
        self.assertLess(report.max_residual, 1e-4)


load_tests = repeatable.make_load_tests([
    SlopeRoundTrip, SlopeExamples, AuxiliaryInvariants, AuxiliaryExample,
    GaugeScaling, AuxiliaryErrors, MatrixStructure, F6CrossOracle,
    CurveVanishes, CurveLinearInF6, CurveDropout, GaugeEvolution, PVIZeroCurvature,
    PVIZeroCurvatureUngauged, DetA1, PIZeroCurvature,
])
