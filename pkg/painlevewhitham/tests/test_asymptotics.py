import io, json, unittest
import numpy as np
from . import repeatable, logexception
import painlevewhitham.asymptotics as asymptotics
import painlevewhitham.whitham as whitham
import painlevewhitham.painleve as painleve
from painlevewhitham.painleve import ThetaParams
from painlevewhitham.whitham import build_curve
from painlevewhitham.util import poly_scale
logexception.attach(asymptotics.logger, whitham.logger, painleve.logger)

DEGENERATE = ThetaParams(0.3, -0.3, 0.0, 2.0)   # k1 = 1, k2 = -1
CONTROL = ThetaParams(0.3, -0.3, 0.5, 2.0)
X_LIST = [1e2, 1e3, 1e4, 1e5]


class XiDiscriminantAtZero(unittest.TestCase):
    """At xi = 0 only (X theta0)^2 survives"""
    def runTest(self):
        X = 1e3
        F6 = asymptotics.degenerate_f6(X, DEGENERATE)
        self.assertEqual(F6, 2.0*X)
        val = asymptotics.xi_discriminant(0.0, X, F6, DEGENERATE)
        self.assertAlmostEqual(val, 0.09/X**2, delta=1e-15/X**2)
        self.assertRaises(ValueError,
                          lambda: asymptotics.xi_discriminant(0.5, 1.0, 0.0,
                                                              DEGENERATE))


class XiPolyMatches(unittest.TestCase):
    """The polynomial and pointwise rescaled discriminants agree"""
    def runTest(self):
        X = 37.0
        F6 = 11.0
        poly = asymptotics.xi_discriminant_poly(X, F6, CONTROL)
        xi = np.linspace(-0.5, 1.5, 41)
        vals = asymptotics.xi_discriminant(xi, X, F6, CONTROL)
        for a, b, t in zip(poly(xi), vals, xi):
            self.assertLess(abs(a - b), 1e-10*max(1.0, poly_scale(poly.coef, t)))
        self.assertAlmostEqual(poly.coef[4], CONTROL.thetainf**2, delta=1e-12)


class CurveDiscriminantRatio(unittest.TestCase):
    """b^2 - 4ac of the curve is 4 X^6 (X-1)^2 times the rescaled form"""
    count = 5
    def runTest(self):
        rng = repeatable.rng(self, 1400)
        params = ThetaParams(*rng.uniform(-1, 1, 4))
        for X in (2.7, -1.3, 5.0, 0.4):
            F6 = rng.uniform(-3, 3)
            curve = build_curve(X, F6, params)
            factor = 4*X**6*(X - 1)**2
            for xi in rng.uniform(-1, 2, 5):
                y = X*xi
                got = curve.discriminant(y)
                want = factor*asymptotics.xi_discriminant(xi, X, F6, params)
                scale = poly_scale(curve.discriminant.coef, y)
                self.assertLess(abs(got - want), 1e-10*scale)
        ratio = asymptotics.curve_discriminant_ratio(0.5, 3.0, 6.0, CONTROL)
        self.assertAlmostEqual(ratio/(4*3.0**6*2.0**2), 1.0, delta=1e-9)


class EqualExponents(unittest.TestCase):
    """k1 = k2 kills the quartic term"""
    def runTest(self):
        params = ThetaParams(0.3, -0.1, 0.2, 0.0)
        poly = asymptotics.xi_discriminant_poly(50.0, 3.0, params)
        self.assertLess(abs(poly.coef[4]) if len(poly.coef) > 4 else 0.0, 1e-12)
        report = asymptotics.degeneracy_report(X_LIST, params)
        self.assertTrue(report.fully_degenerate)
        self.assertEqual(asymptotics.limit_polynomial(params)(0.3), 0.0)


class DegeneracyDecay(unittest.TestCase):
    """With thetax = 0 the rescaled discriminant tends to
       (k2-k1)^2 xi^2 (xi-1)^2 like 1/X, roots merging in pairs"""
    def runTest(self):
        limit = asymptotics.limit_polynomial(DEGENERATE)
        self.assertAlmostEqual(limit(0.5), 4*0.0625, delta=1e-15)
        report = asymptotics.degeneracy_report(X_LIST, DEGENERATE)
        self.assertAlmostEqual(report.slope, -1.0, delta=0.2)
        self.assertFalse(report.violation)
        self.assertFalse(report.fully_degenerate)
        self.assertTrue(all(report.near_double))
        for a, b in zip(report.deviations, report.deviations[1:]):
            self.assertLess(b, a)
        for X, (zero, one) in zip(X_LIST, report.root_pairs):
            self.assertLess(abs(zero[0]), 10.0/X)
            self.assertLess(abs(one[0] - 1.0), 10.0/X)
        f = io.StringIO()
        report.to_json(f)
        data = json.loads(f.getvalue())
        self.assertEqual(data['X'], X_LIST)
        self.assertFalse(data['violation'])


class DegeneracyControl(unittest.TestCase):
    """thetax != 0 keeps an O(1) deviation"""
    def runTest(self):
        report = asymptotics.degeneracy_report(X_LIST, CONTROL)
        self.assertTrue(report.violation)
        self.assertGreater(report.slope, -0.5)


class OnManifold(unittest.TestCase):
    """y = X, y' = 1 satisfies the curve for thetax = 0 and any F6"""
    def runTest(self):
        for X in (10.0, 1e3, 1e5):
            self.assertLess(abs(asymptotics.on_manifold_residual(X, DEGENERATE)),
                            1e-10)
            self.assertLess(abs(asymptotics.on_manifold_residual(
                X, DEGENERATE, F6=1.7*X)), 1e-10)
            self.assertGreater(abs(asymptotics.on_manifold_residual(X, CONTROL)),
                               1e-6)


class DegenerateModulation(unittest.TestCase):
    """The modulation equation on the degenerate family tends to
       (k2-k1)^2 - 2 k1 k2 rather than the family's slope -2 k1 k2"""
    def runTest(self):
        check = asymptotics.degenerate_modulation_check(1e3, DEGENERATE)
        self.assertEqual(check['expected'], 2.0)
        self.assertEqual(check['limit'], 6.0)
        self.assertLess(abs(check['implicit'] - check['limit']), 0.01)
        self.assertAlmostEqual(check['excess'], 4.0, delta=0.01)
        far = asymptotics.degenerate_modulation_check(1e6, DEGENERATE)
        self.assertLess(abs(far['implicit'] - 6.0), abs(check['implicit'] - 6.0))


class RemainderAnalysis(unittest.TestCase):
    """Synthetic remainders: 2 log x passes; x^0.6 and a quadratic
       remainder still within 1% at the end do not"""
    def runTest(self):
        xs = np.geomspace(10.0, 1e4, 2000)
        good = asymptotics.analyze_remainder(xs, xs + 2*np.log(xs), 100.0,
                                             window_base=10.0)
        self.assertAlmostEqual(good['fitted_C'], 2.0, delta=1e-9)
        self.assertEqual(good['fit_range'], [100.0, 1000.0])
        self.assertAlmostEqual(good['bound_ratio'], 1.0, delta=1e-9)
        self.assertAlmostEqual(good['decades'], 2.0, delta=1e-9)
        self.assertAlmostEqual(good['growth'], 1.0, delta=1e-9)
        self.assertTrue(good['passed'])
        self.assertLess(good['final_ratio'], 0.01)
        self.assertEqual(good['windows'][0]['x_lo'], 10.0)
        bad = asymptotics.analyze_remainder(xs, xs + xs**0.6, 100.0,
                                            window_base=10.0)
        self.assertFalse(bad['passed'])
        self.assertGreater(bad['growth'], 2.0)
        quad = asymptotics.analyze_remainder(xs, xs + 1e-7*xs**2, 100.0)
        self.assertLess(quad['final_ratio'], 0.01)
        self.assertGreater(quad['bound_ratio'], 10.0)
        self.assertFalse(quad['passed'])
        short = asymptotics.analyze_remainder(xs[:1000], xs[:1000] + 1.0, 100.0)
        self.assertFalse(short['passed'])


class AsymptoticsStructure(unittest.TestCase):
    """A short run produces a well-formed report"""
    def runTest(self):
        report = asymptotics.verify_asymptotics(DEGENERATE, x0=10.0,
                                                x_end=200.0, offsets=(0.5,),
                                                rtol=1e-8, atol=1e-10,
                                                refine=False)
        self.assertEqual(len(report.members), 1)
        member = report.members[0]
        self.assertIn(member['status'], ('pass', 'fail', 'inconclusive'))
        self.assertEqual(member['offset'], 0.5)
        self.assertEqual(member['slope'], 0.0)
        self.assertFalse(member['refined'])
        self.assertNotEqual(member['status'], 'pass')
        self.assertFalse(report.passed)
        f = io.StringIO()
        report.to_json(f)
        data = json.loads(f.getvalue())
        self.assertEqual(set(data), set(['params', 'passed', 'members']))
        self.assertEqual(data['params']['k1'], 1.0)


class TheoremRun(unittest.TestCase):
    """On the degenerate family the unit-slope start drifts off y = x +
       O(log x) while the refined start keeps to it, at both tolerances"""
    def runTest(self):
        report = asymptotics.verify_asymptotics(DEGENERATE, x0=10.0,
                                                x_end=1e4, offsets=(0.1,))
        self.assertTrue(report.passed)
        plain, refined = report.members
        self.assertFalse(plain['refined'])
        self.assertEqual(plain['status'], 'fail')
        self.assertGreater(plain['bound_ratio'], asymptotics.BOUND_SLACK)
        self.assertTrue(refined['refined'])
        self.assertEqual(refined['status'], 'pass')
        self.assertLess(refined['final_ratio'], 0.01)
        self.assertLess(abs(refined['slope']), 0.01)
        halved = asymptotics.verify_asymptotics(DEGENERATE, x0=10.0,
                                                x_end=1e4, offsets=(0.1,),
                                                rtol=5e-11, atol=5e-13)
        self.assertTrue(halved.passed)
        self.assertEqual([m['status'] for m in halved.members],
                         [m['status'] for m in report.members])
        self.assertLess(abs(halved.members[1]['slope'] - refined['slope']),
                        1e-6)


class TheoremControl(unittest.TestCase):
    """thetax = 0.5 has no member tracking y = x"""
    def runTest(self):
        report = asymptotics.verify_asymptotics(CONTROL, x0=10.0, x_end=1e4,
                                                offsets=(0.1,))
        self.assertFalse(report.passed)
        self.assertNotEqual(report.members[0]['status'], 'pass')


class RefineWithoutCompletion(unittest.TestCase):
    """A unit-slope run that stops early is returned unrefined"""
    def runTest(self):
        traj = painleve.integrate(painleve.PVISystem(CONTROL),
                                  painleve.OdeState(10.0, 10.1, 1.0), 1e4)
        self.assertFalse(traj.completed)
        slope, best = asymptotics.refine_slope(CONTROL, 10.0, 0.1, 1e4,
                                               first=traj)
        self.assertEqual(slope, 0.0)
        self.assertIs(best, traj)


load_tests = repeatable.make_load_tests([
    XiDiscriminantAtZero, XiPolyMatches, CurveDiscriminantRatio,
    EqualExponents, DegeneracyDecay, DegeneracyControl, OnManifold,
    DegenerateModulation, RemainderAnalysis, AsymptoticsStructure,
    TheoremRun, TheoremControl, RefineWithoutCompletion,
])
