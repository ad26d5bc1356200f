"""Command-line front end.

   painleve-whitham MODE [options]

   Options may also come from a JSON config file (--config), keyed by
   the long option names; flags given on the command line win over the
   file, which wins over the defaults. Data (CSV or JSON) goes to --out,
   a one-line JSON summary always goes to stdout. Exit status is 0 on
   success, 1 on a tagged numerical stop and 2 on a configuration
   error."""
import sys, os, json, logging, argparse
import numpy as np
from .util import write_csv, write_json, dumps
from .painleve import (ThetaParams, OdeState, PISystem, PVISystem, integrate,
                       pi_first_integral)
from . import laxpair, whitham, asymptotics
logger = logging.getLogger(__name__)

MODES = ('pi-integrate', 'pi-whitham', 'pvi-integrate', 'pvi-lax-verify',
         'pvi-curve', 'pvi-modulate', 'pvi-theorem2', 'degeneracy')
THETAS = ('theta0', 'theta1', 'thetax')
LOG_LEVELS = {'debug': logging.DEBUG, 'info': logging.INFO,
              'warning': logging.WARNING, 'error': logging.ERROR}


class ConfigError(ValueError):
    pass


def _float_list(value):
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(v) for v in str(value).split(',') if v.strip()]


# name: (type, help)
OPTIONS = {
    'theta0': (float, 'monodromy exponent at 0'),
    'theta1': (float, 'monodromy exponent at 1'),
    'thetax': (float, 'monodromy exponent at x'),
    'thetainf': (float, 'monodromy exponent at infinity (k1 - k2)'),
    'k1': (float, 'first diagonal entry of A-infinity'),
    'k2': (float, 'second diagonal entry of A-infinity'),
    'x0': (float, 'initial x (or X for modulation modes)'),
    'y0': (float, 'initial y (the cycle hint for pvi-modulate)'),
    'dy0': (float, "initial y'"),
    'x_end': (float, 'final x (or X)'),
    'frozen_x': (float, 'freeze X in the PI equation at this value'),
    'F0': (float, 'initial Whitham coefficient'),
    'F6': (float, 'Whitham coefficient for pvi-curve (curve convention)'),
    'kgauge': (float, 'initial gauge constant k'),
    'form': (str, 'PVI modulation form: implicit or residue'),
    'threshold': (float, 'zero-curvature residual threshold'),
    'samples': (int, 'number of x samples for pvi-lax-verify'),
    'X_list': (_float_list, 'comma-separated X values for degeneracy'),
    'offsets': (_float_list, 'comma-separated y(x0) - x0 offsets'),
    'rtol': (float, 'relative tolerance'),
    'atol': (float, 'absolute tolerance'),
    'seed': (int, 'seed for randomized sampling'),
    'method': (str, 'Runge-Kutta pair: DOP853 or RK45'),
    'format': (str, 'data format: csv or json'),
    'out': (str, 'data output path'),
}

DEFAULTS = {'rtol': 1e-10, 'atol': 1e-12, 'seed': 20240101,
            'method': 'DOP853', 'format': None, 'out': None, 'kgauge': 1.0,
            'form': 'implicit', 'threshold': 1e-5, 'samples': 5,
            'offsets': [0.1, 0.5, 1.0],
            'X_list': [1e2, 1e3, 1e4, 1e5]}
MODE_DEFAULTS = {'pvi-theorem2': {'x0': 10.0, 'x_end': 1e4}}
REQUIRED = {
    'pi-integrate': ('x0', 'y0', 'dy0', 'x_end'),
    'pi-whitham': ('x0', 'x_end'),
    'pvi-integrate': ('x0', 'y0', 'dy0', 'x_end'),
    'pvi-lax-verify': ('x0', 'y0', 'dy0', 'x_end'),
    'pvi-curve': ('x0', 'F6'),
    'pvi-modulate': ('x0', 'F0', 'x_end'),
    'pvi-theorem2': ('x0', 'x_end'),
    'degeneracy': ('X_list',),
}
DATA_FORMAT = {'pi-integrate': 'csv', 'pi-whitham': 'csv',
               'pvi-integrate': 'csv', 'pvi-modulate': 'csv'}


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _flag(name):
    return '--' + name.replace('_', '-')


def build_parser():
    common = ArgumentParser(add_help=False,
                            argument_default=argparse.SUPPRESS)
    common.add_argument('--config', help='JSON config file')
    common.add_argument('-v', '--verbose', action='store_true',
                        help='debug logging')
    for name in sorted(OPTIONS):
        kind, text = OPTIONS[name]
        common.add_argument(_flag(name), dest=name, type=kind, help=text)
    parser = ArgumentParser(prog='painleve-whitham',
                            description='Whitham analysis of Painleve I/VI')
    sub = parser.add_subparsers(dest='mode', metavar='MODE')
    sub.required = True
    for mode in MODES:
        sub.add_parser(mode, parents=[common],
                       argument_default=argparse.SUPPRESS)
    return parser


def load_config_file(path):
    try:
        with open(path) as f:
            raw = json.load(f)
    except (IOError, OSError, ValueError) as err:
        raise ConfigError('cannot read config file %s: %s' % (path, err))
    if not isinstance(raw, dict):
        raise ConfigError('config file %s is not a JSON object' % path)
    values = {}
    for key, value in raw.items():
        name = key.lstrip('-').replace('-', '_')
        if name not in OPTIONS:
            raise ConfigError('unknown config key %r' % key)
        try:
            values[name] = OPTIONS[name][0](value)
        except (TypeError, ValueError):
            raise ConfigError('bad value %r for %s' % (value, key))
    return values


def make_params(values):
    """ThetaParams from theta0/theta1/thetax and thetainf or k1/k2"""
    missing = [n for n in THETAS if values.get(n) is None]
    if missing:
        raise ConfigError('missing --%s' % missing[0])
    th0, th1, thx = [values[n] for n in THETAS]
    thinf, k1, k2 = values.get('thetainf'), values.get('k1'), values.get('k2')
    if (k1 is None) != (k2 is None):
        raise ConfigError('--k1 and --k2 must be given together')
    if thinf is None and k1 is None:
        raise ConfigError('missing --thetainf (or --k1/--k2)')
    if k1 is None:
        return ThetaParams(th0, th1, thx, thinf)
    try:
        params = ThetaParams.from_k(th0, th1, thx, k1, k2)
    except ValueError as err:
        raise ConfigError(str(err))
    if thinf is not None and abs(params.thetainf - thinf) > \
            1e-12*max(1.0, abs(thinf)):
        raise ConfigError('k1 - k2 = %r contradicts --thetainf %r' %
                          (params.thetainf, thinf))
    return params


class RunConfig(object):
    def __init__(self, mode, params, values, verbose=False):
        self.mode = mode
        self.params = params
        self.values = values
        self.verbose = verbose

    def __getattr__(self, name):
        try:
            return self.__dict__['values'][name]
        except KeyError:
            raise AttributeError(name)

    def as_dict(self):
        return {'mode': self.mode, 'seed': self.values.get('seed'),
                'params': self.params.as_dict() if self.params else None}


def parse_config(argv, config_file=None):
    ns = vars(build_parser().parse_args(argv))
    mode = ns.pop('mode')
    verbose = ns.pop('verbose', False)
    config_file = ns.pop('config', config_file)
    values = dict((name, None) for name in OPTIONS)
    values.update(DEFAULTS)
    values.update(MODE_DEFAULTS.get(mode, {}))
    if config_file:
        values.update(load_config_file(config_file))
    values.update(ns)

    missing = [n for n in REQUIRED[mode] if values.get(n) is None]
    if mode == 'pi-whitham' and values.get('F0') is None and \
            (values.get('y0') is None or values.get('dy0') is None):
        missing.append('F0')
    if missing:
        raise ConfigError('missing %s for %s' % (_flag(missing[0]), mode))
    for name in ('rtol', 'atol'):
        if not values[name] > 0.0:
            raise ConfigError('%s must be positive' % _flag(name))
    if values.get('x_end') is not None and values['x_end'] == values['x0']:
        raise ConfigError('empty range: --x-end equals --x0')
    if values['format'] not in (None, 'csv', 'json'):
        raise ConfigError('--format must be csv or json')
    if values['form'] not in ('implicit', 'residue'):
        raise ConfigError('--form must be implicit or residue')
    if values['method'] not in ('DOP853', 'RK45'):
        raise ConfigError('--method must be DOP853 or RK45')
    if values['samples'] < 1:
        raise ConfigError('--samples must be positive')
    if values['format'] is None:
        values['format'] = DATA_FORMAT.get(mode, 'json')

    params = None
    if mode.startswith('pvi') or mode == 'degeneracy':
        params = make_params(values)
        logger.info('parameters: %r', params.as_dict())
    return RunConfig(mode, params, values, verbose)


class Outcome(object):
    """What a mode produced: tabular or structured data, metrics and the
       stop reason (None on success)"""
    def __init__(self, metrics, header=None, rows=None, document=None,
                 stop_reason=None, status=None):
        self.metrics = metrics
        self.header, self.rows = header, rows
        self.document = document
        self.stop_reason = stop_reason
        self.status = status or ('ok' if stop_reason is None else 'stopped')


def _stopped(reason):
    return None if reason == 'completed' else reason


def run_pi_integrate(cfg):
    system = PISystem(cfg.frozen_x)
    traj = integrate(system, OdeState(cfg.x0, cfg.y0, cfg.dy0), cfg.x_end,
                     rtol=cfg.rtol, atol=cfg.atol, method=cfg.method)
    F1 = [pi_first_integral(s, system.bigX(s.x)) for s in traj.states()]
    metrics = {'steps': len(traj) - 1, 'x_final': traj.final.x,
               'F1_initial': F1[0], 'F1_final': F1[-1],
               'F1_drift': F1[-1] - F1[0],
               'F1_max_drift': max(abs(v - F1[0]) for v in F1)}
    rows = [(s.x, s.y, s.dy) for s in traj.states()]
    return Outcome(metrics, ['x', 'y', 'dy'], rows,
                   stop_reason=_stopped(traj.stop_reason))


def _modulation_rows(mtraj):
    n = len(mtraj)
    return [(X, F) + tuple(row) + (mtraj.stop_reason if i == n - 1 else '',)
            for i, (X, F, row) in enumerate(zip(mtraj.Xs, mtraj.Fs,
                                                mtraj.rows))]


MODULATION_HEADER = ['X', 'F', 'ybar', 'y2bar', 'period', 'stop_reason']


def run_pi_whitham(cfg):
    metrics = {}
    direct = None
    F0 = cfg.F0
    if cfg.y0 is not None and cfg.dy0 is not None:
        start = OdeState(cfg.x0, cfg.y0, cfg.dy0)
        direct = integrate(PISystem(), start, cfg.x_end, rtol=cfg.rtol,
                           atol=cfg.atol, method=cfg.method)
        if F0 is None:
            F0 = pi_first_integral(start, cfg.x0)
    mtraj = whitham.solve_pi_whitham(whitham.ModulationState(cfg.x0, F0),
                                     cfg.x_end, rtol=cfg.rtol, atol=cfg.atol,
                                     method=cfg.method)
    metrics.update({'steps': len(mtraj) - 1, 'X_final': mtraj.final.bigX,
                    'F_final': mtraj.final.F,
                    'predicted_drift': mtraj.final.F - F0})
    if direct is not None and direct.completed and mtraj.stop_reason == \
            'completed':
        end = direct.final
        measured = pi_first_integral(end, end.x) - F0
        metrics['measured_drift'] = measured
        metrics['relative_difference'] = \
            abs(metrics['predicted_drift'] - measured)/max(abs(measured),
                                                          1e-300)
    return Outcome(metrics, MODULATION_HEADER, _modulation_rows(mtraj),
                   stop_reason=_stopped(mtraj.stop_reason))


def run_pvi_integrate(cfg):
    traj = integrate(PVISystem(cfg.params), OdeState(cfg.x0, cfg.y0, cfg.dy0),
                     cfg.x_end, rtol=cfg.rtol, atol=cfg.atol,
                     method=cfg.method)
    final = traj.final
    metrics = {'steps': len(traj) - 1, 'x_final': final.x,
               'y_final': final.y, 'dy_final': final.dy}
    rows = [(s.x, s.y, s.dy) for s in traj.states()]
    return Outcome(metrics, ['x', 'y', 'dy'], rows,
                   stop_reason=_stopped(traj.stop_reason))


def run_pvi_lax_verify(cfg):
    params = cfg.params
    system = laxpair.GaugedPVISystem(params, cfg.kgauge)
    traj = integrate(system, OdeState(cfg.x0, cfg.y0, cfg.dy0), cfg.x_end,
                     rtol=cfg.rtol, atol=cfg.atol, method=cfg.method)
    if not traj.completed:
        return Outcome({'steps': len(traj) - 1, 'x_final': traj.final.x},
                       stop_reason=traj.stop_reason)
    aux_worst = f6_worst = curve_worst = 0.0
    for x, vec in zip(traj.xs, traj.vecs):
        state = OdeState(x, vec[0], vec[1])
        aux = laxpair.build_auxiliary(state, params, vec[2])
        aux_worst = max([aux_worst] + list(aux.residuals().values()))
        F6 = laxpair.extract_F6(laxpair.assemble_A6_L6(aux, params, x))
        closed = laxpair.f6_closed_form(aux, params, x)
        f6_worst = max(f6_worst, abs(F6 - closed)/max(1.0, abs(closed)))
        curve_worst = max(curve_worst, abs(laxpair.curve_residual(
            state, params, F6, relative=True)))
    rng = np.random.default_rng(cfg.seed)
    radius = 3.0*max(1.0, abs(cfg.x0), abs(cfg.x_end))
    zs = laxpair.circle_samples(radius, 8, rng.uniform())
    lo, hi = traj.x_range
    margin = 0.05*(hi - lo)
    xs = np.linspace(lo + margin, hi - margin, cfg.samples)
    report = laxpair.zero_curvature_residual_pvi(traj, params, zs, xs)
    flag = int(report.max_residual > cfg.threshold)
    gap = max(abs(laxpair.convention_gap(x, params)) for x in traj.xs)
    if gap > 0.0:
        logger.info('determinant and curve F6 differ by up to %r', gap)
    metrics = {'steps': len(traj) - 1,
               'max_zero_curvature': report.max_residual,
               'max_auxiliary_residual': aux_worst,
               'max_f6_mismatch': f6_worst,
               'max_curve_residual': curve_worst,
               'convention_gap': gap,
               'threshold': cfg.threshold, 'flag': flag}
    rows = [(r['x'], r['z_re'], r['z_im'], r['residual_norm'])
            for r in report.records]
    return Outcome(metrics, ['x', 'z_re', 'z_im', 'residual_norm'], rows,
                   document={'records': report.records},
                   status='flagged' if flag else 'ok')


def run_pvi_curve(cfg):
    curve = whitham.build_curve(cfg.x0, cfg.F6, cfg.params)
    bp = whitham.branch_points(curve)
    ovals = []
    for lo, hi in bp.ovals:
        avg = whitham.cycle_averages(curve, oval=(lo, hi))
        ovals.append({'lower': lo, 'upper': hi, 'ybar': avg.ybar,
                      'y2bar': avg.y2bar, 'period': avg.period,
                      'degenerate': avg.degenerate})
    document = {'X': cfg.x0, 'F6': cfg.F6, 'branch_points': bp.roots,
                'ovals': ovals,
                'discriminant': list(curve.discriminant.coef)}
    rows = [(o['lower'], o['upper'], o['ybar'], o['y2bar'], o['period'])
            for o in ovals]
    return Outcome({'ovals': len(ovals)},
                   ['lower', 'upper', 'ybar', 'y2bar', 'period'], rows,
                   document=document)


def run_pvi_modulate(cfg):
    mtraj = whitham.solve_pvi_whitham(
        whitham.ModulationState(cfg.x0, cfg.F0), cfg.params, cfg.x_end,
        rtol=cfg.rtol, atol=cfg.atol, form=cfg.form, y_hint=cfg.y0,
        method=cfg.method)
    metrics = {'steps': len(mtraj) - 1, 'X_final': mtraj.final.bigX,
               'F_final': mtraj.final.F}
    return Outcome(metrics, MODULATION_HEADER, _modulation_rows(mtraj),
                   stop_reason=_stopped(mtraj.stop_reason))


def run_pvi_theorem2(cfg):
    report = asymptotics.verify_asymptotics(cfg.params, cfg.x0, cfg.x_end,
                                            cfg.offsets, rtol=cfg.rtol,
                                            atol=cfg.atol)
    rows = [(m['offset'], m['slope'], int(m['refined']), m['status'],
             m['reached'], m.get('fitted_C', float('nan')),
             m.get('bound_ratio', float('nan')),
             m.get('final_ratio', float('nan'))) for m in report.members]
    return Outcome({'passed': report.passed,
                    'statuses': [m['status'] for m in report.members]},
                   ['offset', 'slope', 'refined', 'status', 'reached',
                    'fitted_C', 'bound_ratio', 'final_ratio'], rows,
                   document=report.to_dict())


def run_degeneracy(cfg):
    report = asymptotics.degeneracy_report(cfg.X_list, cfg.params)
    check = asymptotics.degenerate_modulation_check(max(cfg.X_list),
                                                    cfg.params)
    document = report.to_dict()
    document['modulation_check'] = check
    rows = list(zip(report.X_list, report.deviations))
    return Outcome({'slope': report.slope, 'violation': report.violation,
                    'fully_degenerate': report.fully_degenerate},
                   ['X', 'deviation'], rows, document=document)


RUNNERS = {'pi-integrate': run_pi_integrate, 'pi-whitham': run_pi_whitham,
           'pvi-integrate': run_pvi_integrate,
           'pvi-lax-verify': run_pvi_lax_verify,
           'pvi-curve': run_pvi_curve, 'pvi-modulate': run_pvi_modulate,
           'pvi-theorem2': run_pvi_theorem2, 'degeneracy': run_degeneracy}


def write_data(cfg, outcome):
    if cfg.out is None or (outcome.rows is None and
                           outcome.document is None):
        return
    with open(cfg.out, 'w') as f:
        if cfg.format == 'csv' and outcome.header is not None:
            write_csv(f, outcome.header, outcome.rows)
        elif outcome.document is not None:
            write_json(f, outcome.document)
        else:
            write_json(f, {'columns': outcome.header, 'rows': outcome.rows})


def run(config, stdout=None):
    """Execute config, write its data file and print the summary.
       Returns the exit status."""
    stdout = stdout or sys.stdout
    summary = config.as_dict()
    logger.info('running %s', config.mode)
    try:
        outcome = RUNNERS[config.mode](config)
    except (ArithmeticError, np.linalg.LinAlgError) as err:
        reason = getattr(err, 'reason', 'numerical-stop')
        logger.error('%s stopped: %s', config.mode, err)
        outcome = Outcome({'message': str(err)}, stop_reason=reason)
    write_data(config, outcome)
    summary['status'] = outcome.status
    summary['metrics'] = outcome.metrics
    if outcome.stop_reason is not None:
        summary['stop_reason'] = outcome.stop_reason
    stdout.write(dumps(summary) + '\n')
    logger.info('%s finished: %s', config.mode, outcome.status)
    return 0 if outcome.stop_reason is None else 1


def setup_logging(verbose=False):
    level = LOG_LEVELS.get(os.environ.get('PW_LOG', 'warning').lower(),
                           logging.WARNING)
    if verbose:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(levelname)s:%(name)s:%(message)s')


def main(argv=None, stdout=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse_config(argv)
    except ValueError as err:
        sys.stderr.write('error: %s\n' % str(err).replace('\n', ' '))
        return 2
    setup_logging(config.verbose)
    try:
        return run(config, stdout)
    except ValueError as err:
        logger.error('%s', err)
        sys.stderr.write('error: %s\n' % str(err).replace('\n', ' '))
        return 2
