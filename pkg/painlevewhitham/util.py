"""Small helpers shared by the numerical modules: the tagged numerical
   stop, magnitude scales for relative residuals, log-log slope fits and
   the CSV/JSON writers used for every exported artifact."""
import csv, json, math, logging
import numpy as np
logger = logging.getLogger(__name__)

FLOAT_FMT = '%.17g'   # round-trips doubles, '.' decimal, no grouping


class NumericalStop(ArithmeticError):
    """Base class for numerical breakdowns which end a computation with
       a tagged reason (pole, regime exit, ...). The CLI maps them to
       exit code 1. Subclasses set the class attribute reason."""
    reason = 'numerical-stop'

    def __init__(self, message, **details):
        ArithmeticError.__init__(self, message)
        self.details = details


def scale_of(*values):
    """Largest absolute value among the arguments, never below 1.
       Used as the denominator of 'relative to scale' tolerances."""
    return max([1.0] + [abs(v) for v in values])


def poly_scale(coefs, y):
    """Sum of the magnitudes of the monomials c_i*y**i (coefficients
       lowest degree first). Bounds the rounding error of evaluating
       the polynomial at y."""
    return sum(abs(c) * abs(y)**i for i, c in enumerate(coefs))


def loglog_slope(xs, ys):
    """Least-squares slope of log(ys) against log(xs)"""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError('log-log fit needs positive data')
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)


def fmt(value):
    """Format a number for CSV output"""
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT % value
    return str(value)


def write_csv(f, header, rows):
    """Write rows (sequences) under a header line to the file object f.
       The header is always emitted, even for an empty table."""
    writer = csv.writer(f, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return dict((str(k), _jsonable(v)) for k, v in obj.items())
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        if math.isnan(obj) or math.isinf(obj):
            return repr(obj)  # JSON has no inf/nan literals
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj):
    """Deterministic JSON text: sorted keys, repr floats, non-finite
       floats as strings."""
    return json.dumps(_jsonable(obj), sort_keys=True)


def write_json(f, obj):
    f.write(dumps(obj))
    f.write('\n')
