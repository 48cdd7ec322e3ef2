"""Number formatting and CSV/JSON writers shared by every table type."""

import csv
import io
import json
import math
from fractions import Fraction
from numbers import Integral


def fmt_number(x) -> str:
    """Floats with 17 significant digits, rationals as ``num/den``."""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, Integral):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def json_number(x):
    if isinstance(x, Fraction):
        return fmt_number(x) if x.denominator != 1 else x.numerator
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, Integral):
        return int(x)
    x = float(x)
    if math.isinf(x) or math.isnan(x):
        return fmt_number(x)
    return float(fmt_number(x))


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return json_number(obj)


def write_csv(path, header, rows):
    """Write rows to ``path``; ``path=None`` returns the CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt_number(v) if not isinstance(v, str) else v for v in r])
    text = buf.getvalue()
    if path is None:
        return text
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return text


def write_json(path, doc):
    text = json.dumps(jsonable(doc), indent=2, sort_keys=False)
    if path is None:
        return text
    with open(path, "w") as fh:
        fh.write(text + "\n")
    return text
