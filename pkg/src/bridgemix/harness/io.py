"""CSV ingestion, draws files and JSON reports."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ..model import DataError, standardize

FLOAT_FMT = "%.17g"


class InputFormatError(DataError):
    """Base class for malformed input files."""


class RaggedRowsError(InputFormatError):
    pass


class NonNumericError(InputFormatError):
    pass


class MissingResponseError(InputFormatError):
    pass


def read_table(path):
    """Return ``(header, values)`` from a headered numeric CSV."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputFormatError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise InputFormatError(f"{path} has a header but no data rows")
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise RaggedRowsError(f"{path}:{i}: expected {len(header)} fields, found {len(row)}")
        for j, cell in enumerate(row):
            try:
                values[i - 2, j] = float(cell)
            except ValueError:
                raise NonNumericError(f"{path}:{i}: column {header[j]!r} holds non-numeric {cell!r}") from None
    return header, values


def load_csv(path, response="y", center_y=True, standardize_X=True):
    """Load a regression problem; ``response`` names the response column.

    All other columns are predictors.  Centering and scaling follow
    :func:`bridgemix.model.standardize`.
    """
    header, values = read_table(path)
    if response not in header:
        raise MissingResponseError(f"response column {response!r} not found in {header}")
    k = header.index(response)
    names = tuple(h for j, h in enumerate(header) if j != k)
    if not names:
        raise InputFormatError("no predictor columns")
    X = np.delete(values, k, axis=1)
    return standardize(values[:, k], X, center_y=center_y, standardize_X=standardize_X, names=names)


def write_csv(path, header, values):
    """Write a numeric table with full round-trip precision."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in values:
            w.writerow([FLOAT_FMT % v for v in row])


def draws_header(store):
    head = ["iteration"] + store.column_names() + ["tau", "nu", "sigma2", "alpha"]
    if store.labels is not None:
        head += [f"label_{j + 1}" for j in range(store.p)]
    return head


def write_draws(store, path):
    """One row per retained sweep; labels appended for triangle runs."""
    cfg = store.config
    iters = np.arange(cfg.burn_in, cfg.iterations, cfg.thin, dtype=float)
    cols = [iters[:, None], store.beta, store.tau[:, None], store.nu[:, None],
            store.sigma2[:, None], store.alpha[:, None]]
    if store.labels is not None:
        cols.append(store.labels.astype(float))
    write_csv(path, draws_header(store), np.hstack(cols))


def read_draws(path):
    """Return the draws table as a dict of column name -> array."""
    header, values = read_table(path)
    return {h: values[:, j] for j, h in enumerate(header)}


def store_from_table(table, config, method, names=()):
    """Rebuild a :class:`DrawsStore` from :func:`read_draws` output."""
    from .chain import DrawsStore

    beta_cols = [k for k in table if k not in ("iteration", "tau", "nu", "sigma2", "alpha")
                 and not k.startswith("label_")]
    label_cols = [k for k in table if k.startswith("label_")]
    beta = np.column_stack([table[k] for k in beta_cols])
    labels = np.column_stack([table[k] for k in label_cols]).astype(np.int8) if label_cols else None
    return DrawsStore(beta, table["tau"], table["nu"], table["sigma2"], table["alpha"], labels,
                      method, config, int(config.seed), names=tuple(names) or tuple(beta_cols))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no inf/nan; keep them readable and reversible
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def _restore(obj):
    if isinstance(obj, dict):
        return {k: _restore(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_restore(v) for v in obj]
    if obj in ("nan", "inf", "-inf"):
        return float(obj)
    return obj


def dumps_report(report):
    return json.dumps(_jsonable(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def loads_report(text):
    return _restore(json.loads(text))


def write_report(report, path):
    Path(path).write_text(dumps_report(report), encoding="utf-8")


def read_report(path):
    return loads_report(Path(path).read_text(encoding="utf-8"))
