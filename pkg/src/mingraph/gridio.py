"""CSV/JSON serialization of grid maps and reports.

Floats are written with ``repr`` (shortest round-trip form), so reading a file
back reproduces the values bit for bit.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .graphgeom import Domain, GridMap

_AXES = ("i", "j", "k")


def sidecar_path(csv_path):
    p = Path(csv_path)
    return p.with_name(p.stem + ".domain.json")


def gridmap_to_csv(f):
    """CSV text: header ``i,j[,k],f1..fn`` then one row per node, row-major."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    m = f.domain.dim
    w.writerow(list(_AXES[:m]) + [f"f{a + 1}" for a in range(f.n)])
    idx = f.domain.node_index_grid()
    for row_idx, row_val in zip(idx.tolist(), f.values.tolist()):
        w.writerow([str(i) for i in row_idx] + [repr(v) for v in row_val])
    return buf.getvalue()


def gridmap_from_csv(text, domain):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise InvalidInputError("empty grid map CSV")
    header, body = rows[0], rows[1:]
    m = domain.dim
    if header[:m] != list(_AXES[:m]) or not header[m:]:
        raise InvalidInputError(f"bad CSV header {header!r}")
    n = len(header) - m
    if header[m:] != [f"f{a + 1}" for a in range(n)]:
        raise InvalidInputError(f"bad value columns {header[m:]!r}")
    if len(body) != domain.n_nodes:
        raise InvalidInputError(f"expected {domain.n_nodes} rows, found {len(body)}")
    expected = domain.node_index_grid().tolist()
    values = np.empty((domain.n_nodes, n))
    try:
        for r, (row, want) in enumerate(zip(body, expected)):
            if [int(x) for x in row[:m]] != want:
                raise InvalidInputError(f"row {r + 2}: node index {row[:m]} out of row-major order")
            values[r] = [float(x) for x in row[m:]]
    except ValueError as exc:
        raise InvalidInputError(f"malformed CSV value: {exc}") from None
    return GridMap(domain, values)


def write_gridmap(f, path):
    path = Path(path)
    path.write_text(gridmap_to_csv(f))
    sidecar_path(path).write_text(dumps({"domain": f.domain.to_dict(), "n": f.n}))


def read_gridmap(path, domain=None):
    path = Path(path)
    if domain is None:
        side = sidecar_path(path)
        if not side.exists():
            raise InvalidInputError(f"missing domain sidecar {side}")
        meta = json.loads(side.read_text())
        domain = Domain.from_dict(meta["domain"])
    return gridmap_from_csv(path.read_text(), domain)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if hasattr(o, "value"):     # enums
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj):
    """Stable JSON: sorted keys, UTF-8 friendly, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, default=_default) + "\n"
