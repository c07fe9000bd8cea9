"""Reader for the simulation CLI's CSV dialect.

Files carry '#'-prefixed metadata lines, then one header row, then
numeric rows.  The loader returns the metadata, the header, and one
float column per name; it never guesses at missing columns.
"""

import csv
import hashlib
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """Input columns do not match what the figure kind needs."""


class Table:
    __slots__ = ("path", "meta", "header", "columns", "sha256")

    def __init__(self, path, meta, header, columns, sha256):
        self.path = path
        self.meta = meta
        self.header = header
        self.columns = columns
        self.sha256 = sha256

    def require(self, *names: str) -> None:
        missing = [c for c in names if c not in self.columns]
        if missing:
            raise SchemaError(
                f"{self.path}: expected columns {list(names)}, "
                f"found {self.header}; missing {missing}"
            )

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]


def load_table(path: str | Path) -> Table:
    path = Path(path)
    raw = path.read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    meta: dict[str, str] = {}
    rows: list[list[str]] = []
    header: list[str] | None = None
    for line in raw.decode("utf-8").splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                k, v = body.split(":", 1)
                meta[k.strip()] = v.strip()
            continue
        if not line.strip():
            continue
        cells = next(csv.reader([line]))
        if header is None:
            header = [c.strip() for c in cells]
        else:
            rows.append(cells)
    if header is None:
        raise SchemaError(f"{path}: no header row")
    columns = {
        name: np.array([float(r[i]) for r in rows], dtype=np.float64)
        for i, name in enumerate(header)
    }
    return Table(path, meta, header, columns, digest)
