"""Nominal datasets: loading, encoding, subsampling, splitting and orderings.

Every column is treated as a nominal variable. Value symbols are mapped to
dense ordinals in first-seen order, and the literal ``?`` is just another
value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np


class DataFormatError(ValueError):
    """Raised for malformed input files (ragged rows, empty input)."""


BUILTIN = {
    "house": "house-votes-84.csv",
    "mushroom": "mushroom.csv",
}


@dataclass(frozen=True)
class VariableSchema:
    index: int
    name: str
    values: tuple[str, ...]

    @property
    def arity(self) -> int:
        return len(self.values)

    def ordinal(self, symbol: str) -> int:
        return self.values.index(symbol)


@dataclass(frozen=True)
class Observation:
    id: int
    values: tuple[int, ...]


@dataclass(frozen=True)
class SplitResult:
    train: list[int]
    validation: list[int]
    test: list[int]


@dataclass
class Dataset:
    schema: list[VariableSchema]
    observations: list[Observation]
    name: str = "data"

    def __post_init__(self):
        if not self.schema or not self.observations:
            raise DataFormatError("dataset needs at least one variable and one observation")
        n_vars = len(self.schema)
        for obs in self.observations:
            if len(obs.values) != n_vars:
                raise DataFormatError(f"observation {obs.id} has {len(obs.values)} values, expected {n_vars}")
            for var, v in zip(self.schema, obs.values):
                if not 0 <= v < var.arity:
                    raise DataFormatError(f"observation {obs.id}: ordinal {v} out of range for {var.name}")

    def __len__(self) -> int:
        return len(self.observations)

    @property
    def n_vars(self) -> int:
        return len(self.schema)

    @property
    def arities(self) -> list[int]:
        return [v.arity for v in self.schema]

    @property
    def ids(self) -> list[int]:
        return [o.id for o in self.observations]

    def by_id(self, obs_id: int) -> Observation:
        return self.observations[obs_id]

    def decode(self, obs: Observation) -> list[str]:
        return [var.values[v] for var, v in zip(self.schema, obs.values)]

    def subset(self, ids, name: str | None = None) -> "Dataset":
        """Re-index the given observations as a standalone dataset (schema kept)."""
        obs = [Observation(i, self.observations[k].values) for i, k in enumerate(ids)]
        return Dataset(self.schema, obs, name or self.name)


def encode_rows(rows: list[list[str]], names: list[str] | None = None, name: str = "data") -> Dataset:
    if not rows:
        raise DataFormatError("empty input")
    width = len(rows[0])
    if width < 1:
        raise DataFormatError("rows must have at least one column")
    for k, row in enumerate(rows):
        if len(row) != width:
            raise DataFormatError(f"row {k} has {len(row)} columns, expected {width}")
    if names is None:
        names = [f"V{i + 1}" for i in range(width)]
    elif len(names) != width:
        raise DataFormatError(f"header has {len(names)} columns, rows have {width}")

    tables: list[dict[str, int]] = [{} for _ in range(width)]
    encoded = []
    for k, row in enumerate(rows):
        vals = []
        for i, sym in enumerate(row):
            table = tables[i]
            if sym not in table:
                table[sym] = len(table)
            vals.append(table[sym])
        encoded.append(Observation(k, tuple(vals)))
    schema = [VariableSchema(i, names[i], tuple(tables[i])) for i in range(width)]
    return Dataset(schema, encoded, name)


def load_csv(path, has_header: bool = False, name: str | None = None) -> Dataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as f:
        rows = [r for r in csv.reader(f) if r]
    if not rows:
        raise DataFormatError(f"{path}: empty input")
    header = None
    if has_header:
        header, rows = rows[0], rows[1:]
        if not rows:
            raise DataFormatError(f"{path}: header but no data rows")
    return encode_rows(rows, header, name or path.stem)


def load_builtin(key: str) -> Dataset:
    """Load one of the bundled UCI files (``house`` or ``mushroom``)."""
    try:
        fname = BUILTIN[key]
    except KeyError:
        raise ValueError(f"unknown builtin dataset {key!r}; choose from {sorted(BUILTIN)}") from None
    with resources.as_file(resources.files("pctree.data") / fname) as p:
        return load_csv(p, has_header=True, name=key)


def load_dataset(spec: str, has_header: bool = False) -> Dataset:
    """Resolve a ``--data`` argument: a builtin key, ``mushroom1000[:seed]``, or a CSV path."""
    if spec in BUILTIN:
        return load_builtin(spec)
    if spec.startswith("mushroom1000"):
        seed = int(spec.split(":", 1)[1]) if ":" in spec else 0
        return subsample(load_builtin("mushroom"), 1000, seed)
    p = Path(spec)
    if not p.exists():
        raise FileNotFoundError(f"no such dataset: {spec}")
    return load_csv(p, has_header=has_header)


def subsample(d: Dataset, n: int, seed: int) -> Dataset:
    if not 1 <= n <= len(d):
        raise ValueError(f"subsample size {n} out of range 1..{len(d)}")
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(d), size=n, replace=False)
    return d.subset([int(k) for k in picked], name=f"{d.name}-{n}")


def split(d: Dataset, fractions=(0.4, 0.4, 0.2), seed: int = 0) -> SplitResult:
    """Shuffle ids and cut them into train/validation/test blocks.

    Block sizes are floor(f * n); the leftover observations are dealt one at
    a time to train, validation, test, in that order.
    """
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError("need three positive fractions")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions sum to {sum(fractions)}, not 1")
    n = len(d)
    sizes = [int(np.floor(f * n + 1e-9)) for f in fractions]
    k = 0
    while sum(sizes) < n:
        sizes[k % 3] += 1
        k += 1
    perm = [int(i) for i in np.random.default_rng(seed).permutation(d.ids)]
    a, b = sizes[0], sizes[0] + sizes[1]
    return SplitResult(perm[:a], perm[a:b], perm[b:])


def random_ordering(d: Dataset, seed: int) -> list[int]:
    return [int(i) for i in np.random.default_rng(seed).permutation(d.ids)]


def is_permutation(ordering, ids) -> bool:
    return sorted(ordering) == sorted(ids)
