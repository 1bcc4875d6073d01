"""%CAP matrices, reference data and fitness reports."""

import csv
import io
import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..damage import PARAM_NAMES, TIME_POINTS
from ..errors import HealthyAmplitudeDegenerate, ParseError, ValidationError

N_CASES = 6
SHAPE = (N_CASES, len(TIME_POINTS))
REFERENCE_HEADER = ["case"] + [f"t{t}" for t in TIME_POINTS]
REFERENCE_MAX = 150.0
HEALTHY_FLOOR = 1.0  # mV


def percent_cap(damaged_amp, healthy_amp, floor=HEALTHY_FLOOR):
    if not healthy_amp > floor:
        raise HealthyAmplitudeDegenerate(
            f"healthy amplitude {healthy_amp:.4g} mV is not above {floor} mV; "
            "the undamaged model does not conduct")
    return damaged_amp / healthy_amp * 100.0


@dataclass(frozen=True, eq=False)
class CapMatrix:
    """%CAP per loading case (rows 1..6) and relaxation time (columns 0..30 min)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != SHAPE:
            raise ValueError(f"expected a {SHAPE} matrix, got {v.shape}")
        object.__setattr__(self, "values", v)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_text())

    def to_csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REFERENCE_HEADER)
        for i, row in enumerate(self.values, start=1):
            w.writerow([i, *(repr(float(x)) for x in row)])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class ReferenceMatrix(CapMatrix):
    provenance: str = ""


def _parse_reference(lines, source):
    provenance = []
    body = []
    for line in lines:
        if line.startswith("#"):
            provenance.append(line[1:].strip())
        elif line.strip():
            body.append(line)
    reader = csv.reader(body)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError(f"{source}: empty file") from None
    if header != REFERENCE_HEADER:
        raise ParseError(f"{source}: expected header {','.join(REFERENCE_HEADER)}, got {','.join(header)}")

    values = np.full(SHAPE, np.nan)
    seen = set()
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(REFERENCE_HEADER):
            raise ValidationError(f"{source}: expected {len(REFERENCE_HEADER)} fields", row=lineno)
        try:
            case = int(row[0])
        except ValueError:
            raise ParseError(f"{source}: case id {row[0]!r} is not an integer (row {lineno})") from None
        if not 1 <= case <= N_CASES:
            raise ValidationError(f"{source}: unknown case id {case}", row=lineno, column="case")
        if case in seen:
            raise ValidationError(f"{source}: duplicate case {case}", row=lineno, column="case")
        seen.add(case)
        for j, cell in enumerate(row[1:]):
            col = REFERENCE_HEADER[j + 1]
            if not cell.strip():
                raise ValidationError(f"{source}: missing cell", row=lineno, column=col)
            try:
                x = float(cell)
            except ValueError:
                raise ParseError(f"{source}: {cell!r} is not a number (row {lineno}, column {col})") from None
            if not math.isfinite(x) or x < 0 or x > REFERENCE_MAX:
                raise ValidationError(f"{source}: value {x} outside [0, {REFERENCE_MAX:g}]",
                                      row=lineno, column=col)
            values[case - 1, j] = x
    missing = sorted(set(range(1, N_CASES + 1)) - seen)
    if missing:
        raise ValidationError(f"{source}: missing case {', '.join(map(str, missing))}")
    return ReferenceMatrix(values, provenance="\n".join(provenance))


def load_reference(path):
    try:
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError:
        raise
    except (IsADirectoryError, PermissionError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    return _parse_reference(lines, str(path))


def default_reference():
    """Approximate digitization shipped with the package (see its provenance)."""
    text = resources.files("nervecal.data").joinpath("reference_cap.csv").read_text()
    return _parse_reference(text.splitlines(), "reference_cap.csv")


@dataclass(frozen=True, eq=False)
class FitnessReport:
    total: float
    per_cell: np.ndarray
    sim: CapMatrix | None
    reference: ReferenceMatrix | None
    params: object
    mode: str
    error: str | None = None

    @property
    def ok(self):
        return self.error is None

    def rows(self):
        for i in range(SHAPE[0]):
            for j, t in enumerate(TIME_POINTS):
                yield (i + 1, t, float(self.sim.values[i, j]), float(self.reference.values[i, j]),
                       float(self.per_cell[i, j]))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["case", "t", "sim", "ref", "abs_err"])
            for case, t, s, r, e in self.rows():
                w.writerow([case, t, repr(s), repr(r), repr(e)])

    def to_dict(self):
        p = self.params
        return {
            "mode": self.mode,
            "total": self.total,
            "error": self.error,
            "params": {n: getattr(p, n) for n in PARAM_NAMES} if p is not None else None,
            "cells": [dict(zip(("case", "t", "sim", "ref", "abs_err"), r)) for r in self.rows()]
            if self.sim is not None else [],
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def fitness_from_matrix(sim, reference, params=None, mode="single_axon"):
    """L1 distance between simulated and reference %CAP, summed case by case."""
    per_cell = np.abs(sim.values - reference.values)
    total = math.fsum(per_cell.ravel().tolist())
    return FitnessReport(total=total, per_cell=per_cell, sim=sim, reference=reference,
                         params=params, mode=mode)


def failed_report(params, mode, message):
    return FitnessReport(total=math.inf, per_cell=np.full(SHAPE, np.inf), sim=None,
                         reference=None, params=params, mode=mode, error=message)
