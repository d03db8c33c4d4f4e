"""Microdata tables, distance matrices and great-circle geometry.

A dataset is a pair (T, D): a microdata table T plus a square matrix D of
pairwise distances between its records.  D only has to be a pseudometric,
so off-diagonal zeros are allowed (two records may sit at the same
location) and the triangle inequality is never checked (published
matrices may have been perturbed).
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import InputFormatError

EARTH_RADIUS_KM = 6371.0

# column names reserved for coordinates in microdata CSV files
LON_COLUMN = "lon"
LAT_COLUMN = "lat"


@dataclass(frozen=True)
class GeoPoint:
    """WGS84 coordinates in decimal degrees."""

    lon: float
    lat: float

    def __post_init__(self) -> None:
        # normalise numpy scalars so serialised output stays plain decimal
        object.__setattr__(self, "lon", float(self.lon))
        object.__setattr__(self, "lat", float(self.lat))
        if not -180.0 <= self.lon <= 180.0:
            raise InputFormatError(f"longitude out of range: {self.lon}")
        if not -90.0 <= self.lat <= 90.0:
            raise InputFormatError(f"latitude out of range: {self.lat}")


def great_circle_distance(p1: GeoPoint, p2: GeoPoint) -> float:
    """Spherical law of cosines distance in kilometres, R = 6371 km.

    The cosine is clamped to [-1, 1] before the arccos so that floating
    point overshoot near identical or antipodal points can never produce
    a domain error.
    """
    lat1 = math.radians(p1.lat)
    lat2 = math.radians(p2.lat)
    c = (math.sin(lat1) * math.sin(lat2)
         + math.cos(lat1) * math.cos(lat2)
         * math.cos(math.radians(p1.lon) - math.radians(p2.lon)))
    c = min(1.0, max(-1.0, c))
    return EARTH_RADIUS_KM * math.acos(c)


def distance_matrix(points: Sequence[GeoPoint]) -> "DistanceMatrix":
    """Pairwise great-circle distances of a point sequence.

    Every entry is computed by the exact operation sequence of
    great_circle_distance, so entries[i][j] == great_circle_distance(
    points[i], points[j]) holds bit for bit.
    """
    if len(points) == 0:
        raise InputFormatError("distance_matrix requires at least one point")
    n = len(points)
    rlon = [math.radians(p.lon) for p in points]
    slat = [math.sin(math.radians(p.lat)) for p in points]
    clat = [math.cos(math.radians(p.lat)) for p in points]
    entries = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            c = slat[i] * slat[j] + clat[i] * clat[j] * math.cos(rlon[i] - rlon[j])
            c = min(1.0, max(-1.0, c))
            d = EARTH_RADIUS_KM * math.acos(c)
            entries[i, j] = d
            entries[j, i] = d
    return DistanceMatrix(entries, validate=False)


@dataclass(frozen=True)
class MicrodataRecord:
    """One table row: attribute name to value, all values kept as strings."""

    values: dict

    def get(self, attribute: str) -> str:
        return self.values[attribute]


class MicrodataTable:
    """An ordered microdata table with a designated quasi-identifier set.

    qi_attributes are the columns a snooper can observe in both files;
    id_attribute optionally names a ground-truth identity column (never a
    quasi-identifier).  Coordinates, when present, ride along as points
    but are not attributes.  Immutable after construction.
    """

    def __init__(
        self,
        records: Sequence[MicrodataRecord],
        schema: Sequence[str],
        qi_attributes: Sequence[str],
        id_attribute: Optional[str] = None,
        points: Optional[Sequence[GeoPoint]] = None,
    ) -> None:
        schema = tuple(schema)
        qi_attributes = tuple(qi_attributes)
        if len(records) < 1:
            raise InputFormatError("table must contain at least one record")
        if len(set(schema)) != len(schema):
            raise InputFormatError("duplicate attribute names in schema")
        for bad in (LON_COLUMN, LAT_COLUMN):
            if bad in schema:
                raise InputFormatError(f"'{bad}' is reserved for coordinates")
        if not set(qi_attributes) <= set(schema):
            raise InputFormatError("qi_attributes must be a subset of the schema")
        if id_attribute is not None:
            if id_attribute not in schema:
                raise InputFormatError(f"unknown id_attribute '{id_attribute}'")
            if id_attribute in qi_attributes:
                raise InputFormatError("id_attribute may not be a quasi-identifier")
        for i, rec in enumerate(records):
            missing = set(schema) - set(rec.values)
            if missing:
                raise InputFormatError(f"record {i + 1} lacks attributes {sorted(missing)}")
        if id_attribute is not None:
            ids = [rec.get(id_attribute) for rec in records]
            if len(set(ids)) != len(ids):
                raise InputFormatError(f"duplicate values in id column '{id_attribute}'")
        if points is not None and len(points) != len(records):
            raise InputFormatError("points and records must have equal length")
        self.records = tuple(records)
        self.schema = schema
        self.qi_attributes = qi_attributes
        self.id_attribute = id_attribute
        self.points = tuple(points) if points is not None else None

    def __len__(self) -> int:
        return len(self.records)

    def qi_tuple(self, row: int) -> tuple:
        """Quasi-identifier value tuple of a 0-based row, whitespace-trimmed."""
        rec = self.records[row]
        return tuple(rec.get(a).strip() for a in self.qi_attributes)

    def with_qi(self, qi_attributes: Sequence[str]) -> "MicrodataTable":
        """Same table with a different quasi-identifier designation."""
        return MicrodataTable(self.records, self.schema, qi_attributes,
                              self.id_attribute, self.points)


class DistanceMatrix:
    """Symmetric nonnegative square matrix with zero diagonal.

    Values are stored exactly as supplied: loading never re-symmetrises,
    so a published matrix keeps its printed entries.
    """

    #: relative tolerance of the symmetry check applied to loaded matrices
    SYMMETRY_RTOL = 1e-9

    def __init__(self, entries: np.ndarray, validate: bool = True) -> None:
        entries = np.asarray(entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InputFormatError(f"matrix must be square, got shape {entries.shape}")
        if validate:
            if np.any(np.diagonal(entries) != 0.0):
                raise InputFormatError("matrix diagonal must be zero")
            if np.any(entries < 0.0):
                raise InputFormatError("matrix entries must be nonnegative")
            if not np.allclose(entries, entries.T, rtol=self.SYMMETRY_RTOL, atol=1e-12):
                raise InputFormatError("matrix is not symmetric within tolerance")
        entries.setflags(write=False)
        self.entries = entries
        self.n = entries.shape[0]

    def __getitem__(self, ij) -> float:
        i, j = ij
        return float(self.entries[i, j])


def load_table(
    path,
    qi_attributes: Sequence[str] = (),
    id_attribute: Optional[str] = None,
) -> MicrodataTable:
    """Read a microdata CSV: header row, one column per attribute, optional
    lon/lat coordinate columns in decimal degrees."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputFormatError(f"{path}: empty file") from None
        rows = list(reader)
    if not rows:
        raise InputFormatError(f"{path}: no data rows")
    has_coords = LON_COLUMN in header and LAT_COLUMN in header
    if (LON_COLUMN in header) != (LAT_COLUMN in header):
        raise InputFormatError(f"{path}: lon and lat columns must appear together")
    schema = [h for h in header if h not in (LON_COLUMN, LAT_COLUMN)]
    if not schema:
        raise InputFormatError(f"{path}: no attribute columns")
    records = []
    points = [] if has_coords else None
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise InputFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        by_name = dict(zip(header, row))
        records.append(MicrodataRecord({a: by_name[a] for a in schema}))
        if has_coords:
            try:
                points.append(GeoPoint(float(by_name[LON_COLUMN]), float(by_name[LAT_COLUMN])))
            except ValueError:
                raise InputFormatError(f"{path}:{lineno}: malformed coordinate") from None
    return MicrodataTable(records, schema, qi_attributes, id_attribute, points)


def save_table(table: MicrodataTable, path) -> None:
    path = Path(path)
    header = list(table.schema)
    if table.points is not None:
        header += [LON_COLUMN, LAT_COLUMN]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, rec in enumerate(table.records):
            row = [rec.get(a) for a in table.schema]
            if table.points is not None:
                p = table.points[i]
                row += [repr(p.lon), repr(p.lat)]
            writer.writerow(row)


def load_matrix(path) -> DistanceMatrix:
    """Read a headerless CSV of n rows times n decimal values."""
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, line in enumerate(csv.reader(fh), start=1):
            if not line:
                continue
            try:
                rows.append([float(x) for x in line])
            except ValueError:
                raise InputFormatError(f"{path}:{lineno}: malformed number") from None
    if not rows:
        raise InputFormatError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InputFormatError(f"{path}: ragged rows")
    if len(rows) != width:
        raise InputFormatError(f"{path}: matrix must be square, got {len(rows)}x{width}")
    return DistanceMatrix(np.array(rows, dtype=float))


def save_matrix(matrix: DistanceMatrix, path) -> None:
    # %.17g round-trips every float64 exactly
    np.savetxt(path, matrix.entries, fmt="%.17g", delimiter=",")


def file_digest(path) -> str:
    """Hex SHA-256 of a file, for run manifests."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
