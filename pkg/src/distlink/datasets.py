"""Accessors for the bundled example datasets.

The poets dataset is a 10-record microdata table about European poets:
the published (anonymised) version keeps century of birth and language
and ships a matrix of integer-rounded birthplace distances; the
identification table carries names and locations for a partly
overlapping set of poets, with its own distance matrix.  Rows 1 to 4
of both files denote the same four poets, which makes the pair a
golden fixture for the attack.
"""

from __future__ import annotations

import json
from importlib.resources import files

from .core import DistanceMatrix, MicrodataTable, load_matrix, load_table

POETS_QI = ("cob", "language")


def _data_path(name: str):
    return files("distlink").joinpath("data", name)


def example1_table() -> MicrodataTable:
    """Four people born in four cities, qi (sex, yob), with coordinates."""
    return load_table(_data_path("example1_cities.csv"), qi_attributes=("sex", "yob"))


def poets_full_table() -> MicrodataTable:
    """The unanonymised poets table: name, yob, language, loc."""
    return load_table(_data_path("poets_full.csv"))


def poets_target_table() -> MicrodataTable:
    """The anonymised target table: cob and language only."""
    return load_table(_data_path("poets_target.csv"), qi_attributes=POETS_QI)


def poets_ident_table() -> MicrodataTable:
    """The snooper's identification table: name, cob, language, loc."""
    return load_table(_data_path("poets_ident.csv"), qi_attributes=POETS_QI)


def poets_birthplaces_table() -> MicrodataTable:
    """Birthplace coordinates per target row; distances between these
    points reproduce the published target matrix up to its integer
    rounding."""
    return load_table(_data_path("poets_birthplaces.csv"))


def poets_target_matrix() -> DistanceMatrix:
    return load_matrix(_data_path("poets_d1.csv"))


def poets_ident_matrix() -> DistanceMatrix:
    return load_matrix(_data_path("poets_d2.csv"))


def census_qi_distributions() -> dict:
    """Census-like gender and age-band marginals for synthetic microdata."""
    with _data_path("census_qi.json").open(encoding="utf-8") as fh:
        return json.load(fh)
