"""Readers for the simulation artifact layout: CSV tables plus a
manifest.json per directory. Only the on-disk formats are consumed here;
the simulation package itself is never imported."""

import json
import re
from pathlib import Path

import numpy as np


class SchemaError(Exception):
    """An artifact file is missing a required column."""


def read_table(path):
    """CSV as a dict of arrays: float where possible, strings otherwise."""
    lines = Path(path).read_text(encoding="utf-8").strip().split("\n")
    header = lines[0].split(",")
    raw = [line.split(",") for line in lines[1:]]
    table = {}
    for k, name in enumerate(header):
        column = [row[k] if k < len(row) else "" for row in raw]
        try:
            table[name] = np.array(
                [float(v) if v != "" else np.nan for v in column])
        except ValueError:
            table[name] = np.array(column, dtype=object)
    return table


def require_columns(table, columns, path):
    for name in columns:
        if name not in table:
            raise SchemaError(f"missing column {name!r} in {path}")


def read_manifest(directory):
    path = Path(directory) / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"no manifest.json in {directory}")
    return json.loads(path.read_text(encoding="utf-8"))


_SLICE_RE = re.compile(r"slice_a(?P<alpha>[^_]+)_L(?P<size>\d+)\.csv$")


def parse_alpha_tag(tag):
    if tag == "inf":
        return float("inf")
    return float(tag.replace("p", ".").replace("m", "-"))


def find_slices(directory):
    """(alpha, size, path) for every sweep slice CSV in a directory."""
    out = []
    for path in sorted(Path(directory).glob("slice_a*_L*.csv")):
        match = _SLICE_RE.search(path.name)
        if match:
            out.append((parse_alpha_tag(match.group("alpha")),
                        int(match.group("size")), path))
    return out


def find_series(directory):
    """(alpha, size, jz, path) for persisted per-cell time series."""
    pattern = re.compile(r"series_a(?P<alpha>[^_]+)_L(?P<size>\d+)_jz(?P<jz>.+)\.csv$")
    out = []
    for path in sorted((Path(directory) / "series").glob("series_*.csv")):
        match = pattern.search(path.name)
        if match:
            out.append((parse_alpha_tag(match.group("alpha")), int(match.group("size")),
                        parse_alpha_tag(match.group("jz")), path))
    return out
