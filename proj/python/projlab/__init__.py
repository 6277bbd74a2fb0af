"""Python access to the projlab estimators and to the files written by its pipelines."""

import csv
import json
from pathlib import Path

from ._core import (
    ProjlabError,
    Session,
    parse_complex,
    predict_chi,
    run_experiment,
    translation_length,
)

__all__ = [
    "ProjlabError",
    "Session",
    "parse_complex",
    "predict_chi",
    "run_experiment",
    "translation_length",
    "load_manifest",
    "load_results",
    "load_csv",
]


def load_manifest(out_dir):
    return json.loads((Path(out_dir) / "manifest.json").read_text())


def load_results(out_dir):
    return json.loads((Path(out_dir) / "results.json").read_text())


def load_csv(out_dir, name):
    """Rows of a pipeline CSV as dicts, checked against the columns in the manifest."""
    columns = load_manifest(out_dir)["columns"][name]
    with open(Path(out_dir) / name, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != columns:
            raise ValueError(f"{name}: header {reader.fieldnames} does not match manifest {columns}")
        rows = []
        for row in reader:
            rows.append({k: (v if k == "word" or k == "t" else float(v)) for k, v in row.items()})
        return rows
