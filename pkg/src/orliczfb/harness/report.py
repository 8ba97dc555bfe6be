"""Merge run manifests into one CSV and a plain-text summary table."""
import csv
import io
import os
from collections import defaultdict

from ..estimates.report import CSV_COLUMNS
from .run import RunManifest

__all__ = ["MERGED_COLUMNS", "merge_reports", "summary_table", "report"]

MERGED_COLUMNS = ("id", "family", "cells", "estimate") + CSV_COLUMNS + ("delta",)


def _read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        return [row for row in reader]


def merge_reports(manifests):
    """Rows of all per-resolution reports, sorted by (family, id, estimate, name, cells).

    ``delta`` is the relative change of the ratio against the next coarser
    resolution of the same row (empty for the coarsest). Two manifests with the
    same id and resolution but different config hashes conflict: both are left
    out and listed in the returned conflict list.
    """
    seen, conflicts, rows = {}, [], []
    keep = []
    for m in manifests:
        for cells in m.resolutions:
            key = (m.id, cells)
            if key in seen and seen[key] != m.config_hash:
                conflicts.append(key)
            seen.setdefault(key, m.config_hash)
    bad = set(conflicts)
    for m in manifests:
        for key, path in sorted(m.reports.items()):
            name, cells = key.split("@")
            if "-" in cells or (m.id, int(cells)) in bad:
                continue
            for row in _read_rows(path):
                keep.append((m.family, m.id, name, row[0], int(cells), row))
    keep.sort(key=lambda t: t[:5])
    prev = {}
    for family, rid, name, rname, cells, row in keep:
        ratio = float(row[4])
        ident = (rid, name, rname)
        delta = ""
        if ident in prev and prev[ident] != 0:
            delta = repr(abs(ratio - prev[ident]) / abs(prev[ident]))
        elif ident in prev:
            delta = repr(0.0 if ratio == 0 else float("inf"))
        prev[ident] = ratio
        rows.append([rid, family, str(cells), name] + row + [delta])
    return rows, sorted(set(conflicts))


def summary_table(rows):
    """Per-family sections: estimate, cells, worst ratio, all rows passing."""
    groups = defaultdict(lambda: defaultdict(list))
    for row in rows:
        groups[row[1]][(row[3], int(row[2]))].append(row)
    out = io.StringIO()
    for family in sorted(groups):
        out.write(f"== {family} ==\n")
        out.write(f"{'estimate':<18}{'cells':>7}{'rows':>6}{'max ratio':>14}{'max delta':>12}  pass\n")
        for (name, cells), items in sorted(groups[family].items()):
            worst = max(float(r[8]) for r in items)
            deltas = [float(r[10]) for r in items if r[10]]
            dtxt = f"{max(deltas):12.4g}" if deltas else f"{'':>12}"
            ok = all(r[9] == "1" for r in items)
            out.write(f"{name:<18}{cells:>7}{len(items):>6}{worst:14.6g}{dtxt}  {'yes' if ok else 'NO'}\n")
    return out.getvalue()


def report(manifests, out=None):
    """Write ``merged.csv`` and ``summary.txt`` under ``out``; returns (rows, text, conflicts)."""
    manifests = [RunManifest.load(m) if isinstance(m, (str, os.PathLike)) else m for m in manifests]
    rows, conflicts = merge_reports(manifests)
    text = summary_table(rows)
    if conflicts:
        text += "".join(f"conflict: run {rid} at {cells} cells has differing configs; not merged\n"
                        for rid, cells in conflicts)
    if out is not None:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "merged.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(MERGED_COLUMNS)
            w.writerows(rows)
        with open(os.path.join(out, "summary.txt"), "w") as fh:
            fh.write(text)
    return rows, text, conflicts
