"""Merging attack CSVs and plotting p and decryption time against n."""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .attacker import CSV_FIELDS  # noqa: E402


def read_rows(paths: Iterable[str | Path]) -> list[dict[str, str]]:
    rows = []
    for p in paths:
        with open(p, newline="") as fh:
            for row in csv.DictReader(fh):
                rows.append(row)
    return rows


def merge(rows: Sequence[dict[str, str]]) -> list[dict[str, str]]:
    def key(r):
        return (r.get("benchmark", ""), r.get("style", ""), _int(r.get("n")), _int(r.get("N")))
    return sorted(rows, key=key)


def _int(v) -> int:
    try:
        return int(v)
    except (TypeError, ValueError):
        return -1


def to_csv(rows: Sequence[dict[str, str]], fields: Sequence[str] = CSV_FIELDS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def p_series(n_max: int = 10) -> list[tuple[int, float]]:
    return [(n, 1.0 - 1.0 / 2 ** n) for n in range(1, n_max + 1)]


def time_series(rows: Sequence[dict[str, str]]) -> dict[str, list[tuple[int, float]]]:
    """Mean decryption time (ms) per n, one series per lock style."""
    acc: dict[str, dict[int, list[float]]] = {}
    for r in rows:
        n, ms = _int(r.get("n")), r.get("elapsed_ms")
        if n < 0 or ms in (None, ""):
            continue
        acc.setdefault(r.get("style", ""), {}).setdefault(n, []).append(float(ms))
    return {style: sorted((n, sum(v) / len(v)) for n, v in by_n.items()) for style, by_n in acc.items()}


def plot_p(path: Path, n_max: int = 10) -> None:
    xs, ys = zip(*p_series(n_max))
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.plot(xs, ys, marker="o")
    ax.set_xlabel("locked flip-flops n")
    ax.set_ylabel("p (odds against the correct key)")
    ax.set_ylim(0, 1.02)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_time(path: Path, rows: Sequence[dict[str, str]]) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for style, pts in sorted(time_series(rows).items()):
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o", label=style or "?")
    if rows:
        ax.legend()
    ax.set_xlabel("locked flip-flops n")
    ax.set_ylabel("decryption time (ms)")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(paths: Sequence[str | Path], out: str | Path) -> dict[str, Path]:
    """Merged CSV, p-vs-n series and the two figures, written under ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rows = merge(read_rows(paths))
    n_max = max([10] + [_int(r.get("n")) for r in rows])
    files = {"merged": out / "merged.csv", "p_series": out / "p_vs_n.csv",
             "p_plot": out / "p_vs_n.png", "time_plot": out / "time_vs_n.png"}
    files["merged"].write_text(to_csv(rows))
    files["p_series"].write_text("n,p\n" + "".join(f"{n},{p:.6f}\n" for n, p in p_series(n_max)))
    plot_p(files["p_plot"], n_max)
    plot_time(files["time_plot"], rows)
    return files
