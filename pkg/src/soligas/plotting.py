"""Figures for CSV outputs: a gnuplot script and a matplotlib PNG per input."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def _mpl():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    return rows[0], rows[1:]


def _numeric(header, rows, name):
    j = header.index(name)
    return np.array([float(r[j]) for r in rows])


def detect_kind(header: list[str]) -> str:
    cols = set(header)
    if {"x", "u"} <= cols:
        return "field"
    if {"t", "i", "x_eff"} <= cols:
        return "trajectories"
    if {"chi", "x", "rho"} <= cols:
        return "density"
    if header and header[0] == "x_star":
        return "positions"
    raise ValueError(f"cannot infer plot kind from columns {header}")


def gnuplot_script(csv_path: Path, kind: str, header: list[str], png_name: str) -> str:
    lines = [
        "set datafile separator ','",
        "set terminal pngcairo size 900,600",
        f"set output '{png_name}.gnuplot.png'",
        "set key outside",
    ]
    src = csv_path.name
    if kind == "field":
        lines += ["set xlabel 'x'", "set ylabel 'u'", f"plot '{src}' using 1:2 every ::1 with lines title 'u'"]
    elif kind == "trajectories":
        lines += [
            "set xlabel 'x_eff'",
            "set ylabel 't'",
            f"plot '{src}' using 3:1:2 every ::1 with points palette pt 7 ps 0.5 title 'effective positions'",
        ]
    elif kind == "density":
        lines += [
            "set xlabel 'x'",
            "set ylabel 'chi'",
            "set view map",
            f"splot '{src}' using 2:1:3 every ::1 with points palette pt 5 ps 0.6 title 'rho'",
        ]
    else:
        cols = ", ".join(
            f"'{src}' using 1:{k + 1} every ::1 with lines title '{name}'" for k, name in enumerate(header) if k > 0
        )
        lines += ["set xlabel 'x_star'", "set ylabel 'X'", f"plot {cols}"]
    return "\n".join(lines) + "\n"


def render_png(csv_path: Path, kind: str, header, rows, png_path: Path) -> None:
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if kind == "field":
        ax.plot(_numeric(header, rows, "x"), _numeric(header, rows, "u"), lw=1.2)
        ax.set_xlabel("x")
        ax.set_ylabel("u")
    elif kind == "trajectories":
        sc = ax.scatter(_numeric(header, rows, "x_eff"), _numeric(header, rows, "t"), c=_numeric(header, rows, "i"), s=6, cmap="viridis")
        fig.colorbar(sc, ax=ax, label="soliton")
        ax.set_xlabel("effective position")
        ax.set_ylabel("t")
    elif kind == "density":
        chi = _numeric(header, rows, "chi")
        x = _numeric(header, rows, "x")
        rho = _numeric(header, rows, "rho")
        cu, xu = np.unique(chi), np.unique(x)
        grid = np.full((len(cu), len(xu)), np.nan)
        grid[np.searchsorted(cu, chi), np.searchsorted(xu, x)] = rho
        mesh = ax.pcolormesh(xu, cu, grid, shading="nearest", cmap="magma")
        fig.colorbar(mesh, ax=ax, label="rho")
        ax.set_xlabel("x")
        ax.set_ylabel("chi")
    else:
        xs = np.array([float(r[0]) for r in rows])
        for k, name in enumerate(header[1:], start=1):
            ax.plot(xs, [float(r[k]) for r in rows], lw=1.0, label=name)
        ax.set_xlabel("observer position")
        ax.set_ylabel("position")
        if len(header) <= 12:
            ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def plot_csv(csv_path: str | Path, out_dir: str | Path | None = None, kind: str | None = None) -> dict:
    """Write ``<stem>.gp`` and ``<stem>.png`` for one CSV; returns their paths."""
    csv_path = Path(csv_path)
    out = Path(out_dir) if out_dir is not None else csv_path.parent
    out.mkdir(parents=True, exist_ok=True)
    header, rows = read_csv(csv_path)
    kind = kind or detect_kind(header)
    stem = csv_path.stem
    gp = out / f"{stem}.gp"
    # gnuplot resolves the data file relative to its working directory; keep scripts next to the data
    script = gnuplot_script(csv_path, kind, header, stem)
    if out.resolve() != csv_path.parent.resolve():
        script = script.replace(f"'{csv_path.name}'", f"'{csv_path.resolve()}'")
    gp.write_text(script)
    png = out / f"{stem}.png"
    render_png(csv_path, kind, header, rows, png)
    return {"gnuplot": str(gp), "png": str(png), "kind": kind}
