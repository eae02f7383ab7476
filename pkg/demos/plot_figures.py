"""Plot the figure data written by ``refpot report``.

Usage::

    refpot report --out-dir out
    python demos/plot_figures.py out

Writes fig1.png ... fig5.png next to the CSV files. Needs matplotlib, which
is not a dependency of the package.
"""
import csv
import os
import sys

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(out_dir, name):
    """Columns of one of the report CSVs as arrays (comment lines skipped)."""
    with open(os.path.join(out_dir, name)) as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    out = {}
    for j, col in enumerate(rows[0]):
        values = [r[j] for r in rows[1:]]
        try:
            out[col] = np.array(values, dtype=float)
        except ValueError:
            out[col] = np.array(values)
    return out


def fig1(out_dir):
    d = load(out_dir, "fig1_potential.csv")
    fig, (top, low) = plt.subplots(2, 1, figsize=(6, 7))
    up = d["panel"] == "upper"
    top.plot(d["r_angstrom"][up], d["V_meV"][up])
    top.set_yscale("symlog", linthresh=10.0)
    top.set_ylabel("V (meV)")
    lo = ~up & (d["r_angstrom"] >= 3.0)
    for c in np.unique(d["component"][lo]):
        m = lo & (d["component"] == c)
        low.plot(d["r_angstrom"][m], d["V_meV"][m], label=f"component {c}")
    low.set_ylim(-30, 30)
    low.set_xlabel("r (angstrom)")
    low.set_ylabel("V (meV)")
    low.legend()
    return fig


def fig2(out_dir):
    d = load(out_dir, "fig2_phase_shift.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(d["E_meV"], d["delta_rad"] / np.pi)
    ax.axhline(0.0, color="0.6", lw=0.5)
    ax.set_xlabel("E (meV)")
    ax.set_ylabel("delta / pi")
    return fig


def fig3(out_dir):
    d = load(out_dir, "fig3_phase_asymptotic.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(d["E_meV"], d["delta_integrated_rad"], "o", label="integrated")
    ax.plot(d["E_meV"], d["delta_series_rad"], "-", label="odd series")
    ax.plot(d["E_meV"], d["delta_three_term_rad"], "--", label="three terms")
    ax.set_xscale("log")
    ax.set_xlabel("E (meV)")
    ax.set_ylabel("delta (rad)")
    ax.legend()
    return fig


def fig4(out_dir):
    d = load(out_dir, "fig4_jost_modulus.csv")
    fig, (top, low) = plt.subplots(2, 1, figsize=(6, 7))
    # |F| overflows a double at low energy, so plot ln|F|
    top.loglog(d["E_meV"], d["ln_abs_F"])
    top.set_ylabel("ln |F|")
    m = (d["E_meV"] > 1e6) & (d["E_meV"] < 1e8)
    low.plot(d["E_meV"][m], d["ln_abs_F"][m])
    low.set_yscale("log")
    low.set_xlabel("E (meV)")
    low.set_ylabel("ln |F|")
    return fig


def fig5(out_dir):
    d = load(out_dir, "fig5_g_function.csv")
    fig, (top, low) = plt.subplots(2, 1, figsize=(6, 7))
    top.semilogx(d["k_per_angstrom"], d["g"], label="g")
    top.semilogx(d["k_per_angstrom"], d["one_minus_inv_abs_F_sq"], "--", label="1 - |F|^-2")
    top.set_ylabel("g")
    top.legend()
    hi = d["k_per_angstrom"] > 3e4
    low.semilogx(d["k_per_angstrom"][hi], d["k2_g_per_angstrom2"][hi], label="k^2 g")
    low.semilogx(d["k_per_angstrom"][hi], d["k2_g_two_term_per_angstrom2"][hi], "--",
                 label="two-term form")
    low.set_xlabel("k (1/angstrom)")
    low.set_ylabel("k^2 g (1/angstrom^2)")
    low.legend()
    return fig


def main(out_dir):
    for n, make in enumerate((fig1, fig2, fig3, fig4, fig5), start=1):
        fig = make(out_dir)
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, f"fig{n}.png"), dpi=120)
        plt.close(fig)
        print(f"fig{n}.png")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
