"""CSV tables holding the x/y data behind each figure of the study.

Nothing here plots; every table can be re-plotted with any tool.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import FigureDataError
from .harness import OutputRecord, _csv_text, _Writer, fit_inverse_n, write_manifest
from .spectra import kesten_mckay_bin_masses

FIGURES = (2, 3, 5, 6, 7, 8, 9, 10)


def _need(cells, figure, what):
    if not cells:
        raise FigureDataError(f"figure {figure}: record holds no {what}")
    return sorted(cells, key=lambda c: (c.z, c.n))


def _fig2(record, w):
    cells = _need([c for c in record.ok_cells("ensemble") if c.z >= 2], 2,
                  "ensemble cell with z >= 2 (eigenvalue histogram)")
    for c in cells:
        h = c.eig_hist
        km = kesten_mckay_bin_masses(h.edges, c.z)
        w.write(f"figures/fig2_n{c.n}_z{c.z}.csv", _csv_text(
            ("bin_center", "empirical_mass", "kesten_mckay_mass"), zip(h.centers, h.masses, km)
        ))


def _fig3(record, w):
    cells = _need(record.ok_cells("ensemble"), 3, "ensemble cell (IPR histogram)")
    fits = []
    for c in cells:
        h, fit = c.ipr_hist, c.fit
        gauss = fit.density(h.centers) if fit is not None else np.full(len(h.centers), np.nan)
        w.write(f"figures/fig3_n{c.n}_z{c.z}.csv", _csv_text(
            ("bin_center", "mass", "density", "gaussian_density"),
            zip(h.centers, h.masses, h.density, gauss),
        ))
        if fit is None:
            fits.append((c.n, c.z, *(["nan"] * 4), c.skewness))
        else:
            fits.append((c.n, c.z, fit.mean, fit.sigma, fit.amplitude, fit.residual, c.skewness))
    w.write("figures/fig3_fits.csv", _csv_text(
        ("n", "z", "fit_mean", "fit_sigma", "fit_amplitude", "fit_residual", "skewness"), fits
    ))


def _fig5(record, w):
    cells = _need(record.ok_cells("ensemble"), 5, "ensemble statistics")
    w.write("figures/fig5.csv", _csv_text(
        ("n", "z", "N_G", "mean_ipr", "std_ipr", "mu1_exact"),
        ((c.n, c.z, c.stats.graph_count, c.stats.mean_ipr, c.stats.std_ipr, c.stats.mu1) for c in cells),
    ))


def _fig6(record, w):
    cells = _need(record.ok_cells("ensemble"), 6, "ensemble statistics")
    w.write("figures/fig6.csv", _csv_text(
        ("n", "z", "N_G", "delta1", "n_times_delta1"),
        ((c.n, c.z, c.stats.graph_count, c.stats.delta1, c.n * c.stats.delta1) for c in cells),
    ))
    rows = []
    for z in sorted({c.z for c in cells}):
        group = [c for c in cells if c.z == z]
        if len({c.n for c in group}) >= 2:
            rows.append((z, len(group), fit_inverse_n([c.n for c in group], [c.stats.delta1 for c in group])))
    w.write("figures/fig6_fit.csv", _csv_text(("z", "sizes", "c_fit"), rows))


def _fig7(record, w):
    cells = _need(record.ok_cells("ensemble"), 7, "ensemble statistics")
    w.write("figures/fig7.csv", _csv_text(
        ("n", "z", "N_G", "mean_var", "std_var", "mu2_exact"),
        ((c.n, c.z, c.stats.graph_count, c.stats.mean_var, c.stats.std_var, c.stats.mu2) for c in cells),
    ))


def _fig8(record, w):
    cells = _need(record.ok_cells("ensemble"), 8, "ensemble statistics")
    w.write("figures/fig8.csv", _csv_text(
        ("n", "z", "N_G", "delta2", "abs_delta2"),
        ((c.n, c.z, c.stats.graph_count, c.stats.delta2, abs(c.stats.delta2)) for c in cells),
    ))


def _fig9(record, w):
    cells = _need([c for c in record.ok_cells() if c.z == 3], 9, "z = 3 cell")
    w.write("figures/fig9.csv", _csv_text(
        ("n", "kind", "N_G", "mean_ipr", "std_ipr", "mean_var", "std_var", "mu1_exact", "mu2_exact"),
        ((c.n, c.kind, c.stats.graph_count, c.stats.mean_ipr, c.stats.std_ipr, c.stats.mean_var,
          c.stats.std_var, c.stats.mu1, c.stats.mu2) for c in cells),
    ))


def _fig10(record, w):
    cells = _need(record.ok_cells("census"), 10, "census cell (exhaustive enumeration)")
    for c in cells:
        rows = [
            (g.index, k, ev, v)
            for g in c.graphs
            for k, (ev, v) in enumerate(zip(g.summary.eigenvalues, g.summary.mode_iprs))
        ]
        w.write(f"figures/fig10_n{c.n}_z{c.z}_modes.csv", _csv_text(
            ("graph_index", "mode_rank", "eigenvalue", "ipr"), rows
        ))
        w.write(f"figures/fig10_n{c.n}_z{c.z}_max_ipr.csv", _csv_text(
            ("graph_index", "max_ipr", "mean_ipr", "variance"),
            ((g.index, g.summary.max_ipr, g.summary.mean_ipr, g.summary.variance) for g in c.graphs),
        ))


_EMITTERS = {2: _fig2, 3: _fig3, 5: _fig5, 6: _fig6, 7: _fig7, 8: _fig8, 9: _fig9, 10: _fig10}


def emit_figure_data(record: OutputRecord, figure, out_dir) -> list[Path]:
    """Write the tables for ``figure`` under ``out_dir/figures``.

    The files are added to ``out_dir/manifest.json``.  Raises FigureDataError
    for an unknown figure or when the record lacks the statistics it needs.
    """
    try:
        key = int(figure)
    except (TypeError, ValueError):
        key = None
    if key not in _EMITTERS:
        raise FigureDataError(
            f"unknown figure {figure!r}; available: {', '.join(map(str, FIGURES))}"
        )
    out = Path(out_dir)
    w = _Writer(out)
    _EMITTERS[key](record, w)
    write_manifest(out, w.files)
    record.files.update(w.files)
    return [out / rel for rel in w.files]
