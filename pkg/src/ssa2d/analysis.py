"""Filter characterization and truncation diagnostics.

A filter acts on smooth image content like a low-order differential
operator; expanding its taps around the window centre yields constant,
first- and second-derivative coefficients. Centrosymmetric (symmetric
class) filters keep only even-order terms, skew-centrosymmetric ones only
odd-order terms. The truncation diagnostics trace the RMS distance between
a reference image and each prefix partial sum of a decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .csvutil import full, write_rows_csv
from .eigen import EigenFilter
from .filterbank import Decomposition
from .image import Image

__all__ = [
    "TaylorRow",
    "TaylorReport",
    "DenoiseReport",
    "taylor_coefficients",
    "taylor_report",
    "rms_distance_curve",
    "spectrum_rows",
    "save_spectrum_csv",
    "save_taylor_csv",
    "save_denoise_csv",
]


@dataclass(frozen=True)
class TaylorRow:
    """Expansion coefficients of one filter in mesh units."""

    index: int
    f: float
    f_x: float
    f_y: float
    f_xx: float
    f_xy: float
    f_yy: float

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.f, self.f_x, self.f_y, self.f_xx, self.f_xy, self.f_yy)


@dataclass(frozen=True)
class TaylorReport:
    """Coefficient rows for a filter set at a fixed mesh scale."""

    mesh_scale: float
    rows: tuple[TaylorRow, ...]


def taylor_coefficients(filt: EigenFilter, mesh_scale: float = 1.0) -> TaylorRow:
    """Differential-operator coefficients of a filter with odd dimensions.

    Window cell (r, c) sits at the spatial offset
    ``dx = (c - (n-1)/2) * mesh_scale`` and ``dy = ((m-1)/2 - r) * mesh_scale``:
    the x axis runs along columns left to right, the y axis along rows with
    the top row at positive y. With taps w the coefficients are

        f    = sum w            f_x  = sum w*dx          f_y  = sum w*dy
        f_xx = sum w*dx^2 / 2   f_xy = sum w*dx*dy       f_yy = sum w*dy^2 / 2

    reported in mesh units (one cell = ``mesh_scale``).
    """
    m, n = filt.grid.shape
    if m % 2 == 0 or n % 2 == 0:
        raise ValueError(f"window dimensions must be odd, got {m}x{n}")
    if mesh_scale <= 0:
        raise ValueError("mesh_scale must be positive")
    dy = (((m - 1) / 2.0) - np.arange(m))[:, None] * mesh_scale
    dx = (np.arange(n) - ((n - 1) / 2.0))[None, :] * mesh_scale
    w = filt.grid
    return TaylorRow(
        index=filt.index,
        f=float(np.sum(w)),
        f_x=float(np.sum(w * dx)),
        f_y=float(np.sum(w * dy)),
        f_xx=float(np.sum(w * dx * dx) / 2.0),
        f_xy=float(np.sum(w * dx * dy)),
        f_yy=float(np.sum(w * dy * dy) / 2.0),
    )


def taylor_report(filters: list[EigenFilter], mesh_scale: float = 1.0) -> TaylorReport:
    """Coefficient table for a whole filter set."""
    rows = tuple(taylor_coefficients(f, mesh_scale) for f in filters)
    return TaylorReport(mesh_scale=mesh_scale, rows=rows)


@dataclass(frozen=True)
class DenoiseReport:
    """RMS distance D(ell) for every prefix truncation, and its argmin."""

    curve: np.ndarray
    ell_star: int
    d_min: float

    def __post_init__(self) -> None:
        self.curve.setflags(write=False)


def rms_distance_curve(reference: Image, decomposition: Decomposition) -> DenoiseReport:
    """D(ell) = RMS(reference - partial_sum(ell)) for ell = 1..K.

    The reference may differ from the decomposed image (clean vs noisy);
    ties in the argmin go to the smallest ell. Runs one cumulative pass
    over the components, O(K * pixels).
    """
    ref = reference.data
    if ref.shape != decomposition.source.shape:
        raise ValueError(
            f"reference {ref.shape} does not match source "
            f"{decomposition.source.shape}"
        )
    K = decomposition.geometry.K
    running = np.zeros(ref.shape)
    curve = np.empty(K)
    for k in range(K):
        running += decomposition.components[k]
        diff = ref - running / K
        curve[k] = np.sqrt(np.mean(diff * diff))
    ell_star = int(np.argmin(curve)) + 1
    return DenoiseReport(curve=curve, ell_star=ell_star, d_min=float(curve[ell_star - 1]))


def spectrum_rows(filters: list[EigenFilter]) -> list[tuple[int, float, str, float]]:
    """(rank, eigenvalue, symmetry class, symmetry score) per filter."""
    return [(f.index, f.eigenvalue, f.symmetry, f.symmetry_score) for f in filters]


def save_spectrum_csv(filters: list[EigenFilter], path) -> None:
    rows = [
        (k, full(lam), cls, full(score))
        for k, lam, cls, score in spectrum_rows(filters)
    ]
    write_rows_csv(path, "k,eigenvalue,symmetry_class,symmetry_score", rows)


def save_taylor_csv(report: TaylorReport, path) -> None:
    rows = [
        (row.index, *(full(x) for x in row.as_tuple()))
        for row in report.rows
    ]
    write_rows_csv(path, "k,f,f_x,f_y,f_xx,f_xy,f_yy", rows)


def save_denoise_csv(report: DenoiseReport, path) -> None:
    rows = [(ell + 1, full(d)) for ell, d in enumerate(report.curve)]
    trailer = f"# ell_star={report.ell_star} d_min={full(report.d_min)}"
    write_rows_csv(path, "ell,distance", rows, trailer=trailer)
