"""Window geometry, lagged vectors, and the lag-covariance matrix.

The covariance is built two ways: a brute-force path that materializes the
full stack of lagged vectors, and a fast path that reads the same entries
off the periodic autocorrelation of the image (one FFT plus a gather).
Under the periodic boundary an entry depends only on the offset difference
between the two window cells it pairs, which is what makes the fast path
possible and the matrix bisymmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import Image

__all__ = [
    "WindowGeometry",
    "LagCovariance",
    "WindowError",
    "lagged_vector",
    "build_lag_covariance_oracle",
    "build_lag_covariance_fast",
    "periodic_autocorrelation",
    "bisymmetry_residual",
    "save_covariance_csv",
]


class WindowError(ValueError):
    """Window does not fit strictly inside the image."""


@dataclass(frozen=True)
class WindowGeometry:
    """m x n moving window with column-major component indexing.

    Component index_of(r, c) = c*m + r + 1 (1-based): indices 1..m fill the
    first window column top to bottom, m+1..2m the second, and so on.
    """

    m: int
    n: int

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1:
            raise ValueError("window dimensions must be positive")

    @property
    def K(self) -> int:
        """Filter length m*n."""
        return self.m * self.n

    def index_of(self, r: int, c: int) -> int:
        """1-based component index of window cell (r, c)."""
        if not (0 <= r < self.m and 0 <= c < self.n):
            raise IndexError(f"cell ({r}, {c}) outside {self.m}x{self.n} window")
        return c * self.m + r + 1

    def cell_of(self, index: int) -> tuple[int, int]:
        """Window cell (r, c) holding the given 1-based component index."""
        if not 1 <= index <= self.K:
            raise IndexError(f"component index {index} outside 1..{self.K}")
        return (index - 1) % self.m, (index - 1) // self.m

    def point_reflect(self, index: int) -> int:
        """Component index of the cell point-reflected about the window centre."""
        if not 1 <= index <= self.K:
            raise IndexError(f"component index {index} outside 1..{self.K}")
        return self.K - index + 1

    def offsets(self) -> np.ndarray:
        """(K, 2) array of (row, col) cell offsets in component order."""
        k = np.arange(self.K)
        return np.column_stack([k % self.m, k // self.m])

    def to_grid(self, vector: np.ndarray) -> np.ndarray:
        """Relabel a K-vector as the m x n window grid."""
        vec = np.asarray(vector, dtype=float)
        if vec.shape != (self.K,):
            raise ValueError(f"expected a vector of length {self.K}")
        return vec.reshape(self.n, self.m).T.copy()

    def to_vector(self, grid: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_grid`."""
        arr = np.asarray(grid, dtype=float)
        if arr.shape != (self.m, self.n):
            raise ValueError(f"expected an {self.m}x{self.n} grid")
        return arr.T.ravel().copy()


@dataclass(frozen=True)
class LagCovariance:
    """K x K covariance of the lagged vectors, exactly symmetric."""

    geometry: WindowGeometry
    entries: np.ndarray

    def __post_init__(self) -> None:
        K = self.geometry.K
        if self.entries.shape != (K, K):
            raise ValueError(f"entries must be {K}x{K}")
        if not np.array_equal(self.entries, self.entries.T):
            raise ValueError("entries must be exactly symmetric")
        self.entries.setflags(write=False)


def _check_fits(image: Image, geometry: WindowGeometry) -> None:
    if geometry.m >= image.rows or geometry.n >= image.cols:
        raise WindowError(
            f"window {geometry.m}x{geometry.n} does not fit in "
            f"{image.rows}x{image.cols} image"
        )


def lagged_vector(
    image: Image, geometry: WindowGeometry, anchor_row: int, anchor_col: int
) -> np.ndarray:
    """Window contents anchored at (anchor_row, anchor_col), periodic wrap.

    Component index_of(r, c) holds pixel(anchor_row + r, anchor_col + c);
    the anchor may be any pair of integers.
    """
    out = np.empty(geometry.K)
    for c in range(geometry.n):
        for r in range(geometry.m):
            out[geometry.index_of(r, c) - 1] = image.pixel(anchor_row + r, anchor_col + c)
    return out


def trajectory_matrix(image: Image, geometry: WindowGeometry) -> np.ndarray:
    """L x K stack of lagged vectors, one per anchor in row-major order."""
    X = np.empty((image.rows * image.cols, geometry.K))
    for q in range(geometry.K):
        r, c = geometry.cell_of(q + 1)
        X[:, q] = np.roll(image.data, (-r, -c), axis=(0, 1)).ravel()
    return X


def build_lag_covariance_oracle(image: Image, geometry: WindowGeometry) -> LagCovariance:
    """Covariance via the explicit L x K trajectory matrix: X'X / L.

    O(L*K^2) time, O(L*K) memory; the reference the fast path is tested
    against. L = rows*cols since every anchor yields a lagged vector under
    the periodic boundary.
    """
    _check_fits(image, geometry)
    X = trajectory_matrix(image, geometry)
    C = X.T @ X / X.shape[0]
    C = (C + C.T) / 2.0  # force exact symmetry regardless of BLAS kernel order
    return LagCovariance(geometry, C)


def periodic_autocorrelation(image: Image) -> np.ndarray:
    """R[dr, dc] = mean over all pixels of a[i, j] * a[i+dr, j+dc], periodic."""
    spec = np.fft.fft2(image.data)
    return np.fft.ifft2(spec.conj() * spec).real / image.data.size


def build_lag_covariance_fast(image: Image, geometry: WindowGeometry) -> LagCovariance:
    """Same matrix as the oracle, gathered from one periodic autocorrelation.

    C[p, q] equals R evaluated at the offset difference of window cells q
    and p, so one O(MN log MN) autocorrelation plus an O(K^2) gather fills
    the matrix.
    """
    _check_fits(image, geometry)
    R = periodic_autocorrelation(image)
    off = geometry.offsets()
    dr = (off[None, :, 0] - off[:, None, 0]) % image.rows
    dc = (off[None, :, 1] - off[:, None, 1]) % image.cols
    C = R[dr, dc]
    C = (C + C.T) / 2.0
    return LagCovariance(geometry, C)


def bisymmetry_residual(cov: LagCovariance) -> float:
    """max over (i, j) of |C[i,j] - C[K-i+1,K-j+1]| / (1 + |C[i,j]|)."""
    C = cov.entries
    reflected = C[::-1, ::-1]
    return float(np.max(np.abs(C - reflected) / (1.0 + np.abs(C))))


def save_covariance_csv(cov: LagCovariance, path) -> None:
    """K rows of K comma-separated full-precision entries, no header."""
    from .csvutil import write_grid_csv

    write_grid_csv(path, cov.entries)
