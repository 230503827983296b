"""Two-step filtering: forward window sweep, point-reflected reverse sweep.

Forward filtering correlates the image with the filter grid anchored at
each pixel (taps at positive shifts); reverse filtering applies the same
taps with negated shifts, i.e. the adjoint. Running both per filter and
averaging over a complete orthonormal filter set reproduces the source
image exactly, which is the defining identity of the bank.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .eigen import EigenFilter
from .image import Image
from .lagcov import WindowGeometry
from .spectral import embed_filter

__all__ = [
    "Decomposition",
    "forward_filter",
    "reverse_filter",
    "two_step_filter",
    "decompose",
    "partial_sum",
    "reconstruction_residual",
]


def _check_geometry(filt: EigenFilter, geometry: WindowGeometry) -> None:
    if filt.grid.shape != (geometry.m, geometry.n):
        raise ValueError(
            f"filter grid {filt.grid.shape} does not match "
            f"{geometry.m}x{geometry.n} window"
        )


def forward_filter(image: Image, filt: EigenFilter, geometry: WindowGeometry) -> Image:
    """b[i,j] = sum over (r,c) of grid[r,c] * pixel(i+r, j+c), periodic."""
    _check_geometry(filt, geometry)
    a = image.data
    out = np.zeros(a.shape)
    for r in range(geometry.m):
        for c in range(geometry.n):
            w = filt.grid[r, c]
            if w != 0.0:
                out += w * np.roll(a, (-r, -c), axis=(0, 1))
    return Image(out)


def reverse_filter(image: Image, filt: EigenFilter, geometry: WindowGeometry) -> Image:
    """d[i,j] = sum over (r,c) of grid[r,c] * pixel(i-r, j-c); adjoint sweep."""
    _check_geometry(filt, geometry)
    a = image.data
    out = np.zeros(a.shape)
    for r in range(geometry.m):
        for c in range(geometry.n):
            w = filt.grid[r, c]
            if w != 0.0:
                out += w * np.roll(a, (r, c), axis=(0, 1))
    return Image(out)


def _two_step_arrays(
    data: np.ndarray, filt: EigenFilter, geometry: WindowGeometry, method: str
) -> tuple[np.ndarray, np.ndarray | None]:
    """Component array and (for spatial/debug paths) the intermediate array."""
    if method == "fft":
        kernel = np.fft.fft2(embed_filter(filt, *data.shape))
        spec = np.fft.fft2(data)
        component = np.fft.ifft2(spec * np.abs(kernel) ** 2).real
        return component, None
    if method == "spatial":
        img = Image(data)
        b = forward_filter(img, filt, geometry)
        d = reverse_filter(b, filt, geometry)
        return d.data, b.data
    raise ValueError(f"unknown method {method!r}")


def two_step_filter(
    image: Image, filt: EigenFilter, geometry: WindowGeometry, method: str = "fft"
) -> Image:
    """Forward then reverse filtering; the zero-phase component image."""
    component, _ = _two_step_arrays(image.data, filt, geometry, method)
    return Image(component)


@dataclass(frozen=True)
class Decomposition:
    """The K component images of one source image.

    components[k-1] holds the two-step output for filter rank k; the mean
    of all K components reproduces the source. intermediates (the forward
    pass outputs) are kept only when requested at build time.
    """

    source: Image
    geometry: WindowGeometry
    filters: tuple[EigenFilter, ...]
    components: np.ndarray
    intermediates: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.components.setflags(write=False)
        if self.intermediates is not None:
            self.intermediates.setflags(write=False)

    def component(self, k: int) -> Image:
        """Component image for filter rank k (1-based)."""
        if not 1 <= k <= self.geometry.K:
            raise ValueError(f"component rank {k} outside 1..{self.geometry.K}")
        return Image(self.components[k - 1])


def decompose(
    image: Image,
    filters: list[EigenFilter],
    geometry: WindowGeometry,
    method: str = "fft",
    threads: int | None = None,
    keep_intermediate: bool = False,
) -> Decomposition:
    """Two-step filter the image with every member of a complete filter set.

    The set must contain exactly K = m*n filters; reconstruction is only
    guaranteed for complete orthonormal sets, so smaller sets are rejected.
    The K filterings are independent; ``threads`` > 1 runs them in a pool
    with identical results.
    """
    if len(filters) != geometry.K:
        raise ValueError(f"expected {geometry.K} filters, got {len(filters)}")
    for filt in filters:
        _check_geometry(filt, geometry)
    if keep_intermediate and method == "fft":
        method = "spatial"  # the FFT path never materializes the forward pass

    data = image.data

    def run(filt: EigenFilter) -> tuple[np.ndarray, np.ndarray | None]:
        return _two_step_arrays(data, filt, geometry, method)

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, filters))
    else:
        results = [run(f) for f in filters]

    components = np.stack([comp for comp, _ in results])
    intermediates = None
    if keep_intermediate:
        intermediates = np.stack([b for _, b in results])
    return Decomposition(
        source=image,
        geometry=geometry,
        filters=tuple(filters),
        components=components,
        intermediates=intermediates,
    )


def partial_sum(decomposition: Decomposition, ell: int) -> Image:
    """(1/K) * sum of the first ``ell`` components; ``ell`` = K gives the source."""
    K = decomposition.geometry.K
    if not 1 <= ell <= K:
        raise ValueError(f"ell {ell} outside 1..{K}")
    return Image(decomposition.components[:ell].sum(axis=0) / K)


def reconstruction_residual(decomposition: Decomposition) -> float:
    """Max pixel error of the full partial sum against the source."""
    full = partial_sum(decomposition, decomposition.geometry.K)
    return float(np.max(np.abs(full.data - decomposition.source.data)))
