"""Command-line driver: decompose, denoise, and verify subcommands.

All numeric CSV output uses full round-trip precision so identical runs
produce byte-identical files. Exit status is 0 only when every enabled
check passes; failures emit one machine-readable ``error: <slug>: ...``
line on stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import (
    rms_distance_curve,
    save_denoise_csv,
    save_spectrum_csv,
    save_taylor_csv,
    taylor_coefficients,
    taylor_report,
)
from .csvutil import full, write_grid_csv
from .eigen import ANTISYMMETRIC, MIXED, SYMMETRIC, EigenFilter, eigendecompose
from .filterbank import (
    Decomposition,
    decompose,
    partial_sum,
    reconstruction_residual,
)
from .image import Image, NoiseSpec, PgmError, add_gaussian_noise, load_pgm, save_pgm
from .lagcov import (
    LagCovariance,
    WindowError,
    WindowGeometry,
    bisymmetry_residual,
    build_lag_covariance_fast,
    build_lag_covariance_oracle,
)
from .spectral import verify_identities

RECONSTRUCTION_TOL = 1e-9
BISYMMETRY_TOL = 1e-10
GRAM_TOL = 1e-10
NORMALIZATION_TOL = 1e-9
COMPLETENESS_TOL = 1e-9
PARITY_TOL = 1e-8

#: test hook: set to a 1-based rank to zero that eigenvector before `verify` checks
ZERO_FILTER_ENV = "SSA2D_TEST_ZERO_FILTER"
THREADS_ENV = "SSA2D_THREADS"


class CliError(Exception):
    """Pipeline failure with a stable machine-readable slug."""

    def __init__(self, slug: str, message: str):
        super().__init__(message)
        self.slug = slug


@dataclass
class RunConfig:
    """Validated settings for one pipeline run."""

    input_path: Path
    window_m: int
    window_n: int
    output_dir: Path
    boundary: str = "periodic"
    noise_sigma: float | None = None
    noise_seed: int | None = None
    mesh_scale: float = 1.0
    fast_covariance: bool = True
    emit_components: bool = False

    def __post_init__(self) -> None:
        if self.boundary != "periodic":
            raise CliError("bad-boundary", f"unsupported boundary {self.boundary!r}")
        if self.window_m < 1 or self.window_n < 1:
            raise CliError("bad-window", "window dimensions must be positive")
        if self.mesh_scale <= 0:
            raise CliError("bad-mesh-scale", "mesh scale must be positive")
        if self.noise_sigma is not None and self.noise_sigma < 0:
            raise CliError("bad-noise-sigma", "noise sigma must be nonnegative")


def _parse_window(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        m, n = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MxN, got {text!r}")
    if len(parts) != 2 or m < 1 or n < 1:
        raise argparse.ArgumentTypeError(f"expected MxN with positive sizes, got {text!r}")
    return m, n


def _worker_count(n_tasks: int) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        cap = 0
    else:
        try:
            cap = int(raw)
        except ValueError:
            raise CliError("bad-threads", f"{THREADS_ENV} must be an integer, got {raw!r}")
        if cap < 0:
            raise CliError("bad-threads", f"{THREADS_ENV} must be nonnegative")
    if cap == 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


@dataclass
class PipelineResult:
    config: RunConfig
    image: Image
    geometry: WindowGeometry
    covariance: LagCovariance
    filters: list[EigenFilter]
    decomposition: Decomposition


def run_pipeline(config: RunConfig, filter_hook=None) -> PipelineResult:
    """Load, optionally add noise, build covariance and filters, decompose."""
    try:
        image = load_pgm(config.input_path)
    except FileNotFoundError:
        raise CliError("input-not-found", f"cannot read {config.input_path}")
    except PgmError as exc:
        raise CliError("pgm-parse", str(exc))

    if config.noise_sigma is not None:
        spec = NoiseSpec(config.noise_sigma, config.noise_seed or 0)
        image = add_gaussian_noise(image, spec)

    geometry = WindowGeometry(config.window_m, config.window_n)
    try:
        if config.fast_covariance:
            covariance = build_lag_covariance_fast(image, geometry)
        else:
            covariance = build_lag_covariance_oracle(image, geometry)
    except WindowError as exc:
        raise CliError("window-too-large", str(exc))

    filters = eigendecompose(covariance)
    if filter_hook is not None:
        filters = filter_hook(filters)
    decomposition = decompose(
        image,
        filters,
        geometry,
        method="fft",
        threads=_worker_count(geometry.K),
    )
    return PipelineResult(config, image, geometry, covariance, filters, decomposition)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    m, n = args.window
    return RunConfig(
        input_path=Path(args.input),
        window_m=m,
        window_n=n,
        output_dir=Path(args.output_dir),
        noise_sigma=args.noise_sigma,
        noise_seed=args.noise_seed,
        mesh_scale=args.mesh_scale,
        fast_covariance=not args.no_fast_cov,
        emit_components=getattr(args, "emit_components", False),
    )


def _emit_components(result: PipelineResult) -> None:
    K = result.geometry.K
    width = max(3, len(str(K)))
    for k in range(1, K + 1):
        component = result.decomposition.component(k)
        stem = result.config.output_dir / f"component_{k:0{width}d}"
        save_pgm(component, stem.with_suffix(".pgm"))
        write_grid_csv(stem.with_suffix(".csv"), component.data)


def cmd_decompose(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    result = run_pipeline(config)
    outdir = config.output_dir
    outdir.mkdir(parents=True, exist_ok=True)

    save_spectrum_csv(result.filters, outdir / "spectrum.csv")
    odd_window = config.window_m % 2 == 1 and config.window_n % 2 == 1
    if odd_window:
        save_taylor_csv(
            taylor_report(result.filters, config.mesh_scale), outdir / "taylor.csv"
        )

    reconstruction = partial_sum(result.decomposition, result.geometry.K)
    save_pgm(reconstruction, outdir / "reconstruction.pgm")
    if config.emit_components:
        _emit_components(result)

    residual = reconstruction_residual(result.decomposition)
    ok = residual <= RECONSTRUCTION_TOL
    status = "PASS" if ok else "FAIL"
    summary = [
        f"input={config.input_path}",
        f"window={config.window_m}x{config.window_n}",
        f"components={result.geometry.K}",
        f"reconstruction_residual={full(residual)}",
        f"tolerance={full(RECONSTRUCTION_TOL)}",
        f"status={status}",
    ]
    (outdir / "summary.txt").write_text("\n".join(summary) + "\n")
    print("\n".join(summary))
    return 0 if ok else 1


def cmd_denoise(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    try:
        reference = load_pgm(args.reference)
    except FileNotFoundError:
        raise CliError("reference-not-found", f"cannot read {args.reference}")
    except PgmError as exc:
        raise CliError("pgm-parse", str(exc))

    result = run_pipeline(config)
    if reference.shape != result.image.shape:
        raise CliError(
            "reference-mismatch",
            f"reference {reference.rows}x{reference.cols} does not match "
            f"input {result.image.rows}x{result.image.cols}",
        )

    report = rms_distance_curve(reference, result.decomposition)
    K = result.geometry.K
    if args.truncate == "auto":
        ell = report.ell_star
    else:
        try:
            ell = int(args.truncate)
        except ValueError:
            raise CliError("bad-truncate", f"--truncate must be an integer or 'auto', got {args.truncate!r}")
        if not 1 <= ell <= K:
            raise CliError("bad-truncate", f"truncation rank {ell} outside 1..{K}")

    outdir = config.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    save_denoise_csv(report, outdir / "denoise.csv")
    truncated = partial_sum(result.decomposition, ell)
    save_pgm(truncated, outdir / "denoised.pgm")
    write_grid_csv(outdir / "denoised.csv", truncated.data)

    print(
        f"ell={ell} distance={full(report.curve[ell - 1])} "
        f"ell_star={report.ell_star} d_min={full(report.d_min)} "
        f"full_distance={full(report.curve[K - 1])}"
    )
    return 0


def _zero_filter_hook(filters: list[EigenFilter]) -> list[EigenFilter]:
    raw = os.environ.get(ZERO_FILTER_ENV)
    if raw is None or raw.strip() == "":
        return filters
    try:
        rank = int(raw)
    except ValueError:
        raise CliError("bad-test-hook", f"{ZERO_FILTER_ENV} must be an integer")
    if not 1 <= rank <= len(filters):
        raise CliError("bad-test-hook", f"{ZERO_FILTER_ENV} outside 1..{len(filters)}")
    target = filters[rank - 1]
    zeroed = EigenFilter(
        index=target.index,
        eigenvalue=target.eigenvalue,
        vector=np.zeros_like(target.vector),
        symmetry=MIXED,
        symmetry_score=0.0,
        grid=np.zeros_like(target.grid),
    )
    return [zeroed if f is target else f for f in filters]


def _parity_residual(filters: list[EigenFilter], mesh_scale: float) -> float:
    worst = 0.0
    for filt in filters:
        if filt.degenerate or filt.symmetry == MIXED:
            continue
        row = taylor_coefficients(filt, mesh_scale)
        if filt.symmetry == SYMMETRIC:
            worst = max(worst, abs(row.f_x), abs(row.f_y))
        elif filt.symmetry == ANTISYMMETRIC:
            worst = max(worst, abs(row.f), abs(row.f_xx), abs(row.f_xy), abs(row.f_yy))
    return worst


def cmd_verify(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    result = run_pipeline(config, filter_hook=_zero_filter_hook)
    M, N = result.image.shape

    vectors = np.column_stack([f.vector for f in result.filters])
    gram_residual = float(np.max(np.abs(vectors.T @ vectors - np.eye(result.geometry.K))))
    spectra = verify_identities(result.filters, M, N)

    checks = [
        ("bisymmetry_residual", bisymmetry_residual(result.covariance), BISYMMETRY_TOL),
        ("eigenvector_gram_residual", gram_residual, GRAM_TOL),
        ("normalization_residual", float(spectra.normalization_residuals.max()), NORMALIZATION_TOL),
        ("completeness_residual", spectra.completeness_residual, COMPLETENESS_TOL),
        ("reconstruction_residual", reconstruction_residual(result.decomposition), RECONSTRUCTION_TOL),
    ]

    lines = []
    all_ok = True
    for name, value, tol in checks:
        ok = value <= tol
        all_ok = all_ok and ok
        lines.append(f"{name} {full(value)} tol={full(tol)} {'PASS' if ok else 'FAIL'}")

    odd_window = config.window_m % 2 == 1 and config.window_n % 2 == 1
    if odd_window:
        parity = _parity_residual(result.filters, config.mesh_scale)
        ok = parity <= PARITY_TOL
        all_ok = all_ok and ok
        lines.append(f"taylor_parity_residual {full(parity)} tol={full(PARITY_TOL)} {'PASS' if ok else 'FAIL'}")
    else:
        lines.append("taylor_parity_residual skipped (window dimensions not odd)")

    lines.append(f"overall {'PASS' if all_ok else 'FAIL'}")
    config.output_dir.mkdir(parents=True, exist_ok=True)
    (config.output_dir / "verify.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssa2d",
        description="Adaptive 2-D filter-bank image decomposition, verification, and denoising.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True, help="input PGM image (P2 or P5)")
        p.add_argument("--window", required=True, type=_parse_window, metavar="MxN",
                       help="moving window size, e.g. 3x3")
        p.add_argument("--output-dir", default=".", help="directory for result files")
        p.add_argument("--noise-sigma", type=float, default=None,
                       help="add Gaussian noise with this standard deviation before processing")
        p.add_argument("--noise-seed", type=int, default=None, help="noise generator seed")
        p.add_argument("--mesh-scale", type=float, default=1.0,
                       help="spatial step per window cell in coefficient reports")
        p.add_argument("--no-fast-cov", action="store_true",
                       help="build the covariance by the brute-force path")

    p_dec = sub.add_parser("decompose", help="full decomposition with reports")
    add_common(p_dec)
    p_dec.add_argument("--emit-components", action="store_true",
                       help="write every component image as PGM and CSV")
    p_dec.set_defaults(func=cmd_decompose)

    p_den = sub.add_parser("denoise", help="truncated reconstruction against a reference")
    add_common(p_den)
    p_den.add_argument("--reference", required=True, help="clean reference PGM")
    p_den.add_argument("--truncate", default="auto",
                       help="number of leading components to keep, or 'auto'")
    p_den.set_defaults(func=cmd_denoise)

    p_ver = sub.add_parser("verify", help="run all structural identity checks")
    add_common(p_ver)
    p_ver.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc.slug}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
