"""
Обработчики подкоманд CLI: synth, project, sap, sweep, plot
"""
import argparse
from pathlib import Path
from typing import Any, Optional

import numpy as np
from loguru import logger
from pydantic import ValidationError

from hsap import __version__
from hsap.core.config import load_config_file, resolve_parameters
from hsap.core.exceptions import EXIT_OK, ConfigurationError
from hsap.schemas.manifest import ParameterSource, ResolvedParameter, RunManifest
from hsap.schemas.matrices import DataMatrix, MatrixFormat
from hsap.schemas.projection import HsapConfig, HsapResult
from hsap.services.artifacts import (
    load_profile,
    load_trace,
    save_manifest,
    save_profile,
    save_report,
    save_trace,
)
from hsap.services.dataset import gen_synthetic, load_cube, load_labels, load_matrix, parse_cube_shape, save_labels, save_matrix
from hsap.services.hsap_engine import dimension_sweep, estimate_dimension, run_hsap
from hsap.services.plotting import plot_label_map, plot_points, plot_profile, plot_trace
from hsap.services.sap import sap_run
from hsap.services.secant import save_secants
from hsap.settings import settings
from hsap.utils.helpers import atomic_write_text, file_sha256, format_float, parse_shape

# имя флага (дефисы -> подчеркивания) -> поле HsapConfig
PROJECT_FIELDS = {
    "dim": "k",
    "clusters": "n_clusters",
    "mode": "mode",
    "alpha": "alpha",
    "iters": "max_iters",
    "anchors": "anchor_count",
    "anchor_strategy": "anchor_strategy",
    "energy": "energy",
    "cluster_dim": "cluster_dim",
    "within_samples": "within_samples",
    "metric": "metric",
    "seed": "seed",
    "init": "init",
    "init_center": "init_center",
    "stop_tol": "stop_tol",
    "stop_window": "stop_window",
    "kmeans_iters": "kmeans_max_iters",
    "cap": "secant_cap",
    "full_svd": "full_svd",
    "resample_within": "resample_within",
    "threads": "threads",
}

SWEEP_FIELDS = {flag: field for flag, field in PROJECT_FIELDS.items() if flag != "dim"}

SAP_FIELDS = {
    "dim": "k",
    "alpha": "alpha",
    "iters": "max_iters",
    "init": "init",
    "init_center": "init_center",
    "seed": "seed",
    "cap": "secant_cap",
}

MATRIX_SUFFIX = {MatrixFormat.CSV: ".csv", MatrixFormat.BINARY: ".bin"}


def _settings_fallbacks() -> dict[str, Any]:
    return {"seed": settings.default_seed, "secant_cap": settings.secant_cap, "threads": settings.threads}


def _resolve_config(
    args: argparse.Namespace,
    field_names: dict[str, str],
    overrides: Optional[dict[str, Any]] = None,
    record_all: bool = True,
) -> tuple[HsapConfig, dict[str, ResolvedParameter]]:
    """Флаги > файл --config > AppSettings > значения по умолчанию HsapConfig"""
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    flag_values = {flag: getattr(args, flag, None) for flag in field_names}
    fallbacks = {field: value for field, value in _settings_fallbacks().items() if field in field_names.values()}
    explicit, sources = resolve_parameters(flag_values, file_values, field_names, fallbacks)
    explicit.update(overrides or {})
    try:
        config = HsapConfig(**explicit)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid parameters: {str(e)}", code="invalid_parameters")

    parameters = {}
    for field in HsapConfig.model_fields:
        if field in (overrides or {}):
            continue
        if not record_all and field not in field_names.values():
            continue
        source = sources[field].source if field in sources else ParameterSource.DEFAULT
        parameters[field] = ResolvedParameter(value=getattr(config, field), source=source)
    return config, parameters


def _load_input(args: argparse.Namespace) -> tuple[DataMatrix, dict[str, str]]:
    digests = {"input": file_sha256(args.input)}
    if getattr(args, "cube", None):
        data = load_cube(args.input, parse_cube_shape(args.cube), args.interleave)
    else:
        data = load_matrix(args.input)
    return data, digests


def _load_labels_arg(args: argparse.Namespace, data: DataMatrix, digests: dict[str, str]) -> Optional[np.ndarray]:
    if not getattr(args, "labels", None):
        return None
    labels = load_labels(args.labels)
    if labels.shape[0] != data.n_points:
        raise ConfigurationError(f"Labels file has {labels.shape[0]} rows for {data.n_points} points", code="label_count_mismatch")
    digests["labels"] = file_sha256(args.labels)
    return labels


def _write_run_outputs(
    result: HsapResult,
    data: DataMatrix,
    out_dir: Path,
    fmt: MatrixFormat,
    manifest: RunManifest,
    write_labels: bool,
    save_secant_set: bool,
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    suffix = MATRIX_SUFFIX[fmt]
    save_matrix(result.projection, out_dir / f"projection{suffix}", fmt)
    save_matrix(data.points @ result.projection, out_dir / f"projected{suffix}", fmt)
    save_trace(result.trace, out_dir / "trace.csv")
    save_report(result.report, out_dir / "report.txt")
    if result.trace:
        plot_trace(result.trace, out_dir / "trace.svg")
    if write_labels and result.labels is not None:
        save_labels(result.labels, out_dir / "labels.csv")
    if save_secant_set and result.secants is not None:
        save_secants(result.secants, out_dir / "secants.bin")
    save_manifest(manifest, out_dir / "manifest.json")
    logger.info(f"Outputs written to {out_dir}")


def cmd_synth(args: argparse.Namespace) -> int:
    """Синтетический набор: две прямые и плоскость"""
    try:
        low, high = (float(token) for token in args.range.split(","))
    except ValueError:
        raise ConfigurationError(f"--range expects 'low,high', got {args.range!r}", code="bad_range")
    seed = settings.default_seed if args.seed is None else args.seed
    data = gen_synthetic(per_line=args.per_line, plane=args.plane, t_range=(low, high), seed=seed)

    out = Path(args.out)
    labels_out = Path(args.labels_out) if args.labels_out else out.with_name(f"{out.stem}.labels.csv")
    save_matrix(data, out)
    save_labels(data.labels, labels_out)
    logger.info(f"Synthetic data: {data.n_points} points -> {out}, labels -> {labels_out}")
    return EXIT_OK


def cmd_project(args: argparse.Namespace) -> int:
    """HSAP от начала до конца"""
    data, digests = _load_input(args)
    labels = _load_labels_arg(args, data, digests)
    overrides = {"n_clusters": int(np.unique(labels).size)} if labels is not None else None
    config, parameters = _resolve_config(args, PROJECT_FIELDS, overrides)
    if labels is not None:
        parameters["n_clusters"] = ResolvedParameter(value=config.n_clusters, source=ParameterSource.LABELS_FILE)

    result = run_hsap(data, config, labels)
    fmt = MatrixFormat(args.format)
    manifest = RunManifest(
        command="project",
        tool_version=__version__,
        parameters=parameters,
        input_digests=digests,
        extra={"cube": args.cube, "interleave": args.interleave, "format": fmt.value},
    )
    _write_run_outputs(result, data, Path(args.out_dir), fmt, manifest, labels is None, args.save_secants)
    return EXIT_OK


def cmd_sap(args: argparse.Namespace) -> int:
    """SAP на полном множестве секущих"""
    data, digests = _load_input(args)
    config, parameters = _resolve_config(args, SAP_FIELDS, record_all=False)
    result = sap_run(
        data,
        config.k,
        alpha=config.alpha,
        iters=config.max_iters,
        init=config.init,
        seed=config.seed,
        cap=config.secant_cap,
        init_center=config.init_center,
    )
    fmt = MatrixFormat(args.format)
    manifest = RunManifest(
        command="sap",
        tool_version=__version__,
        parameters=parameters,
        input_digests=digests,
        extra={"cube": args.cube, "interleave": args.interleave, "format": fmt.value},
    )
    _write_run_outputs(result, data, Path(args.out_dir), fmt, manifest, False, args.save_secants)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Профиль размерности на k из [kmin, kmax]"""
    if args.kmin > args.kmax:
        raise ConfigurationError(f"--kmin {args.kmin} exceeds --kmax {args.kmax}", code="bad_k_range")
    data, digests = _load_input(args)
    labels = _load_labels_arg(args, data, digests)
    overrides = {"k": args.kmin}
    if labels is not None:
        overrides["n_clusters"] = int(np.unique(labels).size)
    config, parameters = _resolve_config(args, SWEEP_FIELDS, overrides)
    if labels is not None:
        parameters["n_clusters"] = ResolvedParameter(value=config.n_clusters, source=ParameterSource.LABELS_FILE)
    parameters["kmin"] = ResolvedParameter(value=args.kmin, source=ParameterSource.FLAG)
    parameters["kmax"] = ResolvedParameter(value=args.kmax, source=ParameterSource.FLAG)

    profile = dimension_sweep(data, config, range(args.kmin, args.kmax + 1), labels)
    estimate = estimate_dimension(profile, args.threshold)
    logger.info(f"Estimated dimension at threshold {args.threshold}: {estimate}")

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_profile(profile, out_dir / "profile.csv")
    atomic_write_text(
        out_dir / "sweep_report.txt",
        f"threshold={format_float(args.threshold)}\nestimated_dimension={'' if estimate is None else estimate}\n",
    )
    if args.plot:
        plot_profile(profile, out_dir / "profile.svg", threshold=args.threshold)
    save_manifest(
        RunManifest(
            command="sweep",
            tool_version=__version__,
            parameters=parameters,
            input_digests=digests,
            extra={"cube": args.cube, "interleave": args.interleave, "threshold": args.threshold},
        ),
        out_dir / "manifest.json",
    )
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    """SVG: трасса, проекция, профиль или карта кластеров"""
    sources = [name for name in ("trace", "points", "profile", "label_map") if getattr(args, name)]
    if len(sources) != 1:
        raise ConfigurationError("Exactly one of --trace, --points, --profile, --label-map is required", code="bad_plot_source")

    if args.trace:
        plot_trace(load_trace(args.trace), args.out)
    elif args.points:
        labels = load_labels(args.labels) if args.labels else None
        plot_points(load_matrix(args.points).points, args.out, labels)
    elif args.profile:
        plot_profile(load_profile(args.profile), args.out)
    else:
        if not args.shape:
            raise ConfigurationError("--label-map requires --shape HxW", code="missing_shape")
        try:
            height, width = parse_shape(args.shape, 2)
        except ValueError as e:
            raise ConfigurationError(f"Bad --shape: {str(e)}", code="bad_shape")
        plot_label_map(load_labels(args.label_map), height, width, args.out)
    return EXIT_OK
