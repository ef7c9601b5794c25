"""Configuration-driven experiment orchestration.

One experiment run draws a repetition-specific sample, builds Jacobians of
the composed pipeline, fits every configured shared-subspace method, and
reports reconstruction RMSEs for each subspace dimension, amortized over
repetitions.  All randomness derives from the base seed through fixed
64-bit sub-stream mixing, so identical configurations produce
byte-identical delimited output.
"""
from __future__ import annotations

import concurrent.futures
import csv
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._version import __version__
from .errors import ConfigError, DomainError, SharedSubError, StencilError
from .evaluation import (RmseRecord, reconstruct_condexp, reconstruct_linear_map,
                         reconstruct_projection, rmse_sum, summary_plot_data,
                         write_rmse_csv, write_summary_csv)
from .gradients import (DEFAULT_REL_STEP, JacobianSet, OutputStats, assemble_h,
                        assemble_spd, composed_map, jacobian_fd,
                        jacobian_set_from_dataset, output_stats)
from .linalg import validate_symmetric
from .methods import (METHOD_TAGS, SharedBasis, method_ag, method_fg, method_lp,
                      method_mch, method_see, method_sspd, method_zahm,
                      save_shared_basis)
from .problems import DatasetProblem, load_dataset_problem, synthetic_problem
from .sampling import (Distribution, SampleSet, derive_seed, make_rng,
                       sample_matrix)

_DIST_ALIASES = {
    "standard-normal": "standard-normal",
    "normal": "standard-normal",
    "uniform-symmetric": "uniform-symmetric",
    "uniform": "uniform-symmetric",
}
_PROBLEM_OPTION_KEYS = {"rotate_third_coordinate", "transpose_rotations", "radicand"}
_CONFIG_KEYS = {
    "problem", "dataset", "distribution", "sigma", "n", "repetitions", "seed",
    "normalize", "methods", "zahm_n_mc", "output_dir", "rmse", "rmse_units",
    "zahm_reconstruction", "out_of_sample", "figures", "problem_options", "lp_sign",
}

# sub-stream tags for independent randomness within one repetition
_TAG_CONDEXP = 101
_TAG_EVAL_SAMPLE = 202


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; see README for the JSON schema."""

    n: int
    repetitions: int = 10
    seed: int = 0
    problem: str = "synthetic"
    dataset: str | None = None
    distribution: str = "uniform-symmetric"
    sigma: str | None = None
    normalize: bool = True
    methods: tuple = METHOD_TAGS[:-1]          # zahm opts in explicitly
    zahm_n_mc: int = 20
    output_dir: str = "out"
    rmse: bool = True
    rmse_units: str = "normalized"
    zahm_reconstruction: str = "condexp"
    out_of_sample: bool = False
    figures: bool = True
    problem_options: dict = field(default_factory=dict)
    lp_sign: str = "mean"

    def __post_init__(self):
        if self.n < 1 or self.repetitions < 1:
            raise ConfigError("n and repetitions must be >= 1")
        if self.distribution not in _DIST_ALIASES:
            raise ConfigError(f"unknown distribution {self.distribution!r}")
        object.__setattr__(self, "distribution", _DIST_ALIASES[self.distribution])
        methods = tuple(self.methods)
        unknown = [m for m in methods if m not in METHOD_TAGS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; valid tags: {list(METHOD_TAGS)}")
        if not methods:
            raise ConfigError("at least one method is required")
        object.__setattr__(self, "methods", methods)
        if self.rmse_units not in ("normalized", "original"):
            raise ConfigError("rmse_units must be 'normalized' or 'original'")
        if self.zahm_reconstruction not in ("condexp", "projector"):
            raise ConfigError("zahm_reconstruction must be 'condexp' or 'projector'")
        if self.lp_sign not in ("mean", "dominant"):
            raise ConfigError("lp_sign must be 'mean' or 'dominant'")
        if self.zahm_n_mc < 1:
            raise ConfigError("zahm_n_mc must be >= 1")
        bad = set(self.problem_options) - _PROBLEM_OPTION_KEYS
        if bad:
            raise ConfigError(f"unknown problem_options {sorted(bad)}")
        if self.dataset is None and self.problem != "synthetic":
            raise ConfigError(f"unknown problem {self.problem!r}; only 'synthetic' is built in")
        if self.dataset is not None:
            if self.rmse:
                raise ConfigError(
                    "dataset problems have no evaluator, so reconstruction RMSE "
                    "cannot be computed; set \"rmse\": false to compute subspaces only")
            if "zahm" in self.methods:
                raise ConfigError("zahm requires an evaluator problem and a distribution")
        if self.sigma is not None and self.distribution != "standard-normal":
            raise ConfigError("a covariance file only applies to the normal distribution")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys {sorted(unknown)}")
        if "n" not in data:
            raise ConfigError("configuration key 'n' is required")
        kwargs = dict(data)
        if "methods" in kwargs:
            kwargs["methods"] = tuple(kwargs["methods"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem, "dataset": self.dataset,
            "distribution": self.distribution, "sigma": self.sigma, "n": self.n,
            "repetitions": self.repetitions, "seed": self.seed,
            "normalize": self.normalize, "methods": list(self.methods),
            "zahm_n_mc": self.zahm_n_mc, "output_dir": self.output_dir,
            "rmse": self.rmse, "rmse_units": self.rmse_units,
            "zahm_reconstruction": self.zahm_reconstruction,
            "out_of_sample": self.out_of_sample, "figures": self.figures,
            "problem_options": dict(self.problem_options), "lp_sign": self.lp_sign,
        }


@dataclass
class ExperimentResult:
    records: list
    output_dir: Path
    rmse_csv: Path | None
    manifest: Path
    resampled_points: int
    failed_repetitions: list


def _load_sigma(config: ExperimentConfig, dim: int):
    if config.sigma is None:
        return None
    rows = []
    with open(config.sigma, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if row:
                rows.append([float(v) for v in row])
    sigma = validate_symmetric(np.array(rows), "sigma")
    if sigma.shape != (dim, dim):
        raise ConfigError(f"sigma must be {dim}x{dim}")
    return sigma


def _build_problem(config: ExperimentConfig):
    if config.dataset is not None:
        return load_dataset_problem(config.dataset)
    return synthetic_problem(**config.problem_options)


def _distribution_for(config: ExperimentConfig, dim: int) -> Distribution:
    sigma = _load_sigma(config, dim)
    return Distribution(kind=config.distribution, dim=dim, sigma=sigma)


def _draw_feasible(problem, dist, n, seed, rel_step):
    """Draw n points whose value and FD Jacobian both evaluate; resample failures."""
    rng = make_rng(seed)
    func = composed_map(problem, dist)
    points = np.empty((n, dist.dim))
    outputs = np.empty((n, problem.output_dim))
    jacobians = np.empty((n, problem.output_dim, problem.input_dim))
    resampled = 0
    i = 0
    while i < n:
        z = sample_matrix(dist, 1, rng)[0]
        try:
            outputs[i] = func(z)
            jacobians[i] = jacobian_fd(func, z, out_dim=problem.output_dim, rel_step=rel_step)
        except (DomainError, StencilError):
            resampled += 1
            if resampled > 1000 * n:
                raise DomainError("resampling failed to find enough feasible points")
            continue
        points[i] = z
        i += 1
    samples = SampleSet(points=points, distribution=dist, seed=seed)
    return samples, outputs, jacobians, resampled


def _rmse_factor(stats: OutputStats, normalize: bool, units: str) -> np.ndarray:
    """Convert pipeline-unit RMSEs into the requested reporting units."""
    if units == "normalized":
        return np.ones_like(stats.std) if normalize else 1.0 / stats.std
    return stats.std if normalize else np.ones_like(stats.std)


def _fit_bases(config: ExperimentConfig, js: JacobianSet):
    """All configured subspace bases; zahm is handled separately per rank."""
    spd = None
    bases = {}
    for tag in config.methods:
        if tag == "zahm":
            continue
        if tag == "ag":
            bases[tag] = method_ag(js)
        elif tag == "mch":
            bases[tag] = method_mch(js)
        elif tag == "lp":
            bases[tag] = method_lp(js, sign=config.lp_sign)
        else:
            spd = assemble_spd(js) if spd is None else spd
            if tag == "sspd":
                bases[tag] = method_sspd(spd)
            elif tag == "fg":
                bases[tag] = method_fg(spd)
            elif tag == "see":
                bases[tag] = method_see(spd)
    return bases


def _run_repetition(config: ExperimentConfig, rep: int, rel_step=DEFAULT_REL_STEP):
    """One repetition: sample, fit, evaluate.

    Returns (records, bases, zahm_vectors, resampled); ``zahm_vectors`` is
    the full-rank generalized eigenvector matrix or None.
    """
    problem = _build_problem(config)
    sub_seed = derive_seed(config.seed, rep)

    if isinstance(problem, DatasetProblem):
        js, _stats = jacobian_set_from_dataset(problem, normalize=config.normalize)
        bases = _fit_bases(config, js)
        return [], bases, None, 0

    dist = _distribution_for(config, problem.input_dim)
    fit_sample, raw_outputs, jacobians, resampled = _draw_feasible(
        problem, dist, config.n, sub_seed, rel_step)
    stats = output_stats(raw_outputs)
    if config.normalize:
        jacobians = jacobians / stats.std[None, :, None]
    js = JacobianSet(jacobians=jacobians, sample=fit_sample,
                     outputs=raw_outputs, normalized=config.normalize)
    bases = _fit_bases(config, js)

    d = problem.input_dim
    zahm_h = assemble_h(js) if "zahm" in config.methods else None
    zahm_sigma = dist.sigma if dist.sigma is not None else np.eye(d)
    zahm_vectors = (method_zahm(zahm_h, zahm_sigma, d).vectors
                    if zahm_h is not None else None)

    if not config.rmse:
        return [], bases, zahm_vectors, resampled

    if config.out_of_sample:
        eval_sample, eval_outputs, _, extra = _draw_feasible(
            problem, dist, config.n, derive_seed(config.seed, rep, _TAG_EVAL_SAMPLE), rel_step)
        resampled += extra
    else:
        eval_sample, eval_outputs = fit_sample, raw_outputs

    pipeline_stats = stats if config.normalize else None
    original = ((eval_outputs - stats.mean) / stats.std) if config.normalize else eval_outputs
    factor = _rmse_factor(stats, config.normalize, config.rmse_units)

    records = []
    for tag in config.methods:
        for j in range(1, d + 1):
            if tag == "zahm":
                projector = method_zahm(zahm_h, zahm_sigma, j)
                if config.zahm_reconstruction == "condexp":
                    rec = reconstruct_condexp(
                        problem, projector, eval_sample, config.zahm_n_mc,
                        derive_seed(config.seed, rep, _TAG_CONDEXP + j), pipeline_stats)
                else:
                    rec = reconstruct_linear_map(
                        problem, projector.projector, eval_sample, pipeline_stats)
            else:
                rec = reconstruct_projection(problem, bases[tag], j, eval_sample, pipeline_stats)
            per_objective, _ = rmse_sum(original, rec.values, rec.excluded)
            per_objective = per_objective * factor
            for k, value in enumerate(per_objective, start=1):
                records.append(RmseRecord(method=tag, repetition=rep, j=j, objective=k,
                                          rmse=float(value), excluded_points=len(rec.excluded)))
    return records, bases, zahm_vectors, resampled


def _dump_bases(config: ExperimentConfig, bases: dict, zahm_vectors, out_dir: Path):
    paths = []
    for tag in config.methods:
        path = out_dir / f"basis_{tag}.csv"
        if tag == "zahm":
            if zahm_vectors is None:
                continue
            # generalized eigenvectors; Sigma^-1-orthonormal, same dump format
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["zahm", str(zahm_vectors.shape[0]), "ordering=descending"])
                for row in zahm_vectors:
                    writer.writerow([repr(float(v)) for v in row])
        else:
            save_shared_basis(bases[tag], path)
        paths.append(path)
    return paths


def run_experiment(config: ExperimentConfig, jobs: int = 1,
                   reproducible: bool = True) -> ExperimentResult:
    """Full experiment: per-repetition subspaces and RMSE rows, CSV + figures.

    ``reproducible`` keeps the fixed write order (always on; the flag is
    accepted for interface stability).  ``jobs`` parallelizes repetitions;
    sub-seeded streams keep the output identical to a serial run.
    """
    del reproducible   # output order is deterministic regardless
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.monotonic()

    results = {}
    failures = []
    if jobs > 1 and config.repetitions > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_run_repetition, config, rep): rep
                       for rep in range(config.repetitions)}
            for future in concurrent.futures.as_completed(futures):
                rep = futures[future]
                try:
                    results[rep] = future.result()
                except SharedSubError as exc:
                    failures.append({"repetition": rep, "error": str(exc)})
    else:
        for rep in range(config.repetitions):
            try:
                results[rep] = _run_repetition(config, rep)
            except SharedSubError as exc:
                failures.append({"repetition": rep, "error": str(exc)})
    if not results:
        raise SharedSubError(f"all repetitions failed: {failures}")

    records = []
    resampled = 0
    for rep in sorted(results):
        rep_records, _, _, rep_resampled = results[rep]
        records.extend(rep_records)
        resampled += rep_resampled

    first_rep = min(results)
    _dump_bases(config, results[first_rep][1], results[first_rep][2], out_dir)

    rmse_csv = None
    if config.rmse and records:
        rmse_csv = out_dir / "rmse.csv"
        write_rmse_csv(records, rmse_csv)
        if config.figures:
            from .figures import render_rmse_boxplot
            render_rmse_boxplot(records, out_dir / "rmse_boxplot.png")

    manifest_path = out_dir / "manifest.json"
    manifest = {
        "config": config.to_dict(),
        "version": __version__,
        "wall_time_s": time.monotonic() - start,
        "resampled_points": resampled,
        "failed_repetitions": failures,
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return ExperimentResult(records=records, output_dir=out_dir, rmse_csv=rmse_csv,
                            manifest=manifest_path, resampled_points=resampled,
                            failed_repetitions=failures)


def mean_sum_rmse(records):
    """(method, j) -> mean over repetitions of the objective-summed RMSE."""
    by_rep = {}
    for r in records:
        key = (r.method, r.j, r.repetition)
        by_rep[key] = by_rep.get(key, 0.0) + r.rmse
    grouped = {}
    for (method, j, _rep), value in by_rep.items():
        grouped.setdefault((method, j), []).append(value)
    return {key: float(np.mean(values)) for key, values in grouped.items()}


def run_summary_plot(config: ExperimentConfig, method: str, rank: int = 1):
    """Single-repetition sufficient-summary table (CSV + figure) for one method."""
    if method not in METHOD_TAGS or method == "zahm":
        raise ConfigError(
            f"method must be one of {[m for m in METHOD_TAGS if m != 'zahm']}")
    if config.dataset is not None:
        raise ConfigError("summary plots need an evaluator problem")
    sub = replace(config, methods=(method,), rmse=False)
    problem = _build_problem(sub)
    if not (1 <= rank <= problem.input_dim):
        raise ConfigError(f"rank must be in 1..{problem.input_dim}")
    dist = _distribution_for(sub, problem.input_dim)
    sample, outputs, jacobians, _ = _draw_feasible(
        problem, dist, sub.n, derive_seed(sub.seed, 0), DEFAULT_REL_STEP)
    stats = output_stats(outputs)
    if sub.normalize:
        jacobians = jacobians / stats.std[None, :, None]
    js = JacobianSet(jacobians=jacobians, sample=sample, outputs=outputs,
                     normalized=sub.normalize)
    basis = _fit_bases(sub, js)[method]
    table = summary_plot_data(problem, basis, sample, stats if sub.normalize else None)
    out_dir = Path(sub.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"summary_{method}.csv"
    write_summary_csv(table, csv_path)
    if config.figures:
        from .figures import render_summary_plot
        render_summary_plot(table, out_dir / f"summary_{method}.png", method=method)
    return csv_path


def compare_normalization(config: ExperimentConfig):
    """Run with normalized and original-output gradients; tabulate side by side."""
    if config.dataset is not None:
        raise ConfigError("normalization comparison needs an evaluator problem")
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs = {}
    for label, normalize in (("normalized", True), ("original", False)):
        sub = replace(config, normalize=normalize, figures=False,
                      output_dir=str(out_dir / f"norm_{label}"))
        runs[label] = run_experiment(sub)
    means = {label: mean_sum_rmse(runs[label].records) for label in runs}
    d = _build_problem(config).input_dim
    rows = []
    for method in config.methods:
        for j in range(1, d + 1):
            rows.append({
                "method": method, "j": j,
                "mean_sum_rmse_normalized": means["normalized"].get((method, j), float("nan")),
                "mean_sum_rmse_original": means["original"].get((method, j), float("nan")),
                "repetitions": config.repetitions,
                "single_repetition": config.repetitions == 1,
            })
    table_path = out_dir / "normcompare.csv"
    with open(table_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "j", "mean_sum_rmse_normalized",
                         "mean_sum_rmse_original", "repetitions", "single_repetition"])
        for row in rows:
            writer.writerow([row["method"], row["j"],
                             repr(row["mean_sum_rmse_normalized"]),
                             repr(row["mean_sum_rmse_original"]),
                             row["repetitions"], str(row["single_repetition"]).lower()])
    if config.figures:
        from .figures import render_normalization_compare
        render_normalization_compare(rows, out_dir / "normcompare.png")
    return table_path, rows
