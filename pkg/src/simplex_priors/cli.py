"""Command-line front-end: fit, posterior, eb, sample, and curve.

All reports are JSON with a versioned ``"schema": "simplex-priors/1"`` key;
sample draws are written as CSV with 17 significant digits. Errors print a
single machine-readable line ``error: <code>: <message>`` on stderr and map
to exit codes 2 (usage), 3 (data), 4 (numerical failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CountVector,
    DirichletParams,
    NumericalError,
    PolynomialWeight,
    SimplexPoint,
    SimplexPriorsError,
    WeightedDirichletModel,
    weighted_log_density,
)
from .empirical_bayes import eb_estimate
from .mle import (
    FrequencySample,
    SigmaEstimate,
    dirichlet_log_likelihood,
    dirichlet_mle,
    selection_log_likelihood,
    selection_log_likelihood_limit,
    selection_mle_joint,
    sigma_mle,
    sigma_score,
)
from .posterior import posterior_summary
from .sampler import ChainConfig, gibbs_chain, rejection_sample, summarize_chain

SCHEMA = "simplex-priors/1"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class DataError(SimplexPriorsError):
    """Input file missing, unparseable, or violating a data invariant."""


class UsageError(SimplexPriorsError):
    """Flags are inconsistent with the requested command."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Parsed input: either frequency rows or a single count vector."""

    kind: str
    source_path: str
    m: int
    frequencies: FrequencySample | None = None
    counts: CountVector | None = None

    def __post_init__(self):
        if self.kind not in ("frequencies", "counts"):
            raise ValueError("kind must be 'frequencies' or 'counts'")
        populated = (self.frequencies is not None) + (self.counts is not None)
        if populated != 1:
            raise ValueError("exactly one of frequencies/counts must be populated")
        if self.kind == "frequencies" and self.frequencies is None:
            raise ValueError("kind 'frequencies' requires frequency rows")
        if self.kind == "counts" and self.counts is None:
            raise ValueError("kind 'counts' requires a count vector")


@dataclass(frozen=True, eq=False)
class FitReport:
    """Result of a model fit, mirroring the JSON report schema."""

    model_kind: str
    alpha: np.ndarray
    log_likelihood: float
    n_observations: int
    sigma: SigmaEstimate | None = None
    r: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return self.sigma is not None and self.sigma.is_infinite

    def to_json_dict(self) -> dict:
        sigma: dict | None = None
        if self.sigma is not None:
            sigma = {"kind": self.sigma.kind}
            if not self.sigma.is_infinite:
                sigma["value"] = self.sigma.value
        return {
            "schema": SCHEMA,
            "model_kind": self.model_kind,
            "alpha": [float(a) for a in self.alpha],
            "sigma": sigma,
            "r": None if self.r is None else [int(v) for v in self.r],
            "log_likelihood": float(self.log_likelihood),
            "n_observations": int(self.n_observations),
            "diagnostics": {k: float(v) for k, v in sorted(self.diagnostics.items())},
            "degenerate": self.degenerate,
        }


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------


def _looks_numeric(fields: list[str]) -> bool:
    try:
        for item in fields:
            float(item)
    except ValueError:
        return False
    return True


def _read_rows(path: str) -> list[tuple[int, list[str]]]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped:
            rows.append((lineno, [f.strip() for f in stripped.split(",")]))
    if not rows:
        raise DataError(f"{path} contains no data rows")
    if not _looks_numeric(rows[0][1]):
        rows = rows[1:]  # optional header
        if not rows:
            raise DataError(f"{path} contains a header but no data rows")
    return rows


def ingest(path: str, kind: str) -> Dataset:
    """Parse and validate an input CSV as frequencies or counts."""
    if kind == "frequencies":
        rows = _read_rows(path)
        m = len(rows[0][1])
        matrix = np.empty((len(rows), m))
        for row_index, (lineno, fields) in enumerate(rows):
            if len(fields) != m:
                raise DataError(f"row {lineno}: expected {m} fields, found {len(fields)}")
            try:
                values = np.array([float(f) for f in fields])
            except ValueError as exc:
                raise DataError(f"row {lineno}: {exc}") from exc
            if np.any(values < 0.0):
                raise DataError(f"row {lineno}: negative entry")
            total = values.sum()
            if abs(total - 1.0) > 1e-9:
                raise DataError(f"row {lineno}: frequencies sum to {total:.12g}, not 1")
            if np.any(values <= 0.0):
                raise DataError(f"row {lineno}: boundary frequency (zero entry) rejected")
            matrix[row_index] = values
        try:
            sample = FrequencySample(matrix)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
        return Dataset(kind="frequencies", source_path=path, m=m, frequencies=sample)
    if kind == "counts":
        rows = _read_rows(path)
        if len(rows) != 1:
            raise DataError(f"counts file must hold a single row, found {len(rows)}")
        lineno, fields = rows[0]
        try:
            values = [int(f) for f in fields]
        except ValueError as exc:
            raise DataError(f"row {lineno}: counts must be integers ({exc})") from exc
        try:
            counts = CountVector(np.array(values))
        except ValueError as exc:
            raise DataError(f"row {lineno}: {exc}") from exc
        return Dataset(kind="counts", source_path=path, m=counts.m, counts=counts)
    raise ValueError(f"unknown dataset kind {kind!r}")


# ---------------------------------------------------------------------------
# Argument parsing helpers
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # single-line machine-readable usage errors
        raise UsageError(message)


def _parse_vector(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(f) for f in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"--{name} must be comma-separated numbers: {exc}") from exc


def _parse_int_vector(text: str, name: str) -> np.ndarray:
    try:
        return np.array([int(f) for f in text.split(",")], dtype=np.int64)
    except ValueError as exc:
        raise UsageError(f"--{name} must be comma-separated integers: {exc}") from exc


def _parse_sigma(text: str, allow_inf: bool = False) -> float:
    if text.strip().lower() == "inf":
        if allow_inf:
            return float("inf")
        raise UsageError("--sigma inf is only accepted where the limiting model is defined")
    try:
        value = float(text)
    except ValueError as exc:
        raise UsageError(f"--sigma must be a number or 'inf': {exc}") from exc
    if value < -1.0:
        raise UsageError("--sigma must be >= -1")
    return value


def _parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError("--grid must be MIN:MAX:STEP")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"--grid must be numeric MIN:MAX:STEP: {exc}") from exc
    if lo < -1.0:
        raise UsageError("--grid minimum must be >= -1")
    if step <= 0.0 or hi < lo:
        raise UsageError("--grid needs MAX >= MIN and STEP > 0")
    count = int(np.floor((hi - lo) / step + 1e-12)) + 1
    return lo + step * np.arange(count)


def _build_weight(m: int, sigma: float | None, r: np.ndarray | None) -> PolynomialWeight:
    if sigma is not None and r is not None:
        raise UsageError("--sigma and --r are mutually exclusive weight specifications")
    if r is not None:
        if r.size != m:
            raise UsageError(f"--r must have {m} entries")
        return PolynomialWeight.monomial_sum(r)
    if sigma is not None:
        return PolynomialWeight.homozygosity_selection(m, sigma)
    return PolynomialWeight.constant(m)


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


def _emit_json(path: str | None, payload: dict) -> None:
    _write_text(path, json.dumps(payload, indent=2, sort_keys=False))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_fit(args) -> int:
    dataset = ingest(args.input, "frequencies")
    sample = dataset.frequencies
    if sample.n < 2:
        raise DataError("fitting needs at least 2 observations")
    diagnostics: dict = {}
    alpha_fixed = None if args.alpha is None else _parse_vector(args.alpha, "alpha")
    if alpha_fixed is not None and alpha_fixed.size != dataset.m:
        raise UsageError(f"--alpha must have {dataset.m} entries")

    if args.model == "dirichlet":
        if alpha_fixed is not None:
            raise UsageError("--alpha has nothing to fix for --model dirichlet")
        params = dirichlet_mle(sample, tol=args.tol, max_iter=args.max_iter, diagnostics=diagnostics)
        loglik = dirichlet_log_likelihood(sample, params)
        report = FitReport("dirichlet", params.alpha, loglik, sample.n, diagnostics=diagnostics)
    elif args.model == "selection":
        fixed_sigma = None if args.sigma is None else _parse_sigma(args.sigma)
        if alpha_fixed is not None:
            params = DirichletParams(alpha_fixed)
            sigma = (
                sigma_mle(sample, params)
                if fixed_sigma is None
                else SigmaEstimate.interior(fixed_sigma)
                if fixed_sigma > -1.0
                else SigmaEstimate.lower_boundary()
            )
            diagnostics["alpha_fixed"] = 1.0
        else:
            params, sigma = selection_mle_joint(
                sample, tol=args.tol, max_iter=args.max_iter,
                fixed_sigma=fixed_sigma, diagnostics=diagnostics,
            )
        if sigma.is_infinite:
            loglik = selection_log_likelihood_limit(sample, params)
        else:
            loglik = selection_log_likelihood(sample, params, sigma.value)
            diagnostics["sigma_score"] = sigma_score(sample, params, sigma.value)
        report = FitReport("selection", params.alpha, loglik, sample.n, sigma=sigma, diagnostics=diagnostics)
    elif args.model == "mixture":
        if args.r is None:
            raise UsageError("--model mixture requires --r")
        r = _parse_int_vector(args.r, "r")
        if r.size != dataset.m:
            raise UsageError(f"--r must have {dataset.m} entries")
        params = dirichlet_mle(sample, tol=args.tol, max_iter=args.max_iter, diagnostics=diagnostics)
        model = WeightedDirichletModel(params, PolynomialWeight.monomial_sum(r))
        loglik = float(
            sum(weighted_log_density(model, SimplexPoint(row)) for row in sample.matrix)
        )
        report = FitReport("mixture", params.alpha, loglik, sample.n, r=r, diagnostics=diagnostics)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown model {args.model!r}")
    _emit_json(args.output, report.to_json_dict())
    return EXIT_OK


def cmd_posterior(args) -> int:
    counts = CountVector(_parse_int_vector(args.counts, "counts"))
    alpha = _parse_vector(args.alpha, "alpha")
    if alpha.size != counts.m:
        raise UsageError("--alpha and --counts must have the same length")
    sigma = None if args.sigma is None else _parse_sigma(args.sigma)
    r = None if args.r is None else _parse_int_vector(args.r, "r")
    try:
        model = WeightedDirichletModel(
            DirichletParams(alpha), _build_weight(counts.m, sigma, r)
        )
        summary = posterior_summary(model, counts)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit_json(
        args.output,
        {
            "schema": SCHEMA,
            "mean": [float(v) for v in summary.mean],
            "covariance": [[float(v) for v in row] for row in summary.covariance],
            "log_normalizer": float(summary.log_normalizer),
        },
    )
    return EXIT_OK


def cmd_eb(args) -> int:
    counts = CountVector(_parse_int_vector(args.counts, "counts"))
    sigma = _parse_sigma(args.sigma)
    if counts.m != 2 and not args.full_alpha:
        raise UsageError("eb with m > 2 requires --full-alpha")
    result = eb_estimate(counts, sigma, full_alpha=args.full_alpha)
    theta: dict = {"kind": result.fit.kind}
    if result.fit.kind == "interior":
        theta["value"] = float(result.fit.theta)
    _emit_json(
        args.output,
        {
            "schema": SCHEMA,
            "theta": theta,
            "log_marginal": float(result.fit.log_marginal),
            "estimate": [float(v) for v in result.estimate],
            "degenerate": bool(result.degenerate),
        },
    )
    return EXIT_OK


def cmd_sample(args) -> int:
    alpha = _parse_vector(args.alpha, "alpha")
    sigma = _parse_sigma(args.sigma) if args.sigma is not None else 0.0
    try:
        model = WeightedDirichletModel(
            DirichletParams(alpha),
            PolynomialWeight.homozygosity_selection(alpha.size, sigma),
        )
        config = ChainConfig(
            iterations=args.iterations, seed=args.seed, burn_in=args.burn_in, thin=args.thin
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    summary_extras: dict = {}
    if args.method == "gibbs":
        draws, summary = gibbs_chain(model, config)
        summary_extras["slice_restarts"] = summary.slice_restarts
    else:
        result = rejection_sample(model, config.retained, seed=config.seed)
        draws = result.draws
        summary = summarize_chain(draws)
        summary_extras["acceptance_rate"] = result.acceptance_rate
    header = ",".join(f"p{i + 1}" for i in range(model.m))
    body = "\n".join(",".join(f"{v:.17g}" for v in row) for row in draws)
    _write_text(args.output, header + "\n" + body + "\n")
    payload = {
        "schema": SCHEMA,
        "method": args.method,
        "seed": int(args.seed),
        "retained": int(summary.retained),
        "mean": [float(v) for v in summary.mean],
        "variance": [float(v) for v in summary.variance],
        "lag1_autocorrelation": [float(v) for v in summary.lag1_autocorrelation],
        **summary_extras,
    }
    _emit_json(args.summary_output, payload)
    return EXIT_OK


def cmd_curve(args) -> int:
    dataset = ingest(args.input, "frequencies")
    sample = dataset.frequencies
    alpha = _parse_vector(args.alpha, "alpha")
    if alpha.size != dataset.m:
        raise UsageError(f"--alpha must have {dataset.m} entries")
    params = DirichletParams(alpha)
    grid = _parse_grid(args.grid)
    lines = ["sigma,log_likelihood,score"]
    for sigma in grid:
        loglik = selection_log_likelihood(sample, params, float(sigma))
        score = sigma_score(sample, params, float(sigma))
        lines.append(f"{sigma:.17g},{loglik:.17g},{score:.17g}")
    # sentinel: the sigma -> +inf limit (score tends to 0 there)
    limit = selection_log_likelihood_limit(sample, params)
    lines.append(f"inf,{limit:.17g},0")
    _write_text(args.output, "\n".join(lines) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="simplex-priors", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a model to frequency data")
    fit.add_argument("--input", required=True, help="frequency CSV path")
    fit.add_argument("--model", required=True, choices=["dirichlet", "selection", "mixture"])
    fit.add_argument("--alpha", help="fix alpha (selection: fit sigma only)")
    fit.add_argument("--sigma", help="fix sigma (selection only)")
    fit.add_argument("--r", help="mixture exponents r1,...,rm")
    fit.add_argument("--tol", type=float, default=1e-8)
    fit.add_argument("--max-iter", type=int, default=200)
    fit.add_argument("--output", help="report JSON path (default stdout)")
    fit.set_defaults(handler=cmd_fit)

    post = sub.add_parser("posterior", help="posterior summary for counts")
    post.add_argument("--counts", required=True, help="counts n1,...,nm")
    post.add_argument("--alpha", required=True, help="prior concentration a1,...,am")
    post.add_argument("--sigma", help="selection weight 1 + sigma*H")
    post.add_argument("--r", help="mixture weight exponents")
    post.add_argument("--output", help="report JSON path (default stdout)")
    post.set_defaults(handler=cmd_posterior)

    eb = sub.add_parser("eb", help="empirical Bayes estimate from counts")
    eb.add_argument("--counts", required=True, help="counts n1,...,nm")
    eb.add_argument("--sigma", required=True, help="selection parameter (>= -1)")
    eb.add_argument("--full-alpha", action="store_true", help="fit all of alpha, not just theta")
    eb.add_argument("--output", help="report JSON path (default stdout)")
    eb.set_defaults(handler=cmd_eb)

    samp = sub.add_parser("sample", help="draw from a selection model")
    samp.add_argument("--alpha", required=True, help="concentration a1,...,am")
    samp.add_argument("--sigma", help="selection parameter (default 0)")
    samp.add_argument("--method", default="gibbs", choices=["gibbs", "rejection"])
    samp.add_argument("--seed", type=int, required=True)
    samp.add_argument("--iterations", type=int, required=True)
    samp.add_argument("--burn-in", type=int, default=None)
    samp.add_argument("--thin", type=int, default=1)
    samp.add_argument("--output", help="draws CSV path (default stdout)")
    samp.add_argument("--summary-output", help="summary JSON path (default stdout)")
    samp.set_defaults(handler=cmd_sample)

    curve = sub.add_parser("curve", help="sigma log-likelihood/score curve")
    curve.add_argument("--input", required=True, help="frequency CSV path")
    curve.add_argument("--alpha", required=True, help="concentration a1,...,am")
    curve.add_argument("--grid", required=True, help="MIN:MAX:STEP over sigma")
    curve.add_argument("--output", help="curve CSV path (default stdout)")
    curve.set_defaults(handler=cmd_curve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError) as exc:
        print(f"error: numeric: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
