"""Command-line front end.

Four subcommands: ``compare`` (nested-model reclassification report as
JSON), ``simulate`` (Type-1-error table as CSV), ``plotdata`` (per-subject
base/expanded probability pairs as CSV), and ``spline`` (restricted cubic
spline expansion of a CSV column).

Exit codes are a stable contract: 0 success, 2 data errors, 3 fit
failures, 4 degenerate outcome.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, glm, inference, reclass, sim
from .errors import (
    DegenerateOutcome,
    FitError,
    MnriError,
    NoConvergence,
    TooFewDistinctValues,
)
from .glm import Dataset, link_from_name
from .reclass import TrainTestPair
from .spline import SplineBasis

EXIT_OK = 0
EXIT_DATA = 2
EXIT_FIT = 3
EXIT_DEGENERATE = 4


class DataError(MnriError):
    """Malformed or unusable input data (maps to exit code 2)."""


@dataclass(frozen=True)
class ColumnSpec:
    outcome: str
    base: tuple[str, ...]
    new: tuple[str, ...]
    spline: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        names = [self.outcome, *self.base, *self.new]
        if len(set(names)) != len(names):
            raise DataError("outcome, base, and new column names must be distinct")
        for col in self.spline:
            if col not in self.base and col not in self.new:
                raise DataError(f"spline column {col!r} is not among the base/new columns")

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "base": list(self.base),
            "new": list(self.new),
            "spline": dict(self.spline),
        }


@dataclass(frozen=True)
class CompareReport:
    """Serializable model-comparison report (JSON round-trippable).

    ``scale`` records how the reclassification statistics are displayed:
    "half" (the scale all tests operate on) or "classical" (doubled, for
    comparison with the conventional continuous-NRI convention). The
    doubling applies to nri/mnri, scaled_mad, and mad_cross_term; mad is
    a raw probability difference and sign_inner a raw inner product.
    """

    nri_hard: float
    nri_smooth: float
    mnri_hard: float
    mnri_smooth: float
    mad: float
    scaled_mad: float
    mad_cross_term: float
    sign_inner: float
    sign_norm: int
    ties: int
    scale: str
    mnri_test: dict
    nri_test_legacy: dict
    mode: str
    n: int
    n_events: int
    n_train: int | None
    link: str
    columns: dict
    version: str

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CompareReport":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CompareReport":
        return cls.from_dict(json.loads(text))


def _read_table(path: str) -> tuple[list[str], dict[str, list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            columns: dict[str, list[str]] = {name: [] for name in header}
            if len(columns) != len(header):
                raise DataError(f"{path}: duplicate column names in header")
            for line_no, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise DataError(f"{path}:{line_no}: expected {len(header)} fields")
                for name, value in zip(header, row):
                    columns[name].append(value)
        return header, columns
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _numeric_column(columns: dict[str, list[str]], name: str, path: str) -> np.ndarray:
    if name not in columns:
        raise DataError(f"{path}: missing column {name!r}")
    raw = columns[name]
    out = np.empty(len(raw))
    for i, value in enumerate(raw):
        text = value.strip()
        if text == "" or text.upper() in ("NA", "NAN", "NULL"):
            raise DataError(f"{path}: missing value in column {name!r} (row {i + 2})")
        try:
            out[i] = float(text)
        except ValueError:
            raise DataError(
                f"{path}: non-numeric value {value!r} in column {name!r} (row {i + 2})"
            ) from None
    if not np.all(np.isfinite(out)):
        raise DataError(f"{path}: non-finite value in column {name!r}")
    return out


def _outcome_column(columns, name, path) -> np.ndarray:
    y = _numeric_column(columns, name, path)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DataError(f"{path}: outcome column {name!r} must be coded 0/1")
    return y


def _fit_spline_bases(columns, spec: ColumnSpec, path: str) -> dict[str, SplineBasis]:
    bases = {}
    for col, k in spec.spline.items():
        bases[col] = SplineBasis.from_data(_numeric_column(columns, col, path), k)
    return bases


def _build_dataset(columns, spec: ColumnSpec, bases, path: str) -> Dataset:
    y = _outcome_column(columns, spec.outcome, path)

    def expand(names):
        blocks = []
        for name in names:
            values = _numeric_column(columns, name, path)
            if values.min() == values.max():
                raise DataError(f"{path}: column {name!r} is constant")
            if name in bases:
                blocks.append(bases[name].design(values))
            else:
                blocks.append(values[:, None])
        return np.hstack(blocks) if blocks else np.empty((y.shape[0], 0))

    x = np.hstack([np.ones((y.shape[0], 1)), expand(spec.base)])
    z = expand(spec.new)
    return Dataset(y=y, x=x, z=z)


def _spline_flag_pairs(values: list[str] | None) -> dict[str, int]:
    spline: dict[str, int] = {}
    for chunk in values or []:
        for item in chunk.split(","):
            item = item.strip()
            if not item:
                continue
            if "=" not in item:
                raise DataError(f"--spline expects COL=KNOTS, got {item!r}")
            col, _, count = item.partition("=")
            try:
                spline[col.strip()] = int(count)
            except ValueError:
                raise DataError(f"--spline knot count must be an integer, got {count!r}") from None
    return spline


def _column_spec(args) -> ColumnSpec:
    base = tuple(name.strip() for name in args.base.split(",") if name.strip())
    new = tuple(name.strip() for name in args.new.split(",") if name.strip()) if args.new else ()
    return ColumnSpec(
        outcome=args.outcome,
        base=base,
        new=new,
        spline=_spline_flag_pairs(getattr(args, "spline", None)),
    )


def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)


def cmd_compare(args) -> int:
    spec = _column_spec(args)
    if not spec.new:
        raise DataError("compare needs at least one --new column")
    link = link_from_name(args.link)
    header, columns = _read_table(args.input)
    bases = _fit_spline_bases(columns, spec, args.input)
    train_data = _build_dataset(columns, spec, bases, args.input)
    train_fits = glm.fit_nested(train_data, link)

    if args.test_file is not None:
        test_header, test_columns = _read_table(args.test_file)
        if test_header != header:
            raise DataError(f"{args.test_file}: header differs from {args.input}")
        # Spline knots come from the primary (training) data so both samples
        # share one covariate specification.
        test_data = _build_dataset(test_columns, spec, bases, args.test_file)
        test_fits = glm.fit_nested(test_data, link)
        pair = TrainTestPair(train_fits=train_fits, test_fits=test_fits)
        report_fits = test_fits
        mnri_result = inference.test_mnri_train_test(pair)
        legacy_result = inference.test_nri_normal_legacy(pair)
        mode = "train_test"
        n_train = train_data.n
        eval_data = test_data
    else:
        report_fits = train_fits
        mnri_result = inference.test_mnri_single(train_fits)
        legacy_result = inference.test_nri_normal_legacy(train_fits)
        mode = "single"
        n_train = None
        eval_data = train_data

    stats = reclass.build_report(report_fits)
    # Display scaling only; every test statistic stays on the half scale.
    display = 2.0 if args.classical_scale else 1.0
    report = CompareReport(
        nri_hard=display * stats.nri_hard,
        nri_smooth=display * stats.nri_smooth,
        mnri_hard=display * stats.mnri_hard,
        mnri_smooth=display * stats.mnri_smooth,
        mad=stats.mad,
        scaled_mad=display * stats.scaled_mad,
        mad_cross_term=display * stats.mad_cross_term,
        sign_inner=stats.sign_inner,
        sign_norm=stats.sign_norm,
        ties=stats.ties,
        scale="classical" if args.classical_scale else "half",
        mnri_test=mnri_result.to_dict(),
        nri_test_legacy=legacy_result.to_dict(),
        mode=mode,
        n=eval_data.n,
        n_events=int(eval_data.y.sum()),
        n_train=n_train,
        link=args.link,
        columns=spec.to_dict(),
        version=__version__,
    )
    _write_output(report.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_plotdata(args) -> int:
    spec = _column_spec(args)
    link = link_from_name(args.link)
    _, columns = _read_table(args.input)
    bases = _fit_spline_bases(columns, spec, args.input)
    data = _build_dataset(columns, spec, bases, args.input)
    fits = glm.fit_nested(data, link)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["id", "y", "prob_base", "prob_expanded"])
    for i in range(data.n):
        writer.writerow(
            [
                i + 1,
                int(data.y[i]),
                repr(float(fits.base.fitted_probs[i])),
                repr(float(fits.expanded.fitted_probs[i])),
            ]
        )
    _write_output(buffer.getvalue(), args.out)
    return EXIT_OK


def cmd_spline(args) -> int:
    header, columns = _read_table(args.input)
    values = _numeric_column(columns, args.column, args.input)
    basis = SplineBasis.from_data(values, args.knots)
    design = basis.design(values)

    buffer = io.StringIO()
    buffer.write("# knots: " + ",".join(repr(float(t)) for t in basis.knots) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    extra = [f"{args.column}_rcs{j + 1}" for j in range(basis.columns)]
    writer.writerow(header + extra)
    n = len(columns[header[0]])
    for i in range(n):
        row = [columns[name][i] for name in header]
        row += [repr(float(design[i, j])) for j in range(basis.columns)]
        writer.writerow(row)
    _write_output(buffer.getvalue(), args.out)
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise DataError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise DataError(f"expected a comma-separated list of integers, got {text!r}") from None


def cmd_simulate(args) -> int:
    ns = _int_list(args.n)
    pi0s = _float_list(args.pi0)
    mu_xs = _float_list(args.mu_x)
    rhos = _float_list(args.rho)
    if not (ns and pi0s and mu_xs and rhos):
        raise DataError("the simulation grid is empty")
    try:
        configs = [
            sim.SimConfig(
                n=n,
                pi0=pi0,
                mu_x=mu_x,
                rho=rho,
                replicates=args.reps,
                mode=args.mode,
                null_style=args.null_style,
                seed=args.seed,
                alpha=args.alpha,
            )
            for n in ns
            for pi0 in pi0s
            for mu_x in mu_xs
            for rho in rhos
        ]
    except ValueError as exc:
        raise DataError(f"invalid simulation grid: {exc}") from exc

    rows = sim.run_grid(configs, workers=args.workers)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        [
            "n", "pi0", "mu_x", "rho", "mode", "null_style", "replicates", "alpha",
            "seed", "mnri_rejection_rate", "nri_normal_rejection_rate",
            "mnri_mc_se", "nri_mc_se", "redraws",
        ]
    )
    for row in rows:
        cfg = row.config
        writer.writerow(
            [
                cfg.n, repr(cfg.pi0), repr(cfg.mu_x), repr(cfg.rho), cfg.mode,
                cfg.null_style, cfg.replicates, repr(cfg.alpha), cfg.seed,
                repr(row.rejection_rate_mnri), repr(row.rejection_rate_nri_normal),
                repr(row.mc_se_mnri), repr(row.mc_se_nri), row.redraws,
            ]
        )
    _write_output(buffer.getvalue(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mnri",
        description="Nested binary-response model comparison: NRI and modified NRI "
        "with valid asymptotic tests.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_flags(p):
        p.add_argument("input", help="CSV file with a header row; outcome coded 0/1")
        p.add_argument("--outcome", required=True, help="outcome column name")
        p.add_argument("--base", required=True, help="comma-separated base covariate columns")
        p.add_argument("--link", choices=["logit", "probit"], default="logit")
        p.add_argument("--out", default=None, help="output file (default stdout)")

    p_compare = sub.add_parser("compare", help="NRI/mNRI report for nested models")
    add_model_flags(p_compare)
    p_compare.add_argument("--new", required=True, help="comma-separated new covariate columns")
    p_compare.add_argument(
        "--spline", action="append", default=None, metavar="COL=K",
        help="expand a column with a restricted cubic spline (K knots); repeatable",
    )
    p_compare.add_argument(
        "--test-file", default=None,
        help="independent test-sample CSV (same header); switches to train/test mode",
    )
    p_compare.add_argument(
        "--classical-scale", action="store_true",
        help="display the reclassification statistics doubled (classical "
        "continuous-NRI convention); tests always use the half scale",
    )
    p_compare.set_defaults(func=cmd_compare)

    p_plot = sub.add_parser("plotdata", help="per-subject probability pairs for plotting")
    add_model_flags(p_plot)
    p_plot.add_argument("--new", default="", help="comma-separated new covariate columns")
    p_plot.add_argument("--spline", action="append", default=None, metavar="COL=K")
    p_plot.set_defaults(func=cmd_plotdata)

    p_spline = sub.add_parser("spline", help="append restricted cubic spline columns")
    p_spline.add_argument("input")
    p_spline.add_argument("--column", required=True, help="numeric column to expand")
    p_spline.add_argument("--knots", type=int, default=4, help="knot count (3-5, default 4)")
    p_spline.add_argument("--out", default=None)
    p_spline.set_defaults(func=cmd_spline)

    p_sim = sub.add_parser("simulate", help="Type-1-error table over a configuration grid")
    p_sim.add_argument("--n", required=True, help="comma-separated sample sizes")
    p_sim.add_argument("--pi0", required=True, help="comma-separated event probabilities")
    p_sim.add_argument("--mu-x", required=True, help="comma-separated class-1 means of X")
    p_sim.add_argument("--rho", required=True, help="comma-separated correlations")
    p_sim.add_argument("--reps", type=int, default=2000)
    p_sim.add_argument("--mode", choices=["single", "train_test"], default="single")
    p_sim.add_argument("--null-style", choices=["enforced", "literal"], default="enforced")
    p_sim.add_argument("--seed", type=int, default=sim.DEFAULT_SEED)
    p_sim.add_argument("--alpha", type=float, default=0.05)
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--out", default=None)
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, TooFewDistinctValues) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitError, NoConvergence) as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except DegenerateOutcome as exc:
        print(f"degenerate outcome: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
