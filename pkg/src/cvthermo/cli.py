"""Command-line front end: ``sweep``, ``validate`` and ``show-law``.

Exit codes: 0 success, 1 configuration error, 2 computation or validation
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import warnings
from dataclasses import dataclass, field, fields

from cvthermo import __version__, fock, gaussian, thermo, validation
from cvthermo.errors import ConfigError, ConvergenceError, RegimeWarning

log = logging.getLogger("cvthermo")

EXIT_OK, EXIT_CONFIG, EXIT_FAILURE = 0, 1, 2

CSV_COLUMNS = ["beta", "n_bar", "r", "lambda", "xi", "s_ther", "s_meas", "w_over_hw", "method"]
METHODS = ("exact", "closed_form", "low_t_approx", "invariant_form", "oracle")
CONVENTIONS = "hbar=1, vacuum variance 1/2, entropies in nats, work in units of hbar*omega_a"
ORACLE_MAX_N_BAR = 0.5
ORACLE_MAX_R = 1.5
SIG_DIGITS = 12


def fmt(x: float) -> str:
    """Fixed 12-significant-digit rendering used for every numeric output."""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    s = f"{x:.{SIG_DIGITS}g}"
    return "0" if s == "-0" else s


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {text!r}") from exc


@dataclass
class SweepConfig:
    beta_values: list[float]
    r_values: list[float]
    lambda_values: list[float] = field(default_factory=lambda: [1.0])
    methods: list[str] = field(default_factory=lambda: ["exact", "closed_form"])
    output_path: str = "-"
    format: str = "csv"

    def validate(self) -> None:
        for name in ("beta_values", "r_values", "lambda_values", "methods"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        for b in self.beta_values:
            if not (math.isfinite(b) and 0 < b <= thermo.MAX_BETA):
                raise ConfigError(f"beta must lie in (0, {thermo.MAX_BETA}], got {b}")
        for r in self.r_values:
            if not (math.isfinite(r) and r >= 0):
                raise ConfigError(f"r must be finite and non-negative, got {r}")
        for lam in self.lambda_values:
            if not (math.isfinite(lam) and lam > 0):
                raise ConfigError(f"lambda must be positive, got {lam}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ConfigError(f"unknown methods {sorted(unknown)}; choose from {', '.join(METHODS)}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if any(m != "exact" for m in self.methods) and any(lam != 1.0 for lam in self.lambda_values):
            raise ConfigError("only the exact method accepts lambda != 1")
        if "oracle" in self.methods:
            for b in self.beta_values:
                if thermo.occupation(b) > ORACLE_MAX_N_BAR:
                    raise ConfigError(f"oracle needs n_bar <= {ORACLE_MAX_N_BAR}; beta={b} is too hot")
            for r in self.r_values:
                if r > ORACLE_MAX_R:
                    raise ConfigError(f"oracle needs r <= {ORACLE_MAX_R}, got r={r}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.beta_values = [float(v) for v in cfg.beta_values]
        cfg.r_values = [float(v) for v in cfg.r_values]
        cfg.lambda_values = [float(v) for v in cfg.lambda_values]
        cfg.methods = [str(m) for m in cfg.methods]
        return cfg


def _row(ctx, r, lam, res, method):
    return {
        "beta": ctx.beta_a,
        "n_bar": ctx.n_bar,
        "r": r,
        "lambda": lam,
        "xi": thermo.xi(r),
        "s_ther": res.s_ther if res else math.nan,
        "s_meas": res.s_meas if res else math.nan,
        "w_over_hw": res.w_over_hw if res else math.nan,
        "method": method if res else f"{method}:failed",
    }


def _compute(method: str, ctx: thermo.ThermalContext, r: float, lam: float):
    if method == "exact":
        return thermo.extracted_work_exact(ctx, r, gaussian.GaussianMeasurement(lam))
    if method == "closed_form":
        return thermo.extracted_work_closed_form(ctx, r)
    if method == "low_t_approx":
        return thermo.extracted_work_low_t(ctx, r)
    if method == "invariant_form":
        return thermo.extracted_work_invariant_form(gaussian.build_tms_thermal(ctx.n_bar, r), ctx)
    return fock.oracle_work(ctx.n_bar, r)


def sweep_rows(cfg: SweepConfig) -> tuple[list[dict], list[str]]:
    """All rows in input order (beta, r, lambda, method), plus failure notes."""
    rows, failures = [], []
    regime_notes = set()
    for beta in cfg.beta_values:
        ctx = thermo.ThermalContext(beta)
        for r in cfg.r_values:
            for lam in cfg.lambda_values:
                for method in cfg.methods:
                    with warnings.catch_warnings(record=True) as caught:
                        warnings.simplefilter("always", RegimeWarning)
                        try:
                            res = _compute(method, ctx, r, lam)
                        except ConvergenceError as exc:
                            res = None
                            failures.append(f"{method} at beta={fmt(beta)}, r={fmt(r)}: {exc}")
                    regime_notes.update(str(w.message) for w in caught)
                    rows.append(_row(ctx, r, lam, res, method))
    for note in sorted(regime_notes):
        log.warning("regime: %s", note)
    return rows, failures


def render(rows: list[dict], cfg: SweepConfig) -> str:
    if cfg.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([row[c] if c == "method" else fmt(row[c]) for c in CSV_COLUMNS])
        return buf.getvalue()
    counterfactual = sorted({lam for lam in cfg.lambda_values if lam != 1.0})
    doc = {
        "metadata": {
            "tool": "cvthermo",
            "version": __version__,
            "conventions": CONVENTIONS,
            "columns": CSV_COLUMNS,
            "counterfactual_apparatus_lambdas": counterfactual,
            "config": cfg.to_dict(),
        },
        "rows": [
            {c: row[c] if c == "method" else _json_num(row[c]) for c in CSV_COLUMNS} for row in rows
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def _json_num(x: float):
    s = fmt(x)
    return None if s == "nan" else float(s)


def _write(text: str, path: str) -> None:
    if path in ("-", ""):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def resolve_sweep_config(args: argparse.Namespace) -> SweepConfig:
    data: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    overrides = {
        "beta_values": _float_list(args.beta) if args.beta else None,
        "r_values": _float_list(args.r) if args.r else None,
        "lambda_values": _float_list(args.lam) if args.lam else None,
        "methods": [m.strip() for m in args.methods.split(",") if m.strip()] if args.methods else None,
        "output_path": args.out,
        "format": args.format,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    for required in ("beta_values", "r_values"):
        if required not in data:
            raise ConfigError(f"missing {required} (use --{'beta' if required == 'beta_values' else 'r'} or --config)")
    cfg = SweepConfig.from_dict(data)
    cfg.validate()
    return cfg


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = resolve_sweep_config(args)
    if args.echo_config:
        sys.stdout.write(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    if any(lam != 1.0 for lam in cfg.lambda_values):
        log.warning("lambda != 1 rows describe a counterfactual apparatus, not environmental monitoring")
    rows, failures = sweep_rows(cfg)
    _write(render(rows, cfg), cfg.output_path)
    if failures:
        for f in failures:
            log.error("failed row: %s", f)
        log.error("%d row(s) failed", len(failures))
        return EXIT_FAILURE
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    results = validation.run_all(args.grid)
    for res in results:
        print(res.line())
    summary = {
        "grid": args.grid,
        "passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
    }
    text = json.dumps(summary, indent=2)
    print(text)
    if args.out:
        _write(text + "\n", args.out)
    return EXIT_OK if summary["passed"] else EXIT_FAILURE


CLOSED_FORM_BAND = 0.02


def law_table(beta: float, r_max: float, steps: int) -> list[dict]:
    ctx = thermo.ThermalContext(beta)
    rows = []
    for i in range(steps):
        r = r_max * i / (steps - 1) if steps > 1 else r_max
        x = thermo.xi(r)
        w = thermo.extracted_work_exact(ctx, r).w_over_hw / ctx.n_bar
        en = gaussian.log_negativity(gaussian.build_tms_thermal(ctx.n_bar, r))
        ratio = w / x if x > 0 else math.nan
        rows.append({"r": r, "xi": x, "E_N": en, "w_over_nhw": w, "ratio": ratio,
                     "in_band": math.isnan(ratio) or abs(ratio - 1) <= CLOSED_FORM_BAND})
    return rows


def cmd_show_law(args: argparse.Namespace) -> int:
    if not args.beta >= 10 or args.beta > thermo.MAX_BETA:
        raise ConfigError(f"show-law needs 10 <= beta <= {thermo.MAX_BETA}")
    if args.steps < 1 or not args.r_max >= 0:
        raise ConfigError("steps must be >= 1 and r_max >= 0")
    rows = law_table(args.beta, args.r_max, args.steps)
    ctx = thermo.ThermalContext(args.beta)
    print(f"# beta_a = {fmt(args.beta)}, n_bar = {fmt(ctx.n_bar)}; W/(n_bar hbar omega_a) vs xi(r)")
    print(f"# band: |ratio - 1| <= {CLOSED_FORM_BAND}")
    header = ["r", "xi", "E_N", "W/(n hw)", "ratio", "band"]
    print("".join(f"{h:>16}" for h in header))
    for row in rows:
        ratio = "-" if math.isnan(row["ratio"]) else fmt(row["ratio"])
        cells = [fmt(row["r"]), fmt(row["xi"]), fmt(row["E_N"]), fmt(row["w_over_nhw"]), ratio,
                 "ok" if row["in_band"] else "out"]
        print("".join(f"{c:>16}" for c in cells))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvthermo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cvthermo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="tabulate extracted work over (beta, r, lambda, method)")
    sw.add_argument("--config", help="JSON file with SweepConfig fields; flags override it")
    sw.add_argument("--beta", help="comma-separated beta_a = hbar omega_a / k_B T values")
    sw.add_argument("--r", help="comma-separated two-mode squeezing values")
    sw.add_argument("--lambda", dest="lam", help="comma-separated measurement strengths (default 1)")
    sw.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    sw.add_argument("--out", help="output file ('-' for stdout)")
    sw.add_argument("--format", choices=["csv", "json"])
    sw.add_argument("--echo-config", action="store_true", help="print the resolved config as JSON and exit")
    sw.set_defaults(func=cmd_sweep)

    va = sub.add_parser("validate", help="run the cross-validation suite")
    va.add_argument("--grid", choices=["small", "full"], default="full")
    va.add_argument("--out", help="also write the JSON summary here")
    va.set_defaults(func=cmd_validate)

    law = sub.add_parser("show-law", help="print xi(r) next to the normalized exact work")
    law.add_argument("--beta", type=float, default=100.0)
    law.add_argument("--r-max", type=float, default=3.0)
    law.add_argument("--steps", type=int, default=7)
    law.set_defaults(func=cmd_show_law)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(levelname)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
