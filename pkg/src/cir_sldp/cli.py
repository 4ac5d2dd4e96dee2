"""Command-line front end.

Subcommands: simulate, mle, rate, cgf, tail-approx, mc-tail, verify.
Configuration comes from flags plus an optional flat JSON config file; flags
override the file.  Grids use inclusive ``start:stop:step`` syntax.  Exit
codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import __version__
from .cgf import OutOfDomainError, decompose_cgf, riccati_oracle, tilt_domain_interval
from .core import ModelParams, mle_drift
from .montecarlo import Method, compare_report, default_n_steps, sample_tail_stats
from .rate_saddle import SaddleBracketError, rate_function, rate_oracle
from .simulate import RngStream, Scheme, exact_transition, simulate_path
from .sldp import RegimeError, exact_tail_at_zero, tail_approx

_SCHEMES = {"exact": Scheme.EXACT_GRID, "euler": Scheme.FULL_TRUNCATION_EULER}
_METHODS = {"naive": Method.NAIVE, "is": Method.DRIFT_IS}


class ValidationError(ValueError):
    pass


def parse_grid(text: str) -> list[float]:
    """Inclusive-of-start ``start:stop:step`` grid; stop included when hit."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"grid must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ValidationError(f"non-numeric grid component in {text!r}") from exc
    if step == 0 or (stop - start) * step < 0:
        raise ValidationError(f"grid step does not reach stop: {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(n)]


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError as exc:
        raise ValidationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {path} line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError(f"config file {path} must hold a flat JSON object")
    return cfg


def _merge(args: argparse.Namespace, cfg: dict, key: str, default=None):
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    if key in cfg:
        return cfg[key]
    return default


def _params(args, cfg) -> ModelParams:
    delta = _merge(args, cfg, "delta", 1.0)
    b = _merge(args, cfg, "b", 1.0)
    T = _merge(args, cfg, "T", 10.0)
    try:
        return ModelParams(delta=float(delta), b=float(b), horizon=float(T))
    except ValueError as exc:
        raise ValidationError(f"invalid model parameters: {exc}") from exc


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _header_lines(args, cfg) -> str:
    if _merge(args, cfg, "no-timestamp", False):
        return ""
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return f"# generated {stamp} cir-sldp {__version__}\n"


def cmd_simulate(args, cfg) -> int:
    params = _params(args, cfg)
    n_paths = int(_merge(args, cfg, "n-paths", 1))
    n_steps = int(_merge(args, cfg, "n-steps", default_n_steps(params.horizon)))
    seed = int(_merge(args, cfg, "seed", 0))
    scheme = _SCHEMES[_merge(args, cfg, "scheme", "exact")]
    out = _merge(args, cfg, "out")
    header = _header_lines(args, cfg)
    for i in range(n_paths):
        path = simulate_path(params, n_steps, scheme=scheme, rng=RngStream(seed=seed, stream_id=i))
        rows = "t,x\n" + "".join(f"{float(t)!r},{float(x)!r}\n" for t, x in zip(path.times, path.values))
        if n_paths == 1:
            _emit(header + rows, out)
        else:
            target = None if out is None else _numbered(out, i)
            _emit(header + rows, target)
    return 0


def _numbered(out: str, i: int) -> str:
    if "." in out:
        stem, ext = out.rsplit(".", 1)
        return f"{stem}_{i:03d}.{ext}"
    return f"{out}_{i:03d}"


def cmd_mle(args, cfg) -> int:
    params = _params(args, cfg)
    n_paths = int(_merge(args, cfg, "n-paths", 100))
    n_steps = int(_merge(args, cfg, "n-steps", default_n_steps(params.horizon)))
    seed = int(_merge(args, cfg, "seed", 0))
    scheme = _SCHEMES[_merge(args, cfg, "scheme", "exact")]
    lines = ["path,x_T,int_x,mle\n"]
    for i in range(n_paths):
        path = simulate_path(params, n_steps, scheme=scheme, rng=RngStream(seed=seed, stream_id=i))
        est = mle_drift(path.stats, params)
        lines.append(f"{i},{path.stats.x_T!r},{path.stats.int_x!r},{float(est)!r}\n")
    _emit(_header_lines(args, cfg) + "".join(lines), _merge(args, cfg, "out"))
    return 0


def cmd_rate(args, cfg) -> int:
    params = _params(args, cfg)
    d_grid = _grid_or_single(args, cfg, "d-grid", "d", default=[-4.0 + 0.1 * k for k in range(81)])
    lines = ["d,rate,a_d,boundary\n"]
    for d in d_grid:
        rp = rate_function(d, params)
        lines.append(f"{d!r},{rp.rate!r},{rp.a_d!r},{int(rp.boundary)}\n")
    _emit(_header_lines(args, cfg) + "".join(lines), _merge(args, cfg, "out"))
    plot = _merge(args, cfg, "plot")
    if plot:
        from .plotting import save_rate_figure

        save_rate_figure(plot, d_grid, [rate_function(d, params).rate for d in d_grid], params.b)
    return 0


def _grid_or_single(args, cfg, grid_key: str, single_key: str, default=None) -> list[float]:
    grid = _merge(args, cfg, grid_key)
    if grid is not None:
        return parse_grid(grid) if isinstance(grid, str) else [float(g) for g in grid]
    single = _merge(args, cfg, single_key)
    if single is not None:
        return [float(single)]
    if default is None:
        raise ValidationError(f"one of --{single_key} or --{grid_key} is required")
    return default


def cmd_cgf(args, cfg) -> int:
    params = _params(args, cfg)
    d = float(_merge(args, cfg, "d", 2.0))
    lam_grid = _merge(args, cfg, "lambda-grid")
    if lam_grid is not None:
        lams = parse_grid(lam_grid) if isinstance(lam_grid, str) else [float(x) for x in lam_grid]
    else:
        lo, hi = tilt_domain_interval(d, params)
        if not math.isfinite(lo):
            lo = hi - 2.0
        span = hi - lo
        if span <= 0:
            raise ValidationError(f"empty tilt domain at d={d}")
        lams = [lo + f * span for f in np.linspace(0.05, 0.95, 19)]
    lines = ["lambda,L,H,R,total\n"]
    for lam in lams:
        dec = decompose_cgf(lam, d, params)
        lines.append(f"{lam!r},{dec.L_val!r},{dec.H_val!r},{dec.R_val!r},{dec.total!r}\n")
    _emit(_header_lines(args, cfg) + "".join(lines), _merge(args, cfg, "out"))
    plot = _merge(args, cfg, "plot")
    if plot:
        from .plotting import save_cgf_figure

        save_cgf_figure(plot, lams, [decompose_cgf(lam, d, params).total for lam in lams])
    return 0


def cmd_tail_approx(args, cfg) -> int:
    params = _params(args, cfg)
    order = int(_merge(args, cfg, "order", 0))
    d_grid = _grid_or_single(args, cfg, "d-grid", "d")
    T_grid = _grid_or_single(args, cfg, "T-grid", "T", default=[params.horizon])
    lines = ["regime,d,T,order,log_value,value,valid\n"]
    rows = []
    for d in d_grid:
        for T in T_grid:
            ap = tail_approx(d, T, params, order_p=order)
            bracket = 1.0 + sum(ap.correction_terms)
            logv = float(ap.log_leading) + (math.log(bracket) if bracket > 0 else -math.inf)
            rows.append((d, T, logv))
            lines.append(
                f"{ap.regime.value},{d!r},{T!r},{order},{logv!r},{ap.value!r},{int(ap.valid)}\n"
            )
    _emit(_header_lines(args, cfg) + "".join(lines), _merge(args, cfg, "out"))
    plot = _merge(args, cfg, "plot")
    if plot:
        from .plotting import save_tail_figure

        if len(T_grid) > 1 and len(d_grid) == 1:
            save_tail_figure(plot, T_grid, [r[2] for r in rows], "horizon T")
        else:
            save_tail_figure(plot, [r[0] for r in rows], [r[2] for r in rows], "threshold d")
    return 0


def cmd_mc_tail(args, cfg) -> int:
    params = _params(args, cfg)
    d = float(_merge(args, cfg, "d", 2.0))
    n_paths = int(_merge(args, cfg, "n-paths", 10000))
    seed = int(_merge(args, cfg, "seed", 0))
    order = int(_merge(args, cfg, "order", 0))
    method = _METHODS[_merge(args, cfg, "method", "is")]
    scheme = _SCHEMES[_merge(args, cfg, "scheme", "exact")]
    fmt = _merge(args, cfg, "format", "json")
    T_grid = _merge(args, cfg, "T-grid")
    out = _merge(args, cfg, "out")
    if T_grid is not None:
        Ts = parse_grid(T_grid) if isinstance(T_grid, str) else [float(t) for t in T_grid]
        reports = []
        for T in Ts:
            n_steps = int(_merge(args, cfg, "n-steps", default_n_steps(T)))
            reports.append(
                compare_report(d, T, params, n_paths, n_steps=n_steps, method=method,
                               seed=seed, scheme=scheme, order_p=order)
            )
        if fmt == "json":
            _emit(json.dumps([r.to_dict() for r in reports], indent=2) + "\n", out)
        else:
            lines = ["d,T,approx,exact,mc_mean,mc_stderr,n_hits,ratio\n"]
            for r in reports:
                lines.append(
                    f"{r.d!r},{r.T!r},{r.approx.value!r},"
                    f"{'' if r.exact is None else repr(r.exact)},"
                    f"{r.mc.mean!r},{r.mc.stderr!r},{r.mc.n_hits},{r.ratio_mc_over_approx!r}\n"
                )
            _emit(_header_lines(args, cfg) + "".join(lines), out)
        plot = _merge(args, cfg, "plot")
        if plot:
            from .plotting import save_mc_figure

            save_mc_figure(
                plot,
                [r.T for r in reports],
                [r.ratio_mc_over_approx for r in reports],
                [r.mc.relative_error if math.isfinite(r.mc.relative_error) else 0.0 for r in reports],
            )
        return 0
    T = params.horizon
    n_steps = int(_merge(args, cfg, "n-steps", default_n_steps(T)))
    report = compare_report(d, T, params, n_paths, n_steps=n_steps, method=method,
                            seed=seed, scheme=scheme, order_p=order)
    payload = report.to_dict()
    if not _merge(args, cfg, "no-timestamp", False):
        payload["generated"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    _emit(json.dumps(payload, indent=2) + "\n", out)
    return 0


def cmd_verify(args, cfg) -> int:
    """Full oracle suite; prints one pass/fail line per check."""
    seed = int(_merge(args, cfg, "seed", 0))
    checks: list[tuple[str, bool, str]] = []

    # closed-form CGF against the Riccati integrator
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(8):
        params = ModelParams(delta=rng.uniform(0.3, 3.0), b=rng.uniform(0.2, 2.0),
                             horizon=rng.uniform(2.0, 12.0))
        d = rng.uniform(-3.0, 3.0)
        lo, hi = tilt_domain_interval(d, params)
        if not math.isfinite(lo):
            lo = hi - 2.0
        for f in np.linspace(0.15, 0.85, 5):
            lam = lo + f * (hi - lo)
            try:
                closed = decompose_cgf(lam, d, params).total
                oracle = riccati_oracle(lam, d, params)
            except OutOfDomainError:
                continue
            worst = max(worst, abs(closed - oracle) / max(1.0, abs(closed)))
    checks.append(("cgf-vs-riccati", worst < 1e-6, f"worst rel err {worst:.2e}"))

    # Girsanov normalization under three drift pairs: simulate under the
    # target drift, weight back to the nominal one, expect mean one
    ok_all, detail = True, []
    for (f_dr, t_dr, delta, T) in [(-1.0, 1.0, 2.0, 1.5), (-2.0, 1.0, 3.0, 2.0), (1.0, -1.0, 2.0, 0.5)]:
        params = ModelParams(delta=delta, b=f_dr, horizon=T)
        _, _, logw = sample_tail_stats(params, T, 40_000, 256, seed=seed,
                                       schedule=[(T, t_dr)])
        w = np.exp(logw)
        se = w.std(ddof=1) / math.sqrt(len(w))
        ok = abs(w.mean() - 1.0) <= 3.0 * se
        ok_all &= ok
        detail.append(f"{f_dr}->{t_dr}: {w.mean():.4f}+-{se:.4f}")
    checks.append(("girsanov-normalization", ok_all, "; ".join(detail)))

    # closed-form rate against the optimization oracle
    params = ModelParams(delta=1.3, b=1.0, horizon=10.0)
    worst = 0.0
    for d in np.linspace(-4.0, 4.0, 33):
        if abs(d - params.b) < 0.05:
            continue
        worst = max(worst, abs(rate_function(d, params).rate - rate_oracle(d, params)))
    checks.append(("rate-vs-legendre", worst < 1e-6, f"worst abs err {worst:.2e}"))

    # Chapman-Kolmogorov: two half-steps against one full step
    from scipy.stats import ks_2samp

    params = ModelParams(delta=1.0, b=1.0, horizon=1.0)
    gen = RngStream(seed=seed, stream_id=7).generator()
    n = 30_000
    one = np.array([exact_transition(0.7, 0.8, params, gen) for _ in range(n)])
    two = np.empty(n)
    for i in range(n):
        mid = exact_transition(0.7, 0.4, params, gen)
        two[i] = exact_transition(mid, 0.4, params, gen)
    pval = ks_2samp(one, two).pvalue
    checks.append(("chapman-kolmogorov", pval > 1e-3, f"KS p={pval:.4f}"))

    # exact law at d = 0 against endpoint Monte Carlo
    params = ModelParams(delta=1.0, b=1.0, horizon=8.0)
    gen = RngStream(seed=seed, stream_id=11).generator()
    from .simulate import horizon_scale

    draws = horizon_scale(params) * gen.gamma(shape=params.delta / 2.0, scale=2.0, size=200_000)
    frac = float((draws <= params.delta * params.horizon).mean())
    exact = exact_tail_at_zero(params.horizon, params)
    se = math.sqrt(exact * (1 - exact) / draws.size)
    checks.append(("exact-law-at-zero", abs(frac - exact) <= 3 * se,
                   f"mc {frac:.5f} exact {exact:.5f}"))

    width = max(len(c[0]) for c in checks)
    failed = 0
    for name, ok, info in checks:
        status = "PASS" if ok else "FAIL"
        failed += 0 if ok else 1
        print(f"{name:<{width}}  {status}  {info}")
    return 0 if failed == 0 else 2


_NEGATIVE_VALUE = re.compile(r"^-\d")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cir-sldp", description=__doc__)
    # values like -4:4:0.1 must parse as arguments, not flags
    p._negative_number_matcher = _NEGATIVE_VALUE
    p.add_argument("--version", action="version", version=f"cir-sldp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file; flags override it")
    common.add_argument("--b", type=float, help="drift parameter (explosive: b > 0)")
    common.add_argument("--delta", type=float, help="dimension parameter, > 0")
    common.add_argument("--d", type=float, help="threshold")
    common.add_argument("--d-grid", help="threshold grid start:stop:step")
    common.add_argument("--T", type=float, help="horizon")
    common.add_argument("--T-grid", help="horizon grid start:stop:step")
    common.add_argument("--n-paths", type=int)
    common.add_argument("--n-steps", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--scheme", choices=sorted(_SCHEMES))
    common.add_argument("--method", choices=sorted(_METHODS))
    common.add_argument("--order", type=int, help="expansion order p")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--no-timestamp", action="store_true", default=None,
                        help="suppress the timestamp header line")
    common.add_argument("--plot", help="also render a figure to this path")
    common.add_argument("--lambda-grid", help="tilt grid start:stop:step (cgf)")
    for name, fn in [
        ("simulate", cmd_simulate),
        ("mle", cmd_mle),
        ("rate", cmd_rate),
        ("cgf", cmd_cgf),
        ("tail-approx", cmd_tail_approx),
        ("mc-tail", cmd_mc_tail),
        ("verify", cmd_verify),
    ]:
        sp = sub.add_parser(name, parents=[common])
        sp._negative_number_matcher = _NEGATIVE_VALUE
        sp.set_defaults(func=fn)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return args.func(args, cfg)
    except (OutOfDomainError, SaddleBracketError, RegimeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
