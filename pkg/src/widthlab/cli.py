"""Command line front end.

Every command reads plain JSON/CSV, writes comma-delimited text with 12
significant digits, and exits through a uniform error contract: tool
errors print a one-line JSON object to stderr and exit with the error
class code.  Report-producing commands render a PNG figure next to the
delimited output unless --no-figure is passed.  Outputs are byte-stable
for fixed inputs and seed; the seconds column of simulate is the one
documented exception.  WIDTHLAB_THREADS caps worker threads in the
numeric width searches.
"""

import functools
import json
import math
import sys
from dataclasses import dataclass

import click
import numpy as np

from . import SCHEMA_VERSION, __version__
from .ballwidths import (
    BallSpec,
    SearchConfig,
    brute_force_width_oracle,
    exact_width,
    gluskin_order,
    numeric_width_upper,
)
from .errors import InputDataError, SchemaError, WidthLabError
from .exponents import (
    abstract_exponents,
    check_hypotheses,
    exponent_profile,
    load_problem,
    predicted_width_exponent,
    problem_to_abstract,
    recip,
)
from .lowerbounds import BOUND_LABELS, BumpSpec, lower_bound_curve, membership_ensemble
from .multiscale import (
    critical_scales,
    default_eps,
    domain_for_problem,
    rank_allocation,
    run_experiment,
)

__all__ = ["main", "fit_rate", "RateFit"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def _emit(out, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if out is None or out == "-":
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _figure_path(out: str) -> str:
    root = out[:-4] if out.endswith(".csv") else out
    return root + ".png"


def _render_loglog(path, series, xlabel, ylabel, reference=None) -> None:
    """series: list of (label, xs, ys); reference: (label, xs, ys) line."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for label, xs, ys in series:
        pairs = [(x, y) for x, y in zip(xs, ys) if y is not None and y > 0.0]
        if not pairs:
            continue
        ax.plot([x for x, _ in pairs], [y for _, y in pairs],
                marker="o", markersize=3.5, linewidth=1.2, label=label)
    if reference is not None:
        label, xs, ys = reference
        ax.plot(xs, ys, linestyle="--", linewidth=1.0, color="gray",
                label=label)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log", base=2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _parse_budgets(text: str) -> list[int]:
    text = text.strip()
    try:
        if ":" in text:
            lo_s, hi_s = text.split(":", 1)
            lo, hi = int(lo_s), int(hi_s)
            if lo < 2 or hi < lo:
                raise ValueError
            out = []
            n = lo
            while n <= hi:
                out.append(n)
                n *= 2
            return out
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise SchemaError(
            f"budgets must be 'lo:hi' (doubling ladder, inclusive) or a "
            f"comma list, got {text!r}") from None


def _parse_levels(text: str) -> list[int]:
    text = text.strip()
    try:
        if ":" in text:
            lo_s, hi_s = text.split(":", 1)
            lo, hi = int(lo_s), int(hi_s)
            if lo < 0 or hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise SchemaError(
            f"rings must be 'lo:hi' (inclusive) or a comma list, "
            f"got {text!r}") from None


def _cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except WidthLabError as exc:
            click.echo(json.dumps(exc.payload(), sort_keys=True), err=True)
            sys.exit(exc.code)

    return wrapper


@click.group()
@click.version_option(
    __version__, message=f"%(prog)s %(version)s (output schema {SCHEMA_VERSION})")
def main():
    """Order-exponent predictions and desk-scale width experiments for
    weighted smoothness classes."""


@main.command()
@click.option("--problem", "problem_path", required=True,
              help="Problem JSON file, or - for stdin.")
@click.option("--tie-tol", default=1e-12, show_default=True,
              help="Tolerance for exponent ties in the profile minimum.")
@click.option("--case8-as-printed", is_flag=True,
              help="Use the unscaled final candidate in regime 8.")
@click.option("--out", default=None, help="Output file (default stdout).")
@_cli_errors
def exponent(problem_path, tie_tol, case8_as_printed, out):
    """Predicted width order exponent for a problem."""
    p = load_problem(problem_path)
    mode = "as-printed" if case8_as_printed else "q-scaled"
    pred = predicted_width_exponent(p, tie_tol=tie_tol, case8_theta4=mode)
    rows = [
        ("kind", p.kind), ("r", p.r), ("d", p.d),
        ("p0", p.space.p0), ("p1", p.space.p1), ("q", p.space.q),
    ]
    if pred.profile is not None:
        rows.append(("case", pred.profile.case_id))
        rows.append(("theta_candidates",
                     ";".join(_fmt(v) for v in pred.profile.thetas)))
        a = problem_to_abstract(p)
        pair = abstract_exponents(a, p.space)
        rows.append(("theta_tilde", pair.theta_tilde))
        rows.append(("theta_hat", pair.theta_hat))
        rows.append(("j_star", pred.profile.j_star))
    rows.append(("theta_star", pred.theta_star))
    rows.append(("hypotheses_pass", pred.report.overall))
    rows.append(("reason", pred.reason))
    _emit(out, ("key", "value"), rows)


@main.command()
@click.option("--problem", "problem_path", required=True,
              help="Problem JSON file, or - for stdin.")
@click.option("--tie-tol", default=1e-12, show_default=True)
@click.option("--case8-as-printed", is_flag=True)
@click.option("--out", default=None, help="Output file (default stdout).")
@_cli_errors
def check(problem_path, tie_tol, case8_as_printed, out):
    """Hypothesis report: every admissibility condition with its margin."""
    p = load_problem(problem_path)
    mode = "as-printed" if case8_as_printed else "q-scaled"
    report = check_hypotheses(p, tie_tol=tie_tol, case8_theta4=mode)
    rows = [(c.name, c.value, c.passed) for c in report.entries]
    rows.append(("overall", None, report.overall))
    _emit(out, ("condition", "value", "passed"), rows)


@main.command("ball-width")
@click.option("--dim", "-N", "N", type=int, required=True,
              help="Ambient dimension.")
@click.option("--rank", "-n", "n", type=int, required=True,
              help="Approximating subspace dimension.")
@click.option("--p", type=float, required=True, help="Ball exponent (inf ok).")
@click.option("--q", type=float, required=True, help="Target exponent (inf ok).")
@click.option("--radius", type=float, default=1.0, show_default=True)
@click.option("--method", type=click.Choice(
    ["auto", "exact", "order", "numeric", "oracle"]), default="auto",
    show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=int, default=12, show_default=True)
@click.option("--out", default=None, help="Output file (default stdout).")
@_cli_errors
def ball_width(N, n, p, q, radius, method, seed, restarts, out):
    """Width of a scaled p-ball in the q-norm, by the best available route."""
    if method == "auto":
        method = "exact" if recip(q) >= recip(p) else "order"
    if method == "exact":
        est = exact_width(N, n, p, q, radius=radius)
    elif method == "order":
        est = gluskin_order(N, n, p, q, radius=radius)
    elif method == "numeric":
        cfg = SearchConfig(seed=seed, restarts=restarts)
        est = numeric_width_upper(BallSpec(N=N, p=p, radius=radius), n, q,
                                  cfg)
    else:
        cfg = SearchConfig(seed=seed, restarts=max(restarts, 24),
                           samples_per_eval=4000, refine_steps=60)
        est = brute_force_width_oracle(BallSpec(N=N, p=p, radius=radius), n,
                                       q, cfg)
    _emit(out, ("N", "n", "p", "q", "method", "kind", "value", "rel_tol"),
          [(N, n, p, q, est.method, est.kind, est.value, est.rel_tol)])


@main.command()
@click.option("--problem", "problem_path", required=True,
              help="Problem JSON file, or - for stdin.")
@click.option("--budgets", default="16:1024", show_default=True,
              help="Rank budgets: 'lo:hi' doubling ladder or comma list.")
@click.option("--rings", default="0:13", show_default=True,
              help="Ensemble bump rings: 'lo:hi' inclusive or comma list.")
@click.option("--depth", type=int, default=0, show_default=True,
              help="Refinement depth of the ensemble bumps.")
@click.option("--bump", type=click.Choice(["poly", "smooth"]),
              default="poly", show_default=True)
@click.option("--eps", type=float, default=None,
              help="Anchor decay rate (default: a tenth of the minimal "
                   "exponent gap).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--t1", type=float, default=None, help="Ring anchor override.")
@click.option("--m1", type=float, default=None, help="Depth anchor override.")
@click.option("--tune-anchors", is_flag=True,
              help="Pick the q>2 ring anchor by measured error at the "
                   "smallest budget.")
@click.option("--t-max", type=int, default=None,
              help="Domain ring cap (default: derived from the largest "
                   "budget and the requested rings).")
@click.option("--slack", type=float, default=1e-6, show_default=True,
              help="Allowed membership overshoot for ensemble members.")
@click.option("--out", default="widthlab-simulate.csv", show_default=True)
@click.option("--no-figure", is_flag=True)
@_cli_errors
def simulate(problem_path, budgets, rings, depth, bump, eps, seed, t1, m1,
             tune_anchors, t_max, slack, out, no_figure):
    """Run the multi-scale scheme over a budget ladder and record the
    worst-case error of a bump ensemble."""
    p = load_problem(problem_path)
    ns = _parse_budgets(budgets)
    ring_list = _parse_levels(rings)
    if t_max is None:
        t_max = _auto_t_max(p, ns, ring_list)
    dom = domain_for_problem(p, t_max)
    ensemble = membership_ensemble(
        p, dom, [(j, depth) for j in ring_list if j <= dom.t_max],
        spec=BumpSpec(profile=bump))
    rows = run_experiment(p, dom, ns, ensemble, eps=eps, seed=seed, t1=t1,
                          m1=m1, tune_anchors=tune_anchors,
                          membership_slack=slack)
    _emit(out, ("n", "error", "rank", "seconds"),
          [(r.n, r.error, r.rank, r.seconds) for r in rows])
    if not no_figure and out not in (None, "-"):
        pred = predicted_width_exponent(p)
        reference = None
        if pred.theta_star is not None:
            anchor = rows[0].error
            ref = [anchor * (n / rows[0].n) ** (-pred.theta_star)
                   for n in ns]
            reference = (f"slope -{_fmt(pred.theta_star)}", ns, ref)
        _render_loglog(_figure_path(out),
                       [("worst ensemble error", ns,
                         [r.error for r in rows])],
                       "budget n", "error", reference)


def _auto_t_max(p, ns, ring_list) -> int:
    a = problem_to_abstract(p)
    pair = abstract_exponents(a, p.space)
    profile = exponent_profile(p.space, a.s_star, pair)
    cs = critical_scales(a, p.space, max(ns))
    alloc = rank_allocation(cs, profile.case_id, max(ns),
                            eps=default_eps(profile))
    return max(2, alloc.t_cut, max(ring_list, default=0))


@main.command("lower-bound")
@click.option("--problem", "problem_path", required=True,
              help="Problem JSON file, or - for stdin.")
@click.option("--budgets", default="16:1024", show_default=True)
@click.option("--out", default="widthlab-lower-bound.csv", show_default=True)
@click.option("--no-figure", is_flag=True)
@_cli_errors
def lower_bound(problem_path, budgets, out, no_figure):
    """Closed-form lower-bound curve for a problem over a budget ladder."""
    p = load_problem(problem_path)
    ns = _parse_budgets(budgets)
    curve = lower_bound_curve(p, ns)
    header = ("n",) + BOUND_LABELS + ("max",)
    rows = []
    for i, n in enumerate(curve.ns):
        row = [n]
        row.extend(curve.columns[lab][i] for lab in BOUND_LABELS)
        row.append(curve.best[i])
        rows.append(row)
    _emit(out, header, rows)
    if not no_figure and out not in (None, "-"):
        series = [(lab, curve.ns, curve.columns[lab])
                  for lab in BOUND_LABELS]
        series.append(("max", curve.ns, curve.best))
        _render_loglog(_figure_path(out), series, "budget n", "lower bound")


@dataclass(frozen=True)
class RateFit:
    """Least-squares decay rate of a positive column against the budget."""

    slope: float
    intercept: float
    rms_residual: float
    used: int
    total: int


def fit_rate(pairs, window_drop: float = 0.25) -> RateFit:
    """Fit log2(y) = slope*log2(n) + intercept after dropping the smallest
    window_drop fraction of budgets (warm-up transient)."""
    pairs = sorted((float(n), float(y)) for n, y in pairs)
    if len(pairs) < 4:
        raise InputDataError(
            f"rate fit needs at least 4 points, got {len(pairs)}")
    if any(n <= 0.0 or y <= 0.0 for n, y in pairs):
        raise InputDataError("rate fit needs positive budgets and values")
    if not (0.0 <= window_drop < 1.0):
        raise SchemaError(f"window_drop must lie in [0,1), got {window_drop}")
    k = int(math.floor(window_drop * len(pairs)))
    kept = pairs[k:]
    xs = np.log2([n for n, _ in kept])
    ys = np.log2([y for _, y in kept])
    coef = np.polyfit(xs, ys, 1)
    resid = ys - np.polyval(coef, xs)
    return RateFit(slope=float(coef[0]), intercept=float(coef[1]),
                   rms_residual=float(np.sqrt(np.mean(resid ** 2))),
                   used=len(kept), total=len(pairs))


@main.command()
@click.option("--input", "input_path", required=True,
              help="CSV produced by simulate or lower-bound.")
@click.option("--x", "x_col", default="n", show_default=True)
@click.option("--y", "y_col", default="error", show_default=True)
@click.option("--drop", type=float, default=0.25, show_default=True,
              help="Fraction of smallest budgets to drop before fitting.")
@click.option("--problem", "problem_path", default=None,
              help="Optional problem JSON; adds the predicted exponent and "
                   "the gap to the fit.")
@click.option("--out", default=None, help="Output file (default stdout).")
@_cli_errors
def fit(input_path, x_col, y_col, drop, problem_path, out):
    """Fit the decay rate of a result column against the budget column."""
    import csv as _csv

    try:
        with open(input_path, newline="", encoding="utf-8") as fh:
            reader = _csv.DictReader(fh)
            if reader.fieldnames is None or x_col not in reader.fieldnames \
                    or y_col not in reader.fieldnames:
                raise InputDataError(
                    f"input lacks columns {x_col!r}/{y_col!r}")
            pairs = []
            for rec in reader:
                xs, ys = rec.get(x_col, ""), rec.get(y_col, "")
                if xs == "" or ys == "":
                    continue
                pairs.append((float(xs), float(ys)))
    except OSError as exc:
        raise InputDataError(f"cannot read {input_path}: {exc}") from None
    except ValueError as exc:
        raise InputDataError(f"non-numeric data in {input_path}: {exc}") from None
    result = fit_rate(pairs, window_drop=drop)
    rows = [
        ("slope", result.slope),
        ("intercept_log2", result.intercept),
        ("rms_residual", result.rms_residual),
        ("points_used", result.used),
        ("points_total", result.total),
    ]
    if problem_path is not None:
        pred = predicted_width_exponent(load_problem(problem_path))
        rows.append(("theta_star", pred.theta_star))
        if pred.theta_star is not None:
            rows.append(("slope_gap", result.slope + pred.theta_star))
    _emit(out, ("key", "value"), rows)


if __name__ == "__main__":
    main()
