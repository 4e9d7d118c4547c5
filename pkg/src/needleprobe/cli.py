"""Scenario-driven command line runner.

Every run writes delimited CSV output (one JSON metadata comment line, then a
header row, then data) atomically, and renders a companion matplotlib figure
next to each CSV unless --no-figures is given.
"""

from __future__ import annotations

import json
import os
import sys
import tempfile
from pathlib import Path

import click
import numpy as np

from .errors import NeedleProbeError
from .geometry import Circle, Geometry2, parse_geometry
from .scenario import Scenario, ScenarioError, metadata_header, parse_scenario


def _write_csv(path: Path, header_comment: str, columns: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(header_comment + "\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _run_eval2d(s: Scenario, outdir: Path, figures: bool) -> list[Path]:
    from .needle2d import Direction2, needle_gradients, needle_values

    geom = parse_geometry(s.outer, s.cavities)
    nx = s.grid_nx or 65
    ny = s.grid_ny or 65
    xs = np.linspace(-1.0, 1.0, nx)
    ys = np.linspace(-1.0, 1.0, ny)
    X, Y = np.meshgrid(xs, ys)
    w = (X + 1j * Y).ravel() - complex(*s.needle_tip)
    d = Direction2.from_vector(s.needle_dir)
    vals = needle_values(w, s.alpha, s.tau, d)
    g1, g2 = needle_gradients(w, s.alpha, s.tau, d)
    rows = [
        (x, y, v.real, v.imag, a.real, a.imag, b.real, b.imag)
        for x, y, v, a, b in zip(X.ravel(), Y.ravel(), vals, g1, g2)
    ]
    out = outdir / "eval2d.csv"
    _write_csv(out, metadata_header(s), ["x", "y", "re_v", "im_v", "re_d1", "im_d1", "re_d2", "im_d2"], rows)
    paths = [out]
    if figures:
        from .report import save_field_figure

        mag = np.log10(np.abs(vals) + 1e-300).reshape(ny, nx)
        fig = outdir / "eval2d.png"
        save_field_figure(fig, xs, ys, mag, "log10 |needle function|")
        paths.append(fig)
    return paths


def _run_eval3d(s: Scenario, outdir: Path, figures: bool) -> list[Path]:
    from .needle3d import Frame3, needle3d_eval_many, needle3d_on_axis

    frame = Frame3(s.theta1, s.theta2)
    n = s.grid_nx or 81
    sv = np.linspace(-2.0, 2.0, n)
    closed = np.array([needle3d_on_axis(t, s.alpha, s.tau) for t in sv])
    offsets = np.stack(
        [np.full(n, 1e-3), np.zeros(n), sv], axis=1
    ) @ np.stack([frame.theta1, frame.theta2, frame.omega])
    quad = needle3d_eval_many(offsets, s.alpha, s.tau, frame)
    rows = list(zip(sv, closed, quad, np.abs(closed - quad)))
    out = outdir / "axis_sweep.csv"
    _write_csv(out, metadata_header(s), ["s", "closed_form", "quadrature", "abs_diff"], rows)
    paths = [out]
    if figures:
        from .report import save_sweep_figure

        fig = outdir / "axis_sweep.png"
        save_sweep_figure(fig, sv, closed, quad, "3D needle on the axis: closed form vs quadrature")
        paths.append(fig)
    return paths


def _run_eval_helmholtz(s: Scenario, outdir: Path, figures: bool) -> list[Path]:
    from .needle3d import Frame3
    from .vekua import HelmholtzNeedleParams, helmholtz_needle_eval_many, helmholtz_needle_on_axis

    frame = Frame3(s.theta1, s.theta2)
    params = HelmholtzNeedleParams(lam=s.lam, alpha=s.alpha, tau=s.tau, frame=frame)
    n = s.grid_nx or 41
    sv = np.linspace(-2.0, 2.0, n)
    sv = sv[np.abs(sv) > 1e-9]
    closed = np.array([helmholtz_needle_on_axis(t, params) for t in sv])
    offsets = np.stack([np.full(sv.size, 1e-3), np.zeros(sv.size), sv], axis=1) @ np.stack(
        [frame.theta1, frame.theta2, frame.omega]
    )
    quad = helmholtz_needle_eval_many(offsets, params)
    rows = list(zip(sv, closed, quad, np.abs(closed - quad)))
    out = outdir / "helmholtz_sweep.csv"
    _write_csv(out, metadata_header(s), ["s", "closed_form", "quadrature", "abs_diff"], rows)
    paths = [out]
    if figures:
        from .report import save_sweep_figure

        fig = outdir / "helmholtz_sweep.png"
        save_sweep_figure(fig, sv, closed, quad, "Helmholtz needle on the axis")
        paths.append(fig)
    return paths


def _oracle_rows(rho: float, nmax: int):
    from .forward2d import dtn_assemble

    geom = Geometry2(outer=Circle(), cavities=[Circle(0.0, 0.0, rho)])
    lam = dtn_assemble(geom, n_modes=nmax)
    diag = np.real(np.diag(lam.matrix))
    modes = lam.mode_numbers
    rows = []
    for m, num in zip(modes, diag):
        n = abs(int(m))
        oracle = n * (1 - rho ** (2 * n)) / (1 + rho ** (2 * n)) if n else 0.0
        rows.append((int(m), rho, float(num), oracle))
    return rows


def _run_forward_oracle(s: Scenario, outdir: Path, figures: bool) -> list[Path]:
    geom = parse_geometry(s.outer, s.cavities)
    if len(geom.cavities) != 1 or not isinstance(geom.cavities[0], Circle):
        raise NeedleProbeError("ForwardOracle expects a single concentric disk cavity")
    rho = geom.cavities[0].r
    nmax = s.grid_nx or 16
    rows = _oracle_rows(rho, nmax)
    out = outdir / "dtn_oracle.csv"
    _write_csv(out, metadata_header(s, {"rho": rho}), ["n", "rho", "eigenvalue_numeric", "eigenvalue_oracle"], rows)
    paths = [out]
    if figures:
        from .report import save_oracle_figure

        n = [r[0] for r in rows]
        fig = outdir / "dtn_oracle.png"
        save_oracle_figure(fig, n, [r[2] for r in rows], [r[3] for r in rows])
        paths.append(fig)
    return paths


def _run_probe_scan(s: Scenario, outdir: Path, figures: bool, n_jobs: int) -> list[Path]:
    from .forward2d import dtn_assemble
    from .probe import VerdictParams, scan_reconstruct

    geom = parse_geometry(s.outer, s.cavities)
    lam_d = dtn_assemble(geom)
    lam0 = dtn_assemble(Geometry2(outer=geom.outer, cavities=[]))
    verdict = None
    if s.theta_cap is not None:
        verdict = VerdictParams(theta_cap=s.theta_cap, window=s.window, growth_ratio=s.ratio)
    res = scan_reconstruct(
        lam0,
        lam_d,
        nx=s.grid_nx,
        ny=s.grid_ny,
        n_directions=s.directions,
        n_max=s.n_max,
        verdict=verdict,
        n_jobs=n_jobs,
    )
    meta = {"theta_cap": res.theta_cap, "window": s.window, "ratio": s.ratio}
    mask_rows = []
    for j in range(res.ys.size):
        for i in range(res.xs.size):
            if not res.inside_domain[j, i]:
                continue
            verdict_s = "outside" if res.outside_cavity[j, i] else "inside_or_boundary"
            mask_rows.append(
                (i, j, res.xs[i], res.ys[j], verdict_s, int(res.best_direction[j, i]),
                 res.last_abs[j, i])
            )
    mask_path = outdir / "mask.csv"
    _write_csv(
        mask_path,
        metadata_header(s, meta),
        ["ix", "iy", "x", "y", "verdict", "best_direction", "last_abs_I"],
        mask_rows,
    )
    trace_rows = []
    if res.traces is not None:
        sched_alphas_taus = {}
        from .probe import Direction2, make_scan_schedule

        for j in range(res.ys.size):
            for i in range(res.xs.size):
                if not res.inside_domain[j, i]:
                    continue
                for di, d in enumerate(res.directions):
                    key = (i, j, di)
                    sched = make_scan_schedule((res.xs[i], res.ys[j]), d, n_max=s.n_max)
                    for n in range(s.n_max):
                        v = res.traces[j, i, di, n]
                        trace_rows.append(
                            (i, j, di, n + 1, sched.alphas[n], sched.taus[n],
                             v.real, v.imag, abs(v))
                        )
    traces_path = outdir / "traces.csv"
    _write_csv(
        traces_path,
        metadata_header(s, meta),
        ["ix", "iy", "direction", "n", "alpha_n", "tau_n", "re_I", "im_I", "abs_I"],
        trace_rows,
    )
    paths = [mask_path, traces_path]
    if figures:
        from .report import save_mask_figure, save_trace_figure

        figpath = outdir / "mask.png"
        save_mask_figure(figpath, res.xs, res.ys, res.outside_cavity, res.inside_domain, geom)
        paths.append(figpath)
        if res.traces is not None:
            ny, nx = res.inside_domain.shape
            picks = [(nx // 2, ny // 2), (3 * nx // 4, ny // 2), (nx // 6, ny // 2)]
            rows, labels = [], []
            for i, j in picks:
                if res.inside_domain[j, i]:
                    di = max(int(res.best_direction[j, i]), 0)
                    rows.append(res.traces[j, i, di])
                    labels.append(f"tip=({res.xs[i]:.2f},{res.ys[j]:.2f}) dir {di}")
            if rows:
                tpath = outdir / "traces.png"
                save_trace_figure(tpath, np.asarray(rows), labels)
                paths.append(tpath)
    return paths


def run_scenario(s: Scenario, figures: bool = True, n_jobs: int = 1) -> list[Path]:
    outdir = Path(s.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    if s.kind == "Eval2D":
        return _run_eval2d(s, outdir, figures)
    if s.kind == "Eval3D":
        return _run_eval3d(s, outdir, figures)
    if s.kind == "EvalHelmholtz":
        return _run_eval_helmholtz(s, outdir, figures)
    if s.kind == "ForwardOracle":
        return _run_forward_oracle(s, outdir, figures)
    if s.kind == "ProbeScan":
        return _run_probe_scan(s, outdir, figures, n_jobs)
    raise NeedleProbeError(f"unhandled scenario kind {s.kind}")


def _fail(exc: Exception) -> None:
    record = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(record), err=True)
    sys.exit(1)


@click.group()
@click.option("--threads", type=int, default=1, show_default=True, help="worker threads")
@click.option("--tolerance", type=float, default=None, help="override quadrature tolerance")
@click.pass_context
def main(ctx, threads: int, tolerance: float | None):
    """Needle-sequence evaluations and probe-method reconstruction runs."""
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads
    ctx.obj["tolerance"] = tolerance
    if threads > 1:
        try:
            import numba

            numba.set_num_threads(threads)
        except (ImportError, ValueError):
            pass
    if tolerance is not None:
        from . import needle3d

        needle3d.DEFAULT_QUAD = needle3d.SemiInfiniteQuadrature(panel_tolerance=tolerance)


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--figures/--no-figures", default=True, show_default=True)
@click.pass_context
def run(ctx, scenario_file: str, figures: bool):
    """Execute a scenario file and write its artifacts."""
    try:
        s = parse_scenario(Path(scenario_file).read_text())
        paths = run_scenario(s, figures=figures, n_jobs=ctx.obj["threads"])
    except (ScenarioError, NeedleProbeError, ValueError, OverflowError) as exc:
        _fail(exc)
        return
    for p in paths:
        click.echo(str(p))


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
def validate(scenario_file: str):
    """Parse and validate a scenario file without running it."""
    try:
        s = parse_scenario(Path(scenario_file).read_text())
    except ScenarioError as exc:
        _fail(exc)
        return
    click.echo(f"OK: {s.kind} scenario, hash {s.digest()}")


@main.group()
def oracle():
    """Closed-form oracles for quick solver checks."""


@oracle.command("dtn")
@click.option("--rho", type=float, required=True, help="concentric cavity radius")
@click.option("--nmax", type=int, default=16, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def oracle_dtn(rho: float, nmax: int, out: str | None):
    """Concentric-disk DtN eigenvalues: numeric vs separation of variables."""
    try:
        if not (0 < rho < 1):
            raise ScenarioError(f"rho must lie in ]0,1[, got {rho}")
        rows = _oracle_rows(rho, nmax)
    except (ScenarioError, NeedleProbeError) as exc:
        _fail(exc)
        return
    lines = ["n,rho,eigenvalue_numeric,eigenvalue_oracle"]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
        click.echo(out)
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
