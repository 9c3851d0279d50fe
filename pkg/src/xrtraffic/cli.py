"""``xrtraffic`` command-line frontend.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import logging
from pathlib import Path
import shlex
import sys

import click
import numpy as np

from . import datasets, stats
from .errors import XRTrafficError
from .ingest import read_frame_trace, read_packet_log, reassemble, write_frame_trace
from .plotdata import write_plot_data
from .regression import (
    PredictorConfig,
    fit_scoped,
    read_model,
    relative_residuals,
    residual_acf,
    residual_ccdf,
    residual_std_grid,
    residuals,
    split_holdout,
    write_model,
)
from .regression.model import pooled_dataset
from .regression.solvers import design_matrix, huber_loss, pinball_loss
from .slicing import build_policy, simulate, sweep
from .trace import TraceMeta, diff_series, synth_trace

log = logging.getLogger("xrtraffic")

EXIT_USAGE = 1
EXIT_DATA = 2


def _int_list(text, flag):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}", param_hint=flag) from None
    if not values:
        raise click.BadParameter("empty list", param_hint=flag)
    return values


def _float_list(text, flag):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}", param_hint=flag) from None
    if not values:
        raise click.BadParameter("empty list", param_hint=flag)
    return values


class Context:
    def __init__(self, timestamp, seed, argv):
        self.timestamp = timestamp
        self.seed = seed
        self.command = "xrtraffic " + shlex.join(argv)

    def write(self, path, columns, rows, params):
        path = write_plot_data(path, columns, rows, self.command, params, self.timestamp)
        click.echo(f"wrote {path}")


def _outdir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


@click.group()
@click.option("--no-timestamp", is_flag=True, help="Omit the generation-time header line (byte-identical reruns).")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for commands that draw random numbers.")
@click.option("-v", "--verbose", count=True)
@click.version_option(package_name="artifact")
@click.pass_context
def cli(ctx, no_timestamp, seed, verbose):
    """Analyse XR frame traces, fit frame-size predictors and simulate slice provisioning."""
    logging.basicConfig(level=logging.WARNING - 10 * verbose, format="%(levelname)s %(name)s: %(message)s")
    argv = ctx.obj.get("argv") if isinstance(ctx.obj, dict) else None
    ctx.obj = Context(not no_timestamp, seed, sys.argv[1:] if argv is None else argv)


@cli.command("ingest")
@click.argument("packet_log", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@click.option("--content", required=True, help="Content label, e.g. 'Virus Popper'.")
@click.option("--rate", "rate", required=True, type=float, help="Target bit rate R in bits/s.")
@click.option("--fps", required=True, type=float, help="Frame rate in frames/s.")
@click.option("--source-id", default="", help="Trace identifier (defaults to the log file stem).")
def cmd_ingest(packet_log, output, content, rate, fps, source_id):
    """Reassemble a packet log into a frame-trace file."""
    if rate <= 0:
        raise click.BadParameter("must be > 0", param_hint="--rate")
    if fps <= 0:
        raise click.BadParameter("must be > 0", param_hint="--fps")
    meta = TraceMeta(content, rate, fps, source_id or Path(packet_log).stem)
    result = reassemble(read_packet_log(packet_log), meta)
    for msg in result.diagnostics:
        click.echo(f"warning: {packet_log}: {msg}", err=True)
    write_frame_trace(result.trace, output)
    click.echo(f"wrote {output}: {len(result.trace)} frames, mean rate {result.trace.mean_rate / 1e6:.3f} Mb/s")


@cli.command("synth")
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@click.option("--rate", type=float, default=30e6, show_default=True)
@click.option("--fps", type=float, default=60.0, show_default=True)
@click.option("--frames", type=int, default=36000, show_default=True)
@click.option("--noise-std", type=float, default=8000.0, show_default=True, help="Bytes.")
@click.option("--lag1", type=float, default=-0.4, show_default=True)
@click.option("--content", default="synthetic", show_default=True)
@click.option("--source-id", default="synthetic", show_default=True)
@click.pass_obj
def cmd_synth(obj, output, rate, fps, frames, noise_std, lag1, content, source_id):
    """Write a synthetic quasi-CBR trace (uses --seed)."""
    try:
        meta = TraceMeta(content, rate, fps, source_id)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--rate/--fps") from None
    write_frame_trace(synth_trace(meta, frames, noise_std, lag1, obj.seed), output)
    click.echo(f"wrote {output}")


@cli.command("stats")
@click.argument("trace_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--outdir", required=True, type=click.Path(file_okay=False))
@click.option("--windows", default="1,6,60", show_default=True, help="Moving-average windows T, in frames.")
@click.option("--max-lag", type=int, default=50, show_default=True)
@click.option("--rolling", nargs=2, type=int, default=(600, 60), show_default=True,
              help="Rolling ACF window and shift, in frames.")
@click.pass_obj
def cmd_stats(obj, trace_path, outdir, windows, max_lag, rolling):
    """Rate distributions, overflow percentiles and autocorrelations of one trace."""
    windows = _int_list(windows, "--windows")
    if max_lag < 0:
        raise click.BadParameter("must be >= 0", param_hint="--max-lag")
    trace = read_frame_trace(trace_path)
    for T in windows:
        if not 1 <= T <= len(trace):
            raise click.BadParameter(f"window {T} outside 1..{len(trace)} for {trace_path}", param_hint="--windows")
    out = _outdir(outdir)
    params = {"trace": trace_path, "windows": ",".join(map(str, windows)), "max_lag": max_lag,
              "rolling": f"{rolling[0]},{rolling[1]}"}

    rate_rows, cdf_rows, over_rows = [], [], []
    for T in windows:
        rates = stats.rate_series(trace, T)
        rate_rows += [(T, i, r) for i, r in enumerate(rates)]
        cdf = stats.empirical_cdf(rates)
        cdf_rows += [(T, x, p) for x, p in zip(cdf.support, cdf.probs)]
        rep = stats.overflow_report(trace, T)
        over_rows.append((T, rep.mean, rep.std_dev, rep.p95, rep.p99))
    obj.write(out / "rates.csv", ["window", "index", "rate_bps"], rate_rows, params)
    obj.write(out / "rate_cdf.csv", ["window", "rate_bps", "cdf"], cdf_rows, params)
    obj.write(out / "overflow.csv", ["window", "mean_bps", "std_bps", "p95_bps", "p99_bps"], over_rows, params)

    dF = diff_series(trace) if len(trace) >= 2 else None

    def acf_or_nan(x, label):
        try:
            return stats.autocorr(x, max_lag).values
        except XRTrafficError as exc:
            click.echo(f"warning: {trace_path}: ACF of {label}: {exc}", err=True)
            return np.full(max_lag + 1, np.nan)

    acf_f = acf_or_nan(trace.sizes, "frame sizes")
    acf_d = acf_or_nan(dF, "frame-size differences") if dF is not None else np.full(max_lag + 1, np.nan)
    obj.write(out / "acf.csv", ["lag", "acf_size", "acf_diff"],
              [(k, acf_f[k], acf_d[k]) for k in range(max_lag + 1)], params)

    window, shift = rolling
    if dF is not None and max_lag < window <= dF.size and shift >= 1:
        roll = stats.rolling_autocorr(dF, window, shift, max_lag)
        rows = [(int(s), int(i in roll.degenerate), *roll.matrix[i]) for i, s in enumerate(roll.starts)]
        obj.write(out / "rolling_acf.csv", ["start", "degenerate"] + [f"lag{k}" for k in range(max_lag + 1)],
                  rows, params)
    else:
        click.echo(f"skipping rolling ACF: need max_lag < window <= {0 if dF is None else dF.size}", err=True)


def _config(method, N, T, tau, ps, delta):
    if method == "quantile" and ps is None:
        raise click.BadParameter("required for --method quantile", param_hint="--ps")
    if method != "quantile" and ps is not None:
        raise click.BadParameter("only valid with --method quantile", param_hint="--ps")
    if method != "huber" and delta is not None:
        raise click.BadParameter("only valid with --method huber", param_hint="--delta")
    if ps is not None and not 0 < ps < 1:
        raise click.BadParameter("must be in (0, 1)", param_hint="--ps")
    for flag, value, low in (("--N", N, 0), ("--T", T, 1), ("--tau", tau, 1)):
        if value < low:
            raise click.BadParameter(f"must be >= {low}", param_hint=flag)
    return PredictorConfig(N=N, T=T, tau=tau, method=method, p_s=ps, delta=delta)


@cli.command("fit")
@click.argument("trace_paths", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--outdir", required=True, type=click.Path(file_okay=False))
@click.option("--method", type=click.Choice(["ols", "quantile", "huber"]), default="ols", show_default=True)
@click.option("--scope", type=click.Choice(["GM", "CM", "CRM"]), default="CRM", show_default=True)
@click.option("--N", "N", type=int, default=6, show_default=True, help="History length.")
@click.option("--T", "T", type=int, default=1, show_default=True, help="Averaging horizon.")
@click.option("--tau", type=int, default=1, show_default=True, help="Look-ahead.")
@click.option("--ps", type=float, default=None, help="Quantile level p_s (quantile only).")
@click.option("--delta", type=float, default=None, help="Huber threshold in normalized units (default mean|target|/4).")
@click.option("--holdout", type=float, default=None, help="Hold out this trailing fraction of every trace.")
@click.pass_obj
def cmd_fit(obj, trace_paths, outdir, method, scope, N, T, tau, ps, delta, holdout):
    """Fit normalized predictors per scope and write model files plus a fit report."""
    config = _config(method, N, T, tau, ps, delta)
    if holdout is not None and not 0 < holdout < 1:
        raise click.BadParameter("must be in (0, 1)", param_hint="--holdout")
    corpus = [read_frame_trace(p) for p in trace_paths]
    for path, tr in zip(trace_paths, corpus):
        if not tr.meta.source_id:
            object.__setattr__(tr, "meta", TraceMeta(tr.meta.content_label, tr.meta.target_rate,
                                                     tr.meta.frame_rate, Path(path).stem))
    split = [split_holdout(tr, holdout) if holdout else (tr, tr) for tr in corpus]
    train = [a for a, _ in split]
    models = fit_scoped(train, scope, config)
    out = _outdir(outdir)
    report = []
    for k, model in enumerate(models):
        name = f"model-{scope}-{k}.txt"
        write_model(model, out / name)
        click.echo(f"wrote {out / name}")
        for (tr_train, tr_eval), tr in zip(split, corpus):
            if tr.meta.source_id not in model.trained_on:
                continue
            X, y = pooled_dataset([tr_train], model.config, model.normalized)
            pred = design_matrix(X) @ model.theta
            r = y - pred
            loss = {"ols": float(np.sum(r * r)), "quantile": pinball_loss(r, config.p_s or 0.5),
                    "huber": huber_loss(r, model.config.delta or 1.0)}[method]
            w = residuals(model, tr_eval).values
            report.append((name, tr.meta.source_id, len(y), loss, float(np.mean(w)), float(np.std(w)),
                           stats.nearest_rank(w, 0.95), float(np.mean(w <= 0))))
    params = {"traces": " ".join(trace_paths), "method": method, "scope": scope, "N": N, "T": T, "tau": tau,
              "ps": ps, "delta": delta, "holdout": holdout}
    obj.write(out / "fit_report.csv",
              ["model", "source_id", "train_rows", "train_loss_normalized", "mean_residual_bytes",
               "std_residual_bytes", "p95_residual_bytes", "coverage"], report, params)


@cli.command("residuals")
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("trace_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--outdir", required=True, type=click.Path(file_okay=False))
@click.option("--tau", type=int, default=None, help="Evaluation look-ahead (default: the model's).")
@click.option("--max-lag", type=int, default=50, show_default=True)
@click.option("--grid-N", "grid_N", default=None, help="History lengths for the std heatmap, e.g. 0,1,2,4,6,10.")
@click.option("--grid-tau", default=None, help="Look-aheads for the std heatmap, e.g. 1,2,3,4,5,6.")
@click.pass_obj
def cmd_residuals(obj, model_path, trace_path, outdir, tau, max_lag, grid_N, grid_tau):
    """Residual series, CCDF, ACF and (optionally) the std-over-(N, tau) grid."""
    model = read_model(model_path)
    trace = read_frame_trace(trace_path)
    if tau is not None and tau < 1:
        raise click.BadParameter("must be >= 1", param_hint="--tau")
    config = model.config if tau is None else model.config.with_(tau=tau)
    res = residuals(model, trace, config)
    rel = relative_residuals(model, trace, config)
    out = _outdir(outdir)
    params = {"model": model_path, "trace": trace_path, "tau": config.tau, "max_lag": max_lag,
              "grid_N": grid_N, "grid_tau": grid_tau}
    obj.write(out / "residuals.csv", ["t", "residual_bytes", "relative_residual"],
              zip(res.times, res.values, rel.values), params)
    cc = residual_ccdf(res)
    obj.write(out / "residual_ccdf.csv", ["residual_bytes", "ccdf"], zip(cc.support, cc.probs), params)
    try:
        acf = residual_acf(res, max_lag).values
        obj.write(out / "residual_acf.csv", ["lag", "acf"], enumerate(acf), params)
    except XRTrafficError as exc:
        click.echo(f"skipping residual ACF: {exc}", err=True)
    if (grid_N is None) != (grid_tau is None):
        raise click.BadParameter("--grid-N and --grid-tau must be given together", param_hint="--grid-N/--grid-tau")
    if grid_N is not None:
        Ns, taus = _int_list(grid_N, "--grid-N"), _int_list(grid_tau, "--grid-tau")
        grid = residual_std_grid(trace, model.config.method, Ns, taus, model.config.T, model.config.p_s,
                                 model.normalized)
        rows = [(N, t, grid[i, j]) for i, N in enumerate(Ns) for j, t in enumerate(taus)]
        obj.write(out / "residual_std_grid.csv", ["N", "tau", "std_bytes"], rows, params)


def _read_policy_config(path):
    """``key = value`` lines; keys kind, S, N, ps. ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.BadParameter(f"{path}:{lineno}: expected 'key = value'", param_hint="--config")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in ("kind", "S", "N", "ps"):
            raise click.BadParameter(f"{path}:{lineno}: unknown key {key!r}", param_hint="--config")
        values[key] = value
    return values


@cli.command("schedule")
@click.argument("trace_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--outdir", required=True, type=click.Path(file_okay=False))
@click.option("--kind", type=click.Choice(["cs", "fs"], case_sensitive=False), default=None, help="[default: fs]")
@click.option("--S", "S", type=int, default=None, help="Scheduling period in frames. [default: 6]")
@click.option("--N", "N", type=int, default=None, help="Predictor history length. [default: 6]")
@click.option("--ps", type=float, default=None, help="Quantile level p_s. [default: 0.95]")
@click.option("--sweep", "sweep_spec", default=None, help="S=1,2,3 or ps=0.9,0.95,0.99")
@click.option("--train", multiple=True, type=click.Path(exists=True, dir_okay=False),
              help="Training traces (repeatable). Default: the scheduled trace itself.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="Plain-text policy file with kind/S/N/ps lines; flags override it.")
@click.pass_obj
def cmd_schedule(obj, trace_path, outdir, kind, S, N, ps, sweep_spec, train, config_path):
    """Simulate CS or FS slice provisioning with quantile predictors."""
    file_cfg = _read_policy_config(config_path) if config_path else {}
    try:
        kind = (kind or file_cfg.get("kind", "fs")).upper()
        S = S if S is not None else int(file_cfg.get("S", 6))
        N = N if N is not None else int(file_cfg.get("N", 6))
        ps = ps if ps is not None else float(file_cfg.get("ps", 0.95))
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--config") from None
    if kind not in ("CS", "FS"):
        raise click.BadParameter(f"unknown kind {kind!r}", param_hint="--kind")
    if S < 1:
        raise click.BadParameter("must be >= 1", param_hint="--S")
    if N < 0:
        raise click.BadParameter("must be >= 0", param_hint="--N")
    if not 0 < ps < 1:
        raise click.BadParameter("must be in (0, 1)", param_hint="--ps")

    S_set, ps_set = [S], [ps]
    if sweep_spec:
        key, _, values = sweep_spec.partition("=")
        if key == "S":
            S_set = _int_list(values, "--sweep")
            if min(S_set) < 1:
                raise click.BadParameter("S values must be >= 1", param_hint="--sweep")
        elif key == "ps":
            ps_set = _float_list(values, "--sweep")
            if not all(0 < p < 1 for p in ps_set):
                raise click.BadParameter("ps values must be in (0, 1)", param_hint="--sweep")
        else:
            raise click.BadParameter(f"expected S=... or ps=..., got {sweep_spec!r}", param_hint="--sweep")

    trace = read_frame_trace(trace_path)
    corpus = [read_frame_trace(p) for p in train] if train else None
    out = _outdir(outdir)
    params = {"trace": trace_path, "kind": kind, "S": ",".join(map(str, S_set)),
              "N": N, "ps": ",".join(map(str, ps_set)), "train": " ".join(train)}

    points = sweep(trace, kind, S_set, ps_set, N, corpus)
    cols = ["S", "p_s", "ok", "frames", "mean_latency_s", "p50_latency_s", "p95_latency_s", "p99_latency_s",
            "max_latency_s", "mean_rate_bps", "p95_rate_bps", "unfinished"]
    rows = []
    for pt in points:
        s = pt.summary
        if s is None:
            click.echo(f"warning: S={pt.S} ps={pt.p_s}: {pt.error}", err=True)
            rows.append((pt.S, pt.p_s, 0) + (float("nan"),) * (len(cols) - 3))
        else:
            rows.append((pt.S, pt.p_s, 1, s.frames, s.mean_latency, s.p50_latency, s.p95_latency,
                         s.p99_latency, s.max_latency, s.mean_rate, s.p95_rate, s.unfinished))
    obj.write(out / f"schedule_{kind.lower()}_summary.csv", cols, rows, params)

    if not sweep_spec:
        run = simulate(trace, build_policy(kind, S, ps, N, corpus or [trace],
                                           "CRM" if not corpus or len(corpus) == 1 else "CM"))
        obj.write(out / f"schedule_{kind.lower()}_frames.csv", ["frame", "capacity_bytes", "latency_s", "warmup"],
                  [(i, run.capacities[i], run.latencies[i], int(i < run.warmup)) for i in range(len(trace))],
                  params)
        obj.write(out / f"schedule_{kind.lower()}_backlog.csv", ["epoch_start", "backlog_bytes"],
                  zip(run.epoch_starts, run.backlog), params)
    for pt in points:
        if pt.summary is not None:
            s = pt.summary
            click.echo(f"{kind} S={pt.S} ps={pt.p_s}: p95 latency {s.p95_latency * 1e3:.2f} ms, "
                       f"mean rate {s.mean_rate / 1e6:.2f} Mb/s")


@cli.command("fetch-dataset")
@click.option("--url", default=None, help="Archive URL (default: $XRTRAFFIC_DATASET_URL or the public repository).")
@click.option("--dest", default=None, type=click.Path(file_okay=False), help="Cache directory (default: $XRTRAFFIC_DATA).")
def cmd_fetch(url, dest):
    """Download the public trace archive into the local cache."""
    try:
        path = datasets.fetch_dataset(url, Path(dest) if dest else None)
    except OSError as exc:
        raise XRTrafficError(f"download failed: {exc}") from None
    click.echo(f"dataset unpacked into {path}")
    n = len(datasets.load_corpus(path))
    click.echo(f"{n} frame-trace file(s) found" + ("" if n else "; convert packet logs with 'xrtraffic ingest'"))


def main(argv=None):
    argv = [str(a) for a in (sys.argv[1:] if argv is None else argv)]
    try:
        cli.main(args=argv, prog_name="xrtraffic", standalone_mode=False, obj={"argv": argv})
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except XRTrafficError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
