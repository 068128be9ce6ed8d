"""Command line interface.

Subcommands ``mean``, ``region``, ``boot-region``, ``test-paired`` and
``bookstein`` write one JSON report (sorted keys) to ``--out`` or stdout.
Exit codes: 0 success, 1 usage error, 2 bad input data, 3 statistical
degeneracy (focal mean, singular covariance, too many degenerate bootstrap
replicates).
"""
import argparse
import json
import math
import sys

import numpy as np

from . import __version__, sphere
from .axial import VeroneseRP
from .bookstein import bookstein_coords, paired_shape_change_test
from .datasets import (
    parse_axes,
    parse_directions,
    parse_paired_tetrads,
    parse_planar_landmarks,
    parse_tetrads,
)
from .errors import BootstrapDegeneracyError, DataError, DegeneracyError, FocalMeanError
from .extrinsic import (
    SphereEmbedding,
    bootstrap_extrinsic,
    extrinsic_mean,
    extrinsic_region,
)
from .frechet import (
    ConfidenceRegion,
    clt_region,
    covariance_triple,
    flat_sample,
    percentile_bootstrap_region,
    pivotal_bootstrap_region,
    sphere_sample,
)
from .manifold import intrinsic_mean, support_radius_check
from .planar import (
    VeroneseCP,
    affine_coords,
    cp_extrinsic_cov,
    preshape_from_landmarks,
    procrustes_mean,
    simultaneous_complex_intervals,
)
from .stat_kernel import chi2_quantile, pd_inverse, resample_plan

LATLON_NOTE = (
    "latlon_deg: geographic latitude and longitude in degrees, "
    "x = cos(lat) cos(lon), y = cos(lat) sin(lon), z = sin(lat)"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifold", choices=["sphere", "axial", "planar-shape", "shape3d"],
                        default="sphere")
    common.add_argument("--mean", choices=["intrinsic", "extrinsic"], default="extrinsic")
    common.add_argument("--alpha", type=float, default=0.05)
    common.add_argument("--B", type=int, default=1000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--method", choices=["clt", "percentile", "pivotal", "nonpivotal"])
    common.add_argument("--in", dest="inp", required=True)
    common.add_argument("--in2")
    common.add_argument("--out")
    common.add_argument("--boundary-points", type=int, default=0)
    common.add_argument("--convention", choices=["latlon_deg", "xyz"], default="latlon_deg")
    common.add_argument("--k", type=int, help="landmarks per planar configuration")
    common.add_argument("--identification", choices=["helmert", "centered"], default="helmert")
    common.add_argument("--hypothesis", help="comma separated point to test")

    p = _Parser(prog="manifold-means", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [
        ("mean", "sample Fréchet or extrinsic mean"),
        ("region", "large-sample chi-square confidence region"),
        ("boot-region", "bootstrap confidence region"),
        ("test-paired", "paired two-sample test of equal mean shape (shape3d)"),
        ("bookstein", "Bookstein coordinates of each tetrad"),
    ]:
        sub.add_parser(name, parents=[common], help=help_)
    return p


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": jsonable(float(x.real)), "im": jsonable(float(x.imag))}
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dumps(report):
    return json.dumps(jsonable(report), sort_keys=True, indent=2) + "\n"


def _quadratic_coefficients(Q):
    Q = np.asarray(Q)
    return {"u1^2": Q[0, 0], "u1*u2": 2 * Q[0, 1], "u2^2": Q[1, 1]}


def _parse_point(text, complex_=False):
    try:
        vals = [complex(s.strip().replace(" ", "")) if complex_ else float(s) for s in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse --hypothesis {text!r}") from None
    return np.array(vals)


class Context:
    """Parsed arguments plus the loaded sample."""

    def __init__(self, args):
        self.args = args
        self.level = 1.0 - args.alpha
        if not (0.0 < args.alpha < 1.0):
            raise UsageError("--alpha must lie in (0, 1)")
        if args.B < 1:
            raise UsageError("--B must be positive")
        self.provenance = {
            "estimator": None,
            "method": args.method,
            "B": None,
            "seed": None,
            "degenerate_count": None,
        }

    def plan(self, n):
        self.provenance["B"] = self.args.B
        self.provenance["seed"] = self.args.seed
        self.provenance["degenerate_count"] = 0
        return resample_plan(self.args.seed, self.args.B, n)


def _load(ctx):
    a = ctx.args
    m = a.manifold
    if m == "sphere":
        ds = parse_directions(a.inp, a.convention)
        return ds, ds.records
    if m == "axial":
        ds = parse_axes(a.inp)
        return ds, ds.records
    if m == "planar-shape":
        if a.k is None:
            raise UsageError("--k is required for planar-shape")
        ds = parse_planar_landmarks(a.inp, a.k)
        return ds, preshape_from_landmarks(ds.records, a.identification)
    ds = parse_tetrads(a.inp)
    return ds, bookstein_coords(ds.records)


def _embedding(ctx, sample):
    m = ctx.args.manifold
    if m == "sphere":
        return SphereEmbedding(sample.shape[1] - 1)
    if m == "axial":
        return VeroneseRP(sample.shape[1])
    return VeroneseCP(sample.shape[1])


def _require_extrinsic(ctx):
    if ctx.args.manifold in ("axial", "planar-shape") and ctx.args.mean == "intrinsic":
        raise UsageError(f"only extrinsic means are available on {ctx.args.manifold}")


def _sphere_intrinsic(X):
    init = sphere.normalize(X.mean(axis=0))
    res = intrinsic_mean(X, sphere.exp_map, sphere.log_map, init)
    sr = support_radius_check(X, res.point, 1.0, sphere.distance)
    diag = {
        "iterations": res.n_iter,
        "tangent_mean_norm": res.tangent_norm,
        "frechet_value": res.frechet_value,
        "support_radius": {"r": sr.r, "bound": sr.bound, "ok": sr.ok},
    }
    return res.point, diag


def _point_report(ctx, point):
    out = {"point": point}
    if ctx.args.manifold == "sphere" and point.size == 3:
        lat, lon = np.degrees(math.asin(max(-1.0, min(1.0, point[2])))), np.degrees(
            math.atan2(point[1], point[0])
        )
        out["lat_lon_deg"] = [lat, lon]
    if ctx.args.manifold == "planar-shape":
        out["affine_coords"] = affine_coords(point)
    return out


def cmd_mean(ctx):
    ds, X = _load(ctx)
    a = ctx.args
    _require_extrinsic(ctx)
    if a.manifold == "shape3d":
        ctx.provenance["estimator"] = "flat Bookstein-chart mean"
        return {"estimates": {"mean": X.mean(axis=0)}, "diagnostics": {"n": len(X)}}
    if a.manifold == "sphere" and a.mean == "intrinsic":
        ctx.provenance["estimator"] = "intrinsic (Karcher) mean"
        p, diag = _sphere_intrinsic(X)
        diag["n"] = len(X)
        return {"estimates": {"mean": _point_report(ctx, p)}, "diagnostics": diag}
    ctx.provenance["estimator"] = "extrinsic mean"
    s = extrinsic_mean(X, _embedding(ctx, X))
    est = {"mean": _point_report(ctx, s.mean_point), "ambient_mean_norm": float(np.linalg.norm(s.ambient_mean))}
    if a.manifold == "sphere":
        est["ambient_mean"] = s.ambient_mean
    return {"estimates": est, "diagnostics": {"n": s.n, "nonfocal_gap": s.nonfocal_gap}}


def _region_payload(region, points, to_manifold=None):
    out = {
        "center": region.center,
        "form": region.form,
        "n_times_form": region.n * region.form,
        "threshold": region.threshold,
        "level": region.level,
        "n": region.n,
        "chart": region.chart_id,
    }
    if region.center.size == 2:
        out["quadratic_form"] = _quadratic_coefficients(region.form)
        out["quadratic_form_times_n"] = _quadratic_coefficients(region.n * region.form)
    if points and region.center.size == 2:
        poly = region.boundary(points)
        out["boundary_chart"] = poly
        if to_manifold is not None:
            out["boundary_points"] = to_manifold(poly)
    return out


def _extrinsic_payload(ctx, region, X):
    s = region.summary
    out = {
        "mean": _point_report(ctx, s.mean_point),
        "g_hat": s.g_hat,
        "threshold": region.threshold,
        "level": region.level,
        "df": region.embedding.dim,
        "statistic": region.variant,
    }
    if ctx.args.manifold == "planar-shape":
        out["g_hat_complex"] = cp_extrinsic_cov(X)
    if ctx.args.hypothesis:
        v = _parse_point(ctx.args.hypothesis, complex_=ctx.args.manifold == "planar-shape")
        v = v / np.linalg.norm(v)
        out["hypothesis"] = {"point": v, "statistic": region.statistic(v), "inside": region.contains(v)}
    pts = ctx.args.boundary_points
    if pts and ctx.args.manifold == "sphere" and X.shape[1] == 3:
        # ellipse in tangential coordinates t = frame (P(ybar) - v)
        t_region = ConfidenceRegion(np.zeros(2), pd_inverse(s.g_hat), region.threshold,
                                    region.level, s.n, "tangent@extrinsic-mean")
        poly = t_region.boundary(pts)
        r2 = np.minimum(np.sum(poly**2, axis=1), 1.0)
        out["boundary_chart"] = poly
        out["boundary_points"] = np.sqrt(1 - r2)[:, None] * s.mean_point - poly @ s.frame
    return out


def cmd_region(ctx):
    a = ctx.args
    if a.method not in (None, "clt"):
        raise UsageError("region uses --method clt; see boot-region for bootstrap methods")
    ctx.provenance["method"] = "clt"
    ds, X = _load(ctx)
    _require_extrinsic(ctx)
    if a.manifold == "shape3d":
        ctx.provenance["estimator"] = "flat Bookstein-chart mean"
        cs = flat_sample(X)
        cov = covariance_triple(cs)
        region = clt_region(cs, cov, ctx.level)
        return {"estimates": {"region": _region_payload(region, 0), "gamma_hat": cov.gamma_hat},
                "diagnostics": {"n": cs.n}}
    if a.manifold == "sphere" and a.mean == "intrinsic":
        ctx.provenance["estimator"] = "intrinsic (Karcher) mean"
        p, diag = _sphere_intrinsic(X)
        cs = sphere_sample(X, base_point=p)
        cov = covariance_triple(cs)
        region = clt_region(cs, cov, ctx.level)
        payload = _region_payload(region, a.boundary_points, cs.metric.from_coords)
        payload["base_point"] = _point_report(ctx, p)
        payload["frame"] = cs.metric.frame
        diag["n"] = cs.n
        return {"estimates": {"region": payload, "lambda_hat": cov.lambda_hat,
                              "c_hat": cov.c_hat, "gamma_hat": cov.gamma_hat},
                "diagnostics": diag}
    ctx.provenance["estimator"] = "extrinsic mean"
    region = extrinsic_region(X, _embedding(ctx, X), ctx.level, "sample-frame")
    return {"estimates": {"region": _extrinsic_payload(ctx, region, X)},
            "diagnostics": {"n": region.summary.n, "nonfocal_gap": region.summary.nonfocal_gap}}


def cmd_boot_region(ctx):
    a = ctx.args
    method = a.method or "pivotal"
    ctx.provenance["method"] = method
    if method == "clt":
        raise UsageError("boot-region needs a bootstrap --method")
    ds, X = _load(ctx)
    _require_extrinsic(ctx)
    plan = ctx.plan(len(X))
    chart_sample = None
    if a.manifold == "shape3d":
        ctx.provenance["estimator"] = "flat Bookstein-chart mean"
        chart_sample, to_manifold, diag = flat_sample(X), None, {}
    elif a.manifold == "sphere" and a.mean == "intrinsic":
        ctx.provenance["estimator"] = "intrinsic (Karcher) mean"
        p, diag = _sphere_intrinsic(X)
        chart_sample = sphere_sample(X, base_point=p)
        to_manifold = chart_sample.metric.from_coords
    if chart_sample is not None:
        diag["n"] = chart_sample.n
        if method == "percentile":
            pr = percentile_bootstrap_region(chart_sample, plan, ctx.level)
            ctx.provenance["degenerate_count"] = pr.distribution.degenerate_count
            payload = {"center": pr.center, "radius": pr.radius, "level": pr.level,
                       "chart": chart_sample.chart_id}
            if a.boundary_points and pr.center.size == 2:
                phi = 2 * np.pi * np.arange(a.boundary_points) / a.boundary_points
                poly = pr.center + pr.radius * np.column_stack([np.cos(phi), np.sin(phi)])
                payload["boundary_chart"] = poly
                if to_manifold is not None:
                    payload["boundary_points"] = to_manifold(poly)
            return {"estimates": {"region": payload}, "diagnostics": diag}
        if method == "pivotal":
            region, dist = pivotal_bootstrap_region(chart_sample, plan, ctx.level)
            ctx.provenance["degenerate_count"] = dist.degenerate_count
            payload = _region_payload(region, a.boundary_points, to_manifold)
            payload["chi2_threshold"] = chi2_quantile(chart_sample.dim, ctx.level)
            return {"estimates": {"region": payload}, "diagnostics": diag}
        raise UsageError(f"--method {method} is not available for chart-based means")

    ctx.provenance["estimator"] = "extrinsic mean"
    if method == "percentile":
        if a.manifold != "planar-shape":
            raise UsageError("--method percentile for extrinsic means is only available on planar-shape")
        si = simultaneous_complex_intervals(X, plan, ctx.level)
        ctx.provenance["degenerate_count"] = si.degenerate_count
        pm = procrustes_mean(X)
        return {
            "estimates": {
                "mean": _point_report(ctx, pm.mean),
                "affine_intervals": [{"lo": iv.lo, "hi": iv.hi} for iv in si.intervals],
                "per_margin_level": si.per_margin_level,
                "simultaneous_level": ctx.level,
            },
            "diagnostics": {"n": len(X), "nonfocal_gap": pm.eigengap},
        }
    bs = bootstrap_extrinsic(X, _embedding(ctx, X), plan, ctx.level, method)
    ctx.provenance["degenerate_count"] = bs.degenerate_count
    payload = _extrinsic_payload(ctx, bs.region, X)
    payload["chi2_threshold"] = chi2_quantile(bs.region.embedding.dim, ctx.level)
    return {"estimates": {"region": payload},
            "diagnostics": {"n": len(X), "nonfocal_gap": bs.region.summary.nonfocal_gap}}


def cmd_test_paired(ctx):
    a = ctx.args
    if a.manifold != "shape3d":
        raise UsageError("test-paired is available for --manifold shape3d")
    if not a.in2:
        raise UsageError("test-paired needs --in (before) and --in2 (after)")
    ds = parse_paired_tetrads(a.inp, a.in2)
    before, after = ds.records
    ctx.provenance["estimator"] = "flat Bookstein-chart mean difference"
    ctx.provenance["method"] = "paired bootstrap"
    plan = ctx.plan(ds.count)
    res = paired_shape_change_test(before, after, plan, ctx.level)
    ctx.provenance["degenerate_count"] = res.degenerate_count
    return {
        "estimates": {
            "statistic": res.statistic,
            "df": len(res.gamma),
            "p_clt": res.p_clt,
            "p_boot": res.p_boot,
            "p": res.p_boot,
            "gamma": res.gamma,
            "per_coordinate_intervals": [list(iv) for iv in res.per_coordinate_intervals],
            "level": res.level,
            "bonferroni_note": res.bonferroni_note,
        },
        "diagnostics": {"n": ds.count},
    }


def cmd_bookstein(ctx):
    ds = parse_tetrads(ctx.args.inp)
    ctx.provenance["estimator"] = "Bookstein coordinates"
    return {"estimates": {"coords": bookstein_coords(ds.records)}, "diagnostics": {"n": ds.count}}


COMMANDS = {
    "mean": cmd_mean,
    "region": cmd_region,
    "boot-region": cmd_boot_region,
    "test-paired": cmd_test_paired,
    "bookstein": cmd_bookstein,
}


def _echo(args):
    keys = ["command", "manifold", "mean", "alpha", "B", "seed", "method", "inp", "in2",
            "boundary_points", "convention", "k", "identification", "hypothesis"]
    out = {k: getattr(args, k) for k in keys}
    out["in"] = out.pop("inp")
    return out


def _error_payload(exc):
    out = {"type": type(exc).__name__, "message": str(exc)}
    if getattr(exc, "line", None) is not None:
        out["line"] = exc.line
    if isinstance(exc, FocalMeanError):
        out["gap"] = exc.gap
    if isinstance(exc, BootstrapDegeneracyError):
        out["degenerate_count"] = exc.degenerate_count
        out["B"] = exc.B
    return out


def _run(argv):
    args = build_parser().parse_args(argv)
    report = {"command": _echo(args), "version": __version__}
    if args.manifold == "sphere":
        report["convention"] = LATLON_NOTE if args.convention == "latlon_deg" else "xyz: unit vectors"
    try:
        ctx = Context(args)
        report.update(COMMANDS[args.command](ctx))
        report["provenance"] = ctx.provenance
        code = 0
    except UsageError as exc:
        print(f"manifold-means: error: {exc}", file=sys.stderr)
        raise SystemExit(1) from None
    except (DataError, OSError) as exc:
        report["error"] = _error_payload(exc)
        code = 2
    except DegeneracyError as exc:
        report["error"] = _error_payload(exc)
        code = 3
    return report, code, args


def run_command(argv):
    """Run one command; returns ``(report, exit_code)``.

    Usage errors raise ``SystemExit(1)``.
    """
    report, code, _ = _run(argv)
    return report, code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    report, code, args = _run(argv)
    text = dumps(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if code:
        print(f"manifold-means: {report['error']['type']}: {report['error']['message']}",
              file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
