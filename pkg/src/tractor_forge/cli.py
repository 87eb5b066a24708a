"""Command-line front door.

Subcommands: tensors, tractor, ambient, holonomy, verify.  Exit codes:
0 all checks pass, 1 some check failed, 2 configuration or domain error.
The TRACTOR_FORGE_LOG environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import holonomy as hol
from . import transport as tp
from .ambient import AmbientGeometry, SingularMapError, ambient_point
from .curvature import stack_at
from .metric import MetricError, signature_at
from .report import RunConfig, report_emit, run_verify
from .tractor import connection_matrix, normality_check, tractor_metric

log = logging.getLogger("tractor_forge")

_HOLONOMY_VARIANTS = ("tractor-induced", "tractor-paper", "ambient",
                      "crude", "levi-civita")


def _parse_point(text: str) -> list:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise MetricError(f"cannot parse point {text!r}") from exc


def _parse_params(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise MetricError(f"--param expects NAME=VALUE, got {item!r}")
        key, _, val = item.partition("=")
        try:
            parsed = json.loads(val)
        except json.JSONDecodeError:
            parsed = val
        out[key.strip()] = parsed
    return out


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("metric source")
    src.add_argument("--preset", help="built-in metric name (flat, sphere, "
                     "hyperbolic, ppwave, s2xs2, bumpy)")
    src.add_argument("--config", dest="config_path", metavar="PATH",
                     help="metric config file")
    src.add_argument("--param", action="append", metavar="NAME=VALUE",
                     help="preset parameter (repeatable), e.g. n=4 or eps=0.1")
    common.add_argument("--point", help="chart base point, comma-separated")
    common.add_argument("--tol-tensor", type=float, default=1e-9)
    common.add_argument("--tol-transport", type=float, default=1e-7)
    common.add_argument("--tol-rank", type=float, default=1e-6)
    common.add_argument("--samples", type=int, default=10)
    common.add_argument("--loops", type=int, default=12,
                        help="total loop-family size per suite")
    common.add_argument("--radius", type=float, default=0.25)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out", help="write the report to this path")
    common.add_argument("--format", choices=("json", "csv", "text"),
                        default="json")

    parser = argparse.ArgumentParser(
        prog="tractor-forge",
        description="Conformal tractor / ambient-connection computations.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("tensors", parents=[common],
                   help="curvature stack invariants at sampled points")
    sub.add_parser("tractor", parents=[common],
                   help="tractor connection and normality residuals")
    p_amb = sub.add_parser("ambient", parents=[common],
                           help="ambient metric, torsion, and scaling checks")
    p_amb.add_argument("--s", type=float, default=0.0,
                       help="ambient s coordinate of the evaluation point")
    p_amb.add_argument("--q", type=float, default=1.0,
                       help="ambient q coordinate of the evaluation point")
    p_hol = sub.add_parser("holonomy", parents=[common],
                           help="holonomy algebra estimation for one connection")
    p_hol.add_argument("--variant", choices=_HOLONOMY_VARIANTS,
                       default="tractor-induced")
    sub.add_parser("verify", parents=[common],
                   help="run the full identity battery on one metric")
    return parser


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        preset=args.preset,
        params=_parse_params(args.param),
        config_path=args.config_path,
        point=_parse_point(args.point) if args.point else None,
        tol_tensor=args.tol_tensor,
        tol_transport=args.tol_transport,
        tol_rank=args.tol_rank,
        samples=args.samples,
        loops=args.loops,
        radius=args.radius,
        seed=args.seed,
        out=args.out,
        format=args.format,
    )


def _base_point(cfg: RunConfig, spec) -> np.ndarray:
    if cfg.point is not None:
        pt = np.asarray(cfg.point, dtype=float)
        if len(pt) != spec.n:
            raise MetricError(
                f"point has {len(pt)} coordinates, metric needs {spec.n}")
        return pt
    rng = np.random.default_rng(cfg.seed)
    return spec.sample_points(rng, 1)[0] * 0.5


def _emit(payload: dict, cfg: RunConfig) -> None:
    if cfg.format == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif cfg.format == "text":
        lines = []
        def walk(prefix, obj):
            if isinstance(obj, dict):
                for k in sorted(obj):
                    walk(f"{prefix}{k}.", obj[k])
            elif isinstance(obj, list):
                lines.append(f"{prefix[:-1]}: {obj}")
            else:
                lines.append(f"{prefix[:-1]}: {obj}")
        walk("", payload)
        text = "\n".join(lines) + "\n"
    else:
        raise MetricError(f"format {cfg.format!r} not supported here; use "
                          "json or text")
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _maxabs(a) -> float:
    return float(np.max(np.abs(a)))


def cmd_tensors(cfg: RunConfig) -> int:
    spec = cfg.metric_spec()
    base = _base_point(cfg, spec)
    rng = np.random.default_rng(cfg.seed)
    points = spec.sample_points(rng, cfg.samples)
    st = stack_at(spec, base)
    payload = {
        "n": spec.n,
        "signature": list(signature_at(spec, base)),
        "base_point": [float(v) for v in base],
        "at_base": {
            "scalar_curvature": float(st.Scal),
            "ricci_norm": _maxabs(st.Ric),
            "weyl_norm": _maxabs(st.W),
            "cotton_york_norm": _maxabs(st.CY),
            "schouten": [[float(v) for v in row] for row in st.P],
        },
        "over_samples": {
            "count": int(cfg.samples),
            "max_weyl_norm": max(_maxabs(stack_at(spec, x).W) for x in points),
            "max_cotton_york_norm": max(_maxabs(stack_at(spec, x).CY)
                                        for x in points),
        },
    }
    payload["conformally_flat"] = bool(
        payload["over_samples"]["max_weyl_norm"] <= cfg.tol_tensor
        and payload["over_samples"]["max_cotton_york_norm"] <= cfg.tol_tensor)
    _emit(payload, cfg)
    return 0


def cmd_tractor(cfg: RunConfig) -> int:
    spec = cfg.metric_spec()
    base = _base_point(cfg, spec)
    st = stack_at(spec, base)
    rng = np.random.default_rng(cfg.seed)
    X = rng.standard_normal(spec.n)
    payload = {"base_point": [float(v) for v in base], "variants": {}}
    worst = 0.0
    for variant in ("induced", "paper"):
        H = tractor_metric(st.g, variant)
        Om = connection_matrix(st, X, variant)
        rep = normality_check(st, variant)
        res_norm = max(rep["preserves_null_direction"]["residual"],
                       rep["ricci_contraction_vanishes"]["residual"])
        payload["variants"][variant] = {
            "fiber_metric_corner": float(H[0, -1]),
            "sample_connection_norm": _maxabs(Om),
            "normality": {
                "preserves_null_direction":
                    rep["preserves_null_direction"]["residual"],
                "ricci_contraction_vanishes":
                    rep["ricci_contraction_vanishes"]["residual"],
            },
        }
        if variant == "paper":
            worst = res_norm
    payload["normality_pass"] = bool(worst <= 1e-8)
    _emit(payload, cfg)
    return 0 if payload["normality_pass"] else 1


def cmd_ambient(cfg: RunConfig, s: float, q: float) -> int:
    spec = cfg.metric_spec()
    base = _base_point(cfg, spec)
    geom = AmbientGeometry(spec)
    p = ambient_point(s, base, q)
    st = geom.stack(base)
    f, _ = geom.f_map(p, st)
    h = geom.metric(p, st)
    rng = np.random.default_rng(cfg.seed)
    res_tor = 0.0
    for _ in range(4):
        X = rng.standard_normal(spec.n)
        Y = rng.standard_normal(spec.n)
        u = np.concatenate(([0.0], X, [0.0]))
        w = np.concatenate(([0.0], Y, [0.0]))
        res_tor = max(res_tor, _maxabs(
            geom.torsion(p, u, w, st) - geom.torsion_closed_form(p, X, Y, st)))
    hom = geom.homogeneity_checks(p, rng=np.random.default_rng(cfg.seed))
    payload = {
        "point": {"s": s, "base": [float(v) for v in base], "q": q},
        "f_eigenvalues": sorted(float(v) for v in np.linalg.eigvals(f).real),
        "metric_corner_SQ": float(h[0, -1]),
        "default_s_bound": geom.default_s_bound(base, q),
        "torsion_vs_cotton_york": res_tor,
        "homogeneity": {
            "metric_scaling": max(hom[0.5]["metric_scaling"],
                                  hom[2.0]["metric_scaling"]),
            "torsion_scaling": max(hom[0.5]["torsion_scaling"],
                                   hom[2.0]["torsion_scaling"]),
            "lift_homogeneity": hom["lift_homogeneity"],
            "dphi": hom["dphi"],
        },
        "nabF_identity": geom.nabF_check(p, rng=np.random.default_rng(cfg.seed)),
    }
    ok = (res_tor <= cfg.tol_transport
          and payload["homogeneity"]["metric_scaling"] <= cfg.tol_transport
          and payload["nabF_identity"] <= 1e-9)
    payload["pass"] = bool(ok)
    _emit(payload, cfg)
    return 0 if ok else 1


def _holonomy_setup(cfg: RunConfig, variant: str):
    spec = cfg.metric_spec()
    base = _base_point(cfg, spec)
    rng = np.random.default_rng(cfg.seed + 1)
    n = spec.n
    extra = max(0, cfg.loops - n * (n - 1) // 2)
    loops = tp.loop_family(base, extra, cfg.radius, rng)
    if variant == "tractor-induced":
        oracle = tp.TractorOracle(spec, "induced")
    elif variant == "tractor-paper":
        oracle = tp.TractorOracle(spec, "paper")
    elif variant == "ambient":
        oracle = tp.AmbientOracle(spec)
    elif variant == "crude":
        oracle = tp.CrudeOracle(spec)
    elif variant == "levi-civita":
        oracle = tp.LeviCivitaOracle(spec)
    else:
        raise MetricError(f"unknown connection variant {variant!r}")
    if variant in ("ambient", "crude"):
        loops = [tp.lift_loop(lp) for lp in loops]
        base = ambient_point(0.0, base, 1.0)
    return spec, oracle, base, loops


def cmd_holonomy(cfg: RunConfig, variant: str) -> int:
    spec, oracle, base, loops = _holonomy_setup(cfg, variant)
    alg = hol.holonomy_algebra(oracle, base, loops, 1e-9, cfg.tol_rank)
    H = oracle.fiber_metric(base)
    loop_rows = []
    for idx, lp in enumerate(loops):
        G = tp.transport_matrix(oracle, lp, 1e-9)
        kind = "rectangle" if len(lp.segments) > 1 else "trig"
        loop_rows.append({
            "loop": idx,
            "kind": kind,
            "metric_drift": _maxabs(G.T @ H @ G - H),
            "distance_from_identity": _maxabs(G - np.eye(oracle.fiber_dim)),
        })
    if cfg.format == "csv":
        import csv as _csv
        import io as _io
        buf = _io.StringIO()
        writer = _csv.writer(buf)
        writer.writerow(["loop", "kind", "metric_drift",
                         "distance_from_identity"])
        for row in loop_rows:
            writer.writerow([row["loop"], row["kind"],
                             f"{row['metric_drift']:.6e}",
                             f"{row['distance_from_identity']:.6e}"])
        text = buf.getvalue()
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    payload = {
        "variant": variant,
        "base_point": [float(v) for v in np.asarray(base)],
        "dimension": alg.dim,
        "rank_tolerance": alg.rank_tol,
        "sv_profile": [float(f"{v:.6e}") for v in alg.sv_profile[:12]],
        "fixed_vectors": [[float(f"{c:.10e}") for c in v]
                          for v in hol.fixed_vectors(alg)],
        "orthogonal_algebra_residual": hol.algebra_metric_residual(alg),
        "bracket_closure_residual": hol.bracket_closure_residual(alg),
        "loops": loop_rows,
    }
    _emit(payload, cfg)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    report = run_verify(cfg)
    text = report_emit(report, cfg.format, cfg.out)
    if not cfg.out:
        sys.stdout.write(text)
    return 0 if report.passed else 1


def main(argv=None) -> int:
    level = os.environ.get("TRACTOR_FORGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        log.info("command=%s preset=%s config=%s seed=%d",
                 args.command, cfg.preset, cfg.config_path, cfg.seed)
        if args.command == "tensors":
            return cmd_tensors(cfg)
        if args.command == "tractor":
            return cmd_tractor(cfg)
        if args.command == "ambient":
            return cmd_ambient(cfg, args.s, args.q)
        if args.command == "holonomy":
            return cmd_holonomy(cfg, args.variant)
        if args.command == "verify":
            return cmd_verify(cfg)
        raise MetricError(f"unknown command {args.command!r}")
    except SingularMapError as exc:
        log.error("singular bundle map: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (MetricError, tp.TransportError, OSError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
