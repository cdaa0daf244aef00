"""Command-line experiment runner.

Every subcommand accepts the shared execution flags and writes either the
JSON payload ``{"config", "meta", "results"}`` or a CSV of per-trial rows
with a ``#summary`` trailer.  The config block and all sampled numbers are
functions of (parameters, seed) only — never of the thread count or output
destination — and ``--no-timing`` zeroes the wall-clock field, so a rerun
reproduces the output file byte for byte.

Multi-valued numeric flags (``--level``, ``--z``) take comma-separated
values: ``--z=-2,-1,0,1,2,3``.  Box centers are semicolon-separated
coordinate tuples: ``--centers "0,0,0;10,10,10"``.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import __version__, output
from . import experiments as ex
from .calibration import load_expectations
from .interlacement import TruncationPolicy, sample_batch, write_samples_jsonl
from .lattice import BoxSpec, SiteSet, box_sites_zd, concentric_radii, separation
from .potential import green
from .rng import RngStream
from .spectral import build_kernel, quasistationary, sigma_to_csv

__all__ = ["main", "build_parser"]


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _centers(text: str, d: int) -> list[tuple[int, ...]]:
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        coords = tuple(int(tok) for tok in part.split(","))
        if len(coords) != d:
            raise SystemExit(f"center {part!r} has {len(coords)} coordinates, expected {d}")
        out.append(coords)
    if not out:
        raise SystemExit("no centers given")
    return out


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--dim", type=int, default=3, help="lattice dimension d")
    shared.add_argument("--side", type=int, default=20, help="torus side N")
    shared.add_argument("--trials", type=int, default=None, help="number of trials/samples")
    shared.add_argument("--seed", type=int, default=0, help="master seed")
    shared.add_argument("--threads", type=int, default=1, help="worker threads")
    shared.add_argument("--out", type=str, default=None, metavar="PATH", help="output file")
    shared.add_argument("--format", choices=("json", "csv"), default="json")
    shared.add_argument("--no-timing", action="store_true",
                        help="write wallclock_s=0.0 for byte-stable output")

    p = argparse.ArgumentParser(prog="torusrw",
                                description="Torus walk cover-time experiments")
    p.add_argument("--version", action="version", version=f"torusrw {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("cover", parents=[shared], help="Gumbel-normalized cover times")
    sp.add_argument("--target", type=str, default="torus",
                    help='"torus" or "singletons:<n>"')
    sp.add_argument("--keep-hit-times", action="store_true")
    sp.set_defaults(func=_cmd_cover, default_trials=1000)

    sp = sub.add_parser("vacancy", parents=[shared], help="one/two-point vacancy at u N^d")
    sp.add_argument("--level", type=_floats, default=[0.5, 1.0, 2.0, 4.0],
                    metavar="U,U,...", help="comma-separated u levels")
    sp.set_defaults(func=_cmd_vacancy, default_trials=2000)

    sp = sub.add_parser("late-points", parents=[shared], help="late set at t(rho)")
    sp.add_argument("--rho", type=float, default=0.25)
    sp.set_defaults(func=_cmd_late, default_trials=2000)

    sp = sub.add_parser("last-points", parents=[shared],
                        help="counts of last-covered vertices on the z-grid")
    sp.add_argument("--z", type=_floats, default=[-2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
                    metavar="Z,Z,...", help="comma-separated z values (increasing)")
    sp.add_argument("--keep-hit-times", action="store_true")
    sp.set_defaults(func=_cmd_last_points, default_trials=1000)

    sp = sub.add_parser("last-k", parents=[shared], help="separation of the last k vertices")
    sp.add_argument("--k", type=int, default=3)
    sp.set_defaults(func=_cmd_last_k, default_trials=1000)

    sp = sub.add_parser("hitting", parents=[shared], help="mean entrance time vs capacity")
    sp.add_argument("--box-radius", type=int, default=1)
    sp.add_argument("--centers", type=str, default="0,0,0")
    sp.set_defaults(func=_cmd_hitting, default_trials=5000)

    sp = sub.add_parser("excursions", parents=[shared],
                        help="complete excursion counts vs u n cap(A)")
    sp.add_argument("--box-radius", type=int, default=2)
    sp.add_argument("--centers", type=str, default="0,0,0")
    sp.add_argument("--level", type=_floats, default=[2.0], metavar="U")
    sp.add_argument("--epsilon", type=float, default=None,
                    help="derive the C-radius from the concentric ladder at this epsilon")
    sp.add_argument("--c-radius", type=int, default=None)
    sp.add_argument("--t-star", type=float, default=None)
    sp.set_defaults(func=_cmd_excursions, default_trials=500)

    sp = sub.add_parser("interlacement", parents=[shared],
                        help="exact local interlacement samples on a window")
    sp.add_argument("--box-radius", type=int, default=1)
    sp.add_argument("--centers", type=str, default=None,
                    help="explicit window points instead of a box")
    sp.add_argument("--level", type=_floats, default=[1.0], metavar="U,U,...")
    sp.add_argument("--trunc-radius", type=int, default=None)
    sp.add_argument("--samples", type=str, default=None, metavar="PATH",
                    help="also write per-sample JSON lines here")
    sp.set_defaults(func=_cmd_interlacement, default_trials=10000)

    sp = sub.add_parser("potential", parents=[shared],
                        help="Green table, g(0) extrapolation, CSV export")
    sp.add_argument("--table-radius", type=int, default=None)
    sp.set_defaults(func=_cmd_potential, default_trials=0)

    sp = sub.add_parser("quasistationary", parents=[shared],
                        help="conditioned-walk eigenpairs and sigma export")
    sp.add_argument("--box-radius", type=int, default=1)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.set_defaults(func=_cmd_quasistationary, default_trials=0)

    return p


def _config(args, **extra) -> ex.ExperimentConfig:
    trials = args.trials if args.trials is not None else args.default_trials
    return ex.ExperimentConfig(N=args.side, d=args.dim, trials=trials,
                               master_seed=args.seed, threads=args.threads, **extra)


def _emit(args, cfg_block: dict, results: dict, rows: list[dict], t0: float) -> None:
    wall = 0.0 if args.no_timing else time.time() - t0
    pay = output.payload(cfg_block, args.seed, __version__, wall, results)
    if args.format == "json":
        text = output.dump_json(pay)
    else:
        text = output.csv_text(rows, {"config": cfg_block, "meta": pay["meta"], **results})
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_cover(args) -> int:
    t0 = time.time()
    cfg = _config(args, target=args.target, keep_hit_times=args.keep_hit_times)
    fit = ex.run_gumbel(cfg)
    _emit(args, cfg.serializable(), fit.summary(), fit.rows(), t0)
    return 0


def _cmd_vacancy(args) -> int:
    t0 = time.time()
    cfg = _config(args, u_levels=tuple(args.level))
    results, rows = {"levels": []}, []
    for u in args.level:
        rep = ex.vacancy_experiment(cfg, u)
        results["levels"].append(rep.summary())
        rows.extend(rep.rows())
    _emit(args, cfg.serializable(), results, rows, t0)
    return 0


def _cmd_late(args) -> int:
    t0 = time.time()
    cfg = _config(args, rho=args.rho)
    rep = ex.run_late_points(cfg)
    _emit(args, cfg.serializable(), rep.summary(), rep.rows(), t0)
    return 0


def _cmd_last_points(args) -> int:
    t0 = time.time()
    cfg = _config(args, z_grid=tuple(args.z), keep_hit_times=args.keep_hit_times)
    rep = ex.run_last_points(cfg)
    _emit(args, cfg.serializable(), rep.summary(), rep.rows(), t0)
    return 0


def _cmd_last_k(args) -> int:
    t0 = time.time()
    cfg = _config(args)
    rep = ex.run_last_k_separation(cfg, args.k)
    block = cfg.serializable()
    block["k"] = args.k
    _emit(args, block, rep.summary(), rep.rows(), t0)
    return 0


def _cmd_hitting(args) -> int:
    t0 = time.time()
    cfg = _config(args)
    boxes = [BoxSpec(c, args.box_radius) for c in _centers(args.centers, args.dim)]
    rep = ex.run_hitting_time_check(cfg, boxes)
    block = cfg.serializable()
    block["box_radius"] = args.box_radius
    block["centers"] = [list(b.center) for b in boxes]
    _emit(args, block, rep.summary(), rep.rows(), t0)
    return 0


def _cmd_excursions(args) -> int:
    t0 = time.time()
    cfg = _config(args)
    centers = _centers(args.centers, args.dim)
    a_radius = args.box_radius
    c_radius = args.c_radius
    if c_radius is None and args.epsilon is not None:
        s = separation(cfg.geometry, np.asarray(centers, dtype=np.int64))
        _, _, ladder_c = concentric_radii(s, args.epsilon)
        lim = (s - 1) // 2 if len(centers) > 1 else (args.side - 1) // 2
        c_radius = min(ladder_c, lim)
        if c_radius <= a_radius:
            raise SystemExit(
                f"epsilon={args.epsilon} gives C-radius {c_radius} <= A-radius {a_radius}")
    if c_radius is None:
        c_radius = load_expectations()["excursions"]["c_radius"]
    u = args.level[0]
    rep = ex.run_excursion_calibration(cfg, centers, a_radius, c_radius, u,
                                       t_star=args.t_star)
    block = cfg.serializable()
    block.update(a_radius=a_radius, c_radius=int(c_radius), u=u,
                 t_star=rep.t_star, centers=[list(c) for c in centers])
    _emit(args, block, rep.summary(), rep.rows(), t0)
    return 0


def _cmd_interlacement(args) -> int:
    t0 = time.time()
    if args.centers is not None:
        points = np.asarray(_centers(args.centers, args.dim), dtype=np.int64)
    else:
        points = box_sites_zd([0] * args.dim, args.box_radius)
    n_samples = args.trials if args.trials is not None else args.default_trials
    policy = None
    if args.trunc_radius is not None:
        policy = TruncationPolicy(args.trunc_radius)
    results, rows, all_batches = {"levels": []}, [], []
    for stream_idx, u in enumerate(args.level):
        batch = sample_batch(points, u, n_samples, policy=policy,
                             rng=RngStream(args.seed, stream_idx))
        all_batches.append(batch)
        results["levels"].append({
            "u": u,
            "n_samples": n_samples,
            "vacancy_frequency": batch.vacancy_frequency(),
            "standard_error": batch.standard_error(),
            "truncation_radius": batch.truncation_radius,
            "residual_budget": batch.residual_budget,
        })
        rows.extend(
            {"sample": i, "u": u, "visited_count": int(batch.visited[i].sum()),
             "all_vacant": int(not batch.visited[i].any())}
            for i in range(n_samples)
        )
    block = {"d": args.dim, "points": points.tolist(), "n_samples": n_samples,
             "u_levels": list(args.level), "master_seed": args.seed,
             "trunc_radius": args.trunc_radius}
    if args.samples:
        if len(all_batches) == 1:
            write_samples_jsonl(args.samples, all_batches[0])
            results["samples_path"] = args.samples
        else:
            paths = []
            for u, batch in zip(args.level, all_batches):
                path = f"{args.samples}.u{u:g}"
                write_samples_jsonl(path, batch)
                paths.append(path)
            results["samples_path"] = paths
    _emit(args, block, results, rows, t0)
    return 0


def _cmd_potential(args) -> int:
    t0 = time.time()
    table = green(args.dim, r_table=args.table_radius)
    block = {"d": args.dim, "r_table": table.radius, "schedule": list(table.schedule),
             "master_seed": args.seed}
    if args.format == "csv" and args.out:
        table.to_csv(args.out)
        return 0
    results = {
        "g0": table.g0,
        "extrapolation_levels": [float(v) for v in table.level_estimates],
        "harmonicity_residual": table.harmonicity_residual,
        "far_envelope_constant": table.far_envelope_constant(),
    }
    _emit(args, block, results, [], t0)
    return 0


def _cmd_quasistationary(args) -> int:
    t0 = time.time()
    geo = ex.ExperimentConfig(N=args.side, d=args.dim, trials=1,
                              master_seed=args.seed).geometry
    removed = SiteSet.from_boxes(geo, [BoxSpec((0,) * args.dim, args.box_radius)])
    kernel = build_kernel(geo, removed)
    res = quasistationary(kernel, tol=args.tol)
    if args.format == "csv" and args.out:
        sigma_to_csv(args.out, kernel, res.sigma)
        return 0
    block = {"d": args.dim, "N": args.side, "box_radius": args.box_radius,
             "tol": args.tol, "master_seed": args.seed}
    results = {
        "lambda1": res.lam1,
        "lambda2": res.lam2,
        "gap": res.gap,
        "log_ratio": float(np.log(res.lam1 / res.lam2)),
        "residual1": res.residual1,
        "residual2": res.residual2,
        "iterations1": res.iterations1,
        "iterations2": res.iterations2,
        "n_states": kernel.n_states,
    }
    _emit(args, block, results, [], t0)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as err:
        # config/geometry validation raises ValueError; surface it the way
        # argparse surfaces its own errors instead of leaking a traceback
        print(f"torusrw: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
