"""Command-line entry points.

Subcommands: run (campaign), calibrate (detector threshold study),
plot (SVG rendering of written CSVs), replay (re-run a manifest and verify
hashes), bench (backend timing). Exit codes: 0 success, 1 usage or
configuration error, 2 one or more arms failed or verification mismatched.
"""

import argparse
import sys

from .config import (ConfigError, ExperimentConfig, apply_overrides,
                     load_config)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the harness reserves 2 for arm
    failures, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="advisim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True,
                           parser_class=_Parser)

    runp = sub.add_parser("run", help="run a campaign")
    runp.add_argument("--config", help="TOML config file")
    runp.add_argument("--out", default="out", help="output directory")
    runp.add_argument("--scale", choices=["small", "medium", "large"],
                      help="grid scale preset override")
    runp.add_argument("--episodes", type=int, help="episode count override")
    runp.add_argument("--seeds", help="comma-separated seed list override")
    runp.add_argument("--ratios", help="comma-separated attacker ratios")
    runp.add_argument("--set", dest="assignments", action="append",
                      default=[], metavar="SECTION.KEY=VALUE",
                      help="override any config key (repeatable)")
    runp.add_argument("--quiet", action="store_true")

    calp = sub.add_parser("calibrate",
                          help="synthetic detector threshold study")
    calp.add_argument("--n", type=int, default=100, help="batch size")
    calp.add_argument("--tau", type=float, default=5.0,
                      help="raw detection threshold for the study")
    calp.add_argument("--kappa", type=float, default=None,
                      help="privacy threshold multiplier; default: calibrate "
                           "it so the noised arm matches the raw arm")
    calp.add_argument("--gamma", type=float, default=4.0,
                      help="poisoning degree")
    calp.add_argument("--sweep-gamma", metavar="LO:HI",
                      help="emit one row per integer degree in the range")
    calp.add_argument("--reps", type=int, default=1000)
    calp.add_argument("--epsilon", type=float, default=1.0)
    calp.add_argument("--sampler", default="shifted-laplace",
                      choices=["shifted-laplace", "tilted"])
    calp.add_argument("--seed", type=int, default=7)
    calp.add_argument("--out", default="calibration.csv")

    plotp = sub.add_parser("plot",
                           help="render SVG figures from campaign CSVs")
    plotp.add_argument("--out-dir", default="out", help="campaign directory")
    plotp.add_argument("--calibration", help="calibration.csv to include")

    repp = sub.add_parser("replay",
                          help="re-run a manifest and verify output hashes")
    repp.add_argument("manifest")
    repp.add_argument("--out", default="replay_out")
    repp.add_argument("--quiet", action="store_true")

    benp = sub.add_parser("bench",
                          help="time the episode runner")
    benp.add_argument("--scale", default="small",
                      choices=["small", "medium", "large"])
    benp.add_argument("--episodes", type=int, default=300)
    benp.add_argument("--seed", type=int, default=1)
    benp.add_argument("--ratio", type=float, default=0.2)
    benp.add_argument("--compare", action="store_true",
                      help="run both backends in subprocesses and compare")
    return p


def _cmd_run(args) -> int:
    from .harness import run_campaign

    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = []
    if args.scale:
        overrides.append(f"env.scale={args.scale}")
    if args.episodes is not None:
        overrides.append(f"run.episodes={args.episodes}")
    if args.seeds:
        overrides.append(f"run.seeds={args.seeds}")
    if args.ratios:
        overrides.append(f"run.ratios={args.ratios}")
    overrides.extend(args.assignments)
    apply_overrides(cfg, overrides)
    cfg.validate()
    progress = None if args.quiet else lambda msg: print(f"  {msg}", flush=True)
    if not args.quiet:
        print(f"campaign -> {args.out}")
    manifest, failures = run_campaign(cfg, args.out, progress=progress)
    if not args.quiet:
        print(f"wrote {len(manifest['outputs'])} files, "
              f"manifest {args.out}/manifest.json")
    for f in failures:
        print(f"FAILED {f}", file=sys.stderr)
    return 2 if failures else 0


def _cmd_calibrate(args) -> int:
    import csv
    from dataclasses import asdict

    from .detector import calibrate_kappa, calibration_experiment
    from .privacy import PrivacyParams
    from .rng import Stream

    privacy = PrivacyParams(epsilon=args.epsilon)
    stream = Stream.from_seed(args.seed)
    kappa = args.kappa
    if kappa is None:
        kappa = calibrate_kappa(args.n, args.tau, privacy, stream,
                                reps=args.reps)
        print(f"calibrated kappa = {kappa:.6g}")
    degrees = [args.gamma]
    if args.sweep_gamma:
        try:
            lo, hi = (int(x) for x in args.sweep_gamma.split(":"))
        except ValueError:
            print(f"advisim calibrate: error: bad --sweep-gamma "
                  f"{args.sweep_gamma!r}, expected LO:HI", file=sys.stderr)
            return 1
        degrees = [float(g) for g in range(lo, hi + 1)]
    rows = [calibration_experiment(args.n, args.tau, kappa, d, privacy,
                                   stream, reps=args.reps,
                                   sampler=args.sampler)
            for d in degrees]
    with open(args.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        names = list(asdict(rows[0]))
        wr.writerow(names)
        for r in rows:
            d = asdict(r)
            wr.writerow([repr(d[k]) if isinstance(d[k], float) else d[k]
                         for k in names])
    for r in rows:
        print(f"gamma={r.degree:g} raw={r.outliers_raw:.3f} "
              f"dp={r.outliers_dp:.3f} attack={r.outliers_attack:.3f} "
              f"gap={r.evasion_gap:+.3f} rmse={r.rmse:.3f}")
    print(f"wrote {args.out}")
    return 0


def _cmd_plot(args) -> int:
    from .plots import render_all

    written = render_all(args.out_dir, args.calibration)
    for p in written:
        print(f"wrote {p}")
    return 0


def _cmd_replay(args) -> int:
    from .harness import replay

    progress = None if args.quiet else lambda msg: print(f"  {msg}", flush=True)
    n, mismatches = replay(args.manifest, args.out, progress=progress)
    if mismatches:
        for m in mismatches:
            print(m, file=sys.stderr)
        print(f"replay: {len(mismatches)} problem(s) across {n} recorded "
              "outputs", file=sys.stderr)
        return 2
    print(f"replay: all {n} outputs byte-identical")
    return 0


def _cmd_bench(args) -> int:
    from .bench import compare_backends, run_bench

    if args.compare:
        return compare_backends(args)
    result = run_bench(args.scale, args.episodes, args.seed, args.ratio)
    print(f"BENCH backend={result['backend']} episodes={result['episodes']} "
          f"wall={result['wall']:.3f}s eps_per_s={result['eps_per_s']:.1f} "
          f"digest={result['digest']}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "calibrate":
            return _cmd_calibrate(args)
        if args.command == "plot":
            return _cmd_plot(args)
        if args.command == "replay":
            return _cmd_replay(args)
        if args.command == "bench":
            return _cmd_bench(args)
    except ConfigError as e:
        print(f"advisim: configuration error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"advisim: {e}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
