"""Command-line front end.

Exit codes: 0 success, 1 internal error, 2 usage or validation error,
3 verification failure. Reports are flat ``key value`` text, one pair per
line, floats in shortest round-trip form.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import csp_ops, loss, metrics, tcsp, topology
from .errors import DomainError, FormatError
from .raster import as_scalar, load_raster, ring_stack, store_raster
from .skeleton import HARD, SOFT, SkelConfig, binary_skeletonize, cspskeletonize

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2, 3


def format_report(pairs) -> str:
    lines = []
    for key, value in pairs:
        if isinstance(value, (bool, np.bool_)):
            value = int(value)
        if isinstance(value, (float, np.floating)):
            text = repr(float(value))
        else:
            text = str(int(value))
        lines.append(f"{key} {text}")
    return "\n".join(lines) + "\n"


def emit_report(pairs, path) -> None:
    text = format_report(pairs)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)


def _load(path, kind):
    return load_raster(path, kind=None if kind == "auto" else kind)


def _csp_params(args) -> csp_ops.CspParams:
    return csp_ops.CspParams(alpha=args.alpha, tau=args.tau, sigma=args.sigma)


def _skel_config(args, mode=None) -> SkelConfig:
    return SkelConfig(
        iterations=args.iters,
        params=_csp_params(args),
        mode=mode or args.mode or SOFT,
        protect_endpoints=args.protect_endpoints,
        endpoint_conn=args.endpoint_conn,
    )


# ---------------------------------------------------------------------------
# commands


def cmd_simple_points(args) -> int:
    params = _csp_params(args)
    image = _load(args.input, args.kind)
    if image.dtype == np.uint8:
        mask = topology.simple_point_map(image).astype(np.uint8)
        store_raster(mask, args.output)
    else:
        w = csp_ops.detection_operator(ring_stack(as_scalar(image)), params).value
        store_raster(w, args.output)
    return EXIT_OK


def cmd_skeletonize(args) -> int:
    image = _load(args.input, args.kind)
    binary = image.dtype == np.uint8
    if binary and args.mode in (None, HARD):
        cfg = _skel_config(args, HARD)
        result = binary_skeletonize(image, cfg)
    else:
        cfg = _skel_config(args)
        result = cspskeletonize(image.astype(np.float64), cfg)
    store_raster(result.skeleton, args.output)
    if args.report:
        pairs = [("iterations_run", result.iterations_run), ("converged", result.converged)]
        if binary:
            before = topology.topology_summary(image)
            after = topology.topology_summary(result.skeleton > 0.5)
            pairs += [
                ("input_beta0", before.beta0),
                ("input_beta1", before.beta1),
                ("input_euler", before.euler),
                ("output_beta0", after.beta0),
                ("output_beta1", after.beta1),
                ("output_euler", after.euler),
            ]
        emit_report(pairs, args.report)
    return EXIT_OK


def cmd_loss(args) -> int:
    cfg = _skel_config(args)
    pred = _load(args.pred, "scalar")
    gt = _load(args.gt, "binary")
    report = loss.csp_loss(pred, gt, cfg, args.lam)
    if args.grad:
        store_raster(loss.csp_loss_grad(pred, gt, cfg, args.lam), args.grad)
    emit_report(report.items(), args.report)
    return EXIT_OK


def cmd_tcsp(args) -> int:
    params = tcsp.TcspParams(epsilon=args.epsilon, eta=args.eta, radius=args.radius)
    cfg = _skel_config(args)
    o = _load(args.scores, "scalar")
    v = _load(args.aux, "scalar")
    u = tcsp.closed_form_solve(o, v, params, cfg)
    store_raster(u, args.output)
    if args.report:
        emit_report(
            [("epsilon", params.epsilon), ("eta", params.eta), ("radius", params.radius)],
            args.report,
        )
    return EXIT_OK


def _metric_pairs(pred_path, gt_path):
    if os.path.isdir(pred_path) and os.path.isdir(gt_path):
        names = sorted(n for n in os.listdir(gt_path) if n.lower().endswith(".pgm"))
        missing = [n for n in names if not os.path.exists(os.path.join(pred_path, n))]
        if missing:
            raise DomainError(f"no prediction for {missing[0]!r}")
        return [(os.path.join(pred_path, n), os.path.join(gt_path, n)) for n in names]
    if os.path.isdir(pred_path) or os.path.isdir(gt_path):
        raise DomainError("pred and gt must both be files or both be directories")
    return [(pred_path, gt_path)]


def cmd_metrics(args) -> int:
    cfg = _skel_config(args, HARD)
    reports = [
        metrics.evaluate(_load(p, "binary"), _load(g, "binary"), cfg)
        for p, g in _metric_pairs(args.pred, args.gt)
    ]
    if len(reports) == 1 and not os.path.isdir(args.pred):
        pairs = reports[0].items()
    else:
        pairs = [("images", len(reports))] + list(metrics.mean_report(reports).items())
    emit_report(pairs, args.report)
    return EXIT_OK


def _pattern(code: int) -> str:
    return "".join(str(b) for b in topology.ring_from_code(code))


def verification_suites(mask: bool = True):
    """Run the exhaustive 256-configuration checks.

    Returns a list of ``(name, checked, failing_codes)``.
    """
    rings = [topology.ring_from_code(c) for c in range(256)]
    numbers = [topology.topological_numbers(r) for r in rings]
    boundary = [c for c in range(256) if not topology.is_non_boundary(rings[c])]
    w = csp_ops.detection_operator(np.array(rings, dtype=np.float64)).value

    thm2 = [
        c for c in range(256)
        if topology.is_simple_by_crossing(rings[c], mask=mask) != topology.is_simple_by_definition(rings[c])
    ]
    thm1 = [
        c for c in boundary
        if (numbers[c][0] == 1 and numbers[c][1] == 1) != (numbers[c][0] == 1)
    ]
    ident = [
        c for c in boundary
        if topology.crossing_number(topology.masked_ring(rings[c]) if mask else rings[c])
        != 2 * numbers[c][0]
    ]
    consist = [
        c for c in range(256)
        if bool(w[c] > 0.5) != topology.is_simple_by_crossing(rings[c])
        or not (w[c] > 0.999 if topology.is_simple_by_crossing(rings[c]) else w[c] < 1e-4)
    ]
    return [
        ("crossing_vs_definition", 256, thm2),
        ("t4_alone_suffices", len(boundary), thm1),
        ("crossing_equals_twice_t4", len(boundary), ident),
        ("smooth_detector_binary", 256, consist),
    ]


def cmd_verify(args) -> int:
    start = time.perf_counter()
    suites = verification_suites(mask=not args.no_mask)
    ok = True
    print(f"{'suite':<28} {'checked':>7} {'failed':>6}  result")
    for name, checked, failing in suites:
        status = "PASS" if not failing else "FAIL"
        ok &= not failing
        print(f"{name:<28} {checked:>7} {len(failing):>6}  {status}")
        for code in failing:
            print(f"    ring {_pattern(code)}")
    print(f"elapsed {time.perf_counter() - start:.3f}s")
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_csp_flags(p):
    p.add_argument("--alpha", type=float, default=16.0, help="sigmoid sharpness (default 16)")
    p.add_argument("--tau", type=float, default=0.5, help="transition threshold (default 0.5)")
    p.add_argument("--sigma", type=float, default=0.2, help="Gaussian width (default 0.2)")


def _add_skel_flags(p, protect_default=True):
    _add_csp_flags(p)
    p.add_argument("--iters", type=int, default=None, help="outer iterations (default ceil(max(H, W)/2))")
    p.add_argument("--mode", choices=(SOFT, HARD), default=None)
    p.add_argument(
        "--protect-endpoints",
        action=argparse.BooleanOptionalAction,
        default=protect_default,
        help=f"keep endpoints during thinning (default {'on' if protect_default else 'off'})",
    )
    p.add_argument("--endpoint-conn", type=int, choices=(4, 8), default=8)


def _add_kind(p):
    p.add_argument("--kind", choices=("auto", "binary", "scalar"), default="auto",
                   help="override binary/scalar inference from the input file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="csptopo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simple-points", help="simple-point mask (binary) or detector map (scalar)")
    p.add_argument("input")
    p.add_argument("output")
    _add_csp_flags(p)
    _add_kind(p)
    p.set_defaults(func=cmd_simple_points)

    p = sub.add_parser("skeletonize", help="topology-preserving skeleton")
    p.add_argument("input")
    p.add_argument("output")
    _add_skel_flags(p)
    _add_kind(p)
    p.add_argument("--report", help="write a key-value sidecar here")
    p.set_defaults(func=cmd_skeletonize)

    p = sub.add_parser("loss", help="skeleton-overlap loss of a prediction")
    p.add_argument("pred")
    p.add_argument("gt")
    _add_skel_flags(p)
    p.add_argument("--lambda", dest="lam", type=float, default=loss.DEFAULT_LAMBDA)
    p.add_argument("--grad", help="write d(total)/d(pred) as PFM here")
    p.add_argument("--report", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("tcsp", help="closed-form topological refinement")
    p.add_argument("scores", help="logit map o (PFM)")
    p.add_argument("aux", help="auxiliary map v in [0, 1] (PFM)")
    p.add_argument("output")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=4.0)
    p.add_argument("--radius", type=int, default=1)
    _add_skel_flags(p, protect_default=False)
    p.add_argument("--report", help="write a key-value sidecar here")
    p.set_defaults(func=cmd_tcsp)

    p = sub.add_parser("metrics", help="overlap and topology metrics (files or directories)")
    p.add_argument("pred")
    p.add_argument("gt")
    _add_skel_flags(p)
    p.add_argument("--report", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("verify", help="exhaustive 256-configuration checks")
    p.add_argument("--no-mask", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, FormatError, OSError) as err:
        print(f"csptopo {args.command}: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as err:  # noqa: BLE001
        print(f"csptopo {args.command}: internal error: {err!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
