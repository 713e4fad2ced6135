"""Command-line surface for batch pipelines.

Subcommands: ``criticals``, ``loss``, ``metrics voxel``, ``metrics
skeleton``, and ``affinity encode/decode/loss``. Grids and probability
fields travel in the array container of :mod:`svtopo.arrayio`; reports are
JSON with a fixed key order and a single volatile ``timing`` key, written
atomically (temp file + rename).

Exit codes: 0 success, 2 usage/IO/validation errors, 3 empty input (a
skeleton directory with no parseable SWC file).
"""

import argparse
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from svtopo.affinity import (
    affinity_channel_losses,
    decode_affinities,
    encode_affinities,
)
from svtopo.arrayio import (
    _write_raw,
    read_affinity_field,
    read_array,
    write_affinity_field,
    write_array,
)
from svtopo.criticals import detect_criticals, oracle_global, oracle_local
from svtopo.grid import Connectivity, LabeledGrid
from svtopo.loss import (
    LossParams,
    ProbabilityField,
    loss_gradient,
    supervoxel_loss,
    weight_map,
)
from svtopo.skeleton_metrics import evaluate_skeletons, load_swc
from svtopo.voxel_metrics import voxel_metrics

FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_EMPTY = 3

_BASE_NAMES = {"ce": "cross_entropy", "dice": "soft_dice"}


class EmptyInputError(Exception):
    pass


def _write_report(path, report):
    """Atomic JSON write: the report lands complete or not at all."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(report, indent=2) + "\n"
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _load_grid(path):
    value = read_array(path)
    if isinstance(value, ProbabilityField):
        raise ValueError(f"{path} holds probabilities, expected integer labels")
    return value


def _load_probs(path):
    value = read_array(path)
    if isinstance(value, LabeledGrid):
        raise ValueError(f"{path} holds integer labels, expected f32 probabilities")
    return value


def _component_entry(comp):
    return {
        "polarity": comp.polarity,
        "condition": comp.condition,
        "parent_component": comp.parent_component,
        "size": int(comp.voxels.size),
        "voxels": comp.voxels.tolist(),
    }


def _criticals_report(report, conn, detector, elapsed_ms):
    counts = report.counts()
    return {
        "format_version": FORMAT_VERSION,
        "kind": "criticals",
        "detector": detector,
        "connectivity": int(conn),
        "shape": list(report.shape),
        "negative": {
            "count": counts["negative"]["total"],
            "condition_1": counts["negative"]["condition_1"],
            "condition_2": counts["negative"]["condition_2"],
            "components": [_component_entry(c) for c in report.negative],
        },
        "positive": {
            "count": counts["positive"]["total"],
            "condition_1": counts["positive"]["condition_1"],
            "condition_2": counts["positive"]["condition_2"],
            "components": [_component_entry(c) for c in report.positive],
        },
        "timing": {"wall_clock_ms": elapsed_ms},
    }


def cmd_criticals(args):
    gt = _load_grid(args.gt)
    pred = _load_grid(args.pred)
    conn = Connectivity(args.connectivity)
    detectors = {
        None: ("fast", detect_criticals),
        "global": ("oracle-global", oracle_global),
        "local": ("oracle-local", oracle_local),
    }
    name, detector = detectors[args.oracle]
    start = time.perf_counter()
    report = detector(gt, pred, conn)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    _write_report(args.out, _criticals_report(report, conn, name, elapsed_ms))
    print(
        f"criticals: {len(report.negative)} negative, "
        f"{len(report.positive)} positive ({elapsed_ms:.1f} ms)"
    )
    return EXIT_OK


def cmd_loss(args):
    gt = _load_grid(args.gt)
    probs = _load_probs(args.pred_probs)
    params = LossParams(
        alpha=args.alpha,
        beta=args.beta,
        threshold=args.threshold,
        base=_BASE_NAMES[args.base],
    )
    conn = Connectivity(args.connectivity)
    value, report = supervoxel_loss(gt, probs, params, conn)
    if args.emit_weights:
        weights = weight_map(report, params, gt.shape).weights
        _write_raw(weights, "f32", Path(args.emit_weights), None, {"kind": "weights"})
    if args.emit_grad:
        grad = loss_gradient(gt, probs, params, conn)
        _write_raw(grad, "f32", Path(args.emit_grad), None, {"kind": "gradient"})
    if args.out:
        counts = report.counts()
        _write_report(
            args.out,
            {
                "format_version": FORMAT_VERSION,
                "kind": "loss",
                "loss": value,
                "alpha": params.alpha,
                "beta": params.beta,
                "threshold": params.threshold,
                "base": params.base,
                "connectivity": int(conn),
                "negative": counts["negative"],
                "positive": counts["positive"],
            },
        )
    print(repr(value))
    return EXIT_OK


def cmd_metrics_voxel(args):
    gt = _load_grid(args.gt)
    pred = _load_grid(args.pred)
    conn = Connectivity(args.connectivity)
    report = voxel_metrics(gt, pred, conn)
    out = {
        "format_version": FORMAT_VERSION,
        "kind": "voxel-metrics",
        "accuracy": report.accuracy,
        "dice": report.dice,
        "ari": report.ari,
        "voi": report.voi,
        "betti0_error": report.betti0_error,
    }
    if args.out:
        _write_report(args.out, out)
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _parse_voxel_size(text):
    parts = [float(v) for v in text.split(",")]
    if len(parts) == 1:
        return (parts[0],) * 3
    if len(parts) != 3:
        raise ValueError(f"voxel size must be 1 or 3 comma-separated values: {text!r}")
    return tuple(parts)


def cmd_metrics_skeleton(args):
    pred = _load_grid(args.pred)
    voxel_size = _parse_voxel_size(args.voxel_size)
    swc_dir = Path(args.swc_dir)
    if not swc_dir.is_dir():
        raise ValueError(f"{swc_dir} is not a directory")
    skeletons = []
    failures = []
    for path in sorted(swc_dir.glob("*.swc")):
        try:
            skeletons.append(
                load_swc(path.read_text(), voxel_size=voxel_size, name=path.stem)
            )
        except ValueError as exc:
            failures.append(str(exc))
    if not skeletons:
        for failure in failures:
            print(failure, file=sys.stderr)
        raise EmptyInputError(f"no parseable SWC files in {swc_dir}")

    result = evaluate_skeletons(skeletons, pred)
    out = {
        "format_version": FORMAT_VERSION,
        "kind": "skeleton-metrics",
        "splits_per_neuron": result.splits_per_neuron,
        "pct_omit": result.pct_omit,
        "pct_merged": result.pct_merged,
        "edge_accuracy": result.edge_accuracy,
        "normalized_erl": result.normalized_erl,
        "per_skeleton": [
            {
                "name": s.name,
                "n_edges": s.n_edges,
                "splits": s.splits,
                "omit_edges": s.omit_edges,
                "merged_edges": s.merged_edges,
                "erl": s.erl,
                "normalized_erl": s.normalized_erl,
            }
            for s in result.per_skeleton
        ],
    }
    if args.out:
        _write_report(args.out, out)
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_affinity_encode(args):
    grid = _load_grid(args.labels)
    conn = Connectivity(args.connectivity)
    aff = encode_affinities(grid, conn)
    write_affinity_field(aff, args.out)
    print(f"encoded {aff.n_channels} channels over shape {aff.grid_shape}")
    return EXIT_OK


def cmd_affinity_decode(args):
    aff = read_affinity_field(args.aff)
    labeling = decode_affinities(aff, args.threshold)
    write_array(LabeledGrid(labeling.component_ids), args.out)
    print(f"decoded {labeling.count} components")
    return EXIT_OK


def cmd_affinity_loss(args):
    gt_aff = read_affinity_field(args.gt_aff)
    pred_aff = read_affinity_field(args.pred_aff)
    params = LossParams(
        alpha=args.alpha,
        beta=args.beta,
        threshold=args.threshold,
        base=_BASE_NAMES[args.base],
    )
    losses = affinity_channel_losses(gt_aff, pred_aff, params)
    for index, value in enumerate(losses):
        print(f"channel {index}: {value!r}")
    print(repr(float(sum(losses))))
    return EXIT_OK


def _add_loss_params(parser):
    parser.add_argument("--alpha", type=float, default=0.5)
    parser.add_argument("--beta", type=float, default=0.5)
    parser.add_argument("--threshold", type=float, default=0.5)
    parser.add_argument("--base", choices=sorted(_BASE_NAMES), default="ce")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="svtopo",
        description="Critical-supervoxel detection, topological loss, and "
        "segmentation evaluation on labeled grids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    crit = sub.add_parser("criticals", help="detect critical components")
    crit.add_argument("--gt", required=True, help="ground-truth array header")
    crit.add_argument("--pred", required=True, help="prediction array header")
    crit.add_argument(
        "--connectivity", type=int, required=True, choices=[4, 6, 8, 18, 26]
    )
    crit.add_argument("--out", required=True, help="report path (JSON)")
    crit.add_argument(
        "--oracle",
        choices=["global", "local"],
        default=None,
        help="run a reference detector instead of the fast path",
    )
    crit.set_defaults(func=cmd_criticals)

    loss = sub.add_parser("loss", help="evaluate the topological loss")
    loss.add_argument("--gt", required=True)
    loss.add_argument("--pred-probs", required=True)
    loss.add_argument(
        "--connectivity", type=int, required=True, choices=[4, 6, 8, 18, 26]
    )
    _add_loss_params(loss)
    loss.add_argument("--emit-weights", default=None)
    loss.add_argument("--emit-grad", default=None)
    loss.add_argument("--out", default=None)
    loss.set_defaults(func=cmd_loss)

    metrics = sub.add_parser("metrics", help="evaluate a segmentation")
    metrics_sub = metrics.add_subparsers(dest="metrics_kind", required=True)

    voxel = metrics_sub.add_parser("voxel", help="voxel-based metrics")
    voxel.add_argument("--gt", required=True)
    voxel.add_argument("--pred", required=True)
    voxel.add_argument(
        "--connectivity", type=int, required=True, choices=[4, 6, 8, 18, 26]
    )
    voxel.add_argument("--out", default=None)
    voxel.set_defaults(func=cmd_metrics_voxel)

    skeleton = metrics_sub.add_parser("skeleton", help="skeleton-based metrics")
    skeleton.add_argument("--swc-dir", required=True)
    skeleton.add_argument("--pred", required=True)
    skeleton.add_argument("--voxel-size", default="1,1,1")
    skeleton.add_argument("--out", default=None)
    skeleton.set_defaults(func=cmd_metrics_skeleton)

    affinity = sub.add_parser("affinity", help="affinity-channel operations")
    affinity_sub = affinity.add_subparsers(dest="affinity_kind", required=True)

    encode = affinity_sub.add_parser("encode")
    encode.add_argument("--labels", required=True)
    encode.add_argument(
        "--connectivity", type=int, required=True, choices=[4, 6, 8, 18, 26]
    )
    encode.add_argument("--out", required=True)
    encode.set_defaults(func=cmd_affinity_encode)

    decode = affinity_sub.add_parser("decode")
    decode.add_argument("--aff", required=True)
    decode.add_argument("--threshold", type=float, default=0.5)
    decode.add_argument("--out", required=True)
    decode.set_defaults(func=cmd_affinity_decode)

    aff_loss = affinity_sub.add_parser("loss")
    aff_loss.add_argument("--gt-aff", required=True)
    aff_loss.add_argument("--pred-aff", required=True)
    _add_loss_params(aff_loss)
    aff_loss.set_defaults(func=cmd_affinity_loss)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EmptyInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
