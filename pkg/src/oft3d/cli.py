"""
Command-line entry point.

    oft3d enhance in.json out.json --epsilon 4.5 --mode no-mean-align
    oft3d synth data/curve --dims 96 96 96 --seed 7
    oft3d threshold out.json seg.json --percentile 99.5
    oft3d skeleton-denoise graph.json clean.json --distance 3
    oft3d info out.json
    oft3d bench --size 64 --directions 48 --epsilon 6
    oft3d replay out.manifest.json

Every command that writes volumes also writes ``<output>.manifest.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import oft3d
from oft3d import postprocess, synth
from oft3d._parallel import THREADS_ENV, default_threads, set_threads
from oft3d.directions import directions_for
from oft3d.transform import CombineMode, PipelineConfig, run_pipeline
from oft3d.volume import Volume, read_volume, volume_stats, write_pgm, write_volume

logger = logging.getLogger("oft3d")


def manifest_path(output) -> Path:
    out = Path(output)
    if out.suffix in (".json", ".raw"):
        out = out.with_suffix("")
    return out.with_name(out.name + ".manifest.json")


def write_manifest(output, command: str, args: dict, timings: dict | None = None, **extra) -> Path:
    doc = {
        "tool": "oft3d",
        "version": oft3d.__version__,
        "command": command,
        "args": args,
        "timings_s": timings or {},
    }
    doc.update(extra)
    path = manifest_path(output)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _enhance_args(ns) -> dict:
    return {
        "input": str(ns.input),
        "output": str(ns.output),
        "epsilon": ns.epsilon,
        "directions": ns.directions,
        "mode": CombineMode.parse(ns.mode).value,
        "step": ns.step,
        "invert": ns.invert,
        "normalize": ns.normalize,
        "debug_measures": ns.debug_measures,
        "pgm": ns.pgm,
    }


def cmd_enhance(ns) -> int:
    n_threads = set_threads(ns.threads)
    vol = read_volume(ns.input)
    cfg = PipelineConfig(
        epsilon=ns.epsilon,
        k_directions=ns.directions,
        mode=ns.mode,
        step_hint=ns.step,
        invert=ns.invert,
        normalize_output=ns.normalize,
    )
    timings: dict = {}
    enhanced, stack = run_pipeline(vol, cfg, n_threads=n_threads, timings=timings)
    write_volume(enhanced, ns.output)
    outputs = [str(Path(ns.output))]
    if ns.debug_measures:
        base = Path(ns.output).with_suffix("")
        for name, w in stack.items():
            p = base.with_name(f"{base.name}.{name}")
            write_volume(w, p)
            outputs.append(str(p.with_suffix(".json")))
    if ns.pgm:
        write_pgm(enhanced, ns.pgm)
        outputs.append(str(ns.pgm))
    write_manifest(
        ns.output, "enhance", _enhance_args(ns), timings,
        config=cfg.to_dict(), threads=n_threads, outputs=outputs,
    )
    print(f"wrote {ns.output} ({enhanced.dims[0]}x{enhanced.dims[1]}x{enhanced.dims[2]})")
    return 0


def _synth_args(ns) -> dict:
    return {
        "output": str(ns.output),
        "dims": list(ns.dims),
        "amplitude": ns.amplitude,
        "thickness": ns.thickness,
        "sigma": ns.sigma,
        "density": ns.density,
        "clutter_radius": ns.clutter_radius,
        "seed": ns.seed,
        "two_d": ns.two_d,
    }


def cmd_synth(ns) -> int:
    dims = tuple(ns.dims)
    if ns.two_d:
        dims = dims[:2] + (1,)
    params = synth.SynthParams(
        dims=dims,
        curve_amplitude=ns.amplitude,
        curve_thickness=ns.thickness,
        noise_sigma=ns.sigma,
        clutter_density=ns.density,
        clutter_radius=ns.clutter_radius,
        seed=ns.seed,
    )
    make = synth.make_curve_image_2d if ns.two_d else synth.make_curve_volume
    vol, truth = make(params)
    header, raw = write_volume(vol, ns.output)
    truth_raw = header.with_suffix(".truth.raw")
    truth.data.astype("<f4").tofile(truth_raw)
    write_manifest(ns.output, "synth", _synth_args(ns), seed=ns.seed,
                   outputs=[str(header), str(raw), str(truth_raw)])
    print(f"wrote {header} and {truth_raw}")
    return 0


def cmd_threshold(ns) -> int:
    vol = read_volume(ns.input)
    if ns.normalize_slices is not None:
        target = ns.normalize_slices
        vol = postprocess.normalize_slice_median(vol, "auto" if target == "auto" else float(target))
    if ns.percentile is not None:
        out, t = postprocess.percentile_threshold(vol, ns.percentile)
    else:
        t = ns.t
        out = postprocess.threshold(vol, t)
    write_volume(out, ns.output)
    args = {
        "input": str(ns.input), "output": str(ns.output), "t": ns.t,
        "percentile": ns.percentile, "normalize_slices": ns.normalize_slices,
    }
    write_manifest(ns.output, "threshold", args, threshold=t)
    print(f"threshold {t:.6g}: {int(out.data.sum())} of {out.data.size} voxels set")
    return 0


def cmd_skeleton_denoise(ns) -> int:
    g = postprocess.read_graph(ns.input)
    merged = postprocess.merge_skeleton_nodes(g, ns.distance)
    postprocess.write_graph(merged, ns.output)
    outputs = [str(ns.output)]
    if ns.rasterize:
        if ns.dims is None:
            raise ValueError("--rasterize needs --dims")
        write_volume(postprocess.rasterize_skeleton(merged, ns.dims), ns.rasterize)
        outputs.append(str(ns.rasterize))
    args = {"input": str(ns.input), "output": str(ns.output), "distance": ns.distance,
            "rasterize": ns.rasterize, "dims": ns.dims}
    write_manifest(ns.output, "skeleton-denoise", args, outputs=outputs)
    print(f"{len(g.nodes)} nodes -> {len(merged.nodes)} nodes, {len(merged.edges)} edges")
    return 0


def cmd_info(ns) -> int:
    print(json.dumps(volume_stats(read_volume(ns.input)), sort_keys=True, indent=2))
    return 0


def cmd_bench(ns) -> int:
    n_threads = set_threads(ns.threads)
    n = ns.size
    dims = (n, n, 1) if ns.two_d else (n, n, n)
    vol, _ = (synth.make_curve_image_2d if ns.two_d else synth.make_curve_volume)(
        synth.SynthParams(dims=dims, seed=ns.seed)
    )
    cfg = PipelineConfig(epsilon=ns.epsilon, k_directions=ns.directions, mode=ns.mode)
    if not ns.no_warmup:
        run_pipeline(Volume(vol.data[: min(4, vol.data.shape[0]), :8, :8]), cfg, n_threads=n_threads)
    timings: dict = {}
    t0 = time.perf_counter()
    run_pipeline(vol, cfg, n_threads=n_threads, timings=timings)
    total = time.perf_counter() - t0
    voxels = math.prod(vol.dims)
    k = len(directions_for(vol.ndim, ns.directions))
    print(f"volume {dims[0]}x{dims[1]}x{dims[2]}  K={k}  epsilon={ns.epsilon}  threads={n_threads}")
    sweep_of = {"w1": "line_sweep", "w3": "line_sweep", "w5": "line_sweep",
                "w2": "alignment_sweep", "w4": "alignment_sweep", "w6": "alignment_sweep"}
    labels = {"w1": "max line integral", "w2": "max alignment integral",
              "w3": "mean line integral", "w4": "mean alignment integral",
              "w5": "line integral deviation", "w6": "alignment integral deviation"}
    for name in ("w1", "w2", "w3", "w4", "w5", "w6"):
        sec = timings[sweep_of[name]]
        print(f"  {name} {labels[name]:<30s} {sweep_of[name]:<16s} {sec:8.2f} s  {voxels / sec:12.0f} vox/s")
    print(f"  {'combine':<33s} {'':<16s} {timings['combine']:8.2f} s  {voxels / max(timings['combine'], 1e-9):12.0f} vox/s")
    print(f"  {'total':<33s} {'':<16s} {total:8.2f} s  {voxels / total:12.0f} vox/s")
    return 0


def cmd_replay(ns) -> int:
    doc = json.loads(Path(ns.manifest).read_text(encoding="utf-8"))
    cmd = doc["command"]
    a = doc["args"]
    argv = [cmd]
    if cmd == "enhance":
        argv += [a["input"], a["output"], "--epsilon", repr(a["epsilon"]), "--mode", a["mode"],
                 "--step", repr(a["step"])]
        if a["directions"] is not None:
            argv += ["--directions", str(a["directions"])]
        argv += [flag for flag, on in (("--invert", a["invert"]), ("--normalize", a["normalize"]),
                                        ("--debug-measures", a["debug_measures"])) if on]
        if a.get("pgm"):
            argv += ["--pgm", a["pgm"]]
    elif cmd == "synth":
        argv += [a["output"], "--dims", *map(str, a["dims"]), "--thickness", repr(a["thickness"]),
                 "--sigma", repr(a["sigma"]), "--density", repr(a["density"]),
                 "--clutter-radius", repr(a["clutter_radius"]), "--seed", str(a["seed"])]
        if a["amplitude"] is not None:
            argv += ["--amplitude", repr(a["amplitude"])]
        if a["two_d"]:
            argv.append("--2d")
    elif cmd == "threshold":
        argv += [a["input"], a["output"]]
        argv += ["--percentile", repr(a["percentile"])] if a["percentile"] is not None else ["--t", repr(a["t"])]
        if a["normalize_slices"] is not None:
            argv += ["--normalize-slices", a["normalize_slices"]]
    elif cmd == "skeleton-denoise":
        argv += [a["input"], a["output"], "--distance", repr(a["distance"])]
        if a["rasterize"]:
            argv += ["--rasterize", a["rasterize"], "--dims", *map(str, a["dims"])]
    else:
        raise ValueError(f"cannot replay command {cmd!r}")
    return main(argv)


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oft3d", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"oft3d {oft3d.__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    threads_help = f"worker threads (default: ${THREADS_ENV} or all cores); output is independent of it"

    p = sub.add_parser("enhance", help="run the orientation field transform")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--epsilon", type=float, required=True,
                   help="path length in voxels; about 1.5x the curve thickness")
    p.add_argument("--directions", type=int, default=None,
                   help="direction count (default 36 in 2D, 96 in 3D)")
    p.add_argument("--mode", default="all", choices=[m.value for m in CombineMode])
    p.add_argument("--step", type=float, default=1.0, help="sample spacing along paths, voxels")
    p.add_argument("--invert", action="store_true", help="curves are dark on a bright background")
    p.add_argument("--normalize", action="store_true", help="min-max scale output to [0, 1]")
    p.add_argument("--threads", type=int, default=None, help=threads_help)
    p.add_argument("--debug-measures", action="store_true", help="also write the six measure volumes")
    p.add_argument("--pgm", default=None, help="also export the middle z-slice as PGM")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("synth", help="generate a synthetic curve volume with ground truth")
    p.add_argument("output")
    p.add_argument("--dims", type=int, nargs="+", default=[96, 96, 96])
    p.add_argument("--amplitude", type=float, default=None)
    p.add_argument("--thickness", type=float, default=3.0)
    p.add_argument("--sigma", type=float, default=0.25)
    p.add_argument("--density", type=float, default=0.02)
    p.add_argument("--clutter-radius", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--2d", dest="two_d", action="store_true", help="2D image instead of a volume")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("threshold", help="hard thresholding")
    p.add_argument("input")
    p.add_argument("output")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--t", type=float, help="absolute threshold")
    g.add_argument("--percentile", type=float, help="threshold at this percentile of the input")
    p.add_argument("--normalize-slices", nargs="?", const="auto", default=None, metavar="TARGET",
                   help="first scale each z-slice to a common median (number or 'auto')")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("skeleton-denoise", help="merge close skeleton nodes and re-rasterize")
    p.add_argument("input", help="skeleton graph JSON")
    p.add_argument("output", help="merged graph JSON")
    p.add_argument("--distance", type=float, required=True, help="merge distance, voxels")
    p.add_argument("--rasterize", default=None, help="write a Bresenham rasterization to this volume")
    p.add_argument("--dims", type=int, nargs=3, default=None, metavar=("NX", "NY", "NZ"))
    p.set_defaults(func=cmd_skeleton_denoise)

    p = sub.add_parser("info", help="print volume statistics")
    p.add_argument("input")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("bench", help="time the pipeline stages on a synthetic volume")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--directions", type=int, default=48)
    p.add_argument("--epsilon", type=float, default=6.0)
    p.add_argument("--mode", default="all", choices=[m.value for m in CombineMode])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--2d", dest="two_d", action="store_true")
    p.add_argument("--threads", type=int, default=None, help=threads_help)
    p.add_argument("--no-warmup", action="store_true", help="include JIT compilation in the timing")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(ns, "threads", None) is None and hasattr(ns, "threads"):
        ns.threads = default_threads()
    try:
        return ns.func(ns)
    except (OSError, ValueError, KeyError) as exc:
        print(f"oft3d {ns.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
