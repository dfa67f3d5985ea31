"""
Command-line front end.

Exit codes: 0 success, 2 usage or input error, 3 attack not applicable.

CSV headers (stable):

    sweep  axis,value,distance_m,trials,successes,success_rate
    eval   stem,success,max_iou,detections
    count  bin_index,azimuth_start_deg,azimuth_end_deg,benign_points,removed_points,removal_fraction
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .detector import DetectorParams
from .errors import ApplicabilityError, LidarSpoofError
from .evaluation import (
    DEFAULT_INTENSITY_THRESHOLD,
    DEFAULT_MATCH_TOL,
    count_injected,
    injection_success,
    iou_bev,
    removal_success,
    removed_mask,
    success_rate,
)
from .experiments import (
    AttackConfig,
    Cell,
    attacked_cloud,
    build_cells,
    cell_success_rate,
    derive_seed,
    ensure_bins,
    load_attack_config,
    run_injection,
    sweep_background,
)
from .geometry import azimuth_bin
from .pc_io import read_cloud, read_detections, write_cloud
from .profiles import builtin_profiles, load_profiles
from .removal import apply_removal
from .scenario import (
    distance_sweep,
    load_object_model,
    place_object,
    sweep_distances,
    vehicle_box,
    write_ground_truth,
)

EXIT_OK, EXIT_USAGE, EXIT_NOT_APPLICABLE = 0, 2, 3


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _profiles(args):
    if getattr(args, "profiles_file", None):
        return load_profiles(args.profiles_file)
    return builtin_profiles()


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v) -> str:
    return f"{v:g}" if isinstance(v, float) else str(v)


def _interval(fi) -> str:
    if fi is None:
        return "-"
    return f"U({fi.a:g},{fi.b:g})" if fi.kind == "uniform" else f"N({fi.a:g},{fi.b:g})"


# -- profiles ---------------------------------------------------------------

def cmd_profiles(args) -> int:
    profiles = _profiles(args)
    names = list(profiles)
    if args.name:
        if args.name not in profiles:
            raise _Fail(EXIT_USAGE, f"unknown profile {args.name!r}; known: {', '.join(names)}")
        names = [args.name]
    for n in names:
        p = profiles[n]
        print(
            f"{p.name:<8} gen={p.generation.value} mot={_fmt(p.mot)} max_range={_fmt(p.max_range)} "
            f"vfov={_fmt(p.vertical_fov)} hfov={_fmt(p.horizontal_fov)} channels={p.channels if p.channels else '-'} "
            f"rand={p.rand_model} fingerprint={'yes' if p.fingerprint else 'no'} "
            f"az_res={_fmt(p.azimuth_resolution)} simul_firing={p.simultaneous_firing} "
            f"interval_us={_interval(p.firing_interval)}"
        )
    return EXIT_OK


# -- attack -----------------------------------------------------------------

def cmd_attack(args) -> int:
    profiles = _profiles(args)
    config = load_attack_config(args.config, profiles)
    if args.profile:
        if args.profile not in profiles:
            raise _Fail(EXIT_USAGE, f"unknown profile {args.profile!r}")
        config.profile = args.profile
    seed = config.seed if args.seed is None else args.seed
    profile = profiles[config.profile]
    cloud = read_cloud(args.input)
    if config.kind == "injection":
        out = run_injection(cloud, config.injection, profile, seed)
        write_cloud(out, args.output)
        injected = int(np.count_nonzero(out.intensity >= config.injection.spoofed_intensity)) if len(out) else 0
        print(f"attack=injection profile={profile.name} seed={seed} pattern={len(cloud)} "
              f"injected={injected} output_points={len(out)}")
        return EXIT_OK
    cloud = ensure_bins(cloud, profile)
    spec = config.removal.spec(seed)
    outcome = apply_removal(cloud, spec, profile)
    write_cloud(outcome.surviving, args.output)
    frac = outcome.removed_count / outcome.hit_count if outcome.hit_count else 0.0
    print(f"attack=removal kind={spec.kind} profile={profile.name} seed={seed} input={len(cloud)} "
          f"hit={outcome.hit_count} removed={outcome.removed_count} noise={outcome.noise_count} "
          f"removed_fraction_of_hit={frac:.4f}")
    return EXIT_OK


# -- scenario ---------------------------------------------------------------

def _background(spec: str, profile_name: str):
    if spec == "synthetic":
        return sweep_background()
    cloud = read_cloud(spec)
    return ensure_bins(cloud, builtin_profiles().get(profile_name, builtin_profiles()["VLP-16"]))


def _model(spec: Optional[str]):
    if spec is None or spec == "vehicle":
        return vehicle_box()
    return load_object_model(spec)


def _stem(d: float) -> str:
    return f"dist_{d:06.2f}m"


def cmd_scenario(args) -> int:
    try:
        model = _model(args.model)
    except FileNotFoundError as exc:
        raise _Fail(EXIT_USAGE, f"model file not found: {exc}") from exc
    background = _background(args.background, args.profile or "VLP-16")
    out = Path(args.out)
    for sub in ("clouds", "gt", "patterns"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    scenarios = distance_sweep(background, model, args.d_min, args.d_max, args.step, args.nose_offset)
    for sc in scenarios:
        stem = _stem(sc.distance)
        write_cloud(sc.cloud, out / "clouds" / f"{stem}.bin")
        write_ground_truth(sc, out / "gt" / f"{stem}.json")
        write_cloud(sc.object_points, out / "patterns" / f"{stem}.bin")
        print(f"{stem} distance={sc.distance:g} points={len(sc.cloud)} object_points={int(sc.object_mask.sum())}")
    return EXIT_OK


# -- eval -------------------------------------------------------------------

def _stems(directory: Path, suffixes) -> dict:
    return {p.stem: p for p in sorted(directory.iterdir()) if p.suffix.lower() in suffixes}


def cmd_eval(args) -> int:
    clouds = _stems(Path(args.clouds), {".bin", ".pcd"})
    dets = _stems(Path(args.detections), {".json"})
    gts = _stems(Path(args.gt), {".json"})
    if not (set(clouds) == set(dets) == set(gts)):
        every = set(clouds) | set(dets) | set(gts)
        odd = sorted(s for s in every if not (s in clouds and s in dets and s in gts))
        raise _Fail(EXIT_USAGE, f"file stems do not match across directories: {', '.join(odd)}")
    if not clouds:
        raise _Fail(EXIT_USAGE, "no scenarios found")
    rows, outcomes = [], []
    for stem in sorted(clouds):
        gt_records = read_detections(gts[stem])
        if len(gt_records) != 1:
            raise _Fail(EXIT_USAGE, f"{gts[stem]}: expected exactly one ground-truth box")
        gt = gt_records[0].box
        found = read_detections(dets[stem])
        ok = injection_success(found, gt) if args.mode == "injection" else removal_success(found, gt)
        best = max((iou_bev(d.box, gt) for d in found), default=0.0)
        outcomes.append(ok)
        rows.append((stem, int(ok), f"{best:.6f}", len(found)))
    report = success_rate(outcomes)
    doc = {"mode": args.mode, **report.to_dict(), "scenarios": [r[0] for r in rows]}
    text_csv = _csv(("stem", "success", "max_iou", "detections"), rows)
    if args.out:
        Path(f"{args.out}.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        Path(f"{args.out}.csv").write_text(text_csv, encoding="utf-8")
    else:
        sys.stdout.write(text_csv)
    print(f"mode={args.mode} trials={report.trials} successes={report.successes} "
          f"success_rate={report.success_rate:.4f}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


# -- sweep ------------------------------------------------------------------

def _sweep_job(job):
    cell, scenario, trials, seed, s_idx, params = job
    return cell_success_rate(cell, scenario, trials, seed, s_idx, params)


def _external_sweep(cells: List[Cell], scenarios, trials: int, seed: int, directory: Path):
    """Directory handshake: write clouds, read detections once present."""
    for sub in ("clouds", "gt", "detections"):
        (directory / sub).mkdir(parents=True, exist_ok=True)
    pending, results = 0, []
    for cell in cells:
        for s_idx, sc in scenarios:
            wins = 0
            for t in range(trials):
                stem = f"c{cell.index:03d}_s{s_idx:03d}_t{t:04d}"
                det_path = directory / "detections" / f"{stem}.json"
                cloud_path = directory / "clouds" / f"{stem}.bin"
                if not cloud_path.exists():
                    write_cloud(attacked_cloud(cell, sc, derive_seed(seed, cell.index, s_idx, t)), cloud_path)
                    write_ground_truth(sc, directory / "gt" / f"{stem}.json")
                if not det_path.exists():
                    pending += 1
                    continue
                found = read_detections(det_path)
                ok = (injection_success if cell.kind == "injection" else removal_success)(found, sc.gt_box)
                wins += ok
            results.append((cell, sc, wins, trials))
    return pending, results


def cmd_sweep(args) -> int:
    profiles = _profiles(args)
    config: AttackConfig = load_attack_config(args.config, profiles)
    seed = config.seed if args.seed is None else args.seed
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    cells = build_cells(args.axis, values, config, profiles)
    model = _model(args.model)
    background = _background(args.background, config.profile)
    if args.axis == "distance":
        dists = sorted({float(v) for v in values})
    elif args.distances:
        dists = [float(v) for v in args.distances.split(",")]
    else:
        dists = list(sweep_distances())
    scen = {d: place_object(background, model, d) for d in dists}
    params = DetectorParams(min_points=args.min_points, cluster_radius=args.cluster_radius)

    def pairs(cell):
        if args.axis == "distance":
            d = float(cell.value)
            return [(dists.index(d), scen[d])]
        return list(enumerate(scen[d] for d in dists))

    if args.detector == "external":
        if not args.external_dir:
            raise _Fail(EXIT_USAGE, "--external-dir is required with --detector external")
        todo = [(c, p) for c in cells for p in pairs(c)]
        pending, results = 0, []
        for c, p in todo:
            n, r = _external_sweep([c], [p], args.trials, seed, Path(args.external_dir))
            pending += n
            results += r
        if pending:
            print(f"wrote attacked clouds to {args.external_dir}/clouds; waiting for {pending} "
                  f"detection file(s) in {args.external_dir}/detections", file=sys.stderr)
            return EXIT_OK
        rows = [(args.axis, _fmt(c.value), _fmt(sc.distance), t, w, f"{w / t:.4f}") for c, sc, w, t in results]
    else:
        jobs = [(c, sc, args.trials, seed, s_idx, params) for c in cells for s_idx, sc in pairs(c)]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_sweep_job, jobs))
        else:
            results = [_sweep_job(j) for j in jobs]
        rows = [(args.axis, _fmt(j[0].value), _fmt(j[1].distance), t, w, f"{w / t:.4f}")
                for j, (w, t) in zip(jobs, results)]
    _write_text(args.out, _csv(("axis", "value", "distance_m", "trials", "successes", "success_rate"), rows))
    return EXIT_OK


# -- count ------------------------------------------------------------------

def cmd_count(args) -> int:
    benign = read_cloud(args.benign)
    attacked = read_cloud(args.attacked)
    injected = count_injected(benign, attacked, args.threshold)
    gone = removed_mask(benign, attacked, args.threshold, args.match_tol)
    bins = azimuth_bin(benign.azimuths(), args.bin_deg)
    total = np.bincount(bins)
    removed = np.bincount(bins, weights=gone.astype(float), minlength=len(total)).astype(int)
    rows = [
        (int(j), f"{j * args.bin_deg:g}", f"{(j + 1) * args.bin_deg:g}", int(total[j]), int(removed[j]),
         f"{removed[j] / total[j]:.6f}")
        for j in np.nonzero(total)[0]
    ]
    text = _csv(("bin_index", "azimuth_start_deg", "azimuth_end_deg", "benign_points", "removed_points",
                 "removal_fraction"), rows)
    summary = f"injected={injected} removed={int(gone.sum())} benign={len(benign)} attacked={len(attacked)}"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(summary)
    else:
        print(summary, file=sys.stderr)
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--profiles-file", help="JSON profile overrides layered on the built-ins")
    common.add_argument("--seed", type=int, help="root seed (overrides the config)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    ap = argparse.ArgumentParser(prog="lidarspoof", description=__doc__.splitlines()[1])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profiles", parents=[common], help="list LiDAR profiles")
    p.add_argument("--name")
    p.set_defaults(func=cmd_profiles)

    p = sub.add_parser("attack", parents=[common], help="apply one attack to a cloud")
    p.add_argument("--config", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--profile")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("scenario", parents=[common], help="generate the distance-sweep scenarios")
    p.add_argument("--model", help="ASCII STL or JSON box spec (default: box vehicle)")
    p.add_argument("--background", default="synthetic", help="cloud file or 'synthetic'")
    p.add_argument("--d-min", type=float, default=0.0)
    p.add_argument("--d-max", type=float, default=14.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--nose-offset", type=float, default=0.0)
    p.add_argument("--profile")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("eval", parents=[common], help="score detections against ground truth")
    p.add_argument("--clouds", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--mode", choices=("injection", "removal"), required=True)
    p.add_argument("--out", help="output prefix; writes <prefix>.json and <prefix>.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="success-rate sweep along one axis")
    p.add_argument("--axis", choices=("rand_model", "downsample_n", "frequency", "distance"), required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--config", required=True, help="base attack config")
    p.add_argument("--detector", choices=("oracle", "external"), default="oracle")
    p.add_argument("--external-dir")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--distances", help="comma-separated scenario distances (default 0..14 m)")
    p.add_argument("--model")
    p.add_argument("--background", default="synthetic")
    p.add_argument("--min-points", type=int, default=DetectorParams.min_points)
    p.add_argument("--cluster-radius", type=float, default=DetectorParams.cluster_radius)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("count", parents=[common], help="count injected and removed points")
    p.add_argument("--benign", required=True)
    p.add_argument("--attacked", required=True)
    p.add_argument("--threshold", type=float, default=DEFAULT_INTENSITY_THRESHOLD)
    p.add_argument("--bin-deg", type=float, default=1.0)
    p.add_argument("--match-tol", type=float, default=DEFAULT_MATCH_TOL)
    p.add_argument("--out")
    p.set_defaults(func=cmd_count)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ApplicabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LidarSpoofError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
