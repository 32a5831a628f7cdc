"""Command-line surface: augment, featurize, score, report, render.

Exit codes: 0 success, 1 runtime/data failure, 2 usage or config error.

Utterances are processed by a process pool in which every utterance owns an
independent seeded stream derived from (global seed, utterance id), so the
output bytes never depend on worker count or scheduling.  Output files are
written to a temporary name and renamed into place on completion.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from . import augment as aug
from . import metrics
from .audio_io import UtteranceRecord, load_manifest, manifest_line, read_wav, wav_bytes
from .config import load_config
from .dsp import (
    DUMP_MAGIC,
    FeatureParams,
    compute_log_mel,
    read_spectrogram_dump,
    spectrogram_dump_bytes,
)
from .errors import ConfigError, SpeechAugError
from .render import ImageSpec, image_bytes
from .rng import derive_seed

AUGMENT_KINDS = ("gaussian_noise", "speed", "specaugment")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(SpeechAugError):
    """Configuration or invocation problem: maps to exit code 2."""


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + f".tmp-{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _write_atomic_text(path: Path, text: str) -> None:
    _write_atomic(path, text.encode("utf-8"))


# ---------------------------------------------------------------------------
# worker tasks (top level so they pickle into the process pool)

@dataclass(frozen=True)
class UtteranceTask:
    utterance_id: str
    in_path: str
    out_path: str
    kind: str
    spec: aug.AugmentationSpec
    params: FeatureParams
    global_seed: int
    speed_factor: float | None = None


def _run_one(task: UtteranceTask) -> dict:
    try:
        return _run_one_inner(task)
    except Exception as exc:  # report and keep the pool draining
        return {"id": task.utterance_id, "ok": False, "error": str(exc)}


def _run_one_inner(task: UtteranceTask) -> dict:
    seed = derive_seed(task.global_seed, task.utterance_id)
    result: dict = {"id": task.utterance_id, "ok": True}
    buffer = read_wav(task.in_path)

    if task.kind == "gaussian_noise":
        noisy, clip_count = aug.add_gaussian_noise(buffer, task.spec.noise_spec(seed))
        _write_atomic(Path(task.out_path), wav_bytes(noisy))
        result["clip_count"] = clip_count
        result["snr_db"] = aug.measure_snr_db(buffer, noisy)
        result["duration_s"] = noisy.duration_s
    elif task.kind == "speed":
        factor = task.speed_factor
        if factor is None:
            factor = aug.pick_speed_factor(
                task.spec.speed_spec(task.global_seed), task.utterance_id
            )
        slowed = aug.speed_perturb(buffer, factor)
        _write_atomic(Path(task.out_path), wav_bytes(slowed))
        result["factor"] = factor
        result["duration_s"] = slowed.duration_s
    elif task.kind == "specaugment":
        spec_in = compute_log_mel(buffer, task.params)
        masked = aug.spec_augment(spec_in, task.spec.specaugment_spec(seed))
        _write_atomic(Path(task.out_path), spectrogram_dump_bytes(masked))
        result["frames"] = masked.n_frames
    elif task.kind == "featurize":
        spec_out = compute_log_mel(buffer, task.params)
        _write_atomic(Path(task.out_path), spectrogram_dump_bytes(spec_out))
        result["frames"] = spec_out.n_frames
    else:
        raise UsageError(f"unknown kind {task.kind!r}")
    return result


def _run_tasks(tasks: list[UtteranceTask], workers: int) -> list[dict]:
    if workers <= 1 or len(tasks) <= 1:
        return [_run_one(t) for t in tasks]
    chunk = max(1, len(tasks) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, tasks, chunksize=chunk))


# ---------------------------------------------------------------------------
# config plumbing

def _load_sections(config_path: str | None) -> dict:
    if not config_path:
        return {}
    return load_config(config_path)


def _augmentation_spec(args, sections: dict) -> aug.AugmentationSpec:
    mapping = dict(sections.get("augment", {}))
    overrides = {
        "snr_db": args.snr_db,
        "time_warp_w": args.time_warp_w,
        "freq_mask_f": args.freq_mask_f,
        "n_freq_masks": args.n_freq_masks,
        "time_mask_t": args.time_mask_t,
        "n_time_masks": args.n_time_masks,
        "fill": args.fill,
        "seed": args.seed,
    }
    if getattr(args, "factors", None):
        overrides["factors"] = [float(f) for f in args.factors.split(",")]
    for key, value in overrides.items():
        if value is not None:
            mapping[key] = value
    return aug.AugmentationSpec.from_config_dict(mapping)


def _feature_params(args, sections: dict) -> FeatureParams:
    mapping = dict(sections.get("features", {}))
    for key in ("window_s", "hop_s", "fft_size", "n_mels", "fmin_hz", "fmax_hz",
                "floor_db"):
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    known = {f for f in FeatureParams.__dataclass_fields__}
    unknown = set(mapping) - known
    if unknown:
        raise ConfigError(f"unknown feature keys: {sorted(unknown)}")
    return FeatureParams(**mapping)


def _resolved_seed(args, spec: aug.AugmentationSpec) -> int:
    return args.seed if args.seed is not None else spec.seed


def _load_records(path: str) -> list[UtteranceRecord]:
    if not Path(path).exists():
        raise UsageError(f"manifest not found: {path}")
    return load_manifest(path)


def _guard_outputs(paths: list[Path], force: bool) -> None:
    if force:
        return
    for path in paths:
        if path.exists():
            raise UsageError(f"output {path} exists; pass --force to overwrite")


# ---------------------------------------------------------------------------
# subcommands

def _cmd_augment(args) -> int:
    sections = _load_sections(args.config)
    spec = _augmentation_spec(args, sections)
    params = _feature_params(args, sections)
    records = _load_records(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    suffix = ".melspec" if args.kind == "specaugment" else ".wav"
    out_paths = [out_dir / f"{r.id}{suffix}" for r in records]
    manifest_path = out_dir / "manifest.jsonl"
    _guard_outputs(out_paths + [manifest_path], args.force)
    for record, out_path in zip(records, out_paths):
        if record.audio_path.resolve() == out_path.resolve():
            raise UsageError(f"{record.id}: output would overwrite its input")

    global_seed = _resolved_seed(args, spec)
    tasks = [
        UtteranceTask(
            utterance_id=record.id,
            in_path=str(record.audio_path),
            out_path=str(out_path),
            kind=args.kind,
            spec=spec,
            params=params,
            global_seed=global_seed,
        )
        for record, out_path in zip(records, out_paths)
    ]
    results = _run_tasks(tasks, args.workers)

    failures = [r for r in results if not r["ok"]]
    for failure in failures:
        print(f"error: {failure['id']}: {failure['error']}", file=sys.stderr)
    if failures:
        return EXIT_FAILURE

    if args.kind != "specaugment":
        lines = []
        for record, out_path, result in zip(records, out_paths, results):
            # paths relative to the manifest keep the output tree relocatable
            lines.append(manifest_line(replace(
                record,
                audio_path=Path(out_path.name),
                duration_s=result["duration_s"],
            )))
        if args.append_original:
            for record in records:
                lines.append(manifest_line(replace(record, id=f"{record.id}#orig")))
        _write_atomic_text(manifest_path, "".join(line + "\n" for line in lines))

    if args.kind == "gaussian_noise":
        mean_snr = sum(r["snr_db"] for r in results) / len(results)
        clips = sum(r["clip_count"] for r in results)
        print(
            f"augment gaussian_noise: {len(results)} files written, "
            f"mean measured SNR {mean_snr:.2f} dB, clipped samples {clips}"
        )
    elif args.kind == "speed":
        histogram: dict[float, int] = {}
        for result in results:
            histogram[result["factor"]] = histogram.get(result["factor"], 0) + 1
        hist_text = " ".join(f"{f}:{histogram[f]}" for f in sorted(histogram))
        print(f"augment speed: {len(results)} files written, factors {hist_text}")
    else:
        print(f"augment specaugment: {len(results)} feature dumps written")
    return EXIT_OK


def _cmd_featurize(args) -> int:
    sections = _load_sections(args.config)
    params = _feature_params(args, sections)
    records = _load_records(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not records:
        print("warning: empty manifest, nothing to featurize", file=sys.stderr)
        return EXIT_OK

    out_paths = [out_dir / f"{r.id}.melspec" for r in records]
    _guard_outputs(out_paths, args.force)
    tasks = [
        UtteranceTask(
            utterance_id=record.id,
            in_path=str(record.audio_path),
            out_path=str(out_path),
            kind="featurize",
            spec=aug.AugmentationSpec(),
            params=params,
            global_seed=args.seed or 0,
        )
        for record, out_path in zip(records, out_paths)
    ]
    results = _run_tasks(tasks, args.workers)
    failures = [r for r in results if not r["ok"]]
    for failure in failures:
        print(f"error: {failure['id']}: {failure['error']}", file=sys.stderr)
    if failures:
        return EXIT_FAILURE
    print(f"featurize: {len(results)} feature dumps written")
    return EXIT_OK


def _cmd_score(args) -> int:
    sections = _load_sections(args.config)
    lowercase = bool(args.lowercase or sections.get("score", {}).get("lowercase", False))
    records = _load_records(args.manifest)
    if not Path(args.hyp).exists():
        raise UsageError(f"hypothesis file not found: {args.hyp}")
    hyps = metrics.load_hypotheses(args.hyp)
    pairs = metrics.join_hypotheses(records, hyps)
    report = metrics.score_corpus(pairs, lowercase=lowercase)
    if args.out:
        _write_atomic_text(Path(args.out), metrics.report_json(report) + "\n")
    print(f"{report.error_rate_percent:.2f}")
    return EXIT_OK


def _parse_report_entry(entry: str) -> tuple[str, str, str]:
    parts = entry.split(",", 2)
    if len(parts) != 3:
        raise UsageError(
            f"report entry {entry!r} must be SYSTEM,TESTSET,PATH"
        )
    return parts[0], parts[1], parts[2]


def _cmd_report(args) -> int:
    rows: dict[tuple[str, str], float] = {}
    for entry in args.entries:
        system, test_set, path = _parse_report_entry(entry)
        if (system, test_set) in rows:
            raise UsageError(f"duplicate report cell ({system}, {test_set})")
        if not Path(path).exists():
            raise UsageError(f"report not found: {path}")
        rows[(system, test_set)] = metrics.load_report_rate(path)
    table = metrics.format_results_table(rows)
    if args.out:
        _write_atomic_text(Path(args.out), table + "\n")
    print(table)
    return EXIT_OK


def _parse_db_range(text: str | None) -> tuple[float, float] | None:
    if text is None:
        return None
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError("--db-range must look like LO:HI")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError("--db-range must hold two numbers") from None
    return lo, hi


def _load_render_input(path: Path):
    if not path.exists():
        raise UsageError(f"input not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == DUMP_MAGIC:
        return read_spectrogram_dump(path), None
    return None, read_wav(path)


def _cmd_render(args) -> int:
    sections = _load_sections(args.config)
    params = _feature_params(args, sections)
    db_range = _parse_db_range(args.db_range)
    in_path = Path(args.input)
    dump_spec, buffer = _load_render_input(in_path)

    if not args.compare:
        if not args.out:
            raise UsageError("render needs --out (or --compare with --out-dir)")
        spec = dump_spec if dump_spec is not None else compute_log_mel(buffer, params)
        out = Path(args.out)
        _guard_outputs([out], args.force)
        image_spec = ImageSpec(format=args.format, gamma=args.gamma, db_range=db_range)
        _write_atomic(out, image_bytes(spec, image_spec))
        print(f"render: wrote {out}")
        return EXIT_OK

    if buffer is None:
        raise UsageError("--compare needs a WAV input, not a feature dump")
    if not args.out_dir:
        raise UsageError("--compare needs --out-dir")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = ("original", "specaugment", "speed", "noise")
    out_paths = {name: out_dir / f"{name}.{args.format}" for name in names}
    _guard_outputs(list(out_paths.values()), args.force)

    aug_spec = _augmentation_spec(args, sections)
    global_seed = _resolved_seed(args, aug_spec)
    seed = derive_seed(global_seed, in_path.stem)

    original = compute_log_mel(buffer, params)
    masked = aug.spec_augment(original, aug_spec.specaugment_spec(seed))
    factor = args.speed_factor
    if factor is None:
        factor = aug.pick_speed_factor(aug_spec.speed_spec(global_seed), in_path.stem)
    speed = compute_log_mel(aug.speed_perturb(buffer, factor), params)
    noisy, _ = aug.add_gaussian_noise(buffer, aug_spec.noise_spec(seed))
    noise = compute_log_mel(noisy, params)

    # one shared range so the four panels are visually comparable
    if db_range is None:
        db_range = (float(original.values.min()), float(original.values.max()))
        if db_range[0] >= db_range[1]:
            db_range = (db_range[0], db_range[0] + 1.0)
    image_spec = ImageSpec(format=args.format, gamma=args.gamma, db_range=db_range)

    panels = {"original": original, "specaugment": masked, "speed": speed,
              "noise": noise}
    for name in names:
        _write_atomic(out_paths[name], image_bytes(panels[name], image_spec))
    print(f"render: wrote {len(names)} panels to {out_dir} (speed factor {factor})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="global seed")
    common.add_argument("--workers", type=int, default=1, help="parallel workers")
    common.add_argument("--config", default=None, help="config file path")
    common.add_argument("--force", action="store_true",
                        help="overwrite existing outputs")

    features = argparse.ArgumentParser(add_help=False)
    features.add_argument("--window-s", dest="window_s", type=float, default=None)
    features.add_argument("--hop-s", dest="hop_s", type=float, default=None)
    features.add_argument("--fft-size", dest="fft_size", type=int, default=None)
    features.add_argument("--n-mels", dest="n_mels", type=int, default=None)
    features.add_argument("--fmin-hz", dest="fmin_hz", type=float, default=None)
    features.add_argument("--fmax-hz", dest="fmax_hz", type=float, default=None)
    features.add_argument("--floor-db", dest="floor_db", type=float, default=None)

    augment_params = argparse.ArgumentParser(add_help=False)
    augment_params.add_argument("--snr-db", dest="snr_db", type=float, default=None)
    augment_params.add_argument("--factors", default=None,
                                help="comma-separated speed factors")
    augment_params.add_argument("--time-warp-w", dest="time_warp_w", type=int,
                                default=None)
    augment_params.add_argument("--freq-mask-f", dest="freq_mask_f", type=int,
                                default=None)
    augment_params.add_argument("--n-freq-masks", dest="n_freq_masks", type=int,
                                default=None)
    augment_params.add_argument("--time-mask-t", dest="time_mask_t", type=int,
                                default=None)
    augment_params.add_argument("--n-time-masks", dest="n_time_masks", type=int,
                                default=None)
    augment_params.add_argument("--fill", choices=aug.FILL_MODES, default=None)

    parser = argparse.ArgumentParser(
        prog="speechaug",
        description="Deterministic speech augmentation, features, and scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_aug = sub.add_parser("augment", parents=[common, augment_params, features],
                           help="augment a corpus of WAV files")
    p_aug.add_argument("--manifest", required=True)
    p_aug.add_argument("--out-dir", required=True)
    p_aug.add_argument("--kind", required=True, choices=AUGMENT_KINDS)
    p_aug.add_argument("--append-original", action="store_true",
                       help="also list the original files in the output manifest")
    p_aug.set_defaults(func=_cmd_augment)

    p_feat = sub.add_parser("featurize", parents=[common, features],
                            help="extract log mel feature dumps")
    p_feat.add_argument("--manifest", required=True)
    p_feat.add_argument("--out-dir", required=True)
    p_feat.set_defaults(func=_cmd_featurize)

    p_score = sub.add_parser("score", parents=[common],
                             help="score hypotheses against a manifest")
    p_score.add_argument("--manifest", required=True)
    p_score.add_argument("--hyp", required=True)
    p_score.add_argument("--out", default=None, help="write report JSON here")
    p_score.add_argument("--lowercase", action="store_true",
                         help="lowercase tokens before comparing")
    p_score.set_defaults(func=_cmd_score)

    p_rep = sub.add_parser("report", parents=[common],
                           help="tabulate score reports")
    p_rep.add_argument("entries", nargs="+",
                       help="one SYSTEM,TESTSET,PATH per score report")
    p_rep.add_argument("--out", default=None)
    p_rep.set_defaults(func=_cmd_report)

    p_ren = sub.add_parser("render", parents=[common, augment_params, features],
                           help="render spectrogram images")
    p_ren.add_argument("input", help="WAV file or feature dump")
    p_ren.add_argument("--out", default=None, help="output image path")
    p_ren.add_argument("--out-dir", default=None, help="panel directory for --compare")
    p_ren.add_argument("--compare", action="store_true",
                       help="write original/specaugment/speed/noise panels")
    p_ren.add_argument("--format", choices=("pgm", "png"), default="pgm")
    p_ren.add_argument("--gamma", type=float, default=1.0)
    p_ren.add_argument("--db-range", default=None, help="LO:HI in dB")
    p_ren.add_argument("--speed-factor", type=float, default=None)
    p_ren.set_defaults(func=_cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpeechAugError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
