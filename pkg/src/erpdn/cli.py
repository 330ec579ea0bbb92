"""Command-line entry points.

Subcommands cover the whole toolchain: scene synthesis, feature extraction,
primitive clustering, affinity training, plan recognition, attention-map
generation, end-to-end training, evaluation, and map export.  Every command
is deterministic given its seed; report paths write matplotlib PNG figures
next to the delimited JSON-lines output.  Exit codes: 0 success, 1 usage
error, 2 data error.  PDN_LOG={error|info|debug} controls verbosity.
"""

import argparse
import concurrent.futures
import json
import logging
import os
import sys

import numpy as np

from . import amp as amp_mod
from . import fileformats, pipeline, planrec, report
from . import pdn as pdn_mod
from . import synth as synth_mod
from .config import load_config, save_config
from .features import FeatureParams, VideoTube, save_feature_sequence, tube_features
from .numerics import make_rng

log = logging.getLogger("erpdn")

USAGE_ERROR = 1
DATA_ERROR = 2


def _setup_logging():
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("PDN_LOG", "error").lower(), logging.ERROR
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _add_common(parser):
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--seed", type=int, help="master seed (overrides config)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--threads", type=int, help="worker cap for per-sample steps")


def _config_from(args, **extra):
    overrides = {"seed": getattr(args, "seed", None), "threads": getattr(args, "threads", None)}
    overrides.update(extra)
    return load_config(args.config, overrides)


def _mapper(threads):
    if threads > 1:
        pool = concurrent.futures.ThreadPoolExecutor(max_workers=threads)
        return lambda fn, items: list(pool.map(fn, items))
    return lambda fn, items: [fn(x) for x in items]


def _write_jsonl(path, records):
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True))
            fh.write("\n")


# --- model directory layout ---------------------------------------------------

def _save_models(models, directory):
    os.makedirs(directory, exist_ok=True)
    amp_mod.save_library(
        models.lib,
        os.path.join(directory, "amp_library.json"),
        os.path.join(directory, "amp_library.pdnt"),
    )
    planrec.save_model(
        models.affinity,
        os.path.join(directory, "affinity.json"),
        os.path.join(directory, "affinity_in.pdnt"),
        os.path.join(directory, "affinity_out.pdnt"),
    )
    pdn_mod.save_params(models.pdn, directory)


def _load_models(directory, config, require_pdn=True):
    lib = amp_mod.load_library(
        os.path.join(directory, "amp_library.json"),
        os.path.join(directory, "amp_library.pdnt"),
    )
    affinity = planrec.load_model(
        os.path.join(directory, "affinity.json"),
        os.path.join(directory, "affinity_in.pdnt"),
        os.path.join(directory, "affinity_out.pdnt"),
    )
    if os.path.exists(os.path.join(directory, "pdn.json")):
        params = pdn_mod.load_params(directory)
    elif require_pdn:
        raise FileNotFoundError(f"{directory}: missing pdn parameter bundle")
    else:
        params = pdn_mod.PdnParams.init(
            make_rng(config.seed + 3), config.n, lib.centroids.shape[1],
            hidden=config.lstm_hidden, pool_k=config.pool_k,
            enc_dim=config.enc_dim, acf_size=config.acf_size,
        )
    return pipeline.Models(lib, affinity, params)


# --- subcommands ----------------------------------------------------------------

def cmd_synth(args):
    config = _config_from(args, scene_count=args.count)
    samples = synth_mod.synth_generate(config.scene_config(), seed=config.seed)
    synth_mod.save_dataset(samples, args.out)
    save_config(config, os.path.join(args.out, "config.json"))
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def cmd_features(args):
    config = _config_from(args)
    names = sorted(
        f for f in os.listdir(args.frames) if f.endswith((".ppm", ".pdnt"))
    )
    if len(names) < 2:
        raise ValueError(f"{args.frames}: need at least 2 PPM or PDNT frames")
    frames = []
    for name in names:
        path = os.path.join(args.frames, name)
        if name.endswith(".ppm"):
            frames.append(fileformats.read_ppm(path))
        else:
            frames.append(fileformats.load_tensor(path))
    h, w = frames[0].shape[:2]
    tube = VideoTube(frames, (0, 0, w, h))
    params = FeatureParams(config.hod_bins, config.hog_bins, config.hog_cell)
    vectors = tube_features(tube, kind=args.kind, params=params)
    os.makedirs(args.out, exist_ok=True)
    save_feature_sequence(
        os.path.join(args.out, "features.pdnt"),
        os.path.join(args.out, "features.json"),
        vectors, args.kind, params,
    )
    print(f"wrote {len(vectors)} {args.kind} vectors to {args.out}")
    return 0


def cmd_amp_fit(args):
    config = _config_from(args, clusters=args.clusters)
    matrix = fileformats.load_tensor(args.features)
    kind = config.feature_kind
    sidecar = os.path.splitext(args.features)[0] + ".json"
    if os.path.exists(sidecar):
        with open(sidecar) as fh:
            kind = json.load(fh).get("kind", kind)
    lib = amp_mod.kmeans_fit(list(matrix), config.clusters, seed=config.seed, kind=kind)
    lib.top_k = config.top_k
    os.makedirs(args.out, exist_ok=True)
    amp_mod.save_library(
        lib,
        os.path.join(args.out, "amp_library.json"),
        os.path.join(args.out, "amp_library.pdnt"),
    )
    print(f"fitted {lib.size} clusters (final inertia {lib.inertia_history[-1]:.6g})")
    return 0


def cmd_plan_train(args):
    config = _config_from(args)
    lib = amp_mod.load_library(
        os.path.join(args.models, "amp_library.json"),
        os.path.join(args.models, "amp_library.pdnt"),
    )
    corpus = amp_mod.load_traces(args.traces)
    model = planrec.train_affinity(
        corpus, lib.size, dim=config.embed_dim, window=config.window,
        epochs=config.plan_epochs, lr=config.plan_lr,
        neg_samples=config.neg_samples, seed=config.seed,
    )
    planrec.save_model(
        model,
        os.path.join(args.models, "affinity.json"),
        os.path.join(args.models, "affinity_in.pdnt"),
        os.path.join(args.models, "affinity_out.pdnt"),
    )
    print(f"trained affinity model, final loss {model.loss_history[-1]:.6f}")
    return 0


def cmd_plan_recognize(args):
    config = _config_from(args)
    models = _load_models(args.models, config, require_pdn=False)
    trace = amp_mod.load_traces(args.trace)[0]
    plan = planrec.recognize(models.affinity, trace, args.steps or config.plan_len)
    payload = {"steps": list(plan.steps)}
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "plan.json"), "w") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_prda(args):
    config = _config_from(args)
    models = _load_models(args.models, config, require_pdn=False)
    samples = synth_mod.load_dataset(args.data) if _is_dataset_dir(args.data) else None
    if samples is None:
        samples = _load_single_sample(args.data)
    os.makedirs(args.out, exist_ok=True)
    records = []
    mapper = _mapper(config.threads)
    caches = mapper(lambda s: pipeline.scene_step(s, models, config), samples)
    for idx, (sample, cache) in enumerate(zip(samples, caches)):
        if cache.prda is None:
            records.append({"sample": idx, "glimpses": 0})
            continue
        stem = os.path.join(args.out, f"prda_{idx:04d}")
        fileformats.save_tensor(stem + ".pdnt", cache.prda.values)
        fileformats.write_pgm16(stem + ".pgm", cache.prda.values)
        combined = pipeline.combine_attention(cache.bua, cache.prda.values, config.lam)
        report.save_scene_figure(
            stem + ".png", sample.batch()[-1], cache.bua, cache.prda.values, combined
        )
        records.append(
            {
                "sample": idx,
                "glimpses": len(cache.glimpses),
                "plans": len(cache.plans),
                "attention_sum": float(cache.prda.values.sum()),
                "expected_sum": len(cache.plans) * config.plan_len * sample.n**2 / config.z,
            }
        )
    _write_jsonl(os.path.join(args.out, "prda.jsonl"), records)
    print(f"wrote attention maps for {len(samples)} samples to {args.out}")
    return 0


def cmd_train(args):
    config = _config_from(args)
    samples = synth_mod.load_dataset(args.data)
    result = pipeline.train_er(samples, config, seed=config.seed)
    os.makedirs(args.out, exist_ok=True)
    _save_models(result.models, args.out)
    pipeline.save_classifier(result.classifier, args.out)
    save_config(config, os.path.join(args.out, "config.json"))
    _write_metrics(args.out, result.metrics, config)
    print(f"mean AP {result.metrics['mean_ap']:.4f} "
          f"(concentration pass {result.metrics['concentration_pass_fraction']:.2f})")
    return 0


def cmd_eval(args):
    config = _config_from(args)
    models = _load_models(args.models, config)
    classifier = pipeline.load_classifier(args.models)
    samples = synth_mod.load_dataset(args.data)
    mapper = _mapper(config.threads)
    caches = mapper(lambda s: pipeline.scene_step(s, models, config), samples)
    feats = pipeline.feature_batch(samples, caches, config, config.lam)
    scores = np.stack([pipeline.classify_event(f, classifier) for f in feats])
    labels = np.asarray([s.label for s in samples])
    per_class, mean_ap = pipeline.evaluate_map(scores, labels, config.classes)
    ratios = pipeline.concentration_stats(samples, caches)
    passing = float(np.mean([r >= config.concentration_factor for r in ratios]))
    metrics = {
        "lambda": config.lam,
        "mean_ap": mean_ap,
        "per_class_ap": {str(k): v for k, v in per_class.items()},
        "concentration_ratios": ratios,
        "concentration_pass_fraction": passing,
    }
    os.makedirs(args.out, exist_ok=True)
    _write_metrics(args.out, metrics, config)
    print(f"mean AP {mean_ap:.4f} (concentration pass {passing:.2f})")
    return 0


def cmd_export_map(args):
    values = fileformats.load_tensor(args.tensor)
    if values.ndim != 2:
        raise ValueError(f"{args.tensor}: export expects a 2-D map")
    os.makedirs(args.out, exist_ok=True)
    stem = os.path.join(args.out, os.path.splitext(os.path.basename(args.tensor))[0])
    fileformats.write_pgm16(stem + ".pgm", values)
    report.save_map_figure(stem + ".png", values, os.path.basename(stem))
    print(f"wrote {stem}.pgm and {stem}.png")
    return 0


def _write_metrics(out_dir, metrics, config):
    records = []
    for epoch, loss in enumerate(metrics.get("classifier_loss", []), start=1):
        records.append({"epoch": epoch, "loss": loss})
    summary = {k: v for k, v in metrics.items() if k != "classifier_loss"}
    records.append(summary)
    _write_jsonl(os.path.join(out_dir, "metrics.jsonl"), records)
    curves = {
        "classifier": metrics.get("classifier_loss", []),
        "calibration": metrics.get("calibration_loss", []),
        "affinity": metrics.get("plan_loss", []),
    }
    curves = {k: v for k, v in curves.items() if v}
    if curves:
        report.save_curve_figure(
            os.path.join(out_dir, "loss_curves.png"), curves, "training", "loss"
        )
    if "per_class_ap" in metrics:
        report.save_ap_figure(
            os.path.join(out_dir, "ap.png"),
            metrics["per_class_ap"], synth_mod.CLASSES, metrics["mean_ap"],
        )


def _is_dataset_dir(path):
    return os.path.isdir(path) and not os.path.isfile(os.path.join(path, "manifest.json"))


def _load_single_sample(path):
    parent, name = os.path.split(os.path.normpath(path))
    samples = synth_mod.load_dataset(parent)
    matches = [
        s for entry, s in zip(sorted(os.listdir(parent)), samples) if entry == name
    ]
    if not matches:
        raise ValueError(f"{path}: no loadable sample")
    return matches


def build_parser():
    parser = argparse.ArgumentParser(
        prog="erpdn",
        description="plan-driven attention toolchain: synthesize scenes, fit "
        "motion primitives, recognize plans, generate attention maps, train "
        "and evaluate the event recognizer",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("synth", help="generate a synthetic scene dataset")
    _add_common(p)
    p.add_argument("--count", type=int, help="number of samples")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", help="extract histogram features from a frame dir")
    _add_common(p)
    p.add_argument("--frames", required=True, help="directory of PPM frames")
    p.add_argument("--kind", default="hod", choices=["hod", "hog", "hod+hog"])
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("amp-fit", help="cluster features into a primitive library")
    _add_common(p)
    p.add_argument("--features", required=True, help="PDNT feature matrix")
    p.add_argument("--clusters", type=int, help="library size")
    p.set_defaults(func=cmd_amp_fit)

    p = sub.add_parser("plan-train", help="train the action affinity model")
    _add_common(p)
    p.add_argument("--models", required=True, help="model directory with amp_library")
    p.add_argument("--traces", required=True, help="JSON plan traces")
    p.set_defaults(func=cmd_plan_train)

    p = sub.add_parser("plan-recognize", help="predict future primitive indices")
    _add_common(p)
    p.add_argument("--models", required=True)
    p.add_argument("--trace", required=True, help="JSON file with one trace")
    p.add_argument("--steps", type=int, help="plan length")
    p.set_defaults(func=cmd_plan_recognize)

    p = sub.add_parser("prda", help="generate plan-driven attention maps")
    _add_common(p)
    p.add_argument("--data", required=True, help="dataset dir or one sample dir")
    p.add_argument("--models", required=True)
    p.set_defaults(func=cmd_prda)

    p = sub.add_parser("train", help="train the full event recognizer")
    _add_common(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--models", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-map", help="export a PDNT map as PGM + figure")
    _add_common(p)
    p.add_argument("--tensor", required=True, help="PDNT file holding a 2-D map")
    p.set_defaults(func=cmd_export_map)

    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; --help exits 0
        return 0 if exc.code == 0 else USAGE_ERROR
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return USAGE_ERROR
    if getattr(args, "out", None) is None and args.func is not cmd_plan_recognize:
        print(f"erpdn {args.command}: --out is required", file=sys.stderr)
        return USAGE_ERROR
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        log.debug("data error", exc_info=True)
        print(f"erpdn {args.command}: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
