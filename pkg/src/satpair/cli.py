"""satpair command-line interface.

Eight subcommands: train, eval-retrieval, eval-zeroshot, eval-semloc,
eval-probe, stats, caption, merge.  Every run is two-phase: first all inputs
are located, parsed, and validated (any failure exits 1 before computation
starts), then the computation runs and writes its outputs (failures there
exit 2).  Each subcommand writes a JSON report with a provenance block
(config hash, seed, input digests), a CSV table, and — on the report paths —
rendered PNG figures, then prints a human-readable table.

Options layer as: command-line flag > TOML config file value > built-in
default.  Config files are flat TOML whose keys match the flag names with
underscores (e.g. `batch_per_device = 112`).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from . import figures
from .captions import CaptionClientConfig, PROMPT_IDS
from .crops import CropRect, resize_center_crop_plan
from .embed_io import read_embeddings, read_ids
from .errors import EndpointDownError, SatpairError
from .manifest import ImageRef, ManifestRecord, build_manifest, merge_manifests, read_manifest, write_manifest
from .matrix import l2_normalize
from .probe import FULL, LabeledFeatures, ProbeConfig, knn_classify, logreg_fit, logreg_predict, sample_k_shot, stratified_split
from .reports import make_provenance, write_csv, write_report
from .retrieval import PairedSet, retrieval_report
from .semloc import SemLocWeights, load_ground_truth, semloc_report, similarity_map, write_pgm
from .textstats import caption_stats, default_stoplist, load_stoplist
from .train import TrainConfig, fit, save_head, write_history
from .zeroshot import TEMPLATES, build_prompts, top1_accuracy, zeroshot_classify


class _UsageError(Exception):
    """Bad command line; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # funnel every argparse failure into exit code 1
        raise _UsageError(message)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise _UsageError(f"config file not found: {path}")
    with open(p, "rb") as f:
        return tomllib.load(f)


def _opt(args: argparse.Namespace, config: dict, key: str, default):
    """Flag value if given, else config value, else default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise _UsageError(f"{what} file not found: {path}")
    return p


def _print_table(rows: list[tuple[str, object]]) -> None:
    width = max(len(k) for k, _ in rows)
    for key, value in rows:
        if isinstance(value, float):
            value = f"{value:.2f}"
        print(f"  {key:<{width}}  {value}")


def _read_labels(path: Path, what: str) -> np.ndarray:
    _, labels = read_ids(path)
    if any(lab is None for lab in labels):
        raise _UsageError(f"{what}: every row needs a non-null label")
    return np.asarray(labels, dtype=np.int64)


# ---------------------------------------------------------------- train


def _train_load(args):
    config = _load_config(args.config)
    images = read_embeddings(_require_file(args.images, "image features"))
    texts = read_embeddings(_require_file(args.texts, "text features"))
    pairs = None
    if args.pairs is not None:
        pairs = []
        with open(_require_file(args.pairs, "pairs")) as f:
            for line in f:
                line = line.strip()
                if line:
                    obj = json.loads(line)
                    pairs.append((int(obj["image"]), int(obj["text"])))
    cfg = TrainConfig(
        temperature=_opt(args, config, "temperature", 0.07),
        batch_per_device=_opt(args, config, "batch_per_device", 112),
        devices=_opt(args, config, "devices", 16),
        base_lr_numerator=_opt(args, config, "base_lr_numerator", 5.0e-4),
        base_lr_denominator=_opt(args, config, "base_lr_denominator", 32768.0),
        weight_decay=_opt(args, config, "weight_decay", 0.01),
        epochs=_opt(args, config, "epochs", 10),
        warmup_epochs=_opt(args, config, "warmup_epochs", 1),
        crop_scale_min=_opt(args, config, "crop_scale_min", 0.8),
        crop_scale_max=_opt(args, config, "crop_scale_max", 1.0),
        input_size=_opt(args, config, "input_size", 448),
        seed=_opt(args, config, "seed", 0),
    )
    embed_dim = _opt(args, config, "embed_dim", 16)
    n = len(pairs) if pairs is not None else images.rows
    if n < cfg.global_batch:
        raise _UsageError(
            f"global batch {cfg.global_batch} exceeds the {n} available pairs; "
            "lower --devices/--batch-per-device"
        )
    return {"images": images, "texts": texts, "pairs": pairs, "cfg": cfg, "embed_dim": embed_dim}


def _train_run(args, inputs) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg: TrainConfig = inputs["cfg"]
    image_head, text_head, history = fit(
        inputs["images"], inputs["texts"], inputs["pairs"], cfg, embed_dim=inputs["embed_dim"]
    )
    write_history(out / "history.jsonl", history)
    save_head(image_head, out / "image_head_weight.rseb", out / "image_head_bias.rseb")
    save_head(text_head, out / "text_head_weight.rseb", out / "text_head_bias.rseb")
    config_dict = {
        "temperature": cfg.temperature,
        "batch_per_device": cfg.batch_per_device,
        "devices": cfg.devices,
        "base_lr_numerator": cfg.base_lr_numerator,
        "base_lr_denominator": cfg.base_lr_denominator,
        "weight_decay": cfg.weight_decay,
        "epochs": cfg.epochs,
        "warmup_epochs": cfg.warmup_epochs,
        "crop_scale_min": cfg.crop_scale_min,
        "crop_scale_max": cfg.crop_scale_max,
        "input_size": cfg.input_size,
        "embed_dim": inputs["embed_dim"],
    }
    final = history[-1]
    report = {
        "steps": len(history),
        "final_loss": final["loss"],
        "final_loss_i2t": final["loss_i2t"],
        "final_loss_t2i": final["loss_t2i"],
        "config": config_dict,
    }
    prov_inputs = {"images": args.images, "texts": args.texts}
    if args.pairs is not None:
        prov_inputs["pairs"] = args.pairs
    write_report(out / "report.json", report, make_provenance(config_dict, cfg.seed, prov_inputs))
    write_csv(
        out / "history.csv",
        ["step", "lr", "loss", "loss_i2t", "loss_t2i"],
        [[h["step"], h["lr"], h["loss"], h["loss_i2t"], h["loss_t2i"]] for h in history],
    )
    figures.training_curves(history, out / "train_curves.png")
    print(f"train: {len(history)} steps")
    _print_table([("final loss", final["loss"]), ("final i2t", final["loss_i2t"]), ("final t2i", final["loss_t2i"])])


# ---------------------------------------------------------------- eval-retrieval


def _retrieval_load(args):
    config = _load_config(args.config)
    images = read_embeddings(_require_file(args.images, "image embeddings"))
    texts = read_embeddings(_require_file(args.texts, "text embeddings"))
    caption_images = _read_labels(_require_file(args.text_ids, "text ids"), "text ids")
    if caption_images.shape[0] != texts.rows:
        raise _UsageError(
            f"text ids cover {caption_images.shape[0]} rows, embeddings have {texts.rows}"
        )
    # building the paired set performs the full ground-truth consistency check
    PairedSet.from_caption_images(images, texts, [int(i) for i in caption_images])
    seed = _opt(args, config, "seed", 0)
    return {"images": images, "texts": texts, "caption_images": caption_images, "seed": seed}


def _retrieval_run(args, inputs) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pairs = PairedSet.from_caption_images(
        inputs["images"], inputs["texts"], [int(i) for i in inputs["caption_images"]]
    )
    rep = retrieval_report(inputs["images"], inputs["texts"], pairs.captions_of)
    report = rep.as_dict()
    prov = make_provenance(
        {"subcommand": "eval-retrieval"},
        inputs["seed"],
        {"images": args.images, "texts": args.texts, "text_ids": args.text_ids},
    )
    write_report(out / "report.json", report, prov)
    write_csv(out / "report.csv", ["metric", "value"], [[k, v] for k, v in report.items()])
    figures.recall_bars(report, out / "recall_bars.png")
    print("eval-retrieval:")
    _print_table(list(report.items()))


# ---------------------------------------------------------------- eval-zeroshot


def _zeroshot_load(args):
    config = _load_config(args.config)
    images = read_embeddings(_require_file(args.images, "image embeddings"))
    labels = _read_labels(_require_file(args.image_ids, "image ids"), "image ids")
    class_emb = read_embeddings(_require_file(args.class_emb, "class embeddings"))
    class_names = json.loads(_require_file(args.classes, "class names").read_text(encoding="utf-8"))
    if not isinstance(class_names, list) or not all(isinstance(c, str) for c in class_names):
        raise _UsageError(f"{args.classes}: expected a JSON array of strings")
    if len(class_names) != class_emb.rows:
        raise _UsageError(
            f"{len(class_names)} class names but {class_emb.rows} class embedding rows"
        )
    if labels.shape[0] != images.rows:
        raise _UsageError(f"{labels.shape[0]} labels for {images.rows} images")
    if labels.size and (labels.min() < 0 or labels.max() >= len(class_names)):
        raise _UsageError(f"label values fall outside 0..{len(class_names) - 1}")
    template_key = _opt(args, config, "template", "a")
    if template_key not in TEMPLATES:
        raise _UsageError(f"template must be one of {sorted(TEMPLATES)}, got {template_key!r}")
    return {
        "images": images,
        "labels": labels,
        "class_emb": class_emb,
        "class_names": class_names,
        "template_key": template_key,
        "dataset": _opt(args, config, "dataset_name", "dataset"),
        "seed": _opt(args, config, "seed", 0),
    }


def _zeroshot_run(args, inputs) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images = inputs["images"] if inputs["images"].normalized else l2_normalize(inputs["images"])
    class_emb = inputs["class_emb"] if inputs["class_emb"].normalized else l2_normalize(inputs["class_emb"])
    pred = zeroshot_classify(images, class_emb)
    labels = inputs["labels"]
    acc = top1_accuracy(pred, labels)
    per_class: dict[str, float] = {}
    for ci, name in enumerate(inputs["class_names"]):
        mask = labels == ci
        if mask.any():
            per_class[name] = 100.0 * float(np.count_nonzero(pred[mask] == ci)) / int(mask.sum())
    prompts = build_prompts(inputs["class_names"], TEMPLATES[inputs["template_key"]])
    report = {
        "dataset": inputs["dataset"],
        "template": inputs["template_key"],
        "prompts": prompts,
        "top1_accuracy": acc,
        "per_class_accuracy": per_class,
    }
    prov = make_provenance(
        {"subcommand": "eval-zeroshot", "template": inputs["template_key"]},
        inputs["seed"],
        {"images": args.images, "image_ids": args.image_ids, "class_emb": args.class_emb, "classes": args.classes},
    )
    write_report(out / "report.json", report, prov)
    write_csv(
        out / "report.csv",
        ["class", "accuracy"],
        [["__overall__", acc]] + [[name, per_class[name]] for name in per_class],
    )
    figures.accuracy_bars(per_class or {"overall": acc}, out / "accuracy_bars.png")
    print(f"eval-zeroshot: {inputs['dataset']}")
    _print_table([("top-1 accuracy", acc), ("classes", len(inputs["class_names"])), ("template", inputs["template_key"])])


# ---------------------------------------------------------------- eval-semloc


def _semloc_load(args):
    config = _load_config(args.config)
    windows = read_embeddings(_require_file(args.windows, "window embeddings"))
    query = read_embeddings(_require_file(args.query, "query embedding"))
    if query.rows != 1:
        raise _UsageError(f"query file must hold exactly 1 row, has {query.rows}")
    rects: list[CropRect] = []
    with open(_require_file(args.window_rects, "window rects")) as f:
        for line in f:
            line = line.strip()
            if line:
                obj = json.loads(line)
                rects.append(CropRect(int(obj["x"]), int(obj["y"]), int(obj["w"]), int(obj["h"])))
    if len(rects) != windows.rows:
        raise _UsageError(f"{len(rects)} window rects but {windows.rows} embedding rows")
    scene_w = _opt(args, config, "scene_w", None)
    scene_h = _opt(args, config, "scene_h", None)
    cell = _opt(args, config, "cell", 32)
    if scene_w is None or scene_h is None:
        raise _UsageError("--scene-w and --scene-h are required")
    grid_w, grid_h = max(1, scene_w // cell), max(1, scene_h // cell)
    gt = load_ground_truth(_require_file(args.gt, "ground truth"), grid_w, grid_h)
    weights = SemLocWeights(
        _opt(args, config, "w_su", 1.0 / 3.0),
        _opt(args, config, "w_as", 1.0 / 3.0),
        _opt(args, config, "w_da", 1.0 / 3.0),
    )
    return {
        "windows": windows,
        "rects": rects,
        "query": query,
        "gt": gt,
        "weights": weights,
        "scene_w": scene_w,
        "scene_h": scene_h,
        "cell": cell,
        "seed": _opt(args, config, "seed", 0),
    }


def _semloc_run(args, inputs) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    windows = inputs["windows"]
    window_embeddings = [(rect, windows.data[i]) for i, rect in enumerate(inputs["rects"])]
    metrics = semloc_report(
        window_embeddings,
        inputs["query"].data[0],
        inputs["gt"],
        inputs["weights"],
        inputs["scene_w"],
        inputs["scene_h"],
        inputs["cell"],
    )
    query = inputs["query"].data[0].astype(np.float64)
    scored = [(rect, float(emb.astype(np.float64) @ query)) for rect, emb in window_embeddings]
    m = similarity_map(scored, inputs["scene_w"], inputs["scene_h"], inputs["cell"])
    w = inputs["weights"]
    report = dict(metrics)
    report["weights"] = {"w_su": w.w_su, "w_as": w.w_as, "w_da": w.w_da}
    prov = make_provenance(
        {
            "subcommand": "eval-semloc",
            "scene_w": inputs["scene_w"],
            "scene_h": inputs["scene_h"],
            "cell": inputs["cell"],
            "weights": report["weights"],
        },
        inputs["seed"],
        {"windows": args.windows, "window_rects": args.window_rects, "query": args.query, "gt": args.gt},
    )
    write_report(out / "report.json", report, prov)
    write_csv(out / "report.csv", ["metric", "value"], [[k, v] for k, v in metrics.items()])
    write_pgm(m, out / "map.pgm")
    figures.semloc_heatmap(m, inputs["gt"], out / "semloc_map.png")
    print("eval-semloc:")
    _print_table(list(metrics.items()))


# ---------------------------------------------------------------- eval-probe


def _probe_load(args):
    config = _load_config(args.config)
    features = read_embeddings(_require_file(args.features, "features"))
    labels = _read_labels(_require_file(args.ids, "feature ids"), "feature ids")
    if labels.shape[0] != features.rows:
        raise _UsageError(f"{labels.shape[0]} labels for {features.rows} feature rows")
    shots_raw = str(_opt(args, config, "shots", FULL))
    shots: int | str = FULL if shots_raw == FULL else int(shots_raw)
    method = _opt(args, config, "method", "linear")
    if method not in ("linear", "knn"):
        raise _UsageError(f"method must be 'linear' or 'knn', got {method!r}")
    cfg = ProbeConfig(
        shots=shots,
        split_ratio=_opt(args, config, "split_ratio", 0.8),
        seed=_opt(args, config, "seed", 0),
        l2_strength=_opt(args, config, "l2_strength", 1.0),
        max_iter=_opt(args, config, "max_iter", 1000),
        grad_tol=_opt(args, config, "grad_tol", 1e-6),
    )
    data = LabeledFeatures(features, labels, int(labels.max()) + 1)
    return {
        "data": data,
        "cfg": cfg,
        "method": method,
        "k": _opt(args, config, "k", 20),
        "metric": _opt(args, config, "metric", "euclidean"),
        "dataset": _opt(args, config, "dataset_name", "dataset"),
    }


def _probe_run(args, inputs) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data: LabeledFeatures = inputs["data"]
    cfg: ProbeConfig = inputs["cfg"]
    train_idx, test_idx = stratified_split(data.labels, cfg.split_ratio, cfg.seed)
    train = data.subset(train_idx)
    test = data.subset(test_idx)
    if cfg.shots != FULL:
        train = sample_k_shot(train, int(cfg.shots), cfg.seed)
    if inputs["method"] == "linear":
        model = logreg_fit(train, cfg)
        pred = logreg_predict(model, test.features)
    else:
        pred = knn_classify(train, test.features, k=int(inputs["k"]), metric=inputs["metric"])
    acc = top1_accuracy(pred, test.labels)
    report = {
        "dataset": inputs["dataset"],
        "shots": cfg.shots,
        "accuracy": acc,
        "method": inputs["method"],
    }
    if inputs["method"] == "knn":
        report["k"] = int(inputs["k"])
        report["metric"] = inputs["metric"]
    config_dict = {
        "subcommand": "eval-probe",
        "shots": cfg.shots,
        "method": inputs["method"],
        "split_ratio": cfg.split_ratio,
        "l2_strength": cfg.l2_strength,
        "k": int(inputs["k"]),
    }
    prov = make_provenance(config_dict, cfg.seed, {"features": args.features, "ids": args.ids})
    write_report(out / "report.json", report, prov)
    per_class: dict[str, float] = {}
    for ci in range(data.n_classes):
        mask = test.labels == ci
        if mask.any():
            per_class[str(ci)] = 100.0 * float(np.count_nonzero(pred[mask] == ci)) / int(mask.sum())
    write_csv(
        out / "report.csv",
        ["class", "accuracy"],
        [["__overall__", acc]] + [[name, val] for name, val in per_class.items()],
    )
    figures.accuracy_bars(per_class, out / "accuracy_bars.png", ylabel=f"{inputs['method']} accuracy (%)")
    print(f"eval-probe: {inputs['dataset']}")
    _print_table([("method", inputs["method"]), ("shots", cfg.shots), ("accuracy", acc)])


# ---------------------------------------------------------------- stats


def _stats_load(args):
    config = _load_config(args.config)
    records = read_manifest(_require_file(args.manifest, "manifest"))
    stoplist = (
        load_stoplist(_require_file(args.stoplist, "stoplist"))
        if args.stoplist is not None
        else default_stoplist()
    )
    return {
        "records": records,
        "stoplist": stoplist,
        "bin_width": _opt(args, config, "bin_width", 10),
        "seed": _opt(args, config, "seed", 0),
    }


def _stats_run(args, inputs) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records: list[ManifestRecord] = inputs["records"]
    captions = [rec.caption for rec in records]
    stats = caption_stats(captions, inputs["stoplist"], inputs["bin_width"])
    per_source: dict[str, int] = {}
    for rec in records:
        per_source[rec.source_dataset] = per_source.get(rec.source_dataset, 0) + 1
    report = stats.as_dict()
    report["per_source"] = per_source
    prov = make_provenance(
        {"subcommand": "stats", "bin_width": inputs["bin_width"]},
        inputs["seed"],
        {"manifest": args.manifest},
    )
    write_report(out / "report.json", report, prov)
    hist = stats.length_histogram
    write_csv(
        out / "length_histogram.csv",
        ["bin_start", "bin_end", "count"],
        [[i * hist.bin_width, (i + 1) * hist.bin_width, c] for i, c in enumerate(hist.counts)],
    )
    ranked = sorted(stats.token_frequencies.items(), key=lambda kv: (-kv[1], kv[0]))
    write_csv(out / "token_frequency.csv", ["token", "count"], [[t, c] for t, c in ranked])
    figures.length_histogram_figure(hist, out / "length_hist.png")
    figures.token_bar_figure(stats.token_frequencies, out / "token_bars.png")
    print("stats:")
    _print_table(
        [("captions", stats.total_pairs), ("distinct tokens", len(stats.token_frequencies))]
        + [(f"source {s}", n) for s, n in sorted(per_source.items())]
    )


# ---------------------------------------------------------------- caption


def _caption_load(args):
    config = _load_config(args.config)
    target = _opt(args, config, "target", 512)
    refs: list[ImageRef] = []
    with open(_require_file(args.images, "image listing")) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            for field in ("image_id", "source_dataset", "width", "height"):
                if field not in obj:
                    raise _UsageError(f"{args.images}:{lineno}: missing field {field!r}")
            _, _, crop = resize_center_crop_plan(int(obj["width"]), int(obj["height"]), target)
            refs.append(
                ImageRef(
                    image_id=str(obj["image_id"]),
                    source_dataset=str(obj["source_dataset"]),
                    crop=crop,
                    image_b64=obj.get("image_b64"),
                )
            )
    endpoint = _opt(args, config, "endpoint", None)
    if not endpoint:
        raise _UsageError("--endpoint is required")
    client = CaptionClientConfig(
        endpoint=endpoint,
        timeout=_opt(args, config, "timeout", 10.0),
        max_retries=_opt(args, config, "max_retries", 3),
        backoff_base=_opt(args, config, "backoff_base", 0.25),
        concurrency=_opt(args, config, "concurrency", 8),
    )
    return {"refs": refs, "client": client, "target": target, "seed": _opt(args, config, "seed", 0)}


def _caption_run(args, inputs) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, failures = build_manifest(inputs["refs"], inputs["client"])
    write_manifest(out / "manifest.jsonl", records)
    with open(out / "failures.jsonl", "w", encoding="utf-8") as f:
        for failure in failures:
            f.write(json.dumps(failure) + "\n")
    report = {
        "images": len(inputs["refs"]),
        "records": len(records),
        "failures": len(failures),
        "prompts": list(PROMPT_IDS),
    }
    client: CaptionClientConfig = inputs["client"]
    prov = make_provenance(
        {
            "subcommand": "caption",
            "endpoint": client.endpoint,
            "target": inputs["target"],
            "concurrency": client.concurrency,
        },
        inputs["seed"],
        {"images": args.images},
    )
    write_report(out / "report.json", report, prov)
    write_csv(
        out / "report.csv",
        ["quantity", "count"],
        [["images", len(inputs["refs"])], ["records", len(records)], ["failures", len(failures)]],
    )
    print("caption:")
    _print_table([("images", len(inputs["refs"])), ("records", len(records)), ("failures", len(failures))])
    if inputs["refs"] and not records:
        # per-image failures are tolerated, but a run where every image failed
        # means the endpoint is effectively down; outputs above stay on disk
        raise EndpointDownError(f"all {len(failures)} images failed; see failures.jsonl")


# ---------------------------------------------------------------- merge


def _merge_load(args):
    config = _load_config(args.config)
    parts = [read_manifest(_require_file(p, "manifest part")) for p in args.parts]
    # the merge itself is input validation: duplicate keys are a bad-input condition
    merged, counts, total = merge_manifests(parts)
    return {"merged": merged, "counts": counts, "total": total, "seed": _opt(args, config, "seed", 0)}


def _merge_run(args, inputs) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out / "merged.jsonl", inputs["merged"])
    report = {"per_source": inputs["counts"], "total": inputs["total"], "parts": len(args.parts)}
    prov = make_provenance(
        {"subcommand": "merge"},
        inputs["seed"],
        {f"part{i}": p for i, p in enumerate(args.parts)},
    )
    write_report(out / "report.json", report, prov)
    write_csv(
        out / "report.csv",
        ["source", "count"],
        [[s, n] for s, n in sorted(inputs["counts"].items())] + [["__total__", inputs["total"]]],
    )
    print("merge:")
    _print_table([(f"source {s}", n) for s, n in sorted(inputs["counts"].items())] + [("total", inputs["total"])])


# ---------------------------------------------------------------- parser


def build_parser() -> _Parser:
    parser = _Parser(prog="satpair", description="Contrastive vision-language training and evaluation at desk scale.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: _Parser) -> None:
        p.add_argument("--config", help="TOML config file; flags override its values")
        p.add_argument("--out-dir", required=True, help="directory for reports and figures")
        p.add_argument("--seed", type=int, help="random seed recorded in provenance (default 0)")

    p = sub.add_parser("train", parents=[], help="train projection heads with symmetric InfoNCE")
    common(p)
    p.add_argument("--images", required=True, help="RSEB image features")
    p.add_argument("--texts", required=True, help="RSEB text features")
    p.add_argument("--pairs", help="JSONL {\"image\": i, \"text\": j} alignment (default: row i <-> row i)")
    p.add_argument("--temperature", type=float, help="InfoNCE temperature (default 0.07)")
    p.add_argument("--batch-per-device", type=int, help="per-device batch size (default 112)")
    p.add_argument("--devices", type=int, help="simulated device count (default 16)")
    p.add_argument("--base-lr-numerator", type=float, help="lr rule numerator (default 5.0e-4)")
    p.add_argument("--base-lr-denominator", type=float, help="lr rule denominator (default 32768)")
    p.add_argument("--weight-decay", type=float, help="AdamW decoupled weight decay (default 0.01)")
    p.add_argument("--epochs", type=int, help="training epochs (default 10)")
    p.add_argument("--warmup-epochs", type=int, help="linear warmup epochs (default 1)")
    p.add_argument("--crop-scale-min", type=float, help="crop area fraction lower bound (default 0.8)")
    p.add_argument("--crop-scale-max", type=float, help="crop area fraction upper bound (default 1.0)")
    p.add_argument("--input-size", type=int, help="crop plan input size (default 448)")
    p.add_argument("--embed-dim", type=int, help="projection head output dim (default 16)")
    p.set_defaults(load=_train_load, run=_train_run)

    p = sub.add_parser("eval-retrieval", help="image-text retrieval recalls (R@1/5/10 both ways, mR)")
    common(p)
    p.add_argument("--images", required=True, help="RSEB image embeddings")
    p.add_argument("--texts", required=True, help="RSEB caption embeddings")
    p.add_argument("--text-ids", required=True, help="ids sidecar whose label column is each caption's image row")
    p.set_defaults(load=_retrieval_load, run=_retrieval_run)

    p = sub.add_parser("eval-zeroshot", help="template-prompt zero-shot top-1 accuracy")
    common(p)
    p.add_argument("--images", required=True, help="RSEB image embeddings")
    p.add_argument("--image-ids", required=True, help="ids sidecar whose label column is the class index")
    p.add_argument("--class-emb", required=True, help="RSEB class prompt embeddings, one row per class")
    p.add_argument("--classes", required=True, help="JSON array of class names")
    p.add_argument("--template", choices=sorted(TEMPLATES), help="prompt template preset (default 'a')")
    p.add_argument("--dataset-name", help="dataset label in the report")
    p.set_defaults(load=_zeroshot_load, run=_zeroshot_run)

    p = sub.add_parser("eval-semloc", help="semantic localization metrics R_su/R_as/R_da/R_mi")
    common(p)
    p.add_argument("--windows", required=True, help="RSEB window embeddings, one row per window")
    p.add_argument("--window-rects", required=True, help="JSONL window rectangles {x,y,w,h} in scene pixels")
    p.add_argument("--query", required=True, help="RSEB query embedding (exactly 1 row)")
    p.add_argument("--gt", required=True, help="ground-truth JSON {scene, rects:[[x,y,w,h],...]} in cell coords")
    p.add_argument("--scene-w", type=int, help="scene width in pixels")
    p.add_argument("--scene-h", type=int, help="scene height in pixels")
    p.add_argument("--cell", type=int, help="map cell size in pixels (default 32)")
    p.add_argument("--w-su", type=float, help="R_su weight (default 1/3)")
    p.add_argument("--w-as", type=float, help="R_as weight (default 1/3)")
    p.add_argument("--w-da", type=float, help="R_da weight (default 1/3)")
    p.set_defaults(load=_semloc_load, run=_semloc_run)

    p = sub.add_parser("eval-probe", help="linear probe / k-NN classification over frozen features")
    common(p)
    p.add_argument("--features", required=True, help="RSEB feature matrix")
    p.add_argument("--ids", required=True, help="ids sidecar whose label column is the class index")
    p.add_argument("--shots", choices=["1", "4", "8", "16", "32", "full"], help="shots per class (default full)")
    p.add_argument("--method", choices=["linear", "knn"], help="probe method (default linear)")
    p.add_argument("--k", type=int, help="k-NN neighbor count (default 20)")
    p.add_argument("--metric", choices=["euclidean", "cosine"], help="k-NN metric (default euclidean)")
    p.add_argument("--split-ratio", type=float, help="train fraction of the stratified split (default 0.8)")
    p.add_argument("--l2-strength", type=float, help="inverse-regularization strength (default 1.0)")
    p.add_argument("--max-iter", type=int, help="optimizer iteration cap (default 1000)")
    p.add_argument("--grad-tol", type=float, help="gradient infinity-norm stop (default 1e-6)")
    p.add_argument("--dataset-name", help="dataset label in the report")
    p.set_defaults(load=_probe_load, run=_probe_run)

    p = sub.add_parser("stats", help="caption statistics: length histogram, token frequencies")
    common(p)
    p.add_argument("--manifest", required=True, help="JSONL manifest")
    p.add_argument("--stoplist", help="stopword file (default: packaged lexicon)")
    p.add_argument("--bin-width", type=int, help="histogram bin width in words (default 10)")
    p.set_defaults(load=_stats_load, run=_stats_run)

    p = sub.add_parser("caption", help="fetch two captions per image from the captioning endpoint")
    common(p)
    p.add_argument("--images", required=True, help="JSONL image listing {image_id, source_dataset, width, height}")
    p.add_argument("--endpoint", help="captioning service base URL")
    p.add_argument("--target", type=int, help="resize/crop target in pixels (default 512)")
    p.add_argument("--timeout", type=float, help="per-request timeout seconds (default 10)")
    p.add_argument("--max-retries", type=int, help="retry budget for 5xx/transport errors (default 3)")
    p.add_argument("--backoff-base", type=float, help="exponential backoff base seconds (default 0.25)")
    p.add_argument("--concurrency", type=int, help="max in-flight requests (default 8)")
    p.set_defaults(load=_caption_load, run=_caption_run)

    p = sub.add_parser("merge", help="merge manifest parts, rejecting duplicate (image, prompt) keys")
    common(p)
    p.add_argument("--parts", nargs="+", required=True, help="manifest JSONL files to merge")
    p.set_defaults(load=_merge_load, run=_merge_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Run one subcommand; returns the process exit code (0/1/2)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"satpair: error: {exc}", file=sys.stderr)
        return 1
    try:
        inputs = args.load(args)
    except (_UsageError, SatpairError) as exc:
        print(f"satpair: validation error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"satpair: validation error: {exc}", file=sys.stderr)
        return 1
    try:
        args.run(args, inputs)
    except Exception as exc:  # anything after validation is a runtime failure
        print(f"satpair: runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


def entry() -> None:
    """console_scripts entry point."""
    raise SystemExit(main())
