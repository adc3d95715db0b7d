"""Activation-comparison experiments: shared data, shared init, one row per activation.

The fairness rule: every roster entry sees the same dataset, the same split,
and the same weight-initialization stream (same seed), so the only difference
between rows is the activation itself.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import metrics
from .activations import AsauParams, BaselineKind
from .data import LabeledSet, MaskSet, SplitSpec, gen_blobs, gen_shapes_seg, gen_two_moons, split_dataset
from .losses import combined_loss_on_logits, sigmoid, softmax_ce_loss
from .nn import Activation, AsauSpec, BaselineSpec, Conv2d, Dense, MaxPool2x2, Network, Upsample2x
from .rng import SplitMix64
from .tensor import Tensor
from .train import TrainConfig, TrainingDiverged, train_loop


def roster_entry_to_spec(entry: dict) -> tuple[str, object]:
    """Map a roster config entry to (row label, activation spec)."""
    name = entry["name"].lower()
    if name == "relu":
        return entry.get("label", "ReLU"), BaselineSpec(BaselineKind.relu())
    if name in ("lrelu", "leaky_relu"):
        kind = BaselineKind.leaky_relu(entry.get("slope", 0.01))
        return entry.get("label", "LReLU"), BaselineSpec(kind)
    if name == "prelu":
        kind = BaselineKind.prelu(entry.get("slope", 0.25))
        return entry.get("label", "PReLU"), BaselineSpec(kind, trainable_slope=True)
    if name == "mish":
        return entry.get("label", "Mish"), BaselineSpec(BaselineKind.mish())
    if name == "asau":
        params = AsauParams(entry.get("a", 0.0), entry.get("b", 1.0),
                            entry.get("alpha", 1.0), entry.get("beta", 1.0))
        trainable = tuple(bool(f) for f in entry.get("trainable", (False, False, True, True)))
        spec = AsauSpec(params, trainable, entry.get("granularity", "per_layer"))
        return entry.get("label", "ASAU"), spec
    raise ValueError(f"unknown activation name {entry['name']!r}")


def build_mlp(in_dim: int, hidden: int, k: int, act_spec, rng: SplitMix64) -> Network:
    layers = [Dense(in_dim, hidden), Activation(act_spec), Dense(hidden, k)]
    return Network(layers, (in_dim,), rng)


def build_encoder_decoder(act_spec, rng: SplitMix64, in_shape=(1, 32, 32),
                          base: int = 8) -> Network:
    c, h, w = in_shape
    layers = [
        Conv2d(c, base), Activation(act_spec), MaxPool2x2(),
        Conv2d(base, 2 * base), Activation(act_spec), MaxPool2x2(),
        Conv2d(2 * base, 2 * base), Activation(act_spec), Upsample2x(),
        Conv2d(2 * base, base), Activation(act_spec), Upsample2x(),
        Conv2d(base, c),
    ]
    return Network(layers, in_shape, rng)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _predict_chunks(net: Network, features: np.ndarray, chunk: int = 128) -> np.ndarray:
    outs = [net.predict(Tensor.from_array(features[i:i + chunk])).array()
            for i in range(0, features.shape[0], chunk)]
    return np.concatenate(outs, axis=0)


def classification_accuracy(net: Network, ds: LabeledSet) -> float:
    logits = _predict_chunks(net, ds.features.array())
    pred = logits.argmax(axis=1)
    return float(np.mean(pred == np.asarray(ds.labels)))


def classification_test_report(net: Network, ds: LabeledSet) -> dict[str, float]:
    logits = _predict_chunks(net, ds.features.array())
    cm = metrics.confusion_from_predictions(ds.labels, logits.argmax(axis=1), ds.k)
    return metrics.classification_report(cm)


def mean_dice(net: Network, ds: MaskSet, threshold: float = 0.5) -> float:
    probs = sigmoid(_predict_chunks(net, ds.images.array()))
    masks = ds.masks.array()
    dices = [metrics.dice_binary(probs[i] >= threshold, masks[i]) for i in range(len(ds))]
    return metrics.mean_over_cases(dices)


def segmentation_test_report(net: Network, ds: MaskSet,
                             threshold: float = 0.5) -> dict[str, float]:
    probs = sigmoid(_predict_chunks(net, ds.images.array()))
    masks = ds.masks.array()
    dices, ious, recalls, precisions = [], [], [], []
    for i in range(len(ds)):
        pred = probs[i] >= threshold
        dices.append(metrics.dice_binary(pred, masks[i]))
        ious.append(metrics.iou_binary(pred, masks[i]))
        prec, rec = metrics.seg_precision_recall(pred, masks[i])
        precisions.append(prec)
        recalls.append(rec)
    return metrics.segmentation_report(dices, ious, recalls, precisions)


# ---------------------------------------------------------------------------
# comparison runs
# ---------------------------------------------------------------------------

CLASSIFICATION_COLUMNS = ["precision_macro", "recall_macro", "f1_macro",
                          "precision_micro", "recall_micro", "f1_micro",
                          "accuracy", "mcc"]
SEGMENTATION_COLUMNS = ["mdsc", "miou", "recall", "precision"]


@dataclass
class CompareRow:
    label: str
    metrics: dict[str, float] | None
    diverged: bool
    history: list[tuple[int, float, float]]
    best_values: np.ndarray | None
    net: Network | None


def make_dataset(task: str, params: dict):
    seed = int(params.get("seed", 0))
    if task == "classification":
        name = params.get("name", "two_moons")
        if name == "two_moons":
            return gen_two_moons(int(params.get("n", 1000)),
                                 float(params.get("noise", 0.1)), seed)
        if name == "blobs":
            return gen_blobs(int(params.get("n", 1000)), int(params.get("k", 4)),
                             float(params.get("spread", 0.6)), seed)
        raise ValueError(f"unknown classification dataset {name!r}")
    if task == "segmentation":
        return gen_shapes_seg(int(params.get("n", 200)), int(params.get("h", 32)),
                              int(params.get("w", 32)), seed)
    raise ValueError(f"unknown task {task!r}")


def worker_count(n_entries: int) -> int:
    cap = int(os.environ.get("ASAUKIT_THREADS", "1"))
    return max(1, min(cap, n_entries))


def run_compare(task: str, roster: list[dict], dataset_params: dict,
                config: TrainConfig, arch_params: dict | None = None) -> list[CompareRow]:
    """Train one model per roster entry and evaluate on the shared test split."""
    if not roster:
        raise ValueError("roster must contain at least one activation")
    arch_params = arch_params or {}
    dataset = make_dataset(task, dataset_params)
    splits = split_dataset(dataset, SplitSpec(config.split, config.seed))

    if task == "classification":
        def build(spec):
            return build_mlp(dataset.features.shape[1], int(arch_params.get("hidden", 16)),
                             dataset.k, spec, SplitMix64(config.seed))

        def loss_fn(out, target):
            return softmax_ce_loss(out, target)

        metric_fn, report_fn = classification_accuracy, classification_test_report
    else:
        in_shape = dataset.images.shape[1:]

        def build(spec):
            return build_encoder_decoder(spec, SplitMix64(config.seed), in_shape,
                                         int(arch_params.get("base", 8)))

        def loss_fn(out, target):
            return combined_loss_on_logits(out, target)

        metric_fn, report_fn = mean_dice, segmentation_test_report

    def run_entry(entry: dict) -> CompareRow:
        label, spec = roster_entry_to_spec(entry)
        net = build(spec)
        try:
            result = train_loop(net, splits, config, loss_fn, metric_fn,
                                weight_decay=float(arch_params.get("weight_decay", 1e-4)))
        except TrainingDiverged:
            return CompareRow(label, None, True, [], None, None)
        report = report_fn(net, splits[2])
        return CompareRow(label, report, False, result.history, result.best_values, net)

    workers = worker_count(len(roster))
    if workers == 1:
        return [run_entry(e) for e in roster]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_entry, roster))


def rows_to_csv(rows: list[CompareRow], columns: list[str], path) -> None:
    """One row per activation; the column set mirrors the task's report keys."""
    with open(path, "w", newline="") as f:
        f.write(",".join(["activation"] + columns) + "\n")
        for row in rows:
            if row.diverged:
                f.write(",".join([row.label] + ["nan"] * len(columns)) + "\n")
            else:
                f.write(",".join([row.label] + ["%.17g" % row.metrics[c] for c in columns]) + "\n")
