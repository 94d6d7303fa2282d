"""Objective adherence metrics for generated music.

Instead of asking listeners, we measure how closely a generated piece matches
the scale and density it was conditioned on: the fraction of note-ons landing
on pitch classes the preset forbids, the L1 gap between the generated
pitch-class distribution and the preset's, and the absolute error of the mean
note density against the preset density.  ``compare`` runs the same battery
over a feature-conditioned and a label-conditioned checkpoint side by side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .checkpoint import Checkpoint
from .events import EventKind, PerformanceEvent, decode
from .features import Emotion, emotion_preset, mean_density, normalize
from .generation import SamplerConfig, generate

COMPARISON_COLUMNS = (
    "emotion",
    "model",
    "out_of_scale_fraction",
    "mean_density",
    "density_abs_error",
    "histogram_l1",
    "n_notes",
)

# Metrics where smaller means closer adherence (mean_density is judged
# through density_abs_error; n_notes is descriptive only).
_LOWER_IS_BETTER = ("out_of_scale_fraction", "density_abs_error", "histogram_l1")


@dataclass(frozen=True)
class AdherenceReport:
    """Pitch metrics are NaN when the sequence contains no note-ons."""

    out_of_scale_fraction: float
    mean_density: float
    density_abs_error: float
    histogram_l1: float
    n_notes: int


def adherence(
    events: Sequence[PerformanceEvent],
    preset: tuple[np.ndarray, int],
) -> AdherenceReport:
    """Score one event sequence against a (histogram, density) preset.

    Pitch metrics count note-on events directly; density is measured on the
    decoded notes over 2-second windows stepped at 0.5 s.  Trailing silence
    therefore leaves the pitch metrics untouched.
    """
    preset_histogram, preset_density = preset
    preset_histogram = np.asarray(preset_histogram, dtype=float)

    pitch_classes = [
        e.value % 12 for e in events if e.kind is EventKind.NOTE_ON
    ]
    if pitch_classes:
        forbidden = preset_histogram == 0
        out_of_scale = sum(forbidden[pc] for pc in pitch_classes) / len(pitch_classes)
        counts = np.bincount(pitch_classes, minlength=12).astype(float)
        histogram_l1 = float(
            np.abs(normalize(counts) - normalize(preset_histogram)).sum()
        )
    else:
        out_of_scale = math.nan
        histogram_l1 = math.nan

    notes = decode(events)
    density = mean_density(notes) if len(notes) else 0.0
    return AdherenceReport(
        out_of_scale_fraction=float(out_of_scale),
        mean_density=density,
        density_abs_error=abs(density - preset_density),
        histogram_l1=histogram_l1,
        n_notes=len(notes),
    )


def _mean_report(reports: list[AdherenceReport]) -> dict[str, float]:
    def nanmean(values: list[float]) -> float:
        finite = [v for v in values if not math.isnan(v)]
        return sum(finite) / len(finite) if finite else math.nan

    return {
        "out_of_scale_fraction": nanmean([r.out_of_scale_fraction for r in reports]),
        "mean_density": nanmean([r.mean_density for r in reports]),
        "density_abs_error": nanmean([r.density_abs_error for r in reports]),
        "histogram_l1": nanmean([r.histogram_l1 for r in reports]),
        "n_notes": nanmean([float(r.n_notes) for r in reports]),
    }


def _winner(metric: str, features_value: float, labels_value: float) -> str:
    if math.isnan(features_value) and math.isnan(labels_value):
        return "tie"
    if math.isnan(labels_value):
        return "features"
    if math.isnan(features_value):
        return "labels"
    if features_value == labels_value:
        return "tie"
    return "features" if features_value < labels_value else "labels"


def compare(
    ckpt_features: Checkpoint,
    ckpt_labels: Checkpoint,
    n_samples: int,
    cfg: SamplerConfig,
    tonic_pitch_class: int = 0,
) -> list[dict[str, object]]:
    """Adherence of both models across all four emotions.

    Generates n_samples pieces per (emotion, model) with matching seeds on
    both sides, averages the reports, and appends one winner row per emotion
    naming the better model per error metric.  Returns the table as a list of
    dicts keyed by COMPARISON_COLUMNS.
    """
    rows: list[dict[str, object]] = []
    if n_samples == 0:
        return rows
    for emotion_idx, emotion in enumerate(Emotion):
        preset = emotion_preset(emotion, tonic_pitch_class)
        means: dict[str, dict[str, float]] = {}
        for model_name, ckpt in (("features", ckpt_features), ("labels", ckpt_labels)):
            reports = []
            for sample in range(n_samples):
                sample_cfg = replace(
                    cfg, seed=cfg.seed + 100_000 * emotion_idx + sample
                )
                events = generate(ckpt, emotion, sample_cfg, tonic_pitch_class)
                reports.append(adherence(events, preset))
            means[model_name] = _mean_report(reports)
            rows.append({"emotion": emotion.value, "model": model_name, **means[model_name]})
        winner_row: dict[str, object] = {"emotion": emotion.value, "model": "winner"}
        for metric in COMPARISON_COLUMNS[2:]:
            if metric in _LOWER_IS_BETTER:
                winner_row[metric] = _winner(
                    metric, means["features"][metric], means["labels"][metric]
                )
            elif metric == "mean_density":
                winner_row[metric] = _winner(
                    metric,
                    means["features"]["density_abs_error"],
                    means["labels"]["density_abs_error"],
                )
            else:
                winner_row[metric] = ""
        rows.append(winner_row)
    return rows


def comparison_csv(rows: list[dict[str, object]]) -> str:
    """Render compare() output as CSV with a fixed header."""
    lines = [",".join(COMPARISON_COLUMNS)]
    for row in rows:
        cells = []
        for column in COMPARISON_COLUMNS:
            value = row.get(column, "")
            if isinstance(value, float):
                cells.append(f"{value:.6g}")
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
