from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np

from .errors import DomainError
from .loss import EPS
from .raster import as_binary
from .skeleton import SkelConfig, binary_skeletonize
from .topology import topology_summary


@dataclass
class MetricReport:
    dice: float
    iou: float
    recall: float
    cl_dice: float
    beta0_error: int
    beta1_error: int
    euler_error: int

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


KEYS = tuple(f.name for f in fields(MetricReport))


def _pair(pred, gt):
    pred, gt = as_binary(pred), as_binary(gt)
    if pred.shape != gt.shape:
        raise DomainError(f"shape mismatch: prediction {pred.shape} vs ground truth {gt.shape}")
    return pred, gt


def overlap_metrics(pred, gt) -> tuple[float, float, float]:
    """Dice, IoU and recall. Two empty masks score 1 on all three."""
    pred, gt = _pair(pred, gt)
    tp = int((pred & gt).sum())
    fp = int((pred & (1 - gt)).sum())
    fn = int(((1 - pred) & gt).sum())

    def ratio(num, den):
        return 1.0 if den == 0 else num / den

    return ratio(2 * tp, 2 * tp + fp + fn), ratio(tp, tp + fp + fn), ratio(tp, tp + fn)


def cl_dice(pred, gt, skel_cfg: SkelConfig = SkelConfig()) -> float:
    pred, gt = _pair(pred, gt)
    sp = binary_skeletonize(pred, skel_cfg).skeleton
    sg = binary_skeletonize(gt, skel_cfg).skeleton
    t_prec = (sp * gt).sum() / (sp.sum() + EPS)
    t_sens = (sg * pred).sum() / (sg.sum() + EPS)
    return float(2.0 * t_prec * t_sens / (t_prec + t_sens + EPS))


def topology_errors(pred, gt) -> tuple[int, int, int]:
    pred, gt = _pair(pred, gt)
    a, b = topology_summary(pred), topology_summary(gt)
    return abs(a.beta0 - b.beta0), abs(a.beta1 - b.beta1), abs(a.euler - b.euler)


def evaluate(pred, gt, skel_cfg: SkelConfig = SkelConfig()) -> MetricReport:
    dice, iou, recall = overlap_metrics(pred, gt)
    return MetricReport(dice, iou, recall, cl_dice(pred, gt, skel_cfg), *topology_errors(pred, gt))


def mean_report(reports: list[MetricReport]) -> dict[str, float]:
    """Per-key mean over a list of reports (Betti errors become floats)."""
    if not reports:
        raise DomainError("no reports to average")
    table = np.array([astuple(r) for r in reports], dtype=np.float64)
    return dict(zip(KEYS, (float(x) for x in table.mean(axis=0))))
