"""Geometric alignment losses over normalized plan coordinates.

Boxes are (cx, cy, w, h) rows in [-1, 1] space. Everything is torch and
differentiable almost everywhere; the batched *sample_* variants soften
room presence through a sigmoid on the is-room flag so gradients reach it.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch

from .masking import masked_noise_loss
from .plans import COL_CX, COL_ISROOM

ABSENT_DISTANCE = 4.0  # farther than any point in the [-1, 1] canvas


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 1.0  # clean-tensor alignment
    lambda2: float = 0.5  # boundary alignment
    lambda3: float = 0.5  # neighborhood (IoU + gap)
    gap_threshold: float = 0.1  # d, normalized units


def _t(x, like=None):
    if isinstance(x, torch.Tensor):
        return x
    import numpy as np

    dtype = like.dtype if isinstance(like, torch.Tensor) else torch.float64
    return torch.as_tensor(np.asarray(x, dtype=np.float64), dtype=dtype)


def _corners(box):
    """(..., 4) center-size -> (x1, y1, x2, y2)"""
    cx, cy, w, h = box[..., 0], box[..., 1], box[..., 2], box[..., 3]
    return cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2


def box_iou(a, b):
    """Intersection over union of two axis-aligned boxes (zero when disjoint)."""
    a, b = _t(a), _t(b, a)
    ax1, ay1, ax2, ay2 = _corners(a)
    bx1, by1, bx2, by2 = _corners(b)
    ix = (torch.minimum(ax2, bx2) - torch.maximum(ax1, bx1)).clamp(min=0)
    iy = (torch.minimum(ay2, by2) - torch.maximum(ay1, by1)).clamp(min=0)
    inter = ix * iy
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union.clamp(min=1e-12)


def box_gap(a, b, d: float = 0.1):
    """Manhattan gap between two boxes, zeroed when either axis gap exceeds d."""
    a, b = _t(a), _t(b, a)
    ax1, ay1, ax2, ay2 = _corners(a)
    bx1, by1, bx2, by2 = _corners(b)
    gx = (torch.maximum(ax1, bx1) - torch.minimum(ax2, bx2)).clamp(min=0)
    gy = (torch.maximum(ay1, by1) - torch.minimum(ay2, by2)).clamp(min=0)
    near = (gx <= d) & (gy <= d)
    return torch.where(near, gx + gy, torch.zeros_like(gx))


def _outside_distance(px, py, boxes):
    """Euclidean distance from points to closed boxes; zero inside.

    px, py: (...,) points; boxes: (..., 4). Shapes must broadcast.
    """
    x1, y1, x2, y2 = _corners(boxes)
    dx = torch.maximum(x1 - px, px - x2).clamp(min=0)
    dy = torch.maximum(y1 - py, py - y2).clamp(min=0)
    d2 = dx * dx + dy * dy
    # keep sqrt's gradient finite where d2 > 0; exact zero inside the box
    safe = torch.sqrt(d2.clamp(min=1e-30))
    return torch.where(d2 > 0, safe, torch.zeros_like(safe))


def boundary_corner_distance(corner, boxes):
    """Distance from one boundary corner to the nearest room box."""
    boxes = _t(boxes)
    corner = _t(corner, boxes)
    if boxes.ndim == 1:
        boxes = boxes[None]
    if boxes.shape[0] == 0:
        return torch.zeros((), dtype=boxes.dtype)
    return _outside_distance(corner[0], corner[1], boxes).min()


def align_bound_loss(boxes, corners):
    """Mean over boundary corners of distance to the nearest room box."""
    boxes = _t(boxes)
    corners = _t(corners, boxes)
    if boxes.shape[0] == 0:
        return torch.zeros((), dtype=boxes.dtype)
    d = _outside_distance(corners[:, 0, None], corners[:, 1, None], boxes[None, :, :])
    return d.min(dim=1).values.mean()


def align_neigh_loss(boxes, d: float = 0.1):
    """Mean over unordered room pairs of IoU plus thresholded gap."""
    boxes = _t(boxes)
    n = boxes.shape[0]
    if n < 2:
        return torch.zeros((), dtype=boxes.dtype)
    ii, jj = torch.triu_indices(n, n, offset=1)
    vals = box_iou(boxes[ii], boxes[jj]) + box_gap(boxes[ii], boxes[jj], d)
    return vals.mean()


def align_gt_loss(x0_hat, x0, mask):
    """Masked MSE between the estimated clean tensor and the ground truth."""
    return masked_noise_loss(x0_hat, x0, mask)


def combine_losses(weights: LossWeights, l_noise, l_gt, l_neigh, l_bound=None) -> dict:
    """Weighted total; the boundary term is omitted entirely when disabled."""
    total = l_noise + weights.lambda1 * l_gt + weights.lambda3 * l_neigh
    parts = {"noise": l_noise, "gt": l_gt, "neigh": l_neigh}
    if l_bound is not None:
        total = total + weights.lambda2 * l_bound
        parts["bound"] = l_bound
    parts["total"] = total
    return parts


# ---------------------------------------------------------------------------
# batched, soft-presence variants used by the trainer

def room_weights(x, sharpness: float = 10.0):
    """Soft is-room indicator per row: sigmoid(sharpness * flag)."""
    return torch.sigmoid(sharpness * x[..., COL_ISROOM])


def tensor_boxes(x):
    """(..., 8, 6) plan tensor -> (..., 8, 4) boxes with non-negative sizes."""
    geo = x[..., COL_CX:]
    return torch.cat([geo[..., :2], geo[..., 2:].abs()], dim=-1)


def sample_bound_loss(x, corners, sharpness: float = 10.0):
    """Per-sample boundary loss; absent rooms are pushed out of the minimum.

    x: (B, 8, 6); corners: (B, C, 2) normalized boundary corners.
    """
    boxes = tensor_boxes(x)
    w = room_weights(x, sharpness)
    d = _outside_distance(corners[..., 0, None], corners[..., 1, None], boxes[:, None, :, :])
    eff = d + (1.0 - w)[:, None, :] * ABSENT_DISTANCE
    return eff.min(dim=2).values.mean(dim=1)


def sample_neigh_loss(x, d: float = 0.1, sharpness: float = 10.0):
    """Per-sample neighborhood loss, pairs weighted by soft room presence."""
    boxes = tensor_boxes(x)
    w = room_weights(x, sharpness)
    n = boxes.shape[-2]
    ii, jj = torch.triu_indices(n, n, offset=1)
    vals = box_iou(boxes[:, ii], boxes[:, jj]) + box_gap(boxes[:, ii], boxes[:, jj], d)
    pw = w[:, ii] * w[:, jj]
    return (vals * pw).sum(dim=1) / pw.sum(dim=1).clamp(min=1e-8)
