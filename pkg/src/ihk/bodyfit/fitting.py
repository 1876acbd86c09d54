"""Pose refinement by weighted 2D keypoint reprojection.

The loss is sum_k w_k ||project(keypoint_k) - target_k||^2 plus an
optional squared pull of the pose toward a reference pose. Optimization
is plain gradient descent with Armijo backtracking, fixed iteration
budget, fully deterministic. Shape stays fixed; translation is
co-optimized by default, scale never is.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import torch

from .camera import OrthoCamera
from .model import BodyModel, BodyModelTensors, BodyParams, lbs_forward

logger = logging.getLogger(__name__)


@dataclass
class Joints2D:
    positions: np.ndarray    # (K,2) pixels
    weights: np.ndarray      # (K,) nonnegative

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.validate()

    def validate(self) -> None:
        if self.positions.ndim != 2 or self.positions.shape[1] != 2:
            raise ValueError("positions must be (K,2)")
        if self.weights.shape != (self.positions.shape[0],):
            raise ValueError("weights must be (K,)")
        if (self.weights < 0).any():
            raise ValueError("weights must be nonnegative")
        active = self.weights > 0
        if not np.isfinite(self.positions[active]).all():
            raise ValueError("positions must be finite where weight > 0")


@dataclass
class FitConfig:
    iterations: int = 200
    initial_step: float = 1e-4
    shrink: float = 0.5
    grow: float = 2.0
    armijo: float = 1e-4
    min_step: float = 1e-14
    max_backtracks: int = 30
    pose_regularizer_weight: float = 1e-3
    optimize_translation: bool = True
    grad_tolerance: float = 1e-12


@dataclass
class FitResult:
    params: BodyParams
    loss_history: list[float] = field(default_factory=list)   # best-so-far per iteration
    final_loss: float = 0.0
    aborted: bool = False
    message: str = ""


def _loss_terms(
    tensors: BodyModelTensors,
    pose: torch.Tensor,
    beta: torch.Tensor,
    translation: torch.Tensor,
    scale: float,
    rotation: torch.Tensor,
    image_scale: float,
    offset: torch.Tensor,
    target_pos: torch.Tensor,
    target_w: torch.Tensor,
    reg_weight: float,
    pose_ref: torch.Tensor,
) -> torch.Tensor:
    _, keypoints = lbs_forward(tensors, pose, beta, translation, scale)
    projected = image_scale * (keypoints @ rotation.T)[:, :2] + offset
    residual = projected - target_pos
    data = (target_w * (residual**2).sum(dim=1)).sum()
    reg = reg_weight * ((pose - pose_ref) ** 2).sum()
    return data + reg


class _LossClosure:
    def __init__(self, model, camera, targets, reg_weight, pose_ref, beta, scale):
        self.tensors = BodyModelTensors(model)
        self.rotation = torch.as_tensor(camera.rotation, dtype=torch.float64)
        self.image_scale = float(camera.image_scale)
        self.offset = torch.as_tensor(camera.principal_offset, dtype=torch.float64)
        self.target_pos = torch.as_tensor(targets.positions, dtype=torch.float64)
        self.target_w = torch.as_tensor(targets.weights, dtype=torch.float64)
        self.reg_weight = float(reg_weight)
        self.pose_ref = torch.as_tensor(pose_ref, dtype=torch.float64)
        self.beta = torch.as_tensor(beta, dtype=torch.float64)
        self.scale = float(scale)

    def value(self, pose: torch.Tensor, translation: torch.Tensor) -> torch.Tensor:
        return _loss_terms(
            self.tensors, pose, self.beta, translation, self.scale,
            self.rotation, self.image_scale, self.offset,
            self.target_pos, self.target_w, self.reg_weight, self.pose_ref,
        )


def reprojection_loss(
    model: BodyModel,
    params: BodyParams,
    camera: OrthoCamera,
    targets: Joints2D,
    pose_regularizer_weight: float = 0.0,
    pose_reference: np.ndarray | None = None,
) -> float:
    """Weighted squared reprojection error plus pose regularizer.

    `pose_reference` defaults to the zero pose when the regularizer is active.
    """
    if targets.positions.shape[0] != model.num_keypoints:
        raise ValueError("targets must provide one entry per model keypoint")
    ref = np.zeros_like(params.pose_theta) if pose_reference is None else pose_reference
    closure = _LossClosure(
        model, camera, targets, pose_regularizer_weight, ref, params.shape_beta, params.scale
    )
    with torch.no_grad():
        loss = closure.value(
            torch.as_tensor(params.pose_theta, dtype=torch.float64),
            torch.as_tensor(params.translation, dtype=torch.float64),
        )
    return float(loss)


def reprojection_loss_grad(
    model: BodyModel,
    params: BodyParams,
    camera: OrthoCamera,
    targets: Joints2D,
    pose_regularizer_weight: float = 0.0,
    pose_reference: np.ndarray | None = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss and its gradients w.r.t. (pose_theta, translation)."""
    ref = np.zeros_like(params.pose_theta) if pose_reference is None else pose_reference
    closure = _LossClosure(
        model, camera, targets, pose_regularizer_weight, ref, params.shape_beta, params.scale
    )
    pose = torch.as_tensor(params.pose_theta, dtype=torch.float64).requires_grad_(True)
    trans = torch.as_tensor(params.translation, dtype=torch.float64).requires_grad_(True)
    loss = closure.value(pose, trans)
    loss.backward()
    return float(loss), pose.grad.numpy().copy(), trans.grad.numpy().copy()


def fit_pose_detailed(
    model: BodyModel,
    init: BodyParams,
    camera: OrthoCamera,
    targets: Joints2D,
    config: FitConfig | None = None,
) -> FitResult:
    """Gradient descent with backtracking line search from `init`.

    The regularizer anchors at the initial pose. Returns the best
    parameters seen; the recorded best loss is nonincreasing.
    """
    cfg = config or FitConfig()
    if targets.positions.shape[0] != model.num_keypoints:
        raise ValueError("targets must provide one entry per model keypoint")
    closure = _LossClosure(
        model, camera, targets, cfg.pose_regularizer_weight,
        init.pose_theta, init.shape_beta, init.scale,
    )

    pose = torch.as_tensor(init.pose_theta.copy(), dtype=torch.float64)
    trans = torch.as_tensor(init.translation.copy(), dtype=torch.float64)

    def evaluate(p, t, with_grad=False):
        if not with_grad:
            with torch.no_grad():
                return float(closure.value(p, t)), None, None
        p = p.clone().requires_grad_(True)
        t = t.clone().requires_grad_(True)
        loss = closure.value(p, t)
        loss.backward()
        g_t = t.grad if cfg.optimize_translation else torch.zeros_like(t)
        return float(loss), p.grad, g_t

    loss0, _, _ = evaluate(pose, trans)
    if not np.isfinite(loss0):
        return FitResult(init.copy(), [loss0], loss0, True, "non-finite loss at init")

    best_loss = loss0
    best = (pose.clone(), trans.clone())
    history = [best_loss]
    step = cfg.initial_step

    for it in range(cfg.iterations):
        loss, g_pose, g_trans = evaluate(pose, trans, with_grad=True)
        if not (np.isfinite(loss) and torch.isfinite(g_pose).all() and torch.isfinite(g_trans).all()):
            return FitResult(
                _pack(best, init), history, best_loss, True,
                f"non-finite loss/gradient at iteration {it}",
            )
        g2 = float((g_pose**2).sum() + (g_trans**2).sum())
        if g2 <= cfg.grad_tolerance:
            break
        s = step
        accepted = False
        for _ in range(cfg.max_backtracks):
            cand_pose = pose - s * g_pose
            cand_trans = trans - s * g_trans
            cand_loss, _, _ = evaluate(cand_pose, cand_trans)
            if np.isfinite(cand_loss) and cand_loss <= loss - cfg.armijo * s * g2:
                pose, trans = cand_pose, cand_trans
                step = s * cfg.grow
                accepted = True
                if cand_loss < best_loss:
                    best_loss = cand_loss
                    best = (pose.clone(), trans.clone())
                break
            s *= cfg.shrink
            if s < cfg.min_step:
                break
        if not accepted:
            break
        history.append(best_loss)

    result = FitResult(_pack(best, init), history, best_loss, False, "")
    return result


def _pack(best: tuple[torch.Tensor, torch.Tensor], init: BodyParams) -> BodyParams:
    pose, trans = best
    return BodyParams(
        pose_theta=pose.numpy().copy(),
        shape_beta=init.shape_beta.copy(),
        translation=trans.numpy().copy(),
        scale=init.scale,
    )


def fit_pose(
    model: BodyModel,
    init: BodyParams,
    camera: OrthoCamera,
    targets: Joints2D,
    config: FitConfig | None = None,
) -> BodyParams:
    result = fit_pose_detailed(model, init, camera, targets, config)
    if result.aborted:
        logger.error("fit_pose aborted: %s (returning best-so-far)", result.message)
    return result.params


def weighted_rmse(
    model: BodyModel, params: BodyParams, camera: OrthoCamera, targets: Joints2D
) -> float:
    """Weight-normalized root-mean-square reprojection error in pixels."""
    data_loss = reprojection_loss(model, params, camera, targets, 0.0)
    total_w = float(targets.weights.sum())
    if total_w == 0:
        return 0.0
    return float(np.sqrt(data_loss / total_w))


def save_keypoints(path, joints: Joints2D, names: list[str]) -> None:
    """Write keypoints as a JSON array of {name, x, y, weight}."""
    if len(names) != joints.positions.shape[0]:
        raise ValueError("names length must match keypoint count")
    rows = [
        {"name": n, "x": float(x), "y": float(y), "weight": float(w)}
        for n, (x, y), w in zip(names, joints.positions, joints.weights)
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2)


def load_keypoints(path, names: list[str]) -> Joints2D:
    """Read a keypoint JSON file, reordered to `names`; missing entries get weight 0."""
    with open(path, "r", encoding="utf-8") as fh:
        rows = json.load(fh)
    by_name = {row["name"]: row for row in rows}
    unknown = set(by_name) - set(names)
    if unknown:
        raise ValueError(f"unknown keypoint names in {path}: {sorted(unknown)}")
    positions = np.zeros((len(names), 2))
    weights = np.zeros(len(names))
    for i, name in enumerate(names):
        row = by_name.get(name)
        if row is not None:
            positions[i] = (row["x"], row["y"])
            weights[i] = row.get("weight", 1.0)
    return Joints2D(positions, weights)


__all__ = [
    "FitConfig",
    "FitResult",
    "Joints2D",
    "fit_pose",
    "fit_pose_detailed",
    "load_keypoints",
    "reprojection_loss",
    "reprojection_loss_grad",
    "save_keypoints",
    "weighted_rmse",
]
