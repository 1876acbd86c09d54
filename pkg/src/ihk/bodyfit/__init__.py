"""Toy parametric body: LBS model, orthographic cameras, rasterizer, pose fitting."""

from .camera import (
    VIEW_LABELS,
    VIEW_YAW_DEG,
    OrthoCamera,
    canonical_cameras,
    head_crop_camera,
    project_ortho,
    view_depth,
    yaw_camera,
    yaw_rotation,
)
from .fitting import (
    FitConfig,
    FitResult,
    Joints2D,
    fit_pose,
    fit_pose_detailed,
    load_keypoints,
    reprojection_loss,
    reprojection_loss_grad,
    save_keypoints,
    weighted_rmse,
)
from .humanoid import (
    FACE_HAND_KEYPOINTS,
    GARMENT_BOTTOM_PARTS,
    GARMENT_TOP_PARTS,
    JOINT_NAMES,
    KEYPOINT_NAMES,
    PART_IDS,
    PART_NAMES,
    build_toy_body,
    default_keypoint_weights,
    load_default_model,
    write_default_fixture,
)
from .model import BodyModel, BodyParams, forward_body, load_model, rodrigues, save_model
from .rasterizer import (
    garment_face_mask,
    render_colored,
    render_normal_map,
    render_normal_map_mesh,
    rasterize_flat,
)

__all__ = [name for name in dir() if not name.startswith("_")]
