"""Orthographic cameras and projection.

Convention (stated once, pinned by tests): column vectors, right-handed
world, camera space has x right / y up and looks down its own -z axis.
A point projects as  p2d = image_scale * (rotation @ p3d)[:2] + offset,
so the view-axis coordinate is simply dropped. Pixel (row, col) samples
the continuous point (col + 0.5, row + 0.5), with p2d[0] the column axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

VIEW_LABELS = ("front", "right", "back", "left")
VIEW_YAW_DEG = {"front": 0.0, "right": 90.0, "back": 180.0, "left": 270.0}


@dataclass
class OrthoCamera:
    rotation: np.ndarray                   # (3,3) world -> camera
    image_scale: float                     # pixels per meter
    principal_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64)
        self.principal_offset = np.asarray(self.principal_offset, dtype=np.float64)
        self.validate()

    def validate(self) -> None:
        if self.rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {self.rotation.shape}")
        if not np.allclose(self.rotation.T @ self.rotation, np.eye(3), atol=1e-6):
            raise ValueError("rotation is not orthonormal")
        if not math.isclose(float(np.linalg.det(self.rotation)), 1.0, abs_tol=1e-6):
            raise ValueError("rotation determinant must be +1")
        if not self.image_scale > 0:
            raise ValueError("image_scale must be positive")
        if self.principal_offset.shape != (2,):
            raise ValueError("principal_offset must have shape (2,)")

    def to_dict(self) -> dict:
        return {
            "rotation": self.rotation.tolist(),
            "image_scale": float(self.image_scale),
            "principal_offset": self.principal_offset.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OrthoCamera":
        return cls(
            rotation=np.asarray(data["rotation"], dtype=np.float64),
            image_scale=float(data["image_scale"]),
            principal_offset=np.asarray(data["principal_offset"], dtype=np.float64),
        )


def project_ortho(points3d: np.ndarray, camera: OrthoCamera) -> np.ndarray:
    """Project (N,3) world points to (N,2) pixel coordinates."""
    pts = np.asarray(points3d, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"points3d must be (N,3), got {pts.shape}")
    cam = pts @ camera.rotation.T
    return camera.image_scale * cam[:, :2] + camera.principal_offset


def view_depth(points3d: np.ndarray, camera: OrthoCamera) -> np.ndarray:
    """Per-point depth along the viewing direction; smaller is nearer."""
    pts = np.asarray(points3d, dtype=np.float64)
    return -(pts @ camera.rotation.T)[:, 2]


def yaw_rotation(degrees: float) -> np.ndarray:
    """World->camera rotation for a camera orbited `degrees` about world y."""
    phi = math.radians(degrees)
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def yaw_camera(degrees: float, image_scale: float, resolution: int) -> OrthoCamera:
    """Orbit camera centered on the origin for a square image."""
    offset = np.array([resolution / 2.0, resolution / 2.0])
    return OrthoCamera(yaw_rotation(degrees), image_scale, offset)


def canonical_cameras(image_scale: float, resolution: int) -> dict[str, OrthoCamera]:
    """The four orbit cameras keyed by view label (front/right/back/left)."""
    return {
        label: yaw_camera(VIEW_YAW_DEG[label], image_scale, resolution)
        for label in VIEW_LABELS
    }


def head_crop_camera(
    body_camera: OrthoCamera, head_center3d: np.ndarray, zoom: float, resolution: int
) -> OrthoCamera:
    """Same orientation as the body camera, zoomed and recentered on the head.

    Stand-in for a dedicated head-view camera: a fixed crop box around the
    posed head center.
    """
    scale = body_camera.image_scale * zoom
    center = np.asarray(head_center3d, dtype=np.float64)
    cam_xy = (body_camera.rotation @ center)[:2]
    offset = np.array([resolution / 2.0, resolution / 2.0]) - scale * cam_xy
    return OrthoCamera(body_camera.rotation.copy(), scale, offset)
