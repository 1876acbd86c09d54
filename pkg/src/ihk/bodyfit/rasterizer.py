"""Flat-shaded software rasterizer for orthographic cameras.

Only what the toy pipeline needs: per-face colors, nearest-depth
resolution, no antialiasing. Pixel (row, col) samples the point
(col + 0.5, row + 0.5) in projected coordinates.
"""

from __future__ import annotations

import logging

import numpy as np

from .camera import OrthoCamera, project_ortho, view_depth
from .model import BodyModel, BodyParams, forward_body

logger = logging.getLogger(__name__)

_EDGE_EPS = 1e-9


def rasterize_flat(
    vertices: np.ndarray,
    faces: np.ndarray,
    face_colors: np.ndarray,
    camera: OrthoCamera,
    resolution: tuple[int, int],
    background: np.ndarray,
) -> np.ndarray:
    """Rasterize triangles with constant per-face colors.

    Returns (H, W, C) with C = face_colors.shape[1]; `background` fills
    uncovered pixels. Depth is resolved per pixel by the nearest
    interpolated camera-space depth. Zero-area faces are skipped with a
    warning.
    """
    H, W = resolution
    verts2d = project_ortho(vertices, camera)
    depths = view_depth(vertices, camera)
    C = face_colors.shape[1]
    image = np.tile(np.asarray(background, dtype=np.float64), (H, W, 1)).reshape(H, W, C)
    zbuf = np.full((H, W), np.inf)

    for fi, (ia, ib, ic) in enumerate(faces):
        pa, pb, pc = verts2d[ia], verts2d[ib], verts2d[ic]
        area = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])
        if abs(area) < _EDGE_EPS:
            # warn only for genuinely degenerate faces; edge-on faces are
            # a normal occurrence under orthographic projection
            va, vb, vc = vertices[ia], vertices[ib], vertices[ic]
            if np.linalg.norm(np.cross(vb - va, vc - va)) < _EDGE_EPS:
                logger.warning("skipping zero-area face %d", fi)
            continue
        x_lo = max(int(np.floor(min(pa[0], pb[0], pc[0]) - 0.5)), 0)
        x_hi = min(int(np.ceil(max(pa[0], pb[0], pc[0]) - 0.5)) + 1, W)
        y_lo = max(int(np.floor(min(pa[1], pb[1], pc[1]) - 0.5)), 0)
        y_hi = min(int(np.ceil(max(pa[1], pb[1], pc[1]) - 0.5)) + 1, H)
        if x_lo >= x_hi or y_lo >= y_hi:
            continue
        xs = np.arange(x_lo, x_hi) + 0.5
        ys = np.arange(y_lo, y_hi) + 0.5
        px, py = np.meshgrid(xs, ys)
        w_a = ((pb[0] - px) * (pc[1] - py) - (pc[0] - px) * (pb[1] - py)) / area
        w_b = ((pc[0] - px) * (pa[1] - py) - (pa[0] - px) * (pc[1] - py)) / area
        w_c = 1.0 - w_a - w_b
        inside = (w_a >= -_EDGE_EPS) & (w_b >= -_EDGE_EPS) & (w_c >= -_EDGE_EPS)
        if not inside.any():
            continue
        depth = w_a * depths[ia] + w_b * depths[ib] + w_c * depths[ic]
        tile = zbuf[y_lo:y_hi, x_lo:x_hi]
        closer = inside & (depth < tile)
        tile[closer] = depth[closer]
        image[y_lo:y_hi, x_lo:x_hi][closer] = face_colors[fi]
    return image


def camera_space_face_normals(
    vertices: np.ndarray, faces: np.ndarray, camera: OrthoCamera
) -> np.ndarray:
    """Unit normals of each face in camera coordinates (zero rows for degenerate faces)."""
    cam_verts = vertices @ camera.rotation.T
    a = cam_verts[faces[:, 0]]
    n = np.cross(cam_verts[faces[:, 1]] - a, cam_verts[faces[:, 2]] - a)
    norms = np.linalg.norm(n, axis=1, keepdims=True)
    return np.divide(n, norms, out=np.zeros_like(n), where=norms > 0)


def render_normal_map(
    model: BodyModel,
    params: BodyParams,
    camera: OrthoCamera,
    resolution: tuple[int, int],
) -> np.ndarray:
    """Camera-space normals as colors (n+1)/2 over a 0.5-gray background."""
    vertices, _ = forward_body(model, params)
    return render_normal_map_mesh(vertices, model.faces, camera, resolution)


def render_normal_map_mesh(
    vertices: np.ndarray, faces: np.ndarray, camera: OrthoCamera, resolution
) -> np.ndarray:
    if len(faces) == 0:
        H, W = resolution
        return np.full((H, W, 3), 0.5)
    normals = camera_space_face_normals(vertices, faces, camera)
    colors = (normals + 1.0) / 2.0
    return rasterize_flat(vertices, faces, colors, camera, resolution, np.full(3, 0.5))


def render_colored(
    model: BodyModel,
    params: BodyParams,
    camera: OrthoCamera,
    resolution: tuple[int, int],
    part_colors: np.ndarray,
    face_mask: np.ndarray | None = None,
    background: np.ndarray | None = None,
) -> np.ndarray:
    """RGBA render with per-part albedo and headlight shading.

    `part_colors` is (num_parts, 3); shading multiplies the albedo by
    0.55 + 0.45 * max(n_z, 0) in camera space. `face_mask` selects a face
    subset (e.g. garment-only renders). Background defaults to transparent
    black.
    """
    vertices, _ = forward_body(model, params)
    faces = model.faces
    if face_mask is not None:
        faces = faces[face_mask]
    if background is None:
        background = np.zeros(4)
    if len(faces) == 0:
        H, W = resolution
        return np.tile(np.asarray(background, dtype=np.float64), (H, W, 1))
    normals = camera_space_face_normals(vertices, faces, camera)
    shade = 0.55 + 0.45 * np.clip(normals[:, 2], 0.0, None)
    if model.vertex_parts is None:
        raise ValueError("model has no vertex part labels")
    albedo = part_colors[model.vertex_parts[faces[:, 0]]]
    rgba = np.concatenate([albedo * shade[:, None], np.ones((len(faces), 1))], axis=1)
    return rasterize_flat(vertices, faces, rgba, camera, resolution, np.asarray(background))


def garment_face_mask(model: BodyModel, part_ids: tuple[int, ...]) -> np.ndarray:
    """Faces whose first vertex belongs to one of `part_ids`."""
    if model.vertex_parts is None:
        raise ValueError("model has no vertex part labels")
    return np.isin(model.vertex_parts[model.faces[:, 0]], np.asarray(part_ids))
