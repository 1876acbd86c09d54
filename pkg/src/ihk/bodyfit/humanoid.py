"""Procedural toy humanoid: template mesh, skinning, keypoints, shape modes.

Fully deterministic closed-form construction (no RNG): tube segments per
bone, a lat-long head sphere, hand and foot extensions. Rings of 8
vertices are centered on the bone axis, so the keypoint-regressor rows
built from a ring average land exactly on the joint they represent.
"""

from __future__ import annotations

import math
from importlib import resources

import numpy as np

from .model import BodyModel, load_model, save_model

JOINT_NAMES = [
    "pelvis", "spine", "neck", "head",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_shoulder", "r_elbow", "r_wrist",
    "l_hip", "l_knee", "l_ankle",
    "r_hip", "r_knee", "r_ankle",
]
JOINT_PARENTS = [-1, 0, 1, 2, 2, 4, 5, 2, 7, 8, 0, 10, 11, 0, 13, 14]
JOINT_REST = np.array(
    [
        [0.00, 0.00, 0.00],   # pelvis
        [0.00, 0.25, 0.00],   # spine
        [0.00, 0.55, 0.00],   # neck
        [0.00, 0.70, 0.00],   # head
        [0.18, 0.52, 0.00],   # l_shoulder
        [0.42, 0.38, 0.00],   # l_elbow
        [0.64, 0.24, 0.00],   # l_wrist
        [-0.18, 0.52, 0.00],  # r_shoulder
        [-0.42, 0.38, 0.00],  # r_elbow
        [-0.64, 0.24, 0.00],  # r_wrist
        [0.10, -0.05, 0.00],  # l_hip
        [0.12, -0.45, 0.00],  # l_knee
        [0.13, -0.85, 0.00],  # l_ankle
        [-0.10, -0.05, 0.00], # r_hip
        [-0.12, -0.45, 0.00], # r_knee
        [-0.13, -0.85, 0.00], # r_ankle
    ]
)

EXTRA_KEYPOINT_NAMES = ["head_top", "nose", "l_hand_tip", "r_hand_tip"]
KEYPOINT_NAMES = JOINT_NAMES + EXTRA_KEYPOINT_NAMES
FACE_HAND_KEYPOINTS = frozenset(
    {"head_top", "nose", "l_hand_tip", "r_hand_tip", "l_wrist", "r_wrist"}
)

PART_NAMES = [
    "torso", "head", "hips",
    "l_upper_arm", "l_forearm", "l_hand",
    "r_upper_arm", "r_forearm", "r_hand",
    "l_thigh", "l_shin", "l_foot",
    "r_thigh", "r_shin", "r_foot",
]
PART_IDS = {name: i for i, name in enumerate(PART_NAMES)}
GARMENT_TOP_PARTS = ("torso", "l_upper_arm", "r_upper_arm")
GARMENT_BOTTOM_PARTS = ("hips", "l_thigh", "r_thigh")

# (parent_joint, child_joint, radius_prox, radius_dist, depth_factor, part)
_BONES = [
    (0, 1, 0.150, 0.140, 0.62, "torso"),
    (1, 2, 0.140, 0.090, 0.62, "torso"),
    (2, 3, 0.050, 0.050, 1.00, "head"),
    (2, 4, 0.055, 0.050, 1.00, "torso"),
    (4, 5, 0.050, 0.042, 1.00, "l_upper_arm"),
    (5, 6, 0.040, 0.032, 1.00, "l_forearm"),
    (2, 7, 0.055, 0.050, 1.00, "torso"),
    (7, 8, 0.050, 0.042, 1.00, "r_upper_arm"),
    (8, 9, 0.040, 0.032, 1.00, "r_forearm"),
    (0, 10, 0.080, 0.075, 1.00, "hips"),
    (10, 11, 0.072, 0.058, 1.00, "l_thigh"),
    (11, 12, 0.055, 0.042, 1.00, "l_shin"),
    (0, 13, 0.080, 0.075, 1.00, "hips"),
    (13, 14, 0.072, 0.058, 1.00, "r_thigh"),
    (14, 15, 0.055, 0.042, 1.00, "r_shin"),
]

_RING_SEGMENTS = 8
_RINGS_PER_BONE = 5
_HEAD_RADIUS = 0.11
_HEAD_CENTER_OFFSET = np.array([0.0, 0.05, 0.0])


def _perp_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal (u, w) completing `axis` to a right-handed frame.

    For near-vertical bones w aligns with world z, so per-bone depth factors
    compress the body front-to-back.
    """
    ref = np.array([0.0, 1.0, 0.0]) if abs(axis[1]) < 0.9 else np.array([0.0, 0.0, 1.0])
    u = np.cross(ref, axis)
    u /= np.linalg.norm(u)
    w = np.cross(axis, u)
    return u, w


class _MeshBuilder:
    def __init__(self, num_joints: int):
        self.vertices: list[np.ndarray] = []
        self.weights: list[np.ndarray] = []
        self.parts: list[int] = []
        self.faces: list[tuple[int, int, int]] = []
        self.num_joints = num_joints

    def add_vertex(self, pos, weight_pairs: list[tuple[int, float]], part: str) -> int:
        w = np.zeros(self.num_joints)
        for joint, value in weight_pairs:
            w[joint] += value
        self.vertices.append(np.asarray(pos, dtype=np.float64))
        self.weights.append(w)
        self.parts.append(PART_IDS[part])
        return len(self.vertices) - 1

    def add_face(self, a: int, b: int, c: int, outward: np.ndarray) -> None:
        """Append a triangle, flipping winding if its normal opposes `outward`."""
        pa, pb, pc = self.vertices[a], self.vertices[b], self.vertices[c]
        normal = np.cross(pb - pa, pc - pa)
        if float(normal @ outward) < 0:
            a, b = b, a
        self.faces.append((a, b, c))

    def add_tube(
        self,
        p0: np.ndarray,
        p1: np.ndarray,
        r0: float,
        r1: float,
        depth_factor: float,
        weight_fn,
        part: str,
        n_rings: int,
        cap_start: bool,
        cap_end: bool,
    ) -> list[list[int]]:
        """Tapered tube from p0 to p1. Returns ring vertex indices (proximal first)."""
        axis = p1 - p0
        length = np.linalg.norm(axis)
        axis = axis / length
        u, w = _perp_frame(axis)
        rings = []
        for i in range(n_rings):
            t = i / (n_rings - 1)
            center = p0 + t * (p1 - p0)
            radius = r0 + t * (r1 - r0)
            ring = []
            for k in range(_RING_SEGMENTS):
                theta = 2.0 * math.pi * k / _RING_SEGMENTS
                offset = radius * (math.cos(theta) * u + depth_factor * math.sin(theta) * w)
                ring.append(self.add_vertex(center + offset, weight_fn(t), part))
            rings.append(ring)
        for i in range(n_rings - 1):
            lo, hi = rings[i], rings[i + 1]
            mid = p0 + (i + 0.5) / (n_rings - 1) * (p1 - p0)
            for k in range(_RING_SEGMENTS):
                k2 = (k + 1) % _RING_SEGMENTS
                for tri in ((lo[k], lo[k2], hi[k]), (lo[k2], hi[k2], hi[k])):
                    centroid = (
                        self.vertices[tri[0]] + self.vertices[tri[1]] + self.vertices[tri[2]]
                    ) / 3.0
                    self.add_face(*tri, outward=centroid - mid)
        if cap_start:
            ctr = self.add_vertex(p0, weight_fn(0.0), part)
            ring = rings[0]
            for k in range(_RING_SEGMENTS):
                self.add_face(ctr, ring[k], ring[(k + 1) % _RING_SEGMENTS], outward=-axis)
        if cap_end:
            ctr = self.add_vertex(p1, weight_fn(1.0), part)
            ring = rings[-1]
            for k in range(_RING_SEGMENTS):
                self.add_face(ctr, ring[k], ring[(k + 1) % _RING_SEGMENTS], outward=axis)
        return rings

    def add_sphere(
        self, center: np.ndarray, radius: float, weight_pairs, part: str, n_stacks: int = 8
    ) -> dict:
        south = self.add_vertex(center + np.array([0, -radius, 0]), weight_pairs, part)
        north = self.add_vertex(center + np.array([0, radius, 0]), weight_pairs, part)
        rings = []
        for i in range(1, n_stacks):
            alpha = math.pi * i / n_stacks
            y = -radius * math.cos(alpha)
            r = radius * math.sin(alpha)
            ring = []
            for k in range(_RING_SEGMENTS):
                theta = 2.0 * math.pi * k / _RING_SEGMENTS
                pos = center + np.array([r * math.cos(theta), y, r * math.sin(theta)])
                ring.append(self.add_vertex(pos, weight_pairs, part))
            rings.append(ring)
        def _outward(tri):
            centroid = (
                self.vertices[tri[0]] + self.vertices[tri[1]] + self.vertices[tri[2]]
            ) / 3.0
            return centroid - center
        for k in range(_RING_SEGMENTS):
            k2 = (k + 1) % _RING_SEGMENTS
            tri = (south, rings[0][k], rings[0][k2])
            self.add_face(*tri, outward=_outward(tri))
            tri = (north, rings[-1][k], rings[-1][k2])
            self.add_face(*tri, outward=_outward(tri))
        for i in range(len(rings) - 1):
            lo, hi = rings[i], rings[i + 1]
            for k in range(_RING_SEGMENTS):
                k2 = (k + 1) % _RING_SEGMENTS
                for tri in ((lo[k], lo[k2], hi[k]), (lo[k2], hi[k2], hi[k])):
                    self.add_face(*tri, outward=_outward(tri))
        # equator vertex closest to +z (used for the nose keypoint)
        front_candidates = [v for ring in rings for v in ring]
        nose = max(front_candidates, key=lambda idx: self.vertices[idx][2] - abs(
            self.vertices[idx][1] - center[1]))
        return {"north": north, "south": south, "nose": nose}


def _bone_weight_fn(parent: int, child: int):
    """Blend from the parent joint to the child joint near the distal end."""
    def weight(t: float) -> list[tuple[int, float]]:
        s = min(max((t - 0.55) / 0.45, 0.0), 1.0)
        return [(parent, 1.0 - s), (child, s)]
    return weight


def _rigid(joint: int):
    return lambda t: [(joint, 1.0)]


def _build_shape_basis(verts: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Eight smooth displacement modes (meters per unit coefficient)."""
    x, y, z = verts[:, 0], verts[:, 1], verts[:, 2]
    head_center = JOINT_REST[3] + _HEAD_CENTER_OFFSET
    torso_mask = weights[:, [0, 1, 2]].sum(axis=1)
    arm_mask = weights[:, [4, 5, 6, 7, 8, 9]].sum(axis=1)
    leg_mask = weights[:, [10, 11, 12, 13, 14, 15]].sum(axis=1)
    head_mask = weights[:, 3]

    basis = np.zeros((8, verts.shape[0], 3))
    basis[0, :, 1] = 0.10 * y                                         # stature
    basis[1, :, 0] = 0.06 * x                                         # overall width
    basis[1, :, 2] = 0.06 * z
    basis[2, :, 0] = 0.25 * torso_mask * x                            # torso girth
    basis[2, :, 2] = 0.25 * torso_mask * z
    basis[3, :, 0] = 0.25 * arm_mask * (x - 0.15 * np.tanh(x / 0.15)) # arm length
    basis[4, :, 1] = 0.18 * leg_mask * (y + 0.05)                     # leg length
    basis[5] = 0.15 * head_mask[:, None] * (verts - head_center)      # head size
    basis[6, :, 0] = 0.10 * np.tanh(x / 0.06) / (1.0 + np.exp(-(y - 0.30) / 0.06))  # shoulders
    basis[7, :, 2] = (
        0.08 * torso_mask * np.exp(-(((y - 0.12) / 0.18) ** 2)) * np.maximum(np.tanh(z / 0.1), 0.0)
    )                                                                 # belly
    return basis


def build_toy_body() -> BodyModel:
    """Construct the deterministic toy humanoid (V around 800, J=16, K=20, S=8)."""
    b = _MeshBuilder(num_joints=len(JOINT_NAMES))
    joint_rings: dict[int, list[int]] = {}
    special: dict[str, int] = {}

    for parent, child, r0, r1, depth, part in _BONES:
        terminal = child not in {bone[0] for bone in _BONES}
        rings = b.add_tube(
            JOINT_REST[parent],
            JOINT_REST[child],
            r0,
            r1,
            depth,
            _bone_weight_fn(parent, child),
            part,
            _RINGS_PER_BONE,
            cap_start=(parent == 0 and child == 1),
            cap_end=terminal and part not in ("l_forearm", "r_forearm", "l_shin", "r_shin", "head"),
        )
        if parent not in joint_rings:
            joint_rings[parent] = rings[0]
        joint_rings.setdefault(child, rings[-1])

    # hands: short tapered tubes continuing past the wrists
    for wrist, tip_name, part in ((6, "l_hand_tip", "l_hand"), (9, "r_hand_tip", "r_hand")):
        elbow = JOINT_PARENTS[wrist]
        direction = JOINT_REST[wrist] - JOINT_REST[elbow]
        direction = direction / np.linalg.norm(direction)
        tip = JOINT_REST[wrist] + 0.10 * direction
        rings = b.add_tube(
            JOINT_REST[wrist], tip, 0.033, 0.018, 1.0, _rigid(wrist), part, 3,
            cap_start=False, cap_end=True,
        )
        special[tip_name] = len(b.vertices) - 1   # the end-cap center vertex

    # feet: forward extensions from the ankles
    for ankle, part in ((12, "l_foot"), (15, "r_foot")):
        start = JOINT_REST[ankle]
        tip = start + np.array([0.0, -0.045, 0.16])
        b.add_tube(start, tip, 0.050, 0.038, 1.0, _rigid(ankle), part, 3,
                   cap_start=True, cap_end=True)

    # head sphere, rigidly attached to the head joint
    head_center = JOINT_REST[3] + _HEAD_CENTER_OFFSET
    sphere = b.add_sphere(head_center, _HEAD_RADIUS, [(3, 1.0)], "head")
    special["head_top"] = sphere["north"]
    special["nose"] = sphere["nose"]

    verts = np.stack(b.vertices)
    weights = np.stack(b.weights)
    faces = np.asarray(b.faces, dtype=np.int64)
    parts = np.asarray(b.parts, dtype=np.int64)

    regressor = np.zeros((len(KEYPOINT_NAMES), verts.shape[0]))
    for j in range(len(JOINT_NAMES)):
        ring = joint_rings[j]
        regressor[j, ring] = 1.0 / len(ring)
    for extra, name in enumerate(EXTRA_KEYPOINT_NAMES):
        regressor[len(JOINT_NAMES) + extra, special[name]] = 1.0

    model = BodyModel(
        template_vertices=verts,
        faces=faces,
        joint_regressor=regressor,
        skinning_weights=weights,
        shape_basis=_build_shape_basis(verts, weights),
        kinematic_parents=np.asarray(JOINT_PARENTS, dtype=np.int64),
        keypoint_names=list(KEYPOINT_NAMES),
        vertex_parts=parts,
    )
    model.validate()
    return model


_FIXTURE_NAME = "toy_body.bin"
_default_model: BodyModel | None = None


def write_default_fixture(path) -> None:
    save_model(path, build_toy_body(), meta={"generator": "build_toy_body"})


def load_default_model() -> BodyModel:
    """Load (and cache) the committed humanoid fixture."""
    global _default_model
    if _default_model is None:
        ref = resources.files("ihk.bodyfit") / "assets" / _FIXTURE_NAME
        with resources.as_file(ref) as path:
            _default_model = load_model(path)
    return _default_model


def default_keypoint_weights(model: BodyModel, face_hand_weight: float = 10.0) -> np.ndarray:
    """Per-keypoint fitting weights: 1.0 body, `face_hand_weight` for face/hand points."""
    names = model.keypoint_names or [f"kp_{i}" for i in range(model.num_keypoints)]
    return np.array(
        [face_hand_weight if name in FACE_HAND_KEYPOINTS else 1.0 for name in names]
    )
