"""Linear-blend-skinned toy body model.

The model stores a rest template, per-vertex skinning weights over J
skeleton joints, a K x V keypoint regressor and S linear shape modes.
By construction the first J keypoint-regressor rows coincide with the
skeleton joints, which provides the rest pivots for posing; keypoints
are regressed from the final posed vertices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..arrayio import load_arrays, save_arrays


@dataclass
class BodyModel:
    template_vertices: np.ndarray      # (V,3) meters
    faces: np.ndarray                  # (F,3) int vertex indices
    joint_regressor: np.ndarray        # (K,V), rows sum to 1; rows [:J] are the joints
    skinning_weights: np.ndarray       # (V,J), nonnegative, rows sum to 1
    shape_basis: np.ndarray            # (S,V,3) meters per unit coefficient
    kinematic_parents: np.ndarray      # (J,), parent index, root = -1
    keypoint_names: list[str] = field(default_factory=list)
    vertex_parts: np.ndarray | None = None   # (V,) coarse part id, used by the toy renderers

    @property
    def num_vertices(self) -> int:
        return self.template_vertices.shape[0]

    @property
    def num_joints(self) -> int:
        return self.kinematic_parents.shape[0]

    @property
    def num_keypoints(self) -> int:
        return self.joint_regressor.shape[0]

    @property
    def num_shapes(self) -> int:
        return self.shape_basis.shape[0]

    def validate(self) -> None:
        V, J, K, S = self.num_vertices, self.num_joints, self.num_keypoints, self.num_shapes
        if self.template_vertices.shape != (V, 3):
            raise ValueError("template_vertices must be (V,3)")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise ValueError("faces must be (F,3)")
        if self.faces.min() < 0 or self.faces.max() >= V:
            raise ValueError("face indices out of range")
        if self.joint_regressor.shape != (K, V):
            raise ValueError("joint_regressor must be (K,V)")
        if not np.allclose(self.joint_regressor.sum(axis=1), 1.0, atol=1e-6):
            raise ValueError("joint_regressor rows must sum to 1")
        if self.skinning_weights.shape != (V, J):
            raise ValueError("skinning_weights must be (V,J)")
        if self.skinning_weights.min() < 0:
            raise ValueError("skinning_weights must be nonnegative")
        if not np.allclose(self.skinning_weights.sum(axis=1), 1.0, atol=1e-6):
            raise ValueError("skinning_weights rows must sum to 1")
        if K < J:
            raise ValueError("keypoint regressor must cover the skeleton joints")
        if self.shape_basis.shape != (S, V, 3):
            raise ValueError("shape_basis must be (S,V,3)")
        if int(self.kinematic_parents[0]) != -1:
            raise ValueError("root parent must be -1")
        for j in range(1, J):
            p = int(self.kinematic_parents[j])
            if not 0 <= p < j:
                raise ValueError("kinematic_parents must be topologically ordered and acyclic")
        if self.keypoint_names and len(self.keypoint_names) != K:
            raise ValueError("keypoint_names length must equal K")


@dataclass
class BodyParams:
    pose_theta: np.ndarray                 # (J,3) axis-angle, radians
    shape_beta: np.ndarray                 # (S,)
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: float = 1.0

    def __post_init__(self):
        self.pose_theta = np.asarray(self.pose_theta, dtype=np.float64)
        self.shape_beta = np.asarray(self.shape_beta, dtype=np.float64)
        self.translation = np.asarray(self.translation, dtype=np.float64)
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not np.isfinite(self.pose_theta).all():
            raise ValueError("pose_theta must be finite")

    @classmethod
    def rest(cls, model: BodyModel) -> "BodyParams":
        return cls(
            pose_theta=np.zeros((model.num_joints, 3)),
            shape_beta=np.zeros(model.num_shapes),
        )

    def copy(self) -> "BodyParams":
        return BodyParams(
            self.pose_theta.copy(), self.shape_beta.copy(), self.translation.copy(), self.scale
        )

    def to_dict(self) -> dict:
        return {
            "pose_theta": self.pose_theta.tolist(),
            "shape_beta": self.shape_beta.tolist(),
            "translation": self.translation.tolist(),
            "scale": float(self.scale),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BodyParams":
        return cls(
            pose_theta=np.asarray(data["pose_theta"], dtype=np.float64),
            shape_beta=np.asarray(data["shape_beta"], dtype=np.float64),
            translation=np.asarray(data["translation"], dtype=np.float64),
            scale=float(data["scale"]),
        )


def rodrigues(rotvec: torch.Tensor) -> torch.Tensor:
    """Axis-angle (...,3) to rotation matrices (...,3,3).

    Uses the unnormalized-skew form R = I + a*K + b*K^2 with
    a = sin(t)/t, b = (1-cos(t))/t^2, with series fallbacks near t = 0 so
    gradients stay finite at the identity pose.
    """
    sq = (rotvec**2).sum(-1)
    angle = torch.sqrt(sq + 1e-18)
    small = sq < 1e-12
    a = torch.where(small, 1.0 - sq / 6.0, torch.sin(angle) / angle)
    b = torch.where(small, 0.5 - sq / 24.0, (1.0 - torch.cos(angle)) / (sq + 1e-18))
    zeros = torch.zeros_like(sq)
    rx, ry, rz = rotvec[..., 0], rotvec[..., 1], rotvec[..., 2]
    K = torch.stack(
        [
            torch.stack([zeros, -rz, ry], dim=-1),
            torch.stack([rz, zeros, -rx], dim=-1),
            torch.stack([-ry, rx, zeros], dim=-1),
        ],
        dim=-2,
    )
    eye = torch.eye(3, dtype=rotvec.dtype, device=rotvec.device).expand(K.shape)
    return eye + a[..., None, None] * K + b[..., None, None] * (K @ K)


class BodyModelTensors:
    """Float64 torch views of a BodyModel, cached for the fitting loop."""

    def __init__(self, model: BodyModel):
        self.model = model
        as64 = lambda a: torch.as_tensor(np.asarray(a), dtype=torch.float64)
        self.template = as64(model.template_vertices)
        self.joint_regressor = as64(model.joint_regressor)
        self.skinning_weights = as64(model.skinning_weights)
        self.shape_basis = as64(model.shape_basis)
        self.parents = [int(p) for p in model.kinematic_parents]


def lbs_forward(
    tensors: BodyModelTensors,
    pose_theta: torch.Tensor,
    shape_beta: torch.Tensor,
    translation: torch.Tensor,
    scale: torch.Tensor | float,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Differentiable LBS forward pass. Returns (vertices (V,3), keypoints (K,3))."""
    shaped = tensors.template + torch.einsum("s,svc->vc", shape_beta, tensors.shape_basis)
    J = len(tensors.parents)
    rest_joints = tensors.joint_regressor[:J] @ shaped
    rots = rodrigues(pose_theta)

    glob_rot: list[torch.Tensor] = [None] * J  # type: ignore[list-item]
    glob_pos: list[torch.Tensor] = [None] * J  # type: ignore[list-item]
    glob_rot[0] = rots[0]
    glob_pos[0] = rest_joints[0]
    for j in range(1, J):
        p = tensors.parents[j]
        glob_rot[j] = glob_rot[p] @ rots[j]
        glob_pos[j] = glob_pos[p] + glob_rot[p] @ (rest_joints[j] - rest_joints[p])
    R = torch.stack(glob_rot)                                   # (J,3,3)
    t = torch.stack(glob_pos) - torch.einsum("jab,jb->ja", R, rest_joints)

    W = tensors.skinning_weights
    blended_R = torch.einsum("vj,jab->vab", W, R)
    blended_t = W @ t
    posed = torch.einsum("vab,vb->va", blended_R, shaped) + blended_t
    vertices = scale * posed + translation
    keypoints = tensors.joint_regressor @ vertices
    return vertices, keypoints


def forward_body(model: BodyModel, params: BodyParams) -> tuple[np.ndarray, np.ndarray]:
    """Pose the model. Returns (vertices (V,3), joints3d (K,3)) as float64 arrays."""
    if params.pose_theta.shape != (model.num_joints, 3):
        raise ValueError(
            f"pose_theta shape {params.pose_theta.shape} does not match J={model.num_joints}"
        )
    if params.shape_beta.shape != (model.num_shapes,):
        raise ValueError(
            f"shape_beta shape {params.shape_beta.shape} does not match S={model.num_shapes}"
        )
    tensors = BodyModelTensors(model)
    with torch.no_grad():
        verts, keypoints = lbs_forward(
            tensors,
            torch.as_tensor(params.pose_theta, dtype=torch.float64),
            torch.as_tensor(params.shape_beta, dtype=torch.float64),
            torch.as_tensor(params.translation, dtype=torch.float64),
            float(params.scale),
        )
    return verts.numpy(), keypoints.numpy()


def save_model(path, model: BodyModel, meta: dict | None = None) -> None:
    """Persist a model in the array-container fixture format."""
    info = dict(meta or {})
    info["keypoint_names"] = list(model.keypoint_names)
    arrays = {
        "template_vertices": model.template_vertices,
        "faces": model.faces.astype(np.float64),
        "joint_regressor": model.joint_regressor,
        "skinning_weights": model.skinning_weights,
        "shape_basis": model.shape_basis,
        "kinematic_parents": model.kinematic_parents.astype(np.float64),
    }
    if model.vertex_parts is not None:
        arrays["vertex_parts"] = model.vertex_parts.astype(np.float64)
    save_arrays(path, arrays, meta=info)


def load_model(path) -> BodyModel:
    arrays, meta = load_arrays(path)
    model = BodyModel(
        template_vertices=arrays["template_vertices"].astype(np.float64),
        faces=np.rint(arrays["faces"]).astype(np.int64),
        joint_regressor=arrays["joint_regressor"].astype(np.float64),
        skinning_weights=arrays["skinning_weights"].astype(np.float64),
        shape_basis=arrays["shape_basis"].astype(np.float64),
        kinematic_parents=np.rint(arrays["kinematic_parents"]).astype(np.int64),
        keypoint_names=list(meta.get("keypoint_names", [])),
        vertex_parts=(
            np.rint(arrays["vertex_parts"]).astype(np.int64) if "vertex_parts" in arrays else None
        ),
    )
    # float32 storage denormalizes the unit row sums; renormalize exactly.
    model.joint_regressor /= model.joint_regressor.sum(axis=1, keepdims=True)
    model.skinning_weights /= model.skinning_weights.sum(axis=1, keepdims=True)
    model.validate()
    return model
