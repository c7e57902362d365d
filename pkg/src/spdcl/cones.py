"""Closed convex cones and Euclidean projections onto them.

A cone is described by a small immutable :class:`ConeSpec` tree. Leaves are
``zero``, ``full``, ``nonneg`` and ``soc`` (second-order cone
``{(t, x) : ||x|| <= t}``); ``product`` nodes stack children.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConeSpec",
    "Zero",
    "Full",
    "NonNegOrthant",
    "SecondOrder",
    "Product",
    "dual_cone",
    "negate",
    "project",
    "project_dual",
    "project_neg",
    "moreau_split",
    "project_ball",
    "flatten",
    "cone_to_dict",
    "cone_from_dict",
]

_LEAVES = ("zero", "full", "nonneg", "soc")


@dataclass(frozen=True)
class ConeSpec:
    """Recursive description of a closed convex cone in R^dim.

    Parameters
    ----------
    kind : str
        One of ``"zero"``, ``"full"``, ``"nonneg"``, ``"soc"``, ``"product"``.
    dim : int
        Ambient dimension.
    parts : tuple of ConeSpec
        Children of a ``"product"`` node, empty for leaves.
    negated : bool
        If True the spec describes ``-K`` where ``K`` is the cone given by the
        other fields. Only meaningful for ``soc`` and ``nonneg`` leaves.
    """

    kind: str
    dim: int
    parts: tuple = ()
    negated: bool = False

    def __post_init__(self):
        if self.kind not in _LEAVES + ("product",):
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"cone dimension must be a positive integer, got {self.dim}")
        if self.kind == "soc" and self.dim < 2:
            raise ValueError("second-order cone requires dim >= 2")
        if self.kind == "product":
            if not self.parts:
                raise ValueError("product cone needs at least one part")
            if sum(p.dim for p in self.parts) != self.dim:
                raise ValueError("product dim must equal the sum of its parts")
        elif self.parts:
            raise ValueError(f"{self.kind} cone takes no parts")

    def __repr__(self):
        sign = "-" if self.negated else ""
        if self.kind == "product":
            return f"{sign}Product[{', '.join(map(repr, self.parts))}]"
        names = {"zero": "Zero", "full": "Full", "nonneg": "NonNegOrthant", "soc": "SecondOrder"}
        return f"{sign}{names[self.kind]}({self.dim})"


def Zero(dim: int) -> ConeSpec:
    return ConeSpec("zero", dim)


def Full(dim: int) -> ConeSpec:
    return ConeSpec("full", dim)


def NonNegOrthant(dim: int) -> ConeSpec:
    return ConeSpec("nonneg", dim)


def SecondOrder(dim: int) -> ConeSpec:
    return ConeSpec("soc", dim)


def Product(parts) -> ConeSpec:
    parts = tuple(parts)
    return ConeSpec("product", sum(p.dim for p in parts), parts)


def dual_cone(spec: ConeSpec) -> ConeSpec:
    """Return the conjugate cone ``{y : <y, x> >= 0 for all x in spec}``."""
    if spec.kind == "product":
        return ConeSpec("product", spec.dim, tuple(dual_cone(p) for p in spec.parts), spec.negated)
    if spec.kind == "zero":
        return ConeSpec("full", spec.dim)
    if spec.kind == "full":
        return ConeSpec("zero", spec.dim)
    # orthant and SOC are self-dual; (-K)* = -(K*)
    return spec


def negate(spec: ConeSpec) -> ConeSpec:
    """Return the spec of ``-spec``."""
    if spec.kind == "product":
        return ConeSpec("product", spec.dim, tuple(negate(p) for p in spec.parts))
    if spec.kind in ("zero", "full"):
        return spec
    return ConeSpec(spec.kind, spec.dim, (), not spec.negated)


def _check_dim(spec, y):
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != spec.dim:
        raise ValueError(f"vector of length {y.shape[-1]} does not match cone dimension {spec.dim}")
    return y


def _project_soc(y):
    # y has shape (..., dim); works row-wise
    t = y[..., 0]
    x = y[..., 1:]
    nx = np.sqrt(np.sum(x * x, axis=-1))
    out = np.empty_like(y)
    inside = nx <= t
    polar = nx <= -t
    boundary = ~(inside | polar)
    out[inside] = y[inside]
    out[polar] = 0.0
    if np.any(boundary):
        scale = 0.5 * (t[boundary] + nx[boundary])
        out[boundary, 0] = scale
        out[boundary, 1:] = (scale / nx[boundary])[:, None] * x[boundary]
    return out


def _project_leaf(spec, y):
    if spec.negated:
        return -_project_leaf(ConeSpec(spec.kind, spec.dim), -y)
    if spec.kind == "zero":
        return np.zeros_like(y)
    if spec.kind == "full":
        return y.copy()
    if spec.kind == "nonneg":
        return np.maximum(y, 0.0)
    return _project_soc(y)


def _project(spec, y):
    if spec.kind != "product":
        return _project_leaf(spec, y)
    out = np.empty_like(y)
    start = 0
    for part in spec.parts:
        stop = start + part.dim
        out[..., start:stop] = _project(part, y[..., start:stop])
        start = stop
    return out


def project(spec: ConeSpec, y) -> np.ndarray:
    """Euclidean projection of ``y`` onto the cone described by ``spec``.

    ``y`` may also be a 2-d array, in which case each row is projected.
    A fresh array is always returned.
    """
    y = _check_dim(spec, y)
    if y.ndim == 1:
        return _project(spec, y[None, :])[0]
    return _project(spec, y)


def project_dual(cone: ConeSpec, y) -> np.ndarray:
    """Projection onto the conjugate cone of ``cone``."""
    return project(dual_cone(cone), y)


def project_neg(cone: ConeSpec, y) -> np.ndarray:
    """Projection onto ``-cone``."""
    return project(negate(cone), y)


def moreau_split(coneC: ConeSpec, y):
    """Split ``y`` into its components on ``C*`` and ``-C``.

    Both parts are computed by their own projection; the two sum to ``y``
    and are orthogonal.

    Returns
    -------
    y_dual, y_negC : ndarray
    """
    y = _check_dim(coneC, y)
    return project_dual(coneC, y), project_neg(coneC, y)


def project_ball(p, mu: float) -> np.ndarray:
    """Project ``p`` onto the closed Euclidean ball of radius ``mu``."""
    if not mu > 0:
        raise ValueError(f"ball radius must be positive, got {mu}")
    p = np.asarray(p, dtype=float)
    nrm = np.linalg.norm(p)
    if nrm <= mu:
        return p.copy()
    return p * (mu / nrm)


_CODES = {"zero": 0, "full": 1, "nonneg": 2, "soc": 3}


def flatten(spec: ConeSpec):
    """Flatten a spec into leaf segments for compiled kernels.

    Returns
    -------
    kinds, starts, dims, signs : ndarray of int64
        Leaf kind code (0 zero, 1 full, 2 nonneg, 3 soc), offset, length
        and sign (+1, or -1 for a negated leaf).
    """
    kinds, starts, dims, signs = [], [], [], []

    def walk(node, offset):
        if node.kind == "product":
            for part in node.parts:
                walk(part, offset)
                offset += part.dim
            return
        kinds.append(_CODES[node.kind])
        starts.append(offset)
        dims.append(node.dim)
        signs.append(-1 if node.negated else 1)

    walk(spec, 0)
    as_arr = lambda v: np.asarray(v, dtype=np.int64)
    return as_arr(kinds), as_arr(starts), as_arr(dims), as_arr(signs)


def cone_to_dict(spec: ConeSpec):
    """Serialize to the nested ``{"zero": m} | ... | {"product": [...]}`` form."""
    if spec.negated:
        raise ValueError("negated cones are not serializable")
    if spec.kind == "product":
        return {"product": [cone_to_dict(p) for p in spec.parts]}
    return {spec.kind: spec.dim}


def cone_from_dict(obj) -> ConeSpec:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValueError(f"cone must be a single-key mapping, got {obj!r}")
    (kind, value), = obj.items()
    if kind == "product":
        if not isinstance(value, list):
            raise ValueError("product cone expects a list of cones")
        return Product(cone_from_dict(v) for v in value)
    if kind not in _LEAVES:
        raise ValueError(f"unknown cone kind {kind!r}")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"cone dimension must be an integer, got {value!r}")
    return ConeSpec(kind, value)
