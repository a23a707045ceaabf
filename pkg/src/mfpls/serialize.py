"""Versioned JSON persistence for fitted models and trees.

Floats are written with Python's shortest round-trip representation, so a
save/load cycle restores every coefficient bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from .basis import basis_from_dict
from .classify import ClassEncoding, DiscriminantModel
from .data import FunctionObject
from .errors import ValidationError
from .pls import MfplsModel, PlsStep
from .tree import GroupStructure, PlsTree, TreeConfig, TreeNode

FORMAT_VERSION = 1


def _arr(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def _function_to_dict(f: FunctionObject) -> dict:
    return {"coefs": [_arr(c) for c in f.coefs]}


def _function_from_dict(d: dict, bases) -> FunctionObject:
    return FunctionObject(bases, tuple(np.array(c, dtype=float) for c in d["coefs"]))


def _bases_to_list(bases) -> list:
    return [b.to_dict() for b in bases]


def _bases_from_list(items) -> tuple:
    return tuple(basis_from_dict(d) for d in items)


def model_to_dict(model: MfplsModel, include_bases: bool = True) -> dict:
    out = {
        "kind": "mfpls",
        "format_version": FORMAT_VERSION,
        "n_components": model.n_components,
        "stop_reason": model.stop_reason,
        "y_mean": float(model.y_mean),
        "x_means": _function_to_dict(model.x_means),
        "steps": [
            {
                "theta": [_arr(t) for t in s.theta],
                "u": _arr(s.u),
                "r": [_arr(r) for r in s.r],
                "c": float(s.c),
                "xi_variance": float(s.xi_variance),
            }
            for s in model.steps
        ],
        "w": _arr(model.w),
        "rho": _arr(model.rho),
        "v": _arr(model.v),
        "P": _arr(model.P),
        "betas": _arr(model.betas),
        "intercepts": _arr(model.intercepts),
    }
    if include_bases:
        out["bases"] = _bases_to_list(model.bases)
    return out


def _matrix(rows, width: int) -> np.ndarray:
    return np.array(rows, dtype=float).reshape(-1, width)


def model_from_dict(d: dict, bases=None) -> MfplsModel:
    _check(d, "mfpls")
    bases = _bases_from_list(d["bases"]) if bases is None else tuple(bases)
    width = sum(b.size for b in bases)
    steps = tuple(
        PlsStep(
            tuple(np.array(t) for t in s["theta"]),
            np.array(s["u"], dtype=float),
            tuple(np.array(r) for r in s["r"]),
            float(s["c"]),
            float(s["xi_variance"]),
        )
        for s in d["steps"]
    )
    h = len(steps)
    return MfplsModel(
        bases=bases,
        steps=steps,
        w=_matrix(d["w"], width),
        rho=_matrix(d["rho"], width),
        v=_matrix(d["v"], width),
        P=np.array(d["P"], dtype=float).reshape(h, h),
        betas=_matrix(d["betas"], width),
        intercepts=np.array(d["intercepts"], dtype=float),
        x_means=_function_from_dict(d["x_means"], bases),
        y_mean=float(d["y_mean"]),
        n_components=int(d["n_components"]),
        stop_reason=d["stop_reason"],
    )


def discriminant_to_dict(model: DiscriminantModel, include_bases: bool = True) -> dict:
    out = {
        "kind": "plsda",
        "format_version": FORMAT_VERSION,
        "n_components": model.n_components,
        "alpha": float(model.alpha),
        "pi1": float(model.encoding.pi1),
        "beta": _function_to_dict(model.beta),
    }
    if model.cv is not None:
        out["cv"] = model.cv.to_dict()
    if include_bases:
        out["bases"] = _bases_to_list(model.bases)
    return out


def discriminant_from_dict(d: dict, bases=None) -> DiscriminantModel:
    _check(d, "plsda")
    bases = _bases_from_list(d["bases"]) if bases is None else tuple(bases)
    return DiscriminantModel(_function_from_dict(d["beta"], bases), float(d["alpha"]), int(d["n_components"]),
                             ClassEncoding(float(d["pi1"])))


def tree_to_dict(tree: PlsTree) -> dict:
    def node(nd: TreeNode) -> dict:
        out = {"depth": nd.depth, "counts": list(nd.counts)}
        if not nd.is_leaf:
            out["group"] = nd.group
            out["gain"] = float(nd.gain)
            out["model"] = discriminant_to_dict(nd.model, include_bases=False)
            out["left"] = node(nd.left)
            out["right"] = node(nd.right)
        return out

    cfg = tree.config
    return {
        "kind": "tmfpls",
        "format_version": FORMAT_VERSION,
        "bases": _bases_to_list(tree.bases),
        "groups": [list(g) for g in tree.groups.groups],
        "config": {
            "purity_threshold": cfg.purity_threshold,
            "max_depth": cfg.max_depth,
            "min_node_size": cfg.min_node_size,
            "n_components": cfg.n_components,
            "cv_folds": cfg.cv_folds,
            "seed": cfg.seed,
        },
        "root": node(tree.root),
    }


def tree_from_dict(d: dict) -> PlsTree:
    _check(d, "tmfpls")
    bases = _bases_from_list(d["bases"])
    groups = GroupStructure(tuple(tuple(g) for g in d["groups"]))

    def node(nd: dict) -> TreeNode:
        out = TreeNode(int(nd["depth"]), tuple(int(c) for c in nd["counts"]))
        if "model" in nd:
            dims = groups.groups[nd["group"]]
            out.group = int(nd["group"])
            out.gain = float(nd["gain"])
            out.model = discriminant_from_dict(nd["model"], tuple(bases[j] for j in dims))
            out.left = node(nd["left"])
            out.right = node(nd["right"])
        return out

    return PlsTree(node(d["root"]), groups, TreeConfig(**d["config"]), bases)


def _check(d: dict, kind: str) -> None:
    if d.get("kind") != kind:
        raise ValidationError(f"expected a serialized {kind!r} object, got {d.get('kind')!r}")
    if d.get("format_version") != FORMAT_VERSION:
        raise ValidationError(f"unsupported format version {d.get('format_version')!r}")


_TO = {MfplsModel: model_to_dict, DiscriminantModel: discriminant_to_dict, PlsTree: tree_to_dict}
_FROM = {"mfpls": model_from_dict, "plsda": discriminant_from_dict, "tmfpls": tree_from_dict}


def to_dict(obj) -> dict:
    try:
        return _TO[type(obj)](obj)
    except KeyError:
        raise ValidationError(f"cannot serialize {type(obj).__name__}") from None


def from_dict(d: dict):
    try:
        loader = _FROM[d["kind"]]
    except KeyError:
        raise ValidationError(f"unknown object kind {d.get('kind')!r}") from None
    return loader(d)


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, fixed indentation)."""
    payload = obj if isinstance(obj, dict) else to_dict(obj)
    return json.dumps(payload, sort_keys=True, indent=1, allow_nan=False) + "\n"


def loads(text: str):
    return from_dict(json.loads(text))


def save(obj, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def load(path: Union[str, Path]):
    return loads(Path(path).read_text(encoding="utf-8"))
