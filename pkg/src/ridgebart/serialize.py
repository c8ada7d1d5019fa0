"""Model file format: versioned, self-describing JSON.

Layout (version 1):

    {
      "format": "ridgebart-model",
      "version": 1,
      "seed": <int>, "n_chains": <int>,
      "iterations": <int>, "burn_in": <int>, "thin": <int>,
      "binary": <bool>,
      "config": {...},            # resolved prior configuration
      "config_hash": "<sha256>",
      "transform": {...},         # column scaling / level codes / y_center
      "y_center": <float>,
      "activation": "<kind>",
      "draws": [
        {"sigma2": <float>,
         "trees": [{"nodes": [[<id>, <node>], ...]}, ...]},
        ...
      ]
    }

Internal nodes are {"kind": "rule", "variable": j, "cutpoint": c} or
{"kind": "rule", "variable": j, "left_levels": [...]}; leaves are
{"kind": "leaf", "rho": r, "omega": [[...]], "offsets": [...],
"beta": [...]}.  Python's float repr round-trips exactly, so encoding and
re-encoding a model is byte-identical and decode(encode(s)) reproduces
every field bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from .config import PriorConfig
from .data import TransformRecord
from .errors import InvalidModelError, TruncatedStreamError, VersionMismatchError
from .model import ChainMeta, Ensemble, PosteriorSamples
from .trees import DecisionRule, LeafParams, RidgeTree

__all__ = ["serialize", "deserialize", "save", "load", "FORMAT_NAME", "FORMAT_VERSION"]

FORMAT_NAME = "ridgebart-model"
FORMAT_VERSION = 1


def _encode_node(payload) -> dict:
    if isinstance(payload, DecisionRule):
        node = {"kind": "rule", "variable": payload.variable}
        if payload.left_levels is not None:
            node["left_levels"] = sorted(payload.left_levels)
        else:
            node["cutpoint"] = payload.cutpoint
        return node
    return {
        "kind": "leaf",
        "rho": payload.rho,
        "omega": payload.omega.tolist(),
        "offsets": payload.offsets.tolist(),
        "beta": payload.beta.tolist(),
    }


def _decode_node(node: dict):
    kind = node.get("kind")
    if kind == "rule":
        if "left_levels" in node:
            return DecisionRule(
                variable=node["variable"], left_levels=frozenset(node["left_levels"])
            )
        return DecisionRule(variable=node["variable"], cutpoint=node["cutpoint"])
    if kind == "leaf":
        omega = np.asarray(node["omega"], dtype=float)
        offsets = np.asarray(node["offsets"], dtype=float)
        beta = np.asarray(node["beta"], dtype=float)
        if omega.ndim != 2 or offsets.ndim != 1 or beta.shape != offsets.shape:
            raise InvalidModelError("leaf parameter shapes are inconsistent")
        return LeafParams(node["rho"], omega, offsets, beta)
    raise InvalidModelError(f"unknown node kind {kind!r}")


def _encode_tree(tree: RidgeTree) -> dict:
    return {"nodes": [[k, _encode_node(tree.nodes[k])] for k in sorted(tree.nodes)]}


def _decode_tree(obj: dict) -> RidgeTree:
    nodes = {}
    for item in obj["nodes"]:
        if len(item) != 2:
            raise InvalidModelError("malformed tree node entry")
        node_id, payload = item
        nodes[int(node_id)] = _decode_node(payload)
    tree = RidgeTree(nodes)
    _check_tree(tree)
    return tree


def _check_tree(tree: RidgeTree):
    if 1 not in tree.nodes:
        raise InvalidModelError("tree has no root")
    for k, payload in tree.nodes.items():
        is_rule = isinstance(payload, DecisionRule)
        has_children = 2 * k in tree.nodes and 2 * k + 1 in tree.nodes
        half_children = (2 * k in tree.nodes) != (2 * k + 1 in tree.nodes)
        if half_children:
            raise InvalidModelError(f"node {k} has exactly one child")
        if is_rule and not has_children:
            raise InvalidModelError(f"internal node {k} is missing children")
        if not is_rule and has_children:
            raise InvalidModelError(f"leaf node {k} has children")
        if k > 1 and k // 2 not in tree.nodes:
            raise InvalidModelError(f"node {k} is disconnected")


def serialize(samples: PosteriorSamples) -> bytes:
    """Encode to a deterministic byte stream (UTF-8 JSON, sorted keys)."""
    meta = samples.meta
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "seed": meta.seed,
        "n_chains": meta.n_chains,
        "iterations": meta.iterations,
        "burn_in": meta.burn_in,
        "thin": meta.thin,
        "binary": meta.binary,
        "config": meta.config.to_dict(),
        "config_hash": meta.config.hash(),
        "schema": meta.schema,
        "transform": meta.transform.to_dict(),
        "y_center": samples.draws[0].y_center if samples.draws else meta.transform.y_center,
        "activation": meta.config.activation,
        "draws": [
            {"sigma2": e.sigma2, "trees": [_encode_tree(t) for t in e.trees]}
            for e in samples.draws
        ],
    }
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return text.encode("utf-8")


def deserialize(stream: bytes) -> PosteriorSamples:
    """Decode a byte stream; raises the documented error classes."""
    try:
        doc = json.loads(stream.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TruncatedStreamError("model stream is truncated or not JSON") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise VersionMismatchError("stream is not a ridgebart model file")
    if doc.get("version") != FORMAT_VERSION:
        raise VersionMismatchError(
            f"model file version {doc.get('version')!r} != supported {FORMAT_VERSION}"
        )
    try:
        config = PriorConfig.from_dict(doc["config"])
        transform = TransformRecord.from_dict(doc["transform"])
        meta = ChainMeta(
            seed=doc["seed"],
            n_chains=doc["n_chains"],
            iterations=doc["iterations"],
            burn_in=doc["burn_in"],
            thin=doc["thin"],
            config=config,
            transform=transform,
            binary=doc["binary"],
            schema=doc.get("schema"),
        )
        y_center = doc["y_center"]
        activation = doc["activation"]
        draws = []
        for entry in doc["draws"]:
            sigma2 = entry["sigma2"]
            if not (isinstance(sigma2, (int, float)) and sigma2 > 0.0):
                raise InvalidModelError("draw has non-positive sigma2")
            trees = tuple(_decode_tree(t) for t in entry["trees"])
            if len(trees) != config.n_trees:
                raise InvalidModelError(
                    f"draw has {len(trees)} trees, config says {config.n_trees}"
                )
            draws.append(
                Ensemble(trees=trees, sigma2=sigma2, y_center=y_center, activation=activation)
            )
    except InvalidModelError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidModelError(f"model file violates the schema: {exc}") from exc
    try:
        return PosteriorSamples(draws=draws, meta=meta)
    except ValueError as exc:
        raise InvalidModelError(str(exc)) from exc


def save(samples: PosteriorSamples, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(samples))


def load(path) -> PosteriorSamples:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
