"""Structured-text documents: model specs, configs and JSON outputs."""

import json
import math

import yaml

from .errors import DomainError, ValidationError
from .mixture import PARAM_NAMES, MixtureModel, member_from_vector
from .pythagorean import FIXED_ORDER, Kind

DEMO_SPEC = {
    "family": "gig",
    "weights": [0.3, 0.45, 0.25],
    "components": [
        {"lam": -0.5, "alpha": 0.8, "beta": 3.0},
        {"lam": 2.0, "alpha": 3.0, "beta": 2.0},
        {"lam": 5.0, "alpha": 8.0, "beta": 4.0},
    ],
}


def load_document(path):
    """Parse a YAML or JSON file (JSON is read as YAML) into plain data."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ValidationError(f"cannot parse {path}: {exc}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ValidationError(f"{path}: top level must be a mapping")
    return doc


def dump_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError("must be a number", path)
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError("must be finite", path)
    return value


def model_from_dict(doc):
    """
    Build a :class:`MixtureModel` from a spec mapping.

    ``components`` is a list of parameter mappings; each may name its own
    ``kind``, otherwise the top-level ``family`` (default ``gig``) applies.
    """
    if not isinstance(doc, dict):
        raise ValidationError("model spec must be a mapping")
    family = doc.get("family", "gig")
    comps = doc.get("components")
    weights = doc.get("weights")
    if not isinstance(comps, list) or not comps:
        raise ValidationError("must be a nonempty list", "components")
    if not isinstance(weights, list):
        raise ValidationError("must be a list", "weights")
    if "k" in doc and doc["k"] != len(comps):
        raise ValidationError(f"k = {doc['k']} but {len(comps)} components given", "k")
    if len(weights) != len(comps):
        raise ValidationError("need one weight per component", "weights")
    w = [_number(v, f"weights[{i}]") for i, v in enumerate(weights)]
    if any(v < 0 for v in w):
        raise ValidationError("weights must be nonnegative", "weights")
    if abs(sum(w) - 1.0) > 1e-12:
        raise ValidationError("weights must sum to 1", "weights")

    members = []
    for i, c in enumerate(comps):
        path = f"components[{i}]"
        if not isinstance(c, dict):
            raise ValidationError("must be a mapping", path)
        try:
            kind = Kind(c.get("kind", family))
        except ValueError:
            raise ValidationError(f"unknown family {c.get('kind', family)!r}", f"{path}.kind") from None
        names = PARAM_NAMES[kind]
        extra = set(c) - set(names) - {"kind"}
        if kind in FIXED_ORDER:
            extra -= {"lam"}
        if extra:
            raise ValidationError(f"unexpected fields {sorted(extra)}", path)
        values = []
        for name in names:
            if name not in c:
                raise ValidationError("missing", f"{path}.{name}")
            values.append(_number(c[name], f"{path}.{name}"))
        try:
            members.append(member_from_vector(kind, values))
        except DomainError as exc:
            raise ValidationError(str(exc), path) from None
    return MixtureModel(tuple(w), tuple(members))


def member_to_dict(member):
    out = {"kind": member.kind.value}
    for name in PARAM_NAMES[member.kind]:
        out[name] = float(getattr(member.params, name))
    return out


def model_to_dict(model):
    return {
        "k": model.k,
        "weights": [float(w) for w in model.weights],
        "components": [member_to_dict(c) for c in model.components],
    }
