"""Declarative edit scripts: an ordered op list as a JSON document.

A spec names latents from a bank, applies compose/swap/transfer/refine ops
in order, and binds each result to a name later ops (and the caller) can
reference. Validation happens twice: structurally at construction, and
against the actual bank when executed.
"""

from __future__ import annotations

import json

import numpy as np

from ..body.humanoid import N_PARTS
from ..diffusion.sampling import diff_render
from ..latent.masks import edit_mask
from .ops import compose, swap_part, transfer_style

_OP_FIELDS = {
    "compose": {"sources", "protect", "steps", "eta", "lam", "out"},
    "swap": {"target", "source", "parts", "out"},
    "transfer": {"colors", "geometry", "steps", "eta", "out"},
    "refine": {"latent", "steps", "eta", "lam", "parts", "out"},
}


def _check_op(i, op):
    if not isinstance(op, dict) or "op" not in op:
        raise ValueError(f"op {i}: each entry must be a dict with an 'op' key")
    kind = op["op"]
    if kind not in _OP_FIELDS:
        raise ValueError(f"op {i}: unknown op '{kind}'; "
                         f"expected one of {sorted(_OP_FIELDS)}")
    extra = set(op) - _OP_FIELDS[kind] - {"op"}
    if extra:
        raise ValueError(f"op {i} ({kind}): unknown fields {sorted(extra)}")
    if "out" not in op or not isinstance(op["out"], str) or not op["out"]:
        raise ValueError(f"op {i} ({kind}): needs a non-empty 'out' name")
    if kind == "compose":
        srcs = op.get("sources")
        if not isinstance(srcs, list) or not srcs:
            raise ValueError(f"op {i} (compose): 'sources' must be a "
                             "non-empty list of {{latent, parts}}")
        seen = {}
        for j, s in enumerate(srcs):
            if not isinstance(s, dict) or set(s) != {"latent", "parts"}:
                raise ValueError(f"op {i} (compose): source {j} must have "
                                 "exactly the keys 'latent' and 'parts'")
            for p in s["parts"]:
                p = int(p)
                if not 0 <= p < N_PARTS:
                    raise ValueError(f"op {i} (compose): part {p} out of "
                                     f"range [0, {N_PARTS})")
                if p in seen:
                    raise ValueError(f"op {i} (compose): part {p} claimed by "
                                     f"sources {seen[p]} and {j}")
                seen[p] = j
    if kind == "swap" and "parts" not in op:
        raise ValueError(f"op {i} (swap): needs 'parts'")


class EditSpec:
    """Validated ordered edit script."""

    def __init__(self, ops):
        self.ops = list(ops)
        for i, op in enumerate(self.ops):
            _check_op(i, op)

    @staticmethod
    def from_dict(doc):
        if not isinstance(doc, dict) or "ops" not in doc:
            raise ValueError("edit spec must be a dict with an 'ops' list")
        return EditSpec(doc["ops"])

    @staticmethod
    def from_json(text):
        return EditSpec.from_dict(json.loads(text))

    @staticmethod
    def from_file(path):
        with open(path) as fh:
            return EditSpec.from_dict(json.load(fh))

    def to_dict(self):
        return {"ops": self.ops}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def run_edits(spec, bank, denoise_fn=None, schedule=None, stats=None, seed=0):
    """Execute a spec against a latent bank -> {out name: latent array}.

    Later ops may reference earlier outputs by name; bank identities are
    referenced by their string id. Missing references raise KeyError.
    """
    env = {str(i): np.asarray(bank.get(i)) for i in bank.ids()}

    def resolve(name):
        key = str(name)
        if key not in env:
            raise KeyError(f"edit references unknown latent '{name}'; "
                           f"available: {sorted(env)}")
        return env[key]

    results = {}
    for i, op in enumerate(spec.ops):
        kind = op["op"]
        if kind == "compose":
            srcs = [(resolve(s["latent"]), s["parts"]) for s in op["sources"]]
            z, _ = compose(srcs, denoise_fn=denoise_fn, schedule=schedule,
                           steps=op.get("steps", 0), eta=op.get("eta", 0.0),
                           lam=op.get("lam", 0.5), protect=op.get("protect"),
                           stats=stats, seed=seed + i)
        elif kind == "swap":
            z = swap_part(resolve(op["target"]), resolve(op["source"]),
                          op["parts"])
        elif kind == "transfer":
            z = transfer_style(resolve(op["colors"]), resolve(op["geometry"]),
                               denoise_fn=denoise_fn, schedule=schedule,
                               steps=op.get("steps", 0), eta=op.get("eta", 0.0),
                               seed=seed + i, stats=stats)
        else:  # refine
            z = np.asarray(resolve(op["latent"]))
            mask = None
            y0 = None
            if op.get("parts"):
                # anchor the named parts to the input, repaint the rest
                mask = 1.0 - edit_mask(z.shape[0], z.shape[1], op["parts"])
                y0 = z
            z = diff_render(denoise_fn, schedule, z,
                            steps=op.get("steps", 0), eta=op.get("eta", 0.0),
                            seed=seed + i, mask=mask, y0=y0,
                            lam=op.get("lam", 0.5), stats=stats)
        env[op["out"]] = z
        results[op["out"]] = z
    return results
