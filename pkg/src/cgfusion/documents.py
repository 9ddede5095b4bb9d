"""Instance and result documents: canonical JSON with fixed float formatting.

Keys are written in a fixed order and every float with 17 significant
digits, so saving a loaded document reproduces the original bytes.  Complex
entries are ``[re, im]`` pairs; an operator is a list of per-slot matrices.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import AlgebraElement
from .errors import DocumentError, FrameError
from .frames import ControllerPair, GFusionSystem, Member, validate_controllers
from .hilbert_module import AdjointableOp, ModuleVector, Projector

SCHEMA_VERSION = 1


def _fmt_float(x: float, allow_nonfinite: bool) -> str:
    if not math.isfinite(x):
        if not allow_nonfinite:
            raise DocumentError(f"non-finite value {x} cannot be stored")
        return json.dumps("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    return format(x, ".17g")


def _depth(value) -> int:
    """Nesting depth of plain lists; dicts count as unbounded."""
    if isinstance(value, dict):
        return 99
    if isinstance(value, (list, tuple)):
        return 1 + max((_depth(v) for v in value), default=0)
    return 0


def dumps(obj, allow_nonfinite: bool = False, indent: int = 0) -> str:
    """Canonical text for a tree of dicts, lists, strings, ints and floats."""
    pad = " " * indent
    inner = " " * (indent + 1)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj), allow_nonfinite)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, allow_nonfinite, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        obj = list(obj)
        # scalars and rows of [re, im] pairs stay on one line
        if _depth(obj) <= 2:
            return "[" + ", ".join(dumps(v, allow_nonfinite, indent + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, allow_nonfinite, indent + 1) for v in obj) + "\n" + pad + "]"
    raise DocumentError(f"cannot serialise {type(obj).__name__}")


def complex_to_list(arr) -> list:
    a = np.asarray(arr, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [complex_to_list(x) for x in a]


def list_to_complex(data, ndim: int) -> np.ndarray:
    try:
        a = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"malformed numeric array: {exc}") from None
    if a.ndim != ndim + 1 or a.shape[-1] != 2:
        raise DocumentError(f"expected a {ndim}-d array of [re, im] pairs, got shape {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


@dataclass(frozen=True, eq=False)
class InstanceDocument:
    system: GFusionSystem
    C: AdjointableOp
    Cp: AdjointableOp
    K: Optional[AdjointableOp] = None
    metadata: dict = field(default_factory=dict)

    def controllers(self) -> ControllerPair:
        """The stored pair, validated against the stored system."""
        return validate_controllers(self.system, self.C, self.Cp)

    def to_dict(self) -> dict:
        sys = self.system
        meta = {"seed": self.metadata.get("seed"), "mode": self.metadata.get("mode"),
                "created": self.metadata.get("created")}
        return {
            "schema_version": SCHEMA_VERSION,
            "m": sys.m, "n": sys.n, "J": sys.J,
            "members": [{"P": complex_to_list(mem.P.op.blocks),
                         "Lambda": complex_to_list(mem.Lambda.blocks),
                         "v": [float(x) for x in mem.v.entries.real]} for mem in sys.members],
            "C": complex_to_list(self.C.blocks),
            "C_prime": complex_to_list(self.Cp.blocks),
            "K": None if self.K is None else complex_to_list(self.K.blocks),
            "metadata": meta,
        }

    def dumps(self) -> str:
        return dumps(self.to_dict()) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def from_dict(cls, d: dict) -> "InstanceDocument":
        if not isinstance(d, dict):
            raise DocumentError("instance document must be an object")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise DocumentError(f"unsupported schema_version {d.get('schema_version')!r}")
        try:
            m, n, J = int(d["m"]), int(d["n"]), int(d["J"])
            members = []
            for raw in d["members"]:
                P = Projector.from_op(AdjointableOp(list_to_complex(raw["P"], 3)))
                L = AdjointableOp(list_to_complex(raw["Lambda"], 3))
                members.append(Member(P, L, AlgebraElement(np.asarray(raw["v"], dtype=float))))
            sys = GFusionSystem(tuple(members))
            C = AdjointableOp(list_to_complex(d["C"], 3))
            Cp = AdjointableOp(list_to_complex(d["C_prime"], 3))
            K = None if d.get("K") is None else AdjointableOp(list_to_complex(d["K"], 3))
            meta = dict(d.get("metadata") or {})
        except (KeyError, TypeError) as exc:
            raise DocumentError(f"missing or malformed field: {exc}") from None
        except FrameError as exc:
            raise DocumentError(f"invalid instance: {exc}") from None
        if (sys.m, sys.n, sys.J) != (m, n, J):
            raise DocumentError(f"header says (m, n, J) = {(m, n, J)}, members give {(sys.m, sys.n, sys.J)}")
        for name, X in (("C", C), ("C_prime", Cp), ("K", K)):
            if X is not None and X.blocks.shape != (m, n, n):
                raise DocumentError(f"{name} has shape {X.blocks.shape}, expected {(m, n, n)}")
        return cls(sys, C, Cp, K, meta)

    @classmethod
    def loads(cls, text: str) -> "InstanceDocument":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise DocumentError(f"not valid JSON: {exc}") from None

    @classmethod
    def load(cls, path) -> "InstanceDocument":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def result_document(command: str, verdicts: dict, bounds: dict, predictions: dict, reports: dict) -> str:
    """Result text; non-finite values are stored as the strings ``inf``/``nan``."""
    doc = {"schema_version": SCHEMA_VERSION, "command": command, "verdicts": verdicts,
           "bounds": bounds, "predictions": predictions, "reports": reports}
    return dumps(doc, allow_nonfinite=True) + "\n"


def signal_to_dict(f: ModuleVector) -> dict:
    return {"schema_version": SCHEMA_VERSION, "m": f.m, "n": f.n, "slots": complex_to_list(f.slots)}


def load_signal(path) -> ModuleVector:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"not valid JSON: {exc}") from None
    if not isinstance(d, dict) or "slots" not in d:
        raise DocumentError("signal document needs a 'slots' field")
    return ModuleVector(list_to_complex(d["slots"], 2))
