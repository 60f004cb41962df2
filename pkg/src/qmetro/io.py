"""JSON encoding of models, POVMs and reports.

Complex numbers are written as ``[re, im]`` pairs. A matrix is a row-major
nested list of pairs (``d x d x 2``); readers also accept the flat form
(``d*d x 2``) and plain real entries. Three model layouts are recognised:

* ``{"rho", "drho"}``: state and derivatives at the working point,
* ``{"rho", "generators", "lambda"}``: unitary encoding ``U rho U^dag``,
* ``{"branches", "primary_generators", "lambda"}``: quasi-pure state,
  each branch ``{"weight": q, "state": vector}``.

An optional ``"tolerances"`` object overrides individual thresholds and
optional ``"dim"`` / ``"num_params"`` fields are cross-checked.
"""

import json

import numpy as np

from .errors import SchemaError
from .model import EstimationModel, GeneratorModel, RankOnePovm, materialize
from .quasipure import QuasiPureModel, build_quasipure
from .tolerances import Tolerances


def encode_complex(a):
    """Nested ``[re, im]`` lists for a complex scalar, vector or matrix."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def encode_real(a):
    return np.asarray(a, dtype=float).tolist()


def _as_complex(data, what):
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"{what}: entries must be numbers or [re, im] pairs") from None
    return arr


def decode_vector(data, what="vector", dim=None):
    arr = _as_complex(data, what)
    if arr.ndim == 2 and arr.shape[1] == 2:
        v = arr[:, 0] + 1j * arr[:, 1]
    elif arr.ndim == 1:
        v = arr.astype(complex)
    else:
        raise SchemaError(f"{what}: expected a list of [re, im] pairs, got shape {arr.shape}")
    if dim is not None and v.shape[0] != dim:
        raise SchemaError(f"{what}: length {v.shape[0]}, expected {dim}")
    return v


def decode_matrix(data, what="matrix", dim=None):
    arr = _as_complex(data, what)
    if arr.ndim == 3 and arr.shape[2] == 2:
        m = arr[..., 0] + 1j * arr[..., 1]
    elif arr.ndim == 2 and arr.shape[1] == 2 and arr.shape[0] != 2 and _is_square(arr.shape[0]):
        # flat row-major list of pairs
        d = int(round(np.sqrt(arr.shape[0])))
        m = (arr[:, 0] + 1j * arr[:, 1]).reshape(d, d)
    elif arr.ndim == 2:
        m = arr.astype(complex)
    else:
        raise SchemaError(f"{what}: cannot interpret array of shape {arr.shape} as a matrix")
    if m.shape[0] != m.shape[1]:
        raise SchemaError(f"{what}: not square ({m.shape})")
    if dim is not None and m.shape[0] != dim:
        raise SchemaError(f"{what}: dimension {m.shape[0]}, expected {dim}")
    return m


def _is_square(n):
    r = int(round(np.sqrt(n)))
    return r * r == n


def _require(obj, key, what="model"):
    if key not in obj:
        raise SchemaError(f"{what}: missing field '{key}'")
    return obj[key]


def _matrix_list(data, what, dim=None):
    if not isinstance(data, list):
        raise SchemaError(f"{what}: expected a list of matrices")
    return [decode_matrix(m, f"{what}[{k}]", dim) for k, m in enumerate(data)]


def tolerances_from(obj, base=None):
    base = Tolerances() if base is None else base
    extra = obj.get("tolerances") if isinstance(obj, dict) else None
    if extra is None:
        return base
    merged = base.to_dict()
    merged.update(_checked(extra))
    return Tolerances.from_dict(merged)


def _checked(extra):
    Tolerances.from_dict(extra)  # validates keys and values
    return {k: float(v) for k, v in extra.items()}


def model_from_dict(obj, tol: Tolerances = None):
    """Build an :class:`EstimationModel` (and the quasi-pure description, if any).

    Returns ``(model, quasipure_or_None)``. ``tol`` replaces the file's own
    tolerances when given.
    """
    if not isinstance(obj, dict):
        raise SchemaError("model file must contain a JSON object")
    tol = tolerances_from(obj) if tol is None else tol
    dim = obj.get("dim")
    qp = None
    if "branches" in obj:
        branches = _require(obj, "branches")
        if not isinstance(branches, list) or not branches:
            raise SchemaError("'branches' must be a non-empty list")
        weights, states = [], []
        for k, b in enumerate(branches):
            if not isinstance(b, dict):
                raise SchemaError(f"branches[{k}] must be an object")
            weights.append(float(_require(b, "weight", f"branches[{k}]")))
            states.append(decode_vector(_require(b, "state", f"branches[{k}]"), f"branches[{k}].state"))
        gens = _matrix_list(_require(obj, "primary_generators"), "primary_generators")
        lam = obj.get("lambda", [0.0] * len(gens))
        qp = QuasiPureModel(tuple(weights), tuple(states), tuple(gens), tuple(lam), tol)
        model = build_quasipure(qp)
    else:
        rho = decode_matrix(_require(obj, "rho"), "rho", dim)
        d = rho.shape[0]
        if "generators" in obj:
            gens = _matrix_list(obj["generators"], "generators", d)
            lam = obj.get("lambda", [0.0] * len(gens))
            model = materialize(GeneratorModel(rho, tuple(gens), tuple(lam), tol))
        else:
            drho = _matrix_list(_require(obj, "drho"), "drho", d)
            lam = obj.get("lambda", ())
            model = EstimationModel(rho, tuple(drho), tuple(lam), tol)
    if dim is not None and model.dim != int(dim):
        raise SchemaError(f"'dim' is {dim} but the model has dimension {model.dim}")
    s = obj.get("num_params")
    if s is not None and model.num_params != int(s):
        raise SchemaError(f"'num_params' is {s} but the model has {model.num_params} parameters")
    return model, qp


def model_to_dict(model: EstimationModel, tol: Tolerances = None):
    return {
        "dim": model.dim,
        "num_params": model.num_params,
        "rho": encode_complex(model.rho),
        "drho": [encode_complex(d) for d in model.drho],
        "lambda": list(model.lambda_point),
        "tolerances": (tol or model.tol).to_dict(),
    }


def quasipure_to_dict(qp: QuasiPureModel):
    return {
        "dim": qp.dim,
        "num_params": qp.num_params,
        "branches": [
            {"weight": q, "state": encode_complex(s)}
            for q, s in zip(qp.branch_weights, qp.branch_states)
        ],
        "primary_generators": [encode_complex(h) for h in qp.generators],
        "lambda": list(qp.lambda_point),
        "tolerances": qp.tol.to_dict(),
    }


def povm_from_dict(obj, dim=None) -> RankOnePovm:
    """Read ``{"vectors": [...], "weights": [...]}``.

    A construction report is accepted as well; its ``construction.povm``
    entry is used.
    """
    if isinstance(obj, dict) and "construction" in obj:
        obj = obj["construction"].get("povm")
        if obj is None:
            raise SchemaError("construction report contains no POVM")
    if not isinstance(obj, dict):
        raise SchemaError("POVM file must contain a JSON object")
    vecs = _require(obj, "vectors", "povm")
    if not isinstance(vecs, list) or not vecs:
        raise SchemaError("povm: 'vectors' must be a non-empty list")
    vectors = [decode_vector(v, f"vectors[{k}]", dim) for k, v in enumerate(vecs)]
    weights = obj.get("weights")
    if weights is not None:
        if not isinstance(weights, list) or len(weights) != len(vectors):
            raise SchemaError("povm: 'weights' must match 'vectors' in length")
        weights = tuple(float(w) for w in weights)
        if any(w < 0 for w in weights):
            raise SchemaError("povm: weights must be non-negative")
    return RankOnePovm(tuple(vectors), weights)


def povm_to_dict(povm: RankOnePovm):
    out = {"vectors": [encode_complex(v) for v in povm.vectors]}
    if povm.weights is not None:
        out["weights"] = list(povm.weights)
    return out


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None


def dumps(obj):
    """Deterministic JSON text (fixed key order, trailing newline)."""
    return json.dumps(_plain(obj), indent=2, allow_nan=True) + "\n"


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return encode_complex(x)
        return _plain(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x
