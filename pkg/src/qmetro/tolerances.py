from dataclasses import asdict, dataclass, fields, replace

from .errors import SchemaError


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used across the package.

    ``tol_rank`` is relative to the largest eigenvalue of the state and
    ``tol_sat`` is relative to the operator-norm scale of the W/M family.
    All others are absolute.
    """

    tol_herm: float = 1e-10
    tol_psd: float = 1e-10
    tol_trace: float = 1e-10
    tol_rank: float = 1e-10
    tol_degen: float = 1e-8
    tol_orth: float = 1e-10
    tol_sld: float = 1e-9
    tol_singular: float = 1e-10
    tol_complete: float = 1e-9
    tol_null: float = 1e-14
    tol_grad: float = 1e-6
    tol_sat: float = 1e-9
    tol_gs: float = 1e-10
    tol_hollow: float = 1e-12
    tol_pcc: float = 1e-9

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise SchemaError("'tolerances' must be an object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SchemaError(f"unknown tolerance keys: {sorted(unknown)}")
        try:
            values = {k: float(v) for k, v in data.items()}
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"tolerances must be numbers: {exc}") from None
        if any(v <= 0 for v in values.values()):
            raise SchemaError("tolerances must be positive")
        return cls(**values)

    def updated(self, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)


DEFAULT = Tolerances()
