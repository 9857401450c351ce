"""Read spin-system model files.

A model file is a small TOML document (shipped with extension .tomlish):
top-level `name` and optional `g_factor`, a [rates] table with k_b_per_us
and k_f_per_us, zero or more [[nuclei]] entries ({label, radical "A"|"B",
multiplicity, tensor_mT: 9 numbers row-major}), and an optional [eed] table
holding either an explicit tensor_mT or a point_dipole_r_nm displacement
that is expanded with the file's own g-factor at load time.  Unknown keys
are rejected rather than ignored so typos cannot silently drop physics.
"""

from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .constants import DEFAULT_G_FACTOR
from .hamiltonian import point_dipole_tensor
from .system import Nucleus, SpinSystem

MODEL_SUFFIX = ".tomlish"


class ModelFileError(ValueError):
    """Raised when a model file cannot be turned into a SpinSystem."""


def _check_keys(table: dict, allowed: set, required: set, where: str, path) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ModelFileError(f"{path}: unknown key(s) {unknown} in {where}")
    missing = sorted(required - set(table))
    if missing:
        raise ModelFileError(f"{path}: missing key(s) {missing} in {where}")


def _number(value, field: str, path) -> float:
    # bool is an int subclass; a bare `true` is never a valid physical number
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelFileError(f"{path}: {field} must be a number, got {value!r}")
    return float(value)


def _integer(value, field: str, path) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ModelFileError(f"{path}: {field} must be an integer, got {value!r}")
    return value


def _numbers(value, n: int, field: str, path) -> np.ndarray:
    if not isinstance(value, list) or len(value) != n:
        raise ModelFileError(f"{path}: {field} must be a list of {n} numbers")
    return np.array([_number(v, field, path) for v in value])


def _parse_nucleus(entry, index: int, path) -> Nucleus:
    where = f"nuclei[{index}]"
    if not isinstance(entry, dict):
        raise ModelFileError(f"{path}: {where} must be a table")
    _check_keys(
        entry,
        {"label", "radical", "multiplicity", "tensor_mT"},
        {"label", "radical", "multiplicity", "tensor_mT"},
        where, path,
    )
    label = entry["label"]
    if not isinstance(label, str) or not label:
        raise ModelFileError(f"{path}: {where}.label must be a non-empty string")
    radical = entry["radical"]
    if radical not in ("A", "B"):
        raise ModelFileError(f"{path}: {where}.radical must be 'A' or 'B', got {radical!r}")
    mult = _integer(entry["multiplicity"], f"{where}.multiplicity", path)
    tensor = _numbers(entry["tensor_mT"], 9, f"{where}.tensor_mT", path).reshape(3, 3)
    try:
        return Nucleus(label, mult, tensor, radical)
    except ValueError as exc:
        raise ModelFileError(f"{path}: {where}: {exc}") from exc


def _parse_eed(table, g_factor: float, path) -> np.ndarray:
    if not isinstance(table, dict):
        raise ModelFileError(f"{path}: eed must be a table")
    _check_keys(table, {"tensor_mT", "point_dipole_r_nm"}, set(), "eed", path)
    if ("tensor_mT" in table) == ("point_dipole_r_nm" in table):
        raise ModelFileError(
            f"{path}: eed needs exactly one of tensor_mT or point_dipole_r_nm"
        )
    if "tensor_mT" in table:
        return _numbers(table["tensor_mT"], 9, "eed.tensor_mT", path).reshape(3, 3)
    r_nm = _numbers(table["point_dipole_r_nm"], 3, "eed.point_dipole_r_nm", path)
    try:
        return point_dipole_tensor(r_nm, g_factor)
    except ValueError as exc:
        raise ModelFileError(f"{path}: eed.point_dipole_r_nm: {exc}") from exc


def load_spin_system(path) -> SpinSystem:
    """Parse a model file into a SpinSystem, validating as it goes."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ModelFileError(f"{path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ModelFileError(f"{path}: parse error: {exc}") from exc

    _check_keys(doc, {"name", "g_factor", "rates", "nuclei", "eed"},
                {"name", "rates"}, "top level", path)
    name = doc["name"]
    if not isinstance(name, str) or not name:
        raise ModelFileError(f"{path}: name must be a non-empty string")
    g_factor = DEFAULT_G_FACTOR
    if "g_factor" in doc:
        g_factor = _number(doc["g_factor"], "g_factor", path)

    rates = doc["rates"]
    if not isinstance(rates, dict):
        raise ModelFileError(f"{path}: rates must be a table")
    _check_keys(rates, {"k_b_per_us", "k_f_per_us"},
                {"k_b_per_us", "k_f_per_us"}, "rates", path)
    k_b = _number(rates["k_b_per_us"], "rates.k_b_per_us", path)
    k_f = _number(rates["k_f_per_us"], "rates.k_f_per_us", path)

    nuclei_doc = doc.get("nuclei", [])
    if not isinstance(nuclei_doc, list):
        raise ModelFileError(f"{path}: nuclei must be an array of tables")
    nuclei = tuple(_parse_nucleus(entry, i, path) for i, entry in enumerate(nuclei_doc))

    eed = _parse_eed(doc["eed"], g_factor, path) if "eed" in doc else None

    try:
        return SpinSystem(name, nuclei, k_b, k_f, eed_mT=eed, g_factor=g_factor)
    except ValueError as exc:
        raise ModelFileError(f"{path}: {exc}") from exc


def shipped_models_dir() -> Path:
    """Directory holding the reference model files installed with the package."""
    return Path(__file__).resolve().parent / "models"


def shipped_model_names() -> tuple[str, ...]:
    return tuple(sorted(
        p.stem for p in shipped_models_dir().glob(f"*{MODEL_SUFFIX}")
    ))


def load_shipped_model(name: str) -> SpinSystem:
    """Load a reference model by bare name, e.g. "fad_z_1n"."""
    path = shipped_models_dir() / f"{name}{MODEL_SUFFIX}"
    if not path.is_file():
        known = ", ".join(shipped_model_names())
        raise ModelFileError(f"no shipped model {name!r} (available: {known})")
    return load_spin_system(path)
