"""Flat ``key = value`` configuration files.

Grammar: one ``key = value`` pair per line; blank lines and lines starting with
``#`` are ignored; keys may appear at most once.  Recognised keys:

    n, n_z, n_x        integers
    p_az, p_ax         rationals, "a/b" or decimal
    seed, trials       integers
    attack             built-in id, ``noise:<q_z>:<q_x>``, or path to an attack spec file
    pc_file, pk_file   paths to matrices in the shared matrix text form
    r, m               sizes of a random code drawn from ``seed`` when no matrix files are given
    eps_sec, eps_rel   slack parameters used by ``bounds``

Relative paths resolve against the directory of the config file.
"""

from __future__ import annotations

from pathlib import Path

from . import attacks, gf2
from .protocol import ProtocolConfig, ProtocolError, as_fraction, channel_noise_wrapper
from .rng import stream

KEYS = {"n", "n_z", "n_x", "p_az", "p_ax", "seed", "trials", "attack", "pc_file", "pk_file",
        "r", "m", "eps_sec", "eps_rel"}
INT_KEYS = {"n", "n_z", "n_x", "seed", "trials", "r", "m"}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def parse_config(text: str, base_dir: Path | None = None) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key in INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
        elif key in ("p_az", "p_ax"):
            try:
                values[key] = as_fraction(value)
            except ProtocolError:
                raise ConfigError(f"{key}: expected a rational like 1/20 or 0.05, got {value!r}") from None
        elif key in ("eps_sec", "eps_rel"):
            try:
                values[key] = float(value)
            except ValueError:
                raise ConfigError(f"{key}: expected a number, got {value!r}") from None
        elif key in ("pc_file", "pk_file") and base_dir is not None:
            values[key] = str((base_dir / value).resolve())
        else:
            values[key] = value
    values["_base_dir"] = base_dir
    return values


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, path.parent)


def resolve_attack(ident: str, base_dir: Path | None = None) -> attacks.CollectiveAttackSpec:
    """Built-in id, ``noise:<q_z>:<q_x>``, or a path to an attack spec file."""
    ident = ident.strip()
    if ident.startswith("noise:"):
        try:
            qz, qx = (float(t) for t in ident[len("noise:"):].split(":"))
        except ValueError:
            raise ConfigError(f"attack: expected noise:<q_z>:<q_x>, got {ident!r}") from None
        try:
            return channel_noise_wrapper(qz, qx)
        except ProtocolError as exc:
            raise ConfigError(f"attack: {exc}") from None
    try:
        return attacks.builtin_attack(ident)
    except attacks.AttackError as builtin_err:
        path = Path(ident)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"attack: {builtin_err}, and no file {str(path)!r}") from None
        try:
            return attacks.parse_attack(path.read_text(), name=path.stem)
        except attacks.AttackError as exc:
            raise ConfigError(f"attack: {path}: {exc}") from None


def _require(values: dict, key: str):
    if key not in values:
        raise ConfigError(f"{key}: missing")
    return values[key]


def build_code(values: dict) -> gf2.LinearCodeSpec:
    n = _require(values, "n")
    try:
        if "pk_file" in values:
            pk = gf2.parse_matrix(Path(values["pk_file"]).read_text())
            pc = gf2.parse_matrix(Path(values["pc_file"]).read_text()) if "pc_file" in values \
                else gf2.as_matrix([[0] * pk.shape[1]])[:0]
            return gf2.LinearCodeSpec(pc, pk)
        if "pc_file" in values:
            raise ConfigError("pk_file: missing (pc_file given without a key matrix)")
        r, m = values.get("r", 0), _require(values, "m")
        return gf2.random_code(n, r, m, stream(values.get("seed", 0), 0xC0DE))
    except OSError as exc:
        raise ConfigError(f"matrix file: {exc}") from exc
    except gf2.Gf2Error as exc:
        raise ConfigError(f"code: {exc}") from exc


def build_protocol_config(values: dict, seed: int | None = None) -> ProtocolConfig:
    if seed is not None:
        values = dict(values, seed=seed)
    code = build_code(values)
    try:
        return ProtocolConfig(
            n=_require(values, "n"), n_z=_require(values, "n_z"), n_x=_require(values, "n_x"),
            p_az=_require(values, "p_az"), p_ax=_require(values, "p_ax"),
            code=code, seed=values.get("seed", 0),
        )
    except ProtocolError as exc:
        raise ConfigError(str(exc)) from exc
