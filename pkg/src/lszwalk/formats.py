"""Instance file schema: JSON in, validated model objects out.

Three instance kinds share one envelope (see FORMATS.md at the repository
root): ``davies`` carries a Hamiltonian, temperature, filter and weighted
couplings; ``canonical`` carries a reference state and canonical terms as
nonnegative-frequency pairs; ``channel`` carries Kraus operators and an
optional reference state.  Complex matrices are nested row-major arrays of
[re, im] pairs.  Schema problems raise :class:`InstanceFormatError` so the
CLI can distinguish bad input from failed verification.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Any

import numpy as np

from .davies import DaviesInstance, davies_instance, reference_bohr_grid
from .lindblad import CanonicalLindbladian, QuantumChannel, canonical_term
from .matrix_core import (
    DEFAULT_GROUPING_TOL,
    eig_hermitian,
    matrix_from_json,
    matrix_to_json,
)
from .superop import ReferenceState, reference_state

__all__ = [
    "SCHEMA_VERSION",
    "InstanceFormatError",
    "LoadedInstance",
    "load_instance",
    "loads_instance",
    "dump_davies",
    "dump_canonical",
    "dump_channel",
    "instance_digest",
    "resolve_max_dim",
]

SCHEMA_VERSION = "1"
KINDS = ("davies", "canonical", "channel")
MAX_DIM_ENV = "LSZ_MAX_DIM"
DEFAULT_MAX_DIM = 16


class InstanceFormatError(ValueError):
    """Raised when an instance file violates the schema."""


@dataclass
class LoadedInstance:
    kind: str
    dimension: int
    davies: DaviesInstance | None = None
    canonical: CanonicalLindbladian | None = None
    channel: QuantumChannel | None = None
    channel_sigma: ReferenceState | None = None
    raw: dict | None = None

    @property
    def digest(self) -> str:
        return instance_digest(self.raw)


def resolve_max_dim(cli_value: int | None = None, default: int = DEFAULT_MAX_DIM) -> int:
    """Dimension cap: CLI flag wins, then the LSZ_MAX_DIM variable, then the default."""
    if cli_value is not None:
        return int(cli_value)
    env = os.environ.get(MAX_DIM_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InstanceFormatError(f"{MAX_DIM_ENV} must be an integer, got {env!r}") from exc
    return default


def instance_digest(raw: dict | None) -> str:
    payload = json.dumps(raw or {}, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(payload.encode()).hexdigest()


def _require(data: dict, key: str, kind: type | tuple[type, ...], where: str) -> Any:
    if key not in data:
        raise InstanceFormatError(f"missing {key!r} in {where}")
    value = data[key]
    if not isinstance(value, kind):
        raise InstanceFormatError(f"{where}.{key} has type {type(value).__name__}")
    return value


def _matrix(data: Any, d: int, where: str) -> np.ndarray:
    try:
        return matrix_from_json(data, expect_shape=(d, d))
    except ValueError as exc:
        raise InstanceFormatError(f"{where}: {exc}") from exc


def loads_instance(text: str, *, max_dim: int | None = None) -> LoadedInstance:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    return _parse_instance(raw, max_dim=max_dim)


def load_instance(path: str, *, max_dim: int | None = None) -> LoadedInstance:
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    return loads_instance(text, max_dim=max_dim)


def _parse_instance(raw: Any, *, max_dim: int | None) -> LoadedInstance:
    if not isinstance(raw, dict):
        raise InstanceFormatError("top level must be a JSON object")
    version = _require(raw, "schema_version", str, "instance")
    if version != SCHEMA_VERSION:
        raise InstanceFormatError(f"unsupported schema_version {version!r}")
    kind = _require(raw, "kind", str, "instance")
    if kind not in KINDS:
        raise InstanceFormatError(f"kind must be one of {KINDS}, got {kind!r}")
    d = _require(raw, "dimension", int, "instance")
    cap = resolve_max_dim(max_dim)
    if not 1 <= d <= cap:
        raise InstanceFormatError(f"dimension {d} outside [1, {cap}] (cap via {MAX_DIM_ENV} or --max-dim)")
    payload = _require(raw, "payload", dict, "instance")
    options = raw.get("options", {})
    if not isinstance(options, dict):
        raise InstanceFormatError("options must be an object")
    tol = float(options.get("grouping_tolerance", DEFAULT_GROUPING_TOL))

    try:
        if kind == "davies":
            return LoadedInstance(kind=kind, dimension=d, davies=_parse_davies(payload, d, tol), raw=raw)
        if kind == "canonical":
            return LoadedInstance(
                kind=kind, dimension=d, canonical=_parse_canonical(payload, d, tol), raw=raw
            )
        channel, sigma = _parse_channel(payload, d, tol)
        return LoadedInstance(kind=kind, dimension=d, channel=channel, channel_sigma=sigma, raw=raw)
    except InstanceFormatError:
        raise
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc


def _parse_davies(payload: dict, d: int, tol: float) -> DaviesInstance:
    h = eig_hermitian(_matrix(_require(payload, "hamiltonian", list, "payload"), d, "hamiltonian"), tol)
    beta = float(_require(payload, "beta", (int, float), "payload"))
    filter_kind = payload.get("filter", "metropolis")
    couplings_raw = _require(payload, "couplings", list, "payload")
    couplings = []
    for i, entry in enumerate(couplings_raw):
        if not isinstance(entry, dict):
            raise InstanceFormatError(f"couplings[{i}] must be an object")
        matrix = _matrix(_require(entry, "matrix", list, f"couplings[{i}]"), d, f"couplings[{i}].matrix")
        weight = float(_require(entry, "weight", (int, float), f"couplings[{i}]"))
        couplings.append((matrix, weight))
    return davies_instance(
        h,
        beta,
        couplings,
        filter_kind,
        normalize_peak=bool(payload.get("normalize_peak", False)),
        include_zero_frequency=bool(payload.get("include_zero_frequency", True)),
    )


def _parse_canonical(payload: dict, d: int, tol: float) -> CanonicalLindbladian:
    sigma = _matrix(_require(payload, "sigma", list, "payload"), d, "sigma")
    ref = reference_state(sigma, tol)
    grid = reference_bohr_grid(ref)
    terms_raw = _require(payload, "terms", list, "payload")
    if not terms_raw:
        raise InstanceFormatError("canonical payload needs at least one term")
    terms = []
    for i, entry in enumerate(terms_raw):
        if not isinstance(entry, dict):
            raise InstanceFormatError(f"terms[{i}] must be an object")
        weight = float(_require(entry, "weight", (int, float), f"terms[{i}]"))
        pairs_raw = _require(entry, "pairs", list, f"terms[{i}]")
        pairs = []
        for j, pair in enumerate(pairs_raw):
            where = f"terms[{i}].pairs[{j}]"
            if not isinstance(pair, dict):
                raise InstanceFormatError(f"{where} must be an object")
            freq = float(_require(pair, "frequency", (int, float), where))
            if freq < 0:
                raise InstanceFormatError(f"{where}.frequency must be nonnegative")
            try:
                freq = grid.snap(freq)
            except ValueError as exc:
                raise InstanceFormatError(f"{where}: {exc}") from exc
            x = _matrix(_require(pair, "x", list, where), d, f"{where}.x")
            g_plus = float(_require(pair, "g_plus", (int, float), where))
            g_minus = float(_require(pair, "g_minus", (int, float), where))
            pairs.append((freq, x, g_plus, g_minus))
        terms.append(canonical_term(weight, pairs))
    return CanonicalLindbladian(reference=ref, terms=tuple(terms))


def _parse_channel(payload: dict, d: int, tol: float) -> tuple[QuantumChannel, ReferenceState | None]:
    kraus_raw = _require(payload, "kraus", list, "payload")
    if not kraus_raw:
        raise InstanceFormatError("channel payload needs at least one Kraus operator")
    ops = [
        _matrix(entry, d, f"kraus[{i}]")
        for i, entry in enumerate(kraus_raw)
    ]
    channel = QuantumChannel(kraus_ops=tuple(ops))
    sigma = None
    if "sigma" in payload:
        sigma = reference_state(_matrix(payload["sigma"], d, "sigma"), tol)
    return channel, sigma


def _envelope(kind: str, dimension: int, payload: dict, options: dict | None = None) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "dimension": dimension,
        "payload": payload,
    }
    if options:
        out["options"] = options
    return out


def dump_davies(inst: DaviesInstance) -> dict:
    payload = {
        "hamiltonian": matrix_to_json(inst.hamiltonian.matrix()),
        "beta": inst.beta,
        "filter": inst.filter_kind,
        "couplings": [
            {"matrix": matrix_to_json(s), "weight": w} for s, w in inst.couplings
        ],
    }
    if inst.normalize_peak:
        payload["normalize_peak"] = True
    if not inst.include_zero_frequency:
        payload["include_zero_frequency"] = False
    return _envelope("davies", inst.dim, payload)


def dump_canonical(cl: CanonicalLindbladian) -> dict:
    terms = []
    for term in cl.terms:
        pairs = []
        seen = set()
        for i, (omega, x, g, partner) in enumerate(term.entries()):
            if i in seen:
                continue
            seen.update({i, partner})
            if omega < 0:
                omega, x, g, partner_rate = -omega, term.jumps[partner], float(term.rates[partner]), g
            else:
                partner_rate = float(term.rates[partner])
            pairs.append(
                {
                    "frequency": omega,
                    "x": matrix_to_json(x),
                    "g_plus": g,
                    "g_minus": partner_rate,
                }
            )
        terms.append({"weight": term.weight, "pairs": pairs})
    payload = {"sigma": matrix_to_json(cl.reference.sigma), "terms": terms}
    return _envelope("canonical", cl.dim, payload)


def dump_channel(channel: QuantumChannel, sigma: ReferenceState | None = None) -> dict:
    payload: dict = {"kraus": [matrix_to_json(op) for op in channel.kraus_ops]}
    if sigma is not None:
        payload["sigma"] = matrix_to_json(sigma.sigma)
    return _envelope("channel", channel.dim, payload)
