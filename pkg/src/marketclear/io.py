"""Market-file loading and deterministic artifact export.

Market files are JSON. Every file carries a ``"model"`` field selecting the
schema:

``linear``
    ``{"model": "linear", "A": matrix, "labels"?: [...], "p0"?: [...]}``
``constant_aggregate``
    ``{"model": "constant_aggregate", "delta": [...], "A": matrix,
    "labels"?: [...]}``
``transfer`` / ``ot`` / ``housing``
    ``{"model": ..., "sigma": s, "n": {...}, "m": {...},
    "frontier": {"kind": "tu"|"taxes"|"ntu", ...}, "singles": bool,
    "seed"?: int, "y0"?: label, "pi"?: float}``
``hedonic``
    ``{"model": "hedonic", "n": {...}, "m": {...}, "locations"?: [...],
    "c": matrix, "a": matrix}``
``nt``
    ``{"model": "nt", "alpha": matrix, "gamma": matrix,
    "workers"?: [...], "firms"?: [...]}`` — adding ``"n"`` and ``"m"``
    mass tables switches to the aggregate variant.

Mass tables (``n``, ``m``) are either explicit ``{label: mass}`` mappings
(order preserved) or generators ``{"count": k, "prefix": "x",
"uniform": [lo, hi]}`` / ``{"count": k, "prefix": "x", "const": v}``.
Matrices are either nested row-major lists or generators
``{"uniform": [lo, hi]}`` / ``{"const": v}`` whose shape comes from
context. All generators draw from one ``numpy`` generator seeded by the
file's ``"seed"`` (overridable by the caller) in a fixed documented order —
masses first (``n`` then ``m``), then matrix fields in schema order — so a
given file and seed always produce the same market.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .hedonic import HedonicMarket
from .matching import AggregateNTMarket, IndividualMarket
from .transfers import AggregateMarket, FrontierGrid, TaxSchedule

__all__ = [
    "MarketFileError",
    "LoadedMarket",
    "load_market",
    "load_json",
    "write_json",
    "format_float",
    "write_csv",
]


class MarketFileError(ValueError):
    """A market or outcome file failed to parse or validate."""


@dataclass(frozen=True)
class LoadedMarket:
    """A parsed market file: normalized model name, market object, options.

    ``model`` is one of ``linear``, ``constant_aggregate``, ``transfer``,
    ``ot``, ``housing``, ``hedonic``, ``nt``, ``nt_aggregate``. For the
    linear family ``payload`` is a dict of arrays; otherwise it is the
    constructed market object. ``extras`` carries optional per-file solver
    defaults (``p0``, ``y0``, ``pi``).
    """

    model: str
    payload: Any
    extras: dict[str, Any] = field(default_factory=dict)


class _Resolver:
    """Lazy RNG shared by every generator field of one file."""

    def __init__(self, seed):
        self._seed = seed
        self._rng = None

    def rng(self) -> np.random.Generator:
        if self._rng is None:
            if self._seed is None:
                raise MarketFileError(
                    "a seed is required when the file uses generators"
                )
            self._rng = np.random.default_rng(int(self._seed))
        return self._rng


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise MarketFileError(message)


def _uniform_bounds(bounds, name: str) -> tuple[float, float]:
    _require(
        isinstance(bounds, (list, tuple)) and len(bounds) == 2,
        f"{name}: 'uniform' must be a [lo, hi] pair",
    )
    lo, hi = float(bounds[0]), float(bounds[1])
    _require(lo < hi, f"{name}: 'uniform' bounds must satisfy lo < hi")
    return lo, hi


def _masses(obj, name: str, default_prefix: str, resolver: _Resolver):
    """Resolve a mass table to ``(labels, values)``."""
    _require(isinstance(obj, dict) and obj, f"'{name}' must be a non-empty object")
    if "count" in obj:
        count = obj["count"]
        _require(
            isinstance(count, int) and count >= 1,
            f"{name}: 'count' must be a positive integer",
        )
        prefix = str(obj.get("prefix", default_prefix))
        labels = tuple(f"{prefix}{k + 1}" for k in range(count))
        if "uniform" in obj:
            lo, hi = _uniform_bounds(obj["uniform"], name)
            values = resolver.rng().uniform(lo, hi, count)
        elif "const" in obj:
            values = np.full(count, float(obj["const"]))
        else:
            raise MarketFileError(
                f"{name}: generator needs 'uniform' or 'const'"
            )
        return labels, values
    try:
        values = np.array([float(v) for v in obj.values()])
    except (TypeError, ValueError) as exc:
        raise MarketFileError(f"{name}: masses must be numbers ({exc})") from exc
    return tuple(str(k) for k in obj), values


def _matrix(obj, name: str, shape: tuple[int, int], resolver: _Resolver):
    """Resolve a matrix field (explicit rows or generator) to ``shape``."""
    if isinstance(obj, dict):
        if "uniform" in obj:
            lo, hi = _uniform_bounds(obj["uniform"], name)
            return resolver.rng().uniform(lo, hi, shape)
        if "const" in obj:
            return np.full(shape, float(obj["const"]))
        raise MarketFileError(f"{name}: generator needs 'uniform' or 'const'")
    try:
        out = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MarketFileError(f"{name}: not a numeric matrix ({exc})") from exc
    _require(
        out.ndim == 2 and out.shape == shape,
        f"{name}: expected a {shape[0]}x{shape[1]} matrix",
    )
    return out


def _labels(obj, name: str, count: int, prefix: str) -> tuple[str, ...]:
    if obj is None:
        return tuple(f"{prefix}{k + 1}" for k in range(count))
    _require(
        isinstance(obj, (list, tuple)) and len(obj) == count,
        f"'{name}' must list {count} labels",
    )
    return tuple(str(s) for s in obj)


def _frontier(obj, shape, resolver: _Resolver) -> FrontierGrid:
    _require(isinstance(obj, dict), "'frontier' must be an object")
    kind = obj.get("kind")
    if kind == "tu":
        _require("phi" in obj, "tu frontier needs 'phi'")
        return FrontierGrid.tu(_matrix(obj["phi"], "frontier.phi", shape, resolver))
    if kind in ("taxes", "ntu"):
        _require(
            "alpha" in obj and "gamma" in obj,
            f"{kind} frontier needs 'alpha' and 'gamma'",
        )
        alpha = _matrix(obj["alpha"], "frontier.alpha", shape, resolver)
        gamma = _matrix(obj["gamma"], "frontier.gamma", shape, resolver)
        if kind == "ntu":
            return FrontierGrid.ntu(alpha, gamma)
        sched = obj.get("schedule")
        _require(
            isinstance(sched, dict) and "rates" in sched and "thresholds" in sched,
            "taxes frontier needs 'schedule' with 'rates' and 'thresholds'",
        )
        return FrontierGrid.taxes(
            alpha, gamma, TaxSchedule(sched["rates"], sched["thresholds"])
        )
    raise MarketFileError("frontier 'kind' must be 'tu', 'taxes', or 'ntu'")


def _load_transfer_family(raw: dict, model: str, resolver: _Resolver) -> LoadedMarket:
    for key in ("n", "m", "frontier"):
        _require(key in raw, f"'{model}' files need '{key}'")
    singles = raw.get("singles", model != "ot")
    _require(isinstance(singles, bool), "'singles' must be true or false")
    _require(
        not (model == "ot" and singles),
        "the balanced transport model has no singles",
    )
    x_labels, n = _masses(raw["n"], "n", "x", resolver)
    y_labels, m = _masses(raw["m"], "m", "y", resolver)
    grid = _frontier(raw["frontier"], (len(x_labels), len(y_labels)), resolver)
    if model == "ot":
        _require(grid.kind == "tu", "the transport model needs a tu frontier")
    if model == "housing":
        _require(grid.kind == "ntu", "the housing model needs an ntu frontier")
    market = AggregateMarket(
        x_labels=x_labels,
        y_labels=y_labels,
        n=n,
        m=m,
        frontiers=grid,
        sigma=float(raw.get("sigma", 1.0)),
        singles=singles,
    )
    extras: dict[str, Any] = {}
    if not singles and model != "ot":
        if raw.get("y0") is not None:
            _require(str(raw["y0"]) in y_labels, "'y0' must be a y-side label")
            extras["y0"] = str(raw["y0"])
        extras["pi"] = float(raw.get("pi", 0.0))
    return LoadedMarket(model, market, extras)


def _load_hedonic(raw: dict, resolver: _Resolver) -> LoadedMarket:
    for key in ("n", "m", "c", "a"):
        _require(key in raw, f"'hedonic' files need '{key}'")
    x_labels, n = _masses(raw["n"], "n", "x", resolver)
    y_labels, m = _masses(raw["m"], "m", "y", resolver)
    locations = raw.get("locations")
    if locations is None:
        _require(
            isinstance(raw["c"], (list, tuple))
            and raw["c"]
            and isinstance(raw["c"][0], (list, tuple)),
            "'locations' is required when 'c' is generated",
        )
        z_labels = _labels(None, "locations", len(raw["c"][0]), "z")
    else:
        z_labels = _labels(locations, "locations", len(locations), "z")
    c = _matrix(raw["c"], "c", (len(x_labels), len(z_labels)), resolver)
    a = _matrix(raw["a"], "a", (len(y_labels), len(z_labels)), resolver)
    market = HedonicMarket(
        x_labels=x_labels, y_labels=y_labels, z_labels=z_labels,
        n=n, m=m, c=c, a=a,
    )
    return LoadedMarket("hedonic", market)


def _load_nt(raw: dict, resolver: _Resolver) -> LoadedMarket:
    for key in ("alpha", "gamma"):
        _require(key in raw, f"'nt' files need '{key}'")
    aggregate = "n" in raw or "m" in raw
    if aggregate:
        _require(
            "n" in raw and "m" in raw,
            "aggregate 'nt' files need both 'n' and 'm'",
        )
        x_labels, n = _masses(raw["n"], "n", "x", resolver)
        y_labels, m = _masses(raw["m"], "m", "y", resolver)
        shape = (len(x_labels), len(y_labels))
        market = AggregateNTMarket(
            x_labels=x_labels,
            y_labels=y_labels,
            n=n,
            m=m,
            alpha=_matrix(raw["alpha"], "alpha", shape, resolver),
            gamma=_matrix(raw["gamma"], "gamma", shape, resolver),
        )
        return LoadedMarket("nt_aggregate", market)
    alpha_rows = raw["alpha"]
    _require(
        isinstance(alpha_rows, (list, tuple)) and alpha_rows,
        "'alpha' must be a non-empty matrix",
    )
    rows = len(alpha_rows)
    cols = len(alpha_rows[0]) if isinstance(alpha_rows[0], (list, tuple)) else 0
    i_labels = _labels(raw.get("workers"), "workers", rows, "w")
    j_labels = _labels(raw.get("firms"), "firms", cols, "f")
    shape = (rows, cols)
    market = IndividualMarket(
        i_labels=i_labels,
        j_labels=j_labels,
        alpha=_matrix(raw["alpha"], "alpha", shape, resolver),
        gamma=_matrix(raw["gamma"], "gamma", shape, resolver),
    )
    return LoadedMarket("nt", market)


def _load_linear(raw: dict, model: str, resolver: _Resolver) -> LoadedMarket:
    _require("A" in raw, f"'{model}' files need 'A'")
    rows = raw["A"]
    _require(
        isinstance(rows, (list, tuple)) and rows,
        "'A' must be a non-empty matrix",
    )
    size = len(rows)
    a = _matrix(rows, "A", (size, size), resolver)
    labels = _labels(raw.get("labels"), "labels", size, "z")
    payload: dict[str, Any] = {"A": a, "labels": labels}
    extras: dict[str, Any] = {}
    if model == "constant_aggregate":
        _require("delta" in raw, "'constant_aggregate' files need 'delta'")
        delta = np.array(raw["delta"], dtype=float).reshape(-1)
        _require(delta.size == size, "'delta' must match the size of 'A'")
        payload["delta"] = delta
    if raw.get("p0") is not None:
        p0 = np.array(raw["p0"], dtype=float).reshape(-1)
        _require(p0.size == size, "'p0' must match the size of 'A'")
        extras["p0"] = p0
    return LoadedMarket(model, payload, extras)


def load_json(path) -> Any:
    """Parse a JSON file, reporting failures with line context."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MarketFileError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MarketFileError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"
        ) from exc


def load_market(path, *, seed=None) -> LoadedMarket:
    """Load and validate a market file.

    ``seed`` overrides the file's ``"seed"`` field for generator
    resolution. Raises :class:`MarketFileError` on any parse or schema
    problem; model-level validation errors are re-raised with file context.
    """
    raw = load_json(path)
    _require(isinstance(raw, dict), f"{path}: top level must be an object")
    model = raw.get("model")
    resolver = _Resolver(seed if seed is not None else raw.get("seed"))
    try:
        if model in ("linear", "constant_aggregate"):
            return _load_linear(raw, model, resolver)
        if model in ("transfer", "ot", "housing"):
            return _load_transfer_family(raw, model, resolver)
        if model == "hedonic":
            return _load_hedonic(raw, resolver)
        if model == "nt":
            return _load_nt(raw, resolver)
    except MarketFileError as exc:
        raise MarketFileError(f"{path}: {exc}") from exc
    except ValueError as exc:
        raise MarketFileError(f"{path}: {exc}") from exc
    raise MarketFileError(
        f"{path}: unknown model {model!r}; expected one of linear, "
        "constant_aggregate, transfer, ot, housing, hedonic, nt"
    )


# ---------------------------------------------------------------------------
# Export helpers


def format_float(value) -> str:
    """Shortest-exact decimal used by every CSV artifact."""
    return format(float(value), ".17g")


def write_json(path, payload) -> None:
    """Write sorted, indented JSON with a trailing newline."""
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_csv(path, header: list[str], rows) -> None:
    """Write a CSV with LF newlines; floats go through :func:`format_float`."""
    lines = [",".join(header)]
    for row in rows:
        cells = [
            cell if isinstance(cell, str) else format_float(cell) for cell in row
        ]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
