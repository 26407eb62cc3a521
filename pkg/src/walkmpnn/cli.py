"""Command-line front end.

Usage:
    walkmpnn walks      --graph g.edges --k 3
    walkmpnn embed      --synthetic cycle:n=6 --model gcn --depth 3
    walkmpnn verify     --model dgcnn --synthetic erdos-renyi:n=30,p=0.2 --seed 11
    walkmpnn correlate  --model gin0 --synthetic erdos-renyi:n=20,p=0.3,count=20
    walkmpnn collide    --builtin-fig2 --k 2
    walkmpnn lipschitz  --model gin0 --depth 3 --seed 4

Inputs come from exactly one of --graph (edge list), --tu-dir (TU benchmark
directory), --synthetic (repeatable ``kind:key=value,...``) or
--builtin-fig2. Synthetic kinds: erdos-renyi (n, p), path (n), cycle (n),
star (leaves), complete (n), fig2-leaf-on-hub, fig2-deg2-node, fig2-star3.
The extra key ``count=N`` draws N graphs seeded seed, seed+1, ...

Exit codes: 0 success, 1 a certification check failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .analysis import (
    collapse_check,
    correlate,
    find_walk_collisions,
    model_label,
    proportionality_check,
    readout_census,
)
from .errors import WalkMPNNError
from .graph import (
    FIG2_KINDS,
    FIG2_RED_NODE,
    GraphCollection,
    fig2_collection,
    generate,
    parse_edge_list,
    parse_synthetic,
    parse_tu_collection,
)
from .lipschitz import lipschitz_profile, verify_bound, walk_kind_for
from .model import Model, build_model, forward, readout
from .walks import walk_table

SCHEMA_VERSION = 1
OUT_ENV = "WALKMPNN_OUT_DIR"
DEFAULT_OUT = "walkmpnn-out"
EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    graph: str | None = None
    tu_dir: str | None = None
    synthetic: list[str] = field(default_factory=list)
    builtin_fig2: bool = False
    model: str = "gin0"
    model_json: str | None = None
    epsilon: float = 0.0
    depth: int = 3
    width: int = 8
    bias: str = "zero"
    isolated: str = "error"
    seed: int = 0
    k: int = 3
    tol: float | None = None
    out: str = DEFAULT_OUT
    format: str = "json"
    version: str = __version__

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        names = cls.__dataclass_fields__
        values = {k: v for k, v in vars(args).items() if k in names and v is not None}
        values["synthetic"] = list(args.synthetic or [])
        return cls(**values)

    def to_json(self) -> dict:
        return asdict(self)


class InputError(WalkMPNNError):
    pass


# ---------------------------------------------------------------- helpers

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _envelope(cfg: RunConfig, result) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "config": cfg.to_json(), "result": result}
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _csv_header(cfg: RunConfig) -> str:
    return (f"# schema_version={SCHEMA_VERSION}\n"
            f"# config={json.dumps(cfg.to_json(), separators=(',', ':'))}\n")


def load_inputs(cfg: RunConfig) -> tuple[GraphCollection, list[str]]:
    """Resolve the single input source into a collection plus per-graph names."""
    sources = [cfg.graph is not None, cfg.tu_dir is not None, bool(cfg.synthetic), cfg.builtin_fig2]
    if sum(sources) != 1:
        raise InputError("give exactly one of --graph, --tu-dir, --synthetic, --builtin-fig2")
    if cfg.graph is not None:
        g = parse_edge_list(Path(cfg.graph).read_text())
        return GraphCollection((g,)), [Path(cfg.graph).name]
    if cfg.tu_dir is not None:
        return _load_tu(Path(cfg.tu_dir))
    if cfg.builtin_fig2:
        return fig2_collection(), list(FIG2_KINDS)
    graphs, names = [], []
    for text in cfg.synthetic:
        spec, count = parse_synthetic(text, seed=cfg.seed)
        for i in range(count):
            s = type(spec)(spec.kind, spec.n, spec.p, spec.leaves, spec.seed + i)
            graphs.append(generate(s))
            names.append(f"{s.describe()}@{s.seed}" if s.kind == "erdos-renyi" else s.describe())
    return GraphCollection(tuple(graphs)), names


def _load_tu(root: Path) -> tuple[GraphCollection, list[str]]:
    adj = sorted(root.glob("*_A.txt"))
    if len(adj) != 1:
        raise InputError(f"expected exactly one *_A.txt in {root}, found {len(adj)}")
    prefix = adj[0].name[: -len("_A.txt")]
    indicator = root / f"{prefix}_graph_indicator.txt"
    if not indicator.exists():
        raise InputError(f"missing {indicator.name}")
    labels = root / f"{prefix}_graph_labels.txt"
    coll = parse_tu_collection(
        adj[0].read_text(), indicator.read_text(),
        labels.read_text() if labels.exists() else None,
    )
    return coll, [f"{prefix}#{i + 1}" for i in range(len(coll))]


def make_model(cfg: RunConfig) -> Model:
    if cfg.model_json:
        data = json.loads(Path(cfg.model_json).read_text())
        return Model.from_json(data.get("model", data)).with_isolated(cfg.isolated)
    variant = cfg.model
    if variant == "gin0" and cfg.epsilon != 0.0:
        raise InputError("gin0 fixes epsilon = 0; use --model gin for other values")
    return build_model(variant, cfg.depth, cfg.width, cfg.seed, epsilon=cfg.epsilon,
                       bias_mode=cfg.bias, isolated=cfg.isolated)


# --------------------------------------------------------------- commands

def cmd_walks(cfg: RunConfig) -> int:
    coll, names = load_inputs(cfg)
    tables = [walk_table(g, cfg.k, "both") for g in coll]
    out = Path(cfg.out)
    if cfg.format == "csv":
        lines = [_csv_header(cfg), "graph,node,k,count,normalized\n"]
        for gi, t in enumerate(tables):
            for v, k, c, w in t.rows():
                lines.append(f"{gi},{v},{k},{c},{_fmt(w)}\n")
        _atomic_write(out / "walks.csv", "".join(lines))
    else:
        result = {"graphs": [{"name": n, **t.to_json()} for n, t in zip(names, tables)]}
        _atomic_write(out / "walks.json", _envelope(cfg, result))
    return EXIT_OK


def cmd_embed(cfg: RunConfig) -> int:
    coll, names = load_inputs(cfg)
    model = make_model(cfg)
    tables = [forward(g, model) for g in coll]
    out = Path(cfg.out)
    if cfg.format == "csv":
        width = max(h.shape[1] for t in tables for h in t.layers) if tables else 1
        lines = [_csv_header(cfg),
                 "graph,node,layer," + ",".join(f"c{i}" for i in range(width)) + "\n"]
        for gi, t in enumerate(tables):
            for k, h in enumerate(t.layers):
                for v, row in enumerate(h):
                    cells = [_fmt(x) for x in row] + [""] * (width - h.shape[1])
                    lines.append(f"{gi},{v},{k}," + ",".join(cells) + "\n")
        _atomic_write(out / "embeddings.csv", "".join(lines))
    else:
        graphs = []
        for name, g, t in zip(names, coll, tables):
            entry = {"name": name, **t.to_json()}
            if g.n:
                entry["readout"] = {"sum": readout(t, "sum").tolist(), "mean": readout(t, "mean").tolist()}
            graphs.append(entry)
        _atomic_write(out / "embeddings.json",
                      _envelope(cfg, {"model": model.to_json(), "graphs": graphs}))
    return EXIT_OK


def _status(passed: bool, informational: bool) -> str:
    if passed:
        return "pass"
    return "expected-fail" if informational else "fail"


def cmd_verify(cfg: RunConfig) -> int:
    coll, names = load_inputs(cfg)
    model = make_model(cfg)
    label = model_label(model)
    if model.variant == "gin" and not model.is_gin0:
        raise InputError("verification covers gcn, dgcnn, gat and gin0; GIN with epsilon != 0 has no claim")
    tables = [forward(g, model) for g in coll]
    sections = []
    if model.variant in ("dgcnn", "gat"):
        tol = cfg.tol if cfg.tol is not None else 1e-10
        for k in range(1, model.depth + 1):
            rep = collapse_check(tables, k, tol)
            sections.append({"check": "collapse", "status": _status(rep.passed, False), **rep.to_json()})
        if len(coll):
            for mode in ("sum", "mean"):
                rep = readout_census(coll, model, mode)
                sections.append({"check": f"readout-{mode}", "status": _status(rep.passed, False),
                                 **{k: v for k, v in rep.to_json().items() if k != "vectors"}})
    else:
        informational = model.has_bias
        kind = walk_kind_for(model)
        tol = cfg.tol if cfg.tol is not None else 1e-8
        walks = [walk_table(g, model.depth, kind) for g in coll]
        profile = lipschitz_profile(model)
        for k in range(1, model.depth + 1):
            rep = proportionality_check(tables, walks, k, kind)
            sections.append({"check": "proportionality",
                             "status": _status(rep.passed, informational), **rep.to_json()})
            for gi, g in enumerate(coll):
                b = verify_bound(g, model, k, walks[gi], tol, tables[gi], profile,
                                 require_zero_bias=False)
                sections.append({"check": "lipschitz-bound", "graph": names[gi],
                                 "status": _status(b.certified, informational), **b.to_json()})
    certified = all(s["status"] != "fail" for s in sections)
    result = {
        "model": label,
        "certified": certified,
        "lipschitz": lipschitz_profile(model).to_json(),
        "sections": sections,
    }
    _atomic_write(Path(cfg.out) / "verify.json", _envelope(cfg, result))
    return EXIT_OK if certified else EXIT_FAILED


def cmd_correlate(cfg: RunConfig) -> int:
    coll, _ = load_inputs(cfg)
    model = make_model(cfg)
    rep = correlate(coll, model, cfg.k)
    out = Path(cfg.out)
    _atomic_write(out / "scatter.csv", _csv_header(cfg) + rep.scatter_csv())
    _atomic_write(out / "correlation.json", _envelope(cfg, rep.to_json()))
    return EXIT_OK


def cmd_collide(cfg: RunConfig) -> int:
    coll, names = load_inputs(cfg)
    # Attach embedding distances only when the model reaches layer k.
    model = make_model(cfg) if cfg.depth >= cfg.k else None
    witnesses = find_walk_collisions(coll, cfg.k, require_distinct_degrees=True, model=model)
    result = {
        "graphs": names,
        "model": None if model is None else model_label(model),
        "witnesses": [w.to_json() for w in witnesses],
    }
    if cfg.builtin_fig2:
        result["red_node"] = FIG2_RED_NODE
    _atomic_write(Path(cfg.out) / "collisions.json", _envelope(cfg, result))
    return EXIT_OK


def cmd_lipschitz(cfg: RunConfig) -> int:
    model = make_model(cfg)
    prof = lipschitz_profile(model)
    out = Path(cfg.out)
    if cfg.format == "csv":
        rows = [_csv_header(cfg), "layer,lipschitz,cumulative\n"]
        rows += [f"{i},{_fmt(a)},{_fmt(b)}\n"
                 for i, (a, b) in enumerate(zip(prof.per_layer, prof.cumulative), start=1)]
        _atomic_write(out / "lipschitz.csv", "".join(rows))
    else:
        _atomic_write(out / "lipschitz.json",
                      _envelope(cfg, {"model": model_label(model), **prof.to_json()}))
    return EXIT_OK


HELP = {
    "walks": "walk counts and normalized walk sums per node",
    "embed": "node representations at every layer, plus graph readouts",
    "verify": "collapse, proportionality and Lipschitz-bound checks",
    "correlate": "embedding distance vs walk distance over all node pairs",
    "collide": "nodes with equal walk counts but different degrees",
    "lipschitz": "per-layer Lipschitz constants of a model",
}

COMMANDS = {
    "walks": cmd_walks,
    "embed": cmd_embed,
    "verify": cmd_verify,
    "correlate": cmd_correlate,
    "collide": cmd_collide,
    "lipschitz": cmd_lipschitz,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("input")
    src.add_argument("--graph", help="edge-list file ('u v' per line, '#' comments)")
    src.add_argument("--tu-dir", help="directory holding DS_A.txt and DS_graph_indicator.txt")
    src.add_argument("--synthetic", action="append",
                     help="kind:key=value,... (repeatable), e.g. erdos-renyi:n=30,p=0.2,count=5")
    src.add_argument("--builtin-fig2", action="store_true",
                     help="the three graphs whose node 0 has 10 two-step walks")
    mdl = common.add_argument_group("model")
    mdl.add_argument("--model", choices=["gcn", "dgcnn", "gat", "gin0", "gin"], default="gin0")
    mdl.add_argument("--model-json", help="load weights from a model JSON instead of drawing them")
    mdl.add_argument("--epsilon", type=float, default=0.0)
    mdl.add_argument("--depth", type=int, default=3)
    mdl.add_argument("--width", type=int, default=8)
    mdl.add_argument("--bias", choices=["zero", "random-small"], default="zero")
    mdl.add_argument("--isolated", choices=["error", "zero"], default="error",
                     help="GAT handling of nodes without neighbours")
    run = common.add_argument_group("run")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--k", type=int, default=3, help="walk length / layer (default 3)")
    run.add_argument("--tol", type=float)
    run.add_argument("--out", default=os.environ.get(OUT_ENV, DEFAULT_OUT),
                     help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    run.add_argument("--format", choices=["json", "csv"], default="json")

    parser = argparse.ArgumentParser(
        prog="walkmpnn", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig.from_args(args)
    if cfg.k < 0 or cfg.depth < 0:
        print("error: --k and --depth must be nonnegative", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[cfg.command](cfg)
    except (WalkMPNNError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
