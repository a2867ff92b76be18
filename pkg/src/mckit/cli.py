"""Command-line front end: ``mckit <subcommand> [options]``.

Every randomized suite is driven by ``--seed``; the same seed and flags give
byte-identical output.  Any nonzero residual makes the process exit with 1.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import discrete_geometry as dg
from . import factorization as fz
from . import fixtures, graph_ops, partition, skein, traces
from .complex import MCChain, random_chain, six_identities
from .graphs import ChargeSpec, DecoratedGraph, GraphError, enumerate_graphs
from .series import SeriesError


class InputError(ValueError):
    """Malformed input; the message starts with a JSON pointer."""


@dataclass
class RunConfig:
    subcommand: str
    inputs: dict = field(default_factory=dict)
    truncation: tuple = (("g_s", 4),)
    gs_floor: int = -12
    N: int = 1
    seed: int = 0
    jobs: int = 1
    output_format: str = "text"


# ---------------------------------------------------------------------------
# input helpers

def _load_json(path: str, what: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"{what}: file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc


def _pointer_error(exc: Exception, prefix: str = "") -> InputError:
    if isinstance(exc, KeyError):
        return InputError(f"{prefix}/{exc.args[0]}: required field missing")
    return InputError(f"{prefix or '/'}: {exc}")


def load_graph(path: str) -> DecoratedGraph:
    data = _load_json(path, "--graph")
    if not isinstance(data, dict):
        raise InputError("/: expected a JSON object with 'components'")
    try:
        return DecoratedGraph.from_json(data)
    except (KeyError, TypeError, ValueError, GraphError) as exc:
        raise _pointer_error(exc) from exc


def load_geometry(spec: str | None) -> dg.FiniteComplex:
    if spec in (None, "sphere"):
        return dg.simplex_boundary_sphere()
    if spec == "torus":
        return dg.circle_product_torus()
    try:
        return dg.load_geometry(spec)
    except FileNotFoundError as exc:
        raise InputError(f"--geometry: file not found: {spec}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise _pointer_error(exc) from exc


def load_chain(path: str, K: dg.FiniteComplex) -> MCChain:
    data = _load_json(path, "--chain")
    try:
        return MCChain.from_json(data, K)
    except (KeyError, TypeError, ValueError, GraphError) as exc:
        raise _pointer_error(exc) from exc


def load_charge_spec(path: str | None) -> ChargeSpec:
    if path in (None, "demo"):
        return ChargeSpec.rank_one_demo()
    data = _load_json(path, "--charge-spec")
    try:
        return ChargeSpec.from_json(data)
    except (KeyError, TypeError, ValueError, GraphError) as exc:
        raise _pointer_error(exc) from exc


def parse_truncation(text: str | None) -> tuple:
    if not text:
        return (("g_s", 4),)
    out = {}
    for chunk in text.split(","):
        name, _, value = chunk.partition("=")
        if not value:
            name, value = "g_s", name
        try:
            out[name.strip()] = int(value)
        except ValueError as exc:
            raise InputError(f"--truncate: cannot read order '{chunk}'") from exc
    return tuple(sorted(out.items()))


def parse_edge(text: str):
    parts = [p for p in text.replace(" ", "").split(",") if p]
    try:
        values = [int(p) for p in parts]
    except ValueError as exc:
        raise InputError(f"--edge: expected 'h1,h2' or a vertex id, got '{text}'") from exc
    if len(values) == 1:
        return values[0]
    if len(values) == 2:
        return tuple(values)
    raise InputError(f"--edge: expected one or two ids, got '{text}'")


def resolve_jobs(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("MCKIT_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InputError(f"MCKIT_JOBS: not an integer: '{env}'") from exc
    return 1


def _options(cfg: RunConfig) -> partition.PartitionOptions:
    return partition.PartitionOptions(
        N=cfg.N, truncation=cfg.truncation, gs_floor=cfg.gs_floor, charge_spec=ChargeSpec.rank_one_demo()
    )


def _run_seeds(fn: Callable, seeds: Sequence[int], jobs: int) -> list:
    if jobs <= 1 or len(seeds) <= 1:
        return [fn(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, seeds))


# ---------------------------------------------------------------------------
# seeded suites (module-level so worker processes can pickle them)

@dataclass(frozen=True)
class _Hat2Task:
    geometry: str | None
    max_half_edges: int
    max_length: int
    base_seed: int

    def __call__(self, index: int) -> dict:
        K = load_geometry(self.geometry)
        rng = random.Random(self.base_seed * 100003 + index)
        C = random_chain(rng, K, n_graphs=2, max_half_edges=self.max_half_edges, max_length=self.max_length)
        return {k: v.size() for k, v in six_identities(C).items()}


@dataclass(frozen=True)
class _QmeTask:
    options: partition.PartitionOptions
    max_half_edges: int
    max_length: int
    base_seed: int

    def __call__(self, index: int) -> str:
        K = dg.simplex_boundary_sphere()
        rng = random.Random(self.base_seed * 100003 + index)
        B = random_chain(rng, K, n_graphs=2, max_half_edges=self.max_half_edges, max_length=self.max_length, weight_degrees=True)
        return partition.qme_check(B, self.options).to_text()


@dataclass(frozen=True)
class _FactorTask:
    options: partition.PartitionOptions
    max_length: int
    base_seed: int

    def __call__(self, index: int) -> str:
        K = dg.simplex_boundary_sphere()
        rng = random.Random(self.base_seed * 100003 + index)
        Z1 = random_chain(rng, K, n_graphs=2, max_half_edges=3, max_length=self.max_length, weight_degrees=True)
        Z2 = random_chain(rng, K, n_graphs=2, max_half_edges=3, max_length=self.max_length, weight_degrees=True)
        return fz.factorization_check(Z1, Z2, self.options).to_text()


# ---------------------------------------------------------------------------
# subcommands; each returns (exit status, payload)

def cmd_enumerate(cfg: RunConfig):
    spec = load_charge_spec(cfg.inputs.get("charge_spec"))
    beta = tuple(cfg.inputs.get("beta") or [1] * spec.rank)
    counts = {}
    graphs = []
    if cfg.inputs.get("kappa") is not None:
        kappas = [cfg.inputs["kappa"]]
    else:
        kappas = list(range(cfg.inputs["kappa_min"], cfg.inputs["kappa_max"] + 1))
    for kappa in kappas:
        found = enumerate_graphs(spec, beta, kappa)
        counts[kappa] = len(found)
        graphs += [G.to_json() for G in found] if cfg.inputs.get("list") else []
    payload = {"beta": list(beta), "counts": {str(k): v for k, v in counts.items()}, "total": sum(counts.values())}
    if graphs:
        payload["graphs"] = graphs
    return 0, payload


def cmd_delta(cfg: RunConfig):
    G = load_graph(cfg.inputs["graph"])
    try:
        H = graph_ops.delta_edge(G, parse_edge(cfg.inputs["edge"]))
    except GraphError as exc:
        raise InputError(f"--edge: {exc}") from exc
    return 0, H.to_json()


def cmd_sigma(cfg: RunConfig):
    inv = graph_ops.sigma(load_graph(cfg.inputs["graph"]))
    return 0, {
        "genus": inv.genus,
        "boundary_components": list(inv.boundary_components),
        "beta": list(inv.beta),
        "external_edges": [list(e) for e in inv.external_edges],
        "surface": inv.graph.to_json(),
    }


def cmd_dagger(cfg: RunConfig):
    Gd = graph_ops.dagger_normalize(graph_ops.dagger(load_graph(cfg.inputs["graph"])), bool(cfg.inputs.get("normalized")))
    if Gd == graph_ops.ZERO:
        return 0, {"class": "zero"}
    return 0, Gd.to_json()


def cmd_faces(cfg: RunConfig):
    G = load_graph(cfg.inputs["graph"])
    try:
        faces = traces.trv_faces(G)
    except GraphError as exc:
        raise InputError(f"--graph: {exc}") from exc
    payload = {"faces": faces, "weight": f"N^{faces}"}
    if cfg.inputs.get("numeric"):
        payload["numeric"] = {str(n): str(traces.trv_numeric(G, n)) for n in (1, 2, 3)}
    return 0, payload


def cmd_check_hat2(cfg: RunConfig):
    if cfg.inputs.get("chain"):
        K = load_geometry(cfg.inputs.get("geometry"))
        sizes = [{k: v.size() for k, v in six_identities(load_chain(cfg.inputs["chain"], K)).items()}]
    else:
        task = _Hat2Task(cfg.inputs.get("geometry"), cfg.inputs["max_half_edges"], cfg.inputs["max_length"], cfg.seed)
        sizes = _run_seeds(task, list(range(cfg.inputs["count"])), cfg.jobs)
    failing = [i for i, s in enumerate(sizes) if any(s.values())]
    return (1 if failing else 0), {"chains": len(sizes), "failing": failing, "residual_terms": [sizes[i] for i in failing]}


def cmd_solve_propagator(cfg: RunConfig):
    K = load_geometry(cfg.inputs.get("geometry"))
    try:
        P = dg.solve_propagator(K)
    except dg.PropagatorObstruction as exc:
        return 1, {"obstructed": True, "degree": exc.degree, "periods": [[p, q, str(v)] for p, q, v in exc.components]}
    if cfg.inputs.get("out"):
        with open(cfg.inputs["out"], "w") as fh:
            fh.write(dg.propagator_to_json(P) + "\n")
    return 0, {"obstructed": False, "propagator": [[a, b, str(v)] for (a, b), v in sorted(P.cochain.items())]}


def _series_payload(value) -> dict:
    return {"series": value.to_text(), "terms": value.to_json()}


def cmd_partition(cfg: RunConfig):
    K = load_geometry(cfg.inputs.get("geometry"))
    Z = load_chain(cfg.inputs["chain"], K)
    return 0, _series_payload(partition.partition_function(Z, _options(cfg)))


def cmd_potential(cfg: RunConfig):
    K = load_geometry(cfg.inputs.get("geometry"))
    Z = load_chain(cfg.inputs["chain"], K)
    return 0, _series_payload(partition.potential(Z, _options(cfg)))


def cmd_qme_check(cfg: RunConfig):
    opts = _options(cfg)
    if cfg.inputs.get("chain"):
        K = load_geometry(cfg.inputs.get("geometry"))
        residuals = [partition.qme_check(load_chain(cfg.inputs["chain"], K), opts).to_text()]
    else:
        task = _QmeTask(opts, cfg.inputs["max_half_edges"], cfg.inputs["max_length"], cfg.seed)
        residuals = _run_seeds(task, list(range(cfg.inputs["count"])), cfg.jobs)
    failing = {str(i): r for i, r in enumerate(residuals) if r != "0"}
    return (1 if failing else 0), {"chains": len(residuals), "failing": failing}


def cmd_factor_check(cfg: RunConfig):
    opts = _options(cfg)
    first = cfg.inputs.get("chain_z1") or cfg.inputs.get("chain")
    if first and cfg.inputs.get("chain2"):
        K = load_geometry(cfg.inputs.get("geometry"))
        Z1, Z2 = load_chain(first, K), load_chain(cfg.inputs["chain2"], K)
        residuals = [fz.factorization_check(Z1, Z2, opts).to_text()]
    else:
        task = _FactorTask(opts, cfg.inputs["max_length"], cfg.seed)
        residuals = _run_seeds(task, list(range(cfg.inputs["count"])), cfg.jobs)
    failing = {str(i): r for i, r in enumerate(residuals) if r != "0"}
    return (1 if failing else 0), {"pairs": len(residuals), "failing": failing}


def cmd_skein(cfg: RunConfig):
    data = _load_json(cfg.inputs["diagram"], "--diagram")
    if not isinstance(data, dict):
        raise InputError("/: expected a JSON object with 'crossings'")
    try:
        D = skein.LinkDiagram.from_json(data)
        value = skein.evaluate(D, cfg.inputs.get("max_depth"))
    except skein.SkeinError as exc:
        raise InputError(str(exc)) from exc
    payload = {"value": value.to_text(), "terms": value.to_json()}
    if cfg.inputs.get("expand"):
        expansion = skein.parse_expansion(_load_json(cfg.inputs["expand"], "--expand"))
        try:
            payload["series"] = value.expand(expansion).to_text()
        except SeriesError as exc:
            raise InputError(f"--expand: {exc}") from exc
    return 0, payload


def cmd_gen_fixtures(cfg: RunConfig):
    out_dir = cfg.inputs["out"]
    os.makedirs(out_dir, exist_ok=True)
    K = dg.simplex_boundary_sphere()
    written = []
    for i in range(cfg.inputs["count"]):
        rng = random.Random(cfg.seed * 100003 + i)
        C = random_chain(rng, K, n_graphs=2, max_half_edges=cfg.inputs["max_half_edges"], max_length=cfg.inputs["max_length"], weight_degrees=True)
        path = os.path.join(out_dir, f"chain_{cfg.seed}_{i}.json")
        with open(path, "w") as fh:
            json.dump(C.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        written.append(path)
    propagator = dg.solve_propagator(K).cochain
    for i in range(cfg.inputs["count"]):
        rng = random.Random(cfg.seed * 100003 + i)
        C = fixtures.supported_chain(rng, K, propagator, n_graphs=2, max_half_edges=cfg.inputs["max_half_edges"], max_length=cfg.inputs["max_length"])
        path = os.path.join(out_dir, f"supported_{cfg.seed}_{i}.json")
        with open(path, "w") as fh:
            json.dump(C.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        written.append(path)
    diagrams = {
        "unknot": skein.unknot(),
        "unknot_framed": skein.unknot(framing=1),
        "unknot_offset": skein.unknot(offset=1),
        "hopf": skein.braid_closure([1, 1], 2),
        "trefoil": skein.braid_closure([1, 1, 1], 2),
    }
    for name, D in diagrams.items():
        path = os.path.join(out_dir, f"{name}.json")
        with open(path, "w") as fh:
            json.dump(D.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return 0, {"written": written}


COMMANDS = {
    "enumerate": cmd_enumerate,
    "delta": cmd_delta,
    "sigma": cmd_sigma,
    "dagger": cmd_dagger,
    "faces": cmd_faces,
    "check-hat2": cmd_check_hat2,
    "solve-propagator": cmd_solve_propagator,
    "partition": cmd_partition,
    "potential": cmd_potential,
    "qme-check": cmd_qme_check,
    "factor-check": cmd_factor_check,
    "skein": cmd_skein,
    "gen-fixtures": cmd_gen_fixtures,
}


# ---------------------------------------------------------------------------
# argument parsing and output

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--truncate", help="orders such as 'g_s=4,T=3' (a bare integer sets g_s)")
    common.add_argument("--gs-floor", type=int, default=-12)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default: MCKIT_JOBS or 1)")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--N", type=int, default=1, help="gl(N) rank for Lie legs")

    parser = argparse.ArgumentParser(prog="mckit", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("enumerate", parents=[common], help="count stable graphs by kappa")
    p.add_argument("--spec", "--charge-spec", dest="charge_spec", default="demo", help="charge spec JSON or 'demo'")
    p.add_argument("--beta", type=int, nargs="*")
    p.add_argument("--kappa", type=int, default=None, help="a single kappa (overrides the range)")
    p.add_argument("--kappa-min", type=int, default=-2)
    p.add_argument("--kappa-max", type=int, default=0)
    p.add_argument("--list", action="store_true", help="include the graphs themselves")

    for name in ("delta", "sigma", "dagger", "faces"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--graph", required=True)
        if name == "delta":
            p.add_argument("--edge", required=True, help="'h1,h2' for an internal edge or a degenerate vertex id")
        if name == "dagger":
            p.add_argument("--normalized", action="store_true", help="map graphs with a vertex-free uncharged component to zero")
        if name == "faces":
            p.add_argument("--numeric", action="store_true", help="also run the matrix-sum oracle for N = 1, 2, 3")

    for name in ("check-hat2", "qme-check", "factor-check", "gen-fixtures"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--count", type=int, default=20)
        p.add_argument("--max-half-edges", type=int, default=4 if name != "check-hat2" else 6)
        p.add_argument("--max-length", type=int, default=2)
        if name != "gen-fixtures":
            p.add_argument("--chain")
            p.add_argument("--geometry")
        if name == "factor-check":
            p.add_argument("--z1", dest="chain_z1")
            p.add_argument("--z2", dest="chain2")
        if name == "gen-fixtures":
            p.add_argument("--out", required=True)

    p = sub.add_parser("solve-propagator", parents=[common])
    p.add_argument("--geometry", help="'sphere', 'torus' or a geometry JSON file")
    p.add_argument("--out", help="also write the propagator JSON here")

    for name in ("partition", "potential"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--chain", required=True)
        p.add_argument("--geometry")

    p = sub.add_parser("skein", parents=[common])
    p.add_argument("--diagram", required=True)
    p.add_argument("--expand", help="JSON map from each generator to a series")
    p.add_argument("--max-depth", type=int, default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    reserved = {"subcommand", "truncate", "gs_floor", "seed", "jobs", "format", "N"}
    inputs = {k: v for k, v in vars(args).items() if k not in reserved}
    return RunConfig(
        subcommand=args.subcommand,
        inputs=inputs,
        truncation=parse_truncation(args.truncate),
        gs_floor=args.gs_floor,
        N=args.N,
        seed=args.seed,
        jobs=resolve_jobs(args.jobs),
        output_format=args.format,
    )


def _render_text(payload, indent: int = 0) -> list:
    pad = "  " * indent
    lines = []
    if isinstance(payload, dict):
        for key, value in payload.items():
            if isinstance(value, (dict, list)) and value and not _is_flat(value):
                lines.append(f"{pad}{key}:")
                lines += _render_text(value, indent + 1)
            else:
                lines.append(f"{pad}{key}: {_flat(value)}")
    elif isinstance(payload, list):
        for item in payload:
            lines.append(f"{pad}- {json.dumps(item, sort_keys=True)}")
    else:
        lines.append(f"{pad}{payload}")
    return lines


def _is_flat(value) -> bool:
    items = value.values() if isinstance(value, dict) else value
    return all(not isinstance(v, (dict, list)) for v in items)


def _flat(value) -> str:
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def run(cfg: RunConfig) -> tuple:
    """Execute one configuration; returns (exit status, payload)."""
    return COMMANDS[cfg.subcommand](cfg)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        status, payload = run(cfg)
    except InputError as exc:
        print(f"mckit {args.subcommand}: {exc}", file=sys.stderr)
        return 2
    if cfg.output_format == "json":
        print(json.dumps(payload, indent=1, sort_keys=True))
    elif cfg.subcommand == "skein":
        print(payload["value"])
        if "series" in payload:
            print(payload["series"])
    else:
        print("\n".join(_render_text(payload)))
    return status


if __name__ == "__main__":
    sys.exit(main())
