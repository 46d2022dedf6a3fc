"""Batch command line: transcribe motifs to tensors, fit, evaluate, generate.

Subcommands:
  transcribe   enumerate each motif and write its sparse tensor + manifest
  fit          run the full pipeline and write consensus/labels/weights/log
  evaluate     compare predicted labels against ground truth, print JSON
  gen-planted  write a synthetic planted-block dataset and a ready run config

Tensor files are cached: each motif's tensor carries a content hash of the
node/edge files and the motif spec, and is rebuilt only when that changes.
Errors exit nonzero with a one-line JSON diagnostic on stderr; `fit` exits 0
on convergence and 3 when it stops at the iteration cap.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path


from .hin import load_hin, write_hin
from .metrics import (
    MotifTemplate,
    PlantedConfig,
    accuracy_micro_f1,
    generate_planted_hin,
    macro_f1,
    nmi,
)
from .model import Hyperparameters, assign_clusters, fit, init_model
from .motifs import enumerate_instances, load_motif, transcribe
from .tensors import SparseTensor

EXIT_MAX_ITERS = 3


@dataclass
class RunConfig:
    nodes: Path
    edges: Path
    motifs: list[Path]
    seeds: Path
    out_dir: Path
    tensor_dir: Path
    hyper: Hyperparameters
    threads: int

    @classmethod
    def from_json(cls, path):
        path = Path(path)
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        base = path.parent

        def resolve(key, required=True):
            if key not in raw:
                if required:
                    raise ValueError(f"{path}: missing config key {key!r}")
                return None
            return base / raw[key]

        motifs = [base / p for p in raw.get("motifs", [])]
        if not motifs:
            raise ValueError(f"{path}: config lists no motifs")
        hyper = Hyperparameters(
            n_clusters=int(raw["clusters"]),
            consensus_weight=float(raw.get("consensus_weight", 1.0)),
            mask_penalty=float(raw.get("mask_penalty", 100.0)),
            l1_weight=float(raw.get("l1_weight", 0.0001)),
            pgd_step=float(raw.get("pgd_step", 0.1)),
            inner_tol=float(raw.get("inner_tol", 1e-4)),
            outer_tol=float(raw.get("outer_tol", 1e-6)),
            max_inner_iters=int(raw.get("max_inner_iters", 50)),
            max_outer_iters=int(raw.get("max_outer_iters", 100)),
            eps_div=float(raw.get("eps_div", 1e-12)),
            init_seed=int(raw.get("init_seed", 0)),
            seed_boost=float(raw.get("seed_boost", 1.0)),
        )
        cfg = cls(
            nodes=resolve("nodes"),
            edges=resolve("edges"),
            motifs=motifs,
            seeds=resolve("seeds"),
            out_dir=base / raw.get("out_dir", "out"),
            tensor_dir=base / raw.get("tensor_dir", "tensors"),
            hyper=hyper,
            threads=int(raw.get("threads", 0)) or (os.cpu_count() or 1),
        )
        for p in [cfg.nodes, cfg.edges, cfg.seeds, *cfg.motifs]:
            if not p.is_file():
                raise ValueError(f"{path}: referenced file {p} does not exist")
        return cfg


def _fmt(x):
    return format(float(x), ".12g")


def _content_key(config, motif_path):
    h = hashlib.sha256()
    for p in (config.nodes, config.edges, motif_path):
        h.update(p.read_bytes())
        h.update(b"\x00")
    return h.hexdigest()


def _read_manifest(config):
    manifest_path = config.tensor_dir / "manifest.json"
    if manifest_path.is_file():
        with open(manifest_path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    return {}


def _ensure_tensors(config):
    """Return (hin, motifs, tensors), transcribing only what the cache lacks."""
    hin = load_hin(config.nodes, config.edges)
    motifs = [load_motif(p, hin) for p in config.motifs]
    names = [m.name for m in motifs]
    if len(set(names)) != len(names):
        raise ValueError("motif names must be unique")
    config.tensor_dir.mkdir(parents=True, exist_ok=True)
    manifest = _read_manifest(config)
    tensors = []
    rebuilt = 0
    for motif, path in zip(motifs, config.motifs):
        key = _content_key(config, path)
        entry = manifest.get(motif.name)
        tensor_file = config.tensor_dir / f"tensor_{motif.name}.tsv"
        if entry and entry.get("key") == key and tensor_file.is_file():
            tensors.append(SparseTensor.read_tsv(tensor_file))
            continue
        start = time.perf_counter()
        instances = enumerate_instances(hin, motif, threads=config.threads)
        tensor = transcribe(instances, hin)
        elapsed = time.perf_counter() - start
        tensor.write_tsv(tensor_file)
        manifest[motif.name] = {
            "file": tensor_file.name,
            "dims": list(tensor.dims),
            "nnz": tensor.nnz,
            "wall_time_s": round(elapsed, 6),
            "key": key,
        }
        tensors.append(tensor)
        rebuilt += 1
    if rebuilt:
        with open(config.tensor_dir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return hin, motifs, tensors


def _read_labels_tsv(path):
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path} line {lineno}: expected 2 columns")
            node_id, label = parts
            if node_id in out:
                raise ValueError(f"{path} line {lineno}: duplicate node id {node_id!r}")
            out[node_id] = int(label)
    return out


def cmd_transcribe(args):
    config = RunConfig.from_json(args.config)
    if args.threads:
        config.threads = args.threads
    _, motifs, tensors = _ensure_tensors(config)
    report = {
        m.name: {"nnz": t.nnz, "dims": list(t.dims)} for m, t in zip(motifs, tensors)
    }
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_fit(args):
    config = RunConfig.from_json(args.config)
    if args.threads:
        config.threads = args.threads
    hin, motifs, tensors = _ensure_tensors(config)
    seeds = _read_labels_tsv(config.seeds)
    state = init_model(hin, motifs, tensors, seeds, config.hyper)
    result = fit(state)
    assignments = assign_clusters(state)
    config.out_dir.mkdir(parents=True, exist_ok=True)

    with open(config.out_dir / "consensus.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for t, assign in sorted(assignments.items()):
            tname = hin.type_names[t]
            for j, node in enumerate(hin.nodes_of_type(t)):
                row = "\t".join(_fmt(x) for x in assign.consensus[:, j])
                fh.write(f"{tname}\t{node}\t{row}\n")
    with open(config.out_dir / "labels.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for t, assign in sorted(assignments.items()):
            for j, node in enumerate(hin.nodes_of_type(t)):
                fh.write(f"{node}\t{int(assign.labels[j])}\n")
    with open(config.out_dir / "weights.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for name, w in zip(state.motif_names, state.mu):
            fh.write(f"{name}\t{_fmt(w)}\n")
    with open(config.out_dir / "history.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        mu_cols = [f"mu_{name}" for name in state.motif_names]
        writer.writerow(
            ["iter", "obj", "residual", "l1", "consensus_gap", "seed_penalty", *mu_cols]
        )
        for rec in result.history:
            writer.writerow(
                [
                    rec.iteration,
                    _fmt(rec.objective),
                    _fmt(rec.residual),
                    _fmt(rec.l1),
                    _fmt(rec.consensus_gap),
                    _fmt(rec.seed_penalty),
                    *[_fmt(w) for w in rec.weights],
                ]
            )
    summary = {
        "converged": result.converged,
        "outer_iterations": len(result.history),
        "objective": float(result.history[-1].objective),
    }
    print(json.dumps(summary, sort_keys=True))
    return 0 if result.converged else EXIT_MAX_ITERS


def cmd_evaluate(args):
    pred = _read_labels_tsv(args.pred)
    truth = _read_labels_tsv(args.truth)
    if set(pred) != set(truth):
        only_pred = sorted(set(pred) - set(truth))[:3]
        only_truth = sorted(set(truth) - set(pred))[:3]
        raise ValueError(
            f"node ids differ between files (e.g. only in --pred: {only_pred}, "
            f"only in --truth: {only_truth})"
        )
    excluded = set()
    if args.seeds and not args.include_seeds:
        excluded = set(_read_labels_tsv(args.seeds))
    ids = sorted(set(pred) - excluded)
    if not ids:
        raise ValueError("no nodes left to evaluate")
    p = [pred[i] for i in ids]
    t = [truth[i] for i in ids]
    acc = accuracy_micro_f1(p, t)
    report = {
        "accuracy": acc,
        "micro_f1": acc,
        "macro_f1": macro_f1(p, t),
        "nmi": nmi(p, t),
        "n_evaluated": len(ids),
    }
    print(json.dumps(report, sort_keys=True))
    return 0


def _template_from_dict(raw):
    return MotifTemplate(
        name=raw["name"],
        node_types=tuple(raw["node_types"]),
        edges=tuple((int(i), int(j), et) for i, j, et in raw["edges"]),
        signal=bool(raw.get("signal", True)),
        instances_per_block=raw.get("instances_per_block"),
    )


def cmd_gen_planted(args):
    with open(args.params, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    kwargs = {}
    if "templates" in raw:
        kwargs["templates"] = tuple(_template_from_dict(t) for t in raw["templates"])
    config = PlantedConfig(
        n_clusters=int(raw.get("clusters", 3)),
        nodes_per_type=int(raw.get("nodes_per_type", 60)),
        type_names=tuple(raw.get("types", ("A", "B", "C"))),
        noise=float(raw.get("noise", 0.05)),
        seed_fraction=float(raw.get("seed_fraction", 0.05)),
        rng_seed=int(raw.get("rng_seed", 0)),
        **kwargs,
    )
    data = generate_planted_hin(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_hin(data.hin, out / "nodes.tsv", out / "edges.tsv")
    with open(out / "truth.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for node in sorted(data.labels):
            fh.write(f"{node}\t{data.labels[node]}\n")
    with open(out / "seeds.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for node in sorted(data.seeds):
            fh.write(f"{node}\t{data.seeds[node]}\n")
    motif_files = []
    for template in config.templates:
        name = f"motif_{template.name}.json"
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(template.motif_spec(), fh, indent=2)
            fh.write("\n")
        motif_files.append(name)
    run = {
        "nodes": "nodes.tsv",
        "edges": "edges.tsv",
        "motifs": motif_files,
        "seeds": "seeds.tsv",
        "out_dir": "out",
        "tensor_dir": "tensors",
        "clusters": config.n_clusters,
        "init_seed": 0,
        "seed_boost": 10.0,
    }
    with open(out / "run.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(run, fh, indent=2)
        fh.write("\n")
    print(
        json.dumps(
            {
                "nodes": sum(len(ns) for ns in data.hin.nodes_by_type),
                "edges": len(data.hin.edges),
                "seeds": len(data.seeds),
                "instances": {k: int(v.shape[0]) for k, v in data.instances.items()},
            },
            sort_keys=True,
        )
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="motifclust",
        description="Seed-guided clustering of typed graphs via motif tensors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transcribe", help="enumerate motifs and write tensor files")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=0, help="enumeration threads (default: config/all cores)")
    p.set_defaults(func=cmd_transcribe)

    p = sub.add_parser("fit", help="run the pipeline and write model outputs")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="score predicted labels against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--seeds")
    p.add_argument("--include-seeds", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gen-planted", help="generate a planted-block benchmark dataset")
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_planted)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # noqa: BLE001 - single reporting point for the CLI
        print(
            json.dumps({"error": str(exc), "type": type(exc).__name__}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
