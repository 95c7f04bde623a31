"""Command-line entry point: config-driven pipelines with manifests.

Every command takes a JSON config (--config) plus overrides (--seed,
--out, --threads) and writes its outputs, a CSV per declared format, and a
manifest capturing the fully resolved config, seed, and package version
with a hash per output file.  Re-running a command from its manifest
reproduces every output byte-identically.

Exit codes: 0 success, 1 usage/config errors, 2 module errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, rng
from .graphs import from_edge_list_text, to_edge_list_text
from .learning import (
    FeatureSpec,
    LinkModel,
    hits_at_k,
    load_checkpoint,
    predict_many,
    save_checkpoint,
    train,
)
from .mechanisms import ConfigError
from .scm import ProbeSequence, ScmSpec, check_exchangeability, probe_sequence, run_scm
from .symmetry import (
    automorphism_group,
    check_interventional_lifting,
    group_dump,
    node_pair_orbits,
    orbits,
)
from .tasks.covariance import build_covariance_task, synthetic_samples
from .tasks.family import family_split, generate_family_forest, infer_relations
from .tasks.fisher import ContingencyTable2x2, fisher_exact


class UsageError(ValueError):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from exc


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise UsageError(f"config.{key}: missing required field")
    return cfg[key]


def _write(out_dir: Path, name: str, text: str, outputs: dict) -> None:
    path = out_dir / name
    path.write_text(text)
    outputs[name] = hashlib.sha256(path.read_bytes()).hexdigest()


def _write_bytes(out_dir: Path, name: str, blob: bytes, outputs: dict) -> None:
    path = out_dir / name
    path.write_bytes(blob)
    outputs[name] = hashlib.sha256(blob).hexdigest()


def _finish(out_dir: Path, command: str, config: dict, seed: int,
            outputs: dict) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "outputs": outputs,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _probes_csv(records) -> str:
    lines = ["i,j,time,outcome"]
    for rec in records:
        lines.append(f"{rec.pair[0]},{rec.pair[1]},{rec.time},{rec.outcome}")
    return "\n".join(lines) + "\n"


def _pairs_csv(rows, header="i,j,label") -> str:
    lines = [header]
    for row in rows:
        lines.append(",".join(str(x) for x in row))
    return "\n".join(lines) + "\n"


def _read_probe_pairs(path: Path):
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if lineno == 1 or not line.strip():
            continue
        parts = line.split(",")
        if len(parts) < 3:
            raise UsageError(f"{path}: malformed row on line {lineno}")
        rows.append(((int(parts[0]), int(parts[1])), float(parts[-1])))
    return rows


def bar_chart_svg(labels: list[str], values: list[float], title: str) -> str:
    """Minimal static SVG bar chart (method vs metric)."""
    width, height, pad = 480, 280, 48
    vmax = max(values + [1e-12])
    n = len(values)
    bw = (width - 2 * pad) / max(1, n)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
        f'font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" '
        f'y2="{height - pad}" stroke="black"/>',
    ]
    for k, (label, value) in enumerate(zip(labels, values)):
        h = (height - 2 * pad) * value / vmax
        x = pad + k * bw + bw * 0.15
        y = height - pad - h
        parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bw * 0.7:.1f}" '
                     f'height="{h:.1f}" fill="#4878a8"/>')
        parts.append(f'<text x="{x + bw * 0.35:.1f}" y="{height - pad + 16}" '
                     f'text-anchor="middle" font-size="11">{label}</text>')
        parts.append(f'<text x="{x + bw * 0.35:.1f}" y="{y - 4:.1f}" '
                     f'text-anchor="middle" font-size="11">{value:.3f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: dict, seed: int, out_dir: Path, threads: int) -> None:
    spec = ScmSpec.from_config(_require(cfg, "scm"))
    t0 = int(_require(cfg, "t0"))
    outputs: dict = {}
    log, graph, pi = run_scm(spec, t0, seed)
    _write(out_dir, "graph.edges", to_edge_list_text(graph), outputs)
    if "probes" in cfg:
        pcfg = cfg["probes"]
        pairs = [tuple(int(x) for x in p) for p in _require(pcfg, "pairs")]
        times = [int(t) for t in pcfg.get(
            "times", [t0 + 1 + k for k in range(len(pairs))])]
        seq = probe_sequence(spec, log, pi, pairs, times, seed)
        _write(out_dir, "probes.csv", _probes_csv(seq.records), outputs)
    if cfg.get("exchangeability_check"):
        ecfg = cfg["exchangeability_check"]
        report = check_exchangeability(spec, t0,
                                       int(ecfg.get("n_samples", 10_000)),
                                       seed, threads=threads)
        _write(out_dir, "exchangeability.csv",
               "\n".join(report.csv_rows()) + "\n", outputs)
    _finish(out_dir, "simulate", cfg, seed, outputs)


def cmd_orbits(cfg: dict, seed: int, out_dir: Path, threads: int) -> None:
    graph = from_edge_list_text(Path(_require(cfg, "graph")).read_text())
    group = automorphism_group(graph)
    part = orbits(graph, group)
    outputs: dict = {}
    _write(out_dir, "orbits.csv", "\n".join(part.csv_rows()) + "\n", outputs)
    _write(out_dir, "group.txt", group_dump(group), outputs)
    _write(out_dir, "order.txt", f"{group.order}\n", outputs)
    _finish(out_dir, "orbits", cfg, seed, outputs)


def cmd_lifting_check(cfg: dict, seed: int, out_dir: Path, threads: int) -> None:
    spec = ScmSpec.from_config(_require(cfg, "scm"))
    t0 = int(_require(cfg, "t0"))
    pair = tuple(int(x) for x in _require(cfg, "pair"))
    n_samples = int(cfg.get("n_samples", 10_000))
    log, graph, pi = run_scm(spec, t0, seed)
    report = check_interventional_lifting(
        spec, graph, pi, log, pair, n_samples, seed,
        alpha=float(cfg.get("alpha", 0.01)),
        gap_probe_time=cfg.get("gap_probe_time"))
    lines = ["arm,pair_i,pair_j," + ",".join(
        f"count{v}" for v in range(spec.alphabet.size))]
    for arm in report.arms:
        lines.append(f"{arm.label},{arm.pair[0]},{arm.pair[1]},"
                     + ",".join(str(int(c)) for c in arm.histogram))
    lines.append("comparison_a,comparison_b,p_value,rejected")
    cut = report.alpha / max(1, report.bonferroni)
    for (a, b, p) in report.comparisons:
        lines.append(f"{a},{b},{p:.6g},{int(p < cut)}")
    outputs: dict = {}
    _write(out_dir, "lifting.csv", "\n".join(lines) + "\n", outputs)
    _write(out_dir, "verdict.txt",
           ("PASS" if report.passed else "REJECT") + "\n", outputs)
    _finish(out_dir, "lifting-check", cfg, seed, outputs)


def cmd_svd_check(cfg: dict, seed: int, out_dir: Path, threads: int) -> None:
    from .embeddings import svd_invariance_check
    graph = from_edge_list_text(Path(_require(cfg, "graph")).read_text())
    report = svd_invariance_check(graph)
    rows = [("equal", i, j) for (i, j) in report.equal_pairs]
    rows += [("predicate", i, j) for (i, j) in report.predicate_pairs]
    rows += [("disagreement", i, j) for (i, j) in report.disagreements]
    outputs: dict = {}
    _write(out_dir, "svd_check.csv", _pairs_csv(rows, header="kind,i,j"),
           outputs)
    _finish(out_dir, "svd-check", cfg, seed, outputs)


def cmd_train(cfg: dict, seed: int, out_dir: Path, threads: int) -> None:
    graph = from_edge_list_text(Path(_require(cfg, "graph")).read_text())
    probes = _read_probe_pairs(Path(_require(cfg, "probes")))
    feature_spec = FeatureSpec.from_config(_require(cfg, "features"))
    model = LinkModel.build(feature_spec, graph,
                            loss_kind=cfg.get("loss", "bce"), seed=seed)
    model, report = train(model, probes, graph,
                          epochs=int(cfg.get("epochs", 200)),
                          lr=float(cfg.get("lr", 0.1)),
                          batch=int(cfg.get("batch", 64)), seed=seed,
                          momentum=float(cfg.get("momentum", 0.0)),
                          adam=bool(cfg.get("adam", False)))
    outputs: dict = {}
    save_checkpoint(out_dir / "model.bin", model)
    outputs["model.bin"] = hashlib.sha256(
        (out_dir / "model.bin").read_bytes()).hexdigest()
    curve = "\n".join(f"{k},{v:.8g}" for k, v in enumerate(report.loss_curve))
    _write(out_dir, "loss.csv", "epoch,loss\n" + curve + "\n", outputs)
    _write(out_dir, "checksum.txt", report.checksum + "\n", outputs)
    _finish(out_dir, "train", cfg, seed, outputs)


def cmd_eval(cfg: dict, seed: int, out_dir: Path, threads: int) -> None:
    graph = from_edge_list_text(Path(_require(cfg, "graph")).read_text())
    model_path = Path(_require(cfg, "model"))
    if not model_path.exists():
        raise RuntimeError(f"missing checkpoint: {model_path}")
    model = load_checkpoint(model_path, graph)
    labeled = _read_probe_pairs(Path(_require(cfg, "pairs")))
    pairs = [p for (p, _y) in labeled]
    scores = predict_many(model, pairs)
    rows = [(p[0], p[1], f"{s:.10g}", int(y))
            for ((p, y), s) in zip(labeled, scores)]
    outputs: dict = {}
    _write(out_dir, "predictions.csv",
           _pairs_csv(rows, header="i,j,score,label"), outputs)
    ks = cfg.get("hits_at", [max(1, len(pairs) // 20)])
    scored = [(p, float(s), int(y)) for ((p, y), s) in zip(labeled, scores)]
    metric_lines = ["run_id,method,metric,k,value,seed"]
    run_id = cfg.get("run_id", "eval")
    method = cfg.get("method", model.features.spec.kind)
    values, labels = [], []
    for k in ks:
        val = hits_at_k(scored, int(k))
        metric_lines.append(f"{run_id},{method},hits_at_k,{k},{val:.6g},{seed}")
        values.append(val)
        labels.append(f"hits@{k}")
    _write(out_dir, "metrics.csv", "\n".join(metric_lines) + "\n", outputs)
    _write(out_dir, "metrics.svg",
           bar_chart_svg(labels, values, f"{method} metrics"), outputs)
    _finish(out_dir, "eval", cfg, seed, outputs)


def cmd_family(cfg: dict, seed: int, out_dir: Path, threads: int) -> None:
    kb = generate_family_forest(
        n_trees=int(cfg.get("n_trees", 100)),
        iso_fraction=float(cfg.get("iso_fraction", 0.30)), seed=seed)
    infer_relations(kb)
    outputs: dict = {}
    _write(out_dir, "triples.txt", "\n".join(kb.triples()) + "\n", outputs)
    _write(out_dir, "graph.edges", to_edge_list_text(kb.observed_graph()),
           outputs)
    if kb.planted:
        split = family_split(kb, seed=seed)
        _write(out_dir, "train.csv",
               _pairs_csv([(p[0], p[1], lbl, rel)
                           for (p, lbl, rel) in split.train],
                          header="i,j,label,relation"), outputs)
        _write(out_dir, "test.csv",
               _pairs_csv([(p[0], p[1], lbl, rel)
                           for (p, lbl, rel) in split.test],
                          header="i,j,label,relation"), outputs)
    _finish(out_dir, "family", cfg, seed, outputs)


def cmd_covariance(cfg: dict, seed: int, out_dir: Path, threads: int) -> None:
    if "samples" in cfg:
        samples = np.loadtxt(Path(cfg["samples"]), delimiter=",", ndmin=2)
    else:
        samples = synthetic_samples(
            n_subjects=int(cfg.get("subjects", 68)),
            n_attributes=int(cfg.get("attributes", 60)),
            n_factors=int(cfg.get("factors", 6)),
            noise=float(cfg.get("noise", 0.6)), seed=seed)
    task = build_covariance_task(
        samples, observed_subject_count=int(cfg.get("observed_subjects", 40)),
        split_fraction=float(cfg.get("split_fraction", 0.75)),
        quantization_bins=int(cfg.get("bins", 32)), seed=seed)
    outputs: dict = {}
    _write(out_dir, "graph.edges", to_edge_list_text(task.graph), outputs)
    _write(out_dir, "probes.csv",
           _pairs_csv([(i, j, f"{task.target((i, j)):.10g}")
                       for (i, j) in task.train_pairs()],
                      header="i,j,target"), outputs)
    _write(out_dir, "queries.csv",
           _pairs_csv([(i, j, f"{task.target((i, j)):.10g}")
                       for (i, j) in task.query_pairs()],
                      header="i,j,target"), outputs)
    _finish(out_dir, "covariance", cfg, seed, outputs)


def cmd_fisher(cfg: dict, seed: int, out_dir: Path, threads: int) -> None:
    tables = cfg.get("tables")
    if tables is None:
        tables = [_require(cfg, "table")]
    lines = ["a,b,c,d,p_value"]
    for row in tables:
        a, b, c, d = (int(x) for x in row)
        p = fisher_exact(ContingencyTable2x2(a, b, c, d))
        lines.append(f"{a},{b},{c},{d},{p:.12g}")
    outputs: dict = {}
    _write(out_dir, "fisher.csv", "\n".join(lines) + "\n", outputs)
    _finish(out_dir, "fisher", cfg, seed, outputs)


COMMANDS = {
    "simulate": cmd_simulate,
    "orbits": cmd_orbits,
    "lifting-check": cmd_lifting_check,
    "svd-check": cmd_svd_check,
    "train": cmd_train,
    "eval": cmd_eval,
    "family": cmd_family,
    "covariance": cmd_covariance,
    "fisher": cmd_fisher,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbitlink",
        description="graph-process probes, orbit symmetries, link models")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = _load_config(args.config)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, args.seed, out_dir, args.threads)
        return 0
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # module errors
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
