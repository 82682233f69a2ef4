"""Command-line interface: score, passk, perturb, meta, report.

Exit codes: 0 success, 1 usage or configuration problem, 2 data problem,
3 embedding-backend problem.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import execution, metastats, perturb
from .errors import (
    BackendError,
    CodegenEvalError,
    ConfigurationError,
    DataError,
)
from .report import ScoreTable, emit_report, summary_markdown, write_lines
from .scoring import METRIC_IDS, RunConfig, config_from_mapping, load_config_file, score_corpus

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(value: float, decimals: int = 3) -> str:
    return f"{value:.{decimals}f}"


def _build_parser() -> _Parser:
    parser = _Parser(prog="codegen-eval", description=__doc__)
    parser.add_argument("--config", help="TOML or JSON config file")
    parser.add_argument("--jobs", type=int, help="worker pool size")
    parser.add_argument("--seed", type=int, help="recorded for provenance only")
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="score a corpus with selected metrics")
    p_score.add_argument("--instances", required=True)
    p_score.add_argument("--out", required=True, help="output directory")
    p_score.add_argument("--metrics", help="comma-separated metric ids (default: all)")
    p_score.add_argument("--backend", help="hash | dir:<path> | http(s)://host:port")
    p_score.add_argument(
        "--normalize-candidates",
        action="store_true",
        help="extract fenced code blocks from candidates before scoring",
    )

    p_passk = sub.add_parser("passk", help="pass@k table from execution records")
    p_passk.add_argument("--instances", required=True)
    p_passk.add_argument("--executions", required=True)
    p_passk.add_argument("--k", default="1", help="comma-separated k values")
    p_passk.add_argument("--out", required=True, help="output directory")

    p_perturb = sub.add_parser("perturb", help="apply a semantics-preserving transform")
    p_perturb.add_argument(
        "--transform",
        required=True,
        choices=["var-cand", "var-ref", "var-both", "func-same", "func-diff"],
    )
    p_perturb.add_argument("--instances", required=True)
    p_perturb.add_argument("--out", required=True, help="output instances.jsonl")

    p_meta = sub.add_parser("meta", help="meta-evaluation statistics")
    meta_sub = p_meta.add_subparsers(dest="verb", required=True)

    m_corr = meta_sub.add_parser("correlate", help="construct vs metric correlation")
    m_corr.add_argument("--table", required=True)
    m_corr.add_argument("--metric", required=True)
    m_corr.add_argument("--executions", help="executions.jsonl for the binary construct")
    m_corr.add_argument("--instances", help="instances.jsonl matching the table")
    m_corr.add_argument("--against", help="other metric column for rank correlation")
    m_corr.add_argument("--per-model", action="store_true", help="add per-model rows")
    m_corr.add_argument("--out", required=True)

    m_dist = meta_sub.add_parser("distribution", help="centrality and shape measures")
    m_dist.add_argument("--table", required=True)
    m_dist.add_argument("--metric", default="all")
    m_dist.add_argument("--out", required=True)

    m_ties = meta_sub.add_parser("ties", help="tie rates over model pairs")
    m_ties.add_argument("--table", required=True)
    m_ties.add_argument("--metric", default="all")
    m_ties.add_argument("--epsilon", type=float, default=1e-6)
    m_ties.add_argument("--out", required=True)

    m_power = meta_sub.add_parser("power", help="discriminative power / ASL curve")
    m_power.add_argument("--table", required=True)
    m_power.add_argument("--metric", required=True)
    m_power.add_argument("--paired", action="store_true")
    m_power.add_argument("--alpha", type=float, default=0.05, help="base alpha")
    m_power.add_argument("--out", required=True)

    m_disting = meta_sub.add_parser("distinguish", help="intra/inter distinguishability")
    m_disting.add_argument("--intra", required=True, help="file of intra-class values")
    m_disting.add_argument("--inter", required=True, help="file of inter-class values")
    m_disting.add_argument("--out", required=True)

    m_rob = meta_sub.add_parser("robustness", help="before/after transform autocorrelation")
    m_rob.add_argument("--before", required=True)
    m_rob.add_argument("--after", required=True)
    m_rob.add_argument("--metric", required=True)
    m_rob.add_argument("--label", default="transform")
    m_rob.add_argument("--out", required=True)

    p_report = sub.add_parser("report", help="re-emit a score table")
    p_report.add_argument("--table", required=True)
    p_report.add_argument("--format", required=True, choices=["md", "tsv", "csv"])
    p_report.add_argument("--out", required=True)
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    raw = load_config_file(args.config) if args.config else {}
    config = config_from_mapping(raw)
    updates: dict = {}
    if getattr(args, "metrics", None):
        updates["metrics"] = tuple(args.metrics.split(","))
    if getattr(args, "backend", None):
        updates["backend"] = args.backend
    if getattr(args, "normalize_candidates", False):
        updates["normalize_candidates"] = True
    if args.jobs is not None:
        updates["jobs"] = args.jobs
    if args.seed is not None:
        updates["seed"] = args.seed
    if updates:
        from dataclasses import replace

        config = replace(config, **updates)
    return config


def _cmd_score(args: argparse.Namespace) -> int:
    config = _run_config(args)
    corpus = corpus_mod.load_instances(args.instances)
    table = score_corpus(corpus, config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_dir / "scores.csv")
    backend_note = (
        f"backend: {config.backend}" if any(m.startswith("embed_") for m in config.metrics) else ""
    )
    provenance = [
        "## Run provenance",
        "",
        f"- instances: {Path(args.instances).name}",
        f"- metrics: {','.join(config.metrics)}",
        f"- jobs: {config.jobs}",
        f"- seed: {config.seed if config.seed is not None else 'unset'}",
    ]
    if backend_note:
        provenance.append(f"- {backend_note}")
    summary = summary_markdown(table)
    (out_dir / "summary.md").write_text(
        summary + "\n" + "\n".join(provenance) + "\n", encoding="utf-8"
    )
    return EXIT_OK


def _cmd_passk(args: argparse.Namespace) -> int:
    ks = sorted({int(k) for k in args.k.split(",")})
    if any(k < 1 for k in ks):
        raise ConfigurationError("k values must be >= 1")
    corpus = corpus_mod.load_instances(args.instances)
    records = corpus_mod.load_executions(args.executions)
    corpus = corpus_mod.join_executions(corpus, records)
    try:
        rates = execution.pass_rate_table(corpus, ks)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = "model_id," + ",".join(f"pass@{k}" for k in ks)
    csv_rows = [header]
    md_rows = [
        "| model_id | " + " | ".join(f"pass@{k}" for k in ks) + " |",
        "|" + "|".join(" --- " for _ in range(len(ks) + 1)) + "|",
    ]
    for model_id in sorted(rates):
        values = [rates[model_id][k] for k in ks]
        csv_rows.append(model_id + "," + ",".join(repr(v) for v in values))
        md_rows.append(
            "| " + model_id + " | " + " | ".join(_fmt(v) for v in values) + " |"
        )
    write_lines(out_dir / "passk.csv", csv_rows)
    write_lines(out_dir / "passk.md", md_rows)
    return EXIT_OK


def _cmd_perturb(args: argparse.Namespace) -> int:
    kind = perturb.TransformKind.from_cli_name(args.transform)
    corpus = corpus_mod.load_instances(args.instances)
    transformed = [perturb.apply_transform_pairwise(inst, kind) for inst in corpus.instances]
    corpus_mod.save_instances(transformed, args.out)
    failures = sum(1 for inst in transformed if inst.transform_error)
    if failures:
        print(f"perturb: {failures} instance(s) left unmodified (see transform_error)")
    return EXIT_OK


def _read_values_file(path: str) -> list[float]:
    try:
        return [
            float(line)
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric value line") from exc


def _aligned_metric_pairs(
    table: ScoreTable, metric_a: str, metric_b: str
) -> tuple[list[float], list[float]]:
    xs, ys = [], []
    for key in table.sorted_keys():
        row = table.rows[key]
        if row.get(metric_a) is not None and row.get(metric_b) is not None:
            xs.append(row[metric_a])
            ys.append(row[metric_b])
    return xs, ys


def _meta_correlate(args: argparse.Namespace) -> int:
    table = ScoreTable.from_csv(args.table)
    if args.metric not in table.metrics:
        raise ConfigurationError(f"table has no metric {args.metric!r}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.against:
        if args.against not in table.metrics:
            raise ConfigurationError(f"table has no metric {args.against!r}")
        rows = [("pooled", *_rank_correlate(table, args.metric, args.against, None))]
        if args.per_model:
            for model in table.model_ids():
                rows.append((model, *_rank_correlate(table, args.metric, args.against, model)))
        csv_rows = ["group,n,tau,tau_p,rho,rho_p"]
        md = [
            f"## Rank correlation: {args.metric} vs {args.against}",
            "",
            "| group | n | tau | p | rho | p |",
            "| --- | --- | --- | --- | --- | --- |",
        ]
        for group, n, tau, tau_p, rho, rho_p in rows:
            csv_rows.append(f"{group},{n},{tau!r},{tau_p!r},{rho!r},{rho_p!r}")
            md.append(
                f"| {group} | {n} | {_fmt(tau)} | {tau_p:.3g} | {_fmt(rho)} | {rho_p:.3g} |"
            )
        write_lines(out_dir / "correlate.csv", csv_rows)
        write_lines(out_dir / "correlate.md", md)
        return EXIT_OK
    if not args.executions or not args.instances:
        raise ConfigurationError(
            "correlate needs either --against METRIC or both --instances and --executions"
        )
    corpus = corpus_mod.load_instances(args.instances)
    corpus = corpus_mod.join_executions(corpus, corpus_mod.load_executions(args.executions))
    rows = [("pooled", *_biserial_vs_pass(table, corpus, args.metric, None))]
    if args.per_model:
        for model in table.model_ids():
            rows.append((model, *_biserial_vs_pass(table, corpus, args.metric, model)))
    csv_rows = ["group,n,r_pb,p_value"]
    md = [
        f"## Point-biserial: {args.metric} vs pass/fail",
        "",
        "| group | n | r_pb | p |",
        "| --- | --- | --- | --- |",
    ]
    for group, n, r, p in rows:
        csv_rows.append(f"{group},{n},{r!r},{p!r}")
        md.append(f"| {group} | {n} | {_fmt(r)} | {p:.3g} |")
    write_lines(out_dir / "correlate.csv", csv_rows)
    write_lines(out_dir / "correlate.md", md)
    return EXIT_OK


def _rank_correlate(table: ScoreTable, metric_a: str, metric_b: str, model: str | None):
    if model is None:
        xs, ys = _aligned_metric_pairs(table, metric_a, metric_b)
    else:
        xs, ys = [], []
        for key in table.sorted_keys():
            if key[1] != model:
                continue
            row = table.rows[key]
            if row.get(metric_a) is not None and row.get(metric_b) is not None:
                xs.append(row[metric_a])
                ys.append(row[metric_b])
    tau, tau_p = metastats.kendall_tau(xs, ys)
    rho, rho_p = metastats.spearman_rho(xs, ys)
    return len(xs), tau, tau_p, rho, rho_p


def _biserial_vs_pass(
    table: ScoreTable, corpus: corpus_mod.Corpus, metric: str, model: str | None
):
    binary, continuous = [], []
    for key in table.sorted_keys():
        if model is not None and key[1] != model:
            continue
        value = table.rows[key].get(metric)
        record = corpus.executions.get(key)
        if value is None or record is None:
            continue
        binary.append(1 if record.passed_all else 0)
        continuous.append(value)
    r, p = metastats.point_biserial(binary, continuous)
    return len(binary), r, p


def _meta_distribution(args: argparse.Namespace) -> int:
    table = ScoreTable.from_csv(args.table)
    metrics = table.metrics if args.metric == "all" else (args.metric,)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_rows = ["metric,median,midhinge,mean,std_dev,skewness,excess_kurtosis"]
    md = [
        "## Score distribution",
        "",
        "| Metric | Median | Midhinge | Mean | Std. Dev. | Skewness | Kurtosis (excess) |",
        "| --- | --- | --- | --- | --- | --- | --- |",
    ]
    for metric in metrics:
        if metric not in table.metrics:
            raise ConfigurationError(f"table has no metric {metric!r}")
        values = [
            row[metric]
            for key in table.sorted_keys()
            if (row := table.rows[key]).get(metric) is not None
        ]
        summary = metastats.distribution_summary(values)
        skew = "" if summary.skewness is None else repr(summary.skewness)
        kurt = "" if summary.excess_kurtosis is None else repr(summary.excess_kurtosis)
        csv_rows.append(
            f"{metric},{summary.median!r},{summary.midhinge!r},{summary.mean!r},"
            f"{summary.std_dev!r},{skew},{kurt}"
        )
        md.append(
            f"| {metric} | {_fmt(summary.median)} | {_fmt(summary.midhinge)} | "
            f"{_fmt(summary.mean)} | {_fmt(summary.std_dev)} | "
            f"{_fmt(summary.skewness) if summary.skewness is not None else 'n/a'} | "
            f"{_fmt(summary.excess_kurtosis) if summary.excess_kurtosis is not None else 'n/a'} |"
        )
    write_lines(out_dir / "distribution.csv", csv_rows)
    write_lines(out_dir / "distribution.md", md)
    return EXIT_OK


def _meta_ties(args: argparse.Namespace) -> int:
    table = ScoreTable.from_csv(args.table)
    params = metastats.MetaParams(tie_epsilon=args.epsilon)
    metrics = table.metrics if args.metric == "all" else (args.metric,)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_rows = ["metric,tie_rate_percent"]
    md = ["## Percentage of ties", "", "| Metric | Rate of Ties |", "| --- | --- |"]
    for metric in metrics:
        if metric not in table.metrics:
            raise ConfigurationError(f"table has no metric {metric!r}")
        vectors = table.score_vectors(metric)
        rate = metastats.corpus_tie_rate(vectors, params) * 100.0
        csv_rows.append(f"{metric},{rate!r}")
        md.append(f"| {metric} | {rate:.2f} |")
    write_lines(out_dir / "ties.csv", csv_rows)
    write_lines(out_dir / "ties.md", md)
    return EXIT_OK


def _meta_power(args: argparse.Namespace) -> int:
    table = ScoreTable.from_csv(args.table)
    if args.metric not in table.metrics:
        raise ConfigurationError(f"table has no metric {args.metric!r}")
    params = metastats.MetaParams(base_alpha=args.alpha)
    vectors = table.score_vectors(args.metric)
    report = metastats.discriminative_power(vectors, params, paired=args.paired)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_rows = ["rank,p_value"]
    for rank, p in enumerate(report.sorted_p_values(), 1):
        csv_rows.append(f"{rank},{p!r}")
    csv_rows.append(f"alpha,{report.alpha!r}")
    write_lines(out_dir / "asl.csv", csv_rows)
    md = [
        f"## Discriminative power: {args.metric}",
        "",
        f"- hypotheses: {report.n_hypotheses}",
        f"- alpha (Bonferroni): {report.alpha!r}",
        f"- significant pairs: {report.significant_count}/{report.n_hypotheses}",
    ]
    write_lines(out_dir / "power.md", md)
    return EXIT_OK


def _meta_distinguish(args: argparse.Namespace) -> int:
    intra = _read_values_file(args.intra)
    inter = _read_values_file(args.inter)
    try:
        d = metastats.distinguishability(intra, inter)
    except ZeroDivisionError as exc:
        raise DataError(str(exc)) from exc
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_lines(out_dir / "distinguish.csv", ["d", repr(d)])
    write_lines(
        out_dir / "distinguish.md",
        ["## Distinguishability", "", f"- d = {_fmt(d)} (intra mean / inter mean)"],
    )
    return EXIT_OK


def _meta_robustness(args: argparse.Namespace) -> int:
    before = ScoreTable.from_csv(args.before)
    after = ScoreTable.from_csv(args.after)
    for t, name in ((before, "before"), (after, "after")):
        if args.metric not in t.metrics:
            raise ConfigurationError(f"{name} table has no metric {args.metric!r}")
    missing = sorted(set(before.rows) ^ set(after.rows))
    if missing:
        shown = ", ".join(map(str, missing[:5]))
        raise DataError(f"before/after tables are misaligned; differing keys: {shown}")
    before_vals, after_vals = [], []
    for key in before.sorted_keys():
        b = before.rows[key].get(args.metric)
        a = after.rows[key].get(args.metric)
        if b is not None and a is not None:
            before_vals.append(b)
            after_vals.append(a)
    report = metastats.robustness_autocorrelation(
        metastats.ScoreVector(args.metric, "pooled", tuple(before_vals)),
        metastats.ScoreVector(args.metric, "pooled", tuple(after_vals)),
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_lines(
        out_dir / "robustness.csv",
        [
            "label,metric,n,delta_mean,tau,tau_p,rho,rho_p",
            f"{args.label},{args.metric},{len(before_vals)},{report.delta_mean!r},"
            f"{report.tau!r},{report.tau_p!r},{report.rho!r},{report.rho_p!r}",
        ],
    )
    sign = "+" if report.delta_mean >= 0 else ""
    write_lines(
        out_dir / "robustness.md",
        [
            f"## Robustness under {args.label}",
            "",
            "| Metric | Transformation | delta | Tau | p | Rho | p |",
            "| --- | --- | --- | --- | --- | --- | --- |",
            f"| {args.metric} | {args.label} | {sign}{_fmt(report.delta_mean)} "
            f"| {_fmt(report.tau)} | {report.tau_p:.3g} "
            f"| {_fmt(report.rho)} | {report.rho_p:.3g} |",
        ],
    )
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    table = ScoreTable.from_csv(args.table)
    emit_report(table, args.format, args.out)
    return EXIT_OK


_META_VERBS = {
    "correlate": _meta_correlate,
    "distribution": _meta_distribution,
    "ties": _meta_ties,
    "power": _meta_power,
    "distinguish": _meta_distinguish,
    "robustness": _meta_robustness,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "score":
            return _cmd_score(args)
        if args.command == "passk":
            return _cmd_passk(args)
        if args.command == "perturb":
            return _cmd_perturb(args)
        if args.command == "meta":
            return _META_VERBS[args.verb](args)
        if args.command == "report":
            return _cmd_report(args)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CodegenEvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
