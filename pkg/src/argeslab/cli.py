"""Command-line surface: simulate, cig, learn, evaluate, demo-example1.

Exit codes: 0 success, 1 check failure, 2 usage error, 3 I/O error,
4 numeric error.  Every command echoes its effective configuration into
its output files so runs are self-describing.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click
import numpy as np

from . import cig_estimation, correlation, evaluation, simulation
from .correlation import NumericError
from .equivalence import dag_to_cpdag
from .graph_core import (Cpdag, GraphParseError, Pdag, parse_graph,
                         serialize_graph, skeleton)
from .scoring import ScoreModel, bic_lambda
from .search import VARIANTS, run_learner

EXIT_CHECK = 1
EXIT_IO = 3
EXIT_NUMERIC = 4

# preset name -> (p, expected edges, n); sparse series scales all three,
# dense series fixes p = 100 and grows the edge count
PRESETS = {
    "paper-300": (300, 300, 100),
    "paper-600": (600, 840, 200),
    "paper-1200": (1200, 2100, 300),
    "paper-2400": (2400, 4800, 400),
    "dense-100-100": (100, 100, 50),
    "dense-100-200": (100, 200, 100),
    "dense-100-300": (100, 300, 150),
    "dense-100-400": (100, 400, 200),
}


class CliFailure(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def guarded(fn):
    """Map stray exceptions onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except GraphParseError as exc:
            raise CliFailure(str(exc), EXIT_IO)
        except OSError as exc:
            raise CliFailure(f"{exc.filename or ''}: {exc.strerror or exc}",
                             EXIT_IO)
        except NumericError as exc:
            raise CliFailure(str(exc), EXIT_NUMERIC)
        except np.linalg.LinAlgError as exc:
            raise CliFailure(str(exc), EXIT_NUMERIC)
        except ValueError as exc:
            raise click.UsageError(str(exc))

    return wrapper


def _read_graph(path) -> Pdag:
    with open(path) as fh:
        return parse_graph(fh.read())


def _write_graph(g: Pdag, path, config: dict | None = None) -> None:
    text = serialize_graph(g)
    if config is not None:
        text += f"# config: {json.dumps(config, sort_keys=True)}\n"
    with open(path, "w") as fh:
        fh.write(text)


@click.group()
@click.version_option(package_name="argeslab")
def main():
    """Score-based structure learning over equivalence classes."""


@main.command()
@click.option("--p", type=int, default=None, help="Number of nodes.")
@click.option("--edges", type=float, default=None,
              help="Expected number of edges.")
@click.option("--n", type=int, default=None, help="Sample size.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--error-kind", type=click.Choice(simulation.ERROR_KINDS),
              default=simulation.GAUSSIAN, show_default=True)
@click.option("--npn-family", type=click.Choice(simulation.NPN_FAMILIES),
              default=simulation.IDENTITY, show_default=True,
              help="Monotone marginal transform applied to the samples.")
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None,
              help="Fill p/edges/n defaults from a named setting.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=".",
              show_default=True)
@guarded
def simulate(p, edges, n, seed, error_kind, npn_family, preset, out_dir):
    """Draw a random weighted DAG, sample it, and write sem.json,
    data.csv, and truth.txt (the true equivalence class)."""
    if preset is not None:
        dp, de, dn = PRESETS[preset]
        p = dp if p is None else p
        edges = de if edges is None else edges
        n = dn if n is None else n
    if p is None or edges is None or n is None:
        raise click.UsageError("need --p, --edges, and --n (or a --preset)")
    sem = simulation.random_sem(p, edges, seed, error_kind)
    data = simulation.sample_sem(sem, n, seed)
    data = simulation.nonparanormal_transform(data, npn_family)
    config = {"command": "simulate", "p": p, "edges": edges, "n": n,
              "seed": seed, "error_kind": error_kind,
              "npn_family": npn_family, "preset": preset}
    os.makedirs(out_dir, exist_ok=True)
    simulation.write_sem(sem, os.path.join(out_dir, "sem.json"), config)
    simulation.write_dataset(data, os.path.join(out_dir, "data.csv"))
    _write_graph(dag_to_cpdag(sem.structure()),
                 os.path.join(out_dir, "truth.txt"), config)
    click.echo(f"wrote sem.json, data.csv, truth.txt to {out_dir}")


@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Dataset CSV.")
@click.option("--sem", "sem_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="SEM JSON, for --oracle.")
@click.option("--oracle", is_flag=True,
              help="Use the population correlations of --sem.")
@click.option("--method",
              type=click.Choice([cig_estimation.NEIGHBORHOOD_LASSO,
                                 cig_estimation.PRECISION_THRESHOLD]),
              default=cig_estimation.NEIGHBORHOOD_LASSO, show_default=True)
@click.option("--gamma", type=float, default=0.1, show_default=True,
              help="Lasso penalty (neighborhood-lasso).")
@click.option("--alpha", type=float, default=0.05, show_default=True,
              help="Test level (precision-threshold).")
@click.option("--rule", type=click.Choice([cig_estimation.OR_RULE,
                                           cig_estimation.AND_RULE]),
              default=cig_estimation.OR_RULE, show_default=True)
@click.option("--jobs", type=int, default=None, envvar="ARGESLAB_JOBS",
              help="Parallel per-node regressions.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@guarded
def cig(data, sem_path, oracle, method, gamma, alpha, rule, jobs, out):
    """Estimate the conditional independence graph and write it."""
    config = {"command": "cig", "method": method, "gamma": gamma,
              "alpha": alpha, "rule": rule, "oracle": oracle}
    if oracle:
        if sem_path is None:
            raise click.UsageError("--oracle needs --sem")
        sem = simulation.read_sem(sem_path)
        src = correlation.oracle_correlation(sem)
        graph = cig_estimation.precision_threshold_cig(src)
    else:
        if data is None:
            raise click.UsageError("need --data (or --oracle with --sem)")
        X = simulation.read_dataset(data)
        cfg = cig_estimation.CigConfig(method=method, gamma=gamma,
                                       rule=rule, alpha=alpha)
        graph = cig_estimation.estimate_cig(X, cfg, jobs)
    _write_graph(graph, out, config)
    click.echo(f"wrote {graph.num_edges} edges to {out}")


@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Dataset CSV.")
@click.option("--sem", "sem_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="SEM JSON, for --oracle.")
@click.option("--oracle", is_flag=True,
              help="Score with the population correlations of --sem.")
@click.option("--variant", type=click.Choice(VARIANTS), default="ges",
              show_default=True)
@click.option("--score-kind",
              type=click.Choice([correlation.PEARSON, correlation.SPEARMAN,
                                 correlation.KENDALL]),
              default=correlation.PEARSON, show_default=True,
              help="Correlation estimator for sample data.")
@click.option("--lambda", "lam", type=float, default=None,
              help="Penalty per parent; defaults to the BIC rate on sample "
                   "data and to 1e-6 at the oracle.")
@click.option("--bic", is_flag=True, help="Force the BIC penalty rate.")
@click.option("--restriction", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Undirected restriction graph file.")
@click.option("--ridge", type=float, default=0.0, show_default=True,
              help="Opt-in diagonal regularization for rank sources.")
@click.option("--turning", is_flag=True, help="Run the turning phase.")
@click.option("--iterate", is_flag=True,
              help="Repeat the phases to a fixpoint.")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Output graph file.")
@click.option("--report", type=click.Path(dir_okay=False), default=None,
              help="Output JSON report (default: <out>.json).")
@guarded
def learn(data, sem_path, oracle, variant, score_kind, lam, bic, restriction,
          ridge, turning, iterate, out, report):
    """Run a structure learner and write the estimated class + report."""
    if oracle:
        if sem_path is None:
            raise click.UsageError("--oracle needs --sem")
        sem = simulation.read_sem(sem_path)
        src = correlation.oracle_correlation(sem)
        n = None
    else:
        if data is None:
            raise click.UsageError("need --data (or --oracle with --sem)")
        X = simulation.read_dataset(data)
        n = X.shape[0]
        if score_kind == correlation.PEARSON:
            src = correlation.sample_correlation(X)
        else:
            src = correlation.rank_correlation(X, score_kind)
        if ridge > 0.0:
            src = correlation.CorrSource(src.R, n=src.n, kind=src.kind,
                                         ridge=ridge)
    if lam is None or bic:
        lam = 1e-6 if oracle else bic_lambda(n)
    restriction_graph = (_read_graph(restriction)
                         if restriction is not None else None)
    if variant != "ges" and restriction_graph is None:
        raise click.UsageError(f"variant {variant!r} needs --restriction")
    model = ScoreModel(src, lam)
    rep = run_learner(variant, model, restriction_graph,
                      turning=turning, iterate=iterate)
    doc = rep.to_json_dict()
    doc["config"].update({
        "command": "learn", "oracle": oracle, "data": data, "sem": sem_path,
        "restriction": restriction, "ridge": ridge, "n": n,
    })
    _write_graph(rep.final, out)
    report = report if report is not None else out + ".json"
    with open(report, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    for w in rep.warnings:
        click.echo(f"warning: {w}", err=True)
    click.echo(f"{variant}: {rep.final.num_edges} edges after "
               f"{len(rep.trace)} moves; wrote {out} and {report}")


@main.command()
@click.option("--estimate", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--truth", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="JSON metrics file.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False),
              default=None, help="Optional CSV metrics file.")
@guarded
def evaluate(estimate, truth, out, csv_path):
    """Compare an estimated graph against the truth and write metrics."""
    est = _read_graph(estimate)
    tru = _read_graph(truth)
    dist = evaluation.shd(est, tru)
    doc = {
        "config": {"command": "evaluate", "estimate": estimate,
                   "truth": truth},
        "shd": dist,
    }
    rows = []
    for mode in (evaluation.SKELETON, evaluation.DIRECTED):
        c = evaluation.confusion(est, tru, mode)
        doc[mode] = {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn,
                     "tpr": c.tpr, "fpr": c.fpr}
        rows.append((mode, c))
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    if csv_path is not None:
        with open(csv_path, "w") as fh:
            fh.write("mode,tp,fp,tn,fn,tpr,fpr,shd\n")
            for mode, c in rows:
                fh.write(f"{mode},{c.tp},{c.fp},{c.tn},{c.fn},"
                         f"{c.tpr:.6f},{c.fpr:.6f},{dist}\n")
    click.echo(f"shd={dist} "
               f"skeleton tpr={doc['skeleton']['tpr']:.3f} "
               f"fpr={doc['skeleton']['fpr']:.3f}")


# expected outputs of the worked four-node oracle run: the true class for
# the unrestricted and adaptive learners, and the distinct fixpoints the
# statically restricted learners converge to
DEMO_TRUE = Cpdag(4, directed=[(0, 2), (1, 2), (1, 3), (2, 3)])
DEMO_RGES_CIG = Cpdag(4, directed=[(0, 1), (0, 2), (3, 1), (3, 2)],
                      undirected=[(1, 2)])
DEMO_RGES_SKELETON = Cpdag(4, directed=[(0, 2), (2, 1), (3, 1), (3, 2)])
DEMO_EXPECT = {
    "ges": DEMO_TRUE,
    "arges-cig": DEMO_TRUE,
    "arges-skeleton": DEMO_TRUE,
    "rges-cig": DEMO_RGES_CIG,
    "rges-skeleton": DEMO_RGES_SKELETON,
}


def _edges_str(g: Pdag) -> str:
    parts = [f"{i}->{j}" for i, j in sorted(g.directed)]
    parts += [f"{a}--{b}" for a, b in sorted(g.undirected)]
    return " ".join(parts) if parts else "(empty)"


@main.command("demo-example1")
@click.option("--lambda", "lam", type=float, default=1e-6, show_default=True)
@click.option("--variant", "variants", type=click.Choice(VARIANTS),
              multiple=True, help="Restrict the table to these variants.")
@guarded
def demo_example1(lam, variants):
    """Run all five learners at the population on the four-node fixture.

    The unrestricted and adaptively restricted learners recover the true
    class; the statically restricted ones converge to provably different
    classes, which is the point of the fixture.  Exits 1 on any mismatch.
    """
    sem = simulation.example1_sem()
    src = correlation.oracle_correlation(sem)
    true_cpdag = dag_to_cpdag(sem.structure())
    true_cig = cig_estimation.precision_threshold_cig(src)
    true_skel = skeleton(true_cpdag)
    restrictions = {
        "ges": None,
        "rges-cig": true_cig, "arges-cig": true_cig,
        "rges-skeleton": true_skel, "arges-skeleton": true_skel,
    }
    chosen = variants if variants else VARIANTS
    failures = []
    click.echo(f"{'variant':<16} {'result':<40} check")
    for variant in VARIANTS:
        if variant not in chosen:
            continue
        model = ScoreModel(src, lam)
        rep = run_learner(variant, model, restrictions[variant])
        expected = DEMO_EXPECT[variant]
        ok = rep.final == expected
        click.echo(f"{variant:<16} {_edges_str(rep.final):<40} "
                   f"{'PASS' if ok else 'FAIL'}")
        if not ok:
            failures.append(
                f"{variant}: got {_edges_str(rep.final)}, "
                f"expected {_edges_str(expected)}")
    if failures:
        raise CliFailure("; ".join(failures), EXIT_CHECK)


if __name__ == "__main__":
    sys.exit(main())
