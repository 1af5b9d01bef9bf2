"""Batch command-line front-end.

Reads a model file, runs one pipeline stage, and writes a deterministic
tab-separated report to standard output (``--json`` switches to one JSON
document).  ``--figures DIR`` additionally renders a PNG per command next
to the delimited output.

Exit codes: 0 success, 1 validation error, 2 verification or consistency
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from typing import Optional

from . import figures
from .chains import TransitionMatrix, chain_to_exponents, exponents_to_chain
from .errors import ConsistencyError, ValidationError
from .expfam import ExponentTable, ExponentialFamilyModel
from .graph import build_graph, components, enumerate_domain
from .inference import Corpus, mle_fit
from .measures import FiniteMeasure, bproc_measure, verify_substitute
from .modelfile import ModelFile, load_model_file
from .expfam import prune_redundant_pairs
from .samplers import make_rng, sample_finite, sample_indep, swap_mcmc
from .strings import Dictionary, Sentence


class _Parser(argparse.ArgumentParser):
    # validation problems exit 1, including bad flags
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Fraction):
        return str(v)
    return str(v)


class Report:
    """Collects meta lines and rows; renders as TSV or one JSON document."""

    def __init__(self, command: str, json_mode: bool):
        self.command = command
        self.json_mode = json_mode
        self.meta: list[tuple[str, str]] = []
        self.lines: list[str] = []
        self.doc: dict = {"command": command}

    def add_meta(self, key: str, value) -> None:
        self.meta.append((key, str(value)))
        self.doc[key] = value

    def row(self, *fields) -> None:
        self.lines.append("\t".join(_fmt(f) for f in fields))

    def comment(self, text: str) -> None:
        self.lines.append(f"# {text}")

    def print(self) -> None:
        if self.json_mode:
            sys.stdout.write(json.dumps(self.doc, indent=2) + "\n")
            return
        out = [f"# submarkov {self.command}"]
        out.extend(f"# {k}: {v}" for k, v in self.meta)
        out.extend(self.lines)
        sys.stdout.write("\n".join(out) + "\n")


def _figure_path(args, name: str) -> Optional[str]:
    if not getattr(args, "figures", None):
        return None
    os.makedirs(args.figures, exist_ok=True)
    return os.path.join(args.figures, name)


def _pair_text(dictionary: Dictionary, pair) -> tuple[str, str]:
    return dictionary.decode(pair.y0), dictionary.decode(pair.y1)


def _constraint_text(model: ExponentialFamilyModel, j: int) -> str:
    d = model.dictionary
    pj = model.family[j]
    lhs = f"beta({d.decode(pj.y0)}, {d.decode(pj.y1)})"
    terms: list[tuple[bool, str]] = []
    for i in model.free_pairs:
        coef = model.e[i].get(j, Fraction(0))
        if coef == 0:
            continue
        pi = model.family[i]
        name = f"beta({d.decode(pi.y0)}, {d.decode(pi.y1)})"
        mag = abs(coef)
        body = name if mag == 1 else f"{mag}*{name}"
        terms.append((coef > 0, body))
    if not terms:
        return f"{lhs} = 0"
    first_sign, first_body = terms[0]
    rhs = ("" if first_sign else "-") + first_body
    for positive, body in terms[1:]:
        rhs += f" + {body}" if positive else f" - {body}"
    return f"{lhs} = {rhs}"


# ---------------------------------------------------------------- commands


def cmd_components(args) -> int:
    mf = load_model_file(args.spec)
    spec = mf.domain_with(args.max_len)
    domain = enumerate_domain(spec)
    edges = build_graph(domain, mf.family)
    partition = components(domain, edges)
    rep = Report("components", args.json)
    rep.add_meta("spec", args.spec)
    rep.add_meta("domain", spec.describe())
    rep.add_meta("sentences", len(domain))
    rep.add_meta("edges", len(edges))
    rep.add_meta(
        "truncation",
        "components are relative to this finite domain; substitutions leaving it are dropped",
    )
    d = mf.dictionary
    comps_doc = []
    for cid, comp in enumerate(partition.components):
        rep.row("component", cid, len(comp), d.decode(partition.references[cid]))
        for s in comp:
            rep.row("member", cid, d.decode(s))
        comps_doc.append(
            {
                "id": cid,
                "size": len(comp),
                "reference": d.decode(partition.references[cid]),
                "members": [d.decode(s) for s in comp],
            }
        )
    rep.doc["components"] = comps_doc
    fig = _figure_path(args, "components.png")
    if fig:
        figures.components_figure([len(c) for c in partition.components], fig)
        rep.add_meta("figure", fig)
    rep.print()
    return 0


def cmd_expfam(args) -> int:
    mf = load_model_file(args.spec)
    model = mf.build(args.max_len)
    d = mf.dictionary
    rep = Report("expfam", args.json)
    rep.add_meta("spec", args.spec)
    rep.add_meta("domain", mf.domain_with(args.max_len).describe())
    rep.add_meta("support_components", len(model.component_ids))
    rep.add_meta("support_sentences", len(model.support))
    rep.add_meta(
        "truncation",
        "support and constraints are relative to this finite domain",
    )
    rep.row(
        "summary",
        "active",
        len(model.active_pairs),
        "free",
        len(model.free_pairs),
        "determined",
        len(model.determined_pairs),
        "dimension",
        model.dimension,
    )
    pairs_doc = []
    for idx, pair in enumerate(model.family):
        if idx in model.free_pairs:
            status = "free"
        elif idx in model.determined_pairs:
            status = "determined"
        elif idx in model.active_pairs:
            status = "active"
        else:
            status = "inactive"
        y0, y1 = _pair_text(d, pair)
        rep.row("pair", idx, y0, y1, status)
        pairs_doc.append({"index": idx, "y0": y0, "y1": y1, "status": status})
    constraints = [_constraint_text(model, j) for j in model.determined_pairs]
    for text in constraints:
        rep.row("constraint", text)
    rep.doc["pairs"] = pairs_doc
    rep.doc["constraints"] = constraints
    rep.doc["summary"] = {
        "active": len(model.active_pairs),
        "free": len(model.free_pairs),
        "determined": len(model.determined_pairs),
        "dimension": model.dimension,
    }
    headers = [
        f"beta({_pair_text(d, model.family[i])[0]}, {_pair_text(d, model.family[i])[1]})"
        for i in model.free_pairs
    ]
    rep.comment("energy table: sentence, component, " + ", ".join(headers))
    energy_doc = []
    for s in model.support:
        cid = model.partition.component_of[s]
        us = model.energies[s]
        rep.row(d.decode(s), cid, *us)
        energy_doc.append(
            {"sentence": d.decode(s), "component": cid, "energies": [str(u) for u in us]}
        )
    rep.doc["energies"] = energy_doc
    fig = _figure_path(args, "expfam.png")
    if fig:
        figures.energy_figure(
            [d.decode(s) for s in model.support],
            [[float(u) for u in model.energies[s]] for s in model.support],
            fig,
        )
        rep.add_meta("figure", fig)
    rep.print()
    return 0


def cmd_prob(args) -> int:
    mf = load_model_file(args.spec)
    model = mf.build(args.max_len)
    beta = mf.params_for(model)
    d = mf.dictionary
    rep = Report("prob", args.json)
    rep.add_meta("spec", args.spec)
    rep.add_meta("support_sentences", len(model.support))
    rows_doc = []
    for line in sys.stdin:
        text = line.strip()
        if not text:
            continue
        s = d.encode(text)
        lp = model.log_prob(beta, s)
        rep.row(text, lp)
        rows_doc.append({"sentence": text, "log_prob": lp})
    rep.doc["sentences"] = rows_doc
    rep.print()
    return 0


def cmd_verify(args) -> int:
    mf = load_model_file(args.spec)
    spec = mf.domain_with(args.max_len)
    domain = enumerate_domain(spec)
    d = mf.dictionary
    measure = FiniteMeasure.load(args.measure, d, domain)
    result = verify_substitute(measure, mf.family, domain, tol=args.tol)
    rep = Report("verify", args.json)
    rep.add_meta("spec", args.spec)
    rep.add_meta("measure", args.measure)
    rep.add_meta("domain", spec.describe())
    rep.add_meta("tolerance", repr(args.tol))
    rep.row("verdict", "pass" if result.ok else "fail")
    rep.row("max_spread", result.max_spread)
    rep.row("max_swap_residual", result.max_swap_residual)
    verdict_doc = []
    for v in result.verdicts:
        y0, y1 = _pair_text(d, mf.family[v.pair])
        if v.status == "active":
            rep.row("pair", v.pair, y0, y1, "active", v.exponent, "contexts", v.contexts, "spread", v.spread)
        else:
            rep.row("pair", v.pair, y0, y1, "inactive")
        verdict_doc.append(
            {
                "pair": v.pair,
                "y0": y0,
                "y1": y1,
                "status": v.status,
                "exponent": v.exponent,
                "contexts": v.contexts,
                "spread": v.spread,
            }
        )
    viol_doc = []
    for violation in result.violations:
        left = d.decode(violation.context[0])
        right = d.decode(violation.context[1])
        rep.row("violation", violation.pair, violation.kind, left, right, violation.detail)
        viol_doc.append(
            {
                "pair": violation.pair,
                "kind": violation.kind,
                "context": [left, right],
                "detail": violation.detail,
            }
        )
    rep.doc["ok"] = result.ok
    rep.doc["pairs"] = verdict_doc
    rep.doc["violations"] = viol_doc
    fig = _figure_path(args, "verify.png")
    if fig:
        figures.verify_figure(
            [" ~ ".join(_pair_text(d, mf.family[v.pair])) for v in result.verdicts],
            [v.exponent for v in result.verdicts],
            [v.spread for v in result.verdicts],
            fig,
        )
        rep.add_meta("figure", fig)
    rep.print()
    return 0 if result.ok else 2


def cmd_sample(args) -> int:
    mf = load_model_file(args.spec)
    rng = make_rng(args.seed)
    d = mf.dictionary
    rep = Report("sample", args.json)
    rep.add_meta("spec", args.spec)
    rep.add_meta("seed", args.seed)
    rep.add_meta("draws", args.draws)
    lengths = []
    texts = []
    geometric_r = None
    if args.indep:
        if mf.xi is None:
            raise ValidationError("--indep needs [measure] xi weights in the model file")
        rep.add_meta("mode", "independent process")
        geometric_r = mf.xi.r
        draws = [sample_indep(mf.xi, rng) for _ in range(args.draws)]
    else:
        model = mf.build(args.max_len)
        if mf.xi is not None:
            rep.add_meta("mode", "component mixture of the conditioned independent process")
            mixture = mf.mixture_for(model)
            measure = bproc_measure(mixture, model.partition)
        else:
            rep.add_meta("mode", "model distribution for the file's parameters")
            beta = mf.params_for(model)
            measure = FiniteMeasure(model.partition.domain, model.distribution(beta))
        draws = sample_finite(measure, rng, args.draws)
    for s in draws:
        text = d.decode(s)
        texts.append(text)
        lengths.append(len(s))
        rep.row(text)
    rep.doc["samples"] = texts
    fig = _figure_path(args, "sample.png")
    if fig:
        figures.sample_length_figure(lengths, geometric_r, fig)
        rep.add_meta("figure", fig)
    rep.print()
    return 0


def cmd_mcmc(args) -> int:
    mf = load_model_file(args.spec)
    d = mf.dictionary
    start = d.encode(args.start)
    spec = mf.domain_with(args.max_len)
    if mf.support_seeds() is None:
        mf_support = (start,)
    else:
        mf_support = tuple(mf.support_seeds()) + (start,)
    from .expfam import build_model

    model = build_model(spec, mf.family, mf_support)
    beta = mf.params_for(model)
    table = model.exponents_from_params(beta)
    rng = make_rng(args.seed)
    trace = swap_mcmc(start, table.values, mf.family, model.partition.domain, args.steps, rng)
    rep = Report("mcmc", args.json)
    rep.add_meta("spec", args.spec)
    rep.add_meta("seed", args.seed)
    rep.add_meta("steps", args.steps)
    rep.add_meta("start", args.start)
    rep.add_meta("acceptance_rate", repr(trace.acceptance_rate()))
    if trace.frozen:
        rep.add_meta("frozen", "true")
    rows_doc = []
    for k, (s, acc) in enumerate(zip(trace.states, trace.accepted), start=1):
        rep.row(k, d.decode(s), int(acc))
        rows_doc.append({"step": k, "sentence": d.decode(s), "accepted": bool(acc)})
    rep.doc["trace"] = rows_doc
    rep.doc["frozen"] = trace.frozen
    rep.doc["acceptance_rate"] = trace.acceptance_rate()
    fig = _figure_path(args, "mcmc.png")
    if fig:
        cid = model.partition.component_of[start]
        comp = model.partition.components[cid]
        index = {s: k for k, s in enumerate(comp)}
        emp = trace.empirical()
        dist = model.distribution(beta)
        comp_mass = sum(dist[s] for s in comp)
        figures.mcmc_figure(
            [d.decode(s) for s in comp],
            [index[s] for s in trace.states],
            [emp.get(s, 0.0) for s in comp],
            [dist[s] / comp_mass for s in comp],
            fig,
        )
        rep.add_meta("figure", fig)
    rep.print()
    return 0


def cmd_chain_to_exp(args) -> int:
    chain = TransitionMatrix.load(args.matrix)
    if args.spec:
        d = load_model_file(args.spec).dictionary
        if len(d) != chain.n:
            raise ValidationError("model file dictionary does not match the matrix size")
    else:
        d = Dictionary(tuple(f"w{i}" for i in range(chain.n)))
    table = chain_to_exponents(chain, d)
    rep = Report("chain-to-exp", args.json)
    rep.add_meta("matrix", args.matrix)
    rep.add_meta("words", " ".join(d.words))
    rows_doc = []
    for i in sorted(table.values):
        p = table.family[i]
        y0, y1 = _pair_text(d, p)
        rep.row(y0, y1, table.values[i])
        rows_doc.append({"y0": y0, "y1": y1, "beta": table.values[i]})
    rep.doc["exponents"] = rows_doc
    rep.print()
    return 0


def cmd_exp_to_chain(args) -> int:
    if args.spec:
        d = load_model_file(args.spec).dictionary
    else:
        tokens: set[str] = set()
        with open(args.exponents, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValidationError(f"bad exponent line: {line!r}")
                tokens.update(parts[0].split())
                tokens.update(parts[1].split())
        d = Dictionary(tuple(sorted(tokens)))
    table = ExponentTable.load(args.exponents, d)
    anchor = d.id_of(args.anchor) if args.anchor else 0
    chain, perron = exponents_to_chain(table, d, anchor=anchor, tol=args.tol)
    rep = Report("exp-to-chain", args.json)
    rep.add_meta("exponents", args.exponents)
    rep.add_meta("words", " ".join(d.words))
    rep.add_meta("anchor", d.words[anchor])
    rep.add_meta("eigenvalue", repr(perron.eigenvalue))
    rep.add_meta("eigenvector", " ".join(repr(float(v)) for v in perron.eigenvector))
    for row in chain.matrix:
        rep.row(*[float(v) for v in row])
    rep.doc["matrix"] = [[float(v) for v in row] for row in chain.matrix]
    rep.doc["eigenvalue"] = perron.eigenvalue
    rep.doc["eigenvector"] = [float(v) for v in perron.eigenvector]
    rep.print()
    return 0


def cmd_fit(args) -> int:
    mf = load_model_file(args.spec)
    model = mf.build(args.max_len)
    d = mf.dictionary
    corpus = Corpus.load(args.corpus, d)
    result = mle_fit(corpus, model, tol=args.tol)
    rep = Report("fit", args.json)
    rep.add_meta("spec", args.spec)
    rep.add_meta("corpus", args.corpus)
    rep.add_meta("observations", repr(corpus.total))
    rep.add_meta("iterations", result.iterations)
    rep.add_meta("grad_norm", repr(result.grad_norm))
    rep.add_meta("log_likelihood", repr(result.log_likelihood))
    params_doc = []
    for pos, i in enumerate(model.free_pairs):
        y0, y1 = _pair_text(d, model.family[i])
        rep.row("param", "pair", y0, y1, result.params.free[pos])
        params_doc.append({"kind": "pair", "y0": y0, "y1": y1, "value": result.params.free[pos]})
    for pos, cid in enumerate(model.component_ids):
        ref = d.decode(model.partition.references[cid])
        rep.row("param", "component", ref, result.params.comp[pos])
        params_doc.append({"kind": "component", "reference": ref, "value": result.params.comp[pos]})
    rep.doc["params"] = params_doc
    fig = _figure_path(args, "fit.png")
    if fig:
        figures.fit_figure(result.history, fig)
        rep.add_meta("figure", fig)
    rep.print()
    return 0


def cmd_prune(args) -> int:
    mf = load_model_file(args.spec)
    spec = mf.domain_with(args.max_len)
    seeds = mf.support_seeds()
    if seeds is not None:
        from .graph import closure_domain

        domain = closure_domain(seeds, mf.family, spec)
    else:
        domain = enumerate_domain(spec)
    reduced = prune_redundant_pairs(domain, mf.family)
    rep = Report("prune", args.json)
    rep.add_meta("spec", args.spec)
    rep.add_meta("domain", spec.describe())
    rep.add_meta("pairs_before", len(mf.family))
    rep.add_meta("pairs_after", len(reduced))
    d = mf.dictionary
    pairs_doc = []
    for p in reduced:
        y0, y1 = _pair_text(d, p)
        rep.row("pair", y0, y1)
        pairs_doc.append({"y0": y0, "y1": y1})
    rep.doc["pairs"] = pairs_doc
    rep.print()
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> _Parser:
    parser = _Parser(prog="submarkov", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, spec_required=True):
        p.add_argument("--spec", required=spec_required, help="model file (TOML, format = 1)")
        p.add_argument("--max-len", type=int, default=None, help="override the domain length bound")
        p.add_argument("--json", action="store_true", help="emit one JSON document")
        p.add_argument("--figures", default=None, metavar="DIR", help="render PNG figures into DIR")

    p = sub.add_parser("components", help="connected components of the substitution graph")
    common(p)
    p.set_defaults(func=cmd_components)

    p = sub.add_parser("expfam", help="free pairs, constraints, and energy table")
    common(p)
    p.set_defaults(func=cmd_expfam)

    p = sub.add_parser("prob", help="log-probabilities for sentences on standard input")
    common(p)
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("verify", help="check a measure file for the substitute property")
    common(p)
    p.add_argument("--measure", required=True, help="measure file (sentence<TAB>probability)")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", help="draw sentences")
    common(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-n", "--draws", type=int, required=True)
    p.add_argument("--indep", action="store_true", help="sample the raw independent process")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("mcmc", help="swap-move Metropolis-Hastings trace")
    common(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--start", required=True, help="start sentence")
    p.set_defaults(func=cmd_mcmc)

    p = sub.add_parser("chain-to-exp", help="substitute exponents of a positive Markov chain")
    p.add_argument("--matrix", required=True, help="transition matrix file (TSV rows)")
    p.add_argument("--spec", default=None, help="model file supplying word labels")
    p.add_argument("--json", action="store_true")
    p.add_argument("--figures", default=None, metavar="DIR")
    p.set_defaults(func=cmd_chain_to_exp)

    p = sub.add_parser("exp-to-chain", help="recover a transition matrix from exponents")
    p.add_argument("--exponents", required=True, help="exponent table file (y0<TAB>y1<TAB>beta)")
    p.add_argument("--spec", default=None, help="model file supplying word labels")
    p.add_argument("--anchor", default=None, metavar="WORD", help="anchor word (default: first word)")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--json", action="store_true")
    p.add_argument("--figures", default=None, metavar="DIR")
    p.set_defaults(func=cmd_exp_to_chain)

    p = sub.add_parser("fit", help="exact maximum likelihood on a corpus")
    common(p)
    p.add_argument("--corpus", required=True, help="corpus file (count<TAB>sentence)")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("prune", help="drop redundant pairs on the finite domain")
    common(p)
    p.set_defaults(func=cmd_prune)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
