"""Model files: the CLI's structured-text input format.

A model file is TOML with a required ``format = 1`` header.  It names the
dictionary, the family of substitute sets, the domain, and optionally a
measure section (word weights and component mixture), a support section,
and parameter assignments.  The full grammar is documented in the README.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ValidationError
from .expfam import ExponentialFamilyModel, ParamVector, build_model, synthesize
from .graph import DomainSpec, build_graph, closure_domain, components, enumerate_domain
from .measures import ComponentMixtureSpec, SubProbability
from .strings import Dictionary, PairFamily, Sentence, make_pair

FORMAT_VERSION = 1


class ModelFileError(ValidationError):
    pass


@dataclass
class ModelFile:
    """Parsed and validated model file."""

    dictionary: Dictionary
    sets: tuple[tuple[Sentence, ...], ...]
    family: PairFamily
    domain: DomainSpec
    support_of: Optional[tuple[Sentence, ...]] = None
    xi: Optional[SubProbability] = None
    mu_seeds: Optional[dict[Sentence, float]] = None
    pair_betas: Optional[dict[tuple[Sentence, Sentence], float]] = None
    component_betas: Optional[dict[Sentence, float]] = None

    def domain_with(self, max_len: Optional[int] = None) -> DomainSpec:
        """Domain spec with an optional max-length override."""
        if max_len is None:
            return self.domain
        if self.domain.kind != "length_bounded":
            raise ModelFileError("--max-len only applies to length_bounded domains")
        return DomainSpec.length_bounded(self.dictionary, max_len, self.domain.budget)

    def support_seeds(self) -> Optional[tuple[Sentence, ...]]:
        """Sentences whose components make up the model support."""
        seeds: list[Sentence] = []
        if self.support_of:
            seeds.extend(self.support_of)
        if self.mu_seeds:
            seeds.extend(s for s in self.mu_seeds if s not in seeds)
        return tuple(seeds) if seeds else None

    def build(self, max_len: Optional[int] = None) -> ExponentialFamilyModel:
        return build_model(self.domain_with(max_len), self.family, self.support_seeds())

    def params_for(self, model: ExponentialFamilyModel) -> ParamVector:
        """Parameter vector from the [parameters] section; zeros by default."""
        free = [0.0] * len(model.free_pairs)
        comp = [0.0] * len(model.component_ids)
        if self.pair_betas:
            for (a, b), value in self.pair_betas.items():
                idx, sigma = model.family.find(a, b)
                signed = value if sigma == 0 else -value
                if idx not in model.free_pairs:
                    kind = "determined" if idx in model.determined_pairs else "inactive"
                    raise ModelFileError(
                        f"pair ({self.dictionary.decode(model.family[idx].y0)!r}, "
                        f"{self.dictionary.decode(model.family[idx].y1)!r}) is {kind}; "
                        "assign only free pairs"
                    )
                free[model.free_pairs.index(idx)] = signed
        if self.component_betas:
            for seed, value in self.component_betas.items():
                cid = model.partition.component_of.get(seed)
                if cid is None or cid not in model.component_ids:
                    raise ModelFileError(
                        f"component seed {self.dictionary.decode(seed)!r} is outside the support"
                    )
                comp[model.component_ids.index(cid)] = value
        return ParamVector(tuple(free), tuple(comp))

    def mixture_for(self, model: ExponentialFamilyModel) -> ComponentMixtureSpec:
        """Component mixture from [measure]; uniform over the support when
        mu is not given."""
        if self.xi is None:
            raise ModelFileError("model file has no [measure] section with xi weights")
        if self.mu_seeds:
            mu: dict[int, float] = {}
            for seed, w in self.mu_seeds.items():
                cid = model.partition.component_of.get(seed)
                if cid is None or cid not in model.component_ids:
                    raise ModelFileError(
                        f"mixture seed {self.dictionary.decode(seed)!r} is outside the support"
                    )
                mu[cid] = mu.get(cid, 0.0) + w
        else:
            n = len(model.component_ids)
            mu = {cid: 1.0 / n for cid in model.component_ids}
        return ComponentMixtureSpec(self.xi, mu)


def _expect(table: dict, key: str, types, where: str):
    if key not in table:
        raise ModelFileError(f"missing {key!r} in {where}")
    value = table[key]
    if not isinstance(value, types):
        raise ModelFileError(f"{where}.{key} has the wrong type")
    return value


def parse_model_text(text: str) -> ModelFile:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ModelFileError(f"model file is not valid TOML: {exc}") from exc
    version = _expect(doc, "format", int, "model file")
    if version != FORMAT_VERSION:
        raise ModelFileError(f"unsupported format version {version}")

    dtable = _expect(doc, "dictionary", dict, "model file")
    words = _expect(dtable, "words", list, "[dictionary]")
    if not all(isinstance(w, str) for w in words):
        raise ModelFileError("[dictionary].words must be a list of strings")
    dictionary = Dictionary(tuple(words))

    ftable = _expect(doc, "family", dict, "model file")
    raw_sets = _expect(ftable, "sets", list, "[family]")
    sets: list[tuple[Sentence, ...]] = []
    for group in raw_sets:
        if not isinstance(group, list) or not all(isinstance(s, str) for s in group):
            raise ModelFileError("[family].sets must be a list of lists of sentences")
        members = tuple(dictionary.encode(s) for s in group)
        if any(not m for m in members):
            raise ModelFileError("substitute sets must not contain the empty sentence")
        sets.append(members)
    family = PairFamily.from_sets(sets)

    dom = _expect(doc, "domain", dict, "model file")
    kind = _expect(dom, "kind", str, "[domain]")
    budget = dom.get("budget")
    if budget is not None and not isinstance(budget, int):
        raise ModelFileError("[domain].budget must be an integer")
    if kind == "length_bounded":
        max_len = _expect(dom, "max_len", int, "[domain]")
        domain = DomainSpec.length_bounded(dictionary, max_len, budget or 10**6)
    elif kind == "fixed_length":
        length = _expect(dom, "length", int, "[domain]")
        domain = DomainSpec.fixed_length(dictionary, length, budget or 10**6)
    elif kind == "explicit":
        sentences = _expect(dom, "sentences", list, "[domain]")
        if not all(isinstance(s, str) for s in sentences):
            raise ModelFileError("[domain].sentences must be strings")
        domain = DomainSpec.explicit(dictionary, [dictionary.encode(s) for s in sentences])
    else:
        raise ModelFileError(f"unknown domain kind {kind!r}")

    support_of = None
    if "support" in doc:
        stable = doc["support"]
        if not isinstance(stable, dict):
            raise ModelFileError("[support] must be a table")
        raw = _expect(stable, "components_of", list, "[support]")
        if not raw or not all(isinstance(s, str) for s in raw):
            raise ModelFileError("[support].components_of must be a non-empty list of sentences")
        support_of = tuple(dictionary.encode(s) for s in raw)

    xi = None
    mu_seeds = None
    if "measure" in doc:
        mtable = doc["measure"]
        if not isinstance(mtable, dict):
            raise ModelFileError("[measure] must be a table")
        raw_xi = _expect(mtable, "xi", dict, "[measure]")
        weights = [0.0] * len(dictionary)
        for token, w in raw_xi.items():
            if not isinstance(w, (int, float)):
                raise ModelFileError("[measure].xi weights must be numbers")
            weights[dictionary.id_of(token)] = float(w)
        xi = SubProbability(tuple(weights))
        if "mu" in mtable:
            raw_mu = mtable["mu"]
            if not isinstance(raw_mu, dict):
                raise ModelFileError("[measure].mu must be a table")
            mu_seeds = {}
            for text_s, w in raw_mu.items():
                if not isinstance(w, (int, float)):
                    raise ModelFileError("[measure].mu weights must be numbers")
                mu_seeds[dictionary.encode(text_s)] = float(w)

    pair_betas = None
    component_betas = None
    if "parameters" in doc:
        ptable = doc["parameters"]
        if not isinstance(ptable, dict):
            raise ModelFileError("[parameters] must be a table")
        if "pairs" in ptable:
            entries = ptable["pairs"]
            if not isinstance(entries, list):
                raise ModelFileError("[parameters].pairs must be an array of tables")
            pair_betas = {}
            for entry in entries:
                if not isinstance(entry, dict):
                    raise ModelFileError("[parameters].pairs entries must be tables")
                y0 = dictionary.encode(_expect(entry, "y0", str, "parameters pair"))
                y1 = dictionary.encode(_expect(entry, "y1", str, "parameters pair"))
                beta = _expect(entry, "beta", (int, float), "parameters pair")
                make_pair(y0, y1)  # validates non-empty and distinct
                pair_betas[(y0, y1)] = float(beta)
        if "components" in ptable:
            entries = ptable["components"]
            if not isinstance(entries, list):
                raise ModelFileError("[parameters].components must be an array of tables")
            component_betas = {}
            for entry in entries:
                if not isinstance(entry, dict):
                    raise ModelFileError("[parameters].components entries must be tables")
                seed = dictionary.encode(_expect(entry, "of", str, "parameters component"))
                beta = _expect(entry, "beta", (int, float), "parameters component")
                component_betas[seed] = float(beta)

    return ModelFile(
        dictionary=dictionary,
        sets=tuple(sets),
        family=family,
        domain=domain,
        support_of=support_of,
        xi=xi,
        mu_seeds=mu_seeds,
        pair_betas=pair_betas,
        component_betas=component_betas,
    )


def load_model_file(path) -> ModelFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc}") from exc
    return parse_model_text(text)
