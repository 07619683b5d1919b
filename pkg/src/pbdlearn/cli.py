"""Command-line front end.

Exit codes: 0 success, 2 usage error (including parameters that would blow a
size cap), 3 data or format error, 4 the learner ran but its guarantee is
not certified, or no hypothesis was accepted.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import ExperimentConfig, run_bench, to_csv
from .cover import (
    CoverConfig,
    CoverTooLargeError,
    build_cover,
    cover_counts,
    cover_element_pmf,
    element_from_json,
    element_to_json,
)
from .dist_core import (
    Pmf,
    ProbVector,
    SizeLimitError,
    TailMassError,
    kolmogorov_distance,
    load_distribution_spec,
    pbd_pmf,
    sample_pbd,
    tv_distance,
)
from .empirical import SampleFormatError, dkw_sample_size, kolmogorov_sample_size, read_samples, write_samples
from .learner import NoAcceptingElement, TvLearnerConfig, learn_kolmogorov, learn_tv
from .selection import TournamentFailure, tournament, tournament_sample_size
from .unimodal import HistogramHypothesis, learn_unimodal, unimodal_sample_size
from .weighted import learn_weighted, make_lower_bound_instance, sample_weighted

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_UNCERTIFIED = 0, 2, 3, 4
THREADS_ENV = "PBDLEARN_THREADS"


class DataError(Exception):
    """Bad input file contents; maps to exit code 3."""


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc


def _write_json(path, doc) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_spec(path):
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw)
        return load_distribution_spec(doc), hashlib.sha256(raw).hexdigest()
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed distribution spec ({exc})") from exc


def _truth_pmf(spec) -> Pmf:
    if isinstance(spec, ProbVector):
        return pbd_pmf(spec)
    from .weighted import weighted_pmf

    wp = weighted_pmf(spec)
    if not np.all(wp.values == np.round(wp.values)) or wp.values.min() < 0:
        raise DataError("only weighted specs with nonnegative integer outputs have a PMF on {0..N}")
    mass = np.zeros(int(wp.values.max()) + 1)
    mass[wp.values.astype(np.int64)] = wp.mass
    return Pmf(mass)


def hypothesis_pmf(doc: dict, n: int = None) -> Pmf:
    """PMF of a hypothesis document: a cover element, a histogram, or raw mass."""
    form = doc.get("form")
    if form in ("sparse", "heavy_binomial"):
        n = doc.get("n", n)
        if n is None:
            raise DataError("cover-element hypothesis needs n")
        return cover_element_pmf(element_from_json(doc), int(n))
    if form == "histogram":
        return HistogramHypothesis.from_json(doc).pmf()
    if "mass" in doc:
        return Pmf(doc["mass"])
    raise DataError(f"unrecognized hypothesis form {form!r}")


def _cover_hypothesis_doc(h) -> dict:
    doc = element_to_json(h.element)
    doc.update({"n": h.n, "certified": bool(h.certified), "statistic": h.statistic, "threshold": h.threshold, "index": h.index})
    doc["notes"] = {k: (bool(v) if isinstance(v, (bool, np.bool_)) else v) for k, v in h.notes.items()}
    return doc


# -- subcommands ------------------------------------------------------------


def cmd_sample(args) -> int:
    spec, digest = _load_spec(args.spec)
    if isinstance(spec, ProbVector):
        values = sample_pbd(spec, args.seed, args.count)
    else:
        values = sample_weighted(spec, args.seed, args.count)
        if not np.all(values == np.round(values)) or values.min() < 0:
            raise DataError("sample files hold unsigned integers; weighted outputs must be nonnegative integers")
        values = values.astype(np.int64)
    write_samples(args.out, values)
    meta = {"spec": str(args.spec), "spec_sha256": digest, "seed": args.seed, "count": args.count, "version": __version__}
    _write_json(str(args.out) + ".meta.json", meta)
    return EXIT_OK


def _read(args, n):
    return read_samples(args.samples, n)


def cmd_learn(args) -> int:
    s = _read(args, args.n)
    if args.kind == "kolmogorov":
        need = kolmogorov_sample_size(args.epsilon, args.delta)
        alt = dkw_sample_size(args.epsilon / 4.0, args.delta)
        print(f"sample sizing: {need} (Kolmogorov learner constants), {alt} (DKW at epsilon/4)", file=sys.stderr)
        h = learn_kolmogorov(s, args.n, args.epsilon, k_override=args.k, delta=args.delta)
        doc = _cover_hypothesis_doc(h)
        certified = h.certified
    elif args.kind == "tv":
        cfg = TvLearnerConfig(
            args.epsilon,
            tau=args.tau,
            k_override=args.k,
            delta_threshold=args.delta_threshold,
            h_threshold=args.h_threshold,
        )
        h = learn_tv(s, args.n, cfg)
        doc = _cover_hypothesis_doc(h)
        certified = h.certified
    else:
        h = learn_unimodal(s, args.n, args.epsilon)
        doc = h.to_json()
        doc["statistic"] = None
        doc["intervals"] = len(h)
        certified = s.k >= unimodal_sample_size(args.n, args.epsilon)
        doc["certified"] = certified
    _write_json(args.out, doc)
    if not certified:
        print("warning: guarantee not certified at these parameters", file=sys.stderr)
        return EXIT_UNCERTIFIED
    return EXIT_OK


def _cover_cfg(args) -> CoverConfig:
    return CoverConfig(args.epsilon, args.n, k=args.k, sparse_ell_cap=args.ell_cap, heavy_q_stride=args.q_stride)


def cmd_cover(args) -> int:
    cfg = _cover_cfg(args)
    if args.action == "stats":
        doc = {"n": cfg.n, "k": cfg.k, "certified": cfg.certified, "enumerated": cover_counts(cfg)}
        if args.build:
            doc["built"] = dict(build_cover(cfg).counts)
        _write_json(args.out, doc)
        return EXIT_OK
    _write_json(args.out, build_cover(cfg).to_json())
    return EXIT_OK


def _candidate_pmfs(doc) -> list:
    items = doc["candidates"] if isinstance(doc, dict) else doc
    out = []
    for item in items:
        if item.get("type") in ("pbd", "weighted"):
            out.append(_truth_pmf(load_distribution_spec(item)))
        else:
            out.append(hypothesis_pmf(item))
    return out


def cmd_select(args) -> int:
    try:
        pmfs = _candidate_pmfs(_load_json(args.candidates))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{args.candidates}: malformed candidate list ({exc})") from exc
    d = max(p.domain_max for p in pmfs)
    s = read_samples(args.samples, d)
    m_needed = tournament_sample_size(args.delta, len(pmfs))
    P = np.array([p.padded(d) for p in pmfs])
    doc = {"delta": args.delta, "guarantee": 6 * args.delta, "samples": s.k, "required_samples": m_needed}
    try:
        doc["winner"] = tournament(P, s, args.delta)
    except TournamentFailure as exc:
        doc["winner"] = None
        doc["failure"] = str(exc)
        _write_json(args.out, doc)
        return EXIT_UNCERTIFIED
    _write_json(args.out, doc)
    return EXIT_OK if s.k >= m_needed else EXIT_UNCERTIFIED


def _int_list(text: str) -> list:
    try:
        return [json.loads(x) for x in text.split(",")]
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def cmd_weighted(args) -> int:
    if args.action == "hard-instance":
        inst = make_lower_bound_instance(args.k, args.seed)
        doc = inst.to_json()
        doc["seed"] = args.seed
        _write_json(args.out, doc)
        return EXIT_OK
    if len(args.weights) != len(args.counts):
        raise ValueError("--weights and --counts need the same number of entries")
    values = []
    with open(args.samples, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"line {lineno}: not a number: {line!r}") from exc
    try:
        h = learn_weighted(values, args.weights, args.counts, args.epsilon, k=args.k)
    except KeyError as exc:
        raise DataError(str(exc)) from exc
    except TournamentFailure as exc:
        _write_json(args.out, {"failure": str(exc)})
        return EXIT_UNCERTIFIED
    doc = h.model.to_json()
    doc.update(
        {
            "delta": h.delta,
            "guarantee": h.guarantee,
            "cover_size": h.cover_size,
            "samples": h.samples,
            "required_samples": h.required_samples,
            "certified": h.samples >= h.required_samples,
        }
    )
    _write_json(args.out, doc)
    return EXIT_OK if doc["certified"] else EXIT_UNCERTIFIED


def cmd_eval(args) -> int:
    spec, _ = _load_spec(args.truth)
    truth = _truth_pmf(spec)
    hyp_doc = _load_json(args.hypothesis)
    hyp = hypothesis_pmf(hyp_doc, truth.domain_max)
    if hyp.domain_max != truth.domain_max:
        raise DataError(f"hypothesis lives on 0..{hyp.domain_max}, truth on 0..{truth.domain_max}")
    doc = {
        "d_tv": tv_distance(hyp, truth),
        "d_k": kolmogorov_distance(hyp, truth),
        "n": truth.domain_max,
        "certified": hyp_doc.get("certified"),
        "sample_count": hyp_doc.get("notes", {}).get("samples", hyp_doc.get("samples")),
    }
    _write_json(args.out, doc)
    return EXIT_OK


def cmd_bench(args) -> int:
    doc = _load_json(args.config) if args.config else {}
    for key in ("scenario", "trials", "base_seed"):
        val = getattr(args, key)
        if val is not None:
            doc[key] = val
    if "scenario" not in doc:
        raise ValueError("bench needs a scenario (in --config or --scenario)")
    cfg = ExperimentConfig.from_json(doc)
    result = run_bench(cfg, threads=args.threads, timing=args.timing)
    text = to_csv(result)
    out = args.out or cfg.output
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")
    print(f"{cfg.scenario}: {result.successes}/{len(result.rows)} trials succeeded", file=sys.stderr)
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pbdlearn", description="Learn sums of independent Bernoulli variables.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="draw samples from a distribution spec")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_sample)

    lp = sub.add_parser("learn", help="learn a hypothesis from samples")
    lp.add_argument("kind", choices=("tv", "kolmogorov", "unimodal"))
    lp.add_argument("--samples", required=True)
    lp.add_argument("--n", type=int, required=True)
    lp.add_argument("--epsilon", type=float, required=True)
    lp.add_argument("--tau", type=float, default=1.0)
    lp.add_argument("--k", type=int, default=None)
    lp.add_argument("--delta", type=float, default=0.1, help="failure probability for sample sizing")
    lp.add_argument("--delta-threshold", type=float, default=None)
    lp.add_argument("--h-threshold", type=float, default=None)
    lp.add_argument("--out", default="-")
    lp.set_defaults(func=cmd_learn)

    cp = sub.add_parser("cover", help="build or count the sparse/heavy cover")
    cp.add_argument("action", choices=("build", "stats"))
    cp.add_argument("--n", type=int, required=True)
    cp.add_argument("--epsilon", type=float, required=True)
    cp.add_argument("--k", type=int, default=None)
    cp.add_argument("--ell-cap", "--cap-ell", dest="ell_cap", type=int, default=None)
    cp.add_argument("--q-stride", type=int, default=None)
    cp.add_argument("--build", action="store_true", help="stats: also build and report deduplicated counts")
    cp.add_argument("--out", default="-")
    cp.set_defaults(func=cmd_cover)

    xp = sub.add_parser("select", help="run the tournament over a candidate list")
    xp.add_argument("--candidates", required=True)
    xp.add_argument("--samples", required=True)
    xp.add_argument("--delta", type=float, required=True)
    xp.add_argument("--out", default="-")
    xp.set_defaults(func=cmd_select)

    wp = sub.add_parser("weighted", help="weighted sums with few distinct weights")
    wp.add_argument("action", choices=("learn", "hard-instance"))
    wp.add_argument("--weights", type=_int_list)
    wp.add_argument("--counts", type=_int_list)
    wp.add_argument("--samples")
    wp.add_argument("--epsilon", type=float)
    wp.add_argument("--k", type=int, default=None)
    wp.add_argument("--seed", type=int, default=0)
    wp.add_argument("--out", default="-")
    wp.set_defaults(func=cmd_weighted)

    ep = sub.add_parser("eval", help="exact distances between a hypothesis and the truth")
    ep.add_argument("--hypothesis", required=True)
    ep.add_argument("--truth", required=True)
    ep.add_argument("--out", default="-")
    ep.set_defaults(func=cmd_eval)

    bp = sub.add_parser("bench", help="run a seeded Monte Carlo scenario")
    bp.add_argument("--config", default=None)
    bp.add_argument("--scenario", default=None)
    bp.add_argument("--trials", type=int, default=None)
    bp.add_argument("--base-seed", type=int, default=None)
    bp.add_argument("--threads", type=int, default=_default_threads())
    bp.add_argument("--timing", action="store_true", help="fill the time_s column (makes output nondeterministic)")
    bp.add_argument("--out", default=None)
    bp.set_defaults(func=cmd_bench)
    return p


def _check_weighted_args(parser, args) -> None:
    if args.command != "weighted":
        return
    if args.action == "hard-instance" and args.k is None:
        parser.error("weighted hard-instance needs --k")
    if args.action == "learn":
        missing = [f for f in ("weights", "counts", "samples", "epsilon") if getattr(args, f) is None]
        if missing:
            parser.error("weighted learn needs " + ", ".join("--" + m for m in missing))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_weighted_args(parser, args)
    try:
        return args.func(args)
    except (DataError, SampleFormatError, TailMassError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NoAcceptingElement as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNCERTIFIED
    except (CoverTooLargeError, SizeLimitError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
