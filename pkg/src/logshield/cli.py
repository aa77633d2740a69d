"""Command-line front end.

Exit codes: 0 success, 1 input or format error, 2 gate failure (PoC above
``--max-poc`` or an unexplained engine/oracle disagreement), 3 oracle limit
exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import List, Optional, Sequence

from . import __version__
from .anonymizer import read_release, suppress_anonymize, write_release
from .attacks import PairAnalyzer, ReleasePair, attack_report, fa_ca_ba
from .errors import LimitExceeded, LogShieldError
from .matching import all_sequences, enumerate_bk_candidates
from .model import parse_raw_log, read_simple_log, to_simple_log, write_events_csv
from .multi_release import ReleaseChain, chain_report
from .oracle import DEFAULT_LINKER_LIMIT, compare_engine
from .scenario import ScenarioSpec, run_scenario, write_outputs
from .synthetic import hospital_log, random_release_pair

log = logging.getLogger("logshield")

EXIT_OK, EXIT_ERROR, EXIT_GATE, EXIT_LIMIT = 0, 1, 2, 3


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _non_negative(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _dump_json(obj, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    events = parse_raw_log(args.input, args.format)
    simple = to_simple_log(events, args.sensitive)  # validates case consistency
    events = sorted(events, key=lambda e: e.timestamp)
    write_events_csv(events, args.output, args.sensitive)
    print(f"{len(simple)} cases, {len(events)} events -> {args.output}")
    return EXIT_OK


def cmd_anonymize(args) -> int:
    src = read_simple_log(args.input, args.sensitive)
    release = suppress_anonymize(src, args.k, args.n, args.bk_max_len, seed=args.seed, id_prefix=args.id_prefix)
    write_release(release, args.output)
    print(f"{len(release.log)} cases anonymized (k={args.k}, n={args.n}) -> {args.output}")
    return EXIT_OK


def _candidates(kind: str, logs, max_len: int):
    if kind == "alphabet":
        letters = set().union(*(lg.alphabet for lg in logs))
        return list(all_sequences(letters, max_len))
    return None


def cmd_audit(args) -> int:
    releases = [read_release(p, args.n) for p in args.releases]
    for path, r in zip(args.releases, releases):
        if r.n != args.n:
            log.warning("%s was anonymized with n=%s; auditing with n=%s", path, r.n, args.n)
    logs = [r.log for r in releases]
    labels = [os.path.basename(p) for p in args.releases]
    os.makedirs(args.out, exist_ok=True)

    pairs_out = []
    worst = 0.0
    for i in range(len(logs) - 1):
        pair = ReleasePair(logs[i], logs[i + 1], args.n, labels[i], labels[i + 1])
        cands = _candidates(args.candidates, (logs[i], logs[i + 1]), args.bk_max_len)
        ind = fa_ca_ba(pair, cands, max_len=args.bk_max_len, analyzer=PairAnalyzer(pair))
        reports = {}
        for attack in ("fa", "ca", "ba"):
            bk = getattr(ind, f"argmin_bk_{attack}")
            reports[attack] = attack_report(pair, bk).to_dict()
        pairs_out.append({
            "earlier": labels[i],
            "later": labels[i + 1],
            "indicators": ind.to_dict(),
            "reports": reports,
        })
        worst = max(worst, ind.fc, ind.cc, ind.bc)
        print(f"{labels[i]} -> {labels[i + 1]}: ka1={ind.ka1} ka2={ind.ka2} fa={ind.fa} ca={ind.ca} "
              f"ba={ind.ba} fc={ind.fc:.4f} cc={ind.cc:.4f} bc={ind.bc:.4f}")

    result = {"n": args.n, "bk_max_len": args.bk_max_len, "candidates": args.candidates, "pairs": pairs_out}
    if args.chain and len(logs) >= 2:
        chain = ReleaseChain(logs, args.n, labels)
        cands = _candidates(args.candidates, logs, args.bk_max_len)
        if cands is None:
            cands = sorted({c for lg in logs for c in enumerate_bk_candidates(lg, args.bk_max_len)},
                           key=lambda s: (len(s), s))
        result["chain"] = chain_report(chain, cands)
    _dump_json(result, os.path.join(args.out, "audit.json"))

    if args.max_poc is not None and worst > args.max_poc:
        print(f"PoC {worst:.4f} exceeds --max-poc {args.max_poc}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_scenario(args) -> int:
    spec = ScenarioSpec(
        mode=args.mode,
        percentages=tuple(args.percents or ()),
        k=args.k,
        n_values=tuple(args.n),
        bk_max_len=args.bk_max_len,
        seed=args.seed,
        sensitive_attr=args.sensitive,
        drop_partial=args.drop_partial,
    )
    events = parse_raw_log(args.log, args.format)
    rows = run_scenario(spec, events)
    csv_path, json_path = write_outputs(rows, args.out)
    print(f"{len(rows)} rows -> {csv_path}, {json_path}")
    return EXIT_OK


def _verify_pair(pair: ReleasePair, bk_max_len: int, limit: int, name: str) -> int:
    """Number of disagreements not explained by failed preconditions."""
    bks = sorted(set(enumerate_bk_candidates(pair.earlier, bk_max_len))
                 | set(enumerate_bk_candidates(pair.later, bk_max_len)), key=lambda s: (len(s), s))
    bad = 0
    for row in compare_engine(pair, bks, limit):
        status = "agree" if row.agree else ("precondition-fails" if not row.precondition else "DISAGREE")
        bad += not row.acceptable
        print(f"{name}\t{'>'.join(row.bk)}\t{row.attack}\t{row.engine}\t{row.oracle}\t{status}")
    return bad


def cmd_verify(args) -> int:
    print("pair\tbk\tattack\tengine\toracle\tstatus")
    bad = 0
    if args.random:
        for i in range(args.random):
            pair = random_release_pair(args.seed + i, n=args.n)
            try:
                bad += _verify_pair(pair, args.bk_max_len, args.limit, f"seed{args.seed + i}")
            except LogShieldError as exc:
                if isinstance(exc, LimitExceeded):
                    raise
                print(f"seed{args.seed + i}\t-\t-\t-\t-\tskipped ({exc})")
    else:
        if len(args.releases) != 2:
            print("verify needs exactly two release files (or --random)", file=sys.stderr)
            return EXIT_ERROR
        r1, r2 = (read_release(p, args.n) for p in args.releases)
        bad = _verify_pair(ReleasePair(r1.log, r2.log, args.n), args.bk_max_len, args.limit, "pair")
    print(f"unexplained disagreements: {bad}")
    return EXIT_OK if bad == 0 else EXIT_GATE


def cmd_synth(args) -> int:
    events = hospital_log(args.cases, seed=args.seed, sensitive_attr=args.sensitive)
    write_events_csv(events, args.output, args.sensitive)
    print(f"{args.cases} cases, {len(events)} events -> {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="logshield", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a raw event log and write the normalized CSV")
    p.add_argument("--format", choices=("csv", "xes-lite"), default="csv")
    p.add_argument("--sensitive", required=True, help="case attribute holding the sensitive value")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("anonymize", help="suppression-based anonymization of a normalized log")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--bk-max-len", type=_positive, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--id-prefix", default="", help="prefix for dummy case ids")
    p.add_argument("--sensitive", default=None, help="sensitive column (default: fourth column)")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_anonymize)

    p = sub.add_parser("audit", help="attack consecutive anonymized releases")
    p.add_argument("--n", type=_non_negative, required=True)
    p.add_argument("--bk-max-len", type=_positive, default=5)
    p.add_argument("--max-poc", type=float, default=None, help="exit 2 when any PoC exceeds this")
    p.add_argument("--chain", action="store_true", help="also report optimal attacks over the whole chain")
    p.add_argument("--candidates", choices=("occurring", "alphabet"), default="occurring",
                   help="subsequences occurring in the releases, or every sequence over their alphabet")
    p.add_argument("--out", required=True)
    p.add_argument("releases", nargs="+")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("scenario", help="run a continuous-publishing experiment")
    p.add_argument("--mode", choices=("I", "II"), required=True)
    p.add_argument("--percents", type=_int_list, default=None)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--n", type=_int_list, default=[1])
    p.add_argument("--bk-max-len", type=_positive, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "xes-lite"), default="csv")
    p.add_argument("--sensitive", default="disease")
    p.add_argument("--drop-partial", action="store_true", help="leave out cases still running at a cutoff")
    p.add_argument("--out", required=True)
    p.add_argument("log")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("verify", help="cross-check the attack engine against brute force")
    p.add_argument("--n", type=_non_negative, required=True)
    p.add_argument("--limit", type=_positive, default=DEFAULT_LINKER_LIMIT)
    p.add_argument("--bk-max-len", type=_positive, default=3)
    p.add_argument("--random", type=_non_negative, default=0, help="check this many random 6-case pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("releases", nargs="*")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("synth", help="write a synthetic hospital event log")
    p.add_argument("--cases", type=_positive, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sensitive", default="disease")
    p.add_argument("output")
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except LimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (LogShieldError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
