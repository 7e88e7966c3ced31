"""Command-line front end.

Subcommands map one-to-one onto library operations and speak line-delimited
UTF-8 JSON on their input and output streams, so they compose in shell
pipelines and under trainer subprocess plumbing. Report-style commands
(stats, scan) additionally render a histogram figure next to the output file
when one is given.
"""

import argparse
import json
import socketserver
import sys
from pathlib import Path

from . import interp, pipeline, questions, rewards, syntax, tracing
from .errors import ConfigError, LexError, ParseError


def _limits(args):
    try:
        return interp.ExecutionLimits(fuel=args.fuel,
                                      max_output_chars=args.max_output)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _add_exec_flags(p):
    p.add_argument("--fuel", type=int, default=interp.DEFAULT_FUEL,
                   help="statement execution budget")
    p.add_argument("--max-output", type=int, default=interp.DEFAULT_MAX_OUTPUT,
                   help="captured output limit in characters")


def _add_io_flags(p, input_help="input records, '-' for stdin"):
    p.add_argument("-i", "--input", default="-", help=input_help)
    p.add_argument("-o", "--output", default="-",
                   help="output destination, '-' for stdout")


def _read_text(path):
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write_text(path, text):
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _input_lines(path):
    return _read_text(path).splitlines()


def _json_line(obj):
    return json.dumps(obj, ensure_ascii=False)


def _error_record(exc):
    rec = {"error": {"kind": type(exc).__name__, "message": str(exc)}}
    line = getattr(exc, "line", None)
    if line is not None:
        rec["error"]["line"] = line
    return rec


def _records(lines):
    for raw in lines:
        if raw.strip():
            yield json.loads(raw)


# ---------------------------------------------------------------------------
# subcommands

def cmd_trace(args):
    source = _read_text(args.file)
    try:
        program, tree = syntax.load_program(source)
        result = interp.execute(program, tree, args.call,
                                limits=_limits(args))
    except (LexError, ParseError) as exc:
        _write_text(args.output, _json_line(_error_record(exc)) + "\n")
        return 1
    _write_text(args.output, tracing.serialize_trace(result.trace))
    return 0 if result.status == "ok" else 1


def cmd_ask(args):
    source = _read_text(args.file)
    try:
        program, tree = syntax.load_program(source)
        qset, result = questions.questions_for_call(
            program, tree, args.call, limits=_limits(args),
            cap=args.cap, seed=args.seed)
    except (LexError, ParseError) as exc:
        _write_text(args.output, _json_line(_error_record(exc)) + "\n")
        return 1
    if result.status != "ok":
        _write_text(args.output, _json_line(
            {"error": {"kind": "ExecutionFailed", "message": result.status}}) + "\n")
        return 1
    _write_text(args.output, questions.serialize_questions(qset))
    if args.prompt is not None:
        _write_text(args.prompt, questions.render_prompt(program, qset, tree))
    return 0


def _score_kwargs(args):
    return {"default_mode": args.mode, "default_alpha": args.alpha,
            "limits": _limits(args), "lenient_cf": not args.strict_cf,
            "strict_df": args.strict_df}


def cmd_score(args):
    out_lines = rewards.score_stream(_input_lines(args.input),
                                     **_score_kwargs(args))
    _write_text(args.output, "".join(line + "\n" for line in out_lines))
    return 0


def cmd_mutate(args):
    pool = pipeline.load_pool(_read_text(args.pool))
    limits = _limits(args)
    out = []
    for raw in _input_lines(args.input):
        if not raw.strip():
            continue
        try:
            inst = pipeline.instance_from_record(json.loads(raw))
            mutants = pipeline.mutate_inputs(inst, pool, count=args.count,
                                             seed=args.seed, limits=limits)
        except (json.JSONDecodeError, LexError, ParseError) as exc:
            sys.stderr.write(_json_line(_error_record(exc)) + "\n")
            continue
        out.extend(_json_line(pipeline.instance_to_record(m)) + "\n"
                   for m in mutants)
    _write_text(args.output, "".join(out))
    return 0


def cmd_filter(args):
    limits = _limits(args)
    oracle = None
    if args.difficulty:
        if args.oracle is None:
            raise ConfigError("difficulty filtering needs --oracle")
        oracle = pipeline.make_oracle(args.oracle, seed=args.seed,
                                      limits=limits)
    kept = []
    for raw in _input_lines(args.input):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
            inst = pipeline.instance_from_record(rec)
        except (json.JSONDecodeError, ParseError) as exc:
            sys.stderr.write(_json_line(_error_record(exc)) + "\n")
            continue
        if args.execution:
            decision = pipeline.filter_execution(inst, limits=limits)
        else:
            try:
                decision = pipeline.filter_difficulty(
                    inst, oracle, trials=args.trials,
                    max_pass=args.max_pass, limits=limits)
            except (LexError, ParseError, ConfigError) as exc:
                sys.stderr.write(_json_line(_error_record(exc)) + "\n")
                continue
        if decision.keep:
            out = dict(rec)
            if decision.pass_count is not None:
                out["pass_count"] = decision.pass_count
            kept.append(_json_line(out) + "\n")
        else:
            drop = {"id": inst.id, "drop": decision.reason}
            if decision.pass_count is not None:
                drop["pass_count"] = decision.pass_count
            sys.stderr.write(_json_line(drop) + "\n")
    _write_text(args.output, "".join(kept))
    return 0


def _save_figure(make_axes, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6, 4))
    make_axes(ax)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def cmd_stats(args):
    records = list(_records(_input_lines(args.input)))
    summary = pipeline.corpus_stats(records)
    _write_text(args.output, json.dumps(summary, ensure_ascii=False,
                                        indent=2) + "\n")
    if args.output != "-":
        hist = summary["difficulty_histogram"]
        fig_path = Path(args.output).with_name(
            Path(args.output).stem + "_difficulty.png")

        def draw(ax):
            xs = list(range(11))
            ax.bar(xs, [hist[str(x)] for x in xs], color="#4878a8")
            ax.set_xlabel("oracle pass count (of 10 trials)")
            ax.set_ylabel("instances")
            ax.set_title("difficulty distribution")
            ax.set_xticks(xs)

        _save_figure(draw, fig_path)
    return 0


def cmd_scan(args):
    vector_mode = args.train is not None or args.bench is not None
    token_mode = args.blacklist_scan
    if vector_mode == token_mode:
        raise ConfigError(
            "scan needs either --train/--bench vectors or --blacklist")
    if vector_mode:
        if args.train is None or args.bench is None:
            raise ConfigError("vector scan needs both --train and --bench")
        train = pipeline.read_vectors(_read_text(args.train))
        bench = pipeline.read_vectors(_read_text(args.bench))
        report = pipeline.contamination_scan(train, bench,
                                             threshold=args.threshold)
        lines = []
        for i, sim in enumerate(report.sims):
            lines.append(_json_line({"row": i, "max_sim": sim,
                                     "flagged": i in report.flagged}))
        lines.append(_json_line({"threshold": report.threshold,
                                 "flagged": list(report.flagged),
                                 "skipped_train": list(report.skipped_train),
                                 "skipped_bench": list(report.skipped_bench)}))
        _write_text(args.output, "".join(line + "\n" for line in lines))
        if args.output != "-":
            sims = [s for s in report.sims if s is not None]
            fig_path = Path(args.output).with_name(
                Path(args.output).stem + "_sims.png")

            def draw(ax):
                ax.hist(sims, bins=40, range=(-1.0, 1.0), color="#4878a8")
                ax.axvline(report.threshold, color="#b04030", linestyle="--",
                           label=f"threshold {report.threshold}")
                ax.set_xlabel("max cosine similarity vs benchmark")
                ax.set_ylabel("training rows")
                ax.set_title("contamination scan")
                ax.legend()

            _save_figure(draw, fig_path)
        return 0
    blacklist = None
    if args.blacklist:
        blacklist = syntax.load_blacklist(_read_text(args.blacklist))
    out = []
    for rec in _records(_input_lines(args.input)):
        code = rec.get("code", "")
        try:
            verdict = syntax.scan_blacklist(code, blacklist)
            out.append(_json_line({"id": rec.get("id"),
                                   "matches": list(verdict.matches),
                                   "flagged": verdict.flagged}))
        except LexError as exc:
            out.append(_json_line({"id": rec.get("id"),
                                   "error": {"kind": "LexError",
                                             "message": str(exc)}}))
    _write_text(args.output, "".join(line + "\n" for line in out))
    return 0


def cmd_case(args):
    blacklist = None
    if args.blacklist:
        blacklist = syntax.load_blacklist(_read_text(args.blacklist))
    out = []
    prompts = []
    for rec in _records(_input_lines(args.input)):
        solution = rec.get("solution", "")
        if "example" in rec:
            ex = rec["example"]
            example = pipeline.ExampleBlock(
                statements=tuple(ex.get("statements", ())),
                stdout=ex.get("stdout", ""))
        else:
            example = pipeline.extract_example(rec.get("prompt", ""))
        result = pipeline.build_library_io_case(
            example, solution, blacklist=blacklist,
            prompt_text=rec.get("prompt"))
        if result.accepted:
            case = {"id": rec.get("id")}
            case.update(result.case)
            out.append(_json_line(case))
            prompts.append(pipeline.render_case_problem(result.case))
        else:
            out.append(_json_line({"id": rec.get("id"),
                                   "rejected": result.rejected}))
    _write_text(args.output, "".join(line + "\n" for line in out))
    if args.prompt is not None:
        _write_text(args.prompt, "\n".join(prompts))
    return 0


def cmd_serve(args):
    kwargs = _score_kwargs(args)
    if args.stdio:
        for raw in sys.stdin:
            for line in rewards.score_stream([raw], **kwargs):
                sys.stdout.write(line + "\n")
                sys.stdout.flush()
        return 0

    host, _, port_text = args.listen.rpartition(":")
    try:
        port = int(port_text)
    except ValueError:
        raise ConfigError(f"--listen needs HOST:PORT, got {args.listen!r}") from None

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            for raw in self.rfile:
                for line in rewards.score_stream([raw], **kwargs):
                    self.wfile.write((line + "\n").encode("utf-8"))
                    self.wfile.flush()

    class Server(socketserver.TCPServer):
        allow_reuse_address = True

    with Server((host or "127.0.0.1", port), Handler) as server:
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser():
    parser = argparse.ArgumentParser(
        prog="tracekit",
        description="traced execution, white-box questions, reward scoring, "
                    "and dataset pipeline for a small imperative language")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="execute a program and emit its trace")
    p.add_argument("file", help="program source file")
    p.add_argument("--call", required=True, help="entry call, literal args")
    _add_exec_flags(p)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("ask", help="generate white-box questions for a call")
    p.add_argument("file")
    p.add_argument("--call", required=True)
    p.add_argument("--cap", type=int, default=questions.DEFAULT_CAP,
                   help="max sampled questions")
    p.add_argument("--seed", type=int, default=0)
    _add_exec_flags(p)
    p.add_argument("--prompt", help="also write the rendered prompt here")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_ask)

    p = sub.add_parser("score", help="score answer records from a stream")
    p.add_argument("--mode", default="whitebox",
                   choices=["whitebox", "io", "oi", "gen"],
                   help="default mode for records without one")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--strict-cf", action=argparse.BooleanOptionalAction,
                   default=True,
                   help="require verbatim indentation on next-statement answers")
    p.add_argument("--strict-df", action=argparse.BooleanOptionalAction,
                   default=False,
                   help="require exact value strings on value-type answers")
    _add_exec_flags(p)
    _add_io_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("mutate", help="grow new instances by input mutation")
    p.add_argument("--pool", required=True,
                   help='JSON file {"integers": [...], "strings": [...]}')
    p.add_argument("--count", type=int, default=3,
                   help="mutants requested per instance")
    p.add_argument("--seed", type=int, default=0)
    _add_exec_flags(p)
    _add_io_flags(p)
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("filter",
                       help="keep instances that execute, or that a solver "
                            "oracle finds hard")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--execution", action="store_true")
    mode.add_argument("--difficulty", action="store_true")
    p.add_argument("--oracle",
                   help="always-correct | always-wrong | bernoulli:P | cmd:ARGV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=pipeline.DEFAULT_TRIALS)
    p.add_argument("--max-pass", type=int, default=pipeline.DEFAULT_MAX_PASS)
    _add_exec_flags(p)
    _add_io_flags(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("stats", help="aggregate corpus statistics")
    _add_io_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("scan",
                       help="contamination scan over vectors, or blacklist "
                            "scan over code records")
    p.add_argument("--train", help="training vector file")
    p.add_argument("--bench", help="benchmark vector file")
    p.add_argument("--threshold", type=float,
                   default=pipeline.DEFAULT_THRESHOLD)
    p.add_argument("--blacklist", nargs="?", const="", dest="blacklist",
                   help="token scan mode; optional custom keyword file")
    _add_io_flags(p)
    p.set_defaults(func=cmd_scan, blacklist_scan=False)

    p = sub.add_parser("case",
                       help="build library-involved output-prediction cases")
    p.add_argument("--blacklist", help="custom keyword file")
    p.add_argument("--prompt", help="also write rendered problems here")
    _add_io_flags(p)
    p.set_defaults(func=cmd_case)

    p = sub.add_parser("serve", help="long-running batch scorer")
    transport = p.add_mutually_exclusive_group(required=True)
    transport.add_argument("--listen", help="HOST:PORT to accept connections")
    transport.add_argument("--stdio", action="store_true",
                           help="speak the record protocol on stdio")
    p.add_argument("--mode", default="whitebox",
                   choices=["whitebox", "io", "oi", "gen"])
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--strict-cf", action=argparse.BooleanOptionalAction,
                   default=True)
    p.add_argument("--strict-df", action=argparse.BooleanOptionalAction,
                   default=False)
    _add_exec_flags(p)
    p.set_defaults(func=cmd_serve)

    return parser


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "scan":
        args.blacklist_scan = args.blacklist is not None
    try:
        return args.func(args)
    except (ConfigError, LexError, ParseError) as exc:
        sys.stderr.write(f"tracekit: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"tracekit: {exc}\n")
        return 1
    except json.JSONDecodeError as exc:
        sys.stderr.write(f"tracekit: bad JSON input: {exc}\n")
        return 1
    except BrokenPipeError:
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
