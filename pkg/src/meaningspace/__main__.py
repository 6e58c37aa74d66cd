"""Command line entry: repl, run <scenario>, export <target> <path>, serve."""

import argparse
import sys

from .comprehension import ComprehensionConfig
from .lexicon import load_or_seed
from .regions import set_default_resolution
from .service import Engine, export_figure, repl_loop, run_scenario, serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="meaningspace",
        description="fuzzy-region semantics engine for controlled phrases")
    parser.add_argument("--lexicon", help="lexicon document path "
                        "(falls back to $MEANING_LEXICON, then the seed)")
    parser.add_argument("--comprehension-config",
                        help="JSON file with check thresholds")
    parser.add_argument("--grid-resolution", type=int, default=None,
                        help="samples per grid axis (default 64)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("repl", help="interactive dialog loop")

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario")

    p_exp = sub.add_parser("export", help="export a region as a P2 graymap")
    p_exp.add_argument("target", help="word, word:NAME, or axis:ID")
    p_exp.add_argument("path")

    p_srv = sub.add_parser("serve", help="serve the session API")
    p_srv.add_argument("--bind", default="127.0.0.1:8377",
                       help="host:port (default 127.0.0.1:8377)")

    args = parser.parse_args(argv)
    if args.grid_resolution:
        set_default_resolution(args.grid_resolution)
    config = None
    if args.comprehension_config:
        config = ComprehensionConfig.load(args.comprehension_config)

    if args.command == "repl":
        store = load_or_seed(args.lexicon)
        repl_loop(store, config)
        return 0
    if args.command == "run":
        store = load_or_seed(args.lexicon)
        return run_scenario(args.scenario, store)
    if args.command == "export":
        store = load_or_seed(args.lexicon)
        sidecar = export_figure(args.target, args.path, store)
        print(f"wrote {args.path} ({'x'.join(str(n) for n in sidecar['resolution'])})")
        return 0
    if args.command == "serve":
        store = load_or_seed(args.lexicon)
        engine = Engine(store, config)
        server = serve(args.bind, engine, block=False)
        host, port = server.server_address[:2]
        print(f"session API on http://{host}:{port}", flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
