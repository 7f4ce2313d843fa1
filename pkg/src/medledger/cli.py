"""Operator command line.

Subcommands: init, keygen, register, verify, sim, bench, serve, dump,
openapi. Exit codes: 0 success, 1 verification or convergence failure,
2 usage or IO error.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from . import bench as bench_mod
from . import sim as sim_mod
from .chain import VerificationReport, verify_chain
from .config import ConfigError
from .deployment import AlreadyInitialized, Deployment, NotInitialized
from .keys import KeyPair, identity_id, load_keypair_file, save_keypair_file
from .ledger import CorruptLog, read_chain_log
from .models import MAX_DIFFICULTY_BITS, ROLES

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _print_report(report: VerificationReport) -> None:
    if report.ok:
        print("ok: chain verifies")
        return
    print(f"FAILED: {len(report.failures)} failure(s)")
    for failure in report.failures:
        print(f"  block {failure.block_index}: {failure.reason}")


def _parse_size(text: str) -> int:
    cleaned = text.strip().upper().replace(" ", "")
    multiplier = 1
    if cleaned.endswith("KB"):
        multiplier, cleaned = 1 << 10, cleaned[:-2]
    elif cleaned.endswith("MB"):
        multiplier, cleaned = 1 << 20, cleaned[:-2]
    elif cleaned.endswith("B"):
        cleaned = cleaned[:-1]
    if not cleaned.isdigit():
        raise ValueError(f"bad size {text!r}")
    return int(cleaned) * multiplier


def cmd_init(args: argparse.Namespace) -> int:
    if not 0 <= args.difficulty <= MAX_DIFFICULTY_BITS:
        print(
            f"error: difficulty must be in 0..={MAX_DIFFICULTY_BITS}, got {args.difficulty}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    deployment = Deployment.init_dir(
        args.dir,
        difficulty_bits=args.difficulty,
        auto_mine=not args.no_auto_mine,
        listen_addr=args.listen,
    )
    deployment.close()
    print(f"initialized deployment in {Path(args.dir).resolve()}")
    return EXIT_OK


def cmd_keygen(args: argparse.Namespace) -> int:
    if args.role not in ROLES:
        print(f"error: role must be one of {', '.join(ROLES)}", file=sys.stderr)
        return EXIT_USAGE
    keypair = KeyPair.generate()
    out = Path(args.out) if args.out else Path(f"{args.name}.key")
    save_keypair_file(out, keypair, args.role, args.name)
    print(identity_id(keypair.public_key).hex())
    print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


def cmd_register(args: argparse.Namespace) -> int:
    keypair, role, name = load_keypair_file(args.keyfile)
    with Deployment.open_dir(args.dir) as deployment:
        _, receipt = deployment.register_identity(role, name, keypair=keypair)
        where = f"block {receipt.block_index}" if receipt.block_index is not None else "pending"
        print(identity_id(keypair.public_key).hex())
        print(f"registered {name!r} as {role} ({where})", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        chain = read_chain_log(args.chain)
    except CorruptLog as exc:
        print(f"FAILED: {exc}")
        return EXIT_FAILED
    report = verify_chain(chain, expected_difficulty_bits=args.difficulty)
    _print_report(report)
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_sim(args: argparse.Namespace) -> int:
    text = Path(args.scenario).read_text()
    config, directives = sim_mod.parse_scenario(text)
    if args.seed is not None:
        config.rng_seed = args.seed
    world = sim_mod.build_world(config, directives)
    quiesced = True
    try:
        sim_mod.run_until_quiescent(world, args.max_ticks)
    except sim_mod.NotQuiescent:
        quiesced = False
    events = list(world.events)
    out = Path(args.out) if args.out else Path(args.scenario).with_suffix(".events.csv")
    sim_mod.write_events_csv(events, out)
    if args.plot:
        from . import report

        report.sim_timeline_figure(events, config.n_nodes, args.plot)
    converged = world.converged()
    tips = {n.tip_digest().hex()[:12] for n in world.nodes}
    print(
        f"nodes={config.n_nodes} ticks={world.tick} events={len(events)} "
        f"converged={'true' if converged else 'false'} tips={','.join(sorted(tips))}"
    )
    print(f"wrote {out}", file=sys.stderr)
    if not quiesced:
        print("error: not quiescent before max ticks", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK if converged else EXIT_FAILED


def cmd_bench(args: argparse.Namespace) -> int:
    sizes = [_parse_size(part) for part in args.sizes.split(",")]
    if args.url:
        result = bench_mod.run_bench_http(args.records, sizes, args.url)
    else:
        result = bench_mod.run_bench(args.records, sizes, difficulty_bits=args.difficulty)
    out = Path(args.out)
    bench_mod.write_bench_csv(result, out)
    for row in result.rows:
        print(
            f"{row.size_bytes:>9} {row.op:<8} median={row.median_ms:9.3f}ms "
            f"p95={row.p95_ms:9.3f}ms"
        )
    print(f"wrote {out}", file=sys.stderr)
    if args.plot:
        from . import report

        figure = report.bench_figure(result, args.plot)
        print(f"wrote {figure}", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    deployment = Deployment.open_dir(args.dir)
    ui_dir = args.ui if args.ui else _default_ui_dir()
    app = create_app(deployment, ui_dir=ui_dir, enable_test_hooks=args.test_hooks)
    host = args.host or deployment.config.host
    port = args.port if args.port is not None else deployment.config.port
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    finally:
        deployment.close()
    return EXIT_OK


def _default_ui_dir() -> str | None:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return str(candidate) if candidate.is_dir() else None


def cmd_dump(args: argparse.Namespace) -> int:
    with Deployment.open_dir(args.dir) as deployment:
        sys.stdout.write(deployment.state_dump())
    return EXIT_OK


def cmd_openapi(args: argparse.Namespace) -> int:
    from .service import create_app

    with tempfile.TemporaryDirectory() as tmp:
        deployment = Deployment.init_dir(Path(tmp) / "schema", difficulty_bits=0)
        try:
            schema = create_app(deployment).openapi()
        finally:
            deployment.close()
    text = json.dumps(schema, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="medledger",
        description="Blockchain-anchored electronic health record toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="scaffold a deployment directory")
    p.add_argument("--dir", required=True)
    p.add_argument("--difficulty", type=int, default=12)
    p.add_argument("--no-auto-mine", action="store_true")
    p.add_argument("--listen", default=None, help="host:port for serve")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("keygen", help="generate a keypair file")
    p.add_argument("--role", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("register", help="register a keypair file's identity")
    p.add_argument("--dir", required=True)
    p.add_argument("--keyfile", required=True)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("verify", help="verify a persisted chain log")
    p.add_argument("--chain", required=True)
    p.add_argument("--difficulty", type=int, default=None,
                   help="also require every non-genesis block to use this difficulty")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sim", help="run a scenario on the node simulator")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="event CSV path")
    p.add_argument("--plot", default=None, help="also render a timeline PNG")
    p.add_argument("--max-ticks", type=int, default=10_000)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("bench", help="upload vs download latency benchmark")
    p.add_argument("--records", type=int, default=20)
    p.add_argument("--sizes", default="1KB,64KB,1MB")
    p.add_argument("--difficulty", type=int, default=12)
    p.add_argument("--out", default="bench.csv")
    p.add_argument("--plot", default=None, help="also render a comparison PNG")
    p.add_argument("--url", default=None, help="benchmark a running service instead")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--dir", required=True)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--ui", default=None, help="static UI directory to mount at /app")
    p.add_argument("--test-hooks", action="store_true")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("dump", help="print the canonical state dump")
    p.add_argument("--dir", required=True)
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("openapi", help="emit the service's OpenAPI schema")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_openapi)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except sim_mod.ScenarioParseError as exc:
        print(f"error: scenario {exc}", file=sys.stderr)
        return EXIT_USAGE
    except bench_mod.ServiceUnreachable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        AlreadyInitialized,
        NotInitialized,
        ConfigError,
        CorruptLog,
        FileNotFoundError,
        IsADirectoryError,
        PermissionError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
