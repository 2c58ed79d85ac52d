"""Command-line entry point.

    taskscope parse <file>              validate DSL source, print canonical form
    taskscope gen <case.json>           generate the program for a task
    taskscope slice <case-or-dsl>       print the derived slices
    taskscope rules <case-or-dsl>       print rule counts per call key
    taskscope run <case.json>           run a case (benign + its injections)
    taskscope bench <suites-dir>        run every suite, write the report
    taskscope serve                     gateway + servers until interrupted
    taskscope keys init                 generate deployment keys into config

Every command exits nonzero on error with one machine-parseable line on
stderr: ``error: <code>: <message>``.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import __version__
from .bench import build_report, render_report, run_case, run_suites, save_run
from .codegen import FixtureBackend, LiveBackend, generate_program, sign_task
from .config import load_config
from .dsl import parse_program, render_program
from .environment.services import build_registry
from .environment.suites import SuiteError, load_suite, load_suites, packaged_suites_root
from .keys import USER, KeyRing
from .netproto.deployment import MULTI_HOST, SINGLE_HOST, fixture_backend
from .rulegen import compile_rules
from .slicer import derive_slices, render_slice


def fail(code: str, message: str, status: int = 1) -> None:
    click.echo(f"error: {code}: {message}", err=True)
    sys.exit(status)


def _load_case_file(path: str):
    from .environment.suites import _load_case

    p = Path(path)
    if not p.exists():
        fail("not-found", f"no such file: {path}")
    try:
        return _load_case(p, p.parent.name or "adhoc")
    except SuiteError as exc:
        fail("bad-suite-file", str(exc))


def _program_and_registry(path: str):
    """Accept either a suite case (.json) or raw DSL source."""
    p = Path(path)
    if p.suffix == ".json":
        case = _load_case_file(path)
        registry = build_registry(list(case.services))
        source = case.fixture_source
    else:
        if not p.exists():
            fail("not-found", f"no such file: {path}")
        registry = build_registry()
        source = p.read_text()
    program = parse_program(source, registry)
    if isinstance(program, list):
        for v in program:
            click.echo(f"violation: {v}", err=True)
        fail("invalid-program", f"{len(program)} violation(s)")
    return program, registry


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Task-scoped authorization for tool-calling agents."""


@main.command("parse")
@click.argument("file")
def cmd_parse(file: str) -> None:
    """Validate DSL source and print its canonical rendering."""
    program, _ = _program_and_registry(file)
    click.echo(render_program(program), nl=False)


@main.command("gen")
@click.argument("task_file")
@click.option("--backend", "backend_kind", type=click.Choice(["fixture", "live"]), default="fixture")
@click.option("--config", "config_path", default=None, help="config file path")
def cmd_gen(task_file: str, backend_kind: str, config_path: str | None) -> None:
    """Generate the task program via the configured backend."""
    cfg = load_config(config_path)
    case = _load_case_file(task_file)
    registry = build_registry(list(case.services))
    ring = KeyRing.generate([USER], seed="cli")
    task = sign_task(case.task_id, case.text, case.context, ring.private(USER))
    if backend_kind == "fixture":
        backend: object = fixture_backend([case])
        corpus = cfg.backend.get("corpus")
        if corpus:
            backend = FixtureBackend.from_dir(cfg.resolve(corpus))
    else:
        live = cfg.backend.get("live", {})
        if not live.get("endpoint"):
            fail("no-live-backend", "configure backend.live.endpoint and backend.live.model")
        backend = LiveBackend(live["endpoint"], live.get("model", ""),
                              live.get("api_key_env", "TASKSCOPE_API_KEY"))
    result = generate_program(task, registry, backend, cfg.cost_table)
    click.echo(render_program(result.program), nl=False)
    click.echo(f"# backend={result.backend_id} fallback={result.fallback_used} "
               f"prompt_tokens={result.usage.prompt_tokens} "
               f"completion_tokens={result.usage.completion_tokens} cost_usd={result.cost_usd}",
               err=True)
    if result.fallback_used:
        sys.exit(3)


@main.command("slice")
@click.argument("file")
def cmd_slice(file: str) -> None:
    """Print every derived slice in let/assert/call form."""
    program, _ = _program_and_registry(file)
    for s in derive_slices(program):
        click.echo(f"# slice for {s.tool} (#{s.ordinal})")
        click.echo(render_slice(s))


@main.command("rules")
@click.argument("file")
def cmd_rules(file: str) -> None:
    """Print compiled rule counts per call key."""
    program, _ = _program_and_registry(file)
    rules = compile_rules(derive_slices(program))
    for key, count in rules.rule_counts().items():
        click.echo(f"{key}: {count} rule(s)")
    click.echo(f"total: {rules.rule_count}")


@main.command("run")
@click.argument("case_file")
@click.option("--multi-host", is_flag=True, default=False)
@click.option("--report-dir", default=None, help="write audit records here")
def cmd_run(case_file: str, multi_host: bool, report_dir: str | None) -> None:
    """Run one case: the benign script, then each forced injection."""
    case = _load_case_file(case_file)
    mode = MULTI_HOST if multi_host else SINGLE_HOST
    results = [run_case(case, None, mode=mode)]
    results += [run_case(case, injection, mode=mode) for injection in case.injections]
    failures = 0
    for r in results:
        if r.infra_error:
            failures += 1
            click.echo(f"{r.task_id} [{r.mode}:{r.label}] infra-error: {r.infra_error}")
            continue
        verdicts = ", ".join(f"{s['tool']}={s['decision']}" for s in r.steps)
        click.echo(f"{r.task_id} [{r.mode}{':' + r.label if r.label else ''}] "
                   f"fp={r.fp} fn={r.fn} rules={r.rule_count}  {verdicts}")
        failures += r.fp + r.fn
    if report_dir:
        report = build_report(results)
        out = save_run(results, report, report_dir)
        click.echo(f"saved: {out}")
    if failures:
        fail("imprecise", f"{failures} scoring failure(s)")


@main.command("bench")
@click.argument("suites_dir", required=False)
@click.option("--report-dir", default="results")
@click.option("--multi-host", is_flag=True, default=False)
def cmd_bench(suites_dir: str | None, report_dir: str, multi_host: bool) -> None:
    """Run all suites and write the precision + cost report."""
    root = Path(suites_dir) if suites_dir else packaged_suites_root()
    try:
        suites = load_suites(root)
        if not suites:  # a single suite directory also works
            suites = {root.name: load_suite(root)}
    except SuiteError as exc:
        fail("bad-suite", str(exc))
    results = run_suites(suites, mode=MULTI_HOST if multi_host else SINGLE_HOST)
    report = build_report(results)
    click.echo(render_report(report), nl=False)
    out = save_run(results, report, report_dir)
    click.echo(f"saved: {out}")
    if report.total_fp or report.total_fn or report.infra_errors:
        fail("imprecise", f"fp={report.total_fp} fn={report.total_fn} "
                          f"infra={len(report.infra_errors)}")


@main.command("serve")
@click.option("--config", "config_path", default=None)
@click.option("--suites", "suites_dir", default=None, help="cases to offer (default: packaged)")
@click.option("--port", default=None, type=int, help="gateway HTTP port")
@click.option("--ui", "ui_dir", default=None, help="serve a built dashboard from this directory")
@click.option("--token", "session_token", default=None,
              help="session token required on mutating endpoints (default: open, localhost demo)")
def cmd_serve(config_path: str | None, suites_dir: str | None, port: int | None,
              ui_dir: str | None, session_token: str | None) -> None:
    """Start the gateway and services; run until interrupted."""
    from .netproto.serve import ServeApp

    cfg = load_config(config_path)
    root = Path(suites_dir) if suites_dir else packaged_suites_root()
    cases = [case for suite in load_suites(root).values() for case in suite]
    if not cases:
        fail("no-cases", f"no suite cases under {root}")
    http_port = port if port is not None else int(cfg.transport.get("gateway_http_port", 8642))
    static_root = ui_dir
    if static_root is None:
        bundled = Path.cwd() / "frontend" / "dist"
        static_root = str(bundled) if bundled.is_dir() else None
    app = ServeApp(cases, host=cfg.transport.get("host", "127.0.0.1"),
                   http_port=http_port, static_root=static_root, session_token=session_token)
    app.start()
    click.echo(f"gateway: http://{cfg.transport.get('host', '127.0.0.1')}:{app.http_port}/")
    if session_token:
        click.echo("mutating endpoints require the session token "
                   "(Authorization: Bearer <token> or ?token=)")
    click.echo(f"cases: {len(cases)}  (POST /tasks {{\"case\": id}} to launch)")
    try:
        import signal
        import threading

        stop = threading.Event()
        signal.signal(signal.SIGINT, lambda *_: stop.set())
        signal.signal(signal.SIGTERM, lambda *_: stop.set())
        stop.wait()
    finally:
        app.stop()


@main.group("keys")
def cmd_keys() -> None:
    """Key management."""


@cmd_keys.command("init")
@click.option("--config", "config_path", default=None)
@click.option("--services", default=None, help="comma-separated service ids (default: full catalog)")
@click.option("--seed", default=None, help="deterministic generation seed (tests only)")
def cmd_keys_init(config_path: str | None, services: str | None, seed: str | None) -> None:
    """Generate user + service keypairs and record the trust store."""
    cfg = load_config(config_path)
    names = services.split(",") if services else build_registry().services()
    ring = KeyRing.generate(sorted(set(names)) + [USER], seed=seed)
    keys_dir = cfg.resolve(cfg.keys_dir)
    ring.save(keys_dir)
    cfg.trust = {
        "user": ring.public_hex(USER),
        "services": {name: ring.public_hex(name) for name in ring.keys if name != USER},
    }
    cfg.save()
    click.echo(f"keys written to {keys_dir}; trust store in {cfg.path}")


if __name__ == "__main__":
    main()
