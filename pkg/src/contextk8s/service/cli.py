"""ctxctl: operator command line for a running Context API.

Most subcommands talk to the admin surface; ``validate``, ``seed`` and
``bench`` work offline and ``serve`` starts the service itself. Failures
exit non-zero with a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import httpx

from ..errors import ContextError
from ..manifest import parse_manifests, validate_cross_references

DEFAULT_ADMIN_URL = "http://127.0.0.1:8081"


class CliError(Exception):
    def __init__(self, body: dict):
        super().__init__(body.get("detail", ""))
        self.body = body


def _fail(code: str, detail: str, **extra) -> CliError:
    return CliError({"error": code, "detail": detail, **extra})


def _out(obj) -> None:
    if isinstance(obj, str):
        print(obj)
    else:
        print(json.dumps(obj, indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# Admin client
# ---------------------------------------------------------------------------


class AdminClient:
    def __init__(self, url: str, credential: str, timeout: float = 30.0):
        if not credential:
            raise _fail("MissingCredential", "set --admin-credential or CTX_ADMIN_CREDENTIAL")
        self._client = httpx.Client(base_url=url, timeout=timeout, headers={"X-Admin-Credential": credential})

    def call(self, method: str, path: str, **kw):
        try:
            r = self._client.request(method, path, **kw)
        except httpx.HTTPError as exc:
            raise _fail("Unreachable", f"{self._client.base_url}: {exc}") from None
        try:
            body = r.json()
        except ValueError:
            body = {"error": f"HTTP{r.status_code}", "detail": r.text}
        if r.status_code >= 400:
            if not isinstance(body, dict) or "error" not in body:
                body = {"error": f"HTTP{r.status_code}", "detail": json.dumps(body)}
            raise CliError(body)
        return body


def _admin(args) -> AdminClient:
    return AdminClient(args.admin_url, args.admin_credential)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _fail("ReadError", str(exc), path=path) from None


def _expand(paths) -> list[str]:
    out = []
    for p in paths:
        if p != "-" and Path(p).is_dir():
            out += sorted(str(x) for x in Path(p).iterdir() if x.suffix in (".yaml", ".yml"))
        else:
            out.append(p)
    return out


def cmd_validate(args) -> int:
    manifests = []
    for f in _expand(args.file):
        try:
            manifests.extend(parse_manifests(_read(f)))
        except ContextError as exc:
            raise CliError({**exc.to_dict(), "file": f}) from None
    problems = validate_cross_references(manifests) if len(manifests) > 1 else []
    if problems:
        raise _fail("CrossReferenceError", "; ".join(map(str, problems)))
    _out({"valid": [m.name for m in manifests]})
    return 0


def cmd_apply(args) -> int:
    client = _admin(args)
    applied = []
    for f in _expand(args.file):
        text = _read(f)
        try:
            parse_manifests(text)
        except ContextError as exc:
            raise CliError({**exc.to_dict(), "file": f}) from None
        applied += client.call("POST", "/admin/v1/manifests", content=text.encode("utf-8"),
                               headers={"Content-Type": "application/yaml"})["applied"]
    _out({"applied": applied})
    return 0


def cmd_get(args) -> int:
    _out(_admin(args).call("GET", f"/admin/v1/{args.kind}"))
    return 0


def cmd_audit(args) -> int:
    params = {k: v for k, v in (("session", args.session), ("user", args.user), ("kind", args.kind),
                                ("since", args.since), ("until", args.until)) if v}
    events = _admin(args).call("GET", "/admin/v1/audit", params=params)["events"]
    if args.json:
        _out(events)
    else:
        for e in events:
            who = e.get("user") or "-"
            print(f"{e['seq']:>6}  {e['at']}  {e['kind']:<20} {e.get('outcome', ''):<24} {who}")
    return 0


def cmd_approve(args) -> int:
    _out(_admin(args).call("POST", f"/admin/v1/approvals/{args.approval_id}/strong", json={"otp": args.otp}))
    return 0


def cmd_killswitch(args) -> int:
    if args.all:
        body = {"scope": "global"}
    elif args.session:
        body = {"scope": "session", "id": args.session}
    else:
        body = {"scope": "user", "id": args.user}
    _out(_admin(args).call("POST", "/admin/v1/killswitch", json=body))
    return 0


def cmd_reconcile(args) -> int:
    _out(_admin(args).call("POST", "/admin/v1/reconcile"))
    return 0


def cmd_seed(args) -> int:
    from ..bench.seed import generate_seed

    try:
        root = generate_seed(args.target, args.seed)
    except ContextError as exc:
        raise CliError(exc.to_dict()) from None
    _out({"seeded": str(root), "seed": args.seed})
    return 0


def cmd_bench(args) -> int:
    from ..bench.run import run_experiment

    report, table = run_experiment(args.experiment, root=args.root, seed=args.seed)
    if args.json:
        _out(report)
    else:
        print(table)
    if args.output:
        Path(args.output).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return 0 if report.get("passed", True) else 1


def cmd_serve(args) -> int:
    from ..service.app import ApiConfig, serve

    try:
        config = ApiConfig.from_env(
            args.root,
            agent_listen_address=args.agent_addr,
            admin_listen_address=args.admin_addr,
            interval=args.interval,
            audit_path=Path(args.audit_log) if args.audit_log else None,
            audit_stdout=args.audit_stdout,
        )
        serve(config)
    except ContextError as exc:
        raise CliError(exc.to_dict()) from None
    except ValueError as exc:
        raise _fail("ConfigError", str(exc)) from None
    except OSError as exc:
        raise _fail("BindFailure", str(exc)) from None
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctxctl", description="Operate a Context API deployment.")
    p.add_argument("--admin-url", default=os.environ.get("CTX_ADMIN_URL", DEFAULT_ADMIN_URL))
    p.add_argument("--admin-credential", default=os.environ.get("CTX_ADMIN_CREDENTIAL", ""))
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check manifests offline")
    s.add_argument("-f", "--file", action="extend", nargs="+", required=True, help="file, directory or -")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("apply", help="declare manifests on a running service")
    s.add_argument("-f", "--file", action="extend", nargs="+", required=True, help="file, directory or -")
    s.set_defaults(func=cmd_apply)

    s = sub.add_parser("get", help="list domains, sources or sessions")
    s.add_argument("kind", choices=("domains", "sources", "sessions"))
    s.set_defaults(func=cmd_get)

    s = sub.add_parser("audit", help="query the audit log")
    s.add_argument("--session")
    s.add_argument("--user")
    s.add_argument("--kind")
    s.add_argument("--since")
    s.add_argument("--until")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("approve", help="submit a strong-approval code")
    s.add_argument("approval_id")
    s.add_argument("--otp", required=True)
    s.set_defaults(func=cmd_approve)

    s = sub.add_parser("killswitch", help="kill a session, a user's sessions, or everything")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--session")
    g.add_argument("--user")
    g.add_argument("--all", action="store_true")
    s.set_defaults(func=cmd_killswitch)

    s = sub.add_parser("reconcile", help="run reconciliation")
    s.add_argument("--once", action="store_true", required=True)
    s.set_defaults(func=cmd_reconcile)

    s = sub.add_parser("seed", help="write the synthetic seed corpus")
    s.add_argument("target")
    s.add_argument("--seed", type=int, default=42)
    s.set_defaults(func=cmd_seed)

    s = sub.add_parser("bench", help="run experiments")
    bsub = s.add_subparsers(dest="bench_command", required=True)
    r = bsub.add_parser("run")
    r.add_argument("experiment", help="v1, v2, v3, c1..c5, or b0..b3")
    r.add_argument("--root", help="existing seed tree (default: generate a fresh one)")
    r.add_argument("--seed", type=int, default=42)
    r.add_argument("--json", action="store_true")
    r.add_argument("--output", help="also write the JSON report here")
    r.set_defaults(func=cmd_bench)

    s = sub.add_parser("serve", help="run the agent and admin listeners")
    s.add_argument("root", help="seed tree with manifests/, taxonomy.json, org.json")
    s.add_argument("--agent-addr")
    s.add_argument("--admin-addr")
    s.add_argument("--interval", type=float, default=5.0)
    s.add_argument("--audit-log")
    s.add_argument("--audit-stdout", action="store_true")
    s.set_defaults(func=cmd_serve)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(json.dumps(exc.body, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
