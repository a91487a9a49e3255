"""Command line client for the federation API.

Configuration comes from flags first, then the environment: AI4_API_URL
for the server address and AI4_TOKEN for the bearer token, falling back
to the token file written by `login` (0600, default
~/.config/fedplane/token, override with FEDPLANE_TOKEN_FILE).

Exit codes: 0 on success, 1 when the server rejects the request or is
unreachable, 2 for usage errors (click's own convention).

`login` mints a token locally, so it needs the server's signing key in
API_HMAC_KEY; every other command talks HTTP only.
"""

from __future__ import annotations

import json
import os
import time
from pathlib import Path

import click
import httpx

from .canon import canonical_json

API_URL_ENV = "AI4_API_URL"
TOKEN_ENV = "AI4_TOKEN"
TOKEN_FILE_ENV = "FEDPLANE_TOKEN_FILE"
DEFAULT_API_URL = "http://127.0.0.1:8460"


def token_file_path() -> Path:
    override = os.environ.get(TOKEN_FILE_ENV)
    if override:
        return Path(override)
    return Path.home() / ".config" / "fedplane" / "token"


def stored_token() -> str | None:
    path = token_file_path()
    try:
        return path.read_text().strip() or None
    except OSError:
        return None


class CliError(click.ClickException):
    exit_code = 1


class ApiClient:
    def __init__(self, base_url: str, token: str | None) -> None:
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self._client = httpx.Client(base_url=base_url, headers=headers, timeout=30.0)

    def request(self, method: str, path: str, **kwargs):
        try:
            resp = self._client.request(method, path, **kwargs)
        except httpx.HTTPError as exc:
            raise CliError(f"cannot reach the API: {exc}") from exc
        if resp.status_code >= 400:
            try:
                err = resp.json()["error"]
                raise CliError(f"{err['code']}: {err['message']}")
            except (KeyError, ValueError):
                raise CliError(f"HTTP {resp.status_code}: {resp.text[:200]}") from None
        if resp.headers.get("content-type", "").startswith("text/plain"):
            return resp.text
        return resp.json()

    def get(self, path: str, **kwargs):
        return self.request("GET", path, **kwargs)

    def post(self, path: str, body: dict | None = None, **kwargs):
        return self.request("POST", path, json=body if body is not None else {}, **kwargs)

    def stream_lines(self, path: str, params: dict):
        try:
            with self._client.stream("GET", path, params=params, timeout=None) as resp:
                if resp.status_code >= 400:
                    raise CliError(f"HTTP {resp.status_code}")
                yield from resp.iter_lines()
        except httpx.HTTPError as exc:
            raise CliError(f"cannot reach the API: {exc}") from exc


class Ctx:
    def __init__(self, api_url: str, token: str | None, as_json: bool) -> None:
        self.api_url = api_url
        self.token = token
        self.as_json = as_json
        self._api: ApiClient | None = None

    @property
    def api(self) -> ApiClient:
        if self._api is None:
            self._api = ApiClient(self.api_url, self.token)
        return self._api

    def emit(self, doc, human) -> None:
        """JSON when asked, otherwise the human renderer (string or lines)."""
        if self.as_json:
            click.echo(canonical_json(doc))
            return
        text = human(doc) if callable(human) else human
        if isinstance(text, (list, tuple)):
            text = "\n".join(text)
        click.echo(text)


def render_table(rows: list[dict], columns: list[str]) -> str:
    if not rows:
        return "(none)"
    cells = [[str(row.get(col, "")) for col in columns] for row in rows]
    widths = [max(len(col), *(len(r[i]) for r in cells)) for i, col in enumerate(columns)]
    lines = ["  ".join(col.ljust(widths[i]) for i, col in enumerate(columns))]
    for r in cells:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(columns))))
    return "\n".join(lines)


def parse_json_arg(value: str, flag: str) -> dict:
    try:
        doc = json.loads(value)
    except ValueError:
        raise click.BadParameter(f"{flag} must be valid JSON")
    if not isinstance(doc, dict):
        raise click.BadParameter(f"{flag} must be a JSON object")
    return doc


@click.group()
@click.option("--api-url", default=None, help=f"API base URL (or ${API_URL_ENV}).")
@click.option("--token", default=None, help=f"Bearer token (or ${TOKEN_ENV}, or the token file).")
@click.option("--json", "as_json", is_flag=True, help="Print raw JSON instead of tables.")
@click.pass_context
def main(ctx: click.Context, api_url: str | None, token: str | None, as_json: bool) -> None:
    """Federated control plane client."""
    ctx.obj = Ctx(
        api_url=api_url or os.environ.get(API_URL_ENV, DEFAULT_API_URL),
        token=token or os.environ.get(TOKEN_ENV) or stored_token(),
        as_json=as_json,
    )


# -- server and session -----------------------------------------------------------


@main.command()
@click.option("--listen", default=None, help="host:port (or $LISTEN_ADDR).")
@click.option("--state-dir", default=None, help="State directory (or $STATE_DIR).")
@click.option("--no-seed", is_flag=True, help="Skip the demo federation on first start.")
@click.option("--tick-ms", default=500, show_default=True, help="Housekeeping interval; 0 disables.")
def serve(listen: str | None, state_dir: str | None, no_seed: bool, tick_ms: int) -> None:
    """Run the API server (reads MASTER_KEY and API_HMAC_KEY)."""
    from .api import serve as run_server

    run_server(state_dir=state_dir, listen_addr=listen, seed=not no_seed, tick_ms=tick_ms)


@main.command()
@click.option("--user", required=True)
@click.option("--vo", required=True)
@click.option("--role", type=click.Choice(["full", "demo"]), default="full", show_default=True)
@click.option("--ttl-hours", default=12, show_default=True)
@click.pass_obj
def login(ctx: Ctx, user: str, vo: str, role: str, ttl_hours: int) -> None:
    """Mint a token locally (needs API_HMAC_KEY) and store it."""
    from .api import mint_token

    key = os.environ.get("API_HMAC_KEY", "")
    if not key:
        raise CliError("API_HMAC_KEY is not set; ask the operator for the signing key")
    exp = int(time.time() * 1000) + ttl_hours * 3_600_000
    token = mint_token(key.encode("utf-8"), user, vo, role, exp)
    path = token_file_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(token + "\n")
    path.chmod(0o600)
    ctx.emit({"token": token, "path": str(path)}, f"token for {user}@{vo} ({role}) written to {path}")


@main.command()
@click.pass_obj
def whoami(ctx: Ctx) -> None:
    """Show the identity behind the current token."""
    doc = ctx.api.get("/auth/me")
    ctx.emit(doc, lambda d: f"{d['user']}@{d['vo']} ({d['role']})")


# -- federation ----------------------------------------------------------------------


@main.group()
def providers() -> None:
    """Compute providers in the federation."""


@providers.command("list")
@click.option("--status", default=None, type=click.Choice(["alive", "suspect", "dead"]))
@click.pass_obj
def providers_list(ctx: Ctx, status: str | None) -> None:
    doc = ctx.api.get("/providers", params={"status": status} if status else None)
    rows = [
        {**p, "gpus": f"{p['free']['gpus']}/{p['capacity']['gpus']}", "score": f"{p['score']:.4f}"}
        for p in doc["providers"]
    ]
    ctx.emit(doc, render_table(rows, ["id", "name", "country", "status", "gpus", "score"]))


@providers.command("register")
@click.option("--name", required=True)
@click.option("--country", required=True)
@click.option("--endpoint", required=True)
@click.option("--gpus", type=int, required=True)
@click.option("--cpu-ghz", type=int, required=True)
@click.option("--disk-gb", type=int, required=True)
@click.option("--vo", "vos", multiple=True, help="Supported VO (repeatable).")
@click.pass_obj
def providers_register(ctx, name, country, endpoint, gpus, cpu_ghz, disk_gb, vos) -> None:
    doc = ctx.api.post(
        "/providers",
        {
            "name": name,
            "country": country,
            "endpoint": endpoint,
            "capacity": {"gpus": gpus, "cpu_ghz": cpu_ghz, "disk_gb": disk_gb},
            "supported_vos": list(vos),
        },
    )
    ctx.emit(doc, lambda d: f"registered {d['id']} ({d['name']})")


@main.command()
@click.option("--status", default="alive", show_default=True)
@click.pass_obj
def capacity(ctx: Ctx, status: str) -> None:
    """Aggregate federation capacity."""
    doc = ctx.api.get("/federation/capacity", params={"status": status})
    cap = doc["capacity"]
    ctx.emit(doc, f"{cap['gpus']} GPUs, {cap['cpu_ghz']} CPU GHz, {cap['disk_gb']} GB disk ({doc['status']})")


# -- catalog -----------------------------------------------------------------------------


@main.group()
def catalog() -> None:
    """Model catalog."""


@catalog.command("list")
@click.pass_obj
def catalog_list(ctx: Ctx) -> None:
    doc = ctx.api.get("/catalog")
    rows = [
        {"id": r["id"], "title": r["metadata"].get("title", ""), "license": r["metadata"].get("license", ""),
         "version": r["version"], "released": "yes" if r.get("release") else "no"}
        for r in doc["records"]
    ]
    ctx.emit(doc, render_table(rows, ["id", "title", "license", "version", "released"]))


@catalog.command("show")
@click.argument("record_id")
@click.pass_obj
def catalog_show(ctx: Ctx, record_id: str) -> None:
    doc = ctx.api.get(f"/catalog/{record_id}")
    ctx.emit(doc, json.dumps(doc, indent=2, sort_keys=True))


@catalog.command("create")
@click.option("--file", "file_", type=click.Path(exists=True, dir_okay=False), required=True,
              help="JSON file with the record metadata.")
@click.pass_obj
def catalog_create(ctx: Ctx, file_: str) -> None:
    metadata = parse_json_arg(Path(file_).read_text(), "--file")
    doc = ctx.api.post("/catalog", {"metadata": metadata})
    ctx.emit(doc, lambda d: f"created {d['id']}")


@catalog.command("update")
@click.argument("record_id")
@click.option("--patch", required=True, help='JSON object of pointer patches, e.g. {"/title": "New"}.')
@click.pass_obj
def catalog_update(ctx: Ctx, record_id: str, patch: str) -> None:
    doc = ctx.api.request("PATCH", f"/catalog/{record_id}", json={"patch": parse_json_arg(patch, "--patch")})
    ctx.emit(doc, lambda d: f"updated {d['id']} to version {d['version']}")


@catalog.command("delete")
@click.argument("record_id")
@click.pass_obj
def catalog_delete(ctx: Ctx, record_id: str) -> None:
    doc = ctx.api.request("DELETE", f"/catalog/{record_id}")
    ctx.emit(doc, f"deleted {record_id}")


@catalog.command("export")
@click.argument("record_id")
@click.pass_obj
def catalog_export(ctx: Ctx, record_id: str) -> None:
    doc = ctx.api.get(f"/catalog/{record_id}/export")
    ctx.emit(doc, json.dumps(doc, indent=2, sort_keys=True))


# -- quality pipeline ----------------------------------------------------------------------


@main.group()
def pipeline() -> None:
    """Staged quality pipeline."""


@pipeline.command("run")
@click.argument("record_id")
@click.option("--source-ref", default="HEAD", show_default=True)
@click.pass_obj
def pipeline_run(ctx: Ctx, record_id: str, source_ref: str) -> None:
    doc = ctx.api.post(f"/catalog/{record_id}/pipeline", {"source_ref": source_ref})
    stages = "  ".join(f"{s['name']}:{s['status']}" for s in doc["stages"])
    ctx.emit(doc, f"{doc['id']} {doc['status']}\n{stages}")


@pipeline.command("show")
@click.argument("run_id")
@click.pass_obj
def pipeline_show(ctx: Ctx, run_id: str) -> None:
    doc = ctx.api.get(f"/pipeline/runs/{run_id}")
    ctx.emit(doc, json.dumps(doc, indent=2, sort_keys=True))


# -- provenance -------------------------------------------------------------------------------


@main.group()
def prov() -> None:
    """Provenance views."""


@prov.command("graph")
@click.argument("record_id")
@click.pass_obj
def prov_graph(ctx: Ctx, record_id: str) -> None:
    doc = ctx.api.get(f"/provenance/{record_id}")
    summary = f"{len(doc['nodes'])} nodes, {len(doc['edges'])} edges"
    ctx.emit(doc, summary)


@prov.command("triples")
@click.argument("record_id")
@click.pass_obj
def prov_triples(ctx: Ctx, record_id: str) -> None:
    text = ctx.api.get(f"/provenance/{record_id}/triples")
    click.echo(text, nl=False)


@prov.command("datasets")
@click.argument("record_id")
@click.pass_obj
def prov_datasets(ctx: Ctx, record_id: str) -> None:
    doc = ctx.api.get(f"/provenance/{record_id}/datasets")
    ctx.emit(doc, "\n".join(doc["datasets"]) or "(none)")


@prov.command("track")
@click.argument("record_id")
@click.option("--metric", "metrics", multiple=True, required=True, help="name=value (repeatable).")
@click.pass_obj
def prov_track(ctx: Ctx, record_id: str, metrics: tuple[str, ...]) -> None:
    parsed: dict[str, float] = {}
    for item in metrics:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise click.BadParameter("--metric expects name=value")
        try:
            parsed[name] = float(value)
        except ValueError:
            raise click.BadParameter(f"metric {name!r} has a non-numeric value")
    doc = ctx.api.post("/provenance/fragments", {"record_id": record_id, "metrics": parsed})
    ctx.emit(doc, lambda d: f"recorded {d['id']}")


# -- deployments -------------------------------------------------------------------------------


@main.command()
@click.option("--kind", type=click.Choice(["standard", "batch", "tryme"]), required=True)
@click.option("--gpus", type=int, default=1, show_default=True)
@click.option("--cpu-ghz", type=int, default=10, show_default=True)
@click.option("--disk-gb", type=int, default=10, show_default=True)
@click.option("--record", "record_id", default=None, help="Model record this run trains.")
@click.option("--dataset", "datasets", multiple=True, help="Dataset URI (repeatable).")
@click.pass_obj
def deploy(ctx, kind, gpus, cpu_ghz, disk_gb, record_id, datasets) -> None:
    """Submit a deployment."""
    doc = ctx.api.post(
        "/deployments",
        {
            "kind": kind,
            "resources": {"gpus": gpus, "cpu_ghz": cpu_ghz, "disk_gb": disk_gb},
            "record_id": record_id,
            "datasets": list(datasets),
        },
    )
    ctx.emit(doc, lambda d: f"{d['id']} {d['status']}")


@main.group()
def deployments() -> None:
    """Existing deployments."""


@deployments.command("list")
@click.option("--status", default=None)
@click.pass_obj
def deployments_list(ctx: Ctx, status: str | None) -> None:
    doc = ctx.api.get("/deployments", params={"status": status} if status else None)
    rows = [
        {**j, "gpus": j["resources"]["gpus"], "provider": j.get("provider") or "-"}
        for j in doc["deployments"]
    ]
    ctx.emit(doc, render_table(rows, ["id", "kind", "owner", "status", "provider", "gpus"]))


@deployments.command("show")
@click.argument("job_id")
@click.pass_obj
def deployments_show(ctx: Ctx, job_id: str) -> None:
    doc = ctx.api.get(f"/deployments/{job_id}")
    ctx.emit(doc, json.dumps(doc, indent=2, sort_keys=True))


@deployments.command("stop")
@click.argument("job_id")
@click.pass_obj
def deployments_stop(ctx: Ctx, job_id: str) -> None:
    doc = ctx.api.post(f"/deployments/{job_id}/stop")
    ctx.emit(doc, lambda d: f"{d['id']} {d['status']}")


@deployments.command("complete")
@click.argument("job_id")
@click.pass_obj
def deployments_complete(ctx: Ctx, job_id: str) -> None:
    doc = ctx.api.post(f"/deployments/{job_id}/complete")
    ctx.emit(doc, lambda d: f"{d['id']} {d['status']}")


# -- secrets -----------------------------------------------------------------------------------


@main.group()
def secrets() -> None:
    """Scoped secrets."""


@secrets.command("put")
@click.argument("path")
@click.option("--value", default=None, help="Secret value; prompts when omitted.")
@click.pass_obj
def secrets_put(ctx: Ctx, path: str, value: str | None) -> None:
    if value is None:
        value = click.prompt("value", hide_input=True)
    doc = ctx.api.request("PUT", f"/secrets/{path}", json={"value": value})
    ctx.emit(doc, lambda d: f"{d['path']} version {d['version']}")


@secrets.command("get")
@click.argument("path")
@click.pass_obj
def secrets_get(ctx: Ctx, path: str) -> None:
    doc = ctx.api.get(f"/secrets/{path}")
    ctx.emit(doc, lambda d: d["value"])


@secrets.command("list")
@click.option("--prefix", default="")
@click.pass_obj
def secrets_list(ctx: Ctx, prefix: str) -> None:
    doc = ctx.api.get("/secrets", params={"prefix": prefix})
    ctx.emit(doc, render_table(doc["secrets"], ["path", "version", "updated_at"]))


@secrets.command("delete")
@click.argument("path")
@click.pass_obj
def secrets_delete(ctx: Ctx, path: str) -> None:
    doc = ctx.api.request("DELETE", f"/secrets/{path}")
    ctx.emit(doc, f"deleted {path}")


# -- inference -----------------------------------------------------------------------------------


@main.group()
def endpoints() -> None:
    """Serverless inference endpoints."""


@endpoints.command("list")
@click.pass_obj
def endpoints_list(ctx: Ctx) -> None:
    doc = ctx.api.get("/inference/endpoints")
    rows = [
        {**e, "invocations": e["metrics"]["invocations"], "errors": e["metrics"]["errors"]}
        for e in doc["endpoints"]
    ]
    ctx.emit(doc, render_table(rows, ["id", "record_id", "replicas", "invocations", "errors"]))


@endpoints.command("create")
@click.option("--record", "record_id", required=True)
@click.option("--min-replicas", type=int, default=0, show_default=True)
@click.option("--max-replicas", type=int, default=5, show_default=True)
@click.option("--concurrency", type=int, default=10, show_default=True)
@click.pass_obj
def endpoints_create(ctx, record_id, min_replicas, max_replicas, concurrency) -> None:
    doc = ctx.api.post(
        "/inference/endpoints",
        {"record_id": record_id, "min_replicas": min_replicas,
         "max_replicas": max_replicas, "concurrency": concurrency},
    )
    ctx.emit(doc, lambda d: f"created {d['id']} for {d['record_id']}")


@main.command()
@click.argument("endpoint_id")
@click.option("--data", default="{}", show_default=True, help="JSON request payload.")
@click.pass_obj
def invoke(ctx: Ctx, endpoint_id: str, data: str) -> None:
    """Synchronous inference request."""
    payload = parse_json_arg(data, "--data")
    doc = ctx.api.post(f"/inference/endpoints/{endpoint_id}/invoke", {"payload": payload})
    human = f"latency {doc['latency_ms']}ms{' (cold start)' if doc['cold_start'] else ''}\n"
    human += json.dumps(doc["output"], indent=2, sort_keys=True)
    ctx.emit(doc, human)


# -- operations ------------------------------------------------------------------------------------


@main.command()
@click.pass_obj
def tick(ctx: Ctx) -> None:
    """Run one housekeeping round (schedule, autoscale, drain)."""
    doc = ctx.api.post("/admin/tick")
    placed = sum(1 for t in doc["transitions"] if t["to"] == "scheduled")
    ctx.emit(doc, f"placed {placed}, transitions {len(doc['transitions'])}, drained {len(doc['drained'])}")


@main.command()
@click.option("--since", type=int, default=0, show_default=True)
@click.option("--window-ms", type=int, default=0, show_default=True,
              help="How long to follow live events after the backlog.")
@click.pass_obj
def events(ctx: Ctx, since: int, window_ms: int) -> None:
    """Print the event feed as `seq kind payload` lines."""
    params = {"since": since, "window_ms": window_ms}
    if ctx.token:
        params["token"] = ctx.token
    for line in ctx.api.stream_lines("/events", params):
        if not line.startswith("data: "):
            continue
        event = json.loads(line.removeprefix("data: "))
        if ctx.as_json:
            click.echo(canonical_json(event))
        else:
            click.echo(f"{event['seq']:>6}  {event['kind']}  {canonical_json(event['payload'])}")


@main.command()
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="report", show_default=True)
@click.pass_obj
def report(ctx: Ctx, out_dir: str) -> None:
    """Render the federation report: CSV tables plus PNG charts."""
    from .report import write_report

    stats = ctx.api.get("/stats")
    paths = write_report(stats, out_dir)
    ctx.emit({"artifacts": [str(p) for p in paths]}, "\n".join(str(p) for p in paths))


if __name__ == "__main__":
    main()
