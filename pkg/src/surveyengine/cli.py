"""Operator CLI: terminal chat, cohort simulation, export, schedules,
summaries."""

from __future__ import annotations

import json
import sys
import time
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Optional

import click

from .accounts import AccountService, UnknownUserError
from .analytics import (
    fluid_day_summary,
    fluid_summary_csv,
    mean_daily_consumption,
    sleep_nights,
    sleep_summary_csv,
)
from .engine import EngineConfig
from .resources import builtin_flow_map
from .scheduling import FLUIDMONITOR_TIMES, SLEEPY_TIMES, Schedule, next_invocation
from .sessions import SessionService
from .simulate import simulate_cohort
from .store import EventStore


def _now_ms() -> int:
    return int(time.time() * 1000)


def _parse_date(value: Optional[str]) -> Optional[date]:
    return date.fromisoformat(value) if value else None


def _date_ms(value: Optional[str]) -> Optional[int]:
    if not value:
        return None
    d = date.fromisoformat(value)
    return int(datetime(d.year, d.month, d.day, tzinfo=timezone.utc).timestamp() * 1000)


def _open(store_path: str):
    store = EventStore(Path(store_path))
    accounts = AccountService(store)
    return store, accounts


@click.group()
def main() -> None:
    """Conversational survey engine."""


@main.command()
@click.argument("flow_id")
@click.option("--user", "user_id", required=True)
@click.option("--store", "store_path", default="events.jsonl", show_default=True)
@click.option("--timeout-ms", default=10_000, show_default=True)
@click.option("--tz", "tz_name", default="UTC", show_default=True)
def chat(flow_id: str, user_id: str, store_path: str, timeout_ms: int,
         tz_name: str) -> None:
    """Run a survey interactively in the terminal.

    An empty line stands for silence and injects a timeout."""
    store, accounts = _open(store_path)
    try:
        accounts.get(user_id)
    except UnknownUserError:
        accounts.enroll(user_id, user_id, "password", at=_now_ms(), timezone=tz_name)
        click.echo(f"(enrolled new user {user_id})")
    service = SessionService(store, accounts,
                             config=EngineConfig(timeout_ms=timeout_ms))
    state, reply = service.start_session(user_id, flow_id, _now_ms())
    session_id = state.session_id
    click.echo(f"agent> {reply.say}")
    while not service.state(session_id).terminal:
        line = input("you> ")
        if line.strip():
            reply = service.handle_utterance(session_id, line, _now_ms())
        else:
            deadline = service.state(session_id).deadline or _now_ms()
            reply = service.handle_timeout(session_id, deadline + 1)
        click.echo(f"agent> {reply.say}")
    store.close()


@main.command()
@click.argument("users", type=int)
@click.argument("days", type=int)
@click.option("--seed", default=1, show_default=True)
@click.option("--store", "store_path", default="events.jsonl", show_default=True)
@click.option("--tz", "tz_name", default="America/New_York", show_default=True)
def simulate(users: int, days: int, seed: int, store_path: str, tz_name: str) -> None:
    """Generate a seeded cohort of survey sessions."""
    store = EventStore(Path(store_path))
    counts = simulate_cohort(store, users, days, seed, timezone=tz_name)
    store.close()
    click.echo(json.dumps(counts))


@main.command()
@click.option("--store", "store_path", default="events.jsonl", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="csv",
              show_default=True)
@click.option("--out", "out_path", default="-", show_default=True)
@click.option("--users", "users_csv", default=None, help="comma-separated user ids")
@click.option("--from", "from_date", default=None, help="YYYY-MM-DD (UTC)")
@click.option("--to", "to_date", default=None, help="YYYY-MM-DD (UTC), exclusive")
@click.option("--kinds", "kinds_csv", default=None, help="comma-separated event kinds")
def export(store_path: str, fmt: str, out_path: str, users_csv: Optional[str],
           from_date: Optional[str], to_date: Optional[str],
           kinds_csv: Optional[str]) -> None:
    """Export the event log as CSV or JSON-lines."""
    store, _ = _open(store_path)
    data = store.export(
        users=users_csv.split(",") if users_csv else None,
        from_ms=_date_ms(from_date),
        to_ms=_date_ms(to_date),
        kinds=kinds_csv.split(",") if kinds_csv else None,
        format=fmt,
    )
    if out_path == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(out_path).write_bytes(data)
        click.echo(f"wrote {out_path}")


@main.command()
@click.option("--store", "store_path", default="events.jsonl", show_default=True)
@click.option("--user", "user_id", required=True)
@click.option("--now", "now_iso", default=None,
              help="ISO instant to compute from (default: current time)")
def schedule(store_path: str, user_id: str, now_iso: Optional[str]) -> None:
    """Show the next scheduled invocation per flow for a user."""
    _, accounts = _open(store_path)
    profile = accounts.get(user_id)
    now_ms = (_now_ms() if not now_iso
              else int(datetime.fromisoformat(now_iso).timestamp() * 1000))
    for flow_id, times in (("fluidmonitor", FLUIDMONITOR_TIMES),
                           ("sleepy", SLEEPY_TIMES)):
        sched = Schedule(schedule_id=f"{flow_id}-default", flow_id=flow_id,
                         local_times=times, timezone=profile.timezone)
        at = next_invocation(sched, now_ms)
        when = datetime.fromtimestamp(at / 1000, tz=timezone.utc)
        click.echo(f"{flow_id}\t{when.isoformat()}")


@main.command()
@click.option("--store", "store_path", default="events.jsonl", show_default=True)
@click.option("--user", "user_id", default=None)
@click.option("--date", "date_iso", default=None, help="YYYY-MM-DD local date")
@click.option("--sleep", "show_sleep", is_flag=True, help="sleep summary instead of fluid")
@click.option("--plot-data", "plot_data", is_flag=True,
              help="emit (date, mean, min, max, n) cohort rows")
@click.option("--from", "from_date", default=None)
@click.option("--to", "to_date", default=None)
def summary(store_path: str, user_id: Optional[str], date_iso: Optional[str],
            show_sleep: bool, plot_data: bool,
            from_date: Optional[str], to_date: Optional[str]) -> None:
    """Fluid/sleep summaries and cohort plot data."""
    store, accounts = _open(store_path)
    if plot_data:
        series = mean_daily_consumption(
            store, list(accounts.users().values()),
            from_date=_parse_date(from_date), to_date=_parse_date(to_date))
        click.echo("local_date,mean_ml,min_ml,max_ml,n")
        for point in series:
            click.echo(f"{point['local_date']},{point['mean_ml']:.1f},"
                       f"{point['min_ml']},{point['max_ml']},{point['n']}")
        return
    if not user_id:
        raise click.UsageError("--user is required unless --plot-data is given")
    profile = accounts.get(user_id)
    if show_sleep:
        nights = sleep_nights(store, profile)
        sys.stdout.buffer.write(sleep_summary_csv(nights))
        return
    if not date_iso:
        raise click.UsageError("--date is required for a fluid summary")
    row = fluid_day_summary(store, profile, date.fromisoformat(date_iso))
    sys.stdout.buffer.write(fluid_summary_csv([row]))


if __name__ == "__main__":
    main()
