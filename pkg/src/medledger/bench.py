"""Upload vs download latency benchmark.

Upload is the full write path (seal, store, anchor, mine with auto-mine
on); download is the full read path (policy check, blob fetch, integrity
re-hash, decrypt, decode). Each record goes to its own patient so a fetch
always returns exactly one record and neither op accretes work as the run
progresses. Results are medians and p95s per payload size; medians because
mining times are heavy-tailed.
"""

from __future__ import annotations

import csv
import json
import math
import tempfile
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

from .deployment import Deployment
from .keys import KeyPair, identity_id
from .models import PatientRecord

BASE_PATIENT_ID = 9_000_000

CSV_COLUMNS = ("size_bytes", "op", "median_ms", "p95_ms")


class ServiceUnreachable(Exception):
    pass


@dataclass(frozen=True)
class BenchRow:
    size_bytes: int
    op: str
    median_ms: float
    p95_ms: float


@dataclass(frozen=True)
class BenchResult:
    rows: tuple[BenchRow, ...]
    # chain-log bytes appended per record, keyed by payload size
    log_growth_per_record: dict[int, float]

    def median(self, size_bytes: int, op: str) -> float:
        for row in self.rows:
            if row.size_bytes == size_bytes and row.op == op:
                return row.median_ms
        raise KeyError((size_bytes, op))


def percentile(values: list[float], fraction: float) -> float:
    ordered = sorted(values)
    rank = max(0, math.ceil(fraction * len(ordered)) - 1)
    return ordered[rank]


def _payload(size_bytes: int, seq: int) -> str:
    header = f"record {seq}:"
    return header + "x" * max(0, size_bytes - len(header))


def _record(size_bytes: int, seq: int, patient_id: int) -> PatientRecord:
    return PatientRecord(
        username=f"bench-{seq}",
        age=40,
        temperature="98.6",
        time="12.0",
        patient_id=patient_id,
        extra={"payload": _payload(size_bytes, seq)},
    )


def run_bench(
    records: int,
    sizes: list[int],
    difficulty_bits: int = 12,
    work_dir: str | Path | None = None,
) -> BenchResult:
    """Embedded benchmark against a fresh deployment per payload size."""
    if records < 1:
        raise ValueError("records must be >= 1")
    if not sizes:
        raise ValueError("at least one payload size required")
    rows: list[BenchRow] = []
    growth: dict[int, float] = {}
    with tempfile.TemporaryDirectory(dir=work_dir) as tmp:
        for size in sizes:
            dep = Deployment.init_dir(
                Path(tmp) / f"bench-{size}", difficulty_bits=difficulty_bits, auto_mine=True
            )
            try:
                uploads: list[float] = []
                downloads: list[float] = []
                log_path = dep.config.chain_log_path
                anchor_bytes = 0
                for seq in range(records):
                    patient_id = BASE_PATIENT_ID + seq
                    keypair, _ = dep.register_identity("patient", f"bench-{seq}")
                    author = identity_id(keypair.public_key)
                    record = _record(size, seq, patient_id)
                    before = log_path.stat().st_size
                    start = time.perf_counter()
                    dep.submit_record(author, record)
                    uploads.append((time.perf_counter() - start) * 1000.0)
                    anchor_bytes += log_path.stat().st_size - before
                    start = time.perf_counter()
                    fetched = dep.fetch_records(author, patient_id)
                    downloads.append((time.perf_counter() - start) * 1000.0)
                    assert len(fetched) == 1
                growth[size] = anchor_bytes / records
                rows.append(
                    BenchRow(size, "upload", percentile(uploads, 0.5), percentile(uploads, 0.95))
                )
                rows.append(
                    BenchRow(
                        size, "download", percentile(downloads, 0.5), percentile(downloads, 0.95)
                    )
                )
            finally:
                dep.close()
    return BenchResult(rows=tuple(rows), log_growth_per_record=growth)


def write_bench_csv(result: BenchResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in result.rows:
            writer.writerow(
                [row.size_bytes, row.op, f"{row.median_ms:.3f}", f"{row.p95_ms:.3f}"]
            )


# -- HTTP mode -------------------------------------------------------------

def _http_json(url: str, payload: dict | None = None, token: str | None = None) -> dict:
    data = json.dumps(payload).encode() if payload is not None else None
    request = urllib.request.Request(
        url, data=data, headers={"Content-Type": "application/json"}
    )
    if token:
        request.add_header("Authorization", f"Bearer {token}")
    try:
        with urllib.request.urlopen(request, timeout=60) as response:
            return json.loads(response.read())
    except urllib.error.HTTPError as exc:
        body = exc.read().decode(errors="replace")
        raise ServiceUnreachable(f"{url} returned {exc.code}: {body}") from exc
    except (urllib.error.URLError, OSError) as exc:
        raise ServiceUnreachable(f"cannot reach {url}: {exc}") from exc


def run_bench_http(records: int, sizes: list[int], base_url: str) -> BenchResult:
    """Benchmark through a running service's REST interface."""
    if records < 1:
        raise ValueError("records must be >= 1")
    base = base_url.rstrip("/")
    rows: list[BenchRow] = []
    for size in sizes:
        uploads: list[float] = []
        downloads: list[float] = []
        for seq in range(records):
            patient_id = BASE_PATIENT_ID + 100_000 + seq
            name = f"bench-http-{size}-{seq}"
            created = _http_json(
                f"{base}/api/identities", {"role": "patient", "name": name}
            )
            keypair = KeyPair.from_seed(bytes.fromhex(created["seed"]))
            challenge = _http_json(f"{base}/api/login/challenge", {"username": name})
            signature = keypair.sign(bytes.fromhex(challenge["challenge"]))
            session = _http_json(
                f"{base}/api/login",
                {
                    "username": name,
                    "challenge_id": challenge["challenge_id"],
                    "signature": signature.hex(),
                },
            )
            token = session["token"]
            record = _record(size, seq, patient_id)
            body = {
                "username": record.username,
                "age": record.age,
                "temperature": record.temperature,
                "time": record.time,
                "patient_id": patient_id,
                "extra": dict(record.extra),
            }
            start = time.perf_counter()
            _http_json(f"{base}/api/records", body, token=token)
            uploads.append((time.perf_counter() - start) * 1000.0)
            start = time.perf_counter()
            _http_json(f"{base}/api/records/{patient_id}", token=token)
            downloads.append((time.perf_counter() - start) * 1000.0)
        rows.append(
            BenchRow(size, "upload", percentile(uploads, 0.5), percentile(uploads, 0.95))
        )
        rows.append(
            BenchRow(size, "download", percentile(downloads, 0.5), percentile(downloads, 0.95))
        )
    return BenchResult(rows=tuple(rows), log_growth_per_record={})
