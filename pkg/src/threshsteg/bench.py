"""Corpus benchmark: every (image, method, payload) cell embedded, verified
and scored, written out as a records CSV and a per-payload summary CSV."""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import random
import string
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CapacityError, ImageFormatError
from .lsbmr import encode_message
from .metrics import improvement_pct, mse, psnr
from .pipeline import METHODS, EdgeParams, embed_bits, extract_bits
from .raster import ChannelId, load_image

log = logging.getLogger(__name__)

DEFAULT_PAYLOADS = (400, 600, 900, 1200)
IMAGE_SUFFIXES = (".png", ".bmp")
RECORD_FIELDS = ["image", "method", "payload_bits", "threshold_or_param", "mse", "psnr",
                 "modified_pixels", "elapsed_ms"]
SUMMARY_FIELDS = ["payload_bits", "method", "mean_mse", "mean_psnr",
                  "mse_improvement_vs_sobel_pct", "mse_improvement_vs_canny_pct",
                  "psnr_improvement_vs_sobel_pct", "psnr_improvement_vs_canny_pct"]
_PRINTABLE = string.ascii_letters + string.digits + string.punctuation + " "


@dataclass
class BenchRecord:
    image_id: str
    method: str
    payload_bits: int
    threshold_or_param: float
    mse: float
    psnr: float
    modified_pixels: int
    pixel_count: int | None = None
    elapsed: float | None = None

    def sort_key(self):
        return (self.image_id, METHODS.index(self.method), self.payload_bits)


@dataclass
class SummaryRow:
    payload_bits: int
    method: str
    mean_mse: float
    mean_psnr: float
    mse_vs: dict[str, float] = field(default_factory=dict)
    psnr_vs: dict[str, float] = field(default_factory=dict)


@dataclass
class BenchSummary:
    rows: list[SummaryRow]
    threshold_series: dict[str, list[tuple[int, float]]]
    skipped: list[tuple[str, str, int]] = field(default_factory=list)
    records: list[BenchRecord] = field(default_factory=list)

    def row(self, payload_bits: int, method: str) -> SummaryRow:
        for r in self.rows:
            if r.payload_bits == payload_bits and r.method == method:
                return r
        raise KeyError((payload_bits, method))


def message_for(seed: int, image_id: str, payload_bits: int) -> bytes:
    """Printable ASCII, identical for every method at the same cell."""
    digest = hashlib.sha256(f"{seed}:{image_id}:{payload_bits}".encode()).digest()
    rnd = random.Random(int.from_bytes(digest[:8], "little"))
    return "".join(rnd.choice(_PRINTABLE) for _ in range(math.ceil(payload_bits / 8))).encode()


def payload_for(seed: int, image_id: str, payload_bits: int) -> np.ndarray:
    return encode_message(message_for(seed, image_id, payload_bits))[:payload_bits]


def run_cell(cover, image_id: str, method: str, payload_bits: int, channel="r", seed: int = 0,
             params: EdgeParams | None = None, peak_sq: int = 256 * 256) -> BenchRecord:
    bits = payload_for(seed, image_id, payload_bits)
    start = time.perf_counter()
    result = embed_bits(cover, bits, channel, method, seed, params)
    elapsed = (time.perf_counter() - start) * 1000.0
    if not np.array_equal(extract_bits(result.stego, result.key), bits):
        raise AssertionError(f"round trip failed for {image_id}/{method}/{payload_bits}")
    diff = result.cover_channel != result.stego_channel
    value = mse(result.cover_channel, result.stego_channel)
    return BenchRecord(image_id, method, payload_bits, result.parameter, value,
                       psnr(value, peak_sq), int(diff.sum()), diff.size, elapsed)


def _bench_image(args):
    path, payloads, methods, channel, seed, params = args
    cover = load_image(path)
    records, skipped = [], []
    for method in methods:
        for bits in payloads:
            try:
                records.append(run_cell(cover, path.stem, method, bits, channel, seed, params))
            except CapacityError as exc:
                log.info("skip %s/%s/%d: %s", path.stem, method, bits, exc)
                skipped.append((path.stem, method, bits))
    return records, skipped


def summarize(records: list[BenchRecord]) -> BenchSummary:
    """Per-payload means and improvement of each method over the edge baselines.

    Means are taken over the (image, payload) cells every method completed,
    so all methods are averaged over the same images.
    """
    if not records:
        raise ValueError("no benchmark records to summarise")
    methods = [m for m in METHODS if any(r.method == m for r in records)]
    cells = defaultdict(dict)
    for r in records:
        cells[(r.image_id, r.payload_bits)][r.method] = r
    complete = {k: v for k, v in cells.items() if len(v) == len(methods)}

    rows = []
    for payload in sorted({p for _, p in complete}):
        group = [v for (_, p), v in complete.items() if p == payload]
        means = {
            m: (float(np.mean([g[m].mse for g in group])), float(np.mean([g[m].psnr for g in group])))
            for m in methods
        }
        for m in methods:
            row = SummaryRow(payload, m, *means[m])
            for base in ("sobel", "canny"):
                if base in means and means[base][0] != 0:
                    row.mse_vs[base] = improvement_pct(means[base][0], means[m][0], "lower")
                    row.psnr_vs[base] = improvement_pct(means[base][1], means[m][1], "higher")
            rows.append(row)

    series = defaultdict(list)
    for r in sorted(records, key=BenchRecord.sort_key):
        if r.method == "threshold":
            series[r.image_id].append((r.payload_bits, r.threshold_or_param))
    return BenchSummary(rows, dict(series))


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6f}"


def write_records(records: list[BenchRecord], path, timings: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in sorted(records, key=BenchRecord.sort_key):
            elapsed = f"{r.elapsed:.3f}" if timings and r.elapsed is not None else ""
            w.writerow([r.image_id, r.method, r.payload_bits, _fmt(r.threshold_or_param),
                        _fmt(r.mse), _fmt(r.psnr), r.modified_pixels, elapsed])


def read_records(path) -> list[BenchRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(BenchRecord(
                row["image"], row["method"], int(row["payload_bits"]),
                float(row["threshold_or_param"]), float(row["mse"]), float(row["psnr"]),
                int(row["modified_pixels"]), None,
                float(row["elapsed_ms"]) if row["elapsed_ms"] else None,
            ))
    return out


def write_summary(summary: BenchSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for r in summary.rows:
            pct = [r.mse_vs.get("sobel"), r.mse_vs.get("canny"),
                   r.psnr_vs.get("sobel"), r.psnr_vs.get("canny")]
            w.writerow([r.payload_bits, r.method, _fmt(r.mean_mse), _fmt(r.mean_psnr)]
                       + ["" if p is None else f"{p:.6f}" for p in pct])


def corpus_images(corpus_dir) -> list[Path]:
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise ImageFormatError(f"corpus directory {corpus_dir} does not exist")
    paths = sorted(p for p in corpus_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise ValueError(f"no BMP/PNG images in {corpus_dir}")
    return paths


def run_bench(corpus_dir, payloads=DEFAULT_PAYLOADS, channel="r", seed: int = 0,
              report_dir=None, methods=METHODS, params: EdgeParams | None = None,
              workers: int = 1, timings: bool = False) -> BenchSummary:
    """Benchmark every image in ``corpus_dir``.

    With ``report_dir`` set, ``records.csv`` and ``summary.csv`` are written
    there.  Rows are sorted before writing, so ``workers`` never changes the
    output.  Wall-clock timings are only written when ``timings`` is true;
    otherwise the column is left blank and reruns are byte-identical.
    """
    payloads = sorted(set(int(p) for p in payloads))
    if not payloads:
        raise ValueError("payload list is empty")
    channel = ChannelId.parse(channel)
    jobs = [(p, payloads, tuple(methods), channel, seed, params) for p in corpus_images(corpus_dir)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_bench_image, jobs))
    else:
        results = [_bench_image(j) for j in jobs]

    records = sorted((r for recs, _ in results for r in recs), key=BenchRecord.sort_key)
    skipped = [s for _, sk in results for s in sk]
    summary = summarize(records)
    summary.skipped = skipped
    summary.records = records
    if report_dir is not None:
        report_dir = Path(report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        write_records(records, report_dir / "records.csv", timings)
        write_summary(summary, report_dir / "summary.csv")
    return summary
