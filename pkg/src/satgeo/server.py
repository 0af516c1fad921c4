"""HTTP backend for the ground-control-point annotation workflow.

Serves the GCP list with per-image projected pixel locations, extracts
percentile-stretched image patches centered on those projections, and accepts
annotation submissions, appending them atomically to per-GCP CSV files. The
browser frontend consumes exactly this contract.

Endpoints:
    GET  /healthz                         -> 200 "ok"
    GET  /gcps                            -> JSON list with projections
    GET  /patch?gcp=..&image=..&size=..   -> PNG
    GET  /annotations?gcp=..              -> JSON records
    POST /annotations                     -> append one record
"""

from __future__ import annotations

import io
import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from .geodesy import RasterGrid
from .ingest.rasters import read_raster
from .ingest.rpb import read_rpb
from .ingest.tables import (
    AnnotationRecord,
    STATUS_ANNOTATED,
    STATUS_CANNOT,
    append_annotation,
    read_annotations,
    read_gcps,
)
from .rpc import RpcDomainError, RpcModel

DEFAULT_PATCH_SIZE = 512
STRETCH_PERCENTILES = (2.0, 98.0)


@dataclass
class AnnotationStore:
    """Tile-directory data access: images, cameras, GCPs, annotation CSVs.

    Annotations append through a per-file lock (single-writer contract within
    this process).
    """

    tile_dir: Path
    images: dict[str, RasterGrid] = field(default_factory=dict)
    cams: dict[str, RpcModel] = field(default_factory=dict)
    _locks: dict[str, threading.Lock] = field(default_factory=dict)
    _lock_guard: threading.Lock = field(default_factory=threading.Lock)

    def __post_init__(self):
        self.tile_dir = Path(self.tile_dir)
        img_dir = self.tile_dir / "DSM_Cropped_Images"
        if not img_dir.is_dir():
            raise FileNotFoundError(f"no DSM_Cropped_Images under {self.tile_dir}")
        for rpb_path in sorted(img_dir.glob("*.RPB")):
            image_id = rpb_path.stem
            self.cams[image_id] = RpcModel.from_rpb(read_rpb(rpb_path))
            for suffix in (".grd", ".tif", ".tiff"):
                img_path = rpb_path.with_suffix(suffix)
                if img_path.exists():
                    self.images[image_id] = read_raster(img_path)
                    break
        gcps_path = self.tile_dir / "gcp" / "gcps.csv"
        self.gcps = read_gcps(gcps_path) if gcps_path.exists() else []
        (self.tile_dir / "gcp" / "annotations").mkdir(parents=True, exist_ok=True)

    def annotation_path(self, gcp_id: str) -> Path:
        return self.tile_dir / "gcp" / "annotations" / f"GCP_{gcp_id}_annotations.csv"

    def annotations_for(self, gcp_id: str) -> list[AnnotationRecord]:
        return read_annotations(self.annotation_path(gcp_id))

    def append(self, record: AnnotationRecord) -> None:
        path = self.annotation_path(record.gcp_id)
        with self._lock_guard:
            lock = self._locks.setdefault(str(path), threading.Lock())
        with lock:
            append_annotation(path, record)

    def gcp_listing(self) -> list[dict]:
        out = []
        for g in self.gcps:
            done = {
                (rec.gcp_id, rec.image_id)
                for rec in self.annotations_for(g.gcp_id)
            }
            images = []
            for image_id, cam in sorted(self.cams.items()):
                try:
                    row, col = cam.project(g.position.lat, g.position.lon, g.position.h)
                except RpcDomainError:
                    continue
                images.append({
                    "image_id": image_id,
                    "projected_row": row,
                    "projected_col": col,
                    "annotated": (g.gcp_id, image_id) in done,
                })
            out.append({
                "gcp_id": g.gcp_id,
                "lat": g.position.lat,
                "lon": g.position.lon,
                "h": g.position.h,
                "images": images,
            })
        return out

    def patch_png(self, gcp_id: str, image_id: str, size: int) -> bytes:
        from PIL import Image

        gcp = next((g for g in self.gcps if g.gcp_id == gcp_id), None)
        if gcp is None:
            raise KeyError(f"unknown GCP {gcp_id!r}")
        if image_id not in self.images:
            raise KeyError(f"unknown image {image_id!r}")
        cam = self.cams[image_id]
        row, col = cam.project(gcp.position.lat, gcp.position.lon, gcp.position.h)
        img = self.images[image_id].values.astype(np.float64)
        h, w = img.shape
        r0 = int(round(row)) - size // 2
        c0 = int(round(col)) - size // 2
        window = np.zeros((size, size))
        rs, re = max(r0, 0), min(r0 + size, h)
        cs, ce = max(c0, 0), min(c0 + size, w)
        if re > rs and ce > cs:
            window[rs - r0 : re - r0, cs - c0 : ce - c0] = img[rs:re, cs:ce]
        lo, hi = np.percentile(window, STRETCH_PERCENTILES)
        if hi <= lo:
            hi = lo + 1.0
        stretched = np.clip((window - lo) / (hi - lo) * 255.0, 0, 255).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(stretched, mode="L").save(buf, format="PNG")
        return buf.getvalue()


class _Handler(BaseHTTPRequestHandler):
    store: AnnotationStore
    ui_dir: Path | None = None

    def log_message(self, fmt, *args):
        pass  # request logging is the CLI's business via --log-level

    def _send(self, code: int, body: bytes, content_type: str):
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, code: int, payload):
        self._send(code, json.dumps(payload).encode(), "application/json")

    def do_GET(self):
        url = urlparse(self.path)
        query = {k: v[0] for k, v in parse_qs(url.query).items()}
        try:
            if url.path == "/healthz":
                self._send(200, b"ok", "text/plain")
            elif url.path == "/gcps":
                self._send_json(200, self.store.gcp_listing())
            elif url.path == "/annotations":
                gcp_id = query.get("gcp", "")
                records = self.store.annotations_for(gcp_id)
                self._send_json(200, [
                    {
                        "gcp_id": r.gcp_id,
                        "image_id": r.image_id,
                        "row": r.row,
                        "col": r.col,
                        "status": r.status,
                    }
                    for r in records
                ])
            elif url.path == "/patch":
                size = int(query.get("size", DEFAULT_PATCH_SIZE))
                png = self.store.patch_png(query.get("gcp", ""),
                                           query.get("image", ""), size)
                self._send(200, png, "image/png")
            elif self.ui_dir is not None:
                self._serve_static(url.path)
            else:
                self._send_json(404, {"error": f"no such endpoint {url.path}"})
        except KeyError as exc:
            self._send_json(404, {"error": str(exc)})
        except Exception as exc:  # pragma: no cover - defensive
            self._send_json(500, {"error": str(exc)})

    def _serve_static(self, path: str):
        rel = path.lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            self._send_json(404, {"error": f"no such file {path}"})
            return
        types = {".html": "text/html", ".js": "text/javascript", ".css": "text/css"}
        self._send(200, target.read_bytes(), types.get(target.suffix, "application/octet-stream"))

    def do_POST(self):
        url = urlparse(self.path)
        if url.path != "/annotations":
            self._send_json(404, {"error": f"no such endpoint {url.path}"})
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            payload = json.loads(self.rfile.read(length) or b"{}")
            status = payload.get("status", STATUS_ANNOTATED)
            row = payload.get("row")
            col = payload.get("col")
            record = AnnotationRecord(
                gcp_id=str(payload["gcp_id"]),
                image_id=str(payload["image_id"]),
                row=None if row is None else float(row),
                col=None if col is None else float(col),
                status=status,
            )
        except (KeyError, TypeError, ValueError) as exc:
            self._send_json(400, {"error": f"bad annotation payload: {exc}"})
            return
        self.store.append(record)
        self._send_json(200, {"ok": True})


def make_server(tile_dir, port: int = 0, ui_dir=None) -> ThreadingHTTPServer:
    """Bind the annotation server (port 0 picks a free port)."""
    store = AnnotationStore(Path(tile_dir))
    handler = type("BoundHandler", (_Handler,), {
        "store": store,
        "ui_dir": Path(ui_dir) if ui_dir else None,
    })
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def serve_forever(tile_dir, port: int = 0, ui_dir=None) -> None:
    server = make_server(tile_dir, port, ui_dir)
    print(f"serving on port {server.server_address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
