/** DOM wiring: canvas rendering with crosshair and pending-click marker,
 * pan/zoom with the mouse, keyboard shortcuts, and the side panel.
 */

import { AnnotationApi, patchCrosshair } from "./api.js";
import { dispatchKey } from "./keyboard.js";
import { AnnotationSession } from "./session.js";
import {
  ViewTransform,
  canvasToImage,
  fitPatch,
  imageToCanvas,
  pan,
  zoomAbout,
} from "./view.js";

const PATCH_SIZE = 512;
const CANVAS_SIZE = 768;

class App {
  session: AnnotationSession;
  view: ViewTransform = fitPatch(PATCH_SIZE, CANVAS_SIZE);
  patch: HTMLImageElement | null = null;
  canvas: HTMLCanvasElement;
  status: HTMLElement;
  panel: HTMLElement;
  dragging: { x: number; y: number } | null = null;
  moved = false;

  constructor(baseUrl: string) {
    this.session = new AnnotationSession(new AnnotationApi(baseUrl), PATCH_SIZE);
    this.canvas = document.getElementById("patch") as HTMLCanvasElement;
    this.status = document.getElementById("status")!;
    this.panel = document.getElementById("panel")!;
    this.canvas.width = CANVAS_SIZE;
    this.canvas.height = CANVAS_SIZE;
  }

  async start(): Promise<void> {
    try {
      await this.session.load();
    } catch (err) {
      this.banner(`backend unreachable: ${err}`, true);
      return;
    }
    this.bind();
    await this.showCurrent();
  }

  banner(text: string, error = false): void {
    this.status.textContent = text;
    this.status.className = error ? "banner error" : "banner";
    if (error) {
      const retry = document.createElement("button");
      retry.textContent = "retry";
      retry.onclick = () => void this.start();
      this.status.appendChild(retry);
    }
  }

  bind(): void {
    window.addEventListener("keydown", (ev) => {
      dispatchKey(this.session, ev.key)
        .then((action) => {
          if (action) void this.showCurrent();
        })
        .catch((err) => {
          // failed submissions keep the pending click so Enter retries
          this.banner(`submission failed: ${err}`, true);
          this.draw();
        });
    });
    this.canvas.addEventListener("mousedown", (ev) => {
      this.dragging = { x: ev.offsetX, y: ev.offsetY };
      this.moved = false;
    });
    this.canvas.addEventListener("mousemove", (ev) => {
      if (!this.dragging) return;
      const dx = ev.offsetX - this.dragging.x;
      const dy = ev.offsetY - this.dragging.y;
      if (Math.abs(dx) + Math.abs(dy) > 2) this.moved = true;
      if (this.moved) {
        this.view = pan(this.view, dx, dy);
        this.dragging = { x: ev.offsetX, y: ev.offsetY };
        this.draw();
      }
    });
    this.canvas.addEventListener("mouseup", (ev) => {
      if (!this.moved) {
        const pt = canvasToImage(this.view, ev.offsetX, ev.offsetY);
        this.session.clickAt(pt.row, pt.col);
        this.draw();
      }
      this.dragging = null;
    });
    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const factor = ev.deltaY < 0 ? 2 : 0.5;
      this.view = zoomAbout(this.view, factor, ev.offsetX, ev.offsetY);
      this.draw();
    });
  }

  async showCurrent(): Promise<void> {
    const cur = this.session.current();
    if (!cur) {
      this.banner("no (gcp, image) slots available");
      return;
    }
    this.view = fitPatch(PATCH_SIZE, CANVAS_SIZE);
    const url = this.session.api.patchUrl(
      cur.gcp.gcp_id,
      cur.image.image_id,
      PATCH_SIZE,
    );
    const img = new Image();
    img.onload = () => {
      this.patch = img;
      this.draw();
    };
    img.onerror = () => this.banner("patch fetch failed", true);
    img.src = url;

    const link = this.session.mapLink();
    this.panel.innerHTML = "";
    const title = document.createElement("h3");
    title.textContent = `${cur.gcp.gcp_id} in ${cur.image.image_id}` +
      (cur.image.annotated ? " (done)" : "");
    this.panel.appendChild(title);
    const coords = document.createElement("p");
    coords.textContent =
      `lat ${cur.gcp.lat.toFixed(6)}, lon ${cur.gcp.lon.toFixed(6)}, ` +
      `h ${cur.gcp.h.toFixed(1)} m`;
    this.panel.appendChild(coords);
    if (link) {
      const a = document.createElement("a");
      a.href = link;
      a.target = "_blank";
      a.textContent = "open location on map";
      this.panel.appendChild(a);
    }
    const help = document.createElement("p");
    help.textContent =
      "click = mark, Enter = confirm, N = cannot annotate, arrows = navigate";
    this.panel.appendChild(help);
    this.banner(
      `slot ${this.session.cursor.gcpIndex + 1}/${this.session.gcps.length} gcps`,
    );
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d")!;
    ctx.fillStyle = "#111";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    const cur = this.session.current();
    if (this.patch) {
      ctx.imageSmoothingEnabled = this.view.zoom < 1;
      const tl = imageToCanvas(this.view, 0, 0);
      ctx.drawImage(
        this.patch,
        tl.x,
        tl.y,
        PATCH_SIZE * this.view.zoom,
        PATCH_SIZE * this.view.zoom,
      );
    }
    if (cur) {
      const cross = patchCrosshair(
        cur.image.projected_row,
        cur.image.projected_col,
        PATCH_SIZE,
      );
      const c = imageToCanvas(this.view, cross.row, cross.col);
      ctx.strokeStyle = "#ff5050";
      ctx.lineWidth = 1;
      ctx.beginPath();
      ctx.moveTo(c.x - 12, c.y);
      ctx.lineTo(c.x + 12, c.y);
      ctx.moveTo(c.x, c.y - 12);
      ctx.lineTo(c.x, c.y + 12);
      ctx.stroke();
    }
    if (cur && this.session.pending) {
      // pending click is stored in full-image coords; draw in patch coords
      const originRow =
        Math.round(cur.image.projected_row) - Math.floor(PATCH_SIZE / 2);
      const originCol =
        Math.round(cur.image.projected_col) - Math.floor(PATCH_SIZE / 2);
      const p = imageToCanvas(
        this.view,
        this.session.pending.row - originRow,
        this.session.pending.col - originCol,
      );
      ctx.strokeStyle = "#40c040";
      ctx.beginPath();
      ctx.arc(p.x, p.y, 6, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
}

const base = new URLSearchParams(window.location.search).get("api") ??
  window.location.origin;
void new App(base).start();
