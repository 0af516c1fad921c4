/** Annotation session state: the cursor over (gcp, image) slots, the pending
 * click, and submission. The server is the source of truth; completion state
 * always comes back from it, so a refresh reproduces the display.
 */

import {
  AnnotationApi,
  AnnotationRecord,
  Gcp,
  patchOrigin,
} from "./api.js";

export interface Cursor {
  gcpIndex: number;
  imageIndex: number;
}

export interface PendingClick {
  row: number; // full-image coordinates
  col: number;
}

export class AnnotationSession {
  gcps: Gcp[] = [];
  cursor: Cursor = { gcpIndex: 0, imageIndex: 0 };
  pending: PendingClick | null = null;
  patchSize: number;
  private inflight = false;

  constructor(
    readonly api: AnnotationApi,
    patchSize = 512,
  ) {
    this.patchSize = patchSize;
  }

  async load(): Promise<void> {
    this.gcps = await this.api.gcps();
    if (!this.currentSlotExists()) {
      this.cursor = { gcpIndex: 0, imageIndex: 0 };
    }
  }

  currentSlotExists(): boolean {
    const g = this.gcps[this.cursor.gcpIndex];
    return !!g && this.cursor.imageIndex < g.images.length;
  }

  current(): { gcp: Gcp; image: Gcp["images"][number] } | null {
    if (!this.currentSlotExists()) return null;
    const gcp = this.gcps[this.cursor.gcpIndex];
    return { gcp, image: gcp.images[this.cursor.imageIndex] };
  }

  /** Convert a click in patch coordinates to full-image coordinates. */
  clickAt(patchRow: number, patchCol: number): PendingClick {
    const cur = this.current();
    if (!cur) throw new Error("no current slot");
    const origin = patchOrigin(
      cur.image.projected_row,
      cur.image.projected_col,
      this.patchSize,
    );
    this.pending = { row: origin.row + patchRow, col: origin.col + patchCol };
    return this.pending;
  }

  /** Submit the pending click; on success advance to the next open slot. */
  async confirm(): Promise<void> {
    const cur = this.current();
    if (!cur || !this.pending || this.inflight) return;
    const record: AnnotationRecord = {
      gcp_id: cur.gcp.gcp_id,
      image_id: cur.image.image_id,
      row: this.pending.row,
      col: this.pending.col,
      status: "annotated",
    };
    await this.submitRecord(record);
  }

  /** Mark the current slot un-annotatable and advance. */
  async cannotAnnotate(): Promise<void> {
    const cur = this.current();
    if (!cur || this.inflight) return;
    await this.submitRecord({
      gcp_id: cur.gcp.gcp_id,
      image_id: cur.image.image_id,
      row: null,
      col: null,
      status: "cannot_annotate",
    });
  }

  private async submitRecord(record: AnnotationRecord): Promise<void> {
    this.inflight = true;
    const before = { ...this.cursor };
    try {
      await this.api.submit(record);
      await this.load(); // server truth: completion state re-read
      this.pending = null;
      this.cursor = before;
      this.advanceToOpenSlot();
    } finally {
      this.inflight = false;
    }
  }

  /** Move the cursor forward to the next not-yet-annotated slot, if any. */
  advanceToOpenSlot(): void {
    const total = this.gcps.reduce((n, g) => n + g.images.length, 0);
    if (total === 0) return;
    let { gcpIndex, imageIndex } = this.cursor;
    for (let step = 0; step < total; step++) {
      imageIndex += 1;
      if (imageIndex >= (this.gcps[gcpIndex]?.images.length ?? 0)) {
        imageIndex = 0;
        gcpIndex = (gcpIndex + 1) % this.gcps.length;
      }
      const img = this.gcps[gcpIndex]?.images[imageIndex];
      if (img && !img.annotated) {
        this.cursor = { gcpIndex, imageIndex };
        return;
      }
    }
    // everything annotated: stay put
  }

  move(dGcp: number, dImage: number): void {
    if (this.gcps.length === 0) return;
    const nGcp = this.gcps.length;
    let gcpIndex = (this.cursor.gcpIndex + dGcp + nGcp) % nGcp;
    const nImg = this.gcps[gcpIndex].images.length;
    if (nImg === 0) return;
    let imageIndex = this.cursor.imageIndex + dImage;
    imageIndex = ((imageIndex % nImg) + nImg) % nImg;
    if (dGcp !== 0) imageIndex = Math.min(this.cursor.imageIndex, nImg - 1);
    this.cursor = { gcpIndex, imageIndex };
    this.pending = null;
  }

  /** External map link for the surveyor-context panel. */
  mapLink(): string | null {
    const cur = this.current();
    if (!cur) return null;
    return `https://www.openstreetmap.org/?mlat=${cur.gcp.lat}&mlon=${cur.gcp.lon}&zoom=19`;
  }
}
