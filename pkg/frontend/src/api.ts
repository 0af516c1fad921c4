/** Typed client for the annotation backend's HTTP contract. */

export interface GcpImage {
  image_id: string;
  projected_row: number;
  projected_col: number;
  annotated: boolean;
}

export interface Gcp {
  gcp_id: string;
  lat: number;
  lon: number;
  h: number;
  images: GcpImage[];
}

export interface AnnotationRecord {
  gcp_id: string;
  image_id: string;
  row: number | null;
  col: number | null;
  status: "annotated" | "cannot_annotate";
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function expectOk(res: Response): Promise<Response> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && typeof body.error === "string") detail = body.error;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(res.status, detail);
  }
  return res;
}

export class AnnotationApi {
  constructor(readonly baseUrl: string) {}

  async health(): Promise<boolean> {
    try {
      const res = await fetch(`${this.baseUrl}/healthz`);
      return res.ok;
    } catch {
      return false;
    }
  }

  async gcps(): Promise<Gcp[]> {
    const res = await expectOk(await fetch(`${this.baseUrl}/gcps`));
    return (await res.json()) as Gcp[];
  }

  patchUrl(gcpId: string, imageId: string, size: number): string {
    const q = new URLSearchParams({
      gcp: gcpId,
      image: imageId,
      size: String(size),
    });
    return `${this.baseUrl}/patch?${q}`;
  }

  async patchBlob(gcpId: string, imageId: string, size: number): Promise<Blob> {
    const res = await expectOk(await fetch(this.patchUrl(gcpId, imageId, size)));
    return res.blob();
  }

  async annotations(gcpId: string): Promise<AnnotationRecord[]> {
    const q = new URLSearchParams({ gcp: gcpId });
    const res = await expectOk(await fetch(`${this.baseUrl}/annotations?${q}`));
    return (await res.json()) as AnnotationRecord[];
  }

  async submit(record: AnnotationRecord): Promise<void> {
    await expectOk(
      await fetch(`${this.baseUrl}/annotations`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(record),
      }),
    );
  }
}

/**
 * The in-patch pixel of the projected GCP. The backend centers the patch
 * window at round(projection), so the crosshair sits at size/2 plus the
 * sub-pixel remainder of the projection.
 */
export function patchCrosshair(
  projRow: number,
  projCol: number,
  size: number,
): { row: number; col: number } {
  const tlRow = Math.round(projRow) - Math.floor(size / 2);
  const tlCol = Math.round(projCol) - Math.floor(size / 2);
  return { row: projRow - tlRow, col: projCol - tlCol };
}

/** Patch-window origin in full-image coordinates (top-left pixel index). */
export function patchOrigin(
  projRow: number,
  projCol: number,
  size: number,
): { row: number; col: number } {
  return {
    row: Math.round(projRow) - Math.floor(size / 2),
    col: Math.round(projCol) - Math.floor(size / 2),
  };
}
