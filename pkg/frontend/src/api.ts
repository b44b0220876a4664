import { RectSelection } from "./rect";

// Typed client for the annotation HTTP API. Response bodies are returned
// as parsed, otherwise untouched: the UI displays illuminant values
// verbatim and never does color math on them.

export interface ImageListEntry {
  image_id: string;
  annotated: boolean;
}

export interface AnnotationRecord {
  image_id: string;
  rect: RectSelection;
  illuminant: [number, number, number];
  annotator: string;
  timestamp: number;
  version: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function failure(response: Response): Promise<ApiError> {
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (typeof body.error === "string") {
      message = body.error;
    } else if (Array.isArray(body.detail)) {
      message = body.detail.map((d: { msg: string }) => d.msg).join("; ");
    }
  } catch {
    // non-JSON error body, keep the status line
  }
  return new ApiError(response.status, message);
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private imageUrl(imageId: string): string {
    return `${this.baseUrl}/api/images/${encodeURIComponent(imageId)}`;
  }

  async listImages(): Promise<ImageListEntry[]> {
    const response = await fetch(`${this.baseUrl}/api/images`);
    if (!response.ok) throw await failure(response);
    return response.json();
  }

  previewUrl(imageId: string): string {
    return `${this.imageUrl(imageId)}/preview`;
  }

  wbPreviewUrl(imageId: string, rect: RectSelection): string {
    return `${this.imageUrl(imageId)}/wb-preview?rect=${rect.x},${rect.y},${rect.w},${rect.h}`;
  }

  // null when the image has no annotation yet
  async getAnnotation(imageId: string): Promise<AnnotationRecord | null> {
    const response = await fetch(`${this.imageUrl(imageId)}/annotation`);
    if (response.status === 404) return null;
    if (!response.ok) throw await failure(response);
    return response.json();
  }

  async postAnnotation(
    imageId: string,
    rect: RectSelection,
    annotator: string,
  ): Promise<AnnotationRecord> {
    const response = await fetch(`${this.imageUrl(imageId)}/annotation`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ rect, annotator }),
    });
    if (!response.ok) throw await failure(response);
    return response.json();
  }
}
