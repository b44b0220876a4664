import { AnnotationRecord, ApiClient, ApiError, ImageListEntry } from "./api";
import {
  Point,
  ViewTransform,
  fitView,
  imageToScreen,
  panBy,
  zoomAround,
} from "./coords";
import { MIN_RECT, RectSelection, dragToRect, patchStats, rectsEqual } from "./rect";

// Single-page annotator: gallery on the left, canvas with rectangle overlay
// on the right. All selection math lives in coords.ts/rect.ts; this file is
// DOM wiring and drawing only.

interface Elements {
  gallery: HTMLUListElement;
  counts: HTMLElement;
  canvas: HTMLCanvasElement;
  readout: HTMLElement;
  hint: HTMLElement;
  illuminant: HTMLElement;
  commit: HTMLButtonElement;
  wbToggle: HTMLInputElement;
  fit: HTMLButtonElement;
  banner: HTMLElement;
  bannerText: HTMLElement;
  retry: HTMLButtonElement;
  annotator: HTMLInputElement;
}

function grab(root: HTMLElement): Elements {
  const one = <T extends HTMLElement>(sel: string) => {
    const el = root.querySelector<T>(sel);
    if (!el) throw new Error(`missing element ${sel}`);
    return el;
  };
  return {
    gallery: one<HTMLUListElement>("#gallery"),
    counts: one("#counts"),
    canvas: one<HTMLCanvasElement>("#view"),
    readout: one("#readout"),
    hint: one("#hint"),
    illuminant: one("#illuminant"),
    commit: one<HTMLButtonElement>("#commit"),
    wbToggle: one<HTMLInputElement>("#wb-toggle"),
    fit: one<HTMLButtonElement>("#fit"),
    banner: one("#banner"),
    bannerText: one("#banner-text"),
    retry: one<HTMLButtonElement>("#retry"),
    annotator: one<HTMLInputElement>("#annotator"),
  };
}

export class AnnotateApp {
  private els: Elements;
  private ctx: CanvasRenderingContext2D;
  private images: ImageListEntry[] = [];
  private index = -1;
  private record: AnnotationRecord | null = null;
  private pending: RectSelection | null = null;
  private dirty = false;
  private view: ViewTransform = { zoom: 1, panX: 0, panY: 0 };
  private bitmap: HTMLImageElement | null = null;
  private pixels: ImageData | null = null;
  private dragStart: Point | null = null;
  private panStart: { at: Point; view: ViewTransform } | null = null;
  private retryAction: (() => void) | null = null;

  constructor(
    root: HTMLElement,
    private api: ApiClient = new ApiClient(),
  ) {
    this.els = grab(root);
    const ctx = this.els.canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
    this.bind();
    void this.loadList();
  }

  private bind(): void {
    const { canvas, commit, wbToggle, fit, retry } = this.els;
    canvas.addEventListener("pointerdown", (e) => this.onPointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.onPointerMove(e));
    canvas.addEventListener("pointerup", (e) => this.onPointerUp(e));
    canvas.addEventListener("wheel", (e) => this.onWheel(e), { passive: false });
    commit.addEventListener("click", () => void this.commit());
    wbToggle.addEventListener("change", () => void this.reloadBitmap());
    fit.addEventListener("click", () => {
      this.fitToCanvas();
      this.draw();
    });
    retry.addEventListener("click", () => {
      this.hideBanner();
      this.retryAction?.();
    });
    window.addEventListener("keydown", (e) => {
      if (e.target instanceof HTMLInputElement) return;
      if (e.key === "ArrowRight") void this.select(this.index + 1);
      if (e.key === "ArrowLeft") void this.select(this.index - 1);
    });
    window.addEventListener("beforeunload", (e) => {
      if (this.dirty) e.preventDefault();
    });
  }

  // gallery

  private async loadList(): Promise<void> {
    try {
      this.images = await this.api.listImages();
    } catch (err) {
      this.showBanner(err, () => void this.loadList());
      return;
    }
    this.renderGallery();
    if (this.images.length && this.index < 0) void this.select(0);
  }

  private renderGallery(): void {
    const { gallery, counts } = this.els;
    gallery.textContent = "";
    if (!this.images.length) {
      const li = document.createElement("li");
      li.className = "empty";
      li.textContent = "no images";
      gallery.appendChild(li);
      counts.textContent = "0/0 annotated";
      return;
    }
    this.images.forEach((entry, i) => {
      const li = document.createElement("li");
      li.textContent = entry.image_id;
      li.className = (entry.annotated ? "done" : "todo") + (i === this.index ? " active" : "");
      const badge = document.createElement("span");
      badge.textContent = entry.annotated ? "annotated" : "todo";
      li.appendChild(badge);
      li.addEventListener("click", () => void this.select(i));
      gallery.appendChild(li);
    });
    const done = this.images.filter((e) => e.annotated).length;
    counts.textContent = `${done}/${this.images.length} annotated`;
  }

  private async select(i: number): Promise<void> {
    if (i < 0 || i >= this.images.length || i === this.index) return;
    if (this.dirty && !window.confirm("Discard the uncommitted selection?")) return;
    this.index = i;
    this.pending = null;
    this.dirty = false;
    this.record = null;
    this.els.wbToggle.checked = false;
    this.els.illuminant.textContent = "";
    this.setHint("");
    this.renderGallery();
    const id = this.images[i].image_id;
    try {
      this.record = await this.api.getAnnotation(id);
    } catch (err) {
      this.showBanner(err, () => void this.select(i));
      return;
    }
    if (this.record) this.showIlluminant(this.record);
    await this.reloadBitmap(true);
  }

  private current(): ImageListEntry | null {
    return this.index >= 0 ? this.images[this.index] : null;
  }

  // image loading and drawing

  private async reloadBitmap(refit = false): Promise<void> {
    const entry = this.current();
    if (!entry) return;
    const rect = this.pending ?? this.record?.rect ?? null;
    const wb = this.els.wbToggle.checked && rect;
    const url = wb
      ? this.api.wbPreviewUrl(entry.image_id, rect)
      : this.api.previewUrl(entry.image_id);
    const img = new Image();
    try {
      await new Promise<void>((resolve, reject) => {
        img.onload = () => resolve();
        img.onerror = () => reject(new Error(`failed to load preview for ${entry.image_id}`));
        img.src = url;
      });
    } catch (err) {
      this.showBanner(err, () => void this.reloadBitmap(refit));
      return;
    }
    this.bitmap = img;
    this.pixels = this.readPixels(img);
    if (refit) this.fitToCanvas();
    this.draw();
    this.updateReadout();
  }

  private readPixels(img: HTMLImageElement): ImageData | null {
    const off = document.createElement("canvas");
    off.width = img.naturalWidth;
    off.height = img.naturalHeight;
    const ctx = off.getContext("2d");
    if (!ctx) return null;
    ctx.drawImage(img, 0, 0);
    return ctx.getImageData(0, 0, off.width, off.height);
  }

  private fitToCanvas(): void {
    if (!this.bitmap) return;
    const { canvas } = this.els;
    this.view = fitView(
      this.bitmap.naturalWidth,
      this.bitmap.naturalHeight,
      canvas.width,
      canvas.height,
    );
  }

  private draw(): void {
    const { canvas } = this.els;
    const ctx = this.ctx;
    ctx.setTransform(1, 0, 0, 1, 0, 0);
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (!this.bitmap) return;
    ctx.imageSmoothingEnabled = this.view.zoom < 1;
    ctx.setTransform(this.view.zoom, 0, 0, this.view.zoom, this.view.panX, this.view.panY);
    ctx.drawImage(this.bitmap, 0, 0);
    ctx.setTransform(1, 0, 0, 1, 0, 0);
    const rect = this.pending ?? this.record?.rect ?? null;
    if (rect) {
      const a = imageToScreen({ x: rect.x, y: rect.y }, this.view);
      const b = imageToScreen({ x: rect.x + rect.w, y: rect.y + rect.h }, this.view);
      ctx.strokeStyle = this.pending ? "#e69500" : "#2e9e4f";
      ctx.lineWidth = 2;
      ctx.strokeRect(a.x, a.y, b.x - a.x, b.y - a.y);
    }
  }

  // selection

  private canvasPoint(e: PointerEvent): Point {
    const bounds = this.els.canvas.getBoundingClientRect();
    return { x: e.clientX - bounds.left, y: e.clientY - bounds.top };
  }

  private onPointerDown(e: PointerEvent): void {
    if (!this.bitmap) return;
    this.els.canvas.setPointerCapture(e.pointerId);
    const at = this.canvasPoint(e);
    if (e.button === 1 || e.altKey) {
      this.panStart = { at, view: this.view };
    } else if (e.button === 0) {
      this.dragStart = at;
    }
  }

  private onPointerMove(e: PointerEvent): void {
    const at = this.canvasPoint(e);
    if (this.panStart) {
      const { at: from, view } = this.panStart;
      this.view = panBy(view, at.x - from.x, at.y - from.y);
      this.draw();
      return;
    }
    if (!this.dragStart || !this.bitmap) return;
    this.pending = dragToRect(
      this.dragStart,
      at,
      this.view,
      this.bitmap.naturalWidth,
      this.bitmap.naturalHeight,
    );
    this.setHint(this.pending ? "" : `drag at least ${MIN_RECT}x${MIN_RECT} image pixels`);
    this.draw();
    this.updateReadout();
  }

  private onPointerUp(e: PointerEvent): void {
    this.els.canvas.releasePointerCapture(e.pointerId);
    this.panStart = null;
    if (!this.dragStart) return;
    this.dragStart = null;
    if (this.pending && !rectsEqual(this.pending, this.record?.rect ?? null)) {
      this.dirty = true;
    }
  }

  private onWheel(e: WheelEvent): void {
    e.preventDefault();
    const factor = e.deltaY < 0 ? 1.25 : 0.8;
    this.view = zoomAround(this.view, factor, {
      x: e.offsetX,
      y: e.offsetY,
    });
    this.draw();
  }

  private updateReadout(): void {
    const rect = this.pending ?? this.record?.rect ?? null;
    if (!rect || !this.pixels) {
      this.els.readout.textContent = "";
      return;
    }
    const { mean, maxDeviation } = patchStats(this.pixels.data, this.pixels.width, rect);
    const rgb = mean.map((v) => v.toFixed(1)).join(" ");
    this.els.readout.textContent =
      `patch ${rect.w}x${rect.h} at (${rect.x}, ${rect.y})  ` +
      `mean ${rgb}  spread ${maxDeviation.toFixed(1)}`;
  }

  // commit

  private async commit(): Promise<void> {
    const entry = this.current();
    const rect = this.pending ?? this.record?.rect ?? null;
    if (!entry || !rect) {
      this.setHint("drag a rectangle over a neutral surface first");
      return;
    }
    const annotator = this.els.annotator.value.trim() || "anonymous";
    try {
      this.record = await this.api.postAnnotation(entry.image_id, rect, annotator);
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        // validation problem: keep the rect so the annotator can adjust it
        this.setHint(err.message);
      } else {
        this.showBanner(err, () => void this.commit());
      }
      return;
    }
    this.pending = null;
    this.dirty = false;
    this.setHint("");
    this.showIlluminant(this.record);
    // flip the badge in place, no full list reload
    entry.annotated = true;
    this.renderGallery();
    this.draw();
    if (this.els.wbToggle.checked) void this.reloadBitmap();
  }

  private showIlluminant(record: AnnotationRecord): void {
    // verbatim server values: the UI does no arithmetic on the illuminant
    this.els.illuminant.textContent =
      `illuminant [${record.illuminant.join(", ")}]  v${record.version} by ${record.annotator}`;
  }

  // errors

  private showBanner(err: unknown, retry: (() => void) | null): void {
    this.retryAction = retry;
    this.els.bannerText.textContent = err instanceof Error ? err.message : String(err);
    this.els.banner.classList.add("visible");
  }

  private hideBanner(): void {
    this.els.banner.classList.remove("visible");
  }

  private setHint(text: string): void {
    this.els.hint.textContent = text;
  }
}

export function mount(root: HTMLElement, api?: ApiClient): AnnotateApp {
  return new AnnotateApp(root, api);
}
