import { ChildProcess, spawn, spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { AnnotationRecord, ApiClient } from "../src/api";
import { imageToScreen, screenToImage } from "../src/coords";
import { dragToRect } from "../src/rect";

// End-to-end flow against a live annotation server. The dataset is one
// synthetic 32x32 mosaic whose marked patch has linear camera RGB mean
// (0.1, 0.2, 0.2), so the normalized ground-truth illuminant is exactly
// (1/3, 2/3, 2/3). The "drag" is scripted through the same screen->image
// mapping the canvas handlers use.

const repoRoot = resolve(__dirname, "..", "..");
const python = process.env.PYTHON ?? "python3";

let workdir: string;
let server: ChildProcess;
let base: string;
let api: ApiClient;

const IMAGE = "synth0";
const SIZE = 32;
const EXPECTED = [1 / 3, 2 / 3, 2 / 3];

async function waitForServer(client: ApiClient, timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      await client.listImages();
      return;
    } catch (err) {
      lastError = err;
      await new Promise((r) => setTimeout(r, 200));
    }
  }
  throw new Error(`annotation server did not come up: ${lastError}`);
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "nisp-ui-"));
  const dataset = join(workdir, "ds");
  const gen = spawnSync(
    python,
    ["-m", "nisp.cli", "convert", "--output", dataset, "--count", "1",
      "--height", String(SIZE), "--width", String(SIZE)],
    { cwd: repoRoot, encoding: "utf8" },
  );
  if (gen.status !== 0) {
    throw new Error(`dataset generation failed: ${gen.stderr}`);
  }
  const port = 8700 + (process.pid % 600);
  base = `http://127.0.0.1:${port}`;
  server = spawn(
    python,
    ["-m", "nisp.cli", "annotate-serve", "--dataset", dataset, "--port", String(port)],
    { cwd: repoRoot, stdio: ["ignore", "pipe", "pipe"] },
  );
  api = new ApiClient(base);
  await waitForServer(api, 30_000);
});

afterAll(() => {
  server?.kill();
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

describe("live annotation flow", () => {
  let committed: AnnotationRecord;

  it("a scripted drag commits the known illuminant", async () => {
    const listed = await api.listImages();
    expect(listed.map((e) => e.image_id)).toContain(IMAGE);

    // the generated dataset ships the patch location as its annotation
    const stored = await api.getAnnotation(IMAGE);
    expect(stored).not.toBeNull();
    const patch = stored!.rect;

    // drag corner to corner over the patch at an awkward zoom and pan
    const view = { zoom: 1.5, panX: 12.5, panY: -7.25 };
    const down = imageToScreen({ x: patch.x, y: patch.y }, view);
    const up = imageToScreen({ x: patch.x + patch.w, y: patch.y + patch.h }, view);
    const dragged = dragToRect(up, down, view, SIZE, SIZE);
    expect(dragged).toEqual(patch);

    committed = await api.postAnnotation(IMAGE, dragged!, "ui-live-test");
    expect(committed.rect).toEqual(patch);
    expect(committed.version).toBe(stored!.version + 1);
    for (let c = 0; c < 3; c++) {
      expect(Math.abs(committed.illuminant[c] - EXPECTED[c])).toBeLessThanOrEqual(1e-6);
    }
  });

  it("the record survives a page reload", async () => {
    // a reload is a fresh client refetching everything from the server
    const fresh = new ApiClient(base);
    const list = await fresh.listImages();
    expect(list.find((e) => e.image_id === IMAGE)?.annotated).toBe(true);
    const reloaded = await fresh.getAnnotation(IMAGE);
    expect(reloaded).toEqual(committed);
  });

  it("a second commit increments the version and the last rect wins", async () => {
    const other = { x: 2, y: 2, w: 6, h: 6 };
    const again = await api.postAnnotation(IMAGE, other, "ui-live-test");
    expect(again.version).toBe(committed.version + 1);
    expect(again.rect).toEqual(other);
    expect((await api.getAnnotation(IMAGE))?.rect).toEqual(other);
  });

  it("serves the white-balanced preview for the committed rect", async () => {
    const response = await fetch(api.wbPreviewUrl(IMAGE, committed.rect));
    expect(response.ok).toBe(true);
    expect(response.headers.get("content-type")).toBe("image/png");
  });

  it("coordinate mapping round-trips within 0.5 px at zooms 0.5, 1, 4", () => {
    for (const zoom of [0.5, 1, 4]) {
      const view = { zoom, panX: 31.7, panY: -44.9 };
      for (const p of [{ x: 0, y: 0 }, { x: 11.25, y: 30.99 }, { x: SIZE, y: SIZE }]) {
        const back = screenToImage(imageToScreen(p, view), view);
        expect(Math.abs(back.x - p.x)).toBeLessThan(0.5);
        expect(Math.abs(back.y - p.y)).toBeLessThan(0.5);
      }
    }
  });
});
