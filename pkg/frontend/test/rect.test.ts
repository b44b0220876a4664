import { describe, expect, it } from "vitest";
import { imageToScreen } from "../src/coords";
import { MIN_RECT, dragToRect, patchStats, rectsEqual } from "../src/rect";

const plain = { zoom: 1, panX: 0, panY: 0 };

describe("drag to rectangle", () => {
  it("is independent of drag direction", () => {
    const a = { x: 5, y: 40 };
    const b = { x: 25, y: 8 };
    const forward = dragToRect(a, b, plain, 64, 64);
    const reverse = dragToRect(b, a, plain, 64, 64);
    expect(forward).toEqual({ x: 5, y: 8, w: 20, h: 32 });
    expect(rectsEqual(forward, reverse)).toBe(true);
  });

  it("maps screen extents through the zoom", () => {
    // a 20-screen-pixel drag at 2x covers exactly 10 image pixels
    const view = { zoom: 2, panX: 30, panY: -10 };
    const a = imageToScreen({ x: 4, y: 6 }, view);
    const b = { x: a.x + 20, y: a.y + 20 };
    expect(dragToRect(a, b, view, 64, 64)).toEqual({ x: 4, y: 6, w: 10, h: 10 });
  });

  it("clamps to the image bounds", () => {
    const rect = dragToRect({ x: -50, y: -50 }, { x: 500, y: 500 }, plain, 32, 24);
    expect(rect).toEqual({ x: 0, y: 0, w: 32, h: 24 });
  });

  it("snaps fractional image coordinates outward to whole pixels", () => {
    const rect = dragToRect({ x: 3.4, y: 2.9 }, { x: 9.1, y: 8.2 }, plain, 64, 64);
    expect(rect).toEqual({ x: 3, y: 2, w: 7, h: 7 });
  });

  it("rejects selections below the minimum size", () => {
    expect(dragToRect({ x: 10, y: 10 }, { x: 12, y: 30 }, plain, 64, 64)).toBeNull();
    expect(dragToRect({ x: 10, y: 10 }, { x: 10, y: 10 }, plain, 64, 64)).toBeNull();
    // big drag mostly outside: the clamped remainder is too small
    expect(dragToRect({ x: -90, y: 0 }, { x: 2, y: 50 }, plain, 64, 64)).toBeNull();
    expect(MIN_RECT).toBe(4);
  });
});

describe("patch readout", () => {
  const fill = (w: number, h: number, rgb: [number, number, number]): Uint8ClampedArray => {
    const data = new Uint8ClampedArray(w * h * 4);
    for (let i = 0; i < w * h; i++) {
      data[i * 4] = rgb[0];
      data[i * 4 + 1] = rgb[1];
      data[i * 4 + 2] = rgb[2];
      data[i * 4 + 3] = 255;
    }
    return data;
  };

  it("reports zero deviation on a neutral patch", () => {
    const data = fill(16, 16, [128, 128, 128]);
    const stats = patchStats(data, 16, { x: 2, y: 3, w: 8, h: 6 });
    expect(stats.mean).toEqual([128, 128, 128]);
    expect(stats.maxDeviation).toBe(0);
  });

  it("measures the channel spread of a tinted patch", () => {
    const data = fill(8, 8, [100, 150, 130]);
    const stats = patchStats(data, 8, { x: 0, y: 0, w: 8, h: 8 });
    expect(stats.mean).toEqual([100, 150, 130]);
    expect(stats.maxDeviation).toBe(50);
  });

  it("reads only the requested rect", () => {
    const data = fill(8, 4, [10, 10, 10]);
    // paint one column bright red outside the rect
    for (let y = 0; y < 4; y++) data[(y * 8 + 7) * 4] = 255;
    const stats = patchStats(data, 8, { x: 0, y: 0, w: 7, h: 4 });
    expect(stats.mean).toEqual([10, 10, 10]);
  });
});
