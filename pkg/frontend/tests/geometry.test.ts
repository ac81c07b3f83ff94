import { describe, expect, it } from "vitest";

import {
  CANVAS,
  clampPx,
  extensionCrosses,
  isSimplePolygon,
  makeTransform,
  polygonToWire,
  snapToAxis,
  toPx,
  toView,
} from "../src/geometry.js";

describe("snapToAxis", () => {
  it("snaps near-horizontal and near-vertical moves onto the axis", () => {
    expect(snapToAxis({ x: 10, y: 10 }, { x: 14, y: 80 })).toEqual({ x: 10, y: 80 });
    expect(snapToAxis({ x: 10, y: 10 }, { x: 90, y: 13 })).toEqual({ x: 90, y: 10 });
  });

  it("leaves genuinely diagonal moves alone", () => {
    expect(snapToAxis({ x: 0, y: 0 }, { x: 50, y: 60 })).toEqual({ x: 50, y: 60 });
  });
});

describe("isSimplePolygon", () => {
  const rect = [
    { x: 0, y: 0 }, { x: 100, y: 0 }, { x: 100, y: 100 }, { x: 0, y: 100 },
  ];

  it("accepts a rectangle and an L-shape", () => {
    expect(isSimplePolygon(rect)).toBe(true);
    expect(isSimplePolygon([
      { x: 0, y: 0 }, { x: 100, y: 0 }, { x: 100, y: 50 },
      { x: 50, y: 50 }, { x: 50, y: 100 }, { x: 0, y: 100 },
    ])).toBe(true);
  });

  it("rejects the bowtie", () => {
    expect(isSimplePolygon([
      { x: 0, y: 0 }, { x: 100, y: 100 }, { x: 100, y: 0 }, { x: 0, y: 100 },
    ])).toBe(false);
  });

  it("rejects degenerate inputs", () => {
    expect(isSimplePolygon([{ x: 0, y: 0 }, { x: 10, y: 0 }])).toBe(false);
    expect(isSimplePolygon([
      { x: 0, y: 0 }, { x: 0, y: 0 }, { x: 10, y: 10 },
    ])).toBe(false);
  });
});

describe("extensionCrosses", () => {
  it("detects a new corner whose edge would cross the polyline", () => {
    const open = [
      { x: 0, y: 0 }, { x: 100, y: 0 }, { x: 100, y: 100 },
    ];
    expect(extensionCrosses(open, { x: 50, y: -50 })).toBe(true);
    expect(extensionCrosses(open, { x: 0, y: 100 })).toBe(false);
  });
});

describe("view transform", () => {
  it("round-trips screen and pixel coordinates exactly", () => {
    const t = makeTransform(512);
    for (const p of [{ x: 0, y: 0 }, { x: 255, y: 255 }, { x: 37.5, y: 201.25 }]) {
      const back = toPx(t, toView(t, p));
      expect(Math.abs(back.x - p.x)).toBeLessThan(1e-9);
      expect(Math.abs(back.y - p.y)).toBeLessThan(1e-9);
    }
  });

  it("keeps canvas -> request -> canvas within one pixel", () => {
    // a click lands on arbitrary float coordinates; the wire format is
    // integers; rendering the echoed value must stay within 1 px
    const t = makeTransform(512);
    const click = toPx(t, { x: 313.7, y: 99.2 });
    const wire = polygonToWire([click])[0]!;
    expect(Math.abs(wire[0]! - click.x)).toBeLessThanOrEqual(0.5);
    expect(Math.abs(wire[1]! - click.y)).toBeLessThanOrEqual(0.5);
    const rendered = toPx(t, toView(t, { x: wire[0]!, y: wire[1]! }));
    expect(Math.abs(rendered.x - click.x)).toBeLessThanOrEqual(1.0);
    expect(Math.abs(rendered.y - click.y)).toBeLessThanOrEqual(1.0);
  });
});

describe("clampPx", () => {
  it("rounds and clamps into the 0-255 canvas", () => {
    expect(clampPx(-3)).toBe(0);
    expect(clampPx(300)).toBe(CANVAS - 1);
    expect(clampPx(41.5)).toBe(42);
  });
});
