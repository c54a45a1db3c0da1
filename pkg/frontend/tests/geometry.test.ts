import { describe, expect, it } from "vitest";
import {
  boundsFor,
  boxCorners,
  cameraBasis,
  clampCenter,
  clampScale,
  depth,
  dragToWorldDelta,
  pickObject,
  project,
  type Camera,
} from "../src/geometry.js";

const FRONT: Camera = { kind: "front", azimuth: 0, elevation: 0 };
const TOP: Camera = { kind: "top", azimuth: 0, elevation: 0 };

describe("cameras", () => {
  it("front view maps x,y to the screen plane", () => {
    const p = project(FRONT, { x: 0.3, y: -0.2, z: 0.9 });
    expect(p).toEqual({ u: 0.3, v: -0.2 });
    expect(depth(FRONT, { x: 0, y: 0, z: 0.9 })).toBe(0.9);
  });

  it("top view runs +z toward the bottom of the screen", () => {
    const p = project(TOP, { x: 0.3, y: 0.5, z: 0.4 });
    expect(p.u).toBe(0.3);
    expect(p.v).toBe(-0.4);
    expect(depth(TOP, { x: 0, y: 0.5, z: 0 })).toBe(0.5);
  });

  it("orbit basis stays orthonormal", () => {
    const cam: Camera = { kind: "orbit", azimuth: 0.7, elevation: 0.4 };
    const { right, up } = cameraBasis(cam);
    const dot = right.x * up.x + right.y * up.y + right.z * up.z;
    expect(Math.abs(dot)).toBeLessThan(1e-12);
    const norm = (v: { x: number; y: number; z: number }) =>
      Math.hypot(v.x, v.y, v.z);
    expect(norm(right)).toBeCloseTo(1, 12);
    expect(norm(up)).toBeCloseTo(1, 12);
  });

  it("orbit at zero angles equals the front view", () => {
    const cam: Camera = { kind: "orbit", azimuth: 0, elevation: 0 };
    const p = project(cam, { x: 0.25, y: -0.5, z: 0.1 });
    expect(p.u).toBeCloseTo(0.25, 12);
    expect(p.v).toBeCloseTo(-0.5, 12);
  });
});

describe("drag mapping", () => {
  it("front-view drags move x and y only", () => {
    const delta = dragToWorldDelta(FRONT, 50, -20, 100);
    expect(delta.x).toBeCloseTo(0.5, 12);
    expect(delta.y).toBeCloseTo(0.2, 12);
    expect(delta.z).toBe(0);
  });

  it("top-view vertical drags move z", () => {
    const delta = dragToWorldDelta(TOP, 0, 30, 100);
    expect(delta.x).toBe(0);
    expect(delta.y).toBe(0);
    expect(delta.z).toBeCloseTo(0.3, 12); // downward drag pushes toward +z
  });
});

describe("clamping", () => {
  it("3d centers clamp to [-1, 1]", () => {
    expect(clampCenter([1.4, -2, 0.5], "scene3d")).toEqual([1, -1, 0.5]);
  });

  it("2d centers clamp to [0, 1]", () => {
    expect(clampCenter([-0.2, 1.7], "image2d")).toEqual([0, 1]);
  });

  it("2d scale handles stop at 0.2", () => {
    expect(clampScale([0.05, 0.6], "image2d")).toEqual([0.2, 0.6]);
  });

  it("3d scale stays positive and at most 1", () => {
    expect(clampScale([-0.3, 2, 0.4], "scene3d")).toEqual([0.02, 1, 0.4]);
  });

  it("bounds differ per dialect", () => {
    expect(boundsFor("image2d")).toEqual({ lo: 0, hi: 1, minScale: 0.2 });
    expect(boundsFor("scene3d").lo).toBe(-1);
  });
});

describe("box corners and picking", () => {
  it("a 3d box has 8 corners spanning center +/- scale/2", () => {
    const corners = boxCorners({ description: "b", center: [0, 0.5, -0.5], scale: [0.4, 0.2, 0.6] });
    expect(corners).toHaveLength(8);
    const xs = corners.map((c) => c.x);
    expect(Math.min(...xs)).toBeCloseTo(-0.2, 12);
    expect(Math.max(...xs)).toBeCloseTo(0.2, 12);
  });

  it("picks the nearest box under the cursor in the front view", () => {
    const far = { description: "far", center: [0, 0, -0.5], scale: [0.4, 0.4, 0.2] };
    const near = { description: "near", center: [0, 0, 0.5], scale: [0.4, 0.4, 0.2] };
    expect(pickObject(FRONT, [far, near], 0, 0)).toBe(1);
    expect(pickObject(FRONT, [far, near], 0.9, 0.9)).toBeNull();
  });
});
