/** Orthographic camera math and the dialect clamping rules for box editing.
 * Pure functions; the canvas layer and tests share them. */

import type { BoxJson } from "./api.js";

export type CameraKind = "front" | "top" | "orbit";

export interface Camera {
  kind: CameraKind;
  azimuth: number; // radians, used by orbit
  elevation: number;
}

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

/** Screen-plane basis (right, up) for a camera; world units. */
export function cameraBasis(camera: Camera): { right: Vec3; up: Vec3 } {
  if (camera.kind === "front") {
    return { right: { x: 1, y: 0, z: 0 }, up: { x: 0, y: 1, z: 0 } };
  }
  if (camera.kind === "top") {
    // +z (front) runs toward the bottom of the screen, matching the server's top view
    return { right: { x: 1, y: 0, z: 0 }, up: { x: 0, y: 0, z: -1 } };
  }
  const az = camera.azimuth;
  const el = camera.elevation;
  const right: Vec3 = { x: Math.cos(az), y: 0, z: -Math.sin(az) };
  const dir: Vec3 = {
    x: Math.sin(az) * Math.cos(el),
    y: Math.sin(el),
    z: Math.cos(az) * Math.cos(el),
  };
  const up: Vec3 = {
    x: dir.y * right.z - dir.z * right.y,
    y: dir.z * right.x - dir.x * right.z,
    z: dir.x * right.y - dir.y * right.x,
  };
  return { right, up };
}

export function project(camera: Camera, p: Vec3): { u: number; v: number } {
  const { right, up } = cameraBasis(camera);
  return {
    u: p.x * right.x + p.y * right.y + p.z * right.z,
    v: p.x * up.x + p.y * up.y + p.z * up.z,
  };
}

/** Painter depth: larger values draw later (nearer the camera). */
export function depth(camera: Camera, p: Vec3): number {
  if (camera.kind === "front") return p.z;
  if (camera.kind === "top") return p.y;
  const az = camera.azimuth;
  const el = camera.elevation;
  return p.x * Math.sin(az) * Math.cos(el) + p.y * Math.sin(el) + p.z * Math.cos(az) * Math.cos(el);
}

export function boxCenter(box: BoxJson): Vec3 {
  const [x, y, z] = box.center.length === 3 ? box.center : [...box.center, 0];
  return { x, y, z: z ?? 0 };
}

/** The 8 (or 4) corner points of an axis-aligned box. */
export function boxCorners(box: BoxJson): Vec3[] {
  const dims = box.center.length;
  const c = boxCenter(box);
  const hx = box.scale[0] / 2;
  const hy = box.scale[1] / 2;
  if (dims === 2) {
    return [
      { x: c.x - hx, y: c.y - hy, z: 0 },
      { x: c.x + hx, y: c.y - hy, z: 0 },
      { x: c.x + hx, y: c.y + hy, z: 0 },
      { x: c.x - hx, y: c.y + hy, z: 0 },
    ];
  }
  const hz = box.scale[2] / 2;
  const out: Vec3[] = [];
  for (const sx of [-1, 1]) {
    for (const sy of [-1, 1]) {
      for (const sz of [-1, 1]) {
        out.push({ x: c.x + sx * hx, y: c.y + sy * hy, z: c.z + sz * hz });
      }
    }
  }
  return out;
}

/** Box edges as corner-index pairs for wireframe drawing. */
export const BOX_EDGES_3D: ReadonlyArray<readonly [number, number]> = [
  [0, 1], [0, 2], [0, 4], [1, 3], [1, 5], [2, 3],
  [2, 6], [3, 7], [4, 5], [4, 6], [5, 7], [6, 7],
];

export const BOX_EDGES_2D: ReadonlyArray<readonly [number, number]> = [
  [0, 1], [1, 2], [2, 3], [3, 0],
];

/** Convert a screen-pixel drag into a world-space translation in the camera plane. */
export function dragToWorldDelta(
  camera: Camera,
  duPx: number,
  dvPx: number,
  pxPerUnit: number,
): Vec3 {
  const { right, up } = cameraBasis(camera);
  const du = duPx / pxPerUnit;
  const dv = -dvPx / pxPerUnit; // screen y grows downward
  return {
    x: du * right.x + dv * up.x,
    y: du * right.y + dv * up.y,
    z: du * right.z + dv * up.z,
  };
}

export interface DialectBounds {
  lo: number;
  hi: number;
  minScale: number;
}

export function boundsFor(dialect: string): DialectBounds {
  if (dialect === "image2d") {
    return { lo: 0, hi: 1, minScale: 0.2 };
  }
  return { lo: -1, hi: 1, minScale: 0.02 };
}

const clampValue = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));

/** Clamp a dragged center to the dialect's coordinate range, per component. */
export function clampCenter(center: number[], dialect: string): number[] {
  const { lo, hi } = boundsFor(dialect);
  return center.map((v) => clampValue(v, lo, hi));
}

/** Clamp an edited scale: never below the dialect minimum, never above 1. */
export function clampScale(scale: number[], dialect: string): number[] {
  const { minScale } = boundsFor(dialect);
  return scale.map((v) => clampValue(v, minScale, 1));
}

/** Project all boxes and pick the topmost one whose screen rect contains (u, v). */
export function pickObject(
  camera: Camera,
  boxes: BoxJson[],
  u: number,
  v: number,
): number | null {
  let best: number | null = null;
  let bestDepth = -Infinity;
  boxes.forEach((box, index) => {
    const corners = boxCorners(box).map((p) => project(camera, p));
    const us = corners.map((c) => c.u);
    const vs = corners.map((c) => c.v);
    if (u >= Math.min(...us) && u <= Math.max(...us) && v >= Math.min(...vs) && v <= Math.max(...vs)) {
      const d = depth(camera, boxCenter(box));
      if (d >= bestDepth) {
        best = index;
        bestDepth = d;
      }
    }
  });
  return best;
}
