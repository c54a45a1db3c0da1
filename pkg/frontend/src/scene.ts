/** Canvas renderer: translucent filled boxes with wireframes, panning grid,
 * selection outline and resize handles. Geometry comes straight from the
 * layout numbers; no client-side renormalization. */

import type { LayoutJson } from "./api.js";
import {
  BOX_EDGES_2D,
  BOX_EDGES_3D,
  boxCenter,
  boxCorners,
  depth,
  project,
  type Camera,
} from "./geometry.js";
import { cssColor } from "./palette.js";

export interface SceneLayout {
  width: number;
  height: number;
  pxPerUnit: number;
  originX: number;
  originY: number;
}

export function sceneLayout(canvas: { width: number; height: number }, dialect: string): SceneLayout {
  const margin = 40;
  const span = dialect === "image2d" ? 1 : 2; // world units across the canvas
  const pxPerUnit = (Math.min(canvas.width, canvas.height) - margin * 2) / span;
  return {
    width: canvas.width,
    height: canvas.height,
    pxPerUnit,
    originX: dialect === "image2d" ? margin : canvas.width / 2,
    originY: dialect === "image2d" ? margin : canvas.height / 2,
  };
}

export function toScreen(sl: SceneLayout, dialect: string, u: number, v: number): [number, number] {
  if (dialect === "image2d") {
    // image plane: y grows downward already
    return [sl.originX + u * sl.pxPerUnit, sl.originY + v * sl.pxPerUnit];
  }
  return [sl.originX + u * sl.pxPerUnit, sl.originY - v * sl.pxPerUnit];
}

export function toWorldPlane(sl: SceneLayout, dialect: string, x: number, y: number): [number, number] {
  if (dialect === "image2d") {
    return [(x - sl.originX) / sl.pxPerUnit, (y - sl.originY) / sl.pxPerUnit];
  }
  return [(x - sl.originX) / sl.pxPerUnit, (sl.originY - y) / sl.pxPerUnit];
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  layout: LayoutJson | null,
  camera: Camera,
  selected: number | null,
  editable: boolean,
): void {
  const sl = sceneLayout(ctx.canvas, layout?.dialect ?? "scene3d");
  ctx.clearRect(0, 0, sl.width, sl.height);
  drawGrid(ctx, sl, layout?.dialect ?? "scene3d");
  if (!layout) return;

  const is2d = layout.dialect === "image2d";
  const order = layout.objects
    .map((box, index) => ({ index, d: is2d ? index : depth(camera, boxCenter(box)) }))
    .sort((a, b) => a.d - b.d || a.index - b.index);

  for (const { index } of order) {
    const box = layout.objects[index];
    const corners = boxCorners(box).map((p) => {
      const { u, v } = project(camera, p);
      return toScreen(sl, layout.dialect, is2d ? p.x : u, is2d ? p.y : v);
    });
    const xs = corners.map((c) => c[0]);
    const ys = corners.map((c) => c[1]);
    const x0 = Math.min(...xs);
    const x1 = Math.max(...xs);
    const y0 = Math.min(...ys);
    const y1 = Math.max(...ys);

    ctx.fillStyle = cssColor(box.description, 0.35);
    ctx.fillRect(x0, y0, x1 - x0, y1 - y0);

    ctx.strokeStyle = cssColor(box.description);
    ctx.lineWidth = index === selected ? 2.5 : 1.25;
    const edges = is2d ? BOX_EDGES_2D : BOX_EDGES_3D;
    ctx.beginPath();
    for (const [a, b] of edges) {
      ctx.moveTo(corners[a][0], corners[a][1]);
      ctx.lineTo(corners[b][0], corners[b][1]);
    }
    ctx.stroke();

    if (index === selected) {
      ctx.strokeStyle = "#111";
      ctx.setLineDash([4, 3]);
      ctx.strokeRect(x0 - 3, y0 - 3, x1 - x0 + 6, y1 - y0 + 6);
      ctx.setLineDash([]);
      if (editable) {
        ctx.fillStyle = "#111";
        ctx.fillRect(x1 - 4, y1 - 4, 8, 8); // resize handle
      }
    }

    ctx.fillStyle = "#222";
    ctx.font = "11px system-ui, sans-serif";
    ctx.fillText(`${index} ${box.description}`, x0 + 3, y0 - 4);
  }
}

function drawGrid(ctx: CanvasRenderingContext2D, sl: SceneLayout, dialect: string): void {
  const lo = dialect === "image2d" ? 0 : -1;
  const hi = 1;
  ctx.strokeStyle = "#e3e3e3";
  ctx.lineWidth = 1;
  for (let t = lo; t <= hi + 1e-9; t += 0.25) {
    const [xa, ya] = toScreen(sl, dialect, t, lo);
    const [xb, yb] = toScreen(sl, dialect, t, hi);
    ctx.beginPath();
    ctx.moveTo(xa, ya);
    ctx.lineTo(xb, yb);
    ctx.stroke();
    const [xc, yc] = toScreen(sl, dialect, lo, t);
    const [xd, yd] = toScreen(sl, dialect, hi, t);
    ctx.beginPath();
    ctx.moveTo(xc, yc);
    ctx.lineTo(xd, yd);
    ctx.stroke();
  }
  ctx.strokeStyle = "#999";
  const [xa, ya] = toScreen(sl, dialect, lo, lo);
  const [xb, yb] = toScreen(sl, dialect, hi, hi);
  ctx.strokeRect(Math.min(xa, xb), Math.min(ya, yb), Math.abs(xb - xa), Math.abs(yb - ya));
}
