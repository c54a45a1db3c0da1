/** DOM wiring for the console: instruction prompt, canvas editing, timeline. */

import { ApiClient } from "./api.js";
import { Controller } from "./controller.js";
import { dragToWorldDelta, pickObject, type Camera } from "./geometry.js";
import { drawScene, sceneLayout, toWorldPlane } from "./scene.js";
import {
  canEdit,
  discardPending,
  dragObject,
  effectiveLayout,
  hasPendingEdits,
  resizeObject,
  selectRound,
  type ViewState,
} from "./state.js";

const apiBase =
  new URLSearchParams(location.search).get("api") ?? "http://127.0.0.1:8321";
const api = new ApiClient(apiBase);
const controller = new Controller(api);

const el = {
  canvas: document.getElementById("scene") as HTMLCanvasElement,
  instruction: document.getElementById("instruction") as HTMLInputElement,
  send: document.getElementById("send") as HTMLButtonElement,
  newScene: document.getElementById("new-scene") as HTMLButtonElement,
  newObject: document.getElementById("new-object") as HTMLButtonElement,
  newImage: document.getElementById("new-image") as HTMLButtonElement,
  commit: document.getElementById("commit") as HTMLButtonElement,
  discard: document.getElementById("discard") as HTMLButtonElement,
  feedback: document.getElementById("feedback") as HTMLButtonElement,
  camera: document.getElementById("camera") as HTMLSelectElement,
  timeline: document.getElementById("timeline") as HTMLUListElement,
  ops: document.getElementById("ops") as HTMLUListElement,
  trail: document.getElementById("trail") as HTMLUListElement,
  status: document.getElementById("status") as HTMLSpanElement,
  serverView: document.getElementById("server-view") as HTMLImageElement,
  sessionLabel: document.getElementById("session-label") as HTMLSpanElement,
};

let drag: { object: number; resize: boolean; lastX: number; lastY: number } | null = null;

function camera(state: ViewState): Camera {
  return state.camera;
}

function redraw(state: ViewState): void {
  const ctx = el.canvas.getContext("2d")!;
  drawScene(ctx, effectiveLayout(state), camera(state), state.selectedObject, canEdit(state));

  el.instruction.disabled = state.inFlight || !state.sessionId;
  el.send.disabled = state.inFlight || !state.sessionId;
  el.commit.disabled = !canEdit(state) || !hasPendingEdits(state);
  el.discard.disabled = !hasPendingEdits(state);
  el.feedback.disabled = state.inFlight || state.records.length === 0;
  el.status.textContent = state.inFlight
    ? "round in flight..."
    : state.sessionId
      ? `session ${state.sessionId} (${state.dialect})`
      : "no session";
  el.sessionLabel.textContent = state.sessionId ?? "-";

  renderTimeline(state);
  renderRecordPanels(state);
  renderServerView(state);
  if (state.sessionId) {
    const params = new URLSearchParams(location.search);
    params.set("session", state.sessionId);
    history.replaceState(null, "", `?${params}`);
  }
}

function renderTimeline(state: ViewState): void {
  el.timeline.replaceChildren(
    ...state.records.map((record, index) => {
      const item = document.createElement("li");
      const ops = record.plan.ops.map((op) => op.kind).join(", ") || "no changes";
      item.textContent = `#${record.round_index} ${record.instruction} [${ops}]`;
      if (record.degraded) {
        const badge = document.createElement("em");
        badge.textContent = " no render";
        item.appendChild(badge);
      }
      if (record.feedback_trail.length > 0) {
        const badge = document.createElement("em");
        badge.textContent = ` feedback: ${record.feedback_trail.map((f) => f.verdict).join(" -> ")}`;
        item.appendChild(badge);
      }
      if (index === state.selectedRound) item.className = "selected";
      item.addEventListener("click", () => {
        selectRound(controller.state, index);
        redraw(controller.state);
      });
      return item;
    }),
  );
}

function renderRecordPanels(state: ViewState): void {
  const record = state.records[state.selectedRound];
  el.ops.replaceChildren(
    ...(record?.plan.ops ?? []).map((op) => {
      const item = document.createElement("li");
      item.textContent = `${op.kind}: ${op.description}`;
      return item;
    }),
  );
  el.trail.replaceChildren(
    ...(record?.feedback_trail ?? []).map((fb) => {
      const item = document.createElement("li");
      item.textContent = `${fb.verdict}: ${fb.reason.slice(0, 120)}`;
      return item;
    }),
  );
}

function renderServerView(state: ViewState): void {
  const record = state.records[state.selectedRound];
  const view = state.camera.kind === "orbit" ? "three_quarter" : state.camera.kind;
  const ref = record?.render_ref;
  if (state.sessionId && record && ref && (ref[view] || ref["front"])) {
    const name = ref[view] ? view : "front";
    el.serverView.src = api.renderUrl(state.sessionId, record.round_index, name);
    el.serverView.hidden = false;
  } else {
    el.serverView.hidden = true;
  }
}

function canvasWorldPoint(event: MouseEvent): [number, number] {
  const rect = el.canvas.getBoundingClientRect();
  const x = ((event.clientX - rect.left) / rect.width) * el.canvas.width;
  const y = ((event.clientY - rect.top) / rect.height) * el.canvas.height;
  const state = controller.state;
  const sl = sceneLayout(el.canvas, state.dialect);
  return toWorldPlane(sl, state.dialect, x, y);
}

el.canvas.addEventListener("mousedown", (event) => {
  const state = controller.state;
  const layout = effectiveLayout(state);
  if (!layout) return;
  const [u, v] = canvasWorldPoint(event);
  const is2d = state.dialect === "image2d";
  const picked = is2d
    ? pick2d(layout.objects, u, v)
    : pickObject(camera(state), layout.objects, u, v);
  state.selectedObject = picked;
  if (picked !== null && canEdit(state)) {
    drag = {
      object: picked,
      resize: event.shiftKey,
      lastX: event.clientX,
      lastY: event.clientY,
    };
  }
  redraw(state);
});

function pick2d(objects: { center: number[]; scale: number[] }[], u: number, v: number): number | null {
  let best: number | null = null;
  objects.forEach((box, index) => {
    if (
      Math.abs(u - box.center[0]) <= box.scale[0] / 2 &&
      Math.abs(v - box.center[1]) <= box.scale[1] / 2
    ) {
      best = index; // later objects draw on top
    }
  });
  return best;
}

window.addEventListener("mousemove", (event) => {
  if (!drag) return;
  const state = controller.state;
  const sl = sceneLayout(el.canvas, state.dialect);
  const rect = el.canvas.getBoundingClientRect();
  const scale = el.canvas.width / rect.width;
  const dx = (event.clientX - drag.lastX) * scale;
  const dy = (event.clientY - drag.lastY) * scale;
  drag.lastX = event.clientX;
  drag.lastY = event.clientY;
  if (state.dialect === "image2d") {
    const du = dx / sl.pxPerUnit;
    const dv = dy / sl.pxPerUnit;
    if (drag.resize) {
      resizeObject(state, drag.object, [du, dv]);
    } else {
      dragObject(state, drag.object, [du, dv]);
    }
  } else {
    const delta = dragToWorldDelta(camera(state), dx, dy, sl.pxPerUnit);
    if (drag.resize) {
      resizeObject(state, drag.object, [delta.x, delta.y, delta.z]);
    } else {
      dragObject(state, drag.object, [delta.x, delta.y, delta.z]);
    }
  }
  redraw(state);
});

window.addEventListener("mouseup", () => {
  drag = null;
});

el.send.addEventListener("click", () => {
  const text = el.instruction.value;
  void controller.submitInstruction(text).then((record) => {
    if (record) el.instruction.value = "";
  });
});
el.instruction.addEventListener("keydown", (event) => {
  if (event.key === "Enter") el.send.click();
});
el.commit.addEventListener("click", () => void controller.commitEdits());
el.discard.addEventListener("click", () => {
  discardPending(controller.state);
  redraw(controller.state);
});
el.feedback.addEventListener("click", () => void controller.runFeedback());
el.newScene.addEventListener("click", () => void controller.newSession("scene"));
el.newObject.addEventListener("click", () => void controller.newSession("object"));
el.newImage.addEventListener("click", () => void controller.newSession("image2d"));
el.camera.addEventListener("change", () => {
  const kind = el.camera.value as Camera["kind"];
  controller.state.camera =
    kind === "orbit"
      ? { kind, azimuth: Math.PI / 5, elevation: Math.PI / 8 }
      : { kind, azimuth: 0, elevation: 0 };
  redraw(controller.state);
});

controller.onChange = redraw;

const existing = new URLSearchParams(location.search).get("session");
if (existing) {
  void controller.load(existing).catch(() => redraw(controller.state));
} else {
  redraw(controller.state);
}
