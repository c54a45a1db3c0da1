/** Console view state: rounds, selection, camera, and uncommitted box edits.
 * Pending edits exist only for the latest round; committing clears them
 * atomically with the server's acknowledgement. */

import type { LayoutJson, RecordJson, SessionJson } from "./api.js";
import { clampCenter, clampScale, type Camera } from "./geometry.js";

export interface PendingEdit {
  center?: number[];
  scale?: number[];
}

export interface ViewState {
  sessionId: string | null;
  dialect: string;
  policy: string;
  records: RecordJson[];
  selectedRound: number;
  camera: Camera;
  selectedObject: number | null;
  pending: Map<number, PendingEdit>;
  inFlight: boolean;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    dialect: "scene3d",
    policy: "off",
    records: [],
    selectedRound: -1,
    camera: { kind: "front", azimuth: 0, elevation: 0 },
    selectedObject: null,
    pending: new Map(),
    inFlight: false,
  };
}

export function fromSession(session: SessionJson): ViewState {
  const state = initialState();
  state.sessionId = session.id;
  state.dialect = session.dialect;
  state.policy = session.policy;
  state.records = session.records;
  state.selectedRound = session.records.length - 1;
  return state;
}

export function latestRound(state: ViewState): number {
  return state.records.length - 1;
}

/** Only the newest round is editable, and only while no request is in flight. */
export function canEdit(state: ViewState): boolean {
  return (
    state.records.length > 0 &&
    state.selectedRound === latestRound(state) &&
    !state.inFlight
  );
}

export function selectRound(state: ViewState, round: number): void {
  if (round < 0 || round >= state.records.length) return;
  if (round !== state.selectedRound) {
    state.selectedRound = round;
    state.selectedObject = null;
    state.pending.clear();
  }
}

export function appendRecord(state: ViewState, record: RecordJson): void {
  state.records.push(record);
  state.selectedRound = latestRound(state);
  state.selectedObject = null;
  state.pending.clear();
}

export function selectedLayout(state: ViewState): LayoutJson | null {
  if (state.selectedRound < 0) return null;
  return state.records[state.selectedRound].layout;
}

/** The selected round's layout with pending edits applied (numbers untouched otherwise). */
export function effectiveLayout(state: ViewState): LayoutJson | null {
  const base = selectedLayout(state);
  if (!base) return null;
  if (state.pending.size === 0 || state.selectedRound !== latestRound(state)) {
    return base;
  }
  return {
    dialect: base.dialect,
    description: base.description,
    objects: base.objects.map((obj, index) => {
      const edit = state.pending.get(index);
      if (!edit) return obj;
      return {
        description: obj.description,
        center: edit.center ?? obj.center,
        scale: edit.scale ?? obj.scale,
      };
    }),
  };
}

export function hasPendingEdits(state: ViewState): boolean {
  return state.pending.size > 0;
}

/** Translate one object; the drag clamps live to the dialect's range. */
export function dragObject(state: ViewState, index: number, delta: number[]): void {
  if (!canEdit(state)) return;
  const layout = effectiveLayout(state);
  if (!layout || index < 0 || index >= layout.objects.length) return;
  const current = layout.objects[index].center;
  const moved = current.map((v, axis) => v + (delta[axis] ?? 0));
  const edit = state.pending.get(index) ?? {};
  edit.center = clampCenter(moved, state.dialect);
  state.pending.set(index, edit);
}

/** Resize one object; scale components stop at the dialect minimum. */
export function resizeObject(state: ViewState, index: number, delta: number[]): void {
  if (!canEdit(state)) return;
  const layout = effectiveLayout(state);
  if (!layout || index < 0 || index >= layout.objects.length) return;
  const current = layout.objects[index].scale;
  const resized = current.map((v, axis) => v + (delta[axis] ?? 0));
  const edit = state.pending.get(index) ?? {};
  edit.scale = clampScale(resized, state.dialect);
  state.pending.set(index, edit);
}

export function discardPending(state: ViewState): void {
  state.pending.clear();
}
