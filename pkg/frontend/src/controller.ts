/** Orchestration between the API client and the view state; DOM-free so the
 * whole interaction loop is testable. One mutation request at a time. */

import { ApiClient, type RecordJson } from "./api.js";
import {
  appendRecord,
  canEdit,
  effectiveLayout,
  fromSession,
  hasPendingEdits,
  initialState,
  type ViewState,
} from "./state.js";

export class Controller {
  state: ViewState = initialState();
  onChange: (state: ViewState) => void = () => {};

  constructor(readonly api: ApiClient) {}

  private notify(): void {
    this.onChange(this.state);
  }

  async newSession(dialect: string, policy = "off"): Promise<string> {
    const created = await this.api.createSession(dialect, policy);
    const session = await this.api.getSession(created.id);
    this.state = fromSession(session);
    this.notify();
    return created.id;
  }

  /** Reload everything from the server; the UI keeps no other source of truth. */
  async load(sessionId: string): Promise<void> {
    const session = await this.api.getSession(sessionId);
    this.state = fromSession(session);
    this.notify();
  }

  /** Submit one instruction; input stays disabled while the round runs. */
  async submitInstruction(text: string): Promise<RecordJson | null> {
    if (this.state.inFlight || !this.state.sessionId || !text.trim()) {
      return null;
    }
    this.state.inFlight = true;
    this.notify();
    try {
      const record = await this.api.postInstruction(this.state.sessionId, text);
      appendRecord(this.state, record);
      return record;
    } finally {
      this.state.inFlight = false;
      this.notify();
    }
  }

  /** Commit pending box edits as a manual adjustment round. */
  async commitEdits(): Promise<RecordJson | null> {
    if (this.state.inFlight || !this.state.sessionId) return null;
    if (!canEdit(this.state) || !hasPendingEdits(this.state)) return null;
    const layout = effectiveLayout(this.state);
    if (!layout) return null;
    this.state.inFlight = true;
    this.notify();
    try {
      const record = await this.api.putLayout(this.state.sessionId, layout);
      appendRecord(this.state, record);
      return record;
    } finally {
      this.state.inFlight = false;
      this.notify();
    }
  }

  async runFeedback(): Promise<void> {
    if (this.state.inFlight || !this.state.sessionId) return;
    this.state.inFlight = true;
    this.notify();
    try {
      const { record, changed } = await this.api.runFeedback(this.state.sessionId);
      if (changed) {
        appendRecord(this.state, record);
      } else if (this.state.records.length > 0) {
        this.state.records[this.state.records.length - 1] = record;
      }
    } finally {
      this.state.inFlight = false;
      this.notify();
    }
  }
}
