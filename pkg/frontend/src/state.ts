// UI state machine. Six states, every transition spelled out in one table;
// anything not in the table is rejected (the machine stays put). Component
// tests enumerate the full state x event grid against this table.

export const UI_STATES = [
  "no-session",
  "idle",
  "selecting",
  "awaiting-render",
  "interpolating",
  "error",
] as const;

export type UiState = (typeof UI_STATES)[number];

export const UI_EVENTS = [
  "sessionReady",
  "sessionFailed",
  "pointerDown",
  "pointerUp",
  "editStart",
  "editOk",
  "editFail",
  "streamStart",
  "streamOk",
  "streamFail",
  "streamClose",
  "dismissError",
  "reset",
] as const;

export type UiEvent = (typeof UI_EVENTS)[number];

export const TRANSITIONS: Record<UiState, Partial<Record<UiEvent, UiState>>> = {
  "no-session": {
    sessionReady: "idle",
    sessionFailed: "error",
  },
  idle: {
    pointerDown: "selecting",
    editStart: "awaiting-render",
    streamStart: "interpolating",
    reset: "no-session",
  },
  selecting: {
    pointerUp: "idle",
    reset: "no-session",
  },
  "awaiting-render": {
    editOk: "idle",
    editFail: "error",
    reset: "no-session",
  },
  interpolating: {
    streamOk: "interpolating", // frames arrived; stay until the user closes
    streamFail: "error",
    streamClose: "idle",
    reset: "no-session",
  },
  error: {
    dismissError: "idle",
    reset: "no-session",
  },
};

export class UiStateMachine {
  private current: UiState = "no-session";

  get state(): UiState {
    return this.current;
  }

  can(event: UiEvent): boolean {
    return TRANSITIONS[this.current][event] !== undefined;
  }

  /** Apply the event if the table allows it; returns whether it fired. */
  send(event: UiEvent): boolean {
    const next = TRANSITIONS[this.current][event];
    if (next === undefined) return false;
    this.current = next;
    return true;
  }
}
