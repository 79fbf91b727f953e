/**
 * Console view model: everything the UI renders is derived from server-sent
 * state (the console never simulates), and every operator action turns into
 * exactly one wire message tracked until its ack or error arrives.
 */

import {
  ClientMessage,
  ServerMessage,
  StateMessage,
  EventMessage,
  commandMessage,
  validateCommand,
  validateProgramBits,
} from "./protocol.js";

export type ConnectionStatus = "disconnected" | "connecting" | "connected";

export interface ComposerState {
  rateHz: number;
  payload: string;
  durationS?: number;
  busy: boolean;           // disabled until the inflight message resolves
  error: string | null;
}

const EVENT_FEED_LIMIT = 200;

export class ConsoleViewModel {
  status: ConnectionStatus = "disconnected";
  snapshot: StateMessage | null = null;
  events: EventMessage[] = [];
  composer: ComposerState = { rateHz: 200, payload: "START", busy: false, error: null };
  programError: string | null = null;
  selectedAgent: string | null = null;
  private nextId = 1;
  private inflight = new Map<number, (error: string | null) => void>();
  private send: (msg: ClientMessage) => void;

  constructor(send: (msg: ClientMessage) => void) {
    this.send = send;
  }

  onOpen(): void {
    this.status = "connected";
  }

  onClose(): void {
    this.status = "disconnected";
    this.composer.busy = false;
    this.inflight.clear();
  }

  /** Last-write-wins snapshot application; events accumulate in a feed. */
  onMessage(msg: ServerMessage): void {
    switch (msg.type) {
      case "state":
        this.snapshot = msg;
        if (this.selectedAgent &&
            !msg.agents.some((a) => a.id === this.selectedAgent)) {
          this.selectedAgent = null;
        }
        break;
      case "event":
        this.events.push(msg);
        if (this.events.length > EVENT_FEED_LIMIT) {
          this.events.splice(0, this.events.length - EVENT_FEED_LIMIT);
        }
        break;
      case "ack":
      case "error": {
        if (msg.ref !== undefined) {
          const resolve = this.inflight.get(msg.ref);
          if (resolve) {
            this.inflight.delete(msg.ref);
            resolve(msg.type === "error" ? msg.msg : null);
          }
        }
        break;
      }
    }
  }

  selectAgent(id: string | null): void {
    this.selectedAgent = id;
  }

  private dispatch(msg: ClientMessage, done: (error: string | null) => void): void {
    const id = this.nextId;
    this.nextId += 1;
    msg.id = id;
    this.inflight.set(id, done);
    this.send(msg);
  }

  /** Validates the composer and sends the light command; the composer stays
   * disabled until the server answers. Returns the validation error, if any,
   * without sending. */
  sendCommand(): string | null {
    const { rateHz, payload, durationS } = this.composer;
    const problem = validateCommand(rateHz, payload);
    if (problem) {
      this.composer.error = problem;
      return problem;
    }
    this.composer.error = null;
    this.composer.busy = true;
    this.dispatch(commandMessage(rateHz, payload, durationS, 0), (error) => {
      this.composer.busy = false;
      this.composer.error = error;
    });
    return null;
  }

  /** Uploads a 58-bit program to the selected agent. */
  sendProgram(agent: string, bits: string): string | null {
    const problem = validateProgramBits(bits);
    if (problem) {
      this.programError = problem;
      return problem;
    }
    this.programError = null;
    this.dispatch({ type: "program", agent, bits }, (error) => {
      this.programError = error;
    });
    return null;
  }

  control(action: "pause" | "resume" | "step" | "reset" | "speed",
          value?: number): void {
    const msg: ClientMessage = { type: "control", action };
    if (value !== undefined) msg.value = value;
    this.dispatch(msg, () => undefined);
  }

  pendingCount(): number {
    return this.inflight.size;
  }
}
